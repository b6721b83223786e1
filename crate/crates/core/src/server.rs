//! Serves one [`Device`] over TCP, one session at a time.

use std::io::{self, ErrorKind, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::thread;
use std::time::Duration;

use crate::device::Device;
use crate::protocol::{DecodeError, Frame, FrameDecoder, Magic, Status};

const POLL: Duration = Duration::from_millis(20);

pub struct Server {
    listener: TcpListener,
    device: Device,
    pace: bool,
}

impl Server {
    pub fn bind(addr: impl ToSocketAddrs, device: Device, pace: bool) -> io::Result<Self> {
        let listener = TcpListener::bind(addr)?;
        listener.set_nonblocking(true)?;
        Ok(Self {
            listener,
            device,
            pace,
        })
    }

    pub fn local_addr(&self) -> io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    pub fn device(&self) -> &Device {
        &self.device
    }

    /// Accepts sessions until `shutdown` is raised. Connections that arrive
    /// while a session is active wait in the listen backlog. A command in
    /// flight when shutdown is requested completes and its response is
    /// flushed first.
    pub fn run(&mut self, shutdown: &AtomicBool) -> io::Result<()> {
        while !shutdown.load(Ordering::SeqCst) {
            match self.listener.accept() {
                Ok((stream, _)) => {
                    // Transport errors end the session only; device state persists.
                    let _ = self.session(stream, shutdown);
                }
                Err(e) if e.kind() == ErrorKind::WouldBlock => thread::sleep(POLL),
                Err(e) if e.kind() == ErrorKind::Interrupted => {}
                Err(e) => return Err(e),
            }
        }
        Ok(())
    }

    fn session(&mut self, mut stream: TcpStream, shutdown: &AtomicBool) -> io::Result<()> {
        stream.set_nonblocking(false)?;
        stream.set_read_timeout(Some(POLL))?;
        stream.set_nodelay(true)?;
        let mut decoder = FrameDecoder::new(Magic::Request);
        let mut buf = [0u8; 4096];
        loop {
            while let Some(next) = decoder.next_frame() {
                let response = match next {
                    Ok(frame) => self.execute(&frame),
                    Err(DecodeError::PayloadTooLarge(_)) => Frame::response(Status::Limit, Vec::new()),
                    Err(_) => Frame::response(Status::CrcError, Vec::new()),
                };
                stream.write_all(&response.encode().expect("responses fit in a frame"))?;
                stream.flush()?;
                if shutdown.load(Ordering::SeqCst) {
                    return Ok(());
                }
            }
            if shutdown.load(Ordering::SeqCst) {
                return Ok(());
            }
            match stream.read(&mut buf) {
                Ok(0) => return Ok(()),
                Ok(n) => decoder.push(&buf[..n]),
                Err(e) if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut | ErrorKind::Interrupted) => {}
                Err(e) => return Err(e),
            }
        }
    }

    fn execute(&mut self, frame: &Frame) -> Frame {
        let before = self.device.simulator().clock().t();
        let response = self.device.handle_frame(frame);
        if self.pace {
            let elapsed = self.device.simulator().clock().t() - before;
            if elapsed > 0.0 {
                thread::sleep(Duration::from_secs_f64(elapsed));
            }
        }
        response
    }
}
