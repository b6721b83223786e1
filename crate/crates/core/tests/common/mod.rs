#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::{self, JoinHandle};

use panelsim::client::{self, Session};
use panelsim::device::{Device, DeviceConfig};
use panelsim::server::Server;

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn fixture(name: &str) -> String {
    std::fs::read_to_string(fixtures().join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// Parses `<name> <hex>` / `<hex> <hex>` lines, skipping comments.
pub fn hex_lines(name: &str) -> Vec<(String, Vec<u8>)> {
    fixture(name)
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| {
            let (a, b) = l.split_once(' ').unwrap();
            (a.to_string(), unhex(b.trim()))
        })
        .collect()
}

pub fn unhex(s: &str) -> Vec<u8> {
    if s == "-" {
        return Vec::new();
    }
    (0..s.len())
        .step_by(2)
        .map(|i| u8::from_str_radix(&s[i..i + 2], 16).unwrap())
        .collect()
}

pub struct Running {
    pub port: u16,
    pub shutdown: Arc<AtomicBool>,
    handle: JoinHandle<std::io::Result<()>>,
}

impl Running {
    pub fn connect(&self) -> Session {
        Session::connect("127.0.0.1", self.port).unwrap()
    }

    pub fn stop(self) {
        self.shutdown.store(true, Ordering::SeqCst);
        self.handle.join().unwrap().unwrap();
    }
}

pub fn serve(seed: u64, patch: Option<&str>) -> Running {
    serve_with(seed, patch, false)
}

pub fn serve_with(seed: u64, patch: Option<&str>, pace: bool) -> Running {
    let config = DeviceConfig {
        seed,
        ..DeviceConfig::default()
    };
    let mut device = Device::new(&config);
    if let Some(p) = patch {
        device.load_patch(p).expect("patch loads");
    }
    let mut server = Server::bind("127.0.0.1:0", device, pace).unwrap();
    let port = server.local_addr().unwrap().port();
    let shutdown = Arc::new(AtomicBool::new(false));
    let flag = Arc::clone(&shutdown);
    let handle = thread::spawn(move || server.run(&flag));
    Running {
        port,
        shutdown,
        handle,
    }
}

/// Runs the bench script against a fresh seed-42 bench server.
pub fn bench_transcript() -> String {
    let server = serve(42, Some(&fixture("bench.patch")));
    let mut session = server.connect();
    let mut out = Vec::new();
    client::run_script(&mut session, &fixture("bench.script"), &fixtures(), &mut out).unwrap();
    drop(session);
    server.stop();
    String::from_utf8(out).unwrap()
}
