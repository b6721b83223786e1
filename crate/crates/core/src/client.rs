//! TCP client and the line-oriented command language used by `exec` and
//! `script`.

use std::fmt::Write as _;
use std::io::{self, Read, Write};
use std::net::TcpStream;
use std::path::Path;

use thiserror::Error;

use crate::protocol::{Command, DecodeError, FrameDecoder, Magic, Reply, Status};

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("transport: {0}")]
    Io(#[from] io::Error),
    #[error("protocol: {0}")]
    Protocol(#[from] DecodeError),
    #[error("server closed the connection")]
    Closed,
    #[error("unknown status byte 0x{0:02X}")]
    UnknownStatus(u8),
}

/// Response to one command.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Response {
    pub status: Status,
    pub payload: Vec<u8>,
}

pub struct Session {
    stream: TcpStream,
    decoder: FrameDecoder,
}

impl Session {
    pub fn connect(host: &str, port: u16) -> io::Result<Self> {
        let stream = TcpStream::connect((host, port))?;
        stream.set_nodelay(true)?;
        Ok(Self {
            stream,
            decoder: FrameDecoder::new(Magic::Response),
        })
    }

    /// Sends raw bytes without waiting for anything.
    pub fn send_bytes(&mut self, bytes: &[u8]) -> io::Result<()> {
        self.stream.write_all(bytes)?;
        self.stream.flush()
    }

    /// Blocks until the next response frame arrives.
    pub fn read_response(&mut self) -> Result<Response, ClientError> {
        let mut buf = [0u8; 4096];
        loop {
            if let Some(next) = self.decoder.next_frame() {
                let frame = next?;
                let status = Status::from_byte(frame.code).ok_or(ClientError::UnknownStatus(frame.code))?;
                return Ok(Response {
                    status,
                    payload: frame.payload,
                });
            }
            let n = self.stream.read(&mut buf)?;
            if n == 0 {
                return Err(ClientError::Closed);
            }
            self.decoder.push(&buf[..n]);
        }
    }

    pub fn request(&mut self, cmd: &Command) -> Result<Response, ClientError> {
        let bytes = cmd.to_frame().encode()?;
        self.send_bytes(&bytes)?;
        self.read_response()
    }
}

/// Command names accepted by `exec` and scripts, with their opcodes and
/// arguments.
pub const COMMAND_TABLE: &[(&str, u8, &str)] = &[
    ("set-dout", 0x01, "<pin 0-3> <level 0|1>"),
    ("get-din", 0x02, "<pin 0-3>"),
    ("set-dac", 0x03, "<code 0-255>"),
    ("get-adc", 0x04, "<channel 0-3>"),
    ("capture", 0x05, "<channel> <n> <dt_us>"),
    ("set-pwg", 0x06, "<hz>"),
    ("get-cntr", 0x07, "<gate_ms>"),
    ("get-cmp", 0x08, ""),
    ("get-status", 0x09, ""),
    ("clear-fault", 0x0A, ""),
    ("load-patch", 0x0B, "<patch file>"),
    ("get-version", 0x0C, ""),
];

pub fn command_table_help() -> String {
    let mut s = String::from("Commands (name -> opcode):\n");
    for (name, op, args) in COMMAND_TABLE {
        let _ = writeln!(s, "  {name:<12} 0x{op:02X}  {args}");
    }
    s
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("{0}")]
pub struct UsageError(pub String);

fn arg<T: std::str::FromStr>(args: &[&str], i: usize, what: &str) -> Result<T, UsageError> {
    let raw = args
        .get(i)
        .ok_or_else(|| UsageError(format!("missing {what}")))?;
    raw.parse()
        .map_err(|_| UsageError(format!("invalid {what} \"{raw}\"")))
}

/// Turns `name arg...` into a command. `base` resolves relative patch paths.
pub fn parse_command(name: &str, args: &[&str], base: &Path) -> Result<Command, UsageError> {
    let expect = |n: usize| {
        if args.len() > n {
            Err(UsageError(format!("{name} takes {n} argument(s)")))
        } else {
            Ok(())
        }
    };
    let cmd = match name {
        "set-dout" => Command::SetDout {
            pin: arg(args, 0, "pin")?,
            level: arg(args, 1, "level")?,
        },
        "get-din" => Command::GetDin { pin: arg(args, 0, "pin")? },
        "set-dac" => Command::SetDac { code: arg(args, 0, "code")? },
        "get-adc" => Command::GetAdc { channel: arg(args, 0, "channel")? },
        "capture" => Command::Capture {
            channel: arg(args, 0, "channel")?,
            n: arg(args, 1, "sample count")?,
            dt_us: arg(args, 2, "interval")?,
        },
        "set-pwg" => {
            let hz: f64 = arg(args, 0, "frequency")?;
            let mhz = (hz * 1000.0).round();
            if !(0.0..=f64::from(u32::MAX)).contains(&mhz) {
                return Err(UsageError(format!("frequency {hz} Hz does not fit the wire format")));
            }
            Command::SetPwg { millihertz: mhz as u32 }
        }
        "get-cntr" => Command::GetCntr { gate_ms: arg(args, 0, "gate")? },
        "get-cmp" => Command::GetCmp,
        "get-status" => Command::GetStatus,
        "clear-fault" => Command::ClearFault,
        "load-patch" => {
            let path: String = arg(args, 0, "patch path")?;
            let text = std::fs::read_to_string(base.join(&path))
                .map_err(|e| UsageError(format!("cannot read {path}: {e}")))?;
            Command::LoadPatch { text }
        }
        "get-version" => Command::GetVersion,
        _ => return Err(UsageError(format!("unknown command \"{name}\""))),
    };
    expect(match cmd {
        Command::SetDout { .. } => 2,
        Command::Capture { .. } => 3,
        Command::GetCmp | Command::GetStatus | Command::ClearFault | Command::GetVersion => 0,
        _ => 1,
    })?;
    Ok(cmd)
}

/// One-line rendering: `STATUS key=value...`.
pub fn render_response(cmd: &Command, resp: &Response) -> String {
    let mut line = resp.status.name().to_string();
    if resp.status != Status::Ok && resp.status != Status::LintError {
        return line;
    }
    let Some(reply) = cmd.parse_reply(&resp.payload) else {
        let _ = write!(line, " payload_len={}", resp.payload.len());
        return line;
    };
    match reply {
        Reply::Empty => {}
        Reply::Level(l) => {
            let _ = write!(line, " level={l}");
        }
        Reply::Code(c) => {
            let _ = write!(line, " code={c}");
        }
        Reply::Samples(s) => {
            let codes: Vec<_> = s.iter().map(u16::to_string).collect();
            let _ = write!(line, " n={} codes={}", s.len(), codes.join(","));
        }
        Reply::Millihertz(m) => {
            let _ = write!(line, " actual_hz={}.{:03}", m / 1000, m % 1000);
        }
        Reply::Count(c) => {
            let _ = write!(line, " count={c}");
        }
        Reply::Faults(f) => {
            let _ = write!(line, " faults=0x{f:02X}");
        }
        Reply::Diagnostics(d) => {
            let _ = write!(line, " diagnostics={d}");
        }
        Reply::Version(v) => {
            let _ = write!(line, " version={v}");
        }
    }
    line
}

/// Summary of a script run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ScriptOutcome {
    pub commands: usize,
    pub failures: usize,
}

impl ScriptOutcome {
    pub fn all_ok(&self) -> bool {
        self.failures == 0
    }
}

/// Runs one command per non-blank line (`#` starts a comment), writing one
/// response line each to `out`. Non-OK responses and unparseable lines are
/// counted and skipped; a transport error stops the run.
pub fn run_script(
    session: &mut Session,
    script: &str,
    base: &Path,
    out: &mut impl Write,
) -> Result<ScriptOutcome, ClientError> {
    let mut outcome = ScriptOutcome::default();
    for line in script.lines() {
        let code = line.split('#').next().unwrap_or("");
        let words: Vec<&str> = code.split_whitespace().collect();
        let Some((name, args)) = words.split_first() else {
            continue;
        };
        outcome.commands += 1;
        match parse_command(name, args, base) {
            Ok(cmd) => {
                let resp = session.request(&cmd)?;
                if resp.status != Status::Ok {
                    outcome.failures += 1;
                }
                writeln!(out, "{}", render_response(&cmd, &resp))?;
            }
            Err(e) => {
                outcome.failures += 1;
                writeln!(out, "ERROR {e}")?;
            }
        }
    }
    Ok(outcome)
}
