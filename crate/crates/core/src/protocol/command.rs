use std::fmt;

use super::{Frame, Magic};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Opcode {
    SetDout = 0x01,
    GetDin = 0x02,
    SetDac = 0x03,
    GetAdc = 0x04,
    Capture = 0x05,
    SetPwg = 0x06,
    GetCntr = 0x07,
    GetCmp = 0x08,
    GetStatus = 0x09,
    ClearFault = 0x0A,
    LoadPatch = 0x0B,
    GetVersion = 0x0C,
}

impl Opcode {
    pub const ALL: [Opcode; 12] = [
        Opcode::SetDout,
        Opcode::GetDin,
        Opcode::SetDac,
        Opcode::GetAdc,
        Opcode::Capture,
        Opcode::SetPwg,
        Opcode::GetCntr,
        Opcode::GetCmp,
        Opcode::GetStatus,
        Opcode::ClearFault,
        Opcode::LoadPatch,
        Opcode::GetVersion,
    ];

    pub fn from_byte(b: u8) -> Option<Opcode> {
        Opcode::ALL.into_iter().find(|op| *op as u8 == b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Status {
    Ok = 0x00,
    BadOpcode = 0x01,
    BadArg = 0x02,
    FaultActive = 0x03,
    CrcError = 0x04,
    Limit = 0x05,
    LintError = 0x06,
}

impl Status {
    pub fn from_byte(b: u8) -> Option<Status> {
        use Status::*;
        [Ok, BadOpcode, BadArg, FaultActive, CrcError, Limit, LintError]
            .into_iter()
            .find(|s| *s as u8 == b)
    }

    pub fn name(self) -> &'static str {
        match self {
            Status::Ok => "OK",
            Status::BadOpcode => "BAD_OPCODE",
            Status::BadArg => "BAD_ARG",
            Status::FaultActive => "FAULT_ACTIVE",
            Status::CrcError => "CRC_ERROR",
            Status::Limit => "LIMIT",
            Status::LintError => "LINT_ERROR",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A decoded request.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Command {
    SetDout { pin: u8, level: u8 },
    GetDin { pin: u8 },
    /// Wider than the 8-bit register so out-of-range codes can reach the
    /// device and be refused there.
    SetDac { code: u16 },
    GetAdc { channel: u8 },
    Capture { channel: u8, n: u16, dt_us: u32 },
    /// Frequency in Hz × 1000.
    SetPwg { millihertz: u32 },
    GetCntr { gate_ms: u16 },
    GetCmp,
    GetStatus,
    ClearFault,
    LoadPatch { text: String },
    GetVersion,
}

fn u16_at(p: &[u8], i: usize) -> u16 {
    u16::from_le_bytes([p[i], p[i + 1]])
}

fn u32_at(p: &[u8], i: usize) -> u32 {
    u32::from_le_bytes([p[i], p[i + 1], p[i + 2], p[i + 3]])
}

impl Command {
    pub fn opcode(&self) -> Opcode {
        match self {
            Command::SetDout { .. } => Opcode::SetDout,
            Command::GetDin { .. } => Opcode::GetDin,
            Command::SetDac { .. } => Opcode::SetDac,
            Command::GetAdc { .. } => Opcode::GetAdc,
            Command::Capture { .. } => Opcode::Capture,
            Command::SetPwg { .. } => Opcode::SetPwg,
            Command::GetCntr { .. } => Opcode::GetCntr,
            Command::GetCmp => Opcode::GetCmp,
            Command::GetStatus => Opcode::GetStatus,
            Command::ClearFault => Opcode::ClearFault,
            Command::LoadPatch { .. } => Opcode::LoadPatch,
            Command::GetVersion => Opcode::GetVersion,
        }
    }

    /// Interprets a request frame. Unknown opcodes map to `BadOpcode`, payloads
    /// of the wrong shape to `BadArg`.
    pub fn from_frame(frame: &Frame) -> Result<Command, Status> {
        if frame.magic != Magic::Request {
            return Err(Status::BadOpcode);
        }
        let op = Opcode::from_byte(frame.code).ok_or(Status::BadOpcode)?;
        let p = frame.payload.as_slice();
        let want = |n: usize| if p.len() == n { Ok(()) } else { Err(Status::BadArg) };
        Ok(match op {
            Opcode::SetDout => {
                want(2)?;
                Command::SetDout { pin: p[0], level: p[1] }
            }
            Opcode::GetDin => {
                want(1)?;
                Command::GetDin { pin: p[0] }
            }
            Opcode::SetDac => match p.len() {
                1 => Command::SetDac { code: u16::from(p[0]) },
                2 => Command::SetDac { code: u16_at(p, 0) },
                _ => return Err(Status::BadArg),
            },
            Opcode::GetAdc => {
                want(1)?;
                Command::GetAdc { channel: p[0] }
            }
            Opcode::Capture => {
                want(7)?;
                Command::Capture {
                    channel: p[0],
                    n: u16_at(p, 1),
                    dt_us: u32_at(p, 3),
                }
            }
            Opcode::SetPwg => {
                want(4)?;
                Command::SetPwg { millihertz: u32_at(p, 0) }
            }
            Opcode::GetCntr => {
                want(2)?;
                Command::GetCntr { gate_ms: u16_at(p, 0) }
            }
            Opcode::GetCmp => {
                want(0)?;
                Command::GetCmp
            }
            Opcode::GetStatus => {
                want(0)?;
                Command::GetStatus
            }
            Opcode::ClearFault => {
                want(0)?;
                Command::ClearFault
            }
            Opcode::LoadPatch => Command::LoadPatch {
                text: String::from_utf8(p.to_vec()).map_err(|_| Status::BadArg)?,
            },
            Opcode::GetVersion => {
                want(0)?;
                Command::GetVersion
            }
        })
    }

    pub fn to_frame(&self) -> Frame {
        let payload = match self {
            Command::SetDout { pin, level } => vec![*pin, *level],
            Command::GetDin { pin } => vec![*pin],
            Command::SetDac { code } => match u8::try_from(*code) {
                Ok(b) => vec![b],
                Err(_) => code.to_le_bytes().to_vec(),
            },
            Command::GetAdc { channel } => vec![*channel],
            Command::Capture { channel, n, dt_us } => {
                let mut v = vec![*channel];
                v.extend_from_slice(&n.to_le_bytes());
                v.extend_from_slice(&dt_us.to_le_bytes());
                v
            }
            Command::SetPwg { millihertz } => millihertz.to_le_bytes().to_vec(),
            Command::GetCntr { gate_ms } => gate_ms.to_le_bytes().to_vec(),
            Command::GetCmp | Command::GetStatus | Command::ClearFault | Command::GetVersion => {
                Vec::new()
            }
            Command::LoadPatch { text } => text.as_bytes().to_vec(),
        };
        Frame::request(self.opcode() as u8, payload)
    }

    /// Decodes an OK response payload for this command.
    pub fn parse_reply(&self, payload: &[u8]) -> Option<Reply> {
        let p = payload;
        let reply = match self.opcode() {
            Opcode::SetDout | Opcode::SetDac | Opcode::ClearFault => {
                p.is_empty().then_some(Reply::Empty)?
            }
            Opcode::GetDin | Opcode::GetCmp => (p.len() == 1).then(|| Reply::Level(p[0]))?,
            Opcode::GetAdc => (p.len() == 2).then(|| Reply::Code(u16_at(p, 0)))?,
            Opcode::Capture => {
                if !p.len().is_multiple_of(2) {
                    return None;
                }
                Reply::Samples(p.chunks_exact(2).map(|c| u16::from_le_bytes([c[0], c[1]])).collect())
            }
            Opcode::SetPwg => (p.len() == 4).then(|| Reply::Millihertz(u32_at(p, 0)))?,
            Opcode::GetCntr => (p.len() == 4).then(|| Reply::Count(u32_at(p, 0)))?,
            Opcode::GetStatus => (p.len() == 1).then(|| Reply::Faults(p[0]))?,
            Opcode::LoadPatch => (p.len() == 2).then(|| Reply::Diagnostics(u16_at(p, 0)))?,
            Opcode::GetVersion => Reply::Version(String::from_utf8(p.to_vec()).ok()?),
        };
        Some(reply)
    }
}

/// Decoded payload of a response.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Reply {
    Empty,
    Level(u8),
    Code(u16),
    Samples(Vec<u16>),
    Millihertz(u32),
    Count(u32),
    Faults(u8),
    Diagnostics(u16),
    Version(String),
}

impl Reply {
    pub fn to_payload(&self) -> Vec<u8> {
        match self {
            Reply::Empty => Vec::new(),
            Reply::Level(l) => vec![*l],
            Reply::Code(c) => c.to_le_bytes().to_vec(),
            Reply::Samples(s) => s.iter().flat_map(|c| c.to_le_bytes()).collect(),
            Reply::Millihertz(m) => m.to_le_bytes().to_vec(),
            Reply::Count(c) => c.to_le_bytes().to_vec(),
            Reply::Faults(f) => vec![*f],
            Reply::Diagnostics(d) => d.to_le_bytes().to_vec(),
            Reply::Version(v) => v.as_bytes().to_vec(),
        }
    }
}
