//! Framed binary wire protocol.
//!
//! ```text
//! magic(1) code(1) len(2, LE) payload(len) crc8(1)
//! ```
//!
//! `magic` is 0xEB for requests and 0xEC for responses. `code` is the opcode
//! in a request and the status in a response. The CRC (poly 0x07, init 0x00,
//! no reflection) covers every byte before it.

mod command;

use thiserror::Error;

pub use command::{Command, Opcode, Reply, Status};

pub const MAX_PAYLOAD: usize = 4096;
pub const HEADER_LEN: usize = 4;
/// Header plus CRC.
pub const OVERHEAD: usize = HEADER_LEN + 1;

const fn crc8_table() -> [u8; 256] {
    let mut table = [0u8; 256];
    let mut i = 0;
    while i < 256 {
        let mut crc = i as u8;
        let mut bit = 0;
        while bit < 8 {
            crc = if crc & 0x80 != 0 { (crc << 1) ^ 0x07 } else { crc << 1 };
            bit += 1;
        }
        table[i] = crc;
        i += 1;
    }
    table
}

static CRC8_TABLE: [u8; 256] = crc8_table();

/// CRC-8 with polynomial 0x07, initial value 0, no reflection or final xor.
pub fn crc8(data: &[u8]) -> u8 {
    data.iter().fold(0, |crc, &b| CRC8_TABLE[usize::from(crc ^ b)])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Magic {
    Request = 0xEB,
    Response = 0xEC,
}

impl Magic {
    pub fn from_byte(b: u8) -> Option<Magic> {
        match b {
            0xEB => Some(Magic::Request),
            0xEC => Some(Magic::Response),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Frame {
    pub magic: Magic,
    /// Opcode for requests, status for responses.
    pub code: u8,
    pub payload: Vec<u8>,
}

impl Frame {
    pub fn request(opcode: u8, payload: Vec<u8>) -> Self {
        Frame {
            magic: Magic::Request,
            code: opcode,
            payload,
        }
    }

    pub fn response(status: Status, payload: Vec<u8>) -> Self {
        Frame {
            magic: Magic::Response,
            code: status as u8,
            payload,
        }
    }

    pub fn encode(&self) -> Result<Vec<u8>, DecodeError> {
        encode(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("byte 0x{0:02X} is not a frame magic")]
    BadMagic(u8),
    #[error("CRC mismatch: frame carries 0x{found:02X}, computed 0x{computed:02X}")]
    BadCrc { found: u8, computed: u8 },
    #[error("input ends before the frame does")]
    Truncated,
    #[error("payload of {0} bytes exceeds the 4096-byte limit")]
    PayloadTooLarge(usize),
    #[error("{0} bytes follow the frame")]
    TrailingBytes(usize),
}

pub fn encode(frame: &Frame) -> Result<Vec<u8>, DecodeError> {
    let len = frame.payload.len();
    if len > MAX_PAYLOAD {
        return Err(DecodeError::PayloadTooLarge(len));
    }
    let mut out = Vec::with_capacity(OVERHEAD + len);
    out.push(frame.magic as u8);
    out.push(frame.code);
    out.extend_from_slice(&(len as u16).to_le_bytes());
    out.extend_from_slice(&frame.payload);
    out.push(crc8(&out));
    Ok(out)
}

/// Decodes the frame at the start of `bytes`, returning it with the number
/// of bytes it occupied.
pub fn decode_prefix(bytes: &[u8]) -> Result<(Frame, usize), DecodeError> {
    let &first = bytes.first().ok_or(DecodeError::Truncated)?;
    let magic = Magic::from_byte(first).ok_or(DecodeError::BadMagic(first))?;
    if bytes.len() < HEADER_LEN {
        return Err(DecodeError::Truncated);
    }
    let len = usize::from(u16::from_le_bytes([bytes[2], bytes[3]]));
    if len > MAX_PAYLOAD {
        return Err(DecodeError::PayloadTooLarge(len));
    }
    let total = OVERHEAD + len;
    if bytes.len() < total {
        return Err(DecodeError::Truncated);
    }
    let computed = crc8(&bytes[..total - 1]);
    let found = bytes[total - 1];
    if computed != found {
        return Err(DecodeError::BadCrc { found, computed });
    }
    Ok((
        Frame {
            magic,
            code: bytes[1],
            payload: bytes[HEADER_LEN..total - 1].to_vec(),
        },
        total,
    ))
}

/// Decodes a buffer holding exactly one frame.
pub fn decode(bytes: &[u8]) -> Result<Frame, DecodeError> {
    let (frame, used) = decode_prefix(bytes)?;
    if used != bytes.len() {
        return Err(DecodeError::TrailingBytes(bytes.len() - used));
    }
    Ok(frame)
}

/// Incremental decoder for a byte stream. Garbage between frames is skipped
/// by scanning for the expected magic byte.
#[derive(Debug)]
pub struct FrameDecoder {
    expect: Magic,
    buf: Vec<u8>,
    skipped: usize,
}

impl FrameDecoder {
    pub fn new(expect: Magic) -> Self {
        Self {
            expect,
            buf: Vec::new(),
            skipped: 0,
        }
    }

    pub fn push(&mut self, bytes: &[u8]) {
        self.buf.extend_from_slice(bytes);
    }

    /// Bytes discarded while hunting for a magic byte.
    pub fn skipped(&self) -> usize {
        self.skipped
    }

    pub fn buffered(&self) -> usize {
        self.buf.len()
    }

    /// Next complete frame or framing error; `None` when more input is needed.
    /// The buffer never holds more than one maximal frame of pending data.
    pub fn next_frame(&mut self) -> Option<Result<Frame, DecodeError>> {
        let start = self
            .buf
            .iter()
            .position(|&b| b == self.expect as u8)
            .unwrap_or(self.buf.len());
        if start > 0 {
            self.skipped += start;
            self.buf.drain(..start);
        }
        match decode_prefix(&self.buf) {
            Ok((frame, used)) => {
                self.buf.drain(..used);
                Some(Ok(frame))
            }
            Err(DecodeError::Truncated) => None,
            Err(e @ DecodeError::PayloadTooLarge(_)) => {
                self.buf.drain(..1);
                Some(Err(e))
            }
            Err(e @ DecodeError::BadCrc { .. }) => {
                let len = usize::from(u16::from_le_bytes([self.buf[2], self.buf[3]]));
                self.buf.drain(..OVERHEAD + len);
                Some(Err(e))
            }
            Err(e) => {
                self.buf.drain(..1);
                Some(Err(e))
            }
        }
    }
}
