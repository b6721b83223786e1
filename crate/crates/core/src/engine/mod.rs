//! Discrete-time simulation of a wired panel.

mod graph;
mod sim;

use std::collections::VecDeque;

use bitflags::bitflags;
use thiserror::Error;

pub use graph::SignalGraph;
pub use sim::{CaptureBuffer, CounterReading, SimConfig, Simulator, SupplyAudit};

use crate::netlist::{AmpId, Diagnostic, SocketId};
use crate::panel::{Hertz, PanelError};

/// PWG master clock.
pub const F_CLK: Hertz = 8_000_000.0;
pub const PWG_DIVIDER_MIN: u32 = 40;
pub const PWG_DIVIDER_MAX: u32 = 4_000_000;
pub const PWG_FREQ_MIN: Hertz = 1.0;
pub const PWG_FREQ_MAX: Hertz = 100_000.0;
pub const CAPTURE_MAX_SAMPLES: usize = 2000;
pub const CAPTURE_MIN_DT_US: u32 = 4;
pub const GATE_MS_MAX: u32 = 60_000;
/// Delay between commanding D0 and the level appearing on the socket.
pub const D0_LATENCY_S: f64 = 1.0e-3;
pub const DEFAULT_DT_S: f64 = 1.0e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("feedback cycle through {}", join(.0))]
    CycleDetected(Vec<SocketId>),
    #[error("netlist has {} lint error(s)", .0.len())]
    LintErrorsPresent(Vec<Diagnostic>),
    #[error("{0} and {1} drive the same net")]
    Contention(SocketId, SocketId),
    #[error("PWG frequency {0} Hz outside 1..=100000 Hz")]
    FreqOutOfRange(Hertz),
    #[error("bad capture arguments: {0}")]
    BadCaptureArgs(&'static str),
    #[error("counter gate {0} ms outside 1..=60000 ms")]
    BadGate(u32),
    #[error("CNTR input went below the clamp threshold during the gate")]
    NegativeSignalAtCounter,
    #[error("{0}'s input is driven by {1}, not grounded")]
    InputNotGrounded(AmpId, SocketId),
    #[error("{0} is missing an inserted resistor and runs open loop")]
    AmplifierOpenLoop(AmpId),
    #[error("time step {0} s does not divide the PWG clock and 1 µs evenly")]
    BadTimeStep(f64),
    #[error(transparent)]
    Panel(#[from] PanelError),
}

fn join(sockets: &[SocketId]) -> String {
    sockets
        .iter()
        .map(|s| s.name())
        .collect::<Vec<_>>()
        .join(" -> ")
}

bitflags! {
    /// Latched device faults, as reported by GET_STATUS.
    #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
    pub struct FaultSet: u8 {
        const SUPPLY_OVERLOAD = 0x01;
        const OVERCURRENT = 0x02;
        const NEGATIVE_SIGNAL_AT_COUNTER = 0x04;
    }
}

/// Simulated time as an integer tick count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimClock {
    tick: u64,
    dt: f64,
}

impl Default for SimClock {
    fn default() -> Self {
        Self {
            tick: 0,
            dt: DEFAULT_DT_S,
        }
    }
}

impl SimClock {
    /// `dt` must split both 1 µs and one PWG clock period into whole ticks.
    pub fn new(dt: f64) -> Result<Self, EngineError> {
        let per_us = 1e-6 / dt;
        let clocks = F_CLK * dt;
        let whole = |x: f64| x.is_finite() && x >= 1.0 && (x - x.round()).abs() < 1e-9;
        if !(dt > 0.0 && whole(per_us) && whole(clocks)) {
            return Err(EngineError::BadTimeStep(dt));
        }
        Ok(Self { tick: 0, dt })
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Current simulated time in seconds.
    pub fn t(&self) -> f64 {
        self.tick as f64 * self.dt
    }

    pub fn ticks_per_us(&self) -> u64 {
        (1e-6 / self.dt).round() as u64
    }

    pub fn ticks_for(&self, seconds: f64) -> u64 {
        (seconds / self.dt).round() as u64
    }

    pub(crate) fn clocks_per_tick(&self) -> u64 {
        (F_CLK * self.dt).round() as u64
    }

    pub(crate) fn advance(&mut self, ticks: u64) {
        self.tick += ticks;
    }

    pub(crate) fn advance_to(&mut self, tick: u64) {
        self.tick = self.tick.max(tick);
    }
}

/// Square-wave generator state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PwgState {
    pub divider: u32,
    /// Tick at which the current waveform started, high phase first.
    pub start_tick: u64,
}

impl PwgState {
    /// Divider for a requested frequency, clamped into the hardware range.
    pub fn divider_for(f_req: Hertz) -> Result<u32, EngineError> {
        if !(PWG_FREQ_MIN..=PWG_FREQ_MAX).contains(&f_req) {
            return Err(EngineError::FreqOutOfRange(f_req));
        }
        let n = (F_CLK / (2.0 * f_req)).round();
        Ok((n as u32).clamp(PWG_DIVIDER_MIN, PWG_DIVIDER_MAX))
    }

    pub fn frequency(&self) -> Hertz {
        F_CLK / (2.0 * f64::from(self.divider))
    }

    /// Output is high for the first N clocks of every 2N-clock period.
    pub fn is_high(&self, tick: u64, clocks_per_tick: u64) -> bool {
        let clocks = (tick - self.start_tick.min(tick)) * clocks_per_tick;
        clocks % (2 * u64::from(self.divider)) < u64::from(self.divider)
    }
}

/// Pending D0 transitions. Each takes effect a fixed latency after its command.
#[derive(Debug, Clone, PartialEq)]
pub struct D0DelayLine {
    latency_ticks: u64,
    pending: VecDeque<(bool, u64)>,
    level: bool,
}

impl D0DelayLine {
    pub fn new(latency_ticks: u64) -> Self {
        Self {
            latency_ticks,
            pending: VecDeque::new(),
            level: false,
        }
    }

    pub fn command(&mut self, level: bool, now: u64) {
        self.pending.push_back((level, now + self.latency_ticks));
    }

    /// Applies every transition due at or before `tick` and returns the level.
    pub fn settle(&mut self, tick: u64) -> bool {
        while let Some(&(level, due)) = self.pending.front() {
            if due > tick {
                break;
            }
            self.level = level;
            self.pending.pop_front();
        }
        self.level
    }

    pub fn pending(&self) -> Option<(bool, u64)> {
        self.pending.front().copied()
    }
}
