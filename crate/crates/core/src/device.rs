//! The emulated instrument: command semantics, calibration and faults.

use crate::engine::{
    EngineError, FaultSet, SignalGraph, SimConfig, Simulator, CAPTURE_MAX_SAMPLES,
    CAPTURE_MIN_DT_US, GATE_MS_MAX,
};
use crate::netlist::{self, AmpId, Diagnostic, Netlist};
use crate::panel::Volts;
use crate::protocol::{Command, Frame, Reply, Status};

pub const VERSION: &str = concat!("panelsim ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DeviceConfig {
    pub seed: u64,
    pub adc_noise_sigma: Volts,
}

/// Outcome of one command.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandResult {
    pub status: Status,
    pub payload: Vec<u8>,
}

impl CommandResult {
    fn ok(reply: Reply) -> Self {
        Self {
            status: Status::Ok,
            payload: reply.to_payload(),
        }
    }

    fn err(status: Status) -> Self {
        Self {
            status,
            payload: Vec::new(),
        }
    }

    pub fn to_frame(&self) -> Frame {
        Frame::response(self.status, self.payload.clone())
    }
}

/// Why a patch was refused.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchRejected {
    pub diagnostics: Vec<Diagnostic>,
    pub build_error: Option<EngineError>,
}

pub struct Device {
    sim: Simulator,
    netlist: Netlist,
}

impl Device {
    pub fn new(config: &DeviceConfig) -> Self {
        let sim_config = SimConfig {
            seed: config.seed,
            adc_noise_sigma: config.adc_noise_sigma,
            ..SimConfig::default()
        };
        let sim = Simulator::new(SignalGraph::empty(), &sim_config).expect("default time step is valid");
        Self {
            sim,
            netlist: Netlist::new(),
        }
    }

    pub fn with_patch(config: &DeviceConfig, netlist: Netlist) -> Result<Self, PatchRejected> {
        let mut dev = Self::new(config);
        dev.load_netlist(netlist)?;
        Ok(dev)
    }

    pub fn simulator(&self) -> &Simulator {
        &self.sim
    }

    pub fn netlist(&self) -> &Netlist {
        &self.netlist
    }

    pub fn faults(&self) -> FaultSet {
        self.sim.faults()
    }

    /// Replaces the wiring if it lints clean and builds. Returns the
    /// warnings that were accepted.
    pub fn load_netlist(&mut self, netlist: Netlist) -> Result<Vec<Diagnostic>, PatchRejected> {
        let diagnostics = netlist::lint(&netlist);
        if netlist::has_errors(&diagnostics) {
            return Err(PatchRejected {
                diagnostics,
                build_error: None,
            });
        }
        match SignalGraph::build_unchecked(&netlist) {
            Ok(graph) => {
                self.sim.set_graph(graph);
                self.netlist = netlist;
                Ok(diagnostics)
            }
            Err(e) => Err(PatchRejected {
                diagnostics,
                build_error: Some(e),
            }),
        }
    }

    /// Parses, lints and loads patch text.
    pub fn load_patch(&mut self, text: &str) -> Result<Vec<Diagnostic>, PatchRejected> {
        let netlist = netlist::parse(text).map_err(|diagnostics| PatchRejected {
            diagnostics,
            build_error: None,
        })?;
        self.load_netlist(netlist)
    }

    pub fn clear_faults(&mut self) {
        self.sim.clear_faults();
    }

    /// Offset of an amplifier, read with its input grounded. Leaves the
    /// device untouched.
    pub fn calibrate_amplifier(&mut self, amp: AmpId) -> Result<Volts, EngineError> {
        self.sim.amplifier_offset(amp)
    }

    /// Decodes a request frame and executes it.
    pub fn handle_frame(&mut self, frame: &Frame) -> Frame {
        match Command::from_frame(frame) {
            Ok(cmd) => self.execute(&cmd).to_frame(),
            Err(status) => Frame::response(status, Vec::new()),
        }
    }

    /// Runs one command. Arguments are validated before any state changes.
    pub fn execute(&mut self, cmd: &Command) -> CommandResult {
        match *cmd {
            Command::SetDout { pin, level } => {
                if pin > 3 || level > 1 {
                    return CommandResult::err(Status::BadArg);
                }
                self.sim.set_dout(pin, level == 1).expect("validated");
                CommandResult::ok(Reply::Empty)
            }
            Command::SetDac { code } => match self.sim.set_dac(u32::from(code)) {
                Ok(()) => CommandResult::ok(Reply::Empty),
                Err(_) => CommandResult::err(Status::BadArg),
            },
            Command::SetPwg { millihertz } => match self.sim.set_pwg(f64::from(millihertz) / 1000.0) {
                Ok(actual) => CommandResult::ok(Reply::Millihertz((actual * 1000.0).round() as u32)),
                Err(_) => CommandResult::err(Status::Limit),
            },
            Command::GetStatus => CommandResult::ok(Reply::Faults(self.sim.faults().bits())),
            Command::ClearFault => {
                self.clear_faults();
                CommandResult::ok(Reply::Empty)
            }
            Command::LoadPatch { ref text } => match self.load_patch(text) {
                Ok(diags) => CommandResult::ok(Reply::Diagnostics(diags.len().min(usize::from(u16::MAX)) as u16)),
                Err(rejected) => {
                    let count = rejected.diagnostics.len() + usize::from(rejected.build_error.is_some());
                    CommandResult {
                        status: Status::LintError,
                        payload: Reply::Diagnostics(count.min(usize::from(u16::MAX)) as u16).to_payload(),
                    }
                }
            },
            Command::GetVersion => CommandResult::ok(Reply::Version(VERSION.to_string())),
            Command::GetDin { pin } => {
                if pin > 3 {
                    return CommandResult::err(Status::BadArg);
                }
                self.measure(|sim| Ok(Reply::Level(u8::from(sim.read_din(pin)?))))
            }
            Command::GetAdc { channel } => {
                if channel > 3 {
                    return CommandResult::err(Status::BadArg);
                }
                self.measure(|sim| Ok(Reply::Code(sim.sample_adc(channel)?)))
            }
            Command::GetCmp => self.measure(|sim| Ok(Reply::Level(u8::from(sim.read_comparator())))),
            Command::Capture { channel, n, dt_us } => {
                if channel > 3 || dt_us < CAPTURE_MIN_DT_US {
                    return CommandResult::err(Status::BadArg);
                }
                if usize::from(n) > CAPTURE_MAX_SAMPLES {
                    return CommandResult::err(Status::Limit);
                }
                self.measure(|sim| Ok(Reply::Samples(sim.capture(channel, usize::from(n), dt_us)?.samples)))
            }
            Command::GetCntr { gate_ms } => {
                if gate_ms == 0 {
                    return CommandResult::err(Status::BadArg);
                }
                if u32::from(gate_ms) > GATE_MS_MAX {
                    return CommandResult::err(Status::Limit);
                }
                self.measure(|sim| Ok(Reply::Count(sim.measure_frequency(u32::from(gate_ms))?.count)))
            }
        }
    }

    /// Measurements refuse to run while a fault is latched, and report
    /// FAULT_ACTIVE if one latches while they run.
    fn measure(&mut self, f: impl FnOnce(&mut Simulator) -> Result<Reply, EngineError>) -> CommandResult {
        if !self.sim.faults().is_empty() {
            return CommandResult::err(Status::FaultActive);
        }
        let result = f(&mut self.sim);
        if !self.sim.faults().is_empty() {
            return CommandResult::err(Status::FaultActive);
        }
        match result {
            Ok(reply) => CommandResult::ok(reply),
            Err(_) => CommandResult::err(Status::BadArg),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::SocketId;
    use crate::panel::CalibrationSet;

    fn device(patch: &str) -> Device {
        let mut d = Device::new(&DeviceConfig { seed: 42, ..Default::default() });
        d.load_patch(patch).unwrap();
        d
    }

    fn run(d: &mut Device, cmd: Command) -> CommandResult {
        d.execute(&cmd)
    }

    #[test]
    fn d0_reaches_its_level_a_millisecond_later() {
        let mut d = device("connect DOUT0 ADC0");
        assert_eq!(run(&mut d, Command::SetDout { pin: 0, level: 1 }).status, Status::Ok);
        let r = run(&mut d, Command::Capture { channel: 0, n: 300, dt_us: 4 });
        let samples = Command::Capture { channel: 0, n: 300, dt_us: 4 }
            .parse_reply(&r.payload)
            .unwrap();
        let Reply::Samples(s) = samples else { panic!() };
        assert!(s[..250].iter().all(|&c| c == 0));
        assert!(s[250..].iter().all(|&c| c == 935));
    }

    #[test]
    fn ccs_into_adc() {
        let mut d = device("connect CCS ADC2\nresistor 1k CCS GND");
        let r = run(&mut d, Command::GetAdc { channel: 2 });
        assert_eq!(r.payload, 205u16.to_le_bytes());
    }

    #[test]
    fn bad_arguments() {
        let mut d = device("");
        assert_eq!(run(&mut d, Command::SetDac { code: 300 }).status, Status::BadArg);
        assert_eq!(run(&mut d, Command::SetDout { pin: 4, level: 1 }).status, Status::BadArg);
        assert_eq!(run(&mut d, Command::SetDout { pin: 1, level: 2 }).status, Status::BadArg);
        assert_eq!(run(&mut d, Command::GetAdc { channel: 9 }).status, Status::BadArg);
        assert_eq!(run(&mut d, Command::GetDin { pin: 4 }).status, Status::BadArg);
        assert_eq!(
            run(&mut d, Command::Capture { channel: 0, n: 5000, dt_us: 4 }).status,
            Status::Limit
        );
        assert_eq!(
            run(&mut d, Command::Capture { channel: 0, n: 5, dt_us: 3 }).status,
            Status::BadArg
        );
        assert_eq!(run(&mut d, Command::SetPwg { millihertz: 150_000_000 }).status, Status::Limit);
        assert_eq!(run(&mut d, Command::GetCntr { gate_ms: 0 }).status, Status::BadArg);
        assert_eq!(run(&mut d, Command::GetCntr { gate_ms: 60_001 }).status, Status::Limit);
        // nothing above changed the clock
        assert_eq!(d.simulator().clock().tick(), 0);
    }

    #[test]
    fn set_pwg_reports_actual_frequency() {
        let mut d = device("");
        let r = run(&mut d, Command::SetPwg { millihertz: 1_000_000 });
        assert_eq!(r.payload, 1_000_000u32.to_le_bytes());
        let r = run(&mut d, Command::SetPwg { millihertz: 300_000 });
        assert_eq!(r.payload, 300_008u32.to_le_bytes());
    }

    #[test]
    fn supply_fault_lifecycle() {
        let mut d = device("resistor 80 V5 GND\nresistor 80 V5 GND\nconnect V5 ADC0");
        assert_eq!(run(&mut d, Command::GetStatus).payload, vec![0x01]);
        assert_eq!(run(&mut d, Command::GetAdc { channel: 0 }).status, Status::FaultActive);
        // writes still go through
        assert_eq!(run(&mut d, Command::SetDac { code: 3 }).status, Status::Ok);
        // load still present: re-latched immediately
        run(&mut d, Command::ClearFault);
        assert_eq!(run(&mut d, Command::GetStatus).payload, vec![0x01]);

        let r = run(&mut d, Command::LoadPatch { text: "resistor 80 V5 GND\nconnect V5 ADC0".into() });
        assert_eq!(r.status, Status::Ok);
        // still latched until cleared
        assert_eq!(run(&mut d, Command::GetStatus).payload, vec![0x01]);
        assert_eq!(run(&mut d, Command::ClearFault).status, Status::Ok);
        assert_eq!(run(&mut d, Command::GetStatus).payload, vec![0x00]);
        assert_eq!(run(&mut d, Command::GetAdc { channel: 0 }).payload, 1023u16.to_le_bytes());
        // clearing with no faults is a no-op
        assert_eq!(run(&mut d, Command::ClearFault).status, Status::Ok);
    }

    #[test]
    fn load_patch_statuses() {
        let mut d = device("connect DAC ADC0");
        let r = run(&mut d, Command::LoadPatch { text: "connect PWG BOGUS".into() });
        assert_eq!((r.status, r.payload), (Status::LintError, vec![1, 0]));
        let r = run(&mut d, Command::LoadPatch { text: "connect DAC PWG".into() });
        assert_eq!(r.status, Status::LintError);
        let r = run(
            &mut d,
            Command::LoadPatch { text: "insert INV1.RIN 1k\ninsert INV1.RF 1k\nconnect INV1.OUT INV1.IN".into() },
        );
        assert_eq!((r.status, r.payload), (Status::LintError, vec![1, 0]));
        // rejected patches leave the old wiring in place
        assert_eq!(d.netlist().connections()[0].to, SocketId::Adc0);
        let r = run(&mut d, Command::LoadPatch { text: "connect CCS ADC1".into() });
        assert_eq!((r.status, r.payload), (Status::Ok, vec![1, 0]));
    }

    #[test]
    fn calibration_matches_seed() {
        let mut d = device("insert INV1.RIN 1k\ninsert INV1.RF 10k\ninsert INV2.RIN 1k\ninsert INV2.RF 1k");
        let cal = CalibrationSet::from_seed(42, 0.010);
        let a = d.calibrate_amplifier(AmpId::Inv1).unwrap();
        assert_eq!(a, cal.invamp1_offset);
        assert!(a.abs() <= 0.010);
        assert_eq!(d.calibrate_amplifier(AmpId::Inv1).unwrap(), a);
        assert_eq!(d.calibrate_amplifier(AmpId::Inv2).unwrap(), cal.invamp2_offset);
        let mut d = device("insert INV1.RIN 1k\ninsert INV1.RF 10k\nconnect PWG INV1.IN");
        assert!(matches!(
            d.calibrate_amplifier(AmpId::Inv1),
            Err(EngineError::InputNotGrounded(AmpId::Inv1, SocketId::Pwg))
        ));
    }

    #[test]
    fn unknown_opcode_over_frames() {
        let mut d = device("");
        let resp = d.handle_frame(&Frame::request(0x42, vec![]));
        assert_eq!(resp.code, Status::BadOpcode as u8);
        let resp = d.handle_frame(&Command::GetVersion.to_frame());
        assert_eq!(resp.payload, VERSION.as_bytes());
    }
}
