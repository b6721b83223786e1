use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{
    D0DelayLine, EngineError, FaultSet, PwgState, SignalGraph, SimClock, CAPTURE_MAX_SAMPLES,
    CAPTURE_MIN_DT_US, D0_LATENCY_S, GATE_MS_MAX,
};
use crate::netlist::{AmpId, AmpParam, SocketId};
use crate::panel::{Amps, CalibrationSet, CcsReading, Hertz, PanelConstants, Volts};

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub seed: u64,
    /// Standard deviation of Gaussian noise added before ADC conversion.
    pub adc_noise_sigma: Volts,
    pub dt: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            adc_noise_sigma: 0.0,
            dt: super::DEFAULT_DT_S,
        }
    }
}

/// Block of ADC codes taken at a fixed interval.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaptureBuffer {
    pub channel: u8,
    pub dt_us: u32,
    pub samples: Vec<u16>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CounterReading {
    pub count: u32,
    pub gate_ms: u32,
}

impl CounterReading {
    pub fn hertz(&self) -> Hertz {
        f64::from(self.count) / (f64::from(self.gate_ms) * 1e-3)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupplyAudit {
    pub amps: Amps,
    pub overload: bool,
}

/// A wired panel plus the register and timing state that drives it.
///
/// Single owner: one caller steps it at a time.
#[derive(Debug, Clone)]
pub struct Simulator {
    pc: PanelConstants,
    cal: CalibrationSet,
    graph: SignalGraph,
    clock: SimClock,
    dac_code: u8,
    dout: [bool; 4],
    d0: D0DelayLine,
    pwg: Option<PwgState>,
    din_state: [bool; 4],
    values: Vec<Volts>,
    last_eval_tick: u64,
    faults: FaultSet,
    supply_overload: bool,
    noise: Option<(Normal<f64>, ChaCha8Rng)>,
}

impl Simulator {
    pub fn new(graph: SignalGraph, config: &SimConfig) -> Result<Self, EngineError> {
        let pc = PanelConstants::default();
        let cal = CalibrationSet::from_seed(config.seed, pc.max_offset);
        Self::with_calibration(graph, config, pc, cal)
    }

    pub fn with_calibration(
        graph: SignalGraph,
        config: &SimConfig,
        pc: PanelConstants,
        cal: CalibrationSet,
    ) -> Result<Self, EngineError> {
        let clock = SimClock::new(config.dt)?;
        let noise = (config.adc_noise_sigma > 0.0).then(|| {
            (
                Normal::new(0.0, config.adc_noise_sigma).expect("positive sigma"),
                // Separate stream from the calibration draw.
                ChaCha8Rng::seed_from_u64(config.seed ^ 0x9e37_79b9_7f4a_7c15),
            )
        });
        let mut sim = Simulator {
            pc,
            cal,
            values: vec![0.0; graph.node_count()],
            graph,
            d0: D0DelayLine::new(clock.ticks_for(D0_LATENCY_S)),
            clock,
            dac_code: 0,
            dout: [false; 4],
            pwg: None,
            din_state: [false; 4],
            last_eval_tick: 0,
            faults: FaultSet::empty(),
            supply_overload: false,
            noise,
        };
        sim.supply_audit();
        Ok(sim)
    }

    /// Swaps in a new wiring. Registers, clock and latched faults persist.
    pub fn set_graph(&mut self, graph: SignalGraph) {
        self.values = vec![0.0; graph.node_count()];
        self.graph = graph;
        self.supply_audit();
    }

    pub fn graph(&self) -> &SignalGraph {
        &self.graph
    }

    pub fn constants(&self) -> &PanelConstants {
        &self.pc
    }

    pub fn calibration(&self) -> &CalibrationSet {
        &self.cal
    }

    pub fn clock(&self) -> &SimClock {
        &self.clock
    }

    pub fn faults(&self) -> FaultSet {
        self.faults
    }

    /// Empties the fault latch, then re-runs the supply audit.
    pub fn clear_faults(&mut self) {
        self.faults = FaultSet::empty();
        self.supply_audit();
    }

    /// Sums the estimated current of every declared 5V OUT load. Over budget
    /// latches SupplyOverload and pulls the rail to 0 V.
    pub fn supply_audit(&mut self) -> SupplyAudit {
        let amps: Amps = self
            .graph
            .v5_loads
            .iter()
            .map(|r| self.pc.v_supply / r)
            .sum();
        let overload = amps > self.pc.i_supply_max;
        self.supply_overload = overload;
        if overload {
            self.faults |= FaultSet::SUPPLY_OVERLOAD;
        }
        SupplyAudit { amps, overload }
    }

    pub fn dac_code(&self) -> u8 {
        self.dac_code
    }

    pub fn set_dac(&mut self, code: u32) -> Result<(), EngineError> {
        self.pc.dac_output(code)?;
        self.dac_code = code as u8;
        Ok(())
    }

    pub fn dout(&self) -> [bool; 4] {
        self.dout
    }

    /// D1..D3 change on the next step; D0 changes one latency later.
    pub fn set_dout(&mut self, pin: u8, level: bool) -> Result<(), EngineError> {
        self.pc.digital_out_level(pin, level)?;
        self.dout[usize::from(pin)] = level;
        if pin == 0 {
            self.d0.command(level, self.clock.tick());
        }
        Ok(())
    }

    pub fn pwg(&self) -> Option<PwgState> {
        self.pwg
    }

    /// Programs the square-wave generator and restarts its phase. Returns the
    /// frequency the divider actually produces.
    pub fn set_pwg(&mut self, f_req: Hertz) -> Result<Hertz, EngineError> {
        let divider = PwgState::divider_for(f_req)?;
        let state = PwgState {
            divider,
            start_tick: self.clock.tick(),
        };
        self.pwg = Some(state);
        Ok(state.frequency())
    }

    pub fn ccs_reading(&self) -> CcsReading {
        self.pc.ccs_node_voltage(self.graph.ccs_load)
    }

    fn amp_output(&self, amp: AmpId, v_in: Volts) -> Volts {
        let pc = &self.pc;
        let inv = |rin, rf, offset| {
            match (self.graph.inserted.get(&rin), self.graph.inserted.get(&rf)) {
                (Some(&r_in), Some(&r_f)) => pc.inverting_amp(v_in, r_in, r_f, offset),
                _ => pc.inverting_amp_open_loop(v_in, offset),
            }
        };
        match amp {
            AmpId::Inv1 => inv(AmpParam::Inv1Rin, AmpParam::Inv1Rf, self.cal.invamp1_offset),
            AmpId::Inv2 => inv(AmpParam::Inv2Rin, AmpParam::Inv2Rf, self.cal.invamp2_offset),
            AmpId::Noninv => pc.noninverting_amp(v_in, self.graph.gain_resistor, self.cal.noninv_offset),
            AmpId::Off1 => pc.offset_amp(v_in, self.cal.offset1_err),
            AmpId::Off2 => pc.offset_amp(v_in, self.cal.offset2_err),
        }
    }

    /// Output of a source socket at `tick`; `input` is the amplifier input
    /// for amplifier outputs.
    fn source_voltage(&mut self, socket: SocketId, tick: u64, input: Volts) -> Volts {
        use SocketId::*;
        let pc = &self.pc;
        match socket {
            Gnd => 0.0,
            V5 if self.supply_overload => 0.0,
            V5 => pc.v_supply,
            Dac => f64::from(self.dac_code) * pc.v_adc_full / f64::from(pc.dac_max_code()),
            Pwg => match self.pwg {
                Some(p) if p.is_high(tick, self.clock.clocks_per_tick()) => pc.v_adc_full,
                _ => 0.0,
            },
            Dout0 => {
                let level = self.d0.settle(tick);
                if level { pc.v_logic_d0 } else { 0.0 }
            }
            Dout1 | Dout2 | Dout3 => {
                let pin = socket as usize - Dout0 as usize;
                if self.dout[pin] { pc.v_logic_d13 } else { 0.0 }
            }
            Ccs => self.ccs_reading().volts,
            _ => match socket.amplifier() {
                Some(amp) => self.amp_output(amp, input),
                None => 0.0,
            },
        }
    }

    /// Evaluates every node once in order at the current time, then advances
    /// the clock by one tick. Returns node voltages in graph order.
    pub fn step(&mut self) -> &[Volts] {
        let tick = self.clock.tick();
        for i in 0..self.graph.nodes.len() {
            let node = &self.graph.nodes[i];
            let socket = node.socket;
            let input = node.input;
            let v = if socket.is_sink() {
                match input {
                    Some(inp) => {
                        let v_src = self.values[inp.node];
                        if socket.is_din() {
                            if self.pc.clamp_current(v_src, inp.series).overcurrent {
                                self.faults |= FaultSet::OVERCURRENT;
                            }
                            self.pc.clamped_pin_voltage(v_src)
                        } else {
                            v_src
                        }
                    }
                    None => 0.0,
                }
            } else {
                let v_in = input.map_or(0.0, |inp| self.values[inp.node]);
                self.source_voltage(socket, tick, v_in)
            };
            self.values[i] = v;
        }
        for pin in 0..4u8 {
            let socket = SocketId::din(pin).unwrap();
            let v = self.node_value(socket).unwrap_or(0.0);
            let prev = self.din_state[usize::from(pin)];
            self.din_state[usize::from(pin)] = self.pc.digital_in_read(v, prev);
        }
        self.d0.settle(tick);
        self.last_eval_tick = tick;
        self.clock.advance(1);
        &self.values
    }

    fn node_value(&self, socket: SocketId) -> Option<Volts> {
        self.graph.node_index(socket).map(|i| self.values[i])
    }

    /// Voltage on a socket as of the most recent step. Unwired sinks read
    /// 0 V; unwired sources show their own output with a grounded input.
    pub fn voltage(&mut self, socket: SocketId) -> Volts {
        if let Some(v) = self.node_value(socket) {
            return v;
        }
        if socket.is_source() {
            self.source_voltage(socket, self.last_eval_tick, 0.0)
        } else {
            0.0
        }
    }

    /// Moves simulated time forward without evaluating the graph.
    pub fn skip(&mut self, ticks: u64) {
        self.clock.advance(ticks);
    }

    fn quantize(&mut self, v: Volts) -> u16 {
        let v = match &mut self.noise {
            Some((dist, rng)) => v + dist.sample(rng),
            None => v,
        };
        self.pc.adc_quantize(v)
    }

    /// One conversion on an ADC channel (one step).
    pub fn sample_adc(&mut self, channel: u8) -> Result<u16, EngineError> {
        let socket = SocketId::adc(channel).ok_or(EngineError::BadCaptureArgs("channel"))?;
        self.step();
        let v = self.voltage(socket);
        Ok(self.quantize(v))
    }

    pub fn read_din(&mut self, pin: u8) -> Result<bool, EngineError> {
        if pin > 3 {
            return Err(crate::panel::PanelError::PinOutOfRange(pin).into());
        }
        self.step();
        Ok(self.din_state[usize::from(pin)])
    }

    pub fn read_comparator(&mut self) -> bool {
        self.step();
        let v = self.voltage(SocketId::Cmp);
        self.pc.comparator(v)
    }

    /// `n` samples spaced `dt_us` apart, the first at the current time.
    /// Simulated time advances by exactly `n * dt_us`.
    pub fn capture(&mut self, channel: u8, n: usize, dt_us: u32) -> Result<CaptureBuffer, EngineError> {
        let socket = SocketId::adc(channel).ok_or(EngineError::BadCaptureArgs("channel must be 0..=3"))?;
        if n > CAPTURE_MAX_SAMPLES {
            return Err(EngineError::BadCaptureArgs("at most 2000 samples"));
        }
        if dt_us < CAPTURE_MIN_DT_US {
            return Err(EngineError::BadCaptureArgs("sample interval below 4 µs"));
        }
        let t0 = self.clock.tick();
        let spacing = u64::from(dt_us) * self.clock.ticks_per_us();
        let mut samples = Vec::with_capacity(n);
        for i in 0..n as u64 {
            self.clock.advance_to(t0 + i * spacing);
            self.step();
            let v = self.voltage(socket);
            samples.push(self.quantize(v));
        }
        self.clock.advance_to(t0 + n as u64 * spacing);
        Ok(CaptureBuffer {
            channel,
            dt_us,
            samples,
        })
    }

    /// Counts rising edges on CNTR over the gate, stepping every tick.
    pub fn measure_frequency(&mut self, gate_ms: u32) -> Result<CounterReading, EngineError> {
        if !(1..=GATE_MS_MAX).contains(&gate_ms) {
            return Err(EngineError::BadGate(gate_ms));
        }
        let ticks = self.clock.ticks_for(f64::from(gate_ms) * 1e-3);
        let idx = self.graph.node_index(SocketId::Cntr);
        let read = |sim: &Self| idx.map_or(0.0, |i| sim.values[i]);
        let mut negative = false;
        let mut count = 0u32;
        let mut level = false;
        for k in 0..ticks {
            self.step();
            let v = read(self);
            if v < self.pc.v_clamp_low {
                negative = true;
            }
            let next = self.pc.digital_in_read(v, level);
            if k > 0 && next && !level {
                count += 1;
            }
            level = next;
        }
        if negative {
            self.faults |= FaultSet::NEGATIVE_SIGNAL_AT_COUNTER;
            return Err(EngineError::NegativeSignalAtCounter);
        }
        Ok(CounterReading { count, gate_ms })
    }

    /// Output of an amplifier with its input grounded: its offset. For the
    /// offset stages the 2.5 V midpoint is subtracted.
    pub fn amplifier_offset(&mut self, amp: AmpId) -> Result<Volts, EngineError> {
        if let Some(driver) = self.graph.driver_of(amp.input()) {
            if driver != SocketId::Gnd {
                return Err(EngineError::InputNotGrounded(amp, driver));
            }
        }
        let needs = match amp {
            AmpId::Inv1 => [AmpParam::Inv1Rin, AmpParam::Inv1Rf],
            AmpId::Inv2 => [AmpParam::Inv2Rin, AmpParam::Inv2Rf],
            _ => [AmpParam::NoninvRg; 2],
        };
        if matches!(amp, AmpId::Inv1 | AmpId::Inv2)
            && needs.iter().any(|p| !self.graph.inserted.contains_key(p))
        {
            return Err(EngineError::AmplifierOpenLoop(amp));
        }
        let out = self.amp_output(amp, 0.0);
        Ok(match amp {
            AmpId::Off1 | AmpId::Off2 => out - self.pc.v_adc_full / 2.0,
            _ => out,
        })
    }
}
