//! Transfer-function models for every front-panel block.
//!
//! Everything here is a pure function of its arguments plus a
//! [`PanelConstants`] value. Amplifier offsets come from a per-device
//! [`CalibrationSet`].

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub type Volts = f64;
pub type Ohms = f64;
pub type Amps = f64;
pub type Hertz = f64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum PanelError {
    #[error("DAC code {0} exceeds the 8-bit range")]
    CodeOutOfRange(u32),
    #[error("digital pin {0} does not exist (valid: 0..=3)")]
    PinOutOfRange(u8),
}

/// Electrical range a socket carries or accepts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SignalClass {
    /// 0 to 5 V sources.
    Unipolar05,
    /// -5 to +5 V sources (amplifier outputs).
    Bipolar55,
    SupplyRail,
    Ground,
    InputOnly,
}

/// Every numeric property of the panel in one place.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelConstants {
    /// HIGH level of the transistor-buffered D0 output.
    pub v_logic_d0: Volts,
    /// HIGH level of D1..D3.
    pub v_logic_d13: Volts,
    /// Nominal regulated supply on the 5V OUT socket.
    pub v_supply: Volts,
    pub i_supply_max: Amps,
    /// Minimum series resistance between a bipolar source and a digital input.
    pub r_series_min: Ohms,
    pub v_ref_cmp: Volts,
    pub i_ccs: Amps,
    pub v_ccs_compliance: Volts,
    pub dac_bits: u32,
    pub adc_bits: u32,
    pub v_adc_full: Volts,
    pub v_rail_pos: Volts,
    pub v_rail_neg: Volts,
    pub v_adapter: Volts,
    /// Feedback resistor inside the non-inverting amplifier.
    pub r_noninv_feedback: Ohms,
    /// Resistance assumed for a bare wire.
    pub r_wire_min: Ohms,
    pub v_clamp_low: Volts,
    pub v_clamp_high: Volts,
    pub i_clamp_max: Amps,
    pub v_in_low: Volts,
    pub v_in_high: Volts,
    /// Largest magnitude of any per-device amplifier offset.
    pub max_offset: Volts,
}

impl Default for PanelConstants {
    fn default() -> Self {
        Self {
            v_logic_d0: 4.57,
            v_logic_d13: 5.0,
            v_supply: 5.0,
            i_supply_max: 0.100,
            r_series_min: 1000.0,
            v_ref_cmp: 1.23,
            i_ccs: 0.001,
            v_ccs_compliance: 4.5,
            dac_bits: 8,
            adc_bits: 10,
            v_adc_full: 5.0,
            v_rail_pos: 5.0,
            v_rail_neg: -5.0,
            v_adapter: 9.0,
            r_noninv_feedback: 10_000.0,
            r_wire_min: 1.0,
            v_clamp_low: -0.5,
            v_clamp_high: 5.5,
            i_clamp_max: 0.005,
            v_in_low: 0.8,
            v_in_high: 2.0,
            max_offset: 0.010,
        }
    }
}

/// Result of driving the constant current source into a load.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CcsReading {
    pub volts: Volts,
    /// The source ran out of headroom and no longer regulates 1 mA.
    pub compliance: bool,
}

/// Current pushed through a digital input's clamp diodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClampCurrent {
    pub amps: Amps,
    pub overcurrent: bool,
}

impl PanelConstants {
    pub fn adc_max_code(&self) -> u16 {
        ((1u32 << self.adc_bits) - 1) as u16
    }

    pub fn dac_max_code(&self) -> u32 {
        (1u32 << self.dac_bits) - 1
    }

    /// Volts represented by one ADC step.
    pub fn adc_lsb(&self) -> Volts {
        self.v_adc_full / f64::from(self.adc_max_code())
    }

    /// Converts an input voltage to an ADC code. Out-of-range inputs clamp.
    pub fn adc_quantize(&self, v: Volts) -> u16 {
        let max = f64::from(self.adc_max_code());
        if v.is_nan() {
            return 0;
        }
        // f64::round rounds half away from zero.
        (v / self.v_adc_full * max).round().clamp(0.0, max) as u16
    }

    /// Volts corresponding to an ADC code.
    pub fn adc_code_volts(&self, code: u16) -> Volts {
        f64::from(code) * self.v_adc_full / f64::from(self.adc_max_code())
    }

    pub fn dac_output(&self, code: u32) -> Result<Volts, PanelError> {
        let max = self.dac_max_code();
        if code > max {
            return Err(PanelError::CodeOutOfRange(code));
        }
        Ok(f64::from(code) * self.v_adc_full / f64::from(max))
    }

    fn rail_clamp(&self, v: Volts) -> Volts {
        v.clamp(self.v_rail_neg, self.v_rail_pos)
    }

    pub fn inverting_amp(&self, v_in: Volts, r_in: Ohms, r_f: Ohms, offset: Volts) -> Volts {
        self.rail_clamp(-(r_f / r_in) * v_in + offset)
    }

    /// Inverting stage with a feedback or input resistor missing: the
    /// output slams to whichever rail the error sign points at.
    pub fn inverting_amp_open_loop(&self, v_in: Volts, offset: Volts) -> Volts {
        if offset - v_in >= 0.0 {
            self.v_rail_pos
        } else {
            self.v_rail_neg
        }
    }

    /// `r_g` of `None` means the gain socket is open (unity-gain follower).
    pub fn noninverting_amp(&self, v_in: Volts, r_g: Option<Ohms>, offset: Volts) -> Volts {
        let gain = match r_g {
            Some(r) => 1.0 + self.r_noninv_feedback / r,
            None => 1.0,
        };
        self.rail_clamp(gain * v_in + offset)
    }

    /// Maps a -5..+5 V signal onto the ADC's 0..5 V range.
    pub fn offset_amp(&self, v_in: Volts, err: Volts) -> Volts {
        (0.5 * v_in + self.v_adc_full / 2.0 + err).clamp(0.0, self.v_adc_full)
    }

    /// HIGH when the negative input sits below the internal reference.
    /// Equality reads LOW.
    pub fn comparator(&self, v_neg: Volts) -> bool {
        self.v_ref_cmp - v_neg > 0.0
    }

    /// `r_load` of `None` is an open circuit.
    pub fn ccs_node_voltage(&self, r_load: Option<Ohms>) -> CcsReading {
        match r_load {
            Some(r) if self.i_ccs * r <= self.v_ccs_compliance => CcsReading {
                volts: self.i_ccs * r,
                compliance: false,
            },
            _ => CcsReading {
                volts: self.v_ccs_compliance,
                compliance: true,
            },
        }
    }

    pub fn digital_out_level(&self, pin: u8, state: bool) -> Result<Volts, PanelError> {
        match (pin, state) {
            (0..=3, false) => Ok(0.0),
            (0, true) => Ok(self.v_logic_d0),
            (1..=3, true) => Ok(self.v_logic_d13),
            _ => Err(PanelError::PinOutOfRange(pin)),
        }
    }

    /// Logic level seen by a digital input. Between the thresholds the
    /// previous level holds.
    pub fn digital_in_read(&self, v: Volts, previous: bool) -> bool {
        if v < self.v_in_low {
            false
        } else if v > self.v_in_high {
            true
        } else {
            previous
        }
    }

    pub fn clamp_current(&self, v_src: Volts, r_series: Ohms) -> ClampCurrent {
        let r = r_series.max(self.r_wire_min);
        let amps = if v_src < self.v_clamp_low {
            (self.v_clamp_low - v_src) / r
        } else if v_src > self.v_clamp_high {
            (v_src - self.v_clamp_high) / r
        } else {
            0.0
        };
        ClampCurrent {
            amps,
            overcurrent: amps > self.i_clamp_max,
        }
    }

    /// Voltage actually present on a digital input pin after the clamp diodes.
    pub fn clamped_pin_voltage(&self, v_src: Volts) -> Volts {
        v_src.clamp(self.v_clamp_low, self.v_clamp_high)
    }
}

/// Per-device amplifier offsets, fixed for the lifetime of an instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationSet {
    pub invamp1_offset: Volts,
    pub invamp2_offset: Volts,
    pub noninv_offset: Volts,
    pub offset1_err: Volts,
    pub offset2_err: Volts,
}

/// Offsets are drawn on a grid of 2^-20 V so that adding them to and
/// subtracting them from a 2.5 V midpoint is exact in binary floating point.
const OFFSET_STEP: f64 = 1.0 / (1u64 << 20) as f64;

impl CalibrationSet {
    pub fn zero() -> Self {
        Self {
            invamp1_offset: 0.0,
            invamp2_offset: 0.0,
            noninv_offset: 0.0,
            offset1_err: 0.0,
            offset2_err: 0.0,
        }
    }

    /// Draws all five offsets uniformly from [-max_offset, +max_offset].
    pub fn from_seed(seed: u64, max_offset: Volts) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let steps = (max_offset / OFFSET_STEP).floor() as u64;
        let span = 2 * steps + 1;
        let mut draw = || {
            // Rejection sampling keeps the distribution uniform.
            let zone = u64::MAX - (u64::MAX % span);
            loop {
                let x = rng.next_u64();
                if x < zone {
                    return ((x % span) as i64 - steps as i64) as f64 * OFFSET_STEP;
                }
            }
        };
        Self {
            invamp1_offset: draw(),
            invamp2_offset: draw(),
            noninv_offset: draw(),
            offset1_err: draw(),
            offset2_err: draw(),
        }
    }

    pub fn entries(&self) -> [Volts; 5] {
        [
            self.invamp1_offset,
            self.invamp2_offset,
            self.noninv_offset,
            self.offset1_err,
            self.offset2_err,
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pc() -> PanelConstants {
        PanelConstants::default()
    }

    #[test]
    fn constants_are_consistent() {
        let c = pc();
        assert!(c.v_ref_cmp > 0.0 && c.v_ref_cmp < c.v_adc_full);
        assert!(c.adc_bits >= 1 && c.dac_bits >= 1);
        assert!(c.v_rail_neg < 0.0);
        assert_eq!(c.adc_max_code(), 1023);
        assert_eq!(c.dac_max_code(), 255);
    }

    #[test]
    fn adc_examples() {
        let c = pc();
        assert_eq!(c.adc_quantize(5.0), 1023);
        assert_eq!(c.adc_quantize(0.0), 0);
        // 2.5 / 5 * 1023 = 511.5 exactly, rounds away from zero.
        assert_eq!(2.5 / 5.0 * 1023.0, 511.5);
        assert_eq!(c.adc_quantize(2.5), 512);
        assert_eq!(c.adc_quantize(-1.0), 0);
        assert_eq!(c.adc_quantize(7.0), 1023);
        assert_eq!(c.adc_quantize(f64::NAN), 0);
    }

    #[test]
    fn dac_examples() {
        let c = pc();
        assert_eq!(c.dac_output(0), Ok(0.0));
        assert_eq!(c.dac_output(255), Ok(5.0));
        assert!((c.dac_output(128).unwrap() - 2.5098).abs() < 1e-4);
        assert_eq!(c.dac_output(256), Err(PanelError::CodeOutOfRange(256)));
    }

    #[test]
    fn amplifier_examples() {
        let c = pc();
        assert_eq!(c.inverting_amp(1.0, 1e3, 1e3, 0.0), -1.0);
        assert_eq!(c.inverting_amp(0.0, 1e3, 10e3, 0.004), 0.004);
        assert_eq!(c.inverting_amp(1.0, 1e3, 10e3, 0.0), -5.0);

        assert_eq!(c.noninverting_amp(0.5, None, 0.0), 0.5);
        assert!((c.noninverting_amp(0.2, Some(10e3), 0.0) - 0.4).abs() < 1e-12);
        assert_eq!(c.noninverting_amp(1.0, Some(1e3), 0.0), 5.0);

        assert_eq!(c.offset_amp(-5.0, 0.0), 0.0);
        assert_eq!(c.offset_amp(5.0, 0.0), 5.0);
        assert_eq!(c.offset_amp(0.0, 0.0), 2.5);
    }

    #[test]
    fn open_loop_goes_to_a_rail() {
        let c = pc();
        assert_eq!(c.inverting_amp_open_loop(0.0, 0.001), 5.0);
        assert_eq!(c.inverting_amp_open_loop(0.0, -0.001), -5.0);
        assert_eq!(c.inverting_amp_open_loop(1.0, 0.0), -5.0);
    }

    #[test]
    fn comparator_examples() {
        let c = pc();
        assert!(c.comparator(1.0));
        assert!(!c.comparator(2.0));
        assert!(!c.comparator(1.23));
    }

    #[test]
    fn ccs_examples() {
        let c = pc();
        let r = c.ccs_node_voltage(Some(1e3));
        assert!((r.volts - 1.0).abs() < 1e-12 && !r.compliance);
        let r = c.ccs_node_voltage(Some(100.0));
        assert!((r.volts - 0.1).abs() < 1e-12 && !r.compliance);
        assert_eq!(
            c.ccs_node_voltage(Some(10e3)),
            CcsReading { volts: 4.5, compliance: true }
        );
        assert_eq!(
            c.ccs_node_voltage(None),
            CcsReading { volts: 4.5, compliance: true }
        );
    }

    #[test]
    fn digital_levels() {
        let c = pc();
        assert_eq!(c.digital_out_level(0, true), Ok(4.57));
        assert_eq!(c.digital_out_level(1, true), Ok(5.0));
        assert_eq!(c.digital_out_level(3, false), Ok(0.0));
        assert_eq!(c.digital_out_level(4, true), Err(PanelError::PinOutOfRange(4)));

        assert!(!c.digital_in_read(0.0, true));
        assert!(c.digital_in_read(4.57, false));
        assert!(c.digital_in_read(1.5, true));
        assert!(!c.digital_in_read(1.5, false));
    }

    #[test]
    fn clamp_current_examples() {
        let c = pc();
        let i = c.clamp_current(-5.0, 1000.0);
        assert!((i.amps - 0.0045).abs() < 1e-15);
        assert!(!i.overcurrent);
        let i = c.clamp_current(-5.0, 1.0);
        assert!((i.amps - 4.5).abs() < 1e-12);
        assert!(i.overcurrent);
        assert_eq!(c.clamp_current(2.0, 1000.0).amps, 0.0);
        let i = c.clamp_current(10.0, 100.0);
        assert!((i.amps - 0.045).abs() < 1e-12 && i.overcurrent);
        // Sub-wire resistances are floored at one ohm.
        assert_eq!(c.clamp_current(-1.5, 0.0).amps, 1.0);
    }

    #[test]
    fn calibration_is_seeded_and_bounded() {
        let a = CalibrationSet::from_seed(42, 0.010);
        let b = CalibrationSet::from_seed(42, 0.010);
        assert_eq!(a, b);
        assert_ne!(a, CalibrationSet::from_seed(43, 0.010));
        for v in a.entries() {
            assert!(v.abs() <= 0.010);
            // midpoint round trip is exact on the offset grid
            assert_eq!((2.5 + v) - 2.5, v);
        }
    }

    proptest! {
        #[test]
        fn adc_monotone_and_clamp_idempotent(a in -20.0f64..20.0, b in -20.0f64..20.0) {
            let c = pc();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(c.adc_quantize(lo) <= c.adc_quantize(hi));
            prop_assert_eq!(c.adc_quantize(a), c.adc_quantize(a.clamp(0.0, 5.0)));
        }

        #[test]
        fn inverting_unity_antisymmetric(v in -5.0f64..=5.0, r in 1.0f64..1e6, rf in 1.0f64..1e6, off in -0.01f64..0.01, vin in -100.0f64..100.0) {
            let c = pc();
            prop_assert_eq!(c.inverting_amp(v, r, r, 0.0), -v);
            let out = c.inverting_amp(vin, r, rf, off);
            prop_assert!((-5.0..=5.0).contains(&out));
        }

        #[test]
        fn offset_amp_symmetric(v in -5.0f64..=5.0) {
            let c = pc();
            prop_assert!((c.offset_amp(-v, 0.0) + c.offset_amp(v, 0.0) - 5.0).abs() < 1e-12);
            prop_assert!(c.offset_amp(v, 0.0) <= c.offset_amp((v + 0.1).min(5.0), 0.0));
        }

        #[test]
        fn ccs_linear_below_compliance(r in 0.1f64..4500.0) {
            let c = pc();
            let out = c.ccs_node_voltage(Some(r));
            prop_assert!(!out.compliance);
            prop_assert_eq!(out.volts, 0.001 * r);
        }

        #[test]
        fn comparator_depends_on_sign_only(v in -10.0f64..10.0) {
            let c = pc();
            prop_assert_eq!(c.comparator(v), (1.23 - v) > 0.0);
        }

        #[test]
        fn calibration_deterministic(seed in any::<u64>()) {
            let a = CalibrationSet::from_seed(seed, 0.010);
            prop_assert_eq!(a, CalibrationSet::from_seed(seed, 0.010));
            for v in a.entries() {
                prop_assert!(v.abs() <= 0.010);
            }
        }
    }

    #[test]
    fn dac_strictly_increasing_and_recoverable() {
        let c = pc();
        let mut last = -1.0;
        for code in 0..=255u32 {
            let v = c.dac_output(code).unwrap();
            assert!(v > last);
            last = v;
            let expected = f64::from(code) * 1023.0 / 255.0;
            let got = f64::from(c.adc_quantize(v));
            assert!((got - expected).abs() <= 1.0, "code {code}");
        }
    }
}
