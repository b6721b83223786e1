use std::fmt;
use std::str::FromStr;

use crate::panel::SignalClass;

/// Which way signal flows through a socket.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Source,
    Sink,
    /// Passive terminal (the non-inverting amplifier's gain socket).
    Bidirectional,
}

macro_rules! sockets {
    ($($variant:ident => $name:literal, $class:ident, $dir:ident;)*) => {
        /// A front-panel banana socket.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum SocketId {
            $($variant,)*
        }

        impl SocketId {
            pub const ALL: &'static [SocketId] = &[$(SocketId::$variant,)*];

            pub fn name(self) -> &'static str {
                match self {
                    $(SocketId::$variant => $name,)*
                }
            }

            pub fn class(self) -> SignalClass {
                match self {
                    $(SocketId::$variant => SignalClass::$class,)*
                }
            }

            pub fn direction(self) -> Direction {
                match self {
                    $(SocketId::$variant => Direction::$dir,)*
                }
            }
        }
    };
}

sockets! {
    Dout0 => "DOUT0", Unipolar05, Source;
    Dout1 => "DOUT1", Unipolar05, Source;
    Dout2 => "DOUT2", Unipolar05, Source;
    Dout3 => "DOUT3", Unipolar05, Source;
    Din0 => "DIN0", InputOnly, Sink;
    Din1 => "DIN1", InputOnly, Sink;
    Din2 => "DIN2", InputOnly, Sink;
    Din3 => "DIN3", InputOnly, Sink;
    Adc0 => "ADC0", InputOnly, Sink;
    Adc1 => "ADC1", InputOnly, Sink;
    Adc2 => "ADC2", InputOnly, Sink;
    Adc3 => "ADC3", InputOnly, Sink;
    Pwg => "PWG", Unipolar05, Source;
    Dac => "DAC", Unipolar05, Source;
    Cmp => "CMP", InputOnly, Sink;
    Cntr => "CNTR", InputOnly, Sink;
    Ccs => "CCS", Unipolar05, Source;
    V5 => "V5", SupplyRail, Source;
    Gnd => "GND", Ground, Source;
    Inv1In => "INV1.IN", InputOnly, Sink;
    Inv1Out => "INV1.OUT", Bipolar55, Source;
    Inv2In => "INV2.IN", InputOnly, Sink;
    Inv2Out => "INV2.OUT", Bipolar55, Source;
    NoninvIn => "NONINV.IN", InputOnly, Sink;
    NoninvOut => "NONINV.OUT", Bipolar55, Source;
    NoninvRg => "NONINV.RG", InputOnly, Bidirectional;
    Off1In => "OFF1.IN", InputOnly, Sink;
    Off1Out => "OFF1.OUT", Unipolar05, Source;
    Off2In => "OFF2.IN", InputOnly, Sink;
    Off2Out => "OFF2.OUT", Unipolar05, Source;
}

impl SocketId {
    pub fn is_source(self) -> bool {
        self.direction() == Direction::Source
    }

    pub fn is_sink(self) -> bool {
        self.direction() == Direction::Sink
    }

    pub fn din(pin: u8) -> Option<SocketId> {
        [SocketId::Din0, SocketId::Din1, SocketId::Din2, SocketId::Din3]
            .get(usize::from(pin))
            .copied()
    }

    pub fn dout(pin: u8) -> Option<SocketId> {
        [SocketId::Dout0, SocketId::Dout1, SocketId::Dout2, SocketId::Dout3]
            .get(usize::from(pin))
            .copied()
    }

    pub fn adc(channel: u8) -> Option<SocketId> {
        [SocketId::Adc0, SocketId::Adc1, SocketId::Adc2, SocketId::Adc3]
            .get(usize::from(channel))
            .copied()
    }

    pub fn is_din(self) -> bool {
        matches!(self, SocketId::Din0 | SocketId::Din1 | SocketId::Din2 | SocketId::Din3)
    }

    pub fn is_adc(self) -> bool {
        matches!(self, SocketId::Adc0 | SocketId::Adc1 | SocketId::Adc2 | SocketId::Adc3)
    }

    /// The amplifier block this socket belongs to, if any.
    pub fn amplifier(self) -> Option<AmpId> {
        use SocketId::*;
        match self {
            Inv1In | Inv1Out => Some(AmpId::Inv1),
            Inv2In | Inv2Out => Some(AmpId::Inv2),
            NoninvIn | NoninvOut | NoninvRg => Some(AmpId::Noninv),
            Off1In | Off1Out => Some(AmpId::Off1),
            Off2In | Off2Out => Some(AmpId::Off2),
            _ => None,
        }
    }
}

impl fmt::Display for SocketId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownName(pub String);

impl FromStr for SocketId {
    type Err = UnknownName;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let upper = s.to_ascii_uppercase();
        SocketId::ALL
            .iter()
            .copied()
            .find(|sock| sock.name() == upper)
            .ok_or_else(|| UnknownName(s.to_string()))
    }
}

/// The five amplifier blocks on the panel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AmpId {
    Inv1,
    Inv2,
    Noninv,
    Off1,
    Off2,
}

impl AmpId {
    pub const ALL: [AmpId; 5] = [AmpId::Inv1, AmpId::Inv2, AmpId::Noninv, AmpId::Off1, AmpId::Off2];

    pub fn input(self) -> SocketId {
        match self {
            AmpId::Inv1 => SocketId::Inv1In,
            AmpId::Inv2 => SocketId::Inv2In,
            AmpId::Noninv => SocketId::NoninvIn,
            AmpId::Off1 => SocketId::Off1In,
            AmpId::Off2 => SocketId::Off2In,
        }
    }

    pub fn output(self) -> SocketId {
        match self {
            AmpId::Inv1 => SocketId::Inv1Out,
            AmpId::Inv2 => SocketId::Inv2Out,
            AmpId::Noninv => SocketId::NoninvOut,
            AmpId::Off1 => SocketId::Off1Out,
            AmpId::Off2 => SocketId::Off2Out,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            AmpId::Inv1 => "INV1",
            AmpId::Inv2 => "INV2",
            AmpId::Noninv => "NONINV",
            AmpId::Off1 => "OFF1",
            AmpId::Off2 => "OFF2",
        }
    }
}

impl fmt::Display for AmpId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AmpId {
    type Err = UnknownName;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let upper = s.to_ascii_uppercase();
        AmpId::ALL
            .iter()
            .copied()
            .find(|a| a.name() == upper)
            .ok_or_else(|| UnknownName(s.to_string()))
    }
}

/// Resistor positions that take an `insert` statement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AmpParam {
    Inv1Rin,
    Inv1Rf,
    Inv2Rin,
    Inv2Rf,
    NoninvRg,
}

impl AmpParam {
    pub const ALL: [AmpParam; 5] = [
        AmpParam::Inv1Rin,
        AmpParam::Inv1Rf,
        AmpParam::Inv2Rin,
        AmpParam::Inv2Rf,
        AmpParam::NoninvRg,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AmpParam::Inv1Rin => "INV1.RIN",
            AmpParam::Inv1Rf => "INV1.RF",
            AmpParam::Inv2Rin => "INV2.RIN",
            AmpParam::Inv2Rf => "INV2.RF",
            AmpParam::NoninvRg => "NONINV.RG",
        }
    }
}

impl fmt::Display for AmpParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AmpParam {
    type Err = UnknownName;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let upper = s.to_ascii_uppercase();
        AmpParam::ALL
            .iter()
            .copied()
            .find(|p| p.name() == upper)
            .ok_or_else(|| UnknownName(s.to_string()))
    }
}
