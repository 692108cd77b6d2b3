use serde::{Deserialize, Serialize};

use super::LinkError;
use crate::stimgen::{StimKind, StimulusTrain};

pub const MAGIC: u8 = 0xC5;
pub const FRAME_LEN: usize = 6;

/// Backpack-side phase width; frames carry only amplitude and duration.
pub const BACKPACK_PHASE_WIDTH: f64 = 0.012;
pub const BACKPACK_DUTY: f64 = 0.5;

pub const MAX_AMPLITUDE_V: f64 = 25.5;
pub const MAX_DURATION_S: f64 = 65.535;

/// `C5 kind amp_dv dur_lo dur_hi xor`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CommandFrame {
    pub kind: StimKind,
    pub amplitude_dv: u8,
    pub duration_ms: u16,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DecodeError {
    Truncated(usize),
    BadMagic(u8),
    BadChecksum { expected: u8, found: u8 },
    BadKind(u8),
}

impl std::fmt::Display for DecodeError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DecodeError::Truncated(n) => write!(f, "truncated frame: {n} of {FRAME_LEN} bytes"),
            DecodeError::BadMagic(b) => write!(f, "bad magic byte {b:#04x}"),
            DecodeError::BadChecksum { expected, found } => {
                write!(f, "bad checksum: expected {expected:#04x}, found {found:#04x}")
            }
            DecodeError::BadKind(b) => write!(f, "bad kind byte {b:#04x}"),
        }
    }
}

impl std::error::Error for DecodeError {}

pub fn kind_code(kind: StimKind) -> u8 {
    match kind {
        StimKind::Left => 0x01,
        StimKind::Right => 0x02,
        StimKind::Accel => 0x03,
    }
}

pub fn kind_from_code(code: u8) -> Option<StimKind> {
    match code {
        0x01 => Some(StimKind::Left),
        0x02 => Some(StimKind::Right),
        0x03 => Some(StimKind::Accel),
        _ => None,
    }
}

pub fn checksum(bytes: &[u8]) -> u8 {
    bytes.iter().fold(0, |acc, b| acc ^ b)
}

/// Round half up, with slack for values like 0.15 * 10 landing below the half.
fn quantize(value: f64, scale: f64) -> f64 {
    (value * scale + 0.5 + 1e-9).floor()
}

impl CommandFrame {
    pub fn new(kind: StimKind, amplitude_v: f64, duration_s: f64) -> Result<Self, LinkError> {
        if !(0.0..=MAX_AMPLITUDE_V).contains(&amplitude_v) {
            return Err(LinkError::Amplitude(amplitude_v));
        }
        if !(0.0..=MAX_DURATION_S).contains(&duration_s) {
            return Err(LinkError::Duration(duration_s));
        }
        Ok(Self {
            kind,
            amplitude_dv: quantize(amplitude_v, 10.0) as u8,
            duration_ms: quantize(duration_s, 1000.0) as u16,
        })
    }

    /// The standard locomotion command: 4 V for 1 s.
    pub fn locomotion(kind: StimKind) -> Self {
        Self {
            kind,
            amplitude_dv: 40,
            duration_ms: 1000,
        }
    }

    pub fn amplitude_v(&self) -> f64 {
        self.amplitude_dv as f64 / 10.0
    }

    pub fn duration_s(&self) -> f64 {
        self.duration_ms as f64 / 1000.0
    }

    pub fn to_bytes(&self) -> [u8; FRAME_LEN] {
        let [lo, hi] = self.duration_ms.to_le_bytes();
        let mut out = [MAGIC, kind_code(self.kind), self.amplitude_dv, lo, hi, 0];
        out[5] = checksum(&out[..5]);
        out
    }

    pub fn to_hex(&self) -> String {
        hex::encode_upper(self.to_bytes())
    }

    /// The train the backpack emits for this frame, starting at `start`.
    /// `None` for a null amplitude or duration.
    pub fn train(&self, start: f64) -> Option<StimulusTrain> {
        if self.amplitude_dv == 0 || self.duration_ms == 0 {
            return None;
        }
        StimulusTrain::new(
            self.amplitude_v(),
            BACKPACK_PHASE_WIDTH,
            BACKPACK_DUTY,
            self.duration_s(),
            start,
        )
        .ok()
    }
}

pub fn encode(kind: StimKind, amplitude_v: f64, duration_s: f64) -> Result<[u8; FRAME_LEN], LinkError> {
    Ok(CommandFrame::new(kind, amplitude_v, duration_s)?.to_bytes())
}

/// Decodes the first six bytes.
pub fn decode(bytes: &[u8]) -> Result<CommandFrame, DecodeError> {
    if bytes.len() < FRAME_LEN {
        return Err(DecodeError::Truncated(bytes.len()));
    }
    if bytes[0] != MAGIC {
        return Err(DecodeError::BadMagic(bytes[0]));
    }
    let expected = checksum(&bytes[..5]);
    if expected != bytes[5] {
        return Err(DecodeError::BadChecksum {
            expected,
            found: bytes[5],
        });
    }
    let kind = kind_from_code(bytes[1]).ok_or(DecodeError::BadKind(bytes[1]))?;
    Ok(CommandFrame {
        kind,
        amplitude_dv: bytes[2],
        duration_ms: u16::from_le_bytes([bytes[3], bytes[4]]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reference_frames() {
        assert_eq!(encode(StimKind::Left, 4.0, 1.0).unwrap(), [0xC5, 0x01, 0x28, 0xE8, 0x03, 0x07]);
        assert_eq!(0xC5 ^ 0x01 ^ 0x28 ^ 0xE8 ^ 0x03, 0x07);
        assert_eq!(encode(StimKind::Accel, 0.0, 0.0).unwrap(), [0xC5, 0x03, 0x00, 0x00, 0x00, 0xC6]);
        assert_eq!(CommandFrame::locomotion(StimKind::Left).to_hex(), "C50128E80307");
    }

    #[test]
    fn range_errors() {
        assert_eq!(encode(StimKind::Right, 30.0, 1.0), Err(LinkError::Amplitude(30.0)));
        assert_eq!(encode(StimKind::Right, -0.1, 1.0), Err(LinkError::Amplitude(-0.1)));
        assert_eq!(encode(StimKind::Right, 4.0, 65.536), Err(LinkError::Duration(65.536)));
        assert!(encode(StimKind::Right, f64::NAN, 1.0).is_err());
        assert!(encode(StimKind::Right, 25.5, 65.535).is_ok());
    }

    #[test]
    fn quantization_rounds_half_up() {
        assert_eq!(CommandFrame::new(StimKind::Left, 0.05, 0.0005).unwrap().amplitude_dv, 1);
        assert_eq!(CommandFrame::new(StimKind::Left, 0.15, 0.0015).unwrap().duration_ms, 2);
        assert_eq!(CommandFrame::new(StimKind::Left, 0.25, 0.0).unwrap().amplitude_dv, 3);
        assert_eq!(CommandFrame::new(StimKind::Left, 0.249, 0.0).unwrap().amplitude_dv, 2);
        assert_eq!(CommandFrame::new(StimKind::Left, 4.04, 0.9994).unwrap().duration_ms, 999);
    }

    #[test]
    fn error_precedence() {
        assert_eq!(decode(&[0xC5, 0x01]), Err(DecodeError::Truncated(2)));
        assert_eq!(decode(&[0xFF, 0, 0, 0, 0, 0]), Err(DecodeError::BadMagic(0xFF)));
        let mut bad_kind = [0xC5, 0x07, 0x28, 0xE8, 0x03, 0];
        bad_kind[5] = checksum(&bad_kind[..5]);
        assert_eq!(decode(&bad_kind), Err(DecodeError::BadKind(0x07)));
        bad_kind[5] ^= 1;
        assert!(matches!(decode(&bad_kind), Err(DecodeError::BadChecksum { .. })));
    }

    #[test]
    fn every_single_bit_flip_is_detected() {
        let frame = encode(StimKind::Left, 4.0, 1.0).unwrap();
        for bit in 0..48 {
            let mut b = frame;
            b[bit / 8] ^= 1 << (bit % 8);
            assert!(decode(&b).is_err(), "bit {bit}");
            if bit >= 8 {
                assert!(matches!(decode(&b), Err(DecodeError::BadChecksum { .. })), "bit {bit}");
            }
        }
    }

    #[test]
    fn backpack_train() {
        let t = CommandFrame::locomotion(StimKind::Accel).train(2.0).unwrap();
        assert_eq!(t, StimulusTrain::locomotion(2.0));
        assert!(CommandFrame::new(StimKind::Accel, 0.0, 1.0).unwrap().train(0.0).is_none());
    }

    proptest! {
        #[test]
        fn round_trip(k in 0usize..3, dv in any::<u8>(), ms in any::<u16>()) {
            let kind = StimKind::ALL[k];
            let frame = CommandFrame::new(kind, dv as f64 / 10.0, ms as f64 / 1000.0).unwrap();
            prop_assert_eq!(frame, CommandFrame { kind, amplitude_dv: dv, duration_ms: ms });
            prop_assert_eq!(decode(&frame.to_bytes()), Ok(frame));
        }
    }
}
