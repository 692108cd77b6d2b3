use serde::{Deserialize, Serialize};

use super::frame::{decode, CommandFrame, DecodeError, FRAME_LEN};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecoderStats {
    pub frames: u64,
    pub bad_magic: u64,
    pub bad_checksum: u64,
    pub bad_kind: u64,
    /// Bytes discarded while hunting for a frame.
    pub skipped_bytes: u64,
    /// Times the decoder lost sync and had to scan.
    pub resyncs: u64,
}

/// Streaming frame scanner.
///
/// On any error at the head of the buffer the scanner drops one byte and
/// looks for the next magic byte, so a valid frame that starts after
/// garbage is never swallowed by it.
#[derive(Debug, Clone, Default)]
pub struct FrameDecoder {
    buf: Vec<u8>,
    stats: DecoderStats,
    scanning: bool,
}

impl FrameDecoder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn stats(&self) -> DecoderStats {
        self.stats
    }

    /// Bytes held back waiting for the rest of a frame.
    pub fn pending(&self) -> &[u8] {
        &self.buf
    }

    pub fn feed(&mut self, bytes: &[u8]) -> Vec<CommandFrame> {
        self.buf.extend_from_slice(bytes);
        let mut frames = Vec::new();
        let mut pos = 0;
        while self.buf.len() - pos >= FRAME_LEN {
            match decode(&self.buf[pos..]) {
                Ok(frame) => {
                    frames.push(frame);
                    self.stats.frames += 1;
                    self.scanning = false;
                    pos += FRAME_LEN;
                }
                Err(e) => {
                    match e {
                        DecodeError::BadMagic(_) => self.stats.bad_magic += 1,
                        DecodeError::BadChecksum { .. } => self.stats.bad_checksum += 1,
                        DecodeError::BadKind(_) => self.stats.bad_kind += 1,
                        DecodeError::Truncated(_) => unreachable!("six bytes are available"),
                    }
                    if !self.scanning {
                        self.stats.resyncs += 1;
                        self.scanning = true;
                    }
                    self.stats.skipped_bytes += 1;
                    pos += 1;
                }
            }
        }
        self.buf.drain(..pos);
        frames
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::link::frame::MAGIC;
    use crate::stimgen::StimKind;
    use proptest::prelude::*;

    #[test]
    fn resync_after_one_garbage_byte() {
        let mut d = FrameDecoder::new();
        let frames = d.feed(&[0xFF, 0xC5, 0x01, 0x28, 0xE8, 0x03, 0x07]);
        assert_eq!(frames, vec![CommandFrame::locomotion(StimKind::Left)]);
        let s = d.stats();
        assert_eq!(s.skipped_bytes, 1);
        assert_eq!(s.resyncs, 1);
        assert_eq!(s.bad_magic, 1);
    }

    #[test]
    fn frames_split_across_feeds() {
        let bytes = CommandFrame::locomotion(StimKind::Right).to_bytes();
        let mut d = FrameDecoder::new();
        assert!(d.feed(&bytes[..4]).is_empty());
        assert_eq!(d.pending().len(), 4);
        assert_eq!(d.feed(&bytes[4..]).len(), 1);
        assert!(d.pending().is_empty());
    }

    #[test]
    fn corrupted_frame_then_valid_frame() {
        let mut bad = CommandFrame::locomotion(StimKind::Left).to_bytes();
        bad[3] ^= 0x10;
        let good = CommandFrame::locomotion(StimKind::Accel).to_bytes();
        let mut d = FrameDecoder::new();
        let frames = d.feed(&[bad.as_slice(), good.as_slice()].concat());
        assert_eq!(frames, vec![CommandFrame::locomotion(StimKind::Accel)]);
        assert_eq!(d.stats().bad_checksum, 1);
        assert_eq!(d.stats().skipped_bytes, 6);
        assert_eq!(d.stats().resyncs, 1);
    }

    proptest! {
        #[test]
        fn garbage_never_eats_a_following_frame(
            garbage in prop::collection::vec(any::<u8>().prop_filter("no magic", |b| *b != MAGIC), 0..40),
            dv in any::<u8>(),
            ms in any::<u16>(),
            split in 0usize..50,
        ) {
            let frame = CommandFrame { kind: StimKind::Right, amplitude_dv: dv, duration_ms: ms };
            let stream = [garbage.as_slice(), &frame.to_bytes()].concat();
            let split = split.min(stream.len());
            let mut d = FrameDecoder::new();
            let mut got = d.feed(&stream[..split]);
            got.extend(d.feed(&stream[split..]));
            prop_assert_eq!(got, vec![frame]);
            prop_assert_eq!(d.stats().skipped_bytes, garbage.len() as u64);
            prop_assert_eq!(d.stats().resyncs, u64::from(!garbage.is_empty()));
        }
    }
}
