//! Framed command protocol and a lossy, jittered channel model.
//!
//! Wire format, six bytes:
//!
//! | byte | content                                 |
//! |------|-----------------------------------------|
//! | 0    | magic `0xC5`                            |
//! | 1    | kind: 1 LEFT, 2 RIGHT, 3 ACCEL          |
//! | 2    | amplitude, 0.1 V steps                  |
//! | 3-4  | duration in ms, little-endian           |
//! | 5    | XOR of bytes 0-4                        |

mod decoder;
mod frame;

use std::collections::VecDeque;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use decoder::{DecoderStats, FrameDecoder};
pub use frame::{
    checksum, decode, encode, kind_code, kind_from_code, CommandFrame, DecodeError,
    BACKPACK_DUTY, BACKPACK_PHASE_WIDTH, FRAME_LEN, MAGIC, MAX_AMPLITUDE_V, MAX_DURATION_S,
};

#[derive(Debug, Error, PartialEq)]
pub enum LinkError {
    #[error("amplitude must lie in [0, 25.5] V, got {0}")]
    Amplitude(f64),
    #[error("duration must lie in [0, 65.535] s, got {0}")]
    Duration(f64),
    #[error("invalid channel model: {0}")]
    Channel(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChannelModel {
    /// Fixed latency, seconds.
    pub latency: f64,
    /// Std of the Gaussian jitter added to the latency, seconds.
    pub jitter: f64,
    /// 1.0 models a closed channel.
    pub drop_probability: f64,
    pub seed: u64,
}

impl Default for ChannelModel {
    fn default() -> Self {
        Self {
            latency: 0.020,
            jitter: 0.005,
            drop_probability: 0.0,
            seed: 0,
        }
    }
}

impl ChannelModel {
    pub fn ideal() -> Self {
        Self {
            latency: 0.0,
            jitter: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), LinkError> {
        if !(self.latency >= 0.0 && self.latency.is_finite()) {
            return Err(LinkError::Channel(format!("latency must be >= 0, got {}", self.latency)));
        }
        if !(self.jitter >= 0.0 && self.jitter.is_finite()) {
            return Err(LinkError::Channel(format!("jitter must be >= 0, got {}", self.jitter)));
        }
        if !(0.0..=1.0).contains(&self.drop_probability) {
            return Err(LinkError::Channel(format!(
                "drop probability must lie in [0, 1], got {}",
                self.drop_probability
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkStats {
    pub sent: u64,
    pub delivered: u64,
    pub dropped: u64,
    pub bad_checksum: u64,
    pub bad_magic: u64,
    pub bad_kind: u64,
    pub skipped_bytes: u64,
    pub resyncs: u64,
    pub frames_decoded: u64,
}

/// A chunk of bytes handed to the receiver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Delivery {
    pub sent_at: f64,
    pub delivered_at: f64,
    #[serde(with = "hex_bytes")]
    pub bytes: Vec<u8>,
    /// Frames completed by this chunk.
    pub frames: Vec<CommandFrame>,
}

mod hex_bytes {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode_upper(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let s = String::deserialize(d)?;
        hex::decode(s).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone)]
struct InFlight {
    sent_at: f64,
    deliver_at: f64,
    bytes: Vec<u8>,
}

/// One direction of the workstation to backpack chain.
///
/// Every send draws a drop decision and a latency, in that order, so the
/// random stream does not depend on the outcome. Deliveries never overtake
/// each other: a sample that would arrive before its predecessor is held
/// until the predecessor has arrived.
#[derive(Debug, Clone)]
pub struct Link {
    model: ChannelModel,
    rng: ChaCha8Rng,
    queue: VecDeque<InFlight>,
    last_delivery: f64,
    decoder: FrameDecoder,
    stats: LinkStats,
    raw_log: Option<String>,
}

impl Link {
    pub fn new(model: ChannelModel) -> Result<Self, LinkError> {
        model.validate()?;
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(model.seed),
            model,
            queue: VecDeque::new(),
            last_delivery: f64::NEG_INFINITY,
            decoder: FrameDecoder::new(),
            stats: LinkStats::default(),
            raw_log: None,
        })
    }

    /// Records `"<delivered_at> <hex>"` for every delivery.
    pub fn with_raw_log(mut self) -> Self {
        self.raw_log = Some(String::new());
        self
    }

    pub fn model(&self) -> &ChannelModel {
        &self.model
    }

    pub fn stats(&self) -> LinkStats {
        self.stats
    }

    pub fn raw_log(&self) -> Option<&str> {
        self.raw_log.as_deref()
    }

    pub fn in_flight(&self) -> usize {
        self.queue.len()
    }

    /// Queues `bytes` sent at `t`. Returns the delivery time, or `None` if dropped.
    pub fn send_bytes(&mut self, t: f64, bytes: &[u8]) -> Option<f64> {
        self.stats.sent += 1;
        let u: f64 = self.rng.random();
        let z: f64 = StandardNormal.sample(&mut self.rng);
        if u < self.model.drop_probability {
            self.stats.dropped += 1;
            return None;
        }
        let latency = (self.model.latency + self.model.jitter * z).max(0.0);
        let deliver_at = (t + latency).max(self.last_delivery);
        self.last_delivery = deliver_at;
        self.queue.push_back(InFlight {
            sent_at: t,
            deliver_at,
            bytes: bytes.to_vec(),
        });
        Some(deliver_at)
    }

    pub fn send(&mut self, t: f64, frame: &CommandFrame) -> Option<f64> {
        self.send_bytes(t, &frame.to_bytes())
    }

    /// Hands over everything due by `now` and decodes it.
    pub fn poll(&mut self, now: f64) -> Vec<Delivery> {
        let mut out = Vec::new();
        while self.queue.front().is_some_and(|f| f.deliver_at <= now + 1e-12) {
            let f = self.queue.pop_front().expect("front exists");
            self.stats.delivered += 1;
            if let Some(log) = &mut self.raw_log {
                let _ = writeln!(log, "{} {}", f.deliver_at, hex::encode_upper(&f.bytes));
            }
            let frames = self.decoder.feed(&f.bytes);
            out.push(Delivery {
                sent_at: f.sent_at,
                delivered_at: f.deliver_at,
                bytes: f.bytes,
                frames,
            });
        }
        let d = self.decoder.stats();
        self.stats.bad_checksum = d.bad_checksum;
        self.stats.bad_magic = d.bad_magic;
        self.stats.bad_kind = d.bad_kind;
        self.stats.skipped_bytes = d.skipped_bytes;
        self.stats.resyncs = d.resyncs;
        self.stats.frames_decoded = d.frames;
        out
    }
}
