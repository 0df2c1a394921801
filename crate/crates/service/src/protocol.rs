//! Wire format of the `/session` socket.
//!
//! Control frames are JSON text tagged by `type`. Audio frames are binary: an
//! 8-byte little-endian sequence number followed by little-endian `f32` mono
//! PCM, one render block per frame.

use std::collections::BTreeMap;

use lineharp_core::mixer::MixerStats;
use lineharp_core::session::LensSpec;
use lineharp_core::{LineSet, PluckFeedback};
use lineharp_core::audio_io::StreamStats;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientMessage {
    /// `t` is the client's clock in seconds; it only has to be monotone.
    Cursor { t: f64, x: f64, y: f64 },
    Lens {
        #[serde(default)]
        t: Option<f64>,
        #[serde(flatten)]
        lens: LensSpec,
    },
    Playback {
        #[serde(default)]
        t: Option<f64>,
    },
    Config(ConfigUpdate),
}

/// Fields left out are unchanged.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigUpdate {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dynamic_scaling: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub playback_spacing: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub highlight: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    Hello {
        dataset: DatasetSummary,
        sample_rate: u32,
        block_frames: usize,
    },
    Pluck(PluckFeedback),
    /// Echo of the lens now in effect.
    Lens { lens: LensSpec },
    Stats(ServiceStats),
    Error { message: String },
    /// Sent to a second client before the socket is closed.
    Busy { message: String },
}

impl ServerMessage {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("server messages serialize")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub lines: usize,
    pub clusters: BTreeMap<String, usize>,
    pub metadata: BTreeMap<String, String>,
}

impl DatasetSummary {
    pub fn of(set: &LineSet) -> Self {
        Self {
            lines: set.len(),
            clusters: set.cluster_sizes(),
            metadata: set.metadata.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ServiceStats {
    pub mixer: MixerStats,
    pub stream: StreamStats,
    /// Blocks the network side never sent.
    pub dropped_blocks: u64,
    /// Missing sequence numbers observed by the connected client's sender.
    pub sequence_gaps: u64,
    pub connected: bool,
    pub connections: u64,
    pub session_warnings: u64,
}

pub fn encode_audio_frame(seq: u64, block: &[f32]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + 4 * block.len());
    out.extend_from_slice(&seq.to_le_bytes());
    for s in block {
        out.extend_from_slice(&s.to_le_bytes());
    }
    out
}

/// Splits a binary frame into its sequence number and samples.
pub fn decode_audio_frame(bytes: &[u8]) -> Option<(u64, Vec<f32>)> {
    if bytes.len() < 8 || !(bytes.len() - 8).is_multiple_of(4) {
        return None;
    }
    let seq = u64::from_le_bytes(bytes[..8].try_into().ok()?);
    let samples = bytes[8..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Some((seq, samples))
}
