//! Always-on render thread and the block queues between it and the socket.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use crossbeam_queue::ArrayQueue;
use lineharp_core::audio_io::{stream_realtime, AudioError, Pacing, StreamConfig, StreamHandle, StreamStats};
use lineharp_core::{ActiveNoteBuffer, MixerConfig, MixerStats, TriggerHandle};

/// Rendered blocks waiting for the network side, about 370 ms at defaults.
const QUEUE_BLOCKS: usize = 64;

pub(crate) struct Block {
    pub seq: u64,
    pub samples: Vec<f32>,
}

struct Queues {
    /// Empty buffers; the render thread never allocates.
    free: ArrayQueue<Vec<f32>>,
    full: ArrayQueue<Block>,
    dropped: AtomicU64,
}

pub(crate) struct Engine {
    trigger: TriggerHandle,
    stream: StreamHandle,
    queues: Arc<Queues>,
    pub sample_rate: f64,
    pub block_frames: usize,
}

impl Engine {
    pub fn start(mixer: MixerConfig, block_frames: usize) -> Result<Self, AudioError> {
        let queues = Arc::new(Queues {
            free: ArrayQueue::new(QUEUE_BLOCKS + 1),
            full: ArrayQueue::new(QUEUE_BLOCKS),
            dropped: AtomicU64::new(0),
        });
        for _ in 0..=QUEUE_BLOCKS {
            let _ = queues.free.push(vec![0.0; block_frames]);
        }
        let sample_rate = mixer.sample_rate;
        let buffer = ActiveNoteBuffer::new(mixer);
        let trigger = buffer.handle();
        let sink = {
            let queues = Arc::clone(&queues);
            move |seq: u64, block: &[f32]| {
                let Some(mut samples) = queues.free.pop() else {
                    queues.dropped.fetch_add(1, Ordering::Relaxed);
                    return false;
                };
                samples.copy_from_slice(block);
                if let Some(stale) = queues.full.force_push(Block { seq, samples }) {
                    queues.dropped.fetch_add(1, Ordering::Relaxed);
                    let _ = queues.free.push(stale.samples);
                }
                true
            }
        };
        let stream = stream_realtime(
            buffer,
            sink,
            StreamConfig {
                block_frames,
                pacing: Pacing::RealTime,
            },
        )?;
        Ok(Self {
            trigger,
            stream,
            queues,
            sample_rate,
            block_frames,
        })
    }

    pub fn trigger(&self) -> &TriggerHandle {
        &self.trigger
    }

    pub fn mixer_stats(&self) -> MixerStats {
        self.trigger.stats()
    }

    pub fn stream_stats(&self) -> StreamStats {
        self.stream.stats()
    }

    pub fn dropped_blocks(&self) -> u64 {
        self.queues.dropped.load(Ordering::Relaxed)
    }

    /// Next rendered block, if any. Hand the buffer back with [`Engine::recycle`].
    pub fn next_block(&self) -> Option<Block> {
        self.queues.full.pop()
    }

    pub fn recycle(&self, samples: Vec<f32>) {
        let _ = self.queues.free.push(samples);
    }

    /// Drops every queued block, as when a new client connects.
    pub fn discard_backlog(&self) {
        while let Some(b) = self.queues.full.pop() {
            self.recycle(b.samples);
        }
    }
}
