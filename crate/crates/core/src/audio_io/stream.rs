use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::AudioError;
use crate::mixer::ActiveNoteBuffer;

/// Destination of rendered blocks. Called from the render thread only and must
/// not block.
pub trait BlockSink: Send + 'static {
    /// Returns `false` when the block could not be taken.
    fn push_block(&mut self, seq: u64, block: &[f32]) -> bool;
}

impl<F> BlockSink for F
where
    F: FnMut(u64, &[f32]) -> bool + Send + 'static,
{
    fn push_block(&mut self, seq: u64, block: &[f32]) -> bool {
        self(seq, block)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pacing {
    /// One block per block period of wall-clock time.
    RealTime,
    /// Renders this many blocks back to back, then stops.
    Virtual { blocks: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamConfig {
    pub block_frames: usize,
    pub pacing: Pacing,
}

impl Default for StreamConfig {
    fn default() -> Self {
        Self {
            block_frames: 256,
            pacing: Pacing::RealTime,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StreamStats {
    pub blocks: u64,
    /// Deadlines missed; each one is filled with a silent block.
    pub underruns: u64,
    /// Blocks the sink refused.
    pub sink_rejections: u64,
}

#[derive(Default)]
struct Counters {
    blocks: AtomicU64,
    underruns: AtomicU64,
    sink_rejections: AtomicU64,
}

impl Counters {
    fn snapshot(&self) -> StreamStats {
        StreamStats {
            blocks: self.blocks.load(Ordering::Relaxed),
            underruns: self.underruns.load(Ordering::Relaxed),
            sink_rejections: self.sink_rejections.load(Ordering::Relaxed),
        }
    }
}

/// Control handle for a running stream. Dropping it stops the stream.
pub struct StreamHandle {
    stop: Arc<AtomicBool>,
    counters: Arc<Counters>,
    thread: Option<JoinHandle<ActiveNoteBuffer>>,
}

impl std::fmt::Debug for StreamHandle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("StreamHandle").field("stats", &self.stats()).finish()
    }
}

impl StreamHandle {
    pub fn stats(&self) -> StreamStats {
        self.counters.snapshot()
    }

    pub fn stop(&self) {
        self.stop.store(true, Ordering::Relaxed);
    }

    pub fn is_finished(&self) -> bool {
        self.thread.as_ref().is_none_or(|t| t.is_finished())
    }

    /// Stops the stream and returns the mixer with its final stats.
    pub fn join(mut self) -> (ActiveNoteBuffer, StreamStats) {
        self.stop();
        let buffer = self
            .thread
            .take()
            .expect("stream thread joined once")
            .join()
            .expect("render thread panicked");
        (buffer, self.counters.snapshot())
    }

    /// Waits for a virtually paced stream to finish on its own.
    pub fn wait(mut self) -> (ActiveNoteBuffer, StreamStats) {
        let buffer = self
            .thread
            .take()
            .expect("stream thread joined once")
            .join()
            .expect("render thread panicked");
        (buffer, self.counters.snapshot())
    }
}

impl Drop for StreamHandle {
    fn drop(&mut self) {
        self.stop();
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

/// Moves `buffer` onto a render thread that feeds `sink` one block at a time.
pub fn stream_realtime<S: BlockSink>(
    mut buffer: ActiveNoteBuffer,
    mut sink: S,
    cfg: StreamConfig,
) -> Result<StreamHandle, AudioError> {
    if !(cfg.block_frames.is_power_of_two() && (64..=4096).contains(&cfg.block_frames)) {
        return Err(AudioError::InvalidSpec(format!(
            "block size {} must be a power of two in [64, 4096]",
            cfg.block_frames
        )));
    }
    let stop = Arc::new(AtomicBool::new(false));
    let counters = Arc::new(Counters::default());
    let period = Duration::from_secs_f64(cfg.block_frames as f64 / buffer.config().sample_rate);
    let thread = {
        let stop = Arc::clone(&stop);
        let counters = Arc::clone(&counters);
        std::thread::Builder::new()
            .name("lineharp-render".into())
            .spawn(move || {
                let mut block = vec![0.0f32; cfg.block_frames];
                let silence = vec![0.0f32; cfg.block_frames];
                let mut seq = 0u64;
                let mut deadline = Instant::now();
                let emit = |seq: &mut u64, data: &[f32], sink: &mut S| {
                    if !sink.push_block(*seq, data) {
                        counters.sink_rejections.fetch_add(1, Ordering::Relaxed);
                    }
                    *seq += 1;
                    counters.blocks.fetch_add(1, Ordering::Relaxed);
                };
                while !stop.load(Ordering::Relaxed) {
                    match cfg.pacing {
                        Pacing::Virtual { blocks } if seq >= blocks => break,
                        Pacing::Virtual { .. } => {}
                        Pacing::RealTime => {
                            let now = Instant::now();
                            if now > deadline + period {
                                counters.underruns.fetch_add(1, Ordering::Relaxed);
                                emit(&mut seq, &silence, &mut sink);
                                deadline = now;
                            } else {
                                while Instant::now() < deadline {
                                    if stop.load(Ordering::Relaxed) {
                                        return buffer;
                                    }
                                    let left = deadline.saturating_duration_since(Instant::now());
                                    std::thread::sleep(left.min(Duration::from_millis(2)));
                                }
                            }
                            deadline += period;
                        }
                    }
                    buffer.render_block(&mut block);
                    emit(&mut seq, &block, &mut sink);
                }
                buffer
            })?
    };
    Ok(StreamHandle {
        stop,
        counters,
        thread: Some(thread),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mapping::Note;
    use crate::mixer::MixerConfig;
    use std::sync::Mutex;

    fn collector() -> (Arc<Mutex<Vec<f32>>>, impl BlockSink) {
        let store = Arc::new(Mutex::new(Vec::new()));
        let s = Arc::clone(&store);
        let mut expected = 0u64;
        let sink = move |seq: u64, block: &[f32]| {
            assert_eq!(seq, expected);
            expected += 1;
            s.lock().unwrap().extend_from_slice(block);
            true
        };
        (store, sink)
    }

    #[test]
    fn virtual_stream_matches_direct_render() {
        let note = Note {
            frequency: 330.0,
            amplitude: 0.7,
            decay: 0.3,
            line_id: 4,
            onset: 0.0,
        };
        let mut direct = ActiveNoteBuffer::new(MixerConfig::default());
        direct.handle().trigger_at(&[note], 300);
        let mut expected = vec![0.0f32; 256 * 40];
        for chunk in expected.chunks_mut(256) {
            direct.render_block(chunk);
        }

        let buffer = ActiveNoteBuffer::new(MixerConfig::default());
        buffer.handle().trigger_at(&[note], 300);
        let (store, sink) = collector();
        let handle = stream_realtime(
            buffer,
            sink,
            StreamConfig {
                block_frames: 256,
                pacing: Pacing::Virtual { blocks: 40 },
            },
        )
        .unwrap();
        let (_, stats) = handle.wait();
        assert_eq!(stats.blocks, 40);
        assert_eq!(*store.lock().unwrap(), expected);
    }

    #[test]
    fn realtime_stops_promptly() {
        let buffer = ActiveNoteBuffer::new(MixerConfig::default());
        let (store, sink) = collector();
        let handle = stream_realtime(buffer, sink, StreamConfig::default()).unwrap();
        std::thread::sleep(Duration::from_millis(100));
        let t = Instant::now();
        let (_, stats) = handle.join();
        assert!(t.elapsed() < Duration::from_millis(50));
        assert!(stats.blocks >= 10, "{stats:?}");
        assert!(store.lock().unwrap().iter().all(|&s| s == 0.0));
    }

    #[test]
    fn bad_block_size() {
        let buffer = ActiveNoteBuffer::new(MixerConfig::default());
        let cfg = StreamConfig {
            block_frames: 300,
            pacing: Pacing::RealTime,
        };
        assert!(stream_realtime(buffer, |_: u64, _: &[f32]| true, cfg).is_err());
    }
}
