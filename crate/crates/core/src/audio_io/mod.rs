//! WAV encoding, offline session rendering and real-time block streaming.

mod render;
mod stream;
mod wav;

use thiserror::Error;

pub use render::{render_offline, RenderOutput, RenderSpec, MAX_TAIL_SECONDS};
pub use stream::{stream_realtime, BlockSink, Pacing, StreamConfig, StreamHandle, StreamStats};
pub use wav::{decode_wav, encode_wav, read_wav_file, DecodedWav, SampleFormat};

#[derive(Debug, Error)]
pub enum AudioError {
    #[error("invalid render spec: {0}")]
    InvalidSpec(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("wav: {0}")]
    Wav(#[from] hound::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
