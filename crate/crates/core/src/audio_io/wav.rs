use std::io::Cursor;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::AudioError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleFormat {
    #[default]
    Pcm16,
    Float32,
}

impl FromStr for SampleFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pcm16" => Ok(Self::Pcm16),
            "float32" => Ok(Self::Float32),
            other => Err(format!("unknown sample format '{other}' (expected pcm16 or float32)")),
        }
    }
}

impl std::fmt::Display for SampleFormat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Pcm16 => "pcm16",
            Self::Float32 => "float32",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodedWav {
    /// Mono samples; multichannel input is averaged.
    pub samples: Vec<f32>,
    pub sample_rate: u32,
    pub channels: u16,
    pub format: SampleFormat,
}

/// Mono RIFF/WAVE bytes.
pub fn encode_wav(samples: &[f32], sample_rate: u32, format: SampleFormat) -> Result<Vec<u8>, AudioError> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate,
        bits_per_sample: match format {
            SampleFormat::Pcm16 => 16,
            SampleFormat::Float32 => 32,
        },
        sample_format: match format {
            SampleFormat::Pcm16 => hound::SampleFormat::Int,
            SampleFormat::Float32 => hound::SampleFormat::Float,
        },
    };
    let mut cursor = Cursor::new(Vec::with_capacity(44 + samples.len() * 4));
    {
        let mut writer = hound::WavWriter::new(&mut cursor, spec)?;
        match format {
            SampleFormat::Pcm16 => {
                let mut w = writer.get_i16_writer(samples.len() as u32);
                for &s in samples {
                    w.write_sample((s.clamp(-1.0, 1.0) * i16::MAX as f32).round() as i16);
                }
                w.flush()?;
            }
            SampleFormat::Float32 => {
                for &s in samples {
                    writer.write_sample(s)?;
                }
            }
        }
        writer.finalize()?;
    }
    Ok(cursor.into_inner())
}

pub fn decode_wav(bytes: &[u8]) -> Result<DecodedWav, AudioError> {
    let reader = hound::WavReader::new(Cursor::new(bytes))?;
    decode(reader)
}

pub fn read_wav_file(path: impl AsRef<Path>) -> Result<DecodedWav, AudioError> {
    decode(hound::WavReader::open(path)?)
}

fn decode<R: std::io::Read>(reader: hound::WavReader<R>) -> Result<DecodedWav, AudioError> {
    let spec = reader.spec();
    let channels = spec.channels.max(1);
    let (interleaved, format): (Vec<f32>, SampleFormat) = match spec.sample_format {
        hound::SampleFormat::Float => (
            reader.into_samples::<f32>().collect::<Result<_, _>>()?,
            SampleFormat::Float32,
        ),
        hound::SampleFormat::Int => {
            let scale = 1.0 / (1u64 << (spec.bits_per_sample - 1)) as f32;
            (
                reader
                    .into_samples::<i32>()
                    .map(|s| s.map(|v| v as f32 * scale))
                    .collect::<Result<_, _>>()?,
                SampleFormat::Pcm16,
            )
        }
    };
    let samples = interleaved
        .chunks(channels as usize)
        .map(|frame| frame.iter().sum::<f32>() / frame.len() as f32)
        .collect();
    Ok(DecodedWav {
        samples,
        sample_rate: spec.sample_rate,
        channels,
        format,
    })
}
