//! `lineharp` command-line front end.
//!
//! Exit codes: 0 success, 2 usage or input error, 3 validation error.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use lineharp_core::analysis::{
    detect_onsets, onsets_to_json, pitch_contour, rms_envelope, rms_to_csv, AnalysisError, PitchContour,
};
use lineharp_core::audio_io::{read_wav_file, render_offline, AudioError, RenderSpec, SampleFormat};
use lineharp_core::model::{generate_dataset, ModelError};
use lineharp_core::{LineSet, MappingConfig, Point2, Preset, Trajectory};
use lineharp_service::{Service, ServiceConfig, ServiceError};

#[derive(Parser)]
#[command(name = "lineharp", version, about = "Plucked-string sonification of dense line charts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic dataset as canonical JSON.
    Generate {
        /// teaser, overlap or grid.
        #[arg(long, env = "LINEHARP_PRESET")]
        preset: Preset,
        #[arg(long, env = "LINEHARP_SEED", default_value_t = 1)]
        seed: u64,
        #[arg(long, env = "LINEHARP_OUT")]
        out: PathBuf,
    },
    /// Write a straight-line cursor trajectory.
    Sweep {
        /// Start point as `x,y`.
        #[arg(long, env = "LINEHARP_FROM", value_parser = parse_point, default_value = "0,0.5")]
        from: Point2,
        /// End point as `x,y`.
        #[arg(long, env = "LINEHARP_TO", value_parser = parse_point, default_value = "1,0.5")]
        to: Point2,
        /// Seconds from first to last move.
        #[arg(long, env = "LINEHARP_DURATION", default_value_t = 5.0)]
        duration: f64,
        /// Move events per second.
        #[arg(long, env = "LINEHARP_RATE", default_value_t = 60.0)]
        rate: f64,
        #[arg(long, env = "LINEHARP_OUT")]
        out: PathBuf,
    },
    /// Render a trajectory over a dataset to WAV plus `<out>.events.jsonl`.
    Render {
        #[arg(long, env = "LINEHARP_DATA")]
        data: PathBuf,
        #[arg(long, env = "LINEHARP_TRAJECTORY")]
        trajectory: PathBuf,
        #[arg(long, env = "LINEHARP_OUT")]
        out: PathBuf,
        /// Sample rate, 44100 or 48000.
        #[arg(long, env = "LINEHARP_SR", default_value_t = 44100)]
        sr: u32,
        /// pcm16 or float32.
        #[arg(long, env = "LINEHARP_FORMAT", default_value_t = SampleFormat::Pcm16)]
        format: SampleFormat,
        /// Frames per render block, a power of two in [64, 4096].
        #[arg(long, env = "LINEHARP_BLOCK", default_value_t = 256)]
        block: usize,
        /// Minimum output length, seconds.
        #[arg(long, env = "LINEHARP_DURATION", default_value_t = 0.0)]
        duration: f64,
        /// Disable amplitude and decay scaling (ablation).
        #[arg(long, env = "LINEHARP_NO_DYNAMIC_SCALING")]
        no_dynamic_scaling: bool,
        #[command(flatten)]
        mapping: MappingArgs,
    },
    /// Write `<prefix>.f0.csv`, `<prefix>.rms.csv` and `<prefix>.onsets.json`.
    Analyze {
        #[arg(long, env = "LINEHARP_WAV")]
        wav: PathBuf,
        #[arg(long, env = "LINEHARP_OUT_PREFIX")]
        out_prefix: PathBuf,
    },
    /// Serve a dataset over WebSocket until interrupted.
    Serve {
        #[arg(long, env = "LINEHARP_DATA")]
        data: PathBuf,
        #[arg(long, env = "LINEHARP_HOST", default_value = "127.0.0.1")]
        host: String,
        /// 0 picks a free port.
        #[arg(long, env = "LINEHARP_PORT", default_value_t = 8080)]
        port: u16,
        /// Sample rate, 44100 or 48000.
        #[arg(long, env = "LINEHARP_SR", default_value_t = 44100)]
        sr: u32,
        /// Frames per audio frame, a power of two in [64, 4096].
        #[arg(long, env = "LINEHARP_BLOCK", default_value_t = 256)]
        block: usize,
        /// Seconds between unsolicited stats frames; 0 disables them.
        #[arg(long, env = "LINEHARP_STATS_INTERVAL", default_value_t = 1.0)]
        stats_interval: f64,
        /// Disable amplitude and decay scaling (ablation).
        #[arg(long, env = "LINEHARP_NO_DYNAMIC_SCALING")]
        no_dynamic_scaling: bool,
        #[command(flatten)]
        mapping: MappingArgs,
    },
}

#[derive(Args)]
struct MappingArgs {
    /// Frequency of a straight-down segment, Hz.
    #[arg(long, env = "LINEHARP_F_MIN", default_value_t = MappingConfig::default().f_min)]
    f_min: f64,
    /// Frequency of a straight-up segment, Hz.
    #[arg(long, env = "LINEHARP_F_MAX", default_value_t = MappingConfig::default().f_max)]
    f_max: f64,
    /// Linear attack, seconds.
    #[arg(long, env = "LINEHARP_ATTACK", default_value_t = MappingConfig::default().attack)]
    attack: f64,
    /// Decay to -60 dB for a lone note, seconds.
    #[arg(long, env = "LINEHARP_DECAY_BASE", default_value_t = MappingConfig::default().decay_base)]
    decay_base: f64,
    /// Shortest decay under load, seconds.
    #[arg(long, env = "LINEHARP_DECAY_MIN", default_value_t = MappingConfig::default().decay_min)]
    decay_min: f64,
    /// Gain of an importance-zero note.
    #[arg(long, env = "LINEHARP_AMP_FLOOR", default_value_t = MappingConfig::default().amp_floor)]
    amp_floor: f64,
}

impl From<&MappingArgs> for MappingConfig {
    fn from(a: &MappingArgs) -> Self {
        MappingConfig {
            f_min: a.f_min,
            f_max: a.f_max,
            attack: a.attack,
            decay_base: a.decay_base,
            decay_min: a.decay_min,
            amp_floor: a.amp_floor,
        }
    }
}

fn parse_point(s: &str) -> Result<Point2, String> {
    let (x, y) = s.split_once(',').ok_or_else(|| format!("expected `x,y`, got `{s}`"))?;
    let coord = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("`{v}`: {e}"));
    let p = Point2::new(coord(x)?, coord(y)?);
    if !p.is_finite() {
        return Err(format!("`{s}` is not finite"));
    }
    Ok(p)
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl fmt::Display) -> Self {
        Self {
            code: 2,
            message: message.to_string(),
        }
    }

    fn invalid(message: impl fmt::Display) -> Self {
        Self {
            code: 3,
            message: message.to_string(),
        }
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate { preset, seed, out } => generate(preset, seed, &out),
        Command::Sweep {
            from,
            to,
            duration,
            rate,
            out,
        } => sweep(from, to, duration, rate, &out),
        Command::Render {
            data,
            trajectory,
            out,
            sr,
            format,
            block,
            duration,
            no_dynamic_scaling,
            mapping,
        } => {
            let spec = RenderSpec {
                sample_rate: sr,
                block_frames: block,
                duration,
                format,
                dynamic_scaling: !no_dynamic_scaling,
            };
            render(&data, &trajectory, &out, &(&mapping).into(), &spec)
        }
        Command::Analyze { wav, out_prefix } => analyze(&wav, &out_prefix),
        Command::Serve {
            data,
            host,
            port,
            sr,
            block,
            stats_interval,
            no_dynamic_scaling,
            mapping,
        } => {
            let cfg = ServiceConfig {
                mapping: (&mapping).into(),
                sample_rate: sr,
                block_frames: block,
                dynamic_scaling: !no_dynamic_scaling,
                stats_interval: (stats_interval > 0.0).then(|| Duration::from_secs_f64(stats_interval)),
            };
            serve(&data, &host, port, cfg)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("lineharp: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Outcome {
    fs::write(path, contents).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn generate(preset: Preset, seed: u64, out: &Path) -> Outcome {
    let set = generate_dataset(preset, seed);
    write(out, set.to_canonical_json())
}

fn sweep(from: Point2, to: Point2, duration: f64, rate: f64, out: &Path) -> Outcome {
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(Failure::invalid(format!("duration must be positive, got {duration}")));
    }
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(Failure::invalid(format!("rate must be positive, got {rate}")));
    }
    write(out, Trajectory::linear_sweep(from, to, duration, rate).to_json())
}

fn load_dataset(path: &Path) -> Result<LineSet, Failure> {
    let bytes = fs::read(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    LineSet::from_json(&bytes).map_err(|e| match e {
        ModelError::Io(_) => Failure::input(format!("{}: {e}", path.display())),
        _ => Failure::invalid(format!("{}: {e}", path.display())),
    })
}

fn load_trajectory(path: &Path) -> Result<Trajectory, Failure> {
    let bytes = fs::read(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    Trajectory::from_json(&bytes).map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))
}

/// `out.wav` → `out.wav.events.jsonl`.
fn sidecar(out: &Path, suffix: &str) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(suffix);
    PathBuf::from(name)
}

fn render(data: &Path, trajectory: &Path, out: &Path, mapping: &MappingConfig, spec: &RenderSpec) -> Outcome {
    let set = load_dataset(data)?;
    let traj = load_trajectory(trajectory)?;
    let rendered = render_offline(set, &traj, mapping, spec).map_err(|e| match e {
        AudioError::Io(_) => Failure::input(e),
        _ => Failure::invalid(e),
    })?;
    write(out, &rendered.wav)?;
    write(&sidecar(out, ".events.jsonl"), rendered.event_log_jsonl())?;
    let stats = serde_json::json!({
        "duration": rendered.duration(spec.sample_rate),
        "sample_rate": spec.sample_rate,
        "plucks": rendered.plucks().len(),
        "clip_events": rendered.stats.clip_events,
        "peak_pre_limiter": rendered.stats.peak_pre_limiter,
        "dropped": rendered.stats.dropped,
        "stolen": rendered.stats.stolen,
        "warnings": rendered.warnings,
        "dynamic_scaling": spec.dynamic_scaling,
    });
    println!("{stats}");
    Ok(())
}

fn analyze(wav: &Path, prefix: &Path) -> Outcome {
    let decoded = read_wav_file(wav).map_err(|e| Failure::input(format!("{}: {e}", wav.display())))?;
    let sr = decoded.sample_rate as f64;
    let contour = match pitch_contour(&decoded.samples, sr) {
        Ok(c) => c,
        Err(AnalysisError::WindowTooLong { .. }) => PitchContour { frames: Vec::new() },
        Err(e) => return Err(Failure::invalid(e)),
    };
    let rms = rms_envelope(&decoded.samples, sr);
    let onsets = detect_onsets(&decoded.samples, sr);
    write(&sidecar(prefix, ".f0.csv"), contour.to_csv())?;
    write(&sidecar(prefix, ".rms.csv"), rms_to_csv(&rms))?;
    write(&sidecar(prefix, ".onsets.json"), onsets_to_json(&onsets))?;
    let duration = decoded.samples.len() as f64 / sr;
    let summary = serde_json::json!({
        "duration": duration,
        "sample_rate": decoded.sample_rate,
        "median_f0": contour.median_f0(0.0, f64::INFINITY),
        "onsets": onsets.len(),
    });
    println!("{summary}");
    Ok(())
}

fn serve(data: &Path, host: &str, port: u16, cfg: ServiceConfig) -> Outcome {
    let set = load_dataset(data)?;
    let service = Service::new(set, cfg).map_err(|e| match e {
        ServiceError::Config(_) => Failure::invalid(e),
        _ => Failure::input(e),
    })?;
    let listener = std::net::TcpListener::bind((host, port))
        .map_err(|e| Failure::input(format!("cannot listen on {host}:{port}: {e}")))?;
    listener.set_nonblocking(true).map_err(Failure::input)?;
    let addr = listener.local_addr().map_err(Failure::input)?;
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(Failure::input)?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::from_std(listener).map_err(Failure::input)?;
        eprintln!("listening on http://{addr}");
        service
            .serve(listener, async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(Failure::input)
    })?;
    runtime.shutdown_timeout(Duration::from_millis(500));
    Ok(())
}
