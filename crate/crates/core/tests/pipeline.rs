use lineharp_core::analysis::{detect_onsets, pitch_contour, rms_envelope};
use lineharp_core::audio_io::{decode_wav, render_offline, RenderSpec, SampleFormat};
use lineharp_core::geometry::{find_crossings, CursorMove, Lens};
use lineharp_core::mapping::{angle_to_frequency, MappingConfig, Note};
use lineharp_core::model::presets::{TEASER_CLUSTERS, TEASER_SWEEP_Y};
use lineharp_core::model::{generate_dataset, Preset};
use lineharp_core::session::{Mode, Session};
use lineharp_core::{Importance, LineSet, Point2, Polyline, Trajectory};

const SR: u32 = 44100;

fn horizontal(id: i64, y: f64, beta: f64) -> Polyline {
    Polyline::new(id, vec![Point2::new(0.2, y), Point2::new(0.8, y)], Importance::Scalar(beta), None).unwrap()
}

fn vertical(id: i64, x: f64, beta: f64) -> Polyline {
    Polyline::new(id, vec![Point2::new(x, 0.2), Point2::new(x, 0.8)], Importance::Scalar(beta), None).unwrap()
}

fn float_spec() -> RenderSpec {
    RenderSpec {
        format: SampleFormat::Float32,
        ..RenderSpec::default()
    }
}

/// A single vertical move across `x = 0.5` at time `t`.
fn pluck_trajectory(t: f64) -> Trajectory {
    let mut traj = Trajectory::new();
    traj.push_move(t - 0.01, Point2::new(0.5, 0.9)).push_move(t, Point2::new(0.5, 0.1));
    traj
}

#[test]
fn empty_trajectory_renders_silence() {
    let set = LineSet::new(vec![horizontal(1, 0.5, 1.0)]).unwrap();
    let spec = RenderSpec {
        duration: 1.0,
        ..RenderSpec::default()
    };
    let out = render_offline(set, &Trajectory::new(), &MappingConfig::default(), &spec).unwrap();
    assert!(out.events.is_empty());
    let wav = decode_wav(&out.wav).unwrap();
    assert_eq!(wav.sample_rate, SR);
    assert_eq!(wav.channels, 1);
    assert!(wav.samples.len() as f64 >= SR as f64);
    assert!(wav.samples.iter().all(|&s| s == 0.0));
    assert_eq!(&out.wav[..4], b"RIFF");
    let riff_len = u32::from_le_bytes(out.wav[4..8].try_into().unwrap()) as usize;
    assert_eq!(riff_len + 8, out.wav.len());
}

#[test]
fn horizontal_pluck_sounds_at_geometric_mean() {
    let set = LineSet::new(vec![horizontal(1, 0.5, 1.0)]).unwrap();
    let out = render_offline(set, &pluck_trajectory(0.1), &MappingConfig::default(), &float_spec()).unwrap();
    assert_eq!(out.plucks().len(), 1);
    let f0 = pitch_contour(&out.samples, SR as f64).unwrap().median_f0(0.1, 0.6).unwrap();
    let want = (110.0f64 * 880.0).sqrt();
    assert!((f0 / want - 1.0).abs() <= 0.02, "{f0}");
}

#[test]
fn single_pluck_has_one_onset_on_time() {
    let set = LineSet::new(vec![horizontal(1, 0.5, 0.8)]).unwrap();
    for t in [0.1, 0.2337, 0.5] {
        let out = render_offline(set.clone(), &pluck_trajectory(t), &MappingConfig::default(), &float_spec()).unwrap();
        let onsets = detect_onsets(&out.samples, SR as f64);
        assert_eq!(onsets.len(), 1, "{onsets:?}");
        assert!((onsets[0] - t).abs() <= 0.010, "{} vs {t}", onsets[0]);
    }
}

#[test]
fn three_note_playback_is_evenly_spaced() {
    let lines = vec![vertical(1, 0.48, 0.5), vertical(2, 0.5, 0.9), vertical(3, 0.52, 0.2)];
    let set = LineSet::new(lines).unwrap();
    let mut session = Session::silent(set.clone(), MappingConfig::default());
    session.set_lens(Lens::new(Point2::new(0.5, 0.5), 0.1, 1.0, true).unwrap()).unwrap();
    let schedule = session.start_lens_playback(0.3).unwrap();
    let onsets: Vec<f64> = schedule.iter().map(|s| s.onset).collect();
    let amps: Vec<f64> = schedule.iter().map(|s| s.note.amplitude).collect();
    assert_eq!(onsets, vec![0.3, 0.35, 0.3 + 2.0 * 0.05]);
    assert_eq!(amps, vec![0.9, 0.5, 0.2]);
    assert_eq!(session.mode(), Mode::LensPlayback);

    let mut traj = Trajectory::new();
    traj.push_lens(0.0, Lens::new(Point2::new(0.5, 0.5), 0.1, 1.0, true).unwrap())
        .push_playback(0.3);
    let out = render_offline(set, &traj, &MappingConfig::default(), &float_spec()).unwrap();
    let detected = detect_onsets(&out.samples, SR as f64);
    assert_eq!(detected.len(), 3, "{detected:?}");
    for w in detected.windows(2) {
        assert!((w[1] - w[0] - 0.05).abs() <= 0.005, "{detected:?}");
    }
}

#[test]
fn empty_lens_schedules_nothing() {
    let set = LineSet::new(vec![vertical(1, 0.1, 0.5)]).unwrap();
    let mut session = Session::silent(set, MappingConfig::default());
    session.set_lens(Lens::new(Point2::new(0.8, 0.8), 0.05, 1.0, true).unwrap()).unwrap();
    assert!(session.start_lens_playback(0.0).unwrap().is_empty());
    assert_eq!(session.mode(), Mode::Lens);
}

#[test]
fn zero_threshold_mutes_all_but_zero_importance() {
    let set = LineSet::new(vec![vertical(1, 0.45, 0.0), vertical(2, 0.5, 0.01), vertical(3, 0.55, 1.0)]).unwrap();
    let lens = Lens::new(Point2::new(0.5, 0.5), 0.2, 0.0, true).unwrap();
    let mv = CursorMove::new(Point2::new(0.3, 0.5), Point2::new(0.7, 0.5), 0.0, 0.1);
    let kept: Vec<i64> = find_crossings(&mv, &set, Some(&lens)).iter().map(|c| c.line_id).collect();
    assert_eq!(kept, vec![1]);
    let open = Lens::new(Point2::new(0.5, 0.5), 0.2, 1.0, true).unwrap();
    assert_eq!(find_crossings(&mv, &set, Some(&open)).len(), 3);
}

#[test]
fn teaser_sweep_bursts_follow_cluster_order() {
    let set = generate_dataset(Preset::Teaser, 1);
    let traj = Trajectory::linear_sweep(Point2::new(0.0, TEASER_SWEEP_Y), Point2::new(1.0, TEASER_SWEEP_Y), 5.0, 60.0);
    let out = render_offline(set.clone(), &traj, &MappingConfig::default(), &RenderSpec::default()).unwrap();
    let duration = out.duration(SR);
    assert!((5.0..=7.0).contains(&duration), "{duration}");

    let plucks = out.plucks();
    let cluster = |id| set.get(id).and_then(|l| l.cluster.clone()).unwrap();
    let mut order: Vec<String> = Vec::new();
    for p in &plucks {
        let c = cluster(p.line_id);
        if c != "background" && order.last() != Some(&c) {
            order.push(c);
        }
    }
    let want: Vec<String> = TEASER_CLUSTERS.iter().map(|c| c.0.to_string()).collect();
    assert_eq!(order, want);
    let mut previous_end = f64::NEG_INFINITY;
    for (tag, _, _) in TEASER_CLUSTERS {
        let times: Vec<f64> = plucks.iter().filter(|p| cluster(p.line_id) == tag).map(|p| p.onset).collect();
        assert_eq!(times.len(), 30, "{tag}");
        let (start, end) = (times[0], times[times.len() - 1]);
        assert!(start > previous_end, "{tag} overlaps the previous burst");
        let inside = plucks
            .iter()
            .filter(|p| p.onset >= start && p.onset <= end && cluster(p.line_id) == "background")
            .count();
        assert!(inside < times.len(), "{tag}: {inside} background plucks inside the burst");
        previous_end = end;
    }
}

#[test]
fn first_move_only_places_the_cursor() {
    let mut session = Session::silent(generate_dataset(Preset::Grid, 0), MappingConfig::default());
    assert!(session.on_cursor_move(Point2::new(0.0, 0.5), 0.0).is_empty());
    assert!(session.cursor().is_some());
}

#[test]
fn renders_are_reproducible() {
    let set = generate_dataset(Preset::Overlap, 4);
    let mut traj = Trajectory::linear_sweep(Point2::new(0.2, 0.45), Point2::new(0.8, 0.55), 1.0, 60.0);
    traj.push_lens(1.1, Lens::new(Point2::new(0.5, 0.5), 0.1, 1.0, true).unwrap())
        .push_playback(1.2);
    let a = render_offline(set.clone(), &traj, &MappingConfig::default(), &RenderSpec::default()).unwrap();
    let b = render_offline(set, &traj, &MappingConfig::default(), &RenderSpec::default()).unwrap();
    assert_eq!(a.wav, b.wav);
    assert_eq!(a.event_log_jsonl(), b.event_log_jsonl());
}

#[test]
fn pitch_is_shift_invariant() {
    let set = LineSet::new(vec![horizontal(1, 0.5, 1.0)]).unwrap();
    let out = render_offline(set, &pluck_trajectory(0.05), &MappingConfig::default(), &float_spec()).unwrap();
    let shift = (0.1 * SR as f64) as usize;
    let mut padded = vec![0.0f32; shift];
    padded.extend_from_slice(&out.samples);
    let a = pitch_contour(&out.samples, SR as f64).unwrap();
    let b = pitch_contour(&padded, SR as f64).unwrap();
    let mut compared = 0;
    let hop = 512.0 / SR as f64;
    for fa in a.frames.iter().filter(|f| f.t > 0.1) {
        // Frames sit on a fixed hop grid, so the shifted frame is the nearest one.
        let Some(fb) = b.frames.iter().find(|f| (f.t - fa.t - 0.1).abs() <= hop / 2.0) else {
            continue;
        };
        if let (Some(x), Some(y)) = (fa.f0, fb.f0) {
            assert!((x / y - 1.0).abs() <= 0.001, "t {}: {x} vs {y}", fa.t);
            compared += 1;
        }
    }
    assert!(compared > 10);
}

#[test]
fn steeper_lines_sound_higher() {
    let cfg = MappingConfig::default();
    let mut medians = Vec::new();
    for k in 0..5 {
        let theta = -std::f64::consts::FRAC_PI_2 + k as f64 * std::f64::consts::FRAC_PI_4;
        let f = angle_to_frequency(theta, &cfg).unwrap();
        let note = Note {
            frequency: f,
            amplitude: 0.8,
            decay: 0.8,
            line_id: k,
            onset: 0.0,
        };
        let mut v = lineharp_core::synth::spawn_voice(&note, SR as f64, &cfg).unwrap();
        let x = lineharp_core::synth::render_voice(&mut v, SR as usize / 2);
        medians.push(pitch_contour(&x, SR as f64).unwrap().median_f0(0.0, 0.5).unwrap());
    }
    assert!(medians.windows(2).all(|w| w[0] < w[1]), "{medians:?}");
}

#[test]
fn rms_of_constant_signal() {
    let env = rms_envelope(&vec![0.5f32; 8192], SR as f64);
    assert!(env.iter().all(|f| (f.rms - 0.5).abs() < 1e-6));
    assert!(rms_envelope(&vec![0.0f32; 4096], SR as f64).iter().all(|f| f.rms == 0.0));
}
