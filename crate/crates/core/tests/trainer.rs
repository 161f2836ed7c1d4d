use cp3::eval::{metrics, ConfusionCounts};
use cp3::io::{save_model, GroundTruth, GroundTruthFrame};
use cp3::synth::{Event, Rect, SceneSpec};
use cp3::trainer::{CorrelationRows, LumaSeries};
use cp3::{train, train_with, Coord, Error, Frame, ModelParams, TrainOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

fn noise_frames(w: usize, h: usize, c: usize, t: usize, seed: u64) -> Vec<Frame<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..t)
        .map(|_| Frame::new(w, h, c, (0..w * h * c).map(|_| rng.gen_range(0.0..255.0)).collect()).unwrap())
        .collect()
}

/// Flat noisy scene with one oscillating block, so some pixels have real
/// correlation structure and the rest take the fallback path.
fn mixed_scene(channels: usize) -> Vec<Frame<f64>> {
    let scene = SceneSpec {
        width: 24,
        height: 20,
        channels,
        frame_count: 60,
        seed: 11,
        events: vec![Event::PeriodicRegion { rect: Rect { x: 4, y: 4, w: 10, h: 8 }, amplitude: 25.0, period: 15.0 }],
        ..SceneSpec::default()
    };
    cp3::synth::generate::<f64>(&scene).unwrap().into_iter().map(|(f, _)| f).collect()
}

fn mixed_params() -> ModelParams {
    ModelParams { k_supports: 6, training_frames: 60, seed: 3, ..ModelParams::default() }
}

#[test]
fn strided_rows_match_brute_force() {
    let frames = noise_frames(12, 10, 3, 40, 5);
    let luma: Vec<Vec<f64>> = (0..120).map(|i| frames.iter().map(|f| f.luma_at(i)).collect()).collect();
    let rows = CorrelationRows::new(&LumaSeries::from_frames(&frames).unwrap());
    for stride in [1, 2, 3] {
        for target in [Coord::new(0, 0), Coord::new(5, 7), Coord::new(11, 9)] {
            let row = rows.row(target, stride);
            let expect: Vec<Coord> = (0..10)
                .step_by(stride)
                .flat_map(|v| (0..12).step_by(stride).map(move |u| Coord::new(u, v)))
                .filter(|&q| q != target)
                .collect();
            assert_eq!(row.iter().map(|(q, _)| *q).collect::<Vec<_>>(), expect);
            for (q, g) in row {
                let oracle = pearson(&luma[target.index(12)], &luma[q.index(12)]);
                assert!((g - oracle).abs() <= 1e-10, "{target} -> {q}: {g} vs {oracle}");
            }
        }
    }
}

#[test]
fn correlation_is_symmetric() {
    let frames = noise_frames(9, 7, 1, 30, 8);
    let rows = CorrelationRows::new(&LumaSeries::from_frames(&frames).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..200 {
        let (a, b) = (rng.gen_range(0..63), rng.gen_range(0..63));
        assert_eq!(rows.gamma(a, b), rows.gamma(b, a));
    }
}

#[test]
fn supports_clear_the_floor_unless_fallback() {
    let frames = mixed_scene(1);
    let t = train_with(&frames, &mixed_params(), TrainOptions::default()).unwrap();
    let fallback = t.selections.iter().filter(|s| s.fallback).count();
    assert!(fallback > 0 && fallback < t.selections.len(), "{fallback} fallbacks");
    for (idx, s) in t.selections.iter().enumerate() {
        assert_eq!(s.support_gammas.len(), 6);
        if !s.fallback {
            for g in &s.support_gammas {
                assert!(*g >= s.threshold, "pixel {idx}: {g} < {}", s.threshold);
            }
        }
    }
    // Pixels of the oscillating block find their supports inside it.
    let owner = Coord::new(8, 8);
    let pm = t.model.pixel(owner);
    assert!(!t.selections[owner.index(24)].fallback);
    for pair in &pm.pairs {
        assert!((4..14).contains(&pair.q.u) && (4..12).contains(&pair.q.v), "support {}", pair.q);
    }
}

#[test]
fn pair_statistics_match_two_pass_oracle() {
    let frames = mixed_scene(3);
    let params = mixed_params();
    let model = train(&frames, &params).unwrap();
    let t = frames.len() as f64;
    for idx in (0..24 * 20).step_by(7) {
        let owner = Coord::from_index(idx, 24);
        let pm = model.pixel(owner);
        for pair in &pm.pairs {
            let devs: Vec<[f64; 3]> = frames
                .iter()
                .map(|f| {
                    let (p, q) = (f.pixel(owner), f.pixel(pair.q));
                    [p[0] - q[0], p[1] - q[1], p[2] - q[2]]
                })
                .collect();
            let mean: Vec<f64> = (0..3).map(|c| devs.iter().map(|d| d[c]).sum::<f64>() / t).collect();
            for c in 0..3 {
                assert!((pair.delta[c] - mean[c]).abs() <= 1e-9);
            }
            for i in 0..3 {
                for j in 0..3 {
                    let cov = devs.iter().map(|d| (d[i] - mean[i]) * (d[j] - mean[j])).sum::<f64>() / (t - 1.0);
                    let expect = cov + if i == j { params.cov_epsilon } else { 0.0 };
                    assert!((pair.sigma_at(i, j) - expect).abs() <= 1e-9, "sigma[{i}][{j}]");
                }
            }
        }
        for c in 0..3 {
            let series: Vec<f64> = frames.iter().map(|f| f.pixel(owner)[c]).collect();
            assert_eq!(pm.range_lo[c], series.iter().cloned().fold(f64::INFINITY, f64::min));
            assert_eq!(pm.range_hi[c], series.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
        }
    }
}

#[test]
fn same_seed_same_model_any_thread_count() {
    let frames = mixed_scene(1);
    let params = mixed_params();
    let run = |n: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
        save_model(&pool.install(|| train(&frames, &params).unwrap()))
    };
    let a = run(1);
    assert_eq!(a, run(1));
    assert_eq!(a, run(4));
    let other = save_model(&train(&frames, &ModelParams { seed: 4, ..params }).unwrap());
    assert_ne!(a, other);
}

#[test]
fn uniform_noise_trains_by_fallback_and_stays_quiet() {
    let scene = SceneSpec { width: 32, height: 32, frame_count: 100, seed: 21, ..SceneSpec::default() };
    let frames: Vec<Frame<f64>> = cp3::synth::generate(&scene).unwrap().into_iter().map(|(f, _)| f).collect();
    let t = train_with(&frames, &ModelParams::default(), TrainOptions::default()).unwrap();
    assert!(t.selections.iter().all(|s| s.fallback));
    let mask = t.model.classify(&frames[50]).unwrap();
    let gt = GroundTruthFrame::filled(32, 32, GroundTruth::Background).unwrap();
    let mut c = ConfusionCounts::default();
    c.accumulate(&mask, &gt).unwrap();
    let fpr = metrics(&c).unwrap().fpr.unwrap();
    assert!(fpr < 0.05, "fpr {fpr}");
}

#[test]
fn co_varying_regions_give_unit_correlation() {
    // Left half is s(t), right half 2 s(t) - 145: perfectly correlated, no noise.
    let (w, h, n) = (10usize, 6usize, 40usize);
    let frames: Vec<Frame<f64>> = (0..n)
        .map(|t| {
            let s = 100.0 + 30.0 * (t as f64 * 0.7).sin();
            let samples = (0..w * h).map(|i| if i % w < w / 2 { s } else { 2.0 * s + 5.0 - 150.0 }).collect();
            Frame::new(w, h, 1, samples).unwrap()
        })
        .collect();
    let params = ModelParams { k_supports: 5, training_frames: n, ..ModelParams::default() };
    let t = train_with(&frames, &params, TrainOptions::default()).unwrap();
    let owner = Coord::new(1, 2);
    let sel = &t.selections[owner.index(w)];
    assert!(!sel.fallback);
    for g in &sel.support_gammas {
        assert!((g - 1.0).abs() <= 1e-12, "gamma {g}");
    }
    // Selection does not care which half a support sits in.
    let crosses = (0..w * h)
        .filter(|i| i % w < w / 2)
        .flat_map(|i| t.model.pixels()[i].pairs.iter())
        .any(|p| p.q.u as usize >= w / 2);
    assert!(crosses);
}

#[test]
fn training_errors_name_the_pixel() {
    let frames = noise_frames(2, 2, 1, 10, 1);
    let params = ModelParams { k_supports: 5, training_frames: 10, ..ModelParams::default() };
    match train(&frames, &params) {
        Err(Error::Training { u, v, source }) => {
            assert_eq!((u, v), (0, 0));
            assert!(matches!(*source, Error::InsufficientCandidates { .. }), "{source}");
        }
        other => panic!("unexpected {other:?}"),
    }
    let short = ModelParams { training_frames: 20, ..params };
    assert!(matches!(train(&frames, &short), Err(Error::InsufficientData(_))));
}

/// Every pair after `step` equals the recursive mean/covariance update
/// applied by an independent scalar loop.
fn check_step_against_oracle(frame: &Frame<f64>, model: &mut cp3::Model) {
    let before = model.clone();
    let alpha = model.params().alpha;
    model.step(frame).unwrap();
    let w = model.width();
    for idx in 0..w * model.height() {
        let owner = Coord::from_index(idx, w);
        for (old, new) in before.pixel(owner).pairs.iter().zip(&model.pixel(owner).pairs) {
            let mut delta = [0.0; 3];
            let mut r = [0.0; 3];
            for c in 0..3 {
                let dev = frame.pixel(owner)[c] - frame.pixel(old.q)[c];
                delta[c] = alpha * dev + (1.0 - alpha) * old.delta[c];
                r[c] = dev - delta[c];
                assert!((new.delta[c] - delta[c]).abs() <= 1e-12);
            }
            for i in 0..3 {
                for j in i..3 {
                    let expect = alpha * r[i] * r[j] + (1.0 - alpha) * old.sigma_at(i, j);
                    assert!((new.sigma_at(i, j) - expect).abs() <= 1e-9);
                }
            }
        }
    }
}

#[test]
fn step_update_matches_scalar_oracle() {
    let frames = mixed_scene(3);
    let mut model = train(&frames, &mixed_params()).unwrap();
    // Integer-valued frame, then a fractional one: both pixel access paths.
    check_step_against_oracle(&frames[10], &mut model);
    let mut shifted = frames[20].clone();
    for x in shifted.samples_mut() {
        *x += 0.375;
    }
    check_step_against_oracle(&shifted, &mut model);
}

#[test]
fn single_precision_training_tracks_double() {
    let frames = mixed_scene(1);
    let params = mixed_params();
    let m64 = train(&frames, &params).unwrap();
    let frames32: Vec<Frame<f32>> = frames.iter().map(|f| f.cast()).collect();
    let m32 = train(&frames32, &params).unwrap();
    let mut same_supports = 0;
    for (a, b) in m64.pixels().iter().zip(m32.pixels()) {
        if a.pairs.iter().map(|p| p.q).eq(b.pairs.iter().map(|p| p.q)) {
            same_supports += 1;
        }
        assert_eq!(a.range_lo[0] as f32, b.range_lo[0]);
    }
    assert!(same_supports * 10 >= m64.pixels().len() * 9, "{same_supports}");
}
