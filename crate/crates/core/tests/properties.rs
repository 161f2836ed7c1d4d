use cp3::eval::{metrics, ConfusionCounts};
use cp3::io::{
    load_model, read_frame, read_mask, save_model, write_frame, write_mask, FramePattern, GroundTruth,
    GroundTruthFrame,
};
use cp3::synth::{Event, SceneSpec};
use cp3::{
    classify_pixel, pair_distance2, update_pair, update_range, BackgroundModel, Coord, Frame, Label, LabelMask,
    ModelParams, PairModel, PixelModel,
};
use proptest::prelude::*;

fn cholesky_ok(m: [[f64; 3]; 3]) -> bool {
    let mut l = [[0.0f64; 3]; 3];
    for i in 0..3 {
        for j in 0..=i {
            let mut s = m[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if i == j {
                if !(s > 0.0) {
                    return false;
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    true
}

fn dev3() -> impl Strategy<Value = [f64; 3]> {
    prop::array::uniform3(-255.0..255.0f64)
}

/// A 1-row scene: pixel 0 owns pairs to every other pixel.
fn row_model(
    k: usize,
    deltas: &[[f64; 3]],
    sigma: f64,
    lo: f64,
    hi: f64,
    params: ModelParams,
) -> (PixelModel<f64>, ModelParams) {
    let pairs = (0..k)
        .map(|i| {
            let mut p = PairModel::new(Coord::new(i as u32 + 1, 0));
            p.delta = deltas[i % deltas.len()];
            p.sigma = [sigma, 0.0, 0.0, sigma, 0.0, sigma];
            p
        })
        .collect();
    (PixelModel { pairs, range_lo: [lo; 3], range_hi: [hi; 3] }, ModelParams { k_supports: k, ..params })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn mean_update_closed_form(
        alpha in 0.001..0.5f64,
        t in 1usize..300,
        d in dev3(),
        gap in prop::array::uniform3(1.0..100.0f64),
    ) {
        let mut pair = PairModel::<f64>::new(Coord::new(1, 0));
        for i in 0..3 {
            pair.delta[i] = d[i] + gap[i];
        }
        for _ in 0..t {
            update_pair(&mut pair, &d, alpha);
        }
        let decay = (1.0 - alpha).powi(t as i32);
        for i in 0..3 {
            let expect = decay * gap[i];
            let got = (pair.delta[i] - d[i]).abs();
            // Rounding error is bounded by a few ulps of |d| per step.
            let tol = 1e-9 * expect + 1e-15 * (t as f64) * (d[i].abs() + gap[i]);
            prop_assert!((got - expect).abs() <= tol, "channel {i}: {got} vs {expect}");
        }
    }

    #[test]
    fn covariance_stays_symmetric_and_positive(
        alpha in 0.001..1.0f64,
        devs in prop::collection::vec(dev3(), 1..100),
    ) {
        let eps = 1e-3;
        let mut pair = PairModel::<f64>::new(Coord::new(1, 0));
        pair.sigma = [eps, 0.0, 0.0, eps, 0.0, eps];
        for d in &devs {
            update_pair(&mut pair, d, alpha);
            let m = pair.sigma_matrix(3);
            let mut reg = m;
            for i in 0..3 {
                for j in 0..3 {
                    prop_assert!((m[i][j] - m[j][i]).abs() <= 1e-12);
                }
                reg[i][i] += eps;
            }
            prop_assert!(cholesky_ok(reg));
        }
    }

    #[test]
    fn isotropic_distance_is_scaled_norm(
        dev in dev3(),
        delta in dev3(),
        var in 0.01..500.0f64,
        eps in 0.0..1.0f64,
        one in any::<bool>(),
    ) {
        let c = if one { 1 } else { 3 };
        let mut pair = PairModel::<f64>::new(Coord::new(1, 0));
        pair.delta = delta;
        pair.sigma = [var, 0.0, 0.0, var, 0.0, var];
        let got = pair_distance2(&dev[..c], &pair, eps).unwrap();
        let norm2: f64 = (0..c).map(|i| (dev[i] - delta[i]).powi(2)).sum();
        let expect = norm2 / (var + eps);
        prop_assert!((got - expect).abs() <= 1e-12 * expect.max(1.0), "{got} vs {expect}");
    }

    #[test]
    fn failing_fraction_non_increasing_in_c(
        samples in prop::collection::vec(0.0..255.0f64, 21),
        deltas in prop::collection::vec(prop::array::uniform3(-30.0..30.0f64), 20),
        sigma in 0.5..50.0f64,
        c_lo in 0.5..4.0f64,
        c_step in 0.0..3.0f64,
    ) {
        let frame = Frame::new(21, 1, 1, samples).unwrap();
        let (pm, base) = row_model(20, &deltas, sigma, 0.0, 255.0, ModelParams::default());
        let lo = classify_pixel(&pm, &frame, Coord::new(0, 0), &ModelParams { gauss_c: c_lo, ..base.clone() }).unwrap();
        let hi = classify_pixel(&pm, &frame, Coord::new(0, 0), &ModelParams { gauss_c: c_lo + c_step, ..base }).unwrap();
        prop_assert!(hi.failing_fraction <= lo.failing_fraction);
        prop_assert!(!(lo.label == Label::Background && hi.pair_foreground));
    }

    #[test]
    fn background_means_both_tests_passed(
        samples in prop::collection::vec(0.0..255.0f64, 21 * 3),
        deltas in prop::collection::vec(prop::array::uniform3(-60.0..60.0f64), 20),
        sigma in 0.5..200.0f64,
        lo in 0.0..200.0f64,
        width in 0.0..100.0f64,
        range_check in any::<bool>(),
        pf in 0.0..1.0f64,
    ) {
        let frame = Frame::new(21, 1, 3, samples).unwrap();
        let params = ModelParams { range_check_enabled: range_check, pf_threshold: pf, ..ModelParams::default() };
        let (pm, params) = row_model(20, &deltas, sigma, lo, lo + width, params);
        let v = classify_pixel(&pm, &frame, Coord::new(0, 0), &params).unwrap();
        if v.label == Label::Background {
            prop_assert!(!v.pair_foreground);
            prop_assert!(!v.range_foreground || !range_check);
            prop_assert!(v.failing_fraction <= pf);
        }
        if !range_check {
            prop_assert!(!v.range_foreground);
        }
    }

    #[test]
    fn range_update_brackets_or_tracks(
        lo in 0.0..200.0f64,
        width in 0.0..55.0f64,
        p in 0.0..255.0f64,
        alpha in 0.0..1.0f64,
    ) {
        let mut pm = PixelModel::<f64> { pairs: Vec::new(), range_lo: [lo; 3], range_hi: [lo + width; 3] };
        update_range(&mut pm, &[p], alpha);
        prop_assert!(pm.range_lo[0] <= pm.range_hi[0] + 1e-12);
        if p < lo {
            prop_assert_eq!(pm.range_lo[0], p);
        }
        if p > lo + width {
            prop_assert_eq!(pm.range_hi[0], p);
        }
    }

    #[test]
    fn pwc_scale_invariant(
        tp in 0u64..10_000, fp in 0u64..10_000, tn in 0u64..10_000, fn_ in 0u64..10_000,
        scale in 1u64..1000,
    ) {
        let c = ConfusionCounts { tp, fp, tn, fn_ };
        prop_assume!(c.total() > 0);
        let s = ConfusionCounts { tp: tp * scale, fp: fp * scale, tn: tn * scale, fn_: fn_ * scale };
        prop_assert_eq!(metrics(&c).unwrap().pwc, metrics(&s).unwrap().pwc);
    }

    #[test]
    fn metrics_complements_exact(
        tp in 0u64..10_000, fp in 0u64..10_000, tn in 0u64..10_000, fn_ in 0u64..10_000,
    ) {
        let c = ConfusionCounts { tp, fp, tn, fn_ };
        prop_assume!(c.total() > 0);
        let r = metrics(&c).unwrap();
        if let (Some(a), Some(b)) = (r.recall, r.fnr) {
            prop_assert_eq!(a + b, 1.0);
        }
        if let (Some(a), Some(b)) = (r.specificity, r.fpr) {
            prop_assert_eq!(a + b, 1.0);
        }
        for v in [r.recall, r.specificity, r.fpr, r.fnr, r.precision, r.f_measure].into_iter().flatten() {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        prop_assert!((0.0..=100.0).contains(&r.pwc.unwrap()));
    }

    #[test]
    fn counts_merge_is_associative_and_commutative(
        frames in prop::collection::vec(
            (prop::collection::vec(any::<bool>(), 64), prop::collection::vec(0usize..5, 64)),
            1..8,
        ),
    ) {
        let levels = [
            GroundTruth::Background,
            GroundTruth::Shadow,
            GroundTruth::OutsideRoi,
            GroundTruth::Unknown,
            GroundTruth::Foreground,
        ];
        let per_frame: Vec<ConfusionCounts> = frames
            .iter()
            .map(|(m, g)| {
                let mask = LabelMask::new(8, 8, m.iter().map(|&f| if f { Label::Foreground } else { Label::Background }).collect()).unwrap();
                let gt = GroundTruthFrame::new(8, 8, g.iter().map(|&i| levels[i]).collect()).unwrap();
                let mut c = ConfusionCounts::default();
                c.accumulate(&mask, &gt).unwrap();
                c
            })
            .collect();
        let serial = per_frame.iter().copied().fold(ConfusionCounts::default(), |a, b| a + b);
        let reversed: ConfusionCounts = per_frame.iter().rev().copied().sum();
        prop_assert_eq!(serial, reversed);
        if per_frame.len() >= 3 {
            let (a, b, c) = (per_frame[0], per_frame[1], per_frame[2]);
            prop_assert_eq!((a + b) + c, a + (b + c));
        }
        let mut running = ConfusionCounts::default();
        for c in &per_frame {
            let before = running;
            running += *c;
            prop_assert!(running.tp >= before.tp && running.fp >= before.fp && running.tn >= before.tn && running.fn_ >= before.fn_);
        }
    }

    #[test]
    fn groundtruth_levels_round_trip(i in 0usize..5, jitter in -20i32..=20) {
        let g = GroundTruth::LEVELS[i].1;
        prop_assert_eq!(GroundTruth::from_gray(g.gray_level() as f64), g);
        let v = (g.gray_level() as i32 + jitter).clamp(0, 255) as f64;
        let snapped = GroundTruth::from_gray(v);
        let nearest = GroundTruth::LEVELS
            .iter()
            .map(|(l, _)| (*l as f64 - v).abs())
            .fold(f64::INFINITY, f64::min);
        prop_assert_eq!((snapped.gray_level() as f64 - v).abs(), nearest);
    }

    #[test]
    fn frame_pattern_round_trip(prefix in "[a-z]{1,4}", digits in 1usize..9, index in 0usize..10_000) {
        let pattern: FramePattern = format!("{prefix}%0{digits}d.png").parse().unwrap();
        let name = pattern.format(index);
        prop_assert_eq!(pattern.parse_index(&name), Some(index));
        prop_assert_eq!(pattern.to_string().parse::<FramePattern>().unwrap(), pattern);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn model_round_trip_is_bit_exact(
        w in 2usize..6,
        h in 1usize..5,
        three in any::<bool>(),
        k in 1usize..4,
        values in prop::collection::vec(-1e6..1e6f64, 9 * 3 * 30),
        seed in any::<u64>(),
    ) {
        let c = if three { 3 } else { 1 };
        let mut it = values.iter().cycle();
        let params = ModelParams { k_supports: k, seed, ..ModelParams::default() };
        let pixels = (0..w * h)
            .map(|idx| {
                let pairs = (0..k)
                    .map(|j| {
                        let mut p = PairModel::new(Coord::from_index((idx + 1 + j) % (w * h), w));
                        if p.q == Coord::from_index(idx, w) {
                            p.q = Coord::from_index((idx + 1) % (w * h), w);
                        }
                        p.delta = std::array::from_fn(|_| *it.next().unwrap());
                        p.sigma = std::array::from_fn(|_| it.next().unwrap().abs());
                        p
                    })
                    .collect();
                let lo: [f64; 3] = std::array::from_fn(|_| *it.next().unwrap());
                PixelModel { pairs, range_lo: lo, range_hi: lo.map(|x| x + 1.0) }
            })
            .collect();
        let model = BackgroundModel::new(w, h, c, params, pixels).unwrap();
        let bytes = save_model(&model);
        let back = load_model::<f64>(&bytes).unwrap();
        prop_assert_eq!(&back, &model);
        prop_assert_eq!(save_model(&back), bytes);
    }

    #[test]
    fn image_round_trips_are_bit_exact(
        w in 1usize..20,
        h in 1usize..12,
        three in any::<bool>(),
        bytes in prop::collection::vec(any::<u8>(), 20 * 12 * 3),
        fg in prop::collection::vec(any::<bool>(), 20 * 12),
    ) {
        let c = if three { 3 } else { 1 };
        let dir = tempfile::tempdir().unwrap();
        let frame = Frame::<f64>::from_u8(w, h, c, &bytes[..w * h * c]).unwrap();
        let ext = if three { "ppm" } else { "pgm" };
        for name in [format!("f.{ext}"), "f.png".to_string()] {
            let p = dir.path().join(name);
            write_frame(&frame, &p).unwrap();
            prop_assert_eq!(read_frame::<f64>(&p).unwrap(), frame.clone());
        }
        let mask = LabelMask::new(w, h, fg[..w * h].iter().map(|&f| if f { Label::Foreground } else { Label::Background }).collect()).unwrap();
        for name in ["m.pgm", "m.png"] {
            let p = dir.path().join(name);
            write_mask(&mask, &p).unwrap();
            prop_assert_eq!(read_mask(&p).unwrap(), mask.clone());
        }
    }

    #[test]
    fn synth_is_deterministic_and_clamped(
        seed in any::<u64>(),
        level in 0.0..255.0f64,
        sigma in 0.0..40.0f64,
        offset in -300.0..300.0f64,
    ) {
        let scene = SceneSpec {
            width: 12,
            height: 9,
            frame_count: 6,
            seed,
            background: cp3::synth::Background::Flat { level },
            noise_sigma: sigma,
            events: vec![Event::IlluminationStep { offset, start: 3 }],
            ..SceneSpec::default()
        };
        let a = cp3::synth::generate::<f64>(&scene).unwrap();
        let b = cp3::synth::generate::<f64>(&scene).unwrap();
        for ((fa, ga), (fb, gb)) in a.iter().zip(&b) {
            prop_assert_eq!(fa, fb);
            prop_assert_eq!(ga, gb);
            prop_assert!(fa.samples().iter().all(|&x| (0.0..=255.0).contains(&x) && x.fract() == 0.0));
        }
    }

    #[test]
    fn step_is_deterministic(
        samples in prop::collection::vec(0.0..255.0f64, 6 * 5 * 3),
        seed in any::<u64>(),
    ) {
        let frame = Frame::new(6, 5, 3, samples.iter().map(|x| x.round()).collect()).unwrap();
        let frames: Vec<Frame<f64>> = (0..4).map(|i| {
            let mut f = frame.clone();
            for (j, x) in f.samples_mut().iter_mut().enumerate() {
                *x = (*x + ((i * 7 + j) % 5) as f64).min(255.0);
            }
            f
        }).collect();
        let params = ModelParams { k_supports: 4, training_frames: 4, seed, ..ModelParams::default() };
        let mut a = cp3::train(&frames, &params).unwrap();
        let mut b = a.clone();
        for f in &frames {
            prop_assert_eq!(a.step(f).unwrap(), b.step(f).unwrap());
        }
        prop_assert_eq!(save_model(&a), save_model(&b));
    }
}
