//! Background model state and the per-pixel detection and update rules.
//!
//! Each pixel `P` is described by `K` supporting pixels `Q_k`. For every pair
//! the model keeps a single Gaussian over the colour deviation `p - q`: its
//! mean `delta` and covariance `sigma`. A pair fails when the Mahalanobis
//! distance of the current deviation exceeds `gauss_c`; the pixel's pair test
//! fires when more than `pf_threshold` of its pairs fail. An independent
//! per-pixel intensity range catches objects that shift `P` and most of its
//! supports together. A pixel is background only when both tests agree.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::frame::{Coord, Frame, Label, LabelMask};
use crate::scalar::Real;

/// Largest supported channel count.
pub const MAX_CHANNELS: usize = 3;

/// Packed upper triangle of a symmetric 3×3 matrix, row-major:
/// `(0,0) (0,1) (0,2) (1,1) (1,2) (2,2)`.
pub const PACKED_LEN: usize = 6;

#[inline]
pub const fn packed_index(i: usize, j: usize) -> usize {
    let (r, c) = if i <= j { (i, j) } else { (j, i) };
    match (r, c) {
        (0, 0) => 0,
        (0, 1) => 1,
        (0, 2) => 2,
        (1, 1) => 3,
        (1, 2) => 4,
        _ => 5,
    }
}

/// All tunables. Defaults follow the published parameter table where it
/// gives a value.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    /// Supporting pixels per target pixel (K).
    pub k_supports: usize,
    /// Fraction of failing pairs above which the pair test flags foreground.
    pub pf_threshold: f64,
    /// Pair threshold in standard-deviation units.
    pub gauss_c: f64,
    /// Online updating rate.
    pub alpha: f64,
    /// Candidates kept before spatial sampling, as a multiple of K.
    pub candidate_multiplier: usize,
    /// Scale applied to the noise-attenuation ceiling to get the correlation floor.
    pub gamma_scale: f64,
    /// Absolute lower bound on the correlation floor.
    pub gamma_floor: f64,
    pub range_margin_lo: f64,
    pub range_margin_hi: f64,
    pub range_check_enabled: bool,
    /// Diagonal regularizer added before inverting a pair covariance.
    pub cov_epsilon: f64,
    pub seed: u64,
    /// Length of the initialization window in frames.
    pub training_frames: usize,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            k_supports: 20,
            pf_threshold: 0.35,
            gauss_c: 3.0,
            alpha: 0.01,
            candidate_multiplier: 4,
            gamma_scale: 0.75,
            gamma_floor: 0.5,
            range_margin_lo: 10.0,
            range_margin_hi: 10.0,
            range_check_enabled: true,
            cov_epsilon: 1e-3,
            seed: 0,
            training_frames: 100,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInput(msg));
        if self.k_supports == 0 {
            return bad("k_supports must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.pf_threshold) {
            return bad(format!("pf_threshold {} outside [0, 1]", self.pf_threshold));
        }
        if !(self.gauss_c > 0.0 && self.gauss_c.is_finite()) {
            return bad(format!("gauss_c must be positive, got {}", self.gauss_c));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return bad(format!("alpha {} outside [0, 1]", self.alpha));
        }
        if self.candidate_multiplier == 0 {
            return bad("candidate_multiplier must be at least 1".into());
        }
        if !(self.gamma_scale > 0.0 && self.gamma_scale <= 1.0) {
            return bad(format!("gamma_scale {} outside (0, 1]", self.gamma_scale));
        }
        if !(0.0..1.0).contains(&self.gamma_floor) {
            return bad(format!("gamma_floor {} outside [0, 1)", self.gamma_floor));
        }
        for (name, m) in [
            ("range_margin_lo", self.range_margin_lo),
            ("range_margin_hi", self.range_margin_hi),
        ] {
            if !(m >= 0.0 && m.is_finite()) {
                return bad(format!("{name} must be a nonnegative real, got {m}"));
            }
        }
        if !(self.cov_epsilon > 0.0 && self.cov_epsilon.is_finite()) {
            return bad(format!("cov_epsilon must be positive, got {}", self.cov_epsilon));
        }
        if self.training_frames < 2 {
            return bad("training_frames must be at least 2".into());
        }
        Ok(())
    }

    pub fn candidate_count(&self) -> usize {
        self.candidate_multiplier * self.k_supports
    }
}

/// Gaussian over the deviation between a pixel and one supporting pixel.
///
/// Lanes beyond the model's channel count are zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairModel<T> {
    pub q: Coord,
    pub delta: [T; MAX_CHANNELS],
    pub sigma: [T; PACKED_LEN],
}

impl<T: Real> PairModel<T> {
    pub fn new(q: Coord) -> Self {
        PairModel {
            q,
            delta: [T::zero(); MAX_CHANNELS],
            sigma: [T::zero(); PACKED_LEN],
        }
    }

    #[inline]
    pub fn sigma_at(&self, i: usize, j: usize) -> T {
        self.sigma[packed_index(i, j)]
    }

    /// Expanded `channels × channels` covariance (unused entries zero).
    pub fn sigma_matrix(&self, channels: usize) -> [[T; MAX_CHANNELS]; MAX_CHANNELS] {
        let mut m = [[T::zero(); MAX_CHANNELS]; MAX_CHANNELS];
        for (i, row) in m.iter_mut().enumerate().take(channels) {
            for (j, cell) in row.iter_mut().enumerate().take(channels) {
                *cell = self.sigma_at(i, j);
            }
        }
        m
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PixelModel<T> {
    pub pairs: Vec<PairModel<T>>,
    pub range_lo: [T; MAX_CHANNELS],
    pub range_hi: [T; MAX_CHANNELS],
}

/// Squared Mahalanobis distance of `diff` under `sigma + eps·I`, via an
/// LDLᵀ factorization. Returns +∞ when the regularized matrix is not
/// positive definite.
#[inline]
fn mahalanobis2<T: Real, const C: usize>(diff: &[T; MAX_CHANNELS], sigma: &[T; PACKED_LEN], eps: T) -> T {
    if C == 1 {
        let a = sigma[0] + eps;
        if !(a > T::zero()) {
            return T::infinity();
        }
        return diff[0] * diff[0] / a;
    }
    let a = sigma[0] + eps;
    if !(a > T::zero()) {
        return T::infinity();
    }
    let inv_a = a.recip();
    let l10 = sigma[1] * inv_a;
    let l20 = sigma[2] * inv_a;
    let d1 = sigma[3] + eps - sigma[1] * l10;
    if !(d1 > T::zero()) {
        return T::infinity();
    }
    let inv_d1 = d1.recip();
    let l21 = (sigma[4] - sigma[2] * l10) * inv_d1;
    let d2 = sigma[5] + eps - sigma[2] * l20 - l21 * l21 * d1;
    if !(d2 > T::zero()) {
        return T::infinity();
    }
    let y0 = diff[0];
    let y1 = diff[1] - l10 * y0;
    let y2 = diff[2] - l20 * y0 - l21 * y1;
    y0 * y0 * inv_a + y1 * y1 * inv_d1 + y2 * y2 / d2
}

/// `D² = (dev − Δ)ᵀ (Σ + εI)⁻¹ (dev − Δ)` for a 1- or 3-channel deviation.
pub fn pair_distance2<T: Real>(dev: &[T], pair: &PairModel<T>, epsilon: T) -> Result<T> {
    let c = dev.len();
    if c != 1 && c != 3 {
        return Err(Error::InvalidInput(format!("deviation must have 1 or 3 channels, got {c}")));
    }
    let finite = dev.iter().chain(&pair.delta[..c]).all(|x| x.is_finite())
        && (0..c).all(|i| (i..c).all(|j| pair.sigma_at(i, j).is_finite()));
    if !finite {
        return Err(Error::InvalidInput("non-finite deviation or pair statistics".into()));
    }
    if !(epsilon >= T::zero() && epsilon.is_finite()) {
        return Err(Error::InvalidInput(format!("epsilon must be nonnegative, got {epsilon}")));
    }
    let mut diff = [T::zero(); MAX_CHANNELS];
    for i in 0..c {
        diff[i] = dev[i] - pair.delta[i];
    }
    let d2 = if c == 1 {
        mahalanobis2::<T, 1>(&diff, &pair.sigma, epsilon)
    } else {
        mahalanobis2::<T, 3>(&diff, &pair.sigma, epsilon)
    };
    if d2.is_infinite() {
        return Err(Error::Numeric("pair covariance is not positive definite".into()));
    }
    Ok(d2)
}

/// Recursive mean and covariance update of one pair.
///
/// The covariance term uses the already-updated mean.
pub fn update_pair<T: Real>(pair: &mut PairModel<T>, dev: &[T], alpha: T) {
    let c = dev.len().min(MAX_CHANNELS);
    let keep = T::one() - alpha;
    let mut r = [T::zero(); MAX_CHANNELS];
    for i in 0..c {
        pair.delta[i] = alpha * dev[i] + keep * pair.delta[i];
        r[i] = dev[i] - pair.delta[i];
    }
    for i in 0..c {
        for j in i..c {
            let k = packed_index(i, j);
            pair.sigma[k] = alpha * (r[i] * r[j]) + keep * pair.sigma[k];
        }
    }
}

/// Running min/max update: instant expansion, exponential contraction at
/// rate `alpha` towards the new sample.
pub fn update_range<T: Real>(pm: &mut PixelModel<T>, p: &[T], alpha: T) {
    for (i, &x) in p.iter().enumerate().take(MAX_CHANNELS) {
        let lo = &mut pm.range_lo[i];
        *lo = if x < *lo { x } else { *lo + alpha * (x - *lo) };
        let hi = &mut pm.range_hi[i];
        *hi = if x > *hi { x } else { *hi - alpha * (*hi - x) };
    }
}

/// Outcome of testing one pixel against its model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Verdict {
    pub label: Label,
    /// Fraction of supporting pairs whose deviation fell outside `gauss_c`.
    pub failing_fraction: f64,
    pub pair_foreground: bool,
    pub range_foreground: bool,
}

/// Scalar-converted thresholds, computed once per frame.
#[derive(Clone, Copy, Debug)]
struct Thresholds<T> {
    c2: T,
    eps: T,
    alpha: T,
    pf: f64,
    margin_lo: T,
    margin_hi: T,
    range_check: bool,
}

impl<T: Real> Thresholds<T> {
    fn new(params: &ModelParams) -> Self {
        Thresholds {
            c2: T::lit(params.gauss_c * params.gauss_c),
            eps: T::lit(params.cov_epsilon),
            alpha: T::lit(params.alpha),
            pf: params.pf_threshold,
            margin_lo: T::lit(params.range_margin_lo),
            margin_hi: T::lit(params.range_margin_hi),
            range_check: params.range_check_enabled,
        }
    }
}

#[inline]
fn out_of_range<T: Real>(pm: &PixelModel<T>, p: &[T], th: &Thresholds<T>) -> bool {
    p.iter()
        .enumerate()
        .any(|(i, &x)| x < pm.range_lo[i] - th.margin_lo || x > pm.range_hi[i] + th.margin_hi)
}

#[inline]
fn verdict(fails: usize, k: usize, range_fg: bool, pf: f64) -> Verdict {
    let failing_fraction = fails as f64 / k as f64;
    let pair_foreground = failing_fraction > pf;
    let label = if pair_foreground || range_fg {
        Label::Foreground
    } else {
        Label::Background
    };
    Verdict {
        label,
        failing_fraction,
        pair_foreground,
        range_foreground: range_fg,
    }
}

#[inline]
fn deviation<T: Real, const C: usize>(p: &[T], q: &[T]) -> [T; MAX_CHANNELS] {
    let mut dev = [T::zero(); MAX_CHANNELS];
    for i in 0..C {
        dev[i] = p[i] - q[i];
    }
    dev
}

#[inline]
fn pair_fails<T: Real, const C: usize>(pair: &PairModel<T>, dev: &[T; MAX_CHANNELS], th: &Thresholds<T>) -> bool {
    let mut diff = [T::zero(); MAX_CHANNELS];
    for i in 0..C {
        diff[i] = dev[i] - pair.delta[i];
    }
    mahalanobis2::<T, C>(&diff, &pair.sigma, th.eps) > th.c2
}

fn classify_with<T: Real, const C: usize>(
    pm: &PixelModel<T>,
    frame: &Frame<T>,
    p: &[T],
    th: &Thresholds<T>,
) -> Verdict {
    let width = frame.width();
    let fails = pm
        .pairs
        .iter()
        .filter(|pair| {
            let dev = deviation::<T, C>(p, frame.pixel_at(pair.q.index(width)));
            pair_fails::<T, C>(pair, &dev, th)
        })
        .count();
    let range_fg = th.range_check && out_of_range(pm, p, th);
    verdict(fails, pm.pairs.len(), range_fg, th.pf)
}

/// Read access to the pixels of the frame being processed.
trait Pixels<T> {
    fn at(&self, index: usize) -> [T; MAX_CHANNELS];
}

struct Wide<'a, T, const C: usize>(&'a Frame<T>);

impl<T: Real, const C: usize> Pixels<T> for Wide<'_, T, C> {
    #[inline]
    fn at(&self, index: usize) -> [T; MAX_CHANNELS] {
        let p = self.0.pixel_at(index);
        let mut out = [T::zero(); MAX_CHANNELS];
        out[..C].copy_from_slice(&p[..C]);
        out
    }
}

/// 8-bit copy of a frame whose samples are all integers in 0..=255. The
/// whole frame then fits in cache, which matters because supports are
/// scattered; the values convert back exactly.
struct Narrow<'a>(&'a [[u8; 4]]);

impl<T: Real> Pixels<T> for Narrow<'_> {
    #[inline]
    fn at(&self, index: usize) -> [T; MAX_CHANNELS] {
        let p = self.0[index];
        [T::lit(p[0] as f64), T::lit(p[1] as f64), T::lit(p[2] as f64)]
    }
}

fn narrow<T: Real>(frame: &Frame<T>) -> Option<Vec<[u8; 4]>> {
    let c = frame.channels();
    let mut out = Vec::with_capacity(frame.pixel_count());
    for px in frame.samples().chunks_exact(c) {
        let mut b = [0u8; 4];
        for (slot, &x) in b.iter_mut().zip(px) {
            let v = x.as_f64();
            if !(v >= 0.0 && v <= 255.0 && v.fract() == 0.0) {
                return None;
            }
            *slot = v as u8;
        }
        out.push(b);
    }
    Some(out)
}

/// Deviations `p − q` for every pair of the pixel at `index`.
#[inline]
fn gather<T: Real, const C: usize, S: Pixels<T>>(
    pm: &PixelModel<T>,
    src: &S,
    width: usize,
    index: usize,
    devs: &mut Vec<[T; MAX_CHANNELS]>,
) {
    let p = src.at(index);
    devs.clear();
    devs.extend(pm.pairs.iter().map(|pair| {
        let q = src.at(pair.q.index(width));
        let mut dev = [T::zero(); MAX_CHANNELS];
        for i in 0..C {
            dev[i] = p[i] - q[i];
        }
        dev
    }));
}

/// Classifies one pixel from its gathered deviations and then applies the
/// blind update. Each pair is tested before it is updated, and the range
/// test reads the range as it was before this frame.
#[inline]
fn detect_and_update<T: Real, const C: usize>(
    pm: &mut PixelModel<T>,
    p: &[T],
    devs: &[[T; MAX_CHANNELS]],
    th: &Thresholds<T>,
) -> Label {
    let keep = T::one() - th.alpha;
    let mut fails = 0usize;
    for (pair, dev) in pm.pairs.iter_mut().zip(devs) {
        if pair_fails::<T, C>(pair, dev, th) {
            fails += 1;
        }
        let mut r = [T::zero(); MAX_CHANNELS];
        for i in 0..C {
            pair.delta[i] = th.alpha * dev[i] + keep * pair.delta[i];
            r[i] = dev[i] - pair.delta[i];
        }
        if C == 1 {
            pair.sigma[0] = th.alpha * (r[0] * r[0]) + keep * pair.sigma[0];
        } else {
            pair.sigma[0] = th.alpha * (r[0] * r[0]) + keep * pair.sigma[0];
            pair.sigma[1] = th.alpha * (r[0] * r[1]) + keep * pair.sigma[1];
            pair.sigma[2] = th.alpha * (r[0] * r[2]) + keep * pair.sigma[2];
            pair.sigma[3] = th.alpha * (r[1] * r[1]) + keep * pair.sigma[3];
            pair.sigma[4] = th.alpha * (r[1] * r[2]) + keep * pair.sigma[4];
            pair.sigma[5] = th.alpha * (r[2] * r[2]) + keep * pair.sigma[5];
        }
    }
    let range_fg = th.range_check && out_of_range(pm, p, th);
    update_range(pm, p, th.alpha);
    verdict(fails, pm.pairs.len(), range_fg, th.pf).label
}

/// One row of `step`. The support lookups are scattered across the frame,
/// so the next pixel's deviations are gathered before the current pixel's
/// arithmetic to keep those loads in flight.
fn step_row<T: Real, const C: usize, S: Pixels<T>>(
    models: &mut [PixelModel<T>],
    out: &mut [Label],
    src: &S,
    base: usize,
    th: &Thresholds<T>,
) {
    let width = models.len();
    let k = models.first().map_or(0, |pm| pm.pairs.len());
    let mut cur = Vec::with_capacity(k);
    let mut next = Vec::with_capacity(k);
    gather::<T, C, S>(&models[0], src, width, base, &mut cur);
    for u in 0..width {
        let (head, tail) = models.split_at_mut(u + 1);
        if let Some(pm) = tail.first() {
            gather::<T, C, S>(pm, src, width, base + u + 1, &mut next);
        }
        let p = src.at(base + u);
        out[u] = detect_and_update::<T, C>(&mut head[u], &p[..C], &cur, th);
        std::mem::swap(&mut cur, &mut next);
    }
}

/// Complete trained state: one [`PixelModel`] per pixel plus parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct BackgroundModel<T> {
    width: usize,
    height: usize,
    channels: usize,
    params: ModelParams,
    pixels: Vec<PixelModel<T>>,
}

impl<T: Real> BackgroundModel<T> {
    /// Assembles a model, checking every structural invariant.
    pub fn new(
        width: usize,
        height: usize,
        channels: usize,
        params: ModelParams,
        pixels: Vec<PixelModel<T>>,
    ) -> Result<Self> {
        params.validate()?;
        if width == 0 || height == 0 {
            return Err(Error::InvalidInput("model dimensions must be positive".into()));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidInput(format!("channels must be 1 or 3, got {channels}")));
        }
        if pixels.len() != width * height {
            return Err(Error::InvalidInput(format!(
                "expected {} pixel models, got {}",
                width * height,
                pixels.len()
            )));
        }
        for (idx, pm) in pixels.iter().enumerate() {
            let owner = Coord::from_index(idx, width);
            if pm.pairs.len() != params.k_supports {
                return Err(Error::InvalidInput(format!(
                    "pixel {owner} has {} pairs, expected {}",
                    pm.pairs.len(),
                    params.k_supports
                )));
            }
            for pair in &pm.pairs {
                if pair.q.u as usize >= width || pair.q.v as usize >= height || pair.q == owner {
                    return Err(Error::InvalidInput(format!(
                        "pixel {owner} has invalid supporting pixel {}",
                        pair.q
                    )));
                }
            }
            if (0..channels).any(|c| !(pm.range_lo[c] <= pm.range_hi[c])) {
                return Err(Error::InvalidInput(format!("pixel {owner} has an inverted range")));
            }
        }
        let mut pixels = pixels;
        if channels == 1 {
            // Slots past the first channel carry no information; keep them
            // zero so equal models compare equal.
            for pm in &mut pixels {
                for pair in &mut pm.pairs {
                    pair.delta[1..].fill(T::zero());
                    pair.sigma[1..].fill(T::zero());
                }
                pm.range_lo[1..].fill(T::zero());
                pm.range_hi[1..].fill(T::zero());
            }
        }
        Ok(BackgroundModel {
            width,
            height,
            channels,
            params,
            pixels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    /// Replaces the detection-time parameters. Structural parameters
    /// (`k_supports`) must not change.
    pub fn set_params(&mut self, params: ModelParams) -> Result<()> {
        params.validate()?;
        if params.k_supports != self.params.k_supports {
            return Err(Error::InvalidInput(format!(
                "model was trained with k_supports={}, cannot switch to {}",
                self.params.k_supports, params.k_supports
            )));
        }
        self.params = params;
        Ok(())
    }

    pub fn pixels(&self) -> &[PixelModel<T>] {
        &self.pixels
    }

    pub fn pixel(&self, at: Coord) -> &PixelModel<T> {
        &self.pixels[at.index(self.width)]
    }

    fn check_frame(&self, frame: &Frame<T>) -> Result<()> {
        if frame.width() != self.width || frame.height() != self.height || frame.channels() != self.channels {
            return Err(Error::InvalidInput(format!(
                "frame is {}x{}x{}, model is {}x{}x{}",
                frame.width(),
                frame.height(),
                frame.channels(),
                self.width,
                self.height,
                self.channels
            )));
        }
        Ok(())
    }

    /// Tests one pixel against the current model without modifying it.
    pub fn classify_pixel(&self, frame: &Frame<T>, at: Coord) -> Result<Verdict> {
        self.check_frame(frame)?;
        if at.u as usize >= self.width || at.v as usize >= self.height {
            return Err(Error::InvalidInput(format!("pixel {at} outside the frame")));
        }
        classify_pixel(self.pixel(at), frame, at, &self.params)
    }

    /// Labels every pixel of `frame` without updating.
    pub fn classify(&self, frame: &Frame<T>) -> Result<LabelMask> {
        self.check_frame(frame)?;
        let th = Thresholds::new(&self.params);
        let labels = self
            .pixels
            .par_iter()
            .enumerate()
            .map(|(idx, pm)| {
                let p = frame.pixel_at(idx);
                if self.channels == 1 {
                    classify_with::<T, 1>(pm, frame, p, &th).label
                } else {
                    classify_with::<T, 3>(pm, frame, p, &th).label
                }
            })
            .collect();
        LabelMask::new(self.width, self.height, labels)
    }

    /// Classifies every pixel, then blindly updates every pair and range
    /// with the same frame.
    pub fn step(&mut self, frame: &Frame<T>) -> Result<LabelMask> {
        self.check_frame(frame)?;
        let th = Thresholds::new(&self.params);
        let width = self.width;
        let three = self.channels == 3;
        let mut labels = vec![Label::Background; width * self.height];
        let bytes = narrow(frame);
        self.pixels
            .par_chunks_mut(width)
            .zip(labels.par_chunks_mut(width))
            .enumerate()
            .for_each(|(row, (models, out))| {
                let base = row * width;
                match (&bytes, three) {
                    (Some(b), true) => step_row::<T, 3, _>(models, out, &Narrow(b), base, &th),
                    (Some(b), false) => step_row::<T, 1, _>(models, out, &Narrow(b), base, &th),
                    (None, true) => step_row::<T, 3, _>(models, out, &Wide::<T, 3>(frame), base, &th),
                    (None, false) => step_row::<T, 1, _>(models, out, &Wide::<T, 1>(frame), base, &th),
                }
            });
        LabelMask::new(width, self.height, labels)
    }

    pub fn into_parts(self) -> (usize, usize, usize, ModelParams, Vec<PixelModel<T>>) {
        (self.width, self.height, self.channels, self.params, self.pixels)
    }
}

/// Pair vote plus range test for the pixel at `coord`.
pub fn classify_pixel<T: Real>(
    pm: &PixelModel<T>,
    frame: &Frame<T>,
    coord: Coord,
    params: &ModelParams,
) -> Result<Verdict> {
    if coord.u as usize >= frame.width() || coord.v as usize >= frame.height() {
        return Err(Error::InvalidInput(format!("pixel {coord} outside the frame")));
    }
    if pm.pairs.is_empty() {
        return Err(Error::InvalidInput(format!("pixel {coord} has no supporting pairs")));
    }
    for pair in &pm.pairs {
        if pair.q.u as usize >= frame.width() || pair.q.v as usize >= frame.height() {
            return Err(Error::InvalidInput(format!("supporting pixel {} outside the frame", pair.q)));
        }
    }
    let th = Thresholds::new(params);
    let p = frame.pixel(coord);
    Ok(if frame.channels() == 1 {
        classify_with::<T, 1>(pm, frame, p, &th)
    } else {
        classify_with::<T, 3>(pm, frame, p, &th)
    })
}
