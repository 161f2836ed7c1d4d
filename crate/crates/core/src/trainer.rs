//! Builds a [`BackgroundModel`] from an initialization window.
//!
//! Per target pixel: temporal luma statistics give an adaptive correlation
//! floor; one row of the pixel-to-pixel correlation matrix is computed
//! against the retained training tensor (the full P×P matrix is never
//! materialized); the best-correlated pixels above the floor form the
//! candidate set; k-means on candidate positions spreads the `K` chosen
//! supports across the frame; finally each pair's deviation mean and
//! covariance and the pixel's intensity range are estimated over the window.

use std::cmp::Ordering;
use std::sync::atomic::{AtomicUsize, Ordering as AtomicOrdering};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::frame::{Coord, Frame};
use crate::model::{packed_index, BackgroundModel, ModelParams, PairModel, PixelModel, MAX_CHANNELS};
use crate::scalar::Real;

/// Scale factor turning a median absolute deviation into a Gaussian σ.
const MAD_TO_SIGMA: f64 = 1.4826;

/// Luma time series of every pixel, stored pixel-major so one pixel's series
/// is contiguous.
#[derive(Clone, Debug)]
pub struct LumaSeries<T> {
    width: usize,
    height: usize,
    len: usize,
    data: Vec<T>,
}

impl<T: Real> LumaSeries<T> {
    pub fn from_frames(frames: &[Frame<T>]) -> Result<Self> {
        let first = frames
            .first()
            .ok_or_else(|| Error::InsufficientData("no frames supplied".into()))?;
        check_uniform(frames)?;
        let (width, height, len) = (first.width(), first.height(), frames.len());
        let mut data = vec![T::zero(); width * height * len];
        for (t, frame) in frames.iter().enumerate() {
            for idx in 0..width * height {
                data[idx * len + t] = frame.luma_at(idx);
            }
        }
        Ok(LumaSeries {
            width,
            height,
            len,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Number of time samples per pixel.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn series(&self, index: usize) -> &[T] {
        &self.data[index * self.len..(index + 1) * self.len]
    }
}

fn check_uniform<T: Real>(frames: &[Frame<T>]) -> Result<()> {
    if let Some((t, _)) = frames.iter().enumerate().find(|(_, f)| !f.same_shape(&frames[0])) {
        return Err(Error::InvalidInput(format!(
            "frame {t} differs in shape from frame 0 ({}x{}x{})",
            frames[0].width(),
            frames[0].height(),
            frames[0].channels()
        )));
    }
    Ok(())
}

/// Temporal luma statistics for every pixel.
#[derive(Clone, Debug, PartialEq)]
pub struct PixelStats<T> {
    pub width: usize,
    pub height: usize,
    pub mean: Vec<T>,
    /// Unbiased temporal variance of the signal.
    pub variance: Vec<T>,
    /// Robust noise variance from first differences.
    pub noise_var: Vec<T>,
}

/// Mean, unbiased variance and robust first-difference noise variance of one
/// series of at least two samples.
pub fn series_stats<T: Real>(series: &[T]) -> (T, T, T) {
    let n = T::lit(series.len() as f64);
    let mean = series.iter().fold(T::zero(), |a, &x| a + x) / n;
    let ss = series.iter().fold(T::zero(), |a, &x| a + (x - mean) * (x - mean));
    let variance = if series.iter().all(|&x| x == series[0]) {
        T::zero()
    } else {
        ss / (n - T::one())
    };
    let mut diffs: Vec<T> = series.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let median = median_in_place(&mut diffs);
    let sigma = T::lit(MAD_TO_SIGMA) * median / T::lit(std::f64::consts::SQRT_2);
    (mean, variance, sigma * sigma)
}

fn median_in_place<T: Real>(values: &mut [T]) -> T {
    let n = values.len();
    let cmp = |a: &T, b: &T| a.partial_cmp(b).unwrap_or(Ordering::Equal);
    let mid = n / 2;
    let (lower, upper, _) = values.select_nth_unstable_by(mid, cmp);
    let hi = *upper;
    if n % 2 == 1 {
        hi
    } else {
        let lo = lower.iter().copied().fold(T::neg_infinity(), T::max);
        (lo + hi) / T::lit(2.0)
    }
}

pub fn compute_pixel_stats<T: Real>(frames: &[Frame<T>]) -> Result<PixelStats<T>> {
    if frames.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "pixel statistics need at least 2 frames, got {}",
            frames.len()
        )));
    }
    Ok(stats_from_series(&LumaSeries::from_frames(frames)?))
}

fn stats_from_series<T: Real>(series: &LumaSeries<T>) -> PixelStats<T> {
    let p = series.width * series.height;
    let triples: Vec<(T, T, T)> = (0..p).into_par_iter().map(|i| series_stats(series.series(i))).collect();
    PixelStats {
        width: series.width,
        height: series.height,
        mean: triples.iter().map(|t| t.0).collect(),
        variance: triples.iter().map(|t| t.1).collect(),
        noise_var: triples.iter().map(|t| t.2).collect(),
    }
}

/// Standardized luma series (zero mean, unit norm), from which any entry of
/// the correlation matrix is a single dot product.
#[derive(Clone, Debug)]
pub struct CorrelationRows<T> {
    width: usize,
    height: usize,
    len: usize,
    normalized: Vec<T>,
}

impl<T: Real> CorrelationRows<T> {
    pub fn new(series: &LumaSeries<T>) -> Self {
        let len = series.len;
        let mut normalized = vec![T::zero(); series.data.len()];
        normalized
            .par_chunks_mut(len)
            .enumerate()
            .for_each(|(idx, out)| {
                let s = series.series(idx);
                if s.iter().all(|&x| x == s[0]) {
                    return;
                }
                let n = T::lit(len as f64);
                let mean = s.iter().fold(T::zero(), |a, &x| a + x) / n;
                let norm = s.iter().fold(T::zero(), |a, &x| a + (x - mean) * (x - mean)).sqrt();
                for (o, &x) in out.iter_mut().zip(s) {
                    *o = (x - mean) / norm;
                }
            });
        CorrelationRows {
            width: series.width,
            height: series.height,
            len,
            normalized,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    fn z(&self, index: usize) -> &[T] {
        &self.normalized[index * self.len..(index + 1) * self.len]
    }

    /// Pearson correlation between two pixels; 0 when either is constant.
    pub fn gamma(&self, a: usize, b: usize) -> T {
        let one = T::one();
        dot(self.z(a), self.z(b)).max(-one).min(one)
    }

    /// Correlation of `target` with every pixel on the `stride` lattice,
    /// the target itself excluded, in row-major order.
    pub fn row(&self, target: Coord, stride: usize) -> Vec<(Coord, T)> {
        let mut out = Vec::new();
        self.row_into(target, stride, &mut out);
        out
    }

    fn row_into(&self, target: Coord, stride: usize, out: &mut Vec<(Coord, T)>) {
        out.clear();
        let stride = stride.max(1);
        let t = target.index(self.width);
        let zt = self.z(t);
        let one = T::one();
        for v in (0..self.height).step_by(stride) {
            for u in (0..self.width).step_by(stride) {
                let idx = v * self.width + u;
                if idx == t {
                    continue;
                }
                let g = dot(zt, self.z(idx)).max(-one).min(one);
                out.push((Coord::new(u as u32, v as u32), g));
            }
        }
    }
}

#[inline]
fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    let mut acc = [T::zero(); 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut tail = T::zero();
    for (&x, &y) in ca.remainder().iter().zip(cb.remainder()) {
        tail += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// One row of the correlation matrix computed straight from frames.
pub fn correlation_row<T: Real>(frames: &[Frame<T>], target: Coord, stride: usize) -> Result<Vec<(Coord, T)>> {
    if frames.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "correlation needs at least 2 frames, got {}",
            frames.len()
        )));
    }
    if target.u as usize >= frames[0].width() || target.v as usize >= frames[0].height() {
        return Err(Error::InvalidInput(format!("target {target} outside the frame")));
    }
    if stride == 0 {
        return Err(Error::InvalidInput("stride must be at least 1".into()));
    }
    let rows = CorrelationRows::new(&LumaSeries::from_frames(frames)?);
    Ok(rows.row(target, stride))
}

/// Correlation floor from the ratio of signal variance to signal-plus-noise
/// variance.
pub fn adaptive_threshold<T: Real>(variance: T, noise_var: T, params: &ModelParams) -> T {
    let floor = T::lit(params.gamma_floor);
    let total = variance + noise_var;
    if !(total > T::zero()) {
        return floor;
    }
    floor.max(T::lit(params.gamma_scale) * variance / total)
}

/// Candidate supporting pixels for one owner, best first.
#[derive(Clone, Debug, PartialEq)]
pub struct CandidateSet<T> {
    pub owner: Coord,
    pub candidates: Vec<(Coord, T)>,
    /// Correlation floor the set was built against.
    pub threshold: T,
    /// Set when too few pixels cleared the floor and the global best were
    /// taken instead.
    pub fallback: bool,
}

impl<T: Real> CandidateSet<T> {
    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }
}

/// γ descending, then row-major coordinate.
fn by_gamma_desc<T: Real>(a: &(Coord, T), b: &(Coord, T)) -> Ordering {
    b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal).then_with(|| a.0.cmp(&b.0))
}

fn top_n<T: Real>(mut v: Vec<(Coord, T)>, n: usize) -> Vec<(Coord, T)> {
    if n == 0 {
        return Vec::new();
    }
    if v.len() > n {
        v.select_nth_unstable_by(n - 1, by_gamma_desc);
        v.truncate(n);
    }
    v.sort_unstable_by(by_gamma_desc);
    v
}

/// Keeps the `n_max` best-correlated pixels above `threshold`, falling back
/// to the global best when fewer than `k_supports` clear it.
pub fn select_candidates<T: Real>(
    owner: Coord,
    row: &[(Coord, T)],
    threshold: T,
    n_max: usize,
    k_supports: usize,
) -> Result<CandidateSet<T>> {
    let pool: Vec<(Coord, T)> = row.iter().copied().filter(|(c, _)| *c != owner).collect();
    if pool.len() < k_supports || n_max < k_supports {
        return Err(Error::InsufficientCandidates {
            available: pool.len().min(n_max),
            required: k_supports,
        });
    }
    let above: Vec<(Coord, T)> = pool.iter().copied().filter(|(_, g)| *g > threshold).collect();
    let (chosen, fallback) = if above.len() >= k_supports {
        (top_n(above, n_max), false)
    } else {
        (top_n(pool, n_max), true)
    };
    Ok(CandidateSet {
        owner,
        candidates: chosen,
        threshold,
        fallback,
    })
}

const KMEANS_MAX_ITERS: usize = 100;

/// Picks `k` spatially scattered supports: k-means (k-means++ seeding) on
/// candidate positions, the best-correlated member of each cluster, and the
/// next best unused candidates for any cluster left empty.
pub fn sample_supporting<T: Real, R: Rng + ?Sized>(cands: &CandidateSet<T>, k: usize, rng: &mut R) -> Result<Vec<Coord>> {
    let n = cands.len();
    if k == 0 || n < k {
        return Err(Error::InsufficientCandidates {
            available: n,
            required: k,
        });
    }
    let points: Vec<[f64; 2]> = cands
        .candidates
        .iter()
        .map(|(c, _)| [c.u as f64, c.v as f64])
        .collect();
    let assignment = kmeans(&points, k, rng);

    let mut picks: Vec<Option<usize>> = vec![None; k];
    for (i, &cluster) in assignment.iter().enumerate() {
        // Candidates are already in γ-descending order.
        if picks[cluster].is_none() {
            picks[cluster] = Some(i);
        }
    }
    let mut used = vec![false; n];
    for &i in picks.iter().flatten() {
        used[i] = true;
    }
    let mut spare = (0..n).filter(|&i| !used[i]);
    let out = picks
        .into_iter()
        .map(|p| {
            let i = p.or_else(|| spare.next()).expect("n >= k leaves enough spare candidates");
            cands.candidates[i].0
        })
        .collect();
    Ok(out)
}

fn sqdist(a: [f64; 2], b: [f64; 2]) -> f64 {
    let (x, y) = (a[0] - b[0], a[1] - b[1]);
    x * x + y * y
}

/// Returns the cluster index of every point.
fn kmeans<R: Rng + ?Sized>(points: &[[f64; 2]], k: usize, rng: &mut R) -> Vec<usize> {
    let n = points.len();
    let mut centers: Vec<[f64; 2]> = Vec::with_capacity(k);
    centers.push(points[rng.gen_range(0..n)]);
    let mut d2: Vec<f64> = points.iter().map(|&p| sqdist(p, centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut r = rng.gen::<f64>() * total;
            let mut pick = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if w > 0.0 && r < w {
                    pick = i;
                    break;
                }
                r -= w;
            }
            // Guard against rounding walking past the last positive weight.
            if d2[pick] == 0.0 {
                pick = d2.iter().rposition(|&w| w > 0.0).unwrap_or(pick);
            }
            pick
        } else {
            rng.gen_range(0..n)
        };
        let c = points[next];
        centers.push(c);
        for (d, &p) in d2.iter_mut().zip(points) {
            *d = d.min(sqdist(p, c));
        }
    }

    let mut assignment = vec![usize::MAX; n];
    for _ in 0..KMEANS_MAX_ITERS {
        let mut changed = false;
        for (a, &p) in assignment.iter_mut().zip(points) {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (j, &c) in centers.iter().enumerate() {
                let d = sqdist(p, c);
                if d < best_d {
                    best_d = d;
                    best = j;
                }
            }
            if *a != best {
                *a = best;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = vec![[0.0f64; 3]; k];
        for (&a, &p) in assignment.iter().zip(points) {
            sums[a][0] += p[0];
            sums[a][1] += p[1];
            sums[a][2] += 1.0;
        }
        for (c, s) in centers.iter_mut().zip(&sums) {
            if s[2] > 0.0 {
                *c = [s[0] / s[2], s[1] / s[2]];
            }
        }
    }
    assignment
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Independent RNG stream for one pixel, derived from the root seed only.
pub fn pixel_rng(seed: u64, at: Coord) -> ChaCha8Rng {
    let key = ((at.v as u64) << 32) | at.u as u64;
    ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(key)))
}

/// Mean and covariance (+ `epsilon` on the diagonal) of `p - q` over the
/// window, computed in two passes.
pub fn init_pair<T: Real>(frames: &[Frame<T>], owner: Coord, q: Coord, epsilon: T) -> PairModel<T> {
    let c = frames[0].channels();
    let width = frames[0].width();
    let (pi, qi) = (owner.index(width), q.index(width));
    let n = T::lit(frames.len() as f64);
    let mut pair = PairModel::new(q);
    for f in frames {
        let (p, qv) = (f.pixel_at(pi), f.pixel_at(qi));
        for i in 0..c {
            pair.delta[i] += p[i] - qv[i];
        }
    }
    for i in 0..c {
        pair.delta[i] /= n;
    }
    for f in frames {
        let (p, qv) = (f.pixel_at(pi), f.pixel_at(qi));
        let mut r = [T::zero(); MAX_CHANNELS];
        for i in 0..c {
            r[i] = p[i] - qv[i] - pair.delta[i];
        }
        for i in 0..c {
            for j in i..c {
                pair.sigma[packed_index(i, j)] += r[i] * r[j];
            }
        }
    }
    let denom = n - T::one();
    for i in 0..c {
        for j in i..c {
            let k = packed_index(i, j);
            pair.sigma[k] /= denom;
            if i == j {
                pair.sigma[k] += epsilon;
            }
        }
    }
    pair
}

/// Per-channel min/max of one pixel over the window.
fn init_range<T: Real>(frames: &[Frame<T>], index: usize) -> ([T; MAX_CHANNELS], [T; MAX_CHANNELS]) {
    let mut lo = [T::zero(); MAX_CHANNELS];
    let mut hi = [T::zero(); MAX_CHANNELS];
    let c = frames[0].channels();
    lo[..c].copy_from_slice(frames[0].pixel_at(index));
    hi[..c].copy_from_slice(frames[0].pixel_at(index));
    for f in &frames[1..] {
        for (i, &x) in f.pixel_at(index).iter().enumerate() {
            lo[i] = lo[i].min(x);
            hi[i] = hi[i].max(x);
        }
    }
    (lo, hi)
}

/// Row-completion callback: `(rows_done, total_rows)`.
pub type ProgressFn<'a> = &'a (dyn Fn(usize, usize) + Sync);

#[derive(Clone, Copy, Default)]
pub struct TrainOptions<'a> {
    /// Only pixels on this lattice are considered as candidates. 0 means 1.
    pub stride: usize,
    pub progress: Option<ProgressFn<'a>>,
}

/// Wall time of each training stage.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StageTimings {
    pub statistics: Duration,
    pub correlation: Duration,
    pub sampling: Duration,
}

/// Per-pixel record of how the supports were chosen.
#[derive(Clone, Debug, PartialEq)]
pub struct Selection<T> {
    pub threshold: T,
    pub fallback: bool,
    /// Correlation of the owner with each chosen support, in pair order.
    pub support_gammas: Vec<T>,
}

#[derive(Clone, Debug)]
pub struct Training<T> {
    pub model: BackgroundModel<T>,
    pub selections: Vec<Selection<T>>,
    pub timings: StageTimings,
}

pub fn train<T: Real>(frames: &[Frame<T>], params: &ModelParams) -> Result<BackgroundModel<T>> {
    Ok(train_with(frames, params, TrainOptions::default())?.model)
}

/// Trains on the first `params.training_frames` frames.
pub fn train_with<T: Real>(frames: &[Frame<T>], params: &ModelParams, opts: TrainOptions<'_>) -> Result<Training<T>> {
    params.validate()?;
    let window = params.training_frames;
    if frames.len() < window {
        return Err(Error::InsufficientData(format!(
            "training window is {window} frames, only {} supplied",
            frames.len()
        )));
    }
    let frames = &frames[..window];
    check_uniform(frames)?;
    let (width, height, channels) = (frames[0].width(), frames[0].height(), frames[0].channels());
    let stride = opts.stride.max(1);
    let k = params.k_supports;
    let n_max = params.candidate_count();

    let started = Instant::now();
    let series = LumaSeries::from_frames(frames)?;
    let stats = stats_from_series(&series);
    let statistics = started.elapsed();

    let started = Instant::now();
    let rows = CorrelationRows::new(&series);
    drop(series);
    let done = AtomicUsize::new(0);
    let per_row: Vec<Vec<Result<CandidateSet<T>>>> = (0..height)
        .into_par_iter()
        .map_init(Vec::new, |buf, v| {
            let out = (0..width)
                .map(|u| {
                    let owner = Coord::new(u as u32, v as u32);
                    let idx = owner.index(width);
                    rows.row_into(owner, stride, buf);
                    let threshold = adaptive_threshold(stats.variance[idx], stats.noise_var[idx], params);
                    select_candidates(owner, buf, threshold, n_max, k)
                })
                .collect();
            if let Some(progress) = opts.progress {
                progress(done.fetch_add(1, AtomicOrdering::Relaxed) + 1, height);
            }
            out
        })
        .collect();
    let correlation = started.elapsed();

    let mut candidate_sets = Vec::with_capacity(width * height);
    for (idx, res) in per_row.into_iter().flatten().enumerate() {
        let owner = Coord::from_index(idx, width);
        candidate_sets.push(res.map_err(|e| Error::Training {
            u: owner.u,
            v: owner.v,
            source: Box::new(e),
        })?);
    }

    let started = Instant::now();
    let eps = T::lit(params.cov_epsilon);
    let built: Vec<Result<(PixelModel<T>, Selection<T>)>> = candidate_sets
        .par_iter()
        .enumerate()
        .map(|(idx, cands)| {
            let owner = cands.owner;
            let mut rng = pixel_rng(params.seed, owner);
            let supports = sample_supporting(cands, k, &mut rng).map_err(|e| Error::Training {
                u: owner.u,
                v: owner.v,
                source: Box::new(e),
            })?;
            let support_gammas = supports
                .iter()
                .map(|q| {
                    cands
                        .candidates
                        .iter()
                        .find(|(c, _)| c == q)
                        .map(|(_, g)| *g)
                        .expect("support drawn from candidates")
                })
                .collect();
            let pairs = supports.iter().map(|&q| init_pair(frames, owner, q, eps)).collect();
            let (range_lo, range_hi) = init_range(frames, idx);
            Ok((
                PixelModel {
                    pairs,
                    range_lo,
                    range_hi,
                },
                Selection {
                    threshold: cands.threshold,
                    fallback: cands.fallback,
                    support_gammas,
                },
            ))
        })
        .collect();
    let sampling = started.elapsed();

    let mut pixels = Vec::with_capacity(width * height);
    let mut selections = Vec::with_capacity(width * height);
    for res in built {
        let (pm, sel) = res?;
        pixels.push(pm);
        selections.push(sel);
    }
    let model = BackgroundModel::new(width, height, channels, params.clone(), pixels)?;
    Ok(Training {
        model,
        selections,
        timings: StageTimings {
            statistics,
            correlation,
            sampling,
        },
    })
}
