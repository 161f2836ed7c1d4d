//! Deterministic synthetic video with ground truth.
//!
//! Scenes are a static (or globally fluctuating) background plus scripted
//! events. Illumination changes and periodic regions are background; moving
//! boxes and camouflage boxes are foreground. Samples are rounded to 8-bit
//! levels, so a generated sequence written to disk reads back exactly.
//!
//! Scene elements have a one-line text form used by configuration files:
//!
//! ```text
//! flat level=100
//! two-region left=60 right=180 amplitude=20 period=25
//! step offset=30 start=150
//! box x=0 y=28 w=8 h=8 intensity=180 vx=1 vy=0 start=100
//! camouflage x=2 y=2 w=60 h=60 offset=40 start=120 end=121
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::io::{write_frame, write_temporal_roi, write_u8, FramePattern, GroundTruth, GroundTruthFrame, SequenceSpec};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Background {
    Flat { level: f64 },
    /// Horizontal ramp from the left column to the right column.
    Gradient { left: f64, right: f64 },
    /// Left and right halves at different levels, both following one shared
    /// sinusoidal fluctuation.
    TwoRegion { left: f64, right: f64, amplitude: f64, period: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl Rect {
    fn contains(&self, u: i64, v: i64) -> bool {
        u >= self.x as i64 && v >= self.y as i64 && u < (self.x + self.w) as i64 && v < (self.y + self.h) as i64
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Event {
    /// Adds `offset` to every pixel from frame `start` on.
    IlluminationStep { offset: f64, start: usize },
    /// Multiplies every pixel by `factor` from frame `start` on.
    IlluminationScale { factor: f64, start: usize },
    /// Opaque box of constant intensity whose top-left corner starts at
    /// `(x, y)` and moves by `(vx, vy)` pixels per frame.
    MovingBox {
        x: usize,
        y: usize,
        w: usize,
        h: usize,
        intensity: f64,
        vx: i64,
        vy: i64,
        start: usize,
        end: Option<usize>,
    },
    /// Region whose intensity oscillates in unison.
    PeriodicRegion { rect: Rect, amplitude: f64, period: f64 },
    /// Object that keeps the background's local texture but shifts its
    /// intensity uniformly.
    Camouflage { rect: Rect, offset: f64, start: usize, end: Option<usize> },
}

impl Event {
    fn active(start: usize, end: Option<usize>, t: usize) -> bool {
        t >= start && end.map_or(true, |e| t < e)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub frame_count: usize,
    pub seed: u64,
    pub background: Background,
    /// Standard deviation of i.i.d. Gaussian sensor noise, intensity units.
    pub noise_sigma: f64,
    pub events: Vec<Event>,
}

impl Default for SceneSpec {
    fn default() -> Self {
        SceneSpec {
            width: 64,
            height: 64,
            channels: 1,
            frame_count: 200,
            seed: 0,
            background: Background::Flat { level: 100.0 },
            noise_sigma: 2.0,
            events: Vec::new(),
        }
    }
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidScene(msg));
        if self.width == 0 || self.height == 0 || self.frame_count == 0 {
            return bad(format!(
                "dimensions must be positive, got {}x{}x{} frames",
                self.width, self.height, self.frame_count
            ));
        }
        if self.channels != 1 && self.channels != 3 {
            return bad(format!("channels must be 1 or 3, got {}", self.channels));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad(format!("noise sigma must be nonnegative, got {}", self.noise_sigma));
        }
        match self.background {
            Background::TwoRegion { period, .. } if !(period > 0.0) => {
                return bad(format!("background {} needs a positive period", self.background))
            }
            _ => {}
        }
        for (i, ev) in self.events.iter().enumerate() {
            if let Err(reason) = self.check_event(ev) {
                return bad(format!("event {i} ({ev}): {reason}"));
            }
        }
        Ok(())
    }

    fn check_event(&self, ev: &Event) -> std::result::Result<(), String> {
        let in_time = |start: usize, end: Option<usize>| {
            if start >= self.frame_count {
                return Err(format!("starts at frame {start}, scene has {}", self.frame_count));
            }
            match end {
                Some(e) if e <= start => Err(format!("ends at {e}, before it starts")),
                _ => Ok(()),
            }
        };
        let in_frame = |r: &Rect| {
            if r.w == 0 || r.h == 0 {
                Err("empty rectangle".to_string())
            } else if r.x + r.w > self.width || r.y + r.h > self.height {
                Err(format!("rectangle exceeds the {}x{} frame", self.width, self.height))
            } else {
                Ok(())
            }
        };
        match *ev {
            Event::IlluminationStep { offset, start } => {
                if !offset.is_finite() {
                    return Err("offset must be finite".into());
                }
                in_time(start, None)
            }
            Event::IlluminationScale { factor, start } => {
                if !(factor > 0.0 && factor.is_finite()) {
                    return Err("factor must be positive".into());
                }
                in_time(start, None)
            }
            Event::MovingBox { x, y, w, h, intensity, start, end, .. } => {
                in_frame(&Rect { x, y, w, h })?;
                if !intensity.is_finite() {
                    return Err("intensity must be finite".into());
                }
                in_time(start, end)
            }
            Event::PeriodicRegion { rect, amplitude, period } => {
                in_frame(&rect)?;
                if !(period > 0.0) || !amplitude.is_finite() {
                    return Err("needs a positive period and finite amplitude".into());
                }
                Ok(())
            }
            Event::Camouflage { rect, offset, start, end } => {
                in_frame(&rect)?;
                if !offset.is_finite() {
                    return Err("offset must be finite".into());
                }
                in_time(start, end)
            }
        }
    }

    /// Noise-free intensity and truth at `(u, v)` in frame `t`.
    fn render(&self, u: usize, v: usize, t: usize) -> (f64, bool) {
        let tf = t as f64;
        let mut value = match self.background {
            Background::Flat { level } => level,
            Background::Gradient { left, right } => {
                let frac = if self.width > 1 { u as f64 / (self.width - 1) as f64 } else { 0.0 };
                left + (right - left) * frac
            }
            Background::TwoRegion { left, right, amplitude, period } => {
                let base = if u < self.width / 2 { left } else { right };
                base + amplitude * (std::f64::consts::TAU * tf / period).sin()
            }
        };
        let (ui, vi) = (u as i64, v as i64);
        let mut foreground = false;
        for ev in &self.events {
            match *ev {
                Event::PeriodicRegion { rect, amplitude, period } if rect.contains(ui, vi) => {
                    value += amplitude * (std::f64::consts::TAU * tf / period).sin();
                }
                Event::Camouflage { rect, offset, start, end }
                    if Event::active(start, end, t) && rect.contains(ui, vi) =>
                {
                    value += offset;
                    foreground = true;
                }
                _ => {}
            }
        }
        for ev in &self.events {
            if let Event::MovingBox { x, y, w, h, intensity, vx, vy, start, end } = *ev {
                if Event::active(start, end, t) {
                    let dt = (t - start) as i64;
                    let (bx, by) = (x as i64 + vx * dt, y as i64 + vy * dt);
                    if ui >= bx && vi >= by && ui < bx + w as i64 && vi < by + h as i64 {
                        value = intensity;
                        foreground = true;
                    }
                }
            }
        }
        for ev in &self.events {
            match *ev {
                Event::IlluminationStep { offset, start } if t >= start => value += offset,
                Event::IlluminationScale { factor, start } if t >= start => value *= factor,
                _ => {}
            }
        }
        (value, foreground)
    }

    /// Renders frame `t` with its ground truth.
    pub fn frame<T: Real>(&self, t: usize) -> Result<(Frame<T>, GroundTruthFrame)> {
        let mut rng = ChaCha8Rng::seed_from_u64(frame_seed(self.seed, t));
        let noise = Normal::new(0.0, self.noise_sigma).map_err(|e| Error::InvalidScene(e.to_string()))?;
        let c = self.channels;
        let mut samples = Vec::with_capacity(self.width * self.height * c);
        let mut truth = Vec::with_capacity(self.width * self.height);
        for v in 0..self.height {
            for u in 0..self.width {
                let (value, fg) = self.render(u, v, t);
                for _ in 0..c {
                    let n = if self.noise_sigma > 0.0 { noise.sample(&mut rng) } else { 0.0 };
                    samples.push(T::lit((value + n).round().clamp(0.0, 255.0)));
                }
                truth.push(if fg { GroundTruth::Foreground } else { GroundTruth::Background });
            }
        }
        Ok((
            Frame::new(self.width, self.height, c, samples)?,
            GroundTruthFrame::new(self.width, self.height, truth)?,
        ))
    }
}

fn frame_seed(seed: u64, t: usize) -> u64 {
    let mut x = seed ^ (t as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Every frame of the scene, in order.
pub fn generate<T: Real>(spec: &SceneSpec) -> Result<Vec<(Frame<T>, GroundTruthFrame)>> {
    spec.validate()?;
    (0..spec.frame_count).into_par_iter().map(|t| spec.frame(t)).collect()
}

/// Writes the scene as a changedetection.net-style video directory
/// (`input/inNNNNNN.pgm|ppm`, `groundtruth/gtNNNNNN.pgm`, `ROI.pgm`,
/// `temporalROI.txt`). File indices are 1-based: frame `t` is `t + 1`.
pub fn write_sequence(spec: &SceneSpec, dir: impl AsRef<Path>, temporal_roi: Option<(usize, usize)>) -> Result<SequenceSpec> {
    spec.validate()?;
    let dir = dir.as_ref();
    let input = dir.join("input");
    let gt_dir = dir.join("groundtruth");
    for d in [&input, &gt_dir] {
        fs::create_dir_all(d).map_err(|e| Error::io(d, e))?;
    }
    let ext = if spec.channels == 1 { "pgm" } else { "ppm" };
    let in_pattern = FramePattern::new("in", 6, &format!(".{ext}"));
    let gt_pattern = FramePattern::new("gt", 6, ".pgm");
    (0..spec.frame_count).into_par_iter().try_for_each(|t| -> Result<()> {
        let (frame, gt) = spec.frame::<f32>(t)?;
        write_frame(&frame, input.join(in_pattern.format(t + 1)))?;
        write_u8(&gt_dir.join(gt_pattern.format(t + 1)), spec.width, spec.height, 1, gt.to_gray())
    })?;
    write_u8(
        &dir.join("ROI.pgm"),
        spec.width,
        spec.height,
        1,
        vec![255; spec.width * spec.height],
    )?;
    let (first, last) = temporal_roi.unwrap_or((1, spec.frame_count));
    write_temporal_roi(dir.join("temporalROI.txt"), first, last)?;
    let mut seq = SequenceSpec::new(&input, in_pattern, 1, spec.frame_count);
    seq.groundtruth_dir = Some(gt_dir);
    seq.groundtruth_pattern = gt_pattern;
    seq.roi_path = Some(dir.join("ROI.pgm"));
    Ok(seq)
}

// Text forms.

fn fields(s: &str) -> Result<(String, BTreeMap<String, String>)> {
    let mut parts = s.split_whitespace();
    let kind = parts
        .next()
        .ok_or_else(|| Error::InvalidScene("empty element".into()))?
        .to_ascii_lowercase();
    let mut map = BTreeMap::new();
    for p in parts {
        let (k, v) = p
            .split_once('=')
            .ok_or_else(|| Error::InvalidScene(format!("'{p}' in '{s}' is not key=value")))?;
        if map.insert(k.to_string(), v.to_string()).is_some() {
            return Err(Error::InvalidScene(format!("duplicate key '{k}' in '{s}'")));
        }
    }
    Ok((kind, map))
}

struct Fields<'a> {
    src: &'a str,
    map: BTreeMap<String, String>,
}

impl Fields<'_> {
    fn get<V: FromStr>(&mut self, key: &str) -> Result<V> {
        let raw = self
            .map
            .remove(key)
            .ok_or_else(|| Error::InvalidScene(format!("'{}' is missing '{key}'", self.src)))?;
        raw.parse()
            .map_err(|_| Error::InvalidScene(format!("'{}': bad value '{raw}' for '{key}'", self.src)))
    }

    fn opt<V: FromStr>(&mut self, key: &str) -> Result<Option<V>> {
        if self.map.contains_key(key) {
            self.get(key).map(Some)
        } else {
            Ok(None)
        }
    }

    fn finish(self) -> Result<()> {
        match self.map.keys().next() {
            Some(k) => Err(Error::InvalidScene(format!("'{}': unknown key '{k}'", self.src))),
            None => Ok(()),
        }
    }

    fn rect(&mut self) -> Result<Rect> {
        Ok(Rect {
            x: self.get("x")?,
            y: self.get("y")?,
            w: self.get("w")?,
            h: self.get("h")?,
        })
    }
}

impl FromStr for Background {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, map) = fields(s)?;
        let mut f = Fields { src: s, map };
        let bg = match kind.as_str() {
            "flat" => Background::Flat { level: f.get("level")? },
            "gradient" => Background::Gradient {
                left: f.get("left")?,
                right: f.get("right")?,
            },
            "two-region" => Background::TwoRegion {
                left: f.get("left")?,
                right: f.get("right")?,
                amplitude: f.get("amplitude")?,
                period: f.get("period")?,
            },
            other => return Err(Error::InvalidScene(format!("unknown background '{other}'"))),
        };
        f.finish()?;
        Ok(bg)
    }
}

impl fmt::Display for Background {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Background::Flat { level } => write!(f, "flat level={level}"),
            Background::Gradient { left, right } => write!(f, "gradient left={left} right={right}"),
            Background::TwoRegion { left, right, amplitude, period } => {
                write!(f, "two-region left={left} right={right} amplitude={amplitude} period={period}")
            }
        }
    }
}

impl FromStr for Event {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, map) = fields(s)?;
        let mut f = Fields { src: s, map };
        let ev = match kind.as_str() {
            "step" => Event::IlluminationStep {
                offset: f.get("offset")?,
                start: f.get("start")?,
            },
            "scale" => Event::IlluminationScale {
                factor: f.get("factor")?,
                start: f.get("start")?,
            },
            "box" => Event::MovingBox {
                x: f.get("x")?,
                y: f.get("y")?,
                w: f.get("w")?,
                h: f.get("h")?,
                intensity: f.get("intensity")?,
                vx: f.opt("vx")?.unwrap_or(0),
                vy: f.opt("vy")?.unwrap_or(0),
                start: f.opt("start")?.unwrap_or(0),
                end: f.opt("end")?,
            },
            "periodic" => Event::PeriodicRegion {
                rect: f.rect()?,
                amplitude: f.get("amplitude")?,
                period: f.get("period")?,
            },
            "camouflage" => Event::Camouflage {
                rect: f.rect()?,
                offset: f.get("offset")?,
                start: f.opt("start")?.unwrap_or(0),
                end: f.opt("end")?,
            },
            other => return Err(Error::InvalidScene(format!("unknown event '{other}'"))),
        };
        f.finish()?;
        Ok(ev)
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let end = |e: Option<usize>| e.map(|e| format!(" end={e}")).unwrap_or_default();
        match *self {
            Event::IlluminationStep { offset, start } => write!(f, "step offset={offset} start={start}"),
            Event::IlluminationScale { factor, start } => write!(f, "scale factor={factor} start={start}"),
            Event::MovingBox { x, y, w, h, intensity, vx, vy, start, end: e } => write!(
                f,
                "box x={x} y={y} w={w} h={h} intensity={intensity} vx={vx} vy={vy} start={start}{}",
                end(e)
            ),
            Event::PeriodicRegion { rect, amplitude, period } => write!(
                f,
                "periodic x={} y={} w={} h={} amplitude={amplitude} period={period}",
                rect.x, rect.y, rect.w, rect.h
            ),
            Event::Camouflage { rect, offset, start, end: e } => write!(
                f,
                "camouflage x={} y={} w={} h={} offset={offset} start={start}{}",
                rect.x,
                rect.y,
                rect.w,
                rect.h,
                end(e)
            ),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quiet(frames: usize) -> SceneSpec {
        SceneSpec {
            width: 16,
            height: 12,
            channels: 1,
            frame_count: frames,
            noise_sigma: 0.0,
            ..Default::default()
        }
    }

    #[test]
    fn flat_noiseless_is_static() {
        let seq = generate::<f64>(&quiet(5)).unwrap();
        for (f, gt) in &seq {
            assert_eq!(f, &seq[0].0);
            assert!(gt.labels().iter().all(|g| *g == GroundTruth::Background));
        }
    }

    #[test]
    fn additive_step_is_exact() {
        let mut s = quiet(160);
        s.events.push(Event::IlluminationStep { offset: 30.0, start: 150 });
        let (a, _) = s.frame::<f64>(149).unwrap();
        let (b, gt) = s.frame::<f64>(150).unwrap();
        for (x, y) in a.samples().iter().zip(b.samples()) {
            assert_eq!(y - x, 30.0);
        }
        assert!(gt.labels().iter().all(|g| *g == GroundTruth::Background));
    }

    #[test]
    fn moving_box_advances_one_column() {
        let mut s = quiet(10);
        s.events.push(Event::MovingBox {
            x: 0,
            y: 2,
            w: 8,
            h: 8,
            intensity: 200.0,
            vx: 1,
            vy: 0,
            start: 0,
            end: None,
        });
        for t in 0..8 {
            let (f, gt) = s.frame::<f64>(t).unwrap();
            for v in 0..12 {
                for u in 0..16 {
                    let inside = u >= t && u < t + 8 && (2..10).contains(&v);
                    let idx = v * 16 + u;
                    assert_eq!(gt.labels()[idx] == GroundTruth::Foreground, inside, "t={t} u={u} v={v}");
                    assert_eq!(f.samples()[idx], if inside { 200.0 } else { 100.0 });
                }
            }
        }
    }

    #[test]
    fn camouflage_preserves_differences() {
        let mut s = quiet(3);
        s.background = Background::Gradient { left: 10.0, right: 160.0 };
        let rect = Rect { x: 2, y: 2, w: 6, h: 4 };
        s.events.push(Event::Camouflage { rect, offset: 40.0, start: 1, end: Some(2) });
        let (before, _) = s.frame::<f64>(0).unwrap();
        let (during, gt) = s.frame::<f64>(1).unwrap();
        let (after, _) = s.frame::<f64>(2).unwrap();
        assert_eq!(before, after);
        for v in 0..12 {
            for u in 0..16 {
                let idx = v * 16 + u;
                let inside = rect.contains(u as i64, v as i64);
                let d = during.samples()[idx] - before.samples()[idx];
                assert_eq!(d, if inside { 40.0 } else { 0.0 });
                assert_eq!(gt.labels()[idx].is_foreground(), inside);
            }
        }
    }

    #[test]
    fn seeded_and_clamped() {
        let mut s = SceneSpec { frame_count: 4, width: 8, height: 8, ..Default::default() };
        s.background = Background::Flat { level: 250.0 };
        s.noise_sigma = 20.0;
        let a = generate::<f64>(&s).unwrap();
        let b = generate::<f64>(&s).unwrap();
        assert_eq!(a.iter().map(|x| &x.0).collect::<Vec<_>>(), b.iter().map(|x| &x.0).collect::<Vec<_>>());
        assert!(a.iter().all(|(f, _)| f.samples().iter().all(|&x| (0.0..=255.0).contains(&x))));
        s.seed = 1;
        let c = generate::<f64>(&s).unwrap();
        assert_ne!(a[0].0, c[0].0);
    }

    #[test]
    fn rejects_bad_events() {
        let mut s = quiet(10);
        s.events.push(Event::IlluminationStep { offset: 5.0, start: 3 });
        s.events.push(Event::MovingBox {
            x: 12,
            y: 0,
            w: 8,
            h: 8,
            intensity: 1.0,
            vx: 0,
            vy: 0,
            start: 0,
            end: None,
        });
        match s.validate() {
            Err(Error::InvalidScene(msg)) => assert!(msg.starts_with("event 1 (box"), "{msg}"),
            other => panic!("{other:?}"),
        }
        let mut s = quiet(10);
        s.events.push(Event::IlluminationStep { offset: 5.0, start: 10 });
        assert!(s.validate().is_err());
    }

    #[test]
    fn text_forms_round_trip() {
        for text in [
            "step offset=30 start=150",
            "scale factor=1.25 start=10",
            "box x=0 y=28 w=8 h=8 intensity=180 vx=1 vy=-1 start=100 end=140",
            "periodic x=1 y=2 w=3 h=4 amplitude=10 period=12.5",
            "camouflage x=2 y=2 w=60 h=60 offset=40 start=120",
        ] {
            let ev: Event = text.parse().unwrap();
            assert_eq!(ev.to_string(), text);
        }
        for text in ["flat level=100", "gradient left=0 right=255", "two-region left=60 right=180 amplitude=20 period=25"] {
            let bg: Background = text.parse().unwrap();
            assert_eq!(bg.to_string(), text);
        }
        assert!("step offset=3".parse::<Event>().is_err());
        assert!("step offset=3 start=1 colour=red".parse::<Event>().is_err());
        assert!("teleport x=1".parse::<Event>().is_err());
    }
}
