//! Image containers shared by every stage: multichannel frames and binary
//! label masks.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Pixel coordinate; `u` is the column, `v` the row.
///
/// Ordering is row-major, which is also the tie-break order used wherever
/// candidates need a deterministic ranking.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct Coord {
    pub u: u32,
    pub v: u32,
}

impl Coord {
    pub const fn new(u: u32, v: u32) -> Self {
        Coord { u, v }
    }

    #[inline]
    pub fn index(self, width: usize) -> usize {
        self.v as usize * width + self.u as usize
    }

    #[inline]
    pub fn from_index(index: usize, width: usize) -> Self {
        Coord {
            u: (index % width) as u32,
            v: (index / width) as u32,
        }
    }

    pub fn distance2(self, other: Coord) -> f64 {
        let du = self.u as f64 - other.u as f64;
        let dv = self.v as f64 - other.v as f64;
        du * du + dv * dv
    }
}

impl Ord for Coord {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.v, self.u).cmp(&(other.v, other.u))
    }
}

impl PartialOrd for Coord {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.u, self.v)
    }
}

/// W×H grid of 1- or 3-channel intensities, channel-interleaved, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Frame<T> {
    width: usize,
    height: usize,
    channels: usize,
    samples: Vec<T>,
}

impl<T: Real> Frame<T> {
    pub fn new(width: usize, height: usize, channels: usize, samples: Vec<T>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidInput(format!(
                "frame dimensions must be positive, got {width}x{height}"
            )));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidInput(format!(
                "frames have 1 or 3 channels, got {channels}"
            )));
        }
        if samples.len() != width * height * channels {
            return Err(Error::InvalidInput(format!(
                "expected {} samples for {width}x{height}x{channels}, got {}",
                width * height * channels,
                samples.len()
            )));
        }
        Ok(Frame {
            width,
            height,
            channels,
            samples,
        })
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: T) -> Result<Self> {
        Self::new(width, height, channels, vec![value; width * height * channels])
    }

    pub fn from_u8(width: usize, height: usize, channels: usize, bytes: &[u8]) -> Result<Self> {
        let samples = bytes.iter().map(|&b| T::lit(b as f64)).collect();
        Self::new(width, height, channels, samples)
    }

    /// Rounds and clamps every sample into 8-bit range.
    pub fn to_u8(&self) -> Vec<u8> {
        self.samples
            .iter()
            .map(|s| s.as_f64().round().clamp(0.0, 255.0) as u8)
            .collect()
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

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [T] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<T> {
        self.samples
    }

    /// Channel values of the pixel at linear index `index`.
    #[inline]
    pub fn pixel_at(&self, index: usize) -> &[T] {
        let c = self.channels;
        &self.samples[index * c..index * c + c]
    }

    #[inline]
    pub fn pixel(&self, at: Coord) -> &[T] {
        self.pixel_at(at.index(self.width))
    }

    pub fn same_shape(&self, other: &Frame<T>) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }

    /// Luma of one pixel; single-channel frames return the sample itself.
    #[inline]
    pub fn luma_at(&self, index: usize) -> T {
        let px = self.pixel_at(index);
        if px.len() == 1 {
            px[0]
        } else {
            luma(px[0], px[1], px[2])
        }
    }

    pub fn to_luma(&self) -> Vec<T> {
        (0..self.pixel_count()).map(|i| self.luma_at(i)).collect()
    }

    pub fn cast<U: Real>(&self) -> Frame<U> {
        Frame {
            width: self.width,
            height: self.height,
            channels: self.channels,
            samples: self.samples.iter().map(|s| U::lit(s.as_f64())).collect(),
        }
    }
}

/// Rec. 601 luma.
#[inline]
pub fn luma<T: Real>(r: T, g: T, b: T) -> T {
    T::lit(0.299) * r + T::lit(0.587) * g + T::lit(0.114) * b
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
#[repr(u8)]
pub enum Label {
    #[default]
    Background = 0,
    Foreground = 1,
}

impl Label {
    pub fn is_foreground(self) -> bool {
        self == Label::Foreground
    }
}

/// Per-pixel detection result.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelMask {
    width: usize,
    height: usize,
    labels: Vec<Label>,
}

impl LabelMask {
    pub fn new(width: usize, height: usize, labels: Vec<Label>) -> Result<Self> {
        if width == 0 || height == 0 || labels.len() != width * height {
            return Err(Error::InvalidInput(format!(
                "mask of {width}x{height} needs {} labels, got {}",
                width * height,
                labels.len()
            )));
        }
        Ok(LabelMask {
            width,
            height,
            labels,
        })
    }

    pub fn background(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, vec![Label::Background; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn labels_mut(&mut self) -> &mut [Label] {
        &mut self.labels
    }

    pub fn get(&self, at: Coord) -> Label {
        self.labels[at.index(self.width)]
    }

    pub fn foreground_count(&self) -> usize {
        self.labels.iter().filter(|l| l.is_foreground()).count()
    }
}
