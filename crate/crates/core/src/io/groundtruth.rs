use crate::error::{Error, Result};
use crate::frame::{Coord, Frame};
use crate::scalar::Real;

/// Ground-truth class of one pixel in the changedetection.net encoding.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GroundTruth {
    Background,
    Shadow,
    OutsideRoi,
    Unknown,
    Foreground,
}

impl GroundTruth {
    /// Standard gray levels, ascending.
    pub const LEVELS: [(u8, GroundTruth); 5] = [
        (0, GroundTruth::Background),
        (50, GroundTruth::Shadow),
        (85, GroundTruth::OutsideRoi),
        (170, GroundTruth::Unknown),
        (255, GroundTruth::Foreground),
    ];

    pub fn gray_level(self) -> u8 {
        Self::LEVELS.iter().find(|(_, g)| *g == self).map(|(l, _)| *l).unwrap()
    }

    /// Nearest standard level; ties go to the lower level.
    pub fn from_gray(value: f64) -> GroundTruth {
        let mut best = Self::LEVELS[0];
        for level in Self::LEVELS {
            if (value - level.0 as f64).abs() < (value - best.0 as f64).abs() {
                best = level;
            }
        }
        best.1
    }

    /// Whether the pixel takes part in scoring.
    pub fn is_scored(self) -> bool {
        !matches!(self, GroundTruth::Unknown | GroundTruth::OutsideRoi)
    }

    /// Truth value for scoring; shadows count as background.
    pub fn is_foreground(self) -> bool {
        self == GroundTruth::Foreground
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroundTruthFrame {
    width: usize,
    height: usize,
    labels: Vec<GroundTruth>,
}

impl GroundTruthFrame {
    pub fn new(width: usize, height: usize, labels: Vec<GroundTruth>) -> Result<Self> {
        if width == 0 || height == 0 || labels.len() != width * height {
            return Err(Error::InvalidInput(format!(
                "ground truth of {width}x{height} needs {} labels, got {}",
                width * height,
                labels.len()
            )));
        }
        Ok(GroundTruthFrame { width, height, labels })
    }

    pub fn filled(width: usize, height: usize, label: GroundTruth) -> Result<Self> {
        Self::new(width, height, vec![label; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[GroundTruth] {
        &self.labels
    }

    pub fn labels_mut(&mut self) -> &mut [GroundTruth] {
        &mut self.labels
    }

    pub fn get(&self, at: Coord) -> GroundTruth {
        self.labels[at.index(self.width)]
    }

    pub fn to_gray(&self) -> Vec<u8> {
        self.labels.iter().map(|g| g.gray_level()).collect()
    }

    /// Marks every pixel where `roi` is zero as outside the region of interest.
    pub fn apply_roi<T: Real>(&mut self, roi: &Frame<T>) -> Result<()> {
        if roi.width() != self.width || roi.height() != self.height {
            return Err(Error::InvalidInput(format!(
                "ROI is {}x{}, ground truth is {}x{}",
                roi.width(),
                roi.height(),
                self.width,
                self.height
            )));
        }
        for (idx, g) in self.labels.iter_mut().enumerate() {
            if roi.pixel_at(idx).iter().all(|&s| s == T::zero()) {
                *g = GroundTruth::OutsideRoi;
            }
        }
        Ok(())
    }
}

pub fn decode_groundtruth<T: Real>(frame: &Frame<T>) -> Result<GroundTruthFrame> {
    if frame.channels() != 1 {
        return Err(Error::InvalidInput(format!(
            "ground truth must be single-channel, got {} channels",
            frame.channels()
        )));
    }
    let mut odd = 0usize;
    let labels = frame
        .samples()
        .iter()
        .map(|&s| {
            let v = s.as_f64();
            let g = GroundTruth::from_gray(v);
            if v != g.gray_level() as f64 {
                odd += 1;
            }
            g
        })
        .collect();
    if odd > 0 {
        log::debug!("ground truth: {odd} pixels off the standard gray levels snapped to nearest");
    }
    GroundTruthFrame::new(frame.width(), frame.height(), labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decode1(v: f64) -> GroundTruth {
        let f = Frame::new(1, 1, 1, vec![v]).unwrap();
        decode_groundtruth(&f).unwrap().labels()[0]
    }

    #[test]
    fn standard_levels() {
        assert_eq!(decode1(255.0), GroundTruth::Foreground);
        assert_eq!(decode1(170.0), GroundTruth::Unknown);
        assert_eq!(decode1(85.0), GroundTruth::OutsideRoi);
        assert_eq!(decode1(50.0), GroundTruth::Shadow);
        assert_eq!(decode1(0.0), GroundTruth::Background);
        assert!(!GroundTruth::Unknown.is_scored());
    }

    #[test]
    fn nearest_level() {
        assert_eq!(decode1(60.0), GroundTruth::Shadow);
        assert_eq!(decode1(200.0), GroundTruth::Unknown);
        assert_eq!(decode1(213.0), GroundTruth::Foreground);
        assert_eq!(decode1(25.0), GroundTruth::Background);
    }

    #[test]
    fn rejects_color() {
        let f = Frame::<f64>::filled(1, 1, 3, 0.0).unwrap();
        assert!(matches!(decode_groundtruth(&f), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn roi_masks_out() {
        let mut gt = GroundTruthFrame::filled(2, 1, GroundTruth::Foreground).unwrap();
        let roi = Frame::<f64>::new(2, 1, 1, vec![0.0, 255.0]).unwrap();
        gt.apply_roi(&roi).unwrap();
        assert_eq!(gt.labels(), &[GroundTruth::OutsideRoi, GroundTruth::Foreground]);
    }
}
