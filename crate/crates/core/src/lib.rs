//! Background subtraction with co-occurring pixel pairs.
//!
//! Every pixel is modelled jointly by a set of highly correlated, spatially
//! scattered supporting pixels: a single Gaussian per pair describes the
//! colour deviation between the pixel and its support, so global intensity
//! changes that move both together are absorbed. An online recursive update
//! keeps the pair statistics current, and a per-pixel intensity range catches
//! objects that shift a pixel and its supports alike.
//!
//! The arithmetic is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the scalar for the common cases.
//!
//! ```no_run
//! use cp3::{synth, train, ModelParams, Model};
//!
//! let scene = synth::SceneSpec::default();
//! let frames: Vec<_> = synth::generate::<f64>(&scene)?.into_iter().map(|(f, _)| f).collect();
//! let mut model: Model = train(&frames, &ModelParams::default())?;
//! let mask = model.step(&frames[150])?;
//! # Ok::<(), cp3::Error>(())
//! ```

pub mod error;
pub mod eval;
pub mod frame;
pub mod io;
pub mod model;
pub mod scalar;
pub mod synth;
pub mod trainer;

pub use error::{Error, Result};
pub use eval::{aggregate, metrics, ConfusionCounts, MetricsReport};
pub use frame::{Coord, Frame, Label, LabelMask};
pub use io::{GroundTruth, GroundTruthFrame};
pub use model::{
    classify_pixel, pair_distance2, update_pair, update_range, BackgroundModel, ModelParams, PairModel, PixelModel,
    Verdict,
};
pub use scalar::Real;
pub use trainer::{train, train_with, TrainOptions, Training};

/// Double-precision model; the default for training and evaluation.
pub type Model = BackgroundModel<f64>;
/// Single-precision model, half the memory of [`Model`].
pub type Model32 = BackgroundModel<f32>;
pub type Frame64 = Frame<f64>;
pub type Frame32 = Frame<f32>;
pub type Pair = PairModel<f64>;
pub type Pair32 = PairModel<f32>;
