//! Frame, mask, ground-truth and model persistence, plus sequence ingestion.

mod groundtruth;
mod image_file;
mod model_file;
pub mod pnm;
mod sequence;

pub use groundtruth::{decode_groundtruth, GroundTruth, GroundTruthFrame};
pub use image_file::{read_frame, read_mask, write_frame, write_mask, write_u8};
pub use model_file::{load_model, load_model_file, model_scalar_bytes, save_model, save_model_file, FORMAT_VERSION, MAGIC};
pub use sequence::{
    load_sequence, read_temporal_roi, write_temporal_roi, FramePattern, Sequence, SequenceItem, SequenceSpec,
};
