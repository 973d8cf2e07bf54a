//! Morphology-aware trigram tagging and word-category stylometry.

pub mod decoder;
pub mod error;
pub mod eval;
pub mod model;
pub mod stylometry;
pub mod morphology;
pub mod tagset;
pub mod text;

pub use decoder::{brute_force_best, tag_sequence, tag_text, DecodeOptions};
pub use error::{Error, Result};
pub use model::{ChainSmoothing, Model, TrainOptions};
pub use tagset::{FeatureValue, Tag, TagSchema};
pub use text::{normalize, tokenize, Sequence, Token};
