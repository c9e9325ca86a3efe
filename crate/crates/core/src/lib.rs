//! Morphological and subword segmentation for low-resource MT preprocessing.
//!
//! The crate bundles five segmenters (BPE, Morfessor-style MDL baseline, a
//! lexicon-capped LMVR-style variant, a FlatCat-style category HMM, and a
//! supervised character CRF) together with the evaluation machinery around
//! them: corpus statistics, segmentation F1 and EMMA, BLEU and chrF, and
//! paired approximate randomization.

pub mod analysis;
pub mod bpe;
pub mod corpus;
pub mod crf;
pub mod error;
pub mod exec;
pub mod metrics;
pub mod model;
pub mod report;
pub mod unsup;

pub use error::{Error, Result};
pub use exec::Exec;
