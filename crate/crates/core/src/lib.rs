//! Synthetic parallel data for low-resource machine translation.
//!
//! The pipeline aligns a small seed corpus, finds one-to-one aligned word
//! pairs that paradigm tables can analyze, swaps them for other lexicon
//! entries carrying the same morphological features, ranks the resulting
//! sentence pairs with a target-side n-gram language model and packages the
//! best ones into nested, tagged training sets.

pub mod aligner;
pub mod assembler;
pub mod augmentor;
pub mod corpus;
pub mod error;
pub mod lexicon;
pub mod lm_filter;
pub mod metrics;
pub mod morphology;

pub use error::{Error, Result};
