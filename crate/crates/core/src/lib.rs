//! Power-transformer fault diagnosis from dissolved-gas analysis (DGA).
//!
//! The pipeline computes 37 ratio parameters per gas sample, ranks them by
//! skewness across a dataset, decomposes each sample's ranked parameter
//! sequence with a single-stage intrinsic time-scale decomposition, and
//! classifies the resulting proper-rotation coefficients with a multiclass
//! gradient-boosted tree ensemble. The classic Duval, Rogers and IEC ratio
//! methods are provided as baselines, together with the evaluation harness
//! (confusion matrices, Cohen's kappa, stratified CV, SMOTE).

pub mod conventional;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod gas;
pub mod gbt;
pub mod io;
pub mod itd;
pub mod ranking;
pub mod reference;
pub mod special;

pub use error::{Error, Result};
pub use gas::{Aggregates, DiagnosisOutcome, FaultLabel, GasSample, ParamVector};
