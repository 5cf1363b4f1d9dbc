//! Rules-first binary classifiers: models that predict by a small ordered
//! set of perfect single-feature rules when one fires and by a norm-bounded
//! linear classifier otherwise, together with greedy learners, boosting,
//! data generators, a bag-of-words pipeline, and an experiment harness.

pub mod boost;
pub mod core;
pub mod datagen;
pub mod experiments;
pub mod io;
pub mod linear;
pub mod rules;
pub mod text;

pub use crate::core::{
    accuracy, empirical_loss, loss_hinge, loss_margin, loss_mis, loss_ramp, Attribution,
    Dataset, Example, Label, LinearModel, LossKind, NormRegime, Prediction, Rule, RuleSet,
    RulesFirstModel, SparseVec,
};
