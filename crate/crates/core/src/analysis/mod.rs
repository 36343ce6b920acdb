//! Analysis of degenerated forms: structural checks, the `2 × 1 × 1` case
//! split and the rank survey.

pub mod cases;
pub mod delta;
pub mod properties;
pub mod survey;
