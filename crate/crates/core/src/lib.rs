//! Closed-loop driving simulation for comparing navigation inputs: sampled
//! route paths with turn-by-turn guidance versus one-hot driving commands.

// `!(x > 0.0)` style checks deliberately reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod geometry;
pub mod harness;
pub mod map;
pub mod metrics;
pub mod navigation;
pub mod planners;
pub mod sim;
