//! Differentiable end-to-end simulation of short-reach optical links with
//! learned pulse shaping and receive filtering.

pub mod dsp;
pub mod equalizer;
pub mod grad;
pub mod harness;
pub mod link;
pub mod metrics;
pub mod train;
