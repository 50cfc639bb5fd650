//! Normalized gradient flow and gradient descent for ReLU networks with
//! unit-norm neuron constraints, plus a one-neuron boundedness toolkit.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod activation;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod gradients;
pub mod manifold;
pub mod one_neuron;
pub mod output;
pub mod params;
pub mod quadrature;
pub mod realization;
pub mod seeding;
pub mod target;
pub mod verify;

pub use activation::Smoothing;
pub use error::{Error, Result};
pub use params::{Architecture, NeuronKey, ParamVector};
pub use quadrature::{InputMeasure, QuadratureSettings};
pub use realization::Objective;
pub use target::{Profile, TargetFunction};
