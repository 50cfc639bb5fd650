//! ReLU and its `C¹` cubic smoothings `ℜ_r`.
//!
//! For finite `r` the activation agrees with `max(x, 0)` outside `(0, 1/r)` and
//! is the cubic `2r x² − r² x³` inside, which matches value and slope at both
//! knots. For every fixed `x` the smoothed value and derivative equal the ReLU
//! value and `𝟙_{(0,∞)}(x)` once `r > 1/|x|`, so the family converges
//! eventually-exactly.

use serde::{Deserialize, Serialize};

/// Activation selector: exact ReLU (`r = ∞`) or the smoothing of index `r ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Smoothing {
    #[default]
    Exact,
    Smoothed(u64),
}

impl Smoothing {
    pub fn is_exact(self) -> bool {
        matches!(self, Smoothing::Exact)
    }

    /// Right end `1/r` of the smoothing window, `0` for exact ReLU.
    pub fn window(self) -> f64 {
        match self {
            Smoothing::Exact => 0.0,
            Smoothing::Smoothed(r) => 1.0 / r as f64,
        }
    }

    #[inline]
    pub fn act(self, x: f64) -> f64 {
        match self {
            Smoothing::Exact => x.max(0.0),
            Smoothing::Smoothed(r) => {
                let r = r as f64;
                if x <= 0.0 {
                    0.0
                } else if x * r >= 1.0 {
                    x
                } else {
                    x * x * r * (2.0 - x * r)
                }
            }
        }
    }

    /// Derivative, with the convention `ReLU′(0) = 0`.
    #[inline]
    pub fn deriv(self, x: f64) -> f64 {
        match self {
            Smoothing::Exact => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Smoothing::Smoothed(r) => {
                let r = r as f64;
                if x <= 0.0 {
                    0.0
                } else if x * r >= 1.0 {
                    1.0
                } else {
                    x * r * (4.0 - 3.0 * x * r)
                }
            }
        }
    }

    /// Polynomial degree of the activation on each smooth piece.
    pub(crate) fn piece_degree(self) -> usize {
        match self {
            Smoothing::Exact => 1,
            Smoothing::Smoothed(_) => 3,
        }
    }
}

pub fn smoothed_act(s: Smoothing, x: f64) -> f64 {
    s.act(x)
}

pub fn smoothed_act_deriv(s: Smoothing, x: f64) -> f64 {
    s.deriv(x)
}
