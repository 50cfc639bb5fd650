//! Target functions `f : [a,b]^{ℓ_0} → ℝ^{ℓ_L}`.
//!
//! Built-in targets are scalar profiles `p : ℝ → ℝ` evaluated at the first
//! input coordinate and copied to every output. They are piecewise
//! polynomial with known breakpoints and degree, so integrals against a
//! one-dimensional uniform measure can be computed exactly.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{segment_cuts, GaussLegendre};

/// Scalar profile of a built-in target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Profile {
    Constant {
        value: f64,
    },
    Affine {
        slope: f64,
        intercept: f64,
    },
    /// `|s − center|`
    AbsOffset {
        center: f64,
    },
    /// Linear interpolation through `(x, y)` knots, extended linearly past
    /// the end knots.
    PiecewiseLinear {
        knots: Vec<(f64, f64)>,
    },
    /// `Σ_k coeffs[k] s^k`, degree at most 5.
    Polynomial {
        coeffs: Vec<f64>,
    },
}

impl Profile {
    pub fn validate(&self) -> Result<()> {
        match self {
            Profile::PiecewiseLinear { knots } => {
                if knots.len() < 2 {
                    return Err(Error::InvalidTarget("piecewise-linear target needs at least two knots".into()));
                }
                if knots.windows(2).any(|w| !(w[0].0 < w[1].0)) {
                    return Err(Error::InvalidTarget("knot abscissae must be strictly increasing".into()));
                }
            }
            Profile::Polynomial { coeffs } if coeffs.is_empty() || coeffs.len() > 6 => {
                return Err(Error::InvalidTarget("polynomial target needs 1..=6 coefficients".into()));
            }
            _ => {}
        }
        let finite = match self {
            Profile::Constant { value } => value.is_finite(),
            Profile::Affine { slope, intercept } => slope.is_finite() && intercept.is_finite(),
            Profile::AbsOffset { center } => center.is_finite(),
            Profile::PiecewiseLinear { knots } => knots.iter().all(|(x, y)| x.is_finite() && y.is_finite()),
            Profile::Polynomial { coeffs } => coeffs.iter().all(|c| c.is_finite()),
        };
        if !finite {
            return Err(Error::InvalidTarget("non-finite target parameter".into()));
        }
        Ok(())
    }

    pub fn eval(&self, s: f64) -> f64 {
        match self {
            Profile::Constant { value } => *value,
            Profile::Affine { slope, intercept } => slope * s + intercept,
            Profile::AbsOffset { center } => (s - center).abs(),
            Profile::PiecewiseLinear { knots } => {
                let seg = match knots.iter().position(|(x, _)| *x > s) {
                    Some(0) => 0,
                    Some(p) => p - 1,
                    None => knots.len() - 2,
                }
                .min(knots.len() - 2);
                let (x0, y0) = knots[seg];
                let (x1, y1) = knots[seg + 1];
                y0 + (y1 - y0) * (s - x0) / (x1 - x0)
            }
            Profile::Polynomial { coeffs } => coeffs.iter().rev().fold(0.0, |acc, c| acc * s + c),
        }
    }

    /// Points where the profile is not polynomial.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Profile::AbsOffset { center } => vec![*center],
            Profile::PiecewiseLinear { knots } => knots.iter().map(|(x, _)| *x).collect(),
            _ => Vec::new(),
        }
    }

    /// Polynomial degree on each smooth piece.
    pub fn degree(&self) -> usize {
        match self {
            Profile::Constant { .. } => 0,
            Profile::Affine { .. } | Profile::AbsOffset { .. } | Profile::PiecewiseLinear { .. } => 1,
            Profile::Polynomial { coeffs } => coeffs.len().saturating_sub(1),
        }
    }

    /// A Lipschitz constant on `[a, b]`.
    pub fn lipschitz_bound(&self, a: f64, b: f64) -> f64 {
        match self {
            Profile::Constant { .. } => 0.0,
            Profile::Affine { slope, .. } => slope.abs(),
            Profile::AbsOffset { .. } => 1.0,
            Profile::PiecewiseLinear { knots } => {
                knots.windows(2).map(|w| ((w[1].1 - w[0].1) / (w[1].0 - w[0].0)).abs()).fold(0.0, f64::max)
            }
            Profile::Polynomial { coeffs } => {
                let r = a.abs().max(b.abs());
                coeffs.iter().enumerate().skip(1).map(|(k, c)| k as f64 * c.abs() * r.powi(k as i32 - 1)).sum()
            }
        }
    }

    /// Exact `∫_a^b p(s) ds`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        let gl = GaussLegendre::new(self.degree() / 2 + 1);
        segment_cuts(a, b, &self.breakpoints()).windows(2).map(|w| gl.integrate(w[0], w[1], |s| self.eval(s))).sum()
    }
}

type CustomFn = dyn Fn(&[f64], &mut [f64]) + Send + Sync;

/// A measurable target with optional metadata for exact integration.
#[derive(Clone)]
pub struct TargetFunction {
    kind: TargetKind,
    output_dim: usize,
}

#[derive(Clone)]
enum TargetKind {
    Profile(Profile),
    Custom { f: Arc<CustomFn>, lipschitz: Option<f64> },
}

impl fmt::Debug for TargetFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            TargetKind::Profile(p) => {
                f.debug_struct("TargetFunction").field("profile", p).field("output_dim", &self.output_dim).finish()
            }
            TargetKind::Custom { lipschitz, .. } => f
                .debug_struct("TargetFunction")
                .field("custom", &"<fn>")
                .field("lipschitz", lipschitz)
                .field("output_dim", &self.output_dim)
                .finish(),
        }
    }
}

impl TargetFunction {
    pub fn profile(profile: Profile, output_dim: usize) -> Result<Self> {
        profile.validate()?;
        if output_dim == 0 {
            return Err(Error::InvalidTarget("output dimension must be positive".into()));
        }
        Ok(Self { kind: TargetKind::Profile(profile), output_dim })
    }

    /// Scalar built-in target.
    pub fn scalar(profile: Profile) -> Result<Self> {
        Self::profile(profile, 1)
    }

    pub fn zero(output_dim: usize) -> Self {
        Self { kind: TargetKind::Profile(Profile::Constant { value: 0.0 }), output_dim }
    }

    /// An arbitrary target. Integrals fall back to the composite grid.
    pub fn custom<F>(output_dim: usize, lipschitz: Option<f64>, f: F) -> Self
    where
        F: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    {
        Self { kind: TargetKind::Custom { f: Arc::new(f), lipschitz }, output_dim }
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn as_profile(&self) -> Option<&Profile> {
        match &self.kind {
            TargetKind::Profile(p) => Some(p),
            TargetKind::Custom { .. } => None,
        }
    }

    #[inline]
    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        match &self.kind {
            TargetKind::Profile(p) => {
                let v = p.eval(x[0]);
                out.iter_mut().for_each(|o| *o = v);
            }
            TargetKind::Custom { f, .. } => f(x, out),
        }
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.output_dim];
        self.eval_into(x, &mut out);
        out
    }

    /// Breakpoints along the first input axis, when known.
    pub fn breakpoints(&self) -> Option<Vec<f64>> {
        self.as_profile().map(Profile::breakpoints)
    }

    /// Piecewise polynomial degree, when known.
    pub fn degree(&self) -> Option<usize> {
        self.as_profile().map(Profile::degree)
    }

    pub fn lipschitz_bound(&self, a: f64, b: f64) -> Option<f64> {
        match &self.kind {
            TargetKind::Profile(p) => Some(p.lipschitz_bound(a, b)),
            TargetKind::Custom { lipschitz, .. } => *lipschitz,
        }
    }
}
