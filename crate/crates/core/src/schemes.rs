//! Euler-Maruyama, quasi-Milstein and the transformed quasi-Milstein method.
//!
//! The quasi-Milstein step uses the δ-convention derivative of the diffusion
//! coefficient, so it is defined for diffusion coefficients with kinks:
//!
//! ```text
//! x' = x + μ(x) h + σ(x) ΔW + ½ σ(x) δ_σ(x) (ΔW² − h)
//! ```
//!
//! The transformed method runs this recursion on the SDE for `Z = G(X)` and
//! maps the result back with `G⁻¹`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::piecewise::SdeProblem;
use crate::transform::{TransformError, TransformParams, TransformedSde};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "euler")]
    Euler,
    #[serde(rename = "qm")]
    QuasiMilstein,
    #[serde(rename = "tqm")]
    TransformedQm,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Euler => "euler",
            Scheme::QuasiMilstein => "qm",
            Scheme::TransformedQm => "tqm",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = SchemeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "euler" | "em" => Ok(Scheme::Euler),
            "qm" | "quasi_milstein" => Ok(Scheme::QuasiMilstein),
            "tqm" | "transformed_qm" => Ok(Scheme::TransformedQm),
            other => Err(SchemeError::UnknownScheme(other.to_string())),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SchemeError {
    #[error("unknown scheme `{0}` (expected euler, qm or tqm)")]
    UnknownScheme(String),
    #[error("non-finite state {value} at step {step}")]
    NonFinite { step: usize, value: f64 },
    #[error("no increments supplied")]
    NoIncrements,
    #[error("step {step} out of range for a path with {n} steps")]
    StepOutOfRange { step: usize, n: usize },
    #[error("time offset {offset} outside (0, {h}]")]
    OffsetOutOfRange { offset: f64, h: f64 },
    #[error("time {0} outside (0, 1]")]
    TimeOutOfRange(f64),
    #[error("path is not in transformed coordinates")]
    NotTransformed,
    #[error(transparent)]
    Transform(#[from] TransformError),
}

/// `x + μ h + σ ΔW`.
#[inline]
pub fn euler_step(mu: f64, sigma: f64, x: f64, h: f64, dw: f64) -> f64 {
    x + mu * h + sigma * dw
}

/// `x + μ h + σ ΔW + ½ σ δ_σ (ΔW² − h)`.
#[inline]
pub fn qm_step(mu: f64, sigma: f64, sigma_delta: f64, x: f64, h: f64, dw: f64) -> f64 {
    x + mu * h + sigma * dw + 0.5 * sigma * sigma_delta * (dw * dw - h)
}

/// Drift, diffusion and δ-derivative of the diffusion at one state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalCoefficients {
    pub mu: f64,
    pub sigma: f64,
    pub sigma_delta: f64,
}

/// Anything a one-step scheme can be driven by.
pub trait Coefficients {
    fn local(&self, x: f64) -> Result<LocalCoefficients, SchemeError>;
}

impl Coefficients for SdeProblem {
    #[inline]
    fn local(&self, x: f64) -> Result<LocalCoefficients, SchemeError> {
        Ok(LocalCoefficients {
            mu: self.mu().value(x),
            sigma: self.sigma().value(x),
            sigma_delta: self.sigma().delta_value(x),
        })
    }
}

impl Coefficients for TransformedSde {
    #[inline]
    fn local(&self, x: f64) -> Result<LocalCoefficients, SchemeError> {
        let c = self.coefficients(x)?;
        Ok(LocalCoefficients {
            mu: c.mu,
            sigma: c.sigma,
            sigma_delta: c.sigma_delta,
        })
    }
}

/// Whether path values approximate `X` or `Z = G(X)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PathSpace {
    Original,
    Transformed,
}

/// Grid values `X̂_{n,ℓ/n}`, `ℓ = 0..=n`, of one scheme run.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemePath {
    pub scheme: Scheme,
    pub space: PathSpace,
    pub values: Vec<f64>,
    pub increments: Vec<f64>,
}

impl SchemePath {
    pub fn level(&self) -> usize {
        self.increments.len()
    }

    pub fn terminal(&self) -> f64 {
        *self
            .values
            .last()
            .expect("path holds at least the initial value")
    }

    /// `(ℓ/n, value)` pairs.
    pub fn grid(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let n = self.level() as f64;
        self.values
            .iter()
            .enumerate()
            .map(move |(l, v)| (l as f64 / n, *v))
    }
}

#[inline]
fn advance<C: Coefficients>(
    coeffs: &C,
    milstein: bool,
    x: f64,
    h: f64,
    dw: f64,
) -> Result<f64, SchemeError> {
    let c = coeffs.local(x)?;
    Ok(if milstein {
        qm_step(c.mu, c.sigma, c.sigma_delta, x, h, dw)
    } else {
        euler_step(c.mu, c.sigma, x, h, dw)
    })
}

fn integrate<C: Coefficients>(
    coeffs: &C,
    milstein: bool,
    x0: f64,
    increments: &[f64],
    mut visit: impl FnMut(f64),
) -> Result<f64, SchemeError> {
    if increments.is_empty() {
        return Err(SchemeError::NoIncrements);
    }
    let h = 1.0 / increments.len() as f64;
    let mut x = x0;
    visit(x);
    for (l, dw) in increments.iter().enumerate() {
        x = advance(coeffs, milstein, x, h, *dw)?;
        if !x.is_finite() {
            return Err(SchemeError::NonFinite {
                step: l + 1,
                value: x,
            });
        }
        visit(x);
    }
    Ok(x)
}

/// A scheme bound to a problem, ready to consume increment vectors.
#[derive(Debug, Clone)]
pub enum Integrator {
    Plain { problem: SdeProblem, scheme: Scheme },
    Transformed(TransformedSde),
}

impl Integrator {
    /// For [`Scheme::TransformedQm`] the transformed SDE is built here; `nu`
    /// is ignored by the other schemes.
    pub fn new(problem: &SdeProblem, scheme: Scheme, nu: Option<f64>) -> Result<Self, SchemeError> {
        Ok(match scheme {
            Scheme::TransformedQm => Integrator::Transformed(TransformedSde::new(problem, nu)?),
            _ => Integrator::Plain {
                problem: problem.clone(),
                scheme,
            },
        })
    }

    pub fn scheme(&self) -> Scheme {
        match self {
            Integrator::Plain { scheme, .. } => *scheme,
            Integrator::Transformed(_) => Scheme::TransformedQm,
        }
    }

    pub fn transformed(&self) -> Option<&TransformedSde> {
        match self {
            Integrator::Transformed(t) => Some(t),
            Integrator::Plain { .. } => None,
        }
    }

    /// Initial state in the coordinates the scheme runs in.
    pub fn start(&self) -> f64 {
        match self {
            Integrator::Plain { problem, .. } => problem.x0(),
            Integrator::Transformed(t) => t.x0(),
        }
    }

    fn run(&self, increments: &[f64], visit: impl FnMut(f64)) -> Result<f64, SchemeError> {
        match self {
            Integrator::Plain { problem, scheme } => integrate(
                problem,
                *scheme == Scheme::QuasiMilstein,
                problem.x0(),
                increments,
                visit,
            ),
            Integrator::Transformed(t) => integrate(t, true, t.x0(), increments, visit),
        }
    }

    /// Grid path on level `increments.len()`. Transformed runs keep the raw
    /// `Ẑ` values, see [`invert_transformed`].
    pub fn simulate(&self, increments: &[f64]) -> Result<SchemePath, SchemeError> {
        let mut values = Vec::with_capacity(increments.len() + 1);
        self.run(increments, |x| values.push(x))?;
        Ok(SchemePath {
            scheme: self.scheme(),
            space: match self {
                Integrator::Plain { .. } => PathSpace::Original,
                Integrator::Transformed(_) => PathSpace::Transformed,
            },
            values,
            increments: increments.to_vec(),
        })
    }

    /// Final state in scheme coordinates, without storing the path.
    pub fn terminal(&self, increments: &[f64]) -> Result<f64, SchemeError> {
        self.run(increments, |_| ())
    }

    /// Map a scheme-coordinate value to an approximation of `X`.
    pub fn to_original(&self, y: f64, tol: f64) -> Result<f64, SchemeError> {
        match self {
            Integrator::Plain { .. } => Ok(y),
            Integrator::Transformed(t) => Ok(t.invert_with(y, tol)?),
        }
    }

    /// Approximation of `X_1`: the terminal state, pulled back through `G⁻¹`
    /// for the transformed method.
    pub fn approximate_terminal(&self, increments: &[f64], tol: f64) -> Result<f64, SchemeError> {
        let y = self.terminal(increments)?;
        self.to_original(y, tol)
    }

    /// Time-continuous scheme at `t = step/n + offset`, `0 < offset ≤ 1/n`,
    /// given `dw = W_t − W_{step/n}`. With `offset = 1/n` and the full step
    /// increment this reproduces `path.values[step + 1]` exactly.
    pub fn continuous_value(
        &self,
        path: &SchemePath,
        step: usize,
        offset: f64,
        dw: f64,
    ) -> Result<f64, SchemeError> {
        let n = path.level();
        if step >= n {
            return Err(SchemeError::StepOutOfRange { step, n });
        }
        let h = 1.0 / n as f64;
        if !(offset > 0.0 && offset <= h) {
            return Err(SchemeError::OffsetOutOfRange { offset, h });
        }
        let x = path.values[step];
        match self {
            Integrator::Plain { problem, scheme } => {
                advance(problem, *scheme == Scheme::QuasiMilstein, x, offset, dw)
            }
            Integrator::Transformed(t) => advance(t, true, x, offset, dw),
        }
    }

    /// [`Integrator::continuous_value`] addressed by absolute time `t ∈ (0, 1]`.
    pub fn continuous_value_at(
        &self,
        path: &SchemePath,
        t: f64,
        dw: f64,
    ) -> Result<f64, SchemeError> {
        if !(t > 0.0 && t <= 1.0) {
            return Err(SchemeError::TimeOutOfRange(t));
        }
        let n = path.level();
        let step = ((t * n as f64).ceil() as usize).clamp(1, n) - 1;
        let offset = t - step as f64 / n as f64;
        self.continuous_value(path, step, offset, dw)
    }
}

/// Apply `G⁻¹` pointwise to a transformed path.
pub fn invert_transformed(
    path: &SchemePath,
    params: &TransformParams,
    tol: f64,
) -> Result<SchemePath, SchemeError> {
    if path.space != PathSpace::Transformed {
        return Err(SchemeError::NotTransformed);
    }
    let values = path
        .values
        .iter()
        .map(|y| params.g_inverse(*y, tol))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SchemePath {
        scheme: path.scheme,
        space: PathSpace::Original,
        values,
        increments: path.increments.clone(),
    })
}
