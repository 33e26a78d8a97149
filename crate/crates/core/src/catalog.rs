//! Built-in benchmark problems and problem-file loading.
//!
//! | id      | drift                  | diffusion              | class |
//! |---------|------------------------|------------------------|-------|
//! | `exx1`  | `(1 + x) 1_{[0,∞)}(x)` | `1`                    | A     |
//! | `exx2`  | `x 1_{[0,∞)}(x)`       | `1 + x 1_{[0,∞)}(x)`   | B     |
//! | `exx22` | `x 1_{[0,∞)}(x)`       | `1`                    | B     |
//! | `ex2`   | `1_{[0,∞)}(x)`         | `1 / G′_{0,−1/2,ν}(x)` | A     |
//! | `gbm`   | `0`                    | `x`                    | B     |
//!
//! All entries start at `x₀ = 0` except `gbm`, which starts at `1` and has
//! the closed-form solution `X_t = exp(W_t − t/2)`.

use std::path::Path;
use std::sync::Arc;

use thiserror::Error;

use crate::piecewise::{
    AssumptionClass, AtBreakpoint, ClosedForm, Piece, PiecewiseFunction, ProblemError, ProblemSpec,
    SdeProblem, Side,
};
use crate::transform::{TransformError, TransformParams};

/// Default `ν` of the `ex2` entry.
pub const EX2_DEFAULT_NU: f64 = 0.125;

pub const PROBLEM_IDS: [&str; 5] = ["exx1", "exx2", "exx22", "ex2", "gbm"];

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("unknown problem `{0}` (not a catalog id and not a readable file); known ids: exx1, exx2, exx22, ex2, gbm")]
    UnknownProblem(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: schema violation: {source}")]
    Schema {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: {source}")]
    Problem {
        path: String,
        #[source]
        source: ProblemError,
    },
    #[error("ex2: {0}")]
    Transform(#[from] TransformError),
}

/// Closed-form solution used as an exact reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExactSolution {
    /// `x₀ exp(W_t − t/2)` for `dX = X dW`.
    Gbm,
}

impl ExactSolution {
    pub fn value(self, x0: f64, t: f64, w: f64) -> f64 {
        match self {
            ExactSolution::Gbm => x0 * (w - 0.5 * t).exp(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub name: String,
    pub description: &'static str,
    pub problem: SdeProblem,
    pub exact: Option<ExactSolution>,
}

impl CatalogEntry {
    /// Entries built from closed-form pieces cannot be written as JSON.
    pub fn exportable(&self) -> bool {
        self.problem.to_spec().is_ok()
    }

    pub fn export_json(&self) -> Result<String, ProblemError> {
        let spec = self.problem.to_spec()?;
        Ok(serde_json::to_string_pretty(&spec).expect("problem spec serializes"))
    }
}

/// `1 / G′_{z,α,ν}`, the diffusion coefficient of `ex2`.
#[derive(Debug, Clone)]
pub struct ReciprocalGPrime {
    params: TransformParams,
}

impl ReciprocalGPrime {
    pub fn new(params: TransformParams) -> Self {
        Self { params }
    }
}

impl ClosedForm for ReciprocalGPrime {
    fn name(&self) -> &str {
        "ex2_sigma"
    }

    fn value(&self, x: f64) -> f64 {
        1.0 / self.params.g_prime(x)
    }

    fn derivative(&self, x: f64, side: Side) -> f64 {
        let g1 = self.params.g_prime(x);
        match self.params.g_second(x, side) {
            Ok(g2) => -g2 / (g1 * g1),
            // Kink at a node without a side: δ-convention.
            Err(_) => 0.0,
        }
    }
}

/// Resolve `{"catalog": name, "nu": …}` pieces of problem files.
pub fn closed_form(name: &str, nu: Option<f64>) -> Option<Arc<dyn ClosedForm>> {
    match name {
        "ex2_sigma" => {
            let params =
                TransformParams::new(vec![0.0], vec![-0.5], nu.unwrap_or(EX2_DEFAULT_NU)).ok()?;
            Some(Arc::new(ReciprocalGPrime::new(params)))
        }
        _ => None,
    }
}

fn indicator_times(slope: f64, intercept: f64) -> PiecewiseFunction {
    PiecewiseFunction::new(
        vec![0.0],
        vec![Piece::constant(0.0), Piece::affine(slope, intercept)],
        vec![AtBreakpoint::Right],
    )
    .expect("valid catalog coefficient")
}

pub fn exx1() -> SdeProblem {
    SdeProblem::new(
        0.0,
        indicator_times(1.0, 1.0),
        PiecewiseFunction::constant(1.0),
        AssumptionClass::A,
    )
    .expect("valid catalog problem")
}

pub fn exx2() -> SdeProblem {
    let sigma = PiecewiseFunction::new(
        vec![0.0],
        vec![Piece::constant(1.0), Piece::affine(1.0, 1.0)],
        vec![AtBreakpoint::Right],
    )
    .expect("valid catalog coefficient");
    SdeProblem::new(0.0, indicator_times(1.0, 0.0), sigma, AssumptionClass::B)
        .expect("valid catalog problem")
}

pub fn exx22() -> SdeProblem {
    SdeProblem::new(
        0.0,
        indicator_times(1.0, 0.0),
        PiecewiseFunction::constant(1.0),
        AssumptionClass::B,
    )
    .expect("valid catalog problem")
}

/// `μ = 1_{[0,∞)}`, `σ = 1/G′_{0,−1/2,ν}`, `x₀ = 0`; requires `0 < ν < 1/4`.
pub fn ex2(nu: f64) -> Result<SdeProblem, CatalogError> {
    let params = TransformParams::new(vec![0.0], vec![-0.5], nu)?;
    let piece = Piece::Closed(Arc::new(ReciprocalGPrime::new(params)));
    let sigma = PiecewiseFunction::new(
        vec![0.0],
        vec![piece.clone(), piece],
        vec![AtBreakpoint::Right],
    )
    .expect("valid catalog coefficient");
    Ok(SdeProblem::new(
        0.0,
        PiecewiseFunction::indicator_nonneg(),
        sigma,
        AssumptionClass::A,
    )
    .expect("valid catalog problem"))
}

pub fn gbm() -> SdeProblem {
    SdeProblem::new(
        1.0,
        PiecewiseFunction::constant(0.0),
        PiecewiseFunction::affine(1.0, 0.0),
        AssumptionClass::B,
    )
    .expect("valid catalog problem")
}

pub fn entry(name: &str) -> Option<CatalogEntry> {
    let (description, problem, exact) = match name {
        "exx1" => (
            "discontinuous drift (1+x)1{x>=0}, additive noise",
            exx1(),
            None,
        ),
        "exx2" => (
            "kinked drift x1{x>=0}, kinked diffusion 1+x1{x>=0}",
            exx2(),
            None,
        ),
        "exx22" => ("kinked drift x1{x>=0}, additive noise", exx22(), None),
        "ex2" => (
            "drift 1{x>=0}, diffusion 1/G'_{0,-1/2,1/8}",
            ex2(EX2_DEFAULT_NU).expect("default nu is admissible"),
            None,
        ),
        "gbm" => (
            "geometric Brownian motion dX = X dW, X0 = 1",
            gbm(),
            Some(ExactSolution::Gbm),
        ),
        _ => return None,
    };
    Some(CatalogEntry {
        name: name.to_string(),
        description,
        problem,
        exact,
    })
}

pub fn all() -> Vec<CatalogEntry> {
    PROBLEM_IDS.iter().filter_map(|n| entry(n)).collect()
}

pub fn parse_problem_json(text: &str, origin: &str) -> Result<SdeProblem, CatalogError> {
    let spec: ProblemSpec = serde_json::from_str(text).map_err(|source| CatalogError::Schema {
        path: origin.to_string(),
        source,
    })?;
    SdeProblem::from_spec(&spec, &closed_form).map_err(|source| CatalogError::Problem {
        path: origin.to_string(),
        source,
    })
}

/// A catalog id, or else a path to a JSON problem file.
pub fn load(source: &str) -> Result<CatalogEntry, CatalogError> {
    if let Some(e) = entry(source) {
        return Ok(e);
    }
    let path = Path::new(source);
    if !path.is_file() {
        return Err(CatalogError::UnknownProblem(source.to_string()));
    }
    let text = std::fs::read_to_string(path).map_err(|e| CatalogError::Io {
        path: source.to_string(),
        source: e,
    })?;
    Ok(CatalogEntry {
        name: source.to_string(),
        description: "problem file",
        problem: parse_problem_json(&text, source)?,
        exact: None,
    })
}
