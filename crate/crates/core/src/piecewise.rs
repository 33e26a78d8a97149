//! Piecewise-smooth scalar coefficients.
//!
//! A [`PiecewiseFunction`] is described by strictly increasing breakpoints
//! `b[0] < … < b[k-1]`, `k + 1` pieces (piece `j` lives on `(b[j-1], b[j])`
//! with implicit outer ends at ±∞) and, for every breakpoint, a rule that
//! fixes the value taken exactly at the breakpoint. Breakpoint indices in
//! this API are zero-based.
//!
//! Derivatives follow the δ-convention: the classical derivative where the
//! function is differentiable and `0` at every point where it is not.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Which one-sided limit to take at a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
    Interior,
}

/// A smooth closed form that can be used as a piece.
///
/// `derivative` receives the side from which the derivative is requested; it
/// only matters at points where the closed form itself has a kink.
pub trait ClosedForm: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;
    fn value(&self, x: f64) -> f64;
    fn derivative(&self, x: f64, side: Side) -> f64;
}

/// One piece of a [`PiecewiseFunction`].
#[derive(Debug, Clone)]
pub enum Piece {
    Affine { slope: f64, intercept: f64 },
    Closed(Arc<dyn ClosedForm>),
}

impl Piece {
    pub fn affine(slope: f64, intercept: f64) -> Self {
        Piece::Affine { slope, intercept }
    }

    pub fn constant(c: f64) -> Self {
        Piece::Affine {
            slope: 0.0,
            intercept: c,
        }
    }

    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        match self {
            Piece::Affine { slope, intercept } => slope * x + intercept,
            Piece::Closed(f) => f.value(x),
        }
    }

    #[inline]
    pub fn derivative(&self, x: f64, side: Side) -> f64 {
        match self {
            Piece::Affine { slope, .. } => *slope,
            Piece::Closed(f) => f.derivative(x, side),
        }
    }
}

/// Value rule at a breakpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AtBreakpoint {
    /// Take the limit of the left piece.
    Left,
    /// Take the limit of the right piece (`1_{[0,∞)}` style).
    Right,
    Value(f64),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PiecewiseError {
    #[error("breakpoint {index} is not finite")]
    NonFiniteBreakpoint { index: usize },
    #[error("breakpoints must be strictly increasing (breakpoint {index} does not exceed its predecessor)")]
    UnsortedBreakpoints { index: usize },
    #[error("{breakpoints} breakpoints need {expected} pieces, got {got}")]
    PieceCount {
        breakpoints: usize,
        expected: usize,
        got: usize,
    },
    #[error("{breakpoints} breakpoints need {breakpoints} breakpoint values, got {got}")]
    BreakpointValueCount { breakpoints: usize, got: usize },
    #[error("piece {index} has non-finite coefficients")]
    NonFinitePiece { index: usize },
    #[error("value at breakpoint {index} is not finite")]
    NonFiniteBreakpointValue { index: usize },
    #[error("one-sided limit at breakpoint {index} is not finite")]
    NonFiniteLimit { index: usize },
    #[error("argument {0} is not finite")]
    NonFiniteArgument(f64),
    #[error("breakpoint index {index} out of range (function has {count} breakpoints)")]
    IndexOutOfRange { index: usize, count: usize },
    #[error("unknown closed form `{0}`")]
    UnknownClosedForm(String),
    #[error("piece {index} uses closed form `{name}` and cannot be exported")]
    NotExportable { index: usize, name: String },
}

/// Where a point sits relative to the breakpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    /// Strictly inside piece `j`.
    Inside(usize),
    /// Exactly on breakpoint `i`.
    At(usize),
}

/// Relative agreement used for continuity and differentiability decisions.
pub(crate) fn nearly_equal(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= 1e-12 * 1f64.max(a.abs()).max(b.abs())
}

/// Maps a closed-form name and optional `nu` to an implementation.
pub type Resolver = dyn Fn(&str, Option<f64>) -> Option<Arc<dyn ClosedForm>>;

#[derive(Debug, Clone)]
pub struct PiecewiseFunction {
    breakpoints: Vec<f64>,
    pieces: Vec<Piece>,
    at_breakpoint: Vec<AtBreakpoint>,
}

impl PiecewiseFunction {
    pub fn new(
        breakpoints: Vec<f64>,
        pieces: Vec<Piece>,
        at_breakpoint: Vec<AtBreakpoint>,
    ) -> Result<Self, PiecewiseError> {
        for (index, b) in breakpoints.iter().enumerate() {
            if !b.is_finite() {
                return Err(PiecewiseError::NonFiniteBreakpoint { index });
            }
            if index > 0 && *b <= breakpoints[index - 1] {
                return Err(PiecewiseError::UnsortedBreakpoints { index });
            }
        }
        let k = breakpoints.len();
        if pieces.len() != k + 1 {
            return Err(PiecewiseError::PieceCount {
                breakpoints: k,
                expected: k + 1,
                got: pieces.len(),
            });
        }
        if at_breakpoint.len() != k {
            return Err(PiecewiseError::BreakpointValueCount {
                breakpoints: k,
                got: at_breakpoint.len(),
            });
        }
        for (index, p) in pieces.iter().enumerate() {
            if let Piece::Affine { slope, intercept } = p {
                if !slope.is_finite() || !intercept.is_finite() {
                    return Err(PiecewiseError::NonFinitePiece { index });
                }
            }
        }
        for (index, rule) in at_breakpoint.iter().enumerate() {
            if let AtBreakpoint::Value(v) = rule {
                if !v.is_finite() {
                    return Err(PiecewiseError::NonFiniteBreakpointValue { index });
                }
            }
        }
        let f = Self {
            breakpoints,
            pieces,
            at_breakpoint,
        };
        for index in 0..k {
            let b = f.breakpoints[index];
            if !f.pieces[index].value(b).is_finite() || !f.pieces[index + 1].value(b).is_finite() {
                return Err(PiecewiseError::NonFiniteLimit { index });
            }
        }
        Ok(f)
    }

    /// A function without breakpoints.
    pub fn smooth(piece: Piece) -> Self {
        Self {
            breakpoints: Vec::new(),
            pieces: vec![piece],
            at_breakpoint: Vec::new(),
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::smooth(Piece::constant(c))
    }

    pub fn affine(slope: f64, intercept: f64) -> Self {
        Self::smooth(Piece::affine(slope, intercept))
    }

    /// The indicator `1_{[0,∞)}`.
    pub fn indicator_nonneg() -> Self {
        Self {
            breakpoints: vec![0.0],
            pieces: vec![Piece::constant(0.0), Piece::constant(1.0)],
            at_breakpoint: vec![AtBreakpoint::Right],
        }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn at_breakpoint(&self) -> &[AtBreakpoint] {
        &self.at_breakpoint
    }

    pub fn locate(&self, x: f64) -> Location {
        let j = self.breakpoints.partition_point(|&b| b < x);
        if j < self.breakpoints.len() && self.breakpoints[j] == x {
            Location::At(j)
        } else {
            Location::Inside(j)
        }
    }

    /// Evaluate without checking that `x` is finite.
    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        if self.breakpoints.is_empty() {
            return self.pieces[0].value(x);
        }
        match self.locate(x) {
            Location::Inside(j) => self.pieces[j].value(x),
            Location::At(i) => self.breakpoint_value(i),
        }
    }

    pub fn eval(&self, x: f64) -> Result<f64, PiecewiseError> {
        if !x.is_finite() {
            return Err(PiecewiseError::NonFiniteArgument(x));
        }
        Ok(self.value(x))
    }

    /// Closed form of piece `j` evaluated at `x`, regardless of where `x` lies.
    #[inline]
    pub fn piece_value(&self, j: usize, x: f64) -> f64 {
        self.pieces[j].value(x)
    }

    fn breakpoint_value(&self, i: usize) -> f64 {
        let b = self.breakpoints[i];
        match self.at_breakpoint[i] {
            AtBreakpoint::Left => self.pieces[i].value(b),
            AtBreakpoint::Right => self.pieces[i + 1].value(b),
            AtBreakpoint::Value(v) => v,
        }
    }

    fn check_index(&self, i: usize) -> Result<f64, PiecewiseError> {
        self.breakpoints
            .get(i)
            .copied()
            .ok_or(PiecewiseError::IndexOutOfRange {
                index: i,
                count: self.breakpoints.len(),
            })
    }

    pub fn left_limit(&self, i: usize) -> Result<f64, PiecewiseError> {
        let b = self.check_index(i)?;
        Ok(self.pieces[i].value(b))
    }

    pub fn right_limit(&self, i: usize) -> Result<f64, PiecewiseError> {
        let b = self.check_index(i)?;
        Ok(self.pieces[i + 1].value(b))
    }

    /// Left limit, value at and right limit of breakpoint `i` agree.
    pub fn is_continuous_at(&self, i: usize) -> Result<bool, PiecewiseError> {
        let l = self.left_limit(i)?;
        let r = self.right_limit(i)?;
        let v = self.breakpoint_value(i);
        Ok(nearly_equal(l, r) && nearly_equal(l, v))
    }

    pub fn is_continuous(&self) -> bool {
        (0..self.breakpoints.len()).all(|i| self.is_continuous_at(i).unwrap_or(false))
    }

    /// δ-convention derivative, unchecked.
    #[inline]
    pub fn delta_value(&self, x: f64) -> f64 {
        if self.breakpoints.is_empty() {
            return self.pieces[0].derivative(x, Side::Interior);
        }
        match self.locate(x) {
            Location::Inside(j) => self.pieces[j].derivative(x, Side::Interior),
            Location::At(i) => {
                let b = self.breakpoints[i];
                let dl = self.pieces[i].derivative(b, Side::Left);
                let dr = self.pieces[i + 1].derivative(b, Side::Right);
                let continuous = self.is_continuous_at(i).unwrap_or(false);
                if continuous && nearly_equal(dl, dr) {
                    if dl == dr {
                        dl
                    } else {
                        0.5 * (dl + dr)
                    }
                } else {
                    0.0
                }
            }
        }
    }

    pub fn delta(&self, x: f64) -> Result<f64, PiecewiseError> {
        if !x.is_finite() {
            return Err(PiecewiseError::NonFiniteArgument(x));
        }
        Ok(self.delta_value(x))
    }

    /// One-sided derivative at `x`. At a breakpoint `side` picks the adjacent
    /// piece; inside a piece it is passed through to the piece.
    pub fn one_sided_derivative(&self, x: f64, side: Side) -> f64 {
        match self.locate(x) {
            Location::Inside(j) => self.pieces[j].derivative(x, side),
            Location::At(i) => match side {
                Side::Left => self.pieces[i].derivative(x, Side::Left),
                Side::Right => self.pieces[i + 1].derivative(x, Side::Right),
                Side::Interior => self.delta_value(x),
            },
        }
    }

    pub fn to_spec(&self) -> Result<PiecewiseSpec, PiecewiseError> {
        let pieces = self
            .pieces
            .iter()
            .enumerate()
            .map(|(index, p)| match p {
                Piece::Affine { slope, intercept } => Ok(PieceSpec::Affine {
                    slope: *slope,
                    intercept: *intercept,
                }),
                Piece::Closed(f) => Err(PiecewiseError::NotExportable {
                    index,
                    name: f.name().to_string(),
                }),
            })
            .collect::<Result<Vec<_>, _>>()?;
        let at_breakpoint = self
            .at_breakpoint
            .iter()
            .map(|r| match r {
                AtBreakpoint::Left => BreakpointValueSpec::Side(SideName::Left),
                AtBreakpoint::Right => BreakpointValueSpec::Side(SideName::Right),
                AtBreakpoint::Value(v) => BreakpointValueSpec::Value(*v),
            })
            .collect();
        Ok(PiecewiseSpec {
            breakpoints: self.breakpoints.clone(),
            pieces,
            at_breakpoint,
        })
    }

    /// Build from the serialized form. `resolve` maps closed-form names (and
    /// an optional `nu` parameter) to implementations.
    pub fn from_spec(spec: &PiecewiseSpec, resolve: &Resolver) -> Result<Self, PiecewiseError> {
        let pieces = spec
            .pieces
            .iter()
            .map(|p| match p {
                PieceSpec::Affine { slope, intercept } => Ok(Piece::affine(*slope, *intercept)),
                PieceSpec::Catalog { catalog, nu } => resolve(catalog, *nu)
                    .map(Piece::Closed)
                    .ok_or_else(|| PiecewiseError::UnknownClosedForm(catalog.clone())),
            })
            .collect::<Result<Vec<_>, _>>()?;
        // Omitted breakpoint rules default to the right piece.
        let at_breakpoint = if spec.at_breakpoint.is_empty() {
            vec![AtBreakpoint::Right; spec.breakpoints.len()]
        } else {
            spec.at_breakpoint
                .iter()
                .map(|r| match r {
                    BreakpointValueSpec::Side(SideName::Left) => AtBreakpoint::Left,
                    BreakpointValueSpec::Side(SideName::Right) => AtBreakpoint::Right,
                    BreakpointValueSpec::Value(v) => AtBreakpoint::Value(*v),
                })
                .collect()
        };
        Self::new(spec.breakpoints.clone(), pieces, at_breakpoint)
    }
}

/// Drift discontinuities allowed (A) or globally Lipschitz coefficients (B).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AssumptionClass {
    A,
    B,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProblemError {
    #[error("initial value {0} is not finite")]
    NonFiniteInitialValue(f64),
    #[error("{field}: {source}")]
    Field {
        field: &'static str,
        #[source]
        source: PiecewiseError,
    },
    #[error("class B requires a continuous drift, but mu jumps at breakpoint {at}")]
    DiscontinuousDrift { at: f64 },
    #[error("sigma must be continuous, but it jumps at breakpoint {at}")]
    DiscontinuousDiffusion { at: f64 },
    #[error("sigma vanishes at breakpoint {at}")]
    DegenerateDiffusion { at: f64 },
}

/// `dX = mu(X) dt + sigma(X) dW` on `[0, 1]`, `X_0 = x0`.
#[derive(Debug, Clone)]
pub struct SdeProblem {
    x0: f64,
    mu: PiecewiseFunction,
    sigma: PiecewiseFunction,
    class: AssumptionClass,
}

impl SdeProblem {
    pub fn new(
        x0: f64,
        mu: PiecewiseFunction,
        sigma: PiecewiseFunction,
        class: AssumptionClass,
    ) -> Result<Self, ProblemError> {
        if !x0.is_finite() {
            return Err(ProblemError::NonFiniteInitialValue(x0));
        }
        // sigma is globally Lipschitz in both classes.
        for (i, &b) in sigma.breakpoints().iter().enumerate() {
            if !sigma.is_continuous_at(i).unwrap_or(false) {
                return Err(ProblemError::DiscontinuousDiffusion { at: b });
            }
        }
        if class == AssumptionClass::B {
            for (i, &b) in mu.breakpoints().iter().enumerate() {
                if !mu.is_continuous_at(i).unwrap_or(false) {
                    return Err(ProblemError::DiscontinuousDrift { at: b });
                }
            }
            for &b in sigma.breakpoints() {
                if sigma.value(b) == 0.0 {
                    return Err(ProblemError::DegenerateDiffusion { at: b });
                }
            }
        }
        for &b in mu.breakpoints() {
            if sigma.value(b) == 0.0 {
                return Err(ProblemError::DegenerateDiffusion { at: b });
            }
        }
        Ok(Self {
            x0,
            mu,
            sigma,
            class,
        })
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn mu(&self) -> &PiecewiseFunction {
        &self.mu
    }

    pub fn sigma(&self) -> &PiecewiseFunction {
        &self.sigma
    }

    pub fn class(&self) -> AssumptionClass {
        self.class
    }

    /// Same coefficients, different initial value.
    pub fn with_x0(&self, x0: f64) -> Result<Self, ProblemError> {
        Self::new(x0, self.mu.clone(), self.sigma.clone(), self.class)
    }

    pub fn to_spec(&self) -> Result<ProblemSpec, ProblemError> {
        Ok(ProblemSpec {
            x0: self.x0,
            mu: self.mu.to_spec().map_err(|source| ProblemError::Field {
                field: "mu",
                source,
            })?,
            sigma: self.sigma.to_spec().map_err(|source| ProblemError::Field {
                field: "sigma",
                source,
            })?,
            class: self.class,
        })
    }

    pub fn from_spec(spec: &ProblemSpec, resolve: &Resolver) -> Result<Self, ProblemError> {
        let mu = PiecewiseFunction::from_spec(&spec.mu, resolve).map_err(|source| {
            ProblemError::Field {
                field: "mu",
                source,
            }
        })?;
        let sigma = PiecewiseFunction::from_spec(&spec.sigma, resolve).map_err(|source| {
            ProblemError::Field {
                field: "sigma",
                source,
            }
        })?;
        Self::new(spec.x0, mu, sigma, spec.class)
    }
}

// Serialized forms.

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub x0: f64,
    pub mu: PiecewiseSpec,
    pub sigma: PiecewiseSpec,
    pub class: AssumptionClass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PiecewiseSpec {
    #[serde(default)]
    pub breakpoints: Vec<f64>,
    pub pieces: Vec<PieceSpec>,
    #[serde(default)]
    pub at_breakpoint: Vec<BreakpointValueSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum PieceSpec {
    Affine {
        slope: f64,
        intercept: f64,
    },
    Catalog {
        catalog: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        nu: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SideName {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BreakpointValueSpec {
    Side(SideName),
    Value(f64),
}
