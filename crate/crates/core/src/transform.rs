//! The bi-Lipschitz transform `G_{z,α,ν}` and the transformed SDE.
//!
//! `G(x) = x + Σ α_i (x − z_i)|x − z_i| φ((x − z_i)/ν)` with the bump
//! `φ(u) = (1 − u²)⁴ 1_{[−1,1]}(u)`. For admissible `ν` the bumps are
//! disjoint, `G` is the identity outside them, fixes every `z_i`, and maps
//! each bump interval `[z_i − ν, z_i + ν]` onto itself.
//!
//! Applied with `z = ξ` (the drift breakpoints) and jump coefficients
//! `α_i = (μ(ξ_i−) − μ(ξ_i+)) / (2σ²(ξ_i))`, the process `Z = G(X)` solves an
//! SDE whose coefficients are globally Lipschitz, see [`TransformedSde`].

use thiserror::Error;

use crate::piecewise::{nearly_equal, AssumptionClass, Location, SdeProblem, Side};

/// Iteration cap for [`TransformParams::g_inverse`].
pub const MAX_INVERSE_ITERATIONS: usize = 200;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransformError {
    #[error("node {index} is not finite")]
    NonFiniteNode { index: usize },
    #[error("nodes must be strictly increasing (node {index} does not exceed its predecessor)")]
    UnsortedNodes { index: usize },
    #[error("{z} nodes but {alpha} jump coefficients")]
    LengthMismatch { z: usize, alpha: usize },
    #[error("jump coefficient {index} is not finite")]
    NonFiniteAlpha { index: usize },
    #[error("nu = {nu} must be positive and finite")]
    NonPositiveNu { nu: f64 },
    #[error("nu = {nu} is not admissible: need 0 < nu < rho = {rho}")]
    InadmissibleNu { nu: f64, rho: f64 },
    #[error("bump supports around nodes {index} and {} overlap", index + 1)]
    OverlappingBumps { index: usize },
    #[error("{what} is undefined at node {x}")]
    AtNode { what: &'static str, x: f64 },
    #[error("argument {0} is not finite")]
    NonFiniteArgument(f64),
    #[error("tolerance {0} must be positive")]
    NonPositiveTolerance(f64),
    #[error("inverse of G at {y} did not reach tolerance {tol} after {iterations} iterations")]
    NonConvergence { y: f64, tol: f64, iterations: usize },
    #[error("class B problems have continuous drift; the transform is not applied to them")]
    ClassB,
    #[error("sigma vanishes at drift breakpoint {at}")]
    DegenerateDiffusion { at: f64 },
}

fn check_nodes(z: &[f64], alpha: &[f64]) -> Result<(), TransformError> {
    if z.len() != alpha.len() {
        return Err(TransformError::LengthMismatch {
            z: z.len(),
            alpha: alpha.len(),
        });
    }
    for (index, v) in z.iter().enumerate() {
        if !v.is_finite() {
            return Err(TransformError::NonFiniteNode { index });
        }
        if index > 0 && *v <= z[index - 1] {
            return Err(TransformError::UnsortedNodes { index });
        }
    }
    for (index, a) in alpha.iter().enumerate() {
        if !a.is_finite() {
            return Err(TransformError::NonFiniteAlpha { index });
        }
    }
    Ok(())
}

/// Admissibility radius: the minimum of `1/(8|α_i|)` and the half gaps
/// between consecutive nodes, with `1/0 = ∞`.
pub fn rho_max(z: &[f64], alpha: &[f64]) -> Result<f64, TransformError> {
    check_nodes(z, alpha)?;
    let jumps = alpha.iter().map(|a| {
        if *a == 0.0 {
            f64::INFINITY
        } else {
            1.0 / (8.0 * a.abs())
        }
    });
    let gaps = z.windows(2).map(|w| (w[1] - w[0]) / 2.0);
    Ok(jumps.chain(gaps).fold(f64::INFINITY, f64::min))
}

/// `φ(u) = (1 − u²)⁴` on `[−1, 1]`, zero elsewhere.
#[inline]
pub fn bump_phi(u: f64) -> f64 {
    if u.abs() <= 1.0 {
        let s = 1.0 - u * u;
        let s2 = s * s;
        s2 * s2
    } else {
        0.0
    }
}

#[inline]
fn psi(u: f64) -> f64 {
    let u2 = u * u;
    let s = 1.0 - u2;
    s * s * (1.0 - 22.0 * u2 + 45.0 * u2 * u2)
}

#[inline]
fn eta(u: f64) -> f64 {
    let u2 = u * u;
    (1.0 - u2) * u * (-48.0 + 312.0 * u2 - 360.0 * u2 * u2)
}

/// Parameters `(z, α, ν)` of `G_{z,α,ν}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformParams {
    z: Vec<f64>,
    alpha: Vec<f64>,
    nu: f64,
}

impl TransformParams {
    /// Validates `z` strictly increasing and `0 < ν < ρ_{z,α}`. An empty node
    /// set is accepted and yields the identity map.
    pub fn new(z: Vec<f64>, alpha: Vec<f64>, nu: f64) -> Result<Self, TransformError> {
        let rho = rho_max(&z, &alpha)?;
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(TransformError::NonPositiveNu { nu });
        }
        if nu >= rho {
            return Err(TransformError::InadmissibleNu { nu, rho });
        }
        for (index, w) in z.windows(2).enumerate() {
            if w[0] + nu >= w[1] - nu {
                return Err(TransformError::OverlappingBumps { index });
            }
        }
        Ok(Self { z, alpha, nu })
    }

    /// `ν = ρ/2`, or `ν = 1` when `ρ = ∞` (then every `α_i` vanishes and `G`
    /// is the identity for any `ν`).
    pub fn with_default_nu(z: Vec<f64>, alpha: Vec<f64>) -> Result<Self, TransformError> {
        let rho = rho_max(&z, &alpha)?;
        Self::new(z, alpha, default_nu(rho))
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn rho(&self) -> f64 {
        rho_max(&self.z, &self.alpha).expect("validated at construction")
    }

    pub fn is_identity(&self) -> bool {
        self.alpha.iter().all(|a| *a == 0.0)
    }

    /// Lower bound `1 − 8 max|α_i| ν` on `G′`.
    pub fn g_prime_lower_bound(&self) -> f64 {
        let amax = self.alpha.iter().fold(0.0f64, |m, a| m.max(a.abs()));
        1.0 - 8.0 * amax * self.nu
    }

    /// The bump whose closed support contains `x`, as `(i, x − z_i)`.
    #[inline]
    fn bump(&self, x: f64) -> Option<(usize, f64)> {
        if self.z.is_empty() {
            return None;
        }
        let j = self.z.partition_point(|&zi| zi < x);
        let mut best: Option<(usize, f64)> = None;
        for i in [j.wrapping_sub(1), j] {
            if let Some(&zi) = self.z.get(i) {
                let d = x - zi;
                if d.abs() <= self.nu && best.is_none_or(|(_, bd)| d.abs() < bd.abs()) {
                    best = Some((i, d));
                }
            }
        }
        best
    }

    #[inline]
    pub fn g_eval(&self, x: f64) -> f64 {
        match self.bump(x) {
            Some((i, d)) => x + self.alpha[i] * d * d.abs() * bump_phi(d / self.nu),
            None => x,
        }
    }

    #[inline]
    pub fn g_prime(&self, x: f64) -> f64 {
        match self.bump(x) {
            Some((i, d)) => {
                let u = d / self.nu;
                let u2 = u * u;
                let s = 1.0 - u2;
                1.0 + 2.0 * self.alpha[i] * d.abs() * s * s * s * (1.0 - 5.0 * u2)
            }
            None => 1.0,
        }
    }

    /// `G″(x)`. At a node, `side` selects the one-sided limit `∓2α_i`;
    /// asking for [`Side::Interior`] there is an error.
    pub fn g_second(&self, x: f64, side: Side) -> Result<f64, TransformError> {
        match self.bump(x) {
            Some((i, 0.0)) => match side {
                Side::Left => Ok(-2.0 * self.alpha[i]),
                Side::Right => Ok(2.0 * self.alpha[i]),
                Side::Interior => Err(TransformError::AtNode {
                    what: "interior second derivative",
                    x,
                }),
            },
            Some((i, d)) => {
                let s = if d > 0.0 { 1.0 } else { -1.0 };
                Ok(s * 2.0 * self.alpha[i] * psi(d / self.nu))
            }
            None => Ok(0.0),
        }
    }

    /// `G‴(x)`, defined away from the nodes.
    pub fn g_third(&self, x: f64) -> Result<f64, TransformError> {
        match self.bump(x) {
            Some((_, 0.0)) => Err(TransformError::AtNode {
                what: "third derivative",
                x,
            }),
            Some((i, d)) => {
                let s = if d > 0.0 { 1.0 } else { -1.0 };
                Ok(s * 2.0 * self.alpha[i] / self.nu * eta(d / self.nu))
            }
            None => Ok(0.0),
        }
    }

    /// Solve `G(x) = y` to `|G(x) − y| ≤ tol`.
    ///
    /// `G` is the identity off the bumps and maps each half bump
    /// `[z_i − ν, z_i]`, `[z_i, z_i + ν]` onto itself, so the half bump that
    /// contains `y` is a bracket. Newton steps are taken inside the bracket
    /// and replaced by bisection whenever they leave it.
    pub fn g_inverse(&self, y: f64, tol: f64) -> Result<f64, TransformError> {
        if !y.is_finite() {
            return Err(TransformError::NonFiniteArgument(y));
        }
        if !(tol > 0.0) {
            return Err(TransformError::NonPositiveTolerance(tol));
        }
        let (i, d) = match self.bump(y) {
            Some(b) => b,
            None => return Ok(y),
        };
        if d == 0.0 || self.alpha[i] == 0.0 || d.abs() == self.nu {
            return Ok(y);
        }
        let zi = self.z[i];
        let (mut lo, mut hi) = if d > 0.0 {
            (zi, zi + self.nu)
        } else {
            (zi - self.nu, zi)
        };
        let mut x = y;
        for _ in 0..MAX_INVERSE_ITERATIONS {
            let r = self.g_eval(x) - y;
            if r.abs() <= tol {
                return Ok(x);
            }
            if r > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let step = x - r / self.g_prime(x);
            x = if step > lo && step < hi {
                step
            } else {
                lo + 0.5 * (hi - lo)
            };
            if x <= lo || x >= hi {
                // Bracket collapsed to adjacent floats.
                let (rl, rh) = ((self.g_eval(lo) - y).abs(), (self.g_eval(hi) - y).abs());
                let (best, rb) = if rl <= rh { (lo, rl) } else { (hi, rh) };
                if rb <= tol {
                    return Ok(best);
                }
                break;
            }
        }
        Err(TransformError::NonConvergence {
            y,
            tol,
            iterations: MAX_INVERSE_ITERATIONS,
        })
    }
}

pub(crate) fn default_nu(rho: f64) -> f64 {
    if rho.is_finite() {
        rho / 2.0
    } else {
        1.0
    }
}

/// Jump coefficients `α_i = (μ(ξ_i−) − μ(ξ_i+)) / (2σ²(ξ_i))` at the drift
/// breakpoints.
pub fn compute_alpha(problem: &SdeProblem) -> Result<Vec<f64>, TransformError> {
    let mu = problem.mu();
    let sigma = problem.sigma();
    mu.breakpoints()
        .iter()
        .enumerate()
        .map(|(i, &xi)| {
            let s = sigma.value(xi);
            if s == 0.0 {
                return Err(TransformError::DegenerateDiffusion { at: xi });
            }
            let left = mu.left_limit(i).expect("index in range");
            let right = mu.right_limit(i).expect("index in range");
            Ok((left - right) / (2.0 * s * s))
        })
        .collect()
}

/// Coefficients of the transformed SDE at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformedCoefficients {
    pub mu: f64,
    pub sigma: f64,
    /// δ-convention derivative of `σ̃`.
    pub sigma_delta: f64,
}

/// `dZ = μ̃(Z) dt + σ̃(Z) dW`, `Z_0 = G(x₀)`, with
/// `μ̃ = (G′μ + ½G″σ²) ∘ G⁻¹` and `σ̃ = (G′σ) ∘ G⁻¹`.
///
/// At a drift breakpoint `ξ_i` the second derivative of `G` is extended by
/// `G″(ξ_i) = 2α_i + 2(μ(ξ_i+) − μ(ξ_i))/σ²(ξ_i)`, which makes `μ̃`
/// continuous with `μ̃(ξ_i) = (μ(ξ_i−) + μ(ξ_i+))/2`.
#[derive(Debug, Clone)]
pub struct TransformedSde {
    base: SdeProblem,
    params: TransformParams,
    x0: f64,
    inverse_tol: f64,
}

/// Absolute residual used for the inversions inside coefficient evaluation.
const COEFFICIENT_INVERSE_TOL: f64 = 1e-14;

/// Build the transformed SDE. `nu = None` selects `ρ/2`.
pub fn transformed_problem(
    problem: &SdeProblem,
    nu: Option<f64>,
) -> Result<TransformedSde, TransformError> {
    TransformedSde::new(problem, nu)
}

impl TransformedSde {
    pub fn new(problem: &SdeProblem, nu: Option<f64>) -> Result<Self, TransformError> {
        if problem.class() == AssumptionClass::B {
            return Err(TransformError::ClassB);
        }
        let alpha = compute_alpha(problem)?;
        let z = problem.mu().breakpoints().to_vec();
        let params = match nu {
            Some(nu) => TransformParams::new(z, alpha, nu)?,
            None => TransformParams::with_default_nu(z, alpha)?,
        };
        let x0 = params.g_eval(problem.x0());
        Ok(Self {
            base: problem.clone(),
            params,
            x0,
            inverse_tol: COEFFICIENT_INVERSE_TOL,
        })
    }

    pub fn base(&self) -> &SdeProblem {
        &self.base
    }

    pub fn params(&self) -> &TransformParams {
        &self.params
    }

    /// `G(x₀)`.
    pub fn x0(&self) -> f64 {
        self.x0
    }

    /// Breakpoints of the transformed coefficients; `G` fixes every `ξ_i`.
    pub fn breakpoints(&self) -> &[f64] {
        self.params.z()
    }

    fn invert(&self, y: f64) -> Result<f64, TransformError> {
        self.params
            .g_inverse(y, self.inverse_tol * 1f64.max(y.abs()))
    }

    /// `G″` extended to the breakpoints.
    fn g_second_extended(&self, i: usize) -> f64 {
        let mu = self.base.mu();
        let xi = self.params.z()[i];
        let s = self.base.sigma().value(xi);
        let right = mu.right_limit(i).expect("index in range");
        2.0 * self.params.alpha()[i] + 2.0 * (right - mu.value(xi)) / (s * s)
    }

    /// Preimage `x = G⁻¹(y)` for `y` strictly inside drift piece `j`, clamped
    /// to that piece, with the side to use for one-sided quantities if the
    /// clamp lands on an end point.
    fn preimage(&self, y: f64, j: usize) -> Result<(f64, Side), TransformError> {
        let z = self.params.z();
        let mut x = self.invert(y)?;
        let mut side = Side::Interior;
        if j > 0 && x <= z[j - 1] {
            x = z[j - 1];
            side = Side::Right;
        }
        if j < z.len() && x >= z[j] {
            x = z[j];
            side = Side::Left;
        }
        Ok((x, side))
    }

    /// `μ̃`, `σ̃` and `δ_σ̃` at `y` from a single inversion.
    pub fn coefficients(&self, y: f64) -> Result<TransformedCoefficients, TransformError> {
        if !y.is_finite() {
            return Err(TransformError::NonFiniteArgument(y));
        }
        let mu = self.base.mu();
        let sigma = self.base.sigma();
        match mu.locate(y) {
            Location::At(i) => {
                let xi = y;
                let s = sigma.value(xi);
                let g1 = self.params.g_prime(xi);
                let g2 = self.g_second_extended(i);
                let alpha = self.params.alpha()[i];
                let left = sigma.one_sided_derivative(xi, Side::Left) - 2.0 * alpha * s;
                let right = sigma.one_sided_derivative(xi, Side::Right) + 2.0 * alpha * s;
                let sigma_delta = if nearly_equal(left, right) {
                    0.5 * (left + right)
                } else {
                    0.0
                };
                Ok(TransformedCoefficients {
                    mu: g1 * mu.value(xi) + 0.5 * g2 * s * s,
                    sigma: g1 * s,
                    sigma_delta,
                })
            }
            Location::Inside(j) => {
                let (x, side) = self.preimage(y, j)?;
                let g1 = self.params.g_prime(x);
                let g2 = self.params.g_second(x, side)?;
                let s = sigma.value(x);
                let ds = match side {
                    Side::Interior => sigma.delta_value(x),
                    _ => sigma.one_sided_derivative(x, side),
                };
                Ok(TransformedCoefficients {
                    mu: g1 * mu.piece_value(j, x) + 0.5 * g2 * s * s,
                    sigma: g1 * s,
                    sigma_delta: ds + g2 / g1 * s,
                })
            }
        }
    }

    pub fn mu_tilde(&self, y: f64) -> Result<f64, TransformError> {
        Ok(self.coefficients(y)?.mu)
    }

    pub fn sigma_tilde(&self, y: f64) -> Result<f64, TransformError> {
        Ok(self.coefficients(y)?.sigma)
    }

    pub fn sigma_tilde_delta(&self, y: f64) -> Result<f64, TransformError> {
        Ok(self.coefficients(y)?.sigma_delta)
    }

    /// `μ̃′ = (μ′ + G″/G′ (μ + σσ′) + ½ G‴/G′ σ²) ∘ G⁻¹`. Diagnostic only,
    /// undefined at the breakpoints.
    pub fn mu_tilde_prime(&self, y: f64) -> Result<f64, TransformError> {
        if !y.is_finite() {
            return Err(TransformError::NonFiniteArgument(y));
        }
        let mu = self.base.mu();
        let sigma = self.base.sigma();
        let j = match mu.locate(y) {
            Location::At(_) => {
                return Err(TransformError::AtNode {
                    what: "derivative of the transformed drift",
                    x: y,
                })
            }
            Location::Inside(j) => j,
        };
        let (x, side) = self.preimage(y, j)?;
        if side != Side::Interior {
            return Err(TransformError::AtNode {
                what: "derivative of the transformed drift",
                x,
            });
        }
        let g1 = self.params.g_prime(x);
        let g2 = self.params.g_second(x, side)?;
        let g3 = self.params.g_third(x)?;
        let m = mu.piece_value(j, x);
        let dm = mu.pieces()[j].derivative(x, Side::Interior);
        let s = sigma.value(x);
        let ds = sigma.delta_value(x);
        Ok(dm + g2 / g1 * (m + s * ds) + 0.5 * g3 / g1 * s * s)
    }

    /// `G⁻¹(y)` with the given tolerance.
    pub fn invert_with(&self, y: f64, tol: f64) -> Result<f64, TransformError> {
        self.params.g_inverse(y, tol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::piecewise::{AtBreakpoint, Piece, PiecewiseFunction};

    fn single(nu: f64) -> TransformParams {
        TransformParams::new(vec![0.0], vec![-0.5], nu).unwrap()
    }

    #[test]
    fn rho_examples() {
        assert_eq!(rho_max(&[0.0], &[-0.5]).unwrap(), 0.25);
        assert_eq!(rho_max(&[0.0], &[0.0]).unwrap(), f64::INFINITY);
        assert_eq!(rho_max(&[0.0, 1.0], &[1.0, 1.0]).unwrap(), 0.125);
        assert_eq!(rho_max(&[], &[]).unwrap(), f64::INFINITY);
        assert_eq!(
            rho_max(&[1.0, 0.0], &[1.0, 1.0]).unwrap_err(),
            TransformError::UnsortedNodes { index: 1 }
        );
        assert_eq!(
            rho_max(&[0.0], &[1.0, 1.0]).unwrap_err(),
            TransformError::LengthMismatch { z: 1, alpha: 2 }
        );
    }

    #[test]
    fn bump_values() {
        assert_eq!(bump_phi(0.0), 1.0);
        for u in [1.0, -1.0, 2.0, -2.0] {
            assert_eq!(bump_phi(u), 0.0);
        }
        assert_eq!(bump_phi(0.5), 0.31640625);
    }

    #[test]
    fn g_eval_hand_value() {
        let t = single(0.2);
        assert!((t.g_eval(0.1) - 0.09841796875).abs() < 1e-15);
        assert_eq!(t.g_eval(0.0), 0.0);
        assert_eq!(t.g_eval(0.5), 0.5);
        let id = TransformParams::new(vec![0.0], vec![0.0], 0.3).unwrap();
        for x in [-1.0, -0.1, 0.0, 0.2, 3.0] {
            assert_eq!(id.g_eval(x), x);
        }
    }

    #[test]
    fn g_prime_at_nodes_and_outside() {
        let t = TransformParams::new(vec![-1.0, 0.5], vec![0.7, -1.2], 0.1).unwrap();
        assert_eq!(t.g_prime(-1.0), 1.0);
        assert_eq!(t.g_prime(0.5), 1.0);
        assert_eq!(t.g_prime(0.0), 1.0);
        assert_eq!(t.g_prime(0.6), 1.0);
        assert!(t.g_prime(0.55) >= t.g_prime_lower_bound());
    }

    #[test]
    fn g_second_sides() {
        let t = single(0.2);
        assert_eq!(t.g_second(0.0, Side::Left).unwrap(), 1.0);
        assert_eq!(t.g_second(0.0, Side::Right).unwrap(), -1.0);
        assert!(t.g_second(0.0, Side::Interior).is_err());
        assert_eq!(t.g_second(0.5, Side::Interior).unwrap(), 0.0);
        assert!(t.g_third(0.0).is_err());
        assert_eq!(t.g_third(-0.3).unwrap(), 0.0);
    }

    #[test]
    fn g_inverse_hand_value() {
        let t = single(0.2);
        let x = t.g_inverse(0.09841796875, 1e-14).unwrap();
        assert!((x - 0.1).abs() < 1e-13);
        let id = TransformParams::new(vec![0.0], vec![0.0], 0.3).unwrap();
        assert_eq!(id.g_inverse(0.123, 1e-12).unwrap(), 0.123);
        assert!(t.g_inverse(f64::NAN, 1e-12).is_err());
        assert!(t.g_inverse(0.1, 0.0).is_err());
    }

    #[test]
    fn admissibility() {
        assert_eq!(
            TransformParams::new(vec![0.0], vec![-0.5], 0.25).unwrap_err(),
            TransformError::InadmissibleNu {
                nu: 0.25,
                rho: 0.25
            }
        );
        assert!(TransformParams::new(vec![0.0], vec![-0.5], -0.1).is_err());
        assert_eq!(
            TransformParams::with_default_nu(vec![0.0], vec![-0.5])
                .unwrap()
                .nu(),
            0.125
        );
        assert_eq!(
            TransformParams::with_default_nu(vec![0.0], vec![0.0])
                .unwrap()
                .nu(),
            1.0
        );
        let empty = TransformParams::with_default_nu(vec![], vec![]).unwrap();
        assert_eq!(empty.g_eval(3.0), 3.0);
        assert_eq!(empty.g_inverse(3.0, 1e-12).unwrap(), 3.0);
    }

    fn exx1() -> SdeProblem {
        let mu = PiecewiseFunction::new(
            vec![0.0],
            vec![Piece::constant(0.0), Piece::affine(1.0, 1.0)],
            vec![AtBreakpoint::Right],
        )
        .unwrap();
        SdeProblem::new(
            0.0,
            mu,
            PiecewiseFunction::constant(1.0),
            AssumptionClass::A,
        )
        .unwrap()
    }

    #[test]
    fn alpha_of_examples() {
        assert_eq!(compute_alpha(&exx1()).unwrap(), vec![-0.5]);
        let kink = PiecewiseFunction::new(
            vec![0.0],
            vec![Piece::constant(0.0), Piece::affine(1.0, 0.0)],
            vec![AtBreakpoint::Right],
        )
        .unwrap();
        let p = SdeProblem::new(
            0.0,
            kink,
            PiecewiseFunction::constant(1.0),
            AssumptionClass::B,
        )
        .unwrap();
        assert_eq!(compute_alpha(&p).unwrap(), vec![0.0]);
        let smooth = SdeProblem::new(
            0.0,
            PiecewiseFunction::affine(1.0, 0.0),
            PiecewiseFunction::constant(1.0),
            AssumptionClass::A,
        )
        .unwrap();
        assert!(compute_alpha(&smooth).unwrap().is_empty());
    }

    #[test]
    fn transformed_exx1_at_breakpoint() {
        let t = transformed_problem(&exx1(), Some(0.1)).unwrap();
        let c = t.coefficients(0.0).unwrap();
        assert_eq!(c.mu, 0.5);
        assert_eq!(c.sigma, 1.0);
        assert_eq!(t.x0(), 0.0);
        // sigma = 1, so sigma~ = G' o G^{-1}.
        let y = 0.05;
        let x = t.params().g_inverse(y, 1e-15).unwrap();
        assert!((t.sigma_tilde(y).unwrap() - t.params().g_prime(x)).abs() < 1e-14);
        assert!(t.mu_tilde_prime(0.0).is_err());
    }

    #[test]
    fn transform_rejects_misuse() {
        let p = exx1();
        assert!(matches!(
            transformed_problem(&p, Some(0.3)),
            Err(TransformError::InadmissibleNu { .. })
        ));
        let b = SdeProblem::new(
            0.0,
            PiecewiseFunction::constant(0.0),
            PiecewiseFunction::constant(1.0),
            AssumptionClass::B,
        )
        .unwrap();
        assert_eq!(
            transformed_problem(&b, None).unwrap_err(),
            TransformError::ClassB
        );
    }
}
