//! Checks shared by the property tests and the acceptance suite.

#![allow(dead_code)]

use qmsde::{transform::TransformedSde, Side, TransformParams};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// `|a − b| ≤ tol · max(|b|, 1)`.
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

/// Random admissible `(z, α, ν)` with `k` nodes.
pub fn random_params(rng: &mut StdRng, k: usize) -> TransformParams {
    let mut z = vec![rng.gen_range(-1.0..1.0)];
    for _ in 1..k {
        let last = *z.last().unwrap();
        z.push(last + rng.gen_range(0.2..1.5));
    }
    let alpha: Vec<f64> = (0..k)
        .map(|_| {
            let a: f64 = rng.gen_range(0.05..2.0);
            if rng.gen_bool(0.5) {
                a
            } else {
                -a
            }
        })
        .collect();
    let rho = qmsde::rho_max(&z, &alpha).unwrap();
    let nu = rho * rng.gen_range(0.1..0.95);
    TransformParams::new(z, alpha, nu).unwrap()
}

/// A point strictly inside a bump with `0.02 < |u| < 0.98`.
fn inside_bump(rng: &mut StdRng, t: &TransformParams) -> (usize, f64) {
    let i = rng.gen_range(0..t.z().len());
    let u: f64 = rng.gen_range(0.02..0.98);
    let s = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    (i, t.z()[i] + s * u * t.nu())
}

fn sample_range(t: &TransformParams) -> (f64, f64) {
    let z = t.z();
    (z[0] - 3.0 * t.nu(), z[z.len() - 1] + 3.0 * t.nu())
}

pub fn check_monotone(t: &TransformParams, rng: &mut StdRng, pairs: usize) -> Result<(), String> {
    let (lo, hi) = sample_range(t);
    let bound = t.g_prime_lower_bound();
    if bound.is_nan() || bound <= 0.0 {
        return Err(format!("G' lower bound {bound} not positive"));
    }
    for n in 0..pairs {
        let x: f64 = rng.gen_range(lo..hi);
        // Alternate wide pairs and pairs a few ulps-scale apart.
        let y = if n % 2 == 0 {
            rng.gen_range(lo..hi)
        } else {
            x + rng.gen_range(1e-9..1e-6)
        };
        let (a, b) = if x < y { (x, y) } else { (y, x) };
        if a == b {
            continue;
        }
        if t.g_eval(a) >= t.g_eval(b) {
            return Err(format!("G not increasing on ({a}, {b})"));
        }
        if t.g_prime(a) < bound {
            return Err(format!("G'({a}) = {} below {bound}", t.g_prime(a)));
        }
    }
    Ok(())
}

pub fn check_nodes(t: &TransformParams) -> Result<(), String> {
    for (i, &z) in t.z().iter().enumerate() {
        if t.g_eval(z) != z {
            return Err(format!("G(z_{i}) = {} != {z}", t.g_eval(z)));
        }
        if t.g_prime(z) != 1.0 {
            return Err(format!("G'(z_{i}) = {} != 1", t.g_prime(z)));
        }
    }
    Ok(())
}

pub fn check_identity_tail(
    t: &TransformParams,
    rng: &mut StdRng,
    samples: usize,
) -> Result<(), String> {
    let (lo, hi) = sample_range(t);
    let mut seen = 0;
    while seen < samples {
        let x: f64 = rng.gen_range(lo - 2.0..hi + 2.0);
        if t.z().iter().any(|z| (x - z).abs() < t.nu()) {
            continue;
        }
        seen += 1;
        if t.g_eval(x) != x || t.g_prime(x) != 1.0 || t.g_second(x, Side::Interior).unwrap() != 0.0
        {
            return Err(format!("G is not the identity at {x}"));
        }
    }
    // Exactly on the support boundary.
    for &z in t.z() {
        for x in [z - t.nu(), z + t.nu()] {
            if t.g_eval(x) != x || t.g_prime(x) != 1.0 {
                return Err(format!("G is not the identity at the bump edge {x}"));
            }
        }
    }
    Ok(())
}

pub fn check_round_trip(
    t: &TransformParams,
    rng: &mut StdRng,
    samples: usize,
) -> Result<(), String> {
    let (lo, hi) = sample_range(t);
    for _ in 0..samples {
        let x: f64 = rng.gen_range(lo..hi);
        let back = t.g_inverse(t.g_eval(x), 1e-12).map_err(|e| e.to_string())?;
        if (back - x).abs() > 1e-10 {
            return Err(format!("G^-1(G({x})) = {back}"));
        }
    }
    Ok(())
}

pub fn check_derivatives(
    t: &TransformParams,
    rng: &mut StdRng,
    samples: usize,
) -> Result<(), String> {
    for _ in 0..samples {
        let (_, x) = inside_bump(rng, t);
        let h = 1e-5 * t.nu();
        let fd1 = (t.g_eval(x + h) - t.g_eval(x - h)) / (2.0 * h);
        if !close(t.g_prime(x), fd1, 1e-6) {
            return Err(format!("G'({x}) = {} vs FD {fd1}", t.g_prime(x)));
        }
        let g2 = t.g_second(x, Side::Interior).unwrap();
        let fd2 = (t.g_prime(x + h) - t.g_prime(x - h)) / (2.0 * h);
        if !close(g2, fd2, 1e-5) {
            return Err(format!("G''({x}) = {g2} vs FD {fd2}"));
        }
        let g3 = t.g_third(x).unwrap();
        let fd3 = (t.g_second(x + h, Side::Interior).unwrap()
            - t.g_second(x - h, Side::Interior).unwrap())
            / (2.0 * h);
        if !close(g3, fd3, 1e-4) {
            return Err(format!("G'''({x}) = {g3} vs FD {fd3}"));
        }
    }
    Ok(())
}

pub fn check_one_sided(t: &TransformParams) -> Result<(), String> {
    let h = 1e-6;
    for (&z, &a) in t.z().iter().zip(t.alpha()) {
        let left = t.g_second(z - h, Side::Interior).unwrap();
        let right = t.g_second(z + h, Side::Interior).unwrap();
        if (left + 2.0 * a).abs() > 1e-4 || (right - 2.0 * a).abs() > 1e-4 {
            return Err(format!("G'' near {z}: {left}, {right} vs -/+{}", 2.0 * a));
        }
        if t.g_second(z, Side::Left).unwrap() != -2.0 * a
            || t.g_second(z, Side::Right).unwrap() != 2.0 * a
        {
            return Err(format!("one-sided G''({z}) values"));
        }
    }
    Ok(())
}

/// Every transform check on 20 random configurations, `k` cycling 1, 2, 3.
pub fn transform_suite(seed: u64) -> Result<(), String> {
    let mut rng = StdRng::seed_from_u64(seed);
    for c in 0..20 {
        let k = 1 + c % 3;
        let t = random_params(&mut rng, k);
        let tag = |e: String| format!("config {c} {t:?}: {e}");
        check_monotone(&t, &mut rng, 10_000).map_err(tag)?;
        check_nodes(&t).map_err(tag)?;
        check_identity_tail(&t, &mut rng, 1000).map_err(tag)?;
        check_round_trip(&t, &mut rng, 10_000).map_err(tag)?;
        check_derivatives(&t, &mut rng, 1000).map_err(tag)?;
        check_one_sided(&t).map_err(tag)?;
    }
    Ok(())
}

/// Midpoint drift, preserved diffusion and numerical continuity of `μ̃` at
/// every breakpoint.
pub fn transformed_coefficient_checks(sde: &TransformedSde) -> Result<(), String> {
    let base = sde.base();
    let mu = base.mu();
    for (i, &xi) in sde.breakpoints().iter().enumerate() {
        let mid = (mu.left_limit(i).unwrap() + mu.right_limit(i).unwrap()) / 2.0;
        let m = sde.mu_tilde(xi).map_err(|e| e.to_string())?;
        if m != mid {
            return Err(format!("mu~({xi}) = {m}, midpoint {mid}"));
        }
        let s = sde.sigma_tilde(xi).map_err(|e| e.to_string())?;
        if s != base.sigma().value(xi) {
            return Err(format!(
                "sigma~({xi}) = {s} vs sigma = {}",
                base.sigma().value(xi)
            ));
        }
        // Lipschitz constant from secants on a 1e-3 grid over the bump.
        let nu = sde.params().nu();
        let mut lip: f64 = 0.0;
        let steps = (2.0 * nu / 1e-3).ceil() as usize;
        let mut prev = sde.mu_tilde(xi - nu).unwrap();
        for j in 1..=steps {
            let y = xi - nu + j as f64 * 1e-3;
            let cur = sde.mu_tilde(y).unwrap();
            lip = lip.max((cur - prev).abs() / 1e-3);
            prev = cur;
        }
        let c = 2.0 * lip.max(1.0);
        for h in [1e-3, 1e-4, 1e-5, 1e-6] {
            for y in [xi - h, xi + h] {
                let d = (sde.mu_tilde(y).unwrap() - m).abs();
                if d > c * h {
                    return Err(format!("|mu~({y}) - mu~({xi})| = {d} > {c} * {h}"));
                }
            }
        }
    }
    Ok(())
}
