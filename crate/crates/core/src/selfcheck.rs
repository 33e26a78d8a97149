//! Fast invariant checks behind `qmsde selfcheck`.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::brownian::{coarsen, generate_path};
use crate::catalog;
use crate::piecewise::{AssumptionClass, PiecewiseFunction, SdeProblem, Side};
use crate::schemes::{invert_transformed, qm_step, Integrator, Scheme};
use crate::transform::{rho_max, TransformParams, TransformedSde};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

type Check = fn() -> Result<String, String>;

const CHECKS: [(&str, Check); 9] = [
    ("transform round trip", round_trip),
    ("transform derivatives vs finite differences", derivatives),
    ("transform fixed points and identity tail", fixed_points),
    (
        "transformed drift midpoint and diffusion at breakpoints",
        transformed_breakpoints,
    ),
    ("quasi-Milstein step example", qm_example),
    ("additive noise reproduced exactly", additive_noise),
    (
        "zero-jump transformed method equals quasi-Milstein",
        conjugacy,
    ),
    ("coarsening chains bit-exact", coarsening),
    ("catalog JSON round trip", json_round_trip),
];

pub fn run_all() -> Vec<CheckResult> {
    CHECKS
        .iter()
        .map(|(name, f)| {
            let (passed, detail) = match f() {
                Ok(d) => (true, d),
                Err(d) => (false, d),
            };
            CheckResult {
                name,
                passed,
                detail,
            }
        })
        .collect()
}

struct Uniform(ChaCha8Rng);

impl Uniform {
    fn new(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }

    fn range(&mut self, lo: f64, hi: f64) -> f64 {
        let u = (self.0.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        lo + (hi - lo) * u
    }
}

fn configurations() -> Vec<TransformParams> {
    let mut rng = Uniform::new(1);
    let mut out = Vec::new();
    for c in 0..12 {
        let k = 1 + c % 3;
        let mut z = vec![rng.range(-1.0, 1.0)];
        for _ in 1..k {
            let last = z[z.len() - 1];
            z.push(last + rng.range(0.2, 1.5));
        }
        let alpha: Vec<f64> = (0..k)
            .map(|_| {
                let a = rng.range(0.05, 2.0);
                if rng.range(0.0, 1.0) < 0.5 {
                    -a
                } else {
                    a
                }
            })
            .collect();
        let rho = rho_max(&z, &alpha).expect("sorted nodes");
        let nu = rho * rng.range(0.1, 0.95);
        out.push(TransformParams::new(z, alpha, nu).expect("admissible"));
    }
    out
}

fn span(t: &TransformParams) -> (f64, f64) {
    let z = t.z();
    (z[0] - 2.0 * t.nu(), z[z.len() - 1] + 2.0 * t.nu())
}

fn round_trip() -> Result<String, String> {
    let mut rng = Uniform::new(2);
    let mut worst: f64 = 0.0;
    let configs = configurations();
    for t in &configs {
        let (lo, hi) = span(t);
        for _ in 0..2000 {
            let x = rng.range(lo, hi);
            let back = t.g_inverse(t.g_eval(x), 1e-12).map_err(|e| e.to_string())?;
            worst = worst.max((back - x).abs());
        }
    }
    if worst <= 1e-10 {
        Ok(format!(
            "max |G^-1(G(x)) - x| = {worst:.1e} over {} points",
            configs.len() * 2000
        ))
    } else {
        Err(format!("max round-trip error {worst:.3e} > 1e-10"))
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

fn derivatives() -> Result<String, String> {
    let mut rng = Uniform::new(3);
    let (mut w1, mut w2, mut w3): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for t in &configurations() {
        for _ in 0..200 {
            let i = (rng.range(0.0, t.z().len() as f64) as usize).min(t.z().len() - 1);
            let u = rng.range(0.02, 0.98) * if rng.range(0.0, 1.0) < 0.5 { -1.0 } else { 1.0 };
            let x = t.z()[i] + u * t.nu();
            let h = 1e-5 * t.nu();
            let g2 = |x| t.g_second(x, Side::Interior).expect("off the nodes");
            w1 = w1.max(rel(
                t.g_prime(x),
                (t.g_eval(x + h) - t.g_eval(x - h)) / (2.0 * h),
            ));
            w2 = w2.max(rel(
                g2(x),
                (t.g_prime(x + h) - t.g_prime(x - h)) / (2.0 * h),
            ));
            let g3 = t.g_third(x).map_err(|e| e.to_string())?;
            w3 = w3.max(rel(g3, (g2(x + h) - g2(x - h)) / (2.0 * h)));
        }
    }
    let d = format!("relative errors G' {w1:.1e}, G'' {w2:.1e}, G''' {w3:.1e}");
    if w1 <= 1e-6 && w2 <= 1e-5 && w3 <= 1e-4 {
        Ok(d)
    } else {
        Err(d)
    }
}

fn fixed_points() -> Result<String, String> {
    for t in &configurations() {
        for (&z, &a) in t.z().iter().zip(t.alpha()) {
            if t.g_eval(z) != z || t.g_prime(z) != 1.0 {
                return Err(format!("G or G' not exact at node {z}"));
            }
            let l = t
                .g_second(z - 1e-6, Side::Interior)
                .map_err(|e| e.to_string())?;
            let r = t
                .g_second(z + 1e-6, Side::Interior)
                .map_err(|e| e.to_string())?;
            if (l + 2.0 * a).abs() > 1e-4 || (r - 2.0 * a).abs() > 1e-4 {
                return Err(format!("one-sided G'' limits at {z}: {l}, {r}"));
            }
            for x in [z - t.nu(), z + t.nu(), z - 3.0 * t.nu(), z + 3.0 * t.nu()] {
                if t.z().iter().all(|zj| (x - zj).abs() >= t.nu())
                    && (t.g_eval(x) != x || t.g_prime(x) != 1.0)
                {
                    return Err(format!("G is not the identity at {x}"));
                }
            }
        }
    }
    Ok("G(z_i) = z_i, G'(z_i) = 1, G''(z_i -/+) = -/+ 2 alpha_i".into())
}

fn transformed_breakpoints() -> Result<String, String> {
    for name in ["exx1", "ex2"] {
        let entry = catalog::entry(name).ok_or("missing catalog entry")?;
        let sde = TransformedSde::new(&entry.problem, None).map_err(|e| e.to_string())?;
        let mu = entry.problem.mu();
        for (i, &xi) in sde.breakpoints().iter().enumerate() {
            let mid = 0.5
                * (mu.left_limit(i).map_err(|e| e.to_string())?
                    + mu.right_limit(i).map_err(|e| e.to_string())?);
            let c = sde.coefficients(xi).map_err(|e| e.to_string())?;
            if c.mu != mid || c.sigma != entry.problem.sigma().value(xi) {
                return Err(format!(
                    "{name}: mu~ = {}, sigma~ = {} at {xi}",
                    c.mu, c.sigma
                ));
            }
            for h in [1e-3, 1e-6] {
                let l = sde.mu_tilde(xi - h).map_err(|e| e.to_string())?;
                let r = sde.mu_tilde(xi + h).map_err(|e| e.to_string())?;
                if (l - c.mu).abs() > 100.0 * h || (r - c.mu).abs() > 100.0 * h {
                    return Err(format!("{name}: mu~ jumps near {xi}"));
                }
            }
        }
    }
    Ok("exx1, ex2".into())
}

fn qm_example() -> Result<String, String> {
    let v = qm_step(0.0, 1.0, 1.0, 1.0, 0.25, 1.0);
    if v == 2.375 {
        Ok("x=1, sigma=x, h=1/4, dW=1 -> 2.375".into())
    } else {
        Err(format!("got {v}"))
    }
}

fn additive_noise() -> Result<String, String> {
    let p = SdeProblem::new(
        0.0,
        PiecewiseFunction::constant(0.0),
        PiecewiseFunction::constant(1.0),
        AssumptionClass::A,
    )
    .map_err(|e| e.to_string())?;
    for scheme in [Scheme::Euler, Scheme::QuasiMilstein, Scheme::TransformedQm] {
        let integ = Integrator::new(&p, scheme, None).map_err(|e| e.to_string())?;
        let w = generate_path(1, 0, 64).map_err(|e| e.to_string())?;
        let path = integ.simulate(w.increments()).map_err(|e| e.to_string())?;
        let mut x = 0.0;
        for (l, dw) in w.increments().iter().enumerate() {
            x += dw;
            if path.values[l + 1] != x {
                return Err(format!(
                    "{scheme}: step {l} is {} not {x}",
                    path.values[l + 1]
                ));
            }
        }
    }
    Ok("euler, qm, tqm".into())
}

fn conjugacy() -> Result<String, String> {
    let base = catalog::exx2();
    let p = SdeProblem::new(
        0.0,
        base.mu().clone(),
        base.sigma().clone(),
        AssumptionClass::A,
    )
    .map_err(|e| e.to_string())?;
    let tqm = Integrator::new(&p, Scheme::TransformedQm, None).map_err(|e| e.to_string())?;
    let qm = Integrator::new(&p, Scheme::QuasiMilstein, None).map_err(|e| e.to_string())?;
    let params = tqm.transformed().ok_or("not transformed")?.params();
    for i in 0..20 {
        let w = generate_path(2, i, 128).map_err(|e| e.to_string())?;
        let z = tqm.simulate(w.increments()).map_err(|e| e.to_string())?;
        let x = invert_transformed(&z, params, 1e-12).map_err(|e| e.to_string())?;
        if x.values
            != qm
                .simulate(w.increments())
                .map_err(|e| e.to_string())?
                .values
        {
            return Err(format!("path {i} differs"));
        }
    }
    Ok("20 paths bit-identical".into())
}

fn coarsening() -> Result<String, String> {
    let w = generate_path(3, 7, 1024).map_err(|e| e.to_string())?;
    for a in 0..=10 {
        for b in a..=10 {
            let direct = w.coarsen(1 << a).map_err(|e| e.to_string())?;
            let chain = coarsen(&w.coarsen(1 << b).map_err(|e| e.to_string())?, 1 << a)
                .map_err(|e| e.to_string())?;
            if direct != chain {
                return Err(format!("levels {} via {}", 1 << a, 1 << b));
            }
        }
    }
    Ok("all chains n1 | n2 | 1024".into())
}

fn json_round_trip() -> Result<String, String> {
    let mut n = 0;
    for entry in catalog::all().into_iter().filter(|e| e.exportable()) {
        let json = entry.export_json().map_err(|e| e.to_string())?;
        let back = catalog::parse_problem_json(&json, &entry.name).map_err(|e| e.to_string())?;
        for k in 0..=100 {
            let x = -2.0 + 0.04 * k as f64;
            if back.mu().value(x) != entry.problem.mu().value(x)
                || back.sigma().value(x) != entry.problem.sigma().value(x)
            {
                return Err(format!("{} differs at {x}", entry.name));
            }
        }
        n += 1;
    }
    Ok(format!("{n} exportable entries"))
}
