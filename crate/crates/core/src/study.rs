//! Monte-Carlo strong-error estimation over coupled levels and log-log rate
//! fitting.
//!
//! Every path draws one Brownian lattice on the reference grid `n_ref`; the
//! reference solution and all coarse levels consume coarsenings of that
//! lattice. The unknown `X_1` is replaced by the quasi-Milstein scheme (the
//! transformed method for class A problems) on the reference grid, or by the
//! closed form when the catalog provides one.
//!
//! Per-path errors are collected in path order and reduced sequentially, so a
//! report does not depend on the number of worker threads.

use std::fmt;
use std::fs;
use std::io;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::brownian::{self, BrownianError};
use crate::catalog::{self, CatalogEntry, CatalogError, ExactSolution};
use crate::piecewise::AssumptionClass;
use crate::schemes::{Integrator, Scheme, SchemeError};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorMode {
    /// `|X_1 − X̂_{n,1}|`.
    FinalTime,
    /// Maximum over the reference grid of the distance between the reference
    /// and the time-continuous coarse scheme.
    GridSup,
}

impl ErrorMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorMode::FinalTime => "final_time",
            ErrorMode::GridSup => "grid_sup",
        }
    }
}

impl fmt::Display for ErrorMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ErrorMode {
    type Err = StudyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "final_time" | "final" => Ok(ErrorMode::FinalTime),
            "grid_sup" | "sup" => Ok(ErrorMode::GridSup),
            other => Err(StudyError::Config(format!(
                "unknown error mode `{other}` (expected final_time or grid_sup)"
            ))),
        }
    }
}

#[derive(Debug, Error)]
pub enum StudyError {
    #[error("invalid study configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error(transparent)]
    Brownian(#[from] BrownianError),
    #[error("path {path_index} failed on level {level}: {source}")]
    PathFailed {
        path_index: u64,
        level: usize,
        #[source]
        source: SchemeError,
    },
    #[error("rate fit needs at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("rate fit needs positive errors, got {error} at n = {n}")]
    NonPositiveError { n: f64, error: f64 },
    #[error("rate fit needs at least two distinct levels")]
    DegenerateLevels,
    #[error("worker pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    /// Catalog id or path to a JSON problem file.
    pub problem: String,
    pub scheme: Scheme,
    pub levels: Vec<usize>,
    pub n_ref: usize,
    pub paths: usize,
    pub p_list: Vec<f64>,
    pub seed: u64,
    pub nu: Option<f64>,
    pub error_mode: ErrorMode,
    /// Residual tolerance for `G⁻¹` when mapping transformed values back.
    pub inverse_tol: f64,
    /// Worker threads; `None` uses the global rayon pool.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

impl StudyConfig {
    pub fn new(problem: impl Into<String>, scheme: Scheme) -> Self {
        Self {
            problem: problem.into(),
            scheme,
            levels: (4..=9).map(|e| 1usize << e).collect(),
            n_ref: 1 << 13,
            paths: 2000,
            p_list: vec![2.0, 1.0],
            seed: 7,
            nu: None,
            error_mode: ErrorMode::FinalTime,
            inverse_tol: 1e-12,
            workers: None,
        }
    }

    pub fn validate(&self) -> Result<(), StudyError> {
        let bad = |m: String| Err(StudyError::Config(m));
        if !self.n_ref.is_power_of_two() {
            return bad(format!("n_ref = {} is not a power of two", self.n_ref));
        }
        if self.levels.is_empty() {
            return bad("no levels given".into());
        }
        for &n in &self.levels {
            if n == 0 || !self.n_ref.is_multiple_of(n) {
                return bad(format!("level {n} does not divide n_ref = {}", self.n_ref));
            }
        }
        let mut sorted = self.levels.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.levels.len() {
            return bad("levels must be distinct".into());
        }
        if self.paths < 2 {
            return bad(format!("M = {} paths, need at least 2", self.paths));
        }
        if self.p_list.is_empty() {
            return bad("no L_p exponents given".into());
        }
        for &p in &self.p_list {
            if !(p >= 1.0 && p.is_finite()) {
                return bad(format!("p = {p} must be a finite number >= 1"));
            }
        }
        if !(self.inverse_tol > 0.0) {
            return bad(format!("tolerance {} must be positive", self.inverse_tol));
        }
        if self.workers == Some(0) {
            return bad("worker count must be positive".into());
        }
        Ok(())
    }
}

/// Least-squares line through `(log₂ n, log₂ error)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    /// `−slope`: the empirical convergence order.
    pub order: f64,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Standard error of the slope; absent for two points.
    pub slope_std_err: Option<f64>,
}

pub fn rate_fit(points: &[(f64, f64)]) -> Result<RateFit, StudyError> {
    if points.len() < 2 {
        return Err(StudyError::TooFewPoints(points.len()));
    }
    for &(n, error) in points {
        if !(error > 0.0) || !error.is_finite() {
            return Err(StudyError::NonPositiveError { n, error });
        }
    }
    let xs: Vec<f64> = points.iter().map(|(n, _)| n.log2()).collect();
    let ys: Vec<f64> = points.iter().map(|(_, e)| e.log2()).collect();
    let k = xs.len() as f64;
    let xm = xs.iter().sum::<f64>() / k;
    let ym = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - xm) * (x - xm)).sum();
    if sxx == 0.0 {
        return Err(StudyError::DegenerateLevels);
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let ssr: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    let sst: f64 = ys.iter().map(|y| (y - ym) * (y - ym)).sum();
    let r_squared = if sst > 0.0 { 1.0 - ssr / sst } else { 1.0 };
    let slope_std_err = (points.len() > 2).then(|| (ssr / (k - 2.0) / sxx).sqrt());
    Ok(RateFit {
        order: -slope,
        slope,
        intercept,
        r_squared,
        slope_std_err,
    })
}

/// `(E|e|^p)^{1/p}` with its delta-method standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorEstimate {
    pub estimate: f64,
    pub std_err: f64,
}

pub fn lp_estimate(errors: &[f64], p: f64) -> ErrorEstimate {
    let m = errors.len() as f64;
    let powered: Vec<f64> = errors.iter().map(|e| e.abs().powf(p)).collect();
    let mean = powered.iter().sum::<f64>() / m;
    let var = if errors.len() > 1 {
        powered.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / (m - 1.0)
    } else {
        0.0
    };
    let se_mean = (var / m).sqrt();
    let estimate = mean.powf(1.0 / p);
    let std_err = if mean > 0.0 {
        mean.powf(1.0 / p - 1.0) / p * se_mean
    } else {
        0.0
    };
    ErrorEstimate { estimate, std_err }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelResult {
    pub level: usize,
    pub p: f64,
    pub error: f64,
    pub std_err: f64,
    pub paths: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub p: f64,
    pub fit: Option<RateFit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rejected: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub schema_version: u32,
    pub problem: String,
    pub scheme: Scheme,
    pub reference: String,
    pub seed: u64,
    pub n_ref: usize,
    pub paths: usize,
    pub error_mode: ErrorMode,
    /// Bump half-width of the transform, when one is used.
    pub nu: Option<f64>,
    pub results: Vec<LevelResult>,
    pub fits: Vec<FitResult>,
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub created_unix: Option<u64>,
}

impl StudyReport {
    pub fn fit_for(&self, p: f64) -> Option<&RateFit> {
        self.fits
            .iter()
            .find(|f| f.p == p)
            .and_then(|f| f.fit.as_ref())
    }

    pub fn result(&self, level: usize, p: f64) -> Option<&LevelResult> {
        self.results.iter().find(|r| r.level == level && r.p == p)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("level,p,error,stderr,paths\n");
        for r in &self.results {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.level, r.p, r.error, r.std_err, r.paths
            ));
        }
        out
    }

    /// Write `report.json`, `report.csv` and `reproduce.txt` into `dir`.
    pub fn write_to_dir(&self, dir: &Path, command_line: &str) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        let json = serde_json::to_string_pretty(self).map_err(io::Error::other)?;
        fs::write(dir.join("report.json"), json + "\n")?;
        fs::write(dir.join("report.csv"), self.to_csv())?;
        fs::write(dir.join("reproduce.txt"), format!("{command_line}\n"))?;
        Ok(())
    }
}

enum Reference {
    Exact { solution: ExactSolution, x0: f64 },
    Scheme(Box<Integrator>),
}

/// Problem, coarse scheme and reference, bound together for one study.
struct Harness {
    coarse: Integrator,
    reference: Reference,
    levels_desc: Vec<usize>,
    n_ref: usize,
    seed: u64,
    mode: ErrorMode,
    tol: f64,
}

impl Harness {
    fn new(entry: &CatalogEntry, config: &StudyConfig) -> Result<Self, StudyError> {
        let coarse = Integrator::new(&entry.problem, config.scheme, config.nu)?;
        let reference = match entry.exact {
            Some(solution) => Reference::Exact {
                solution,
                x0: entry.problem.x0(),
            },
            None => {
                let scheme = match entry.problem.class() {
                    AssumptionClass::A => Scheme::TransformedQm,
                    AssumptionClass::B => Scheme::QuasiMilstein,
                };
                Reference::Scheme(Box::new(Integrator::new(
                    &entry.problem,
                    scheme,
                    config.nu,
                )?))
            }
        };
        let mut levels_desc = config.levels.clone();
        levels_desc.sort_unstable_by(|a, b| b.cmp(a));
        Ok(Self {
            coarse,
            reference,
            levels_desc,
            n_ref: config.n_ref,
            seed: config.seed,
            mode: config.error_mode,
            tol: config.inverse_tol,
        })
    }

    fn reference_label(&self) -> String {
        match &self.reference {
            Reference::Exact { .. } => "exact".to_string(),
            Reference::Scheme(i) => format!("{}@{}", i.scheme(), self.n_ref),
        }
    }

    fn nu(&self) -> Option<f64> {
        let from = |i: &Integrator| i.transformed().map(|t| t.params().nu());
        from(&self.coarse).or(match &self.reference {
            Reference::Scheme(i) => from(i),
            Reference::Exact { .. } => None,
        })
    }

    /// Errors of one path, ordered like `levels_desc`.
    fn path_errors(&self, path_index: u64) -> Result<Vec<f64>, StudyError> {
        let lattice = brownian::generate_path(self.seed, path_index, self.n_ref)?;
        let fail = |level: usize| {
            move |source| StudyError::PathFailed {
                path_index,
                level,
                source,
            }
        };
        match self.mode {
            ErrorMode::FinalTime => {
                let reference = match &self.reference {
                    Reference::Exact { solution, x0 } => {
                        solution.value(*x0, 1.0, lattice.terminal_value())
                    }
                    Reference::Scheme(integ) => integ
                        .approximate_terminal(lattice.increments(), self.tol)
                        .map_err(fail(self.n_ref))?,
                };
                let mut inc = lattice.increments().to_vec();
                let mut errors = Vec::with_capacity(self.levels_desc.len());
                for &n in &self.levels_desc {
                    inc = brownian::coarsen(&inc, n)?;
                    let x = self
                        .coarse
                        .approximate_terminal(&inc, self.tol)
                        .map_err(fail(n))?;
                    errors.push((reference - x).abs());
                }
                Ok(errors)
            }
            ErrorMode::GridSup => {
                let fine = lattice.increments();
                let reference: Vec<f64> = match &self.reference {
                    Reference::Exact { solution, x0 } => {
                        let mut w = 0.0;
                        let mut out = vec![*x0];
                        for (j, dw) in fine.iter().enumerate() {
                            w += dw;
                            out.push(solution.value(*x0, (j + 1) as f64 / self.n_ref as f64, w));
                        }
                        out
                    }
                    Reference::Scheme(integ) => {
                        let path = integ.simulate(fine).map_err(fail(self.n_ref))?;
                        path.values
                            .iter()
                            .map(|y| integ.to_original(*y, self.tol))
                            .collect::<Result<_, _>>()
                            .map_err(fail(self.n_ref))?
                    }
                };
                let mut errors = Vec::with_capacity(self.levels_desc.len());
                for &n in &self.levels_desc {
                    let inc = lattice.coarsen(n)?;
                    let path = self.coarse.simulate(&inc).map_err(fail(n))?;
                    let ratio = self.n_ref / n;
                    let mut sup = 0.0f64;
                    for step in 0..n {
                        let mut dw = 0.0;
                        for k in 1..=ratio {
                            let j = step * ratio + k;
                            dw += fine[j - 1];
                            let y = if k == ratio {
                                path.values[step + 1]
                            } else {
                                self.coarse
                                    .continuous_value(&path, step, k as f64 / self.n_ref as f64, dw)
                                    .map_err(fail(n))?
                            };
                            let x = self.coarse.to_original(y, self.tol).map_err(fail(n))?;
                            sup = sup.max((reference[j] - x).abs());
                        }
                    }
                    errors.push(sup);
                }
                Ok(errors)
            }
        }
    }

    fn all_errors(
        &self,
        paths: usize,
        workers: Option<usize>,
    ) -> Result<Vec<Vec<f64>>, StudyError> {
        let run = || {
            (0..paths as u64)
                .into_par_iter()
                .map(|i| self.path_errors(i))
                .collect::<Vec<_>>()
        };
        let per_path = match workers {
            Some(w) => rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| StudyError::Pool(e.to_string()))?
                .install(run),
            None => run(),
        };
        per_path.into_iter().collect()
    }
}

/// Estimate the strong `L_p` error of `scheme` on level `n` against the
/// reference on `n_ref`, final-time mode, default `ν`.
pub fn strong_error(
    entry: &CatalogEntry,
    scheme: Scheme,
    n: usize,
    n_ref: usize,
    paths: usize,
    p: f64,
    seed: u64,
) -> Result<ErrorEstimate, StudyError> {
    let mut config = StudyConfig::new(entry.name.clone(), scheme);
    config.levels = vec![n];
    config.n_ref = n_ref;
    config.paths = paths;
    config.p_list = vec![p];
    config.seed = seed;
    config.validate()?;
    let harness = Harness::new(entry, &config)?;
    let errors = harness.all_errors(paths, None)?;
    let column: Vec<f64> = errors.iter().map(|e| e[0]).collect();
    Ok(lp_estimate(&column, p))
}

/// Load the configured problem and run the study.
pub fn run_study(config: &StudyConfig) -> Result<StudyReport, StudyError> {
    let entry = catalog::load(&config.problem)?;
    run_study_with(&entry, config)
}

/// Run a study on an already resolved problem.
pub fn run_study_with(
    entry: &CatalogEntry,
    config: &StudyConfig,
) -> Result<StudyReport, StudyError> {
    config.validate()?;
    let harness = Harness::new(entry, config)?;
    let errors = harness.all_errors(config.paths, config.workers)?;

    let mut warnings = Vec::new();
    let max_level = *config.levels.iter().max().expect("validated non-empty");
    if config.n_ref < 4 * max_level {
        warnings.push(format!(
            "n_ref = {} is less than 4x the finest level {max_level}; errors on the finest levels are dominated by the reference",
            config.n_ref
        ));
    }

    let mut levels_asc = config.levels.clone();
    levels_asc.sort_unstable();
    let mut results = Vec::new();
    let mut fits = Vec::new();
    for &p in &config.p_list {
        let mut points = Vec::new();
        for &n in &levels_asc {
            let col = harness
                .levels_desc
                .iter()
                .position(|&m| m == n)
                .expect("level present");
            let column: Vec<f64> = errors.iter().map(|e| e[col]).collect();
            let est = lp_estimate(&column, p);
            results.push(LevelResult {
                level: n,
                p,
                error: est.estimate,
                std_err: est.std_err,
                paths: config.paths,
            });
            points.push((n as f64, est.estimate));
        }
        match rate_fit(&points) {
            Ok(fit) => fits.push(FitResult {
                p,
                fit: Some(fit),
                rejected: None,
            }),
            Err(e) => {
                warnings.push(format!("p = {p}: rate fit rejected (degenerate): {e}"));
                fits.push(FitResult {
                    p,
                    fit: None,
                    rejected: Some(e.to_string()),
                });
            }
        }
    }

    Ok(StudyReport {
        schema_version: REPORT_SCHEMA_VERSION,
        problem: entry.name.clone(),
        scheme: config.scheme,
        reference: harness.reference_label(),
        seed: config.seed,
        n_ref: config.n_ref,
        paths: config.paths,
        error_mode: config.error_mode,
        nu: harness.nu(),
        results,
        fits,
        warnings,
        created_unix: None,
    })
}

/// Expand `a..b` to the powers of two in `[a, b]`, or parse a comma list.
pub fn parse_levels(s: &str) -> Result<Vec<usize>, StudyError> {
    let bad = || StudyError::Config(format!("cannot parse levels `{s}` (use a..b or a,b,c)"));
    if let Some((a, b)) = s.split_once("..") {
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b.trim().parse().map_err(|_| bad())?;
        let levels: Vec<usize> = (0..usize::BITS)
            .map(|e| 1usize << e)
            .filter(|n| *n >= a && *n <= b)
            .collect();
        if levels.is_empty() {
            return Err(bad());
        }
        Ok(levels)
    } else {
        s.split(',')
            .map(|t| t.trim().parse::<usize>().map_err(|_| bad()))
            .collect()
    }
}
