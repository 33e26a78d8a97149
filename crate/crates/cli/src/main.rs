use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use qmsde::catalog::{self, CatalogEntry};
use qmsde::study::{parse_levels, run_study_with, ErrorMode, StudyConfig};
use qmsde::{brownian, selfcheck, AssumptionClass, Integrator, Scheme, Side, TransformedSde};

#[derive(Parser)]
#[command(
    name = "qmsde",
    version,
    about = "Strong approximation of scalar SDEs with discontinuous drift"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the built-in problems, or print one as a JSON problem file.
    Catalog {
        /// Print the JSON problem file of this entry.
        #[arg(long, value_name = "ID")]
        export: Option<String>,
    },
    /// Simulate one path and print it as CSV (t,value).
    Simulate {
        #[arg(long)]
        problem: String,
        #[arg(long, default_value = "qm")]
        scheme: Scheme,
        /// Number of steps on [0, 1]; a power of two.
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        path_index: u64,
        /// Fine lattice the increments are drawn on; defaults to n.
        #[arg(long)]
        nref: Option<usize>,
        #[arg(long)]
        nu: Option<f64>,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        /// Print the raw transformed path Z instead of G^-1(Z).
        #[arg(long)]
        transformed: bool,
    },
    /// Tabulate G, its derivatives, its inverse and the transformed coefficients.
    TransformEval {
        #[arg(long)]
        problem: String,
        #[arg(long)]
        nu: Option<f64>,
        /// Grid as start:stop:step.
        #[arg(long, allow_hyphen_values = true)]
        grid: String,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// Estimate strong errors on coupled levels and fit the convergence order.
    Study {
        #[arg(long)]
        problem: String,
        #[arg(long)]
        scheme: Scheme,
        /// `a..b` (powers of two in [a, b]) or a comma list.
        #[arg(long, default_value = "16..512")]
        levels: String,
        #[arg(long, default_value_t = 8192)]
        nref: usize,
        /// Number of Monte-Carlo paths.
        #[arg(long = "M", default_value_t = 2000)]
        m: usize,
        /// Comma-separated L_p exponents.
        #[arg(long, default_value = "2,1")]
        p: String,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        nu: Option<f64>,
        #[arg(long, default_value = "final_time")]
        error_mode: ErrorMode,
        /// Directory for report.json, report.csv and reproduce.txt.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Run the fast invariant suite.
    Selfcheck,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", render(&e));
            ExitCode::FAILURE
        }
    }
}

/// The error chain, skipping causes a message already quotes.
fn render(e: &anyhow::Error) -> String {
    let mut msg = e.to_string();
    for cause in e.chain().skip(1) {
        let c = cause.to_string();
        if !msg.contains(&c) {
            msg = format!("{msg}: {c}");
        }
    }
    msg
}

fn run(command: Command) -> Result<ExitCode> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match command {
        Command::Catalog { export } => cmd_catalog(&mut out, export.as_deref())?,
        Command::Simulate {
            problem,
            scheme,
            n,
            seed,
            path_index,
            nref,
            nu,
            tol,
            transformed,
        } => {
            let entry = catalog::load(&problem)?;
            let nref = nref.unwrap_or(n);
            if nref % n.max(1) != 0 || n == 0 {
                bail!("--n {n} must be positive and divide --nref {nref}");
            }
            let lattice = brownian::generate_path(seed, path_index, nref)?;
            let increments = lattice.coarsen(n)?;
            let integ = Integrator::new(&entry.problem, scheme, nu)?;
            let path = integ.simulate(&increments)?;
            writeln!(out, "t,value")?;
            for (t, y) in path.grid() {
                let v = if transformed {
                    y
                } else {
                    integ.to_original(y, tol)?
                };
                writeln!(out, "{t},{v}")?;
            }
        }
        Command::TransformEval {
            problem,
            nu,
            grid,
            tol,
        } => cmd_transform_eval(&mut out, &problem, nu, &grid, tol)?,
        Command::Study {
            problem,
            scheme,
            levels,
            nref,
            m,
            p,
            seed,
            nu,
            error_mode,
            out: dir,
            tol,
            workers,
        } => {
            let entry = catalog::load(&problem)?;
            let config = StudyConfig {
                problem: problem.clone(),
                scheme,
                levels: parse_levels(&levels)?,
                n_ref: nref,
                paths: m,
                p_list: parse_p_list(&p)?,
                seed,
                nu,
                error_mode,
                inverse_tol: tol,
                workers,
            };
            let mut report = run_study_with(&entry, &config)?;
            report.created_unix = Some(timestamp());
            print_summary(&mut out, &report)?;
            if let Some(dir) = dir {
                let command_line = std::env::args().collect::<Vec<_>>().join(" ");
                report
                    .write_to_dir(&dir, &command_line)
                    .with_context(|| format!("writing report to {}", dir.display()))?;
                writeln!(out, "report written to {}", dir.display())?;
            }
        }
        Command::Selfcheck => {
            let results = selfcheck::run_all();
            let failed = results.iter().filter(|r| !r.passed).count();
            for r in &results {
                let tag = if r.passed { "PASS" } else { "FAIL" };
                writeln!(out, "{tag} {}: {}", r.name, r.detail)?;
            }
            writeln!(out, "{} passed, {failed} failed", results.len() - failed)?;
            if failed > 0 {
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_catalog(out: &mut impl Write, export: Option<&str>) -> Result<()> {
    if let Some(id) = export {
        let entry =
            catalog::entry(id).ok_or_else(|| catalog::CatalogError::UnknownProblem(id.into()))?;
        let json = entry.export_json().with_context(|| {
            format!("{id} is built from closed-form pieces and cannot be exported")
        })?;
        writeln!(out, "{json}")?;
        return Ok(());
    }
    writeln!(out, "id,class,x0,exportable,description")?;
    for e in catalog::all() {
        let class = match e.problem.class() {
            AssumptionClass::A => "A",
            AssumptionClass::B => "B",
        };
        writeln!(
            out,
            "{},{class},{},{},\"{}\"",
            e.name,
            e.problem.x0(),
            e.exportable(),
            e.description
        )?;
    }
    Ok(())
}

fn parse_grid(grid: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = grid.split(':').collect();
    let [a, b, h] = parts.as_slice() else {
        bail!("--grid `{grid}` must be start:stop:step");
    };
    let (a, b, h) = (a.trim(), b.trim(), h.trim());
    let start: f64 = a.parse().with_context(|| format!("grid start `{a}`"))?;
    let stop: f64 = b.parse().with_context(|| format!("grid stop `{b}`"))?;
    let step: f64 = h.parse().with_context(|| format!("grid step `{h}`"))?;
    if step.is_nan() || step <= 0.0 || !start.is_finite() || !stop.is_finite() || stop < start {
        bail!("--grid `{grid}` needs finite start <= stop and a positive step");
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize;
    // Work on an integer lattice when the inputs are short decimals, so that
    // e.g. -1:1:0.01 hits 0 and every printed point is the nearest double.
    let places = |s: &str| match s.split_once('.') {
        Some((_, frac)) if !s.contains(['e', 'E']) => Some(frac.len() as i32),
        Some(_) => None,
        None if s.contains(['e', 'E']) => None,
        None => Some(0),
    };
    if let (Some(pa), Some(ph)) = (places(a), places(h)) {
        let d = pa.max(ph);
        if d <= 15 {
            let scale = 10f64.powi(d);
            let (ia, ih) = ((start * scale).round(), (step * scale).round());
            return Ok((0..=count).map(|k| (ia + k as f64 * ih) / scale).collect());
        }
    }
    Ok((0..=count).map(|k| start + k as f64 * step).collect())
}

fn cmd_transform_eval(
    out: &mut impl Write,
    problem: &str,
    nu: Option<f64>,
    grid: &str,
    tol: f64,
) -> Result<()> {
    let entry: CatalogEntry = catalog::load(problem)?;
    if entry.problem.class() == AssumptionClass::B {
        bail!("{problem} is class B; the transform applies to class-A problems only");
    }
    let sde = TransformedSde::new(&entry.problem, nu)?;
    let g = sde.params();
    writeln!(
        out,
        "x,G,G_prime,G_second_left,G_second_right,G_inverse,mu_tilde,sigma_tilde"
    )?;
    for x in parse_grid(grid)? {
        let (left, right) = if g.z().contains(&x) {
            (g.g_second(x, Side::Left)?, g.g_second(x, Side::Right)?)
        } else {
            let v = g.g_second(x, Side::Interior)?;
            (v, v)
        };
        let c = sde.coefficients(x)?;
        writeln!(
            out,
            "{x},{},{},{left},{right},{},{},{}",
            g.g_eval(x),
            g.g_prime(x),
            g.g_inverse(x, tol)?,
            c.mu,
            c.sigma
        )?;
    }
    Ok(())
}

fn parse_p_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .with_context(|| format!("--p value `{t}`"))
        })
        .collect()
}

/// Seconds since the epoch; `SOURCE_DATE_EPOCH` overrides the clock.
fn timestamp() -> u64 {
    if let Some(t) = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|v| v.parse().ok())
    {
        return t;
    }
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn print_summary(out: &mut impl Write, report: &qmsde::StudyReport) -> Result<()> {
    writeln!(
        out,
        "problem {}  scheme {}  reference {}  M {}  seed {}",
        report.problem, report.scheme, report.reference, report.paths, report.seed
    )?;
    writeln!(
        out,
        "{:>8} {:>4} {:>14} {:>12}",
        "level", "p", "error", "stderr"
    )?;
    for r in &report.results {
        writeln!(
            out,
            "{:>8} {:>4} {:>14.6e} {:>12.3e}",
            r.level, r.p, r.error, r.std_err
        )?;
    }
    for f in &report.fits {
        match &f.fit {
            Some(fit) => writeln!(
                out,
                "p = {}: order {:.4}{}  R^2 {:.4}",
                f.p,
                fit.order,
                fit.slope_std_err
                    .map(|s| format!(" +/- {s:.4}"))
                    .unwrap_or_default(),
                fit.r_squared
            )?,
            None => writeln!(out, "p = {}: fit rejected", f.p)?,
        }
    }
    for w in &report.warnings {
        writeln!(out, "warning: {w}")?;
    }
    Ok(())
}
