//! Acceptance criteria 1-9. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

mod common;

use std::time::Instant;

use qmsde::catalog;
use qmsde::study::{run_study, StudyConfig, StudyReport};
use qmsde::{Scheme, TransformedSde};

const SEED: u64 = 7;

fn config(problem: &str, scheme: Scheme) -> StudyConfig {
    let mut c = StudyConfig::new(problem, scheme);
    c.levels = (4..=9).map(|e| 1usize << e).collect();
    c.n_ref = 1 << 13;
    c.paths = 2000;
    c.p_list = vec![2.0];
    c.seed = SEED;
    c
}

fn study(problem: &str, scheme: Scheme) -> Result<StudyReport, String> {
    run_study(&config(problem, scheme)).map_err(|e| e.to_string())
}

fn order(r: &StudyReport) -> Result<(f64, f64), String> {
    let fit = r.fit_for(2.0).ok_or("no fit for p = 2")?;
    Ok((fit.order, fit.r_squared))
}

struct Outcome {
    id: u32,
    ok: bool,
    detail: String,
    secs: f64,
}

fn run(id: u32, f: impl FnOnce() -> Result<String, String>) -> (Outcome, bool) {
    let start = Instant::now();
    let (ok, detail) = match f() {
        Ok(d) => (true, d),
        Err(d) => (false, d),
    };
    let o = Outcome {
        id,
        ok,
        detail,
        secs: start.elapsed().as_secs_f64(),
    };
    println!(
        "criterion {}: {} ({:.1}s) {}",
        o.id,
        if o.ok { "PASS" } else { "FAIL" },
        o.secs,
        o.detail
    );
    (o, ok)
}

fn main() {
    let mut all = Vec::new();
    let mut exx22_report = None;
    let mut exx1_tqm_order = None;

    all.push(run(1, || {
        let r = study("exx22", Scheme::QuasiMilstein)?;
        let (q, r2) = order(&r)?;
        exx22_report = Some(r);
        let d = format!("exx22 qm order {q:.4}, R^2 {r2:.4} (need [0.85, 1.15], R^2 >= 0.98)");
        if (0.85..=1.15).contains(&q) && r2 >= 0.98 {
            Ok(d)
        } else {
            Err(d)
        }
    }));

    all.push(run(2, || {
        let (q, _) = order(&study("exx2", Scheme::QuasiMilstein)?)?;
        let d = format!("exx2 qm order {q:.4} (need >= 0.65)");
        if q >= 0.65 {
            Ok(d)
        } else {
            Err(d)
        }
    }));

    all.push(run(3, || {
        let (q, _) = order(&study("exx1", Scheme::TransformedQm)?)?;
        exx1_tqm_order = Some(q);
        let d = format!("exx1 tqm order {q:.4} (need >= 0.65)");
        if q >= 0.65 {
            Ok(d)
        } else {
            Err(d)
        }
    }));

    all.push(run(4, || {
        let (q, _) = order(&study("ex2", Scheme::TransformedQm)?)?;
        let d = format!("ex2 tqm order {q:.4} (need >= 0.85)");
        if q >= 0.85 {
            Ok(d)
        } else {
            Err(d)
        }
    }));

    all.push(run(5, || {
        let (q, _) = order(&study("exx1", Scheme::Euler)?)?;
        let tqm = exx1_tqm_order.ok_or("criterion 3 produced no order")?;
        let d = format!(
            "exx1 euler order {q:.4}, tqm order {tqm:.4}, gap {:.4} (need >= 0.40 and gap >= 0.15)",
            tqm - q
        );
        if q >= 0.40 && tqm - q >= 0.15 {
            Ok(d)
        } else {
            Err(d)
        }
    }));

    all.push(run(6, || {
        let (em, _) = order(&study("gbm", Scheme::Euler)?)?;
        let (qm, _) = order(&study("gbm", Scheme::QuasiMilstein)?)?;
        let d = format!(
            "gbm euler order {em:.4} (need [0.4, 0.65]), qm order {qm:.4} (need [0.85, 1.15])"
        );
        if (0.4..=0.65).contains(&em) && (0.85..=1.15).contains(&qm) {
            Ok(d)
        } else {
            Err(d)
        }
    }));

    all.push(run(7, || {
        common::transform_suite(SEED)?;
        Ok("20 random (z, alpha, nu) configurations, k in {1, 2, 3}".into())
    }));

    all.push(run(8, || {
        for name in ["exx1", "ex2"] {
            let entry = catalog::entry(name).ok_or("missing catalog entry")?;
            let sde = TransformedSde::new(&entry.problem, None).map_err(|e| e.to_string())?;
            common::transformed_coefficient_checks(&sde).map_err(|e| format!("{name}: {e}"))?;
        }
        Ok("exx1 and ex2".into())
    }));

    all.push(run(9, || {
        let base = exx22_report
            .as_ref()
            .ok_or("criterion 1 produced no report")?;
        let mut c = config("exx22", Scheme::QuasiMilstein);
        for workers in [1, 3] {
            c.workers = Some(workers);
            let again = run_study(&c).map_err(|e| e.to_string())?;
            if &again != base {
                return Err(format!("report with {workers} workers differs"));
            }
            let a = serde_json::to_string(base).unwrap();
            let b = serde_json::to_string(&again).unwrap();
            if a != b {
                return Err(format!("serialized report with {workers} workers differs"));
            }
        }
        Ok("exx22 qm report identical with 1 and 3 workers".into())
    }));

    let failed: Vec<u32> = all
        .iter()
        .filter(|(_, ok)| !ok)
        .map(|(o, _)| o.id)
        .collect();
    println!(
        "acceptance: {} of {} criteria passed",
        all.len() - failed.len(),
        all.len()
    );
    if !failed.is_empty() {
        println!("failed: {failed:?}");
        std::process::exit(1);
    }
}
