//! audit_all: every structural check over a corpus of potentials, one CSV row per
//! (potential, check). Module errors become failing rows instead of aborting the run.

use crate::commands::{error_kind, make_grid, test_field, zeta_plan, Failure};
use crate::config::{Command, Corpus, PotentialSpec, Scenario};
use crate::output::Sink;
use jostlab::bifurcation::{build_bifurcation_potential, verify_bifurcation_eigenvalue, Bifurcation};
use jostlab::jost::audit_jost_estimates;
use jostlab::potential::random_potential;
use jostlab::resolvent::{apply_operator_residual, jump_audit, resolvent_kernel};
use jostlab::threshold::{classify_threshold_n, DEFAULT_EPS_RAY};
use jostlab::weights::TailWeight;
use jostlab::{Potential, C64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub potential: String,
    pub check: String,
    pub passed: bool,
    /// hard invariants decide the exit status; the rest are diagnostics
    pub hard: bool,
    pub value: f64,
    /// tolerance − value, or the check's own signed margin
    pub margin: f64,
    pub detail: String,
}

impl Row {
    fn tol(potential: &str, check: &str, value: f64, tol: f64) -> Self {
        Self {
            potential: potential.into(),
            check: check.into(),
            passed: value <= tol,
            hard: true,
            value,
            margin: tol - value,
            detail: format!("tolerance {tol:e}"),
        }
    }

    fn error(potential: &str, check: &str, hard: bool, detail: String) -> Self {
        Self { potential: potential.into(), check: check.into(), passed: false, hard, value: f64::NAN, margin: f64::NAN, detail }
    }
}

enum Entry {
    Potential(String, Potential),
    Bifurcation(String, Bifurcation),
    Broken(String, String),
}

impl Entry {
    fn name(&self) -> &str {
        match self {
            Entry::Potential(n, _) | Entry::Bifurcation(n, _) | Entry::Broken(n, _) => n,
        }
    }
}

fn load_dir(dir: &Path) -> std::io::Result<Vec<Entry>> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    Ok(paths
        .into_iter()
        .map(|p| {
            let name = format!("file:{}", p.file_name().and_then(|f| f.to_str()).unwrap_or("?"));
            let parsed = std::fs::read_to_string(&p)
                .map_err(|e| e.to_string())
                .and_then(|t| serde_json::from_str::<PotentialSpec>(&t).map_err(|e| e.to_string()))
                .and_then(|spec| spec.build());
            match parsed {
                Ok(v) => Entry::Potential(name, v),
                Err(e) => Entry::Broken(name, e),
            }
        })
        .collect())
}

fn corpus_entries(c: &Corpus, base: &Path, seed: u64) -> std::io::Result<Vec<Entry>> {
    let mut out = Vec::new();
    if c.free {
        out.push(Entry::Potential("free".into(), Potential::zero(1.0)));
    }
    if let Some(d) = &c.dir {
        out.extend(load_dir(&base.join(d))?);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for k in 0..c.random {
        out.push(Entry::Potential(format!("random_{k:03}"), random_potential(&mut rng, c.pieces, c.degree, c.amplitude)));
    }
    for &kappa in &c.bifurcation {
        let name = format!("bifurcation({kappa})");
        out.push(match build_bifurcation_potential(kappa) {
            Ok(b) => Entry::Bifurcation(name, b),
            Err(e) => Entry::Broken(name, e.to_string()),
        });
    }
    Ok(out)
}

fn structural_rows(name: &str, v: &Potential, sc: &Scenario) -> Vec<Row> {
    let tol = &sc.tolerances;
    let grid = match make_grid(sc, v) {
        Ok(g) => g,
        Err(_) => return vec![Row::error(name, "grid", true, "grid does not fit the potential".into())],
    };
    let plan = match zeta_plan(sc, Command::Audit) {
        Ok(p) => p,
        Err(_) => return vec![Row::error(name, "zeta_plan", true, "zeta plan outside the sector".into())],
    };
    let f = test_field(&grid);
    let mut rows = Vec::new();
    let (mut spread, mut cont, mut jump, mut res) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut estimates_ok = true;
    let mut margin = f64::INFINITY;
    let mut built = 0;
    for sp in &plan {
        match resolvent_kernel(v, sp, &grid) {
            Ok(k) => {
                built += 1;
                spread = spread.max(k.delta().spread);
                let a = jump_audit(k.separable());
                cont = cont.max(a.continuity.iter().cloned().fold(0.0, f64::max));
                jump = jump.max(a.max_jump_deviation(C64::i()));
                res = res.max(apply_operator_residual(&k, &grid, &f));
            }
            Err(e) => rows.push(Row::error(
                name,
                "resolvent",
                false,
                format!("{} at zeta = {:.6}{:+.6}i: {e}", error_kind(&e), sp.zeta().re, sp.zeta().im),
            )),
        }
        match jostlab::resolvent::jost_family(v, sp, &grid) {
            Ok(fam) => {
                for s in &fam {
                    let a = audit_jost_estimates(s, v, sc.weights.mu, TailWeight::Outer);
                    estimates_ok &= a.passed();
                    margin = margin.min(a.min_relative_margin());
                }
            }
            Err(e) => rows.push(Row::error(name, "jost", true, e.to_string())),
        }
    }
    if built > 0 {
        rows.push(Row::tol(name, "liouville", spread, tol.liouville));
        rows.push(Row::tol(name, "continuity", cont, tol.continuity));
        rows.push(Row::tol(name, "jump", jump, tol.jump));
        rows.push(Row::tol(name, "resolvent_residual", res, tol.residual));
    }
    rows.push(Row {
        potential: name.into(),
        check: "jost_estimates".into(),
        passed: estimates_ok,
        hard: true,
        value: margin,
        margin,
        detail: "minimum relative margin of the explicit bounds".into(),
    });
    if sc.n == 2 || sc.n == 3 {
        rows.push(match classify_threshold_n(v, sc.n, &grid, &DEFAULT_EPS_RAY) {
            Ok(r) => {
                let s = r.residuals.delta_slope;
                Row {
                    potential: name.into(),
                    check: "threshold".into(),
                    passed: true,
                    hard: false,
                    value: s,
                    margin: 0.5 - (s - s.round()).abs(),
                    detail: format!("classification = {}; delta order {}", r.classification.name(), r.delta_zero_order),
                }
            }
            Err(e) => Row::error(name, "threshold", false, format!("{}: {e}", error_kind(&e))),
        });
    }
    rows
}

fn bifurcation_rows(name: &str, b: &Bifurcation, sc: &Scenario) -> Vec<Row> {
    let grid = match make_grid(sc, &b.v) {
        Ok(g) => g,
        Err(_) => return vec![Row::error(name, "grid", true, "grid does not fit the potential".into())],
    };
    match verify_bifurcation_eigenvalue(b, &grid) {
        Ok(c) => {
            let mut eig = Row::tol(name, "eigen_residual", c.residual, sc.tolerances.eigen_residual);
            eig.detail = format!("z = i kappa^3 = {:e}i; {}", b.kappa.powi(3), eig.detail);
            vec![
                eig,
                Row::tol(name, "eigen_continuity", c.joint_continuity, sc.tolerances.continuity),
                Row {
                    potential: name.into(),
                    check: "delta_dependent".into(),
                    passed: c.delta.dependent,
                    hard: true,
                    value: c.delta.ratio,
                    margin: jostlab::resolvent::DEPENDENCE_RATIO - c.delta.ratio,
                    detail: format!("|Delta| = {:e} at zeta = kappa e^(i pi/6)", c.delta.value.norm()),
                },
            ]
        }
        Err(e) => vec![Row::error(name, "eigen_residual", true, e.to_string())],
    }
}

fn entry_rows(e: &Entry, sc: &Scenario) -> Vec<Row> {
    match e {
        Entry::Broken(name, msg) => vec![Row::error(name, "load", true, msg.clone())],
        Entry::Potential(name, v) => structural_rows(name, v, sc),
        Entry::Bifurcation(name, b) => {
            let mut rows = bifurcation_rows(name, b, sc);
            if sc.n == 3 {
                rows.extend(structural_rows(name, &b.v, sc));
            }
            rows
        }
    }
}

/// Writes audit.csv; returns the number of failing hard rows.
pub fn audit_all(sc: &Scenario, base: &Path, sink: &mut Sink) -> Result<usize, Failure> {
    let corpus = sc.corpus.as_ref().expect("validated");
    let entries = corpus_entries(corpus, base, sc.seed)?;
    let per_entry: Vec<Vec<Row>> = entries.par_iter().map(|e| entry_rows(e, sc)).collect();
    let rows: Vec<Row> = per_entry.into_iter().flatten().collect();
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &rows {
        w.serialize(r).map_err(std::io::Error::other)?;
    }
    let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
    sink.write("audit.csv", &bytes)?;
    let failed = rows.iter().filter(|r| r.hard && !r.passed).count();
    let names: Vec<&str> = entries.iter().map(Entry::name).collect();
    sink.write_json(
        "audit.json",
        &serde_json::json!({ "entries": names, "rows": rows.len(), "hard_failures": failed }),
    )?;
    Ok(failed)
}
