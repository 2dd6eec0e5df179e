use crate::config::{Command, ConfigError, Scenario};
use crate::output::Sink;
use jostlab::bifurcation::{build_bifurcation_potential, verify_bifurcation_eigenvalue};
use jostlab::jost::{audit_jost_estimates, companion_residual, JostSolution};
use jostlab::lap::lap_probe_with;
use jostlab::resolvent::{apply_operator_residual, delta, jost_family, jump_audit, resolvent_kernel, write_delta_sweep};
use jostlab::threshold::{classify_threshold_n, virtual_state_from, Classification};
use jostlab::weights::TailWeight;
use jostlab::{Error, Grid, Potential, SpectralParam, C64};
use rayon::prelude::*;
use serde_json::{json, Value};
use std::io::Write;

pub enum Failure {
    Config(ConfigError),
    Numerical { kind: String, message: String, context: Value },
    Io(std::io::Error),
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

impl Failure {
    pub fn numerical(e: &Error, context: Value) -> Self {
        Failure::Numerical { kind: error_kind(e).to_string(), message: e.to_string(), context }
    }
}

pub fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::InvalidPotential(_) => "invalid_potential",
        Error::InvalidGrid(_) => "invalid_grid",
        Error::OutsideSector { .. } => "outside_sector",
        Error::MarginalRoot { .. } => "marginal_root",
        Error::ZeroZeta => "zero_zeta",
        Error::BranchNotAdmissible { .. } => "branch_not_admissible",
        Error::Mismatch => "mismatch",
        Error::NonConstantPiece { .. } => "non_constant_piece",
        Error::UnsupportedOrder(_) => "unsupported_order",
        Error::Dependent { .. } => "delta_dependent",
        Error::Singular(_) => "singular",
        Error::RankOneDenominator(_) => "rank_one_denominator",
        Error::CriteriaDisagree { .. } => "criteria_disagree",
        Error::Refused(_) => "refused",
        Error::KappaRange { .. } => "kappa_range",
    }
}

pub fn cx(c: C64) -> Value {
    json!([c.re, c.im])
}

pub fn make_grid(sc: &Scenario, v: &Potential) -> Result<Grid, Failure> {
    Grid::for_potential(v, sc.grid.x, sc.grid.h, sc.grid.order, &[]).map_err(|e| Failure::Config(ConfigError::field("grid", e.to_string())))
}

pub fn zeta_plan(sc: &Scenario, command: Command) -> Result<Vec<SpectralParam>, Failure> {
    let angle = sc.angle();
    sc.radii(command)
        .iter()
        .map(|&r| SpectralParam::on_ray(sc.n, r, angle).map_err(|e| Failure::Config(ConfigError::field("zeta_plan", e.to_string()))))
        .collect()
}

/// Probe data for residual checks.
pub fn test_field(grid: &Grid) -> jostlab::CellField {
    grid.sample(|x, _| C64::new((-x * x).exp(), 0.25 * x * (-x * x).exp()))
}

fn sol_name(s: &JostSolution) -> String {
    format!("{}{}", s.side().name(), s.branch())
}

pub fn run(command: Command, sc: &Scenario, sink: &mut Sink) -> Result<(), Failure> {
    match command {
        Command::Jost => jost(sc, sink),
        Command::Resolvent => resolvent(sc, sink),
        Command::Threshold => threshold(sc, sink),
        Command::Lapnorm => lapnorm(sc, sink),
        Command::Bifurcate => bifurcate(sc, sink),
        Command::Audit => unreachable!("audit has its own driver"),
    }
}

fn jost(sc: &Scenario, sink: &mut Sink) -> Result<(), Failure> {
    let v = sc.potential();
    let grid = make_grid(sc, &v)?;
    let plan = zeta_plan(sc, Command::Jost)?;
    let mu = sc.weights.mu;
    let results: Vec<_> = plan
        .par_iter()
        .map(|sp| {
            let fam = jost_family(&v, sp, &grid)?;
            let rows: Vec<Value> = fam
                .iter()
                .map(|s| {
                    let audit = audit_jost_estimates(s, &v, mu, TailWeight::Outer);
                    json!({
                        "solution": sol_name(s),
                        "amplification": s.amplification(),
                        "ill_conditioned": s.is_ill_conditioned(),
                        "companion_residual": companion_residual(s, &v, &grid),
                        "estimates_hold": audit.passed(),
                        "min_relative_margin": audit.min_relative_margin(),
                    })
                })
                .collect();
            Ok::<_, Error>((fam, rows))
        })
        .collect();
    let mut report = Vec::new();
    for (k, (sp, r)) in plan.iter().zip(results).enumerate() {
        let (fam, rows) = r.map_err(|e| Failure::numerical(&e, json!({ "command": "jost", "zeta": cx(sp.zeta()) })))?;
        if sc.output.dumps {
            for s in &fam {
                sink.write_with(&format!("jost/zeta{k}_{}.csv", sol_name(s)), |b| s.write_csv(b))?;
            }
        }
        report.push(json!({ "zeta": cx(sp.zeta()), "solutions": rows }));
    }
    sink.write_json("jost.json", &json!({ "N": sc.n, "mu": mu, "samples": report }))?;
    Ok(())
}

fn resolvent(sc: &Scenario, sink: &mut Sink) -> Result<(), Failure> {
    let v = sc.potential();
    let grid = make_grid(sc, &v)?;
    let plan = zeta_plan(sc, Command::Resolvent)?;
    let f = test_field(&grid);
    let probes = [-v.l(), 0.0, v.l()];
    let results: Vec<_> = plan
        .par_iter()
        .map(|sp| {
            let fam = jost_family(&v, sp, &grid)?;
            let refs: Vec<&JostSolution> = fam.iter().collect();
            let d = delta(&refs, &probes)?;
            let k = resolvent_kernel(&v, sp, &grid);
            Ok::<_, Error>((d, k))
        })
        .collect();
    let mut sweep = Vec::new();
    let mut report = Vec::new();
    let mut first_failure = None;
    for (idx, (sp, r)) in plan.iter().zip(results).enumerate() {
        let ctx = json!({ "command": "resolvent", "zeta": cx(sp.zeta()) });
        let (d, k) = r.map_err(|e| Failure::numerical(&e, ctx.clone()))?;
        sweep.push((sp.zeta(), d.value));
        let mut row = json!({
            "zeta": cx(sp.zeta()),
            "z": cx(sp.z()),
            "delta": cx(d.value),
            "delta_ratio": d.ratio,
            "delta_spread": d.spread,
            "dependent": d.dependent,
        });
        match k {
            Ok(k) => {
                let a = jump_audit(k.separable());
                row["jump_deviation"] = json!(a.max_jump_deviation(C64::i()));
                row["continuity"] = json!(a.continuity.iter().cloned().fold(0.0, f64::max));
                row["residual"] = json!(apply_operator_residual(&k, &grid, &f));
                if sc.output.dumps {
                    sink.write_with(&format!("kernel_zeta{idx}.csv"), |b| k.separable().write_csv(b, sc.output.kernel_stride))?;
                }
            }
            Err(e) => {
                row["error"] = json!({ "kind": error_kind(&e), "message": e.to_string() });
                first_failure.get_or_insert(Failure::numerical(&e, ctx));
            }
        }
        report.push(row);
    }
    sink.write_with("delta_sweep.csv", |b| write_delta_sweep(b, &sweep))?;
    sink.write_json("resolvent.json", &json!({ "N": sc.n, "samples": report }))?;
    first_failure.map_or(Ok(()), Err)
}

fn threshold(sc: &Scenario, sink: &mut Sink) -> Result<(), Failure> {
    let v = sc.potential();
    let grid = make_grid(sc, &v)?;
    let eps = sc.radii(Command::Threshold);
    let report = classify_threshold_n(&v, sc.n, &grid, &eps)
        .map_err(|e| Failure::numerical(&e, json!({ "command": "threshold", "eps_ray": eps })))?;
    let mut psi_path = None;
    if report.classification == Classification::VirtualLevel {
        if let Ok(state) = virtual_state_from(&report, &v) {
            sink.write_with("psi.csv", |b| state.write_csv(b))?;
            psi_path = Some("psi.csv");
        }
    }
    sink.write_with("threshold_delta.csv", |b| {
        writeln!(b, "eps,re_delta,im_delta,abs_delta")?;
        for (e, d) in &report.delta_samples {
            writeln!(b, "{e:.17e},{:.17e},{:.17e},{:.17e}", d.re, d.im, d.norm())?;
        }
        Ok(())
    })?;
    sink.write_json("threshold.json", &report.to_json(psi_path))?;
    Ok(())
}

fn lapnorm(sc: &Scenario, sink: &mut Sink) -> Result<(), Failure> {
    let v = sc.potential();
    let grid = make_grid(sc, &v)?;
    let plan = zeta_plan(sc, Command::Lapnorm)?;
    let r = lap_probe_with(&v, &plan, &grid, sc.weights.spec(), sc.weights.nu)
        .map_err(|e| Failure::numerical(&e, json!({ "command": "lapnorm" })))?;
    sink.write_with("lap.csv", |b| {
        writeln!(b, "abs_zeta,norm,diff")?;
        for (i, (z, n)) in r.zetas.iter().zip(&r.norms).enumerate() {
            let d = if i == 0 { f64::NAN } else { r.diffs[i - 1] };
            writeln!(b, "{:.17e},{n:.17e},{d:.17e}", z.norm())?;
        }
        Ok(())
    })?;
    sink.write_json("lap.json", &r.to_json())?;
    Ok(())
}

fn bifurcate(sc: &Scenario, sink: &mut Sink) -> Result<(), Failure> {
    let kappa = sc.kappa.expect("validated");
    let ctx = json!({ "command": "bifurcate", "kappa": kappa });
    let b = build_bifurcation_potential(kappa).map_err(|e| Failure::numerical(&e, ctx.clone()))?;
    let grid = make_grid(sc, &b.v)?;
    let check = verify_bifurcation_eigenvalue(&b, &grid).map_err(|e| Failure::numerical(&e, ctx.clone()))?;
    sink.write("potential.json", format!("{}\n", b.v.to_json_string()).as_bytes())?;
    sink.write("potential_kappa.json", format!("{}\n", b.v_kappa.to_json_string()).as_bytes())?;
    sink.write_with("eigenfunction.csv", |w| {
        writeln!(w, "x,u")?;
        for &x in grid.nodes() {
            writeln!(w, "{x:.17e},{:.17e}", b.u(x, 0))?;
        }
        Ok(())
    })?;
    let report = json!({
        "kappa": kappa,
        "zeta": cx(b.zeta().zeta()),
        "eigenvalue_z": cx(b.zeta().z()),
        "a": b.a,
        "sup_potential": b.sup_potential(400),
        "min_u_on_support": b.min_on_support(400),
        "eigen_residual": check.residual,
        "joint_continuity": check.joint_continuity,
        "tails_ok": check.tails_ok,
        "delta": cx(check.delta.value),
        "delta_ratio": check.delta.ratio,
        "delta_dependent": check.delta.dependent,
    });
    sink.write_json("bifurcation.json", &report)?;
    if check.residual > sc.tolerances.eigen_residual {
        return Err(Failure::Numerical {
            kind: "eigen_residual".into(),
            message: format!("eigen-residual {:e} above tolerance {:e}", check.residual, sc.tolerances.eigen_residual),
            context: ctx,
        });
    }
    Ok(())
}
