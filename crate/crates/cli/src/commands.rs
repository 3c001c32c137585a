use affine_psd::mc_compare::{self, CompareConfig};
use affine_psd::params::{canonicalize as canon, validate_admissible};
use affine_psd::riccati::{solve_riccati_on_grid, wishart_closed_form, SolverOptions};
use affine_psd::simulate::{simulate_paths, viability_audit, JumpSource, PathEnsemble, Scheme, SimConfig};
use affine_psd::{io, SymMat};
use serde_json::{json, Value};

use crate::error::{CliError, CliResult};
use crate::inputs::{read_params, read_symmat, read_symmat_list};
use crate::manifest::{write_csv, write_json, ManifestBuilder};
use crate::{
    AuditArgs, CanonicalizeArgs, CompareArgs, RiccatiArgs, SchemeArg, SimArgs, SimulateArgs, SolverArgs,
    TransformArgs, ValidateArgs,
};

fn solver_options(a: &SolverArgs) -> SolverOptions {
    SolverOptions {
        rtol: a.rtol,
        atol: a.atol,
        max_step: a.max_step,
    }
}

fn solver_json(a: &SolverArgs) -> Value {
    json!({"rtol": a.rtol, "atol": a.atol, "max_step": a.max_step})
}

fn scheme(a: &SimArgs) -> Scheme {
    match a.scheme {
        SchemeArg::EulerProject => Scheme::EulerProject,
        SchemeArg::EulerRegularized => Scheme::EulerRegularized {
            eps: a.eps,
            n_cut: a.n_cut,
        },
    }
}

fn scheme_json(s: Scheme) -> Value {
    match s {
        Scheme::EulerProject => json!({"name": "euler-project"}),
        Scheme::EulerRegularized { eps, n_cut } => json!({"name": "euler-regularized", "eps": eps, "n": n_cut}),
    }
}

fn sim_config(a: &SimArgs, t_end: f64, grid: Vec<f64>) -> SimConfig {
    SimConfig::new(a.dt, t_end, a.paths, a.seed)
        .with_grid(grid)
        .with_scheme(scheme(a))
        .with_workers(a.workers)
}

fn sim_json(cfg: &SimConfig, x0: &SymMat) -> Value {
    json!({
        "x0": x0,
        "dt": cfg.dt,
        "t_end": cfg.t_end,
        "n_paths": cfg.n_paths,
        "seed": cfg.seed,
        "scheme": scheme_json(cfg.scheme),
        "record_grid": cfg.record_grid,
        "workers": cfg.workers,
    })
}

pub fn validate(a: &ValidateArgs) -> CliResult<()> {
    let mut mb = ManifestBuilder::new("validate");
    let p = read_params(&a.params, &mut mb)?;
    mb.seed(a.seed);
    let report = validate_admissible(&p, a.pairs, a.seed)?;
    println!("{report}");
    if let Some(out) = &a.out {
        let checks: Vec<Value> = report
            .checks
            .iter()
            .map(|c| {
                json!({
                    "condition": c.condition.label(),
                    "description": c.condition.description(),
                    "passed": c.passed,
                    "worst_slack": c.worst_slack,
                    "note": c.note,
                })
            })
            .collect();
        let body = json!({"passed": report.passed(), "pairs_checked": report.pairs_checked, "checks": checks});
        write_json(out, body, &mb.finish(json!({"pairs": a.pairs, "seed": a.seed})))?;
    }
    if report.passed() {
        Ok(())
    } else {
        let names: Vec<String> = report
            .failures()
            .map(|c| format!("{} ({})", c.condition.label(), c.condition.description()))
            .collect();
        Err(CliError::Input(format!("parameter set is not admissible: {}", names.join("; "))))
    }
}

pub fn riccati(a: &RiccatiArgs) -> CliResult<()> {
    let mut mb = ManifestBuilder::new("riccati");
    let p = read_params(&a.params, &mut mb)?;
    let u = read_symmat(&a.u, "u", Some(p.dim), &mut mb)?;
    if a.grid == 0 || !(a.t > 0.0) {
        return Err(CliError::Usage("--grid must be positive and --t must be positive".into()));
    }
    let grid: Vec<f64> = (1..=a.grid).map(|k| a.t * k as f64 / a.grid as f64).collect();
    let sol = solve_riccati_on_grid(&p, &u, &grid, solver_options(&a.solver))?;
    let mut header = vec!["t".to_string(), "phi".to_string()];
    for i in 0..p.dim {
        for j in i..p.dim {
            header.push(format!("psi_{}{}", i + 1, j + 1));
        }
    }
    header.push("lambda_min_psi".into());
    let rows: Vec<Vec<String>> = sol
        .times
        .iter()
        .zip(&sol.phi)
        .zip(&sol.psi)
        .map(|((t, phi), psi)| {
            let mut r = vec![t.to_string(), phi.to_string()];
            r.extend(psi.upper().iter().map(|v| v.to_string()));
            r.push(psi.min_eigenvalue().to_string());
            r
        })
        .collect();
    let manifest = mb.finish(json!({
        "u": u, "t": a.t, "grid": a.grid, "solver": solver_json(&a.solver),
        "diagnostics": {
            "accepted": sol.diagnostics.accepted,
            "rejected": sol.diagnostics.rejected,
            "min_eigenvalue": sol.diagnostics.min_eigenvalue,
            "repairs": sol.diagnostics.repairs,
            "boundary_sign_changes": sol.diagnostics.boundary_sign_changes,
        }
    }));
    write_csv(a.out.as_deref(), &header, &rows, &manifest)
}

fn parse_closed_form(s: &str) -> CliResult<f64> {
    let delta = s
        .strip_prefix("wishart:")
        .ok_or_else(|| CliError::Usage(format!("--closed-form expects wishart:DELTA, got {s:?}")))?;
    delta
        .parse::<f64>()
        .ok()
        .filter(|d| d.is_finite())
        .ok_or_else(|| CliError::Usage(format!("invalid delta {delta:?}")))
}

pub fn transform(a: &TransformArgs) -> CliResult<()> {
    let mut mb = ManifestBuilder::new("transform");
    if !(a.t >= 0.0) {
        return Err(CliError::Usage("--t must be nonnegative".into()));
    }
    let value = match (&a.closed_form, &a.params) {
        (Some(cf), _) => {
            let delta = parse_closed_form(cf)?;
            let x = read_symmat(&a.x, "x", None, &mut mb)?;
            let u = read_symmat(&a.u, "u", Some(x.dim()), &mut mb)?;
            if delta < x.dim() as f64 - 1.0 {
                return Err(CliError::Input(format!("delta must be at least d - 1 = {}", x.dim() - 1)));
            }
            for (m, w) in [(&x, "x"), (&u, "u")] {
                if !affine_psd::symcone::is_psd(m, affine_psd::symcone::PSD_TOL) {
                    return Err(CliError::Input(format!("--{w} is not positive semidefinite")));
                }
            }
            wishart_closed_form(delta, &x, &u, a.t).laplace
        }
        (None, Some(path)) => {
            let p = read_params(path, &mut mb)?;
            let x = read_symmat(&a.x, "x", Some(p.dim), &mut mb)?;
            let u = read_symmat(&a.u, "u", Some(p.dim), &mut mb)?;
            let q = affine_psd::laplace::TransformQuery {
                params: p,
                x0: x,
                u,
                t: a.t,
            };
            affine_psd::laplace::laplace_transform(&q, solver_options(&a.solver))?
        }
        (None, None) => return Err(CliError::Usage("a parameter file or --closed-form is required".into())),
    };
    println!("{value}");
    Ok(())
}

fn summary_json(ens: &PathEnsemble, u_list: &[SymMat]) -> Value {
    let mean: Vec<Value> = ens
        .grid
        .iter()
        .enumerate()
        .map(|(k, t)| {
            let (m, se) = ens.mean_state(k);
            json!({"t": t, "mean": m, "stderr": se})
        })
        .collect();
    let mut laplace = Vec::new();
    for u in u_list {
        for (k, t) in ens.grid.iter().enumerate() {
            let e = ens.laplace_estimate(k, u);
            laplace.push(json!({"t": t, "u": u, "estimate": e.mean, "stderr": e.stderr, "n": e.n}));
        }
    }
    let mut jumps = Vec::new();
    for (source, n, name) in [
        (JumpSource::Constant, ens.n_constant_atoms, "m"),
        (JumpSource::StateDependent, ens.n_state_atoms, "mu"),
    ] {
        for atom in 0..n {
            let e = ens.compensated_count(source, atom);
            jumps.push(json!({"source": name, "atom": atom, "count_minus_compensator": e.mean, "stderr": e.stderr}));
        }
    }
    let aborted: Vec<Value> = ens
        .aborted
        .iter()
        .enumerate()
        .filter_map(|(i, a)| a.as_ref().map(|r| json!({"path": i, "reason": r})))
        .collect();
    json!({
        "grid": ens.grid,
        "n_paths": ens.n_paths,
        "aborted": aborted,
        "mean_projection_mass": ens.mean_projection_mass(),
        "mean_state": mean,
        "laplace": laplace,
        "jump_compensators": jumps,
    })
}

pub fn simulate(a: &SimulateArgs) -> CliResult<()> {
    let mut mb = ManifestBuilder::new("simulate");
    let p = read_params(&a.params, &mut mb)?;
    let x0 = read_symmat(&a.sim.x0, "x0", Some(p.dim), &mut mb)?;
    let u_list = match &a.u_list {
        Some(s) => read_symmat_list(s, "u-list", Some(p.dim), &mut mb)?,
        None => Vec::new(),
    };
    let grid = if a.record.is_empty() { vec![a.t] } else { a.record.clone() };
    let cfg = sim_config(&a.sim, a.t, grid);
    mb.seed(cfg.seed);
    let ens = simulate_paths(&p, &x0, &cfg)?;
    let mut config = sim_json(&cfg, &x0);
    config["u_list"] = json!(u_list);
    let manifest = mb.finish(config);
    if a.out.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        let mut header = vec!["path".to_string(), "t".to_string(), "survival".to_string()];
        for i in 0..p.dim {
            for j in i..p.dim {
                header.push(format!("x_{}{}", i + 1, j + 1));
            }
        }
        let mut rows = Vec::with_capacity(ens.n_paths * ens.grid.len());
        for path in 0..ens.n_paths {
            for (k, t) in ens.grid.iter().enumerate() {
                let mut r = vec![path.to_string(), t.to_string(), ens.survival(path, k).to_string()];
                r.extend(ens.state_packed(path, k).iter().map(|v| v.to_string()));
                rows.push(r);
            }
        }
        write_csv(Some(&a.out), &header, &rows, &manifest)
    } else {
        write_json(&a.out, summary_json(&ens, &u_list), &manifest)
    }
}

pub fn compare(a: &CompareArgs) -> CliResult<()> {
    let mut mb = ManifestBuilder::new("compare");
    let p = read_params(&a.params, &mut mb)?;
    let x0 = read_symmat(&a.sim.x0, "x0", Some(p.dim), &mut mb)?;
    let u_list = read_symmat_list(&a.u_list, "u-list", Some(p.dim), &mut mb)?;
    let t_end = a.t_list.iter().copied().fold(f64::NAN, f64::max);
    let mut cfg = CompareConfig::new(sim_config(&a.sim, t_end, a.t_list.clone()));
    cfg.bias_budget = a.bias_budget;
    cfg.solver = solver_options(&a.solver);
    mb.seed(cfg.sim.seed);
    let mut report = mc_compare::compare(&p, &x0, &u_list, &a.t_list, &cfg)?;
    if !a.convergence.is_empty() {
        let seeds: Vec<u64> = (0..a.convergence_seeds).map(|k| a.sim.seed.wrapping_add(k)).collect();
        report.convergence = mc_compare::convergence_table(&p, &x0, &u_list, &a.t_list, &cfg, &a.convergence, &seeds)?;
    }
    for e in &report.entries {
        println!(
            "{} t={} mc={:.6} se={:.2e} riccati={:.6}{} z={:+.2}",
            if e.pass { "PASS" } else { "FAIL" },
            e.t,
            e.mc_estimate,
            e.mc_stderr,
            e.riccati_value,
            e.closed_form_value.map(|v| format!(" closed={v:.6}")).unwrap_or_default(),
            e.z_score
        );
    }
    for r in &report.convergence {
        println!(
            "dt={:e} budget={:.1e} median|err|={:.2e} max_se={:.2e} projection={:.2e} {}",
            r.dt,
            r.bias_budget,
            r.median_abs_error,
            r.max_stderr,
            r.mean_projection_mass,
            if r.all_pass { "pass" } else { "FAIL" }
        );
    }
    let mut config = sim_json(&cfg.sim, &x0);
    config["u_list"] = json!(u_list);
    config["t_list"] = json!(a.t_list);
    config["bias_budget"] = json!(a.bias_budget);
    config["convergence_dts"] = json!(a.convergence);
    config["solver"] = solver_json(&a.solver);
    let passed = report.passed();
    let body = json!({"pass": passed, "report": report});
    write_json(&a.out, body, &mb.finish(config))?;
    if passed {
        Ok(())
    } else {
        Err(CliError::Failed("comparison failed".into()))
    }
}

pub fn canonicalize(a: &CanonicalizeArgs) -> CliResult<()> {
    let mut mb = ManifestBuilder::new("canonicalize");
    let p = read_params(&a.params, &mut mb)?;
    let (q, g) = canon(&p, a.rank_tol)?;
    let mut body = io::params_to_value(&q);
    let rows: Vec<Vec<f64>> = g.row_iter().map(|r| r.iter().copied().collect()).collect();
    body["transform_g"] = json!(rows);
    println!("alpha = {:?}", q.alpha.diag());
    println!("b     = {:?}", q.b.diag());
    write_json(&a.out, body, &mb.finish(json!({"rank_tol": a.rank_tol})))
}

pub fn audit(a: &AuditArgs) -> CliResult<()> {
    let mut mb = ManifestBuilder::new("audit");
    let p = read_params(&a.params, &mut mb)?;
    mb.seed(a.seed);
    let r = viability_audit(&p, a.eps, a.n_cut, a.points, a.seed)?;
    let line = |name: &str, c: &affine_psd::simulate::AuditCheck| {
        println!("{:<5} {:<20} worst={:+.3e}", if c.passed { "PASS" } else { "FAIL" }, name, c.worst);
    };
    line("jump-support", &r.jump_support);
    line("volatility-tangent", &r.volatility_tangent);
    line("drift-inward", &r.drift_inward);
    if let Some(out) = &a.out {
        let check = |c: &affine_psd::simulate::AuditCheck| json!({"passed": c.passed, "worst": c.worst});
        let body = json!({
            "passed": r.passed(),
            "points": r.points,
            "jump_support": check(&r.jump_support),
            "volatility_tangent": check(&r.volatility_tangent),
            "drift_inward": check(&r.drift_inward),
            "worst_drift_point": r.worst_drift_point,
        });
        write_json(
            out,
            body,
            &mb.finish(json!({"eps": a.eps, "n": a.n_cut, "points": a.points, "seed": a.seed})),
        )?;
    }
    if r.passed() {
        Ok(())
    } else {
        Err(CliError::Failed("viability audit found violations".into()))
    }
}

