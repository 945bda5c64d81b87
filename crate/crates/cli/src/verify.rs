use bethe_core::bethe_analysis::{
    index_sum_audit, random_beliefs, random_interior_point, verify_bethe_zeta, verify_bethe_zeta_multinomial,
    AuditStatus, BetheZetaReport,
};
use bethe_core::graph_core::Graph;
use bethe_core::graph_poly::{self, IdentitySample};
use bethe_core::lbp_engine::run_lbp;
use bethe_core::loop_series::{
    determinant_average_mc, loop_series_marginal, loop_series_z, matching_bethe_solve, matching_loop_series,
    LoopSeriesReport,
};
use bethe_core::models::BinaryPairwiseModel;
use bethe_core::zeta::hashimoto_limit_check;
use bethe_core::Error;
use num_rational::BigRational;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::commands::{convergence, graph_summary, header, lbp_config, lbp_tolerances};
use crate::format::ModelFile;
use crate::report::{float, floats, Report};
use crate::{load, Check, CliError, CliResult, VerifyArgs};

pub const BETHE_ZETA_TOL: f64 = 1e-7;
pub const BETHE_ZETA_FRACTION: f64 = 0.99;
pub const LOOP_SERIES_TOL: f64 = 1e-6;
pub const MATCHING_TOL: f64 = 1e-8;
pub const MATCHING_SOLVER_TOL: f64 = 1e-10;
pub const MC_SIGMAS: f64 = 3.0;
const INTERIOR_MARGIN: f64 = 0.02;
const LISTED_TERMS: usize = 10;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    fn name(self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Inconclusive => "INCONCLUSIVE",
        }
    }

    fn of(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

fn check_name(c: Check) -> &'static str {
    match c {
        Check::BetheZeta => "bethe-zeta",
        Check::LoopSeries => "loop-series",
        Check::MarginalLs => "marginal-ls",
        Check::IndexSum => "index-sum",
        Check::MatchingLs => "matching-ls",
        Check::Hashimoto => "hashimoto",
        Check::PolyIdentities => "poly-identities",
    }
}

pub fn verify(a: &VerifyArgs) -> CliResult<Value> {
    let file = load(&a.file)?;
    if a.threshold.is_some_and(|t| !(t > 0.0)) {
        return Err(CliError::Usage("--threshold must be positive".into()));
    }
    let mut r = header("verify", &a.file);
    r.set("check", check_name(a.check)).set("model", file.kind()).set("seed", a.seed);
    let verdict = match a.check {
        Check::BetheZeta => bethe_zeta(a, &file, &mut r)?,
        Check::LoopSeries | Check::MarginalLs => loop_series(a, &file, &mut r)?,
        Check::IndexSum => index_sum(a, &file, &mut r)?,
        Check::MatchingLs => matching(a, &file, &mut r)?,
        Check::Hashimoto => hashimoto(&file, &mut r)?,
        Check::PolyIdentities => poly_identities(&file, &mut r)?,
    };
    r.set("verdict", verdict.name());
    Ok(r.into_value())
}

fn usage<T>(res: Result<T, String>) -> CliResult<T> {
    res.map_err(CliError::Usage)
}

fn bethe_zeta(a: &VerifyArgs, file: &ModelFile, r: &mut Report) -> CliResult<Verdict> {
    let tol = a.threshold.unwrap_or(BETHE_ZETA_TOL);
    let samples = a.samples.unwrap_or(200);
    if samples == 0 {
        return Err(CliError::Usage("--samples must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let reports: Vec<BetheZetaReport> = match file {
        ModelFile::Discrete { .. } => {
            let model = usage(file.discrete())?;
            (0..samples)
                .map(|_| verify_bethe_zeta_multinomial(&model, &random_beliefs(&model, &mut rng)))
                .collect::<Result<_, _>>()?
        }
        _ => {
            // The Hessian does not depend on the couplings, so a bare graph
            // is checked with J = h = 0.
            let model = match file {
                ModelFile::Ising { .. } => usage(file.ising())?,
                _ => {
                    let g = usage(file.graph())?;
                    let (n, m) = (g.num_vertices(), g.num_edges());
                    BinaryPairwiseModel::new(g, vec![0.0; m], vec![0.0; n])?
                }
            };
            let g = model.graph().clone();
            (0..samples)
                .map(|_| verify_bethe_zeta(&model, &random_interior_point(&g, INTERIOR_MARGIN, &mut rng)))
                .collect::<Result<_, _>>()?
        }
    };
    let passed = reports.iter().filter(|x| x.residual < tol).count();
    let flagged = reports.iter().filter(|x| !(x.residual < tol) && x.ill_conditioned).count();
    let failed = samples - passed - flagged;
    let max_residual = reports.iter().map(|x| x.residual).fold(0.0, f64::max);
    let max_passing = reports.iter().filter(|x| !x.ill_conditioned).map(|x| x.residual).fold(0.0, f64::max);
    let fraction = passed as f64 / samples as f64;
    r.set("tolerances", json!({ "residual": float(tol), "min_pass_fraction": float(BETHE_ZETA_FRACTION) }));
    r.set("samples", samples)
        .set("passed", passed)
        .set("ill_conditioned", flagged)
        .set("failed", failed)
        .set_f64("pass_fraction", fraction)
        .set_f64("max_residual", max_residual)
        .set_f64("max_residual_well_conditioned", max_passing);
    Ok(if failed > 0 {
        Verdict::Fail
    } else if fraction >= BETHE_ZETA_FRACTION {
        Verdict::Pass
    } else {
        Verdict::Inconclusive
    })
}

fn series_section(ls: &LoopSeriesReport) -> Value {
    let top: Vec<Value> = ls
        .terms
        .iter()
        .take(LISTED_TERMS)
        .map(|t| {
            json!({
                "edges": t.subgraph.mask_string(ls.num_edges),
                "size": t.subgraph.len(),
                "r": float(t.r),
            })
        })
        .collect();
    json!({
        "z_b": float(ls.z_b),
        "log_z_b": float(ls.log_z_b),
        "num_terms": ls.terms.len(),
        "sum": float(ls.total),
        "target": ls.exact.map_or(Value::Null, float),
        "residual": ls.discrepancy.map_or(Value::Null, float),
        "leading_terms": top,
    })
}

fn write_csv(a: &VerifyArgs, ls: &LoopSeriesReport, r: &mut Report) -> CliResult<()> {
    if let Some(path) = &a.csv {
        std::fs::write(path, ls.to_csv()).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        r.set("csv", path.display().to_string());
    }
    Ok(())
}

fn loop_series(a: &VerifyArgs, file: &ModelFile, r: &mut Report) -> CliResult<Verdict> {
    let tol = a.threshold.unwrap_or(LOOP_SERIES_TOL);
    let model = usage(file.discrete())?;
    let cfg = lbp_config(&a.lbp)?;
    let mut tolerances = lbp_tolerances(&cfg);
    tolerances["residual"] = float(tol);
    r.set("tolerances", tolerances);
    if a.check == Check::MarginalLs {
        if a.vertex >= model.graph().num_vertices() {
            return Err(CliError::Usage(format!("--vertex {} is out of range", a.vertex)));
        }
        r.set("vertex", file.variable_names()[a.vertex].clone());
    }
    let run = run_lbp(&model, &cfg, None)?;
    r.set("convergence", convergence(&run));
    if !run.converged {
        r.set("reason", "LBP did not converge; the series needs a fixed point");
        return Ok(Verdict::Inconclusive);
    }
    let ls = if a.check == Check::MarginalLs {
        loop_series_marginal(&model, &run, a.vertex)?
    } else {
        loop_series_z(&model, &run)?
    };
    r.set("series", series_section(&ls));
    write_csv(a, &ls, r)?;
    Ok(Verdict::of(ls.discrepancy.is_some_and(|d| d < tol)))
}

fn index_sum(a: &VerifyArgs, file: &ModelFile, r: &mut Report) -> CliResult<Verdict> {
    let model = usage(file.ising())?;
    if a.restarts == 0 {
        return Err(CliError::Usage("--restarts must be at least 1".into()));
    }
    let cat = index_sum_audit(&model, a.restarts, a.seed)?;
    r.set("tolerances", json!({ "dedup_radius": float(cat.dedup_radius) }));
    r.set("restarts", cat.restarts);
    r.set("fixed_points", cat.entries.len());
    let entries: Vec<Value> = cat
        .entries
        .iter()
        .map(|e| {
            json!({
                "m": floats(&e.point.m),
                "chi": floats(&e.point.chi),
                "index": e.index.map_or(Value::Null, |i| json!(i)),
                "hessian_det": float(e.hessian_det),
                "stability_radius": float(e.stability_radius),
                "discoveries": e.discoveries,
            })
        })
        .collect();
    r.set("catalog", entries);
    r.set("index_sum", cat.index_sum);
    let (verdict, status) = match cat.status {
        AuditStatus::Pass => (Verdict::Pass, "pass"),
        AuditStatus::MissedFixedPoint => (Verdict::Fail, "missed-fixed-point"),
        AuditStatus::Inconclusive => (Verdict::Inconclusive, "degenerate-fixed-point"),
    };
    r.set("status", status);
    Ok(verdict)
}

fn matching(a: &VerifyArgs, file: &ModelFile, r: &mut Report) -> CliResult<Verdict> {
    let tol = a.threshold.unwrap_or(MATCHING_TOL);
    let samples = a.samples.unwrap_or(100_000);
    let Some(w) = file.edge_weights() else {
        return Err(CliError::Usage("matching-ls needs a [graph] file".into()));
    };
    let g = usage(file.graph())?;
    r.set(
        "tolerances",
        json!({
            "solver_residual": float(MATCHING_SOLVER_TOL),
            "residual": float(tol),
            "monte_carlo_sigmas": float(MC_SIGMAS),
        }),
    );
    r.set("graph", graph_summary(&g));
    let sol = match matching_bethe_solve(&g, &w, MATCHING_SOLVER_TOL) {
        Ok(s) => s,
        Err(Error::NotConverged(msg)) => {
            r.set("reason", msg);
            return Ok(Verdict::Inconclusive);
        }
        Err(e) => return Err(e.into()),
    };
    r.set(
        "solver",
        json!({
            "residual": float(sol.residual),
            "iterations": sol.iterations,
            "edge_beliefs": floats(&sol.v),
            "z_b": float(sol.z_b),
        }),
    );
    let rep = matching_loop_series(&g, &w, &sol)?;
    let target = rep.series.total;
    let rel = |x: f64| (x - target).abs() / target.abs();
    let series_residual = rep.series.discrepancy.unwrap_or(f64::INFINITY);
    r.set("z_enumerated", float(rep.z_exact));
    r.set("series", series_section(&rep.series));
    r.set("ratio_lemma", json!({ "value": float(rep.ratio_lemma), "residual": float(rel(rep.ratio_lemma)) }));
    r.set(
        "determinant_average",
        json!({
            "exact": float(rep.determinant_average),
            "residual": float(rel(rep.determinant_average)),
        }),
    );
    let mc = determinant_average_mc(&g, &sol.v, samples, a.seed)?;
    let sigmas = (mc.mean - target).abs() / mc.std_error;
    r.set(
        "monte_carlo",
        json!({
            "samples": mc.samples,
            "mean": float(mc.mean),
            "std_error": float(mc.std_error),
            "sigmas": float(sigmas),
        }),
    );
    write_csv(a, &rep.series, r)?;
    let ok = sol.residual < MATCHING_SOLVER_TOL
        && series_residual < tol
        && rel(rep.ratio_lemma) < tol
        && rel(rep.determinant_average) < tol
        && (sigmas <= MC_SIGMAS || mc.std_error == 0.0 && sigmas.is_nan());
    Ok(Verdict::of(ok))
}

fn hashimoto(file: &ModelFile, r: &mut Report) -> CliResult<Verdict> {
    let g = usage(file.graph())?;
    let h = hashimoto_limit_check(&g)?;
    r.set("arithmetic", "exact");
    r.set("graph", graph_summary(&g));
    r.set("zeta_inverse", h.zeta_inverse.to_text("u"));
    r.set("spanning_trees", h.spanning_trees.to_string());
    r.set("lhs", h.lhs.to_string()).set("rhs", h.rhs.to_string()).set("residual", h.residual.to_string());
    Ok(Verdict::of(h.residual == 0.into()))
}

fn rat(p: i64, q: i64) -> BigRational {
    BigRational::new(p.into(), q.into())
}

/// One identity outcome: `Ok(holds)`, or `Err(reason)` when the graph falls outside
/// its hypotheses.
type Outcome = (&'static str, Result<bool, String>);

fn samples_hold(s: Vec<IdentitySample>) -> bool {
    graph_poly::all_hold(&s)
}

/// Errors that mean "not applicable to this graph" rather than failure.
fn applicable<T>(res: bethe_core::Result<T>) -> CliResult<Result<T, String>> {
    match res {
        Ok(v) => Ok(Ok(v)),
        Err(e @ (Error::CapExceeded { .. } | Error::InvalidGraph(_) | Error::Disconnected | Error::Nullity { .. })) => {
            Ok(Err(e.to_string()))
        }
        Err(e) => Err(e.into()),
    }
}

fn poly_identities(file: &ModelFile, r: &mut Report) -> CliResult<Verdict> {
    let g: Graph = usage(file.graph())?;
    let betas = [rat(1, 2), rat(-1, 3), rat(2, 1), rat(3, 5), rat(-7, 4)];
    let us = [rat(1, 2), rat(1, 3), rat(-2, 5), rat(3, 1), rat(5, 7)];
    let omega = graph_poly::omega(&g)?;
    let theta = graph_poly::theta(&g)?;
    let mut out: Vec<Outcome> = Vec::new();
    out.push((
        "theta_deletion_contraction_vs_enumeration",
        applicable(graph_poly::theta_enumerate(&g))?.map(|t| t == theta),
    ));
    out.push((
        "omega_deletion_contraction_vs_theta",
        applicable(graph_poly::omega_from_theta(&g))?.map(|w| w == omega),
    ));
    out.push((
        "omega_deletion_contraction_vs_subgraph_sum",
        applicable(graph_poly::omega_subgraph_sum(&g))?.map(|w| w == omega),
    ));
    out.push(("theta_gamma0_tutte", applicable(graph_poly::theta_gamma0_tutte_check(&g, &betas))?.map(samples_hold)));
    out.push(("omega_monomer_dimer", applicable(graph_poly::omega_monomer_dimer_check(&g, &betas))?.map(samples_hold)));
    out.push((
        "omega_determinant_sum",
        applicable(graph_poly::omega_determinant_sum_check(&g, &us))?.map(samples_hold),
    ));
    for (name, m) in [("omega_subdivision_m2", 2), ("omega_subdivision_m3", 3)] {
        out.push((name, applicable(graph_poly::omega_subdivision_check(&g, m))?));
    }
    out.push((
        "sub_coregraph_count_bounds",
        applicable(graph_poly::count_sub_coregraphs_via_theta(&g))?
            .map(|c| c.within_bounds() && c.tightness_consistent()),
    ));
    out.push((
        "omega_at_one_census",
        applicable(graph_poly::omega_at_one_counting(&g))?.map(|o| o.value == o.census.into()),
    ));
    out.push(("omega_root_annulus", applicable(graph_poly::omega_root_annulus(&g, 1e-8))?.map(|a| a.contained)));
    out.push(("regular_matching_identity", applicable(graph_poly::omega_matching_check(&g, &us))?.map(samples_hold)));
    out.push(("regular_coefficient_symmetry", applicable(graph_poly::omega_coefficient_symmetry(&g))?));

    r.set("arithmetic", "exact");
    r.set("graph", graph_summary(&g));
    r.set("omega", omega.to_text("β"));
    let mut identities = Report::new();
    let (mut ran, mut all) = (0, true);
    for (name, res) in &out {
        match res {
            Ok(ok) => {
                ran += 1;
                all &= ok;
                identities.set(name, if *ok { "PASS" } else { "FAIL" });
            }
            Err(reason) => {
                identities.set(name, format!("skipped ({reason})"));
            }
        }
    }
    r.set("identities", identities);
    r.set("identities_run", ran);
    Ok(if !all {
        Verdict::Fail
    } else if ran == 0 {
        Verdict::Inconclusive
    } else {
        Verdict::Pass
    })
}
