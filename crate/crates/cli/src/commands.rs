use std::path::Path;

use bethe_core::bethe_analysis::{stability_classify, Stability};
use bethe_core::exact_oracle;
use bethe_core::graph_core::Graph;
use bethe_core::graph_poly;
use bethe_core::lbp_engine::{run_lbp, LbpConfig, LbpRunReport, Messages, Schedule};
use bethe_core::models::DiscreteModel;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::report::{float, floats, Report};
use crate::{load, CliError, CliResult, InferArgs, LbpArgs, PolyArgs, ScheduleArg, Which};

/// States above this size skip the brute-force comparison in `infer`.
pub const INFER_EXACT_CAP: u128 = 1 << 20;

pub fn header(command: &str, input: &Path) -> Report {
    let mut r = Report::new();
    r.set("tool", "bethe")
        .set("version", env!("CARGO_PKG_VERSION"))
        .set("command", command)
        .set("input", input.display().to_string());
    r
}

pub fn lbp_config(a: &LbpArgs) -> CliResult<LbpConfig> {
    if !(0.0..1.0).contains(&a.damping) {
        return Err(CliError::Usage("--damping must lie in [0, 1)".into()));
    }
    if !(a.tol > 0.0) {
        return Err(CliError::Usage("--tol must be positive".into()));
    }
    if a.max_iter == 0 {
        return Err(CliError::Usage("--max-iter must be at least 1".into()));
    }
    let schedule = match a.schedule {
        ScheduleArg::Parallel => Schedule::Parallel,
        ScheduleArg::Sequential => Schedule::Sequential,
    };
    Ok(LbpConfig { schedule, damping: a.damping, tol: a.tol, max_iter: a.max_iter })
}

pub fn lbp_tolerances(cfg: &LbpConfig) -> Value {
    json!({
        "schedule": schedule_name(cfg.schedule),
        "damping": float(cfg.damping),
        "tol": float(cfg.tol),
        "max_iter": cfg.max_iter,
    })
}

fn schedule_name(s: Schedule) -> &'static str {
    match s {
        Schedule::Parallel => "parallel",
        Schedule::Sequential => "sequential",
    }
}

pub fn stability_name(s: Stability) -> &'static str {
    match s {
        Stability::Stable => "stable",
        Stability::DampedStable => "damped-stable",
        Stability::Unstable => "unstable",
        Stability::Marginal => "marginal",
    }
}

pub fn convergence(run: &LbpRunReport) -> Value {
    json!({
        "converged": run.converged,
        "iterations": run.iterations,
        "residual": float(run.residual),
    })
}

pub fn infer(a: &InferArgs) -> CliResult<Value> {
    let file = load(&a.file)?;
    let model = file.discrete().map_err(CliError::Usage)?;
    let cfg = lbp_config(&a.lbp)?;
    let init = match a.random_init {
        Some(scale) if !(scale >= 0.0 && scale.is_finite()) => {
            return Err(CliError::Usage("--random-init must be a finite non-negative scale".into()))
        }
        Some(scale) => Some(Messages::random(&model, scale, &mut ChaCha8Rng::seed_from_u64(a.seed))),
        None => None,
    };
    let run = run_lbp(&model, &cfg, init)?;

    let mut r = header("infer", &a.file);
    r.set("model", file.kind()).set("seed", a.seed);
    r.set("init", a.random_init.map_or(json!("uniform"), |s| json!({ "random_scale": float(s) })));
    r.set("tolerances", lbp_tolerances(&cfg));
    r.set("convergence", convergence(&run));
    r.set_f64("log_z_b", run.log_z_b);
    let names = file.variable_names();
    let beliefs: Vec<Value> =
        run.beliefs.vertex.iter().zip(&names).map(|(b, n)| json!({ "variable": n, "marginal": floats(b) })).collect();
    r.set("beliefs", beliefs);
    r.set("stability", stability_section(&model, &run));
    r.set("exact", exact_section(&model, &run)?);
    Ok(r.into_value())
}

fn stability_section(model: &DiscreteModel, run: &LbpRunReport) -> Value {
    if !run.converged {
        return json!({ "class": "not-computed", "reason": "LBP did not converge" });
    }
    match stability_classify(model, &run.messages, run.residual.max(1e-12)) {
        Ok(s) => json!({ "class": stability_name(s.class), "spectral_radius": float(s.spectral_radius) }),
        Err(e) => json!({ "class": "not-computed", "reason": e.to_string() }),
    }
}

fn exact_section(model: &DiscreteModel, run: &LbpRunReport) -> CliResult<Value> {
    let size = model.state_space_size();
    if size > INFER_EXACT_CAP {
        return Ok(json!({ "computed": false, "state_space": size.to_string(), "cap": INFER_EXACT_CAP.to_string() }));
    }
    let ex = exact_oracle::brute_force(model)?;
    let max_marginal_error = ex
        .vertex_marginals
        .iter()
        .zip(&run.beliefs.vertex)
        .flat_map(|(p, b)| p.iter().zip(b).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max);
    let z_rel = ((run.log_z_b - ex.log_z).exp() - 1.0).abs();
    Ok(json!({
        "computed": true,
        "log_z": float(ex.log_z),
        "z_relative_error": float(z_rel),
        "max_marginal_error": float(max_marginal_error),
        "tree": model.graph().is_tree(),
        "z_b_equals_z": run.converged && z_rel < 1e-9,
    }))
}

/// Integers, fractions `p/q` and decimals with optional exponent, parsed exactly.
pub fn parse_rational(s: &str) -> Result<BigRational, String> {
    let s = s.trim();
    let bad = || format!("`{s}` is not a rational number");
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(format!("`{s}` has a zero denominator"));
        }
        return Ok(BigRational::new(p, q));
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(k) => (&s[..k], s[k + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if int.is_empty() && frac.is_empty() || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let num: BigInt = format!("{int}{frac}").parse().map_err(|_| bad())?;
    let scale = exp - frac.len() as i32;
    let ten = BigInt::from(10);
    let mut r = BigRational::from_integer(num);
    if scale >= 0 {
        r *= BigRational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        r /= BigRational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Ok(if neg { -r } else { r })
}

pub fn rational_value(q: &BigRational) -> Value {
    json!({ "exact": q.to_string(), "value": float(q.to_f64().unwrap_or(f64::NAN)) })
}

pub fn graph_summary(g: &Graph) -> Value {
    json!({
        "vertices": g.num_vertices(),
        "edges": g.num_edges(),
        "components": g.num_components(),
        "nullity": g.nullity(),
    })
}

pub fn poly(a: &PolyArgs) -> CliResult<Value> {
    let file = load(&a.file)?;
    let g = file.graph().map_err(CliError::Usage)?;
    let point = a
        .eval
        .as_deref()
        .map(|s| s.split(',').map(parse_rational).collect::<Result<Vec<_>, _>>())
        .transpose()
        .map_err(CliError::Usage)?;

    let mut r = header("poly", &a.file);
    r.set(
        "which",
        match a.which {
            Which::Theta => "theta",
            Which::Omega => "omega",
        },
    );
    r.set("arithmetic", "exact");
    r.set("graph", graph_summary(&g));
    match a.which {
        Which::Theta => {
            let t = graph_poly::theta(&g)?;
            r.set("polynomial", t.to_text());
            let total_degree = t.terms().keys().map(|&(b, _)| b).max().unwrap_or(0);
            r.set("beta_degree", total_degree);
            if let Some(p) = point {
                let [beta, gamma] = p.as_slice() else {
                    return Err(CliError::Usage("θ needs --eval β,γ".into()));
                };
                r.set(
                    "evaluation",
                    json!({
                        "beta": beta.to_string(),
                        "gamma": gamma.to_string(),
                        "theta": rational_value(&graph_poly::theta_at(&t, beta, gamma)),
                    }),
                );
            }
        }
        Which::Omega => {
            let w = graph_poly::omega(&g)?;
            r.set("polynomial", w.to_text("β"));
            r.set("degree", w.degree().map_or(json!(null), |d| json!(d)));
            r.set("omega_at_one", w.eval_rational(&BigRational::one()).to_string());
            if let Some(p) = point {
                let [beta] = p.as_slice() else {
                    return Err(CliError::Usage("ω needs --eval β".into()));
                };
                r.set(
                    "evaluation",
                    json!({
                        "beta": beta.to_string(),
                        "omega": rational_value(&w.eval_rational(beta)),
                    }),
                );
            }
        }
    }
    Ok(r.into_value())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(p: i64, d: i64) -> BigRational {
        BigRational::new(p.into(), d.into())
    }

    #[test]
    fn parses_rationals_exactly() {
        assert_eq!(parse_rational("3").unwrap(), q(3, 1));
        assert_eq!(parse_rational("-3/6").unwrap(), q(-1, 2));
        assert_eq!(parse_rational("0.25").unwrap(), q(1, 4));
        assert_eq!(parse_rational("-.5").unwrap(), q(-1, 2));
        assert_eq!(parse_rational("1.5e-2").unwrap(), q(3, 200));
        assert_eq!(parse_rational("2E3").unwrap(), q(2000, 1));
        for bad in ["", "1/0", "x", "1.2.3", "--1", "."] {
            assert!(parse_rational(bad).is_err(), "{bad}");
        }
    }
}
