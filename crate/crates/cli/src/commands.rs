//! Subcommand bodies. Each returns a [`Document`] holding both renderings and
//! the exit status it warrants.

use bulkq_core::embedded::finite_tpm_stationary;
use bulkq_core::{
    compare, embedded_p, evaluate, limiting_pi, objective, optimize_v, run_sim, sweep,
    AdmissionPolicy, ComparisonReport, Error, ModelType, ObjectiveBreakdown, OptimizeOptions,
    SimResult, SweepOutcome,
};
use serde_json::{json, Value};

use crate::config::{Config, PolicyName};
use crate::error::CliError;
use crate::output::{num, Csv};

#[derive(Debug)]
pub struct Document {
    pub json: Value,
    pub csv: String,
    /// 0, or 1 when the analytic solution was flagged invalid.
    pub status: i32,
}

fn envelope(command: &str, config: &Config, result: Value) -> Value {
    json!({
        "command": command,
        "config": config,
        "result": result,
        "version": env!("CARGO_PKG_VERSION"),
    })
}

fn model_type(t: ModelType) -> &'static str {
    match t {
        ModelType::Type1 => "type1",
        ModelType::Type2 => "type2",
    }
}

fn policy_name(p: AdmissionPolicy) -> &'static str {
    match p {
        AdmissionPolicy::Clip => "clip",
        AdmissionPolicy::RejectIfNoFullRoom => "reject",
    }
}

fn breakdown_json(b: &ObjectiveBreakdown) -> Value {
    json!({
        "holding": b.holding,
        "reserve": b.reserve,
        "posting": b.posting,
        "total": b.total,
        "expected_pool": b.expected_pool,
        "valid": b.valid,
        "capability": b.capability,
    })
}

fn status_of(e: &Error) -> &'static str {
    match e {
        Error::NoRoot { .. } => "no_root",
        Error::Truncation { .. } => "truncation",
        _ => "error",
    }
}

fn max_abs(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub fn solve(config: &Config) -> Result<Document, CliError> {
    let params = config.system()?;
    let cost = config.cost()?;
    config.check_tables(params.w(), params.v())?;
    let eps = config.eps()?;
    let emb = embedded_p(&params, eps)?;
    let lim = limiting_pi(&params, &emb)?;
    let obj = objective(&params, &cost, &lim)?;
    let tpm_law = finite_tpm_stationary(&params)?;
    let tpm_gap = max_abs(&emb.p, &tpm_law);
    let echoed = config.with_defaults(false);

    let result = json!({
        "model_type": model_type(emb.model_type),
        "load": params.load(),
        "reserved": params.reserved(),
        "root": emb.root,
        "norm_constant": emb.norm_constant,
        "truncation_level": emb.truncation_level,
        "p": emb.p,
        "pi": lim.pi,
        "pi1": lim.pi1,
        "g": lim.g,
        "valid": lim.valid,
        "negative_entries": lim.negative_entries.iter().map(|(k, x)| json!({"k": k, "pi": x})).collect::<Vec<_>>(),
        "objective": breakdown_json(&obj),
        "diagnostics": { "tpm_stationary_gap": tpm_gap },
    });

    let mut csv = Csv::new(&echoed, "solve");
    csv.comment(&format!("model_type = {}", model_type(emb.model_type)));
    csv.comment(&format!("norm_constant = {}", num(emb.norm_constant)));
    if let Some(z) = emb.root {
        csv.comment(&format!("root = {}", num(z)));
    }
    csv.comment(&format!("valid = {}", lim.valid));
    csv.comment(&format!("tpm_stationary_gap = {}", num(tpm_gap)));
    csv.header(&["k", "p", "pi", "pi1"]);
    for k in 0..lim.pi.len() {
        csv.row(&[
            k.to_string(),
            num(emb.p[k]),
            num(lim.pi[k]),
            num(lim.pi1[k]),
        ]);
    }

    Ok(Document {
        json: envelope("solve", &echoed, result),
        csv: csv.finish()?,
        status: if lim.valid { 0 } else { 1 },
    })
}

pub fn optimize(config: &Config) -> Result<Document, CliError> {
    let w = config.w()?;
    let lambda = config.lambda()?;
    let posting = config.posting()?;
    let cost = config.cost()?;
    let v_max = config.search.v_max.unwrap_or(w);
    config.check_tables(w, 1)?;
    let opts = OptimizeOptions {
        eps: config.eps()?,
        enforce_capability: config.enforce_capability(),
    };
    let r = optimize_v(w, lambda, posting, &cost, v_max, opts)?;
    let mut echoed = config.with_defaults(false);
    echoed.search.v_max = Some(v_max);
    echoed.search.enforce_capability = Some(opts.enforce_capability);

    let curve: Vec<Value> = r
        .curve
        .iter()
        .map(|p| match &p.result {
            Ok(b) => {
                let mut o = breakdown_json(b);
                o["v"] = json!(p.v);
                o["status"] = json!(if p.eligible(opts.enforce_capability) {
                    "ok"
                } else if !b.valid {
                    "invalid"
                } else {
                    "capability"
                });
                o
            }
            Err(e) => json!({ "v": p.v, "status": status_of(e), "message": e.to_string() }),
        })
        .collect();
    let result = json!({
        "v0": r.v0,
        "phi_min": r.phi_min,
        "any_invalid": r.any_invalid,
        "curve": curve,
    });

    let mut csv = Csv::new(&echoed, "optimize");
    csv.comment(&format!("v0 = {}", r.v0));
    csv.comment(&format!("phi_min = {}", num(r.phi_min)));
    csv.header(&[
        "v",
        "status",
        "holding",
        "reserve",
        "posting",
        "total",
        "expected_pool",
        "valid",
        "capability",
    ]);
    for (p, j) in r.curve.iter().zip(&curve) {
        let status = j["status"].as_str().unwrap_or("error").to_string();
        match &p.result {
            Ok(b) => csv.row(&[
                p.v.to_string(),
                status,
                num(b.holding),
                num(b.reserve),
                num(b.posting),
                num(b.total),
                num(b.expected_pool),
                b.valid.to_string(),
                num(b.capability),
            ]),
            Err(_) => csv.row(&[
                p.v.to_string(),
                status,
                "".into(),
                "".into(),
                "".into(),
                "".into(),
                "".into(),
                "false".into(),
                "".into(),
            ]),
        }
    }

    Ok(Document {
        json: envelope("optimize", &echoed, result),
        csv: csv.finish()?,
        status: 0,
    })
}

pub fn sweep_cmd(config: &Config) -> Result<Document, CliError> {
    let lambda = config.lambda()?;
    let posting = config.posting()?;
    let cost = config.cost()?;
    let s = &config.search;
    let v_min = s.v_min.unwrap_or(1);
    let v_max = s
        .v_max
        .ok_or_else(|| CliError::config("missing required setting search.v_max (flag --vmax)"))?;
    let w_min = s.w_min.unwrap_or(v_min);
    let w_max = s
        .w_max
        .ok_or_else(|| CliError::config("missing required setting search.w_max (flag --wmax)"))?;
    if v_min > v_max || w_min > w_max {
        return Err(CliError::config(format!(
            "sweep ranges are empty: v {v_min}..={v_max}, w {w_min}..={w_max}"
        )));
    }
    config.check_tables(w_max, v_min)?;
    let opts = OptimizeOptions {
        eps: config.eps()?,
        enforce_capability: config.enforce_capability(),
    };
    let cells = sweep(lambda, posting, &cost, v_min..=v_max, w_min..=w_max, opts)?;
    let mut echoed = config.with_defaults(false);
    echoed.search.v_min = Some(v_min);
    echoed.search.w_min = Some(w_min);
    echoed.search.enforce_capability = Some(opts.enforce_capability);

    let mut csv = Csv::new(&echoed, "sweep");
    csv.header(&[
        "v",
        "w",
        "holding",
        "reserve",
        "posting",
        "total",
        "valid",
        "capability",
        "status",
    ]);
    let mut rows = Vec::with_capacity(cells.len());
    for c in &cells {
        let status = match &c.outcome {
            SweepOutcome::Infeasible => "infeasible",
            SweepOutcome::Failed(e) => status_of(e),
            SweepOutcome::Evaluated(b) if !b.valid => "invalid",
            SweepOutcome::Evaluated(_) => "ok",
            SweepOutcome::CapabilityRejected(_) => "capability",
        };
        let mut j = json!({ "v": c.v, "w": c.w, "status": status });
        match c.outcome.breakdown() {
            Some(b) => {
                for (k, x) in breakdown_json(b).as_object().expect("object").iter() {
                    j[k] = x.clone();
                }
                csv.row(&[
                    c.v.to_string(),
                    c.w.to_string(),
                    num(b.holding),
                    num(b.reserve),
                    num(b.posting),
                    num(b.total),
                    b.valid.to_string(),
                    num(b.capability),
                    status.into(),
                ]);
            }
            None => csv.row(&[
                c.v.to_string(),
                c.w.to_string(),
                "".into(),
                "".into(),
                "".into(),
                "".into(),
                "false".into(),
                "".into(),
                status.into(),
            ]),
        }
        rows.push(j);
    }

    Ok(Document {
        json: envelope("sweep", &echoed, json!({ "cells": rows })),
        csv: csv.finish()?,
        status: 0,
    })
}

fn sim_json(r: &SimResult) -> Value {
    json!({
        "policy": policy_name(r.policy),
        "seed": r.seed,
        "time_avg_dist": r.time_avg_dist,
        "embedded_dist": r.embedded_dist,
        "lost_customer_rate": r.lost_customer_rate,
        "customer_rate": r.customer_rate,
        "avg_cost_rate": r.avg_cost_rate,
        "holding_rate": r.holding_rate,
        "reserve_rate": r.reserve_rate,
        "posting_rate": r.posting_rate,
        "mean_pool": r.mean_pool(),
        "total_sim_time": r.total_sim_time,
        "postings_observed": r.postings_observed,
    })
}

fn echo_policy(c: &mut Config, policies: &[AdmissionPolicy]) {
    c.sim.policy = Some(match policies {
        [AdmissionPolicy::Clip] => PolicyName::Clip,
        [AdmissionPolicy::RejectIfNoFullRoom] => PolicyName::Reject,
        _ => PolicyName::Both,
    });
}

pub fn simulate(config: &Config) -> Result<Document, CliError> {
    let params = config.system()?;
    let cost = config.cost()?;
    config.check_tables(params.w(), params.v())?;
    let policies = config.policies(PolicyName::Clip);
    let runs: Vec<SimResult> = policies
        .iter()
        .map(|&p| Ok(run_sim(&params, &cost, &config.sim(p)?)?))
        .collect::<Result<_, CliError>>()?;
    let mut echoed = config.with_defaults(true);
    echo_policy(&mut echoed, &policies);

    let mut csv = Csv::new(&echoed, "simulate");
    for r in &runs {
        let p = policy_name(r.policy);
        csv.comment(&format!("{p}: avg_cost_rate = {}", num(r.avg_cost_rate)));
        csv.comment(&format!(
            "{p}: lost_customer_rate = {}",
            num(r.lost_customer_rate)
        ));
        csv.comment(&format!("{p}: total_sim_time = {}", num(r.total_sim_time)));
    }
    csv.header(&["policy", "k", "time_avg", "embedded"]);
    for r in &runs {
        for k in 0..r.time_avg_dist.len() {
            csv.row(&[
                policy_name(r.policy).into(),
                k.to_string(),
                num(r.time_avg_dist[k]),
                num(r.embedded_dist[k]),
            ]);
        }
    }

    Ok(Document {
        json: envelope(
            "simulate",
            &echoed,
            json!({ "runs": runs.iter().map(sim_json).collect::<Vec<_>>() }),
        ),
        csv: csv.finish()?,
        status: 0,
    })
}

fn report_json(r: &ComparisonReport) -> Value {
    json!({
        "policy": policy_name(r.policy),
        "tv_time_avg": r.tv_time_avg,
        "max_abs_delta": r.max_abs_delta,
        "tv_embedded": r.tv_embedded,
        "cost_rel_error": r.cost_rel_error,
        "analytic_valid": r.analytic_valid,
        "analytic": breakdown_json(&r.analytic),
        "simulated": {
            "holding": r.sim_holding,
            "reserve": r.sim_reserve,
            "posting": r.sim_posting,
            "total": r.sim_total,
        },
        "tolerances": { "tv": r.tolerances.tv, "cost_rel": r.tolerances.cost_rel },
        "passed": r.passed,
    })
}

pub fn compare_cmd(config: &Config) -> Result<Document, CliError> {
    let params = config.system()?;
    let cost = config.cost()?;
    config.check_tables(params.w(), params.v())?;
    let tol = config.tolerances()?;
    let eval = evaluate(&params, &cost, config.eps()?)?;
    let policies = config.policies(PolicyName::Both);
    let mut reports = Vec::new();
    let mut sims = Vec::new();
    for &p in &policies {
        let sim = run_sim(&params, &cost, &config.sim(p)?)?;
        reports.push(compare(&eval, &sim, tol)?);
        sims.push(sim);
    }
    let mut echoed = config.with_defaults(true);
    echoed.compare.tv = Some(tol.tv);
    echoed.compare.cost_rel = Some(tol.cost_rel);
    echo_policy(&mut echoed, &policies);
    let flipped = eval.embedded.flipped();

    let mut csv = Csv::new(&echoed, "compare");
    csv.comment(&format!("analytic_valid = {}", eval.limiting.valid));
    csv.comment(&format!("analytic_total = {}", num(eval.objective.total)));
    for r in &reports {
        let p = policy_name(r.policy);
        csv.comment(&format!(
            "{p}: tv_time_avg = {}, tv_embedded = {}, max_abs_delta = {}, cost_rel_error = {}, passed = {}",
            num(r.tv_time_avg),
            num(r.tv_embedded),
            num(r.max_abs_delta),
            num(r.cost_rel_error),
            r.passed
        ));
    }
    csv.header(&[
        "policy",
        "k",
        "analytic_pi1",
        "sim_time_avg",
        "delta",
        "analytic_embedded",
        "sim_embedded",
    ]);
    for s in &sims {
        for k in 0..s.time_avg_dist.len() {
            let a = eval.limiting.pi1[k];
            csv.row(&[
                policy_name(s.policy).into(),
                k.to_string(),
                num(a),
                num(s.time_avg_dist[k]),
                num(s.time_avg_dist[k] - a),
                num(flipped[k]),
                num(s.embedded_dist[k]),
            ]);
        }
    }

    let result = json!({
        "analytic": {
            "model_type": model_type(eval.embedded.model_type),
            "pi1": eval.limiting.pi1,
            "embedded_flipped": flipped,
            "valid": eval.limiting.valid,
            "objective": breakdown_json(&eval.objective),
        },
        "simulations": sims.iter().map(sim_json).collect::<Vec<_>>(),
        "reports": reports.iter().map(report_json).collect::<Vec<_>>(),
    });
    Ok(Document {
        json: envelope("compare", &echoed, result),
        csv: csv.finish()?,
        status: if eval.limiting.valid { 0 } else { 1 },
    })
}
