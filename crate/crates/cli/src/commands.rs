//! Subcommand bodies: resolve parameters, run the library, shape the report.

use std::fmt::Write as _;

use serde_json::{json, Value};

use gowers_lab::arithmetic::{
    green_tao_measure, make_wtrick, mobius, modified_von_mangoldt_progression, next_prime, sieve_primes,
    GreenTaoMeasure, MeasureParams, DEFAULT_DELTA1, DEFAULT_DELTA2, DEFAULT_OMEGA_CUTOFF,
};
use gowers_lab::corners::{
    corner_face_functions, corner_pullback_check, density_scan, enumerate_corners, weighted_corner_count,
    write_reports_csv, wtrick_reduce, PrimePointSet, SubsetRule, REDUCTION_DELTA1, REDUCTION_DELTA2,
    REDUCTION_SLACK,
};
use gowers_lab::gowers::BoxNormContext;
use gowers_lab::grid::IndexSet;
use gowers_lab::rng;
use gowers_lab::verification::{
    check_dual_product, check_gcs_trials, check_linear_forms, check_norm_axioms, check_von_neumann,
    nonincreasing_within, spread_ratio, ExperimentReport, FormsFamily, SampleMode,
};
use gowers_lab::weights::{corner_weight_system, Measure, WeightSystem};

use crate::config::{ConfigError, ConfigResult, Resolver};
use crate::{Outcome, Params, RunError};

pub type Runner = fn(&mut Resolver, &Params, bool) -> Result<Outcome, RunError>;

fn to_json(v: impl serde::Serialize) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

fn deltas(res: &mut Resolver, p: &Params, d1: f64, d2: f64) -> ConfigResult<(f64, f64)> {
    let delta1 = res.get("delta1", p.delta1.as_ref(), d1)?;
    let delta2 = res.get("delta2", p.delta2.as_ref(), d2)?;
    if !(delta1 > 0.0 && delta1 < delta2 && delta2 <= 1.0) {
        return Err(ConfigError::new(
            "delta1, delta2",
            format!("delta window must satisfy 0 < delta1 < delta2 <= 1, got ({delta1}, {delta2})"),
        ));
    }
    Ok((delta1, delta2))
}

fn dimension(res: &mut Resolver, p: &Params, min: usize, max: usize) -> ConfigResult<usize> {
    let d = res.get("d", p.d.as_ref(), 2usize)?;
    if !(min..=max).contains(&d) {
        return Err(ConfigError::new("d", format!("must lie in {min}..={max}, got {d}")));
    }
    Ok(d)
}

/// Measure parameters shared by every Green–Tao measure built in one run.
struct MeasureSpec {
    d: usize,
    omega: u64,
    b: u64,
    r: Option<f64>,
    window: (f64, f64),
}

impl MeasureSpec {
    fn resolve(res: &mut Resolver, p: &Params, d: usize, default_omega: u64) -> ConfigResult<Self> {
        let omega = res.get("omega_cutoff", p.omega_cutoff.as_ref(), default_omega)?;
        let default_b = if omega >= 2 { 1 } else { 0 };
        let b = res.get("b", p.b.as_ref(), default_b)?;
        let r = res.get_opt::<f64>("r", p.r.as_ref())?;
        if let Some(r) = r {
            if !(r > 1.0 && r.is_finite()) {
                return Err(ConfigError::new("r", format!("truncation level must be a finite real > 1, got {r}")));
            }
        }
        let window = deltas(res, p, DEFAULT_DELTA1, DEFAULT_DELTA2)?;
        Ok(MeasureSpec { d, omega, b, r, window })
    }

    /// The measure on `Z_{N'}`, `N'` the least prime `≥ n`.
    fn build(&self, n: u64) -> Result<GreenTaoMeasure, RunError> {
        let modulus = next_prime(n);
        let params = MeasureParams::new(modulus, self.d, self.r, self.window.0, self.window.1)?;
        let wt = make_wtrick(self.omega, &[self.b])?;
        Ok(green_tao_measure(&params, &wt, 0)?)
    }
}

pub fn sieve(res: &mut Resolver, p: &Params, _: bool) -> Result<Outcome, RunError> {
    let limit = res.get("limit", p.limit.as_ref(), 1_000_000u64)?;
    if limit < 2 {
        return Err(ConfigError::new("limit", "must be at least 2").into());
    }
    if limit > 1_000_000_000 {
        return Err(ConfigError::new("limit", "at most 10^9").into());
    }
    let table = sieve_primes(limit)?;
    let mu = mobius(limit)?;
    let mertens: i64 = mu.iter().map(|&m| m as i64).sum();
    let mut csv = String::from("n,is_prime,mu\n");
    for n in 1..=limit {
        let _ = writeln!(csv, "{n},{},{}", u8::from(table.is_prime(n)), mu[n as usize]);
    }
    let report = json!({
        "limit": limit,
        "prime_count": table.primes().len(),
        "largest_prime": table.primes().last(),
        "mertens": mertens,
    });
    Ok(Outcome { passed: true, report, csv: Some(csv) })
}

pub fn measure(res: &mut Resolver, p: &Params, _: bool) -> Result<Outcome, RunError> {
    let n = res.get("n", p.n.as_ref(), 10_007u64)?;
    let d = dimension(res, p, 1, 6)?;
    let spec = MeasureSpec::resolve(res, p, d, DEFAULT_OMEGA_CUTOFF)?;
    let nu = spec.build(n)?;
    let lambda_bar = modified_von_mangoldt_progression(nu.n(), &nu.wtrick, 0)?;
    let violations = nu.minorization_violations()?;
    let support = nu.values.iter().filter(|&&v| v > 0.0).count();
    let max = nu.values.iter().copied().fold(0.0, f64::max);
    let mut csv = String::from("n,nu,lambda_bar\n");
    for (k, (v, l)) in nu.values.iter().zip(&lambda_bar).enumerate() {
        let _ = writeln!(csv, "{k},{v},{l}");
    }
    let report = json!({
        "N_requested": n,
        "N": nu.params.n,
        "R": nu.params.r,
        "W": nu.wtrick.w,
        "b": nu.wtrick.b,
        "mean": nu.mean(),
        "max": max,
        "support": support,
        "minorization_constant": nu.params.minorization_constant(),
        "minorization_violations": violations.len(),
        "first_violations": violations.iter().take(20).collect::<Vec<_>>(),
    });
    Ok(Outcome { passed: violations.is_empty(), report, csv: Some(csv) })
}

fn parse_forms(text: &str) -> ConfigResult<FormsFamily> {
    let rows = text
        .split(';')
        .map(|row| {
            row.split(',')
                .map(|t| t.trim().parse::<i64>().map_err(|e| ConfigError::new("forms", format!("{t:?}: {e}"))))
                .collect::<ConfigResult<Vec<i64>>>()
        })
        .collect::<ConfigResult<Vec<_>>>()?;
    let t = rows.first().map_or(0, |r| r.len().saturating_sub(1));
    FormsFamily::from_rows(t, &rows).map_err(|e| ConfigError::new("forms", e.to_string()))
}

pub fn verify_lf(res: &mut Resolver, p: &Params, _: bool) -> Result<Outcome, RunError> {
    let n = res.get("n", p.n.as_ref(), 10_007u64)?;
    let d = dimension(res, p, 1, 6)?;
    let spec = MeasureSpec::resolve(res, p, d, DEFAULT_OMEGA_CUTOFF)?;
    let forms = res.get_str("forms", p.forms.as_ref(), "1,0,0;0,1,0;1,1,0");
    let family = parse_forms(&forms)?;
    let mode = match res.get_str("mode", p.mode.as_ref(), "sampled").as_str() {
        "exact" => SampleMode::Exact,
        "sampled" => SampleMode::Sampled {
            count: res.get("samples", p.samples.as_ref(), 10_000_000u64)?,
            seed: res.get("seed", p.seed.as_ref(), 0u64)?,
        },
        other => return Err(ConfigError::new("mode", format!("expected exact or sampled, got {other:?}")).into()),
    };
    let nu = spec.build(n)?;
    let report = check_linear_forms(&nu, &family, mode).map_err(|e| ConfigError::new("mode", e.to_string()))?;
    Ok(Outcome { passed: report.passed(), report: to_json(&report), csv: None })
}

/// Weight system for `gcs` / `norm`: the corner system (trivial for `d = 1`).
fn face_context(res: &mut Resolver, p: &Params) -> Result<(BoxNormContext, Value), RunError> {
    let d = dimension(res, p, 1, 4)?;
    let n = res.get("n", p.n.as_ref(), 64usize)?;
    if n < 2 {
        return Err(ConfigError::new("n", "must be at least 2").into());
    }
    let seed = res.get("seed", p.seed.as_ref(), 0u64)?;
    let kind = res.get_str("measure", p.measure.as_ref(), "random");
    let measure = match kind.as_str() {
        "random" => {
            let mut r = rng::stream(seed, 1 << 32);
            Measure::from_values(rng::uniform_vec(&mut r, n, 0.0, 2.0))?
        }
        "unit" => Measure::unit(n)?,
        "green-tao" => {
            let spec = MeasureSpec::resolve(res, p, d, 1)?;
            Measure::from_green_tao(&spec.build(n as u64)?)
        }
        other => {
            return Err(ConfigError::new("measure", format!("expected random, unit or green-tao, got {other:?}")).into())
        }
    };
    let ws = if d >= 2 {
        corner_weight_system(d, measure)?
    } else {
        WeightSystem::new(d, measure, Default::default())?
    };
    let face = res.get("face", p.face.as_ref(), 1usize)?;
    if !(1..=d + 1).contains(&face) {
        return Err(ConfigError::new("face", format!("omitted vertex must lie in 1..={}", d + 1)).into());
    }
    let describe = ws.measure().describe();
    Ok((BoxNormContext::new(&ws, IndexSet::without(d + 1, face))?, describe))
}

fn float_array(report: &ExperimentReport, key: &str) -> Vec<String> {
    report
        .quantities
        .get(key)
        .or_else(|| report.deviations.get(key))
        .and_then(Value::as_array)
        .map(|a| a.iter().map(|v| v.to_string()).collect())
        .unwrap_or_default()
}

pub fn verify_gcs(res: &mut Resolver, p: &Params, _: bool) -> Result<Outcome, RunError> {
    let (ctx, measure) = face_context(res, p)?;
    let trials = res.get("trials", p.trials.as_ref(), 100usize)?;
    let seed = res.get("seed", p.seed.as_ref(), 0u64)?;
    let report = check_gcs_trials(&ctx, trials, seed)?;
    let mut csv = String::from("trial,inner_product_abs,norm_product,relative_margin\n");
    let cols = ["inner_product_abs", "norm_product", "relative_margin"].map(|k| float_array(&report, k));
    for t in 0..trials {
        let _ = writeln!(csv, "{t},{},{},{}", cols[0][t], cols[1][t], cols[2][t]);
    }
    let mut v = to_json(&report);
    v["params"]["measure"] = measure;
    Ok(Outcome { passed: report.passed(), report: v, csv: Some(csv) })
}

pub fn verify_norm(res: &mut Resolver, p: &Params, _: bool) -> Result<Outcome, RunError> {
    let (ctx, measure) = face_context(res, p)?;
    let trials = res.get("trials", p.trials.as_ref(), 100usize)?;
    let seed = res.get("seed", p.seed.as_ref(), 0u64)?;
    let report = check_norm_axioms(&ctx, trials, seed)?;
    let mut v = to_json(&report);
    v["params"]["measure"] = measure;
    Ok(Outcome { passed: report.passed(), report: v, csv: None })
}

fn subset_rule(res: &mut Resolver, p: &Params, default_rule: &str, default_alpha: f64) -> ConfigResult<SubsetRule> {
    match res.get_str("rule", p.rule.as_ref(), default_rule).as_str() {
        "full" => Ok(SubsetRule::Full),
        "random" => Ok(SubsetRule::Random {
            alpha: res.get("alpha", p.alpha.as_ref(), default_alpha)?,
            seed: res.get("seed", p.seed.as_ref(), 0u64)?,
        }),
        other => Err(ConfigError::new("rule", format!("expected full or random, got {other:?}"))),
    }
}

pub fn verify_vn(res: &mut Resolver, p: &Params, _: bool) -> Result<Outcome, RunError> {
    let grid = res.get_list("n", p.n.as_ref(), &[128u64, 256, 512])?;
    let d = dimension(res, p, 2, 3)?;
    let spec = MeasureSpec::resolve(res, p, d, 1)?;
    let rule = subset_rule(res, p, "random", 0.5)?;
    let slack = res.get("stability_slack", p.stability_slack.as_ref(), 0.2f64)?;
    let mut rows = Vec::new();
    let mut ratios = Vec::new();
    let mut csv = String::from("N,lambda,min_norm,ratio\n");
    for &n in &grid {
        let nu = spec.build(n)?;
        let m = Measure::from_green_tao(&nu);
        let a = PrimePointSet::generate(d, nu.params.n, rule, Some(spec.window))?;
        let fs = corner_face_functions(&a, &m)?;
        let ws = corner_weight_system(d, m)?;
        let r = check_von_neumann(&fs, &ws)?;
        let ratio = r.get_f64("ratio").unwrap_or(f64::INFINITY);
        let _ = writeln!(
            csv,
            "{},{},{},{ratio}",
            nu.params.n,
            r.get_f64("lambda").unwrap_or(f64::NAN),
            r.get_f64("min_norm").unwrap_or(f64::NAN)
        );
        ratios.push(ratio);
        rows.push(json!({"N_requested": n, "size": a.len(), "R": nu.params.r, "result": r}));
    }
    let stable = ratios.iter().all(|r| r.is_finite()) && nonincreasing_within(&ratios, slack);
    let report = json!({"grid": rows, "ratios": ratios, "stable": stable});
    Ok(Outcome { passed: stable, report, csv: Some(csv) })
}

pub fn verify_dual(res: &mut Resolver, p: &Params, _: bool) -> Result<Outcome, RunError> {
    let grid = res.get_list("n", p.n.as_ref(), &[64u64, 128, 256])?;
    let d = dimension(res, p, 2, 3)?;
    let spec = MeasureSpec::resolve(res, p, d, 1)?;
    let k = res.get("k", p.k.as_ref(), 2usize)?;
    if !(1..=4).contains(&k) {
        return Err(ConfigError::new("k", format!("must lie in 1..=4, got {k}")).into());
    }
    let probes = res.get("probes", p.probes.as_ref(), 20usize)?;
    let seed = res.get("seed", p.seed.as_ref(), 0u64)?;
    let alpha = res.get("alpha", p.alpha.as_ref(), 0.5f64)?;
    let face = res.get("face", p.face.as_ref(), 1usize)?;
    if !(1..=d + 1).contains(&face) {
        return Err(ConfigError::new("face", format!("omitted vertex must lie in 1..={}", d + 1)).into());
    }
    let slack = res.get("stability_slack", p.stability_slack.as_ref(), 0.5f64)?;
    let mut rows = Vec::new();
    let mut maxima = Vec::new();
    let mut csv = String::from("N,max_pairing,mean_pairing\n");
    for &n in &grid {
        let nu = spec.build(n)?;
        let m = Measure::from_green_tao(&nu);
        let ws = corner_weight_system(d, m.clone())?;
        let ctx = BoxNormContext::new(&ws, IndexSet::without(d + 1, face))?;
        let big_fs = (0..k as u64)
            .map(|j| {
                let rule = SubsetRule::Random { alpha, seed: seed.wrapping_add(j + 1) };
                let a = PrimePointSet::generate(d, nu.params.n, rule, Some(spec.window))?;
                Ok(corner_face_functions(&a, &m)?.swap_remove(face - 1))
            })
            .collect::<gowers_lab::Result<Vec<_>>>()?;
        let r = check_dual_product(&big_fs, &ctx, probes, seed)?;
        let max = r.get_f64("max_pairing").unwrap_or(f64::INFINITY);
        let _ = writeln!(csv, "{},{max},{}", nu.params.n, r.get_f64("mean_pairing").unwrap_or(f64::NAN));
        maxima.push(max);
        rows.push(json!({"N_requested": n, "R": nu.params.r, "result": r}));
    }
    let spread = spread_ratio(&maxima);
    let stable = maxima.iter().all(|m| m.is_finite()) && spread <= 1.0 + slack;
    let report = json!({"grid": rows, "max_pairings": maxima, "spread": spread.to_string(), "stable": stable});
    Ok(Outcome { passed: stable, report, csv: Some(csv) })
}

fn point_set(res: &mut Resolver, p: &Params, default_n: u64) -> Result<PrimePointSet, RunError> {
    let d = dimension(res, p, 2, 3)?;
    let n = res.get("n", p.n.as_ref(), default_n)?;
    if let Some(path) = res.get_str_opt("input", p.input.as_ref()) {
        let text = std::fs::read_to_string(&path).map_err(|e| ConfigError::new("input", format!("{path}: {e}")))?;
        return PrimePointSet::parse(&text, d, n).map_err(|e| ConfigError::new("input", e.to_string()).into());
    }
    let rule = subset_rule(res, p, "full", 0.5)?;
    let window = match res.get_str_opt("window", p.window.as_ref()) {
        None => None,
        Some(s) => {
            let (a, b) = s
                .split_once(',')
                .ok_or_else(|| ConfigError::new("window", "expected delta1,delta2"))?;
            let parse = |t: &str| t.trim().parse::<f64>().map_err(|e| ConfigError::new("window", e.to_string()));
            Some((parse(a)?, parse(b)?))
        }
    };
    Ok(PrimePointSet::generate(d, n, rule, window)?)
}

pub fn corners_count(res: &mut Resolver, p: &Params, timing: bool) -> Result<Outcome, RunError> {
    let a = point_set(res, p, 1000)?;
    let weighted = res.get("weighted", p.weighted.as_ref(), false)?;
    let start = std::time::Instant::now();
    let mut report = enumerate_corners(&a)?;
    report.wall_ms = Some(start.elapsed().as_secs_f64() * 1e3);
    let mut buf = Vec::new();
    write_reports_csv(std::slice::from_ref(&report), &mut buf)?;
    if !timing {
        report.wall_ms = None;
    }
    let mut v = json!({"corners": report});
    if weighted {
        let spec = MeasureSpec::resolve(res, p, a.d(), 1)?;
        let nu = spec.build(a.n() + 1)?;
        v["weighted"] = to_json(weighted_corner_count(&a, &Measure::from_green_tao(&nu))?);
        v["weighted_modulus"] = json!(nu.params.n);
    }
    Ok(Outcome { passed: true, report: v, csv: Some(String::from_utf8_lossy(&buf).into_owned()) })
}

pub fn corners_scan(res: &mut Resolver, p: &Params, timing: bool) -> Result<Outcome, RunError> {
    let d = dimension(res, p, 2, 2)?;
    let grid = res.get_list("grid", p.grid.as_ref(), &[2000u64, 4000, 8000])?;
    let rule = subset_rule(res, p, "full", 0.5)?;
    let max_spread = res.get("max_spread", p.max_spread.as_ref(), 2.0f64)?;
    let mut rows = density_scan(d, &grid, rule)?;
    let mut buf = Vec::new();
    write_reports_csv(&rows, &mut buf)?;
    if !timing {
        rows.iter_mut().for_each(|r| r.wall_ms = None);
    }
    let c: Vec<f64> = rows.iter().map(|r| r.c_hat).collect();
    let spread = spread_ratio(&c);
    let positive = c.iter().all(|&v| v > 0.0);
    let passed = positive && spread < max_spread;
    let report = json!({"rows": rows, "c_hat_spread": spread.to_string(), "all_positive": positive});
    Ok(Outcome { passed, report, csv: Some(String::from_utf8_lossy(&buf).into_owned()) })
}

pub fn corners_reduce(res: &mut Resolver, p: &Params, _: bool) -> Result<Outcome, RunError> {
    let a = point_set(res, p, 10_000)?;
    let omega = res.get("omega_cutoff", p.omega_cutoff.as_ref(), 5u64)?;
    let window = deltas(res, p, REDUCTION_DELTA1, REDUCTION_DELTA2)?;
    let slack = res.get("slack", p.slack.as_ref(), REDUCTION_SLACK)?;
    let red = wtrick_reduce(&a, omega, window, slack)?;
    let pull = corner_pullback_check(&red, &a);
    let mut csv = String::new();
    let header: Vec<String> = (1..=a.d()).map(|j| format!("x{j}")).collect();
    let _ = writeln!(csv, "{}", header.join(","));
    for x in &red.a_prime {
        let row: Vec<String> = x.iter().map(u64::to_string).collect();
        let _ = writeln!(csv, "{}", row.join(","));
    }
    let passed = pull.pass && red.certificate.best_at_least_mean;
    let report = json!({"reduction": red, "pullback": pull, "input_size": a.len()});
    Ok(Outcome { passed, report, csv: Some(csv) })
}
