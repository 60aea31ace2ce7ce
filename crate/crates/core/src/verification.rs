//! Numerical checks of the pseudorandomness conditions and the weighted
//! inequalities. Each check returns an [`ExperimentReport`] carrying its
//! parameter block, the measured quantities and a verdict.
//!
//! Where the underlying statement hides an implicit constant the report
//! contains measured ratios; the stability helpers at the bottom compare
//! those across a grid of moduli.

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::arithmetic::GreenTaoMeasure;
use crate::error::{domain, Error, Result};
use crate::gowers::{
    box_norm, dual_function, gowers_average, gowers_inner_product, lambda_form, omega_set_from_dual,
    weighted_inner_product, BoxNormContext,
};
use crate::grid::{GridFunction, IndexSet};
use crate::par;
use crate::rng;
use crate::weights::{proportional, AffineForm, WeightSystem};

/// Relative slack allowed on the exact inequalities.
pub const EXACT_TOL: f64 = 1e-9;

/// `Δ` above which a single linear-forms run is reported as failing.
pub const LINEAR_FORMS_MAX_DELTA: f64 = 0.5;

/// Samples drawn per generator stream in sampled mode.
pub const SAMPLE_CHUNK: u64 = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn passed(self) -> bool {
        self == Verdict::Pass
    }
}

/// Structured record of one verification run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub version: String,
    pub params: Map<String, Value>,
    pub quantities: Map<String, Value>,
    pub deviations: Map<String, Value>,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_ms: Option<f64>,
}

impl ExperimentReport {
    pub fn new(experiment: &str) -> Self {
        ExperimentReport {
            experiment: experiment.to_string(),
            version: crate::REPORT_VERSION.to_string(),
            params: Map::new(),
            quantities: Map::new(),
            deviations: Map::new(),
            verdict: Verdict::Pass,
            wall_ms: None,
        }
    }

    pub fn param(mut self, key: &str, v: impl Serialize) -> Self {
        self.params.insert(key.into(), to_value(v));
        self
    }

    pub fn quantity(mut self, key: &str, v: impl Serialize) -> Self {
        self.quantities.insert(key.into(), to_value(v));
        self
    }

    pub fn deviation(mut self, key: &str, v: impl Serialize) -> Self {
        self.deviations.insert(key.into(), to_value(v));
        self
    }

    pub fn verdict(mut self, v: Verdict) -> Self {
        self.verdict = v;
        self
    }

    /// Numeric quantity lookup, for callers post-processing reports.
    pub fn get_f64(&self, key: &str) -> Option<f64> {
        self.quantities
            .get(key)
            .or_else(|| self.deviations.get(key))
            .and_then(Value::as_f64)
    }

    pub fn passed(&self) -> bool {
        self.verdict.passed()
    }
}

fn to_value(v: impl Serialize) -> Value {
    // Non-finite floats have no JSON form; keep them legible.
    match serde_json::to_value(&v) {
        Ok(Value::Null) => Value::String("NaN".into()),
        Ok(x) => x,
        Err(e) => Value::String(e.to_string()),
    }
}

/// A finite float, or its `Display` string when infinite or NaN.
pub fn real(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::String(x.to_string())
    }
}

/// A family of affine forms on `Z^t` with pairwise independent homogeneous
/// parts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FormsFamily {
    t: usize,
    forms: Vec<AffineForm>,
}

impl FormsFamily {
    pub fn new(t: usize, forms: Vec<AffineForm>) -> Result<Self> {
        if t == 0 {
            return domain("forms family needs at least one variable");
        }
        let full = IndexSet::full(t);
        for (i, f) in forms.iter().enumerate() {
            if f.support != full {
                return domain(format!("form {i} is not defined on all {t} variables"));
            }
            if f.coeffs.iter().all(|&c| c == 0) {
                return domain(format!("form {i} has zero homogeneous part"));
            }
        }
        for i in 0..forms.len() {
            for j in i + 1..forms.len() {
                if proportional(&forms[i].coeffs, &forms[j].coeffs) {
                    return domain(format!("forms {i} and {j} have proportional homogeneous parts"));
                }
            }
        }
        Ok(FormsFamily { t, forms })
    }

    /// Build from rows `[a_1, …, a_t, b]`.
    pub fn from_rows(t: usize, rows: &[Vec<i64>]) -> Result<Self> {
        let full = IndexSet::full(t);
        let forms = rows
            .iter()
            .map(|r| {
                if r.len() != t + 1 {
                    return Err(Error::DimensionMismatch { expected: t + 1, got: r.len() });
                }
                AffineForm::new(full, r[..t].to_vec(), r[t])
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(t, forms)
    }

    /// `{x}`.
    pub fn single() -> Self {
        Self::from_rows(1, &[vec![1, 0]]).expect("valid")
    }

    /// `{x, y}`.
    pub fn pair() -> Self {
        Self::from_rows(2, &[vec![1, 0, 0], vec![0, 1, 0]]).expect("valid")
    }

    /// `{x, y, x + y}`.
    pub fn corner_triple() -> Self {
        Self::from_rows(2, &[vec![1, 0, 0], vec![0, 1, 0], vec![1, 1, 0]]).expect("valid")
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn forms(&self) -> &[AffineForm] {
        &self.forms
    }

    fn rows(&self) -> Vec<Vec<i64>> {
        self.forms
            .iter()
            .map(|f| f.coeffs.iter().copied().chain([f.constant]).collect())
            .collect()
    }

    fn product(&self, nu: &[f64], x: &[u64]) -> f64 {
        let n = nu.len() as i128;
        self.forms
            .iter()
            .map(|f| nu[f.eval(x).rem_euclid(n) as usize])
            .product()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum SampleMode {
    Exact,
    Sampled { count: u64, seed: u64 },
}

fn measure_params(report: ExperimentReport, nu: &GreenTaoMeasure) -> ExperimentReport {
    report
        .param("N", nu.params.n)
        .param("d", nu.params.d)
        .param("R", nu.params.r)
        .param("delta1", nu.params.delta1)
        .param("delta2", nu.params.delta2)
        .param("W", nu.wtrick.w)
        .param("b", &nu.wtrick.b)
        .param("omega_cutoff", nu.wtrick.omega_cutoff)
}

/// `Δ = |E ∏_i ν(L_i(x)) − 1|` over `x ∈ Z_N^t`.
pub fn check_linear_forms(nu: &GreenTaoMeasure, family: &FormsFamily, mode: SampleMode) -> Result<ExperimentReport> {
    let n = nu.n();
    let t = family.t;
    let values = &nu.values;
    let (mean, stderr) = match mode {
        SampleMode::Exact => {
            if t > 3 {
                return domain(format!("exact mode supports t <= 3, got t = {t}"));
            }
            let inner = n.pow(t as u32 - 1);
            let total = par::sum_indexed(n, |x0| {
                let mut x = vec![0u64; t];
                x[0] = x0 as u64;
                let mut parts = Vec::with_capacity(inner);
                for rest in 0..inner {
                    crate::grid::decode_into(rest, n, &mut x[1..]);
                    parts.push(family.product(values, &x));
                }
                par::pairwise_sum(&parts)
            });
            (total / (n as f64).powi(t as i32), None)
        }
        SampleMode::Sampled { count, seed } => {
            if count == 0 {
                return domain("sample count must be positive");
            }
            let chunks = count.div_ceil(SAMPLE_CHUNK);
            let partial = par::map_indexed(chunks as usize, |c| {
                let mut r = rng::stream(seed, c as u64);
                let len = SAMPLE_CHUNK.min(count - c as u64 * SAMPLE_CHUNK);
                let mut x = vec![0u64; t];
                let (mut s, mut s2) = (0.0, 0.0);
                for _ in 0..len {
                    for c in x.iter_mut() {
                        *c = r.gen_range(0..n as u64);
                    }
                    let p = family.product(values, &x);
                    s += p;
                    s2 += p * p;
                }
                (s, s2)
            });
            let s = par::pairwise_sum(&partial.iter().map(|p| p.0).collect::<Vec<_>>());
            let s2 = par::pairwise_sum(&partial.iter().map(|p| p.1).collect::<Vec<_>>());
            let c = count as f64;
            let mean = s / c;
            let var = (s2 / c - mean * mean).max(0.0) * c / (c - 1.0).max(1.0);
            (mean, Some((var / c).sqrt()))
        }
    };
    let delta = (mean - 1.0).abs();
    let mut report = measure_params(ExperimentReport::new("linear_forms"), nu)
        .param("t", t)
        .param("forms", family.rows())
        .param("sampling", mode)
        .quantity("mean", real(mean))
        .deviation("delta", real(delta))
        .deviation("signed_delta", real(mean - 1.0))
        .verdict(Verdict::from_bool(delta <= LINEAR_FORMS_MAX_DELTA));
    if let Some(se) = stderr {
        report = report.quantity("stderr", real(se));
    }
    Ok(report)
}

/// `2^d` functions uniform in `[-1, 1]`, drawn from stream `trial`.
pub fn trial_functions(d: usize, n: usize, count: usize, seed: u64, trial: u64) -> Result<Vec<GridFunction>> {
    let mut r = rng::stream(seed, trial);
    let len = n.pow(d as u32);
    (0..count)
        .map(|_| GridFunction::new(d, n, rng::uniform_vec(&mut r, len, -1.0, 1.0)))
        .collect()
}

struct GcsOutcome {
    lhs: f64,
    rhs: f64,
    margin: f64,
}

fn gcs_outcome(fs: &[GridFunction], ctx: &BoxNormContext) -> Result<GcsOutcome> {
    let lhs = gowers_inner_product(fs, ctx)?.abs();
    let norms = fs.iter().map(|f| box_norm(f, ctx)).collect::<Result<Vec<_>>>()?;
    let rhs: f64 = norms.iter().product();
    Ok(GcsOutcome { lhs, rhs, margin: rhs - lhs })
}

fn face_params(report: ExperimentReport, ctx: &BoxNormContext) -> ExperimentReport {
    report
        .param("N", ctx.n())
        .param("d", ctx.dim())
        .param("face", ctx.face())
}

/// `|⟨f_ω⟩_{□ν}| ≤ ∏_ω ‖f_ω‖_{□ν}`.
pub fn check_gcs(fs: &[GridFunction], ctx: &BoxNormContext) -> Result<ExperimentReport> {
    let o = gcs_outcome(fs, ctx)?;
    Ok(face_params(ExperimentReport::new("gcs"), ctx)
        .quantity("inner_product_abs", real(o.lhs))
        .quantity("norm_product", real(o.rhs))
        .deviation("margin", real(o.margin))
        .verdict(Verdict::from_bool(o.margin >= -EXACT_TOL * o.rhs)))
}

/// [`check_gcs`] on `trials` seeded random tuples.
pub fn check_gcs_trials(ctx: &BoxNormContext, trials: usize, seed: u64) -> Result<ExperimentReport> {
    let cube = 1usize << ctx.dim();
    let outcomes = par::map_indexed(trials, |t| {
        trial_functions(ctx.dim(), ctx.n(), cube, seed, t as u64).and_then(|fs| gcs_outcome(&fs, ctx))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let normalized: Vec<f64> = outcomes
        .iter()
        .map(|o| if o.rhs > 0.0 { o.margin / o.rhs } else { o.margin })
        .collect();
    let failures = normalized.iter().filter(|&&m| m < -EXACT_TOL).count();
    let worst = normalized.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(face_params(ExperimentReport::new("gcs"), ctx)
        .param("trials", trials)
        .param("seed", seed)
        .quantity("inner_product_abs", outcomes.iter().map(|o| real(o.lhs)).collect::<Vec<_>>())
        .quantity("norm_product", outcomes.iter().map(|o| real(o.rhs)).collect::<Vec<_>>())
        .deviation("relative_margin", normalized.iter().map(|&m| real(m)).collect::<Vec<_>>())
        .deviation("min_relative_margin", real(worst))
        .quantity("failures", failures)
        .verdict(Verdict::from_bool(failures == 0)))
}

struct AxiomTrial {
    triangle_slack: f64,
    triangle_scale: f64,
    homogeneity_error: f64,
    homogeneity_scale: f64,
}

/// Triangle inequality and absolute homogeneity on `trials` random pairs
/// `(f, g)` and scalars `λ ∈ [-3, 3]`; also reports `‖1‖_{□ν}`.
pub fn check_norm_axioms(ctx: &BoxNormContext, trials: usize, seed: u64) -> Result<ExperimentReport> {
    let (d, n) = (ctx.dim(), ctx.n());
    let results = par::map_indexed(trials, |t| -> Result<AxiomTrial> {
        let fg = trial_functions(d, n, 2, seed, t as u64)?;
        let lambda = rng::stream(seed, t as u64 | 1 << 63).gen_range(-3.0..=3.0);
        let nf = box_norm(&fg[0], ctx)?;
        let ng = box_norm(&fg[1], ctx)?;
        let sum = fg[0].zip_with(&fg[1], |a, b| a + b)?;
        let nsum = box_norm(&sum, ctx)?;
        let nscaled = box_norm(&fg[0].scale(lambda)?, ctx)?;
        Ok(AxiomTrial {
            triangle_slack: nf + ng - nsum,
            triangle_scale: (nf + ng).max(f64::MIN_POSITIVE),
            homogeneity_error: (nscaled - lambda.abs() * nf).abs(),
            homogeneity_scale: (lambda.abs() * nf).max(f64::MIN_POSITIVE),
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let one = box_norm(&GridFunction::constant(d, n, 1.0)?, ctx)?;
    let tri: Vec<f64> = results.iter().map(|r| r.triangle_slack / r.triangle_scale).collect();
    let hom: Vec<f64> = results.iter().map(|r| r.homogeneity_error / r.homogeneity_scale).collect();
    let min_tri = tri.iter().copied().fold(f64::INFINITY, f64::min);
    let max_hom = hom.iter().copied().fold(0.0, f64::max);
    let failures = tri.iter().zip(&hom).filter(|(&a, &b)| a < -EXACT_TOL || b > EXACT_TOL).count();
    Ok(face_params(ExperimentReport::new("norm_axioms"), ctx)
        .param("trials", trials)
        .param("seed", seed)
        .quantity("norm_of_one", real(one))
        .quantity("failures", failures)
        .deviation("min_relative_triangle_slack", real(min_tri))
        .deviation("max_relative_homogeneity_error", real(max_hom))
        .verdict(Verdict::from_bool(failures == 0)))
}

/// `|f^{(i)}| ≤ ν_{[d+1]∖{i}}` everywhere, or a precondition error naming
/// the first violation.
pub fn check_domination(fs: &[GridFunction], ws: &WeightSystem) -> Result<()> {
    let u = ws.d() + 1;
    for (k, f) in fs.iter().enumerate() {
        let face = IndexSet::without(u, k + 1);
        let bound = ws.edge_table(face);
        for (idx, &v) in f.values().iter().enumerate() {
            let b = bound.as_ref().map_or(1.0, |t| t[idx]);
            if v.abs() > b * (1.0 + 1e-12) {
                return Err(Error::Precondition(format!(
                    "|f^({})| exceeds nu on face {face:?} at point {:?}: {} > {}",
                    k + 1,
                    f.coords_of(idx),
                    v.abs(),
                    b
                )));
            }
        }
    }
    Ok(())
}

/// `|Λ(f^{(1)}, …, f^{(d+1)})| / min_i ‖f^{(i)}‖_{□ν}`.
pub fn check_von_neumann(fs: &[GridFunction], ws: &WeightSystem) -> Result<ExperimentReport> {
    let u = ws.d() + 1;
    if fs.len() != u {
        return domain(format!("expected d+1 = {u} face functions, got {}", fs.len()));
    }
    check_domination(fs, ws)?;
    let lambda = lambda_form(fs, ws)?;
    let norms = fs
        .iter()
        .enumerate()
        .map(|(k, f)| box_norm(f, &BoxNormContext::new(ws, IndexSet::without(u, k + 1))?))
        .collect::<Result<Vec<_>>>()?;
    let min = norms.iter().copied().fold(f64::INFINITY, f64::min);
    let ratio = if lambda == 0.0 { 0.0 } else { lambda.abs() / min };
    Ok(ExperimentReport::new("von_neumann")
        .param("N", ws.n())
        .param("d", ws.d())
        .param("measure", ws.measure().describe())
        .quantity("lambda", real(lambda))
        .quantity("face_norms", norms.iter().map(|&v| real(v)).collect::<Vec<_>>())
        .quantity("min_norm", real(min))
        .deviation("ratio", real(ratio))
        .verdict(Verdict::from_bool(ratio.is_finite())))
}

/// Random probe in the dominated class, normalised to `‖f‖_{□ν} = 1`.
/// Zero-norm draws are discarded and redrawn from the same stream.
pub fn dual_probe(ctx: &BoxNormContext, seed: u64, probe: u64) -> Result<(GridFunction, u32)> {
    let mut r = rng::stream(seed, probe);
    let bound = ctx.face_bound();
    for discarded in 0..64u32 {
        let raw = rng::uniform_vec(&mut r, bound.len(), -1.0, 1.0);
        let vals: Vec<f64> = raw.iter().zip(bound).map(|(a, b)| a * b).collect();
        let f = GridFunction::new(ctx.dim(), ctx.n(), vals)?;
        let norm = box_norm(&f, ctx)?;
        if norm > 0.0 {
            return Ok((f.scale(1.0 / norm)?, discarded));
        }
    }
    Err(Error::Precondition(format!(
        "face {:?}: every probe has zero box norm (weights vanish)",
        ctx.face()
    )))
}

/// `|⟨f, ∏_j DF_j⟩_ν|` for normalised random probes `f`.
pub fn check_dual_product(big_fs: &[GridFunction], ctx: &BoxNormContext, probes: usize, seed: u64) -> Result<ExperimentReport> {
    let k = big_fs.len();
    if !(1..=4).contains(&k) {
        return domain(format!("dual product supports 1 <= K <= 4 factors, got {k}"));
    }
    let bound = ctx.face_bound();
    for (j, f) in big_fs.iter().enumerate() {
        for (idx, (&v, &b)) in f.values().iter().zip(bound).enumerate() {
            if v.abs() > b * (1.0 + 1e-12) {
                return Err(Error::Precondition(format!(
                    "|F_{}| exceeds nu on face {:?} at point {:?}",
                    j + 1,
                    ctx.face(),
                    f.coords_of(idx)
                )));
            }
        }
    }
    let mut product = GridFunction::constant(ctx.dim(), ctx.n(), 1.0)?;
    for f in big_fs {
        product = product.zip_with(&dual_function(f, ctx)?, |a, b| a * b)?;
    }
    let results = par::map_indexed(probes, |p| -> Result<(f64, u32)> {
        let (f, discarded) = dual_probe(ctx, seed, p as u64)?;
        Ok((weighted_inner_product(&f, &product, ctx)?.abs(), discarded))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let pairings: Vec<f64> = results.iter().map(|r| r.0).collect();
    let discarded: u32 = results.iter().map(|r| r.1).sum();
    let max = pairings.iter().copied().fold(0.0, f64::max);
    let mean = if probes == 0 { 0.0 } else { par::pairwise_sum(&pairings) / probes as f64 };
    Ok(face_params(ExperimentReport::new("dual_product"), ctx)
        .param("K", k)
        .param("probes", probes)
        .param("seed", seed)
        .quantity("pairings", pairings.iter().map(|&v| real(v)).collect::<Vec<_>>())
        .quantity("mean_pairing", real(mean))
        .quantity("discarded_probes", discarded)
        .deviation("max_pairing", real(max))
        .verdict(Verdict::from_bool(max.is_finite())))
}

/// Relative error of the identity `⟨f, Df⟩_ν = ‖f‖_{□ν}^{2^d}`.
pub fn duality_error(f: &GridFunction, ctx: &BoxNormContext) -> Result<f64> {
    let lhs = weighted_inner_product(f, &dual_function(f, ctx)?, ctx)?;
    let rhs = gowers_average(f, ctx)?;
    Ok((lhs - rhs).abs() / rhs.abs().max(f64::MIN_POSITIVE))
}

/// `C(T) = T · ⟨|f|, 1_{Ω(T)^c}⟩_ν` for each threshold, from one dual
/// evaluation. Passes when `max C / min C < spread`.
pub fn check_omega_mass(f: &GridFunction, ctx: &BoxNormContext, thresholds: &[f64], spread: f64) -> Result<ExperimentReport> {
    let dual = dual_function(f, ctx)?;
    let mut constants = Vec::with_capacity(thresholds.len());
    let mut masses = Vec::with_capacity(thresholds.len());
    let mut sizes = Vec::with_capacity(thresholds.len());
    for &t in thresholds {
        let omega = omega_set_from_dual(&dual, t)?;
        let mass = omega.complement_mass(f, ctx)?;
        masses.push(mass);
        constants.push(t * mass);
        sizes.push(omega.complement_len());
    }
    // `E_ν[|f| |Df|]`: the constant of the Markov bound `mass ≤ E|f||Df| / T`.
    let abs_f = f.map(f64::abs)?;
    let markov = weighted_inner_product(&abs_f, &dual.map(f64::abs)?, ctx)?;
    let ratio = spread_ratio(&constants);
    Ok(face_params(ExperimentReport::new("omega_mass"), ctx)
        .param("thresholds", thresholds)
        .param("spread", spread)
        .quantity("dual_max", real(dual.max_abs()))
        .quantity("complement_mass", masses.iter().map(|&v| real(v)).collect::<Vec<_>>())
        .quantity("complement_size", sizes)
        .quantity("c_of_t", constants.iter().map(|&v| real(v)).collect::<Vec<_>>())
        .quantity("markov_constant", real(markov))
        .deviation("c_spread", real(ratio))
        .verdict(Verdict::from_bool(ratio < spread)))
}

/// `max / min` of positive values; infinite when any value is nonpositive.
pub fn spread_ratio(values: &[f64]) -> f64 {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if values.is_empty() {
        return 1.0;
    }
    if !(min > 0.0) {
        return f64::INFINITY;
    }
    max / min
}

/// Every value is at most `(1 + slack)` times its predecessor.
pub fn nonincreasing_within(values: &[f64], slack: f64) -> bool {
    values.windows(2).all(|w| w[1] <= w[0] * (1.0 + slack))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arithmetic::{green_tao_measure, make_wtrick, MeasureParams};
    use crate::weights::{corner_weight_system, Measure};
    use std::collections::BTreeMap;

    fn small_measure() -> GreenTaoMeasure {
        let p = MeasureParams::new(101, 2, Some(8.0), 0.05, 0.95).unwrap();
        green_tao_measure(&p, &make_wtrick(3, &[1]).unwrap(), 0).unwrap()
    }

    #[test]
    fn family_validation() {
        assert!(FormsFamily::from_rows(2, &[vec![1, 0, 0], vec![2, 0, 5]]).is_err());
        assert!(FormsFamily::from_rows(2, &[vec![0, 0, 1]]).is_err());
        assert!(FormsFamily::from_rows(2, &[vec![1, 0]]).is_err());
        assert_eq!(FormsFamily::corner_triple().forms().len(), 3);
    }

    #[test]
    fn single_form_is_mean_deviation() {
        let nu = small_measure();
        let r = check_linear_forms(&nu, &FormsFamily::single(), SampleMode::Exact).unwrap();
        let want = (nu.mean() - 1.0).abs();
        assert!((r.get_f64("delta").unwrap() - want).abs() < 1e-14);
    }

    #[test]
    fn pair_deviation_is_quadratic_in_single() {
        let nu = small_measure();
        let one = check_linear_forms(&nu, &FormsFamily::single(), SampleMode::Exact).unwrap();
        let two = check_linear_forms(&nu, &FormsFamily::pair(), SampleMode::Exact).unwrap();
        let s = one.get_f64("signed_delta").unwrap();
        let s2 = two.get_f64("signed_delta").unwrap();
        assert!((s2 - s * (2.0 + s)).abs() < 1e-12);
    }

    #[test]
    fn sampled_is_seed_deterministic_and_close() {
        let nu = small_measure();
        let mode = SampleMode::Sampled { count: 200_000, seed: 5 };
        let a = check_linear_forms(&nu, &FormsFamily::corner_triple(), mode).unwrap();
        let b = check_linear_forms(&nu, &FormsFamily::corner_triple(), mode).unwrap();
        assert_eq!(a, b);
        let exact = check_linear_forms(&nu, &FormsFamily::corner_triple(), SampleMode::Exact).unwrap();
        let diff = (a.get_f64("mean").unwrap() - exact.get_f64("mean").unwrap()).abs();
        assert!(diff < 6.0 * a.get_f64("stderr").unwrap());
    }

    fn corner_ctx(n: usize) -> BoxNormContext {
        let mut r = rng::stream(3, 3);
        let m = Measure::from_values(rng::uniform_vec(&mut r, n, 0.0, 2.0)).unwrap();
        let ws = corner_weight_system(2, m).unwrap();
        BoxNormContext::new(&ws, IndexSet::new(3, &[1, 3]).unwrap()).unwrap()
    }

    #[test]
    fn gcs_identity_and_zero_cases() {
        let ctx = corner_ctx(9);
        let f = trial_functions(2, 9, 1, 1, 0).unwrap().remove(0);
        let r = check_gcs(&vec![f.clone(); 4], &ctx).unwrap();
        assert!(r.passed());
        let m = r.get_f64("margin").unwrap();
        assert!(m.abs() <= 1e-12 * r.get_f64("norm_product").unwrap());
        let mut fs = vec![f; 4];
        fs[1] = GridFunction::zeros(2, 9).unwrap();
        let r = check_gcs(&fs, &ctx).unwrap();
        assert_eq!(r.get_f64("inner_product_abs"), Some(0.0));
        assert_eq!(r.get_f64("norm_product"), Some(0.0));
        assert!(check_gcs_trials(&ctx, 5, 2).unwrap().passed());
    }

    #[test]
    fn norm_axioms_with_trivial_weights() {
        let ws = WeightSystem::new(2, Measure::unit(7).unwrap(), BTreeMap::new()).unwrap();
        let ctx = BoxNormContext::new(&ws, IndexSet::new(3, &[1, 2]).unwrap()).unwrap();
        let r = check_norm_axioms(&ctx, 4, 1).unwrap();
        assert!(r.passed());
        assert!((r.get_f64("norm_of_one").unwrap() - 1.0).abs() < 1e-14);
        let f = trial_functions(2, 7, 1, 0, 0).unwrap().remove(0);
        let neg = f.scale(-1.0).unwrap();
        let sum = f.zip_with(&neg, |a, b| a + b).unwrap();
        assert_eq!(box_norm(&sum, &ctx).unwrap(), 0.0);
        assert_eq!(box_norm(&f.scale(0.0).unwrap(), &ctx).unwrap(), 0.0);
    }

    #[test]
    fn von_neumann_zero_and_domination() {
        let mut r = rng::stream(1, 1);
        let m = Measure::from_values(rng::uniform_vec(&mut r, 7, 0.5, 2.0)).unwrap();
        let ws = corner_weight_system(2, m).unwrap();
        let mut fs: Vec<GridFunction> = (1..=3)
            .map(|i| {
                let t = ws.edge_table(IndexSet::without(3, i)).unwrap_or_else(|| vec![1.0; 49]);
                GridFunction::new(2, 7, t).unwrap()
            })
            .collect();
        assert!(check_von_neumann(&fs, &ws).unwrap().get_f64("ratio").unwrap() > 0.0);
        fs[1] = GridFunction::zeros(2, 7).unwrap();
        let rep = check_von_neumann(&fs, &ws).unwrap();
        assert_eq!(rep.get_f64("lambda"), Some(0.0));
        assert_eq!(rep.get_f64("ratio"), Some(0.0));
        fs[2] = GridFunction::constant(2, 7, 1.5).unwrap();
        match check_von_neumann(&fs, &ws) {
            Err(Error::Precondition(msg)) => assert!(msg.contains("face") && msg.contains("[0, 0]"), "{msg}"),
            other => panic!("expected precondition error, got {other:?}"),
        }
    }

    #[test]
    fn dual_product_cases() {
        let ctx = corner_ctx(7);
        let zero = GridFunction::zeros(2, 7).unwrap();
        let r = check_dual_product(&[zero.clone(), zero], &ctx, 5, 1).unwrap();
        assert_eq!(r.get_f64("max_pairing"), Some(0.0));
        // K = 1 with f = F / ‖F‖: the pairing is ‖F‖^{2^d - 1}.
        let big_f = ctx.face_bound_function().scale(0.7).unwrap();
        let norm = box_norm(&big_f, &ctx).unwrap();
        let f = big_f.scale(1.0 / norm).unwrap();
        let pairing = weighted_inner_product(&f, &dual_function(&big_f, &ctx).unwrap(), &ctx).unwrap();
        assert!((pairing - norm.powi(3)).abs() < 1e-10 * norm.powi(3));
        assert!(check_dual_product(&[], &ctx, 1, 1).is_err());
    }

    #[test]
    fn stability_helpers() {
        assert!(nonincreasing_within(&[1.0, 1.1, 1.0], 0.2));
        assert!(!nonincreasing_within(&[1.0, 1.3], 0.2));
        assert_eq!(spread_ratio(&[2.0, 1.0, 4.0]), 4.0);
        assert_eq!(spread_ratio(&[1.0, 0.0]), f64::INFINITY);
    }

    #[test]
    fn report_round_trips() {
        let ctx = corner_ctx(5);
        let r = check_gcs_trials(&ctx, 2, 9).unwrap();
        let s = serde_json::to_string(&r).unwrap();
        let back: ExperimentReport = serde_json::from_str(&s).unwrap();
        assert_eq!(back, r);
    }
}
