//! Corners `{x, x+te_1, …, x+te_d}` in subsets of `P_N^d`: exact
//! enumeration, the weighted count through the `Λ` form, and the reduction
//! to a dense subset of a cyclic group via the W-trick.

use std::collections::{HashMap, HashSet};
use std::io::Write;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::arithmetic::{euler_phi, gcd, is_prime_u64, next_prime, primorial, sieve_primes};
use crate::error::{domain, Error, Result};
use crate::gowers::lambda_form;
use crate::grid::GridFunction;
use crate::par;
use crate::rng;
use crate::weights::{corner_weight_system, Measure};

/// Primes in `[1, n]`.
fn primes_up_to(n: u64) -> Result<Vec<u64>> {
    if n < 2 {
        return Ok(Vec::new());
    }
    Ok(sieve_primes(n)?.primes().to_vec())
}

/// How a point set is drawn from `P_N^d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "lowercase")]
pub enum SubsetRule {
    Full,
    /// Each point kept independently with probability `alpha`.
    Random { alpha: f64, seed: u64 },
}

/// A finite subset of `P_N^d`, sorted lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PrimePointSet {
    d: usize,
    n: u64,
    points: Vec<Vec<u64>>,
}

impl PrimePointSet {
    pub fn new(d: usize, n: u64, mut points: Vec<Vec<u64>>) -> Result<Self> {
        if d == 0 {
            return domain("dimension d must be positive");
        }
        for p in &points {
            if p.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: p.len() });
            }
            for &c in p {
                if c > n {
                    return domain(format!("point {p:?} has coordinate {c} > N = {n}"));
                }
                if !is_prime_u64(c) {
                    return domain(format!("point {p:?} has non-prime coordinate {c}"));
                }
            }
        }
        points.sort_unstable();
        points.dedup();
        Ok(PrimePointSet { d, n, points })
    }

    /// One point per line, coordinates separated by whitespace; blank lines
    /// and lines starting with `#` are skipped.
    pub fn parse(text: &str, d: usize, n: u64) -> Result<Self> {
        let mut points = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let p = line
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<u64>()
                        .map_err(|e| Error::Parse(format!("line {}: {tok:?}: {e}", lineno + 1)))
                })
                .collect::<Result<Vec<_>>>()?;
            points.push(p);
        }
        Self::new(d, n, points)
    }

    /// Points of `P_N^d` chosen by `rule`, optionally restricted to the window
    /// `[δ₁N, δ₂N]^d`.
    pub fn generate(d: usize, n: u64, rule: SubsetRule, window: Option<(f64, f64)>) -> Result<Self> {
        if d == 0 {
            return domain("dimension d must be positive");
        }
        let mut primes = primes_up_to(n)?;
        if let Some((lo, hi)) = window {
            if !(lo < hi) {
                return domain(format!("delta window must satisfy delta1 < delta2, got ({lo}, {hi})"));
            }
            let nf = n as f64;
            primes.retain(|&p| lo * nf <= p as f64 && p as f64 <= hi * nf);
        }
        let mut sampler = match rule {
            SubsetRule::Full => None,
            SubsetRule::Random { alpha, seed } => {
                if !(0.0..=1.0).contains(&alpha) {
                    return domain(format!("density alpha must lie in [0, 1], got {alpha}"));
                }
                Some((alpha, rng::stream(seed, 0)))
            }
        };
        let total = primes.len().checked_pow(d as u32).ok_or_else(|| Error::Domain("P_N^d too large".into()))?;
        let mut points = Vec::new();
        let mut idx = vec![0usize; d];
        for _ in 0..total {
            let keep = match sampler.as_mut() {
                None => true,
                Some((alpha, r)) => r.gen::<f64>() < *alpha,
            };
            if keep {
                points.push(idx.iter().map(|&i| primes[i]).collect());
            }
            for k in (0..d).rev() {
                idx[k] += 1;
                if idx[k] < primes.len() {
                    break;
                }
                idx[k] = 0;
            }
        }
        Ok(PrimePointSet { d, n, points })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn points(&self) -> &[Vec<u64>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `|A| / π(N)^d`.
    pub fn density(&self) -> Result<f64> {
        let pi = primes_up_to(self.n)?.len();
        if pi == 0 {
            return Ok(0.0);
        }
        Ok(self.len() as f64 / (pi as f64).powi(self.d as i32))
    }

    /// Same set with the coordinate axes permuted: new axis `k` is old axis `perm[k]`.
    pub fn permute_axes(&self, perm: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.d];
        if perm.len() != self.d || perm.iter().any(|&p| p >= self.d || std::mem::replace(&mut seen[p], true)) {
            return domain(format!("{perm:?} is not a permutation of 0..{}", self.d));
        }
        let points = self.points.iter().map(|p| perm.iter().map(|&k| p[k]).collect()).collect();
        Self::new(self.d, self.n, points)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CornerReport {
    #[serde(rename = "N")]
    pub n: u64,
    pub d: usize,
    pub size: usize,
    pub alpha_hat: f64,
    pub nondegenerate: u64,
    pub degenerate: u64,
    /// `nondegenerate · (log N)^{2d} / N^{d+1}`.
    pub c_hat: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_ms: Option<f64>,
}

/// `popcount(a & b & (src shifted so bit k holds bit k+t))`.
fn and3_popcount(a: &[u64], b: &[u64], src: &[u64], t: i64) -> u64 {
    let words = a.len() as i64;
    let q = t.div_euclid(64);
    let r = t.rem_euclid(64) as u32;
    let word = |i: i64| -> u64 {
        if (0..words).contains(&i) {
            src[i as usize]
        } else {
            0
        }
    };
    let mut count = 0u64;
    for k in 0..words {
        let ab = a[k as usize] & b[k as usize];
        if ab == 0 {
            continue;
        }
        let lo = word(k + q);
        let shifted = if r == 0 { lo } else { (lo >> r) | (word(k + q + 1) << (64 - r)) };
        count += (ab & shifted).count_ones() as u64;
    }
    count
}

/// Planar kernel: per pair of rows `(a, a+t)` the bases `b` of corners with
/// gap `t` are `B_a ∩ B_{a+t} ∩ (B_a − t)`.
fn count_planar(a: &PrimePointSet) -> u64 {
    let words = (a.n as usize + 1).div_ceil(64);
    let mut rows: Vec<(u64, Vec<u64>)> = Vec::new();
    for p in &a.points {
        if rows.last().map(|r| r.0) != Some(p[0]) {
            rows.push((p[0], vec![0u64; words]));
        }
        let bits = &mut rows.last_mut().expect("row pushed").1;
        bits[p[1] as usize / 64] |= 1 << (p[1] % 64);
    }
    par::count_indexed(rows.len(), |i| {
        let (x, bx) = &rows[i];
        rows.iter()
            .filter(|(y, _)| y != x)
            .map(|(y, by)| and3_popcount(bx, by, bx, *y as i64 - *x as i64))
            .sum()
    })
}

/// Points grouped by all coordinates but the first, with sorted first coordinates.
fn lines(points: &[Vec<u64>]) -> HashMap<&[u64], Vec<u64>> {
    let mut map: HashMap<&[u64], Vec<u64>> = HashMap::new();
    for p in points {
        map.entry(&p[1..]).or_default().push(p[0]);
    }
    for v in map.values_mut() {
        v.sort_unstable();
    }
    map
}

fn count_generic(a: &PrimePointSet) -> u64 {
    let set: HashSet<&[u64]> = a.points.iter().map(Vec::as_slice).collect();
    let lines = lines(&a.points);
    par::count_indexed(a.points.len(), |i| {
        let x = &a.points[i];
        let mut y = x.clone();
        let mut count = 0;
        for &first in &lines[&x[1..]] {
            if first == x[0] {
                continue;
            }
            let t = first as i64 - x[0] as i64;
            let ok = (1..a.d).all(|j| {
                let v = x[j] as i64 + t;
                if v < 0 {
                    return false;
                }
                y[j] = v as u64;
                let hit = set.contains(y.as_slice());
                y[j] = x[j];
                hit
            });
            count += u64::from(ok);
        }
        count
    })
}

/// Exact corner counts; `d = 2` uses the row-bitset kernel.
pub fn enumerate_corners(a: &PrimePointSet) -> Result<CornerReport> {
    let nondegenerate = match a.d {
        2 => count_planar(a),
        3 => count_generic(a),
        d => return domain(format!("corner enumeration supports d in {{2, 3}}, got {d}")),
    };
    Ok(corner_report(a, nondegenerate)?)
}

/// The generic point-lookup kernel, exposed for cross-checking the planar one.
pub fn enumerate_corners_generic(a: &PrimePointSet) -> Result<CornerReport> {
    if a.d < 2 {
        return domain("corners need d >= 2");
    }
    corner_report(a, count_generic(a))
}

fn corner_report(a: &PrimePointSet, nondegenerate: u64) -> Result<CornerReport> {
    let nf = a.n as f64;
    let c_hat = if a.n < 2 {
        0.0
    } else {
        nondegenerate as f64 * nf.ln().powi(2 * a.d as i32) / nf.powi(a.d as i32 + 1)
    };
    Ok(CornerReport {
        n: a.n,
        d: a.d,
        size: a.len(),
        alpha_hat: a.density()?,
        nondegenerate,
        degenerate: a.len() as u64,
        c_hat,
        wall_ms: None,
    })
}

/// Visit every `(x, s)`, `x ∈ A`, `s ∈ Z_m`, with `x + s e_j ∈ A (mod m)` for
/// all `j`. Points must already be residues mod `m`.
fn cyclic_corners(points: &[Vec<u64>], m: u64, mut visit: impl FnMut(&[u64], u64)) {
    let set: HashSet<&[u64]> = points.iter().map(Vec::as_slice).collect();
    let lines = lines(points);
    for x in points {
        let mut y = x.clone();
        for &first in &lines[&x[1..]] {
            let s = (first + m - x[0]) % m;
            let ok = (1..x.len()).all(|j| {
                y[j] = (x[j] + s) % m;
                let hit = set.contains(y.as_slice());
                y[j] = x[j];
                hit
            });
            if ok {
                visit(x, s);
            }
        }
    }
}

/// The `d+1` face functions of the corner system: `f^{(d+1)} = 1_A` on `[d]`
/// and, for `j ≤ d`, `f^{(j)}(x) = 1_A(p)·ν(p_j)` on `[d+1]∖{j}` where `p`
/// agrees with `x` off `j` and `p_j = x_{d+1} − Σ_{i≠j} x_i`.
pub fn corner_face_functions(a: &PrimePointSet, measure: &Measure) -> Result<Vec<GridFunction>> {
    let m = measure.n();
    let d = a.d;
    check_residues(a, m)?;
    let len = m.pow(d as u32);
    let mut tables = vec![vec![0.0; len]; d + 1];
    let index = |coords: &mut dyn Iterator<Item = u64>| coords.fold(0usize, |acc, c| acc * m + c as usize);
    for p in &a.points {
        let sum = p.iter().sum::<u64>() % m as u64;
        tables[d][index(&mut p.iter().copied())] = 1.0;
        for j in 0..d {
            let mut coords = p.iter().enumerate().filter(|&(i, _)| i != j).map(|(_, &c)| c).chain([sum]);
            tables[j][index(&mut coords)] = measure.values()[p[j] as usize];
        }
    }
    tables.into_iter().map(|t| GridFunction::new(d, m, t)).collect()
}

fn check_residues(a: &PrimePointSet, m: usize) -> Result<()> {
    if let Some(p) = a.points.iter().find(|p| p.iter().any(|&c| c >= m as u64)) {
        return domain(format!("point {p:?} does not fit below the measure modulus {m}"));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightedCornerCount {
    pub lambda_form: f64,
    pub enumeration: f64,
    pub difference: f64,
    pub relative_difference: f64,
    /// Cyclic corners `(x, s)` visited, `s = 0` included.
    pub cyclic_corners: u64,
}

/// Relative disagreement tolerated between the two evaluations.
pub const WEIGHTED_COUNT_TOL: f64 = 1e-9;

/// `Λ` for the corner system and the face functions of `A`, both through
/// [`lambda_form`] and as `N^{-(d+1)} Σ_{(x,s)} ∏_j ν(x_j) ν(x_j + s)` over
/// cyclic corners.
pub fn weighted_corner_count(a: &PrimePointSet, measure: &Measure) -> Result<WeightedCornerCount> {
    if a.d < 2 {
        return domain("corner weight system needs d >= 2");
    }
    let m = measure.n();
    let ws = corner_weight_system(a.d, measure.clone())?;
    let fs = corner_face_functions(a, measure)?;
    let via_lambda = lambda_form(&fs, &ws)?;
    let nu = measure.values();
    let mut terms = Vec::new();
    cyclic_corners(&a.points, m as u64, |x, s| {
        terms.push(x.iter().map(|&c| nu[c as usize] * nu[((c + s) % m as u64) as usize]).product());
    });
    let via_corners = par::pairwise_sum(&terms) / (m as f64).powi(a.d as i32 + 1);
    let difference = via_lambda - via_corners;
    let scale = via_lambda.abs().max(via_corners.abs());
    let relative_difference = if scale == 0.0 { 0.0 } else { difference.abs() / scale };
    if relative_difference > WEIGHTED_COUNT_TOL {
        return Err(Error::Consistency(format!(
            "weighted corner count disagrees: lambda form {via_lambda:e}, enumeration {via_corners:e}"
        )));
    }
    Ok(WeightedCornerCount {
        lambda_form: via_lambda,
        enumeration: via_corners,
        difference,
        relative_difference,
        cyclic_corners: terms.len() as u64,
    })
}

/// Defaults for the reduction window; `δ₂ − δ₁ ≤ 1/2` keeps every corner
/// gap inside `[−N′/2, N′/2]`.
pub const REDUCTION_DELTA1: f64 = 0.05;
pub const REDUCTION_DELTA2: f64 = 0.5;
pub const REDUCTION_SLACK: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityCertificate {
    /// `φ(W)^d`.
    pub classes: u64,
    /// Points of `A` with every coordinate a unit mod `W`.
    pub unit_points: u64,
    pub best_count: u64,
    pub mean_count: f64,
    /// `best_count · classes ≥ unit_points`, in integers.
    pub best_at_least_mean: bool,
    /// `α N^d / ((log N)^d φ(W)^d)` with `α = |A| / π(N)^d`.
    pub pigeonhole_bound: f64,
    pub meets_pigeonhole_bound: bool,
    /// `|A′| / |[δ₁N′, δ₂N′] ∩ Z|^d`.
    pub reduced_density: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReductionResult {
    pub d: usize,
    #[serde(rename = "N")]
    pub n: u64,
    pub omega_cutoff: u64,
    #[serde(rename = "W")]
    pub w: u64,
    /// `None` when no point of `A` has unit residues.
    pub b: Option<Vec<u64>>,
    #[serde(rename = "N_prime")]
    pub n_prime: u64,
    pub delta1: f64,
    pub delta2: f64,
    pub slack: f64,
    #[serde(skip)]
    pub a_b: Vec<Vec<u64>>,
    #[serde(skip)]
    pub a_prime: Vec<Vec<u64>>,
    pub a_b_size: usize,
    pub a_prime_size: usize,
    pub certificate: DensityCertificate,
}

/// Pigeonhole over residue classes `b ∈ (Z_W^×)^d`, then
/// `A′ = {n : Wn + b ∈ A} ∩ [δ₁N′, δ₂N′]^d`.
pub fn wtrick_reduce(a: &PrimePointSet, omega_cutoff: u64, deltas: (f64, f64), slack: f64) -> Result<ReductionResult> {
    let (delta1, delta2) = deltas;
    if !(delta1 > 0.0 && delta1 < delta2 && delta2 <= 1.0) {
        return domain(format!("delta window must satisfy 0 < delta1 < delta2 <= 1, got ({delta1}, {delta2})"));
    }
    if delta2 - delta1 > 0.5 {
        return domain(format!("delta window wider than 1/2 allows wrap-around: ({delta1}, {delta2})"));
    }
    if !(slack > 0.0 && slack.is_finite()) {
        return domain(format!("slack delta must be a positive real, got {slack}"));
    }
    if omega_cutoff > 47 {
        return domain(format!("omega_cutoff {omega_cutoff} overflows W"));
    }
    let d = a.d;
    let w = primorial(omega_cutoff);
    let units: Vec<u64> = (0..w).filter(|&r| gcd(r, w) == 1).collect();
    let phi = euler_phi(w);
    let classes = phi.pow(d as u32);
    let unit_pos: HashMap<u64, u64> = units.iter().enumerate().map(|(i, &r)| (r, i as u64)).collect();
    let mut counts = vec![0u64; classes as usize];
    let mut unit_points = 0u64;
    for p in &a.points {
        let class = p.iter().try_fold(0u64, |acc, &c| unit_pos.get(&(c % w)).map(|&i| acc * phi + i));
        if let Some(c) = class {
            counts[c as usize] += 1;
            unit_points += 1;
        }
    }
    // First maximum in class order is the lexicographically least b.
    let best = counts.iter().enumerate().fold(None, |best: Option<(usize, u64)>, (i, &c)| match best {
        Some((_, bc)) if bc >= c => best,
        _ if c == 0 => best,
        _ => Some((i, c)),
    });
    let nf = a.n as f64;
    let target = ((1.0 + slack) * nf / w as f64 / delta2).ceil() as u64;
    let mut n_prime = next_prime(target.max(2));
    while (delta1 * n_prime as f64).ceil() > (delta2 * n_prime as f64).floor() {
        n_prime = next_prime(n_prime + 1);
    }
    let lo = delta1 * n_prime as f64;
    let hi = delta2 * n_prime as f64;
    let (b, a_b, best_count) = match best {
        None => (None, Vec::new(), 0),
        Some((idx, count)) => {
            let mut b = vec![0u64; d];
            let mut rest = idx as u64;
            for k in (0..d).rev() {
                b[k] = units[(rest % phi) as usize];
                rest /= phi;
            }
            let a_b: Vec<Vec<u64>> = a
                .points
                .iter()
                .filter(|p| p.iter().zip(&b).all(|(&c, &r)| c % w == r))
                .map(|p| p.iter().zip(&b).map(|(&c, &r)| (c - r) / w).collect())
                .collect();
            (Some(b), a_b, count)
        }
    };
    let a_prime: Vec<Vec<u64>> = a_b
        .iter()
        .filter(|p| p.iter().all(|&c| lo <= c as f64 && c as f64 <= hi))
        .cloned()
        .collect();
    let window_len = (hi.floor() - lo.ceil() + 1.0).max(0.0);
    let alpha = a.density()?;
    let pigeonhole_bound = if a.n < 2 {
        0.0
    } else {
        alpha * nf.powi(d as i32) / (nf.ln().powi(d as i32) * (phi as f64).powi(d as i32))
    };
    let certificate = DensityCertificate {
        classes,
        unit_points,
        best_count,
        mean_count: unit_points as f64 / classes as f64,
        best_at_least_mean: best_count as u128 * classes as u128 >= unit_points as u128,
        pigeonhole_bound,
        meets_pigeonhole_bound: best_count as f64 >= pigeonhole_bound,
        reduced_density: if window_len > 0.0 { a_prime.len() as f64 / window_len.powi(d as i32) } else { 0.0 },
    };
    Ok(ReductionResult {
        d,
        n: a.n,
        omega_cutoff,
        w,
        b,
        n_prime,
        delta1,
        delta2,
        slack,
        a_b_size: a_b.len(),
        a_prime_size: a_prime.len(),
        a_b,
        a_prime,
        certificate,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PullbackReport {
    pub pass: bool,
    pub points_checked: u64,
    pub corners_checked: u64,
    pub violations: Vec<String>,
}

const MAX_LISTED_VIOLATIONS: usize = 20;

/// Every point of `A′` lands in `A` under `x ↦ Wx + b`, and every cyclic
/// corner of `A′` in `Z_{N′}` is an honest integer corner whose image is a
/// corner of `A` with gap `Wt`.
pub fn corner_pullback_check(red: &ReductionResult, a: &PrimePointSet) -> PullbackReport {
    let mut violations = Vec::new();
    let mut total_violations = 0usize;
    let mut note = |v: &mut Vec<String>, msg: String| {
        total_violations += 1;
        if v.len() < MAX_LISTED_VIOLATIONS {
            v.push(msg);
        }
    };
    let Some(b) = red.b.as_ref() else {
        return PullbackReport { pass: red.a_prime.is_empty(), points_checked: 0, corners_checked: 0, violations };
    };
    let set_a: HashSet<&[u64]> = a.points.iter().map(Vec::as_slice).collect();
    let set_prime: HashSet<&[u64]> = red.a_prime.iter().map(Vec::as_slice).collect();
    let image = |x: &[u64]| -> Vec<u64> { x.iter().zip(b).map(|(&c, &r)| red.w * c + r).collect() };
    for x in &red.a_prime {
        if !set_a.contains(image(x).as_slice()) {
            note(&mut violations, format!("point {x:?} maps to {:?} outside A", image(x)));
        }
    }
    let m = red.n_prime;
    let residues: Vec<Vec<u64>> = red.a_prime.iter().map(|p| p.iter().map(|&c| c % m).collect()).collect();
    let mut corners = 0u64;
    cyclic_corners(&residues, m, |x, s| {
        corners += 1;
        let t = if s <= m / 2 { s as i64 } else { s as i64 - m as i64 };
        for j in 0..x.len() {
            let mut y: Vec<i64> = x.iter().map(|&c| c as i64).collect();
            y[j] += t;
            let lifted: Option<Vec<u64>> = y.iter().map(|&c| u64::try_from(c).ok()).collect();
            match lifted {
                Some(y) if set_prime.contains(y.as_slice()) => {
                    if !set_a.contains(image(&y).as_slice()) {
                        note(&mut violations, format!("corner vertex {y:?} maps outside A"));
                    }
                }
                _ => note(&mut violations, format!("cyclic corner at {x:?} with gap {s} wraps around")),
            }
        }
    });
    PullbackReport {
        pass: total_violations == 0,
        points_checked: red.a_prime.len() as u64,
        corners_checked: corners,
        violations,
    }
}

/// One timed [`CornerReport`] per modulus in the grid (`d = 2`).
pub fn density_scan(d: usize, grid: &[u64], rule: SubsetRule) -> Result<Vec<CornerReport>> {
    if d != 2 {
        return domain(format!("density scan supports d = 2, got {d}"));
    }
    grid.iter()
        .map(|&n| {
            if n > 100_000 {
                return domain(format!("N = {n} exceeds the exhaustive-count limit 10^5"));
            }
            let a = PrimePointSet::generate(d, n, rule, None)?;
            let start = Instant::now();
            let mut report = enumerate_corners(&a)?;
            report.wall_ms = Some(start.elapsed().as_secs_f64() * 1e3);
            Ok(report)
        })
        .collect()
}

pub const CSV_COLUMNS: [&str; 7] = ["N", "d", "alpha_hat", "nondegenerate", "degenerate", "c_hat", "wall_ms"];

/// Reports as CSV with the fixed column order of [`CSV_COLUMNS`].
pub fn write_reports_csv<W: Write>(reports: &[CornerReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS).map_err(csv_err)?;
    for r in reports {
        w.write_record([
            r.n.to_string(),
            r.d.to_string(),
            r.alpha_hat.to_string(),
            r.nondegenerate.to_string(),
            r.degenerate.to_string(),
            r.c_hat.to_string(),
            r.wall_ms.map(|v| format!("{v:.3}")).unwrap_or_default(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}
