//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary so every criterion is reported even when an
//! earlier one fails. The process exits nonzero on failures only when
//! `ACCEPTANCE_STRICT=1` is set.

mod common;

use std::collections::HashSet;
use std::time::Instant;

use gowers_lab::arithmetic::{
    goldston_yildirim, green_tao_measure, gy_progression, make_wtrick,
    mean_modified_von_mangoldt, next_prime, sieve_primes, GreenTaoMeasure, MeasureParams,
    DEFAULT_DELTA1, DEFAULT_DELTA2,
};
use gowers_lab::corners::{
    corner_face_functions, corner_pullback_check, density_scan, enumerate_corners_generic,
    weighted_corner_count, wtrick_reduce, PrimePointSet, SubsetRule, REDUCTION_DELTA1, REDUCTION_DELTA2,
    REDUCTION_SLACK,
};
use gowers_lab::gowers::{box_norm, dual_function, gowers_average, gowers_inner_product, lambda_form, BoxNormContext};
use gowers_lab::grid::{GridFunction, IndexSet};
use gowers_lab::rng;
use gowers_lab::verification::{
    check_gcs_trials, check_linear_forms, check_norm_axioms, check_omega_mass, check_von_neumann, duality_error,
    nonincreasing_within, spread_ratio, trial_functions, FormsFamily, SampleMode,
};
use gowers_lab::weights::{corner_weight_system, Measure, WeightSystem};

// Tolerances and budgets, pinned.
const SIEVE_TOL: f64 = 1e-12;
const MEAN_TOL: f64 = 0.05;
const KERNEL_TOL: f64 = 1e-9;
const EXACT_TOL: f64 = 1e-9;
const LF_MAX_DELTA: f64 = 0.5;
const LF_SAMPLES: u64 = 10_000_000;
const VN_SLACK: f64 = 0.2;
const OMEGA_SPREAD: f64 = 2.0;
const CORNER_TOL: f64 = 1e-9;
const SCAN_SPREAD: f64 = 2.0;
const SEED: u64 = 20_240_917;

struct Outcome {
    pass: bool,
    detail: String,
}

fn run(id: u32, name: &str, budget_s: f64, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = f();
    let secs = start.elapsed().as_secs_f64();
    let pass = out.pass && secs < budget_s;
    println!(
        "criterion {id:>2} {}: {name}: {} [{secs:.1} s of {budget_s:.0} s]",
        if pass { "PASS" } else { "FAIL" },
        out.detail
    );
    pass
}

fn is_prime_trial(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut k = 2;
    while k * k <= n {
        if n % k == 0 {
            return false;
        }
        k += 1;
    }
    true
}

/// `Λ_R(n)` from an explicit factorisation: sum over square-free divisors.
fn lambda_r_oracle(n: u64, r: f64) -> f64 {
    let mut primes = Vec::new();
    let mut m = n;
    let mut p = 2;
    while p * p <= m {
        if m % p == 0 {
            primes.push(p);
            while m % p == 0 {
                m /= p;
            }
        }
        p += 1;
    }
    if m > 1 {
        primes.push(m);
    }
    let mut terms: Vec<(u64, f64)> = Vec::new();
    for mask in 0u32..1 << primes.len() {
        let mut d = 1u64;
        for (i, &q) in primes.iter().enumerate() {
            if mask >> i & 1 == 1 {
                d = d.saturating_mul(q);
            }
        }
        if (d as f64) <= r {
            let sign = if mask.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            terms.push((d, sign * (r / d as f64).ln()));
        }
    }
    terms.sort_by_key(|t| t.0);
    terms.iter().map(|t| t.1).sum()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

fn c1_sieve() -> Outcome {
    let table = sieve_primes(1_000_000).unwrap();
    let sieve_count = table.count_up_to(1_000_000);
    let oracle_count = (0..=1_000_000u64).filter(|&n| is_prime_trial(n)).count();
    let wt = make_wtrick(7, &[1]).unwrap();
    let (len, r) = (10_000usize, 50.0);
    let prog = gy_progression(len, &wt, 0, r).unwrap();
    let mut worst = 0.0f64;
    let mut ok = true;
    for (n, &v) in prog.iter().enumerate() {
        let m = wt.w * n as u64 + 1;
        let pointwise = goldston_yildirim(m, r).unwrap();
        let oracle = lambda_r_oracle(m, r);
        ok &= close(v, pointwise, SIEVE_TOL) && close(v, oracle, SIEVE_TOL);
        worst = worst.max((v - oracle).abs() / v.abs().max(1.0));
    }
    Outcome {
        pass: ok && sieve_count == 78_498 && oracle_count == 78_498,
        detail: format!("pi(10^6) sieve {sieve_count}, trial division {oracle_count}; max gy deviation {worst:.1e}"),
    }
}

fn c2_normalization() -> Outcome {
    let wt = make_wtrick(7, &[1]).unwrap();
    let mean = mean_modified_von_mangoldt(100_000, &wt, 0).unwrap();
    // Independent: trial-division primality along 210 n + 1.
    let density = 48.0 / 210.0;
    let oracle: f64 = (1..=100_000u64)
        .map(|n| 210 * n + 1)
        .filter(|&m| is_prime_trial(m))
        .map(|m| density * (m as f64).ln())
        .sum::<f64>()
        / 100_000.0;
    Outcome {
        pass: (mean - 1.0).abs() <= MEAN_TOL && (mean - oracle).abs() < 1e-9,
        detail: format!("mean {mean:.5} (oracle {oracle:.5}), tolerance {MEAN_TOL}"),
    }
}

fn c3_minorization() -> Outcome {
    let n = next_prime(10_000);
    let p = MeasureParams::with_defaults(n, 2).unwrap();
    let wt = make_wtrick(7, &[1]).unwrap();
    let nu = green_tao_measure(&p, &wt, 0).unwrap();
    let violations = nu.minorization_violations().unwrap();
    let c = p.minorization_constant();
    let mut checked = 0;
    let mut oracle_bad = 0;
    for k in 0..n {
        if p.in_window(k) {
            checked += 1;
            let m = wt.w * k + 1;
            let bar = if is_prime_trial(m) { density(&wt) * (m as f64).ln() } else { 0.0 };
            if nu.values[k as usize] < c * bar {
                oracle_bad += 1;
            }
        }
    }
    Outcome {
        pass: violations.is_empty() && oracle_bad == 0,
        detail: format!("N = {n}, R = {:.3}, {checked} window points, {} violations", p.r, violations.len()),
    }
}

fn density(wt: &gowers_lab::arithmetic::WTrickParams) -> f64 {
    wt.phi_w() as f64 / wt.w as f64
}

fn random_measure(n: usize, seed: u64, stream: u64) -> Measure {
    let mut r = rng::stream(seed, stream);
    Measure::from_values(rng::uniform_vec(&mut r, n, 0.0, 2.0)).unwrap()
}

fn kernel_instance(ws: &WeightSystem, face: IndexSet, seed: u64, trial: u64) -> Result<f64, String> {
    let (d, n) = (ws.d(), ws.n());
    let ctx = BoxNormContext::new(ws, face).unwrap();
    let fs = trial_functions(d, n, (1 << d) + 1, seed, trial).unwrap();
    let f = &fs[0];
    let mut worst = 0.0f64;
    let mut check = |what: &str, got: f64, want: f64, scale: f64| -> Result<(), String> {
        let e = common::rel_err(got, want, scale);
        worst = worst.max(e);
        if e < KERNEL_TOL {
            Ok(())
        } else {
            Err(format!("{what} trial {trial}: {got} vs {want}"))
        }
    };
    let (want, scale) = common::gowers(&vec![f.clone(); 1 << d], ws, face);
    let got = box_norm(f, &ctx).unwrap();
    check("box_norm", got, want.max(0.0).powf(1.0 / (1 << d) as f64), 0.0)?;
    check("gowers average", gowers_average(f, &ctx).unwrap(), want, scale)?;
    let (want, scale) = common::gowers(&fs[1..], ws, face);
    check("gowers_inner_product", gowers_inner_product(&fs[1..], &ctx).unwrap(), want, scale)?;
    let dual = dual_function(f, &ctx).unwrap();
    let want = common::dual(f, ws, face);
    let scale = want.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for (a, b) in dual.values().iter().zip(&want) {
        check("dual_function", *a, *b, scale)?;
    }
    let lam: Vec<GridFunction> = fs[..=d].to_vec();
    let (want, scale) = common::lambda(&lam, ws);
    check("lambda_form", lambda_form(&lam, ws).unwrap(), want, scale)?;
    Ok(worst)
}

fn c4_kernels() -> Outcome {
    let mut worst = 0.0f64;
    for (d, n, count) in [(2usize, 24usize, 100u64), (3, 8, 10)] {
        for trial in 0..count {
            let ws = corner_weight_system(d, random_measure(n, SEED, 1000 + trial)).unwrap();
            let face = IndexSet::without(d + 1, 1 + (trial as usize % (d + 1)));
            match kernel_instance(&ws, face, SEED + d as u64, trial) {
                Ok(e) => worst = worst.max(e),
                Err(msg) => return Outcome { pass: false, detail: msg },
            }
        }
    }
    Outcome { pass: true, detail: format!("110 instances, max relative error {worst:.1e}") }
}

const C5_N: usize = 64;
const C5_TRIALS: usize = 100;

fn c5_contexts() -> Vec<BoxNormContext> {
    let ws = corner_weight_system(2, random_measure(C5_N, SEED, 5)).unwrap();
    (1..=3).map(|j| BoxNormContext::new(&ws, IndexSet::without(3, j)).unwrap()).collect()
}

fn c5_inequalities() -> Outcome {
    let mut worst_gcs = f64::INFINITY;
    let mut worst_tri = f64::INFINITY;
    let mut worst_hom = 0.0f64;
    let mut pass = true;
    for ctx in c5_contexts() {
        let gcs = check_gcs_trials(&ctx, C5_TRIALS, SEED).unwrap();
        let axioms = check_norm_axioms(&ctx, C5_TRIALS, SEED).unwrap();
        let margin = gcs.get_f64("min_relative_margin").unwrap();
        let tri = axioms.get_f64("min_relative_triangle_slack").unwrap();
        let hom = axioms.get_f64("max_relative_homogeneity_error").unwrap();
        pass &= margin >= -EXACT_TOL && tri >= -EXACT_TOL && hom <= EXACT_TOL;
        worst_gcs = worst_gcs.min(margin);
        worst_tri = worst_tri.min(tri);
        worst_hom = worst_hom.max(hom);
    }
    Outcome {
        pass,
        detail: format!(
            "3 faces x {C5_TRIALS} trials; min GCS margin {worst_gcs:.3e}, min triangle slack {worst_tri:.3e}, max homogeneity error {worst_hom:.1e}"
        ),
    }
}

fn c6_duality() -> Outcome {
    let mut worst = 0.0f64;
    let mut checked = 0;
    for ctx in c5_contexts() {
        for t in 0..C5_TRIALS as u64 {
            for f in trial_functions(2, C5_N, 4, SEED, t).unwrap() {
                worst = worst.max(duality_error(&f, &ctx).unwrap());
                checked += 1;
            }
        }
    }
    Outcome {
        pass: worst <= EXACT_TOL,
        detail: format!("{checked} functions, max relative error {worst:.1e}"),
    }
}

fn gt_measure(n: u64, d: usize, omega: u64, b: u64) -> GreenTaoMeasure {
    let p = MeasureParams::with_defaults(n, d).unwrap();
    green_tao_measure(&p, &make_wtrick(omega, &[b]).unwrap(), 0).unwrap()
}

fn c7_linear_forms() -> Outcome {
    let mut deltas = Vec::new();
    let mut parts = Vec::new();
    for n in [next_prime(10_000), next_prime(100_000)] {
        let nu = gt_measure(n, 2, 7, 1);
        let mode = SampleMode::Sampled { count: LF_SAMPLES, seed: SEED };
        let r = check_linear_forms(&nu, &FormsFamily::corner_triple(), mode).unwrap();
        let delta = r.get_f64("delta").unwrap();
        parts.push(format!("N={n} R={:.2}: delta {delta:.4} (se {:.1e})", nu.params.r, r.get_f64("stderr").unwrap()));
        deltas.push(delta);
    }
    Outcome {
        pass: deltas[1] < deltas[0] && deltas[1] <= LF_MAX_DELTA,
        detail: format!("{}; threshold {LF_MAX_DELTA}", parts.join(", ")),
    }
}

/// Measure on `Z_N` with `W = 1`, so integer coordinates are residues directly.
fn corner_measure(n: u64) -> Measure {
    Measure::from_green_tao(&gt_measure(n, 2, 1, 0))
}

fn c8_von_neumann() -> Outcome {
    let mut ratios = Vec::new();
    let mut parts = Vec::new();
    for req in [128u64, 256, 512] {
        let n = next_prime(req);
        let m = corner_measure(n);
        let ws = corner_weight_system(2, m.clone()).unwrap();
        let rule = SubsetRule::Random { alpha: 0.5, seed: SEED };
        let a = PrimePointSet::generate(2, n, rule, Some((DEFAULT_DELTA1, DEFAULT_DELTA2))).unwrap();
        let fs = corner_face_functions(&a, &m).unwrap();
        let r = check_von_neumann(&fs, &ws).unwrap();
        let ratio = r.get_f64("ratio").unwrap_or(f64::INFINITY);
        parts.push(format!("N={n}: {ratio:.4}"));
        ratios.push(ratio);
    }
    Outcome {
        pass: ratios.iter().all(|r| r.is_finite()) && nonincreasing_within(&ratios, VN_SLACK),
        detail: format!("ratio {}; slack {VN_SLACK}", parts.join(", ")),
    }
}

fn c9_omega() -> Outcome {
    let n = next_prime(256);
    let m = corner_measure(n);
    let ws = corner_weight_system(2, m.clone()).unwrap();
    let a = PrimePointSet::generate(2, n, SubsetRule::Full, Some((DEFAULT_DELTA1, DEFAULT_DELTA2))).unwrap();
    let fs = corner_face_functions(&a, &m).unwrap();
    let ctx = BoxNormContext::new(&ws, IndexSet::without(3, 1)).unwrap();
    let r = check_omega_mass(&fs[0], &ctx, &[2.0, 4.0, 8.0, 16.0], OMEGA_SPREAD).unwrap();
    let cs: Vec<f64> = r.quantities["c_of_t"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    Outcome {
        pass: spread_ratio(&cs) < OMEGA_SPREAD,
        detail: format!(
            "N={n}: C(T) {cs:?}, max|Df| {:.3e}, Markov constant {:.3e}; spread bound {OMEGA_SPREAD}",
            r.get_f64("dual_max").unwrap(),
            r.get_f64("markov_constant").unwrap()
        ),
    }
}

fn c10_corner_identity() -> Outcome {
    let n = next_prime(512);
    let m = corner_measure(n);
    let a = PrimePointSet::generate(2, n, SubsetRule::Full, Some((DEFAULT_DELTA1, DEFAULT_DELTA2))).unwrap();
    match weighted_corner_count(&a, &m) {
        Ok(w) => Outcome {
            pass: w.relative_difference <= CORNER_TOL && w.lambda_form > 0.0,
            detail: format!(
                "N={n}, |A|={}: lambda form {:.12e}, enumeration {:.12e}, relative difference {:.1e}",
                a.len(),
                w.lambda_form,
                w.enumeration,
                w.relative_difference
            ),
        },
        Err(e) => Outcome { pass: false, detail: e.to_string() },
    }
}

fn c11_trend() -> Outcome {
    let grid = [2000u64, 4000, 8000];
    let full = density_scan(2, &grid, SubsetRule::Full).unwrap();
    let half = density_scan(2, &grid, SubsetRule::Random { alpha: 0.5, seed: SEED }).unwrap();
    let small = PrimePointSet::generate(2, 2000, SubsetRule::Full, None).unwrap();
    let cross = enumerate_corners_generic(&small).unwrap().nondegenerate == full[0].nondegenerate;
    let c_full: Vec<f64> = full.iter().map(|r| r.c_hat).collect();
    let c_half: Vec<f64> = half.iter().map(|r| r.c_hat).collect();
    let spread = spread_ratio(&c_full);
    Outcome {
        pass: cross && c_full.iter().all(|&c| c > 0.0) && spread < SCAN_SPREAD && c_half.iter().all(|&c| c > 0.0),
        detail: format!("full c_hat {c_full:.4?} (spread {spread:.3}), alpha=1/2 c_hat {c_half:.4?}"),
    }
}

fn c12_reduction() -> Outcome {
    let a = PrimePointSet::generate(2, 10_000, SubsetRule::Full, None).unwrap();
    let red = wtrick_reduce(&a, 5, (REDUCTION_DELTA1, REDUCTION_DELTA2), REDUCTION_SLACK).unwrap();
    let pull = corner_pullback_check(&red, &a);
    // Independent class census.
    let units: Vec<u64> = (0..30).filter(|r| [2, 3, 5].iter().all(|p| r % p != 0)).collect();
    let mut best = 0u64;
    let mut total = 0u64;
    for &b1 in &units {
        for &b2 in &units {
            let c = a.points().iter().filter(|p| p[0] % 30 == b1 && p[1] % 30 == b2).count() as u64;
            best = best.max(c);
            total += c;
        }
    }
    let classes = (units.len() * units.len()) as u64;
    let images: HashSet<Vec<u64>> = red
        .a_prime
        .iter()
        .map(|x| x.iter().zip(red.b.as_ref().unwrap()).map(|(&c, &b)| 30 * c + b).collect())
        .collect();
    let all_in_a = images.iter().all(|p| a.points().binary_search(p).is_ok());
    let cert = &red.certificate;
    Outcome {
        pass: pull.pass
            && all_in_a
            && cert.best_at_least_mean
            && cert.best_count == best
            && best * classes >= total,
        detail: format!(
            "b={:?}, N'={}, |A'|={}, {} corners pulled back, best {} vs mean {:.1}",
            red.b.as_ref().unwrap(),
            red.n_prime,
            red.a_prime.len(),
            pull.corners_checked,
            cert.best_count,
            cert.mean_count
        ),
    }
}

fn main() {
    // Keep `cargo test -- <filter>` style invocations from tripping this binary.
    if std::env::args().skip(1).any(|a| a == "--list") {
        return;
    }
    let checks: Vec<(u32, &str, f64, fn() -> Outcome)> = vec![
        (1, "sieve exactness", 10.0, c1_sieve),
        (2, "von Mangoldt normalization", 30.0, c2_normalization),
        (3, "measure minorization", 10.0, c3_minorization),
        (4, "kernel/oracle equivalence", 60.0, c4_kernels),
        (5, "exact inequalities", 60.0, c5_inequalities),
        (6, "duality identity", 60.0, c6_duality),
        (7, "linear forms trend", 300.0, c7_linear_forms),
        (8, "von Neumann stability", 300.0, c8_von_neumann),
        (9, "Omega(T) mass bound", 120.0, c9_omega),
        (10, "corner identity", 120.0, c10_corner_identity),
        (11, "corner density trend", 600.0, c11_trend),
        (12, "reduction soundness", 120.0, c12_reduction),
    ];
    let mut failed = Vec::new();
    for (id, name, budget, f) in checks {
        if !run(id, name, budget, f) {
            failed.push(id);
        }
    }
    println!("acceptance: {} of 12 criteria pass; failing: {failed:?}", 12 - failed.len());
    if !failed.is_empty() && std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
