//! Prime and Möbius sieving, W-trick parameters, the modified von Mangoldt
//! function, Goldston–Yildirim truncated divisor sums and the Green–Tao
//! measure on `Z_N`.
//!
//! All logarithms are natural.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Exact primality table for `0..=limit`.
#[derive(Debug, Clone)]
pub struct PrimeTable {
    limit: u64,
    is_prime: Vec<bool>,
    primes: Vec<u64>,
}

impl PrimeTable {
    pub fn limit(&self) -> u64 {
        self.limit
    }

    /// Primality of `n`; `false` beyond the sieve limit is not a claim, so
    /// callers must stay within `limit`.
    pub fn is_prime(&self, n: u64) -> bool {
        n <= self.limit && self.is_prime[n as usize]
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    /// `π(x)` for `x ≤ limit`.
    pub fn count_up_to(&self, x: u64) -> usize {
        self.primes.partition_point(|&p| p <= x)
    }
}

/// Sieve of Eratosthenes up to `limit` inclusive.
pub fn sieve_primes(limit: u64) -> Result<PrimeTable> {
    if limit < 2 {
        return domain(format!("sieve limit must be at least 2, got {limit}"));
    }
    let n = limit as usize;
    let mut is_prime = vec![true; n + 1];
    is_prime[0] = false;
    is_prime[1] = false;
    let mut p = 2usize;
    while p * p <= n {
        if is_prime[p] {
            let mut m = p * p;
            while m <= n {
                is_prime[m] = false;
                m += p;
            }
        }
        p += 1;
    }
    let primes = is_prime
        .iter()
        .enumerate()
        .filter_map(|(i, &b)| b.then_some(i as u64))
        .collect();
    Ok(PrimeTable {
        limit,
        is_prime,
        primes,
    })
}

/// `μ(n)` for `n in 0..=limit`, with the placeholder `μ(0) = 0`.
///
/// Linear sieve: every composite is crossed out exactly once by its least
/// prime factor.
pub fn mobius(limit: u64) -> Result<Vec<i8>> {
    if limit < 1 {
        return domain("mobius table needs limit >= 1");
    }
    let n = limit as usize;
    let mut mu = vec![0i8; n + 1];
    let mut composite = vec![false; n + 1];
    let mut primes: Vec<usize> = Vec::new();
    mu[1] = 1;
    for i in 2..=n {
        if !composite[i] {
            primes.push(i);
            mu[i] = -1;
        }
        for &p in &primes {
            let m = i * p;
            if m > n {
                break;
            }
            composite[m] = true;
            if i % p == 0 {
                mu[m] = 0;
                break;
            }
            mu[m] = -mu[i];
        }
    }
    Ok(mu)
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Inverse of `a` modulo `m` (`m ≥ 1`), if it exists.
pub fn mod_inverse(a: u64, m: u64) -> Option<u64> {
    if m == 1 {
        return Some(0);
    }
    let (mut old_r, mut r) = (a as i128 % m as i128, m as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    if old_r != 1 {
        return None;
    }
    Some(old_s.rem_euclid(m as i128) as u64)
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller–Rabin for the full `u64` range.
pub fn is_prime_u64(n: u64) -> bool {
    const WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &p in &WITNESSES {
        if n % p == 0 {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for &a in &WITNESSES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Smallest prime `≥ n`.
pub fn next_prime(n: u64) -> u64 {
    let mut m = n.max(2);
    while !is_prime_u64(m) {
        m += 1;
    }
    m
}

/// Distinct prime factors by trial division.
pub fn distinct_prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p * p <= n {
        if n % p == 0 {
            out.push(p);
            while n % p == 0 {
                n /= p;
            }
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// Euler's totient.
pub fn euler_phi(n: u64) -> u64 {
    distinct_prime_factors(n)
        .into_iter()
        .fold(n, |acc, p| acc / p * (p - 1))
}

/// W-trick data: `W = ∏_{p ≤ omega_cutoff} p` and one residue per coordinate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WTrickParams {
    pub omega_cutoff: u64,
    pub w: u64,
    pub b: Vec<u64>,
}

impl WTrickParams {
    pub fn phi_w(&self) -> u64 {
        euler_phi(self.w)
    }

    /// `φ(W)/W`.
    pub fn density(&self) -> f64 {
        self.phi_w() as f64 / self.w as f64
    }

    pub fn residue(&self, i: usize) -> Result<u64> {
        self.b.get(i).copied().ok_or_else(|| {
            Error::Domain(format!(
                "coordinate {i} out of range for {} residues",
                self.b.len()
            ))
        })
    }

    /// The one-residue parameter set for coordinate `i`.
    pub fn single(&self, i: usize) -> Result<WTrickParams> {
        Ok(WTrickParams {
            omega_cutoff: self.omega_cutoff,
            w: self.w,
            b: vec![self.residue(i)?],
        })
    }
}

/// Product of the primes `≤ omega_cutoff` (1 when there are none).
pub fn primorial(omega_cutoff: u64) -> u64 {
    (2..=omega_cutoff)
        .filter(|&p| is_prime_u64(p))
        .fold(1u64, |acc, p| acc.checked_mul(p).expect("primorial overflows u64"))
}

pub fn make_wtrick(omega_cutoff: u64, b: &[u64]) -> Result<WTrickParams> {
    if omega_cutoff > 47 {
        return domain(format!(
            "omega_cutoff {omega_cutoff} too large: W would overflow 64 bits"
        ));
    }
    let w = primorial(omega_cutoff);
    for (coordinate, &residue) in b.iter().enumerate() {
        let g = gcd(residue, w);
        if g != 1 {
            return Err(Error::InvalidResidue {
                coordinate,
                residue,
                w,
                gcd: g,
            });
        }
    }
    Ok(WTrickParams {
        omega_cutoff,
        w,
        b: b.to_vec(),
    })
}

/// `Λ̄_b(n) = (φ(W)/W)·log(Wn+b_i)` when `Wn+b_i` is prime, else 0.
pub fn modified_von_mangoldt(n: u64, wt: &WTrickParams, i: usize) -> Result<f64> {
    let m = wt.w * n + wt.residue(i)?;
    Ok(if is_prime_u64(m) {
        wt.density() * (m as f64).ln()
    } else {
        0.0
    })
}

/// `Λ̄_b(n)` for `n in 0..len`, using one sieve up to `W(len-1)+b_i`.
pub fn modified_von_mangoldt_progression(len: usize, wt: &WTrickParams, i: usize) -> Result<Vec<f64>> {
    let b = wt.residue(i)?;
    if len == 0 {
        return Ok(Vec::new());
    }
    let top = wt.w * (len as u64 - 1) + b;
    let table = sieve_primes(top.max(2))?;
    let dens = wt.density();
    Ok((0..len as u64)
        .map(|n| {
            let m = wt.w * n + b;
            if table.is_prime(m) {
                dens * (m as f64).ln()
            } else {
                0.0
            }
        })
        .collect())
}

/// `E_{1 ≤ n ≤ N} Λ̄_b(n)`.
pub fn mean_modified_von_mangoldt(big_n: usize, wt: &WTrickParams, i: usize) -> Result<f64> {
    if big_n == 0 {
        return domain("mean over an empty range");
    }
    let values = modified_von_mangoldt_progression(big_n + 1, wt, i)?;
    Ok(crate::par::pairwise_sum(&values[1..]) / big_n as f64)
}

fn check_truncation(r: f64) -> Result<()> {
    if !(r.is_finite() && r > 1.0) {
        return domain(format!("truncation level R must be a finite real > 1, got {r}"));
    }
    Ok(())
}

/// `Λ_R(n) = Σ_{d | n, d ≤ R} μ(d) log(R/d)`.
///
/// Terms are summed in ascending order of `d`. For `n = 0` every `d` divides
/// `n`, so the sum runs over all square-free `d ≤ R`.
pub fn goldston_yildirim(n: u64, r: f64) -> Result<f64> {
    check_truncation(r)?;
    let mut divisors: Vec<(u64, i8)> = if n == 0 {
        let mu = mobius(r.floor() as u64)?;
        mu.iter()
            .enumerate()
            .skip(1)
            .filter(|(_, &m)| m != 0)
            .map(|(d, &m)| (d as u64, m))
            .collect()
    } else {
        let mut divs = vec![(1u64, 1i8)];
        for p in distinct_prime_factors(n) {
            let extra: Vec<(u64, i8)> = divs
                .iter()
                .filter_map(|&(d, m)| {
                    let e = d.checked_mul(p)?;
                    ((e as f64) <= r).then_some((e, -m))
                })
                .collect();
            divs.extend(extra);
        }
        divs
    };
    divisors.sort_unstable();
    Ok(divisors
        .into_iter()
        .filter(|&(d, _)| (d as f64) <= r)
        .map(|(d, m)| m as f64 * (r / d as f64).ln())
        .sum())
}

/// `Λ_R(Wn + b_i)` for `n in 0..len`.
///
/// Loops over square-free `d ≤ R` coprime to `W`, solves `Wn ≡ -b_i (mod d)`
/// and adds `μ(d) log(R/d)` along that residue class: `O(len · log R)`
/// instead of factorising every `Wn + b_i`. A `d` sharing a factor with `W`
/// never divides `Wn + b_i` because `gcd(b_i, W) = 1`.
pub fn gy_progression(len: usize, wt: &WTrickParams, i: usize, r: f64) -> Result<Vec<f64>> {
    check_truncation(r)?;
    let b = wt.residue(i)?;
    if r > (wt.w as f64) * len as f64 + b as f64 {
        return domain(format!(
            "R = {r} exceeds W·N + b = {}",
            wt.w as u128 * len as u128 + b as u128
        ));
    }
    let d_max = r.floor() as u64;
    let mu = mobius(d_max)?;
    let mut acc = vec![0.0f64; len];
    for d in 1..=d_max {
        let m = mu[d as usize];
        if m == 0 || gcd(d, wt.w) != 1 {
            continue;
        }
        let term = m as f64 * (r / d as f64).ln();
        let w_inv = mod_inverse(wt.w % d, d).expect("W invertible mod d");
        let start = mul_mod((d - b % d) % d, w_inv, d) as usize;
        let step = d as usize;
        let mut n = start;
        while n < len {
            acc[n] += term;
            n += step;
        }
    }
    Ok(acc)
}

/// Parameters of the Green–Tao measure on `Z_N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureParams {
    pub n: u64,
    pub r: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub d: usize,
}

pub const DEFAULT_DELTA1: f64 = 0.05;
pub const DEFAULT_DELTA2: f64 = 0.95;
pub const DEFAULT_OMEGA_CUTOFF: u64 = 7;

/// `max(N^{1/(d·2^{d+5})}, N^{1/10})`.
pub fn default_truncation(n: u64, d: usize) -> f64 {
    let nf = n as f64;
    let exponent = 1.0 / (d as f64 * 2f64.powi(d as i32 + 5));
    nf.powf(exponent).max(nf.powf(0.1))
}

impl MeasureParams {
    /// Validated parameters; `r = None` selects [`default_truncation`].
    pub fn new(n: u64, d: usize, r: Option<f64>, delta1: f64, delta2: f64) -> Result<Self> {
        if n < 2 {
            return domain(format!("modulus N must be at least 2, got {n}"));
        }
        if d == 0 {
            return domain("dimension d must be positive");
        }
        if !(delta1 > 0.0 && delta1 < delta2 && delta2 <= 1.0) {
            return domain(format!(
                "delta window must satisfy 0 < delta1 < delta2 <= 1, got ({delta1}, {delta2})"
            ));
        }
        let r = r.unwrap_or_else(|| default_truncation(n, d));
        check_truncation(r)?;
        Ok(MeasureParams {
            n,
            r,
            delta1,
            delta2,
            d,
        })
    }

    pub fn with_defaults(n: u64, d: usize) -> Result<Self> {
        Self::new(n, d, None, DEFAULT_DELTA1, DEFAULT_DELTA2)
    }

    pub fn in_window(&self, n: u64) -> bool {
        let x = n as f64;
        let nf = self.n as f64;
        self.delta1 * nf <= x && x <= self.delta2 * nf
    }

    /// `d^{-1} 2^{-d-6}`.
    pub fn minorization_constant(&self) -> f64 {
        1.0 / (self.d as f64 * 2f64.powi(self.d as i32 + 6))
    }
}

/// `ν(n) = (φ(W)/W)·Λ_R(Wn+b)²/log R` on the window `δ₁N ≤ n ≤ δ₂N`, zero
/// elsewhere.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GreenTaoMeasure {
    pub params: MeasureParams,
    pub wtrick: WTrickParams,
    pub values: Vec<f64>,
}

impl GreenTaoMeasure {
    pub fn n(&self) -> usize {
        self.params.n as usize
    }

    pub fn get(&self, n: u64) -> f64 {
        self.values[(n % self.params.n) as usize]
    }

    pub fn mean(&self) -> f64 {
        crate::par::pairwise_sum(&self.values) / self.values.len() as f64
    }

    /// In-window `n` with `ν(n) < d^{-1}2^{-d-6} Λ̄_b(n)`.
    pub fn minorization_violations(&self) -> Result<Vec<u64>> {
        let lambda_bar = modified_von_mangoldt_progression(self.n(), &self.wtrick, 0)?;
        let c = self.params.minorization_constant();
        Ok((0..self.params.n)
            .filter(|&n| self.params.in_window(n))
            .filter(|&n| self.values[n as usize] < c * lambda_bar[n as usize])
            .collect())
    }
}

/// Green–Tao measure along the progression `W n + b_i`.
pub fn green_tao_measure(params: &MeasureParams, wt: &WTrickParams, i: usize) -> Result<GreenTaoMeasure> {
    if !is_prime_u64(params.n) {
        return domain(format!("modulus N = {} must be prime", params.n));
    }
    let single = wt.single(i)?;
    let len = params.n as usize;
    let window: Vec<u64> = (0..params.n).filter(|&n| params.in_window(n)).collect();
    if window.is_empty() {
        return domain("delta window contains no residues");
    }
    let lambda_r = gy_progression(len, &single, 0, params.r)?;
    let scale = single.density() / params.r.ln();
    let mut values = vec![0.0; len];
    for n in window {
        let l = lambda_r[n as usize];
        values[n as usize] = scale * l * l;
    }
    Ok(GreenTaoMeasure {
        params: params.clone(),
        wtrick: single,
        values,
    })
}
