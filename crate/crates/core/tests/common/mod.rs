//! Brute-force oracles: direct enumeration of the defining averages.
#![allow(dead_code)]

use gowers_lab::grid::{GridFunction, IndexSet};
use gowers_lab::weights::WeightSystem;

fn decode(mut idx: usize, n: usize, k: usize) -> Vec<u64> {
    let mut v = vec![0u64; k];
    for c in v.iter_mut().rev() {
        *c = (idx % n) as u64;
        idx /= n;
    }
    v
}

/// Every lower weight `ν_I` tabulated once by direct evaluation.
pub struct WeightTable {
    n: usize,
    tables: Vec<(IndexSet, Vec<f64>)>,
}

impl WeightTable {
    pub fn new(ws: &WeightSystem, universe: IndexSet, max_len: usize) -> Self {
        let n = ws.n();
        let tables = universe
            .subsets()
            .into_iter()
            .filter(|s| !s.is_empty() && s.len() <= max_len)
            .map(|s| {
                let k = s.len();
                let t = (0..n.pow(k as u32)).map(|i| ws.eval_weight(s, &decode(i, n, k)).unwrap()).collect();
                (s, t)
            })
            .collect();
        WeightTable { n, tables }
    }

    pub fn get(&self, sub: IndexSet, pt: &[u64]) -> f64 {
        let t = &self.tables.iter().find(|(s, _)| *s == sub).unwrap().1;
        t[pt.iter().fold(0usize, |a, &c| a * self.n + c as usize)]
    }
}

/// Lower faces `∅ ≠ I ⊊ face` with their positions inside `face`.
fn lower_faces(face: IndexSet) -> Vec<(IndexSet, Vec<usize>)> {
    let members: Vec<usize> = face.members().collect();
    face.subsets()
        .into_iter()
        .filter(|s| !s.is_empty() && *s != face)
        .map(|s| (s, s.members().map(|m| members.iter().position(|&v| v == m).unwrap()).collect()))
        .collect()
}

/// Product of every `ν_I(P_{ω_I})` over the lower faces and `ω_I`, optionally
/// dropping `ω_I = 0`.
fn lower_weights(wt: &WeightTable, lower: &[(IndexSet, Vec<usize>)], x: &[u64], y: &[u64], skip_zero: bool) -> f64 {
    let mut w = 1.0;
    let mut pt = [0u64; 8];
    for (sub, local) in lower {
        for om in 0..1usize << local.len() {
            if skip_zero && om == 0 {
                continue;
            }
            for (q, &c) in local.iter().enumerate() {
                pt[q] = if om >> q & 1 == 1 { y[c] } else { x[c] };
            }
            w *= wt.get(*sub, &pt[..local.len()]);
        }
    }
    w
}

/// Point of `face` (ascending members) picked from `x` or `y` by `omega`.
fn pick_into(x: &[u64], y: &[u64], omega: usize, out: &mut [u64]) {
    for k in 0..x.len() {
        out[k] = if omega >> k & 1 == 1 { y[k] } else { x[k] };
    }
}

/// `(value, average of |integrand|)`.
pub fn gowers(fs: &[GridFunction], ws: &WeightSystem, face: IndexSet) -> (f64, f64) {
    let n = ws.n();
    let m = face.len();
    let total = n.pow(m as u32);
    let wt = WeightTable::new(ws, face, m - 1);
    let lower = lower_faces(face);
    let mut pt = [0u64; 8];
    let (mut sum, mut abs) = (0.0, 0.0);
    for xi in 0..total {
        let x = decode(xi, n, m);
        for yi in 0..total {
            let y = decode(yi, n, m);
            let mut p = lower_weights(&wt, &lower, &x, &y, false);
            for (om, f) in fs.iter().enumerate() {
                pick_into(&x, &y, om, &mut pt);
                p *= f.get(&pt[..m]);
            }
            sum += p;
            abs += p.abs();
        }
    }
    let norm = (total * total) as f64;
    (sum / norm, abs / norm)
}

pub fn dual(f: &GridFunction, ws: &WeightSystem, face: IndexSet) -> Vec<f64> {
    let n = ws.n();
    let m = face.len();
    let total = n.pow(m as u32);
    let wt = WeightTable::new(ws, face, m - 1);
    let lower = lower_faces(face);
    let mut pt = [0u64; 8];
    (0..total)
        .map(|xi| {
            let x = decode(xi, n, m);
            let mut sum = 0.0;
            for yi in 0..total {
                let y = decode(yi, n, m);
                let mut p = lower_weights(&wt, &lower, &x, &y, true);
                for om in 1..1usize << m {
                    pick_into(&x, &y, om, &mut pt);
                    p *= f.get(&pt[..m]);
                }
                sum += p;
            }
            sum / total as f64
        })
        .collect()
}

pub fn inner(f: &GridFunction, g: &GridFunction, ws: &WeightSystem, face: IndexSet) -> f64 {
    let n = ws.n();
    let m = face.len();
    let total = n.pow(m as u32);
    let mut s = 0.0;
    for xi in 0..total {
        let x = decode(xi, n, m);
        let mut w = 1.0;
        let members: Vec<usize> = face.members().collect();
        for sub in face.subsets() {
            if sub.is_empty() || sub == face {
                continue;
            }
            let pt: Vec<u64> = sub
                .members()
                .map(|mm| x[members.iter().position(|&v| v == mm).unwrap()])
                .collect();
            w *= ws.eval_weight(sub, &pt).unwrap();
        }
        s += f.get(&x) * g.get(&x) * w;
    }
    s / total as f64
}

/// `(value, average of |integrand|)`; `fs[i-1]` lives on `[d+1] ∖ {i}`.
pub fn lambda(fs: &[GridFunction], ws: &WeightSystem) -> (f64, f64) {
    let d = ws.d();
    let n = ws.n();
    let u = d + 1;
    let total = n.pow(u as u32);
    let (mut sum, mut abs) = (0.0, 0.0);
    for xi in 0..total {
        let x = decode(xi, n, u);
        let mut p = 1.0;
        for i in 1..=u {
            let pt: Vec<u64> = IndexSet::without(u, i).members().map(|m| x[m - 1]).collect();
            p *= fs[i - 1].get(&pt);
        }
        for sub in IndexSet::full(u).subsets() {
            if sub.is_empty() || sub.len() >= d {
                continue;
            }
            let pt: Vec<u64> = sub.members().map(|m| x[m - 1]).collect();
            p *= ws.eval_weight(sub, &pt).unwrap();
        }
        sum += p;
        abs += p.abs();
    }
    (sum / total as f64, abs / total as f64)
}

/// Relative error against a reference with an absolute-value scale floor.
pub fn rel_err(got: f64, want: f64, scale: f64) -> f64 {
    (got - want).abs() / want.abs().max(scale).max(f64::MIN_POSITIVE)
}
