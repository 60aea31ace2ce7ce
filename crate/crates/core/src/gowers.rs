//! Weighted box norms, Gowers inner products, dual functions, the counting
//! form `Λ` and dual-boundedness sets `Ω(T)`.
//!
//! A [`BoxNormContext`] fixes a face `J ⊆ [d+1]` with `|J| = d`; functions
//! on that face are [`GridFunction`]s over the members of `J` in ascending
//! order. The weights entering the face measure are the `ν_I` with `I ⊊ J`.
//!
//! # Coordinate elimination
//!
//! The cube average over `(x, y) ∈ Z_N^{2d}` is never enumerated. The last
//! face coordinate is eliminated first: for every pair of prefixes
//! `(x', y') ∈ Z_N^{2(d-1)}` the cube splits into the `ω_d = 0` and
//! `ω_d = 1` halves, and each half is a single sum over `t ∈ Z_N` of a
//! product of `2^{d-1}` function rows and the weight rows that involve the
//! last coordinate. The Gowers average is then the weighted sum over
//! prefixes of the product of the two half-sums; for a box norm the halves
//! coincide, so the final stage is a nonnegative combination of squares.
//! Cost is `O(2^d N^{2d-1})`, i.e. `O(N^3)` for the planar case. The dual
//! function reuses the same half-sum as its inner factor.

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::grid::{GridFunction, IndexSet};
use crate::par;
use crate::weights::WeightSystem;

/// A lower-order weight `ν_I`, `I ⊊ J`, in face-local coordinates.
#[derive(Debug, Clone)]
struct LowerWeight {
    /// Local coordinates of `I`, ascending.
    coords: Vec<usize>,
    /// `ν_I` on `Z_N^{|I|}`, row-major in `coords` order.
    table: Vec<f64>,
}

impl LowerWeight {
    fn contains_last(&self, last: usize) -> bool {
        self.coords.last() == Some(&last)
    }

    fn max(&self) -> f64 {
        self.table.iter().fold(0.0f64, |m, &v| m.max(v))
    }
}

/// Face `J` of a weight system, with its weight tables precomputed.
#[derive(Debug, Clone)]
pub struct BoxNormContext {
    face: IndexSet,
    n: usize,
    dim: usize,
    /// Lower weights not involving the last face coordinate.
    outer: Vec<LowerWeight>,
    /// Lower weights whose last coordinate is the last face coordinate.
    inner: Vec<LowerWeight>,
    /// `∏_{I ⊊ J} ν_I(x_I)` on the face.
    face_weight: Vec<f64>,
    /// `ν_J` on the face (all ones when trivial); the domination bound.
    face_bound: Vec<f64>,
}

fn pow_usize(n: usize, k: usize) -> usize {
    n.pow(k as u32)
}

/// For the listed `(value_x, value_y, stride)` triples, the sums
/// `Σ_q u_q · stride_q` for every `ω`, where bit `q` of the output index picks
/// `value_y` over `value_x`.
fn cube_bases(terms: &[(u64, u64, usize)], out: &mut Vec<usize>) {
    out.clear();
    out.push(0);
    for &(x, y, stride) in terms {
        let cur = out.len();
        for i in 0..cur {
            let base = out[i];
            out[i] = base + x as usize * stride;
            out.push(base + y as usize * stride);
        }
    }
}

impl BoxNormContext {
    pub fn new(ws: &WeightSystem, face: IndexSet) -> Result<Self> {
        if face.universe() != ws.d() + 1 {
            return domain(format!("face {face:?} is not a subset of [{}]", ws.d() + 1));
        }
        if face.len() != ws.d() {
            return domain(format!(
                "face {face:?} must have exactly d = {} members",
                ws.d()
            ));
        }
        let n = ws.n();
        let dim = face.len();
        let members: Vec<usize> = face.members().collect();
        let last = dim - 1;
        let mut outer = Vec::new();
        let mut inner = Vec::new();
        for edge in ws.nontrivial_edges() {
            if !edge.is_subset_of(&face) || edge == face {
                continue;
            }
            let coords: Vec<usize> = edge
                .members()
                .map(|m| members.iter().position(|&x| x == m).expect("edge inside face"))
                .collect();
            let table = ws.edge_table(edge).expect("nontrivial edge");
            let lw = LowerWeight { coords, table };
            if lw.contains_last(last) {
                inner.push(lw);
            } else {
                outer.push(lw);
            }
        }
        let len = pow_usize(n, dim);
        let mut face_weight = vec![1.0; len];
        let mut coords = vec![0u64; dim];
        for (idx, w) in face_weight.iter_mut().enumerate() {
            crate::grid::decode_into(idx, n, &mut coords);
            for lw in outer.iter().chain(&inner) {
                let k = lw
                    .coords
                    .iter()
                    .fold(0usize, |acc, &c| acc * n + coords[c] as usize);
                *w *= lw.table[k];
            }
        }
        let face_bound = ws.edge_table(face).unwrap_or_else(|| vec![1.0; len]);
        Ok(BoxNormContext {
            face,
            n,
            dim,
            outer,
            inner,
            face_weight,
            face_bound,
        })
    }

    pub fn face(&self) -> IndexSet {
        self.face
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of face coordinates (`d`).
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn face_weight(&self) -> &[f64] {
        &self.face_weight
    }

    /// `ν_J` tabulated on the face.
    pub fn face_bound(&self) -> &[f64] {
        &self.face_bound
    }

    pub fn face_bound_function(&self) -> GridFunction {
        GridFunction::new(self.dim, self.n, self.face_bound.clone()).expect("bound table is finite")
    }

    fn check(&self, f: &GridFunction) -> Result<()> {
        if f.d() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: f.d(),
            });
        }
        if f.n() != self.n {
            return domain(format!("function lives on Z_{} but the face is over Z_{}", f.n(), self.n));
        }
        Ok(())
    }

    fn prefix_terms(&self, x: &[u64], y: &[u64], terms: &mut Vec<(u64, u64, usize)>) {
        terms.clear();
        for k in 0..self.dim - 1 {
            terms.push((x[k], y[k], pow_usize(self.n, self.dim - 1 - k)));
        }
    }

    fn weight_terms(lw: &LowerWeight, prefix_only: bool, n: usize, x: &[u64], y: &[u64], terms: &mut Vec<(u64, u64, usize)>) {
        terms.clear();
        let k = lw.coords.len();
        let used = if prefix_only { k - 1 } else { k };
        for (q, &c) in lw.coords.iter().take(used).enumerate() {
            terms.push((x[c], y[c], pow_usize(n, k - 1 - q)));
        }
    }
}

/// Scratch buffers for one prefix row of the elimination.
struct Scratch {
    x: Vec<u64>,
    y: Vec<u64>,
    terms: Vec<(u64, u64, usize)>,
    f_bases: Vec<usize>,
    w_bases: Vec<Vec<usize>>,
    tmp: Vec<usize>,
    row_weight: Vec<f64>,
}

impl Scratch {
    fn new(ctx: &BoxNormContext) -> Self {
        Scratch {
            x: vec![0; ctx.dim.saturating_sub(1)],
            y: vec![0; ctx.dim.saturating_sub(1)],
            terms: Vec::new(),
            f_bases: Vec::new(),
            w_bases: vec![Vec::new(); ctx.inner.len()],
            tmp: Vec::new(),
            row_weight: vec![1.0; ctx.n],
        }
    }

    /// Fill bases for the prefix pair `(x, y)` already stored in `self`.
    fn prepare(&mut self, ctx: &BoxNormContext) {
        ctx.prefix_terms(&self.x, &self.y, &mut self.terms);
        cube_bases(&self.terms, &mut self.f_bases);
        for (lw, bases) in ctx.inner.iter().zip(self.w_bases.iter_mut()) {
            BoxNormContext::weight_terms(lw, true, ctx.n, &self.x, &self.y, &mut self.terms);
            cube_bases(&self.terms, bases);
        }
    }

    /// `∏_{outer I} ∏_{ω_I} ν_I(P_{ω_I}(x_I, y_I))`, optionally skipping `ω_I = 0`.
    fn outer_weight(&mut self, ctx: &BoxNormContext, skip_zero: bool) -> f64 {
        let mut w = 1.0;
        for lw in &ctx.outer {
            BoxNormContext::weight_terms(lw, false, ctx.n, &self.x, &self.y, &mut self.terms);
            cube_bases(&self.terms, &mut self.tmp);
            let start = usize::from(skip_zero);
            for &b in &self.tmp[start..] {
                w *= lw.table[b];
            }
            if w == 0.0 {
                break;
            }
        }
        w
    }

    /// `row_weight[t] = ∏_{inner I} ∏_{ω'} ν_I(…, t)`, optionally skipping `ω' = 0`.
    fn fill_row_weight(&mut self, ctx: &BoxNormContext, skip_zero: bool) {
        self.row_weight.iter_mut().for_each(|v| *v = 1.0);
        let start = usize::from(skip_zero);
        for (lw, bases) in ctx.inner.iter().zip(&self.w_bases) {
            for &b in &bases[start..] {
                let row = &lw.table[b..b + ctx.n];
                for (acc, &v) in self.row_weight.iter_mut().zip(row) {
                    *acc *= v;
                }
            }
        }
    }
}

/// `Σ_t w[t] ∏_k f_k[base_k + t]`.
fn half_sum(fs: &[&[f64]], bases: &[usize], w: &[f64]) -> f64 {
    let n = w.len();
    let mut acc = 0.0;
    for t in 0..n {
        let mut p = w[t];
        for (f, &b) in fs.iter().zip(bases) {
            p *= f[b + t];
        }
        acc += p;
    }
    acc
}

impl BoxNormContext {
    /// Unnormalised cube sum; `fs` indexed by `ω` (bit `k` ↔ local coordinate `k`).
    fn cube_average(&self, fs: &[&[f64]]) -> f64 {
        let n = self.n;
        let prefix_len = pow_usize(n, self.dim - 1);
        let half = 1usize << (self.dim - 1);
        let all_equal = fs.windows(2).all(|w| std::ptr::eq(w[0], w[1]));
        let row_sums = par::map_indexed(prefix_len, |xi| {
            let mut s = Scratch::new(self);
            crate::grid::decode_into(xi, n, &mut s.x);
            let mut parts = Vec::with_capacity(prefix_len);
            for yi in 0..prefix_len {
                crate::grid::decode_into(yi, n, &mut s.y);
                let outer = s.outer_weight(self, false);
                if outer == 0.0 {
                    parts.push(0.0);
                    continue;
                }
                s.prepare(self);
                s.fill_row_weight(self, false);
                let s0 = half_sum(&fs[..half], &s.f_bases, &s.row_weight);
                let value = if all_equal {
                    outer * (s0 * s0)
                } else {
                    let s1 = half_sum(&fs[half..], &s.f_bases, &s.row_weight);
                    outer * s0 * s1
                };
                parts.push(value);
            }
            par::pairwise_sum(&parts)
        });
        par::pairwise_sum(&row_sums) / (n as f64).powi(2 * self.dim as i32)
    }

    fn scale_bound(&self, max_f: f64) -> f64 {
        let cube = 1usize << self.dim;
        let mut s = max_f.powi(cube as i32);
        for lw in self.outer.iter().chain(&self.inner) {
            s *= lw.max().powi(1 << lw.coords.len());
        }
        s
    }
}

/// `⟨f, g⟩_ν = E_x f(x) g(x) ∏_{I ⊊ J} ν_I(x_I)`.
pub fn weighted_inner_product(f: &GridFunction, g: &GridFunction, ctx: &BoxNormContext) -> Result<f64> {
    ctx.check(f)?;
    ctx.check(g)?;
    let terms: Vec<f64> = f
        .values()
        .iter()
        .zip(g.values())
        .zip(&ctx.face_weight)
        .map(|((&a, &b), &w)| a * b * w)
        .collect();
    Ok(par::pairwise_sum(&terms) / terms.len() as f64)
}

/// `‖f‖_{□ν}^{2^d}`, the weighted Gowers average.
pub fn gowers_average(f: &GridFunction, ctx: &BoxNormContext) -> Result<f64> {
    ctx.check(f)?;
    let cube = 1usize << ctx.dim;
    let fs: Vec<&[f64]> = vec![f.values(); cube];
    let avg = ctx.cube_average(&fs);
    let tol = 1e-9 * ctx.scale_bound(f.max_abs());
    if avg < -tol {
        return Err(Error::Numerical(format!(
            "negative Gowers average {avg:e} (tolerance {tol:e})"
        )));
    }
    Ok(avg.max(0.0))
}

/// `‖f‖_{□ν}`.
pub fn box_norm(f: &GridFunction, ctx: &BoxNormContext) -> Result<f64> {
    let avg = gowers_average(f, ctx)?;
    Ok(avg.powf(1.0 / (1u64 << ctx.dim) as f64))
}

/// `⟨f_ω ; ω ∈ {0,1}^d⟩_{□ν}`; `fs[ω]` with bit `k` of `ω` set meaning
/// local coordinate `k` is taken from `y`.
pub fn gowers_inner_product(fs: &[GridFunction], ctx: &BoxNormContext) -> Result<f64> {
    let cube = 1usize << ctx.dim;
    if fs.len() != cube {
        return domain(format!("expected 2^d = {cube} functions, got {}", fs.len()));
    }
    for f in fs {
        ctx.check(f)?;
    }
    let refs: Vec<&[f64]> = fs.iter().map(|f| f.values()).collect();
    Ok(ctx.cube_average(&refs))
}

/// `Df(x) = E_y ∏_{ω≠0} f(P_ω(x,y)) ∏_{I ⊊ J} ∏_{ω_I≠0} ν_I(P_{ω_I}(x_I,y_I))`.
pub fn dual_function(f: &GridFunction, ctx: &BoxNormContext) -> Result<GridFunction> {
    ctx.check(f)?;
    let n = ctx.n;
    let dim = ctx.dim;
    let prefix_len = pow_usize(n, dim - 1);
    let half = 1usize << (dim - 1);
    let fv = f.values();
    let fs_all: Vec<&[f64]> = vec![fv; half];
    let norm = 1.0 / (n as f64).powi(dim as i32);
    let mut out = vec![0.0; pow_usize(n, dim)];
    par::for_each_chunk_mut(&mut out, n, |xi, row| {
        let mut s = Scratch::new(ctx);
        crate::grid::decode_into(xi, n, &mut s.x);
        let mut terms_row = vec![0.0; n];
        for yi in 0..prefix_len {
            crate::grid::decode_into(yi, n, &mut s.y);
            let outer = s.outer_weight(ctx, true);
            if outer == 0.0 {
                continue;
            }
            s.prepare(ctx);
            s.fill_row_weight(ctx, false);
            let inner = half_sum(&fs_all, &s.f_bases, &s.row_weight);
            let coef = outer * inner;
            if coef == 0.0 {
                continue;
            }
            s.fill_row_weight(ctx, true);
            terms_row.copy_from_slice(&s.row_weight);
            for &b in &s.f_bases[1..] {
                for (acc, &v) in terms_row.iter_mut().zip(&fv[b..b + n]) {
                    *acc *= v;
                }
            }
            for (r, &t) in row.iter_mut().zip(&terms_row) {
                *r += coef * t;
            }
        }
        row.iter_mut().for_each(|r| *r *= norm);
    });
    GridFunction::new(dim, n, out)
}

/// `Λ(f^{(1)}, …, f^{(d+1)}) = E_{x ∈ Z_N^{d+1}} ∏_i f^{(i)}(x_{[d+1]∖{i}}) ∏_{|I|<d} ν_I(x_I)`.
///
/// `fs[i-1]` is `f^{(i)}`, a function on the face `[d+1] ∖ {i}`.
pub fn lambda_form(fs: &[GridFunction], ws: &WeightSystem) -> Result<f64> {
    let d = ws.d();
    let n = ws.n();
    let universe = d + 1;
    if fs.len() != universe {
        return domain(format!("expected d+1 = {universe} face functions, got {}", fs.len()));
    }
    for f in fs {
        if f.d() != d {
            return Err(Error::DimensionMismatch { expected: d, got: f.d() });
        }
        if f.n() != n {
            return domain(format!("face function over Z_{} but weights over Z_{n}", f.n()));
        }
    }
    // (vertex classes in ascending order, table) for every nontrivial |I| < d.
    let weights: Vec<(Vec<usize>, Vec<f64>)> = ws
        .nontrivial_edges()
        .filter(|e| e.len() < d)
        .map(|e| (e.members().collect(), ws.edge_table(e).expect("nontrivial")))
        .collect();
    // Row-major index of a subset of coordinates, with the last class `d+1`
    // (the innermost loop variable) left out when `skip_last` is set.
    let index = |classes: &[usize], x: &[u64], skip_last: bool| -> usize {
        classes
            .iter()
            .filter(|&&c| !(skip_last && c == universe))
            .fold(0usize, |acc, &c| acc * n + x[c - 1] as usize)
            * if skip_last && classes.last() == Some(&universe) { n } else { 1 }
    };
    let faces: Vec<Vec<usize>> = (1..=universe)
        .map(|i| IndexSet::without(universe, i).members().collect())
        .collect();
    let prefix_len = pow_usize(n, d);
    let row_sums = par::map_indexed(n, |x1| {
        let mut x = vec![0u64; universe];
        let mut row_w = vec![0.0; n];
        let block = prefix_len / n;
        let mut parts = Vec::with_capacity(block);
        for rest in 0..block {
            let prefix = x1 * block + rest;
            crate::grid::decode_into(prefix, n, &mut x[..d]);
            let mut c = fs[d].values()[index(&faces[d], &x, true)];
            for (classes, table) in &weights {
                if classes.last() != Some(&universe) {
                    c *= table[index(classes, &x, false)];
                }
            }
            if c == 0.0 {
                parts.push(0.0);
                continue;
            }
            row_w.iter_mut().for_each(|v| *v = c);
            for (classes, table) in &weights {
                if classes.last() == Some(&universe) {
                    let b = index(classes, &x, true);
                    for (acc, &v) in row_w.iter_mut().zip(&table[b..b + n]) {
                        *acc *= v;
                    }
                }
            }
            for i in 0..d {
                let b = index(&faces[i], &x, true);
                for (acc, &v) in row_w.iter_mut().zip(&fs[i].values()[b..b + n]) {
                    *acc *= v;
                }
            }
            parts.push(row_w.iter().sum());
        }
        par::pairwise_sum(&parts)
    });
    Ok(par::pairwise_sum(&row_sums) / (n as f64).powi(universe as i32))
}

/// `Ω(T) = { x : |Df(x)| ≤ T }` on a face.
#[derive(Debug, Clone, Serialize)]
pub struct OmegaSet {
    pub threshold: f64,
    pub membership: Vec<bool>,
    pub dual_max: f64,
}

impl OmegaSet {
    pub fn len(&self) -> usize {
        self.membership.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn complement_len(&self) -> usize {
        self.membership.len() - self.len()
    }

    /// `⟨|g|, 1_{Ω(T)^c}⟩_ν`, the `L¹_ν` mass of `g` outside `Ω(T)`.
    pub fn complement_mass(&self, g: &GridFunction, ctx: &BoxNormContext) -> Result<f64> {
        ctx.check(g)?;
        let terms: Vec<f64> = g
            .values()
            .iter()
            .zip(&ctx.face_weight)
            .zip(&self.membership)
            .map(|((&v, &w), &inside)| if inside { 0.0 } else { v.abs() * w })
            .collect();
        Ok(par::pairwise_sum(&terms) / terms.len() as f64)
    }
}

pub fn omega_set(f: &GridFunction, ctx: &BoxNormContext, threshold: f64) -> Result<OmegaSet> {
    let dual = dual_function(f, ctx)?;
    omega_set_from_dual(&dual, threshold)
}

/// As [`omega_set`], reusing an already computed dual function.
pub fn omega_set_from_dual(dual: &GridFunction, threshold: f64) -> Result<OmegaSet> {
    if !(threshold > 1.0 && threshold.is_finite()) {
        return domain(format!("threshold T must be a finite real > 1, got {threshold}"));
    }
    Ok(OmegaSet {
        threshold,
        membership: dual.values().iter().map(|v| v.abs() <= threshold).collect(),
        dual_max: dual.max_abs(),
    })
}
