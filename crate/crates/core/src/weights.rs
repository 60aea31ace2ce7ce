//! Measures on `Z_N`, affine forms and independent weight systems on the
//! `(d+1)`-partite corner hypergraph.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::arithmetic::{green_tao_measure, GreenTaoMeasure, MeasureParams, WTrickParams};
use crate::error::{domain, Error, Result};
use crate::grid::IndexSet;

/// A nonnegative weight table on `Z_N`.
///
/// Kernels only need the table; the source is kept so reports and JSON
/// documents can say where the weights came from and rebuild them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MeasureSpec", into = "MeasureSpec")]
pub struct Measure {
    values: Arc<Vec<f64>>,
    source: MeasureSource,
}

#[derive(Debug, Clone, PartialEq)]
enum MeasureSource {
    Unit,
    GreenTao {
        params: MeasureParams,
        wtrick: WTrickParams,
    },
    Table,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum MeasureSpec {
    Unit { n: usize },
    GreenTao { params: MeasureParams, wtrick: WTrickParams },
    Table { values: Vec<f64> },
}

impl TryFrom<MeasureSpec> for Measure {
    type Error = Error;
    fn try_from(spec: MeasureSpec) -> Result<Self> {
        match spec {
            MeasureSpec::Unit { n } => Measure::unit(n),
            MeasureSpec::GreenTao { params, wtrick } => {
                Ok(Measure::from_green_tao(&green_tao_measure(&params, &wtrick, 0)?))
            }
            MeasureSpec::Table { values } => Measure::from_values(values),
        }
    }
}

impl From<Measure> for MeasureSpec {
    fn from(m: Measure) -> Self {
        match m.source {
            MeasureSource::Unit => MeasureSpec::Unit { n: m.values.len() },
            MeasureSource::GreenTao { params, wtrick } => MeasureSpec::GreenTao { params, wtrick },
            MeasureSource::Table => MeasureSpec::Table {
                values: m.values.as_ref().clone(),
            },
        }
    }
}

impl Measure {
    /// The constant-1 measure: weighted objects degenerate to unweighted ones.
    pub fn unit(n: usize) -> Result<Self> {
        if n == 0 {
            return domain("measure modulus must be positive");
        }
        Ok(Measure {
            values: Arc::new(vec![1.0; n]),
            source: MeasureSource::Unit,
        })
    }

    pub fn from_green_tao(nu: &GreenTaoMeasure) -> Self {
        Measure {
            values: Arc::new(nu.values.clone()),
            source: MeasureSource::GreenTao {
                params: nu.params.clone(),
                wtrick: nu.wtrick.clone(),
            },
        }
    }

    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return domain("measure table is empty");
        }
        if let Some(i) = values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return domain(format!("measure value at {i} is not a finite nonnegative real"));
        }
        Ok(Measure {
            values: Arc::new(values),
            source: MeasureSource::Table,
        })
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_unit(&self) -> bool {
        matches!(self.source, MeasureSource::Unit)
    }

    /// `ν(r mod N)` for any integer `r`.
    pub fn at(&self, r: i128) -> f64 {
        self.values[r.rem_euclid(self.values.len() as i128) as usize]
    }

    /// Summary of where the weights came from, for reports.
    pub fn describe(&self) -> serde_json::Value {
        match &self.source {
            MeasureSource::Unit => serde_json::json!({"kind": "unit", "n": self.n()}),
            MeasureSource::GreenTao { params, wtrick } => {
                serde_json::json!({"kind": "green_tao", "params": params, "wtrick": wtrick})
            }
            MeasureSource::Table => serde_json::json!({"kind": "table", "n": self.n()}),
        }
    }
}

/// `L(x_I) = Σ_{j ∈ I} a_j x_j + c`, coefficients listed in ascending member order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AffineForm {
    pub support: IndexSet,
    pub coeffs: Vec<i64>,
    pub constant: i64,
}

impl AffineForm {
    pub fn new(support: IndexSet, coeffs: Vec<i64>, constant: i64) -> Result<Self> {
        if coeffs.len() != support.len() {
            return Err(Error::DimensionMismatch {
                expected: support.len(),
                got: coeffs.len(),
            });
        }
        Ok(AffineForm {
            support,
            coeffs,
            constant,
        })
    }

    /// The coordinate form `x_j`.
    pub fn coordinate(universe: usize, j: usize) -> Result<Self> {
        Self::new(IndexSet::new(universe, &[j])?, vec![1], 0)
    }

    /// Value over `Z`, given the coordinates of the support in order.
    pub fn eval(&self, point: &[u64]) -> i128 {
        self.coeffs
            .iter()
            .zip(point)
            .map(|(&a, &x)| a as i128 * x as i128)
            .sum::<i128>()
            + self.constant as i128
    }

    /// Coefficient vector over the full universe with the constant appended.
    pub fn embed(&self) -> Vec<i64> {
        let mut v = vec![0i64; self.support.universe() + 1];
        for (m, &a) in self.support.members().zip(&self.coeffs) {
            v[m - 1] = a;
        }
        v[self.support.universe()] = self.constant;
        v
    }

    pub fn has_zero_coefficient(&self) -> bool {
        self.coeffs.contains(&0)
    }
}

/// `v` and `w` are rational multiples of each other: every 2×2 minor vanishes.
pub fn proportional(v: &[i64], w: &[i64]) -> bool {
    debug_assert_eq!(v.len(), w.len());
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            if v[i] as i128 * w[j] as i128 != v[j] as i128 * w[i] as i128 {
                return false;
            }
        }
    }
    true
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum WeightFactor {
    Trivial,
    Forms(Vec<AffineForm>),
}

/// The weights `{ν_I}` for `I ⊆ [d+1]`, `|I| ≤ d`. Absent keys are trivial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WeightSystemDoc", into = "WeightSystemDoc")]
pub struct WeightSystem {
    d: usize,
    measure: Measure,
    factors: BTreeMap<IndexSet, Vec<AffineForm>>,
}

#[derive(Serialize, Deserialize)]
struct WeightSystemDoc {
    d: usize,
    measure: Measure,
    factors: Vec<FactorDoc>,
}

#[derive(Serialize, Deserialize)]
struct FactorDoc {
    #[serde(rename = "I")]
    edge: Vec<usize>,
    forms: Vec<FormDoc>,
}

#[derive(Serialize, Deserialize)]
struct FormDoc {
    support: Vec<usize>,
    coeffs: Vec<i64>,
    constant: i64,
}

impl TryFrom<WeightSystemDoc> for WeightSystem {
    type Error = Error;
    fn try_from(doc: WeightSystemDoc) -> Result<Self> {
        let universe = doc.d + 1;
        let mut factors = BTreeMap::new();
        for f in doc.factors {
            let edge = IndexSet::new(universe, &f.edge)?;
            let forms = f
                .forms
                .into_iter()
                .map(|fd| AffineForm::new(IndexSet::new(universe, &fd.support)?, fd.coeffs, fd.constant))
                .collect::<Result<Vec<_>>>()?;
            factors.insert(edge, WeightFactor::Forms(forms));
        }
        WeightSystem::new(doc.d, doc.measure, factors)
    }
}

impl From<WeightSystem> for WeightSystemDoc {
    fn from(ws: WeightSystem) -> Self {
        WeightSystemDoc {
            d: ws.d,
            measure: ws.measure,
            factors: ws
                .factors
                .into_iter()
                .map(|(edge, forms)| FactorDoc {
                    edge: edge.members().collect(),
                    forms: forms
                        .into_iter()
                        .map(|f| FormDoc {
                            support: f.support.members().collect(),
                            coeffs: f.coeffs,
                            constant: f.constant,
                        })
                        .collect(),
                })
                .collect(),
        }
    }
}

impl WeightSystem {
    pub fn new(d: usize, measure: Measure, factors: BTreeMap<IndexSet, WeightFactor>) -> Result<Self> {
        if d == 0 || d + 1 > IndexSet::MAX_UNIVERSE {
            return domain(format!("hypergraph dimension {d} unsupported"));
        }
        let mut kept = BTreeMap::new();
        for (edge, factor) in factors {
            if edge.universe() != d + 1 {
                return domain(format!("edge {edge:?} is not a subset of [{}]", d + 1));
            }
            if edge.len() > d {
                return domain(format!("edge {edge:?} has more than d = {d} members"));
            }
            let forms = match factor {
                WeightFactor::Trivial => continue,
                WeightFactor::Forms(forms) => forms,
            };
            if forms.is_empty() {
                return domain(format!("edge {edge:?}: a form factor needs at least one form"));
            }
            if edge.is_empty() {
                return domain("the empty edge carries no variables and must be trivial");
            }
            if let Some(f) = forms.iter().find(|f| f.support != edge) {
                return domain(format!(
                    "edge {edge:?}: form support {:?} differs from the edge",
                    f.support
                ));
            }
            kept.insert(edge, forms);
        }
        Ok(WeightSystem {
            d,
            measure,
            factors: kept,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.measure.n()
    }

    pub fn measure(&self) -> &Measure {
        &self.measure
    }

    /// Same forms, different measure.
    pub fn with_measure(&self, measure: Measure) -> WeightSystem {
        WeightSystem {
            d: self.d,
            measure,
            factors: self.factors.clone(),
        }
    }

    pub fn factor(&self, edge: IndexSet) -> WeightFactor {
        match self.factors.get(&edge) {
            Some(forms) => WeightFactor::Forms(forms.clone()),
            None => WeightFactor::Trivial,
        }
    }

    pub fn forms(&self, edge: IndexSet) -> Option<&[AffineForm]> {
        self.factors.get(&edge).map(Vec::as_slice)
    }

    /// Edges carrying a nontrivial factor.
    pub fn nontrivial_edges(&self) -> impl Iterator<Item = IndexSet> + '_ {
        self.factors.keys().copied()
    }

    /// `ν_I(x_I)`; `point` lists the coordinates of `I` in ascending order.
    pub fn eval_weight(&self, edge: IndexSet, point: &[u64]) -> Result<f64> {
        if point.len() != edge.len() {
            return Err(Error::DimensionMismatch {
                expected: edge.len(),
                got: point.len(),
            });
        }
        Ok(match self.factors.get(&edge) {
            None => 1.0,
            Some(forms) => forms.iter().map(|f| self.measure.at(f.eval(point))).product(),
        })
    }

    /// `ν_I` tabulated on `Z_N^{|I|}` (row-major, ascending members), or
    /// `None` when the factor is trivial.
    pub fn edge_table(&self, edge: IndexSet) -> Option<Vec<f64>> {
        let forms = self.factors.get(&edge)?;
        let n = self.n();
        let k = edge.len();
        let len = n.pow(k as u32);
        let mut point = vec![0u64; k];
        let mut table = Vec::with_capacity(len);
        for idx in 0..len {
            crate::grid::decode_into(idx, n, &mut point);
            table.push(forms.iter().map(|f| self.measure.at(f.eval(&point))).product());
        }
        Some(table)
    }
}

/// The corner weights: `ν_j(a) = ν(a)` for `j ≤ d`, `ν_{d+1} ≡ 1`,
/// `ν_I(a) = ν(a_{d+1} − Σ_{j ∈ I∖{d+1}} a_j)` on the `d`-edges through `d+1`,
/// and `ν_{[d]} ≡ 1`.
pub fn corner_weight_system(d: usize, measure: Measure) -> Result<WeightSystem> {
    if d < 2 {
        return domain(format!("corner weight system needs d >= 2, got {d}"));
    }
    let universe = d + 1;
    let mut factors = BTreeMap::new();
    for j in 1..=d {
        factors.insert(
            IndexSet::new(universe, &[j])?,
            WeightFactor::Forms(vec![AffineForm::coordinate(universe, j)?]),
        );
    }
    for j in 1..=d {
        let edge = IndexSet::without(universe, j);
        let coeffs = edge
            .members()
            .map(|m| if m == universe { 1 } else { -1 })
            .collect();
        factors.insert(edge, WeightFactor::Forms(vec![AffineForm::new(edge, coeffs, 0)?]));
    }
    WeightSystem::new(d, measure, factors)
}

/// Location of a form inside a weight system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FormRef {
    pub edge: IndexSet,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Independence {
    Valid,
    ZeroCoefficient(FormRef),
    Proportional(FormRef, FormRef),
}

impl Independence {
    pub fn is_valid(&self) -> bool {
        matches!(self, Independence::Valid)
    }
}

/// Checks that every form depends on all variables of its support and that
/// no two distinct forms (as vectors over the universe plus the constant) are
/// rational multiples of each other. Identical forms count once.
pub fn validate_independent(ws: &WeightSystem) -> Independence {
    let mut seen: Vec<(Vec<i64>, FormRef)> = Vec::new();
    for (&edge, forms) in &ws.factors {
        for (index, form) in forms.iter().enumerate() {
            let here = FormRef { edge, index };
            if form.has_zero_coefficient() {
                return Independence::ZeroCoefficient(here);
            }
            let v = form.embed();
            if seen.iter().any(|(w, _)| *w == v) {
                continue;
            }
            if let Some((_, there)) = seen.iter().find(|(w, _)| proportional(w, &v)) {
                return Independence::Proportional(*there, here);
            }
            seen.push((v, here));
        }
    }
    Independence::Valid
}
