//! Finitely supported operator-valued Fourier series `x = Σ c_g ⊗ λ_g` over `F_k`.
//!
//! Coefficients are dense `n × n` complex matrices. The trace is
//! `τ(x) = tr(c_e)/n`, i.e. the group trace tensored with the normalized
//! matrix trace.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{ToPrimitive, Zero};
use serde::{Serialize, Serializer};
use serde_json::{json, Value};

use crate::budget::Budget;
use crate::error::{Error, Result};
use crate::free_words::{ball_size, LengthFunction, Word};

pub type Coeff = DMatrix<Complex64>;

#[derive(Clone, Debug, PartialEq)]
pub struct FourierElement {
    rank: usize,
    dim: usize,
    terms: BTreeMap<Word, Coeff>,
}

fn is_zero_matrix(c: &Coeff) -> bool {
    c.iter().all(|z| z.is_zero())
}

impl FourierElement {
    pub fn zero(rank: usize, dim: usize) -> Self {
        FourierElement {
            rank,
            dim: dim.max(1),
            terms: BTreeMap::new(),
        }
    }

    /// `λ_g` with scalar coefficient 1.
    pub fn lambda(g: &Word) -> Self {
        Self::monomial(g, Coeff::from_element(1, 1, Complex64::new(1.0, 0.0)))
    }

    /// `c ⊗ λ_g`.
    pub fn monomial(g: &Word, c: Coeff) -> Self {
        assert!(c.is_square(), "coefficient must be square");
        let mut x = FourierElement::zero(g.rank(), c.nrows());
        if !is_zero_matrix(&c) {
            x.terms.insert(g.clone(), c);
        }
        x
    }

    /// Sums the given terms; repeated words accumulate.
    pub fn from_terms<I>(rank: usize, dim: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Word, Coeff)>,
    {
        let mut x = FourierElement::zero(rank, dim);
        for (g, c) in terms {
            if g.rank() != rank {
                return Err(Error::RankMismatch {
                    left: rank,
                    right: g.rank(),
                });
            }
            if c.nrows() != x.dim || c.ncols() != x.dim {
                return Err(Error::DimensionMismatch {
                    left: x.dim,
                    right: c.nrows().max(c.ncols()),
                });
            }
            x.accumulate(g, c);
        }
        Ok(x)
    }

    /// Scalar-coefficient element `Σ c_g λ_g`.
    pub fn from_scalars<I>(rank: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Word, Complex64)>,
    {
        Self::from_terms(
            rank,
            1,
            terms
                .into_iter()
                .map(|(g, c)| (g, Coeff::from_element(1, 1, c))),
        )
    }

    fn accumulate(&mut self, g: Word, c: Coeff) {
        match self.terms.entry(g) {
            std::collections::btree_map::Entry::Vacant(v) => {
                if !is_zero_matrix(&c) {
                    v.insert(c);
                }
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if is_zero_matrix(o.get()) {
                    o.remove();
                }
            }
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn support(&self) -> std::collections::btree_map::Keys<'_, Word, Coeff> {
        self.terms.keys()
    }

    pub fn terms(&self) -> std::collections::btree_map::Iter<'_, Word, Coeff> {
        self.terms.iter()
    }

    pub fn coefficient(&self, g: &Word) -> Option<&Coeff> {
        self.terms.get(g)
    }

    /// Coefficient at `g`, zero matrix when `g` is outside the support.
    pub fn coefficient_or_zero(&self, g: &Word) -> Coeff {
        self.terms
            .get(g)
            .cloned()
            .unwrap_or_else(|| Coeff::zeros(self.dim, self.dim))
    }

    /// Largest word length in the support (0 for the zero element).
    pub fn support_radius(&self) -> usize {
        self.terms.keys().map(Word::len_usize).max().unwrap_or(0)
    }

    fn check_compatible(&self, other: &FourierElement) -> Result<()> {
        if self.rank != other.rank {
            return Err(Error::RankMismatch {
                left: self.rank,
                right: other.rank,
            });
        }
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &FourierElement) -> Result<FourierElement> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        for (g, c) in &other.terms {
            out.accumulate(g.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &FourierElement) -> Result<FourierElement> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        for (g, c) in &other.terms {
            out.accumulate(g.clone(), -c);
        }
        Ok(out)
    }

    pub fn scale(&self, s: Complex64) -> FourierElement {
        let mut out = FourierElement::zero(self.rank, self.dim);
        for (g, c) in &self.terms {
            out.accumulate(g.clone(), c * s);
        }
        out
    }

    /// Convolution: `(c λ_g)(d λ_h) = cd λ_{gh}`.
    pub fn multiply(&self, other: &FourierElement) -> Result<FourierElement> {
        self.check_compatible(other)?;
        let mut out = FourierElement::zero(self.rank, self.dim);
        for (g, c) in &self.terms {
            for (h, d) in &other.terms {
                out.accumulate(g.multiply(h)?, c * d);
            }
        }
        Ok(out)
    }

    /// `c λ_g ↦ c* λ_{g⁻¹}`.
    pub fn adjoint(&self) -> FourierElement {
        FourierElement {
            rank: self.rank,
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .map(|(g, c)| (g.inverse(), c.adjoint()))
                .collect(),
        }
    }

    /// `τ(x) = tr(c_e)/n`.
    pub fn trace(&self) -> Complex64 {
        match self.terms.get(&Word::identity(self.rank)) {
            Some(c) => c.trace() / self.dim as f64,
            None => Complex64::zero(),
        }
    }

    /// `τ(x*x) = Σ_g tr(c_g* c_g)/n`.
    pub fn l2_norm_squared(&self) -> f64 {
        self.terms
            .values()
            .map(|c| c.iter().map(|z| z.norm_sqr()).sum::<f64>())
            .sum::<f64>()
            / self.dim as f64
    }

    /// Keeps the terms whose word satisfies `keep`.
    pub fn restrict<F: FnMut(&Word) -> bool>(&self, mut keep: F) -> FourierElement {
        FourierElement {
            rank: self.rank,
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .filter(|(g, _)| keep(g))
                .map(|(g, c)| (g.clone(), c.clone()))
                .collect(),
        }
    }

    /// `{"rank","dim","terms":[{"word","coeff":[[re,im],…]}]}`, coefficients row-major.
    pub fn to_json(&self) -> Value {
        let terms: Vec<Value> = self
            .terms
            .iter()
            .map(|(g, c)| {
                let mut flat = Vec::with_capacity(self.dim * self.dim);
                for i in 0..self.dim {
                    for j in 0..self.dim {
                        let z = c[(i, j)];
                        flat.push(json!([z.re, z.im]));
                    }
                }
                json!({"word": g.to_string(), "coeff": flat})
            })
            .collect();
        json!({"rank": self.rank, "dim": self.dim, "terms": terms})
    }

    /// Accepts the form written by [`to_json`](Self::to_json). A coefficient
    /// entry may also be a bare real number, and `"word"` may be a syllable array.
    pub fn from_json(value: &Value) -> Result<FourierElement> {
        let obj = value
            .as_object()
            .ok_or_else(|| Error::Schema("Fourier element must be a JSON object".into()))?;
        let rank = obj
            .get("rank")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::Schema("missing integer field \"rank\"".into()))?
            as usize;
        let dim = match obj.get("dim") {
            None => 1,
            Some(v) => v
                .as_u64()
                .filter(|&d| d >= 1)
                .ok_or_else(|| Error::Schema("\"dim\" must be a positive integer".into()))?
                as usize,
        };
        let terms = obj
            .get("terms")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Schema("missing array field \"terms\"".into()))?;
        let mut out = Vec::with_capacity(terms.len());
        for (idx, t) in terms.iter().enumerate() {
            let word = t
                .get("word")
                .ok_or_else(|| Error::Schema(format!("terms[{idx}]: missing \"word\"")))?;
            let g = Word::from_json(rank, word)?;
            let coeff = t
                .get("coeff")
                .and_then(Value::as_array)
                .ok_or_else(|| Error::Schema(format!("terms[{idx}]: missing \"coeff\" array")))?;
            if coeff.len() != dim * dim {
                return Err(Error::Schema(format!(
                    "terms[{idx}]: expected {} coefficient entries, found {}",
                    dim * dim,
                    coeff.len()
                )));
            }
            let mut entries = Vec::with_capacity(dim * dim);
            for e in coeff {
                entries.push(parse_complex(e).ok_or_else(|| {
                    Error::Schema(format!("terms[{idx}]: coefficient entries must be [re, im] or numbers"))
                })?);
            }
            out.push((g, Coeff::from_row_slice(dim, dim, &entries)));
        }
        FourierElement::from_terms(rank, dim, out)
    }
}

fn parse_complex(v: &Value) -> Option<Complex64> {
    if let Some(x) = v.as_f64() {
        return Some(Complex64::new(x, 0.0));
    }
    let a = v.as_array()?;
    if a.len() != 2 {
        return None;
    }
    Some(Complex64::new(a[0].as_f64()?, a[1].as_f64()?))
}

impl Serialize for FourierElement {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

/// Fourier multiplier symbol.
#[derive(Clone, Debug)]
pub enum MultiplierSpec {
    /// `e^{-tψ(g)}`.
    Semigroup { psi: LengthFunction, t: f64 },
    Table {
        entries: BTreeMap<Word, f64>,
        default: Option<f64>,
    },
}

impl MultiplierSpec {
    pub fn symbol(&self, g: &Word) -> Result<f64> {
        match self {
            MultiplierSpec::Semigroup { t, .. } if *t == 0.0 => Ok(1.0),
            MultiplierSpec::Semigroup { psi, t } => Ok((-t * psi.evaluate_f64(g)?).exp()),
            MultiplierSpec::Table { entries, default } => entries
                .get(g)
                .copied()
                .or(*default)
                .ok_or_else(|| Error::SymbolUndefined(g.to_string())),
        }
    }
}

pub fn apply_multiplier(spec: &MultiplierSpec, x: &FourierElement) -> Result<FourierElement> {
    let mut out = FourierElement::zero(x.rank, x.dim);
    for (g, c) in &x.terms {
        let m = spec.symbol(g)?;
        out.accumulate(g.clone(), c * Complex64::new(m, 0.0));
    }
    Ok(out)
}

/// `T_t x` for the semigroup generated by `ψ`.
pub fn semigroup(psi: &LengthFunction, t: f64, x: &FourierElement) -> Result<FourierElement> {
    apply_multiplier(
        &MultiplierSpec::Semigroup {
            psi: psi.clone(),
            t,
        },
        x,
    )
}

/// Result of [`trace_moment`]. `exact` holds the Gaussian integer value when
/// the computation ran in exact mode.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Moment {
    pub order: usize,
    pub re: f64,
    pub im: f64,
    #[serde(serialize_with = "ser_opt_pair")]
    pub exact: Option<(BigInt, BigInt)>,
}

fn ser_opt_pair<S: Serializer>(
    v: &Option<(BigInt, BigInt)>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    match v {
        None => s.serialize_none(),
        Some((a, b)) => [a.to_string(), b.to_string()].serialize(s),
    }
}

impl Moment {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

fn gaussian_integer(z: Complex64) -> Option<(BigInt, BigInt)> {
    const LIMIT: f64 = 9.007_199_254_740_992e15;
    let ok = |v: f64| v.fract() == 0.0 && v.abs() < LIMIT;
    if ok(z.re) && ok(z.im) {
        Some((BigInt::from(z.re as i64), BigInt::from(z.im as i64)))
    } else {
        None
    }
}

type GaussMap = BTreeMap<Word, (BigInt, BigInt)>;

fn gauss_mul(x: &GaussMap, y: &GaussMap) -> Result<GaussMap> {
    let mut out: GaussMap = BTreeMap::new();
    for (g, (a, b)) in x {
        for (h, (c, d)) in y {
            let re = a * c - b * d;
            let im = a * d + b * c;
            let e = out.entry(g.multiply(h)?).or_insert_with(|| (BigInt::zero(), BigInt::zero()));
            e.0 += re;
            e.1 += im;
        }
    }
    out.retain(|_, (a, b)| !(a.is_zero() && b.is_zero()));
    Ok(out)
}

fn power_bound(base: u128, exp: usize) -> u128 {
    let mut out: u128 = 1;
    for _ in 0..exp {
        out = out.saturating_mul(base);
    }
    out
}

/// `τ((x*x)^m)` by exact expansion, i.e. `‖x‖_{2m}^{2m}`.
///
/// With scalar Gaussian-integer coefficients the expansion runs in exact
/// integer arithmetic. The expansion is split as `τ(y^a y^b)` with
/// `y = x*x`, `a + b = m`, so only `y^{⌈m/2⌉}` is materialized.
pub fn trace_moment(x: &FourierElement, m: usize) -> Result<Moment> {
    trace_moment_with_budget(x, m, &Budget::from_env())
}

pub fn trace_moment_with_budget(x: &FourierElement, m: usize, budget: &Budget) -> Result<Moment> {
    if m == 0 {
        return Ok(Moment {
            order: 0,
            re: 1.0,
            im: 0.0,
            exact: Some((BigInt::from(1), BigInt::zero())),
        });
    }
    let half = m.div_ceil(2);
    let growth = ball_size(x.rank, 2 * half * x.support_radius())
        .min(power_bound(x.len() as u128, 2 * half));
    let cap = budget.max_support(x.dim);
    if growth > cap {
        return Err(Error::BudgetExceeded {
            what: format!("support of (x*x)^{half}"),
            required: growth,
            cap,
        });
    }
    let e = Word::identity(x.rank);

    let exact: Option<GaussMap> = if x.dim == 1 {
        x.terms
            .iter()
            .map(|(g, c)| gaussian_integer(c[(0, 0)]).map(|z| (g.clone(), z)))
            .collect()
    } else {
        None
    };
    if let Some(xg) = exact {
        let adj: GaussMap = xg
            .iter()
            .map(|(g, (a, b))| (g.inverse(), (a.clone(), -b)))
            .collect();
        let y = gauss_mul(&adj, &xg)?;
        let lo = gauss_pow(&y, m / 2, &e)?;
        let hi = if half == m / 2 { lo.clone() } else { gauss_pow(&y, half, &e)? };
        let mut re = BigInt::zero();
        let mut im = BigInt::zero();
        for (g, (a, b)) in &lo {
            if let Some((c, d)) = hi.get(&g.inverse()) {
                re += a * c - b * d;
                im += a * d + b * c;
            }
        }
        return Ok(Moment {
            order: m,
            re: re.to_f64().unwrap_or(f64::INFINITY),
            im: im.to_f64().unwrap_or(f64::INFINITY),
            exact: Some((re, im)),
        });
    }

    let y = x.adjoint().multiply(x)?;
    let lo = float_pow(&y, m / 2)?;
    let hi = if half == m / 2 { lo.clone() } else { float_pow(&y, half)? };
    let mut acc = Complex64::zero();
    for (g, c) in &lo.terms {
        if let Some(d) = hi.terms.get(&g.inverse()) {
            acc += (c * d).trace();
        }
    }
    acc /= x.dim as f64;
    Ok(Moment {
        order: m,
        re: acc.re,
        im: acc.im,
        exact: None,
    })
}

fn gauss_pow(y: &GaussMap, k: usize, e: &Word) -> Result<GaussMap> {
    let mut acc: GaussMap = BTreeMap::new();
    acc.insert(e.clone(), (BigInt::from(1), BigInt::zero()));
    for _ in 0..k {
        acc = gauss_mul(&acc, y)?;
    }
    Ok(acc)
}

fn float_pow(y: &FourierElement, k: usize) -> Result<FourierElement> {
    let mut acc = FourierElement::monomial(
        &Word::identity(y.rank),
        Coeff::identity(y.dim, y.dim),
    );
    for _ in 0..k {
        acc = acc.multiply(y)?;
    }
    Ok(acc)
}

fn psi_values(x: &FourierElement, psi: &LengthFunction) -> Result<Vec<f64>> {
    x.terms.keys().map(|g| psi.evaluate_f64(g)).collect()
}

/// `a_{kj} = ψ_k ψ_j / (ψ_k + ψ_j)²`.
pub fn h1_kernel(psi: &[f64]) -> DMatrix<f64> {
    let n = psi.len();
    DMatrix::from_fn(n, n, |k, j| {
        let s = psi[k] + psi[j];
        psi[k] * psi[j] / (s * s)
    })
}

/// `Σ_{k,j} a_{kj} (c_k λ_{h_k})*(c_j λ_{h_j})` for a kernel indexed like the support of `x`.
pub fn kernel_form(x: &FourierElement, a: &DMatrix<f64>) -> Result<FourierElement> {
    let terms: Vec<(&Word, &Coeff)> = x.terms.iter().collect();
    if a.nrows() != terms.len() || a.ncols() != terms.len() {
        return Err(Error::DimensionMismatch {
            left: terms.len(),
            right: a.nrows(),
        });
    }
    let mut out = FourierElement::zero(x.rank, x.dim);
    for (k, (hk, ck)) in terms.iter().enumerate() {
        let hk_inv = hk.inverse();
        let ck_adj = ck.adjoint();
        for (j, (hj, cj)) in terms.iter().enumerate() {
            let w = a[(k, j)];
            if w == 0.0 {
                continue;
            }
            out.accumulate(
                hk_inv.multiply(hj)?,
                &ck_adj * *cj * Complex64::new(w, 0.0),
            );
        }
    }
    Ok(out)
}

/// `∫₀^∞ |∂_s T_s x|² s ds`, in closed form.
pub fn h1_integrand(x: &FourierElement, psi: &LengthFunction) -> Result<FourierElement> {
    if x.terms.contains_key(&Word::identity(x.rank)) {
        return Err(Error::IdentityInSupport);
    }
    let values = psi_values(x, psi)?;
    if let Some(index) = values.iter().position(|&v| v.is_nan() || v <= 0.0) {
        return Err(Error::ZeroLength { index });
    }
    kernel_form(x, &h1_kernel(&values))
}

/// `T_t|x − T_t x|²`, computed by applying the semigroup directly.
pub fn bmo_defect(x: &FourierElement, t: f64, psi: &LengthFunction) -> Result<FourierElement> {
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!("t must be nonnegative, got {t}")));
    }
    let d = x.sub(&semigroup(psi, t, x)?)?;
    semigroup(psi, t, &d.adjoint().multiply(&d)?)
}

/// `a_{kj}(t) = e^{-tψ(h_k⁻¹h_j)} (1 − e^{-tψ(h_k⁻¹)}) (1 − e^{-tψ(h_j)})`
/// over the support of `x` in its stored order.
pub fn bmo_kernel(x: &FourierElement, psi: &LengthFunction, t: f64) -> Result<DMatrix<f64>> {
    let words: Vec<&Word> = x.terms.keys().collect();
    let n = words.len();
    let mut left = Vec::with_capacity(n);
    let mut right = Vec::with_capacity(n);
    for w in &words {
        left.push(1.0 - (-t * psi.evaluate_f64(&w.inverse())?).exp());
        right.push(1.0 - (-t * psi.evaluate_f64(w)?).exp());
    }
    let mut a = DMatrix::zeros(n, n);
    for k in 0..n {
        let inv = words[k].inverse();
        for j in 0..n {
            let q = inv.multiply(words[j])?;
            a[(k, j)] = (-t * psi.evaluate_f64(&q)?).exp() * left[k] * right[j];
        }
    }
    Ok(a)
}

/// `(sup_j Σ_k a_{kj}, sup_k Σ_j a_{kj})`.
pub fn schur_sums(a: &DMatrix<f64>) -> Result<(f64, f64)> {
    for k in 0..a.nrows() {
        for j in 0..a.ncols() {
            let v = a[(k, j)];
            if v < 0.0 || v.is_nan() {
                return Err(Error::NegativeKernelEntry { row: k, col: j, value: v });
            }
        }
    }
    let col = a.column_iter().map(|c| c.sum()).fold(0.0, f64::max);
    let row = a.row_iter().map(|r| r.sum()).fold(0.0, f64::max);
    Ok((col, row))
}

/// `1 + 1/δ + 1/(1 − e^{−δ²})`; tends to 2 as `δ → ∞`, infinite for `δ ≤ 0`.
pub fn c_delta(delta: f64) -> f64 {
    if delta.is_infinite() && delta > 0.0 {
        return 2.0;
    }
    if !(delta > 0.0) {
        return f64::INFINITY;
    }
    1.0 + 1.0 / delta + 1.0 / (-(-delta * delta).exp_m1())
}

pub const DEFAULT_T_POINTS: usize = 48;

/// 48 log-spaced points in `[10⁻³/ψ_max, 10/ψ_min]` over the given ψ values.
pub fn default_t_grid(psi: &[f64]) -> Vec<f64> {
    let positive: Vec<f64> = psi.iter().copied().filter(|v| *v > 0.0).collect();
    let (lo, hi) = if positive.is_empty() {
        (1.0, 1.0)
    } else {
        (
            positive.iter().copied().fold(f64::INFINITY, f64::min),
            positive.iter().copied().fold(0.0, f64::max),
        )
    };
    log_grid(1e-3 / hi, 10.0 / lo, DEFAULT_T_POINTS)
}

pub fn log_grid(start: f64, end: f64, points: usize) -> Vec<f64> {
    if points <= 1 {
        return vec![start];
    }
    let (a, b) = (start.ln(), end.ln());
    (0..points)
        .map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp())
        .collect()
}

/// The default grid for the support of `x`.
pub fn default_t_grid_for(x: &FourierElement, psi: &LengthFunction) -> Result<Vec<f64>> {
    Ok(default_t_grid(&psi_values(x, psi)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Word {
        Word::parse(2, s).unwrap()
    }

    fn lam(s: &str) -> FourierElement {
        FourierElement::lambda(&w(s))
    }

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn scalar_at(x: &FourierElement, g: &Word) -> Complex64 {
        x.coefficient(g).map(|m| m[(0, 0)]).unwrap_or_default()
    }

    #[test]
    fn algebra_examples() {
        assert_eq!(lam("a").multiply(&lam("a^-1")).unwrap(), lam("1"));
        let s = lam("a").add(&lam("b")).unwrap();
        assert_eq!(s.adjoint(), lam("a^-1").add(&lam("b^-1")).unwrap());
        let x = lam("a").add(&lam("a^-1")).unwrap();
        let sq = x.multiply(&x).unwrap();
        assert_eq!(sq.len(), 3);
        assert_eq!(scalar_at(&sq, &w("a^2")), c(1.0));
        assert_eq!(scalar_at(&sq, &Word::identity(2)), c(2.0));
        assert_eq!(scalar_at(&sq, &w("a^-2")), c(1.0));
        assert_eq!(x.sub(&x).unwrap(), FourierElement::zero(2, 1));
        assert!(matches!(
            x.add(&FourierElement::zero(2, 2)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn multipliers() {
        let psi = LengthFunction::WordLength;
        let e = lam("1");
        assert_eq!(semigroup(&psi, 3.0, &e).unwrap(), e);
        let ta = semigroup(&psi, 1.0, &lam("a")).unwrap();
        assert!((scalar_at(&ta, &w("a")).re - (-1.0f64).exp()).abs() < 1e-15);
        let x = lam("a b").add(&lam("b^-2").scale(c(2.0))).unwrap();
        assert_eq!(semigroup(&psi, 0.0, &x).unwrap(), x);
        let st = semigroup(&psi, 0.3, &semigroup(&psi, 0.5, &x).unwrap()).unwrap();
        let direct = semigroup(&psi, 0.8, &x).unwrap();
        for (g, v) in direct.terms() {
            assert!((st.coefficient(g).unwrap() - v).norm() < 1e-14);
        }
        let table = MultiplierSpec::Table {
            entries: BTreeMap::new(),
            default: None,
        };
        assert!(matches!(
            apply_multiplier(&table, &x),
            Err(Error::SymbolUndefined(_))
        ));
    }

    #[test]
    fn moments_exact() {
        let a = Word::generator(1, 1).unwrap();
        let x = FourierElement::lambda(&a)
            .add(&FourierElement::lambda(&a.inverse()))
            .unwrap();
        let m = trace_moment(&x, 2).unwrap();
        assert_eq!(m.exact, Some((BigInt::from(6), BigInt::zero())));
        let m = trace_moment(&x, 3).unwrap();
        // C(6,3)
        assert_eq!(m.re, 20.0);
    }

    #[test]
    fn moments_match_path_count() {
        // τ((x*x)^2) for x = λ_a + λ_b counts words s1* s2 s3* s4 = e
        let x = lam("a").add(&lam("b")).unwrap();
        let gens = [w("a"), w("b")];
        let mut count = 0;
        for p in 0..16usize {
            let pick = |i: usize| &gens[(p >> i) & 1];
            let prod = pick(0)
                .inverse()
                .multiply(pick(1))
                .unwrap()
                .multiply(&pick(2).inverse())
                .unwrap()
                .multiply(pick(3))
                .unwrap();
            if prod.is_identity() {
                count += 1;
            }
        }
        assert_eq!(trace_moment(&x, 2).unwrap().re, count as f64);
    }

    #[test]
    fn parseval_matrix() {
        let m1 = Coeff::from_row_slice(2, 2, &[c(1.0), Complex64::new(0.0, 2.0), c(0.0), c(-1.0)]);
        let m2 = Coeff::from_row_slice(2, 2, &[c(0.5), c(0.0), c(3.0), c(1.0)]);
        let x = FourierElement::from_terms(2, 2, [(w("a"), m1), (w("a b^-1"), m2)]).unwrap();
        let direct = x.adjoint().multiply(&x).unwrap().trace();
        assert!((direct.re - x.l2_norm_squared()).abs() < 1e-12);
        let m = trace_moment(&x, 1).unwrap();
        assert!(m.exact.is_none());
        assert!((m.re - x.l2_norm_squared()).abs() < 1e-12);
    }

    #[test]
    fn moment_budget() {
        let x = lam("a").add(&lam("b")).unwrap().add(&lam("a b a")).unwrap();
        let tiny = Budget { bytes: 2000 };
        assert!(matches!(
            trace_moment_with_budget(&x, 4, &tiny),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn h1_examples() {
        let psi = LengthFunction::WordLength;
        let x = lam("a b").scale(c(3.0));
        let y = h1_integrand(&x, &psi).unwrap();
        assert_eq!(y.len(), 1);
        assert!((y.trace().re - 9.0 / 4.0).abs() < 1e-15);
        let k = h1_kernel(&[1.0, 2.0]);
        assert_eq!(k[(0, 0)], 0.25);
        assert!((k[(0, 1)] - 2.0 / 9.0).abs() < 1e-16);
        assert!(matches!(h1_integrand(&lam("1"), &psi), Err(Error::IdentityInSupport)));
    }

    #[test]
    fn h1_matches_quadrature() {
        let psi = LengthFunction::WordLength;
        let x = lam("a")
            .add(&lam("b a^2").scale(Complex64::new(0.5, -1.0)))
            .unwrap()
            .add(&lam("b^-3").scale(c(-2.0)))
            .unwrap();
        let closed = h1_integrand(&x, &psi).unwrap();
        // ∂_s T_s x has coefficient −ψ e^{−sψ} c; trapezoid in u = ln s on s²|∂|².
        let (u0, u1, n) = (-16.0f64, 5.0f64, 3000);
        let du = (u1 - u0) / n as f64;
        let mut acc = FourierElement::zero(2, 1);
        for i in 0..=n {
            let s = (u0 + du * i as f64).exp();
            let weight = if i == 0 || i == n { 0.5 * du } else { du };
            let mut d = FourierElement::zero(2, 1);
            for (g, cg) in x.terms() {
                let p = psi.evaluate_f64(g).unwrap();
                d.accumulate(g.clone(), cg * c(-p * (-s * p).exp()));
            }
            let sq = d.adjoint().multiply(&d).unwrap();
            acc = acc.add(&sq.scale(c(s * s * weight))).unwrap();
        }
        for (g, v) in closed.terms() {
            assert!((acc.coefficient_or_zero(g)[(0, 0)] - v[(0, 0)]).norm() < 1e-6, "{g}");
        }
    }

    #[test]
    fn bmo_routes_agree() {
        let psi = LengthFunction::WordLength;
        let x = lam("a")
            .add(&lam("a^2 b").scale(c(2.0)))
            .unwrap()
            .add(&lam("b^-1").scale(Complex64::new(0.0, 1.0)))
            .unwrap();
        for t in [0.0, 0.1, 0.7, 3.0] {
            let direct = bmo_defect(&x, t, &psi).unwrap();
            let via_kernel = kernel_form(&x, &bmo_kernel(&x, &psi, t).unwrap()).unwrap();
            let diff = direct.sub(&via_kernel).unwrap();
            assert!(diff.terms().all(|(_, m)| m.norm() < 1e-12), "t={t}");
            if t == 0.0 {
                assert!(direct.is_zero());
            }
            let a = bmo_kernel(&x, &psi, t).unwrap();
            assert!((a.clone() - a.transpose()).abs().max() < 1e-15);
        }
    }

    #[test]
    fn single_term_defect() {
        let psi = LengthFunction::WordLength;
        let x = lam("a b").scale(c(2.0));
        for t in [0.05, 0.5, 2.0] {
            let d = bmo_defect(&x, t, &psi).unwrap();
            let expect = 4.0 * (1.0 - (-2.0 * t).exp()).powi(2);
            assert_eq!(d.len(), 1);
            assert!((d.trace().re - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn schur_and_constants() {
        assert_eq!(c_delta(f64::INFINITY), 2.0);
        assert!((c_delta(1.0) - (2.0 + 1.0 / (1.0 - (-1.0f64).exp()))).abs() < 1e-14);
        assert!((c_delta(1.0) - 3.58198).abs() < 1e-5);
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.5, 0.25]);
        assert_eq!(schur_sums(&a).unwrap(), (2.25, 3.0));
        let bad = DMatrix::from_row_slice(1, 1, &[-1.0]);
        assert!(schur_sums(&bad).is_err());
    }

    #[test]
    fn grid_shape() {
        let g = default_t_grid(&[2.0, 64.0]);
        assert_eq!(g.len(), 48);
        assert!((g[0] - 1e-3 / 64.0).abs() < 1e-18);
        assert!((g[47] - 5.0).abs() < 1e-12);
    }

    #[test]
    fn json_round_trip() {
        let m1 = Coeff::from_row_slice(2, 2, &[c(1.0), Complex64::new(0.0, 2.0), c(0.0), c(-1.0)]);
        let x = FourierElement::from_terms(2, 2, [(w("a^2 b^-1"), m1)]).unwrap();
        let j = x.to_json();
        assert_eq!(j["terms"][0]["word"], "a^2 b^-1");
        assert_eq!(j["terms"][0]["coeff"][1], json!([0.0, 2.0]));
        assert_eq!(FourierElement::from_json(&j).unwrap(), x);
        assert!(FourierElement::from_json(&json!({"rank": 2})).is_err());
    }
}
