//! End-to-end checks for lacunary Fourier series: the BMO/H¹ two-sided
//! estimates against coefficient norms, L⁴ bounds, the split of a product
//! into window sums, and decompositions by positivity and `J_AB` sign.

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_traits::{Signed, Zero};
use serde::{Serialize, Serializer};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::free_words::{LengthFunction, Word};
use crate::lacunarity::{psi_lacunary_delta, rudin_count, PsiCertificate};
use crate::magnus::{j_profile, subgroup_membership};
use crate::magnus_order::{decided_cmp, is_positive, positive_part_split};
use crate::nc_fourier::{c_delta, trace_moment, Coeff, FourierElement};
use crate::norm_estimation::{
    bmo_norm_estimate, dense_norm, h1_norm_estimate, spectral_trace, trace_sqrt, BmoReport,
    NormConfig, SpectralTraceReport, DEFAULT_RADIUS,
};

/// Slack allowed on asserted inequalities between floating point quantities.
const SLACK: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InequalityCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    /// Reported-only checks do not enter the verdict.
    pub asserted: bool,
}

impl InequalityCheck {
    /// `lhs ≤ rhs` up to a relative slack.
    fn le(name: &str, lhs: f64, rhs: f64, slack: f64, asserted: bool) -> Self {
        InequalityCheck {
            name: name.into(),
            lhs,
            rhs,
            holds: lhs <= rhs + slack * rhs.abs().max(1.0),
            asserted,
        }
    }

    fn ge(name: &str, lhs: f64, rhs: f64, slack: f64, asserted: bool) -> Self {
        InequalityCheck {
            name: name.into(),
            lhs,
            rhs,
            holds: lhs + slack * rhs.abs().max(1.0) >= rhs,
            asserted,
        }
    }
}

fn all_asserted_hold(checks: &[InequalityCheck]) -> bool {
    checks.iter().filter(|c| c.asserted).all(|c| c.holds)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PaleyConfig {
    pub radius: usize,
    /// `None` selects the default grid for the support.
    pub t_grid: Option<Vec<f64>>,
    pub norm: NormConfig,
}

impl Default for PaleyConfig {
    fn default() -> Self {
        PaleyConfig {
            radius: DEFAULT_RADIUS,
            t_grid: None,
            norm: NormConfig::default(),
        }
    }
}

/// `‖Σ c_k* c_k‖` and `‖Σ c_k c_k*‖`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CoefficientNorms {
    pub column: f64,
    pub row: f64,
}

impl CoefficientNorms {
    pub fn max(&self) -> f64 {
        self.column.max(self.row)
    }

    pub fn min(&self) -> f64 {
        self.column.min(self.row)
    }
}

pub fn coefficient_norms(coeffs: &[Coeff]) -> Result<CoefficientNorms> {
    let n = common_dim(coeffs)?;
    let mut col = Coeff::zeros(n, n);
    let mut row = Coeff::zeros(n, n);
    for c in coeffs {
        col += c.adjoint() * c;
        row += c * c.adjoint();
    }
    Ok(CoefficientNorms {
        column: dense_norm(&col),
        row: dense_norm(&row),
    })
}

fn common_dim(coeffs: &[Coeff]) -> Result<usize> {
    let n = coeffs.first().map_or(1, |c| c.nrows());
    for c in coeffs {
        if c.nrows() != n || c.ncols() != n {
            return Err(Error::DimensionMismatch {
                left: n,
                right: c.nrows().max(c.ncols()),
            });
        }
    }
    Ok(n)
}

/// `Σ c_k λ_{h_k}`.
pub fn series(rank: usize, seq: &[Word], coeffs: &[Coeff]) -> Result<FourierElement> {
    if seq.len() != coeffs.len() {
        return Err(Error::InvalidParameter(format!(
            "{} words but {} coefficients",
            seq.len(),
            coeffs.len()
        )));
    }
    let n = common_dim(coeffs)?;
    FourierElement::from_terms(rank, n, seq.iter().cloned().zip(coeffs.iter().cloned()))
}

fn certify(psi: &LengthFunction, seq: &[Word]) -> Result<PsiCertificate> {
    let cert = psi_lacunary_delta(psi, seq)?;
    if !cert.verdict.passed() {
        return Err(Error::NotLacunary(
            serde_json::to_string(&cert).unwrap_or_else(|_| "certificate unavailable".into()),
        ));
    }
    Ok(cert)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PaleyReport {
    pub rank: usize,
    pub sequence: Vec<Word>,
    pub length: LengthFunction,
    pub lacunarity: PsiCertificate,
    pub delta: Option<f64>,
    pub c_delta: f64,
    pub coefficients: CoefficientNorms,
    pub bmo: BmoReport,
    pub h1: SpectralTraceReport,
    pub checks: Vec<InequalityCheck>,
    pub passed: bool,
}

/// Evaluates both sides of the BMO and H¹ estimates for `x = Σ c_k λ_{h_k}`.
///
/// Asserted: the analytic lower bounds stay below `c_δ ‖Σ c_k*c_k‖` (BMO) and
/// `½ τ_n((Σ c_k*c_k)^{1/2})` (H¹), and the trace bound stays above
/// `(4/27) max_k τ_n(c_k*c_k)`. Lower-direction ratios are reported only.
pub fn theorem1_check(
    rank: usize,
    seq: &[Word],
    coeffs: &[Coeff],
    psi: &LengthFunction,
    cfg: &PaleyConfig,
) -> Result<PaleyReport> {
    let lacunarity = certify(psi, seq)?;
    let delta = lacunarity.delta.as_ref().map(|d| d.to_f64());
    let cd = c_delta(delta.unwrap_or(f64::INFINITY));
    let x = series(rank, seq, coeffs)?;
    let n = x.dim();
    let coefficients = coefficient_norms(coeffs)?;
    let bmo = bmo_norm_estimate(&x, psi, cfg.t_grid.as_deref(), cfg.radius, &cfg.norm)?;
    let h1 = h1_norm_estimate(&x, psi, cfg.radius, &cfg.norm)?;

    let mut col_sum = Coeff::zeros(n, n);
    for c in coeffs {
        col_sum += c.adjoint() * c;
    }
    let h1_rhs = 0.5 * trace_sqrt(&col_sum) / n as f64;
    let floor = coeffs
        .iter()
        .map(|c| c.iter().map(|z| z.norm_sqr()).sum::<f64>() / n as f64)
        .fold(0.0, f64::max);
    let checks = vec![
        InequalityCheck::le(
            "bmo_operator_upper",
            bmo.operator_bound.powi(2),
            cd * coefficients.column,
            SLACK,
            true,
        ),
        InequalityCheck::le(
            "bmo_trace_upper",
            bmo.trace_bound.powi(2),
            cd * coefficients.column,
            SLACK,
            true,
        ),
        InequalityCheck::ge("bmo_trace_floor", bmo.trace_bound.powi(2), 4.0 / 27.0 * floor, SLACK, true),
        InequalityCheck::le("h1_upper", h1.value, h1_rhs, 1e-6, true),
        InequalityCheck::ge(
            "bmo_operator_lower_ratio",
            bmo.operator_bound.powi(2),
            coefficients.column / cd,
            0.0,
            false,
        ),
        InequalityCheck::ge("h1_lower_ratio", h1.value, h1_rhs / cd, 0.0, false),
    ];
    let passed = all_asserted_hold(&checks);
    Ok(PaleyReport {
        rank,
        sequence: seq.to_vec(),
        length: psi.clone(),
        lacunarity,
        delta,
        c_delta: cd,
        coefficients,
        bmo,
        h1,
        checks,
        passed,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Lambda4Report {
    pub rank: usize,
    pub sequence: Vec<Word>,
    pub delta: Option<f64>,
    pub c_delta: f64,
    /// `τ((x*x)²)`.
    pub fourth_moment: f64,
    pub exact_fourth_moment: Option<String>,
    pub l4: f64,
    pub l2: f64,
    pub coefficients: CoefficientNorms,
    pub checks: Vec<InequalityCheck>,
    pub passed: bool,
}

/// `‖x‖₂ ≤ ‖x‖₄ ≤ c_δ^{1/4} · 4 · max(‖Σ c_k c_k*‖, ‖Σ c_k* c_k‖)^{1/2}`.
pub fn lambda4_check(
    rank: usize,
    seq: &[Word],
    coeffs: &[Coeff],
    psi: &LengthFunction,
) -> Result<Lambda4Report> {
    let cert = certify(psi, seq)?;
    let delta = cert.delta.as_ref().map(|d| d.to_f64());
    let cd = c_delta(delta.unwrap_or(f64::INFINITY));
    let x = series(rank, seq, coeffs)?;
    let moment = trace_moment(&x, 2)?;
    let l4 = moment.re.max(0.0).powf(0.25);
    let l2 = x.l2_norm_squared().sqrt();
    let coefficients = coefficient_norms(coeffs)?;
    let checks = vec![
        InequalityCheck::le(
            "l4_upper",
            l4,
            cd.powf(0.25) * 4.0 * coefficients.max().sqrt(),
            SLACK,
            true,
        ),
        InequalityCheck::ge("l4_above_l2", l4, l2, SLACK, true),
    ];
    let passed = all_asserted_hold(&checks);
    Ok(Lambda4Report {
        rank,
        sequence: seq.to_vec(),
        delta,
        c_delta: cd,
        fourth_moment: moment.re,
        exact_fourth_moment: moment.exact.as_ref().map(|(re, im)| {
            if im.is_zero() {
                re.to_string()
            } else {
                format!("{re}{}{}i", if im.is_negative() { "" } else { "+" }, im)
            }
        }),
        l4,
        l2,
        coefficients,
        checks,
        passed,
    })
}

fn ser_coeffs<S: Serializer>(v: &[Coeff], s: S) -> std::result::Result<S::Ok, S::Error> {
    v.iter().map(coeff_json).collect::<Vec<_>>().serialize(s)
}

/// Row-major `[[re, im], …]`.
pub fn coeff_json(c: &Coeff) -> Value {
    let mut out = Vec::with_capacity(c.len());
    for i in 0..c.nrows() {
        for j in 0..c.ncols() {
            out.push(json!([c[(i, j)].re, c[(i, j)].im]));
        }
    }
    Value::Array(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SplitReport {
    pub targets: Vec<Word>,
    /// `A_i = Σ_{e ≤ h ≤ g_i < h²} ŷ(h) ẑ(h⁻¹g_i)`.
    #[serde(serialize_with = "ser_coeffs")]
    pub a: Vec<Coeff>,
    /// `B_i = Σ_{e ≤ h, h² ≤ g_i} ŷ(h) ẑ(h⁻¹g_i)`.
    #[serde(serialize_with = "ser_coeffs")]
    pub b: Vec<Coeff>,
    /// Largest window count `#{i : u ≤ g_i ≤ u²}` over the `u` the sums use.
    pub k: usize,
    /// `τ_n((Σ A_i A_i*)^{1/2})`.
    pub row_norm_a: f64,
    /// `τ_n((Σ B_i* B_i)^{1/2})`.
    pub column_norm_b: f64,
    pub y_l2: f64,
    pub z_l2: f64,
    /// `max_i ‖A_i + B_i − (yz)^(g_i)‖`.
    pub residual: f64,
    pub checks: Vec<InequalityCheck>,
    pub passed: bool,
}

fn require_positive_support(x: &FourierElement) -> Result<()> {
    for g in x.support() {
        if !is_positive(g)? {
            return Err(Error::NotPositive(g.to_string()));
        }
    }
    Ok(())
}

/// Splits `(yz)^(g_i)` by whether `g_i < h²` or `h² ≤ g_i`, for `y`, `z`
/// supported in the positive cone.
pub fn paley_split(y: &FourierElement, z: &FourierElement, targets: &[Word]) -> Result<SplitReport> {
    if y.rank() != z.rank() {
        return Err(Error::RankMismatch {
            left: y.rank(),
            right: z.rank(),
        });
    }
    if y.dim() != z.dim() {
        return Err(Error::DimensionMismatch {
            left: y.dim(),
            right: z.dim(),
        });
    }
    require_positive_support(y)?;
    require_positive_support(z)?;
    for g in targets {
        if g.rank() != y.rank() {
            return Err(Error::RankMismatch {
                left: y.rank(),
                right: g.rank(),
            });
        }
        if !is_positive(g)? {
            return Err(Error::NotPositive(g.to_string()));
        }
    }
    let n = y.dim();
    let yz = y.multiply(z)?;
    let mut a = Vec::with_capacity(targets.len());
    let mut b = Vec::with_capacity(targets.len());
    let mut window_words: Vec<Word> = Vec::new();
    let mut residual: f64 = 0.0;
    for g in targets {
        let mut ai = Coeff::zeros(n, n);
        let mut bi = Coeff::zeros(n, n);
        for (h, yh) in y.terms() {
            let u = h.left_quotient(g)?;
            let Some(zu) = z.coefficient(&u) else { continue };
            let term = yh * zu;
            let h2 = h.multiply(h)?;
            if decided_cmp(g, &h2)?.is_lt() {
                ai += term;
                window_words.push(h.clone());
            } else {
                bi += term;
                window_words.push(u);
            }
        }
        let direct = yz.coefficient_or_zero(g);
        residual = residual.max((&ai + &bi - direct).norm());
        a.push(ai);
        b.push(bi);
    }
    window_words.sort();
    window_words.dedup();
    let mut k = 0;
    for u in &window_words {
        k = k.max(rudin_count(targets, u)?);
    }
    let mut aa = Coeff::zeros(n, n);
    let mut bb = Coeff::zeros(n, n);
    for (ai, bi) in a.iter().zip(&b) {
        aa += ai * ai.adjoint();
        bb += bi.adjoint() * bi;
    }
    let row_norm_a = trace_sqrt(&aa) / n as f64;
    let column_norm_b = trace_sqrt(&bb) / n as f64;
    let y_l2 = y.l2_norm_squared().sqrt();
    let z_l2 = z.l2_norm_squared().sqrt();
    let bound = (k as f64).sqrt() * y_l2 * z_l2;
    let checks = vec![
        InequalityCheck::le("row_norm_a", row_norm_a, bound, SLACK, true),
        InequalityCheck::le("column_norm_b", column_norm_b, bound, SLACK, true),
    ];
    let passed = all_asserted_hold(&checks) && residual == 0.0;
    Ok(SplitReport {
        targets: targets.to_vec(),
        a,
        b,
        k,
        row_norm_a,
        column_norm_b,
        y_l2,
        z_l2,
        residual,
        checks,
        passed,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReH1Report {
    /// `τ|x₊| + τ|x₋|`.
    pub value: f64,
    pub positive: SpectralTraceReport,
    pub negative: SpectralTraceReport,
}

/// `τ|x₊| + τ|x₋|` with `|y| = (y*y)^{1/2}` estimated on `B_R`.
pub fn reh1_norm(x: &FourierElement, radius: usize, cfg: &NormConfig) -> Result<ReH1Report> {
    let (plus, minus) = positive_part_split(x)?;
    absolute_pair(&plus, &minus, radius, cfg)
}

fn absolute_pair(
    p: &FourierElement,
    q: &FourierElement,
    radius: usize,
    cfg: &NormConfig,
) -> Result<ReH1Report> {
    let positive = spectral_trace(f64::sqrt, &p.adjoint().multiply(p)?, radius, cfg)?;
    let negative = spectral_trace(f64::sqrt, &q.adjoint().multiply(q)?, radius, cfg)?;
    Ok(ReH1Report {
        value: positive.value + negative.value,
        positive,
        negative,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JabDecomposition {
    /// Restriction to `ker ψ_z`.
    pub p0: FourierElement,
    /// Restriction to `{g ∈ ker ψ_z : J_AB(g) = 0}`.
    pub p00: FourierElement,
    /// Restriction to `J_AB ≥ 0`.
    pub ab_plus: FourierElement,
    /// Restriction to `J_AB < 0`.
    pub ab_minus: FourierElement,
}

pub fn jab_decomposition(x: &FourierElement) -> Result<JabDecomposition> {
    if x.rank() != 2 {
        return Err(Error::RankRequired {
            expected: 2,
            actual: x.rank(),
        });
    }
    let mut f0 = std::collections::BTreeSet::new();
    let mut f00 = std::collections::BTreeSet::new();
    let mut nonneg = std::collections::BTreeSet::new();
    for g in x.support() {
        let m = subgroup_membership(g)?;
        if m.in_f0 {
            f0.insert(g.clone());
        }
        if m.in_f00 {
            f00.insert(g.clone());
        }
        if !j_profile(g)?.j_ab.is_negative() {
            nonneg.insert(g.clone());
        }
    }
    Ok(JabDecomposition {
        p0: x.restrict(|g| f0.contains(g)),
        p00: x.restrict(|g| f00.contains(g)),
        ab_plus: x.restrict(|g| nonneg.contains(g)),
        ab_minus: x.restrict(|g| !nonneg.contains(g)),
    })
}

/// `τ|x_{ab+}| + τ|x_{ab−}|`.
pub fn jab_functional(x: &FourierElement, radius: usize, cfg: &NormConfig) -> Result<ReH1Report> {
    let d = jab_decomposition(x)?;
    absolute_pair(&d.ab_plus, &d.ab_minus, radius, cfg)
}

/// Scalar coefficient `c` as a 1×1 matrix.
pub fn scalar(c: f64) -> Coeff {
    Coeff::from_element(1, 1, Complex64::new(c, 0.0))
}

/// Matrix unit `e_{i,j}` of size `n` (0-based indices).
pub fn matrix_unit(n: usize, i: usize, j: usize) -> Coeff {
    let mut m = DMatrix::zeros(n, n);
    m[(i, j)] = Complex64::new(1.0, 0.0);
    m
}
