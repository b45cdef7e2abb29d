//! Lacunarity certificates: ψ-lacunary sequences, lacunary integer sequences,
//! window counts `N(E, g) = #{h ∈ E : g ≤ h ≤ g²}` and the `J`-coefficient
//! criteria for rank-2 sequences.
//!
//! `N(E)` is a supremum over the whole positive cone; everything here reports
//! lower bounds attained at explicit candidates.

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::cnd_kernels::Verdict;
use crate::error::{Error, Result};
use crate::free_words::{ball, bigint_to_json, LengthFunction, Word};
use crate::magnus::j_profile;
use crate::magnus_order::{decided_cmp, is_positive};
use crate::real::Real;

fn ser_bigints<S: Serializer>(v: &[BigInt], s: S) -> std::result::Result<S::Ok, S::Error> {
    v.iter().map(bigint_to_json).collect::<Vec<_>>().serialize(s)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PsiCertificate {
    pub kind: &'static str,
    pub length: LengthFunction,
    pub sequence: Vec<Word>,
    pub values: Vec<Real>,
    /// `min_k ψ(h_{k+1})/ψ(h_k) − 1`.
    pub growth: Option<Real>,
    /// `k` where the growth minimum is attained.
    pub growth_witness: Option<usize>,
    /// `min_{k≠k'} ψ(h_k⁻¹h_{k'}) / max(ψ(h_k), ψ(h_{k'}))`.
    pub separation: Option<Real>,
    pub separation_witness: Option<(usize, usize)>,
    /// Largest feasible δ; `None` when no condition applies (fewer than two terms).
    pub delta: Option<Real>,
    pub verdict: Verdict,
}

impl PsiCertificate {
    pub fn delta_f64(&self) -> f64 {
        self.delta.as_ref().map_or(f64::INFINITY, Real::to_f64)
    }
}

fn ratio(num: &Real, den: &Real) -> Real {
    num.div(den).expect("denominator checked positive")
}

/// Largest δ with `ψ(h_{k+1}) ≥ (1+δ)ψ(h_k)` and `ψ(h_k⁻¹h_{k'}) ≥ δ max(ψ(h_k), ψ(h_{k'}))`.
pub fn psi_lacunary_delta(psi: &LengthFunction, seq: &[Word]) -> Result<PsiCertificate> {
    let values = seq
        .iter()
        .map(|h| psi.evaluate(h))
        .collect::<Result<Vec<_>>>()?;
    if let Some(index) = values.iter().position(|v| !v.is_positive()) {
        return Err(Error::ZeroLength { index });
    }
    let mut growth: Option<(Real, usize)> = None;
    for k in 0..values.len().saturating_sub(1) {
        let r = ratio(&values[k + 1], &values[k]).sub(&Real::integer(1));
        if growth.as_ref().map_or(true, |(g, _)| r < *g) {
            growth = Some((r, k));
        }
    }
    let per_row: Vec<Option<(Real, usize, usize)>> = (0..seq.len())
        .into_par_iter()
        .map(|k| -> Result<Option<(Real, usize, usize)>> {
            let inv = seq[k].inverse();
            let mut best: Option<(Real, usize, usize)> = None;
            for j in (k + 1)..seq.len() {
                let q = psi.evaluate(&inv.multiply(&seq[j])?)?;
                let r = ratio(&q, &values[k].clone().max(values[j].clone()));
                if best.as_ref().map_or(true, |(b, _, _)| r < *b) {
                    best = Some((r, k, j));
                }
            }
            Ok(best)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut separation: Option<(Real, usize, usize)> = None;
    for cand in per_row.into_iter().flatten() {
        if separation.as_ref().map_or(true, |(b, _, _)| cand.0 < *b) {
            separation = Some(cand);
        }
    }
    let delta = match (&growth, &separation) {
        (Some((g, _)), Some((s, _, _))) => Some(g.clone().min(s.clone())),
        (Some((g, _)), None) => Some(g.clone()),
        (None, Some((s, _, _))) => Some(s.clone()),
        (None, None) => None,
    };
    let verdict = Verdict::from_bool(delta.as_ref().map_or(true, Real::is_positive));
    Ok(PsiCertificate {
        kind: "psi",
        length: psi.clone(),
        sequence: seq.to_vec(),
        values,
        growth_witness: growth.as_ref().map(|g| g.1),
        growth: growth.map(|g| g.0),
        separation_witness: separation.as_ref().map(|s| (s.1, s.2)),
        separation: separation.map(|s| s.0),
        delta,
        verdict,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IntegerCertificate {
    pub kind: &'static str,
    #[serde(serialize_with = "ser_bigints")]
    pub sequence: Vec<BigInt>,
    /// `min_n ℓ_{n+1}/ℓ_n`, exact; `None` for sequences of length < 2.
    pub delta: Option<Real>,
    /// `n` where the minimum ratio is attained.
    pub witness: Option<usize>,
    pub verdict: Verdict,
}

/// `δ = min ℓ_{n+1}/ℓ_n`, passing iff `δ > 1`.
pub fn integer_lacunary(seq: &[BigInt]) -> Result<IntegerCertificate> {
    if let Some(index) = seq.iter().position(Zero::is_zero) {
        return Err(Error::ZeroEntry { index });
    }
    let mut best: Option<(Real, usize)> = None;
    for n in 0..seq.len().saturating_sub(1) {
        let r = Real::ratio(seq[n + 1].clone(), seq[n].clone());
        if best.as_ref().map_or(true, |(b, _)| r < *b) {
            best = Some((r, n));
        }
    }
    let one = Real::integer(1);
    let verdict = Verdict::from_bool(best.as_ref().map_or(true, |(b, _)| *b > one));
    Ok(IntegerCertificate {
        kind: "integer",
        sequence: seq.to_vec(),
        witness: best.as_ref().map(|b| b.1),
        delta: best.map(|b| b.0),
        verdict,
    })
}

/// `N(E, g) = #{h ∈ E : g ≤ h ≤ g²}` for `g ≥ e`.
pub fn rudin_count(set: &[Word], g: &Word) -> Result<usize> {
    if !is_positive(g)? {
        return Err(Error::NotPositive(g.to_string()));
    }
    let g2 = g.multiply(g)?;
    let mut count = 0;
    for h in set {
        if decided_cmp(g, h)?.is_le() && decided_cmp(h, &g2)?.is_le() {
            count += 1;
        }
    }
    Ok(count)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WindowBound {
    pub n_hat: usize,
    /// Candidate `g` attaining `n_hat`; its window is `[g, g²]`.
    pub attained_at: Option<Word>,
    pub window_end: Option<Word>,
    pub candidates_examined: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RudinCertificate {
    pub kind: &'static str,
    pub set: Vec<Word>,
    /// Lower bound for `N(E)`: `positive.n_hat + inverted_negative.n_hat`.
    pub n_hat: usize,
    pub lower_bound_only: bool,
    /// Bound for `E ∩ G₊`.
    pub positive: WindowBound,
    /// Bound for `{h⁻¹ : h ∈ E, h < e}`; zero when `E ⊂ G₊`.
    pub inverted_negative: WindowBound,
    pub search_radius: usize,
}

/// Default search radius for the positive words added to the candidate set.
pub const DEFAULT_RUDIN_RADIUS: usize = 3;

fn positive_representative(q: Word) -> Result<Word> {
    if is_positive(&q)? {
        Ok(q)
    } else {
        Ok(q.inverse())
    }
}

/// `P ∪ {positive representatives of h⁻¹h'} ∪ {positive words of length ≤ radius}`.
pub fn default_candidates(part: &[Word], rank: usize, radius: usize) -> Result<Vec<Word>> {
    let mut out = part.to_vec();
    for (i, h) in part.iter().enumerate() {
        let inv = h.inverse();
        for h2 in &part[i + 1..] {
            out.push(positive_representative(inv.multiply(h2)?)?);
        }
    }
    for g in ball(rank, radius)? {
        if is_positive(&g)? {
            out.push(g);
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

fn window_bound(part: &[Word], candidates: &[Word]) -> Result<WindowBound> {
    let counts = candidates
        .par_iter()
        .map(|g| rudin_count(part, g))
        .collect::<Result<Vec<_>>>()?;
    let mut best: Option<(usize, &Word)> = None;
    for (c, g) in counts.iter().zip(candidates) {
        if best.map_or(true, |(b, _)| *c > b) {
            best = Some((*c, g));
        }
    }
    Ok(match best {
        Some((n, g)) if n > 0 => WindowBound {
            n_hat: n,
            attained_at: Some(g.clone()),
            window_end: Some(g.multiply(g)?),
            candidates_examined: candidates.len(),
        },
        _ => WindowBound {
            n_hat: 0,
            attained_at: None,
            window_end: None,
            candidates_examined: candidates.len(),
        },
    })
}

/// Lower bound for `N(E)` over a candidate set.
///
/// `E` is split into `E ∩ G₊` and the inverses of its negative part, which are
/// estimated separately and added. With `candidates = None` each part uses
/// [`default_candidates`] with the given search radius; explicit candidates
/// must be positive.
pub fn rudin_lacunarity_estimate(
    set: &[Word],
    rank: usize,
    candidates: Option<&[Word]>,
    radius: usize,
) -> Result<RudinCertificate> {
    if let Some(bad) = set.iter().find(|w| w.rank() != rank) {
        return Err(Error::RankMismatch {
            left: rank,
            right: bad.rank(),
        });
    }
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for h in set {
        if is_positive(h)? {
            pos.push(h.clone());
        } else {
            neg.push(h.inverse());
        }
    }
    if let Some(c) = candidates {
        for g in c {
            if !is_positive(g)? {
                return Err(Error::NotPositive(g.to_string()));
            }
        }
    }
    let bound = |part: &[Word]| -> Result<WindowBound> {
        if part.is_empty() {
            return window_bound(part, &[]);
        }
        match candidates {
            Some(c) => window_bound(part, c),
            None => window_bound(part, &default_candidates(part, rank, radius)?),
        }
    };
    let positive = bound(&pos)?;
    let inverted_negative = bound(&neg)?;
    Ok(RudinCertificate {
        kind: "rudin",
        set: set.to_vec(),
        n_hat: positive.n_hat + inverted_negative.n_hat,
        lower_bound_only: true,
        positive,
        inverted_negative,
        search_radius: radius,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Prop51Certificate {
    pub kind: &'static str,
    pub sequence: Vec<Word>,
    #[serde(serialize_with = "ser_bigints")]
    pub j_a: Vec<BigInt>,
    #[serde(serialize_with = "ser_bigints")]
    pub j_b: Vec<BigInt>,
    #[serde(serialize_with = "ser_bigints")]
    pub j_ab: Vec<BigInt>,
    /// First satisfied criterion: 1 (J_A lacunary), 2 (J_A ≡ 0, J_B lacunary),
    /// 3 (J_A ≡ J_B ≡ 0, J_AB lacunary).
    pub criterion: Option<u8>,
    /// Integer certificate of the matched criterion.
    pub certificate: Option<IntegerCertificate>,
    /// Why each criterion was rejected, in order.
    pub rejections: Vec<String>,
    pub verdict: Verdict,
}

fn lacunary_or_reason(seq: &[BigInt], name: &str) -> std::result::Result<IntegerCertificate, String> {
    match integer_lacunary(seq) {
        Ok(c) if c.verdict.passed() => Ok(c),
        Ok(c) => Err(format!(
            "{name} not lacunary: ratio {} at index {}",
            c.delta.map(|d| d.to_string()).unwrap_or_default(),
            c.witness.unwrap_or(0)
        )),
        Err(Error::ZeroEntry { index }) => Err(format!("{name} vanishes at index {index}")),
        Err(e) => Err(e.to_string()),
    }
}

/// Tests the three sufficient `J`-coefficient criteria in order.
pub fn prop51_check(seq: &[Word]) -> Result<Prop51Certificate> {
    let profiles = seq.iter().map(j_profile).collect::<Result<Vec<_>>>()?;
    let j_a: Vec<BigInt> = profiles.iter().map(|p| p.j_a.clone()).collect();
    let j_b: Vec<BigInt> = profiles.iter().map(|p| p.j_b.clone()).collect();
    let j_ab: Vec<BigInt> = profiles.iter().map(|p| p.j_ab.clone()).collect();
    let mut rejections = Vec::new();
    let mut matched = None;

    match lacunary_or_reason(&j_a, "J_A") {
        Ok(c) => matched = Some((1u8, c)),
        Err(r) => rejections.push(format!("(i) {r}")),
    }
    if matched.is_none() {
        if let Some(i) = j_a.iter().position(|v| !v.is_zero()) {
            rejections.push(format!("(ii) J_A nonzero at index {i}"));
        } else {
            match lacunary_or_reason(&j_b, "J_B") {
                Ok(c) => matched = Some((2, c)),
                Err(r) => rejections.push(format!("(ii) {r}")),
            }
        }
    }
    if matched.is_none() {
        if let Some(i) = j_a.iter().zip(&j_b).position(|(a, b)| !a.is_zero() || !b.is_zero()) {
            rejections.push(format!("(iii) J_A or J_B nonzero at index {i}"));
        } else {
            match lacunary_or_reason(&j_ab, "J_AB") {
                Ok(c) => matched = Some((3, c)),
                Err(r) => rejections.push(format!("(iii) {r}")),
            }
        }
    }
    let verdict = Verdict::from_bool(matched.is_some());
    let (criterion, certificate) = match matched {
        Some((k, c)) => (Some(k), Some(c)),
        None => (None, None),
    };
    Ok(Prop51Certificate {
        kind: "prop51",
        sequence: seq.to_vec(),
        j_a,
        j_b,
        j_ab,
        criterion,
        certificate,
        rejections,
        verdict,
    })
}

/// `2^k` as a `BigInt`.
pub fn pow2(k: u32) -> BigInt {
    BigInt::one() << k
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Word {
        Word::parse(2, s).unwrap()
    }

    fn a_pow(rank: usize, n: i64) -> Word {
        Word::power(rank, 1, n).unwrap()
    }

    #[test]
    fn dyadic_powers_have_delta_half() {
        let seq: Vec<Word> = (1..=6).map(|k| a_pow(2, 1 << k)).collect();
        let c = psi_lacunary_delta(&LengthFunction::WordLength, &seq).unwrap();
        assert_eq!(c.delta, Some(Real::ratio(1, 2)));
        assert_eq!(c.growth, Some(Real::integer(1)));
        assert!(c.verdict.passed());
    }

    #[test]
    fn pulled_back_generators_have_delta_one() {
        let rank = 4;
        let psi = LengthFunction::pullback_powers(rank, &[2, 4, 8, 16]).unwrap();
        let seq: Vec<Word> = (1..=rank).map(|i| Word::generator(rank, i).unwrap()).collect();
        let c = psi_lacunary_delta(&psi, &seq).unwrap();
        assert_eq!(c.delta, Some(Real::integer(1)));
    }

    #[test]
    fn constant_sequence_fails() {
        let seq = vec![w("a"), w("a")];
        let c = psi_lacunary_delta(&LengthFunction::WordLength, &seq).unwrap();
        assert_eq!(c.verdict, Verdict::Fail);
        assert_eq!(c.separation_witness, Some((0, 1)));
        assert!(psi_lacunary_delta(&LengthFunction::WordLength, &[Word::identity(2)]).is_err());
    }

    #[test]
    fn integer_examples() {
        let seq = |v: &[i64]| v.iter().map(|&x| BigInt::from(x)).collect::<Vec<_>>();
        assert_eq!(integer_lacunary(&seq(&[2, 4, 8, 16])).unwrap().delta, Some(Real::integer(2)));
        assert_eq!(integer_lacunary(&seq(&[3, 9, 81])).unwrap().delta, Some(Real::integer(3)));
        let c = integer_lacunary(&seq(&[1, 2, 3])).unwrap();
        assert_eq!(c.delta, Some(Real::ratio(3, 2)));
        assert!(c.verdict.passed());
        let c = integer_lacunary(&seq(&[1, 2, 2])).unwrap();
        assert_eq!(c.delta, Some(Real::integer(1)));
        assert_eq!(c.verdict, Verdict::Fail);
        assert!(matches!(integer_lacunary(&seq(&[1, 0])), Err(Error::ZeroEntry { index: 1 })));
    }

    #[test]
    fn rank_one_windows() {
        let e: Vec<Word> = (0..=8).map(|j| a_pow(1, 1 << j)).collect();
        for k in 0..8 {
            assert_eq!(rudin_count(&e, &a_pow(1, 1 << k)).unwrap(), 2);
        }
        assert_eq!(rudin_count(&e[5..], &a_pow(1, 3)).unwrap(), 0);
        let c = rudin_lacunarity_estimate(&e, 1, None, DEFAULT_RUDIN_RADIUS).unwrap();
        assert_eq!(c.n_hat, 2);
        let e: Vec<Word> = (1..=4).map(|j| a_pow(1, j)).collect();
        let c = rudin_lacunarity_estimate(&e, 1, None, DEFAULT_RUDIN_RADIUS).unwrap();
        assert_eq!(c.n_hat, 3);
        assert_eq!(c.positive.attained_at, Some(a_pow(1, 2)));
        let c = rudin_lacunarity_estimate(&[], 1, None, DEFAULT_RUDIN_RADIUS).unwrap();
        assert_eq!(c.n_hat, 0);
        assert!(rudin_count(&e, &a_pow(1, -1)).is_err());
    }

    #[test]
    fn rank_two_window_by_direct_comparison() {
        let e: Vec<Word> = (0..6)
            .map(|i| Word::reduce(2, [(1, 1i64 << i), (2, i as i64)]).unwrap())
            .collect();
        let g = w("a^2");
        let g2 = g.multiply(&g).unwrap();
        let expect = e
            .iter()
            .filter(|h| {
                crate::magnus_order::order_compare_default(&g, h).unwrap().relation
                    != crate::magnus_order::Relation::Greater
                    && crate::magnus_order::order_compare_default(h, &g2).unwrap().relation
                        != crate::magnus_order::Relation::Greater
            })
            .count();
        assert_eq!(rudin_count(&e, &g).unwrap(), expect);
    }

    #[test]
    fn prop51_examples() {
        let seq: Vec<Word> = (0..5)
            .map(|i| Word::reduce(2, [(1, 1i64 << i), (2, 3 - i as i64)]).unwrap())
            .collect();
        assert_eq!(prop51_check(&seq).unwrap().criterion, Some(1));
        let c = w("a b a^-1 b^-1");
        let seq: Vec<Word> = (0..5).map(|k| c.pow_i64(1 << k)).collect();
        let cert = prop51_check(&seq).unwrap();
        assert_eq!(cert.criterion, Some(3));
        assert_eq!(cert.j_ab, (0..5).map(pow2).collect::<Vec<_>>());
        let seq: Vec<Word> = (0..5)
            .map(|k| {
                let n = 1i64 << k;
                Word::reduce(2, [(1, n), (2, n), (1, -n), (2, -n)]).unwrap()
            })
            .collect();
        let cert = prop51_check(&seq).unwrap();
        assert_eq!(cert.criterion, Some(3));
        assert_eq!(cert.j_ab, (0..5).map(|k| pow2(2 * k)).collect::<Vec<_>>());
        let cert = prop51_check(&[w("a"), w("a")]).unwrap();
        assert_eq!(cert.verdict, Verdict::Fail);
        assert_eq!(cert.rejections.len(), 3);
        let seq = [w("b"), w("b^3")];
        assert_eq!(prop51_check(&seq).unwrap().criterion, Some(2));
    }

    #[test]
    fn mixed_sign_sets_split() {
        let e = vec![a_pow(1, 1), a_pow(1, 2), a_pow(1, -1), a_pow(1, -2)];
        let c = rudin_lacunarity_estimate(&e, 1, None, 2).unwrap();
        assert_eq!(c.positive.n_hat, 2);
        assert_eq!(c.inverted_negative.n_hat, 2);
        assert_eq!(c.n_hat, 4);
    }
}
