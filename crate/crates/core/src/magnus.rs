//! Truncated Magnus embedding `μ: F_k → ℤ⟨⟨A₁,…,A_k⟩⟩` with `μ(x_i) = 1 + A_i`.
//!
//! Series are stored sparsely, truncated at a fixed degree. Monomials sort by
//! degree first and then lexicographically with `A₁` before `A₂` before …; this
//! is also the order in which [`crate::magnus_order`] scans for the first
//! differing coefficient.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::free_words::{bigint_to_json, json_to_bigint, LengthFunction, Word};

/// A word in the letters `A₁..A_k`, stored as 0-based letter indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Monomial(pub Vec<u8>);

impl Monomial {
    pub fn unit() -> Self {
        Monomial(Vec::new())
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }

    /// Parses `"AB"`, `"A B"` (rank ≤ 26) or `"A1A12"` (any rank); `"1"` is the unit.
    pub fn parse(rank: usize, input: &str) -> Result<Monomial> {
        let err = |position: usize, message: &str| Error::Parse {
            input: input.to_string(),
            position,
            message: message.to_string(),
        };
        let trimmed = input.trim();
        if trimmed.is_empty() || trimmed == "1" {
            return Ok(Monomial::unit());
        }
        let bytes = input.as_bytes();
        let mut letters = Vec::new();
        let mut pos = 0;
        while pos < bytes.len() {
            let c = bytes[pos];
            if c.is_ascii_whitespace() || c == b'*' {
                pos += 1;
                continue;
            }
            if !c.is_ascii_uppercase() {
                return Err(err(pos, "expected an uppercase letter"));
            }
            let start = pos;
            pos += 1;
            let index = if rank > 26 {
                if c != b'A' {
                    return Err(err(start, "expected A<index>"));
                }
                let d0 = pos;
                while pos < bytes.len() && bytes[pos].is_ascii_digit() {
                    pos += 1;
                }
                input[d0..pos]
                    .parse::<usize>()
                    .map_err(|_| err(d0, "expected letter index"))?
            } else {
                (c - b'A') as usize + 1
            };
            if index == 0 || index > rank || index > 256 {
                return Err(err(start, &format!("letter {index} out of range 1..={rank}")));
            }
            letters.push((index - 1) as u8);
        }
        Ok(Monomial(letters))
    }

    pub fn display(&self, rank: usize) -> String {
        if self.0.is_empty() {
            return "1".into();
        }
        self.0
            .iter()
            .map(|&l| letter_name(rank, l))
            .collect::<Vec<_>>()
            .join("")
    }
}

fn letter_name(rank: usize, letter: u8) -> String {
    if rank <= 26 {
        ((b'A' + letter) as char).to_string()
    } else {
        format!("A{}", letter as usize + 1)
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .len()
            .cmp(&other.0.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Integer polynomial in `rank` noncommuting variables, truncated above `degree`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NCPolynomial {
    rank: usize,
    degree: usize,
    terms: BTreeMap<Monomial, BigInt>,
}

impl NCPolynomial {
    pub fn zero(rank: usize, degree: usize) -> Self {
        NCPolynomial {
            rank,
            degree,
            terms: BTreeMap::new(),
        }
    }

    pub fn one(rank: usize, degree: usize) -> Self {
        let mut p = NCPolynomial::zero(rank, degree);
        p.terms.insert(Monomial::unit(), BigInt::one());
        p
    }

    /// Builds from `(monomial, coefficient)` pairs; terms above `degree` are dropped.
    pub fn from_terms<I>(rank: usize, degree: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Monomial, BigInt)>,
    {
        let mut p = NCPolynomial::zero(rank, degree);
        for (m, c) in terms {
            if let Some(&bad) = m.0.iter().find(|&&l| l as usize >= rank) {
                return Err(Error::GeneratorOutOfRange {
                    index: bad as usize + 1,
                    rank,
                });
            }
            if m.degree() <= degree {
                p.add_term(m, c);
            }
        }
        Ok(p)
    }

    fn add_term(&mut self, m: Monomial, c: BigInt) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(m);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn terms(&self) -> std::collections::btree_map::Iter<'_, Monomial, BigInt> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, m: &Monomial) -> BigInt {
        self.terms.get(m).cloned().unwrap_or_else(BigInt::zero)
    }

    fn check_compatible(&self, other: &NCPolynomial) -> Result<()> {
        if self.rank != other.rank {
            return Err(Error::RankMismatch {
                left: self.rank,
                right: other.rank,
            });
        }
        if self.degree != other.degree {
            return Err(Error::DegreeMismatch {
                left: self.degree,
                right: other.degree,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &NCPolynomial) -> Result<NCPolynomial> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &NCPolynomial) -> Result<NCPolynomial> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -c);
        }
        Ok(out)
    }

    /// Product with all terms above the truncation degree discarded.
    pub fn multiply(&self, other: &NCPolynomial) -> Result<NCPolynomial> {
        self.check_compatible(other)?;
        let mut out = NCPolynomial::zero(self.rank, self.degree);
        for (m1, c1) in &self.terms {
            let room = self.degree - m1.degree();
            for (m2, c2) in &other.terms {
                if m2.degree() > room {
                    // terms are sorted by degree
                    break;
                }
                let mut m = m1.0.clone();
                m.extend_from_slice(&m2.0);
                out.add_term(Monomial(m), c1 * c2);
            }
        }
        Ok(out)
    }

    /// Same series viewed at a lower truncation degree.
    pub fn truncate(&self, degree: usize) -> NCPolynomial {
        NCPolynomial {
            rank: self.rank,
            degree: degree.min(self.degree),
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m.degree() <= degree)
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }

    /// Right multiplication by `(1 + X)^n` for the letter `X`.
    fn mul_letter_power(&self, letter: u8, n: &BigInt) -> NCPolynomial {
        let coeffs = binomial_series(n, self.degree);
        let mut out = NCPolynomial::zero(self.rank, self.degree);
        for (m, c) in &self.terms {
            let room = self.degree - m.degree();
            let mut mono = m.0.clone();
            for b in coeffs.iter().take(room + 1) {
                if !b.is_zero() {
                    out.add_term(Monomial(mono.clone()), c * b);
                }
                mono.push(letter);
            }
        }
        out
    }

    pub fn parse(rank: usize, degree: usize, input: &str) -> Result<NCPolynomial> {
        let err = |position: usize, message: &str| Error::Parse {
            input: input.to_string(),
            position,
            message: message.to_string(),
        };
        let mut terms = Vec::new();
        let bytes = input.as_bytes();
        let mut pos = 0;
        let mut first = true;
        while pos < bytes.len() {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos >= bytes.len() {
                break;
            }
            let mut negative = false;
            if bytes[pos] == b'+' || bytes[pos] == b'-' {
                negative = bytes[pos] == b'-';
                pos += 1;
            } else if !first {
                return Err(err(pos, "expected '+' or '-' between terms"));
            }
            first = false;
            let term_start = pos;
            while pos < bytes.len() && bytes[pos] != b'+' && bytes[pos] != b'-' {
                pos += 1;
            }
            let term = input[term_start..pos].trim();
            if term.is_empty() {
                return Err(err(term_start, "empty term"));
            }
            let (coef, mono) = match term.split_once('*') {
                Some((c, m)) if c.trim().chars().all(|ch| ch.is_ascii_digit()) => {
                    (c.trim().parse::<BigInt>().map_err(|_| err(term_start, "bad coefficient"))?, m)
                }
                _ => {
                    let digits: String = term.chars().take_while(|ch| ch.is_ascii_digit()).collect();
                    if digits.is_empty() {
                        (BigInt::one(), term)
                    } else {
                        let rest = term[digits.len()..].trim();
                        if !rest.is_empty() {
                            return Err(err(term_start, "use '*' between coefficient and monomial"));
                        }
                        (digits.parse::<BigInt>().unwrap(), "1")
                    }
                }
            };
            let m = Monomial::parse(rank, mono).map_err(|e| match e {
                Error::Parse { position, message, .. } => err(term_start + position, &message),
                other => other,
            })?;
            terms.push((m, if negative { -coef } else { coef }));
        }
        NCPolynomial::from_terms(rank, degree, terms)
    }

    /// `{monomial: coefficient}`; the unit monomial is the key `"1"`.
    pub fn to_json(&self) -> Value {
        let map = self
            .terms
            .iter()
            .map(|(m, c)| (m.display(self.rank), bigint_to_json(c)))
            .collect::<serde_json::Map<_, _>>();
        Value::Object(map)
    }

    pub fn from_json(rank: usize, degree: usize, value: &Value) -> Result<NCPolynomial> {
        let obj = value
            .as_object()
            .ok_or_else(|| Error::Schema("polynomial must be a JSON object".into()))?;
        let mut terms = Vec::with_capacity(obj.len());
        for (k, v) in obj {
            terms.push((Monomial::parse(rank, k)?, json_to_bigint(v)?));
        }
        NCPolynomial::from_terms(rank, degree, terms)
    }
}

impl fmt::Display for NCPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            let mag = c.abs();
            if i == 0 {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else if c.is_negative() {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            if m.0.is_empty() {
                write!(f, "{mag}")?;
            } else if mag.is_one() {
                write!(f, "{}", m.display(self.rank))?;
            } else {
                write!(f, "{mag}*{}", m.display(self.rank))?;
            }
        }
        Ok(())
    }
}

impl Serialize for NCPolynomial {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.terms.len()))?;
        for (m, c) in &self.terms {
            map.serialize_entry(&m.display(self.rank), &bigint_to_json(c))?;
        }
        map.end()
    }
}

/// Coefficients of `(1 + X)^n` up to `X^max`, i.e. generalized binomials `C(n, i)`.
pub fn binomial_series(n: &BigInt, max: usize) -> Vec<BigInt> {
    let mut out = Vec::with_capacity(max + 1);
    let mut b = BigInt::one();
    out.push(b.clone());
    for i in 1..=max {
        // C(n,i) = C(n,i-1)·(n-i+1)/i, exact at every step
        b = b * (n - BigInt::from(i - 1)) / BigInt::from(i);
        out.push(b.clone());
    }
    out
}

/// Default truncation degree `max(|g|, 2)`.
pub fn default_degree(g: &Word) -> usize {
    g.len_usize().max(2)
}

/// `μ(g)` truncated at `degree`.
pub fn magnus_embed(g: &Word, degree: usize) -> NCPolynomial {
    let mut p = NCPolynomial::one(g.rank(), degree);
    for s in g.syllables() {
        p = p.mul_letter_power((s.generator - 1) as u8, &s.exponent);
    }
    p
}

/// Coefficient `J_X(g)` of the monomial `X` in `μ(g)`.
pub fn j_coefficient(g: &Word, monomial: &Monomial) -> Result<BigInt> {
    if let Some(&bad) = monomial.0.iter().find(|&&l| l as usize >= g.rank()) {
        return Err(Error::GeneratorOutOfRange {
            index: bad as usize + 1,
            rank: g.rank(),
        });
    }
    Ok(magnus_embed(g, monomial.degree()).coefficient(monomial))
}

/// Degree ≤ 2 J-coefficients of a rank-2 word.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct JProfile {
    #[serde(serialize_with = "ser_bigint")]
    pub j_a: BigInt,
    #[serde(serialize_with = "ser_bigint")]
    pub j_b: BigInt,
    #[serde(serialize_with = "ser_bigint")]
    pub j_ab: BigInt,
    #[serde(serialize_with = "ser_bigint")]
    pub j_ba: BigInt,
}

pub(crate) fn ser_bigint<S: Serializer>(n: &BigInt, s: S) -> std::result::Result<S::Ok, S::Error> {
    bigint_to_json(n).serialize(s)
}

impl JProfile {
    /// `J_AB + J_BA = J_A·J_B`.
    pub fn identity_holds(&self) -> bool {
        &self.j_ab + &self.j_ba == &self.j_a * &self.j_b
    }
}

fn require_rank_two(g: &Word) -> Result<()> {
    if g.rank() != 2 {
        return Err(Error::RankRequired {
            expected: 2,
            actual: g.rank(),
        });
    }
    Ok(())
}

/// J-profile read off the truncated series.
pub fn j_profile(g: &Word) -> Result<JProfile> {
    require_rank_two(g)?;
    let mu = magnus_embed(g, 2);
    Ok(JProfile {
        j_a: mu.coefficient(&Monomial(vec![0])),
        j_b: mu.coefficient(&Monomial(vec![1])),
        j_ab: mu.coefficient(&Monomial(vec![0, 1])),
        j_ba: mu.coefficient(&Monomial(vec![1, 0])),
    })
}

/// Exponent lists `(j_s), (k_s)` with `g = a^{j_1} b^{k_1} ⋯ a^{j_N} b^{k_N}`.
pub fn ab_exponents(g: &Word) -> Result<(Vec<BigInt>, Vec<BigInt>)> {
    require_rank_two(g)?;
    let mut js: Vec<BigInt> = Vec::new();
    let mut ks: Vec<BigInt> = Vec::new();
    for s in g.syllables() {
        if s.generator == 1 {
            js.push(s.exponent.clone());
            ks.push(BigInt::zero());
        } else {
            match ks.last_mut() {
                Some(k) if k.is_zero() => *k = s.exponent.clone(),
                _ => {
                    js.push(BigInt::zero());
                    ks.push(s.exponent.clone());
                }
            }
        }
    }
    Ok((js, ks))
}

/// J-profile from the closed forms `J_A = Σ j_s`, `J_B = Σ k_s`,
/// `J_AB = Σ_{s≤t} j_s k_t`, `J_BA = Σ_{t<s} j_s k_t`.
pub fn closed_form_profile(g: &Word) -> Result<JProfile> {
    let (js, ks) = ab_exponents(g)?;
    let mut j_a = BigInt::zero();
    let mut j_b = BigInt::zero();
    let mut j_ab = BigInt::zero();
    let mut j_ba = BigInt::zero();
    for (j, k) in js.iter().zip(&ks) {
        // j_s pairs with every k_t, t ≥ s; k_t pairs with the earlier j_s here
        j_ba += j * &j_b;
        j_a += j;
        j_ab += &j_a * k;
        j_b += k;
    }
    Ok(JProfile { j_a, j_b, j_ab, j_ba })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Membership {
    pub in_f0: bool,
    pub in_f00: bool,
}

/// Membership in `F₂⁰ = ker ψ_z` and `F₂⁰⁰ = {g ∈ F₂⁰ : J_AB(g) = 0}`.
pub fn subgroup_membership(g: &Word) -> Result<Membership> {
    let p = j_profile(g)?;
    let in_f0 = p.j_a.is_zero() && p.j_b.is_zero();
    Ok(Membership {
        in_f0,
        in_f00: in_f0 && p.j_ab.is_zero(),
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TransferenceCheck {
    /// `J_A(g)² + J_B(g)²` from the series.
    #[serde(serialize_with = "ser_bigint")]
    pub torus_eigenvalue: BigInt,
    /// `ψ_z(g)` from the word.
    #[serde(serialize_with = "ser_bigint")]
    pub psi_z: BigInt,
    pub holds: bool,
}

/// Checks that the torus Laplacian eigenvalue of `z₁^{J_A} z₂^{J_B}` equals `ψ_z(g)`.
pub fn transference_check(g: &Word) -> Result<TransferenceCheck> {
    let p = j_profile(g)?;
    let torus_eigenvalue = &p.j_a * &p.j_a + &p.j_b * &p.j_b;
    let psi_z = match LengthFunction::PsiZ.evaluate(g)?.as_exact() {
        Some(r) => r.to_integer(),
        None => unreachable!("ψ_z is integer valued"),
    };
    Ok(TransferenceCheck {
        holds: torus_eigenvalue == psi_z,
        torus_eigenvalue,
        psi_z,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Separation {
    Equal,
    Distinguished { monomial: Monomial, degree: usize },
    IndistinguishableUpTo(usize),
}

/// Finds the first monomial where `μ(g)` and `μ(h)` differ, up to `degree`.
pub fn distinguish(g: &Word, h: &Word, degree: usize) -> Result<Separation> {
    if g.rank() != h.rank() {
        return Err(Error::RankMismatch {
            left: g.rank(),
            right: h.rank(),
        });
    }
    if g == h {
        return Ok(Separation::Equal);
    }
    let diff = magnus_embed(g, degree).sub(&magnus_embed(h, degree))?;
    let first = diff.terms().next().map(|(m, _)| m.clone());
    Ok(match first {
        Some(m) => Separation::Distinguished {
            degree: m.degree(),
            monomial: m,
        },
        None => Separation::IndistinguishableUpTo(degree),
    })
}

/// Coefficient as `i64` when it fits.
pub fn small(n: &BigInt) -> Option<i64> {
    n.to_i64()
}
