//! The bi-invariant order on `F_k` obtained by comparing Magnus series
//! coefficient by coefficient, lowest degree first.
//!
//! Comparison deepens the truncation one degree at a time and stops at the
//! first monomial where `μ(g)` and `μ(h)` differ. If two distinct words agree
//! through `max_degree` the answer is [`Relation::Undecided`], never a guess.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_traits::Signed;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::budget::Budget;
use crate::error::{Error, Result};
use crate::free_words::Word;
use crate::magnus::{magnus_embed, Monomial};
use crate::nc_fourier::FourierElement;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Less,
    Equal,
    Greater,
    Undecided { depth: usize },
}

impl Relation {
    pub fn as_str(&self) -> &'static str {
        match self {
            Relation::Less => "less",
            Relation::Equal => "equal",
            Relation::Greater => "greater",
            Relation::Undecided { .. } => "undecided",
        }
    }

    pub fn to_ordering(self) -> Option<Ordering> {
        match self {
            Relation::Less => Some(Ordering::Less),
            Relation::Equal => Some(Ordering::Equal),
            Relation::Greater => Some(Ordering::Greater),
            Relation::Undecided { .. } => None,
        }
    }

    pub fn reverse(self) -> Relation {
        match self {
            Relation::Less => Relation::Greater,
            Relation::Greater => Relation::Less,
            other => other,
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Relation::Undecided { depth } => write!(f, "undecided(depth {depth})"),
            other => f.write_str(other.as_str()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrderVerdict {
    pub relation: Relation,
    pub rank: usize,
    pub deciding_monomial: Option<Monomial>,
    pub deciding_degree: Option<usize>,
}

impl Serialize for OrderVerdict {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut m = s.serialize_map(None)?;
        m.serialize_entry("relation", self.relation.as_str())?;
        if let Relation::Undecided { depth } = self.relation {
            m.serialize_entry("depth", &depth)?;
        }
        m.serialize_entry(
            "deciding_monomial",
            &self.deciding_monomial.as_ref().map(|x| x.display(self.rank)),
        )?;
        m.serialize_entry("deciding_degree", &self.deciding_degree)?;
        m.end()
    }
}

/// `max(|g⁻¹h|, 8)`.
pub fn default_max_degree(g: &Word, h: &Word) -> usize {
    match g.left_quotient(h) {
        Ok(q) => q.len_usize().max(8),
        Err(_) => 8,
    }
}

fn monomial_count(rank: usize, degree: usize) -> u128 {
    let mut total: u128 = 0;
    let mut layer: u128 = 1;
    for _ in 0..=degree {
        total = total.saturating_add(layer);
        layer = layer.saturating_mul(rank as u128);
    }
    total
}

/// Compares `g` and `h` by the first differing Magnus coefficient.
pub fn order_compare(g: &Word, h: &Word, max_degree: usize) -> Result<OrderVerdict> {
    if g.rank() != h.rank() {
        return Err(Error::RankMismatch {
            left: g.rank(),
            right: h.rank(),
        });
    }
    if max_degree == 0 {
        return Err(Error::InvalidParameter("max_degree must be at least 1".into()));
    }
    let rank = g.rank();
    if g == h {
        return Ok(OrderVerdict {
            relation: Relation::Equal,
            rank,
            deciding_monomial: None,
            deciding_degree: None,
        });
    }
    let cap = Budget::from_env().max_entries();
    for degree in 1..=max_degree {
        let needed = monomial_count(rank, degree);
        if needed > cap {
            return Err(Error::BudgetExceeded {
                what: format!("Magnus series at degree {degree}"),
                required: needed,
                cap,
            });
        }
        let diff = magnus_embed(g, degree).sub(&magnus_embed(h, degree))?;
        if let Some((m, c)) = diff.terms().next() {
            let relation = if c.is_positive() {
                Relation::Greater
            } else {
                Relation::Less
            };
            return Ok(OrderVerdict {
                relation,
                rank,
                deciding_degree: Some(m.degree()),
                deciding_monomial: Some(m.clone()),
            });
        }
    }
    Ok(OrderVerdict {
        relation: Relation::Undecided { depth: max_degree },
        rank,
        deciding_monomial: None,
        deciding_degree: None,
    })
}

pub fn order_compare_default(g: &Word, h: &Word) -> Result<OrderVerdict> {
    order_compare(g, h, default_max_degree(g, h))
}

/// Like [`order_compare_default`] but an undecided outcome becomes an error.
pub fn decided_cmp(g: &Word, h: &Word) -> Result<Ordering> {
    let v = order_compare_default(g, h)?;
    match v.relation {
        Relation::Undecided { depth } => Err(Error::Undecided { depth }),
        r => Ok(r.to_ordering().expect("decided")),
    }
}

/// `g ≥ e`.
pub fn is_positive(g: &Word) -> Result<bool> {
    let e = Word::identity(g.rank());
    Ok(decided_cmp(g, &e)? != Ordering::Less)
}

pub fn positive_cone_filter(words: &[Word]) -> Result<Vec<Word>> {
    let flags: Vec<bool> = words
        .par_iter()
        .map(is_positive)
        .collect::<Result<Vec<_>>>()?;
    Ok(words
        .iter()
        .zip(flags)
        .filter(|(_, p)| *p)
        .map(|(w, _)| w.clone())
        .collect())
}

/// Sorts ascending in the Magnus order. Fails on the first undecided pair.
pub fn sort_words(words: &mut [Word]) -> Result<()> {
    let mut failure = None;
    words.sort_by(|a, b| match decided_cmp(a, b) {
        Ok(o) => o,
        Err(e) => {
            failure.get_or_insert(e);
            Ordering::Equal
        }
    });
    match failure {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

/// `(x₊, x₋)`: the part of `x` supported on `g ≥ e` and the rest.
pub fn positive_part_split(x: &FourierElement) -> Result<(FourierElement, FourierElement)> {
    let words: Vec<Word> = x.support().cloned().collect();
    let flags: Vec<bool> = words
        .par_iter()
        .map(is_positive)
        .collect::<Result<Vec<_>>>()?;
    let positive: std::collections::BTreeSet<&Word> = words
        .iter()
        .zip(&flags)
        .filter(|(_, p)| **p)
        .map(|(w, _)| w)
        .collect();
    Ok((
        x.restrict(|w| positive.contains(w)),
        x.restrict(|w| !positive.contains(w)),
    ))
}

/// Sign of the first nonzero coefficient of `μ(w) − 1`; used as an
/// independent route in tests.
pub fn leading_sign(w: &Word, degree: usize) -> Option<(Monomial, BigInt)> {
    let mu = magnus_embed(w, degree);
    mu.terms()
        .find(|(m, _)| m.degree() > 0)
        .map(|(m, c)| (m.clone(), c.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Word {
        Word::parse(2, s).unwrap()
    }

    #[test]
    fn generator_comparison() {
        let v = order_compare_default(&w("a"), &w("b")).unwrap();
        assert_eq!(v.relation, Relation::Greater);
        assert_eq!(v.deciding_monomial.unwrap().display(2), "A");
        assert_eq!(v.deciding_degree, Some(1));
    }

    #[test]
    fn equal_and_commutator() {
        let g = w("a b^2");
        assert_eq!(order_compare_default(&g, &g).unwrap().relation, Relation::Equal);
        let v = order_compare_default(&w("a b a^-1 b^-1"), &Word::identity(2)).unwrap();
        assert_eq!(v.relation, Relation::Greater);
        assert_eq!(v.deciding_monomial.unwrap().display(2), "AB");
    }

    #[test]
    fn undecided_is_explicit() {
        let v = order_compare(&w("a b a^-1 b^-1"), &Word::identity(2), 1).unwrap();
        assert_eq!(v.relation, Relation::Undecided { depth: 1 });
        assert!(decided_cmp(&w("a"), &w("a")).is_ok());
    }

    #[test]
    fn positivity_examples() {
        assert!(!is_positive(&w("a^-1")).unwrap());
        assert!(is_positive(&w("a b a^-1 b^-1")).unwrap());
        assert!(is_positive(&Word::identity(2)).unwrap());
        let f = positive_cone_filter(&[w("a"), w("a^-1"), w("b a^-1")]).unwrap();
        assert_eq!(f, vec![w("a")]);
    }

    #[test]
    fn agrees_with_quotient_sign() {
        let ws = crate::free_words::ball(2, 3).unwrap();
        for g in ws.iter().step_by(7) {
            for h in ws.iter().step_by(5) {
                let v = order_compare_default(g, h).unwrap();
                let q = g.left_quotient(h).unwrap();
                let expect = match leading_sign(&q, 8) {
                    None => Relation::Equal,
                    Some((_, c)) if c.is_positive() => Relation::Less,
                    Some(_) => Relation::Greater,
                };
                assert_eq!(v.relation, expect, "{g} vs {h}");
            }
        }
    }

    #[test]
    fn rank_one_is_integer_order() {
        for m in -20i64..=20 {
            for n in -20i64..=20 {
                let a = Word::power(1, 1, m).unwrap();
                let b = Word::power(1, 1, n).unwrap();
                assert_eq!(decided_cmp(&a, &b).unwrap(), m.cmp(&n));
            }
        }
    }

    #[test]
    fn sorting() {
        let mut v = vec![w("a"), w("b^-1"), Word::identity(2), w("b"), w("a^-2")];
        sort_words(&mut v).unwrap();
        let s: Vec<String> = v.iter().map(|x| x.to_string()).collect();
        assert_eq!(s, ["a^-2", "b^-1", "1", "b", "a"]);
    }

    #[test]
    fn verdict_json() {
        let v = order_compare_default(&w("a"), &w("b")).unwrap();
        let j = serde_json::to_value(&v).unwrap();
        assert_eq!(j["relation"], "greater");
        assert_eq!(j["deciding_monomial"], "A");
    }
}
