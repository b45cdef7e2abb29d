//! Reduced words in the rank-k free group and length functions on them.
//!
//! A [`Word`] is kept in syllable normal form: a list of `(generator, exponent)`
//! pairs with nonzero exponents and no two adjacent syllables on the same
//! generator. Generators are numbered `1..=rank`; for `rank <= 26` they print as
//! `a, b, c, …`, beyond that as `x1, x2, …`.
//!
//! Words are totally ordered by rank, then word length, then lexicographically
//! on their syllable lists. [`ball`] lists words in exactly this order, so that
//! matrices built on balls are reproducible.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::hash::{Hash, Hasher};

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};
use serde_json::Value;

use crate::budget::Budget;
use crate::error::{Error, Result};
use crate::real::Real;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Syllable {
    /// 1-based generator index.
    pub generator: usize,
    pub exponent: BigInt,
}

#[derive(Clone, Debug)]
pub struct Word {
    rank: usize,
    syllables: Vec<Syllable>,
    length: BigInt,
}

impl PartialEq for Word {
    fn eq(&self, other: &Self) -> bool {
        self.rank == other.rank && self.syllables == other.syllables
    }
}

impl Eq for Word {}

impl Hash for Word {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.rank.hash(state);
        self.syllables.hash(state);
    }
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.rank
            .cmp(&other.rank)
            .then_with(|| self.length.cmp(&other.length))
            .then_with(|| self.syllables.cmp(&other.syllables))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn check_rank(rank: usize) -> Result<()> {
    if rank == 0 {
        return Err(Error::InvalidParameter("rank must be at least 1".into()));
    }
    Ok(())
}

/// Pushes one syllable onto a reduced stack, merging and cancelling at the top.
fn push_reduced(stack: &mut Vec<Syllable>, generator: usize, exponent: BigInt) {
    if exponent.is_zero() {
        return;
    }
    if let Some(top) = stack.last_mut() {
        if top.generator == generator {
            top.exponent += exponent;
            if top.exponent.is_zero() {
                stack.pop();
            }
            return;
        }
    }
    stack.push(Syllable {
        generator,
        exponent,
    });
}

impl Word {
    pub fn identity(rank: usize) -> Word {
        Word {
            rank,
            syllables: Vec::new(),
            length: BigInt::zero(),
        }
    }

    /// The generator `index` (1-based) raised to `exponent`.
    pub fn power(rank: usize, index: usize, exponent: impl Into<BigInt>) -> Result<Word> {
        Word::reduce(rank, [(index, exponent.into())])
    }

    pub fn generator(rank: usize, index: usize) -> Result<Word> {
        Word::power(rank, index, 1)
    }

    /// Free reduction of an arbitrary syllable list. Zero exponents are allowed.
    pub fn reduce<I, E>(rank: usize, syllables: I) -> Result<Word>
    where
        I: IntoIterator<Item = (usize, E)>,
        E: Into<BigInt>,
    {
        check_rank(rank)?;
        let mut stack = Vec::new();
        for (generator, exponent) in syllables {
            if generator == 0 || generator > rank {
                return Err(Error::GeneratorOutOfRange {
                    index: generator,
                    rank,
                });
            }
            push_reduced(&mut stack, generator, exponent.into());
        }
        Ok(Word::from_reduced(rank, stack))
    }

    fn from_reduced(rank: usize, syllables: Vec<Syllable>) -> Word {
        let length = syllables.iter().map(|s| s.exponent.abs()).sum();
        Word {
            rank,
            syllables,
            length,
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn syllables(&self) -> &[Syllable] {
        &self.syllables
    }

    pub fn is_identity(&self) -> bool {
        self.syllables.is_empty()
    }

    /// Reduced word length `Σ |exponent|`.
    pub fn word_length(&self) -> &BigInt {
        &self.length
    }

    /// Word length as a machine integer, saturating.
    pub fn len_usize(&self) -> usize {
        self.length.to_usize().unwrap_or(usize::MAX)
    }

    pub fn multiply(&self, other: &Word) -> Result<Word> {
        if self.rank != other.rank {
            return Err(Error::RankMismatch {
                left: self.rank,
                right: other.rank,
            });
        }
        let mut stack = self.syllables.clone();
        for s in &other.syllables {
            push_reduced(&mut stack, s.generator, s.exponent.clone());
        }
        Ok(Word::from_reduced(self.rank, stack))
    }

    pub fn inverse(&self) -> Word {
        let syllables = self
            .syllables
            .iter()
            .rev()
            .map(|s| Syllable {
                generator: s.generator,
                exponent: -&s.exponent,
            })
            .collect();
        Word {
            rank: self.rank,
            syllables,
            length: self.length.clone(),
        }
    }

    /// `self^n` for any integer `n`.
    pub fn pow(&self, n: &BigInt) -> Word {
        let base = if n.is_negative() {
            self.inverse()
        } else {
            self.clone()
        };
        let mut e = n.abs();
        let mut acc = Word::identity(self.rank);
        let mut sq = base;
        let two = BigInt::from(2);
        while !e.is_zero() {
            if (&e % &two).is_one() {
                acc = acc.multiply(&sq).expect("same rank");
            }
            e /= &two;
            if !e.is_zero() {
                sq = sq.multiply(&sq).expect("same rank");
            }
        }
        acc
    }

    pub fn pow_i64(&self, n: i64) -> Word {
        self.pow(&BigInt::from(n))
    }

    /// `self⁻¹ · other`.
    pub fn left_quotient(&self, other: &Word) -> Result<Word> {
        self.inverse().multiply(other)
    }

    /// Net exponent of each generator (the abelianization).
    pub fn net_exponents(&self) -> Vec<BigInt> {
        let mut net = vec![BigInt::zero(); self.rank];
        for s in &self.syllables {
            net[s.generator - 1] += &s.exponent;
        }
        net
    }

    /// Name of generator `index` for this rank.
    pub fn generator_name(rank: usize, index: usize) -> String {
        if rank <= 26 {
            ((b'a' + (index - 1) as u8) as char).to_string()
        } else {
            format!("x{index}")
        }
    }

    /// Parses the canonical text form, e.g. `"a^3 b^-2"`, `"aba^-1b^-1"`, `"x1 x12^2"`.
    ///
    /// The identity may be written as `1`, as the empty string, or as `e` when
    /// `rank < 5` (for larger ranks `e` names the fifth generator).
    pub fn parse(rank: usize, input: &str) -> Result<Word> {
        check_rank(rank)?;
        let trimmed = input.trim();
        if trimmed.is_empty() || trimmed == "1" || (trimmed == "e" && rank < 5) {
            return Ok(Word::identity(rank));
        }
        let bytes = input.as_bytes();
        let err = |position: usize, message: &str| Error::Parse {
            input: input.to_string(),
            position,
            message: message.to_string(),
        };
        let mut pos = 0;
        let mut syllables: Vec<(usize, BigInt)> = Vec::new();
        while pos < bytes.len() {
            let c = bytes[pos];
            if c.is_ascii_whitespace() || c == b'*' || c == b'.' {
                pos += 1;
                continue;
            }
            let start = pos;
            let generator = if rank > 26 {
                if c != b'x' {
                    return Err(err(pos, "expected generator name x<index>"));
                }
                pos += 1;
                let digits_start = pos;
                while pos < bytes.len() && bytes[pos].is_ascii_digit() {
                    pos += 1;
                }
                if digits_start == pos {
                    return Err(err(pos, "expected generator index after 'x'"));
                }
                input[digits_start..pos]
                    .parse::<usize>()
                    .map_err(|_| err(digits_start, "generator index too large"))?
            } else {
                if !c.is_ascii_lowercase() {
                    return Err(err(pos, "expected a generator letter"));
                }
                pos += 1;
                (c - b'a') as usize + 1
            };
            if generator == 0 || generator > rank {
                return Err(err(
                    start,
                    &format!("generator index {generator} out of range 1..={rank}"),
                ));
            }
            let mut exponent = BigInt::one();
            if pos < bytes.len() && bytes[pos] == b'^' {
                pos += 1;
                let num_start = pos;
                if pos < bytes.len() && (bytes[pos] == b'-' || bytes[pos] == b'+') {
                    pos += 1;
                }
                let digits_start = pos;
                while pos < bytes.len() && bytes[pos].is_ascii_digit() {
                    pos += 1;
                }
                if digits_start == pos {
                    return Err(err(pos, "expected integer exponent after '^'"));
                }
                exponent = input[num_start..pos]
                    .parse::<BigInt>()
                    .map_err(|_| err(num_start, "malformed exponent"))?;
            }
            syllables.push((generator, exponent));
        }
        Word::reduce(rank, syllables)
    }

    /// Accepts either a string in the text grammar or a JSON array `[[gen, exp], …]`.
    pub fn from_json(rank: usize, value: &Value) -> Result<Word> {
        match value {
            Value::String(s) => Word::parse(rank, s),
            Value::Array(items) => {
                let mut syllables = Vec::with_capacity(items.len());
                for item in items {
                    let pair = item.as_array().filter(|p| p.len() == 2).ok_or_else(|| {
                        Error::Schema(format!("syllable must be [generator, exponent], got {item}"))
                    })?;
                    let generator = pair[0]
                        .as_u64()
                        .ok_or_else(|| Error::Schema(format!("bad generator index {}", pair[0])))?
                        as usize;
                    let exponent = json_to_bigint(&pair[1])?;
                    syllables.push((generator, exponent));
                }
                Word::reduce(rank, syllables)
            }
            other => Err(Error::Schema(format!(
                "word must be a string or an array of syllables, got {other}"
            ))),
        }
    }

    /// JSON array form `[[gen, exp], …]`; exponents outside `i64` become strings.
    pub fn to_json(&self) -> Value {
        Value::Array(
            self.syllables
                .iter()
                .map(|s| Value::Array(vec![Value::from(s.generator), bigint_to_json(&s.exponent)]))
                .collect(),
        )
    }
}

pub(crate) fn json_to_bigint(v: &Value) -> Result<BigInt> {
    match v {
        Value::Number(n) => n
            .as_i64()
            .map(BigInt::from)
            .ok_or_else(|| Error::Schema(format!("expected an integer, got {n}"))),
        Value::String(s) => s
            .trim()
            .parse::<BigInt>()
            .map_err(|_| Error::Schema(format!("expected an integer, got {s:?}"))),
        other => Err(Error::Schema(format!("expected an integer, got {other}"))),
    }
}

pub(crate) fn bigint_to_json(n: &BigInt) -> Value {
    match n.to_i64() {
        Some(i) => Value::from(i),
        None => Value::String(n.to_string()),
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.syllables.is_empty() {
            return write!(f, "1");
        }
        for (i, s) in self.syllables.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{}", Word::generator_name(self.rank, s.generator))?;
            if !s.exponent.is_one() {
                write!(f, "^{}", s.exponent)?;
            }
        }
        Ok(())
    }
}

impl Serialize for Word {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// A length function ψ on the free group.
///
/// `Scaled` with a negative factor is not a length in the strict sense; it exists
/// to produce refutations in the conditional-negativity tests.
#[derive(Clone, Debug, PartialEq)]
pub enum LengthFunction {
    WordLength,
    /// `Σ |exponent|^q` over syllables, `0 < q <= 2`.
    QLength(f64),
    /// Squared Euclidean norm of the net exponent vector.
    PsiZ,
    /// `g ↦ base(π(g))` for the homomorphism sending generator `i` to `images[i-1]`.
    Pullback {
        images: Vec<Word>,
        base: Box<LengthFunction>,
    },
    /// Explicit finite table; unlisted words take `default`, except the identity (0).
    Table {
        entries: BTreeMap<Word, Real>,
        default: Real,
    },
    Scaled {
        factor: Real,
        base: Box<LengthFunction>,
    },
}

impl LengthFunction {
    pub fn q_length(q: f64) -> Result<Self> {
        validate_q(q)?;
        Ok(LengthFunction::QLength(q))
    }

    /// Pullback of word length along `g_i ↦ g_i^{powers[i-1]}`.
    pub fn pullback_powers(rank: usize, powers: &[i64]) -> Result<Self> {
        if powers.len() != rank {
            return Err(Error::InvalidParameter(format!(
                "pullback needs {rank} powers, got {}",
                powers.len()
            )));
        }
        let images = powers
            .iter()
            .enumerate()
            .map(|(i, &p)| Word::power(rank, i + 1, p))
            .collect::<Result<Vec<_>>>()?;
        Ok(LengthFunction::Pullback {
            images,
            base: Box::new(LengthFunction::WordLength),
        })
    }

    pub fn scaled(factor: Real, base: LengthFunction) -> Self {
        LengthFunction::Scaled {
            factor,
            base: Box::new(base),
        }
    }

    pub fn negated_word_length() -> Self {
        LengthFunction::scaled(Real::integer(-1), LengthFunction::WordLength)
    }

    pub fn evaluate(&self, g: &Word) -> Result<Real> {
        match self {
            LengthFunction::WordLength => Ok(Real::integer(g.word_length().clone())),
            LengthFunction::QLength(q) => {
                validate_q(*q)?;
                if *q == 1.0 {
                    Ok(Real::integer(g.word_length().clone()))
                } else if *q == 2.0 {
                    let s: BigInt = g.syllables().iter().map(|s| &s.exponent * &s.exponent).sum();
                    Ok(Real::integer(s))
                } else {
                    let s = g
                        .syllables()
                        .iter()
                        .map(|s| s.exponent.abs().to_f64().unwrap_or(f64::INFINITY).powf(*q))
                        .sum();
                    Ok(Real::Float(s))
                }
            }
            LengthFunction::PsiZ => {
                let s: BigInt = g.net_exponents().iter().map(|n| n * n).sum();
                Ok(Real::integer(s))
            }
            LengthFunction::Pullback { images, base } => {
                if images.len() != g.rank() {
                    return Err(Error::RankMismatch {
                        left: images.len(),
                        right: g.rank(),
                    });
                }
                let target_rank = images.first().map_or(g.rank(), |w| w.rank());
                let mut image = Word::identity(target_rank);
                for s in g.syllables() {
                    image = image.multiply(&images[s.generator - 1].pow(&s.exponent))?;
                }
                base.evaluate(&image)
            }
            LengthFunction::Table { entries, default } => {
                if let Some(v) = entries.get(g) {
                    Ok(v.clone())
                } else if g.is_identity() {
                    Ok(Real::zero())
                } else {
                    Ok(default.clone())
                }
            }
            LengthFunction::Scaled { factor, base } => Ok(factor.mul(&base.evaluate(g)?)),
        }
    }

    pub fn evaluate_f64(&self, g: &Word) -> Result<f64> {
        Ok(self.evaluate(g)?.to_f64())
    }

    /// Parses `word`, `q:<q>`, `psiz`, `pullback:<m1>,<m2>,…` or `scaled:<c>:<inner>`.
    pub fn parse(rank: usize, spec: &str) -> Result<Self> {
        let spec = spec.trim();
        let bad = |m: &str| Error::Parse {
            input: spec.to_string(),
            position: 0,
            message: m.to_string(),
        };
        match spec {
            "word" | "word_length" => return Ok(LengthFunction::WordLength),
            "psiz" | "psi_z" => return Ok(LengthFunction::PsiZ),
            _ => {}
        }
        if let Some(q) = spec.strip_prefix("q:") {
            let q: f64 = q.parse().map_err(|_| bad("q must be a number"))?;
            return LengthFunction::q_length(q);
        }
        if let Some(list) = spec.strip_prefix("pullback:") {
            let powers = list
                .split(',')
                .map(|p| p.trim().parse::<i64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| bad("pullback powers must be integers"))?;
            return LengthFunction::pullback_powers(rank, &powers);
        }
        if let Some(rest) = spec.strip_prefix("scaled:") {
            let (c, inner) = rest
                .split_once(':')
                .ok_or_else(|| bad("expected scaled:<factor>:<inner>"))?;
            let factor = parse_real(c).ok_or_else(|| bad("malformed factor"))?;
            return Ok(LengthFunction::scaled(factor, LengthFunction::parse(rank, inner)?));
        }
        Err(bad("unknown length kind"))
    }
}

fn parse_real(s: &str) -> Option<Real> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(Real::ratio(n, d));
    }
    if let Ok(n) = s.parse::<BigInt>() {
        return Some(Real::integer(n));
    }
    s.parse::<f64>().ok().map(Real::Float)
}

fn validate_q(q: f64) -> Result<()> {
    if q > 0.0 && q <= 2.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "q-length requires 0 < q <= 2, got {q}"
        )))
    }
}

impl fmt::Display for LengthFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LengthFunction::WordLength => write!(f, "word"),
            LengthFunction::QLength(q) => write!(f, "q:{q}"),
            LengthFunction::PsiZ => write!(f, "psiz"),
            LengthFunction::Pullback { images, base } => {
                write!(f, "pullback[")?;
                for (i, w) in images.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{w}")?;
                }
                write!(f, "]:{base}")
            }
            LengthFunction::Table { entries, default } => {
                write!(f, "table({} entries, default {default})", entries.len())
            }
            LengthFunction::Scaled { factor, base } => write!(f, "scaled:{factor}:{base}"),
        }
    }
}

impl Serialize for LengthFunction {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// `1 + Σ_{r=1..R} 2k(2k-1)^{r-1}`, saturating at `u128::MAX`.
pub fn ball_size(rank: usize, radius: usize) -> u128 {
    let k = rank as u128;
    let mut total: u128 = 1;
    let mut layer: u128 = 2 * k;
    for r in 1..=radius {
        if r > 1 {
            layer = layer.saturating_mul(2 * k - 1);
        }
        total = total.saturating_add(layer);
    }
    total
}

/// All reduced words of length at most `radius`, in canonical order. Capped by the
/// environment budget.
pub fn ball(rank: usize, radius: usize) -> Result<Vec<Word>> {
    ball_capped(rank, radius, Budget::from_env().max_ball_words())
}

pub fn ball_capped(rank: usize, radius: usize, cap: u128) -> Result<Vec<Word>> {
    check_rank(rank)?;
    let size = ball_size(rank, radius);
    if size > cap {
        return Err(Error::BudgetExceeded {
            what: format!("ball({rank}, {radius})"),
            required: size,
            cap,
        });
    }
    // letters are (generator, ±1); a layer extends the previous one by a letter
    // that does not cancel the last one
    let mut words = vec![Word::identity(rank)];
    let mut layer: Vec<Vec<(usize, i8)>> = vec![Vec::new()];
    for _ in 0..radius {
        let mut next = Vec::with_capacity(layer.len() * (2 * rank).saturating_sub(1).max(1));
        for letters in &layer {
            for g in 1..=rank {
                for sign in [-1i8, 1] {
                    if letters.last() == Some(&(g, -sign)) {
                        continue;
                    }
                    let mut l = letters.clone();
                    l.push((g, sign));
                    next.push(l);
                }
            }
        }
        let mut layer_words: Vec<Word> = next
            .iter()
            .map(|l| {
                Word::reduce(rank, l.iter().map(|&(g, s)| (g, BigInt::from(s))))
                    .expect("letters are in range")
            })
            .collect();
        layer_words.sort();
        words.extend(layer_words);
        layer = next;
    }
    Ok(words)
}
