//! Input files: word lists, Fourier elements and Paley job descriptions.

use std::path::Path;

use lacunae::nc_fourier::Coeff;
use lacunae::{Error, FourierElement, Result, Word};
use num_complex::Complex64;
use serde_json::Value;

pub fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Schema(format!("cannot read {}: {e}", path.display())))?;
    if text.trim().is_empty() {
        return Err(Error::Schema(format!("{}: empty input", path.display())));
    }
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        input: path.display().to_string(),
        position: e.column(),
        message: format!("line {}: {e}", e.line()),
    })
}

fn rank_field(v: &Value, default: usize) -> Result<usize> {
    match v.get("rank") {
        None => Ok(default),
        Some(r) => r
            .as_u64()
            .filter(|&r| r >= 1)
            .map(|r| r as usize)
            .ok_or_else(|| Error::Schema("\"rank\" must be a positive integer".into())),
    }
}

/// A JSON array of words, or `{"rank": k, "words": [...]}`.
pub fn words_from_value(v: &Value, default_rank: usize) -> Result<(usize, Vec<Word>)> {
    let (rank, list) = match v {
        Value::Array(a) => (default_rank, a),
        Value::Object(_) => {
            let rank = rank_field(v, default_rank)?;
            let list = v
                .get("words")
                .and_then(Value::as_array)
                .ok_or_else(|| Error::Schema("missing array field \"words\"".into()))?;
            (rank, list)
        }
        _ => return Err(Error::Schema("expected a word array or an object with \"words\"".into())),
    };
    let words = list
        .iter()
        .map(|w| Word::from_json(rank, w))
        .collect::<Result<Vec<_>>>()?;
    Ok((rank, words))
}

pub fn read_words(path: &Path, default_rank: usize) -> Result<(usize, Vec<Word>)> {
    words_from_value(&read_json(path)?, default_rank)
}

fn complex(v: &Value) -> Option<Complex64> {
    if let Some(x) = v.as_f64() {
        return Some(Complex64::new(x, 0.0));
    }
    match v.as_array()?.as_slice() {
        [re, im] => Some(Complex64::new(re.as_f64()?, im.as_f64()?)),
        _ => None,
    }
}

/// One coefficient: a number or `[re, im]` when `dim = 1`, otherwise a
/// row-major list of `dim²` entries.
pub fn coeff_from_value(v: &Value, dim: usize, index: usize) -> Result<Coeff> {
    let bad = || Error::Schema(format!("coeffs[{index}]: expected {dim}x{dim} coefficient"));
    if dim == 1 {
        if let Some(z) = complex(v) {
            return Ok(Coeff::from_element(1, 1, z));
        }
    }
    let items = v.as_array().ok_or_else(bad)?;
    if items.len() != dim * dim {
        return Err(bad());
    }
    let entries = items.iter().map(complex).collect::<Option<Vec<_>>>().ok_or_else(bad)?;
    Ok(Coeff::from_row_slice(dim, dim, &entries))
}

/// `{"rank", "length"?, "dim"?, "words", "coeffs"?}`; missing coefficients are 1.
pub struct SequenceInput {
    pub rank: usize,
    pub length: Option<String>,
    pub words: Vec<Word>,
    pub coeffs: Vec<Coeff>,
}

pub fn read_sequence(path: &Path, default_rank: usize) -> Result<SequenceInput> {
    let v = read_json(path)?;
    let (rank, words) = words_from_value(&v, default_rank)?;
    let dim = match v.get("dim") {
        None => 1,
        Some(d) => d
            .as_u64()
            .filter(|&d| d >= 1)
            .ok_or_else(|| Error::Schema("\"dim\" must be a positive integer".into()))?
            as usize,
    };
    let coeffs = match v.get("coeffs") {
        None => vec![Coeff::identity(dim, dim); words.len()],
        Some(Value::Array(list)) => {
            if list.len() != words.len() {
                return Err(Error::Schema(format!(
                    "{} words but {} coefficients",
                    words.len(),
                    list.len()
                )));
            }
            list.iter()
                .enumerate()
                .map(|(i, c)| coeff_from_value(c, dim, i))
                .collect::<Result<Vec<_>>>()?
        }
        Some(_) => return Err(Error::Schema("\"coeffs\" must be an array".into())),
    };
    let length = match v.get("length") {
        None => None,
        Some(Value::String(s)) => Some(s.clone()),
        Some(_) => return Err(Error::Schema("\"length\" must be a string".into())),
    };
    Ok(SequenceInput {
        rank,
        length,
        words,
        coeffs,
    })
}

pub fn read_fourier(path: &Path) -> Result<FourierElement> {
    FourierElement::from_json(&read_json(path)?)
}

/// `{"y": element, "z": element, "targets": [words]}`.
pub fn read_split(path: &Path) -> Result<(FourierElement, FourierElement, Vec<Word>)> {
    let v = read_json(path)?;
    let y = FourierElement::from_json(
        v.get("y").ok_or_else(|| Error::Schema("missing field \"y\"".into()))?,
    )?;
    let z = FourierElement::from_json(
        v.get("z").ok_or_else(|| Error::Schema("missing field \"z\"".into()))?,
    )?;
    let targets = v
        .get("targets")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Schema("missing array field \"targets\"".into()))?
        .iter()
        .map(|w| Word::from_json(y.rank(), w))
        .collect::<Result<Vec<_>>>()?;
    Ok((y, z, targets))
}

/// Comma-separated positive reals, or `log:<start>:<end>:<points>`.
pub fn parse_t_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = |m: &str| Error::Parse {
        input: spec.to_string(),
        position: 0,
        message: m.to_string(),
    };
    if let Some(rest) = spec.strip_prefix("log:") {
        let parts: Vec<&str> = rest.split(':').collect();
        if parts.len() != 3 {
            return Err(bad("expected log:<start>:<end>:<points>"));
        }
        let a: f64 = parts[0].parse().map_err(|_| bad("bad start"))?;
        let b: f64 = parts[1].parse().map_err(|_| bad("bad end"))?;
        let n: usize = parts[2].parse().map_err(|_| bad("bad point count"))?;
        if !(a > 0.0 && b >= a && n >= 1) {
            return Err(bad("need 0 < start <= end and at least one point"));
        }
        return Ok(lacunae::nc_fourier::log_grid(a, b, n));
    }
    let mut out = Vec::new();
    let mut offset = 0;
    for part in spec.split(',') {
        let t: f64 = part.trim().parse().map_err(|_| Error::Parse {
            input: spec.to_string(),
            position: offset,
            message: "expected a number".into(),
        })?;
        if !(t > 0.0) {
            return Err(Error::Parse {
                input: spec.to_string(),
                position: offset,
                message: "t must be positive".into(),
            });
        }
        out.push(t);
        offset += part.len() + 1;
    }
    Ok(out)
}
