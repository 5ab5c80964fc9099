//! JSON encodings of rationals, series and matrices.

use logconn::rational::parse_q;
use logconn::{MultiIndex, QMat, RingSpec, SMat, Series, Q};
use num_bigint::BigInt;
use num_traits::{One, ToPrimitive};
use serde_json::{json, Value};

/// Integers that fit `i64` stay numbers; larger ones become strings.
pub fn int_to_json(b: &BigInt) -> Value {
    match b.to_i64() {
        Some(i) => json!(i),
        None => Value::String(b.to_string()),
    }
}

pub fn q_to_json(x: &Q) -> Value {
    if x.denom().is_one() {
        int_to_json(x.numer())
    } else {
        Value::String(format!("{}/{}", x.numer(), x.denom()))
    }
}

pub fn parse_int(v: &Value) -> Option<BigInt> {
    match v {
        Value::Number(n) => n.as_i64().map(BigInt::from).or_else(|| n.as_u64().map(BigInt::from)),
        Value::String(s) => s.trim().parse().ok(),
        _ => None,
    }
}

pub fn parse_rational(v: &Value) -> Option<Q> {
    match v {
        Value::String(s) => parse_q(s),
        _ => parse_int(v).map(Q::from_integer),
    }
}

pub fn qmat_to_json(m: &QMat) -> Value {
    Value::Array(
        (0..m.rows())
            .map(|i| Value::Array(m.row(i).iter().map(q_to_json).collect()))
            .collect(),
    )
}

/// `[multi-index, numerator, denominator]`, with a fourth entry for a
/// nonzero `u`-degree.
pub fn series_to_json(s: &Series) -> Value {
    Value::Array(
        s.terms()
            .map(|(k, j, c)| {
                let mut t = vec![json!(k.0), int_to_json(c.numer()), int_to_json(c.denom())];
                if j > 0 {
                    t.push(json!(j));
                }
                Value::Array(t)
            })
            .collect(),
    )
}

/// Sparse `[row, col, terms]` triples, row-major, zero entries omitted.
pub fn smat_to_json(m: &SMat) -> Value {
    let mut out = Vec::new();
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            let e = m.get(i, j);
            if !e.is_zero() {
                out.push(json!([i, j, series_to_json(e)]));
            }
        }
    }
    Value::Array(out)
}

pub fn vector_to_json(v: &[Series]) -> Value {
    Value::Array(v.iter().map(series_to_json).collect())
}

pub fn ring_to_json(ring: &RingSpec, u_trunc: Option<u32>) -> Value {
    let mut m = serde_json::Map::new();
    m.insert("n".into(), json!(ring.n));
    m.insert("r".into(), json!(ring.r));
    m.insert("trunc".into(), json!(ring.trunc));
    if let Some(t) = u_trunc {
        m.insert("u_trunc".into(), json!(t));
    }
    if ring.tail_weight != 1 {
        m.insert("tail_weight".into(), json!(ring.tail_weight));
    }
    Value::Object(m)
}

pub fn multi_index(v: &Value, n: usize) -> Option<MultiIndex> {
    let a = v.as_array()?;
    if a.len() != n {
        return None;
    }
    a.iter()
        .map(|e| e.as_u64().and_then(|x| u32::try_from(x).ok()))
        .collect::<Option<Vec<u32>>>()
        .map(MultiIndex)
}

#[cfg(test)]
mod tests {
    use super::*;
    use logconn::rational::{q, qf};

    #[test]
    fn rationals_round_trip() {
        for x in [q(0), q(-7), qf(3, 4), qf(-1, 9)] {
            assert_eq!(parse_rational(&q_to_json(&x)), Some(x));
        }
        let big = Q::from_integer(BigInt::from(10).pow(30));
        assert!(q_to_json(&big).is_string());
        assert_eq!(parse_rational(&q_to_json(&big)), Some(big));
    }
}
