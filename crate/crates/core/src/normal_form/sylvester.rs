use num_traits::Zero;

use crate::error::{Error, Result};
use crate::qmat::QMat;
use crate::rational::Q;

/// Solves `H0 X - X H0 + c X = rhs` for nilpotent `H0` and `c != 0`.
///
/// With `φ(X) = H0 X - X H0`, nilpotent of index at most `2m - 1` when
/// `H0^m = 0`, the solution is `X = (1/c) Σ_{j<=2m-2} (-φ/c)^j (rhs)`.
pub fn sylvester_solve(h0: &QMat, c: &Q, rhs: &QMat) -> Result<QMat> {
    if c.is_zero() {
        return Err(Error::Usage("sylvester_solve called with c = 0".into()));
    }
    if !h0.is_square() || rhs.rows() != h0.rows() || rhs.cols() != h0.rows() {
        return Err(Error::Shape("sylvester_solve needs square matrices of equal size".into()));
    }
    let m = h0
        .nilpotency_index()
        .ok_or_else(|| Error::NotNilpotent(format!("{h0}")))?;
    let inv_c = c.recip();
    if m <= 1 {
        return Ok(rhs.scale(&inv_c));
    }
    let mut term = rhs.clone();
    let mut acc = rhs.clone();
    let neg_inv_c = -inv_c.clone();
    for _ in 1..=(2 * m - 2) {
        term = h0.mul(&term).sub(&term.mul(h0)).scale(&neg_inv_c);
        if term.is_zero() {
            break;
        }
        acc = acc.add(&term);
    }
    Ok(acc.scale(&inv_c))
}
