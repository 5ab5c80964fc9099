use num_traits::{One, Zero};


use crate::error::{Error, Result};
use crate::qmat::QMat;
use crate::rational::{inv_factorial, Q};

/// Matrix polynomial `Σ_j C_j t^j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolyMat {
    pub coeffs: Vec<QMat>,
}

impl PolyMat {
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, t: &Q) -> QMat {
        let n = self.coeffs[0].rows();
        self.coeffs
            .iter()
            .rev()
            .fold(QMat::zeros(n, n), |acc, c| acc.scale(t).add(c))
    }
}

/// `exp(N t) = Σ_j N^j t^j / j!`, a finite sum for nilpotent `N`.
pub fn ga_rep(n: &QMat) -> Result<PolyMat> {
    let index = n
        .nilpotency_index()
        .ok_or_else(|| Error::NotNilpotent(format!("{n}")))?;
    let mut coeffs = Vec::with_capacity(index.max(1));
    let mut p = QMat::identity(n.rows());
    for j in 0..index.max(1) {
        coeffs.push(p.scale(&inv_factorial(j as u32)));
        p = p.mul(n);
    }
    Ok(PolyMat { coeffs })
}

/// `log U = Σ_{j>=1} (-1)^{j+1} (U - 1)^j / j` for unipotent `U`.
pub fn unipotent_log(u: &QMat) -> Result<QMat> {
    let d = u.sub(&QMat::identity(u.rows()));
    let index = d
        .nilpotency_index()
        .ok_or_else(|| Error::NotNilpotent(format!("{u} is not unipotent")))?;
    let mut out = QMat::zeros(u.rows(), u.cols());
    let mut p = d.clone();
    for j in 1..index {
        let c = Q::from_integer(if j % 2 == 1 { 1 } else { -1 }.into()) / Q::from_integer((j as i64).into());
        out = out.add(&p.scale(&c));
        p = p.mul(&d);
    }
    Ok(out)
}

/// Recovers `N` from `t ↦ exp(N t)`.
pub fn nilpotent_log(rep: &PolyMat) -> Result<QMat> {
    unipotent_log(&rep.eval(&Q::one()))
}

/// `ρ(t + s) = ρ(t) ρ(s)` as an identity of polynomials in `t, s`: the
/// coefficient of `t^a s^b` is `C(a+b, a) C_{a+b}` on the left and
/// `C_a C_b` on the right.
pub fn homomorphism_law_holds(rep: &PolyMat) -> bool {
    let d = rep.coeffs.len();
    let n = rep.coeffs[0].rows();
    let get = |j: usize| rep.coeffs.get(j).cloned().unwrap_or_else(|| QMat::zeros(n, n));
    for a in 0..d {
        for b in 0..d {
            let binom = inv_factorial(a as u32) * inv_factorial(b as u32) / inv_factorial((a + b) as u32);
            let lhs = get(a + b).scale(&binom);
            let rhs = get(a).mul(&get(b));
            if lhs != rhs {
                return false;
            }
        }
    }
    rep.eval(&Q::zero()) == QMat::identity(n)
}
