use std::collections::BTreeMap;


use crate::connection::Connection;
use crate::error::{Error, Result};
use crate::qmat::QMat;
use crate::rational::Q;
use crate::series::{Derivation, MultiIndex, RingSpec, Term};
use crate::smat::SMat;

use super::sylvester::sylvester_solve;

/// Change of basis `e' = e U` with `U ≡ 1` modulo the maximal ideal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GaugeTransform {
    matrix: SMat,
}

impl GaugeTransform {
    pub fn new(matrix: SMat) -> Result<Self> {
        if matrix.rows() != matrix.cols() || matrix.constant_term() != QMat::identity(matrix.rows()) {
            return Err(Error::Usage("gauge transform must have identity constant term".into()));
        }
        let zero = MultiIndex::zero(matrix.ring().n);
        if (1..=matrix.u_trunc()).any(|j| !matrix.coefficient(&zero, j).is_zero()) {
            return Err(Error::Usage("gauge transform must have identity constant term".into()));
        }
        Ok(GaugeTransform { matrix })
    }

    pub fn identity(ring: RingSpec, u_trunc: u32, s: usize) -> Self {
        GaugeTransform {
            matrix: SMat::identity(ring, u_trunc, s),
        }
    }

    pub fn matrix(&self) -> &SMat {
        &self.matrix
    }

    pub fn ring(&self) -> RingSpec {
        self.matrix.ring()
    }

    pub fn apply(&self, c: &Connection) -> Result<Connection> {
        c.gauge(&self.matrix)
    }

    pub fn compose(&self, then: &GaugeTransform) -> GaugeTransform {
        GaugeTransform {
            matrix: self.matrix.mul(&then.matrix),
        }
    }

    /// `M_θ U + θ(U) - U M'_θ` per derivation, cut to the accuracy of `θ`.
    /// All zero iff `U` carries `from` to `to`.
    pub fn residual(&self, from: &Connection, to: &Connection) -> Result<Vec<SMat>> {
        from.same_shape(to)?;
        if from.rank() != to.rank() || self.matrix.rows() != from.rank() {
            return Err(Error::Shape("gauge certificate rank mismatch".into()));
        }
        let u = if self.matrix.u_trunc() == from.u_trunc() {
            self.matrix.clone()
        } else {
            self.matrix
                .map_monomials(from.ring(), from.u_trunc(), |k, j| Some((k.clone(), j)))
        };
        Ok(from
            .derivations()
            .iter()
            .enumerate()
            .map(|(i, &theta)| {
                let acc = from.accuracy(theta);
                from.mats()[i]
                    .mul(&u)
                    .add(&u.derive(theta))
                    .sub(&u.mul(&to.mats()[i]))
                    .truncated(acc.x, acc.u)
            })
            .collect())
    }

    pub fn verify(&self, from: &Connection, to: &Connection) -> Result<bool> {
        Ok(self.residual(from, to)?.iter().all(SMat::is_zero))
    }
}

/// Result of [`gauge_normal_form`].
#[derive(Clone, Debug)]
pub struct NormalForm {
    pub transform: GaugeTransform,
    /// Pivot matrix in the new frame: `H0 + X`, supported on balanced
    /// monomials.
    pub normalized: SMat,
    /// The whole connection in the new frame.
    pub connection: Connection,
    /// `Some(N)` when the transform still has terms at the top degree `N`.
    pub unstabilized_at: Option<u32>,
}

/// Gauge recursion at the pivot `Log(p)`, `p < r`, pairing `x_p, x_{p+1}`.
///
/// Coefficients are solved in monomial order. With `c_k = k_p - k_{p+1}`:
/// on unbalanced `k` the correction `X_k` vanishes and `U_k` solves
/// `H0 U_k - U_k H0 + c_k U_k = R_k`; on balanced `k != 0`, `U_k = 0` and
/// `X_k = -R_k`, where
/// `R_k = -Σ_{i<k} H_{k-i} U_i + Σ_{0<i<k} U_i (H0 + X)_{k-i}`.
pub fn gauge_normal_form(c: &Connection, pivot: usize) -> Result<NormalForm> {
    let ring = c.ring();
    if pivot == 0 || pivot >= ring.r {
        return Err(Error::Usage(format!(
            "pivot must pair two crossing coordinates: 1 <= p < r = {}",
            ring.r
        )));
    }
    c.require_nr()?;
    normal_form_unchecked(c, pivot)
}

pub(crate) fn normal_form_unchecked(c: &Connection, pivot: usize) -> Result<NormalForm> {
    let ring = c.ring();
    let theta = Derivation::Log(pivot);
    let idx = c
        .index_of(theta)
        .ok_or_else(|| Error::Usage(format!("{theta} is not a derivation of this connection")))?;
    let s = c.rank();
    let ut = c.u_trunc();
    let h = c.mats()[idx].coefficients();
    let zero_k = MultiIndex::zero(ring.n);
    let h00 = c.mats()[idx].constant_term();
    if !h00.is_strictly_upper() {
        if !h00.is_nilpotent() {
            return Err(Error::NotNilpotent(format!("pivot residue {h00}")));
        }
        return Err(Error::Usage(
            "pivot residue must be strictly upper triangular; trigonalize first".into(),
        ));
    }

    let mut u: BTreeMap<Term, QMat> = BTreeMap::new();
    let mut t: BTreeMap<Term, QMat> = BTreeMap::new();
    u.insert((zero_k.clone(), 0), QMat::identity(s));
    t.insert((zero_k.clone(), 0), h00.clone());

    for k in ring.monomials() {
        let ck = theta.log_eigenvalue(&ring, &k.0);
        for j in 0..=ut {
            if k.is_zero() && j == 0 {
                continue;
            }
            let mut rhs = QMat::zeros(s, s);
            for ((bk, bj), ub) in &u {
                if *bj > j || !bk.divides(&k) || (bk == &k && *bj == j) {
                    continue;
                }
                let ak = k.checked_sub(bk).expect("divides");
                let aj = j - bj;
                if let Some(ha) = h.get(&(ak.clone(), aj)) {
                    rhs = rhs.sub(&ha.mul(ub));
                }
                if bk.is_zero() && *bj == 0 {
                    continue;
                }
                if let Some(ta) = t.get(&(ak, aj)) {
                    rhs = rhs.add(&ub.mul(ta));
                }
            }
            if ck == 0 {
                let x = rhs.neg();
                if !x.is_zero() {
                    t.insert((k.clone(), j), x);
                }
            } else {
                let uk = sylvester_solve(&h00, &Q::from_integer(ck.into()), &rhs)?;
                if !uk.is_zero() {
                    u.insert((k.clone(), j), uk);
                }
            }
        }
    }

    let umat = SMat::from_coefficients(ring, ut, s, s, &u);
    let normalized = SMat::from_coefficients(ring, ut, s, s, &t);
    let unstabilized_at = u
        .keys()
        .any(|(k, _)| ring.weighted_degree(&k.0) == ring.trunc && !k.is_zero())
        .then_some(ring.trunc);
    let connection = c.gauge(&umat)?;
    if connection.mats()[idx] != normalized {
        return Err(Error::Consistency(
            "normalized pivot matrix disagrees with the gauged connection".into(),
        ));
    }
    Ok(NormalForm {
        transform: GaugeTransform { matrix: umat },
        normalized,
        connection,
        unstabilized_at,
    })
}

/// `H U + θ(U) - U M` for the pivot `θ`; zero for a correct normal form.
pub fn normal_form_residual(c: &Connection, pivot: usize, nf: &NormalForm) -> SMat {
    let theta = Derivation::Log(pivot);
    let h = c.mat(theta).expect("pivot derivation");
    let u = nf.transform.matrix();
    h.mul(u).add(&u.derive(theta)).sub(&u.mul(&nf.normalized))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connection::Family;
    use crate::rational::{inv_factorial, q};
    use crate::series::Series;

    #[test]
    fn exponential_gauge_for_x() {
        let ring = RingSpec::new(2, 2, 6).unwrap();
        let m = Series::monomial(ring, MultiIndex(vec![1, 0]), q(1)).unwrap();
        let c = Connection::new(ring, Family::Relative, 0, vec![SMat::from_entries(ring, 0, 1, 1, vec![m])])
            .unwrap();
        let nf = gauge_normal_form(&c, 1).unwrap();
        assert!(nf.normalized.is_zero());
        for k1 in 0..=6u32 {
            let sign = if k1 % 2 == 0 { q(1) } else { q(-1) };
            assert_eq!(
                nf.transform.matrix().get(0, 0).coeff(&MultiIndex(vec![k1, 0]), 0),
                sign * inv_factorial(k1)
            );
        }
        assert_eq!(nf.unstabilized_at, Some(6));
        assert!(normal_form_residual(&c, 1, &nf).is_zero());
    }

    #[test]
    fn constant_input_is_a_fixed_point() {
        let ring = RingSpec::new(2, 2, 4).unwrap();
        let h0 = QMat::from_i64(&[&[0, 1], &[0, 0]]);
        let c = Connection::constant(ring, Family::Relative, 2, &[h0.clone()]).unwrap();
        let nf = gauge_normal_form(&c, 1).unwrap();
        assert_eq!(nf.transform, GaugeTransform::identity(ring, 0, 2));
        assert_eq!(nf.normalized, SMat::constant(ring, 0, &h0));
        assert_eq!(nf.unstabilized_at, None);
    }
}
