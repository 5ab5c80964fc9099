use crate::connection::{Connection, Family};
use crate::error::{Error, Result};
use crate::qmat::QMat;
use crate::series::{Derivation, MultiIndex, RingSpec};
use crate::smat::SMat;

use super::gauge::{normal_form_unchecked, GaugeTransform};
use super::trigonalize::nilpotent_trigonalize;

/// Output of [`descend_crossing`].
#[derive(Clone, Debug)]
pub struct CrossingDescent {
    /// Connection over `(n-1, n-1, N)`; its last variable stands for
    /// `x_{n-1} x_n` and carries the combined degree weight.
    pub connection: Connection,
    /// Action of the pivot `Log(n-1)`, a horizontal endomorphism of
    /// `connection` with nilpotent constant term.
    pub nmat: SMat,
    /// Carries the input to `expand_crossing(connection, nmat)`.
    pub transform: GaugeTransform,
}

/// One descent step in raw form: `C · P · U = h(connection)`, with the
/// extra horizontal endomorphisms carried along.
pub(crate) struct CrossingStep {
    pub p: QMat,
    pub u: GaugeTransform,
    pub connection: Connection,
    pub nmat: SMat,
    pub endos: Vec<SMat>,
    pub unstabilized_at: Option<u32>,
}

/// Ring of the balanced subalgebra generated by `x_1..x_{n-2}, x_{n-1} x_n`.
pub fn balanced_ring(ring: RingSpec) -> Result<RingSpec> {
    if ring.n != ring.r || ring.n < 2 {
        return Err(Error::Usage(format!("crossing descent needs r = n >= 2, got {ring}")));
    }
    Ok(RingSpec::new(ring.n - 1, ring.n - 1, ring.trunc)?.with_tail_weight(ring.tail_weight + 1))
}

fn unbalanced(k: &MultiIndex) -> bool {
    let n = k.0.len();
    k.0[n - 2] != k.0[n - 1]
}

/// Reads a balanced matrix over the smaller ring, `x^(.., a, a) -> x'^(.., a)`.
fn to_balanced(m: &SMat, ring: RingSpec, what: &str) -> Result<SMat> {
    for e in m.entries() {
        if let Some((k, j, _)) = e.terms().find(|(k, _, _)| unbalanced(k)) {
            return Err(Error::Consistency(format!(
                "{what} keeps the unbalanced term x^{k} u^{j} after normalization"
            )));
        }
    }
    Ok(m.map_monomials(ring, m.u_trunc(), |k, j| Some((MultiIndex(k.0[..k.0.len() - 1].to_vec()), j))))
}

/// Inverse of [`to_balanced`]; fails if a term would exceed the target bound.
pub(crate) fn from_balanced(m: &SMat, target: RingSpec) -> Result<SMat> {
    let lift = |k: &MultiIndex| {
        let mut k2 = k.0.clone();
        k2.push(*k.0.last().expect("nonempty exponent"));
        MultiIndex(k2)
    };
    for e in m.entries() {
        for (k, _, _) in e.terms() {
            let k2 = lift(k);
            if !target.is_admissible(&k2) {
                return Err(Error::Usage(format!("x^{k} has no image in {target}")));
            }
        }
    }
    Ok(m.map_monomials(target, m.u_trunc(), |k, j| Some((lift(k), j))))
}

pub(crate) fn descend_crossing_step(c: &Connection, endos: &[SMat]) -> Result<CrossingStep> {
    let ring = c.ring();
    let small = balanced_ring(ring)?;
    let n = ring.n;
    let pivot = n - 1;
    let s = c.rank();
    let ut = c.u_trunc();
    let pidx = c.index_of(Derivation::Log(pivot)).expect("pivot derivation");

    let (p, _) = nilpotent_trigonalize(s, &[c.mats()[pidx].constant_term()])?;
    let pinv = p.inverse().expect("trigonalizing basis");
    let c1 = c.gauge(&SMat::constant(ring, ut, &p))?;
    let nf = normal_form_unchecked(&c1, pivot)?;
    let uinv = nf.transform.matrix().inverse().expect("unipotent gauge");
    let (pinv_s, p_s) = (SMat::constant(ring, ut, &pinv), SMat::constant(ring, ut, &p));
    let endos_b: Vec<SMat> = endos
        .iter()
        .map(|e| uinv.mul(&pinv_s.mul(e).mul(&p_s)).mul(nf.transform.matrix()))
        .collect();

    let derivs = c.derivations();
    let mut mats = Vec::new();
    let mut last_log = None;
    for (i, theta) in derivs.iter().enumerate() {
        let m = &nf.connection.mats()[i];
        match theta {
            Derivation::Log(i) if *i == pivot => {}
            Derivation::Log(i) if *i == n => {
                // The pair with the pivot fixes the u-degree T terms of
                // this matrix only up to the bound; drop the undetermined
                // unbalanced ones.
                let m = if c.family() == Family::UExtended {
                    m.map_monomials(ring, ut, |k, j| (!(unbalanced(k) && j == ut)).then(|| (k.clone(), j)))
                } else {
                    m.clone()
                };
                last_log = Some(to_balanced(&m, small, &theta.to_string())?);
            }
            _ => mats.push(to_balanced(m, small, &theta.to_string())?),
        }
    }
    mats.extend(last_log);
    let connection = Connection::with_rank(small, c.family(), ut, s, mats)?;
    let nmat = to_balanced(&nf.normalized, small, "pivot matrix")?;
    let endos = endos_b
        .iter()
        .enumerate()
        .map(|(i, e)| to_balanced(e, small, &format!("endomorphism {i}")))
        .collect::<Result<Vec<_>>>()?;
    Ok(CrossingStep {
        p,
        unstabilized_at: nf.unstabilized_at,
        u: nf.transform,
        connection,
        nmat,
        endos,
    })
}

/// Normalizes the pivot `Log(n-1)` so that only balanced monomials remain,
/// then reads everything over the subring generated by `x_1..x_{n-2}` and
/// `x_{n-1} x_n`.
pub fn descend_crossing(c: &Connection) -> Result<CrossingDescent> {
    balanced_ring(c.ring())?;
    c.require_nr()?;
    let step = descend_crossing_step(c, &[])?;
    let ring = c.ring();
    let ut = c.u_trunc();
    let small = step.connection.ring();
    let pinv = step.p.inverse().expect("trigonalizing basis");
    let g = SMat::constant(ring, ut, &step.p)
        .mul(step.u.matrix())
        .mul(&SMat::constant(ring, ut, &pinv));
    let conj = |m: &SMat| {
        SMat::constant(small, ut, &step.p)
            .mul(m)
            .mul(&SMat::constant(small, ut, &pinv))
    };
    let mats = step.connection.mats().iter().map(conj).collect();
    Ok(CrossingDescent {
        connection: Connection::with_rank(small, c.family(), ut, c.rank(), mats)?,
        nmat: conj(&step.nmat),
        transform: GaugeTransform::new(g)?,
    })
}

/// Quasi-inverse of [`descend_crossing`]: tensors up along
/// `x'_{n-1} -> x_{n-1} x_n` into `target = (n, n, N)` and lets the pivot
/// act through `nmat`.
pub fn expand_crossing(c: &Connection, nmat: &SMat, target: RingSpec) -> Result<Connection> {
    let ring = c.ring();
    if target.n != ring.n + 1 || target.r != target.n || ring.r != ring.n || target.trunc != ring.trunc {
        return Err(Error::Usage(format!("cannot expand {ring} to {target}")));
    }
    if nmat.ring() != ring || nmat.rows() != c.rank() || nmat.cols() != c.rank() || nmat.u_trunc() != c.u_trunc() {
        return Err(Error::Shape("pivot matrix does not match the connection".into()));
    }
    if !nmat.constant_term().is_nilpotent() {
        return Err(Error::NotNilpotent(format!("pivot residue {}", nmat.constant_term())));
    }
    let n = target.n;
    let mut small = c.mats().iter();
    let mut mats = Vec::new();
    for theta in c.family().derivations(&target) {
        let m = match theta {
            Derivation::Log(i) if i == n - 1 => nmat,
            _ => small.next().expect("matrix per derivation"),
        };
        mats.push(from_balanced(m, target)?);
    }
    Connection::with_rank(target, c.family(), c.u_trunc(), c.rank(), mats)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_descends_to_trivial() {
        let ring = RingSpec::new(2, 2, 4).unwrap();
        let d = descend_crossing(&Connection::trivial(ring, Family::Relative, 0, 2)).unwrap();
        let small = RingSpec::new(1, 1, 4).unwrap().with_tail_weight(2);
        assert_eq!(d.connection, Connection::trivial(small, Family::Relative, 0, 2));
        assert!(d.nmat.is_zero());
    }

    #[test]
    fn expanded_pair_descends_to_itself() {
        let ring = RingSpec::new(3, 3, 4).unwrap();
        let small = balanced_ring(ring).unwrap();
        let n = QMat::from_i64(&[&[0, 0], &[1, 0]]);
        let base = Connection::trivial(small, Family::Relative, 0, 2);
        let c = expand_crossing(&base, &SMat::constant(small, 0, &n), ring).unwrap();
        let d = descend_crossing(&c).unwrap();
        assert_eq!(d.connection, base);
        assert_eq!(d.nmat, SMat::constant(small, 0, &n));
        let back = expand_crossing(&d.connection, &d.nmat, ring).unwrap();
        assert!(d.transform.verify(&c, &back).unwrap());
    }
}
