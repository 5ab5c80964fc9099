use num_traits::Zero;

use crate::connection::{Connection, Family};
use crate::error::{Error, Result};
use crate::normal_form::reduce::reduce_model;
use crate::rational::Q;
use crate::series::{Derivation, Series};
use crate::smat::SMat;

/// Absolute lift of a rank-1 relative connection.
#[derive(Clone, Debug)]
pub struct Lift {
    pub lift: Connection,
    /// Matrix of `Log(r)` in the lift.
    pub alpha: Series,
    /// `g` with `c · g` trivial.
    pub trivializer: Series,
}

/// The lift with nilpotent residues. Writing `c = trivial · g^{-1}`, every
/// relative matrix is `-θ(g)/g` and the lift takes `α = -Log(r)(g)/g`.
pub fn lift_rank1(c: &Connection) -> Result<Lift> {
    if c.family() != Family::Relative {
        return Err(Error::Usage(format!("lift_rank1 needs a relative connection, got {}", c.family())));
    }
    if c.rank() != 1 {
        return Err(Error::Usage(format!("lift_rank1 needs rank 1, got {}", c.rank())));
    }
    let red = reduce_model(c)?;
    let ring = c.ring();
    let g = red.transform.matrix().get(0, 0).clone();
    let ginv = red
        .transform
        .matrix()
        .inverse()
        .expect("gauge transform")
        .get(0, 0)
        .clone();
    let alpha = Derivation::Log(ring.r).apply(&g).mul(&ginv).neg();
    let mut rel = c.mats().iter();
    let mats = Family::Absolute
        .derivations(&ring)
        .into_iter()
        .map(|theta| {
            if theta == Derivation::Log(ring.r) {
                SMat::from_entries(ring, 0, 1, 1, vec![alpha.clone()])
            } else {
                rel.next().expect("relative matrix").clone()
            }
        })
        .collect();
    let lift = Connection::new(ring, Family::Absolute, 0, mats)?;
    if lift.restrict()? != *c {
        return Err(Error::Consistency("lift does not restrict to the input".into()));
    }
    lift.require_nr()
        .map_err(|e| Error::Consistency(format!("computed lift fails its checks: {e}")))?;
    Ok(Lift {
        lift,
        alpha,
        trivializer: g,
    })
}

/// Outcome of comparing a candidate lift against the computed one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LiftVerdict {
    /// The candidate is the computed lift.
    Equal,
    /// The candidate does not restrict to the given connection.
    NotALift,
    /// The difference `β` of the `Log(r)` matrices is not flat along the
    /// derivation shown, so the candidate is not integrable.
    NonConstantDifference { derivation: Derivation, residual: Series },
    /// `β` is a nonzero constant, which is then the residue of the
    /// candidate along `Log(r)`: not nilpotent.
    NonNilpotentResidue { residue: Q },
}

impl LiftVerdict {
    pub fn valid(&self) -> bool {
        *self == LiftVerdict::Equal
    }
}

/// Decides whether `candidate` is a valid lift, by the argument that forces
/// uniqueness: integrability makes the difference of the two `Log(r)`
/// matrices flat along every other derivation, hence constant, and
/// nilpotence of the residue makes the constant zero.
pub fn check_lift_uniqueness(c: &Connection, candidate: &Connection) -> Result<LiftVerdict> {
    let computed = lift_rank1(c)?;
    if candidate.family() != Family::Absolute || candidate.rank() != 1 || candidate.ring() != c.ring() {
        return Ok(LiftVerdict::NotALift);
    }
    if candidate.restrict()? != *c {
        return Ok(LiftVerdict::NotALift);
    }
    let ring = c.ring();
    let last = Derivation::Log(ring.r);
    let beta = candidate.mat(last).expect("Log(r)").get(0, 0).sub(&computed.alpha);
    for theta in candidate.derivations() {
        if theta == last {
            continue;
        }
        let acc = candidate.accuracy(theta).min(candidate.accuracy(last));
        let residual = theta.apply(&beta).truncated(acc.x, acc.u);
        if !residual.is_zero() {
            return Ok(LiftVerdict::NonConstantDifference {
                derivation: theta,
                residual,
            });
        }
    }
    let residue = beta.constant_term();
    if !beta.sub(&Series::constant(ring, residue.clone())).is_zero() {
        return Err(Error::Consistency(format!("flat difference {beta} is not constant")));
    }
    if !residue.is_zero() {
        return Ok(LiftVerdict::NonNilpotentResidue { residue });
    }
    Ok(LiftVerdict::Equal)
}
