use crate::connection::Connection;
use crate::error::{Error, Result};
use crate::series::Derivation;
use crate::smat::SMat;

/// A module map between two connections over the same ring and family,
/// given by a `rank(target) × rank(source)` matrix acting on coefficient
/// vectors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HorizontalMorphism {
    pub source: Connection,
    pub target: Connection,
    pub mat: SMat,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HorizontalityReport {
    /// `Φ M_src - θ(Φ) - M_tgt Φ` per derivation, cut to its accuracy.
    pub residuals: Vec<(Derivation, SMat)>,
}

impl HorizontalityReport {
    pub fn passed(&self) -> bool {
        self.residuals.iter().all(|(_, r)| r.is_zero())
    }
}

impl HorizontalMorphism {
    pub fn new(source: Connection, target: Connection, mat: SMat) -> Result<Self> {
        source.same_shape(&target)?;
        if mat.ring() != source.ring() {
            return Err(Error::RingMismatch(source.ring(), mat.ring()));
        }
        if mat.rows() != target.rank() || mat.cols() != source.rank() {
            return Err(Error::Shape(format!(
                "morphism matrix is {}x{}, expected {}x{}",
                mat.rows(),
                mat.cols(),
                target.rank(),
                source.rank()
            )));
        }
        let mat = if mat.u_trunc() == source.u_trunc() {
            mat
        } else {
            mat.map_monomials(source.ring(), source.u_trunc(), |k, j| Some((k.clone(), j)))
        };
        Ok(HorizontalMorphism { source, target, mat })
    }

    pub fn identity(c: &Connection) -> Self {
        HorizontalMorphism {
            source: c.clone(),
            target: c.clone(),
            mat: SMat::identity(c.ring(), c.u_trunc(), c.rank()),
        }
    }

    pub fn zero(source: &Connection, target: &Connection) -> Result<Self> {
        let mat = SMat::zeros(source.ring(), source.u_trunc(), target.rank(), source.rank());
        Self::new(source.clone(), target.clone(), mat)
    }

    /// `other ∘ self`.
    pub fn then(&self, other: &HorizontalMorphism) -> Result<Self> {
        if self.target != other.source {
            return Err(Error::Usage("morphisms do not compose".into()));
        }
        Self::new(self.source.clone(), other.target.clone(), other.mat.mul(&self.mat))
    }
}

/// Horizontality `∇_tgt(Φ f) = Φ ∇_src(f)`, which on matrices reads
/// `Φ M_src - θ(Φ) = M_tgt Φ`.
pub fn check_horizontal(phi: &HorizontalMorphism) -> HorizontalityReport {
    let src = &phi.source;
    let residuals = src
        .derivations()
        .into_iter()
        .enumerate()
        .map(|(i, theta)| {
            let acc = src.accuracy(theta);
            let r = phi
                .mat
                .mul(&src.mats()[i])
                .sub(&phi.mat.derive(theta))
                .sub(&phi.target.mats()[i].mul(&phi.mat))
                .truncated(acc.x, acc.u);
            (theta, r)
        })
        .collect();
    HorizontalityReport { residuals }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connection::Family;
    use crate::rational::q;
    use crate::series::{MultiIndex, RingSpec, Series};

    fn x(ring: RingSpec) -> SMat {
        SMat::from_entries(ring, 0, 1, 1, vec![Series::monomial(ring, MultiIndex(vec![1, 0]), q(1)).unwrap()])
    }

    #[test]
    fn multiplication_by_x_from_the_twist() {
        let ring = RingSpec::new(2, 2, 4).unwrap();
        let unit = Connection::unit(ring, Family::Relative);
        let twist = Connection::new(ring, Family::Relative, 0, vec![SMat::identity(ring, 0, 1)]).unwrap();
        let phi = HorizontalMorphism::new(twist, unit.clone(), x(ring)).unwrap();
        assert!(check_horizontal(&phi).passed());
        let untwisted = HorizontalMorphism::new(unit.clone(), unit, x(ring)).unwrap();
        let rep = check_horizontal(&untwisted);
        assert!(!rep.passed());
        assert_eq!(rep.residuals[0].1, x(ring).neg());
        assert!(check_horizontal(&HorizontalMorphism::identity(&phi.source)).passed());
    }
}
