//! Connections on free modules over the truncated ring.
//!
//! A connection of rank `s` stores one `s × s` matrix `M_θ` per basis
//! derivation `θ` of its family and acts on coefficient vectors by
//! `∇(θ) f = θ(f) + M_θ f`. Basis derivations are ordered
//! `Log(1)..Log(r-1)`, then `Log(r)` for absolute families, then
//! `Partial(r+1)..Partial(n)`.

use std::fmt;

use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::qmat::QMat;
use crate::rational::Q;
use crate::series::{Derivation, MultiIndex, RingSpec, Series};
use crate::smat::SMat;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    Relative,
    Absolute,
    /// Absolute derivations acting on coefficients polynomial in `u`, with
    /// `Log(r)` also differentiating `u`.
    UExtended,
}

impl Family {
    pub fn derivations(self, ring: &RingSpec) -> Vec<Derivation> {
        let last_log = match self {
            Family::Relative => ring.r - 1,
            Family::Absolute | Family::UExtended => ring.r,
        };
        (1..=last_log)
            .map(Derivation::Log)
            .chain((ring.r + 1..=ring.n).map(Derivation::Partial))
            .collect()
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Relative => "relative",
            Family::Absolute => "absolute",
            Family::UExtended => "u-extended",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Connection {
    ring: RingSpec,
    family: Family,
    rank: usize,
    u_trunc: u32,
    mats: Vec<SMat>,
}

/// Exact bounds (weighted `x`-degree, `u`-degree) up to which a derived
/// quantity is determined by the truncated data. Negative means nothing is.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Accuracy {
    pub x: i64,
    pub u: i64,
}

impl Accuracy {
    pub fn min(self, o: Accuracy) -> Accuracy {
        Accuracy {
            x: self.x.min(o.x),
            u: self.u.min(o.u),
        }
    }
}

impl Connection {
    pub fn new(ring: RingSpec, family: Family, u_trunc: u32, mats: Vec<SMat>) -> Result<Self> {
        let derivs = family.derivations(&ring);
        if family != Family::UExtended && u_trunc != 0 {
            return Err(Error::Usage(format!("{family} connections carry no u-bound")));
        }
        if mats.len() != derivs.len() {
            return Err(Error::Shape(format!(
                "{family} connection over {ring} needs {} matrices, got {}",
                derivs.len(),
                mats.len()
            )));
        }
        let rank = match mats.first() {
            Some(m) => m.rows(),
            None => {
                return Err(Error::Usage(
                    "connection without derivations: use Connection::trivial with an explicit rank".into(),
                ))
            }
        };
        Self::check_mats(ring, u_trunc, rank, &mats)?;
        Ok(Connection {
            ring,
            family,
            rank,
            u_trunc,
            mats,
        })
    }

    /// Like [`Connection::new`] but with an explicit rank, which matters
    /// only when the family has no derivations at all.
    pub fn with_rank(ring: RingSpec, family: Family, u_trunc: u32, rank: usize, mats: Vec<SMat>) -> Result<Self> {
        if mats.is_empty() && family.derivations(&ring).is_empty() {
            if family != Family::UExtended && u_trunc != 0 {
                return Err(Error::Usage(format!("{family} connections carry no u-bound")));
            }
            return Ok(Connection {
                ring,
                family,
                rank,
                u_trunc,
                mats,
            });
        }
        let c = Self::new(ring, family, u_trunc, mats)?;
        if c.rank != rank {
            return Err(Error::Shape(format!("declared rank {rank}, matrices have {}", c.rank)));
        }
        Ok(c)
    }

    fn check_mats(ring: RingSpec, u_trunc: u32, rank: usize, mats: &[SMat]) -> Result<()> {
        for m in mats {
            if m.ring() != ring {
                return Err(Error::RingMismatch(ring, m.ring()));
            }
            if m.u_trunc() != u_trunc {
                return Err(Error::UTruncMismatch(u_trunc, m.u_trunc()));
            }
            if m.rows() != rank || m.cols() != rank {
                return Err(Error::Shape(format!(
                    "expected {rank}x{rank} matrix, got {}x{}",
                    m.rows(),
                    m.cols()
                )));
            }
        }
        Ok(())
    }

    pub fn trivial(ring: RingSpec, family: Family, u_trunc: u32, rank: usize) -> Self {
        let mats = family
            .derivations(&ring)
            .iter()
            .map(|_| SMat::zeros(ring, u_trunc, rank, rank))
            .collect();
        Connection {
            ring,
            family,
            rank,
            u_trunc,
            mats,
        }
    }

    pub fn unit(ring: RingSpec, family: Family) -> Self {
        Self::trivial(ring, family, 0, 1)
    }

    /// Constant matrices, one per derivation.
    pub fn constant(ring: RingSpec, family: Family, rank: usize, mats: &[QMat]) -> Result<Self> {
        let smats = mats.iter().map(|m| SMat::constant(ring, 0, m)).collect();
        Self::with_rank(ring, family, 0, rank, smats)
    }

    pub fn ring(&self) -> RingSpec {
        self.ring
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn u_trunc(&self) -> u32 {
        self.u_trunc
    }

    pub fn derivations(&self) -> Vec<Derivation> {
        self.family.derivations(&self.ring)
    }

    pub fn mats(&self) -> &[SMat] {
        &self.mats
    }

    pub fn mat(&self, theta: Derivation) -> Option<&SMat> {
        self.index_of(theta).map(|i| &self.mats[i])
    }

    pub fn index_of(&self, theta: Derivation) -> Option<usize> {
        self.derivations().iter().position(|&d| d == theta)
    }

    pub fn log_indices(&self) -> Vec<usize> {
        self.derivations()
            .iter()
            .enumerate()
            .filter(|(_, d)| d.is_log())
            .map(|(i, _)| i)
            .collect()
    }

    pub fn same_shape(&self, o: &Connection) -> Result<()> {
        if self.ring != o.ring {
            return Err(Error::RingMismatch(self.ring, o.ring));
        }
        if self.family != o.family {
            return Err(Error::Usage(format!(
                "family mismatch: {} vs {}",
                self.family, o.family
            )));
        }
        if self.u_trunc != o.u_trunc {
            return Err(Error::UTruncMismatch(self.u_trunc, o.u_trunc));
        }
        Ok(())
    }

    /// Accuracy of `θ(F)` for data known through the truncation bounds.
    pub fn accuracy(&self, theta: Derivation) -> Accuracy {
        let mut a = Accuracy {
            x: self.ring.trunc as i64,
            u: self.u_trunc as i64,
        };
        match theta {
            Derivation::Partial(_) => a.x -= 1,
            Derivation::Log(i) if i == self.ring.r && self.family == Family::UExtended => a.u -= 1,
            Derivation::Log(_) => {}
        }
        a
    }

    /// Accuracy of results involving all derivations.
    pub fn joint_accuracy(&self) -> Accuracy {
        self.derivations().iter().fold(
            Accuracy {
                x: self.ring.trunc as i64,
                u: self.u_trunc as i64,
            },
            |acc, &d| acc.min(self.accuracy(d)),
        )
    }

    /// `∇(θ_idx) v = θ(v) + M v`.
    pub fn apply(&self, idx: usize, v: &[Series]) -> Vec<Series> {
        let theta = self.derivations()[idx];
        let mv = self.mats[idx].mul_vec(v);
        v.iter()
            .zip(mv)
            .map(|(x, m)| theta.apply(x).add(&m))
            .collect()
    }

    /// Change of basis `e' = e G`: `M' = G^{-1} (M G + θ G)`.
    pub fn gauge(&self, g: &SMat) -> Result<Connection> {
        if g.ring() != self.ring {
            return Err(Error::RingMismatch(self.ring, g.ring()));
        }
        if g.rows() != self.rank || g.cols() != self.rank {
            return Err(Error::Shape("gauge matrix has wrong size".into()));
        }
        let g = if g.u_trunc() == self.u_trunc {
            g.clone()
        } else {
            g.map_monomials(self.ring, self.u_trunc, |k, j| Some((k.clone(), j)))
        };
        let ginv = g
            .inverse()
            .ok_or_else(|| Error::Usage("gauge matrix has singular constant term".into()))?;
        let mats = self
            .derivations()
            .iter()
            .zip(&self.mats)
            .map(|(&theta, m)| ginv.mul(&m.mul(&g).add(&g.derive(theta))))
            .collect();
        Ok(Connection {
            mats,
            ..self.clone()
        })
    }

    pub fn residues(&self) -> ResidueSet {
        let derivs = self.derivations();
        let (derivations, mats) = self
            .log_indices()
            .into_iter()
            .map(|i| (derivs[i], self.mats[i].constant_term()))
            .unzip();
        ResidueSet { derivations, mats }
    }

    /// Curvature of every pair of basis derivations `i < j`:
    /// `[∇_j, ∇_i] = θ_j(M_i) - θ_i(M_j) + [M_j, M_i]`, compared up to the
    /// accuracy of the pair.
    pub fn check_integrability(&self) -> IntegrabilityReport {
        let derivs = self.derivations();
        let mut failures = Vec::new();
        for i in 0..derivs.len() {
            for j in i + 1..derivs.len() {
                let acc = self.accuracy(derivs[i]).min(self.accuracy(derivs[j]));
                let (mi, mj) = (&self.mats[i], &self.mats[j]);
                let res = mi
                    .derive(derivs[j])
                    .sub(&mj.derive(derivs[i]))
                    .add(&mj.commutator(mi))
                    .truncated(acc.x, acc.u);
                if !res.is_zero() {
                    failures.push(PairResidual {
                        first: derivs[i],
                        second: derivs[j],
                        residual: res,
                    });
                }
            }
        }
        IntegrabilityReport { failures }
    }

    pub fn require_integrable(&self) -> Result<()> {
        let rep = self.check_integrability();
        match rep.failures.first() {
            None => Ok(()),
            Some(f) => Err(Error::NotIntegrable(format!(
                "[{}, {}] has residual {}",
                f.second, f.first, f.residual
            ))),
        }
    }

    /// Nilpotence of the residues. For u-extended connections the residue
    /// along `Log(r)` acts on each slice `Q[u]_{<=T}^s` as `H(u) + d/du`,
    /// and that operator is tested.
    pub fn check_nilpotent_residues(&self) -> Result<NilpotenceReport> {
        self.require_integrable()
            .map_err(|e| Error::Usage(format!("residue check needs an integrable connection: {e}")))?;
        let derivs = self.derivations();
        let logs = self.log_indices();
        let ops: Vec<QMat> = logs.iter().map(|&i| self.residue_operator(i)).collect();
        for (&i, op) in logs.iter().zip(&ops) {
            if !op.is_nilpotent() {
                return Ok(NilpotenceReport {
                    nilpotent: false,
                    witness: Some(Witness {
                        label: derivs[i].to_string(),
                        matrix: op.clone(),
                    }),
                });
            }
        }
        if ops.len() > 1 {
            let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
            for _ in 0..8 {
                let coeffs: Vec<i64> = ops.iter().map(|_| rng.gen_range(-5..=5)).collect();
                let combo = ops
                    .iter()
                    .zip(&coeffs)
                    .fold(QMat::zeros(ops[0].rows(), ops[0].cols()), |acc, (m, &c)| {
                        acc.add(&m.scale(&Q::from_integer(c.into())))
                    });
                if !combo.is_nilpotent() {
                    let label = logs
                        .iter()
                        .zip(&coeffs)
                        .map(|(&i, c)| format!("{c}*{}", derivs[i]))
                        .collect::<Vec<_>>()
                        .join(" + ");
                    return Ok(NilpotenceReport {
                        nilpotent: false,
                        witness: Some(Witness {
                            label,
                            matrix: combo,
                        }),
                    });
                }
            }
        }
        Ok(NilpotenceReport {
            nilpotent: true,
            witness: None,
        })
    }

    pub fn require_nr(&self) -> Result<()> {
        let rep = self.check_nilpotent_residues()?;
        match rep.witness {
            None => Ok(()),
            Some(w) => Err(Error::NotNilpotent(format!(
                "residue {} = {} is not nilpotent",
                w.label, w.matrix
            ))),
        }
    }

    fn residue_operator(&self, idx: usize) -> QMat {
        let m = &self.mats[idx];
        if self.family != Family::UExtended {
            return m.constant_term();
        }
        let s = self.rank;
        let t = self.u_trunc as usize;
        let zero = MultiIndex::zero(self.ring.n);
        let differentiates_u = self.derivations()[idx] == Derivation::Log(self.ring.r);
        let mut op = QMat::zeros(s * (t + 1), s * (t + 1));
        for j in 0..=t {
            for jj in 0..=t - j {
                let h = m.coefficient(&zero, jj as u32);
                op.set_block((j + jj) * s, j * s, &h);
            }
            if differentiates_u && j > 0 {
                let d = QMat::identity(s).scale(&Q::from_integer((j as i64).into()));
                op.set_block((j - 1) * s, j * s, &d);
            }
        }
        op
    }

    /// `∇ = ∇_1 ⊗ 1 + 1 ⊗ ∇_2`, basis `e_i ⊗ f_l` at index `i * rank2 + l`.
    pub fn tensor(&self, o: &Connection) -> Result<Connection> {
        self.same_shape(o)?;
        let mats = self
            .mats
            .iter()
            .zip(&o.mats)
            .map(|(a, b)| SMat::kron_sum(a, b))
            .collect();
        Ok(Connection {
            rank: self.rank * o.rank,
            mats,
            ..self.clone()
        })
    }

    pub fn dual(&self) -> Connection {
        Connection {
            mats: self.mats.iter().map(|m| m.transpose().neg()).collect(),
            ..self.clone()
        }
    }

    pub fn direct_sum(&self, o: &Connection) -> Result<Connection> {
        self.same_shape(o)?;
        let mats = self
            .mats
            .iter()
            .zip(&o.mats)
            .map(|(a, b)| SMat::block_diag(a, b))
            .collect();
        Ok(Connection {
            rank: self.rank + o.rank,
            mats,
            ..self.clone()
        })
    }

    /// Forgets the `Log(r)` action.
    pub fn restrict(&self) -> Result<Connection> {
        if self.family != Family::Absolute {
            return Err(Error::Usage(format!("restrict needs an absolute connection, got {}", self.family)));
        }
        let r = self.ring.r;
        let mats = self
            .derivations()
            .iter()
            .zip(&self.mats)
            .filter(|(d, _)| **d != Derivation::Log(r))
            .map(|(_, m)| m.clone())
            .collect();
        Ok(Connection {
            family: Family::Relative,
            mats,
            ..self.clone()
        })
    }

    /// `E -> E[u]` with `u`-degree bound `u_trunc`.
    pub fn extend_u(&self, u_trunc: u32) -> Result<Connection> {
        if self.family != Family::Absolute {
            return Err(Error::Usage(format!("extend_u needs an absolute connection, got {}", self.family)));
        }
        let mats = self
            .mats
            .iter()
            .map(|m| m.map_monomials(self.ring, u_trunc, |k, j| Some((k.clone(), j))))
            .collect();
        Ok(Connection {
            family: Family::UExtended,
            u_trunc,
            mats,
            ..self.clone()
        })
    }

    /// Evaluates at `u = 0` and forgets `Log(r)`.
    pub fn set_u_zero(&self) -> Result<Connection> {
        if self.family != Family::UExtended {
            return Err(Error::Usage(format!("set_u_zero needs a u-extended connection, got {}", self.family)));
        }
        let r = self.ring.r;
        let mats = self
            .derivations()
            .iter()
            .zip(&self.mats)
            .filter(|(d, _)| **d != Derivation::Log(r))
            .map(|(_, m)| m.map_monomials(self.ring, 0, |k, j| (j == 0).then(|| (k.clone(), 0))))
            .collect();
        Ok(Connection {
            family: Family::Relative,
            u_trunc: 0,
            mats,
            ..self.clone()
        })
    }

    /// Same data with every matrix cut to the given truncation.
    pub fn retruncate(&self, trunc: u32, u_trunc: Option<u32>) -> Result<Connection> {
        let ring = self.ring.with_trunc(trunc);
        let ut = match (self.family, u_trunc) {
            (Family::UExtended, Some(t)) => t,
            _ => self.u_trunc,
        };
        let mats = self
            .mats
            .iter()
            .map(|m| m.map_monomials(ring, ut, |k, j| Some((k.clone(), j))))
            .collect();
        Ok(Connection {
            ring,
            u_trunc: ut,
            mats,
            ..self.clone()
        })
    }
}

/// `f*` from the log point: `M_{Log(r)} = N`, every other matrix zero.
pub fn pullback_from_log_point(l: &LinearData, ring: RingSpec) -> Result<Connection> {
    if l.nilpotents.len() != 1 {
        return Err(Error::Usage(format!(
            "pullback needs exactly one nilpotent, got {}",
            l.nilpotents.len()
        )));
    }
    let n = &l.nilpotents[0];
    if !n.is_nilpotent() {
        return Err(Error::NotNilpotent(format!("{n}")));
    }
    let mats: Vec<QMat> = Family::Absolute
        .derivations(&ring)
        .iter()
        .map(|&d| {
            if d == Derivation::Log(ring.r) {
                n.clone()
            } else {
                QMat::zeros(l.dim, l.dim)
            }
        })
        .collect();
    Connection::constant(ring, Family::Absolute, l.dim, &mats)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairResidual {
    pub first: Derivation,
    pub second: Derivation,
    pub residual: SMat,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntegrabilityReport {
    pub failures: Vec<PairResidual>,
}

impl IntegrabilityReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResidueSet {
    pub derivations: Vec<Derivation>,
    pub mats: Vec<QMat>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub label: String,
    pub matrix: QMat,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NilpotenceReport {
    pub nilpotent: bool,
    pub witness: Option<Witness>,
}

/// A vector space with an ordered list of commuting nilpotent operators.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearData {
    pub dim: usize,
    pub nilpotents: Vec<QMat>,
}

impl LinearData {
    pub fn new(dim: usize, nilpotents: Vec<QMat>) -> Result<Self> {
        let l = LinearData { dim, nilpotents };
        l.validate()?;
        Ok(l)
    }

    pub fn zero(dim: usize, count: usize) -> Self {
        LinearData {
            dim,
            nilpotents: vec![QMat::zeros(dim, dim); count],
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (i, n) in self.nilpotents.iter().enumerate() {
            if n.rows() != self.dim || n.cols() != self.dim {
                return Err(Error::Shape(format!("operator {i} is not {0}x{0}", self.dim)));
            }
            if !n.is_nilpotent() {
                return Err(Error::NotNilpotent(format!("operator {i} = {n}")));
            }
        }
        for i in 0..self.nilpotents.len() {
            for j in i + 1..self.nilpotents.len() {
                if !self.nilpotents[i].commutator(&self.nilpotents[j]).is_zero() {
                    return Err(Error::Usage(format!("operators {i} and {j} do not commute")));
                }
            }
        }
        Ok(())
    }

    /// Tensor product: Kronecker sums.
    pub fn tensor(&self, o: &LinearData) -> LinearData {
        LinearData {
            dim: self.dim * o.dim,
            nilpotents: self
                .nilpotents
                .iter()
                .zip(&o.nilpotents)
                .map(|(a, b)| QMat::kron_sum(a, b))
                .collect(),
        }
    }

    /// Conjugate by `P`: `N -> P^{-1} N P`.
    pub fn conjugate(&self, p: &QMat) -> Option<LinearData> {
        let pinv = p.inverse()?;
        Some(LinearData {
            dim: self.dim,
            nilpotents: self.nilpotents.iter().map(|n| pinv.mul(n).mul(p)).collect(),
        })
    }
}

/// Unit vector `e_i` of length `s` over the ring.
pub fn basis_vector(ring: RingSpec, u_trunc: u32, s: usize, i: usize) -> Vec<Series> {
    (0..s)
        .map(|l| {
            if l == i {
                Series::constant_u(ring, u_trunc, Q::one())
            } else {
                Series::zero_u(ring, u_trunc)
            }
        })
        .collect()
}

pub fn is_zero_vector(v: &[Series]) -> bool {
    v.iter().all(|s| s.is_zero())
}

/// Constant term of a vector of series.
pub fn vector_constant_term(v: &[Series]) -> Vec<Q> {
    v.iter().map(Series::constant_term).collect()
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    fn mono(ring: RingSpec, k: &[u32]) -> Series {
        Series::monomial(ring, MultiIndex(k.to_vec()), q(1)).unwrap()
    }

    fn rank1(ring: RingSpec, family: Family, entries: Vec<Series>) -> Connection {
        let mats = entries
            .into_iter()
            .map(|s| SMat::from_entries(ring, 0, 1, 1, vec![s]))
            .collect();
        Connection::new(ring, family, 0, mats).unwrap()
    }

    #[test]
    fn integrability_examples() {
        let r22 = RingSpec::new(2, 2, 4).unwrap();
        assert!(Connection::unit(r22, Family::Relative).check_integrability().passed());
        assert!(rank1(r22, Family::Relative, vec![mono(r22, &[1, 0])])
            .check_integrability()
            .passed());
        let r33 = RingSpec::new(3, 3, 4).unwrap();
        let c = rank1(r33, Family::Relative, vec![mono(r33, &[0, 1, 0]), Series::zero(r33)]);
        let rep = c.check_integrability();
        assert_eq!(rep.failures.len(), 1);
        assert_eq!(rep.failures[0].residual.get(0, 0), &mono(r33, &[0, 1, 0]));
    }

    #[test]
    fn twist_has_residue_one() {
        let ring = RingSpec::new(2, 2, 4).unwrap();
        let twist = rank1(ring, Family::Relative, vec![Series::one(ring)]);
        assert_eq!(twist.residues().mats, vec![QMat::identity(1)]);
        let rep = twist.check_nilpotent_residues().unwrap();
        assert!(!rep.nilpotent);
        assert_eq!(rep.witness.unwrap().matrix, QMat::identity(1));
    }

    #[test]
    fn nilpotence_needs_integrability() {
        let r33 = RingSpec::new(3, 3, 4).unwrap();
        let c = rank1(r33, Family::Relative, vec![mono(r33, &[0, 1, 0]), Series::zero(r33)]);
        assert!(matches!(c.check_nilpotent_residues(), Err(Error::Usage(_))));
    }

    #[test]
    fn u_extension_differentiates_u() {
        let ring = RingSpec::new(2, 2, 3).unwrap();
        let e = Connection::unit(ring, Family::Absolute).extend_u(2).unwrap();
        let u = vec![Series::monomial_u(ring, 2, MultiIndex::zero(2), 1, q(1)).unwrap()];
        let idx = e.index_of(Derivation::Log(2)).unwrap();
        assert_eq!(e.apply(idx, &u), vec![Series::constant_u(ring, 2, q(1))]);
        assert!(e.check_nilpotent_residues().unwrap().nilpotent);
    }

    #[test]
    fn pullback_restricts_to_trivial() {
        let ring = RingSpec::new(2, 2, 3).unwrap();
        let l = LinearData::new(2, vec![QMat::from_i64(&[&[0, 1], &[0, 0]])]).unwrap();
        let c = pullback_from_log_point(&l, ring).unwrap();
        assert!(c.check_integrability().passed());
        assert!(c.check_nilpotent_residues().unwrap().nilpotent);
        assert_eq!(c.restrict().unwrap(), Connection::trivial(ring, Family::Relative, 0, 2));
    }
}
