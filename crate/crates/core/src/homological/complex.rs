//! Koszul complexes of commuting operators, on truncated modules and on
//! plain vector spaces.

use std::collections::{BTreeMap, HashMap};

use crate::connection::{Connection, Family, LinearData};
use crate::error::{Error, Result};
use crate::normal_form::katz::descend_smooth_unchecked;
use crate::normal_form::reduce::reduce_model;
use crate::qmat::QMat;
use crate::rational::Q;
use crate::series::{Derivation, MultiIndex, Series};
use crate::smat::SMat;
use crate::sparse::SparseMat;

/// Subsets of `0..m` of size `p`, as bitmasks in increasing order.
pub(crate) fn wedge_basis(m: usize, p: usize) -> Vec<u32> {
    (0u32..1 << m).filter(|s| s.count_ones() as usize == p).collect()
}

/// `(-1)^{#{j in set : j < i}}`.
pub(crate) fn wedge_sign(set: u32, i: usize) -> i64 {
    if (set & ((1u32 << i) - 1)).count_ones().is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// Coordinates `x^k u^j e_l` of the truncated module over a set of monomials.
pub(crate) struct TruncatedSpace {
    pub monos: Vec<MultiIndex>,
    index: HashMap<MultiIndex, usize>,
    pub u_trunc: u32,
    pub rank: usize,
}

impl TruncatedSpace {
    pub fn new(monos: Vec<MultiIndex>, u_trunc: u32, rank: usize) -> Self {
        let index = monos.iter().cloned().enumerate().map(|(i, k)| (k, i)).collect();
        TruncatedSpace {
            monos,
            index,
            u_trunc,
            rank,
        }
    }

    pub fn dim(&self) -> usize {
        self.monos.len() * (self.u_trunc as usize + 1) * self.rank
    }

    pub fn idx(&self, m: usize, j: u32, l: usize) -> usize {
        (m * (self.u_trunc as usize + 1) + j as usize) * self.rank + l
    }

    pub fn u_degree(&self, idx: usize) -> u32 {
        ((idx / self.rank) % (self.u_trunc as usize + 1)) as u32
    }

    /// `v ↦ θ(v) + M_θ v`; terms leaving the space are dropped.
    pub fn operator(&self, c: &Connection, d: usize) -> SparseMat {
        let theta = c.derivations()[d];
        let ring = c.ring();
        let on_u = theta == Derivation::Log(ring.r) && c.family() == Family::UExtended;
        let coeffs = c.mats()[d].coefficients();
        let mut a = SparseMat::zeros(self.dim(), self.dim());
        for (m, k) in self.monos.iter().enumerate() {
            let ev = match theta {
                Derivation::Log(_) => theta.log_eigenvalue(&ring, &k.0),
                Derivation::Partial(_) => panic!("truncated Koszul complexes use log derivations only"),
            };
            for j in 0..=self.u_trunc {
                for l in 0..self.rank {
                    let col = self.idx(m, j, l);
                    a.add_to(col, col, Q::from_integer(ev.into()));
                    if on_u && j > 0 {
                        a.add_to(self.idx(m, j - 1, l), col, Q::from_integer(j.into()));
                    }
                    for ((kt, jt), cm) in &coeffs {
                        let jj = j + jt;
                        if jj > self.u_trunc {
                            continue;
                        }
                        let Some(&mm) = self.index.get(&k.add(kt)) else {
                            continue;
                        };
                        for row in 0..self.rank {
                            a.add_to(self.idx(mm, jj, row), col, cm[(row, l)].clone());
                        }
                    }
                }
            }
        }
        a
    }

    pub fn vector(&self, c: &Connection, coords: &[Q]) -> Vec<Series> {
        let ring = c.ring();
        let mut out = vec![Series::zero_u(ring, self.u_trunc); self.rank];
        for (m, k) in self.monos.iter().enumerate() {
            for j in 0..=self.u_trunc {
                for (l, o) in out.iter_mut().enumerate() {
                    o.add_term(k.clone(), j, coords[self.idx(m, j, l)].clone());
                }
            }
        }
        out
    }
}

/// Koszul complex `Λ^p ⊗ V` of commuting operators on `V`, optionally cut
/// to the quotient spanned by basis elements with `keep(p, index)`.
pub(crate) struct Koszul {
    pub cochain_dims: Vec<usize>,
    pub diffs: Vec<SparseMat>,
}

impl Koszul {
    pub fn build(ops: &[SparseMat], dim: usize, keep: impl Fn(usize, usize) -> bool) -> Self {
        let m = ops.len();
        let bases: Vec<Vec<u32>> = (0..=m).map(|p| wedge_basis(m, p)).collect();
        let kept: Vec<Vec<Option<usize>>> = bases
            .iter()
            .enumerate()
            .map(|(p, b)| {
                let mut next = 0;
                (0..b.len() * dim)
                    .map(|i| {
                        keep(p, i % dim).then(|| {
                            next += 1;
                            next - 1
                        })
                    })
                    .collect()
            })
            .collect();
        let cochain_dims: Vec<usize> = kept.iter().map(|k| k.iter().flatten().count()).collect();
        let mut diffs = Vec::with_capacity(m);
        for p in 0..m {
            let pos_next: HashMap<u32, usize> = bases[p + 1].iter().enumerate().map(|(i, s)| (*s, i)).collect();
            let mut d = SparseMat::zeros(cochain_dims[p + 1], cochain_dims[p]);
            for (jb, &set) in bases[p].iter().enumerate() {
                for (i, op) in ops.iter().enumerate() {
                    if set & (1 << i) != 0 {
                        continue;
                    }
                    let target = set | (1 << i);
                    let ib = pos_next[&target];
                    let sign = Q::from_integer(wedge_sign(target, i).into());
                    for row in 0..dim {
                        let Some(r) = kept[p + 1][ib * dim + row] else {
                            continue;
                        };
                        for (col, v) in op.row(row) {
                            if let Some(cidx) = kept[p][jb * dim + col] {
                                d.add_to(r, cidx, &sign * v);
                            }
                        }
                    }
                }
            }
            diffs.push(d);
        }
        Koszul { cochain_dims, diffs }
    }

    pub fn cohomology_dims(&self) -> Vec<usize> {
        let ranks: Vec<usize> = self.diffs.iter().map(SparseMat::rank).collect();
        (0..self.cochain_dims.len())
            .map(|p| {
                let out = ranks.get(p).copied().unwrap_or(0);
                let inc = if p == 0 { 0 } else { ranks[p - 1] };
                self.cochain_dims[p] - out - inc
            })
            .collect()
    }
}

/// Dense Koszul differentials of commuting operators on `Q^dim`.
pub(crate) fn koszul_dense(ops: &[QMat], dim: usize) -> Vec<QMat> {
    let sparse: Vec<SparseMat> = ops
        .iter()
        .map(|m| {
            let mut s = SparseMat::zeros(dim, dim);
            for i in 0..dim {
                for j in 0..dim {
                    s.add_to(i, j, m[(i, j)].clone());
                }
            }
            s
        })
        .collect();
    Koszul::build(&sparse, dim, |_, _| true)
        .diffs
        .iter()
        .map(SparseMat::to_dense)
        .collect()
}

/// Columns spanning a complement of `im(prev)` inside `ker(next)`.
pub(crate) fn cohomology_basis(prev: &QMat, next: &QMat) -> QMat {
    let z = next.kernel();
    let stacked = prev.hstack(&z);
    let (_, pivots) = stacked.rref();
    let cols: Vec<Vec<Q>> = pivots
        .iter()
        .filter(|&&p| p >= prev.cols())
        .map(|&p| stacked.column(p))
        .collect();
    QMat::from_columns(z.rows(), &cols)
}

/// Cohomology of the Koszul complex of the operators of `l`. For the log
/// point (one operator `N`) this is `ker N`, `coker N`.
pub fn linear_data_cohomology(l: &LinearData) -> Vec<usize> {
    let diffs = koszul_dense(&l.nilpotents, l.dim);
    let m = l.nilpotents.len();
    let ranks: Vec<usize> = diffs.iter().map(QMat::rank).collect();
    (0..=m)
        .map(|p| {
            let dim = wedge_basis(m, p).len() * l.dim;
            dim - ranks.get(p).copied().unwrap_or(0) - if p == 0 { 0 } else { ranks[p - 1] }
        })
        .collect()
}

/// Dimensions of the truncated de Rham cohomology.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CohomologyReport {
    pub trunc: u32,
    pub u_trunc: u32,
    pub cochain_dims: Vec<usize>,
    pub dims: Vec<usize>,
    /// Per degree, dimension by weighted monomial degree, when the matrices
    /// are constant and the complex splits.
    pub graded: Option<Vec<BTreeMap<u32, usize>>>,
    /// Dimensions one truncation lower.
    pub previous: Option<Vec<usize>>,
    /// Per degree: unchanged between the two truncations.
    pub stabilized: Vec<bool>,
}

impl CohomologyReport {
    pub fn dim(&self, p: usize) -> usize {
        self.dims.get(p).copied().unwrap_or(0)
    }

    pub fn euler_characteristic(&self) -> i64 {
        alternating(&self.dims)
    }

    /// The alternating sum of cohomology equals that of the cochain spaces.
    pub fn euler_consistent(&self) -> bool {
        alternating(&self.dims) == alternating(&self.cochain_dims)
    }
}

fn alternating(v: &[usize]) -> i64 {
    v.iter()
        .enumerate()
        .map(|(p, &d)| if p % 2 == 0 { d as i64 } else { -(d as i64) })
        .sum()
}

pub(crate) struct RawCohomology {
    pub cochain_dims: Vec<usize>,
    pub dims: Vec<usize>,
    pub graded: Option<Vec<BTreeMap<u32, usize>>>,
}

fn is_x_constant(c: &Connection) -> bool {
    c.mats()
        .iter()
        .all(|m| m.entries().iter().all(|e| e.terms().all(|(k, _, _)| k.is_zero())))
}

/// Koszul cohomology over a crossing ring, cut by `keep(p, u_degree)`.
pub(crate) fn truncated_cohomology(c: &Connection, keep: &dyn Fn(usize, u32) -> bool) -> RawCohomology {
    let ring = c.ring();
    let m = c.derivations().len();
    let run = |monos: Vec<MultiIndex>| {
        let space = TruncatedSpace::new(monos, c.u_trunc(), c.rank());
        let ops: Vec<SparseMat> = (0..m).map(|d| space.operator(c, d)).collect();
        let k = Koszul::build(&ops, space.dim(), |p, i| keep(p, space.u_degree(i)));
        let dims = k.cohomology_dims();
        (k.cochain_dims, dims)
    };
    if is_x_constant(c) {
        let mut cochain_dims = vec![0; m + 1];
        let mut dims = vec![0; m + 1];
        let mut graded = vec![BTreeMap::new(); m + 1];
        for k in ring.monomials() {
            let deg = ring.weighted_degree(&k.0);
            let (cd, hd) = run(vec![k]);
            for p in 0..=m {
                cochain_dims[p] += cd[p];
                dims[p] += hd[p];
                if hd[p] > 0 {
                    *graded[p].entry(deg).or_insert(0) += hd[p];
                }
            }
        }
        RawCohomology {
            cochain_dims,
            dims,
            graded: Some(graded),
        }
    } else {
        let (cochain_dims, dims) = run(ring.monomials());
        RawCohomology {
            cochain_dims,
            dims,
            graded: None,
        }
    }
}

/// Connection over the crossing ring with the same cohomology: smooth
/// coordinates are removed on the Katz-projected frame.
pub(crate) fn crossing_model(c: &Connection) -> Result<Connection> {
    let ring = c.ring();
    if ring.n > ring.r {
        Ok(descend_smooth_unchecked(c)?.connection)
    } else {
        Ok(c.clone())
    }
}

/// Cohomology of the log de Rham complex of `c` truncated at degree `N`,
/// with a comparison against truncation `N - 1`.
pub fn de_rham_cohomology(c: &Connection) -> Result<CohomologyReport> {
    if c.family() == Family::UExtended {
        return Err(Error::Usage(
            "u-extended complexes are truncated along the bicomplex; use u_bicomplex_cohomology".into(),
        ));
    }
    c.require_integrable()?;
    let base = crossing_model(c)?;
    let trunc = base.ring().trunc;
    let all = |_: usize, _: u32| true;
    let now = truncated_cohomology(&base, &all);
    let previous = if trunc > 0 {
        let lower = base.retruncate(trunc - 1, None)?;
        Some(truncated_cohomology(&lower, &all).dims)
    } else {
        None
    };
    let stabilized = (0..now.dims.len())
        .map(|p| previous.as_ref().is_some_and(|prev| prev[p] == now.dims[p]))
        .collect();
    Ok(CohomologyReport {
        trunc,
        u_trunc: 0,
        cochain_dims: now.cochain_dims,
        dims: now.dims,
        graded: now.graded,
        previous,
        stabilized,
    })
}

/// Basis of horizontal sections.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sections {
    pub dim: usize,
    pub basis: Vec<Vec<Series>>,
    /// Computed through linear data (exact for the untruncated module) rather
    /// than on the truncated space.
    pub via_linear_data: bool,
}

/// Horizontal sections. Relative and absolute connections with nilpotent
/// residues go through their linear data; otherwise the joint kernel of all
/// operators on the truncated space is returned.
pub fn horizontal_sections(c: &Connection) -> Result<Sections> {
    c.require_integrable()?;
    let nr = c.check_nilpotent_residues()?.nilpotent;
    if nr && c.family() != Family::UExtended {
        let red = reduce_model(c)?;
        let l = red.model.linear_data().expect("u-free model");
        let k = joint_kernel(&l.nilpotents, l.dim);
        let g = red.transform.matrix();
        let basis = (0..k.cols())
            .map(|t| {
                let v = SMat::constant(c.ring(), c.u_trunc(), &QMat::from_columns(l.dim, &[k.column(t)]));
                let col = g.mul(&v);
                (0..l.dim).map(|i| col.get(i, 0).clone()).collect()
            })
            .collect();
        return Ok(Sections {
            dim: k.cols(),
            basis,
            via_linear_data: true,
        });
    }
    let ring = c.ring();
    let (base, frame) = if ring.n > ring.r {
        let sd = descend_smooth_unchecked(c)?;
        (sd.connection, Some(sd.transform.matrix().clone()))
    } else {
        (c.clone(), None)
    };
    let space = TruncatedSpace::new(base.ring().monomials(), base.u_trunc(), base.rank());
    let stacked = (0..base.derivations().len())
        .map(|d| space.operator(&base, d).to_dense())
        .reduce(|a, b| a.vstack(&b))
        .unwrap_or_else(|| QMat::zeros(0, space.dim()));
    let k = stacked.kernel();
    let basis = (0..k.cols())
        .map(|t| {
            let v = space.vector(&base, &k.column(t));
            match &frame {
                None => v,
                Some(f) => {
                    let padded: Vec<Series> = v
                        .iter()
                        .map(|s| {
                            s.map_monomials(ring, c.u_trunc(), |k, j| {
                                let mut k2 = k.0.clone();
                                k2.resize(ring.n, 0);
                                Some((MultiIndex(k2), j))
                            })
                        })
                        .collect();
                    f.mul_vec(&padded)
                }
            }
        })
        .collect();
    Ok(Sections {
        dim: k.cols(),
        basis,
        via_linear_data: false,
    })
}

/// Common kernel of a family of square matrices, as columns.
pub(crate) fn joint_kernel(ops: &[QMat], dim: usize) -> QMat {
    ops.iter()
        .cloned()
        .reduce(|a, b| a.vstack(&b))
        .map(|m| m.kernel())
        .unwrap_or_else(|| QMat::identity(dim))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::normal_form::expand_from_linear_data;
    use crate::series::RingSpec;

    #[test]
    fn log_point_jordan_block() {
        let l = LinearData::new(2, vec![QMat::from_i64(&[&[0, 1], &[0, 0]])]).unwrap();
        assert_eq!(linear_data_cohomology(&l), vec![1, 1]);
    }

    #[test]
    fn unit_over_crossing_pair() {
        let ring = RingSpec::new(2, 2, 4).unwrap();
        let rep = de_rham_cohomology(&Connection::unit(ring, Family::Relative)).unwrap();
        assert_eq!(rep.dims, vec![1, 1]);
        assert_eq!(rep.graded.as_ref().unwrap()[0], BTreeMap::from([(0, 1)]));
        assert!(rep.stabilized.iter().all(|&b| b));
        assert!(rep.euler_consistent());
    }

    #[test]
    fn sections_of_jordan_block_and_unit() {
        let ring = RingSpec::new(2, 2, 3).unwrap();
        assert_eq!(horizontal_sections(&Connection::unit(ring, Family::Relative)).unwrap().dim, 1);
        let l = LinearData::new(2, vec![QMat::from_i64(&[&[0, 1], &[0, 0]])]).unwrap();
        let c = expand_from_linear_data(&l, ring).unwrap();
        assert_eq!(horizontal_sections(&c).unwrap().dim, 1);
        let twist = Connection::new(ring, Family::Relative, 0, vec![SMat::identity(ring, 0, 1)]).unwrap();
        let s = horizontal_sections(&twist).unwrap();
        // y e is flat: (x∂x - y∂y + 1) y = 0.
        assert!(!s.via_linear_data);
        assert_eq!(s.dim, 1);
        assert_eq!(s.basis[0][0].coeff(&MultiIndex(vec![0, 1]), 0), Q::from_integer(1.into()));
    }
}
