use crate::connection::{Connection, Family, LinearData};
use crate::error::{Error, Result};
use crate::normal_form::reduce::reduce_model;
use crate::qmat::QMat;
use crate::smat::SMat;

use super::complex::{cohomology_basis, de_rham_cohomology, koszul_dense, linear_data_cohomology};

/// `Ext^1(C1, C2)` with one extension per basis class.
#[derive(Clone, Debug)]
pub struct Ext1 {
    pub dim: usize,
    /// Per class, one `rank(C2) × rank(C1)` block per log derivation.
    pub cocycles: Vec<Vec<QMat>>,
    /// `[[M2, A], [0, M1]]` for each class, in the given frames of `C1`
    /// and `C2`.
    pub extensions: Vec<Connection>,
    /// First cohomology of `dual(C1) ⊗ C2` on the truncated complex.
    pub de_rham_h1: usize,
}

/// `A_{l,i}` for the coordinate `i * s2 + l` of `dual ⊗`.
fn unvec(v: &[num_rational::BigRational], s1: usize, s2: usize) -> QMat {
    let mut a = QMat::zeros(s2, s1);
    for i in 0..s1 {
        for l in 0..s2 {
            a[(l, i)] = v[i * s2 + l].clone();
        }
    }
    a
}

/// Classes of `Ext^1` on linear data: first Koszul cohomology of
/// `X ↦ N2 X - X N1`, as one block per operator.
pub fn ext1_linear_data(l1: &LinearData, l2: &LinearData) -> Result<Vec<Vec<QMat>>> {
    if l1.nilpotents.len() != l2.nilpotents.len() {
        return Err(Error::Shape("linear data with different operator counts".into()));
    }
    let (s1, s2) = (l1.dim, l2.dim);
    let hom = LinearData {
        dim: s1 * s2,
        nilpotents: l1
            .nilpotents
            .iter()
            .zip(&l2.nilpotents)
            .map(|(a, b)| QMat::kron_sum(&a.transpose().neg(), b))
            .collect(),
    };
    let m = hom.nilpotents.len();
    if m == 0 {
        return Ok(Vec::new());
    }
    let diffs = koszul_dense(&hom.nilpotents, hom.dim);
    let next = diffs.get(1).cloned().unwrap_or_else(|| QMat::zeros(0, m * hom.dim));
    let basis = cohomology_basis(&diffs[0], &next);
    Ok((0..basis.cols())
        .map(|t| {
            let col = basis.column(t);
            (0..m)
                .map(|d| unvec(&col[d * hom.dim..(d + 1) * hom.dim], s1, s2))
                .collect()
        })
        .collect())
}

/// Log point version: `ker` and `coker` of `X ↦ N2 X - X N1`.
pub fn ext1_log_point(l1: &LinearData, l2: &LinearData) -> Result<usize> {
    let hom = LinearData {
        dim: l1.dim * l2.dim,
        nilpotents: l1
            .nilpotents
            .iter()
            .zip(&l2.nilpotents)
            .map(|(a, b)| QMat::kron_sum(&a.transpose().neg(), b))
            .collect(),
    };
    if hom.nilpotents.len() != 1 || l1.nilpotents.len() != l2.nilpotents.len() {
        return Err(Error::Usage("log point data carries exactly one operator".into()));
    }
    Ok(linear_data_cohomology(&hom)[1])
}

/// Extensions `0 -> C2 -> E -> C1 -> 0` up to isomorphism, computed on linear
/// data and assembled back in the frames of the inputs.
pub fn ext1(c1: &Connection, c2: &Connection) -> Result<Ext1> {
    c1.same_shape(c2)?;
    if c1.family() == Family::UExtended {
        return Err(Error::Usage("ext1 handles relative and absolute connections".into()));
    }
    c1.require_nr()?;
    c2.require_nr()?;
    let ring = c1.ring();
    let (r1, r2) = (reduce_model(c1)?, reduce_model(c2)?);
    let l1 = r1.model.linear_data().expect("u-free");
    let l2 = r2.model.linear_data().expect("u-free");
    let cocycles = ext1_linear_data(&l1, &l2)?;
    let g1_inv = r1.transform.matrix().inverse().expect("gauge transform");
    let g2 = r2.transform.matrix();
    let (s1, s2) = (c1.rank(), c2.rank());
    let mut extensions = Vec::new();
    for class in &cocycles {
        let mut blocks = class.iter();
        let mats = c1
            .derivations()
            .iter()
            .enumerate()
            .map(|(d, theta)| {
                let mut e = SMat::zeros(ring, 0, s1 + s2, s1 + s2);
                e.set_block(0, 0, &c2.mats()[d]);
                e.set_block(s2, s2, &c1.mats()[d]);
                if theta.is_log() {
                    let a = SMat::constant(ring, 0, blocks.next().expect("block per log"));
                    e.set_block(0, s2, &g2.mul(&a).mul(&g1_inv));
                }
                e
            })
            .collect();
        let ext = Connection::with_rank(ring, c1.family(), 0, s1 + s2, mats)?;
        ext.require_integrable()?;
        ext.require_nr()?;
        extensions.push(ext);
    }
    let de_rham_h1 = de_rham_cohomology(&c1.dual().tensor(c2)?)?.dim(1);
    Ok(Ext1 {
        dim: cocycles.len(),
        cocycles,
        extensions,
        de_rham_h1,
    })
}
