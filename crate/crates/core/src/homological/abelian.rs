use crate::connection::{Connection, Family, LinearData};
use crate::error::{Error, Result};
use crate::normal_form::reduce::{expand_model, reduce_model, ReducedModel};
use crate::qmat::QMat;
use crate::smat::SMat;

use super::morphism::{check_horizontal, HorizontalMorphism};

/// Kernel and cokernel objects with their structure maps.
#[derive(Clone, Debug)]
pub struct KernelCokernel {
    pub kernel: Connection,
    pub cokernel: Connection,
    /// `kernel -> source`.
    pub inclusion: HorizontalMorphism,
    /// `target -> cokernel`.
    pub projection: HorizontalMorphism,
    /// The constant map between the linear data of source and target.
    pub intertwiner: QMat,
}

fn require_nr(c: &Connection, end: &str) -> Result<()> {
    c.require_nr().map_err(|e| match e {
        Error::NotNilpotent(msg) => Error::NotNilpotent(format!(
            "{end}: {msg}; outside nilpotent residues kernels and cokernels need not be free"
        )),
        other => other,
    })
}

/// Kernel and cokernel computed on linear data: both ends are reduced to
/// constant form, where the morphism becomes a constant intertwiner.
pub fn kernel_cokernel(phi: &HorizontalMorphism) -> Result<KernelCokernel> {
    let (src, tgt) = (&phi.source, &phi.target);
    if src.family() == Family::UExtended {
        return Err(Error::Usage("kernel_cokernel handles relative and absolute connections".into()));
    }
    require_nr(src, "source")?;
    require_nr(tgt, "target")?;
    let rep = check_horizontal(phi);
    if let Some((theta, r)) = rep.residuals.iter().find(|(_, r)| !r.is_zero()) {
        return Err(Error::NotHorizontal(format!("residual along {theta}: {r}")));
    }
    let ring = src.ring();
    let rs = reduce_model(src)?;
    let rt = reduce_model(tgt)?;
    let ls = rs.model.linear_data().expect("u-free");
    let lt = rt.model.linear_data().expect("u-free");
    let gs = rs.transform.matrix();
    let gt_inv = rt.transform.matrix().inverse().expect("gauge transform");
    let a_full = gt_inv.mul(&phi.mat).mul(gs);
    let a = a_full.constant_term();
    let acc = src.joint_accuracy();
    if a_full.sub(&SMat::constant(ring, 0, &a)).truncated(acc.x, acc.u).top_degree().is_some() {
        return Err(Error::Consistency("morphism between constant models is not constant".into()));
    }

    let k = a.kernel();
    let kernel_ops: Vec<QMat> = ls
        .nilpotents
        .iter()
        .map(|n| k.solve(&n.mul(&k)).expect("kernel is stable"))
        .collect();
    let image = a.column_basis();
    let basis = image.complete_basis();
    let binv = basis.inverse().expect("completed basis");
    let q = lt.dim - image.cols();
    let proj = binv.block(image.cols(), 0, q, lt.dim);
    let comp = basis.block(0, image.cols(), lt.dim, q);
    let coker_ops: Vec<QMat> = lt.nilpotents.iter().map(|n| proj.mul(n).mul(&comp)).collect();

    let model = |dim: usize, ops: Vec<QMat>| ReducedModel {
        family: src.family(),
        dim,
        u_trunc: 0,
        ops: ops.into_iter().map(|m| vec![m]).collect(),
    };
    let kernel = expand_model(&model(k.cols(), kernel_ops.clone()), ring)?;
    let cokernel = expand_model(&model(q, coker_ops.clone()), ring)?;
    LinearData::new(k.cols(), kernel_ops)?;
    LinearData::new(q, coker_ops)?;

    let inclusion = HorizontalMorphism::new(kernel.clone(), src.clone(), gs.mul(&SMat::constant(ring, 0, &k)))?;
    let projection = HorizontalMorphism::new(tgt.clone(), cokernel.clone(), SMat::constant(ring, 0, &proj).mul(&gt_inv))?;
    for (name, m) in [("inclusion", &inclusion), ("projection", &projection)] {
        if !check_horizontal(m).passed() {
            return Err(Error::Consistency(format!("{name} is not horizontal")));
        }
    }
    Ok(KernelCokernel {
        kernel,
        cokernel,
        inclusion,
        projection,
        intertwiner: a,
    })
}
