use std::collections::BTreeMap;

use crate::connection::{Connection, Family, LinearData};
use crate::error::{Error, Result};
use crate::qmat::QMat;
use crate::series::{Derivation, MultiIndex, RingSpec};
use crate::smat::SMat;

use super::crossing::{descend_crossing_step, from_balanced};
use super::gauge::GaugeTransform;
use super::katz::descend_smooth_unchecked;

/// Constant normal form of a connection: one operator per log derivation,
/// each a polynomial in `u` (`ops[i][j]` is the `u^j` coefficient).
/// Relative and absolute inputs give `u`-free operators, i.e. linear data.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReducedModel {
    pub family: Family,
    pub dim: usize,
    pub u_trunc: u32,
    pub ops: Vec<Vec<QMat>>,
}

impl ReducedModel {
    pub fn from_linear_data(family: Family, l: &LinearData) -> Self {
        ReducedModel {
            family,
            dim: l.dim,
            u_trunc: 0,
            ops: l.nilpotents.iter().map(|n| vec![n.clone()]).collect(),
        }
    }

    pub fn is_u_free(&self) -> bool {
        self.ops.iter().all(|op| op.iter().skip(1).all(QMat::is_zero))
    }

    pub fn linear_data(&self) -> Option<LinearData> {
        self.is_u_free().then(|| LinearData {
            dim: self.dim,
            nilpotents: self.ops.iter().map(|op| op[0].clone()).collect(),
        })
    }

    fn conjugate(&self, g0: &QMat, g0inv: &QMat) -> ReducedModel {
        ReducedModel {
            ops: self
                .ops
                .iter()
                .map(|op| op.iter().map(|m| g0.mul(m).mul(g0inv)).collect())
                .collect(),
            ..self.clone()
        }
    }
}

/// Output of [`reduce_model`].
#[derive(Clone, Debug)]
pub struct Reduction {
    pub model: ReducedModel,
    /// Carries the input to `expand_model(model, input ring)`.
    pub transform: GaugeTransform,
    /// Set when some gauge step still had terms at the truncation degree.
    pub unstabilized_at: Option<u32>,
}

struct Reduced {
    gauge: SMat,
    ops: Vec<SMat>,
    endos: Vec<SMat>,
    unstabilized_at: Option<u32>,
}

fn reduce_crossing(c: &Connection, endos: Vec<SMat>) -> Result<Reduced> {
    let ring = c.ring();
    if ring.n == 1 {
        return Ok(Reduced {
            gauge: SMat::identity(ring, c.u_trunc(), c.rank()),
            ops: c.mats().to_vec(),
            endos,
            unstabilized_at: None,
        });
    }
    let ut = c.u_trunc();
    let step = descend_crossing_step(c, &endos)?;
    let mut carried = vec![step.nmat];
    carried.extend(step.endos);
    let inner = reduce_crossing(&step.connection, carried)?;
    let mut lifted = inner
        .endos
        .iter()
        .map(|e| from_balanced(e, ring))
        .collect::<Result<Vec<_>>>()?;
    let pivot_op = lifted.remove(0);
    let inner_ops = inner
        .ops
        .iter()
        .map(|m| from_balanced(m, ring))
        .collect::<Result<Vec<_>>>()?;
    let n = ring.n;
    let mut ops = inner_ops[..n - 2].to_vec();
    ops.push(pivot_op);
    if c.family() != Family::Relative {
        ops.push(inner_ops[n - 2].clone());
    }
    let gauge = SMat::constant(ring, ut, &step.p)
        .mul(step.u.matrix())
        .mul(&from_balanced(&inner.gauge, ring)?);
    Ok(Reduced {
        gauge,
        ops,
        endos: lifted,
        unstabilized_at: step.unstabilized_at.or(inner.unstabilized_at),
    })
}

/// Gauges `c` to a connection with constant matrices and reads them off.
/// Smooth coordinates are removed first, then crossing pairs one at a
/// time from the last.
pub fn reduce_model(c: &Connection) -> Result<Reduction> {
    c.require_nr()?;
    let ring = c.ring();
    let ut = c.u_trunc();
    let (base, frame, mut unstabilized_at) = if ring.n > ring.r {
        let sd = descend_smooth_unchecked(c)?;
        let f = sd.transform.matrix().clone();
        let top = f.top_degree().filter(|&d| d == ring.trunc && d > 0);
        (sd.connection, Some(f), top)
    } else {
        (c.clone(), None, None)
    };
    let red = reduce_crossing(&base, Vec::new())?;
    unstabilized_at = unstabilized_at.or(red.unstabilized_at);
    let pad = |m: &SMat| {
        m.map_monomials(ring, ut, |k, j| {
            let mut k2 = k.0.clone();
            k2.resize(ring.n, 0);
            Some((MultiIndex(k2), j))
        })
    };
    let g = match &frame {
        Some(f) => f.mul(&pad(&red.gauge)),
        None => red.gauge,
    };
    let g0 = g.constant_term();
    let g0inv = g0.inverse().expect("invertible gauge");
    let g = g.mul(&SMat::constant(ring, ut, &g0inv));
    let zero = MultiIndex::zero(base.ring().n);
    let raw = ReducedModel {
        family: c.family(),
        dim: c.rank(),
        u_trunc: ut,
        ops: red
            .ops
            .iter()
            .map(|m| (0..=ut).map(|j| m.coefficient(&zero, j)).collect())
            .collect(),
    };
    if red
        .ops
        .iter()
        .any(|m| m.entries().iter().any(|e| e.terms().any(|(k, _, _)| !k.is_zero())))
    {
        return Err(Error::Consistency("reduced operators still depend on x".into()));
    }
    Ok(Reduction {
        model: raw.conjugate(&g0, &g0inv),
        transform: GaugeTransform::new(g)?,
        unstabilized_at,
    })
}

/// Linear data of a relative or absolute connection: one commuting
/// nilpotent operator per log derivation.
pub fn reduce_to_linear_data(c: &Connection) -> Result<LinearData> {
    if c.family() == Family::UExtended {
        return Err(Error::Usage("u-extended connections reduce to u-polynomial operators; use reduce_model".into()));
    }
    let red = reduce_model(c)?;
    let l = red
        .model
        .linear_data()
        .ok_or_else(|| Error::Consistency("u-dependence in a u-free reduction".into()))?;
    l.validate()?;
    Ok(l)
}

/// Connection with constant matrices given by the model; smooth directions
/// act by differentiation.
pub fn expand_model(model: &ReducedModel, target: RingSpec) -> Result<Connection> {
    let derivs = model.family.derivations(&target);
    let logs = derivs.iter().filter(|d| d.is_log()).count();
    if logs != model.ops.len() {
        return Err(Error::Shape(format!(
            "{} connection over {target} has {logs} log derivations, model has {} operators",
            model.family,
            model.ops.len()
        )));
    }
    let mut ops = model.ops.iter();
    let zero = MultiIndex::zero(target.n);
    let mut mats = Vec::new();
    for theta in derivs {
        let m = match theta {
            Derivation::Log(_) => {
                let op = ops.next().expect("operator per log derivation");
                let mut coeffs = BTreeMap::new();
                for (j, m) in op.iter().enumerate() {
                    if m.rows() != model.dim || m.cols() != model.dim {
                        return Err(Error::Shape(format!("operator is not {0}x{0}", model.dim)));
                    }
                    if j as u32 > model.u_trunc {
                        return Err(Error::Shape(format!("u^{j} beyond the model's bound")));
                    }
                    if !m.is_zero() {
                        coeffs.insert((zero.clone(), j as u32), m.clone());
                    }
                }
                SMat::from_coefficients(target, model.u_trunc, model.dim, model.dim, &coeffs)
            }
            Derivation::Partial(_) => SMat::zeros(target, model.u_trunc, model.dim, model.dim),
        };
        mats.push(m);
    }
    Connection::with_rank(target, model.family, model.u_trunc, model.dim, mats)
}

/// Quasi-inverse of [`reduce_to_linear_data`]. The family follows from the
/// number of operators: `r - 1` gives a relative connection, `r` an absolute
/// one.
pub fn expand_from_linear_data(l: &LinearData, target: RingSpec) -> Result<Connection> {
    l.validate()?;
    let family = if l.nilpotents.len() + 1 == target.r {
        Family::Relative
    } else if l.nilpotents.len() == target.r {
        Family::Absolute
    } else {
        return Err(Error::Shape(format!(
            "{} operators fit neither family over {target}",
            l.nilpotents.len()
        )));
    };
    expand_model(&ReducedModel::from_linear_data(family, l), target)
}
