use crate::error::{Error, Result};
use crate::qmat::QMat;

/// Returns `P` and the conjugates `P^{-1} M_i P`, all strictly upper
/// triangular. Builds the flag `W_0 = 0`, `W_{t+1} = {v : M_i v ∈ W_t}`.
pub fn nilpotent_trigonalize(dim: usize, mats: &[QMat]) -> Result<(QMat, Vec<QMat>)> {
    for (i, m) in mats.iter().enumerate() {
        if m.rows() != dim || m.cols() != dim {
            return Err(Error::Shape(format!("matrix {i} is not {dim}x{dim}")));
        }
        if !m.is_nilpotent() {
            return Err(Error::NotNilpotent(format!("matrix {i} = {m}")));
        }
    }
    for i in 0..mats.len() {
        for j in i + 1..mats.len() {
            if !mats[i].commutator(&mats[j]).is_zero() {
                return Err(Error::Usage(format!("matrices {i} and {j} do not commute")));
            }
        }
    }
    if mats.iter().all(QMat::is_strictly_upper) {
        return Ok((QMat::identity(dim), mats.to_vec()));
    }
    let mut basis = QMat::zeros(dim, 0);
    while basis.cols() < dim {
        let annihilator = if basis.cols() == 0 {
            QMat::identity(dim)
        } else {
            basis.transpose().kernel().transpose()
        };
        let stacked = mats
            .iter()
            .map(|m| annihilator.mul(m))
            .reduce(|a, b| a.vstack(&b))
            .unwrap_or_else(|| QMat::zeros(0, dim));
        let next = stacked.kernel();
        let before = basis.cols();
        for j in 0..next.cols() {
            let cand = basis.hstack(&QMat::from_columns(dim, &[next.column(j)]));
            if cand.rank() > basis.cols() {
                basis = cand;
            }
        }
        if basis.cols() == before {
            return Err(Error::Consistency("flag construction stalled".into()));
        }
    }
    let pinv = basis.inverse().expect("flag basis is a basis");
    let conj = mats.iter().map(|m| pinv.mul(m).mul(&basis)).collect();
    Ok((basis, conj))
}
