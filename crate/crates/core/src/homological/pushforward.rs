use crate::connection::{Connection, Family, LinearData};
use crate::error::{Error, Result};
use crate::normal_form::reduce_to_linear_data;

use super::complex::joint_kernel;

/// Horizontal sections of the restriction, with the residual action of
/// `Log(r)`: on linear data `(V, N_1..N_r)` this is `N_r` on `∩_{i<r} ker N_i`.
pub fn pushforward_log_point(c: &Connection) -> Result<LinearData> {
    if c.family() != Family::Absolute {
        return Err(Error::Usage(format!("pushforward needs an absolute connection, got {}", c.family())));
    }
    let l = reduce_to_linear_data(c)?;
    let (rel, last) = l.nilpotents.split_at(l.nilpotents.len() - 1);
    let k = joint_kernel(rel, l.dim);
    let n = &last[0];
    let induced = k
        .solve(&n.mul(&k))
        .ok_or_else(|| Error::Consistency("relative sections are not stable under the last operator".into()))?;
    if !induced.is_nilpotent() {
        return Err(Error::Consistency(format!("induced operator {induced} is not nilpotent")));
    }
    LinearData::new(k.cols(), vec![induced])
}
