use std::collections::BTreeMap;

use crate::connection::{basis_vector, Connection};
use crate::error::{Error, Result};
use crate::rational::{inv_factorial, Q};
use crate::series::{Derivation, MultiIndex, RingSpec, Series};
use crate::smat::SMat;

use super::gauge::GaugeTransform;

/// Exponent vectors over the smooth coordinates with total degree `<= bound`,
/// sorted by degree.
fn smooth_exponents(m: usize, bound: u32) -> Vec<Vec<u32>> {
    let mut out = vec![vec![0u32; m]];
    let mut frontier = out.clone();
    for _ in 0..bound {
        let mut next = Vec::new();
        for a in &frontier {
            let last = a.iter().rposition(|&e| e > 0).unwrap_or(0);
            for j in last..m {
                let mut b = a.clone();
                b[j] += 1;
                next.push(b);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// `Σ_a (-1)^{|a|} x^a D^a(v) / a!` over the smooth coordinates
/// `x_{r+1}..x_n`, with `D_j = ∇(∂_j)`. Exact through degree `N`.
pub fn katz_project(c: &Connection, v: &[Series]) -> Result<Vec<Series>> {
    let ring = c.ring();
    if v.len() != c.rank() {
        return Err(Error::Shape(format!("vector of length {} for rank {}", v.len(), c.rank())));
    }
    if let Some(s) = v.iter().find(|s| s.ring() != ring) {
        return Err(Error::RingMismatch(ring, s.ring()));
    }
    let v: Vec<Series> = v.iter().map(|s| s.with_u_trunc(c.u_trunc())).collect();
    let m = ring.n - ring.r;
    if m == 0 {
        return Ok(v);
    }
    let d_index: Vec<usize> = (ring.r + 1..=ring.n)
        .map(|j| c.index_of(Derivation::Partial(j)).expect("smooth derivation"))
        .collect();
    let mut cache: BTreeMap<Vec<u32>, Vec<Series>> = BTreeMap::new();
    let mut out = v.clone();
    for a in smooth_exponents(m, ring.trunc) {
        let deg: u32 = a.iter().sum();
        let da = if deg == 0 {
            v.clone()
        } else {
            let j = a.iter().position(|&e| e > 0).expect("nonzero");
            let mut prev = a.clone();
            prev[j] -= 1;
            let base = &cache[&prev];
            c.apply(d_index[j], base)
        };
        if deg > 0 && da.iter().all(Series::is_zero) {
            cache.insert(a, da);
            continue;
        }
        if deg > 0 {
            let mut k = vec![0u32; ring.n];
            k[ring.r..].copy_from_slice(&a);
            let mut coeff = a.iter().fold(Q::from_integer(1.into()), |acc, &e| acc * inv_factorial(e));
            if deg % 2 == 1 {
                coeff = -coeff;
            }
            let xa = Series::monomial_u(ring, c.u_trunc(), MultiIndex(k), 0, coeff);
            if let Ok(xa) = xa {
                for (o, d) in out.iter_mut().zip(&da) {
                    *o = o.add(&xa.mul(d));
                }
            }
        }
        cache.insert(a, da);
    }
    Ok(out)
}

/// Output of [`descend_smooth`].
#[derive(Clone, Debug)]
pub struct SmoothDescent {
    /// Connection on the crossing ring `(r, r, N)`.
    pub connection: Connection,
    /// Frame of Katz-projected basis vectors; carries the input to
    /// `expand_smooth(connection)`.
    pub transform: GaugeTransform,
}

/// Restricts to the frame `P(e_1), .., P(e_s)`, where the smooth directions
/// act trivially, and reads the log actions over the crossing ring.
pub fn descend_smooth(c: &Connection) -> Result<SmoothDescent> {
    c.require_nr()?;
    descend_smooth_unchecked(c)
}

pub(crate) fn descend_smooth_unchecked(c: &Connection) -> Result<SmoothDescent> {
    let ring = c.ring();
    if ring.n == ring.r {
        return Err(Error::Usage(format!("{ring} has no smooth coordinates")));
    }
    let s = c.rank();
    let ut = c.u_trunc();
    let mut f = SMat::zeros(ring, ut, s, s);
    for i in 0..s {
        let col = katz_project(c, &basis_vector(ring, ut, s, i))?;
        for (l, e) in col.into_iter().enumerate() {
            f.set(l, i, e);
        }
    }
    let transform = GaugeTransform::new(f)?;
    let gauged = transform.apply(c)?;
    let target = RingSpec::new(ring.r, ring.r, ring.trunc)?.with_tail_weight(ring.tail_weight);
    let mut mats = Vec::new();
    for (i, theta) in c.derivations().into_iter().enumerate() {
        let m = &gauged.mats()[i];
        let acc = c.accuracy(theta);
        match theta {
            Derivation::Partial(_) => {
                if !m.truncated(acc.x, acc.u).is_zero() {
                    return Err(Error::Consistency(format!(
                        "{theta} does not vanish on the projected frame"
                    )));
                }
            }
            Derivation::Log(_) => {
                let smooth = |k: &MultiIndex| k.0[ring.r..].iter().any(|&x| x > 0);
                let smooth_free = m.entries().iter().all(|e| {
                    e.terms()
                        .all(|(k, j, _)| !smooth(k) || ring.weighted_degree(&k.0) as i64 > acc.x || j as i64 > acc.u)
                });
                if !smooth_free {
                    return Err(Error::Consistency(format!(
                        "{theta} depends on smooth coordinates on the projected frame"
                    )));
                }
                // Smooth terms beyond the accuracy are undetermined; drop them.
                mats.push(m.map_monomials(target, ut, |k, j| {
                    (!smooth(k)).then(|| (MultiIndex(k.0[..ring.r].to_vec()), j))
                }));
            }
        }
    }
    let connection = Connection::with_rank(target, c.family(), ut, s, mats)?;
    Ok(SmoothDescent {
        connection,
        transform,
    })
}

/// Base extension from `(r, r, N)` to `target = (n, r, N)`: same log
/// matrices, smooth directions acting by plain differentiation.
pub fn expand_smooth(c: &Connection, target: RingSpec) -> Result<Connection> {
    let ring = c.ring();
    if ring.n != ring.r || target.r != ring.r || target.trunc != ring.trunc || target.n < ring.n {
        return Err(Error::Usage(format!("cannot expand {ring} to {target}")));
    }
    if target.n > target.r && (ring.tail_weight != 1 || target.tail_weight != 1) {
        return Err(Error::Usage("weighted crossing rings do not extend by smooth coordinates".into()));
    }
    let extend = |m: &SMat| {
        m.map_monomials(target, c.u_trunc(), |k, j| {
            let mut k2 = k.0.clone();
            k2.resize(target.n, 0);
            Some((MultiIndex(k2), j))
        })
    };
    let mut logs = c.mats().iter();
    let mats = c
        .family()
        .derivations(&target)
        .into_iter()
        .map(|theta| match theta {
            Derivation::Log(_) => extend(logs.next().expect("log matrix")),
            Derivation::Partial(_) => SMat::zeros(target, c.u_trunc(), c.rank(), c.rank()),
        })
        .collect();
    Connection::with_rank(target, c.family(), c.u_trunc(), c.rank(), mats)
}
