use crate::connection::{Connection, Family};
use crate::error::{Error, Result};
use crate::rational::Q;
use crate::sparse::SparseMat;

use super::complex::{crossing_model, truncated_cohomology, Koszul, TruncatedSpace};

/// Comparison of the total complex of `E[u]` with the relative de Rham
/// complex of `E`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BicomplexReport {
    pub trunc: u32,
    pub u_trunc: u32,
    /// Total complex at `(N, T)`, cut to form degree plus `u`-degree `<= T`.
    pub total: Vec<usize>,
    /// Total complex at `(N - 1, T - 1)`.
    pub total_previous: Vec<usize>,
    pub relative: Vec<usize>,
    pub relative_previous: Vec<usize>,
    /// Degrees `p < T` where both sides agree between the two truncations.
    pub stabilized: Vec<usize>,
    /// Total and relative dimensions agree on every stabilized degree.
    pub equal: bool,
    /// Per form degree, `(observed, expected)` cohomology of the vertical
    /// differential `β u^i ↦ i du ∧ β u^{i-1}`; only the `u^0` row survives.
    pub columns: Vec<(usize, usize)>,
    pub column_exact: bool,
}

fn total_and_relative(c: &Connection, t: u32) -> Result<(Vec<usize>, Vec<usize>)> {
    let e = c.extend_u(t)?;
    let total = truncated_cohomology(&e, &|p, j| p as u32 + j <= t).dims;
    let relative = truncated_cohomology(&c.restrict()?, &|_, _| true).dims;
    Ok((total, relative))
}

fn column_check(c: &Connection, t: u32) -> Vec<(usize, usize)> {
    let ring = c.ring();
    let space = TruncatedSpace::new(ring.monomials(), t, c.rank());
    let dim = space.dim();
    let r = ring.r;
    let mut ops = vec![SparseMat::zeros(dim, dim); r];
    for m in 0..space.monos.len() {
        for j in 1..=t {
            for l in 0..c.rank() {
                ops[r - 1].add_to(space.idx(m, j - 1, l), space.idx(m, j, l), Q::from_integer(j.into()));
            }
        }
    }
    let keep = |p: usize, i: usize| p as u32 + space.u_degree(i) <= t;
    let k = Koszul::build(&ops, dim, keep);
    let observed = k.cohomology_dims();
    let per_row = space.monos.len() * c.rank();
    (0..=r)
        .map(|p| {
            // Bottom-row forms free of du: subsets of the r - 1 relative
            // directions, of size p.
            let expected = if p as u32 <= t && p < r {
                binomial(r - 1, p) * per_row
            } else {
                0
            };
            (observed[p], expected)
        })
        .collect()
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// Cohomology of the total complex of `extend_u(c)` against the relative
/// de Rham cohomology of `c`, with column exactness of the `u`-direction.
pub fn u_bicomplex_cohomology(c: &Connection, u_trunc: u32) -> Result<BicomplexReport> {
    if c.family() != Family::Absolute {
        return Err(Error::Usage(format!("bicomplex needs an absolute connection, got {}", c.family())));
    }
    if u_trunc == 0 || c.ring().trunc == 0 {
        return Err(Error::Usage("bicomplex comparison needs N >= 1 and u_trunc >= 1".into()));
    }
    c.require_nr()?;
    let base = crossing_model(c)?;
    let n = base.ring().trunc;
    let (total, relative) = total_and_relative(&base, u_trunc)?;
    let lower = base.retruncate(n - 1, None)?;
    let (total_previous, relative_previous) = total_and_relative(&lower, u_trunc - 1)?;
    let stabilized: Vec<usize> = (0..relative.len().min(u_trunc as usize))
        .filter(|&p| total[p] == total_previous[p] && relative[p] == relative_previous[p])
        .collect();
    let equal = stabilized.iter().all(|&p| total[p] == relative[p]);
    let columns = column_check(&base, u_trunc);
    let column_exact = columns.iter().all(|(o, e)| o == e);
    Ok(BicomplexReport {
        trunc: n,
        u_trunc,
        total,
        total_previous,
        relative,
        relative_previous,
        stabilized,
        equal,
        columns,
        column_exact,
    })
}
