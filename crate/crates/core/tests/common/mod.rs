//! Random inputs and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use logconn::connection::LinearData;
use logconn::normal_form::{expand_model, ReducedModel};
use logconn::rational::{q, qf};
use logconn::{Connection, Family, MultiIndex, QMat, RingSpec, SMat, Series, Q};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn small_q(rng: &mut ChaCha8Rng) -> Q {
    let den = *[1, 1, 1, 2, 3].choose(rng).unwrap();
    qf(rng.gen_range(-4..=4), den)
}

/// All partitions of `n`, largest part first.
pub fn partitions(n: usize) -> Vec<Vec<usize>> {
    fn go(n: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if n == 0 {
            out.push(cur.clone());
            return;
        }
        for p in (1..=n.min(max)).rev() {
            cur.push(p);
            go(n - p, p, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(n, n, &mut Vec::new(), &mut out);
    out
}

/// Nilpotent matrix in Jordan form with the given block sizes.
pub fn jordan(blocks: &[usize]) -> QMat {
    let n: usize = blocks.iter().sum();
    let mut m = QMat::zeros(n, n);
    let mut start = 0;
    for &b in blocks {
        for i in start..start + b - 1 {
            m[(i, i + 1)] = q(1);
        }
        start += b;
    }
    m
}

/// Unimodular integer matrix `L U` with small random entries.
pub fn random_unimodular(rng: &mut ChaCha8Rng, n: usize) -> QMat {
    let mut l = QMat::identity(n);
    let mut u = QMat::identity(n);
    for i in 0..n {
        for j in 0..i {
            l[(i, j)] = q(rng.gen_range(-2..=2));
            u[(j, i)] = q(rng.gen_range(-2..=2));
        }
    }
    l.mul(&u)
}

pub fn random_nilpotent(rng: &mut ChaCha8Rng, n: usize) -> QMat {
    let parts = partitions(n);
    let p = random_unimodular(rng, n);
    let j = jordan(parts.choose(rng).unwrap());
    p.mul(&j).mul(&p.inverse().unwrap())
}

/// Commuting nilpotents: polynomials without constant term in one
/// random nilpotent.
pub fn random_commuting(rng: &mut ChaCha8Rng, n: usize, count: usize) -> Vec<QMat> {
    let base = random_nilpotent(rng, n);
    let sq = base.mul(&base);
    (0..count)
        .map(|_| {
            base.scale(&q(rng.gen_range(-2..=2)))
                .add(&sq.scale(&q(rng.gen_range(-1..=1))))
        })
        .collect()
}

pub fn random_linear_data(rng: &mut ChaCha8Rng, dim: usize, count: usize) -> LinearData {
    LinearData::new(dim, random_commuting(rng, dim, count)).unwrap()
}

pub fn log_count(family: Family, ring: &RingSpec) -> usize {
    family.derivations(ring).iter().filter(|d| d.is_log()).count()
}

/// Gauge matrix with the given constant term and a few random terms of
/// positive degree.
pub fn random_gauge(rng: &mut ChaCha8Rng, ring: RingSpec, u_trunc: u32, g0: &QMat, terms: usize) -> SMat {
    let s = g0.rows();
    let mut g = SMat::constant(ring, u_trunc, g0);
    let monos: Vec<MultiIndex> = ring.monomials().into_iter().filter(|k| !k.is_zero()).collect();
    if monos.is_empty() {
        return g;
    }
    for _ in 0..terms {
        let (i, j) = (rng.gen_range(0..s), rng.gen_range(0..s));
        let k = monos.choose(rng).unwrap().clone();
        let uj = rng.gen_range(0..=u_trunc);
        let t = Series::monomial_u(ring, u_trunc, k, uj, small_q(rng)).unwrap();
        let e = g.get(i, j).add(&t);
        g.set(i, j, e);
    }
    g
}

/// Integrable connection with nilpotent residues: a constant model gauged
/// by a random matrix.
pub fn random_nr(rng: &mut ChaCha8Rng, ring: RingSpec, family: Family, rank: usize, terms: usize) -> Connection {
    let l = random_linear_data(rng, rank, log_count(family, &ring));
    let model = ReducedModel::from_linear_data(family, &l);
    let c = expand_model(&model, ring).unwrap();
    let g0 = random_unimodular(rng, rank);
    c.gauge(&random_gauge(rng, ring, 0, &g0, terms)).unwrap()
}

pub fn random_ring(rng: &mut ChaCha8Rng, max_n: usize, max_trunc: u32, min_r: usize) -> RingSpec {
    let n = rng.gen_range(min_r.max(1)..=max_n);
    let r = rng.gen_range(min_r.max(1)..=n);
    RingSpec::new(n, r, rng.gen_range(1..=max_trunc)).unwrap()
}

/// Solves `H0 X - X H0 + c X = R` as one linear system in `vec X`.
pub fn sylvester_by_kronecker(h0: &QMat, c: &Q, rhs: &QMat) -> QMat {
    let n = h0.rows();
    let id = QMat::identity(n);
    // Row-major vec: vec(A X B) = (A ⊗ B^T) vec X.
    let op = h0
        .kron(&id)
        .sub(&id.kron(&h0.transpose()))
        .add(&QMat::identity(n * n).scale(c));
    let mut b = QMat::zeros(n * n, 1);
    for i in 0..n {
        for j in 0..n {
            b[(i * n + j, 0)] = rhs[(i, j)].clone();
        }
    }
    let x = op.solve(&b).expect("invertible system");
    let mut out = QMat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            out[(i, j)] = x[(i * n + j, 0)].clone();
        }
    }
    out
}

/// Eigenvalue of the `d`-th log derivation (1-based) on `x^k`, recomputed
/// from the definitions.
pub fn log_eigen(r: usize, d: usize, k: &[u32]) -> i64 {
    if d < r {
        k[d - 1] as i64 - k[d] as i64
    } else {
        k[d - 1] as i64
    }
}

/// `dim Ext^1(unit, unit)` over a crossing ring `(r, r, N)` by brute force:
/// tuples `(a_θ)` in the truncated ring making `[[0, a], [0, 0]]`
/// integrable, modulo the gauges `[[1, g], [0, 1]]`, which shift `a_θ` by
/// `θ(g)`.
pub fn ext1_unit_bruteforce(ring: RingSpec, logs: usize) -> usize {
    let monos = ring.monomials();
    let nm = monos.len();
    let unknowns = logs * nm;
    // Integrability: θ_j(a_i) - θ_i(a_j) = 0 per monomial and pair.
    let mut rows = Vec::new();
    for i in 0..logs {
        for j in i + 1..logs {
            for (m, k) in monos.iter().enumerate() {
                let mut row = vec![q(0); unknowns];
                row[i * nm + m] = q(log_eigen(ring.r, j + 1, &k.0));
                row[j * nm + m] = q(-log_eigen(ring.r, i + 1, &k.0));
                rows.push(row);
            }
        }
    }
    let cocycle_dim = if rows.is_empty() {
        unknowns
    } else {
        unknowns - QMat::from_rows(rows).rank()
    };
    let mut shifts = QMat::zeros(unknowns, nm);
    for (m, k) in monos.iter().enumerate() {
        for i in 0..logs {
            shifts[(i * nm + m, m)] = q(log_eigen(ring.r, i + 1, &k.0));
        }
    }
    cocycle_dim - shifts.rank()
}

/// `dim Ext^1` between linear data by brute force. An extension is
/// `[[N2_i, A_i], [0, N1_i]]`; the blocks must keep the operators
/// commuting, and the gauges `[[1, g], [0, 1]]` shift `A_i` by
/// `N2_i g - g N1_i`. Both conditions are assembled entry by entry.
pub fn ext1_linear_bruteforce(l1: &LinearData, l2: &LinearData) -> usize {
    let (s1, s2) = (l1.dim, l2.dim);
    let m = l1.nilpotents.len();
    let block = s2 * s1;
    let unknowns = m * block;
    let at = |i: usize, a: usize, b: usize| i * block + a * s1 + b;
    // Entry (a, b) of N2_i A_j + A_i N1_j - N2_j A_i - A_j N1_i.
    let mut rows = Vec::new();
    for i in 0..m {
        for j in i + 1..m {
            for a in 0..s2 {
                for b in 0..s1 {
                    let mut row = vec![q(0); unknowns];
                    for c in 0..s2 {
                        row[at(j, c, b)] += l2.nilpotents[i][(a, c)].clone();
                        row[at(i, c, b)] -= l2.nilpotents[j][(a, c)].clone();
                    }
                    for c in 0..s1 {
                        row[at(i, a, c)] += l1.nilpotents[j][(c, b)].clone();
                        row[at(j, a, c)] -= l1.nilpotents[i][(c, b)].clone();
                    }
                    rows.push(row);
                }
            }
        }
    }
    let cocycles = if rows.is_empty() {
        unknowns
    } else {
        unknowns - QMat::from_rows(rows).rank()
    };
    // Column for each entry g_{a,b}.
    let mut shifts = QMat::zeros(unknowns, block);
    for i in 0..m {
        for a in 0..s2 {
            for b in 0..s1 {
                let g = a * s1 + b;
                for c in 0..s2 {
                    shifts[(at(i, c, b), g)] += l2.nilpotents[i][(c, a)].clone();
                }
                for c in 0..s1 {
                    shifts[(at(i, a, c), g)] -= l1.nilpotents[i][(b, c)].clone();
                }
            }
        }
    }
    cocycles - shifts.rank()
}

/// Degree-`d` slice of the relative complex of the unit over `(2, 2)`:
/// `Log(1)` acts on `x^k` by `k_1 - k_2`.
pub fn unit_h0_degree_slice(ring: RingSpec, d: u32) -> usize {
    let slice: Vec<MultiIndex> = ring
        .monomials()
        .into_iter()
        .filter(|k| k.degree() == d)
        .collect();
    let n = slice.len();
    let mut m = QMat::zeros(n, n);
    for (i, k) in slice.iter().enumerate() {
        m[(i, i)] = q(log_eigen(ring.r, 1, &k.0));
    }
    n - m.rank()
}
