//! Matrices with entries in the truncated ring.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::Zero;

use crate::qmat::QMat;
use crate::rational::Q;
use crate::series::{Derivation, MultiIndex, RingSpec, Series, Term};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SMat {
    ring: RingSpec,
    u_trunc: u32,
    rows: usize,
    cols: usize,
    data: Vec<Series>,
}

impl SMat {
    pub fn zeros(ring: RingSpec, u_trunc: u32, rows: usize, cols: usize) -> Self {
        SMat {
            ring,
            u_trunc,
            rows,
            cols,
            data: vec![Series::zero_u(ring, u_trunc); rows * cols],
        }
    }

    pub fn identity(ring: RingSpec, u_trunc: u32, n: usize) -> Self {
        Self::constant(ring, u_trunc, &QMat::identity(n))
    }

    pub fn constant(ring: RingSpec, u_trunc: u32, m: &QMat) -> Self {
        let mut out = Self::zeros(ring, u_trunc, m.rows(), m.cols());
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                out.data[i * m.cols() + j] = Series::constant_u(ring, u_trunc, m[(i, j)].clone());
            }
        }
        out
    }

    pub fn from_entries(ring: RingSpec, u_trunc: u32, rows: usize, cols: usize, data: Vec<Series>) -> Self {
        assert_eq!(data.len(), rows * cols);
        assert!(data.iter().all(|s| s.ring() == ring && s.u_trunc() == u_trunc));
        SMat {
            ring,
            u_trunc,
            rows,
            cols,
            data,
        }
    }

    /// Assembles `Σ C_t x^k u^j` from coefficient matrices.
    pub fn from_coefficients(
        ring: RingSpec,
        u_trunc: u32,
        rows: usize,
        cols: usize,
        coeffs: &BTreeMap<Term, QMat>,
    ) -> Self {
        let mut out = Self::zeros(ring, u_trunc, rows, cols);
        for ((k, j), m) in coeffs {
            for a in 0..rows {
                for b in 0..cols {
                    let v = &m[(a, b)];
                    if !v.is_zero() {
                        out.data[a * cols + b].add_term(k.clone(), *j, v.clone());
                    }
                }
            }
        }
        out
    }

    /// Nonzero coefficient matrices keyed by monomial.
    pub fn coefficients(&self) -> BTreeMap<Term, QMat> {
        let mut out: BTreeMap<Term, QMat> = BTreeMap::new();
        for a in 0..self.rows {
            for b in 0..self.cols {
                for (k, j, c) in self.data[a * self.cols + b].terms() {
                    out.entry((k.clone(), j))
                        .or_insert_with(|| QMat::zeros(self.rows, self.cols))[(a, b)] = c.clone();
                }
            }
        }
        out
    }

    pub fn coefficient(&self, k: &MultiIndex, j: u32) -> QMat {
        let mut m = QMat::zeros(self.rows, self.cols);
        for a in 0..self.rows {
            for b in 0..self.cols {
                m[(a, b)] = self.data[a * self.cols + b].coeff(k, j);
            }
        }
        m
    }

    pub fn constant_term(&self) -> QMat {
        self.coefficient(&MultiIndex::zero(self.ring.n), 0)
    }

    pub fn ring(&self) -> RingSpec {
        self.ring
    }

    pub fn u_trunc(&self) -> u32 {
        self.u_trunc
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Series {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, s: Series) {
        assert!(s.ring() == self.ring && s.u_trunc() == self.u_trunc);
        self.data[i * self.cols + j] = s;
    }

    pub fn entries(&self) -> &[Series] {
        &self.data
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Series::is_zero)
    }

    pub fn is_constant(&self) -> bool {
        self.data
            .iter()
            .all(|s| s.terms().all(|(k, j, _)| k.is_zero() && j == 0))
    }

    fn zip(&self, o: &SMat, f: impl Fn(&Series, &Series) -> Series) -> SMat {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols), "shape mismatch");
        SMat {
            ring: self.ring,
            u_trunc: self.u_trunc,
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&o.data).map(|(a, b)| f(a, b)).collect(),
        }
    }

    fn map(&self, f: impl Fn(&Series) -> Series) -> SMat {
        SMat {
            ring: self.ring,
            u_trunc: self.u_trunc,
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn add(&self, o: &SMat) -> SMat {
        self.zip(o, Series::add)
    }

    pub fn sub(&self, o: &SMat) -> SMat {
        self.zip(o, Series::sub)
    }

    pub fn neg(&self) -> SMat {
        self.map(Series::neg)
    }

    pub fn scale(&self, c: &Q) -> SMat {
        self.map(|s| s.scale(c))
    }

    pub fn mul(&self, o: &SMat) -> SMat {
        assert_eq!(self.cols, o.rows, "inner dimensions differ");
        let mut out = SMat::zeros(self.ring, self.u_trunc, self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..o.cols {
                    let b = o.get(k, j);
                    if !b.is_zero() {
                        let idx = i * o.cols + j;
                        out.data[idx] = out.data[idx].add(&a.mul(b));
                    }
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Series]) -> Vec<Series> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                let mut acc = Series::zero_u(self.ring, self.u_trunc);
                for (k, x) in v.iter().enumerate() {
                    let a = self.get(i, k);
                    if !a.is_zero() && !x.is_zero() {
                        acc = acc.add(&a.mul(x));
                    }
                }
                acc
            })
            .collect()
    }

    pub fn commutator(&self, o: &SMat) -> SMat {
        self.mul(o).sub(&o.mul(self))
    }

    pub fn transpose(&self) -> SMat {
        let mut data = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                data.push(self.get(i, j).clone());
            }
        }
        SMat {
            ring: self.ring,
            u_trunc: self.u_trunc,
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }

    pub fn kron(&self, o: &SMat) -> SMat {
        let mut out = SMat::zeros(self.ring, self.u_trunc, self.rows * o.rows, self.cols * o.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self.get(i, j);
                if a.is_zero() {
                    continue;
                }
                for k in 0..o.rows {
                    for l in 0..o.cols {
                        out.data[(i * o.rows + k) * out.cols + j * o.cols + l] = a.mul(o.get(k, l));
                    }
                }
            }
        }
        out
    }

    /// `A ⊗ I + I ⊗ B`.
    pub fn kron_sum(a: &SMat, b: &SMat) -> SMat {
        let ia = SMat::identity(a.ring, a.u_trunc, a.rows);
        let ib = SMat::identity(b.ring, b.u_trunc, b.rows);
        a.kron(&ib).add(&ia.kron(b))
    }

    pub fn block_diag(a: &SMat, b: &SMat) -> SMat {
        let mut out = SMat::zeros(a.ring, a.u_trunc, a.rows + b.rows, a.cols + b.cols);
        out.set_block(0, 0, a);
        out.set_block(a.rows, a.cols, b);
        out
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, b: &SMat) {
        for i in 0..b.rows {
            for j in 0..b.cols {
                self.set(r0 + i, c0 + j, b.get(i, j).clone());
            }
        }
    }

    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> SMat {
        let mut out = SMat::zeros(self.ring, self.u_trunc, rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                out.set(i, j, self.get(r0 + i, c0 + j).clone());
            }
        }
        out
    }

    pub fn derive(&self, theta: Derivation) -> SMat {
        self.map(|s| theta.apply(s))
    }

    pub fn truncated(&self, max_x: i64, max_u: i64) -> SMat {
        self.map(|s| s.truncated(max_x, max_u))
    }

    /// Rebuilds every entry over another ring (see [`Series::map_monomials`]).
    pub fn map_monomials<F>(&self, ring: RingSpec, u_trunc: u32, f: F) -> SMat
    where
        F: Fn(&MultiIndex, u32) -> Option<(MultiIndex, u32)>,
    {
        SMat {
            ring,
            u_trunc,
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .map(|s| s.map_monomials(ring, u_trunc, &f))
                .collect(),
        }
    }

    /// Inverse, provided the constant term is invertible. Exact in the
    /// truncated ring: `G = G0 (1 + V)` with `V` of positive degree, and
    /// `(1 + V)^{-1} = Σ (-V)^m` terminates.
    pub fn inverse(&self) -> Option<SMat> {
        let g0inv = self.constant_term().inverse()?;
        let g0inv_s = SMat::constant(self.ring, self.u_trunc, &g0inv);
        let id = SMat::identity(self.ring, self.u_trunc, self.rows);
        let v = g0inv_s.mul(self).sub(&id);
        let mut acc = id.clone();
        let mut term = id;
        let neg_v = v.neg();
        let steps = (self.ring.trunc as usize + 1) * (self.u_trunc as usize + 1) + 1;
        for _ in 0..steps {
            term = term.mul(&neg_v);
            if term.is_zero() {
                break;
            }
            acc = acc.add(&term);
        }
        Some(acc.mul(&g0inv_s))
    }

    /// Largest weighted degree among all entries.
    pub fn top_degree(&self) -> Option<u32> {
        self.data.iter().filter_map(Series::top_degree).max()
    }
}

impl fmt::Display for SMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, "; ")?;
            }
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", self.get(i, j))?;
            }
        }
        write!(f, "]")
    }
}
