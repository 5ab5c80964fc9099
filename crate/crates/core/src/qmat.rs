//! Dense matrices over `Q` with exact elimination.

use std::fmt;

use num_traits::{One, Zero};

use crate::rational::Q;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QMat {
    rows: usize,
    cols: usize,
    data: Vec<Q>,
}

impl QMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        QMat {
            rows,
            cols,
            data: vec![Q::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Q::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Q>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        QMat {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn from_i64(rows: &[&[i64]]) -> Self {
        Self::from_rows(
            rows.iter()
                .map(|row| row.iter().map(|&v| Q::from_integer(v.into())).collect())
                .collect(),
        )
    }

    /// Matrix whose columns are the given vectors (`dim` rows).
    pub fn from_columns(dim: usize, cols: &[Vec<Q>]) -> Self {
        let mut m = Self::zeros(dim, cols.len());
        for (j, col) in cols.iter().enumerate() {
            assert_eq!(col.len(), dim);
            for (i, v) in col.iter().enumerate() {
                m[(i, j)] = v.clone();
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn column(&self, j: usize) -> Vec<Q> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn row(&self, i: usize) -> &[Q] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    pub fn add(&self, o: &QMat) -> QMat {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols));
        QMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&o.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, o: &QMat) -> QMat {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols));
        QMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&o.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn neg(&self) -> QMat {
        QMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| -a.clone()).collect(),
        }
    }

    pub fn scale(&self, c: &Q) -> QMat {
        QMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a * c).collect(),
        }
    }

    pub fn mul(&self, o: &QMat) -> QMat {
        assert_eq!(self.cols, o.rows, "inner dimensions differ");
        let mut out = QMat::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..o.cols {
                    let b = &o[(k, j)];
                    if !b.is_zero() {
                        out[(i, j)] += a * b;
                    }
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Q]) -> Vec<Q> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .filter(|(a, b)| !a.is_zero() && !b.is_zero())
                    .fold(Q::zero(), |acc, (a, b)| acc + a * b)
            })
            .collect()
    }

    pub fn transpose(&self) -> QMat {
        let mut out = QMat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].clone();
            }
        }
        out
    }

    pub fn kron(&self, o: &QMat) -> QMat {
        let mut out = QMat::zeros(self.rows * o.rows, self.cols * o.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = &self[(i, j)];
                if a.is_zero() {
                    continue;
                }
                for k in 0..o.rows {
                    for l in 0..o.cols {
                        out[(i * o.rows + k, j * o.cols + l)] = a * &o[(k, l)];
                    }
                }
            }
        }
        out
    }

    /// `A ⊗ I + I ⊗ B`.
    pub fn kron_sum(a: &QMat, b: &QMat) -> QMat {
        a.kron(&QMat::identity(b.rows))
            .add(&QMat::identity(a.rows).kron(b))
    }

    pub fn commutator(&self, o: &QMat) -> QMat {
        self.mul(o).sub(&o.mul(self))
    }

    pub fn pow(&self, e: usize) -> QMat {
        assert!(self.is_square());
        let mut out = QMat::identity(self.rows);
        for _ in 0..e {
            out = out.mul(self);
        }
        out
    }

    pub fn block_diag(a: &QMat, b: &QMat) -> QMat {
        let mut out = QMat::zeros(a.rows + b.rows, a.cols + b.cols);
        out.set_block(0, 0, a);
        out.set_block(a.rows, a.cols, b);
        out
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, b: &QMat) {
        for i in 0..b.rows {
            for j in 0..b.cols {
                self[(r0 + i, c0 + j)] = b[(i, j)].clone();
            }
        }
    }

    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> QMat {
        let mut out = QMat::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                out[(i, j)] = self[(r0 + i, c0 + j)].clone();
            }
        }
        out
    }

    pub fn hstack(&self, o: &QMat) -> QMat {
        assert_eq!(self.rows, o.rows);
        let mut out = QMat::zeros(self.rows, self.cols + o.cols);
        out.set_block(0, 0, self);
        out.set_block(0, self.cols, o);
        out
    }

    pub fn vstack(&self, o: &QMat) -> QMat {
        assert_eq!(self.cols, o.cols);
        let mut out = QMat::zeros(self.rows + o.rows, self.cols);
        out.set_block(0, 0, self);
        out.set_block(self.rows, 0, o);
        out
    }

    pub fn is_strictly_upper(&self) -> bool {
        (0..self.rows).all(|i| (0..self.cols.min(i + 1)).all(|j| self[(i, j)].is_zero()))
    }

    /// Least `m` with `M^m = 0`, if any.
    pub fn nilpotency_index(&self) -> Option<usize> {
        assert!(self.is_square());
        let mut p = QMat::identity(self.rows);
        for m in 0..=self.rows {
            if p.is_zero() {
                return Some(m);
            }
            p = p.mul(self);
        }
        if p.is_zero() {
            Some(self.rows + 1)
        } else {
            None
        }
    }

    pub fn is_nilpotent(&self) -> bool {
        self.is_square() && self.pow(self.rows).is_zero()
    }

    /// Ranks of `M, M^2, ..., M^n`: a similarity invariant that pins down
    /// the Jordan type of a nilpotent matrix.
    pub fn power_ranks(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.rows);
        let mut p = self.clone();
        for _ in 0..self.rows {
            out.push(p.rank());
            p = p.mul(self);
        }
        out
    }

    /// Reduced row echelon form and pivot columns.
    pub fn rref(&self) -> (QMat, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..m.cols {
            if row == m.rows {
                break;
            }
            let Some(p) = (row..m.rows).find(|&i| !m[(i, col)].is_zero()) else {
                continue;
            };
            m.swap_rows(row, p);
            let inv = m[(row, col)].recip();
            for j in col..m.cols {
                let v = &m[(row, j)] * &inv;
                m[(row, j)] = v;
            }
            for i in 0..m.rows {
                if i == row || m[(i, col)].is_zero() {
                    continue;
                }
                let f = m[(i, col)].clone();
                for j in col..m.cols {
                    if m[(row, j)].is_zero() {
                        continue;
                    }
                    let v = &m[(row, j)] * &f;
                    m[(i, j)] -= v;
                }
            }
            pivots.push(col);
            row += 1;
        }
        (m, pivots)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Basis of the right kernel, as columns.
    pub fn kernel(&self) -> QMat {
        let (r, pivots) = self.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        let mut out = QMat::zeros(self.cols, free.len());
        for (t, &f) in free.iter().enumerate() {
            out[(f, t)] = Q::one();
            for (i, &p) in pivots.iter().enumerate() {
                out[(p, t)] = -r[(i, f)].clone();
            }
        }
        out
    }

    pub fn inverse(&self) -> Option<QMat> {
        if !self.is_square() {
            return None;
        }
        let n = self.rows;
        let (r, pivots) = self.hstack(&QMat::identity(n)).rref();
        if pivots.len() < n || pivots[n - 1] != n - 1 {
            return None;
        }
        Some(r.block(0, n, n, n))
    }

    /// Some `X` with `self * X = b`, if one exists.
    pub fn solve(&self, b: &QMat) -> Option<QMat> {
        assert_eq!(self.rows, b.rows);
        let (r, pivots) = self.hstack(b).rref();
        if pivots.iter().any(|&p| p >= self.cols) {
            return None;
        }
        let mut x = QMat::zeros(self.cols, b.cols);
        for (i, &p) in pivots.iter().enumerate() {
            for j in 0..b.cols {
                x[(p, j)] = r[(i, self.cols + j)].clone();
            }
        }
        Some(x)
    }

    /// Columns of `self` forming a basis of its column space.
    pub fn column_basis(&self) -> QMat {
        let (_, pivots) = self.rref();
        let cols: Vec<Vec<Q>> = pivots.iter().map(|&j| self.column(j)).collect();
        QMat::from_columns(self.rows, &cols)
    }

    /// Extends the independent columns of `self` to a basis of `Q^rows`
    /// using standard basis vectors.
    pub fn complete_basis(&self) -> QMat {
        let mut cur = self.column_basis();
        for i in 0..self.rows {
            let mut e = vec![Q::zero(); self.rows];
            e[i] = Q::one();
            let cand = cur.hstack(&QMat::from_columns(self.rows, &[e]));
            if cand.rank() > cur.cols {
                cur = cand;
            }
        }
        cur
    }
}

impl std::ops::Index<(usize, usize)> for QMat {
    type Output = Q;
    fn index(&self, (i, j): (usize, usize)) -> &Q {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for QMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Q {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Display for QMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "[")?;
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", self[(i, j)])?;
            }
            write!(f, "]")?;
        }
        write!(f, "]")
    }
}
