//! Sparse rational matrices, used for the large differentials of truncated
//! de Rham complexes.

use std::collections::{BTreeMap, HashMap};

use num_traits::{One, Zero};

use crate::qmat::QMat;
use crate::rational::Q;

pub type SparseVec = BTreeMap<usize, Q>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseMat {
    rows: usize,
    cols: usize,
    data: Vec<SparseVec>,
}

impl SparseMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        SparseMat {
            rows,
            cols,
            data: vec![SparseVec::new(); rows],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn add_to(&mut self, i: usize, j: usize, v: Q) {
        if v.is_zero() {
            return;
        }
        let e = self.data[i].entry(j).or_insert_with(Q::zero);
        *e += v;
        if e.is_zero() {
            self.data[i].remove(&j);
        }
    }

    pub fn row(&self, i: usize) -> &SparseVec {
        &self.data[i]
    }

    pub fn nnz(&self) -> usize {
        self.data.iter().map(|r| r.len()).sum()
    }

    pub fn to_dense(&self) -> QMat {
        let mut m = QMat::zeros(self.rows, self.cols);
        for (i, row) in self.data.iter().enumerate() {
            for (j, v) in row {
                m[(i, j.to_owned())] = v.clone();
            }
        }
        m
    }

    pub fn transpose(&self) -> SparseMat {
        let mut out = SparseMat::zeros(self.cols, self.rows);
        for (i, row) in self.data.iter().enumerate() {
            for (j, v) in row {
                out.data[*j].insert(i, v.clone());
            }
        }
        out
    }

    /// `self * other`.
    pub fn mul(&self, other: &SparseMat) -> SparseMat {
        assert_eq!(self.cols, other.rows);
        let mut out = SparseMat::zeros(self.rows, other.cols);
        for (i, row) in self.data.iter().enumerate() {
            for (k, a) in row {
                for (j, b) in &other.data[*k] {
                    out.add_to(i, *j, a * b);
                }
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|r| r.is_empty())
    }

    /// Exact rank by incremental row echelon reduction.
    pub fn rank(&self) -> usize {
        let mut pivots: HashMap<usize, SparseVec> = HashMap::new();
        let mut order: Vec<usize> = (0..self.rows).collect();
        order.sort_by_key(|&i| self.data[i].len());
        for i in order {
            let mut row = self.data[i].clone();
            while let Some((&lead, lv)) = row.iter().next() {
                match pivots.get(&lead) {
                    Some(p) => {
                        let f = lv.clone();
                        for (j, v) in p {
                            let e = row.entry(*j).or_insert_with(Q::zero);
                            *e -= &f * v;
                            if e.is_zero() {
                                row.remove(j);
                            }
                        }
                    }
                    None => {
                        let inv = Q::one() / lv;
                        for v in row.values_mut() {
                            *v *= &inv;
                        }
                        pivots.insert(lead, row);
                        break;
                    }
                }
            }
        }
        pivots.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_matches_dense() {
        let mut m = SparseMat::zeros(3, 4);
        m.add_to(0, 0, Q::one());
        m.add_to(0, 2, Q::from_integer(2.into()));
        m.add_to(1, 0, Q::from_integer(2.into()));
        m.add_to(1, 2, Q::from_integer(4.into()));
        m.add_to(2, 3, Q::one());
        assert_eq!(m.rank(), 2);
        assert_eq!(m.to_dense().rank(), 2);
    }
}
