use std::collections::BTreeMap;


use super::{Field, LinearError};

/// Sparse matrix in row-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMat<F> {
    pub rows: usize,
    pub cols: usize,
    data: Vec<BTreeMap<usize, F>>,
}

/// Result of Gaussian elimination: the reduced row-echelon form together with
/// the pivot positions and the row transform `t` satisfying `t * a = rref`.
pub struct Echelon<F> {
    pub rref: SparseMat<F>,
    pub pivots: Vec<(usize, usize)>,
    pub transform: SparseMat<F>,
}

/// Outcome of solving `a x = b`.
pub enum SolveOutcome<F> {
    /// The unique solution with every free variable set to zero.
    Solution(Vec<F>),
    /// A row vector `y` with `y a = 0` and `y b = 1`, certifying
    /// inconsistency.
    Inconsistent(Vec<F>),
}

impl<F: Field> SparseMat<F> {
    pub fn zero(rows: usize, cols: usize) -> Self {
        SparseMat { rows, cols, data: vec![BTreeMap::new(); rows] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zero(n, n);
        for i in 0..n {
            m.set(i, i, F::one());
        }
        m
    }

    /// Build from columns given as sparse vectors.
    pub fn from_columns(rows: usize, cols: &[BTreeMap<usize, F>]) -> Self {
        let mut m = Self::zero(rows, cols.len());
        for (j, col) in cols.iter().enumerate() {
            for (&i, v) in col {
                assert!(i < rows, "row index out of range");
                if !v.is_zero() {
                    m.set(i, j, v.clone());
                }
            }
        }
        m
    }

    pub fn set(&mut self, i: usize, j: usize, v: F) {
        assert!(i < self.rows && j < self.cols);
        if v.is_zero() {
            self.data[i].remove(&j);
        } else {
            self.data[i].insert(j, v);
        }
    }

    pub fn get(&self, i: usize, j: usize) -> F {
        self.data[i].get(&j).cloned().unwrap_or_else(F::zero)
    }

    pub fn add_to(&mut self, i: usize, j: usize, v: F) {
        if v.is_zero() {
            return;
        }
        let cur = self.get(i, j);
        self.set(i, j, cur + v);
    }

    pub fn row(&self, i: usize) -> &BTreeMap<usize, F> {
        &self.data[i]
    }

    pub fn is_zero_matrix(&self) -> bool {
        self.data.iter().all(|r| r.is_empty())
    }

    pub fn transpose(&self) -> Self {
        let mut m = Self::zero(self.cols, self.rows);
        for (i, row) in self.data.iter().enumerate() {
            for (&j, v) in row {
                m.set(j, i, v.clone());
            }
        }
        m
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut m = Self::zero(self.rows, other.cols);
        for (i, row) in self.data.iter().enumerate() {
            let mut acc: BTreeMap<usize, F> = BTreeMap::new();
            for (&k, v) in row {
                for (&j, w) in &other.data[k] {
                    let term = v.clone() * w.clone();
                    add_entry(&mut acc, j, term);
                }
            }
            m.data[i] = acc;
        }
        m
    }

    pub fn mul_dense(&self, x: &[F]) -> Vec<F> {
        assert_eq!(self.cols, x.len(), "mul_dense dimension mismatch");
        let mut out = vec![F::zero(); self.rows];
        for (i, row) in self.data.iter().enumerate() {
            let mut acc = F::zero();
            for (&j, v) in row {
                if !x[j].is_zero() {
                    acc = acc + v.clone() * x[j].clone();
                }
            }
            out[i] = acc;
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut m = self.clone();
        for (i, row) in other.data.iter().enumerate() {
            for (&j, v) in row {
                let cur = m.get(i, j);
                m.set(i, j, cur - v.clone());
            }
        }
        m
    }

    pub fn scale(&self, c: &F) -> Self {
        let mut m = Self::zero(self.rows, self.cols);
        for (i, row) in self.data.iter().enumerate() {
            for (&j, v) in row {
                m.set(i, j, v.clone() * c.clone());
            }
        }
        m
    }

    /// Reduced row echelon form with deterministic pivoting: columns are
    /// scanned left to right and the surviving row of smallest index hosts
    /// the pivot.
    pub fn echelon(&self) -> Echelon<F> {
        let mut a = self.data.clone();
        let mut t: Vec<BTreeMap<usize, F>> = (0..self.rows)
            .map(|i| {
                let mut m = BTreeMap::new();
                m.insert(i, F::one());
                m
            })
            .collect();
        let mut pivots = Vec::new();
        let mut rank = 0usize;
        for col in 0..self.cols {
            let piv = (rank..self.rows).find(|&r| a[r].get(&col).map(|v| !v.is_zero()).unwrap_or(false));
            let Some(piv) = piv else { continue };
            a.swap(rank, piv);
            t.swap(rank, piv);
            let inv = {
                let v = a[rank].get(&col).unwrap().clone();
                F::one() / v
            };
            if !inv.is_one() {
                scale_row(&mut a[rank], &inv);
                scale_row(&mut t[rank], &inv);
            }
            let pivot_row = a[rank].clone();
            let pivot_t = t[rank].clone();
            for r in 0..self.rows {
                if r == rank {
                    continue;
                }
                let Some(c) = a[r].get(&col).cloned() else { continue };
                if c.is_zero() {
                    continue;
                }
                let factor = -c;
                axpy_row(&mut a[r], &factor, &pivot_row);
                axpy_row(&mut t[r], &factor, &pivot_t);
            }
            pivots.push((rank, col));
            rank += 1;
        }
        let rref = SparseMat { rows: self.rows, cols: self.cols, data: a };
        let transform = SparseMat { rows: self.rows, cols: self.rows, data: t };
        Echelon { rref, pivots, transform }
    }

    pub fn rank(&self) -> usize {
        self.echelon().pivots.len()
    }

    /// Solve `a x = b`. On success the solution has every free variable
    /// equal to zero; on failure a certifying row vector is returned.
    pub fn solve(&self, b: &[F]) -> SolveOutcome<F> {
        assert_eq!(b.len(), self.rows, "solve dimension mismatch");
        let mut aug = Self::zero(self.rows, self.cols + 1);
        aug.data = self.data.clone();
        for (i, v) in b.iter().enumerate() {
            if !v.is_zero() {
                aug.data[i].insert(self.cols, v.clone());
            }
        }
        let ech = aug.echelon();
        for &(r, c) in &ech.pivots {
            if c == self.cols {
                let mut y = vec![F::zero(); self.rows];
                for (&j, v) in ech.transform.row(r) {
                    y[j] = v.clone();
                }
                return SolveOutcome::Inconsistent(y);
            }
        }
        let mut x = vec![F::zero(); self.cols];
        for &(r, c) in &ech.pivots {
            x[c] = ech.rref.get(r, self.cols);
        }
        SolveOutcome::Solution(x)
    }

    pub fn solve_ok(&self, b: &[F]) -> Result<Vec<F>, LinearError> {
        match self.solve(b) {
            SolveOutcome::Solution(x) => Ok(x),
            SolveOutcome::Inconsistent(_) => Err(LinearError::Inconsistent),
        }
    }

    /// Deterministic kernel basis: one vector per free column, in increasing
    /// column order, with a `1` in the free position.
    pub fn kernel(&self) -> Vec<Vec<F>> {
        let ech = self.echelon();
        let pivot_cols: Vec<usize> = ech.pivots.iter().map(|&(_, c)| c).collect();
        let mut out = Vec::new();
        for j in 0..self.cols {
            if pivot_cols.contains(&j) {
                continue;
            }
            let mut v = vec![F::zero(); self.cols];
            v[j] = F::one();
            for &(r, c) in &ech.pivots {
                let coeff = ech.rref.get(r, j);
                if !coeff.is_zero() {
                    v[c] = -coeff;
                }
            }
            out.push(v);
        }
        out
    }
}

fn add_entry<F: Field>(row: &mut BTreeMap<usize, F>, j: usize, v: F) {
    if v.is_zero() {
        return;
    }
    match row.remove(&j) {
        None => {
            row.insert(j, v);
        }
        Some(old) => {
            let s = old + v;
            if !s.is_zero() {
                row.insert(j, s);
            }
        }
    }
}

fn scale_row<F: Field>(row: &mut BTreeMap<usize, F>, c: &F) {
    for v in row.values_mut() {
        *v = v.clone() * c.clone();
    }
}

fn axpy_row<F: Field>(dst: &mut BTreeMap<usize, F>, c: &F, src: &BTreeMap<usize, F>) {
    for (&j, v) in src {
        add_entry(dst, j, c.clone() * v.clone());
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{rat, Rat};

    fn mat(rows: usize, cols: usize, entries: &[(usize, usize, i64)]) -> SparseMat<Rat> {
        let mut m = SparseMat::zero(rows, cols);
        for &(i, j, v) in entries {
            m.set(i, j, rat(v));
        }
        m
    }

    #[test]
    fn solve_underdetermined_zeroes_free_variables() {
        // Rank-one system; the second column is free and must stay zero.
        let a = mat(2, 2, &[(0, 0, 1), (0, 1, 2), (1, 0, 2), (1, 1, 4)]);
        match a.solve(&[rat(1), rat(2)]) {
            SolveOutcome::Solution(x) => assert_eq!(x, vec![rat(1), rat(0)]),
            SolveOutcome::Inconsistent(_) => panic!("system is consistent"),
        }
    }

    #[test]
    fn inconsistent_solve_produces_certificate() {
        let a = mat(2, 2, &[(0, 0, 1), (0, 1, 2), (1, 0, 2), (1, 1, 4)]);
        let b = [rat(1), rat(3)];
        match a.solve(&b) {
            SolveOutcome::Solution(_) => panic!("system is inconsistent"),
            SolveOutcome::Inconsistent(y) => {
                // y * a = 0 and y * b = 1.
                for j in 0..2 {
                    let mut acc = rat(0);
                    for i in 0..2 {
                        acc += y[i].clone() * a.get(i, j);
                    }
                    assert!(acc == rat(0));
                }
                let dot: Rat = y.iter().zip(b.iter()).map(|(p, q)| p.clone() * q.clone()).sum();
                assert_eq!(dot, rat(1));
            }
        }
    }

    #[test]
    fn kernel_is_deterministic_and_correct() {
        let a = mat(2, 3, &[(0, 0, 1), (0, 1, 1), (0, 2, 1), (1, 0, 1), (1, 1, 2), (1, 2, 3)]);
        let k = a.kernel();
        assert_eq!(k.len(), 1);
        assert_eq!(k[0], vec![rat(1), rat(-2), rat(1)]);
        assert!(a.mul_dense(&k[0]).iter().all(|v| v == &rat(0)));
    }

    #[test]
    fn rank_and_rref_shape() {
        let a = mat(3, 3, &[(0, 0, 2), (1, 1, 3), (2, 0, 4), (2, 1, 6)]);
        assert_eq!(a.rank(), 2);
        let e = a.echelon();
        assert_eq!(e.pivots, vec![(0, 0), (1, 1)]);
        assert_eq!(e.transform.matmul(&a), e.rref);
    }
}
