//! Row-compressed complex matrices with deterministic entry order.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use std::io::Write;

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<C64>,
}

impl CsrMatrix {
    /// Duplicates are summed; entries that sum to exactly zero are dropped.
    pub fn from_triplets(n: usize, mut trips: Vec<(usize, usize, C64)>) -> Self {
        trips.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut indptr = vec![0usize; n + 1];
        let mut indices = Vec::with_capacity(trips.len());
        let mut values: Vec<C64> = Vec::with_capacity(trips.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in trips {
            assert!(i < n && j < n, "triplet ({i},{j}) outside {n}x{n}");
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(j);
                values.push(v);
                indptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            indptr[i + 1] += indptr[i];
        }
        CsrMatrix { n, indptr, indices, values }.pruned()
    }

    fn pruned(self) -> Self {
        if self.values.iter().all(|v| *v != C64::new(0.0, 0.0)) {
            return self;
        }
        let mut trips = Vec::with_capacity(self.values.len());
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                if v != C64::new(0.0, 0.0) {
                    trips.push((i, j, v));
                }
            }
        }
        let n = self.n;
        let mut indptr = vec![0usize; n + 1];
        let mut indices = Vec::with_capacity(trips.len());
        let mut values = Vec::with_capacity(trips.len());
        for (i, j, v) in trips {
            indptr[i + 1] += 1;
            indices.push(j);
            values.push(v);
        }
        for i in 0..n {
            indptr[i + 1] += indptr[i];
        }
        CsrMatrix { n, indptr, indices, values }
    }

    pub fn zeros(n: usize) -> Self {
        CsrMatrix { n, indptr: vec![0; n + 1], indices: vec![], values: vec![] }
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n])
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let trips = d.iter().enumerate().map(|(i, &v)| (i, i, C64::new(v, 0.0))).collect();
        Self::from_triplets(d.len(), trips)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        self.indices[a..b].iter().copied().zip(self.values[a..b].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        match self.indices[a..b].binary_search(&j) {
            Ok(k) => self.values[a + k],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    pub fn triplets(&self) -> Vec<(usize, usize, C64)> {
        (0..self.n).flat_map(|i| self.row(i).map(move |(j, v)| (i, j, v))).collect()
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.n);
        (0..self.n).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect()
    }

    pub fn matmul(&self, other: &CsrMatrix) -> CsrMatrix {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut acc = vec![C64::new(0.0, 0.0); n];
        let mut touched = vec![false; n];
        let mut cols = Vec::new();
        let mut trips = Vec::new();
        for i in 0..n {
            for (k, a) in self.row(i) {
                for (j, b) in other.row(k) {
                    if !touched[j] {
                        touched[j] = true;
                        cols.push(j);
                    }
                    acc[j] += a * b;
                }
            }
            cols.sort_unstable();
            for &j in &cols {
                trips.push((i, j, acc[j]));
                acc[j] = C64::new(0.0, 0.0);
                touched[j] = false;
            }
            cols.clear();
        }
        CsrMatrix::from_triplets(n, trips)
    }

    pub fn add_scaled(&self, other: &CsrMatrix, s: C64) -> CsrMatrix {
        assert_eq!(self.n, other.n);
        let mut t = self.triplets();
        t.extend(other.triplets().into_iter().map(|(i, j, v)| (i, j, v * s)));
        CsrMatrix::from_triplets(self.n, t)
    }

    pub fn add(&self, other: &CsrMatrix) -> CsrMatrix {
        self.add_scaled(other, C64::new(1.0, 0.0))
    }

    pub fn sub(&self, other: &CsrMatrix) -> CsrMatrix {
        self.add_scaled(other, C64::new(-1.0, 0.0))
    }

    pub fn scale(&self, s: C64) -> CsrMatrix {
        let t = self.triplets().into_iter().map(|(i, j, v)| (i, j, v * s)).collect();
        CsrMatrix::from_triplets(self.n, t)
    }

    pub fn adjoint(&self) -> CsrMatrix {
        let t = self.triplets().into_iter().map(|(i, j, v)| (j, i, v.conj())).collect();
        CsrMatrix::from_triplets(self.n, t)
    }

    /// Largest `|M_ij - conj(M_ji)|` over stored entries.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    pub fn bandwidth(&self) -> usize {
        (0..self.n).flat_map(|i| self.row(i).map(move |(j, _)| i.abs_diff(j))).max().unwrap_or(0)
    }

    /// Euclidean norms of all columns, i.e. `‖M δ_j‖` for every basis vector.
    pub fn column_norms(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.n];
        for (_, j, v) in self.triplets() {
            s[j] += v.norm_sqr();
        }
        s.into_iter().map(f64::sqrt).collect()
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for (i, j, v) in self.triplets() {
            m[(i, j)] = v;
        }
        m
    }

    pub fn from_dense(m: &DMatrix<C64>) -> CsrMatrix {
        assert_eq!(m.nrows(), m.ncols());
        let mut t = Vec::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if m[(i, j)] != C64::new(0.0, 0.0) {
                    t.push((i, j, m[(i, j)]));
                }
            }
        }
        CsrMatrix::from_triplets(m.nrows(), t)
    }

    /// Plain-text dump: header `dim nnz`, then `row col re im` per line.
    pub fn write_triplets<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{} {}", self.n, self.nnz())?;
        for (i, j, v) in self.triplets() {
            writeln!(w, "{} {} {:e} {:e}", i, j, v.re, v.im)?;
        }
        Ok(())
    }

    pub fn read_triplets(text: &str) -> Option<CsrMatrix> {
        let mut lines = text.lines();
        let mut head = lines.next()?.split_whitespace();
        let n: usize = head.next()?.parse().ok()?;
        let mut t = Vec::new();
        for line in lines.filter(|l| !l.trim().is_empty()) {
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 4 {
                return None;
            }
            t.push((
                f[0].parse().ok()?,
                f[1].parse().ok()?,
                C64::new(f[2].parse().ok()?, f[3].parse().ok()?),
            ));
        }
        Some(CsrMatrix::from_triplets(n, t))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn duplicates_sum_and_zeros_drop() {
        let m = CsrMatrix::from_triplets(2, vec![(0, 1, c(1.0)), (0, 1, c(-1.0)), (1, 0, c(2.0)), (1, 0, c(0.5))]);
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.get(1, 0), c(2.5));
        assert_eq!(m.get(0, 1), c(0.0));
    }

    #[test]
    fn matmul_matches_dense() {
        let a = CsrMatrix::from_triplets(3, vec![(0, 1, c(2.0)), (1, 2, C64::new(0.0, 1.0)), (2, 0, c(-1.0)), (1, 1, c(3.0))]);
        let b = a.adjoint();
        let ab = a.matmul(&b).to_dense();
        let dense = a.to_dense() * b.to_dense();
        assert!((ab - dense).norm() == 0.0);
    }

    #[test]
    fn triplet_text_roundtrip() {
        let a = CsrMatrix::from_triplets(3, vec![(0, 2, C64::new(0.5, -1.25)), (2, 2, c(7.0))]);
        let mut buf = Vec::new();
        a.write_triplets(&mut buf).unwrap();
        let back = CsrMatrix::read_triplets(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(a, back);
    }
}
