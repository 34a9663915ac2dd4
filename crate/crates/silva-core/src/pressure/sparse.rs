//! Compressed sparse row storage for the symmetric pressure operator.

use rayon::prelude::*;

/// Symmetric sparse matrix assembled from unordered facet pairs, so
/// `B_ij == B_ji` holds exactly (each pair is written once to both sides).
/// Rows are sorted by column; the diagonal carries the row sum of the facet
/// weights and off-diagonals their negatives, giving exact zero row sums.
#[derive(Clone, Debug)]
pub struct SparseSymmetricOperator {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSymmetricOperator {
    /// Assemble from unordered neighbor pairs `(i, j, w)` with `i < j`:
    /// every pair contributes `+w` to both diagonals and `-w` to both
    /// off-diagonal slots.
    pub fn from_pair_weights(n: usize, pairs: &[(usize, usize, f64)]) -> Self {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for i in 0..n {
            rows[i].push((i, 0.0));
        }
        for &(i, j, w) in pairs {
            debug_assert!(i < j && j < n);
            rows[i][0].1 += w;
            rows[j][0].1 += w;
            rows[i].push((j, -w));
            rows[j].push((i, -w));
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for row in &mut rows {
            row.sort_unstable_by_key(|&(c, _)| c);
            for &(c, v) in row.iter() {
                col_idx.push(c);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        SparseSymmetricOperator { n, row_ptr, col_idx, values }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn mean_nnz_per_row(&self) -> f64 {
        self.nnz() as f64 / self.n as f64
    }

    /// Entries of row `i` as `(column, value)` pairs, sorted by column.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()]
            .iter()
            .copied()
            .zip(self.values[r].iter().copied())
    }

    pub fn diagonal(&self, i: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == i).map_or(0.0, |(_, v)| v)
    }

    /// `y = A x`, rows evaluated in parallel (each row writes its own slot).
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        y.par_iter_mut().enumerate().for_each(|(i, yi)| {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *yi = acc;
        });
    }

    pub fn apply_alloc(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.apply(x, &mut y);
        y
    }

    /// Quadratic form `xᵀ A x` (sequential, deterministic order).
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let mut q = 0.0;
        for i in 0..self.n {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            q += x[i] * acc;
        }
        q
    }

    /// Exact structural symmetry check (test/diagnostic use).
    pub fn is_symmetric(&self) -> bool {
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                let vt = self
                    .row(j)
                    .find(|&(c, _)| c == i)
                    .map(|(_, v)| v);
                if vt != Some(v) {
                    return false;
                }
            }
        }
        true
    }

    /// Max absolute row sum relative to the row's 1-norm.
    pub fn max_relative_row_sum(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            let mut sum = 0.0;
            let mut norm = 0.0;
            for (_, v) in self.row(i) {
                sum += v;
                norm += v.abs();
            }
            if norm > 0.0 {
                worst = worst.max(sum.abs() / norm);
            }
        }
        worst
    }
}
