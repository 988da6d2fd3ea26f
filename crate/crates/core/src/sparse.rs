//! Sparse assembly helpers and a symmetric envelope (skyline) LDLᵀ solver.
//!
//! Matrices are stored as [`nalgebra_sparse::CsrMatrix`]. The direct solver
//! reorders unknowns with reverse Cuthill-McKee, then factors inside the
//! row envelope. The factorization is fully deterministic and reports every
//! equation whose pivot vanished, which the FEM front ends turn into
//! rigid-mode or mechanism diagnostics.

use std::collections::VecDeque;

use nalgebra_sparse::CsrMatrix;

use crate::error::{Error, Result};

/// Relative pivot threshold: `d_i <= PIVOT_TOL * a_ii` counts as singular.
pub const PIVOT_TOL: f64 = 1e-12;

/// Triplet accumulator producing a CSR matrix with summed duplicates.
#[derive(Debug, Clone)]
pub struct Triplets {
    nrows: usize,
    ncols: usize,
    rows: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl Triplets {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            rows: Vec::new(),
            cols: Vec::new(),
            vals: Vec::new(),
        }
    }

    pub fn with_capacity(nrows: usize, ncols: usize, cap: usize) -> Self {
        Self {
            nrows,
            ncols,
            rows: Vec::with_capacity(cap),
            cols: Vec::with_capacity(cap),
            vals: Vec::with_capacity(cap),
        }
    }

    #[inline]
    pub fn push(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.nrows && j < self.ncols);
        self.rows.push(i);
        self.cols.push(j);
        self.vals.push(v);
    }

    /// Duplicates are summed in insertion order, so mirrored insertions of
    /// equal values give an exactly symmetric matrix.
    pub fn to_csr(&self) -> CsrMatrix<f64> {
        let mut order: Vec<usize> = (0..self.vals.len()).collect();
        order.sort_by_key(|&k| (self.rows[k], self.cols[k]));
        let mut offsets = vec![0usize; self.nrows + 1];
        let mut cols = Vec::with_capacity(order.len());
        let mut vals: Vec<f64> = Vec::with_capacity(order.len());
        let mut last = None;
        for k in order {
            let key = (self.rows[k], self.cols[k]);
            if last == Some(key) {
                *vals.last_mut().unwrap() += self.vals[k];
            } else {
                offsets[key.0 + 1] += 1;
                cols.push(key.1);
                vals.push(self.vals[k]);
                last = Some(key);
            }
        }
        for i in 0..self.nrows {
            offsets[i + 1] += offsets[i];
        }
        CsrMatrix::try_from_csr_data(self.nrows, self.ncols, offsets, cols, vals)
            .expect("sorted unique triplets form valid CSR data")
    }
}

/// `y = A x` for a CSR matrix and a plain slice.
pub fn mul_vec(a: &CsrMatrix<f64>, x: &[f64]) -> Vec<f64> {
    assert_eq!(a.ncols(), x.len());
    let mut y = vec![0.0; a.nrows()];
    for (i, row) in a.row_iter().enumerate() {
        let mut s = 0.0;
        for (&j, &v) in row.col_indices().iter().zip(row.values()) {
            s += v * x[j];
        }
        y[i] = s;
    }
    y
}

/// `y = Aᵀ x`.
pub fn mul_transpose_vec(a: &CsrMatrix<f64>, x: &[f64]) -> Vec<f64> {
    assert_eq!(a.nrows(), x.len());
    let mut y = vec![0.0; a.ncols()];
    for (i, row) in a.row_iter().enumerate() {
        let xi = x[i];
        for (&j, &v) in row.col_indices().iter().zip(row.values()) {
            y[j] += v * xi;
        }
    }
    y
}

/// Exact structural and numerical symmetry check.
pub fn is_symmetric(a: &CsrMatrix<f64>) -> bool {
    if a.nrows() != a.ncols() {
        return false;
    }
    let t = a.transpose();
    a.row_offsets() == t.row_offsets()
        && a.col_indices() == t.col_indices()
        && a.values() == t.values()
}

/// Extract the square submatrix on `keep` (in the given order).
pub fn principal_submatrix(a: &CsrMatrix<f64>, keep: &[usize]) -> CsrMatrix<f64> {
    let mut map = vec![usize::MAX; a.nrows()];
    for (new, &old) in keep.iter().enumerate() {
        map[old] = new;
    }
    let mut t = Triplets::new(keep.len(), keep.len());
    for (new_i, &old_i) in keep.iter().enumerate() {
        let row = a.row(old_i);
        for (&j, &v) in row.col_indices().iter().zip(row.values()) {
            let nj = map[j];
            if nj != usize::MAX {
                t.push(new_i, nj, v);
            }
        }
    }
    t.to_csr()
}

pub fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Reverse Cuthill-McKee ordering of the symmetric sparsity graph of `a`.
/// Returns `perm` with `perm[new] = old`.
pub fn reverse_cuthill_mckee(a: &CsrMatrix<f64>) -> Vec<usize> {
    let n = a.nrows();
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            a.row(i)
                .col_indices()
                .iter()
                .copied()
                .filter(|&j| j != i)
                .collect()
        })
        .collect();
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();

    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&i| (degree[i], i));

    for &start in &by_degree {
        if visited[start] {
            continue;
        }
        let root = pseudo_peripheral(start, &adj, &degree);
        visited[root] = true;
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            let mut nbrs: Vec<usize> = adj[u].iter().copied().filter(|&w| !visited[w]).collect();
            nbrs.sort_by_key(|&w| (degree[w], w));
            for w in nbrs {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

fn bfs_levels(root: usize, adj: &[Vec<usize>]) -> Vec<usize> {
    let mut level = vec![usize::MAX; adj.len()];
    level[root] = 0;
    let mut queue = VecDeque::from([root]);
    while let Some(u) = queue.pop_front() {
        for &w in &adj[u] {
            if level[w] == usize::MAX {
                level[w] = level[u] + 1;
                queue.push_back(w);
            }
        }
    }
    level
}

fn pseudo_peripheral(start: usize, adj: &[Vec<usize>], degree: &[usize]) -> usize {
    let mut root = start;
    let mut ecc = 0;
    for _ in 0..8 {
        let level = bfs_levels(root, adj);
        let far = level
            .iter()
            .copied()
            .filter(|&l| l != usize::MAX)
            .max()
            .unwrap_or(0);
        if far <= ecc && ecc > 0 {
            break;
        }
        ecc = far;
        let next = (0..adj.len())
            .filter(|&i| level[i] == far)
            .min_by_key(|&i| (degree[i], i))
            .unwrap_or(root);
        if next == root {
            break;
        }
        root = next;
    }
    root
}

/// Envelope LDLᵀ factorization of a symmetric positive-definite matrix.
#[derive(Debug, Clone)]
pub struct LdlSolver {
    n: usize,
    /// `perm[new] = old`.
    perm: Vec<usize>,
    /// First stored column of each permuted row.
    first: Vec<usize>,
    /// Offset of row `i`'s envelope in `lower`.
    offset: Vec<usize>,
    lower: Vec<f64>,
    diag: Vec<f64>,
}

impl LdlSolver {
    /// Factor `a` (full symmetric storage). Fails with [`Error::Singular`]
    /// listing every equation whose pivot was not safely positive.
    pub fn factor(a: &CsrMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::InvalidInput("LDL factorization needs a square matrix".into()));
        }
        let perm = reverse_cuthill_mckee(a);
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }

        let mut first: Vec<usize> = (0..n).collect();
        for old_i in 0..n {
            let i = inv[old_i];
            for &old_j in a.row(old_i).col_indices() {
                let j = inv[old_j];
                if j < first[i] {
                    first[i] = j;
                }
            }
        }
        let mut offset = vec![0; n + 1];
        for i in 0..n {
            offset[i + 1] = offset[i] + (i - first[i]);
        }
        let mut lower = vec![0.0; offset[n]];
        let mut diag = vec![0.0; n];
        for old_i in 0..n {
            let i = inv[old_i];
            let row = a.row(old_i);
            for (&old_j, &v) in row.col_indices().iter().zip(row.values()) {
                let j = inv[old_j];
                if j < i {
                    lower[offset[i] + (j - first[i])] += v;
                } else if j == i {
                    diag[i] += v;
                }
            }
        }
        let orig_diag = diag.clone();

        let mut singular = Vec::new();
        for i in 0..n {
            let fi = first[i];
            let oi = offset[i];
            for j in fi..i {
                let fj = first[j];
                let oj = offset[j];
                let k0 = fi.max(fj);
                let mut s = lower[oi + (j - fi)];
                for k in k0..j {
                    s -= lower[oi + (k - fi)] * lower[oj + (k - fj)];
                }
                lower[oi + (j - fi)] = s;
            }
            let mut d = diag[i];
            for j in fi..i {
                let g = lower[oi + (j - fi)];
                let l = g / diag[j];
                d -= g * l;
                lower[oi + (j - fi)] = l;
            }
            let scale = orig_diag[i].abs().max(f64::MIN_POSITIVE);
            if !(d > PIVOT_TOL * scale) || !d.is_finite() {
                singular.push(perm[i]);
                // Keep going to collect every offending equation.
                d = scale.max(1.0) * 1e30;
            }
            diag[i] = d;
        }
        if !singular.is_empty() {
            singular.sort_unstable();
            return Err(Error::Singular {
                equations: singular,
            });
        }
        Ok(Self {
            n,
            perm,
            first,
            offset,
            lower,
            diag,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of stored off-diagonal envelope entries.
    pub fn envelope_size(&self) -> usize {
        self.lower.len()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let mut y: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        // L y = b
        for i in 0..self.n {
            let fi = self.first[i];
            let oi = self.offset[i];
            let mut s = y[i];
            for k in fi..i {
                s -= self.lower[oi + (k - fi)] * y[k];
            }
            y[i] = s;
        }
        for i in 0..self.n {
            y[i] /= self.diag[i];
        }
        // Lᵀ x = y, column sweep
        for i in (0..self.n).rev() {
            let fi = self.first[i];
            let oi = self.offset[i];
            let yi = y[i];
            for k in fi..i {
                y[k] -= self.lower[oi + (k - fi)] * yi;
            }
        }
        let mut x = vec![0.0; self.n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }

    /// Solve with a few rounds of iterative refinement against `a`; returns
    /// the solution and its relative residual `|Ax-b|/|b|`.
    pub fn solve_refined(&self, a: &CsrMatrix<f64>, b: &[f64], rounds: usize) -> (Vec<f64>, f64) {
        let bnorm = norm2(b);
        let mut x = self.solve(b);
        let mut rel = relative_residual(a, &x, b, bnorm);
        for _ in 0..rounds {
            if rel <= 1e-14 {
                break;
            }
            let ax = mul_vec(a, &x);
            let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
            let dx = self.solve(&r);
            let cand: Vec<f64> = x.iter().zip(&dx).map(|(xi, di)| xi + di).collect();
            let cand_rel = relative_residual(a, &cand, b, bnorm);
            if cand_rel < rel {
                x = cand;
                rel = cand_rel;
            } else {
                break;
            }
        }
        (x, rel)
    }
}

fn relative_residual(a: &CsrMatrix<f64>, x: &[f64], b: &[f64], bnorm: f64) -> f64 {
    let ax = mul_vec(a, x);
    let r: f64 = ax
        .iter()
        .zip(b)
        .map(|(ai, bi)| (ai - bi) * (ai - bi))
        .sum::<f64>()
        .sqrt();
    if bnorm > 0.0 {
        r / bnorm
    } else {
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize, shift: f64) -> CsrMatrix<f64> {
        let mut t = Triplets::new(n, n);
        for i in 0..n {
            t.push(i, i, 2.0 + shift);
            if i + 1 < n {
                t.push(i, i + 1, -1.0);
                t.push(i + 1, i, -1.0);
            }
        }
        t.to_csr()
    }

    #[test]
    fn solves_tridiagonal_system() {
        let a = laplacian_1d(50, 0.1);
        let b: Vec<f64> = (0..50).map(|i| (i as f64).sin()).collect();
        let ldl = LdlSolver::factor(&a).unwrap();
        let (x, rel) = ldl.solve_refined(&a, &b, 2);
        assert!(rel < 1e-13, "{rel}");
        let ax = mul_vec(&a, &x);
        for (l, r) in ax.iter().zip(&b) {
            assert!((l - r).abs() < 1e-12);
        }
    }

    #[test]
    fn reports_singular_equations() {
        // Pure Neumann Laplacian: constants in the null space.
        let mut t = Triplets::new(3, 3);
        for (i, j, v) in [
            (0, 0, 1.0),
            (0, 1, -1.0),
            (1, 0, -1.0),
            (1, 1, 2.0),
            (1, 2, -1.0),
            (2, 1, -1.0),
            (2, 2, 1.0),
        ] {
            t.push(i, j, v);
        }
        match LdlSolver::factor(&t.to_csr()) {
            Err(Error::Singular { equations }) => assert_eq!(equations.len(), 1),
            other => panic!("expected singular, got {other:?}"),
        }
    }

    #[test]
    fn rcm_is_a_permutation() {
        let a = laplacian_1d(17, 0.0);
        let mut p = reverse_cuthill_mckee(&a);
        p.sort_unstable();
        assert_eq!(p, (0..17).collect::<Vec<_>>());
    }

    #[test]
    fn symmetry_check() {
        let a = laplacian_1d(5, 0.0);
        assert!(is_symmetric(&a));
        let mut t = Triplets::new(2, 2);
        t.push(0, 1, 1.0);
        assert!(!is_symmetric(&t.to_csr()));
    }
}
