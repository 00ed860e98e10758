//! Sparse symmetric LDLᵀ factorization with 1×1 pivots.
//!
//! The symbolic phase (minimum-degree ordering, elimination tree, column
//! counts) runs once per sparsity pattern; the numeric phase is repeated
//! for every new set of values. The number of negative pivots gives the
//! inertia of the matrix, which the interior-point solver uses to decide
//! how much regularization a KKT system needs.

use std::collections::BTreeSet;

const NONE: usize = usize::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Inertia {
    pub positive: usize,
    pub negative: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorError {
    /// A pivot vanished (relative to the matrix scale) at the given
    /// permuted position.
    ZeroPivot(usize),
    /// Non-finite input or pivot.
    NotFinite,
}

/// Minimum-degree elimination order of the graph whose edges are the
/// off-diagonal entries. Ties are broken by node index.
pub fn minimum_degree_order(n: usize, entries: &[(usize, usize)]) -> Vec<usize> {
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(i, j) in entries {
        if i != j {
            adj[i].push(j);
            adj[j].push(i);
        }
    }
    for a in &mut adj {
        a.sort_unstable();
        a.dedup();
    }
    let mut queue: BTreeSet<(usize, usize)> = (0..n).map(|v| (adj[v].len(), v)).collect();
    let mut order = Vec::with_capacity(n);
    let mut merged = Vec::new();
    while let Some((_, v)) = queue.pop_first() {
        order.push(v);
        let nbrs = std::mem::take(&mut adj[v]);
        for &u in &nbrs {
            queue.remove(&(adj[u].len(), u));
            // adj[u] := (adj[u] ∪ nbrs) \ {u, v}
            merged.clear();
            let (a, b) = (&adj[u], &nbrs);
            let (mut p, mut q) = (0, 0);
            while p < a.len() || q < b.len() {
                let next = match (a.get(p), b.get(q)) {
                    (Some(&x), Some(&y)) if x == y => {
                        p += 1;
                        q += 1;
                        x
                    }
                    (Some(&x), Some(&y)) if x < y => {
                        p += 1;
                        x
                    }
                    (Some(&x), None) => {
                        p += 1;
                        x
                    }
                    (_, Some(&y)) => {
                        q += 1;
                        y
                    }
                    (None, None) => unreachable!(),
                };
                if next != u && next != v {
                    merged.push(next);
                }
            }
            std::mem::swap(&mut adj[u], &mut merged);
            queue.insert((adj[u].len(), u));
        }
    }
    order
}

/// Sparse LDLᵀ factorization of a symmetric matrix given by its lower
/// triangle.
#[derive(Debug, Clone)]
pub struct Ldl {
    n: usize,
    /// `perm[k]` = original index of permuted position `k`.
    perm: Vec<usize>,
    // upper-triangular CSC of the permuted matrix
    ap: Vec<usize>,
    ai: Vec<usize>,
    ax: Vec<f64>,
    /// Input entry `k` accumulates into `ax[map[k]]`.
    map: Vec<usize>,
    diag_map: Vec<usize>,
    etree: Vec<usize>,
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<f64>,
    d: Vec<f64>,
    dinv: Vec<f64>,
    // workspace
    y_vals: Vec<f64>,
    y_idx: Vec<usize>,
    y_mark: Vec<bool>,
    elim: Vec<usize>,
    next_in_col: Vec<usize>,
    row_scale: Vec<f64>,
}

impl Ldl {
    /// Symbolic analysis of an `n × n` pattern given as lower-triangle
    /// `(row, col)` entries with `row >= col`. Duplicates are allowed and
    /// are summed; diagonal slots are added where missing.
    pub fn new(n: usize, entries: &[(usize, usize)]) -> Self {
        let perm = minimum_degree_order(n, entries);
        let mut iperm = vec![0; n];
        for (k, &p) in perm.iter().enumerate() {
            iperm[p] = k;
        }
        // permuted upper entries (row <= col), one per input entry plus diagonals
        let mut upper: Vec<(usize, usize)> = entries
            .iter()
            .map(|&(i, j)| {
                let (a, b) = (iperm[i], iperm[j]);
                (a.min(b), a.max(b))
            })
            .collect();
        upper.extend((0..n).map(|k| (k, k)));
        let mut sorted: Vec<(usize, usize)> = upper.iter().map(|&(r, c)| (c, r)).collect();
        sorted.sort_unstable();
        sorted.dedup();
        let mut ap = vec![0; n + 1];
        let mut ai = Vec::with_capacity(sorted.len());
        for &(c, r) in &sorted {
            ap[c + 1] += 1;
            ai.push(r);
        }
        for c in 0..n {
            ap[c + 1] += ap[c];
        }
        let position = |r: usize, c: usize| -> usize {
            let col = &ai[ap[c]..ap[c + 1]];
            ap[c] + col.binary_search(&r).expect("entry in pattern")
        };
        let map: Vec<usize> = upper[..entries.len()]
            .iter()
            .map(|&(r, c)| position(r, c))
            .collect();
        let diag_map: Vec<usize> = (0..n).map(|k| position(iperm[k], iperm[k])).collect();

        // elimination tree and column counts of L
        let mut etree = vec![NONE; n];
        let mut lnz = vec![0usize; n];
        let mut work = vec![NONE; n];
        for j in 0..n {
            work[j] = j;
            for &row in &ai[ap[j]..ap[j + 1]] {
                let mut i = row;
                while work[i] != j {
                    if etree[i] == NONE {
                        etree[i] = j;
                    }
                    lnz[i] += 1;
                    work[i] = j;
                    i = etree[i];
                }
            }
        }
        let mut lp = vec![0; n + 1];
        for i in 0..n {
            lp[i + 1] = lp[i] + lnz[i];
        }
        let nnz_l = lp[n];
        Ldl {
            n,
            perm,
            ax: vec![0.0; ai.len()],
            ap,
            ai,
            map,
            diag_map,
            etree,
            li: vec![0; nnz_l],
            lx: vec![0.0; nnz_l],
            lp,
            d: vec![0.0; n],
            dinv: vec![0.0; n],
            y_vals: vec![0.0; n],
            y_idx: vec![0; n],
            y_mark: vec![false; n],
            elim: vec![0; n],
            next_in_col: vec![0; n],
            row_scale: vec![0.0; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn factor_nnz(&self) -> usize {
        self.lp[self.n]
    }

    /// Numeric factorization of `values` (aligned with the constructor's
    /// `entries`) plus `diag_shift[i]` added to each diagonal entry.
    pub fn factor(&mut self, values: &[f64], diag_shift: &[f64]) -> Result<Inertia, FactorError> {
        self.ax.fill(0.0);
        for (&slot, &v) in self.map.iter().zip(values) {
            self.ax[slot] += v;
        }
        for (k, &shift) in diag_shift.iter().enumerate() {
            self.ax[self.diag_map[k]] += shift;
        }
        // pivot k counts as zero when tiny against the largest entry of its row
        self.row_scale.fill(0.0);
        for c in 0..self.n {
            for p in self.ap[c]..self.ap[c + 1] {
                let v = self.ax[p];
                if !v.is_finite() {
                    return Err(FactorError::NotFinite);
                }
                let r = self.ai[p];
                self.row_scale[r] = self.row_scale[r].max(v.abs());
                self.row_scale[c] = self.row_scale[c].max(v.abs());
            }
        }

        let n = self.n;
        for i in 0..n {
            self.next_in_col[i] = self.lp[i];
        }
        let mut inertia = Inertia {
            positive: 0,
            negative: 0,
        };
        for k in 0..n {
            let mut nnz_y = 0;
            self.d[k] = 0.0;
            for p in self.ap[k]..self.ap[k + 1] {
                let bidx = self.ai[p];
                if bidx == k {
                    self.d[k] = self.ax[p];
                    continue;
                }
                self.y_vals[bidx] = self.ax[p];
                if !self.y_mark[bidx] {
                    self.y_mark[bidx] = true;
                    self.elim[0] = bidx;
                    let mut nnz_e = 1;
                    let mut next = self.etree[bidx];
                    while next != NONE && next < k {
                        if self.y_mark[next] {
                            break;
                        }
                        self.y_mark[next] = true;
                        self.elim[nnz_e] = next;
                        nnz_e += 1;
                        next = self.etree[next];
                    }
                    while nnz_e > 0 {
                        nnz_e -= 1;
                        self.y_idx[nnz_y] = self.elim[nnz_e];
                        nnz_y += 1;
                    }
                }
            }
            for i in (0..nnz_y).rev() {
                let c = self.y_idx[i];
                let tmp = self.next_in_col[c];
                let yc = self.y_vals[c];
                for j in self.lp[c]..tmp {
                    self.y_vals[self.li[j]] -= self.lx[j] * yc;
                }
                self.li[tmp] = k;
                let l = yc * self.dinv[c];
                self.lx[tmp] = l;
                self.d[k] -= yc * l;
                self.next_in_col[c] += 1;
                self.y_vals[c] = 0.0;
                self.y_mark[c] = false;
            }
            let dk = self.d[k];
            if !dk.is_finite() {
                return Err(FactorError::NotFinite);
            }
            if dk.abs() <= 1e-14 * self.row_scale[k] || dk == 0.0 {
                return Err(FactorError::ZeroPivot(k));
            }
            if dk > 0.0 {
                inertia.positive += 1;
            } else {
                inertia.negative += 1;
            }
            self.dinv[k] = 1.0 / dk;
        }
        Ok(inertia)
    }

    /// Solves `A x = b` in place using the last successful factorization.
    pub fn solve(&self, b: &mut [f64]) {
        let n = self.n;
        let mut y: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let yi = y[i];
            for j in self.lp[i]..self.lp[i + 1] {
                y[self.li[j]] -= self.lx[j] * yi;
            }
        }
        for i in 0..n {
            y[i] *= self.dinv[i];
        }
        for i in (0..n).rev() {
            let mut yi = y[i];
            for j in self.lp[i]..self.lp[i + 1] {
                yi -= self.lx[j] * y[self.li[j]];
            }
            y[i] = yi;
        }
        for (k, &p) in self.perm.iter().enumerate() {
            b[p] = y[k];
        }
    }
}

/// `y = A x` for a symmetric matrix stored as lower-triangle triplets.
pub fn sym_matvec(entries: &[(usize, usize)], values: &[f64], diag_shift: &[f64], x: &[f64], y: &mut [f64]) {
    for (yi, (&d, &xi)) in y.iter_mut().zip(diag_shift.iter().zip(x)) {
        *yi = d * xi;
    }
    for (&(i, j), &v) in entries.iter().zip(values) {
        y[i] += v * x[j];
        if i != j {
            y[j] += v * x[i];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_from(n: usize, entries: &[(usize, usize)], vals: &[f64]) -> Vec<Vec<f64>> {
        let mut a = vec![vec![0.0; n]; n];
        for (&(i, j), &v) in entries.iter().zip(vals) {
            a[i][j] += v;
            if i != j {
                a[j][i] += v;
            }
        }
        a
    }

    #[test]
    fn solves_indefinite_kkt() {
        // [[4 1 | 1 0],[1 3 | 0 1],[1 0 | -1e-2 0],[0 1 | 0 -1e-2]] style
        let entries = vec![(0, 0), (1, 0), (1, 1), (2, 0), (3, 1), (2, 2), (3, 3), (3, 2)];
        let vals = vec![4.0, 1.0, 3.0, 1.0, 1.0, -0.01, -0.02, 0.0];
        let mut ldl = Ldl::new(4, &entries);
        let inertia = ldl.factor(&vals, &[0.0; 4]).unwrap();
        assert_eq!(inertia, Inertia { positive: 2, negative: 2 });
        let a = dense_from(4, &entries, &vals);
        let xs = [1.0, -2.0, 0.5, 3.0];
        let mut b: Vec<f64> = (0..4).map(|i| (0..4).map(|j| a[i][j] * xs[j]).sum()).collect();
        ldl.solve(&mut b);
        for (u, v) in b.iter().zip(xs) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn detects_zero_pivot() {
        let entries = vec![(0, 0), (1, 0), (1, 1)];
        let mut ldl = Ldl::new(2, &entries);
        // singular [[1,1],[1,1]]
        assert!(matches!(ldl.factor(&[1.0, 1.0, 1.0], &[0.0; 2]), Err(FactorError::ZeroPivot(_))));
        assert!(ldl.factor(&[1.0, 1.0, 1.0], &[0.5, 0.0]).is_ok());
    }

    #[test]
    fn random_sparse_matches_dense() {
        use rand_like::Lcg;
        let mut rng = Lcg(12345);
        let n = 40;
        let mut entries = Vec::new();
        let mut vals = Vec::new();
        for i in 0..n {
            entries.push((i, i));
            vals.push(if i % 3 == 0 { -5.0 } else { 5.0 } + rng.next());
            for _ in 0..2 {
                let j = (rng.next().abs() * 1e6) as usize % n;
                if j < i {
                    entries.push((i, j));
                    vals.push(rng.next());
                }
            }
        }
        let mut ldl = Ldl::new(n, &entries);
        ldl.factor(&vals, &vec![0.0; n]).unwrap();
        let xs: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let mut b = vec![0.0; n];
        sym_matvec(&entries, &vals, &vec![0.0; n], &xs, &mut b);
        ldl.solve(&mut b);
        for (u, v) in b.iter().zip(&xs) {
            assert!((u - v).abs() < 1e-10);
        }
    }

    mod rand_like {
        pub struct Lcg(pub u64);
        impl Lcg {
            pub fn next(&mut self) -> f64 {
                self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((self.0 >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
            }
        }
    }
}
