//! Sparse `X X^T` factorization of the inverse of a small SPD matrix.

use std::collections::{BTreeMap, HashSet, VecDeque};

use crate::error::{Result, SemError};
use crate::linalg::CsrMatrix;

/// `A^{-1} = X X^T` with sparse, A-orthonormal columns of `X`.
#[derive(Debug, Clone)]
pub struct XxtFactor {
    dim: usize,
    order: Vec<usize>,
    /// Column `k` of `X` as `(row, value)` pairs.
    columns: Vec<Vec<(usize, f64)>>,
}

/// Factors `a` by A-orthogonalizing unit vectors taken in nested-dissection
/// order. Interior vertices of each half come before the separator, which
/// keeps the early columns local.
pub fn xxt_factor(a: &CsrMatrix) -> Result<XxtFactor> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "xxt_factor needs a square matrix");
    let order = nested_dissection_order(a);
    let mut columns: Vec<Vec<(usize, f64)>> = Vec::with_capacity(n);
    // for each row, the columns j with a nonzero (A x_j) there
    let mut ax_rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut work = vec![0.0; n];
    let mut touched: Vec<usize> = Vec::new();
    let mut mark = vec![false; n];
    let add = |work: &mut Vec<f64>, touched: &mut Vec<usize>, mark: &mut Vec<bool>, i: usize, v: f64| {
        if !mark[i] {
            mark[i] = true;
            touched.push(i);
        }
        work[i] += v;
    };
    for (k, &pivot_row) in order.iter().enumerate() {
        add(&mut work, &mut touched, &mut mark, pivot_row, 1.0);
        // x_k = e - sum_j (A x_j)[row] x_j
        for &(j, c) in &ax_rows[pivot_row] {
            for &(i, v) in &columns[j] {
                add(&mut work, &mut touched, &mut mark, i, -c * v);
            }
        }
        // second pass against the partially formed vector
        let mut coeffs: BTreeMap<usize, f64> = BTreeMap::new();
        for &i in &touched {
            let xi = work[i];
            if xi != 0.0 {
                for &(j, axji) in &ax_rows[i] {
                    *coeffs.entry(j).or_insert(0.0) += axji * xi;
                }
            }
        }
        for (j, c) in coeffs {
            for &(i, v) in &columns[j] {
                add(&mut work, &mut touched, &mut mark, i, -c * v);
            }
        }
        touched.sort_unstable();
        let x: Vec<(usize, f64)> = touched.iter().map(|&i| (i, work[i])).filter(|&(_, v)| v != 0.0).collect();
        for &i in &touched {
            work[i] = 0.0;
            mark[i] = false;
        }
        touched.clear();
        // w = A x
        for &(i, v) in &x {
            for (r, aij) in a.row(i) {
                // A symmetric: column i of A equals row i
                add(&mut work, &mut touched, &mut mark, r, aij * v);
            }
        }
        touched.sort_unstable();
        let w: Vec<(usize, f64)> = touched.iter().map(|&i| (i, work[i])).filter(|&(_, v)| v != 0.0).collect();
        for &i in &touched {
            work[i] = 0.0;
            mark[i] = false;
        }
        touched.clear();
        let mut pivot = 0.0;
        {
            let mut wi = w.iter().peekable();
            for &(i, xv) in &x {
                while let Some(&&(r, _)) = wi.peek() {
                    if r < i {
                        wi.next();
                    } else {
                        break;
                    }
                }
                if let Some(&&(r, wv)) = wi.peek() {
                    if r == i {
                        pivot += xv * wv;
                    }
                }
            }
        }
        if !(pivot > 0.0) || !pivot.is_finite() {
            return Err(SemError::Factorization {
                index: pivot_row,
                value: pivot,
            });
        }
        let s = 1.0 / pivot.sqrt();
        let x: Vec<(usize, f64)> = x.into_iter().map(|(i, v)| (i, v * s)).collect();
        let w: Vec<(usize, f64)> = w.into_iter().map(|(i, v)| (i, v * s)).collect();
        for &(i, v) in &w {
            ax_rows[i].push((k, v));
        }
        columns.push(x);
    }
    Ok(XxtFactor {
        dim: n,
        order,
        columns,
    })
}

impl XxtFactor {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Elimination order used to build the columns.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Nonzeros of `X` (the fill metric).
    pub fn nnz(&self) -> usize {
        self.columns.iter().map(Vec::len).sum()
    }

    /// `x = X (X^T b)`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.dim, "coarse vector length does not match the factor");
        let mut x = vec![0.0; self.dim];
        for col in &self.columns {
            let y: f64 = col.iter().map(|&(i, v)| v * b[i]).sum();
            if y != 0.0 {
                for &(i, v) in col {
                    x[i] += y * v;
                }
            }
        }
        x
    }

    /// Dense `X`, mainly for inspection in tests.
    pub fn to_dense(&self) -> crate::linalg::DenseMatrix {
        let mut x = crate::linalg::DenseMatrix::zeros(self.dim, self.dim);
        for (k, col) in self.columns.iter().enumerate() {
            for &(i, v) in col {
                x[(i, k)] = v;
            }
        }
        x
    }
}

/// Nested-dissection ordering of the graph of `a` by recursive level-set
/// bisection: each part is ordered before its separator.
pub fn nested_dissection_order(a: &CsrMatrix) -> Vec<usize> {
    let n = a.nrows();
    let adj: Vec<Vec<usize>> = (0..n).map(|i| a.row(i).map(|(j, _)| j).filter(|&j| j != i).collect()).collect();
    let mut order = Vec::with_capacity(n);
    let mut in_set = vec![false; n];
    dissect(&adj, (0..n).collect(), &mut in_set, &mut order);
    order
}

fn bfs_levels(adj: &[Vec<usize>], in_set: &[bool], start: usize) -> Vec<Vec<usize>> {
    let mut seen = HashSet::new();
    seen.insert(start);
    let mut levels = vec![vec![start]];
    let mut queue = VecDeque::from([start]);
    let mut current = Vec::new();
    let mut depth_end = 1;
    let mut popped = 0;
    while let Some(v) = queue.pop_front() {
        popped += 1;
        for &w in &adj[v] {
            if in_set[w] && seen.insert(w) {
                current.push(w);
                queue.push_back(w);
            }
        }
        if popped == depth_end {
            if current.is_empty() {
                break;
            }
            depth_end += current.len();
            let mut lvl = std::mem::take(&mut current);
            lvl.sort_unstable();
            levels.push(lvl);
        }
    }
    levels
}

fn dissect(adj: &[Vec<usize>], mut set: Vec<usize>, in_set: &mut [bool], order: &mut Vec<usize>) {
    if set.len() <= 3 {
        set.sort_unstable();
        order.extend(set);
        return;
    }
    set.sort_unstable();
    for &v in &set {
        in_set[v] = true;
    }
    // pseudo-peripheral start: restart from the far end while the depth grows
    let mut levels = bfs_levels(adj, in_set, set[0]);
    for _ in 0..2 {
        let far = levels.last().unwrap()[0];
        let next = bfs_levels(adj, in_set, far);
        if next.len() > levels.len() {
            levels = next;
        } else {
            break;
        }
    }
    let reached: usize = levels.iter().map(Vec::len).sum();
    for &v in &set {
        in_set[v] = false;
    }
    if reached < set.len() {
        // disconnected: split off the reached component
        let mut comp: Vec<usize> = levels.concat();
        comp.sort_unstable();
        let rest: Vec<usize> = set.iter().copied().filter(|v| comp.binary_search(v).is_err()).collect();
        dissect(adj, comp, in_set, order);
        dissect(adj, rest, in_set, order);
        return;
    }
    if levels.len() < 3 {
        order.extend(set);
        return;
    }
    // separator level at the median vertex count
    let mut acc = 0;
    let mut mid = levels.len() / 2;
    for (l, lvl) in levels.iter().enumerate() {
        acc += lvl.len();
        if 2 * acc >= set.len() {
            mid = l.clamp(1, levels.len() - 2);
            break;
        }
    }
    let left: Vec<usize> = levels[..mid].concat();
    let sep = levels[mid].clone();
    let right: Vec<usize> = levels[mid + 1..].concat();
    dissect(adj, left, in_set, order);
    dissect(adj, right, in_set, order);
    order.extend(sep);
}
