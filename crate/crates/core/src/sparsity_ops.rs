//! Shrinkage maps, supports and the projection that turns `beta_pre` into
//! `beta_les`.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::grid_graph::DifferenceOperator;

/// Sorted row indices of `D` (0-based): vertex rows `< p`, edge rows `>= p`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupportSet {
    indices: Vec<usize>,
    p: usize,
    rows: usize,
}

impl SupportSet {
    pub fn new(mut indices: Vec<usize>, p: usize, rows: usize) -> Result<Self> {
        indices.sort_unstable();
        indices.dedup();
        if let Some(&last) = indices.last() {
            if last >= rows {
                return Err(Error::InvalidParameter(format!(
                    "support index {last} out of range for {rows} rows"
                )));
            }
        }
        Ok(SupportSet { indices, p, rows })
    }

    pub fn empty(p: usize, rows: usize) -> Self {
        SupportSet {
            indices: Vec::new(),
            p,
            rows,
        }
    }

    pub fn full(p: usize, rows: usize) -> Self {
        SupportSet {
            indices: (0..rows).collect(),
            p,
            rows,
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn contains(&self, index: usize) -> bool {
        self.indices.binary_search(&index).is_ok()
    }

    /// Selected vertex rows.
    pub fn vertices(&self) -> &[usize] {
        let split = self.indices.partition_point(|&i| i < self.p);
        &self.indices[..split]
    }

    /// Selected edge rows, as edge numbers (`row - p`).
    pub fn edges(&self) -> impl Iterator<Item = usize> + '_ {
        let split = self.indices.partition_point(|&i| i < self.p);
        self.indices[split..].iter().map(move |&i| i - self.p)
    }

    /// Rows not in the support.
    pub fn complement(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.rows - self.indices.len());
        let mut it = self.indices.iter().peekable();
        for r in 0..self.rows {
            if it.peek() == Some(&&r) {
                it.next();
            } else {
                out.push(r);
            }
        }
        out
    }
}

/// Signed soft threshold at 1.
pub fn shrink(x: f64) -> f64 {
    x.signum() * (x.abs() - 1.0).max(0.0)
}

/// Nonnegative threshold at 1.
pub fn shrink_nonneg(x: f64) -> f64 {
    (x - 1.0).max(0.0)
}

pub fn shrink_vec(x: &DVector<f64>) -> DVector<f64> {
    x.map(shrink)
}

pub fn shrink_nonneg_vec(x: &DVector<f64>) -> DVector<f64> {
    x.map(shrink_nonneg)
}

/// Indices with `|gamma_i| > tol`.
pub fn support(gamma: &DVector<f64>, p: usize, tol: f64) -> Result<SupportSet> {
    if !(tol >= 0.0) {
        return Err(Error::InvalidParameter(format!("support tolerance must be >= 0, got {tol}")));
    }
    if p > gamma.len() {
        return Err(Error::DimensionMismatch {
            context: "support vertex block",
            expected: gamma.len(),
            found: p,
        });
    }
    let indices = gamma
        .iter()
        .enumerate()
        .filter(|(_, v)| v.abs() > tol)
        .map(|(i, _)| i)
        .collect();
    Ok(SupportSet {
        indices,
        p,
        rows: gamma.len(),
    })
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // Smaller root wins, so roots do not depend on edge order.
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Euclidean projection of `beta` onto `ker(D_{S^c})`.
///
/// For `D = [I; rho D_G]` the kernel consists of vectors that vanish on the
/// off-support vertices and are equal across every off-support edge (when
/// `rho > 0`). The projection therefore averages `beta` over each connected
/// component of the off-support edge graph, and zeroes components that
/// contain an off-support vertex. The result is exact; no pseudoinverse
/// cutoff is involved.
pub fn project_onto_support(beta: &DVector<f64>, op: &DifferenceOperator, s: &SupportSet) -> Result<DVector<f64>> {
    check_len("projection input", op.p(), beta.len())?;
    check_len("support rows", op.rows(), s.rows())?;
    let p = op.p();
    let mut uf = UnionFind::new(p);
    if op.rho() != 0.0 {
        let mut selected = s.edges().peekable();
        for (e, &(i, j)) in op.edges().iter().enumerate() {
            if selected.peek() == Some(&e) {
                selected.next();
                continue;
            }
            uf.union(i, j);
        }
    }
    let mut sum = vec![0.0; p];
    let mut count = vec![0usize; p];
    let mut pinned = vec![false; p];
    let mut in_support = vec![false; p];
    for &v in s.vertices() {
        in_support[v] = true;
    }
    for i in 0..p {
        let root = uf.find(i);
        sum[root] += beta[i];
        count[root] += 1;
        if !in_support[i] {
            pinned[root] = true;
        }
    }
    Ok(DVector::from_fn(p, |i, _| {
        let root = uf.find(i);
        if pinned[root] {
            0.0
        } else {
            sum[root] / count[root] as f64
        }
    }))
}

/// Vertices where `beta_les` is zero and `beta_pre` is negative, the
/// `top_k` largest by magnitude, returned in ascending index order.
pub fn identify_procedural_bias(beta_pre: &DVector<f64>, beta_les: &DVector<f64>, top_k: usize) -> Result<Vec<usize>> {
    check_len("beta_les", beta_pre.len(), beta_les.len())?;
    let mut candidates: Vec<usize> = (0..beta_pre.len())
        .filter(|&i| beta_les[i] == 0.0 && beta_pre[i] < 0.0)
        .collect();
    candidates.sort_by(|&a, &b| {
        beta_pre[a]
            .abs()
            .total_cmp(&beta_pre[b].abs())
            .reverse()
            .then(a.cmp(&b))
    });
    candidates.truncate(top_k);
    candidates.sort_unstable();
    Ok(candidates)
}
