//! Banded LU factorization with partial pivoting, plus reverse Cuthill-McKee
//! ordering to keep the band narrow on externally supplied meshes.
//!
//! Storage follows the classic band layout: entry (i, j) lives at band row
//! kl + ku + i - j, with kl extra rows above the logical band so row swaps
//! during pivoting stay inside the allocation.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("matrix is singular at column {0}")]
    Singular(usize),
}

#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    /// Square matrix with `half_bandwidth` sub- and superdiagonals.
    pub fn new(n: usize, half_bandwidth: usize) -> Self {
        let kl = half_bandwidth.min(n.saturating_sub(1));
        let ku = kl;
        let rows = 2 * kl + ku + 1;
        BandMatrix {
            n,
            kl,
            ku,
            data: vec![0.0; rows * n],
        }
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn reset(&mut self) {
        self.data.fill(0.0);
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.n && j < self.n);
        debug_assert!(i + self.ku + self.kl >= j && j + self.kl >= i, "({i},{j}) outside band");
        (self.kl + self.ku + i - j) * self.n + j
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i + self.ku + self.kl >= j && j + self.kl >= i {
            self.data[self.idx(i, j)]
        } else {
            0.0
        }
    }

    /// In-place LU with partial pivoting; returns the pivot rows.
    pub fn factor(&mut self) -> Result<Vec<usize>, SolveError> {
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        let mut ipiv = vec![0usize; n];
        for j in 0..n {
            let pmax = (j + kl).min(n - 1);
            let mut piv = j;
            let mut pval = self.data[self.idx(j, j)].abs();
            for i in (j + 1)..=pmax {
                let v = self.data[self.idx(i, j)].abs();
                if v > pval {
                    piv = i;
                    pval = v;
                }
            }
            if pval == 0.0 {
                return Err(SolveError::Singular(j));
            }
            ipiv[j] = piv;
            let kmax = (j + ku + kl).min(n - 1);
            if piv != j {
                for k in j..=kmax {
                    let a = self.idx(j, k);
                    let b = self.idx(piv, k);
                    self.data.swap(a, b);
                }
            }
            let diag = self.data[self.idx(j, j)];
            for i in (j + 1)..=pmax {
                let l = self.data[self.idx(i, j)] / diag;
                let lij = self.idx(i, j);
                self.data[lij] = l;
                if l != 0.0 {
                    for k in (j + 1)..=kmax {
                        let up = self.data[self.idx(j, k)];
                        if up != 0.0 {
                            let t = self.idx(i, k);
                            self.data[t] -= l * up;
                        }
                    }
                }
            }
        }
        Ok(ipiv)
    }

    /// Solve with a factored matrix.
    pub fn solve(&self, ipiv: &[usize], rhs: &mut [f64]) {
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        for j in 0..n {
            let p = ipiv[j];
            if p != j {
                rhs.swap(j, p);
            }
            let xj = rhs[j];
            if xj != 0.0 {
                let imax = (j + kl).min(n - 1);
                for i in (j + 1)..=imax {
                    rhs[i] -= self.data[self.idx(i, j)] * xj;
                }
            }
        }
        for j in (0..n).rev() {
            let kmax = (j + ku + kl).min(n - 1);
            let mut s = rhs[j];
            for k in (j + 1)..=kmax {
                s -= self.data[self.idx(j, k)] * rhs[k];
            }
            rhs[j] = s / self.data[self.idx(j, j)];
        }
    }
}

/// Reverse Cuthill-McKee: returns `label` with `label[old] = new`. Adjacency
/// lists may contain duplicates; self-loops are ignored.
pub fn reverse_cuthill_mckee(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut queue = std::collections::VecDeque::new();

    let mut seeds: Vec<usize> = (0..n).collect();
    seeds.sort_by_key(|&v| (degree[v], v));

    for &seed in &seeds {
        if visited[seed] {
            continue;
        }
        visited[seed] = true;
        queue.push_back(seed);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adj[v]
                .iter()
                .copied()
                .filter(|&w| w != v && !visited[w])
                .collect();
            next.sort_by_key(|&w| (degree[w], w));
            next.dedup();
            for w in next {
                if !visited[w] {
                    visited[w] = true;
                    queue.push_back(w);
                }
            }
        }
    }

    let mut label = vec![0usize; n];
    for (new, &old) in order.iter().rev().enumerate() {
        label[old] = new;
    }
    label
}
