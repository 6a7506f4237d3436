//! Exact k-nearest-neighbor index over collocation points.
//!
//! Distances are Euclidean on coordinates affinely normalized per axis to
//! [0,1], so space and time axes contribute comparably. Ties are broken by
//! point index, which makes neighbor sets well-defined and lets the kd-tree
//! match a brute-force scan exactly.

use ndarray::Array2;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct NeighborIndex {
    /// Per point: the k nearest point indices (self included), sorted by
    /// (distance, index) ascending.
    pub neighbors: Vec<Vec<u32>>,
    pub k: usize,
}

struct KdTree {
    /// Point indices arranged so that each recursive range is split around
    /// its median on the range's axis.
    order: Vec<u32>,
    dims: usize,
}

fn coord(data: &[f64], dims: usize, idx: u32, axis: usize) -> f64 {
    data[idx as usize * dims + axis]
}

impl KdTree {
    fn build(data: &[f64], dims: usize, n: usize) -> Self {
        let mut order: Vec<u32> = (0..n as u32).collect();
        let mut stack = vec![(0usize, n, 0usize)];
        while let Some((lo, hi, axis)) = stack.pop() {
            if hi - lo <= 1 {
                continue;
            }
            let mid = (lo + hi) / 2;
            order[lo..hi].select_nth_unstable_by(mid - lo, |&a, &b| {
                coord(data, dims, a, axis)
                    .total_cmp(&coord(data, dims, b, axis))
                    .then(a.cmp(&b))
            });
            let next = (axis + 1) % dims;
            stack.push((lo, mid, next));
            stack.push((mid + 1, hi, next));
        }
        KdTree { order, dims }
    }
}

/// Bounded max-heap of (distance², index) candidates.
struct Best {
    k: usize,
    heap: Vec<(f64, u32)>,
}

impl Best {
    fn new(k: usize) -> Self {
        Best {
            k,
            heap: Vec::with_capacity(k + 1),
        }
    }

    fn worse(a: (f64, u32), b: (f64, u32)) -> bool {
        a.0 > b.0 || (a.0 == b.0 && a.1 > b.1)
    }

    fn push(&mut self, cand: (f64, u32)) {
        if self.heap.len() < self.k {
            self.heap.push(cand);
            let mut i = self.heap.len() - 1;
            while i > 0 {
                let p = (i - 1) / 2;
                if Self::worse(self.heap[i], self.heap[p]) {
                    self.heap.swap(i, p);
                    i = p;
                } else {
                    break;
                }
            }
        } else if Self::worse(self.heap[0], cand) {
            self.heap[0] = cand;
            let mut i = 0;
            loop {
                let (l, r) = (2 * i + 1, 2 * i + 2);
                let mut largest = i;
                if l < self.heap.len() && Self::worse(self.heap[l], self.heap[largest]) {
                    largest = l;
                }
                if r < self.heap.len() && Self::worse(self.heap[r], self.heap[largest]) {
                    largest = r;
                }
                if largest == i {
                    break;
                }
                self.heap.swap(i, largest);
                i = largest;
            }
        }
    }

    fn bound(&self) -> (f64, u32) {
        if self.heap.len() < self.k {
            (f64::INFINITY, u32::MAX)
        } else {
            self.heap[0]
        }
    }
}

fn query(
    tree: &KdTree,
    data: &[f64],
    q: &[f64],
    lo: usize,
    hi: usize,
    axis: usize,
    best: &mut Best,
) {
    if lo >= hi {
        return;
    }
    let mid = (lo + hi) / 2;
    let idx = tree.order[mid];
    let mut d2 = 0.0;
    for a in 0..tree.dims {
        let diff = coord(data, tree.dims, idx, a) - q[a];
        d2 += diff * diff;
    }
    best.push((d2, idx));

    let next = (axis + 1) % tree.dims;
    let split = coord(data, tree.dims, idx, axis);
    let delta = q[axis] - split;
    let (near, far) = if delta < 0.0 {
        ((lo, mid), (mid + 1, hi))
    } else {
        ((mid + 1, hi), (lo, mid))
    };
    query(tree, data, q, near.0, near.1, next, best);
    // the far side can only help if the splitting plane is within the
    // current worst distance (ties included, because of index tie-breaks)
    if delta * delta <= best.bound().0 {
        query(tree, data, q, far.0, far.1, next, best);
    }
}

/// Per-axis [0,1] normalization; constant axes map to 0.
fn normalize(points: &Array2<f64>) -> Vec<f64> {
    let (n, dims) = points.dim();
    let mut data = vec![0.0; n * dims];
    for a in 0..dims {
        let col = points.column(a);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &v in col {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        let span = hi - lo;
        for i in 0..n {
            data[i * dims + a] = if span > 0.0 {
                (points[[i, a]] - lo) / span
            } else {
                0.0
            };
        }
    }
    data
}

pub fn build_neighbor_index(points: &Array2<f64>, k: usize) -> Result<NeighborIndex> {
    let (n, dims) = points.dim();
    if k == 0 || k > n {
        return Err(Error::InvalidInput(format!(
            "k = {k} must be in 1..={n}"
        )));
    }
    if dims == 0 {
        return Err(Error::InvalidInput("points need at least one axis".into()));
    }
    let data = normalize(points);
    let tree = KdTree::build(&data, dims, n);
    let mut neighbors = Vec::with_capacity(n);
    for i in 0..n {
        let q = &data[i * dims..(i + 1) * dims];
        let mut best = Best::new(k);
        query(&tree, &data, q, 0, n, 0, &mut best);
        let mut found: Vec<(f64, u32)> = best.heap;
        found.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        neighbors.push(found.into_iter().map(|(_, idx)| idx).collect());
    }
    Ok(NeighborIndex { neighbors, k })
}

#[cfg(test)]
pub fn brute_force_neighbors(points: &Array2<f64>, k: usize) -> Vec<Vec<u32>> {
    let (n, dims) = points.dim();
    let data = normalize(points);
    (0..n)
        .map(|i| {
            let mut dists: Vec<(f64, u32)> = (0..n)
                .map(|j| {
                    let mut d2 = 0.0;
                    for a in 0..dims {
                        let diff = data[i * dims + a] - data[j * dims + a];
                        d2 += diff * diff;
                    }
                    (d2, j as u32)
                })
                .collect();
            dists.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            dists.truncate(k);
            dists.into_iter().map(|(_, j)| j).collect()
        })
        .collect()
}
