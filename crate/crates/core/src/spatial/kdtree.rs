//! Static k-d tree over a row-major point buffer.
//!
//! Queries are exact: `nearest` ranks by squared Euclidean distance with ties
//! broken by ascending index, and `within` returns every point whose Euclidean
//! distance is `<=` the radius.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::cloud::{distance, squared_distance};

const LEAF_SIZE: usize = 16;

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        axis: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone)]
pub struct KdTree {
    dim: usize,
    coords: Vec<f64>,
    // Point ids in leaf order; leaves reference contiguous ranges.
    order: Vec<usize>,
    nodes: Vec<Node>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Candidate {
    dist_sq: f64,
    index: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist_sq
            .total_cmp(&other.dist_sq)
            .then(self.index.cmp(&other.index))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl KdTree {
    /// Builds a tree over `coords.len() / dim` points.
    pub fn new(dim: usize, coords: Vec<f64>) -> Self {
        assert!(dim > 0 && coords.len().is_multiple_of(dim));
        let n = coords.len() / dim;
        let mut tree = Self {
            dim,
            coords,
            order: (0..n).collect(),
            nodes: Vec::new(),
        };
        if n > 0 {
            tree.build(0, n);
        }
        tree
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let axis = self.widest_axis(start, end);
        let mid = start + (end - start) / 2;
        {
            let (dim, coords) = (self.dim, &self.coords);
            self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
                coords[a * dim + axis].total_cmp(&coords[b * dim + axis])
            });
        }
        let value = self.coords[self.order[mid] * self.dim + axis];
        self.nodes.push(Node::Leaf { start, end });
        let left = self.build(start, mid);
        let right = self.build(mid, end);
        self.nodes[id] = Node::Split {
            axis,
            value,
            left,
            right,
        };
        id
    }

    fn widest_axis(&self, start: usize, end: usize) -> usize {
        (0..self.dim)
            .map(|axis| {
                let (lo, hi) = self.order[start..end].iter().fold(
                    (f64::INFINITY, f64::NEG_INFINITY),
                    |(lo, hi), &i| {
                        let v = self.coords[i * self.dim + axis];
                        (lo.min(v), hi.max(v))
                    },
                );
                (axis, hi - lo)
            })
            .fold((0, f64::NEG_INFINITY), |best, cur| {
                if cur.1 > best.1 {
                    cur
                } else {
                    best
                }
            })
            .0
    }

    /// The `k` nearest points to `q` as `(index, squared distance)`, closest
    /// first. Returns fewer than `k` entries only when the tree is smaller.
    pub fn nearest(&self, q: &[f64], k: usize) -> Vec<(usize, f64)> {
        let mut heap = BinaryHeap::with_capacity(k + 1);
        if k > 0 && !self.is_empty() {
            self.nearest_rec(0, q, k, &mut heap);
        }
        heap.into_sorted_vec()
            .into_iter()
            .map(|c| (c.index, c.dist_sq))
            .collect()
    }

    fn nearest_rec(&self, node: usize, q: &[f64], k: usize, heap: &mut BinaryHeap<Candidate>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    let cand = Candidate {
                        dist_sq: squared_distance(q, self.point(i)),
                        index: i,
                    };
                    if heap.len() < k {
                        heap.push(cand);
                    } else if cand < *heap.peek().unwrap() {
                        heap.pop();
                        heap.push(cand);
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = q[axis] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.nearest_rec(near, q, k, heap);
                // Equal-distance points may sit on either side, so only a strictly
                // larger plane distance prunes.
                let plane_sq = diff * diff;
                if heap.len() < k || plane_sq <= heap.peek().unwrap().dist_sq {
                    self.nearest_rec(far, q, k, heap);
                }
            }
        }
    }

    /// Indices of all points with `distance(q, p) <= radius`, ascending.
    pub fn within(&self, q: &[f64], radius: f64) -> Vec<usize> {
        let mut out = Vec::new();
        if !self.is_empty() && radius >= 0.0 {
            // Plane distances are compared with slack; the final test is exact.
            let prune = radius * (1.0 + 1e-12) + f64::MIN_POSITIVE;
            self.within_rec(0, q, radius, prune, &mut out);
        }
        out.sort_unstable();
        out
    }

    fn within_rec(&self, node: usize, q: &[f64], radius: f64, prune: f64, out: &mut Vec<usize>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                out.extend(
                    self.order[start..end]
                        .iter()
                        .copied()
                        .filter(|&i| distance(q, self.point(i)) <= radius),
                );
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = q[axis] - value;
                if diff <= prune {
                    self.within_rec(left, q, radius, prune, out);
                }
                if diff >= -prune {
                    self.within_rec(right, q, radius, prune, out);
                }
            }
        }
    }
}
