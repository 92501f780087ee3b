//! Spatial indexing: exact nearest-neighbor search and the greedy ball cover.

mod cover;
mod kdtree;

pub use cover::{build_cover, Region, RegionCover};
pub use kdtree::KdTree;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};

/// Indices of the `k` training points nearest to `q`, ties broken by index.
pub fn knn(tree: &KdTree, q: &[f64], k: usize) -> Result<Vec<usize>> {
    if k > tree.len() {
        return Err(Error::InsufficientPoints {
            requested: k,
            available: tree.len(),
        });
    }
    Ok(tree.nearest(q, k).into_iter().map(|(i, _)| i).collect())
}

/// Tree over the points of a cloud, indexed like the cloud.
pub fn index_cloud(cloud: &PointCloud) -> KdTree {
    KdTree::new(cloud.dim(), cloud.coords().to_vec())
}
