use serde::{Deserialize, Serialize};

use super::KdTree;
use crate::cloud::{distance, PointCloud};

/// One ball of the cover, centered at a training point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub id: usize,
    pub center_index: usize,
    pub center: Vec<f64>,
    pub radius: f64,
    /// `floor(log2(radius / r_min))`.
    pub level: u32,
    pub members: Vec<usize>,
}

impl Region {
    pub fn contains(&self, q: &[f64]) -> bool {
        distance(q, &self.center) <= self.radius
    }
}

#[derive(Debug, Clone)]
struct Level {
    max_radius: f64,
    region_ids: Vec<usize>,
    centers: KdTree,
}

/// Greedy ball cover with a per-level center index for reverse range queries.
#[derive(Debug, Clone)]
pub struct RegionCover {
    dim: usize,
    regions: Vec<Region>,
    levels: Vec<Level>,
    r_min: f64,
    r_max: f64,
}

impl PartialEq for RegionCover {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.regions == other.regions
    }
}

/// Greedily covers the cloud with balls holding `h` points each.
///
/// The lowest-index uncovered point becomes the next center; its radius is the
/// distance to its `h`-th nearest training point, the center itself counting as
/// the first. `h > n` is clamped to `n`.
pub fn build_cover(cloud: &PointCloud, h: usize) -> RegionCover {
    let n = cloud.len();
    let h = h.clamp(1, n);
    let tree = super::index_cloud(cloud);
    let mut covered = vec![false; n];
    let mut next = 0;
    let mut min_positive: Option<f64> = None;
    let mut regions = Vec::new();

    while let Some(offset) = covered[next..].iter().position(|c| !c) {
        let center_index = next + offset;
        let center = cloud.point(center_index);
        let nearest = tree.nearest(center, h);
        let mut radius = nearest.last().map_or(0.0, |&(_, d2)| d2.sqrt());
        if radius <= 0.0 {
            radius = *min_positive.get_or_insert_with(|| smallest_positive_distance(cloud));
        }
        let members = tree.within(center, radius);
        for &m in &members {
            covered[m] = true;
        }
        // The center is always a member; nearest() guarantees it at distance 0.
        debug_assert!(covered[center_index]);
        regions.push(Region {
            id: regions.len(),
            center_index,
            center: center.to_vec(),
            radius,
            level: 0,
            members,
        });
        next = center_index + 1;
    }

    RegionCover::from_regions(cloud.dim(), regions)
}

/// Smallest nonzero pairwise distance, or 1 when every point coincides.
fn smallest_positive_distance(cloud: &PointCloud) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..cloud.len() {
        for j in (i + 1)..cloud.len() {
            let d = distance(cloud.point(i), cloud.point(j));
            if d > 0.0 && d < best {
                best = d;
            }
        }
    }
    if best.is_finite() {
        best
    } else {
        1.0
    }
}

fn level_of(radius: f64, r_min: f64) -> u32 {
    // Doubling by powers of two is exact, so each level spans [r_min 2^L, r_min 2^(L+1)).
    let mut level = 0;
    let mut upper = r_min * 2.0;
    while radius >= upper {
        level += 1;
        upper *= 2.0;
    }
    level
}

impl RegionCover {
    /// Assembles a cover from regions with valid ids, assigning levels and
    /// building the per-level center indexes.
    pub fn from_regions(dim: usize, mut regions: Vec<Region>) -> Self {
        let r_min = regions.iter().map(|r| r.radius).fold(f64::INFINITY, f64::min);
        let r_max = regions.iter().map(|r| r.radius).fold(0.0, f64::max);
        for r in &mut regions {
            r.level = level_of(r.radius, r_min);
        }
        let n_levels = regions.iter().map(|r| r.level as usize + 1).max().unwrap_or(0);
        let mut grouped: Vec<Vec<usize>> = vec![Vec::new(); n_levels];
        for r in &regions {
            grouped[r.level as usize].push(r.id);
        }
        let levels = grouped
            .into_iter()
            .filter(|ids| !ids.is_empty())
            .map(|region_ids| {
                let coords: Vec<f64> = region_ids
                    .iter()
                    .flat_map(|&id| regions[id].center.iter().copied())
                    .collect();
                let max_radius = region_ids
                    .iter()
                    .map(|&id| regions[id].radius)
                    .fold(0.0, f64::max);
                Level {
                    max_radius,
                    centers: KdTree::new(dim, coords),
                    region_ids,
                }
            })
            .collect();
        Self {
            dim,
            regions,
            levels,
            r_min,
            r_max,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn len(&self) -> usize {
        self.regions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }

    pub fn r_min(&self) -> f64 {
        self.r_min
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    /// Ids of all regions whose closed ball contains `q`, ascending.
    pub fn regions_containing(&self, q: &[f64]) -> Vec<usize> {
        let mut out = Vec::new();
        for level in &self.levels {
            for slot in level.centers.within(q, level.max_radius) {
                let id = level.region_ids[slot];
                if self.regions[id].contains(q) {
                    out.push(id);
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Ids of all regions with `|q - c_j| <= scale * r_j`, ascending.
    pub fn regions_within_scaled(&self, q: &[f64], scale: f64) -> Vec<usize> {
        let mut out = Vec::new();
        for level in &self.levels {
            for slot in level.centers.within(q, scale * level.max_radius) {
                let id = level.region_ids[slot];
                let r = &self.regions[id];
                if distance(q, &r.center) <= scale * r.radius {
                    out.push(id);
                }
            }
        }
        out.sort_unstable();
        out
    }
}
