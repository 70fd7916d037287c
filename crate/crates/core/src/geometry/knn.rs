//! Exact k-nearest-neighbour queries. Results are ordered by
//! `(distance, reference index)` so the tree and the brute-force scan agree
//! exactly, ties included.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{sqrt, Vec3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: u32,
    pub dist: f64,
}

const LEAF: usize = 8;

#[derive(Debug, Clone)]
enum Node {
    Leaf { start: u32, end: u32 },
    Split { axis: u8, value: f64, left: u32, right: u32 },
}

#[derive(Debug, Clone)]
pub struct KdTree {
    points: Vec<Vec3>,
    order: Vec<u32>,
    nodes: Vec<Node>,
}

impl KdTree {
    pub fn build(points: &[Vec3]) -> KdTree {
        let mut tree = KdTree {
            points: points.to_vec(),
            order: (0..points.len() as u32).collect(),
            nodes: Vec::new(),
        };
        if !points.is_empty() {
            tree.build_range(0, points.len());
        }
        tree
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    fn build_range(&mut self, lo: usize, hi: usize) -> u32 {
        let id = self.nodes.len() as u32;
        if hi - lo <= LEAF {
            self.nodes.push(Node::Leaf {
                start: lo as u32,
                end: hi as u32,
            });
            return id;
        }
        let (mut mn, mut mx) = (Vec3::splat(f64::INFINITY), Vec3::splat(f64::NEG_INFINITY));
        for &i in &self.order[lo..hi] {
            mn = mn.min(self.points[i as usize]);
            mx = mx.max(self.points[i as usize]);
        }
        let ext = mx - mn;
        let axis = if ext.x >= ext.y && ext.x >= ext.z {
            0
        } else if ext.y >= ext.z {
            1
        } else {
            2
        };
        let mid = (lo + hi) / 2;
        let pts = &self.points;
        self.order[lo..hi].select_nth_unstable_by(mid - lo, |&a, &b| {
            pts[a as usize][axis].total_cmp(&pts[b as usize][axis])
        });
        let value = self.points[self.order[mid] as usize][axis];
        self.nodes.push(Node::Leaf { start: 0, end: 0 });
        let left = self.build_range(lo, mid);
        let right = self.build_range(mid, hi);
        self.nodes[id as usize] = Node::Split {
            axis: axis as u8,
            value,
            left,
            right,
        };
        id
    }

    /// The `k` nearest reference points to `q` (fewer if the tree is smaller).
    pub fn k_nearest(&self, q: Vec3, k: usize) -> Vec<Neighbor> {
        let mut best: Vec<(f64, u32)> = Vec::with_capacity(k + 1);
        if k > 0 && !self.points.is_empty() {
            self.search(0, q, k, &mut best);
        }
        best.into_iter()
            .map(|(d2, index)| Neighbor {
                index,
                dist: sqrt(d2),
            })
            .collect()
    }

    pub fn nearest(&self, q: Vec3) -> Option<Neighbor> {
        self.k_nearest(q, 1).into_iter().next()
    }

    /// Indices of reference points with `|p - q| <= r`, ascending.
    pub fn within_radius(&self, q: Vec3, r: f64) -> Vec<u32> {
        let mut out = Vec::new();
        if !self.points.is_empty() {
            self.collect_radius(0, q, r * r, &mut out);
        }
        out.sort_unstable();
        out
    }

    fn collect_radius(&self, node: u32, q: Vec3, r2: f64, out: &mut Vec<u32>) {
        match self.nodes[node as usize] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start as usize..end as usize] {
                    if self.points[i as usize].dist_sq(q) <= r2 {
                        out.push(i);
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = q[axis as usize] - value;
                if diff < 0.0 || diff * diff <= r2 {
                    self.collect_radius(left, q, r2, out);
                }
                if diff >= 0.0 || diff * diff <= r2 {
                    self.collect_radius(right, q, r2, out);
                }
            }
        }
    }

    fn search(&self, node: u32, q: Vec3, k: usize, best: &mut Vec<(f64, u32)>) {
        match self.nodes[node as usize] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start as usize..end as usize] {
                    let cand = (self.points[i as usize].dist_sq(q), i);
                    insert(best, cand, k);
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = q[axis as usize] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.search(near, q, k, best);
                if best.len() < k || diff * diff <= best[best.len() - 1].0 {
                    self.search(far, q, k, best);
                }
            }
        }
    }
}

fn insert(best: &mut Vec<(f64, u32)>, cand: (f64, u32), k: usize) {
    let less = |a: &(f64, u32), b: &(f64, u32)| a.0 < b.0 || (a.0 == b.0 && a.1 < b.1);
    if best.len() == k && !less(&cand, &best[k - 1]) {
        return;
    }
    let pos = best.partition_point(|b| less(b, &cand));
    best.insert(pos, cand);
    if best.len() > k {
        best.pop();
    }
}

/// Exact k nearest neighbours of every query point in `reference`.
pub fn nearest_neighbors(query: &[Vec3], reference: &[Vec3], k: usize) -> Result<Vec<Vec<Neighbor>>> {
    check_k(reference, k)?;
    let tree = KdTree::build(reference);
    Ok(query.iter().map(|&q| tree.k_nearest(q, k)).collect())
}

/// O(nm) scan with the same ordering as [`KdTree`].
pub fn brute_force_knn(query: &[Vec3], reference: &[Vec3], k: usize) -> Result<Vec<Vec<Neighbor>>> {
    check_k(reference, k)?;
    Ok(query
        .iter()
        .map(|&q| {
            let mut all: Vec<(f64, u32)> = reference
                .iter()
                .enumerate()
                .map(|(i, r)| (r.dist_sq(q), i as u32))
                .collect();
            all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            all.truncate(k);
            all.into_iter()
                .map(|(d2, index)| Neighbor {
                    index,
                    dist: sqrt(d2),
                })
                .collect()
        })
        .collect())
}

fn check_k(reference: &[Vec3], k: usize) -> Result<()> {
    if reference.is_empty() {
        return Err(Error::InvalidArgument("reference set is empty".into()));
    }
    if k == 0 || k > reference.len() {
        return Err(Error::InvalidArgument(alloc::format!(
            "k = {k} must be in 1..={}",
            reference.len()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use alloc::vec;
    use proptest::prelude::*;
    use rand::Rng;

    fn cloud(n: usize, seed: u64) -> Vec<Vec3> {
        let mut r = rng_from_seed(seed);
        (0..n)
            .map(|_| Vec3::new(r.random(), r.random(), r.random()))
            .collect()
    }

    #[test]
    fn self_query_is_zero() {
        let pts = cloud(200, 1);
        let res = nearest_neighbors(&pts, &pts, 1).unwrap();
        assert!(res.iter().all(|n| n[0].dist == 0.0));
    }

    #[test]
    fn hundred_points_k5_matches_brute_force() {
        let pts = cloud(100, 2);
        let q = cloud(100, 3);
        assert_eq!(
            nearest_neighbors(&q, &pts, 5).unwrap(),
            brute_force_knn(&q, &pts, 5).unwrap()
        );
    }

    #[test]
    fn far_query_hand_computed() {
        let reference = vec![Vec3::ZERO, Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 2.0, 0.0)];
        let q = [Vec3::new(10.0, 0.0, 0.0)];
        let n = nearest_neighbors(&q, &reference, 1).unwrap();
        assert_eq!(n[0][0].index, 1);
        assert_eq!(n[0][0].dist, 9.0);
        let n = nearest_neighbors(&q, &reference, 3).unwrap();
        let d: Vec<f64> = n[0].iter().map(|x| x.dist).collect();
        assert_eq!(d, vec![9.0, 10.0, sqrt(104.0)]);
    }

    #[test]
    fn k_larger_than_reference_is_an_error() {
        let pts = cloud(3, 4);
        assert!(nearest_neighbors(&pts, &pts, 4).is_err());
    }

    #[test]
    fn duplicate_points_tie_break_by_index() {
        let reference = vec![Vec3::ZERO; 20];
        let n = nearest_neighbors(&[Vec3::X], &reference, 3).unwrap();
        let idx: Vec<u32> = n[0].iter().map(|x| x.index).collect();
        assert_eq!(idx, vec![0, 1, 2]);
    }

    #[test]
    fn radius_query_matches_scan() {
        let pts = cloud(300, 8);
        let tree = KdTree::build(&pts);
        for q in cloud(20, 9) {
            let want: Vec<u32> = (0..pts.len() as u32)
                .filter(|&i| pts[i as usize].dist_sq(q) <= 0.2 * 0.2)
                .collect();
            assert_eq!(tree.within_radius(q, 0.2), want);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn tree_equals_brute_force(n in 1usize..500, m in 1usize..500, k in 1usize..8, seed in any::<u64>()) {
            let reference = cloud(n, seed);
            let query = cloud(m, seed ^ 0xabc);
            let k = k.min(n);
            prop_assert_eq!(
                nearest_neighbors(&query, &reference, k).unwrap(),
                brute_force_knn(&query, &reference, k).unwrap()
            );
        }
    }
}
