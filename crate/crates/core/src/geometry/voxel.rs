use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{floor, Aabb, Vec3};

/// Binary N³ occupancy lattice over a cubical world-frame box.
///
/// Cells are stored bit-packed with x varying fastest:
/// `index = x + N * (y + N * z)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct VoxelGrid {
    n: usize,
    bbox_min: [u64; 3],
    bbox_max: [u64; 3],
    words: Vec<u64>,
}

pub type CellIndex = u32;

impl VoxelGrid {
    /// Empty grid. The box must be non-degenerate with equal extents on all
    /// axes (cubical cells).
    pub fn new(n: usize, bbox: Aabb) -> Result<VoxelGrid> {
        if n == 0 || n > 1024 {
            return Err(Error::InvalidArgument(alloc::format!(
                "grid resolution {n} out of range"
            )));
        }
        let e = bbox.extent();
        if !(e.x > 0.0 && e.y > 0.0 && e.z > 0.0) || !e.is_finite() {
            return Err(Error::InvalidArgument("bbox_min must be < bbox_max".into()));
        }
        let tol = 1e-12 * e.max_elem();
        if (e.x - e.y).abs() > tol || (e.x - e.z).abs() > tol {
            return Err(Error::InvalidArgument("grid cells must be cubical".into()));
        }
        let cells = n * n * n;
        Ok(VoxelGrid {
            n,
            bbox_min: bbox.min.to_array().map(f64::to_bits),
            bbox_max: bbox.max.to_array().map(f64::to_bits),
            words: vec![0; cells.div_ceil(64)],
        })
    }

    /// Empty grid over the unit workspace cube `[-0.5, 0.5]³`.
    pub fn workspace(n: usize) -> VoxelGrid {
        VoxelGrid::new(n, Aabb::unit_workspace()).expect("unit workspace is valid")
    }

    /// Same resolution and box, all cells empty.
    pub fn empty_like(&self) -> VoxelGrid {
        VoxelGrid {
            n: self.n,
            bbox_min: self.bbox_min,
            bbox_max: self.bbox_max,
            words: vec![0; self.words.len()],
        }
    }

    #[inline]
    pub fn resolution(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn cell_count(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn bbox(&self) -> Aabb {
        Aabb::new(
            Vec3::from_array(self.bbox_min.map(f64::from_bits)),
            Vec3::from_array(self.bbox_max.map(f64::from_bits)),
        )
    }

    #[inline]
    pub fn bbox_min(&self) -> Vec3 {
        Vec3::from_array(self.bbox_min.map(f64::from_bits))
    }

    /// Voxel edge length.
    #[inline]
    pub fn edge(&self) -> f64 {
        (f64::from_bits(self.bbox_max[0]) - f64::from_bits(self.bbox_min[0])) / self.n as f64
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        debug_assert!(i < self.n && j < self.n && k < self.n);
        i + self.n * (j + self.n * k)
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let n = self.n;
        [idx % n, (idx / n) % n, idx / (n * n)]
    }

    #[inline]
    pub fn get_index(&self, idx: usize) -> bool {
        (self.words[idx >> 6] >> (idx & 63)) & 1 == 1
    }

    #[inline]
    pub fn set_index(&mut self, idx: usize, value: bool) {
        let bit = 1u64 << (idx & 63);
        if value {
            self.words[idx >> 6] |= bit;
        } else {
            self.words[idx >> 6] &= !bit;
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> bool {
        self.get_index(self.index(i, j, k))
    }

    /// Occupancy with out-of-range coordinates treated as empty.
    #[inline]
    pub fn get_signed(&self, i: isize, j: isize, k: isize) -> bool {
        let n = self.n as isize;
        if i < 0 || j < 0 || k < 0 || i >= n || j >= n || k >= n {
            return false;
        }
        self.get(i as usize, j as usize, k as usize)
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, value: bool) {
        let idx = self.index(i, j, k);
        self.set_index(idx, value);
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn cell_center(&self, i: usize, j: usize, k: usize) -> Vec3 {
        let e = self.edge();
        self.bbox_min() + Vec3::new(i as f64 + 0.5, j as f64 + 0.5, k as f64 + 0.5) * e
    }

    pub fn cell_box(&self, i: usize, j: usize, k: usize) -> Aabb {
        let e = self.edge();
        let lo = self.bbox_min() + Vec3::new(i as f64, j as f64, k as f64) * e;
        Aabb::new(lo, lo + Vec3::splat(e))
    }

    /// Signed lattice coordinates of the cell containing `p` (may lie outside).
    pub fn cell_coords_of(&self, p: Vec3) -> [isize; 3] {
        let rel = (p - self.bbox_min()) / self.edge();
        [floor(rel.x) as isize, floor(rel.y) as isize, floor(rel.z) as isize]
    }

    /// Cell containing `p`, if inside the grid box (upper faces belong to the
    /// last cell).
    pub fn cell_of(&self, p: Vec3) -> Option<[usize; 3]> {
        let c = self.cell_coords_of(p);
        let n = self.n as isize;
        let mut out = [0usize; 3];
        for a in 0..3 {
            let v = if c[a] == n && p[a] <= f64::from_bits(self.bbox_max[a]) {
                n - 1
            } else {
                c[a]
            };
            if v < 0 || v >= n {
                return None;
            }
            out[a] = v as usize;
        }
        Some(out)
    }

    pub fn same_frame(&self, other: &VoxelGrid) -> bool {
        self.n == other.n && self.bbox_min == other.bbox_min && self.bbox_max == other.bbox_max
    }

    pub fn check_same_frame(&self, other: &VoxelGrid) -> Result<()> {
        if self.n != other.n {
            return Err(Error::ResolutionMismatch {
                expected: self.n,
                found: other.n,
            });
        }
        if !self.same_frame(other) {
            return Err(Error::BoundsMismatch);
        }
        Ok(())
    }

    /// Indices of occupied cells in ascending order.
    pub fn occupied(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut bits = w;
            core::iter::from_fn(move || {
                if bits == 0 {
                    return None;
                }
                let t = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(wi * 64 + t)
            })
        })
    }

    pub fn union_with(&mut self, other: &VoxelGrid) {
        debug_assert!(self.same_frame(other));
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= *b;
        }
    }

    pub fn intersect_with(&mut self, other: &VoxelGrid) {
        debug_assert!(self.same_frame(other));
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= *b;
        }
    }

    pub fn count_and(&self, other: &VoxelGrid) -> usize {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    pub fn count_or(&self, other: &VoxelGrid) -> usize {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a | b).count_ones() as usize)
            .sum()
    }

    /// Cells where the two grids differ.
    pub fn count_xor(&self, other: &VoxelGrid) -> usize {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum()
    }

    /// `self ⊆ other` cell-wise.
    pub fn is_subset_of(&self, other: &VoxelGrid) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    /// Raw bit-packed storage, 64 cells per word, least significant bit first.
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// Packs occupancy into `ceil(N³/8)` bytes, LSB-first, x-fastest.
    pub fn to_packed_bytes(&self) -> Vec<u8> {
        let len = self.cell_count().div_ceil(8);
        let mut out = Vec::with_capacity(len);
        for w in &self.words {
            out.extend_from_slice(&w.to_le_bytes());
        }
        out.truncate(len);
        out
    }

    /// Inverse of [`VoxelGrid::to_packed_bytes`]. Padding bits past N³ must be zero.
    pub fn from_packed_bytes(n: usize, bbox: Aabb, bytes: &[u8]) -> Result<VoxelGrid> {
        let mut g = VoxelGrid::new(n, bbox)?;
        let len = g.cell_count().div_ceil(8);
        if bytes.len() != len {
            return Err(Error::InvalidArgument(alloc::format!(
                "expected {len} packed bytes, found {}",
                bytes.len()
            )));
        }
        for (wi, chunk) in bytes.chunks(8).enumerate() {
            let mut buf = [0u8; 8];
            buf[..chunk.len()].copy_from_slice(chunk);
            g.words[wi] = u64::from_le_bytes(buf);
        }
        let cells = g.cell_count();
        if cells % 64 != 0 {
            let last = g.words.len() - 1;
            if g.words[last] >> (cells % 64) != 0 {
                return Err(Error::InvalidArgument("non-zero padding bits".into()));
            }
        }
        Ok(g)
    }

    /// Occupied cells with at least one empty (or out-of-grid) 6-neighbour.
    pub fn boundary_cells(&self) -> VoxelGrid {
        let mut out = self.empty_like();
        for idx in self.occupied() {
            let [i, j, k] = self.coords(idx).map(|v| v as isize);
            let exposed = [
                (1, 0, 0),
                (-1, 0, 0),
                (0, 1, 0),
                (0, -1, 0),
                (0, 0, 1),
                (0, 0, -1),
            ]
            .iter()
            .any(|&(di, dj, dk)| !self.get_signed(i + di, j + dj, k + dk));
            if exposed {
                out.set_index(idx, true);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn packing_is_lsb_first_x_fastest() {
        let mut g = VoxelGrid::workspace(4);
        g.set(1, 0, 0, true);
        g.set(0, 1, 0, true);
        g.set(3, 3, 3, true);
        let bytes = g.to_packed_bytes();
        assert_eq!(bytes.len(), 8);
        assert_eq!(bytes[0], 0b0001_0010);
        assert_eq!(bytes[0] >> 1 & 1, 1);
        // (0,1,0) -> index 4
        assert_eq!(bytes[0] >> 4 & 1, 1);
        // (3,3,3) -> index 63
        assert_eq!(bytes[7], 0b1000_0000);
        let back = VoxelGrid::from_packed_bytes(4, g.bbox(), &bytes).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn odd_resolution_padding() {
        let mut g = VoxelGrid::workspace(3);
        g.set(2, 2, 2, true);
        let bytes = g.to_packed_bytes();
        assert_eq!(bytes.len(), 4);
        assert_eq!(VoxelGrid::from_packed_bytes(3, g.bbox(), &bytes).unwrap(), g);
    }

    #[test]
    fn rejects_non_cubical_box() {
        let b = Aabb::new(Vec3::ZERO, Vec3::new(1.0, 2.0, 1.0));
        assert!(VoxelGrid::new(8, b).is_err());
        let b = Aabb::new(Vec3::ZERO, Vec3::new(1.0, 0.0, 1.0));
        assert!(VoxelGrid::new(8, b).is_err());
    }

    #[test]
    fn point_to_cell() {
        let g = VoxelGrid::workspace(32);
        assert_eq!(g.cell_of(Vec3::splat(-0.5)), Some([0, 0, 0]));
        assert_eq!(g.cell_of(Vec3::splat(0.5)), Some([31, 31, 31]));
        assert_eq!(g.cell_of(Vec3::new(0.0, 0.0, 0.6)), None);
        let c = g.cell_center(5, 6, 7);
        assert_eq!(g.cell_of(c), Some([5, 6, 7]));
    }
}
