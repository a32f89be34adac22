//! Sparse binary cell grids: the working representation of a measurable
//! set at resolution h, plus balls, rasterization, the Schwarz
//! rearrangement and cellwise measure-theoretic primitives.
//!
//! Cells are integer multi-indices; the cell `c` occupies the cube with
//! center `origin + (c + 1/2)·h`. Occupancy is stored as a sorted,
//! deduplicated index list, so iteration order (and therefore every
//! accumulated sum) is deterministic.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use crate::quad::KahanSum;

/// Errors raised by set construction and the cellwise primitives.
#[derive(Clone, Debug, PartialEq)]
pub enum GridError {
    EmptySet,
    DimensionMismatch { expected: usize, got: usize },
    InvalidCellSize(f64),
    UnsupportedDimension(usize),
    CellSizeTooCoarse { h: f64, min_extent: f64 },
    LatticeMismatch,
}

impl core::fmt::Display for GridError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            GridError::EmptySet => write!(f, "operation requires a nonempty set"),
            GridError::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            GridError::InvalidCellSize(h) => write!(f, "cell size must be positive, got {h}"),
            GridError::UnsupportedDimension(n) => {
                write!(f, "dimension {n} not supported (n ∈ {{2, 3}})")
            }
            GridError::CellSizeTooCoarse { h, min_extent } => {
                write!(f, "cell size {h} exceeds the minimum radial extent {min_extent}")
            }
            GridError::LatticeMismatch => {
                write!(f, "sets live on different lattices (h or origin differ)")
            }
        }
    }
}

/// An origin-anchored ball; the reference object for rearrangements,
/// asymmetries and Hausdorff diagnostics.
#[derive(Clone, Copy, Debug)]
pub struct Ball {
    pub dim: usize,
    pub center: [f64; 3],
    pub radius: f64,
}

impl Ball {
    /// Volume ω_n·r^n.
    pub fn volume(&self) -> f64 {
        crate::unit_ball_volume(self.dim) * libm::pow(self.radius, self.dim as f64)
    }

    /// Whether a point lies strictly inside the ball.
    #[inline]
    pub fn contains(&self, p: &[f64; 3]) -> bool {
        let mut d2 = 0.0;
        for a in 0..self.dim {
            let d = p[a] - self.center[a];
            d2 += d * d;
        }
        d2 < self.radius * self.radius
    }
}

/// A finite set of occupied cells on the lattice `origin + h·Z^n`.
#[derive(Clone, Debug)]
pub struct GridSet {
    dim: usize,
    h: f64,
    origin: [f64; 3],
    cells: Vec<[i64; 3]>,
}

impl GridSet {
    /// Builds a set from arbitrary cell indices (sorted and deduplicated).
    pub fn new(dim: usize, h: f64, origin: [f64; 3], mut cells: Vec<[i64; 3]>) -> Result<Self, GridError> {
        if !(dim == 2 || dim == 3) {
            return Err(GridError::UnsupportedDimension(dim));
        }
        if !(h > 0.0) || !h.is_finite() {
            return Err(GridError::InvalidCellSize(h));
        }
        if dim == 2 {
            for c in cells.iter() {
                debug_assert_eq!(c[2], 0, "third index must be zero in dimension 2");
            }
        }
        cells.sort_unstable();
        cells.dedup();
        Ok(Self { dim, h, origin, cells })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cell_size(&self) -> f64 {
        self.h
    }

    pub fn origin(&self) -> [f64; 3] {
        self.origin
    }

    /// Sorted occupied cell indices.
    pub fn cells(&self) -> &[[i64; 3]] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// |E| = (number of occupied cells)·h^n, exactly.
    pub fn volume(&self) -> f64 {
        self.cells.len() as f64 * libm::pow(self.h, self.dim as f64)
    }

    /// Center point of a cell index.
    #[inline]
    pub fn cell_center(&self, c: &[i64; 3]) -> [f64; 3] {
        let mut p = [0.0; 3];
        for a in 0..self.dim {
            p[a] = self.origin[a] + (c[a] as f64 + 0.5) * self.h;
        }
        p
    }

    /// Binary-search membership test.
    #[inline]
    pub fn contains_cell(&self, c: &[i64; 3]) -> bool {
        self.cells.binary_search(c).is_ok()
    }

    /// Inclusive index bounding box (lo, hi) of the occupancy.
    pub fn bounding_box(&self) -> Result<([i64; 3], [i64; 3]), GridError> {
        if self.cells.is_empty() {
            return Err(GridError::EmptySet);
        }
        let mut lo = [i64::MAX; 3];
        let mut hi = [i64::MIN; 3];
        for c in &self.cells {
            for a in 0..3 {
                lo[a] = lo[a].min(c[a]);
                hi[a] = hi[a].max(c[a]);
            }
        }
        if self.dim == 2 {
            lo[2] = 0;
            hi[2] = 0;
        }
        Ok((lo, hi))
    }

    /// Shifts occupancy by the nearest-cell offset round(v/h); exact for
    /// lattice-aligned translations, snapped otherwise.
    pub fn translate(&self, v: [f64; 3]) -> GridSet {
        let mut off = [0i64; 3];
        for a in 0..self.dim {
            off[a] = libm::round(v[a] / self.h) as i64;
        }
        let cells = self
            .cells
            .iter()
            .map(|c| [c[0] + off[0], c[1] + off[1], c[2] + off[2]])
            .collect();
        GridSet { dim: self.dim, h: self.h, origin: self.origin, cells }
    }

    /// Rescales by λ: the occupancy pattern is preserved and the cell size
    /// becomes λ·h, so volumes scale by λ^n exactly.
    pub fn scale(&self, lambda: f64) -> Result<GridSet, GridError> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(GridError::InvalidCellSize(lambda));
        }
        let mut origin = self.origin;
        for a in 0..self.dim {
            origin[a] *= lambda;
        }
        Ok(GridSet { dim: self.dim, h: self.h * lambda, origin, cells: self.cells.clone() })
    }

    /// Mean of occupied cell centers.
    pub fn barycenter(&self) -> Result<[f64; 3], GridError> {
        if self.cells.is_empty() {
            return Err(GridError::EmptySet);
        }
        let mut acc = [KahanSum::new(), KahanSum::new(), KahanSum::new()];
        for c in &self.cells {
            let p = self.cell_center(c);
            for a in 0..self.dim {
                acc[a].add(p[a]);
            }
        }
        let inv = 1.0 / self.cells.len() as f64;
        let mut b = [0.0; 3];
        for a in 0..self.dim {
            b[a] = acc[a].value() * inv;
        }
        Ok(b)
    }

    /// The origin-centered ball with ω_n·r^n = |E|, exactly.
    pub fn schwarz_rearrangement(&self) -> Result<Ball, GridError> {
        if self.cells.is_empty() {
            return Err(GridError::EmptySet);
        }
        let r = libm::pow(self.volume() / crate::unit_ball_volume(self.dim), 1.0 / self.dim as f64);
        Ok(Ball { dim: self.dim, center: [0.0; 3], radius: r })
    }

    /// |E Δ B| computed cellwise against the analytic ball indicator at
    /// cell centers (midpoint rule on E's lattice).
    pub fn symmetric_difference_volume(&self, ball: &Ball) -> Result<f64, GridError> {
        if ball.dim != self.dim {
            return Err(GridError::DimensionMismatch { expected: self.dim, got: ball.dim });
        }
        let mut e_minus_b = 0u64;
        let mut e_inter_b = 0u64;
        for c in &self.cells {
            if ball.contains(&self.cell_center(c)) {
                e_inter_b += 1;
            } else {
                e_minus_b += 1;
            }
        }
        // Cells of the lattice inside the ball: iterate the ball's index
        // bounding box in sorted order.
        let mut b_count = 0u64;
        self.for_each_cell_in_ball(ball, |_c| b_count += 1);
        let b_minus_e = b_count - e_inter_b.min(b_count);
        let hn = libm::pow(self.h, self.dim as f64);
        Ok((e_minus_b + b_minus_e) as f64 * hn)
    }

    /// Number of lattice cells whose center lies in the ball.
    pub fn lattice_cells_in_ball(&self, ball: &Ball) -> u64 {
        let mut count = 0u64;
        self.for_each_cell_in_ball(ball, |_c| count += 1);
        count
    }

    fn for_each_cell_in_ball<F: FnMut(&[i64; 3])>(&self, ball: &Ball, mut f: F) {
        let mut lo = [0i64; 3];
        let mut hi = [0i64; 3];
        for a in 0..self.dim {
            lo[a] = libm::floor((ball.center[a] - ball.radius - self.origin[a]) / self.h - 0.5) as i64 - 1;
            hi[a] = libm::ceil((ball.center[a] + ball.radius - self.origin[a]) / self.h - 0.5) as i64 + 1;
        }
        let zlo = if self.dim == 3 { lo[2] } else { 0 };
        let zhi = if self.dim == 3 { hi[2] } else { 0 };
        for i in lo[0]..=hi[0] {
            for j in lo[1]..=hi[1] {
                for k in zlo..=zhi {
                    let c = [i, j, k];
                    if ball.contains(&self.cell_center(&c)) {
                        f(&c);
                    }
                }
            }
        }
    }

    /// Occupied cells with at least one empty face neighbor.
    pub fn boundary_cells(&self) -> Vec<[i64; 3]> {
        let mut out = Vec::new();
        for c in &self.cells {
            let mut boundary = false;
            for a in 0..self.dim {
                for step in [-1i64, 1] {
                    let mut nb = *c;
                    nb[a] += step;
                    if !self.contains_cell(&nb) {
                        boundary = true;
                        break;
                    }
                }
                if boundary {
                    break;
                }
            }
            if boundary {
                out.push(*c);
            }
        }
        out
    }

    /// Center of a deepest-inside cell (max face-step distance from the
    /// boundary, by multi-source BFS); ties broken lexicographically.
    pub fn deepest_cell_center(&self) -> Result<[f64; 3], GridError> {
        if self.cells.is_empty() {
            return Err(GridError::EmptySet);
        }
        let boundary = self.boundary_cells();
        let mut dist = alloc::vec![u32::MAX; self.cells.len()];
        let mut queue = VecDeque::new();
        for c in &boundary {
            if let Ok(idx) = self.cells.binary_search(c) {
                dist[idx] = 0;
                queue.push_back(idx);
            }
        }
        while let Some(idx) = queue.pop_front() {
            let c = self.cells[idx];
            let d = dist[idx];
            for a in 0..self.dim {
                for step in [-1i64, 1] {
                    let mut nb = c;
                    nb[a] += step;
                    if let Ok(nidx) = self.cells.binary_search(&nb) {
                        if dist[nidx] == u32::MAX {
                            dist[nidx] = d + 1;
                            queue.push_back(nidx);
                        }
                    }
                }
            }
        }
        let mut best_idx = 0usize;
        let mut best_d = 0u32;
        for (idx, &d) in dist.iter().enumerate() {
            let d = if d == u32::MAX { 0 } else { d };
            if d > best_d {
                best_d = d;
                best_idx = idx;
            }
        }
        Ok(self.cell_center(&self.cells[best_idx]))
    }

    /// Hausdorff distance between ∂E (boundary cell centers) and ∂B, at
    /// cell-center resolution, with `samples` points on ∂B.
    pub fn hausdorff_distance_to_ball_sampled(
        &self,
        ball: &Ball,
        samples: usize,
    ) -> Result<f64, GridError> {
        if self.cells.is_empty() {
            return Err(GridError::EmptySet);
        }
        if ball.dim != self.dim {
            return Err(GridError::DimensionMismatch { expected: self.dim, got: ball.dim });
        }
        let boundary = self.boundary_cells();
        let mut d_e_to_b: f64 = 0.0;
        for c in &boundary {
            let p = self.cell_center(c);
            let mut d2 = 0.0;
            for a in 0..self.dim {
                let d = p[a] - ball.center[a];
                d2 += d * d;
            }
            d_e_to_b = d_e_to_b.max(libm::fabs(libm::sqrt(d2) - ball.radius));
        }
        let mut d_b_to_e: f64 = 0.0;
        let sphere_points = sphere_samples(self.dim, samples);
        for q in &sphere_points {
            let mut p = ball.center;
            for a in 0..self.dim {
                p[a] += ball.radius * q[a];
            }
            let mut best = f64::INFINITY;
            for c in &boundary {
                let cc = self.cell_center(c);
                let mut d2 = 0.0;
                for a in 0..self.dim {
                    let d = cc[a] - p[a];
                    d2 += d * d;
                }
                best = best.min(d2);
            }
            d_b_to_e = d_b_to_e.max(libm::sqrt(best));
        }
        Ok(d_e_to_b.max(d_b_to_e))
    }

    /// Hausdorff distance with the default boundary sampling density.
    pub fn hausdorff_distance_to_ball(&self, ball: &Ball) -> Result<f64, GridError> {
        self.hausdorff_distance_to_ball_sampled(ball, 2048)
    }

    /// Cellwise-disjoint union on a shared lattice.
    pub fn union_disjoint(&self, other: &GridSet) -> Result<GridSet, GridError> {
        if other.dim != self.dim {
            return Err(GridError::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        if other.h.to_bits() != self.h.to_bits()
            || other.origin.iter().zip(&self.origin).any(|(a, b)| a.to_bits() != b.to_bits())
        {
            return Err(GridError::LatticeMismatch);
        }
        let mut cells = Vec::with_capacity(self.cells.len() + other.cells.len());
        cells.extend_from_slice(&self.cells);
        cells.extend_from_slice(&other.cells);
        let before = cells.len();
        cells.sort_unstable();
        cells.dedup();
        if cells.len() != before {
            return Err(GridError::LatticeMismatch);
        }
        Ok(GridSet { dim: self.dim, h: self.h, origin: self.origin, cells })
    }

    /// Whether the occupancies intersect.
    pub fn intersects(&self, other: &GridSet) -> bool {
        let (small, large) =
            if self.cells.len() <= other.cells.len() { (self, other) } else { (other, self) };
        small.cells.iter().any(|c| large.contains_cell(c))
    }
}

/// Rasterizes the indicator `pred` over the index box [lo, hi] (inclusive)
/// by the midpoint rule: a cell is occupied iff its center satisfies the
/// predicate.
pub fn rasterize_where<F: Fn(&[f64; 3]) -> bool>(
    dim: usize,
    h: f64,
    origin: [f64; 3],
    lo: [i64; 3],
    hi: [i64; 3],
    pred: F,
) -> Result<GridSet, GridError> {
    if !(dim == 2 || dim == 3) {
        return Err(GridError::UnsupportedDimension(dim));
    }
    if !(h > 0.0) || !h.is_finite() {
        return Err(GridError::InvalidCellSize(h));
    }
    let mut cells = Vec::new();
    let zlo = if dim == 3 { lo[2] } else { 0 };
    let zhi = if dim == 3 { hi[2] } else { 0 };
    for i in lo[0]..=hi[0] {
        for j in lo[1]..=hi[1] {
            for k in zlo..=zhi {
                let c = [i, j, k];
                let mut p = [0.0; 3];
                for a in 0..dim {
                    p[a] = origin[a] + (c[a] as f64 + 0.5) * h;
                }
                if pred(&p) {
                    cells.push(c);
                }
            }
        }
    }
    GridSet::new(dim, h, origin, cells)
}

/// Rasterizes a ball at resolution h on the canonical lattice (origin 0).
pub fn rasterize_ball(ball: &Ball, h: f64) -> Result<GridSet, GridError> {
    let mut lo = [0i64; 3];
    let mut hi = [0i64; 3];
    for a in 0..ball.dim {
        lo[a] = libm::floor((ball.center[a] - ball.radius) / h - 0.5) as i64 - 1;
        hi[a] = libm::ceil((ball.center[a] + ball.radius) / h - 0.5) as i64 + 1;
    }
    rasterize_where(ball.dim, h, [0.0; 3], lo, hi, |p| ball.contains(p))
}

/// Deterministic low-discrepancy directions on the unit circle/sphere used
/// by the Hausdorff sampler.
fn sphere_samples(dim: usize, count: usize) -> Vec<[f64; 3]> {
    let mut out = Vec::with_capacity(count);
    match dim {
        2 => {
            for k in 0..count {
                let phi = 2.0 * core::f64::consts::PI * k as f64 / count as f64;
                out.push([libm::cos(phi), libm::sin(phi), 0.0]);
            }
        }
        3 => {
            // Fibonacci sphere.
            let golden = (1.0 + libm::sqrt(5.0)) / 2.0;
            for k in 0..count {
                let z = 1.0 - 2.0 * (k as f64 + 0.5) / count as f64;
                let r = libm::sqrt((1.0 - z * z).max(0.0));
                let phi = 2.0 * core::f64::consts::PI * (k as f64 / golden);
                out.push([r * libm::cos(phi), r * libm::sin(phi), z]);
            }
        }
        _ => panic!("unsupported dimension {dim}"),
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_disk(h: f64) -> GridSet {
        rasterize_ball(&Ball { dim: 2, center: [0.0; 3], radius: 1.0 }, h).unwrap()
    }

    #[test]
    fn volume_counts_cells_exactly() {
        let cells: Vec<[i64; 3]> = (0..10)
            .flat_map(|i| (0..10).map(move |j| [i, j, 0]))
            .collect();
        let e = GridSet::new(2, 0.1, [0.0; 3], cells).unwrap();
        assert!((e.volume() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_set_volume_is_zero() {
        let e = GridSet::new(2, 0.5, [0.0; 3], Vec::new()).unwrap();
        assert_eq!(e.volume(), 0.0);
        assert!(e.barycenter().is_err());
    }

    #[test]
    fn rasterized_disk_volume_near_pi() {
        let e = unit_disk(1.0 / 256.0);
        assert!((e.volume() - core::f64::consts::PI).abs() < 2e-2);
    }

    #[test]
    fn translate_by_zero_is_identity() {
        let e = unit_disk(1.0 / 16.0);
        let t = e.translate([0.0, 0.0, 0.0]);
        assert_eq!(e.cells(), t.cells());
    }

    #[test]
    fn translation_preserves_volume_exactly() {
        let e = unit_disk(1.0 / 16.0);
        let t = e.translate([0.37, -1.22, 0.0]);
        assert_eq!(e.volume().to_bits(), t.volume().to_bits());
    }

    #[test]
    fn scaling_scales_volume_exactly() {
        let e = unit_disk(1.0 / 16.0);
        let s = e.scale(2.0).unwrap();
        assert_eq!((4.0 * e.volume()).to_bits(), s.volume().to_bits());
        let id = e.scale(1.0).unwrap();
        assert_eq!(e.volume().to_bits(), id.volume().to_bits());
    }

    #[test]
    fn schwarz_ball_volume_matches() {
        // 2×1 rectangle in n=2.
        let cells: Vec<[i64; 3]> = (0..20)
            .flat_map(|i| (0..10).map(move |j| [i, j, 0]))
            .collect();
        let e = GridSet::new(2, 0.1, [0.0; 3], cells).unwrap();
        let b = e.schwarz_rearrangement().unwrap();
        assert!((b.radius - libm::sqrt(2.0 / core::f64::consts::PI)).abs() < 1e-12);
        assert!((b.volume() - e.volume()).abs() < 1e-12);
        // Idempotence in value: rearranging a grid ball keeps the volume.
        let disk = unit_disk(1.0 / 32.0);
        let b2 = disk.schwarz_rearrangement().unwrap();
        assert!((b2.volume() - disk.volume()).abs() < 1e-12);
    }

    #[test]
    fn symmetric_difference_same_ball_small() {
        let h = 1.0 / 64.0;
        let e = unit_disk(h);
        let b = Ball { dim: 2, center: [0.0; 3], radius: 1.0 };
        let sd = e.symmetric_difference_volume(&b).unwrap();
        assert_eq!(sd, 0.0, "midpoint rasterization of B against B's own indicator is exact");
    }

    #[test]
    fn symmetric_difference_disjoint_adds_volumes() {
        let e = unit_disk(1.0 / 32.0);
        let b = Ball { dim: 2, center: [10.0, 0.0, 0.0], radius: 0.5 };
        let sd = e.symmetric_difference_volume(&b).unwrap();
        let b_lattice = e.lattice_cells_in_ball(&b) as f64 * e.cell_size() * e.cell_size();
        assert!((sd - (e.volume() + b_lattice)).abs() < 1e-12);
    }

    #[test]
    fn symmetric_difference_nested_balls() {
        let e = unit_disk(1.0 / 64.0);
        let b = Ball { dim: 2, center: [0.0; 3], radius: libm::sqrt(2.0) };
        let sd = e.symmetric_difference_volume(&b).unwrap();
        let expected = b.volume() - e.volume();
        assert!(
            (sd - expected).abs() < 0.06,
            "nested symmetric difference {sd} vs analytic {expected}"
        );
    }

    #[test]
    fn barycenter_equivariant() {
        let e = unit_disk(1.0 / 32.0);
        let b0 = e.barycenter().unwrap();
        assert!(b0[0].abs() < 1.0 / 32.0 && b0[1].abs() < 1.0 / 32.0);
        let v = [0.5, -0.25, 0.0];
        let t = e.translate(v);
        let b1 = t.barycenter().unwrap();
        assert!((b1[0] - (b0[0] + 0.5)).abs() < 1e-9);
        assert!((b1[1] - (b0[1] - 0.25)).abs() < 1e-9);
    }

    #[test]
    fn hausdorff_same_set_small() {
        let h = 1.0 / 32.0;
        let e = unit_disk(h);
        let b = Ball { dim: 2, center: [0.0; 3], radius: 1.0 };
        let d = e.hausdorff_distance_to_ball(&b).unwrap();
        assert!(d <= h * libm::sqrt(2.0) + 1e-12, "d = {d}");
    }

    #[test]
    fn hausdorff_concentric_balls() {
        let h = 1.0 / 32.0;
        let e = unit_disk(h);
        let b = Ball { dim: 2, center: [0.0; 3], radius: 1.5 };
        let d = e.hausdorff_distance_to_ball(&b).unwrap();
        assert!((d - 0.5).abs() <= h * libm::sqrt(2.0), "d = {d}");
    }

    #[test]
    fn hausdorff_outlier_dominates() {
        let h = 1.0 / 16.0;
        let mut cells = unit_disk(h).cells().to_vec();
        let far = [(5.0 / h) as i64, 0, 0];
        cells.push(far);
        let e = GridSet::new(2, h, [0.0; 3], cells).unwrap();
        let b = Ball { dim: 2, center: [0.0; 3], radius: 1.0 };
        let d = e.hausdorff_distance_to_ball(&b).unwrap();
        assert!(d >= 5.0 - 1.0 - h * 2.0, "outlier should dominate, d = {d}");
    }

    #[test]
    fn deepest_cell_is_central_for_disk() {
        let e = unit_disk(1.0 / 16.0);
        let p = e.deepest_cell_center().unwrap();
        assert!(libm::sqrt(p[0] * p[0] + p[1] * p[1]) < 0.2, "deepest at {p:?}");
    }

    #[test]
    fn union_disjoint_rejects_overlap() {
        let e = unit_disk(1.0 / 16.0);
        assert!(e.union_disjoint(&e).is_err());
        let far = e.translate([8.0, 0.0, 0.0]);
        let u = e.union_disjoint(&far).unwrap();
        assert_eq!(u.len(), 2 * e.len());
    }
}
