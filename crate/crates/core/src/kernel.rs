//! Cell-cell interaction kernel |x−y|^{−(n+s)}: symmetry-reduced lookup
//! tables of exact pair integrals near the diagonal, a moment-corrected
//! midpoint far field, and the one-cell complement sum that converts pair
//! sums into perimeters.
//!
//! All tabulated values are stored on the unit lattice (h = 1). The pair
//! integral is exactly homogeneous, I_h(Δ) = h^{n−s}·I_1(Δ), so one table
//! serves every cell size and rescaling a set multiplies its perimeter by
//! the exact power of the scale factor.

use alloc::collections::BTreeMap;

use crate::grid::GridSet;
use crate::quad::{adaptive_simpson, KahanSum, SingularBoxIntegral};

/// Errors raised by table construction and pairwise interaction queries.
#[derive(Clone, Debug, PartialEq)]
pub enum KernelError {
    UnsupportedDimension(usize),
    InvalidExponent(f64),
    InvalidTolerance(f64),
    InvalidCellSize(f64),
    CellSizeMismatch { expected: f64, got: f64 },
    LatticeMismatch,
    OverlappingSets,
    DimensionMismatch { expected: usize, got: usize },
}

impl core::fmt::Display for KernelError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            KernelError::UnsupportedDimension(n) => {
                write!(f, "dimension {n} not supported (n ∈ {{2, 3}})")
            }
            KernelError::InvalidExponent(s) => {
                write!(f, "order s must lie strictly in (0, 1), got {s}")
            }
            KernelError::InvalidTolerance(t) => {
                write!(f, "near-zone tolerance must lie in (0, {MAX_TAU_NEAR}], got {t}")
            }
            KernelError::InvalidCellSize(h) => write!(f, "cell size must be positive, got {h}"),
            KernelError::CellSizeMismatch { expected, got } => {
                write!(f, "cell size {got} does not match the table's {expected}")
            }
            KernelError::LatticeMismatch => {
                write!(f, "sets live on different lattices (h or origin differ)")
            }
            KernelError::OverlappingSets => {
                write!(f, "interaction requires disjoint sets, occupancies overlap")
            }
            KernelError::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
        }
    }
}

/// Largest admissible near-zone tolerance.
pub const MAX_TAU_NEAR: f64 = 1e-3;

/// Guaranteed tabulated near zone: all offsets with |Δ|_∞ at most this.
pub const NEAR_RADIUS: i64 = 2;

/// Offsets are tabulated out to this sup-norm radius; beyond it the
/// moment-corrected midpoint approximation takes over.
const TABLE_RADIUS: i64 = 4;

/// Kernel order parameters: dimension n and fractional order s.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelParams {
    pub dim: usize,
    pub s: f64,
}

impl KernelParams {
    pub fn new(dim: usize, s: f64) -> Result<Self, KernelError> {
        let p = Self { dim, s };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), KernelError> {
        if !(self.dim == 2 || self.dim == 3) {
            return Err(KernelError::UnsupportedDimension(self.dim));
        }
        if !(self.s > 0.0 && self.s < 1.0) {
            return Err(KernelError::InvalidExponent(self.s));
        }
        Ok(())
    }

    /// Kernel exponent n + s.
    #[inline]
    pub fn pair_exponent(&self) -> f64 {
        self.dim as f64 + self.s
    }

    /// Homogeneity power n − s of the pair integral in the cell size.
    #[inline]
    pub fn cell_power(&self) -> f64 {
        self.dim as f64 - self.s
    }
}

/// |u|^{−p}·w with the power evaluated in log space once |u| is small
/// enough that the power alone would overflow while the product (the
/// weight vanishes at the singularity) stays finite.
#[inline]
pub(crate) fn kernel_times_weight(r2: f64, w: f64, p: f64) -> f64 {
    if w <= 0.0 {
        return 0.0;
    }
    if r2 == 0.0 {
        return f64::INFINITY;
    }
    if r2 > 1e-150 {
        libm::pow(r2, -0.5 * p) * w
    } else {
        libm::exp(libm::log(w) - 0.5 * p * libm::log(r2))
    }
}

/// Canonical representative of an offset under the kernel's symmetries
/// (per-axis sign flips and axis permutations): coordinate magnitudes in
/// descending order.
#[inline]
pub fn canonical_key(dim: usize, delta: &[i64; 3]) -> [i64; 3] {
    let mut k = [delta[0].abs(), delta[1].abs(), if dim == 3 { delta[2].abs() } else { 0 }];
    k.sort_unstable();
    [k[2], k[1], k[0]]
}

/// Exact unit-lattice pair integral ∬_{C_0 × C_Δ} |x−y|^{−(n+s)} dx dy,
/// reduced to ∫ |u|^{−(n+s)} Π_i tent(u_i − Δ_i) du and integrated
/// adaptively quadrant by quadrant (the tent product is polynomial on each
/// quadrant). Returns +∞ for Δ = 0, where the integral diverges.
pub fn unit_pair_value(params: &KernelParams, delta: &[i64; 3], rel_tol: f64) -> f64 {
    let dim = params.dim;
    let key = canonical_key(dim, delta);
    if key == [0, 0, 0] {
        return f64::INFINITY;
    }
    let p = params.pair_exponent();
    let f = move |u: &[f64; 3]| {
        let mut r2 = 0.0;
        let mut w = 1.0;
        for a in 0..dim {
            r2 += u[a] * u[a];
            w *= (1.0 - libm::fabs(u[a] - key[a] as f64)).max(0.0);
        }
        kernel_times_weight(r2, w, p)
    };
    // The integrand is singular at u = 0 only when the origin lies in the
    // tent support, i.e. every |Δ_i| ≤ 1. The weight then vanishes like
    // ρ^m at the origin (m = number of axes with |Δ_i| = 1), so the mass
    // in a ρ-box is O(ρ^{m−s}).
    let singular = (0..dim).all(|a| key[a] <= 1);
    let m = (0..dim).filter(|&a| key[a] == 1).count() as f64;
    let s = params.s;
    let bound = move |rho: f64| 32.0 * libm::pow(rho, m - s);
    let integ = SingularBoxIntegral {
        dim,
        f: &f,
        singular_point: if singular { Some([0.0; 3]) } else { None },
        singular_bound: &bound,
        rel_tol,
    };
    let mut acc = KahanSum::new();
    for_each_quadrant(dim, &key, |lo, hi| {
        acc.add(integ.integrate(lo, hi));
    });
    acc.value()
}

/// Visits the 2^dim quadrants of the box [Δ−1, Δ+1] split at Δ, where the
/// tent product is a per-axis polynomial.
fn for_each_quadrant<F: FnMut([f64; 3], [f64; 3])>(dim: usize, key: &[i64; 3], mut visit: F) {
    let quadrants = 1usize << dim;
    for q in 0..quadrants {
        let mut lo = [0.0; 3];
        let mut hi = [0.0; 3];
        for a in 0..dim {
            let c = key[a] as f64;
            if q & (1 << a) == 0 {
                lo[a] = c - 1.0;
                hi[a] = c;
            } else {
                lo[a] = c;
                hi[a] = c + 1.0;
            }
        }
        visit(lo, hi);
    }
}

/// Midpoint far-field approximation of the unit pair integral with the
/// second- and fourth-order tent-moment corrections. The tent product has
/// per-axis variance 1/6 and fourth moment 1/15, so with g = |u|^{−p}:
///
///   I(Δ) ≈ g + (1/12)·Δg + (1/24)·[3σ⁴·Δ²g + (m₄ − 3σ⁴)·Σ_i ∂_i⁴ g],
///
/// all derivatives evaluated at Δ. The anisotropic Σ∂_i⁴ term depends on
/// the direction of Δ through Σ Δ_i⁴ / |Δ|⁴. Relative error O(|Δ|^{−6}).
pub fn far_unit_value(params: &KernelParams, delta: &[i64; 3]) -> f64 {
    let n = params.dim as f64;
    let p = params.pair_exponent();
    let mut d2 = 0.0;
    let mut d4sum = 0.0;
    for a in 0..params.dim {
        let d = delta[a] as f64;
        d2 += d * d;
        d4sum += d * d * d * d;
    }
    let g = libm::pow(d2, -0.5 * p);
    let g2 = g / (d2 * d2);
    // Laplacian and bi-Laplacian of r^{−p}.
    let lap = p * (p + 2.0 - n) * g / d2;
    let lap2 = p * (p + 2.0 - n) * (p + 2.0) * (p + 4.0 - n) * g2;
    // Σ_i ∂_i⁴ r^{−p} = p(p+2)[3n − 6(p+4) + (p+4)(p+6)·ΣΔ_i⁴/|Δ|⁴]·r^{−p−4}.
    let q4 = d4sum / (d2 * d2);
    let sum4 = p * (p + 2.0) * (3.0 * n - 6.0 * (p + 4.0) + (p + 4.0) * (p + 6.0) * q4) * g2;
    const SIGMA4: f64 = 1.0 / 36.0;
    const M4: f64 = 1.0 / 15.0;
    g + lap / 12.0 + (3.0 * SIGMA4 * lap2 + (M4 - 3.0 * SIGMA4) * sum4) / 24.0
}

/// ∫_{|u|_∞ > 1} |u|^{−(n+s)} du: the exact kernel mass outside the unit
/// box. Scaling gives the mass outside radius T as T^{−s} times this.
pub fn outside_unit_box_integral(params: &KernelParams) -> f64 {
    let s = params.s;
    match params.dim {
        2 => {
            // Polar reduction: (8/s)·∫_0^{π/4} cos^s φ dφ.
            let f = |phi: f64| libm::pow(libm::cos(phi), s);
            8.0 / s * adaptive_simpson(&f, 0.0, core::f64::consts::PI / 4.0, 1e-13)
        }
        3 => {
            // Solid-angle reduction through the cube face u_3 = 1:
            // (6/s)·∫_{[−1,1]²} (1 + x² + y²)^{−(3+s)/2} dx dy.
            let ex = -(3.0 + s) / 2.0;
            let f = move |u: &[f64; 3]| libm::pow(1.0 + u[0] * u[0] + u[1] * u[1], ex);
            let integ = SingularBoxIntegral {
                dim: 2,
                f: &f,
                singular_point: None,
                singular_bound: &|_| 0.0,
                rel_tol: 1e-12,
            };
            6.0 / s * integ.integrate([-1.0, -1.0, 0.0], [1.0, 1.0, 0.0])
        }
        _ => panic!("unsupported dimension {}", params.dim),
    }
}

/// ∬_{C × C^c} |x−y|^{−(n+s)} dx dy for a unit cell C against its full
/// complement: ∫ |u|^{−(n+s)}·(1 − Π_i tent(u_i)) du, split into the unit
/// tent box (adaptive, singular) plus the exact mass outside the box.
pub fn complement_sum_unit(params: &KernelParams, rel_tol: f64) -> f64 {
    let dim = params.dim;
    let p = params.pair_exponent();
    let f = move |u: &[f64; 3]| {
        let mut r2 = 0.0;
        let mut t = 1.0;
        for a in 0..dim {
            r2 += u[a] * u[a];
            t *= (1.0 - libm::fabs(u[a])).max(0.0);
        }
        kernel_times_weight(r2, 1.0 - t, p)
    };
    // 1 − Πtent vanishes linearly at the origin: mass in a ρ-box is
    // O(ρ^{1−s}).
    let s = params.s;
    let bound = move |rho: f64| 32.0 * libm::pow(rho, 1.0 - s);
    let integ = SingularBoxIntegral {
        dim,
        f: &f,
        singular_point: Some([0.0; 3]),
        singular_bound: &bound,
        rel_tol,
    };
    let mut acc = KahanSum::new();
    for_each_quadrant(dim, &[0, 0, 0], |lo, hi| {
        acc.add(integ.integrate(lo, hi));
    });
    acc.value() + outside_unit_box_integral(params)
}

/// Symmetry-reduced table of unit-lattice pair values plus the complement
/// sum, bound to a nominal cell size h for physical-scale queries.
#[derive(Clone, Debug)]
pub struct InteractionTable {
    params: KernelParams,
    h: f64,
    cell_scale: f64,
    tau_near: f64,
    unit_values: BTreeMap<[i64; 3], f64>,
    s_unit: f64,
}

/// Builds the interaction table for cell size h with near-zone relative
/// accuracy tau_near (the adaptive integrals run one decade tighter).
pub fn build_interaction_table(
    params: KernelParams,
    h: f64,
    tau_near: f64,
) -> Result<InteractionTable, KernelError> {
    params.validate()?;
    if !(h > 0.0) || !h.is_finite() {
        return Err(KernelError::InvalidCellSize(h));
    }
    if !(tau_near > 0.0 && tau_near <= MAX_TAU_NEAR) {
        return Err(KernelError::InvalidTolerance(tau_near));
    }
    let rel_tol = 0.1 * tau_near;
    let mut unit_values = BTreeMap::new();
    let zmax = if params.dim == 3 { TABLE_RADIUS } else { 0 };
    for i in 0..=TABLE_RADIUS {
        for j in 0..=i {
            for k in 0..=j.min(zmax) {
                let key = [i, j, k];
                if key == [0, 0, 0] {
                    unit_values.insert(key, f64::INFINITY);
                } else {
                    unit_values.insert(key, unit_pair_value(&params, &key, rel_tol));
                }
            }
        }
    }
    let s_unit = complement_sum_unit(&params, 1e-9);
    Ok(InteractionTable {
        params,
        h,
        cell_scale: libm::pow(h, params.cell_power()),
        tau_near,
        unit_values,
        s_unit,
    })
}

impl InteractionTable {
    pub fn params(&self) -> &KernelParams {
        &self.params
    }

    pub fn cell_size(&self) -> f64 {
        self.h
    }

    pub fn tau_near(&self) -> f64 {
        self.tau_near
    }

    /// h^{n−s}: the factor converting unit-lattice values to cell size h.
    pub fn cell_scale(&self) -> f64 {
        self.cell_scale
    }

    /// Retargets the table to a different cell size without re-integrating
    /// (pair values are exactly homogeneous).
    pub fn with_cell_size(&self, h: f64) -> Result<InteractionTable, KernelError> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(KernelError::InvalidCellSize(h));
        }
        let mut t = self.clone();
        t.h = h;
        t.cell_scale = libm::pow(h, self.params.cell_power());
        Ok(t)
    }

    /// Unit-lattice pair value for an offset: tabulated inside the sup-norm
    /// table radius, moment-corrected midpoint beyond, +∞ at zero offset.
    #[inline]
    pub fn unit_value(&self, delta: &[i64; 3]) -> f64 {
        let key = canonical_key(self.params.dim, delta);
        if key[0] <= TABLE_RADIUS {
            match self.unit_values.get(&key) {
                Some(&v) => v,
                None => f64::INFINITY,
            }
        } else {
            far_unit_value(&self.params, &key)
        }
    }

    /// Pair value at the table's cell size: h^{n−s}·unit value.
    #[inline]
    pub fn value(&self, delta: &[i64; 3]) -> f64 {
        self.cell_scale * self.unit_value(delta)
    }

    /// Unit-lattice interaction of one cell with its entire complement.
    pub fn complement_sum_unit(&self) -> f64 {
        self.s_unit
    }

    /// Interaction of one cell with its complement at the table's cell size.
    pub fn complement_sum(&self) -> f64 {
        self.cell_scale * self.s_unit
    }

    /// L_s(A, B) = ∬_{A×B} |x−y|^{−(n+s)} dx dy for disjoint sets on the
    /// table's lattice.
    pub fn interaction(&self, a: &GridSet, b: &GridSet) -> Result<f64, KernelError> {
        if a.dim() != self.params.dim {
            return Err(KernelError::DimensionMismatch { expected: self.params.dim, got: a.dim() });
        }
        if b.dim() != self.params.dim {
            return Err(KernelError::DimensionMismatch { expected: self.params.dim, got: b.dim() });
        }
        if a.cell_size().to_bits() != self.h.to_bits() {
            return Err(KernelError::CellSizeMismatch { expected: self.h, got: a.cell_size() });
        }
        if b.cell_size().to_bits() != self.h.to_bits() {
            return Err(KernelError::CellSizeMismatch { expected: self.h, got: b.cell_size() });
        }
        if a.origin().iter().zip(b.origin().iter()).any(|(x, y)| x.to_bits() != y.to_bits()) {
            return Err(KernelError::LatticeMismatch);
        }
        if a.intersects(b) {
            return Err(KernelError::OverlappingSets);
        }
        let mut acc = KahanSum::new();
        for ca in a.cells() {
            for cb in b.cells() {
                let delta = [ca[0] - cb[0], ca[1] - cb[1], ca[2] - cb[2]];
                acc.add(self.unit_value(&delta));
            }
        }
        Ok(self.cell_scale * acc.value())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    fn params2(s: f64) -> KernelParams {
        KernelParams::new(2, s).unwrap()
    }

    #[test]
    fn canonical_key_erases_signs_and_order() {
        assert_eq!(canonical_key(2, &[2, -3, 0]), [3, 2, 0]);
        assert_eq!(canonical_key(2, &[-3, 2, 0]), [3, 2, 0]);
        assert_eq!(canonical_key(3, &[1, -4, 2]), [4, 2, 1]);
        assert_eq!(canonical_key(3, &[-2, 1, -4]), [4, 2, 1]);
    }

    #[test]
    fn zero_offset_diverges() {
        let t = build_interaction_table(params2(0.5), 1.0, 1e-4).unwrap();
        assert!(t.unit_value(&[0, 0, 0]).is_infinite());
        // The divergence rate: the kernel mass on [−1,1]² minus a central
        // ρ-box grows like ρ^{−s}, so successive decades of ρ add mass in
        // the ratio 10^s.
        let s = 0.5;
        let mass_outside = |rho: f64| {
            let f = move |u: &[f64; 3]| libm::pow(u[0] * u[0] + u[1] * u[1], -0.5 * (2.0 + s));
            let integ = SingularBoxIntegral {
                dim: 2,
                f: &f,
                singular_point: None,
                singular_bound: &|_| 0.0,
                rel_tol: 1e-9,
            };
            integ.integrate([-1.0, -rho, 0.0], [-rho, rho, 0.0])
                + integ.integrate([rho, -rho, 0.0], [1.0, rho, 0.0])
                + integ.integrate([-1.0, rho, 0.0], [1.0, 1.0, 0.0])
                + integ.integrate([-1.0, -1.0, 0.0], [1.0, -rho, 0.0])
        };
        let i1 = mass_outside(1e-1);
        let i2 = mass_outside(1e-2);
        let i3 = mass_outside(1e-3);
        let ratio = (i3 - i2) / (i2 - i1);
        let expected = libm::pow(10.0, s);
        assert!(
            (ratio - expected).abs() < 0.02 * expected,
            "divergence rate {ratio}, expected {expected}"
        );
    }

    #[test]
    fn near_values_positive_and_decaying() {
        let t = build_interaction_table(params2(0.5), 1.0, 1e-4).unwrap();
        let axis: Vec<f64> = (1..=5).map(|i| t.unit_value(&[i, 0, 0])).collect();
        for v in &axis {
            assert!(v.is_finite() && *v > 0.0);
        }
        for w in axis.windows(2) {
            assert!(w[0] > w[1], "values must decay along the axis: {axis:?}");
        }
    }

    #[test]
    fn pair_value_matches_tensor_gauss_on_smooth_offset() {
        // Independent oracle: the raw 4D integral over C_0 × C_Δ with a
        // tensor Gauss rule (the integrand is analytic at this distance).
        let params = params2(0.5);
        let delta = [3i64, 1, 0];
        let p = params.pair_exponent();
        let (nodes, weights) = crate::quad::gauss_legendre(16);
        let half = 0.5;
        let mut acc = KahanSum::new();
        for (i, &xi) in nodes.iter().enumerate() {
            let x0 = 0.5 + half * xi;
            for (j, &xj) in nodes.iter().enumerate() {
                let y0 = 0.5 + half * xj;
                for (k, &xk) in nodes.iter().enumerate() {
                    let x1 = delta[0] as f64 + 0.5 + half * xk;
                    for (l, &xl) in nodes.iter().enumerate() {
                        let y1 = delta[1] as f64 + 0.5 + half * xl;
                        let dx = x0 - x1;
                        let dy = y0 - y1;
                        let w = weights[i] * weights[j] * weights[k] * weights[l];
                        acc.add(w * libm::pow(dx * dx + dy * dy, -0.5 * p));
                    }
                }
            }
        }
        let oracle = acc.value() * half * half * half * half;
        let got = unit_pair_value(&params, &delta, 1e-8);
        assert!(
            (got - oracle).abs() < 1e-6 * oracle,
            "tent reduction {got} vs direct 4D Gauss {oracle}"
        );
    }

    #[test]
    fn far_formula_matches_adaptive_integrals() {
        for s in [0.3, 0.75] {
            let params = params2(s);
            for delta in [[5i64, 0, 0], [5, 3, 0], [8, 1, 0]] {
                let exact = unit_pair_value(&params, &delta, 1e-10);
                let far = far_unit_value(&params, &delta);
                let rel = ((far - exact) / exact).abs();
                assert!(
                    rel < 5e-5,
                    "far-field error {rel:.2e} at {delta:?}, s = {s}"
                );
            }
        }
    }

    #[test]
    fn far_formula_matches_adaptive_in_three_dimensions() {
        let params = KernelParams::new(3, 0.6).unwrap();
        for delta in [[5i64, 0, 0], [5, 3, 1]] {
            let exact = unit_pair_value(&params, &delta, 1e-9);
            let far = far_unit_value(&params, &delta);
            let rel = ((far - exact) / exact).abs();
            assert!(rel < 5e-5, "far-field error {rel:.2e} at {delta:?}");
        }
    }

    #[test]
    fn complement_sum_agrees_with_lattice_total() {
        // Tents over all integer offsets form a partition of unity, so the
        // complement sum equals Σ_{Δ≠0} I(Δ) exactly. Check against the
        // tabulated near zone plus far field out to radius R and the
        // analytic continuum tail beyond R + 1/2.
        let params = params2(0.5);
        let t = build_interaction_table(params, 1.0, 1e-5).unwrap();
        let r = 50i64;
        let mut acc = KahanSum::new();
        for i in -r..=r {
            for j in -r..=r {
                if i == 0 && j == 0 {
                    continue;
                }
                acc.add(t.unit_value(&[i, j, 0]));
            }
        }
        let tail = outside_unit_box_integral(&params) * libm::pow(r as f64 + 0.5, -params.s);
        let total = acc.value() + tail;
        let s_unit = t.complement_sum_unit();
        assert!(
            ((total - s_unit) / s_unit).abs() < 5e-3,
            "partition-of-unity total {total} vs complement sum {s_unit}"
        );
    }

    #[test]
    fn three_dimensional_pair_value_matches_tensor_gauss() {
        let params = KernelParams::new(3, 0.5).unwrap();
        let delta = [2i64, 1, 1];
        let p = params.pair_exponent();
        let (nodes, weights) = crate::quad::gauss_legendre(6);
        let half = 0.5;
        let mut acc = KahanSum::new();
        let nn = nodes.len();
        let mut idx = [0usize; 6];
        loop {
            let x = [
                0.5 + half * nodes[idx[0]],
                0.5 + half * nodes[idx[1]],
                0.5 + half * nodes[idx[2]],
            ];
            let y = [
                delta[0] as f64 + 0.5 + half * nodes[idx[3]],
                delta[1] as f64 + 0.5 + half * nodes[idx[4]],
                delta[2] as f64 + 0.5 + half * nodes[idx[5]],
            ];
            let mut d2 = 0.0;
            let mut w = 1.0;
            for a in 0..3 {
                let d = x[a] - y[a];
                d2 += d * d;
                w *= weights[idx[a]] * weights[idx[a + 3]];
            }
            // Weight product above pairs axis a of x with axis a of y; the
            // grouping is immaterial, only the full product matters.
            acc.add(w * libm::pow(d2, -0.5 * p));
            let mut carry = 5usize;
            loop {
                idx[carry] += 1;
                if idx[carry] < nn {
                    break;
                }
                idx[carry] = 0;
                if carry == 0 {
                    break;
                }
                carry -= 1;
            }
            if carry == 0 && idx[0] == 0 {
                break;
            }
        }
        let oracle = acc.value() * libm::pow(half, 6.0);
        let got = unit_pair_value(&params, &delta, 1e-8);
        assert!(
            (got - oracle).abs() < 1e-5 * oracle,
            "tent reduction {got} vs direct 6D Gauss {oracle}"
        );
    }

    #[test]
    fn retargeting_scales_by_cell_power() {
        let t1 = build_interaction_table(params2(0.5), 0.25, 1e-4).unwrap();
        let t2 = t1.with_cell_size(0.5).unwrap();
        let d = [2i64, 1, 0];
        let ratio = t2.value(&d) / t1.value(&d);
        let expected = libm::pow(2.0, t1.params().cell_power());
        assert!((ratio - expected).abs() < 1e-13 * expected);
    }

    #[test]
    fn interaction_on_single_cells_is_the_pair_value() {
        let h = 0.125;
        let t = build_interaction_table(params2(0.5), h, 1e-4).unwrap();
        let a = GridSet::new(2, h, [0.0; 3], alloc::vec![[0, 0, 0]]).unwrap();
        let b = GridSet::new(2, h, [0.0; 3], alloc::vec![[3, 1, 0]]).unwrap();
        let got = t.interaction(&a, &b).unwrap();
        let want = t.value(&[3, 1, 0]);
        assert_eq!(got.to_bits(), want.to_bits());
        assert!(matches!(t.interaction(&a, &a), Err(KernelError::OverlappingSets)));
    }

    #[test]
    fn build_rejects_bad_parameters() {
        assert!(build_interaction_table(KernelParams { dim: 2, s: 1.0 }, 1.0, 1e-4).is_err());
        assert!(build_interaction_table(KernelParams { dim: 2, s: 0.0 }, 1.0, 1e-4).is_err());
        assert!(build_interaction_table(KernelParams { dim: 4, s: 0.5 }, 1.0, 1e-4).is_err());
        assert!(build_interaction_table(params2(0.5), 0.0, 1e-4).is_err());
        assert!(build_interaction_table(params2(0.5), 1.0, 0.0).is_err());
        assert!(build_interaction_table(params2(0.5), 1.0, 2e-3).is_err());
    }
}
