//! Counterexample families showing the Cheeger gap cannot control the
//! oscillation index: planar sets with oscillating boundaries whose
//! perimeter grows like j^s while the Cheeger constant stays sandwiched,
//! and fractal-type unions of shrinking copies whose perimeter series
//! diverges for s at or above the dimension-type exponent.

use alloc::vec::Vec;

use crate::cheeger::{cheeger_heuristic, CheegerError};
use crate::grid::{rasterize_ball, Ball, GridError, GridSet};
use crate::indices::{equivalent_radius, index_report, IndexError};
use crate::kernel::{InteractionTable, KernelError, KernelParams};
use crate::perimeter::{fractional_perimeter, PerimeterError};
use crate::profile::{ProfileError, RadialProfile};
use crate::reference::ReferenceCache;

/// Largest admissible oscillation amplitude.
pub const OSC_EPSILON_MAX: f64 = 0.2;

/// Profile nodes per frequency unit: sin(2jθ) gets 64·j samples, 32 per
/// full oscillation, and the node set hits every extremum exactly.
pub const OSC_NODES_PER_FREQUENCY: usize = 64;

/// Resolution rule for perimeter growth studies: h ≤ 1/(32·max j).
pub const GROWTH_CELLS_PER_FREQUENCY: f64 = 32.0;

/// Resolution rule for Cheeger failure studies: h ≤ 1/(8·max j). The
/// subset search is quadratic in the occupancy, so these runs resolve the
/// oscillation more coarsely than the perimeter-only studies.
pub const FAILURE_CELLS_PER_FREQUENCY: f64 = 8.0;

/// Placement pitch of fractal copies, in seed bounding-box widths. Slots
/// this wide keep every copy's witness shell inside its own slot.
pub const FRACTAL_SLOT_WIDTHS: f64 = 4.0;

/// Witness shell around a bounding box: inner offset one box width,
/// thickness a quarter width.
pub const WITNESS_INNER_WIDTHS: f64 = 1.0;
pub const WITNESS_THICKNESS_WIDTHS: f64 = 0.25;

/// Relative slack for grid quadrature against the closed-form series.
pub const SERIES_BRACKET_SLACK: f64 = 0.05;

/// Errors from family constructions and studies.
#[derive(Debug)]
pub enum FamilyError {
    Grid(GridError),
    Kernel(KernelError),
    Perimeter(PerimeterError),
    Profile(ProfileError),
    Index(IndexError),
    Cheeger(CheegerError),
    /// Oscillation frequency must be a positive integer.
    InvalidFrequency { j: u32 },
    /// Amplitude outside (0, OSC_EPSILON_MAX].
    InvalidAmplitude { epsilon: f64 },
    /// Grid too coarse for the requested frequencies.
    UnderResolved { h: f64, required: f64 },
    /// Parameter outside its admissible range.
    InvalidRange { field: &'static str },
    /// The lattice cannot represent generation k exactly.
    UnresolvedGeneration { k: usize, h: f64, scaled: f64 },
    /// Two fractal pieces overlapped; placement bug guard.
    PlacementCollision,
}

impl core::fmt::Display for FamilyError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            FamilyError::Grid(e) => write!(f, "grid error: {e}"),
            FamilyError::Kernel(e) => write!(f, "kernel error: {e}"),
            FamilyError::Perimeter(e) => write!(f, "perimeter error: {e}"),
            FamilyError::Profile(e) => write!(f, "profile error: {e}"),
            FamilyError::Index(e) => write!(f, "index error: {e}"),
            FamilyError::Cheeger(e) => write!(f, "cheeger error: {e}"),
            FamilyError::InvalidFrequency { j } => {
                write!(f, "frequency j = {j} must be at least 1")
            }
            FamilyError::InvalidAmplitude { epsilon } => {
                write!(f, "amplitude {epsilon} outside (0, {OSC_EPSILON_MAX}]")
            }
            FamilyError::UnderResolved { h, required } => {
                write!(f, "cell size {h} too coarse, need h <= {required}")
            }
            FamilyError::InvalidRange { field } => {
                write!(f, "parameter {field} outside its admissible range")
            }
            FamilyError::UnresolvedGeneration { k, h, scaled } => write!(
                f,
                "generation {k} cell size {scaled} is not an integer multiple of h = {h}"
            ),
            FamilyError::PlacementCollision => write!(f, "fractal pieces overlapped"),
        }
    }
}

impl From<GridError> for FamilyError {
    fn from(e: GridError) -> Self {
        FamilyError::Grid(e)
    }
}

impl From<KernelError> for FamilyError {
    fn from(e: KernelError) -> Self {
        FamilyError::Kernel(e)
    }
}

impl From<PerimeterError> for FamilyError {
    fn from(e: PerimeterError) -> Self {
        FamilyError::Perimeter(e)
    }
}

impl From<ProfileError> for FamilyError {
    fn from(e: ProfileError) -> Self {
        FamilyError::Profile(e)
    }
}

impl From<IndexError> for FamilyError {
    fn from(e: IndexError) -> Self {
        FamilyError::Index(e)
    }
}

impl From<CheegerError> for FamilyError {
    fn from(e: CheegerError) -> Self {
        FamilyError::Cheeger(e)
    }
}

/// Radial profile of the oscillating set: u(θ) = ε·sin(2jθ) on 64·j
/// equispaced nodes. The node count makes the discrete volume identity
/// π(1+ε²/2) and the minimum radius 1−ε exact up to roundoff.
pub fn oscillating_set(j: u32, epsilon: f64) -> Result<RadialProfile, FamilyError> {
    if j == 0 {
        return Err(FamilyError::InvalidFrequency { j });
    }
    if !(epsilon > 0.0) || epsilon > OSC_EPSILON_MAX || !epsilon.is_finite() {
        return Err(FamilyError::InvalidAmplitude { epsilon });
    }
    let m = OSC_NODES_PER_FREQUENCY * j as usize;
    let profile = RadialProfile::from_fn(m, |theta| epsilon * libm::sin(2.0 * j as f64 * theta))?;
    Ok(profile)
}

/// One row of a perimeter growth study.
#[derive(Clone, Copy, Debug)]
pub struct GrowthRow {
    pub j: u32,
    /// P_s of the rasterized oscillating set.
    pub perimeter: f64,
    /// perimeter/j^s; bounded below by a positive constant along the family.
    pub ratio: f64,
    /// Interval-pair lower-bound integral Σ_m ∬_{I_m×J_m} |x−y|^{−(1+s)},
    /// exactly homogeneous of degree s in j.
    pub interval_bound: f64,
}

/// Closed form of the interval-pair sum: j congruent pairs of arcs of
/// length 1/(2j) whose centers sit π/(2j) apart, integrated against
/// |x−y|^{−(1+s)}. The iterated antiderivative gives a second difference
/// of t^{1−s} over the pair geometry.
pub fn interval_pair_bound(j: u32, s: f64) -> f64 {
    if j == 0 {
        return 0.0;
    }
    let jf = j as f64;
    let d = core::f64::consts::PI / (2.0 * jf);
    let w = 1.0 / (2.0 * jf);
    let e = 1.0 - s;
    let second_difference =
        2.0 * libm::pow(d, e) - libm::pow(d - w, e) - libm::pow(d + w, e);
    jf * second_difference / (s * e)
}

/// Rasterizes Ω_j^ε for each requested frequency and tabulates P_s and
/// its growth diagnostics. Requires h ≤ 1/(32·max j).
pub fn oscillating_growth_study(
    epsilon: f64,
    js: &[u32],
    h: f64,
    params: &KernelParams,
    table: &InteractionTable,
) -> Result<Vec<GrowthRow>, FamilyError> {
    if js.is_empty() {
        return Err(FamilyError::InvalidRange { field: "js" });
    }
    let max_j = *js.iter().max().expect("nonempty");
    let required = 1.0 / (GROWTH_CELLS_PER_FREQUENCY * max_j as f64);
    if h > required * (1.0 + 1e-9) {
        return Err(FamilyError::UnderResolved { h, required });
    }
    let table = table.with_cell_size(h)?;
    let mut rows = Vec::with_capacity(js.len());
    for &j in js {
        let set = oscillating_set(j, epsilon)?.rasterize(h)?;
        let perimeter = fractional_perimeter(&set, params, &table)?;
        rows.push(GrowthRow {
            j,
            perimeter,
            ratio: perimeter / libm::pow(j as f64, params.s),
            interval_bound: interval_pair_bound(j, params.s),
        });
    }
    Ok(rows)
}

/// One row of the oscillating Cheeger-vs-β failure study.
#[derive(Clone, Copy, Debug)]
pub struct OscFailureRow {
    pub j: u32,
    /// Heuristic h_{m,s}(Ω_j^ε).
    pub h_value: f64,
    /// Uniform upper bound h_{m,s}(B_1)(1−ε)^{2−s−2m} from B_{1−ε} ⊂ Ω.
    pub h_upper: f64,
    /// Equivalent-ball reference h_{m,s}(B) with |B| = |Ω_j^ε|.
    pub h_lower: f64,
    /// (h_value − h_lower)/h_lower.
    pub gap: f64,
    /// Oscillation index β_s² of the domain.
    pub beta_sq: f64,
    /// gap/β_s²; decreasing along the family, ruling out a uniform
    /// constant in gap ≥ c·β_s².
    pub ratio: f64,
}

/// Evaluates the Cheeger gap and β_s² along the oscillating family. The
/// gap column stays inside the analytic sandwich while β_s² grows, so the
/// ratio column decreases toward zero. Requires h ≤ 1/(8·max j).
#[allow(clippy::too_many_arguments)]
pub fn cheeger_vs_beta_failure(
    epsilon: f64,
    m: f64,
    js: &[u32],
    h: f64,
    params: &KernelParams,
    table: &InteractionTable,
    cache: &ReferenceCache,
    seed: u64,
) -> Result<Vec<OscFailureRow>, FamilyError> {
    if js.is_empty() {
        return Err(FamilyError::InvalidRange { field: "js" });
    }
    let n = params.dim as f64;
    if !(m > (n - params.s) / n) || !m.is_finite() {
        return Err(FamilyError::InvalidRange { field: "m" });
    }
    let max_j = *js.iter().max().expect("nonempty");
    let required = 1.0 / (FAILURE_CELLS_PER_FREQUENCY * max_j as f64);
    if h > required * (1.0 + 1e-9) {
        return Err(FamilyError::UnderResolved { h, required });
    }
    let unit = Ball { dim: params.dim, center: [0.0; 3], radius: 1.0 };
    let v1 = rasterize_ball(&unit, h)?.volume();
    let h_b1 = cache.ps_b1 / libm::pow(v1, m);
    let h_upper = h_b1 * libm::pow(1.0 - epsilon, n - params.s - 2.0 * m);

    let mut rows = Vec::with_capacity(js.len());
    for &j in js {
        let set = oscillating_set(j, epsilon)?.rasterize(h)?;
        let solved = cheeger_heuristic(&set, m, params, table, seed.wrapping_add(j as u64))?;
        let r = equivalent_radius(&set)?;
        let h_lower =
            libm::pow(r, n - params.s) * cache.ps_b1 / libm::pow(set.volume(), m);
        let gap = (solved.value - h_lower) / h_lower;
        let report = index_report(&set, params, table, cache)?;
        rows.push(OscFailureRow {
            j,
            h_value: solved.value,
            h_upper,
            h_lower,
            gap,
            beta_sq: report.beta_sq,
            ratio: gap / report.beta_sq,
        });
    }
    Ok(rows)
}

/// Fractal-type family: a seed set T_0 plus a·b^{k−1} copies of T_0 at
/// scale λ^{−k} per generation k, λ = b^{1/(n−σ)}, placed on an outward
/// square spiral of slots whose dilated bounding boxes are pairwise
/// disjoint. Copies use pure scaling and translation.
#[derive(Clone, Debug)]
pub struct FractalFamily {
    /// Seed set T_0; its lattice is refined to the build lattice.
    pub seed: GridSet,
    /// Copies in generation 1.
    pub a: u32,
    /// Branching factor per generation, b ≥ 2.
    pub b: u32,
    /// Divergence exponent σ ∈ (0,1): P_s diverges along the family for
    /// s ≥ σ and stays bounded for s < σ.
    pub sigma: f64,
    /// Generations M.
    pub generations: usize,
}

impl FractalFamily {
    pub fn validate(&self) -> Result<(), FamilyError> {
        if self.seed.is_empty() {
            return Err(FamilyError::Grid(GridError::EmptySet));
        }
        if self.a < 1 {
            return Err(FamilyError::InvalidRange { field: "a" });
        }
        if self.b < 2 {
            return Err(FamilyError::InvalidRange { field: "b" });
        }
        if !(self.sigma > 0.0 && self.sigma < 1.0) {
            return Err(FamilyError::InvalidRange { field: "sigma" });
        }
        Ok(())
    }

    /// Scale factor λ = b^{1/(n−σ)} > 1.
    pub fn lambda(&self) -> f64 {
        let n = self.seed.dim() as f64;
        libm::pow(self.b as f64, 1.0 / (n - self.sigma))
    }

    /// Copies in generation k ≥ 1: a·b^{k−1}.
    pub fn copies_in_generation(&self, k: usize) -> u64 {
        self.a as u64 * (self.b as u64).pow(k as u32 - 1)
    }

    /// Volume ratio per generation step, b/λⁿ = b^{−σ/(n−σ)} < 1.
    pub fn volume_ratio(&self) -> f64 {
        let n = self.seed.dim() as f64;
        libm::pow(self.b as f64, -self.sigma / (n - self.sigma))
    }

    /// |Ω_M|/|T_0| = 1 + (a/λⁿ)Σ_{k=0}^{M−1}(b/λⁿ)^k.
    pub fn volume_factor(&self, generations: usize) -> f64 {
        let n = self.seed.dim() as f64;
        let first = self.a as f64 / libm::pow(self.lambda(), n);
        1.0 + first * geometric_partial_sum(self.volume_ratio(), generations)
    }

    /// |Ω_∞|/|T_0|: the full geometric series.
    pub fn infinite_volume_factor(&self) -> f64 {
        let n = self.seed.dim() as f64;
        let first = self.a as f64 / libm::pow(self.lambda(), n);
        1.0 + first / (1.0 - self.volume_ratio())
    }
}

/// Σ_{k=0}^{terms−1} r^k with the r = 1 limit handled exactly.
fn geometric_partial_sum(r: f64, terms: usize) -> f64 {
    if terms == 0 {
        return 0.0;
    }
    if r == 1.0 {
        return terms as f64;
    }
    (1.0 - libm::pow(r, terms as f64)) / (1.0 - r)
}

/// Seed bounding box in physical units: (lower corner, width) with the
/// width taken over the larger axis.
fn seed_box(seed: &GridSet) -> Result<([f64; 3], f64), FamilyError> {
    let (lo, hi) = seed.bounding_box()?;
    let h = seed.cell_size();
    let origin = seed.origin();
    let mut corner = [0.0; 3];
    let mut width = 0.0f64;
    for a in 0..seed.dim() {
        corner[a] = origin[a] + lo[a] as f64 * h;
        width = width.max((hi[a] - lo[a] + 1) as f64 * h);
    }
    Ok((corner, width))
}

/// Slot centers on an outward square spiral: ring ℓ holds the positions
/// with max(|p|,|q|) = ℓ, walked in a fixed order.
fn spiral_slot(t: usize) -> (i64, i64) {
    let mut remaining = t;
    let mut ring = 1i64;
    loop {
        let slots = (8 * ring) as usize;
        if remaining < slots {
            break;
        }
        remaining -= slots;
        ring += 1;
    }
    let side = (2 * ring) as usize;
    let r = remaining;
    if r < side {
        // Top edge, left to right.
        (-ring + 1 + r as i64, ring)
    } else if r < 2 * side {
        // Right edge, top to bottom.
        (ring, ring - 1 - (r - side) as i64)
    } else if r < 3 * side {
        // Bottom edge, right to left.
        (ring - 1 - (r - 2 * side) as i64, -ring)
    } else {
        // Left edge, bottom to top.
        (-ring, -ring + 1 + (r - 3 * side) as i64)
    }
}

/// Integer refinement factor of one generation on the build lattice.
fn generation_refinement(
    seed_h: f64,
    lambda: f64,
    k: usize,
    h: f64,
) -> Result<i64, FamilyError> {
    let scaled = seed_h * libm::pow(lambda, -(k as f64));
    let ratio = scaled / h;
    let rounded = libm::round(ratio);
    if rounded < 1.0 || libm::fabs(ratio - rounded) > 1e-9 * ratio {
        return Err(FamilyError::UnresolvedGeneration { k, h, scaled });
    }
    Ok(rounded as i64)
}

/// Appends the seed pattern refined by factor q, translated so its
/// bounding-box corner lands on the lattice cell `corner`.
fn push_refined_copy(
    out: &mut Vec<[i64; 3]>,
    seed: &GridSet,
    seed_lo: &[i64; 3],
    q: i64,
    corner: &[i64; 3],
    dim: usize,
) {
    for c in seed.cells() {
        let base = [
            corner[0] + (c[0] - seed_lo[0]) * q,
            corner[1] + (c[1] - seed_lo[1]) * q,
            corner[2] + (c[2] - seed_lo[2]) * q,
        ];
        for di in 0..q {
            for dj in 0..q {
                if dim == 3 {
                    for dk in 0..q {
                        out.push([base[0] + di, base[1] + dj, base[2] + dk]);
                    }
                } else {
                    out.push([base[0] + di, base[1] + dj, 0]);
                }
            }
        }
    }
}

/// Builds Ω_M on the lattice of spacing h: the refined seed plus every
/// generation's copies in their spiral slots. Exact by construction when
/// every generation's cell size is an integer multiple of h.
pub fn fractal_build(fam: &FractalFamily, h: f64) -> Result<GridSet, FamilyError> {
    fam.validate()?;
    if !(h > 0.0) || !h.is_finite() {
        return Err(FamilyError::Grid(GridError::InvalidCellSize(h)));
    }
    let dim = fam.seed.dim();
    if dim != 2 {
        return Err(FamilyError::Grid(GridError::UnsupportedDimension(dim)));
    }
    let lambda = fam.lambda();
    let (corner, width) = seed_box(&fam.seed)?;
    let (seed_lo, _) = fam.seed.bounding_box()?;
    let pitch = FRACTAL_SLOT_WIDTHS * width;

    let mut cells: Vec<[i64; 3]> = Vec::new();
    let mut expected = 0usize;

    let q0 = generation_refinement(fam.seed.cell_size(), lambda, 0, h)?;
    let base_corner = [
        libm::round(corner[0] / h) as i64,
        libm::round(corner[1] / h) as i64,
        0,
    ];
    push_refined_copy(&mut cells, &fam.seed, &seed_lo, q0, &base_corner, dim);
    expected += fam.seed.len() * (q0 as usize).pow(dim as u32);

    // Spiral slots are indexed by the global copy sequence so that the
    // placement of generation k does not depend on the total generation
    // count: prefixes of the family share their geometry.
    let center = [corner[0] + width / 2.0, corner[1] + width / 2.0];
    let mut slot = 0usize;
    for k in 1..=fam.generations {
        let qk = generation_refinement(fam.seed.cell_size(), lambda, k, h)?;
        let copy_width = width * libm::pow(lambda, -(k as f64));
        for _ in 0..fam.copies_in_generation(k) {
            let (p, q) = spiral_slot(slot);
            slot += 1;
            let cx = center[0] + p as f64 * pitch;
            let cy = center[1] + q as f64 * pitch;
            let copy_corner = [
                libm::round((cx - copy_width / 2.0) / h) as i64,
                libm::round((cy - copy_width / 2.0) / h) as i64,
                0,
            ];
            push_refined_copy(&mut cells, &fam.seed, &seed_lo, qk, &copy_corner, dim);
            expected += fam.seed.len() * (qk as usize).pow(dim as u32);
        }
    }

    let set = GridSet::new(dim, h, [0.0; 3], cells)?;
    if set.len() != expected {
        return Err(FamilyError::PlacementCollision);
    }
    Ok(set)
}

/// Witness shell S_0: the cells at rectangle distance between one and
/// one-and-a-quarter seed widths from the seed's bounding box. The slot
/// pitch keeps the shell strictly inside the moat between the seed and
/// the first ring of copies, so it avoids the whole family.
pub fn fractal_witness(fam: &FractalFamily, h: f64) -> Result<GridSet, FamilyError> {
    fam.validate()?;
    let (corner, width) = seed_box(&fam.seed)?;
    let inner = WITNESS_INNER_WIDTHS * width;
    let outer = inner + WITNESS_THICKNESS_WIDTHS * width;
    let lo = [corner[0] - outer - h, corner[1] - outer - h];
    let hi = [corner[0] + width + outer + h, corner[1] + width + outer + h];
    let mut cells = Vec::new();
    let ilo = [libm::floor(lo[0] / h) as i64, libm::floor(lo[1] / h) as i64];
    let ihi = [libm::ceil(hi[0] / h) as i64, libm::ceil(hi[1] / h) as i64];
    for i in ilo[0]..=ihi[0] {
        for j in ilo[1]..=ihi[1] {
            let x = (i as f64 + 0.5) * h;
            let y = (j as f64 + 0.5) * h;
            let dx = (corner[0] - x).max(x - (corner[0] + width)).max(0.0);
            let dy = (corner[1] - y).max(y - (corner[1] + width)).max(0.0);
            let d = libm::sqrt(dx * dx + dy * dy);
            if d >= inner && d <= outer {
                cells.push([i, j, 0]);
            }
        }
    }
    Ok(GridSet::new(fam.seed.dim(), h, [0.0; 3], cells)?)
}

/// Closed-form perimeter series bounds for Ω_M:
/// upper = P_s(T_0)·F and lower = L_s(T_0,S_0)·F with
/// F = 1 + (a/λ^{n−s})Σ_{k=0}^{M−1}(b/λ^{n−s})^k. The common ratio is
/// b^{(s−σ)/(n−σ)}: below one for s < σ (bounded), one at s = σ (linear
/// divergence), above one for s > σ (geometric divergence).
#[allow(clippy::too_many_arguments)]
pub fn fractal_series_bounds(
    a: u32,
    b: u32,
    sigma: f64,
    n: usize,
    s: f64,
    generations: usize,
    ps_t0: f64,
    ls_t0_s0: f64,
) -> Result<SeriesBounds, FamilyError> {
    if a < 1 {
        return Err(FamilyError::InvalidRange { field: "a" });
    }
    if b < 2 {
        return Err(FamilyError::InvalidRange { field: "b" });
    }
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(FamilyError::InvalidRange { field: "sigma" });
    }
    if !(s > 0.0 && s < 1.0) {
        return Err(FamilyError::InvalidRange { field: "s" });
    }
    if !(n == 2 || n == 3) {
        return Err(FamilyError::InvalidRange { field: "n" });
    }
    if !(ps_t0 > ls_t0_s0 && ls_t0_s0 > 0.0) {
        return Err(FamilyError::InvalidRange { field: "ps_t0/ls_t0_s0" });
    }
    let nf = n as f64;
    let ratio = libm::pow(b as f64, (s - sigma) / (nf - sigma));
    let first = a as f64 / libm::pow(b as f64, (nf - s) / (nf - sigma));
    let factor = 1.0 + first * geometric_partial_sum(ratio, generations);
    Ok(SeriesBounds { upper: ps_t0 * factor, lower: ls_t0_s0 * factor, ratio })
}

/// Perimeter series bounds for one truncation depth.
#[derive(Clone, Copy, Debug)]
pub struct SeriesBounds {
    /// P_s(T_0) times the series factor; P_s(Ω_M) never exceeds it.
    pub upper: f64,
    /// L_s(T_0, S_0) times the series factor; P_s(Ω_M) never drops
    /// below it.
    pub lower: f64,
    /// Common ratio b^{(s−σ)/(n−σ)} of the perimeter series.
    pub ratio: f64,
}

/// Perimeter-to-volume ratio P_s(E)/|E|^m of one admissible subset.
fn subset_ratio(
    e: &GridSet,
    m: f64,
    params: &KernelParams,
    table: &InteractionTable,
) -> Result<f64, FamilyError> {
    let p = fractional_perimeter(e, params, table)?;
    Ok(p / libm::pow(e.volume(), m))
}

/// One row of the fractal Cheeger-vs-β failure study.
#[derive(Clone, Copy, Debug)]
pub struct FractalFailureRow {
    pub generation: usize,
    /// Best admissible upper bound for h_{m,s}(Ω_M): the annealed search
    /// result capped by two explicit competitors, the refined T_0 block
    /// and its inscribed ball, both subsets of every Ω_M.
    pub h_value: f64,
    /// Uniform upper bound h_{m,s}(B_{c0}) from the inscribed ball.
    pub h_upper: f64,
    /// Equivalent-ball reference h_{m,s}(B_M) with |B_M| = |Ω_M|.
    pub h_lower: f64,
    /// (h_value − h_lower)/h_lower.
    pub gap: f64,
    /// Lower bound for β_s²: the deficit against the fixed ball B_∞,
    /// (P_s(Ω_M) − P_s(B_∞))/P_s(B_∞), increasing in M.
    pub beta_sq_lower: f64,
    /// Isoperimetric deficit δ_s(Ω_M) against the equivalent ball.
    pub delta_s: f64,
}

/// Evaluates the Cheeger gap sandwich and the diverging oscillation
/// lower bound along the fractal family, for s at or above σ. The seed
/// must contain the inscribed ball B_{c0} with c0 half the seed width.
/// Any admissible subset bounds the infimum from above, so the reported
/// value is the annealed result capped by the explicit competitors.
#[allow(clippy::too_many_arguments)]
pub fn fractal_failure_demo(
    fam: &FractalFamily,
    m: f64,
    h: f64,
    params: &KernelParams,
    table: &InteractionTable,
    cache: &ReferenceCache,
    seed: u64,
) -> Result<Vec<FractalFailureRow>, FamilyError> {
    fam.validate()?;
    if params.s < fam.sigma {
        return Err(FamilyError::InvalidRange { field: "s" });
    }
    let n = params.dim as f64;
    if !(m > (n - params.s) / n) || !m.is_finite() {
        return Err(FamilyError::InvalidRange { field: "m" });
    }
    let table = table.with_cell_size(h)?;
    let (corner, width) = seed_box(&fam.seed)?;
    let c0 = width / 2.0;

    // v1 in the equivalent-radius convention, recovered from any set.
    let omega_1 = fractal_build(&FractalFamily { generations: 1, ..fam.clone() }, h)?;
    let r1 = equivalent_radius(&omega_1)?;
    let v1 = omega_1.volume() / libm::pow(r1, n);

    let h_upper =
        libm::pow(c0, n - params.s) * cache.ps_b1 / libm::pow(libm::pow(c0, n) * v1, m);
    let volume_infty = fam.seed.volume() * fam.infinite_volume_factor();
    let r_infty = libm::pow(volume_infty / v1, 1.0 / n);
    let ps_b_infty = libm::pow(r_infty, n - params.s) * cache.ps_b1;

    // Explicit competitors: the refined seed block and its inscribed
    // ball are subsets of every Ω_M, so their ratios bound the infimum
    // from above regardless of how far the annealed search gets.
    let t0_block = fractal_build(&FractalFamily { generations: 0, ..fam.clone() }, h)?;
    let mut competitor = subset_ratio(&t0_block, m, params, &table)?;
    let center = [corner[0] + c0, corner[1] + c0, 0.0];
    let ball_cells: Vec<[i64; 3]> = t0_block
        .cells()
        .iter()
        .copied()
        .filter(|c| {
            let p = t0_block.cell_center(c);
            let dx = p[0] - center[0];
            let dy = p[1] - center[1];
            dx * dx + dy * dy <= c0 * c0
        })
        .collect();
    if !ball_cells.is_empty() {
        let inscribed = GridSet::new(t0_block.dim(), h, t0_block.origin(), ball_cells)?;
        competitor = competitor.min(subset_ratio(&inscribed, m, params, &table)?);
    }

    let mut rows = Vec::with_capacity(fam.generations);
    for generation in 1..=fam.generations {
        let omega = fractal_build(&FractalFamily { generations: generation, ..fam.clone() }, h)?;
        let solved = cheeger_heuristic(&omega, m, params, &table, seed + generation as u64)?;
        let value = solved.value.min(competitor);
        let r = equivalent_radius(&omega)?;
        let h_lower =
            libm::pow(r, n - params.s) * cache.ps_b1 / libm::pow(omega.volume(), m);
        let perimeter = fractional_perimeter(&omega, params, &table)?;
        let ps_ball = libm::pow(r, n - params.s) * cache.ps_b1;
        rows.push(FractalFailureRow {
            generation,
            h_value: value,
            h_upper,
            h_lower,
            gap: (value - h_lower) / h_lower,
            beta_sq_lower: (perimeter - ps_b_infty) / ps_b_infty,
            delta_s: (perimeter - ps_ball) / ps_ball,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::build_interaction_table;
    use crate::potential::vs_value;
    use alloc::string::ToString;

    fn params2(s: f64) -> KernelParams {
        KernelParams::new(2, s).unwrap()
    }

    fn grid_cache(params: &KernelParams, table: &InteractionTable, h: f64) -> ReferenceCache {
        let table_h = table.with_cell_size(h).unwrap();
        let ball = Ball { dim: 2, center: [0.0; 3], radius: 1.0 };
        let e = rasterize_ball(&ball, h).unwrap();
        ReferenceCache {
            n: 2,
            s: params.s,
            h,
            r: 8.0,
            ps_b1: fractional_perimeter(&e, params, &table_h).unwrap(),
            vs_b1: vs_value(&e, params.s).unwrap().value,
            method: "grid".to_string(),
            error_estimate: 0.0,
        }
    }

    fn square_seed(cells_per_side: i64, h0: f64) -> GridSet {
        let mut cells = Vec::new();
        for i in 0..cells_per_side {
            for j in 0..cells_per_side {
                cells.push([i, j, 0]);
            }
        }
        GridSet::new(2, h0, [0.0; 3], cells).unwrap()
    }

    fn test_family(generations: usize) -> FractalFamily {
        FractalFamily {
            seed: square_seed(8, 0.125),
            a: 2,
            b: 3,
            sigma: 2.0 - libm::log2(3.0),
            generations,
        }
    }

    #[test]
    fn oscillating_profile_matches_the_analytic_volume() {
        let target = core::f64::consts::PI * (1.0 + 0.1 * 0.1 / 2.0);
        for j in [1u32, 3, 8] {
            let profile = oscillating_set(j, 0.1).unwrap();
            assert_eq!(profile.sample_count(), 64 * j as usize);
            let volume =
                core::f64::consts::PI * profile.mean(|v, _| (1.0 + v) * (1.0 + v));
            assert!(
                (volume - target).abs() <= 1e-9,
                "j={j}: volume {volume} vs {target}"
            );
            assert!((profile.min_radial_extent() - 0.9).abs() <= 1e-12);
        }
    }

    #[test]
    fn oscillating_set_rejects_degenerate_parameters() {
        assert!(matches!(
            oscillating_set(0, 0.1),
            Err(FamilyError::InvalidFrequency { j: 0 })
        ));
        assert!(matches!(
            oscillating_set(2, 0.0),
            Err(FamilyError::InvalidAmplitude { .. })
        ));
        assert!(matches!(
            oscillating_set(2, 0.25),
            Err(FamilyError::InvalidAmplitude { .. })
        ));
    }

    #[test]
    fn frequency_one_profile_has_two_lobes() {
        let profile = oscillating_set(1, 0.1).unwrap();
        let samples = profile.samples();
        let m = samples.len();
        let mut maxima = 0;
        for k in 0..m {
            let prev = samples[(k + m - 1) % m];
            let next = samples[(k + 1) % m];
            if samples[k] > prev && samples[k] > next && samples[k] > 0.05 {
                maxima += 1;
            }
        }
        assert_eq!(maxima, 2, "sin(2θ) has two positive lobes");
    }

    #[test]
    fn rasterized_volume_approaches_the_analytic_value() {
        let target = core::f64::consts::PI * 1.005;
        let coarse = oscillating_set(2, 0.1).unwrap().rasterize(1.0 / 32.0).unwrap();
        let fine = oscillating_set(2, 0.1).unwrap().rasterize(1.0 / 64.0).unwrap();
        let err_coarse = (coarse.volume() - target).abs();
        let err_fine = (fine.volume() - target).abs();
        assert!(err_fine <= err_coarse);
        assert!(err_fine <= 0.01 * target, "volume error {err_fine}");
    }

    #[test]
    fn interval_pair_bound_is_homogeneous_of_degree_s() {
        for s in [0.25, 0.5, 0.75] {
            let b4 = interval_pair_bound(4, s);
            let b8 = interval_pair_bound(8, s);
            assert!(b4 > 0.0);
            let measured = b8 / b4;
            let expected = libm::pow(2.0, s);
            assert!(
                (measured - expected).abs() <= 1e-12 * expected,
                "s={s}: {measured} vs {expected}"
            );
        }
    }

    #[test]
    fn growth_study_shows_monotone_perimeter_growth() {
        let params = params2(0.5);
        let h = 1.0 / 256.0;
        let table = build_interaction_table(params, h, 1e-4).unwrap();
        let rows = oscillating_growth_study(0.1, &[2, 4, 8], h, &params, &table).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows[1].perimeter > rows[0].perimeter);
        assert!(rows[2].perimeter > rows[1].perimeter);
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for row in &rows {
            lo = lo.min(row.ratio);
            hi = hi.max(row.ratio);
        }
        assert!(hi / lo <= 4.0, "growth ratios spread {lo}..{hi}");
        let bound_growth = rows[2].interval_bound / rows[1].interval_bound;
        assert!((bound_growth - libm::pow(2.0, params.s)).abs() <= 1e-12);
    }

    #[test]
    fn growth_study_rejects_coarse_grids() {
        let params = params2(0.5);
        let table = build_interaction_table(params, 0.05, 1e-4).unwrap();
        assert!(matches!(
            oscillating_growth_study(0.1, &[2, 4, 8], 1.0 / 64.0, &params, &table),
            Err(FamilyError::UnderResolved { .. })
        ));
    }

    #[test]
    fn cheeger_gap_stays_bounded_while_beta_grows() {
        let params = params2(0.5);
        let h = 1.0 / 32.0;
        let table = build_interaction_table(params, h, 1e-4).unwrap();
        let cache = grid_cache(&params, &table, h);
        let rows =
            cheeger_vs_beta_failure(0.1, 1.0, &[2, 4], h, &params, &table, &cache, 2718)
                .unwrap();
        assert_eq!(rows.len(), 2);
        for row in &rows {
            assert!(
                row.h_value <= row.h_upper * 1.02,
                "j={}: h {} above the sandwich {}",
                row.j,
                row.h_value,
                row.h_upper
            );
            assert!(row.gap >= -1e-9, "j={}: negative gap {}", row.j, row.gap);
            assert!(row.beta_sq > 0.0);
        }
        assert!(
            rows[1].beta_sq > rows[0].beta_sq,
            "beta should grow: {} vs {}",
            rows[0].beta_sq,
            rows[1].beta_sq
        );
        assert!(
            rows[1].ratio < rows[0].ratio,
            "gap/beta should decrease: {} vs {}",
            rows[0].ratio,
            rows[1].ratio
        );
    }

    #[test]
    fn fractal_build_matches_the_volume_series() {
        let h = 1.0 / 64.0;
        let fam0 = test_family(0);
        let omega0 = fractal_build(&fam0, h).unwrap();
        assert_eq!(omega0.len(), 64 * 64);
        assert!((omega0.volume() - 1.0).abs() <= 1e-12);

        let mut previous = omega0.volume();
        for generations in 1..=3usize {
            let fam = test_family(generations);
            let omega = fractal_build(&fam, h).unwrap();
            let expected = fam.seed.volume() * fam.volume_factor(generations);
            assert!(
                (omega.volume() - expected).abs() <= 1e-12 * expected,
                "M={generations}: {} vs {expected}",
                omega.volume()
            );
            // Generation increments carry exactly a·b^{k−1} copies.
            let added = omega.volume() - previous;
            let copy_volume = fam.seed.volume()
                * libm::pow(fam.lambda(), -2.0 * generations as f64);
            let copies = added / copy_volume;
            let expected_copies = fam.copies_in_generation(generations) as f64;
            assert!(
                (copies - expected_copies).abs() <= 1e-9,
                "M={generations}: {copies} copies vs {expected_copies}"
            );
            previous = omega.volume();
        }

        // Truncation error decreases along the family.
        let fam = test_family(3);
        let infinite = fam.seed.volume() * fam.infinite_volume_factor();
        let mut last_tail = f64::INFINITY;
        for generations in 1..=3usize {
            let omega = fractal_build(&test_family(generations), h).unwrap();
            let tail = infinite - omega.volume();
            assert!(tail > 0.0);
            assert!(tail < last_tail);
            last_tail = tail;
        }
    }

    #[test]
    fn fractal_build_rejects_unresolvable_lattices() {
        let fam = test_family(2);
        assert!(matches!(
            fractal_build(&fam, 1.0 / 48.0),
            Err(FamilyError::UnresolvedGeneration { .. })
        ));
        let mut bad = test_family(1);
        bad.b = 1;
        assert!(matches!(
            fractal_build(&bad, 1.0 / 64.0),
            Err(FamilyError::InvalidRange { field: "b" })
        ));
    }

    #[test]
    fn witness_shell_avoids_the_whole_family() {
        let h = 1.0 / 32.0;
        let fam = test_family(2);
        let omega = fractal_build(&fam, h).unwrap();
        let shell = fractal_witness(&fam, h).unwrap();
        assert!(!shell.is_empty());
        assert!(!omega.intersects(&shell), "witness shell must avoid the family");
    }

    #[test]
    fn series_bounds_have_the_three_regimes() {
        let sigma = 2.0 - libm::log2(3.0);
        // At s = σ the ratio is exactly one and the lower bound is linear.
        let at = fractal_series_bounds(2, 3, sigma, 2, sigma, 5, 10.0, 1.0).unwrap();
        assert_eq!(at.ratio, 1.0);
        let first = 2.0 / libm::pow(3.0, (2.0 - sigma) / (2.0 - sigma));
        assert!((at.lower - (1.0 + first * 5.0)).abs() <= 1e-12);

        // Below σ the upper bound stays under the infinite-series cap.
        let s_small = 0.25;
        let cap = {
            let ratio = libm::pow(3.0, (s_small - sigma) / (2.0 - sigma));
            let first = 2.0 / libm::pow(3.0, (2.0 - s_small) / (2.0 - sigma));
            10.0 * (1.0 + first / (1.0 - ratio))
        };
        for generations in [1usize, 5, 20, 80] {
            let b = fractal_series_bounds(2, 3, sigma, 2, s_small, generations, 10.0, 1.0)
                .unwrap();
            assert!(b.ratio < 1.0);
            assert!(b.upper <= cap + 1e-9);
        }

        // Above σ both bounds diverge geometrically.
        let lo = fractal_series_bounds(2, 3, sigma, 2, 0.75, 3, 10.0, 1.0).unwrap();
        let hi = fractal_series_bounds(2, 3, sigma, 2, 0.75, 9, 10.0, 1.0).unwrap();
        assert!(lo.ratio > 1.0);
        assert!(hi.lower > 2.0 * lo.lower);
    }

    #[test]
    fn series_bounds_bracket_the_measured_perimeter() {
        let s = 0.5;
        let params = params2(s);
        let h = 1.0 / 64.0;
        let table = build_interaction_table(params, h, 1e-4).unwrap();
        let fam = test_family(3);
        let t0 = fractal_build(&test_family(0), h).unwrap();
        let shell = fractal_witness(&fam, h).unwrap();
        let ps_t0 = fractional_perimeter(&t0, &params, &table).unwrap();
        let ls = table.interaction(&t0, &shell).unwrap();
        assert!(ps_t0 > ls && ls > 0.0);
        for generations in 1..=3usize {
            let bounds = fractal_series_bounds(
                fam.a,
                fam.b,
                fam.sigma,
                2,
                s,
                generations,
                ps_t0,
                ls,
            )
            .unwrap();
            let omega = fractal_build(&test_family(generations), h).unwrap();
            let measured = fractional_perimeter(&omega, &params, &table).unwrap();
            assert!(
                measured <= bounds.upper * (1.0 + SERIES_BRACKET_SLACK),
                "M={generations}: {measured} above {}",
                bounds.upper
            );
            assert!(
                measured >= bounds.lower * (1.0 - SERIES_BRACKET_SLACK),
                "M={generations}: {measured} below {}",
                bounds.lower
            );
        }
    }

    #[test]
    fn fractal_failure_demo_bounds_the_gap_while_the_deficit_grows() {
        let s = 0.75;
        let params = params2(s);
        let h = 1.0 / 64.0;
        let table = build_interaction_table(params, h, 1e-4).unwrap();
        let cache = grid_cache(&params, &table, h);
        let fam = test_family(3);
        let rows = fractal_failure_demo(&fam, 1.0, h, &params, &table, &cache, 99).unwrap();
        assert_eq!(rows.len(), 3);
        for row in &rows {
            assert!(
                row.h_value <= row.h_upper * 1.02,
                "M={}: h {} above the inscribed-ball bound {}",
                row.generation,
                row.h_value,
                row.h_upper
            );
            assert!(row.gap >= -1e-9);
        }
        assert!(rows[1].beta_sq_lower > rows[0].beta_sq_lower);
        assert!(rows[2].beta_sq_lower > rows[1].beta_sq_lower);

        // The deficit against the equivalent ball is a positive lower
        // bound for beta^2 at every depth, so the gap ratio against it
        // must fall across the whole run. The fixed-ball bound only
        // turns positive once the perimeter passes P_s(B_inf); compare
        // its ratio on that tail.
        for pair in rows.windows(2) {
            assert!(pair[1].delta_s > pair[0].delta_s);
            assert!(pair[0].delta_s > 0.0);
            let before = pair[0].gap / pair[0].delta_s;
            let after = pair[1].gap / pair[1].delta_s;
            assert!(
                after < before,
                "M={}: gap/delta {} did not fall below {}",
                pair[1].generation,
                after,
                before
            );
        }
        if rows[1].beta_sq_lower > 0.0 {
            let ratio = |r: &FractalFailureRow| r.gap / r.beta_sq_lower;
            assert!(ratio(&rows[2]) < ratio(&rows[1]));
        }

        // s below sigma is outside the divergence regime.
        let params_low = params2(0.25);
        let table_low = build_interaction_table(params_low, h, 1e-4).unwrap();
        let cache_low = grid_cache(&params_low, &table_low, h);
        assert!(matches!(
            fractal_failure_demo(&fam, 1.0, h, &params_low, &table_low, &cache_low, 1),
            Err(FamilyError::InvalidRange { field: "s" })
        ));
    }
}
