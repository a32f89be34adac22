//! Fractional Cheeger constants h_{m,s}(Ω) = inf { P_s(E)/|E|^m : E ⊆ Ω }:
//! exact brute force over small occupancies, an annealed subset search with
//! O(1) proposals for larger domains, the exact scaling law, and the
//! Cheeger gap diagnostics against the equivalent ball.

use alloc::vec::Vec;

use crate::grid::{GridError, GridSet};
use crate::indices::{index_report, IndexError};
use crate::kernel::{InteractionTable, KernelError, KernelParams};
use crate::minimize::{ANNEAL_COOLING_PERIOD, ANNEAL_COOLING_RATIO, ANNEAL_T0_FACTOR};
use crate::perimeter::{fractional_perimeter, PerimeterError};
use crate::quad::KahanSum;
use crate::reference::ReferenceCache;
use crate::rng::DetRng;

/// Occupancy cap for exhaustive enumeration (2^22 subsets).
pub const BRUTEFORCE_MAX_CELLS: usize = 22;

/// Independent annealing restarts of the heuristic.
pub const HEURISTIC_RESTARTS: u64 = 4;

/// Proposal budget: per-cell rate clamped to a global range, shared
/// between the restarts.
pub const HEURISTIC_PROPOSALS_PER_CELL: u64 = 200;
pub const HEURISTIC_MIN_PROPOSALS: u64 = 40_000;
pub const HEURISTIC_MAX_PROPOSALS: u64 = 600_000;

/// Accepted flips between from-scratch refreshes of the tracked field.
pub const RATIO_REFRESH_ACCEPTS: u64 = 4096;

/// Candidate flips probed at each restart to set the starting
/// temperature. Single-flip ratio changes shrink like 1/N, so the
/// temperature must track the per-flip scale, not the ratio itself.
pub const ANNEAL_PROBE_FLIPS: usize = 64;

/// Candidates within this relative window of the incumbent are re-scored
/// canonically (sorted-index summation) so that exact ties are exact and
/// the tie-breaking rules see drift-free values.
pub const TIE_WINDOW_REL: f64 = 1e-9;

/// Cap on polish sweeps; hitting it means the descent cycled, which the
/// strictly decreasing objective rules out short of a bug.
pub const POLISH_SWEEP_CAP: usize = 500;

/// Gap diagnostics are refused below this potential gap: κ = gap/ζ_s is
/// 0/0 noise for a near-ball domain.
pub const ZETA_NEAR_BALL: f64 = 1e-3;

/// Largest dense offset table (entries); beyond it pair values fall back
/// to direct table queries.
pub const DENSE_OFFSET_LIMIT: usize = 1 << 24;

/// A heuristic solve counts a domain as calibrable-within-tolerance when
/// the optimal subset covers this fraction of it.
pub const CALIBRABLE_COVERAGE: f64 = 0.99;

/// Agreement demanded of the measured vs predicted scaling ratio.
pub const SCALING_REL_TOL: f64 = 0.02;

/// Errors from Cheeger computations.
#[derive(Debug)]
pub enum CheegerError {
    Grid(GridError),
    Kernel(KernelError),
    Perimeter(PerimeterError),
    Index(IndexError),
    /// Domain too large for exhaustive enumeration.
    TooManyCells { got: usize, max: usize },
    EmptyDomain,
    /// Exponent m outside the operation's admissible range.
    InvalidExponent { m: f64 },
    /// Gap diagnostics refused: the domain is indistinguishable from its
    /// equivalent ball at this resolution.
    NearBall { zeta: f64 },
    /// Polish failed to reach a fixed point within the sweep cap.
    BudgetExhausted { sweeps: usize },
}

impl core::fmt::Display for CheegerError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            CheegerError::Grid(e) => write!(f, "grid error: {e}"),
            CheegerError::Kernel(e) => write!(f, "kernel error: {e}"),
            CheegerError::Perimeter(e) => write!(f, "perimeter error: {e}"),
            CheegerError::Index(e) => write!(f, "index error: {e}"),
            CheegerError::TooManyCells { got, max } => {
                write!(f, "domain has {got} cells, brute force allows {max}")
            }
            CheegerError::EmptyDomain => write!(f, "domain has no cells"),
            CheegerError::InvalidExponent { m } => {
                write!(f, "exponent m = {m} outside the admissible range")
            }
            CheegerError::NearBall { zeta } => write!(
                f,
                "potential gap {zeta:.3e} too small for gap diagnostics (near-ball domain)"
            ),
            CheegerError::BudgetExhausted { sweeps } => {
                write!(f, "polish did not reach a fixed point in {sweeps} sweeps")
            }
        }
    }
}

impl From<GridError> for CheegerError {
    fn from(e: GridError) -> Self {
        CheegerError::Grid(e)
    }
}

impl From<KernelError> for CheegerError {
    fn from(e: KernelError) -> Self {
        CheegerError::Kernel(e)
    }
}

impl From<PerimeterError> for CheegerError {
    fn from(e: PerimeterError) -> Self {
        CheegerError::Perimeter(e)
    }
}

impl From<IndexError> for CheegerError {
    fn from(e: IndexError) -> Self {
        CheegerError::Index(e)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheegerMethod {
    Bruteforce,
    Heuristic,
}

/// Gap diagnostics of a domain against its equivalent ball.
#[derive(Clone, Copy, Debug)]
pub struct GapReport {
    /// (h_{m,s}(Ω) − h_{m,s}(B_r))/h_{m,s}(B_r).
    pub gap: f64,
    /// Potential gap ζ_s(Ω).
    pub zeta: f64,
    /// Squared Fraenkel asymmetry α(Ω)².
    pub alpha_sq: f64,
    /// gap/ζ_s: the empirical constant in gap ≥ κ·ζ_s.
    pub kappa_implied: f64,
    /// gap/α²: the empirical constant in gap ≥ γ·α².
    pub gamma_implied: f64,
    /// Lower bound |Ω|·(h(B)/h(Ω))^{1/(m−(n−s)/n)} on the optimal volume.
    pub volume_bound: f64,
    /// |E| of the found Cheeger set.
    pub optimal_volume: f64,
    /// Isoperimetric deficit of the found Cheeger set; bounded by `gap`.
    pub delta_e: f64,
}

/// Outcome of a Cheeger solve.
#[derive(Clone, Debug)]
pub struct CheegerResult {
    /// h_{m,s}(Ω), re-evaluated canonically on the optimal subset.
    pub value: f64,
    /// The optimizing subset E ⊆ Ω.
    pub optimal: GridSet,
    /// Whether E = Ω cellwise.
    pub calibrable: bool,
    pub method: CheegerMethod,
    /// Filled by `cheeger_gap_check`.
    pub gap: Option<GapReport>,
}

impl CheegerResult {
    /// Fraction of the domain covered by the optimal subset.
    pub fn coverage(&self, domain: &GridSet) -> f64 {
        self.optimal.len() as f64 / domain.len() as f64
    }
}

/// Pair-value lookup for offsets within a domain: a dense array when the
/// offset box is small enough, direct table queries otherwise. Dense
/// entries are copied from the table, so both paths are bit-identical.
enum KLookup<'a> {
    Dense { lo: [i64; 3], span: [usize; 3], values: Vec<f64>, table: &'a InteractionTable },
    Direct(&'a InteractionTable),
}

impl<'a> KLookup<'a> {
    fn build(domain: &GridSet, table: &'a InteractionTable) -> Self {
        let Ok((blo, bhi)) = domain.bounding_box() else {
            return KLookup::Direct(table);
        };
        let dim = domain.dim();
        let mut lo = [0i64; 3];
        let mut span = [1usize; 3];
        let mut total = 1usize;
        for a in 0..dim {
            let extent = (bhi[a] - blo[a]) as usize;
            lo[a] = -(extent as i64);
            span[a] = 2 * extent + 1;
            total = total.saturating_mul(span[a]);
        }
        if total > DENSE_OFFSET_LIMIT {
            return KLookup::Direct(table);
        }
        let mut values = Vec::with_capacity(total);
        let zspan = span[2];
        let yspan = span[1];
        for i in 0..span[0] {
            for j in 0..yspan {
                for k in 0..zspan {
                    let delta = [lo[0] + i as i64, lo[1] + j as i64, lo[2] + k as i64];
                    values.push(table.unit_value(&delta));
                }
            }
        }
        KLookup::Dense { lo, span, values, table }
    }

    #[inline]
    fn get(&self, delta: &[i64; 3]) -> f64 {
        match self {
            KLookup::Dense { lo, span, values, table } => {
                let i = delta[0] - lo[0];
                let j = delta[1] - lo[1];
                let k = delta[2] - lo[2];
                if i < 0
                    || j < 0
                    || k < 0
                    || i as usize >= span[0]
                    || j as usize >= span[1]
                    || k as usize >= span[2]
                {
                    return table.unit_value(delta);
                }
                values[(i as usize * span[1] + j as usize) * span[2] + k as usize]
            }
            KLookup::Direct(table) => table.unit_value(delta),
        }
    }
}

/// Shared per-solve constants.
struct RatioProblem<'a> {
    cells: &'a [[i64; 3]],
    lookup: KLookup<'a>,
    s_unit: f64,
    cell_scale: f64,
    cell_volume: f64,
    m: f64,
}

impl RatioProblem<'_> {
    fn ratio_from(&self, count: usize, q_unit: f64) -> f64 {
        let p = self.cell_scale * (count as f64 * self.s_unit - 2.0 * q_unit);
        p / libm::pow(count as f64 * self.cell_volume, self.m)
    }

    /// Drift-free pair sum of a membership pattern: sorted-index order, so
    /// congruent subsets produce bit-identical values.
    fn canonical_q(&self, member: &[bool]) -> f64 {
        let mut acc = KahanSum::new();
        for (j, &mj) in member.iter().enumerate() {
            if !mj {
                continue;
            }
            let cj = &self.cells[j];
            for (i, &mi) in member.iter().enumerate().take(j) {
                if !mi {
                    continue;
                }
                let ci = &self.cells[i];
                acc.add(self.lookup.get(&[cj[0] - ci[0], cj[1] - ci[1], cj[2] - ci[2]]));
            }
        }
        acc.value()
    }
}

/// Tie-breaking: smaller ratio, then larger subset, then lexicographically
/// smaller sorted cell sequence (the pattern containing the first
/// differing domain cell).
fn better_pattern(
    r_new: f64,
    n_new: usize,
    member_new: &[bool],
    r_old: f64,
    n_old: usize,
    member_old: &[bool],
) -> bool {
    if r_new != r_old {
        return r_new < r_old;
    }
    if n_new != n_old {
        return n_new > n_old;
    }
    for (a, b) in member_new.iter().zip(member_old.iter()) {
        if a != b {
            return *a;
        }
    }
    false
}

fn build_subset(domain: &GridSet, member: &[bool]) -> Result<GridSet, GridError> {
    let cells: Vec<[i64; 3]> = domain
        .cells()
        .iter()
        .zip(member.iter())
        .filter_map(|(c, &m)| if m { Some(*c) } else { None })
        .collect();
    GridSet::new(domain.dim(), domain.cell_size(), domain.origin(), cells)
}

/// Reported value: canonical perimeter of the winner over its volume
/// power, shared with every other module's perimeter path.
fn reported_value(
    optimal: &GridSet,
    params: &KernelParams,
    table: &InteractionTable,
    m: f64,
) -> Result<f64, CheegerError> {
    let p = fractional_perimeter(optimal, params, table)?;
    Ok(p / libm::pow(optimal.volume(), m))
}

fn validate_domain(
    domain: &GridSet,
    params: &KernelParams,
    m: f64,
) -> Result<(), CheegerError> {
    if domain.is_empty() {
        return Err(CheegerError::EmptyDomain);
    }
    if params.dim != domain.dim() {
        return Err(CheegerError::Grid(GridError::DimensionMismatch {
            expected: params.dim,
            got: domain.dim(),
        }));
    }
    if !(m > 0.0) || !m.is_finite() {
        return Err(CheegerError::InvalidExponent { m });
    }
    Ok(())
}

/// Exact h_{m,s} over all nonempty subsets of a small occupancy, by
/// Gray-code enumeration with an incrementally updated pair sum.
pub fn cheeger_bruteforce(
    domain: &GridSet,
    m: f64,
    params: &KernelParams,
    table: &InteractionTable,
) -> Result<CheegerResult, CheegerError> {
    validate_domain(domain, params, m)?;
    let n_cells = domain.len();
    if n_cells > BRUTEFORCE_MAX_CELLS {
        return Err(CheegerError::TooManyCells { got: n_cells, max: BRUTEFORCE_MAX_CELLS });
    }
    let table = table.with_cell_size(domain.cell_size())?;
    let cells = domain.cells();
    let lookup = KLookup::build(domain, &table);
    let problem = RatioProblem {
        cells,
        lookup,
        s_unit: table.complement_sum_unit(),
        cell_scale: table.cell_scale(),
        cell_volume: libm::pow(domain.cell_size(), domain.dim() as f64),
        m,
    };

    // Pairwise unit values once: w[j][i].
    let mut w = alloc::vec![alloc::vec![0.0f64; n_cells]; n_cells];
    for j in 0..n_cells {
        for i in 0..n_cells {
            if i == j {
                continue;
            }
            let d = [
                cells[j][0] - cells[i][0],
                cells[j][1] - cells[i][1],
                cells[j][2] - cells[i][2],
            ];
            w[j][i] = problem.lookup.get(&d);
        }
    }

    let to_member = |mask: u64| -> Vec<bool> { (0..n_cells).map(|i| mask >> i & 1 == 1).collect() };

    let mut mask: u64 = 0;
    let mut count: usize = 0;
    let mut q: f64 = 0.0;
    let mut best_mask: u64 = 0;
    let mut best_member: Vec<bool> = Vec::new();
    let mut best_r = f64::INFINITY;
    let mut best_n = 0usize;

    let total: u64 = 1u64 << n_cells;
    for k in 1..total {
        let bit = k.trailing_zeros() as usize;
        let others = mask & !(1u64 << bit);
        let mut dq = 0.0;
        let mut mm = others;
        while mm != 0 {
            let i = mm.trailing_zeros() as usize;
            dq += w[bit][i];
            mm &= mm - 1;
        }
        if mask >> bit & 1 == 1 {
            mask &= !(1u64 << bit);
            count -= 1;
            q -= dq;
        } else {
            mask |= 1u64 << bit;
            count += 1;
            q += dq;
        }
        // Periodic refresh bounds incremental drift to a tiny window.
        if k % 1024 == 0 {
            q = problem.canonical_q(&to_member(mask));
        }
        if count == 0 {
            continue;
        }
        let r = problem.ratio_from(count, q);
        if r <= best_r + TIE_WINDOW_REL * libm::fabs(best_r) {
            // Canonical re-score inside the tie window, so equal-by-
            // congruence subsets compare exactly equal.
            let member = to_member(mask);
            let rc = problem.ratio_from(count, problem.canonical_q(&member));
            if best_member.is_empty()
                || better_pattern(rc, count, &member, best_r, best_n, &best_member)
            {
                best_r = rc;
                best_n = count;
                best_mask = mask;
                best_member = member;
            }
        }
    }

    let optimal = build_subset(domain, &best_member)?;
    let value = reported_value(&optimal, params, &table, m)?;
    Ok(CheegerResult {
        value,
        optimal,
        calibrable: best_mask == total - 1,
        method: CheegerMethod::Bruteforce,
        gap: None,
    })
}

/// Annealing state for the ratio objective: membership plus the field
/// W[j] = Σ_{i∈E, i≠j} K(c_j − c_i). Proposals cost O(1); accepted flips
/// cost O(N) to update the field.
struct RatioState {
    member: Vec<bool>,
    count: usize,
    q_unit: f64,
    w: Vec<f64>,
}

impl RatioState {
    fn init(problem: &RatioProblem, member: Vec<bool>) -> Self {
        let n = member.len();
        let mut w = alloc::vec![0.0f64; n];
        for (j, wj) in w.iter_mut().enumerate() {
            let cj = &problem.cells[j];
            let mut acc = KahanSum::new();
            for (i, &mi) in member.iter().enumerate() {
                if !mi || i == j {
                    continue;
                }
                let ci = &problem.cells[i];
                acc.add(problem.lookup.get(&[cj[0] - ci[0], cj[1] - ci[1], cj[2] - ci[2]]));
            }
            *wj = acc.value();
        }
        let mut q = KahanSum::new();
        for (j, &mj) in member.iter().enumerate() {
            if mj {
                q.add(w[j]);
            }
        }
        let count = member.iter().filter(|&&m| m).count();
        RatioState { member, count, q_unit: 0.5 * q.value(), w }
    }

    fn refresh(&mut self, problem: &RatioProblem) {
        let member = core::mem::take(&mut self.member);
        *self = RatioState::init(problem, member);
    }

    /// Ratio after flipping cell j, without applying it.
    fn ratio_after(&self, problem: &RatioProblem, j: usize) -> f64 {
        let (count, q) = if self.member[j] {
            (self.count - 1, self.q_unit - self.w[j])
        } else {
            (self.count + 1, self.q_unit + self.w[j])
        };
        problem.ratio_from(count, q)
    }

    fn flip(&mut self, problem: &RatioProblem, j: usize) {
        let adding = !self.member[j];
        let sign = if adding { 1.0 } else { -1.0 };
        self.q_unit += sign * self.w[j];
        self.count = if adding { self.count + 1 } else { self.count - 1 };
        self.member[j] = adding;
        let cj = &problem.cells[j];
        for (i, wi) in self.w.iter_mut().enumerate() {
            if i == j {
                continue;
            }
            let ci = &problem.cells[i];
            *wi += sign * problem.lookup.get(&[ci[0] - cj[0], ci[1] - cj[1], ci[2] - cj[2]]);
        }
    }
}

/// First-improvement descent sweeps until no single flip lowers the ratio.
fn polish_ratio(
    problem: &RatioProblem,
    state: &mut RatioState,
) -> Result<(), CheegerError> {
    let n = state.member.len();
    for _ in 0..POLISH_SWEEP_CAP {
        let mut improved = false;
        let current = problem.ratio_from(state.count, state.q_unit);
        let mut best_here = current;
        for j in 0..n {
            if state.member[j] && state.count == 1 {
                continue;
            }
            let r = state.ratio_after(problem, j);
            if r < best_here - 1e-15 * libm::fabs(best_here) {
                state.flip(problem, j);
                best_here = problem.ratio_from(state.count, state.q_unit);
                improved = true;
            }
        }
        if !improved {
            return Ok(());
        }
    }
    Err(CheegerError::BudgetExhausted { sweeps: POLISH_SWEEP_CAP })
}

/// Deterministic starting patterns: the full domain, a grown half around
/// the cell nearest the barycenter, a random half, and a random quarter.
fn restart_pattern(
    domain: &GridSet,
    restart: u64,
    rng: &mut DetRng,
) -> Vec<bool> {
    let n = domain.len();
    match restart {
        0 => alloc::vec![true; n],
        1 => grown_half(domain),
        _ => {
            let keep = if restart == 2 { 0.5 } else { 0.25 };
            let mut member: Vec<bool> = (0..n).map(|_| rng.uniform() < keep).collect();
            if !member.iter().any(|&m| m) {
                member[0] = true;
            }
            member
        }
    }
}

/// Breadth-first half of the domain from the cell nearest the barycenter.
fn grown_half(domain: &GridSet) -> Vec<bool> {
    let n = domain.len();
    let cells = domain.cells();
    let bary = match domain.barycenter() {
        Ok(b) => b,
        Err(_) => return alloc::vec![true; n],
    };
    let mut seed = 0usize;
    let mut best_d = f64::INFINITY;
    for (i, c) in cells.iter().enumerate() {
        let p = domain.cell_center(c);
        let mut d2 = 0.0;
        for a in 0..domain.dim() {
            let d = p[a] - bary[a];
            d2 += d * d;
        }
        if d2 < best_d {
            best_d = d2;
            seed = i;
        }
    }
    let index_of = |c: &[i64; 3]| cells.binary_search(c).ok();
    let target = (n / 2).max(1);
    let mut member = alloc::vec![false; n];
    let mut queue = alloc::collections::VecDeque::new();
    member[seed] = true;
    queue.push_back(seed);
    let mut taken = 1usize;
    while taken < target {
        let Some(j) = queue.pop_front() else { break };
        let c = cells[j];
        for a in 0..domain.dim() {
            for d in [-1i64, 1] {
                let mut nb = c;
                nb[a] += d;
                if let Some(i) = index_of(&nb) {
                    if !member[i] {
                        member[i] = true;
                        taken += 1;
                        queue.push_back(i);
                        if taken >= target {
                            break;
                        }
                    }
                }
            }
        }
    }
    member
}

/// Starting temperature from a sample of single-flip ratio changes at the
/// restart state. On large domains one flip moves the ratio by O(1/N) of
/// its value, so a temperature tied to the ratio itself would make the
/// walk ignore the landscape until deep into the cooling schedule. Falls
/// back to `ANNEAL_T0_FACTOR` times the ratio when every probe is
/// degenerate (all flips neutral or non-finite).
fn probe_temperature(
    problem: &RatioProblem<'_>,
    state: &RatioState,
    ratio: f64,
    rng: &mut DetRng,
) -> f64 {
    let n = state.member.len();
    let mut sum = KahanSum::new();
    let mut probes = 0u32;
    for _ in 0..ANNEAL_PROBE_FLIPS {
        let j = rng.index(n);
        if state.member[j] && state.count == 1 {
            continue;
        }
        let de = state.ratio_after(problem, j) - ratio;
        if de.is_finite() && de != 0.0 {
            sum.add(libm::fabs(de));
            probes += 1;
        }
    }
    if probes == 0 {
        return ANNEAL_T0_FACTOR * libm::fabs(ratio);
    }
    sum.value() / f64::from(probes)
}

/// Annealed subset search for h_{m,s}: multi-restart Metropolis over cell
/// flips with the O(1)-proposal field state, each restart polished to a
/// local minimum, winners compared canonically under the tie rules.
pub fn cheeger_heuristic(
    domain: &GridSet,
    m: f64,
    params: &KernelParams,
    table: &InteractionTable,
    seed: u64,
) -> Result<CheegerResult, CheegerError> {
    validate_domain(domain, params, m)?;
    let table = table.with_cell_size(domain.cell_size())?;
    let n = domain.len();
    let lookup = KLookup::build(domain, &table);
    let problem = RatioProblem {
        cells: domain.cells(),
        lookup,
        s_unit: table.complement_sum_unit(),
        cell_scale: table.cell_scale(),
        cell_volume: libm::pow(domain.cell_size(), domain.dim() as f64),
        m,
    };

    let total_budget = (HEURISTIC_PROPOSALS_PER_CELL * n as u64)
        .clamp(HEURISTIC_MIN_PROPOSALS, HEURISTIC_MAX_PROPOSALS);
    let per_restart = total_budget / HEURISTIC_RESTARTS;

    let mut rng = DetRng::new(seed);
    let mut best: Option<(f64, usize, Vec<bool>)> = None;

    for restart in 0..HEURISTIC_RESTARTS {
        let mut restart_rng = rng.fork(restart);
        let mut state = RatioState::init(&problem, restart_pattern(domain, restart, &mut restart_rng));
        let mut local_best = state.member.clone();
        let mut local_best_r = problem.ratio_from(state.count, state.q_unit);
        let t0 = probe_temperature(&problem, &state, local_best_r, &mut restart_rng);
        let mut accepts: u64 = 0;

        for _ in 0..per_restart {
            let j = restart_rng.index(n);
            if state.member[j] && state.count == 1 {
                continue;
            }
            let current = problem.ratio_from(state.count, state.q_unit);
            let candidate = state.ratio_after(&problem, j);
            let de = candidate - current;
            let temp = t0
                * libm::pow(ANNEAL_COOLING_RATIO, (accepts / ANNEAL_COOLING_PERIOD) as f64);
            if de <= 0.0 || restart_rng.uniform() < libm::exp(-de / temp) {
                state.flip(&problem, j);
                accepts += 1;
                if candidate < local_best_r {
                    local_best_r = candidate;
                    local_best = state.member.clone();
                }
                if accepts % RATIO_REFRESH_ACCEPTS == 0 {
                    state.refresh(&problem);
                }
            }
        }

        let mut polish_state = RatioState::init(&problem, local_best);
        polish_ratio(&problem, &mut polish_state)?;

        // Canonical end-of-restart score: drift-free and order-independent.
        let member = polish_state.member;
        let count = member.iter().filter(|&&x| x).count();
        let rc = problem.ratio_from(count, problem.canonical_q(&member));
        let replace = match &best {
            None => true,
            Some((br, bn, bm)) => better_pattern(rc, count, &member, *br, *bn, bm),
        };
        if replace {
            best = Some((rc, count, member));
        }
    }

    let (_, count, member) = best.expect("at least one restart ran");
    let optimal = build_subset(domain, &member)?;
    let value = reported_value(&optimal, params, &table, m)?;
    Ok(CheegerResult {
        value,
        optimal,
        calibrable: count == n,
        method: CheegerMethod::Heuristic,
        gap: None,
    })
}

/// Measured and predicted scaling of h_{m,s} under Ω → λΩ.
#[derive(Clone, Copy, Debug)]
pub struct ScalingCheck {
    /// h_{m,s}(λΩ)/h_{m,s}(Ω) from two heuristic solves.
    pub ratio: f64,
    /// λ^{(1−m)n−s}.
    pub expected: f64,
}

/// Verifies h_{m,s}(λΩ) = λ^{(1−m)n−s}·h_{m,s}(Ω) by solving both domains
/// with the same seed. Scaling the lattice keeps the cells and scales the
/// pair values exactly, so the two searches walk identical paths and the
/// measured ratio is exact up to roundoff.
pub fn cheeger_scaling_check(
    domain: &GridSet,
    m: f64,
    lambda: f64,
    params: &KernelParams,
    table: &InteractionTable,
    seed: u64,
) -> Result<ScalingCheck, CheegerError> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(CheegerError::Grid(GridError::InvalidCellSize(lambda)));
    }
    let base = cheeger_heuristic(domain, m, params, table, seed)?;
    let scaled_domain = domain.scale(lambda)?;
    let scaled = cheeger_heuristic(&scaled_domain, m, params, table, seed)?;
    let n = params.dim as f64;
    let expected = libm::pow(lambda, (1.0 - m) * n - params.s);
    Ok(ScalingCheck { ratio: scaled.value / base.value, expected })
}

/// Cheeger gap diagnostics: solves the domain heuristically, compares
/// h_{m,s}(Ω) against the equivalent-ball reference
/// h_{m,s}(B_r) = r^{n−s}·P_s(B_1)/|Ω|^m, and reports the implied
/// stability constants together with the intermediate bounds on the found
/// Cheeger set. Requires m above the scaling threshold (n−s)/n.
pub fn cheeger_gap_check(
    domain: &GridSet,
    m: f64,
    params: &KernelParams,
    table: &InteractionTable,
    cache: &ReferenceCache,
    seed: u64,
) -> Result<CheegerResult, CheegerError> {
    let n = params.dim as f64;
    let threshold = (n - params.s) / n;
    if !(m > threshold) || !m.is_finite() {
        return Err(CheegerError::InvalidExponent { m });
    }
    let mut result = cheeger_heuristic(domain, m, params, table, seed)?;
    let report = index_report(domain, params, table, cache)?;

    let h_omega = result.value;
    let h_ball = libm::pow(report.r, n - params.s) * cache.ps_b1
        / libm::pow(domain.volume(), m);
    let gap = (h_omega - h_ball) / h_ball;
    if report.zeta_s <= ZETA_NEAR_BALL {
        return Err(CheegerError::NearBall { zeta: report.zeta_s });
    }
    let alpha_sq = report.alpha * report.alpha;
    let exponent = 1.0 / (m - threshold);
    let volume_bound = domain.volume() * libm::pow(h_ball / h_omega, exponent);
    let e_report = index_report(&result.optimal, params, table, cache)?;

    result.gap = Some(GapReport {
        gap,
        zeta: report.zeta_s,
        alpha_sq,
        kappa_implied: gap / report.zeta_s,
        gamma_implied: gap / alpha_sq,
        volume_bound,
        optimal_volume: result.optimal.volume(),
        delta_e: e_report.delta_s,
    });
    Ok(result)
}
