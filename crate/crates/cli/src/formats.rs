//! Pinned on-disk formats: reference cache files, grid sets, radial
//! profiles and minimization results.
//!
//! Everything is JSON. Floating-point fields round-trip bit-exactly
//! through serde_json (shortest decimal representation that recovers the
//! same bits), which is what lets cache consumers insist on exact
//! parameter matches instead of fuzzy comparisons.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use fracperim_core::grid::GridSet;
use fracperim_core::profile::RadialProfile;
use fracperim_core::reference::ReferenceCache;
use serde::{Deserialize, Serialize};

/// One reference-cache record: unit-ball constants for a single (n, s, h).
///
/// A cache file is a JSON array of these records, one per s value of the
/// build invocation. Field names are part of the format.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CacheRecord {
    pub n: usize,
    pub s: f64,
    pub h: f64,
    #[serde(rename = "R")]
    pub r: f64,
    #[serde(rename = "P_s_B1")]
    pub ps_b1: f64,
    #[serde(rename = "V_s_B1")]
    pub vs_b1: f64,
    pub method: String,
    pub error_estimate: f64,
}

impl From<&ReferenceCache> for CacheRecord {
    fn from(c: &ReferenceCache) -> Self {
        CacheRecord {
            n: c.n,
            s: c.s,
            h: c.h,
            r: c.r,
            ps_b1: c.ps_b1,
            vs_b1: c.vs_b1,
            method: c.method.clone(),
            error_estimate: c.error_estimate,
        }
    }
}

impl From<&CacheRecord> for ReferenceCache {
    fn from(r: &CacheRecord) -> Self {
        ReferenceCache {
            n: r.n,
            s: r.s,
            h: r.h,
            r: r.r,
            ps_b1: r.ps_b1,
            vs_b1: r.vs_b1,
            method: r.method.clone(),
            error_estimate: r.error_estimate,
        }
    }
}

/// Writes a cache file (JSON array of records) with a trailing newline.
pub fn write_cache_file(path: &Path, caches: &[ReferenceCache]) -> Result<()> {
    let records: Vec<CacheRecord> = caches.iter().map(CacheRecord::from).collect();
    let body = serde_json::to_string_pretty(&records)
        .context("serializing reference cache records")?;
    fs::write(path, body + "\n")
        .with_context(|| format!("writing cache file {}", path.display()))?;
    Ok(())
}

/// Reads every record of a cache file.
pub fn read_cache_file(path: &Path) -> Result<Vec<ReferenceCache>> {
    let body = fs::read_to_string(path)
        .with_context(|| format!("reading cache file {}", path.display()))?;
    let records: Vec<CacheRecord> = serde_json::from_str(&body)
        .with_context(|| format!("parsing cache file {}", path.display()))?;
    Ok(records.iter().map(ReferenceCache::from).collect())
}

/// Finds the record matching (n, s, h) exactly; s and h are compared
/// bit-for-bit, which JSON round-tripping guarantees to preserve.
/// Mismatches are refused rather than approximated.
pub fn find_record(caches: &[ReferenceCache], n: usize, s: f64, h: f64) -> Result<ReferenceCache> {
    for c in caches {
        if c.check_matches(n, s, h).is_ok() {
            return Ok(c.clone());
        }
    }
    bail!(
        "no cache record for n = {n}, s = {s}, h = {h}; \
         refusing mismatched parameters (rebuild the cache for this triple)"
    );
}

/// Grid set on disk: lattice dimension, cell size, continuum origin and
/// the occupied cell indices. Cells carry n coordinates each.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GridSetFile {
    pub n: usize,
    pub h: f64,
    pub origin: Vec<f64>,
    pub cells: Vec<Vec<i64>>,
}

impl GridSetFile {
    pub fn from_set(e: &GridSet) -> Self {
        let n = e.dim();
        let o = e.origin();
        GridSetFile {
            n,
            h: e.cell_size(),
            origin: o[..n].to_vec(),
            cells: e.cells().iter().map(|c| c[..n].to_vec()).collect(),
        }
    }

    pub fn to_set(&self) -> Result<GridSet> {
        if self.n != 2 && self.n != 3 {
            bail!("grid set dimension must be 2 or 3, got {}", self.n);
        }
        if self.origin.len() != self.n {
            bail!("origin has {} coordinates, expected {}", self.origin.len(), self.n);
        }
        let mut origin = [0.0f64; 3];
        origin[..self.n].copy_from_slice(&self.origin);
        let mut cells = Vec::with_capacity(self.cells.len());
        for (i, c) in self.cells.iter().enumerate() {
            if c.len() != self.n {
                bail!("cell {i} has {} coordinates, expected {}", c.len(), self.n);
            }
            let mut cc = [0i64; 3];
            cc[..self.n].copy_from_slice(c);
            cells.push(cc);
        }
        GridSet::new(self.n, self.h, origin, cells)
            .map_err(|e| anyhow::anyhow!("invalid grid set: {e}"))
    }
}

/// Writes a grid set to a JSON file.
pub fn write_grid_set(path: &Path, e: &GridSet) -> Result<()> {
    let body = serde_json::to_string(&GridSetFile::from_set(e)).context("serializing grid set")?;
    fs::write(path, body + "\n")
        .with_context(|| format!("writing grid set {}", path.display()))?;
    Ok(())
}

/// Reads a grid set from a JSON file.
pub fn read_grid_set(path: &Path) -> Result<GridSet> {
    let body = fs::read_to_string(path)
        .with_context(|| format!("reading grid set {}", path.display()))?;
    let file: GridSetFile = serde_json::from_str(&body)
        .with_context(|| format!("parsing grid set {}", path.display()))?;
    file.to_set()
}

/// Radial profile on disk: sample count M and the samples of u at the M
/// equispaced angles.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProfileFile {
    #[serde(rename = "M")]
    pub m: usize,
    pub samples: Vec<f64>,
}

impl ProfileFile {
    pub fn from_profile(u: &RadialProfile) -> Self {
        ProfileFile { m: u.sample_count(), samples: u.samples().to_vec() }
    }

    pub fn to_profile(&self) -> Result<RadialProfile> {
        if self.m != self.samples.len() {
            bail!("profile declares M = {} but carries {} samples", self.m, self.samples.len());
        }
        RadialProfile::new(self.samples.clone())
            .map_err(|e| anyhow::anyhow!("invalid radial profile: {e}"))
    }
}

/// Minimization run configuration as embedded in a result file.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MinimizeConfigFile {
    pub n: usize,
    pub s: f64,
    pub epsilon: f64,
    pub lambda: f64,
    pub method: String,
    pub init: String,
    pub h: f64,
    pub samples: usize,
    pub iters: u64,
    pub seed: u64,
    pub target_volume: f64,
}

/// Maximum number of trace entries kept in a result file; longer traces
/// are downsampled by a uniform stride (the final entry is always kept).
pub const TRACE_KEEP: usize = 256;

/// Minimization result file: the configuration that produced it, scalar
/// diagnostics, the downsampled energy trace and the final set.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MinimizeResultFile {
    pub config: MinimizeConfigFile,
    pub energy: f64,
    pub penalized_energy: f64,
    pub ball_energy: f64,
    pub volume_error: f64,
    pub hausdorff: f64,
    pub converged: bool,
    pub trace: Vec<f64>,
    pub final_set: GridSetFile,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profile: Option<ProfileFile>,
}

/// Downsamples a trace to at most TRACE_KEEP entries, keeping the last.
pub fn downsample_trace(trace: &[f64]) -> Vec<f64> {
    if trace.len() <= TRACE_KEEP {
        return trace.to_vec();
    }
    let stride = trace.len().div_ceil(TRACE_KEEP);
    let mut out: Vec<f64> = trace.iter().step_by(stride).copied().collect();
    if let Some(&last) = trace.last() {
        if out.last() != Some(&last) {
            out.push(last);
        }
    }
    out
}
