//! Minimal radix-2 complex FFT and 2D occupancy autocorrelation, used to
//! turn O(N²) pair sums into kernel-weighted sweeps over offset counts.
//! Counts are exact: autocorrelation values of a 0/1 grid are integers far
//! below 2^53, so rounding the inverse transform restores them exactly.

use alloc::vec;
use alloc::vec::Vec;

/// Complex number with the two arithmetic ops the transform needs.
#[derive(Clone, Copy, Debug, Default)]
pub struct C64 {
    pub re: f64,
    pub im: f64,
}

impl C64 {
    #[inline]
    fn mul(self, other: C64) -> C64 {
        C64 {
            re: self.re * other.re - self.im * other.im,
            im: self.re * other.im + self.im * other.re,
        }
    }
    #[inline]
    fn add(self, other: C64) -> C64 {
        C64 { re: self.re + other.re, im: self.im + other.im }
    }
    #[inline]
    fn sub(self, other: C64) -> C64 {
        C64 { re: self.re - other.re, im: self.im - other.im }
    }
    #[inline]
    fn conj(self) -> C64 {
        C64 { re: self.re, im: -self.im }
    }
}

/// In-place iterative radix-2 FFT. `inverse` applies the conjugate
/// transform without the 1/n normalization (callers normalize once).
pub fn fft_inplace(data: &mut [C64], inverse: bool) {
    let n = data.len();
    assert!(n.is_power_of_two(), "fft length must be a power of two");
    // Bit-reversal permutation.
    let mut j = 0usize;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            data.swap(i, j);
        }
    }
    let sign = if inverse { 1.0 } else { -1.0 };
    let mut len = 2;
    while len <= n {
        let ang = sign * 2.0 * core::f64::consts::PI / len as f64;
        let wlen = C64 { re: libm::cos(ang), im: libm::sin(ang) };
        let mut i = 0;
        while i < n {
            let mut w = C64 { re: 1.0, im: 0.0 };
            for k in 0..len / 2 {
                let u = data[i + k];
                let v = data[i + k + len / 2].mul(w);
                data[i + k] = u.add(v);
                data[i + k + len / 2] = u.sub(v);
                w = w.mul(wlen);
            }
            i += len;
        }
        len <<= 1;
    }
}

fn next_pow2(n: usize) -> usize {
    n.next_power_of_two()
}

/// Offset-count table from a 2D occupancy autocorrelation: for each offset
/// Δ within ±(w−1, h−1), `count(Δ) = #{(i, j) occupied pairs with j−i=Δ}`.
pub struct AutocorrCounts {
    pub width: usize,
    pub height: usize,
    counts: Vec<u64>,
    pad_x: usize,
    pad_y: usize,
    /// Largest |rounded − raw| seen while restoring integer counts; a
    /// consistency guard that must stay well below 0.5.
    pub max_rounding_error: f64,
}

impl AutocorrCounts {
    /// Computes pair-offset counts for occupied cells given as (ix, iy)
    /// relative positions inside a width×height bounding box.
    pub fn compute(cells: &[(usize, usize)], width: usize, height: usize) -> AutocorrCounts {
        let px = next_pow2(2 * width - 1);
        let py = next_pow2(2 * height - 1);
        let mut grid = vec![C64::default(); px * py];
        for &(x, y) in cells {
            debug_assert!(x < width && y < height);
            grid[y * px + x].re = 1.0;
        }
        // Forward 2D: rows, then columns through a scratch buffer.
        for row in grid.chunks_mut(px) {
            fft_inplace(row, false);
        }
        let mut col = vec![C64::default(); py];
        for x in 0..px {
            for y in 0..py {
                col[y] = grid[y * px + x];
            }
            fft_inplace(&mut col, false);
            for y in 0..py {
                grid[y * px + x] = col[y];
            }
        }
        // Power spectrum, then inverse 2D.
        for v in grid.iter_mut() {
            let m = v.mul(v.conj());
            *v = C64 { re: m.re, im: 0.0 };
        }
        for row in grid.chunks_mut(px) {
            fft_inplace(row, true);
        }
        for x in 0..px {
            for y in 0..py {
                col[y] = grid[y * px + x];
            }
            fft_inplace(&mut col, true);
            for y in 0..py {
                grid[y * px + x] = col[y];
            }
        }
        let norm = 1.0 / (px as f64 * py as f64);
        let mut counts = vec![0u64; px * py];
        let mut max_err: f64 = 0.0;
        for (c, v) in counts.iter_mut().zip(grid.iter()) {
            let raw = v.re * norm;
            let rounded = libm::round(raw);
            max_err = max_err.max(libm::fabs(raw - rounded));
            *c = if rounded <= 0.0 { 0 } else { rounded as u64 };
        }
        AutocorrCounts { width, height, counts, pad_x: px, pad_y: py, max_rounding_error: max_err }
    }

    /// Pair count at offset (dx, dy); offsets are circular in the padded
    /// grid, with negative offsets wrapped to the top end.
    pub fn count(&self, dx: i64, dy: i64) -> u64 {
        let px = self.pad_x as i64;
        let py = self.pad_y as i64;
        if dx.abs() >= self.width as i64 || dy.abs() >= self.height as i64 {
            return 0;
        }
        let x = dx.rem_euclid(px) as usize;
        let y = dy.rem_euclid(py) as usize;
        self.counts[y * self.pad_x + x]
    }
}

/// Offset-count table from a 3D occupancy autocorrelation, the spatial
/// counterpart of `AutocorrCounts`.
pub struct AutocorrCounts3 {
    pub width: usize,
    pub height: usize,
    pub depth: usize,
    counts: Vec<u64>,
    pad: [usize; 3],
    /// Largest |rounded − raw| seen while restoring integer counts.
    pub max_rounding_error: f64,
}

impl AutocorrCounts3 {
    /// Computes pair-offset counts for occupied cells given as (ix, iy, iz)
    /// relative positions inside a width×height×depth bounding box.
    pub fn compute(
        cells: &[(usize, usize, usize)],
        width: usize,
        height: usize,
        depth: usize,
    ) -> AutocorrCounts3 {
        let pad = [
            next_pow2(2 * width - 1),
            next_pow2(2 * height - 1),
            next_pow2(2 * depth - 1),
        ];
        let mut grid = vec![C64::default(); pad[0] * pad[1] * pad[2]];
        let at = |x: usize, y: usize, z: usize| x + pad[0] * (y + pad[1] * z);
        for &(x, y, z) in cells {
            debug_assert!(x < width && y < height && z < depth);
            grid[at(x, y, z)].re = 1.0;
        }
        transform_axes_3d(&mut grid, pad, false);
        for v in grid.iter_mut() {
            let m = v.mul(v.conj());
            *v = C64 { re: m.re, im: 0.0 };
        }
        transform_axes_3d(&mut grid, pad, true);
        let norm = 1.0 / (pad[0] as f64 * pad[1] as f64 * pad[2] as f64);
        let mut counts = vec![0u64; grid.len()];
        let mut max_err: f64 = 0.0;
        for (c, v) in counts.iter_mut().zip(grid.iter()) {
            let raw = v.re * norm;
            let rounded = libm::round(raw);
            max_err = max_err.max(libm::fabs(raw - rounded));
            *c = if rounded <= 0.0 { 0 } else { rounded as u64 };
        }
        AutocorrCounts3 { width, height, depth, counts, pad, max_rounding_error: max_err }
    }

    /// Pair count at offset (dx, dy, dz), wrapped in the padded grid.
    pub fn count(&self, dx: i64, dy: i64, dz: i64) -> u64 {
        if dx.abs() >= self.width as i64
            || dy.abs() >= self.height as i64
            || dz.abs() >= self.depth as i64
        {
            return 0;
        }
        let x = dx.rem_euclid(self.pad[0] as i64) as usize;
        let y = dy.rem_euclid(self.pad[1] as i64) as usize;
        let z = dz.rem_euclid(self.pad[2] as i64) as usize;
        self.counts[x + self.pad[0] * (y + self.pad[1] * z)]
    }
}

/// Applies the 1D transform along each axis of a pad[0]×pad[1]×pad[2]
/// volume laid out x-fastest, copying non-contiguous axes through a
/// scratch line.
fn transform_axes_3d(grid: &mut [C64], pad: [usize; 3], inverse: bool) {
    let at = |x: usize, y: usize, z: usize| x + pad[0] * (y + pad[1] * z);
    for row in grid.chunks_mut(pad[0]) {
        fft_inplace(row, inverse);
    }
    let mut line = vec![C64::default(); pad[1]];
    for z in 0..pad[2] {
        for x in 0..pad[0] {
            for y in 0..pad[1] {
                line[y] = grid[at(x, y, z)];
            }
            fft_inplace(&mut line, inverse);
            for y in 0..pad[1] {
                grid[at(x, y, z)] = line[y];
            }
        }
    }
    let mut line = vec![C64::default(); pad[2]];
    for y in 0..pad[1] {
        for x in 0..pad[0] {
            for z in 0..pad[2] {
                line[z] = grid[at(x, y, z)];
            }
            fft_inplace(&mut line, inverse);
            for z in 0..pad[2] {
                grid[at(x, y, z)] = line[z];
            }
        }
    }
}
