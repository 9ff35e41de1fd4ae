//! Per-subdomain time grids and the average-valued projections between
//! piecewise-constant-in-time trace spaces on mismatched grids.
//!
//! Each subdomain advances on a uniform diffusion grid of `steps` slabs per
//! window, refined by an integer factor `substeps` for the explicit
//! advection sub-steps. Transmission data between subdomains with different
//! grids is exchanged through the exact interval-overlap projection; for a
//! pair of uniform grids the overlap lengths are rational with denominator
//! `n_src * n_tgt`, so the sweep is done in integer arithmetic and the
//! projection conserves the time integral to rounding error.

/// Uniform time grid of one subdomain over a window of length `len`:
/// `steps` diffusion slabs, each split into `substeps` advection sub-slabs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub len: f64,
    pub steps: usize,
    pub substeps: usize,
}

impl TimeGrid {
    pub fn new(len: f64, steps: usize, substeps: usize) -> Self {
        assert!(len > 0.0 && steps > 0 && substeps > 0);
        Self {
            len,
            steps,
            substeps,
        }
    }

    /// Diffusion step length.
    pub fn tau(&self) -> f64 {
        self.len / self.steps as f64
    }

    /// Advection sub-step length.
    pub fn tau_a(&self) -> f64 {
        self.tau() / self.substeps as f64
    }

    /// Total number of advection sub-slabs in the window.
    pub fn n_adv(&self) -> usize {
        self.steps * self.substeps
    }
}

/// Piecewise-constant-in-time values on a uniform grid, one time series per
/// "series" (typically one per interface edge). Layout is series-major:
/// `values[series * n_slabs + slab]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PwcSignal {
    pub n_slabs: usize,
    pub n_series: usize,
    pub values: Vec<f64>,
}

impl PwcSignal {
    pub fn zeros(n_series: usize, n_slabs: usize) -> Self {
        Self {
            n_slabs,
            n_series,
            values: vec![0.0; n_series * n_slabs],
        }
    }

    pub fn series(&self, s: usize) -> &[f64] {
        &self.values[s * self.n_slabs..(s + 1) * self.n_slabs]
    }

    pub fn series_mut(&mut self, s: usize) -> &mut [f64] {
        &mut self.values[s * self.n_slabs..(s + 1) * self.n_slabs]
    }
}

/// Project one series on a uniform grid of `n_src` slabs onto `n_tgt` slabs
/// spanning the same window. Each target value is the length-weighted
/// average of the overlapping source values.
pub fn project_series_uniform(src: &[f64], n_tgt: usize, out: &mut [f64]) {
    let n_src = src.len();
    debug_assert_eq!(out.len(), n_tgt);
    if n_src == n_tgt {
        out.copy_from_slice(src);
        return;
    }
    // integer unit: T / (n_src * n_tgt); target slab m spans [m*n_src, (m+1)*n_src),
    // source slab n spans [n*n_tgt, (n+1)*n_tgt)
    let (ns, nt) = (n_src as u64, n_tgt as u64);
    for (m, o) in out.iter_mut().enumerate() {
        let m = m as u64;
        let lo = m * ns;
        let hi = (m + 1) * ns;
        let n0 = (lo / nt) as usize;
        let mut acc = 0.0;
        let mut n = n0 as u64;
        while n * nt < hi {
            let d = hi.min((n + 1) * nt) - lo.max(n * nt);
            acc += d as f64 * src[n as usize];
            n += 1;
        }
        *o = acc / ns as f64;
    }
}

/// As [`project_series_uniform`] but for arbitrary monotone slab boundaries
/// (both grids must span the same window).
pub fn project_series_general(
    src_bounds: &[f64],
    src: &[f64],
    tgt_bounds: &[f64],
    out: &mut [f64],
) {
    debug_assert_eq!(src_bounds.len(), src.len() + 1);
    debug_assert_eq!(tgt_bounds.len(), out.len() + 1);
    let mut n = 0usize;
    for m in 0..out.len() {
        let (t0, t1) = (tgt_bounds[m], tgt_bounds[m + 1]);
        while src_bounds[n + 1] <= t0 && n + 1 < src.len() {
            n += 1;
        }
        let mut k = n;
        let mut acc = 0.0;
        loop {
            let olap = src_bounds[k + 1].min(t1) - src_bounds[k].max(t0);
            if olap > 0.0 {
                acc += olap * src[k];
            }
            if src_bounds[k + 1] >= t1 || k + 1 >= src.len() {
                break;
            }
            k += 1;
        }
        out[m] = acc / (t1 - t0);
    }
}

/// Project a whole signal onto a uniform grid with `n_tgt` slabs.
pub fn project_signal(src: &PwcSignal, n_tgt: usize) -> PwcSignal {
    let mut out = PwcSignal::zeros(src.n_series, n_tgt);
    for s in 0..src.n_series {
        let dst = &mut out.values[s * n_tgt..(s + 1) * n_tgt];
        project_series_uniform(src.series(s), n_tgt, dst);
    }
    out
}

/// Slab boundaries of a uniform grid with `n` slabs on [0, len].
pub fn uniform_bounds(len: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|k| len * k as f64 / n as f64).collect()
}
