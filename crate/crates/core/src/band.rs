//! Symmetric positive-definite banded matrices and their Cholesky
//! factorization.
//!
//! The condensed edge-multiplier systems of the hybridized mixed method are
//! SPD with a small bandwidth when the edge unknowns are numbered slab by
//! slab along the longer mesh direction, so a dense-band Cholesky factors
//! them once and back-substitutes cheaply at every time step.
//!
//! Storage is by columns: `col[j]` holds A[j..=min(j+b, n-1), j], i.e. the
//! diagonal entry first. Both the factorization and the triangular solves
//! then run on contiguous slices.

#[derive(Debug, Clone)]
pub struct SymmBand {
    n: usize,
    bw: usize,
    /// column-major band, (bw+1) entries per column
    a: Vec<f64>,
}

#[derive(Debug, thiserror::Error)]
pub enum BandError {
    #[error("matrix is not positive definite (pivot {pivot:.3e} at column {col})")]
    NotPositiveDefinite { col: usize, pivot: f64 },
    #[error("entry ({i},{j}) outside bandwidth {bw}")]
    OutsideBand { i: usize, j: usize, bw: usize },
}

impl SymmBand {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self {
            n,
            bw,
            a: vec![0.0; n * (bw + 1)],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    /// Add `v` to the entry (i, j); only the lower triangle is stored.
    pub fn add(&mut self, i: usize, j: usize, v: f64) -> Result<(), BandError> {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        let d = hi - lo;
        if d > self.bw {
            return Err(BandError::OutsideBand {
                i,
                j,
                bw: self.bw,
            });
        }
        self.a[lo * (self.bw + 1) + d] += v;
        Ok(())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        let d = hi - lo;
        if d > self.bw {
            0.0
        } else {
            self.a[lo * (self.bw + 1) + d]
        }
    }

    /// In-place Cholesky factorization A = L L^T (right-looking).
    pub fn cholesky(mut self) -> Result<BandCholesky, BandError> {
        let (n, bw) = (self.n, self.bw);
        let w = bw + 1;
        for j in 0..n {
            let pivot = self.a[j * w];
            if !(pivot > 0.0) || !pivot.is_finite() {
                return Err(BandError::NotPositiveDefinite { col: j, pivot });
            }
            let ljj = pivot.sqrt();
            let inv = 1.0 / ljj;
            self.a[j * w] = ljj;
            let m = (bw).min(n - 1 - j);
            for k in 1..=m {
                self.a[j * w + k] *= inv;
            }
            // trailing update: col_{j+k} -= l_{j+k,j} * col_j[k..]
            for k in 1..=m {
                let ljk = self.a[j * w + k];
                if ljk == 0.0 {
                    continue;
                }
                let (head, tail) = self.a.split_at_mut((j + k) * w);
                let src = &head[j * w + k..j * w + m + 1];
                let dst = &mut tail[..m + 1 - k];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d -= ljk * s;
                }
            }
        }
        Ok(BandCholesky {
            n,
            bw,
            l: self.a,
        })
    }
}

/// Cholesky factor of a [`SymmBand`] matrix, reused across many solves.
#[derive(Debug, Clone)]
pub struct BandCholesky {
    n: usize,
    bw: usize,
    l: Vec<f64>,
}

impl BandCholesky {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Solve A x = b in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        debug_assert_eq!(b.len(), self.n);
        let (n, bw, w) = (self.n, self.bw, self.bw + 1);
        // forward: L y = b, column-oriented so updates are contiguous
        for j in 0..n {
            let yj = b[j] / self.l[j * w];
            b[j] = yj;
            let m = bw.min(n - 1 - j);
            let col = &self.l[j * w + 1..j * w + m + 1];
            let dst = &mut b[j + 1..j + m + 1];
            for (d, s) in dst.iter_mut().zip(col) {
                *d -= yj * s;
            }
        }
        // backward: L^T x = y, contiguous dot products
        for j in (0..n).rev() {
            let m = bw.min(n - 1 - j);
            let col = &self.l[j * w + 1..j * w + m + 1];
            let mut s = b[j];
            for (c, &xv) in col.iter().zip(&b[j + 1..j + m + 1]) {
                s -= c * xv;
            }
            b[j] = s / self.l[j * w];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}
