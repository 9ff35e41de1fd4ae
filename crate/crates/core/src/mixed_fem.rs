//! Lowest-order Raviart-Thomas mixed finite element kernels on rectangles:
//! one backward-Euler diffusion step under Dirichlet, Neumann or Robin edge
//! data, and the stationary Darcy solve that produces the advection field.
//!
//! The mixed saddle-point system is hybridized: the flux space is broken
//! per cell, edge Lagrange multipliers (the concentration traces) enforce
//! normal-flux continuity, and both the cell unknown and the four cell
//! fluxes are eliminated locally. On a rectangle with edge basis functions
//! scaled to unit outward normal components, the local RT0 mass matrix of
//! a direction pair is |K|/3 on the diagonal and -|K|/6 off it, giving the
//! closed forms
//!
//!   c_K = (m_K c* + |K| f_K + Σ_F γ_F λ_F) / (m_K + Σ_F γ_F),
//!   |F| r_{K,F} = γ_F (c_K - (2/3) λ_F - (1/3) λ_opp(F)),
//!
//! with γ_F = 6 d_K |F|² / |K| and m_K = φ_K |K| / τ. The condensed system
//! on the multipliers is symmetric positive definite; it is numbered slab
//! by slab along the longer mesh direction and factored once by a banded
//! Cholesky, then reused for every time step and interface iteration.

use crate::band::{BandCholesky, SymmBand};
use crate::field::{CellField, FluxField};
use crate::mesh::StructuredMesh;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FemError {
    #[error("invalid coefficient: {0}")]
    BadCoefficient(String),
    #[error("system is singular: {0}")]
    Singular(String),
    #[error("size mismatch: expected {expected} {what}, got {got}")]
    SizeMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
}

/// Boundary treatment of one edge in a diffusion solve. Interior edges
/// carry the flux-continuity equation; the other kinds take their datum
/// from the per-solve edge data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EdgeBc {
    Interior,
    /// trace datum (weak Dirichlet)
    Dirichlet,
    /// outward normal flux datum
    Neumann,
    /// datum ξ in α c - r·n = ξ, with this α
    Robin(f64),
}

/// Factorized backward-Euler RT0 diffusion operator for one mesh, one time
/// step and one boundary-kind layout. Immutable after assembly.
pub struct DiffusionFactorization {
    n_cells: usize,
    n_edges: usize,
    kinds: Vec<EdgeBc>,
    /// edge -> position in the condensed system (None for Dirichlet edges)
    unknown: Vec<Option<u32>>,
    chol: BandCholesky,
    /// per cell: edges in mesh order [W, E, S, N]
    cell_edges: Vec<[u32; 4]>,
    /// per cell: γ_F per edge slot
    gamma: Vec<[f64; 4]>,
    /// per cell: 1 / (m_K + Σ γ)
    delta_inv: Vec<f64>,
    /// per cell: m_K = φ|K|/τ (0 for the steady Darcy operator)
    mass: Vec<f64>,
    area: Vec<f64>,
    edge_len: Vec<f64>,
    /// per edge: (cell, slot, outward sign of the global normal) used for
    /// single-valued flux recovery
    recover: Vec<(u32, u8, f64)>,
}

const OPP: [usize; 4] = [1, 0, 3, 2];

/// Number all edges slab by slab along the longer mesh direction so that
/// the condensed multiplier system has bandwidth ~ 2*min(nx,ny)+1.
fn slab_order(mesh: &StructuredMesh) -> Vec<u32> {
    let (nx, ny) = (mesh.nx(), mesh.ny());
    let mut order = Vec::with_capacity(mesh.n_edges());
    if nx <= ny {
        // slabs over rows j: the horizontal edges below row j, then the
        // vertical edges of row j
        for j in 0..ny {
            for i in 0..nx {
                order.push(mesh.h_edge(i, j) as u32);
            }
            for i in 0..=nx {
                order.push(mesh.v_edge(i, j) as u32);
            }
        }
        for i in 0..nx {
            order.push(mesh.h_edge(i, ny) as u32);
        }
    } else {
        for i in 0..nx {
            for j in 0..ny {
                order.push(mesh.v_edge(i, j) as u32);
            }
            for j in 0..=ny {
                order.push(mesh.h_edge(i, j) as u32);
            }
        }
        for j in 0..ny {
            order.push(mesh.v_edge(nx, j) as u32);
        }
    }
    order
}

impl DiffusionFactorization {
    /// Assemble and factor the condensed system.
    ///
    /// `tau = None` builds the steady operator (no mass term) used for the
    /// Darcy solve. `diff` is the per-cell isotropic coefficient (d or K),
    /// `phi` the porosity (ignored when steady).
    pub fn assemble(
        mesh: &StructuredMesh,
        phi: &[f64],
        diff: &[f64],
        tau: Option<f64>,
        kinds: Vec<EdgeBc>,
    ) -> Result<Self, FemError> {
        let n_cells = mesh.n_cells();
        let n_edges = mesh.n_edges();
        if kinds.len() != n_edges {
            return Err(FemError::SizeMismatch {
                what: "edge kinds",
                expected: n_edges,
                got: kinds.len(),
            });
        }
        for (name, v) in [("porosity", phi), ("diffusion", diff)] {
            if v.len() != n_cells {
                return Err(FemError::SizeMismatch {
                    what: "cell coefficients",
                    expected: n_cells,
                    got: v.len(),
                });
            }
            if v.iter().any(|&x| !(x > 0.0)) {
                return Err(FemError::BadCoefficient(format!("{name} must be > 0")));
            }
        }
        if let Some(t) = tau {
            if !(t > 0.0) {
                return Err(FemError::BadCoefficient("tau must be > 0".into()));
            }
        }
        for k in &kinds {
            if let EdgeBc::Robin(a) = k {
                if !(*a > 0.0) {
                    return Err(FemError::BadCoefficient("Robin alpha must be > 0".into()));
                }
            }
        }
        if tau.is_none() && !kinds.iter().any(|k| matches!(k, EdgeBc::Dirichlet)) {
            return Err(FemError::Singular(
                "steady solve needs at least one Dirichlet edge".into(),
            ));
        }

        // condensed numbering of the non-Dirichlet edges, slab-ordered
        let order = slab_order(mesh);
        let mut unknown = vec![None; n_edges];
        let mut seq = Vec::new();
        for &e in &order {
            if kinds[e as usize] != EdgeBc::Dirichlet {
                unknown[e as usize] = Some(seq.len() as u32);
                seq.push(e);
            }
        }
        let n_unk = seq.len();

        let cell_edges: Vec<[u32; 4]> = (0..n_cells)
            .map(|c| mesh.cell_edges(c).map(|e| e as u32))
            .collect();
        let area: Vec<f64> = (0..n_cells).map(|c| mesh.cell_area(c)).collect();
        let edge_len: Vec<f64> = (0..n_edges).map(|e| mesh.edge_len(e)).collect();
        let gamma: Vec<[f64; 4]> = (0..n_cells)
            .map(|c| {
                let e = cell_edges[c];
                let mut g = [0.0; 4];
                for s in 0..4 {
                    let l = edge_len[e[s] as usize];
                    g[s] = 6.0 * diff[c] * l * l / area[c];
                }
                g
            })
            .collect();
        let mass: Vec<f64> = (0..n_cells)
            .map(|c| tau.map_or(0.0, |t| phi[c] * area[c] / t))
            .collect();
        let delta_inv: Vec<f64> = (0..n_cells)
            .map(|c| 1.0 / (mass[c] + gamma[c].iter().sum::<f64>()))
            .collect();

        // bandwidth: max condensed-index distance within any cell
        let mut bw = 0usize;
        for c in 0..n_cells {
            let idx: Vec<u32> = cell_edges[c]
                .iter()
                .filter_map(|&e| unknown[e as usize])
                .collect();
            for a in &idx {
                for b in &idx {
                    bw = bw.max(a.abs_diff(*b) as usize);
                }
            }
        }

        let mut band = SymmBand::zeros(n_unk, bw);
        for c in 0..n_cells {
            let edges = cell_edges[c];
            let g = gamma[c];
            let di = delta_inv[c];
            for s in 0..4 {
                let Some(row) = unknown[edges[s] as usize] else {
                    continue;
                };
                let row = row as usize;
                for t in 0..4 {
                    let coef = if t == s {
                        2.0 * g[s] / 3.0 - g[s] * g[s] * di
                    } else if t == OPP[s] {
                        g[s] / 3.0 - g[s] * g[t] * di
                    } else {
                        -g[s] * g[t] * di
                    };
                    if let Some(col) = unknown[edges[t] as usize] {
                        let col = col as usize;
                        if col <= row {
                            band.add(row, col, coef).expect("within slab bandwidth");
                        }
                    }
                }
            }
        }
        // Robin terms on the diagonal
        for e in 0..n_edges {
            if let EdgeBc::Robin(a) = kinds[e] {
                let row = unknown[e].expect("Robin edges are unknowns") as usize;
                band.add(row, row, a * edge_len[e]).expect("diagonal");
            }
        }

        let chol = band.cholesky().map_err(|e| FemError::Singular(e.to_string()))?;

        let recover: Vec<(u32, u8, f64)> = (0..n_edges)
            .map(|e| {
                let (neg, pos) = mesh.edge_cells(e);
                let (cell, sign) = match neg {
                    Some(c) => (c, 1.0),
                    None => (pos.expect("edge has a cell"), -1.0),
                };
                let slot = cell_edges[cell]
                    .iter()
                    .position(|&ce| ce == e as u32)
                    .unwrap() as u8;
                (cell as u32, slot, sign)
            })
            .collect();

        Ok(Self {
            n_cells,
            n_edges,
            kinds,
            unknown,
            chol,
            cell_edges,
            gamma,
            delta_inv,
            mass,
            area,
            edge_len,
            recover,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn n_edges(&self) -> usize {
        self.n_edges
    }

    pub fn kinds(&self) -> &[EdgeBc] {
        &self.kinds
    }

    /// One backward-Euler step (or the steady solve when assembled without
    /// a mass term).
    ///
    /// `edge_data[e]` carries the Dirichlet trace, outward normal flux or
    /// Robin datum for every non-interior edge; entries on interior edges
    /// are ignored. Returns the new cell field, the single-valued edge
    /// fluxes (global orientation) and the edge traces (the multipliers,
    /// equal to the datum on Dirichlet edges).
    pub fn step(
        &self,
        c_in: &[f64],
        f: &[f64],
        edge_data: &[f64],
    ) -> (CellField, FluxField, Vec<f64>) {
        assert_eq!(c_in.len(), self.n_cells);
        assert_eq!(f.len(), self.n_cells);
        assert_eq!(edge_data.len(), self.n_edges);

        let n_unk = self.chol.n();
        let mut b = vec![0.0; n_unk];
        // chi_K = m_K c* + |K| f
        let chi: Vec<f64> = (0..self.n_cells)
            .map(|c| self.mass[c] * c_in[c] + self.area[c] * f[c])
            .collect();

        for c in 0..self.n_cells {
            let edges = self.cell_edges[c];
            let g = self.gamma[c];
            let di = self.delta_inv[c];
            for s in 0..4 {
                let Some(row) = self.unknown[edges[s] as usize] else {
                    continue;
                };
                let mut v = g[s] * chi[c] * di;
                // couplings to the Dirichlet edges of this cell
                for t in 0..4 {
                    if self.kinds[edges[t] as usize] == EdgeBc::Dirichlet {
                        let lam = edge_data[edges[t] as usize];
                        let coef = if t == OPP[s] {
                            g[s] / 3.0 - g[s] * g[t] * di
                        } else {
                            -g[s] * g[t] * di
                        };
                        v -= coef * lam;
                    }
                }
                b[row as usize] += v;
            }
        }
        for e in 0..self.n_edges {
            match self.kinds[e] {
                EdgeBc::Neumann => {
                    let row = self.unknown[e].unwrap() as usize;
                    b[row] -= self.edge_len[e] * edge_data[e];
                }
                EdgeBc::Robin(_) => {
                    let row = self.unknown[e].unwrap() as usize;
                    b[row] += self.edge_len[e] * edge_data[e];
                }
                _ => {}
            }
        }

        self.chol.solve_in_place(&mut b);

        // traces per edge
        let mut lambda = vec![0.0; self.n_edges];
        for e in 0..self.n_edges {
            lambda[e] = match self.unknown[e] {
                Some(u) => b[u as usize],
                None => edge_data[e],
            };
        }

        // back-substitute cells, then fluxes
        let mut c_out = vec![0.0; self.n_cells];
        for c in 0..self.n_cells {
            let edges = self.cell_edges[c];
            let g = self.gamma[c];
            let mut s = chi[c];
            for t in 0..4 {
                s += g[t] * lambda[edges[t] as usize];
            }
            c_out[c] = s * self.delta_inv[c];
        }

        let mut r = vec![0.0; self.n_edges];
        for e in 0..self.n_edges {
            if self.kinds[e] == EdgeBc::Neumann {
                // strong imposition
                r[e] = self.recover[e].2 * edge_data[e];
                continue;
            }
            let (cell, slot, sign) = self.recover[e];
            let (c, s) = (cell as usize, slot as usize);
            let edges = self.cell_edges[c];
            let g = self.gamma[c];
            let le = self.edge_len[e];
            r[e] = sign * g[s] / le
                * (c_out[c]
                    - 2.0 / 3.0 * lambda[e]
                    - 1.0 / 3.0 * lambda[edges[OPP[s]] as usize]);
        }

        (CellField(c_out), FluxField(r), lambda)
    }
}

/// Steady Darcy field: cell heads and single-valued edge fluxes.
#[derive(Debug, Clone)]
pub struct DarcyField {
    pub head: CellField,
    pub flux: FluxField,
}

/// Solve the steady Darcy problem `u = -K ∇p, div u = 0` with per-cell
/// conductivity and per-edge boundary kinds (Dirichlet head or no-flow).
pub fn solve_darcy(
    mesh: &StructuredMesh,
    conductivity: &[f64],
    kinds: Vec<EdgeBc>,
    edge_data: &[f64],
) -> Result<DarcyField, FemError> {
    let ones = vec![1.0; mesh.n_cells()];
    let fact = DiffusionFactorization::assemble(mesh, &ones, conductivity, None, kinds)?;
    let zeros_c = vec![0.0; mesh.n_cells()];
    let (head, flux, _) = fact.step(&zeros_c, &zeros_c, edge_data);
    Ok(DarcyField { head, flux })
}

/// Max relative per-cell divergence of an edge flux field, used to verify
/// the Darcy mass-conservation invariant.
pub fn max_relative_divergence(mesh: &StructuredMesh, flux: &[f64]) -> f64 {
    let scale = flux
        .iter()
        .enumerate()
        .map(|(e, u)| (u * mesh.edge_len(e)).abs())
        .fold(0.0_f64, f64::max)
        .max(f64::MIN_POSITIVE);
    let mut worst = 0.0_f64;
    for c in 0..mesh.n_cells() {
        let mut div = 0.0;
        for e in mesh.cell_edges(c) {
            div += mesh.outward_sign(c, e) * flux[e] * mesh.edge_len(e);
        }
        worst = worst.max(div.abs() / scale);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::BoundarySide;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn all_dirichlet(mesh: &StructuredMesh) -> Vec<EdgeBc> {
        (0..mesh.n_edges())
            .map(|e| {
                if mesh.is_boundary_edge(e) {
                    EdgeBc::Dirichlet
                } else {
                    EdgeBc::Interior
                }
            })
            .collect()
    }

    /// Dense assembly of the full (non-hybridized core) local equations to
    /// check the solver output: per cell the four flux equations with the
    /// exact RT0 mass matrix, per cell the mass balance, per interior edge
    /// flux continuity, per boundary edge the boundary condition.
    fn full_mixed_residual(
        mesh: &StructuredMesh,
        phi: &[f64],
        d: &[f64],
        tau: f64,
        kinds: &[EdgeBc],
        c_in: &[f64],
        f: &[f64],
        data: &[f64],
        c: &[f64],
        r: &[f64],
        lam: &[f64],
    ) -> f64 {
        let mut worst = 0.0_f64;
        for k in 0..mesh.n_cells() {
            let edges = mesh.cell_edges(k);
            let area = mesh.cell_area(k);
            let (dx, dy) = mesh.cell_size(k);
            // outward fluxes of this cell
            let rk: Vec<f64> = edges
                .iter()
                .map(|&e| mesh.outward_sign(k, e) * r[e])
                .collect();
            // flux equations: (1/d) (M r)_F - c |F| + λ_F |F| = 0
            for (s, &e) in edges.iter().enumerate() {
                let le = mesh.edge_len(e);
                let (a, b_idx, h) = match s {
                    0 => (0usize, 1usize, dx),
                    1 => (1, 0, dx),
                    2 => (2, 3, dy),
                    _ => (3, 2, dy),
                };
                let _ = h;
                let m_rr = area / 3.0 * rk[a] - area / 6.0 * rk[b_idx];
                let res = m_rr / d[k] - c[k] * le + lam[e] * le;
                worst = worst.max(res.abs());
            }
            // mass equation
            let mut div = 0.0;
            for (s, &e) in edges.iter().enumerate() {
                div += rk[s] * mesh.edge_len(e);
            }
            let res = phi[k] * area * (c[k] - c_in[k]) / tau + div - area * f[k];
            worst = worst.max(res.abs());
        }
        for e in 0..mesh.n_edges() {
            match kinds[e] {
                EdgeBc::Dirichlet => worst = worst.max((lam[e] - data[e]).abs()),
                EdgeBc::Neumann => {
                    let k = {
                        let (a, b) = mesh.edge_cells(e);
                        a.or(b).unwrap()
                    };
                    worst = worst.max((mesh.outward_sign(k, e) * r[e] - data[e]).abs());
                }
                EdgeBc::Robin(alpha) => {
                    let k = {
                        let (a, b) = mesh.edge_cells(e);
                        a.or(b).unwrap()
                    };
                    let rn = mesh.outward_sign(k, e) * r[e];
                    worst = worst.max((alpha * lam[e] - rn - data[e]).abs());
                }
                EdgeBc::Interior => {}
            }
        }
        worst
    }

    #[test]
    fn zero_data_gives_zero_solution() {
        let m = StructuredMesh::uniform(0.0, 1.0, 0.0, 1.0, 5, 4).unwrap();
        let fact = DiffusionFactorization::assemble(
            &m,
            &vec![1.0; 20],
            &vec![0.02; 20],
            Some(0.01),
            all_dirichlet(&m),
        )
        .unwrap();
        let z = vec![0.0; 20];
        let zd = vec![0.0; m.n_edges()];
        let (c, r, _) = fact.step(&z, &z, &zd);
        assert!(c.0.iter().all(|&v| v == 0.0));
        assert!(r.0.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_cell_dirichlet_matches_dense_oracle() {
        // one unit cell, λ = 1 on all four edges, d = φ = 1, c_in = 0, f = 0
        let m = StructuredMesh::new(vec![0.0, 1.0], vec![0.0, 1.0]).unwrap();
        let tau = 0.5;
        let fact = DiffusionFactorization::assemble(
            &m,
            &[1.0],
            &[1.0],
            Some(tau),
            all_dirichlet(&m),
        )
        .unwrap();
        let data = vec![1.0; 4];
        let (c, r, lam) = fact.step(&[0.0], &[0.0], &data);

        // dense oracle: unknowns (rW,rE,rS,rN,c) with the hybrid equations
        // (1/d)(M r)_F - c|F| = -λ_F|F| and (φ|K|/τ) c + Σ|F|r_F = 0
        let mut a = [[0.0_f64; 5]; 5];
        let mut b = [0.0_f64; 5];
        for s in 0..4 {
            let o = [1, 0, 3, 2][s];
            a[s][s] = 1.0 / 3.0;
            a[s][o] = -1.0 / 6.0;
            a[s][4] = -1.0;
            b[s] = -data[s];
        }
        a[4][4] = 1.0 / tau;
        for s in 0..4 {
            a[4][s] = 1.0;
        }
        b[4] = 0.0;
        // gaussian elimination
        let mut aa = a;
        let mut bb = b;
        for col in 0..5 {
            let p = (col..5).max_by(|&i, &j| aa[i][col].abs().total_cmp(&aa[j][col].abs())).unwrap();
            aa.swap(col, p);
            bb.swap(col, p);
            for row in 0..5 {
                if row != col {
                    let fct = aa[row][col] / aa[col][col];
                    for k in 0..5 {
                        aa[row][k] -= fct * aa[col][k];
                    }
                    bb[row] -= fct * bb[col];
                }
            }
        }
        let sol: Vec<f64> = (0..5).map(|i| bb[i] / aa[i][i]).collect();
        assert!((c.0[0] - sol[4]).abs() < 1e-12);
        // outward fluxes vs stored global orientation
        let edges = m.cell_edges(0);
        for (s, &e) in edges.iter().enumerate() {
            let outward = m.outward_sign(0, e) * r.0[e];
            assert!((outward - sol[s]).abs() < 1e-12, "edge slot {s}");
        }
        for &e in &edges {
            assert_eq!(lam[e], 1.0);
        }
    }

    #[test]
    fn manufactured_linear_solution_is_exact() {
        // c(x,y) = x is reproduced exactly: r = (-d, 0), f = φ x / τ with c_in = 0
        let m = StructuredMesh::new(vec![0.0, 0.4, 1.0], vec![0.0, 0.7, 1.0]).unwrap();
        let (phi, d, tau) = (1.3, 0.37, 0.21);
        let fact = DiffusionFactorization::assemble(
            &m,
            &vec![phi; 4],
            &vec![d; 4],
            Some(tau),
            all_dirichlet(&m),
        )
        .unwrap();
        let cbar: Vec<f64> = (0..4).map(|k| m.cell_center(k).0).collect();
        let f: Vec<f64> = cbar.iter().map(|&x| phi * x / tau).collect();
        let mut data = vec![0.0; m.n_edges()];
        for e in 0..m.n_edges() {
            if m.is_boundary_edge(e) {
                data[e] = m.edge_midpoint(e).0; // edge average of x
            }
        }
        let (c, r, _) = fact.step(&vec![0.0; 4], &f, &data);
        for k in 0..4 {
            assert!((c.0[k] - cbar[k]).abs() < 1e-13, "cell {k}");
        }
        for e in 0..m.n_edges() {
            let want = if m.is_vertical(e) { -d } else { 0.0 };
            assert!((r.0[e] - want).abs() < 1e-12, "edge {e}");
        }
    }

    #[test]
    fn full_mixed_residual_small_on_random_data() {
        let m = StructuredMesh::new(vec![0.0, 0.3, 0.8, 1.0], vec![0.0, 0.5, 1.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let n = m.n_cells();
        let phi: Vec<f64> = (0..n).map(|_| 0.5 + rng.gen::<f64>()).collect();
        let d: Vec<f64> = (0..n).map(|_| 0.01 + rng.gen::<f64>()).collect();
        let tau = 0.05;
        // mix of all boundary kinds
        let kinds: Vec<EdgeBc> = (0..m.n_edges())
            .map(|e| match m.boundary_side(e) {
                None => EdgeBc::Interior,
                Some(BoundarySide::Left) => EdgeBc::Neumann,
                Some(BoundarySide::Right) => EdgeBc::Robin(0.7),
                Some(_) => EdgeBc::Dirichlet,
            })
            .collect();
        let fact =
            DiffusionFactorization::assemble(&m, &phi, &d, Some(tau), kinds.clone()).unwrap();
        for _ in 0..5 {
            let c_in: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
            let f: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
            let data: Vec<f64> = (0..m.n_edges()).map(|_| rng.gen::<f64>() - 0.5).collect();
            let (c, r, lam) = fact.step(&c_in, &f, &data);
            let res = full_mixed_residual(
                &m, &phi, &d, tau, &kinds, &c_in, &f, &data, &c.0, &r.0, &lam,
            );
            assert!(res < 1e-10, "residual {res:.3e}");
        }
    }

    #[test]
    fn per_cell_balance_and_global_mass() {
        let m = StructuredMesh::uniform(0.0, 1.0, 0.0, 1.0, 6, 5).unwrap();
        let n = m.n_cells();
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let phi = vec![0.8; n];
        let d = vec![0.02; n];
        let tau = 0.01;
        let fact =
            DiffusionFactorization::assemble(&m, &phi, &d, Some(tau), all_dirichlet(&m)).unwrap();
        let c_in: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        let f: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        let data: Vec<f64> = (0..m.n_edges()).map(|_| rng.gen::<f64>()).collect();
        let (c, r, _) = fact.step(&c_in, &f, &data);
        // per-cell: φ|K|(c-c_in)/τ + Σ |E| r_out = |K| f
        let mut total_flux = 0.0;
        let mut total_mass_rate = 0.0;
        let mut total_source = 0.0;
        for k in 0..n {
            let area = m.cell_area(k);
            let mut div = 0.0;
            for e in m.cell_edges(k) {
                div += m.outward_sign(k, e) * r.0[e] * m.edge_len(e);
            }
            let res = phi[k] * area * (c.0[k] - c_in[k]) / tau + div - area * f[k];
            assert!(res.abs() < 1e-11);
            total_mass_rate += phi[k] * area * (c.0[k] - c_in[k]) / tau;
            total_source += area * f[k];
        }
        for e in m.boundary_edges() {
            let k = {
                let (a, b) = m.edge_cells(e);
                a.or(b).unwrap()
            };
            total_flux += m.outward_sign(k, e) * r.0[e] * m.edge_len(e);
        }
        // global: Σ φ|K|(c-c_in)/τ + boundary outflux = Σ |K| f
        let scale = total_source.abs().max(1.0);
        assert!((total_mass_rate + total_flux - total_source).abs() < 1e-12 * scale);
    }

    #[test]
    fn step_is_linear_in_all_data() {
        let m = StructuredMesh::uniform(0.0, 1.0, 0.0, 1.0, 4, 3).unwrap();
        let n = m.n_cells();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let fact = DiffusionFactorization::assemble(
            &m,
            &vec![1.0; n],
            &vec![0.1; n],
            Some(0.02),
            all_dirichlet(&m),
        )
        .unwrap();
        let rv = |rng: &mut ChaCha8Rng, n: usize| -> Vec<f64> {
            (0..n).map(|_| rng.gen::<f64>() - 0.5).collect()
        };
        let (c1, f1, d1) = (rv(&mut rng, n), rv(&mut rng, n), rv(&mut rng, m.n_edges()));
        let (c2, f2, d2) = (rv(&mut rng, n), rv(&mut rng, n), rv(&mut rng, m.n_edges()));
        let add = |a: &[f64], b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| x + y).collect() };
        let (ca, ra, _) = fact.step(&c1, &f1, &d1);
        let (cb, rb, _) = fact.step(&c2, &f2, &d2);
        let (cs, rs, _) = fact.step(&add(&c1, &c2), &add(&f1, &f2), &add(&d1, &d2));
        for k in 0..n {
            assert!((cs.0[k] - ca.0[k] - cb.0[k]).abs() < 1e-12);
        }
        for e in 0..m.n_edges() {
            assert!((rs.0[e] - ra.0[e] - rb.0[e]).abs() < 1e-11);
        }
    }

    #[test]
    fn robin_identity_holds_edgewise() {
        let m = StructuredMesh::uniform(0.0, 1.0, 0.0, 1.0, 4, 4).unwrap();
        let n = m.n_cells();
        let alpha = 1.3;
        let kinds: Vec<EdgeBc> = (0..m.n_edges())
            .map(|e| {
                if m.boundary_side(e) == Some(BoundarySide::Right) {
                    EdgeBc::Robin(alpha)
                } else if m.is_boundary_edge(e) {
                    EdgeBc::Dirichlet
                } else {
                    EdgeBc::Interior
                }
            })
            .collect();
        let fact = DiffusionFactorization::assemble(
            &m,
            &vec![1.0; n],
            &vec![0.05; n],
            Some(0.1),
            kinds.clone(),
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let c_in: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        let data: Vec<f64> = (0..m.n_edges()).map(|_| rng.gen::<f64>()).collect();
        let (_, r, lam) = fact.step(&c_in, &vec![0.0; n], &data);
        for e in 0..m.n_edges() {
            if let EdgeBc::Robin(a) = kinds[e] {
                let rn = r.0[e]; // right boundary: global +x is outward
                let res = a * lam[e] - rn - data[e];
                assert!(res.abs() < 1e-11);
            }
        }
    }

    #[test]
    fn rejects_bad_coefficients() {
        let m = StructuredMesh::uniform(0.0, 1.0, 0.0, 1.0, 2, 2).unwrap();
        let kinds = all_dirichlet(&m);
        assert!(DiffusionFactorization::assemble(
            &m,
            &vec![1.0; 4],
            &vec![-1.0; 4],
            Some(0.1),
            kinds.clone()
        )
        .is_err());
        let mut robin = kinds.clone();
        robin[0] = EdgeBc::Robin(0.0);
        // robin alpha must be positive (edge 0 is a boundary edge on the left)
        assert!(DiffusionFactorization::assemble(
            &m,
            &vec![1.0; 4],
            &vec![1.0; 4],
            Some(0.1),
            robin
        )
        .is_err());
    }

    fn darcy_kinds(m: &StructuredMesh) -> Vec<EdgeBc> {
        (0..m.n_edges())
            .map(|e| match m.boundary_side(e) {
                Some(BoundarySide::Bottom) | Some(BoundarySide::Top) => EdgeBc::Dirichlet,
                Some(_) => EdgeBc::Neumann,
                None => EdgeBc::Interior,
            })
            .collect()
    }

    #[test]
    fn darcy_uniform_vertical_column() {
        // p = 100 at bottom, p = 0 at top, no-flow sides: u = (0, K*100/H)
        let m = StructuredMesh::uniform(0.0, 10.0, 0.0, 100.0, 4, 10).unwrap();
        let kcond = 1e-13;
        let mut data = vec![0.0; m.n_edges()];
        for e in 0..m.n_edges() {
            match m.boundary_side(e) {
                Some(BoundarySide::Bottom) => data[e] = 100.0,
                Some(BoundarySide::Top) => data[e] = 0.0,
                _ => {}
            }
        }
        let darcy = solve_darcy(&m, &vec![kcond; m.n_cells()], darcy_kinds(&m), &data).unwrap();
        let want = kcond * 100.0 / 100.0;
        for e in 0..m.n_edges() {
            let got = darcy.flux.0[e];
            if m.is_vertical(e) {
                assert!(got.abs() < 1e-12 * want.abs().max(1e-30), "vertical {e}");
            } else {
                assert!((got - want).abs() < 1e-10 * want, "horizontal {e}");
            }
        }
        assert!(max_relative_divergence(&m, &darcy.flux.0) < 1e-10);
    }

    #[test]
    fn darcy_layered_series_resistance() {
        // two horizontal layers: flux = Δp / (H1/K1 + H2/K2), head piecewise linear
        let m = StructuredMesh::uniform(0.0, 1.0, 0.0, 1.0, 3, 8).unwrap();
        let (k1, k2) = (2.0, 0.5);
        let kcond: Vec<f64> = (0..m.n_cells())
            .map(|c| if m.cell_center(c).1 < 0.5 { k1 } else { k2 })
            .collect();
        let mut data = vec![0.0; m.n_edges()];
        for e in 0..m.n_edges() {
            if m.boundary_side(e) == Some(BoundarySide::Bottom) {
                data[e] = 1.0;
            }
        }
        let darcy = solve_darcy(&m, &kcond, darcy_kinds(&m), &data).unwrap();
        let want = 1.0 / (0.5 / k1 + 0.5 / k2);
        for e in 0..m.n_edges() {
            if !m.is_vertical(e) {
                assert!((darcy.flux.0[e] - want).abs() < 1e-10, "edge {e}");
            }
        }
        // head slope ∝ 1/K within each layer
        let head = &darcy.head.0;
        let grad_bottom = (head[0] - head[3]) / 0.125; // cells (0,0) and (0,1)
        let grad_top = (head[m.cell_id(0, 6)] - head[m.cell_id(0, 7)]) / 0.125;
        assert!((grad_bottom * k1 - want).abs() < 1e-9);
        assert!((grad_top * k2 - want).abs() < 1e-9);
    }

    #[test]
    fn darcy_zero_head_difference_zero_flow() {
        let m = StructuredMesh::uniform(0.0, 1.0, 0.0, 1.0, 3, 3).unwrap();
        let mut data = vec![0.0; m.n_edges()];
        for e in 0..m.n_edges() {
            if matches!(
                m.boundary_side(e),
                Some(BoundarySide::Bottom) | Some(BoundarySide::Top)
            ) {
                data[e] = 5.0;
            }
        }
        let darcy = solve_darcy(&m, &vec![1.0; 9], darcy_kinds(&m), &data).unwrap();
        for v in &darcy.flux.0 {
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn darcy_rejects_pure_neumann() {
        let m = StructuredMesh::uniform(0.0, 1.0, 0.0, 1.0, 2, 2).unwrap();
        let kinds: Vec<EdgeBc> = (0..m.n_edges())
            .map(|e| {
                if m.is_boundary_edge(e) {
                    EdgeBc::Neumann
                } else {
                    EdgeBc::Interior
                }
            })
            .collect();
        let data = vec![0.0; m.n_edges()];
        assert!(solve_darcy(&m, &vec![1.0; 4], kinds, &data).is_err());
    }
}
