//! Rectangular tensor-product meshes, edge topology and non-overlapping
//! decomposition into axis-aligned subdomain boxes.
//!
//! Cells are indexed row-major from the bottom-left: `cell = j*nx + i`.
//! Edges come in two families with a fixed global orientation:
//! vertical edges (normal +x) then horizontal edges (normal +y).
//! An interface between two subdomains is an ordered list of global edge
//! ids; its global normal always points from the lower-numbered side `lo`
//! into `hi`.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("coordinate axis {axis} must be strictly increasing (offending index {index})")]
    NonMonotone { axis: char, index: usize },
    #[error("coordinate axis {axis} needs at least 2 points, got {got}")]
    TooFewPoints { axis: char, got: usize },
    #[error("split coordinate {value} on axis {axis} does not lie on a mesh line")]
    SplitOffGrid { axis: char, value: f64 },
    #[error("edge {edge} is not on any interface")]
    NotAnInterfaceEdge { edge: usize },
}

/// Which side of the domain a boundary edge lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundarySide {
    Left,
    Right,
    Bottom,
    Top,
}

/// Tensor-product rectangular mesh.
#[derive(Debug, Clone)]
pub struct StructuredMesh {
    x: Vec<f64>,
    y: Vec<f64>,
}

impl StructuredMesh {
    /// Build a mesh from strictly increasing abscissas and ordinates.
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self, MeshError> {
        for (axis, v) in [('x', &x), ('y', &y)] {
            if v.len() < 2 {
                return Err(MeshError::TooFewPoints { axis, got: v.len() });
            }
            if let Some(i) = v.windows(2).position(|w| w[1] <= w[0]) {
                return Err(MeshError::NonMonotone { axis, index: i + 1 });
            }
        }
        Ok(Self { x, y })
    }

    /// Uniform mesh with `nx` x `ny` cells on the rectangle [x0,x1] x [y0,y1].
    pub fn uniform(
        x0: f64,
        x1: f64,
        y0: f64,
        y1: f64,
        nx: usize,
        ny: usize,
    ) -> Result<Self, MeshError> {
        let coords = |a: f64, b: f64, n: usize| -> Vec<f64> {
            (0..=n).map(|k| a + (b - a) * k as f64 / n as f64).collect()
        };
        Self::new(coords(x0, x1, nx), coords(y0, y1, ny))
    }

    pub fn nx(&self) -> usize {
        self.x.len() - 1
    }

    pub fn ny(&self) -> usize {
        self.y.len() - 1
    }

    pub fn x_coords(&self) -> &[f64] {
        &self.x
    }

    pub fn y_coords(&self) -> &[f64] {
        &self.y
    }

    pub fn n_cells(&self) -> usize {
        self.nx() * self.ny()
    }

    /// Vertical edges, then horizontal edges.
    pub fn n_edges(&self) -> usize {
        self.n_vertical_edges() + self.n_horizontal_edges()
    }

    pub fn n_vertical_edges(&self) -> usize {
        (self.nx() + 1) * self.ny()
    }

    pub fn n_horizontal_edges(&self) -> usize {
        self.nx() * (self.ny() + 1)
    }

    pub fn cell_id(&self, i: usize, j: usize) -> usize {
        j * self.nx() + i
    }

    pub fn cell_ij(&self, cell: usize) -> (usize, usize) {
        (cell % self.nx(), cell / self.nx())
    }

    /// Vertical edge at abscissa index `i` (0..=nx), row `j`.
    pub fn v_edge(&self, i: usize, j: usize) -> usize {
        j * (self.nx() + 1) + i
    }

    /// Horizontal edge at ordinate index `j` (0..=ny), column `i`.
    pub fn h_edge(&self, i: usize, j: usize) -> usize {
        self.n_vertical_edges() + j * self.nx() + i
    }

    pub fn is_vertical(&self, edge: usize) -> bool {
        edge < self.n_vertical_edges()
    }

    /// Edges of a cell in the order [west, east, south, north].
    pub fn cell_edges(&self, cell: usize) -> [usize; 4] {
        let (i, j) = self.cell_ij(cell);
        [
            self.v_edge(i, j),
            self.v_edge(i + 1, j),
            self.h_edge(i, j),
            self.h_edge(i, j + 1),
        ]
    }

    /// The up-to-two cells adjacent to an edge, as (negative-side, positive-side)
    /// with respect to the global edge normal (+x for vertical, +y for horizontal).
    /// The negative-side cell sees the global normal as outward.
    pub fn edge_cells(&self, edge: usize) -> (Option<usize>, Option<usize>) {
        let nx = self.nx();
        if self.is_vertical(edge) {
            let i = edge % (nx + 1);
            let j = edge / (nx + 1);
            let neg = (i > 0).then(|| self.cell_id(i - 1, j));
            let pos = (i < nx).then(|| self.cell_id(i, j));
            (neg, pos)
        } else {
            let k = edge - self.n_vertical_edges();
            let i = k % nx;
            let j = k / nx;
            let neg = (j > 0).then(|| self.cell_id(i, j - 1));
            let pos = (j < self.ny()).then(|| self.cell_id(i, j));
            (neg, pos)
        }
    }

    /// Outward sign of the global edge normal as seen from `cell`.
    pub fn outward_sign(&self, cell: usize, edge: usize) -> f64 {
        let (neg, _) = self.edge_cells(edge);
        if neg == Some(cell) {
            1.0
        } else {
            -1.0
        }
    }

    pub fn dx(&self, i: usize) -> f64 {
        self.x[i + 1] - self.x[i]
    }

    pub fn dy(&self, j: usize) -> f64 {
        self.y[j + 1] - self.y[j]
    }

    pub fn cell_area(&self, cell: usize) -> f64 {
        let (i, j) = self.cell_ij(cell);
        self.dx(i) * self.dy(j)
    }

    /// Cell extents (dx, dy).
    pub fn cell_size(&self, cell: usize) -> (f64, f64) {
        let (i, j) = self.cell_ij(cell);
        (self.dx(i), self.dy(j))
    }

    pub fn cell_center(&self, cell: usize) -> (f64, f64) {
        let (i, j) = self.cell_ij(cell);
        (
            0.5 * (self.x[i] + self.x[i + 1]),
            0.5 * (self.y[j] + self.y[j + 1]),
        )
    }

    pub fn edge_len(&self, edge: usize) -> f64 {
        if self.is_vertical(edge) {
            let j = edge / (self.nx() + 1);
            self.dy(j)
        } else {
            let k = edge - self.n_vertical_edges();
            self.dx(k % self.nx())
        }
    }

    pub fn edge_midpoint(&self, edge: usize) -> (f64, f64) {
        if self.is_vertical(edge) {
            let i = edge % (self.nx() + 1);
            let j = edge / (self.nx() + 1);
            (self.x[i], 0.5 * (self.y[j] + self.y[j + 1]))
        } else {
            let k = edge - self.n_vertical_edges();
            let (i, j) = (k % self.nx(), k / self.nx());
            (0.5 * (self.x[i] + self.x[i + 1]), self.y[j])
        }
    }

    pub fn is_boundary_edge(&self, edge: usize) -> bool {
        self.boundary_side(edge).is_some()
    }

    pub fn boundary_side(&self, edge: usize) -> Option<BoundarySide> {
        if self.is_vertical(edge) {
            let i = edge % (self.nx() + 1);
            if i == 0 {
                Some(BoundarySide::Left)
            } else if i == self.nx() {
                Some(BoundarySide::Right)
            } else {
                None
            }
        } else {
            let j = (edge - self.n_vertical_edges()) / self.nx();
            if j == 0 {
                Some(BoundarySide::Bottom)
            } else if j == self.ny() {
                Some(BoundarySide::Top)
            } else {
                None
            }
        }
    }

    pub fn boundary_edges(&self) -> Vec<usize> {
        (0..self.n_edges())
            .filter(|&e| self.is_boundary_edge(e))
            .collect()
    }

    /// Locate a coordinate on a mesh line of the given axis.
    pub fn grid_line(&self, axis: char, value: f64) -> Result<usize, MeshError> {
        let coords = if axis == 'x' { &self.x } else { &self.y };
        let scale = coords[coords.len() - 1] - coords[0];
        coords
            .iter()
            .position(|&c| (c - value).abs() <= 1e-12 * scale.abs().max(1.0))
            .ok_or(MeshError::SplitOffGrid { axis, value })
    }
}

/// One block of mesh spacing along an axis: uniform, or a geometric
/// progression of cell widths with the given ratio.
#[derive(Debug, Clone, Copy)]
pub struct AxisBlock {
    pub to: f64,
    pub cells: usize,
    /// width ratio between consecutive cells; 1.0 means uniform
    pub ratio: f64,
}

/// Build one axis of coordinates from consecutive blocks starting at `start`.
pub fn axis_from_blocks(start: f64, blocks: &[AxisBlock]) -> Result<Vec<f64>, MeshError> {
    let mut coords = vec![start];
    let mut from = start;
    for b in blocks {
        let len = b.to - from;
        let n = b.cells;
        let r = b.ratio;
        // first width of the geometric progression normalized to the block length
        let denom: f64 = if (r - 1.0).abs() < 1e-14 {
            n as f64
        } else {
            (r.powi(n as i32) - 1.0) / (r - 1.0)
        };
        let w0 = len / denom;
        for k in 0..n {
            if k == n - 1 {
                coords.push(b.to);
            } else {
                let c = coords.last().unwrap() + w0 * r.powi(k as i32);
                coords.push(c);
            }
        }
        from = b.to;
    }
    if let Some(i) = coords.windows(2).position(|w| w[1] <= w[0]) {
        return Err(MeshError::NonMonotone {
            axis: '?',
            index: i + 1,
        });
    }
    Ok(coords)
}

/// Axis-aligned box of cells, half-open index ranges.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellBox {
    pub i0: usize,
    pub i1: usize,
    pub j0: usize,
    pub j1: usize,
}

impl CellBox {
    pub fn n_cells(&self) -> usize {
        (self.i1 - self.i0) * (self.j1 - self.j0)
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        i >= self.i0 && i < self.i1 && j >= self.j0 && j < self.j1
    }
}

/// Flow direction through an interface edge, relative to the (lo, hi) pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeFlow {
    /// fluid enters `lo`: the flux along the global normal is negative
    IntoLo,
    /// fluid enters `hi`
    IntoHi,
    /// zero normal flux
    Neutral,
}

/// Interface between subdomains `lo < hi`; the global edge normal points
/// from `lo` into `hi`.
#[derive(Debug, Clone)]
pub struct Interface {
    pub lo: usize,
    pub hi: usize,
    pub edges: Vec<usize>,
    /// filled by [`classify_interface`]
    pub flow: Vec<EdgeFlow>,
}

impl Interface {
    /// Outward sign of the global edge normal as seen from subdomain `sub`.
    pub fn outward_sign(&self, sub: usize) -> f64 {
        if sub == self.lo {
            1.0
        } else {
            -1.0
        }
    }

    pub fn other(&self, sub: usize) -> usize {
        if sub == self.lo {
            self.hi
        } else {
            self.lo
        }
    }

    pub fn touches(&self, sub: usize) -> bool {
        self.lo == sub || self.hi == sub
    }

    /// Is the edge at position `k` an inflow edge for subdomain `sub`?
    pub fn is_inflow(&self, sub: usize, k: usize) -> bool {
        match self.flow[k] {
            EdgeFlow::IntoLo => sub == self.lo,
            EdgeFlow::IntoHi => sub == self.hi,
            EdgeFlow::Neutral => false,
        }
    }

    pub fn is_outflow(&self, sub: usize, k: usize) -> bool {
        match self.flow[k] {
            EdgeFlow::IntoLo => sub == self.hi,
            EdgeFlow::IntoHi => sub == self.lo,
            EdgeFlow::Neutral => false,
        }
    }
}

/// Non-overlapping decomposition of a mesh into cell boxes.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub boxes: Vec<CellBox>,
    pub interfaces: Vec<Interface>,
}

impl Decomposition {
    /// Single subdomain covering the whole mesh (monodomain).
    pub fn monodomain(mesh: &StructuredMesh) -> Self {
        Self {
            boxes: vec![CellBox {
                i0: 0,
                i1: mesh.nx(),
                j0: 0,
                j1: mesh.ny(),
            }],
            interfaces: Vec::new(),
        }
    }

    /// Grid decomposition by split coordinates (which must lie on mesh lines).
    /// Subdomains are numbered row-major from the bottom-left.
    pub fn grid(
        mesh: &StructuredMesh,
        x_splits: &[f64],
        y_splits: &[f64],
    ) -> Result<Self, MeshError> {
        let mut xi = vec![0usize];
        for &s in x_splits {
            xi.push(mesh.grid_line('x', s)?);
        }
        xi.push(mesh.nx());
        let mut yj = vec![0usize];
        for &s in y_splits {
            yj.push(mesh.grid_line('y', s)?);
        }
        yj.push(mesh.ny());

        let ncols = xi.len() - 1;
        let nrows = yj.len() - 1;
        let mut boxes = Vec::with_capacity(ncols * nrows);
        for r in 0..nrows {
            for c in 0..ncols {
                boxes.push(CellBox {
                    i0: xi[c],
                    i1: xi[c + 1],
                    j0: yj[r],
                    j1: yj[r + 1],
                });
            }
        }

        let sub = |r: usize, c: usize| r * ncols + c;
        let mut interfaces = Vec::new();
        // vertical interfaces between horizontally adjacent boxes
        for r in 0..nrows {
            for c in 0..ncols - 1 {
                let i = xi[c + 1];
                let edges: Vec<usize> = (yj[r]..yj[r + 1]).map(|j| mesh.v_edge(i, j)).collect();
                interfaces.push(Interface {
                    lo: sub(r, c),
                    hi: sub(r, c + 1),
                    flow: vec![EdgeFlow::Neutral; edges.len()],
                    edges,
                });
            }
        }
        // horizontal interfaces between vertically adjacent boxes
        for r in 0..nrows - 1 {
            for c in 0..ncols {
                let j = yj[r + 1];
                let edges: Vec<usize> = (xi[c]..xi[c + 1]).map(|i| mesh.h_edge(i, j)).collect();
                interfaces.push(Interface {
                    lo: sub(r, c),
                    hi: sub(r + 1, c),
                    flow: vec![EdgeFlow::Neutral; edges.len()],
                    edges,
                });
            }
        }
        Ok(Self { boxes, interfaces })
    }

    pub fn n_subdomains(&self) -> usize {
        self.boxes.len()
    }

    /// Indices of the interfaces touching subdomain `sub`.
    pub fn interfaces_of(&self, sub: usize) -> Vec<usize> {
        self.interfaces
            .iter()
            .enumerate()
            .filter(|(_, it)| it.touches(sub))
            .map(|(k, _)| k)
            .collect()
    }
}

/// Tag every interface edge by flow direction given single-valued normal
/// fluxes on all mesh edges (global orientation).
pub fn classify_interface(
    mesh: &StructuredMesh,
    mut decomp: Decomposition,
    edge_flux: &[f64],
) -> Result<Decomposition, MeshError> {
    for iface in &mut decomp.interfaces {
        for (k, &e) in iface.edges.iter().enumerate() {
            if mesh.is_boundary_edge(e) {
                return Err(MeshError::NotAnInterfaceEdge { edge: e });
            }
            let u = edge_flux[e];
            iface.flow[k] = if u > 0.0 {
                EdgeFlow::IntoHi
            } else if u < 0.0 {
                EdgeFlow::IntoLo
            } else {
                EdgeFlow::Neutral
            };
        }
    }
    Ok(decomp)
}

/// A subdomain mesh extracted from a global mesh, with index maps back to it.
#[derive(Debug, Clone)]
pub struct SubMesh {
    pub mesh: StructuredMesh,
    pub cell_box: CellBox,
    /// local cell -> global cell
    pub cells: Vec<usize>,
    /// local edge -> global edge
    pub edges: Vec<usize>,
}

impl SubMesh {
    pub fn extract(global: &StructuredMesh, b: CellBox) -> Self {
        let x = global.x[b.i0..=b.i1].to_vec();
        let y = global.y[b.j0..=b.j1].to_vec();
        let mesh = StructuredMesh::new(x, y).expect("box slice of a valid mesh");
        let mut cells = Vec::with_capacity(mesh.n_cells());
        for j in b.j0..b.j1 {
            for i in b.i0..b.i1 {
                cells.push(global.cell_id(i, j));
            }
        }
        let mut edges = Vec::with_capacity(mesh.n_edges());
        for j in 0..mesh.ny() {
            for i in 0..=mesh.nx() {
                edges.push(global.v_edge(b.i0 + i, b.j0 + j));
            }
        }
        for j in 0..=mesh.ny() {
            for i in 0..mesh.nx() {
                edges.push(global.h_edge(b.i0 + i, b.j0 + j));
            }
        }
        Self {
            mesh,
            cell_box: b,
            cells,
            edges,
        }
    }

    /// Local edge id for a global edge of this subdomain.
    pub fn local_edge(&self, global: &StructuredMesh, global_edge: usize) -> Option<usize> {
        let b = self.cell_box;
        if global.is_vertical(global_edge) {
            let i = global_edge % (global.nx() + 1);
            let j = global_edge / (global.nx() + 1);
            (i >= b.i0 && i <= b.i1 && j >= b.j0 && j < b.j1)
                .then(|| self.mesh.v_edge(i - b.i0, j - b.j0))
        } else {
            let k = global_edge - global.n_vertical_edges();
            let i = k % global.nx();
            let j = k / global.nx();
            (i >= b.i0 && i < b.i1 && j >= b.j0 && j <= b.j1)
                .then(|| self.mesh.h_edge(i - b.i0, j - b.j0))
        }
    }
}
