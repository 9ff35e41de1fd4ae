//! Cell- and edge-valued discrete fields.

/// One value per cell: a piecewise-constant scalar (concentration, head).
#[derive(Debug, Clone, PartialEq)]
pub struct CellField(pub Vec<f64>);

impl CellField {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn axpy(&mut self, a: f64, x: &CellField) {
        for (s, v) in self.0.iter_mut().zip(&x.0) {
            *s += a * v;
        }
    }
}

/// One normal-flux value per edge, single-valued with the fixed global
/// orientation (+x for vertical edges, +y for horizontal edges).
#[derive(Debug, Clone, PartialEq)]
pub struct FluxField(pub Vec<f64>);

impl FluxField {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
