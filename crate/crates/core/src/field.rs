//! Element-wise nodal data on the velocity (GLL) or pressure (GL) grid.

/// Which tensor grid a [`Field`] lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Grid {
    Velocity,
    Pressure,
}

/// Nodal values stored element by element, `n^3` values per element with the
/// first index fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    n: usize,
    num_elements: usize,
    values: Vec<f64>,
}

pub type VectorField = [Field; 3];

impl Field {
    pub fn zeros(grid: Grid, num_elements: usize, n: usize) -> Self {
        Self {
            grid,
            n,
            num_elements,
            values: vec![0.0; num_elements * n * n * n],
        }
    }

    pub fn from_values(grid: Grid, num_elements: usize, n: usize, values: Vec<f64>) -> Self {
        assert_eq!(
            values.len(),
            num_elements * n * n * n,
            "field of {num_elements} elements with {n}^3 nodes got {} values",
            values.len()
        );
        Self {
            grid,
            n,
            num_elements,
            values,
        }
    }

    /// Same shape and grid, values zeroed.
    pub fn zeros_like(other: &Field) -> Self {
        Self::zeros(other.grid, other.num_elements, other.n)
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// Points per direction.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nodes_per_element(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn num_elements(&self) -> usize {
        self.num_elements
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn element(&self, e: usize) -> &[f64] {
        let m = self.nodes_per_element();
        &self.values[e * m..(e + 1) * m]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Panics unless `other` has the same grid and shape.
    pub fn assert_compatible(&self, other: &Field) {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        assert_eq!(
            (self.num_elements, self.n),
            (other.num_elements, other.n),
            "field shape mismatch"
        );
    }

    pub fn axpy(&mut self, alpha: f64, x: &Field) {
        self.assert_compatible(x);
        crate::linalg::axpy(alpha, &x.values, &mut self.values);
    }

    pub fn scale(&mut self, alpha: f64) {
        self.values.iter_mut().for_each(|v| *v *= alpha);
    }
}

pub fn zero_vector_field(grid: Grid, num_elements: usize, n: usize) -> VectorField {
    std::array::from_fn(|_| Field::zeros(grid, num_elements, n))
}
