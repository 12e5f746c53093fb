//! Periodic lattice fields and the discrete calculus built on them.
//!
//! Every field lives on a d-dimensional periodic box `[0, L)^d` sampled at
//! `n` points per axis, node `j` sitting at `x = j * h` with `h = L / n`.
//! Values are stored row-major with axis 0 (x₁) slowest.

mod holder;
mod interp;
mod ops;
pub(crate) mod spectral;

pub(crate) use ops::contract;

pub use holder::{estimate_holder, HolderEstimate};
pub use interp::{interpolate, interpolate_into};
pub use ops::{
    advect, curl_defect, dealias, divergence, gradient, jacobian, laplacian, DiffScheme,
    Discretization,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("field contains a non-finite value at index {index}")]
    NonFinite { index: usize },
    #[error("field has {got} values, grid expects {expected}")]
    WrongLength { expected: usize, got: usize },
    #[error("grid mismatch between operands")]
    GridMismatch,
    #[error("dimension {0} is not supported by this operation")]
    UnsupportedDimension(usize),
    #[error("invalid point: {0}")]
    InvalidPoint(String),
    #[error("degenerate field: {0}")]
    Degenerate(String),
    #[error("{0}")]
    Precondition(String),
}

/// Uniform periodic lattice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    d: usize,
    n: usize,
    box_length: f64,
}

impl Grid {
    pub fn new(d: usize, n: usize, box_length: f64) -> Result<Self, FieldError> {
        if !(1..=3).contains(&d) {
            return Err(FieldError::InvalidGrid(format!("d = {d} not in 1..=3")));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(FieldError::InvalidGrid(format!(
                "n = {n} must be a power of two and at least 8"
            )));
        }
        if !(box_length.is_finite() && box_length > 0.0) {
            return Err(FieldError::InvalidGrid(format!(
                "box length {box_length} must be positive"
            )));
        }
        Ok(Self { d, n, box_length })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    pub fn spacing(&self) -> f64 {
        self.box_length / self.n as f64
    }

    /// Total number of nodes, `n^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Stride of `axis` in the flat array.
    pub fn stride(&self, axis: usize) -> usize {
        self.n.pow((self.d - 1 - axis) as u32)
    }

    /// Multi-index of a flat index (axis 0 first).
    pub fn unravel(&self, mut flat: usize) -> [usize; 3] {
        let mut idx = [0usize; 3];
        for axis in (0..self.d).rev() {
            idx[axis] = flat % self.n;
            flat /= self.n;
        }
        idx
    }

    pub fn ravel(&self, idx: &[usize]) -> usize {
        idx[..self.d].iter().fold(0, |acc, &i| acc * self.n + i)
    }

    /// Flat index of `idx + offset` with periodic wrapping.
    pub fn ravel_offset(&self, idx: &[usize; 3], offset: &[isize; 3]) -> usize {
        let n = self.n as isize;
        (0..self.d).fold(0, |acc, a| {
            acc * self.n + (idx[a] as isize + offset[a]).rem_euclid(n) as usize
        })
    }

    /// Physical coordinates of a flat node index.
    pub fn coords(&self, flat: usize) -> [f64; 3] {
        let idx = self.unravel(flat);
        let h = self.spacing();
        let mut x = [0.0; 3];
        for a in 0..self.d {
            x[a] = idx[a] as f64 * h;
        }
        x
    }

    /// Euclidean distance from `x` to `c` with minimum-image convention.
    pub fn periodic_distance(&self, x: &[f64], c: &[f64]) -> f64 {
        let l = self.box_length;
        (0..self.d)
            .map(|a| {
                let mut dx = (x[a] - c[a]).rem_euclid(l);
                if dx > 0.5 * l {
                    dx -= l;
                }
                dx * dx
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Whether the node lies within `width` cells of a face of the box.
    pub fn in_boundary_strip(&self, flat: usize, width: usize) -> bool {
        let idx = self.unravel(flat);
        (0..self.d).any(|a| idx[a] < width || idx[a] >= self.n - width)
    }
}

/// Real-valued lattice field.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self, FieldError> {
        if values.len() != grid.len() {
            return Err(FieldError::WrongLength {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(FieldError::NonFinite { index });
        }
        Ok(Self { grid, values })
    }

    pub(crate) fn from_raw(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        Self {
            grid,
            values: vec![c; grid.len()],
        }
    }

    /// Samples `f` at every node.
    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = (0..grid.len())
            .map(|i| f(&grid.coords(i)[..grid.dim()]))
            .collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
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

    pub fn check_finite(&self) -> Result<(), FieldError> {
        match self.values.iter().position(|v| !v.is_finite()) {
            Some(index) => Err(FieldError::NonFinite { index }),
            None => Ok(()),
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_raw(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn scale(&self, a: f64) -> Self {
        self.map(|v| a * v)
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: f64, other: &ScalarField) -> Result<Self, FieldError> {
        if self.grid != other.grid {
            return Err(FieldError::GridMismatch);
        }
        Ok(Self::from_raw(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| x + a * y)
                .collect(),
        ))
    }

    /// Periodic shift by whole cells: `out(i) = self(i - shift)`.
    pub fn shift(&self, shift: &[isize]) -> Self {
        let mut off = [0isize; 3];
        for (a, s) in shift.iter().enumerate().take(self.grid.dim()) {
            off[a] = -s;
        }
        let values = (0..self.grid.len())
            .map(|i| {
                let idx = self.grid.unravel(i);
                self.values[self.grid.ravel_offset(&idx, &off)]
            })
            .collect();
        Self::from_raw(self.grid, values)
    }
}

/// `d`-component vector field, one [`ScalarField`] per axis.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    grid: Grid,
    components: Vec<ScalarField>,
}

impl VectorField {
    pub fn new(components: Vec<ScalarField>) -> Result<Self, FieldError> {
        let grid = *components
            .first()
            .ok_or_else(|| FieldError::InvalidGrid("vector field needs components".into()))?
            .grid();
        if components.len() != grid.dim() {
            return Err(FieldError::InvalidGrid(format!(
                "{} components on a {}-d grid",
                components.len(),
                grid.dim()
            )));
        }
        if components.iter().any(|c| *c.grid() != grid) {
            return Err(FieldError::GridMismatch);
        }
        Ok(Self { grid, components })
    }

    pub(crate) fn from_raw(grid: Grid, components: Vec<ScalarField>) -> Self {
        Self { grid, components }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            components: (0..grid.dim()).map(|_| ScalarField::zeros(grid)).collect(),
        }
    }

    pub fn constant(grid: Grid, c: &[f64]) -> Self {
        Self {
            grid,
            components: (0..grid.dim())
                .map(|a| ScalarField::constant(grid, c[a]))
                .collect(),
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> Vec<f64>) -> Self {
        let d = grid.dim();
        let mut comps = vec![Vec::with_capacity(grid.len()); d];
        for i in 0..grid.len() {
            let v = f(&grid.coords(i)[..d]);
            for a in 0..d {
                comps[a].push(v[a]);
            }
        }
        Self {
            grid,
            components: comps
                .into_iter()
                .map(|v| ScalarField::from_raw(grid, v))
                .collect(),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn components(&self) -> &[ScalarField] {
        &self.components
    }

    pub fn component(&self, a: usize) -> &ScalarField {
        &self.components[a]
    }

    pub fn components_mut(&mut self) -> &mut [ScalarField] {
        &mut self.components
    }

    pub fn into_components(self) -> Vec<ScalarField> {
        self.components
    }

    pub fn check_finite(&self) -> Result<(), FieldError> {
        self.components.iter().try_for_each(|c| c.check_finite())
    }

    /// Euclidean magnitude `|y(x)|` at every node.
    pub fn magnitude(&self) -> ScalarField {
        let values = (0..self.grid.len())
            .map(|i| {
                self.components
                    .iter()
                    .map(|c| c.values[i] * c.values[i])
                    .sum::<f64>()
                    .sqrt()
            })
            .collect();
        ScalarField::from_raw(self.grid, values)
    }

    /// `sup_x |y(x)|` with the Euclidean pointwise norm.
    pub fn sup_norm(&self) -> f64 {
        (0..self.grid.len())
            .map(|i| {
                self.components
                    .iter()
                    .map(|c| c.values[i] * c.values[i])
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
            .sqrt()
    }

    pub fn scale(&self, a: f64) -> Self {
        Self::from_raw(
            self.grid,
            self.components.iter().map(|c| c.scale(a)).collect(),
        )
    }

    pub fn axpy(&self, a: f64, other: &VectorField) -> Result<Self, FieldError> {
        if self.grid != other.grid {
            return Err(FieldError::GridMismatch);
        }
        Ok(Self::from_raw(
            self.grid,
            self.components
                .iter()
                .zip(&other.components)
                .map(|(x, y)| x.axpy(a, y))
                .collect::<Result<_, _>>()?,
        ))
    }

    pub fn add(&self, other: &VectorField) -> Result<Self, FieldError> {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &VectorField) -> Result<Self, FieldError> {
        self.axpy(-1.0, other)
    }

    pub fn shift(&self, shift: &[isize]) -> Self {
        Self::from_raw(
            self.grid,
            self.components.iter().map(|c| c.shift(shift)).collect(),
        )
    }

    /// Multiplies every component pointwise by a scalar field.
    pub fn mul_scalar_field(&self, s: &ScalarField) -> Result<Self, FieldError> {
        if *s.grid() != self.grid {
            return Err(FieldError::GridMismatch);
        }
        Ok(Self::from_raw(
            self.grid,
            self.components
                .iter()
                .map(|c| {
                    ScalarField::from_raw(
                        self.grid,
                        c.values.iter().zip(&s.values).map(|(a, b)| a * b).collect(),
                    )
                })
                .collect(),
        ))
    }

    /// Nodal values at flat index `i`.
    pub fn at(&self, i: usize) -> Vec<f64> {
        self.components.iter().map(|c| c.values[i]).collect()
    }

    /// Bitwise equality of every stored value.
    pub fn bit_eq(&self, other: &VectorField) -> bool {
        self.grid == other.grid
            && self
                .components
                .iter()
                .zip(&other.components)
                .all(|(a, b)| {
                    a.values
                        .iter()
                        .zip(&b.values)
                        .all(|(x, y)| x.to_bits() == y.to_bits())
                })
    }
}

/// `sup_x |a(x) - b(x)|` (Euclidean pointwise norm).
pub fn sup_distance(a: &VectorField, b: &VectorField) -> Result<f64, FieldError> {
    Ok(a.sub(b)?.sup_norm())
}
