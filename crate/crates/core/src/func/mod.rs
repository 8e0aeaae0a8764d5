//! Simple functions at leaf resolution, and their integrals and norms.
//!
//! A [`SimpleFunction`] of resolution `M` is constant on every cube of
//! generation `M`; its values are stored in packed cube order (see
//! [`grid`](crate::grid)). A [`Patch`] is the same thing restricted to the
//! subtree of one cube.

mod bmo;
mod coeffs;
mod norms;

pub use bmo::{bmo_from_carleson, bmo_norm, carleson_from_bmo, carleson_norm};
pub use coeffs::CoefficientSequence;
pub use norms::{average, inner, inner_product, integral, lp_norm, weak_l1_norm};
pub(crate) use norms::{check, cube_integrals};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{cubes_at, max_generation, packed_to_row_major, row_major_to_packed, CubeId};
use crate::haar::HaarFunction;
use crate::measure::MeasureTree;

/// A function constant on the cubes of generation `resolution`.
#[derive(Clone, Debug, PartialEq)]
pub struct SimpleFunction {
    dim: usize,
    resolution: u32,
    values: Vec<f64>,
}

impl SimpleFunction {
    /// Values in packed cube order.
    pub fn new(dim: usize, resolution: u32, values: Vec<f64>) -> Result<Self> {
        if dim == 0 || resolution > max_generation(dim) {
            return Err(Error::InvalidInput(format!("resolution {resolution} not representable in dimension {dim}")));
        }
        if values.len() != cubes_at(dim, resolution) {
            return Err(Error::InvalidInput(format!(
                "expected {} values at resolution {resolution}, got {}",
                cubes_at(dim, resolution),
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("function value {v} is not finite")));
        }
        Ok(SimpleFunction { dim, resolution, values })
    }

    /// Values in row-major leaf order.
    pub fn from_row_major(dim: usize, resolution: u32, values: &[f64]) -> Result<Self> {
        if dim == 0 || resolution > max_generation(dim) || values.len() != cubes_at(dim, resolution) {
            return Err(Error::InvalidInput(format!(
                "{} row-major values do not fit dimension {dim} at resolution {resolution}",
                values.len()
            )));
        }
        Self::new(dim, resolution, row_major_to_packed(dim, resolution, values))
    }

    pub fn to_row_major(&self) -> Vec<f64> {
        packed_to_row_major(self.dim, self.resolution, &self.values)
    }

    pub fn zeros(dim: usize, resolution: u32) -> Self {
        SimpleFunction { dim, resolution, values: vec![0.0; cubes_at(dim, resolution)] }
    }

    pub fn constant(dim: usize, resolution: u32, c: f64) -> Self {
        SimpleFunction { dim, resolution, values: vec![c; cubes_at(dim, resolution)] }
    }

    /// `value * 1_q` at the given resolution (at least `q.gen()`).
    pub fn indicator(q: &CubeId, resolution: u32, value: f64) -> Result<Self> {
        if resolution < q.gen() {
            return Err(Error::InvalidInput(format!("resolution {resolution} is coarser than cube {q}")));
        }
        let mut f = Self::zeros(q.dim(), resolution);
        let shift = q.dim() as u32 * (resolution - q.gen());
        let lo = q.idx() << shift;
        f.values[lo..lo + (1usize << shift)].iter_mut().for_each(|v| *v = value);
        Ok(f)
    }

    /// A Haar function as a simple function of resolution `phi.cube.gen() + 1`.
    pub fn from_haar(phi: &HaarFunction) -> Self {
        let q = phi.cube;
        let mut f = Self::zeros(q.dim(), q.gen() + 1);
        let k = phi.child_values.len();
        f.values[q.idx() * k..(q.idx() + 1) * k].copy_from_slice(&phi.child_values);
        f
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    /// Values in packed cube order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Value on a cube of generation at least the resolution.
    pub fn value_on(&self, q: &CubeId) -> Option<f64> {
        if q.gen() < self.resolution || q.dim() != self.dim {
            return None;
        }
        Some(self.values[q.idx() >> (self.dim as u32 * (q.gen() - self.resolution))])
    }

    /// The same function at a finer resolution.
    pub fn refine(&self, resolution: u32) -> Result<Self> {
        if resolution < self.resolution {
            return Err(Error::InvalidInput(format!(
                "cannot refine from resolution {} to {resolution}",
                self.resolution
            )));
        }
        if resolution > max_generation(self.dim) {
            return Err(Error::DepthOverflow { requested: resolution, available: max_generation(self.dim) });
        }
        Ok(SimpleFunction { dim: self.dim, resolution, values: self.refined_values(resolution) })
    }

    pub(crate) fn refined_values(&self, resolution: u32) -> Vec<f64> {
        let shift = self.dim as u32 * (resolution - self.resolution);
        if shift == 0 {
            return self.values.clone();
        }
        let block = 1usize << shift;
        let mut out = Vec::with_capacity(self.values.len() * block);
        for &v in &self.values {
            out.extend(std::iter::repeat_n(v, block));
        }
        out
    }

    fn combine(&self, other: &SimpleFunction, op: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        let res = self.resolution.max(other.resolution);
        let a = self.refined_values(res);
        let b = other.refined_values(res);
        let values = a.iter().zip(&b).map(|(&x, &y)| op(x, y)).collect();
        SimpleFunction { dim: self.dim, resolution: res, values }
    }

    /// Pointwise sum, at the finer of the two resolutions.
    pub fn add(&self, other: &SimpleFunction) -> Self {
        self.combine(other, |x, y| x + y)
    }

    pub fn sub(&self, other: &SimpleFunction) -> Self {
        self.combine(other, |x, y| x - y)
    }

    /// Pointwise product.
    pub fn mul(&self, other: &SimpleFunction) -> Self {
        self.combine(other, |x, y| x * y)
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    pub fn map(&self, op: impl Fn(f64) -> f64) -> Self {
        SimpleFunction { dim: self.dim, resolution: self.resolution, values: self.values.iter().map(|&v| op(v)).collect() }
    }

    pub fn abs(&self) -> Self {
        self.map(f64::abs)
    }

    /// Largest absolute value over all leaves, including null ones.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest |f - g| over leaves of positive mass.
    pub fn max_abs_diff_ae(&self, other: &SimpleFunction, mu: &MeasureTree) -> Result<f64> {
        let d = self.sub(other);
        check(&d, mu)?;
        let masses = mu.masses_at(d.resolution);
        Ok(d.values.iter().zip(masses).filter(|(_, &m)| m > 0.0).fold(0.0, |a, (v, _)| a.max(v.abs())))
    }

    /// Serializable form with row-major values.
    pub fn to_spec(&self) -> FunctionSpec {
        FunctionSpec {
            resolution: self.resolution,
            values: self.to_row_major(),
            dim: if self.dim == 1 { None } else { Some(self.dim) },
        }
    }
}

/// JSON form of a simple function: `{"resolution": M, "values": [...]}` in
/// row-major leaf order, with `"dim"` present when the dimension is not 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionSpec {
    pub resolution: u32,
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
}

impl FunctionSpec {
    pub fn build(&self) -> Result<SimpleFunction> {
        SimpleFunction::from_row_major(self.dim.unwrap_or(1), self.resolution, &self.values)
    }
}

/// A function supported in `cube`, constant on the descendants of `cube` of
/// generation `resolution`; values in packed order within the cube.
#[derive(Clone, Debug, PartialEq)]
pub struct Patch {
    pub cube: CubeId,
    pub resolution: u32,
    pub values: Vec<f64>,
}

impl Patch {
    pub fn new(cube: CubeId, resolution: u32, values: Vec<f64>) -> Result<Self> {
        if resolution < cube.gen() || resolution > max_generation(cube.dim()) {
            return Err(Error::InvalidInput(format!("patch resolution {resolution} invalid for cube {cube}")));
        }
        let n = cubes_at(cube.dim(), resolution - cube.gen());
        if values.len() != n {
            return Err(Error::InvalidInput(format!("patch on {cube} needs {n} values, got {}", values.len())));
        }
        Ok(Patch { cube, resolution, values })
    }

    fn offset(&self) -> usize {
        self.cube.idx() << (self.cube.dim() as u32 * (self.resolution - self.cube.gen()))
    }

    /// Masses of the leaves this patch covers.
    pub fn leaf_masses<'a>(&self, mu: &'a MeasureTree) -> &'a [f64] {
        let lo = self.offset();
        &mu.masses_at(self.resolution)[lo..lo + self.values.len()]
    }

    /// The patch as a function on the whole root, zero outside the cube.
    pub fn to_global(&self) -> SimpleFunction {
        let mut f = SimpleFunction::zeros(self.cube.dim(), self.resolution);
        let lo = self.offset();
        f.values[lo..lo + self.values.len()].copy_from_slice(&self.values);
        f
    }

    /// Adds the patch into a function whose resolution is at least the patch's.
    pub fn add_into(&self, f: &mut SimpleFunction) {
        assert!(f.resolution >= self.resolution && f.dim == self.cube.dim());
        let shift = f.dim as u32 * (f.resolution - self.resolution);
        let lo = self.offset() << shift;
        let block = 1usize << shift;
        for (i, &v) in self.values.iter().enumerate() {
            f.values[lo + i * block..lo + (i + 1) * block].iter_mut().for_each(|x| *x += v);
        }
    }

    pub fn integral(&self, mu: &MeasureTree) -> f64 {
        self.values.iter().zip(self.leaf_masses(mu)).map(|(v, m)| v * m).sum()
    }

    pub fn l1_norm(&self, mu: &MeasureTree) -> f64 {
        self.values.iter().zip(self.leaf_masses(mu)).map(|(v, m)| v.abs() * m).sum()
    }

    pub fn l2_norm(&self, mu: &MeasureTree) -> f64 {
        self.values.iter().zip(self.leaf_masses(mu)).map(|(v, m)| v * v * m).sum::<f64>().sqrt()
    }
}
