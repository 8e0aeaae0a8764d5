//! Generalized Haar systems: one function per cube, constant on the children
//! of its cube, of unit `L²(μ)` norm or identically zero, and (in the
//! cancellative case) of mean zero.
//!
//! Functions are stored by their values on children, in grid child order.

mod builders;
mod quantities;
mod spec;

pub use builders::{mitrea_basis, tensor_basis, tensor_epsilon_index, wilson_basis, TensorFactor};
pub use quantities::{standardness, xi, xi_max_over_selectors, BasisKind};
pub use spec::HaarSpec;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{child_count, cubes_at, CubeId};
use crate::measure::MeasureTree;
use crate::rng::keyed_u64;

/// Masses below this are treated as zero when they appear in a denominator.
pub(crate) const MASS_FLOOR: f64 = 1e-300;

/// A single Haar function `φ_Q`.
#[derive(Clone, Debug, PartialEq)]
pub struct HaarFunction {
    pub cube: CubeId,
    /// Value on each child of `cube`, in grid child order.
    pub child_values: Vec<f64>,
    pub is_zero: bool,
}

impl HaarFunction {
    pub fn zero(cube: CubeId) -> Self {
        HaarFunction { cube, child_values: vec![0.0; child_count(cube.dim())], is_zero: true }
    }

    pub(crate) fn from_values(cube: CubeId, child_values: Vec<f64>) -> Self {
        let is_zero = child_values.iter().all(|&v| v == 0.0);
        HaarFunction { cube, child_values, is_zero }
    }

    fn child_masses<'a>(&self, mu: &'a MeasureTree) -> &'a [f64] {
        let k = self.child_values.len();
        &mu.masses_at(self.cube.gen() + 1)[self.cube.idx() * k..(self.cube.idx() + 1) * k]
    }

    pub fn l1_norm(&self, mu: &MeasureTree) -> f64 {
        l1(&self.child_values, self.child_masses(mu))
    }

    pub fn l2_norm(&self, mu: &MeasureTree) -> f64 {
        l2(&self.child_values, self.child_masses(mu))
    }

    /// μ-essential sup: children of zero mass are ignored.
    pub fn linf_norm(&self, mu: &MeasureTree) -> f64 {
        linf(&self.child_values, self.child_masses(mu))
    }

    pub fn integral(&self, mu: &MeasureTree) -> f64 {
        self.child_values.iter().zip(self.child_masses(mu)).map(|(v, m)| v * m).sum()
    }

    /// Number of distinct nonzero values.
    pub fn distinct_values(&self) -> usize {
        let mut vals: Vec<u64> = self.child_values.iter().filter(|v| **v != 0.0).map(|v| v.to_bits()).collect();
        vals.sort_unstable();
        vals.dedup();
        vals.len()
    }
}

pub(crate) fn l1(values: &[f64], masses: &[f64]) -> f64 {
    values.iter().zip(masses).map(|(v, m)| v.abs() * m).sum()
}

pub(crate) fn l2(values: &[f64], masses: &[f64]) -> f64 {
    values.iter().zip(masses).map(|(v, m)| v * v * m).sum::<f64>().sqrt()
}

pub(crate) fn linf(values: &[f64], masses: &[f64]) -> f64 {
    values.iter().zip(masses).filter(|(_, &m)| m > 0.0).fold(0.0, |a, (v, _)| a.max(v.abs()))
}

/// Which function of a multi-function basis a system uses on each cube.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selector {
    /// The same basis index on every cube.
    Fixed(usize),
    /// A seeded pseudo-random index per cube.
    Random { seed: u64 },
    /// Explicit indices; cubes not listed use index 0.
    PerCube(BTreeMap<CubeId, usize>),
}

impl Default for Selector {
    fn default() -> Self {
        Selector::Fixed(0)
    }
}

impl Selector {
    pub fn pick(&self, q: &CubeId, count: usize) -> Result<usize> {
        let j = match self {
            Selector::Fixed(j) => *j,
            Selector::Random { seed } => (keyed_u64(*seed, &[q.gen() as u64, q.index()]) % count as u64) as usize,
            Selector::PerCube(map) => map.get(q).copied().unwrap_or(0),
        };
        if j >= count {
            return Err(Error::InvalidSpec(format!("selector index {j} at {q} exceeds basis size {count}")));
        }
        Ok(j)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Builder {
    Canonical1d,
    Wilson,
    Mitrea,
    Tensor,
    Indicator,
    Custom,
    R2Nonstandard,
}

/// A Haar system on all cubes of generation below the depth of its measure.
#[derive(Clone, Debug, PartialEq)]
pub struct HaarSystem {
    dim: usize,
    depth: u32,
    builder: Builder,
    cancellative: bool,
    selector: Option<Selector>,
    /// Per generation, `2^d` child values per cube in packed cube order.
    values: Vec<Vec<f64>>,
    l1: Vec<Vec<f64>>,
    linf: Vec<Vec<f64>>,
}

impl HaarSystem {
    /// Assembles a system cube by cube. Values on zero-mass children are set to 0.
    pub(crate) fn assemble(
        mu: &MeasureTree,
        builder: Builder,
        cancellative: bool,
        selector: Option<Selector>,
        mut make: impl FnMut(CubeId, &[f64]) -> Result<Option<Vec<f64>>>,
    ) -> Result<Self> {
        let d = mu.dim();
        let k = child_count(d);
        let depth = mu.depth();
        let mut values = Vec::with_capacity(depth as usize);
        let mut l1s = Vec::with_capacity(depth as usize);
        let mut linfs = Vec::with_capacity(depth as usize);
        for g in 0..depth {
            let n = cubes_at(d, g);
            let child_masses = mu.masses_at(g + 1);
            let mut vals = vec![0.0; n * k];
            let mut l1g = vec![0.0; n];
            let mut linfg = vec![0.0; n];
            for i in 0..n {
                let masses = &child_masses[i * k..(i + 1) * k];
                if let Some(v) = make(CubeId::from_parts(d, g, i), masses)? {
                    let slot = &mut vals[i * k..(i + 1) * k];
                    for c in 0..k {
                        slot[c] = if masses[c] > 0.0 { v[c] } else { 0.0 };
                    }
                    l1g[i] = l1(slot, masses);
                    linfg[i] = linf(slot, masses);
                }
            }
            values.push(vals);
            l1s.push(l1g);
            linfs.push(linfg);
        }
        Ok(HaarSystem { dim: d, depth, builder, cancellative, selector, values, l1: l1s, linf: linfs })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Functions exist for cubes of generation `< depth`.
    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn builder(&self) -> Builder {
        self.builder
    }

    pub fn is_cancellative(&self) -> bool {
        self.cancellative
    }

    pub fn selector(&self) -> Option<&Selector> {
        self.selector.as_ref()
    }

    pub fn function(&self, q: &CubeId) -> Result<HaarFunction> {
        self.check_cube(q)?;
        Ok(HaarFunction::from_values(*q, self.values_at(q.gen(), q.idx()).to_vec()))
    }

    fn check_cube(&self, q: &CubeId) -> Result<()> {
        if q.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: q.dim() });
        }
        if q.gen() >= self.depth {
            return Err(Error::DepthOverflow { requested: q.gen() + 1, available: self.depth });
        }
        Ok(())
    }

    pub(crate) fn values_at(&self, gen: u32, idx: usize) -> &[f64] {
        let k = child_count(self.dim);
        &self.values[gen as usize][idx * k..(idx + 1) * k]
    }

    pub(crate) fn gen_values(&self, gen: u32) -> &[f64] {
        &self.values[gen as usize]
    }

    pub(crate) fn is_zero_at(&self, gen: u32, idx: usize) -> bool {
        self.l1[gen as usize][idx] == 0.0
    }

    /// `‖φ_Q‖_{L¹(μ)}` per cube of generation `gen`, as built.
    pub(crate) fn l1_at(&self, gen: u32) -> &[f64] {
        &self.l1[gen as usize]
    }

    pub(crate) fn linf_at(&self, gen: u32) -> &[f64] {
        &self.linf[gen as usize]
    }

    pub fn in_support(&self, q: &CubeId) -> bool {
        self.check_cube(q).is_ok() && !self.is_zero_at(q.gen(), q.idx())
    }

    /// Cubes with a nonzero function, generation by generation up to `upto_gen`.
    pub fn support(&self, upto_gen: u32) -> Vec<CubeId> {
        let mut out = Vec::new();
        for g in 0..self.depth.min(upto_gen.saturating_add(1)) {
            for i in 0..cubes_at(self.dim, g) {
                if !self.is_zero_at(g, i) {
                    out.push(CubeId::from_parts(self.dim, g, i));
                }
            }
        }
        out
    }

    /// Checks every function against `mu`: support, normalization, and
    /// (for cancellative systems) mean zero.
    pub fn validate(&self, mu: &MeasureTree) -> Result<()> {
        if mu.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: mu.dim() });
        }
        if mu.depth() < self.depth {
            return Err(Error::DepthOverflow { requested: self.depth, available: mu.depth() });
        }
        let k = child_count(self.dim);
        for g in 0..self.depth {
            let masses = mu.masses_at(g + 1);
            for i in 0..cubes_at(self.dim, g) {
                let q = CubeId::from_parts(self.dim, g, i);
                check_function(&q, self.values_at(g, i), &masses[i * k..(i + 1) * k], self.cancellative)?;
            }
        }
        Ok(())
    }
}

/// Checks one function given the masses of its cube's children.
pub(crate) fn check_function(q: &CubeId, values: &[f64], masses: &[f64], cancellative: bool) -> Result<()> {
    let reject = |reason: String| Err(Error::InvalidHaarFunction { cube: q.to_string(), reason });
    if values.len() != masses.len() {
        return reject(format!("expected {} child values, got {}", masses.len(), values.len()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return reject("non-finite value".into());
    }
    if values.iter().zip(masses).any(|(v, m)| *v != 0.0 && *m == 0.0) {
        return reject("nonzero value on a zero-mass child".into());
    }
    if values.iter().all(|&v| v == 0.0) {
        return Ok(());
    }
    let norm = l2(values, masses);
    if (norm - 1.0).abs() > 1e-10 {
        return reject(format!("L2 norm {norm} is neither 1 nor 0"));
    }
    if cancellative {
        let mean: f64 = values.iter().zip(masses).map(|(v, m)| v * m).sum();
        let scale = 1e-12 * linf(values, masses) * masses.iter().sum::<f64>();
        if mean.abs() > scale {
            return reject(format!("integral {mean} is not zero"));
        }
    }
    Ok(())
}
