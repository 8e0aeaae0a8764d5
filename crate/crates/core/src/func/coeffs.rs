use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::CubeId;
use crate::measure::MeasureTree;

/// A finitely supported sequence `{γ_Q}` indexed by cubes.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CoefficientSequence {
    entries: BTreeMap<CubeId, f64>,
}

impl CoefficientSequence {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn single(q: CubeId, value: f64) -> Self {
        let mut s = Self::new();
        s.insert(q, value);
        s
    }

    /// Sets `γ_q`; a zero value removes the entry.
    pub fn insert(&mut self, q: CubeId, value: f64) {
        if value == 0.0 {
            self.entries.remove(&q);
        } else {
            self.entries.insert(q, value);
        }
    }

    pub fn get(&self, q: &CubeId) -> f64 {
        self.entries.get(q).copied().unwrap_or(0.0)
    }

    /// Entries in (generation, index) order.
    pub fn iter(&self) -> impl Iterator<Item = (&CubeId, &f64)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn sup_abs(&self) -> f64 {
        self.entries.values().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Deepest generation carrying an entry.
    pub fn max_gen(&self) -> Option<u32> {
        self.entries.keys().map(|q| q.gen()).max()
    }

    pub fn scale(&self, c: f64) -> Self {
        self.entries.iter().map(|(q, v)| (*q, c * v)).collect()
    }

    /// Rejects entries that do not fit `mu` or sit on zero-mass cubes.
    pub fn validate(&self, mu: &MeasureTree) -> Result<()> {
        for (q, v) in &self.entries {
            if q.dim() != mu.dim() {
                return Err(Error::DimensionMismatch { expected: mu.dim(), got: q.dim() });
            }
            if q.gen() >= mu.depth() {
                return Err(Error::DepthOverflow { requested: q.gen() + 1, available: mu.depth() });
            }
            if !v.is_finite() {
                return Err(Error::InvalidInput(format!("coefficient at {q} is not finite")));
            }
            if mu.mass(q) == 0.0 {
                return Err(Error::ZeroMassCoefficient(q.to_string()));
            }
        }
        Ok(())
    }
}

impl FromIterator<(CubeId, f64)> for CoefficientSequence {
    fn from_iter<I: IntoIterator<Item = (CubeId, f64)>>(iter: I) -> Self {
        let mut s = Self::new();
        for (q, v) in iter {
            s.insert(q, v);
        }
        s
    }
}
