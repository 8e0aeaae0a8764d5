use serde::{Deserialize, Serialize};

use super::{MeasureTree, SplitFormula, SplitSequenceSpec};
use crate::error::{Error, Result};

fn one() -> f64 {
    1.0
}

/// JSON description of a measure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeasureSpec {
    Lebesgue {
        #[serde(default = "default_dim")]
        dim: usize,
        depth: u32,
    },
    Split {
        /// One of `formula_a`, `formula_b`, `formula_c`, `formula_d`, `explicit_list`.
        sequence: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        b: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        depth: Option<u32>,
    },
    R2Nonstandard {
        k_max: u32,
        depth: u32,
    },
    Product {
        factors: Vec<MeasureSpec>,
    },
    Explicit {
        dim: usize,
        depth: u32,
        #[serde(default = "one")]
        root_volume: f64,
        /// Leaf masses in row-major order.
        leaf_masses: Vec<f64>,
    },
    Random {
        #[serde(default = "default_dim")]
        dim: usize,
        depth: u32,
        seed: u64,
        #[serde(default)]
        zero_fraction: f64,
    },
}

fn default_dim() -> usize {
    1
}

impl MeasureSpec {
    pub fn build(&self) -> Result<MeasureTree> {
        match self {
            MeasureSpec::Lebesgue { dim, depth } => MeasureTree::lebesgue(*dim, *depth),
            MeasureSpec::Split { sequence, b, depth } => MeasureTree::split(&self.split_spec(sequence, b, *depth)?),
            MeasureSpec::R2Nonstandard { k_max, depth } => MeasureTree::r2_nonstandard(*k_max, *depth),
            MeasureSpec::Product { factors } => {
                let built: Vec<MeasureTree> = factors.iter().map(|f| f.build()).collect::<Result<_>>()?;
                MeasureTree::product(&built)
            }
            MeasureSpec::Explicit { dim, depth, root_volume, leaf_masses } => {
                MeasureTree::from_row_major_leaves(*dim, *depth, *root_volume, leaf_masses)
            }
            MeasureSpec::Random { dim, depth, seed, zero_fraction } => {
                MeasureTree::random(*dim, *depth, *seed, *zero_fraction)
            }
        }
    }

    fn split_spec(&self, sequence: &str, b: &Option<Vec<f64>>, depth: Option<u32>) -> Result<SplitSequenceSpec> {
        let formula = match sequence {
            "formula_a" => SplitFormula::A,
            "formula_b" => SplitFormula::B,
            "formula_c" => SplitFormula::C,
            "formula_d" => SplitFormula::D,
            "explicit_list" => SplitFormula::ExplicitList(
                b.clone().ok_or_else(|| Error::InvalidSpec("explicit_list needs a \"b\" array".into()))?,
            ),
            other => return Err(Error::InvalidSpec(format!("unknown split sequence {other:?}"))),
        };
        let depth = match (&formula, depth) {
            (_, Some(d)) => d,
            (SplitFormula::ExplicitList(list), None) => list.len() as u32,
            _ => return Err(Error::InvalidSpec(format!("split sequence {sequence} needs a depth"))),
        };
        Ok(SplitSequenceSpec::new(formula, depth))
    }

    /// The split sequence behind a `split` spec, if any.
    pub fn split_sequence(&self) -> Option<Result<SplitSequenceSpec>> {
        match self {
            MeasureSpec::Split { sequence, b, depth } => Some(self.split_spec(sequence, b, *depth)),
            _ => None,
        }
    }

    /// Replaces every depth in the spec. Explicit leaf data cannot change depth.
    pub fn with_depth(&self, new_depth: u32) -> Result<MeasureSpec> {
        Ok(match self {
            MeasureSpec::Lebesgue { dim, .. } => MeasureSpec::Lebesgue { dim: *dim, depth: new_depth },
            MeasureSpec::Split { sequence, b, .. } => {
                MeasureSpec::Split { sequence: sequence.clone(), b: b.clone(), depth: Some(new_depth) }
            }
            MeasureSpec::R2Nonstandard { k_max, .. } => MeasureSpec::R2Nonstandard { k_max: *k_max, depth: new_depth },
            MeasureSpec::Product { factors } => MeasureSpec::Product {
                factors: factors.iter().map(|f| f.with_depth(new_depth)).collect::<Result<_>>()?,
            },
            MeasureSpec::Explicit { depth, .. } if *depth == new_depth => self.clone(),
            MeasureSpec::Explicit { .. } => {
                return Err(Error::InvalidSpec("an explicit measure cannot be rebuilt at another depth".into()))
            }
            MeasureSpec::Random { dim, seed, zero_fraction, .. } => {
                MeasureSpec::Random { dim: *dim, depth: new_depth, seed: *seed, zero_fraction: *zero_fraction }
            }
        })
    }
}

impl MeasureTree {
    /// Explicit spec carrying the leaf masses.
    pub fn to_spec(&self) -> MeasureSpec {
        MeasureSpec::Explicit {
            dim: self.dim(),
            depth: self.depth(),
            root_volume: self.root_volume(),
            leaf_masses: self.leaf_masses_row_major(),
        }
    }
}
