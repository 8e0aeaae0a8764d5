use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{tensor_epsilon_index, HaarSystem, Selector, TensorFactor};
use crate::error::{Error, Result};
use crate::grid::CubeId;
use crate::measure::{MeasureSpec, MeasureTree};

fn yes() -> bool {
    true
}

/// JSON description of a Haar system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "builder", rename_all = "snake_case", deny_unknown_fields)]
pub enum HaarSpec {
    #[serde(rename = "canonical1d")]
    Canonical1d,
    Wilson {
        #[serde(default)]
        selector: Selector,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        enumeration: Option<Vec<usize>>,
    },
    Mitrea {
        #[serde(default)]
        selector: Selector,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        enumeration: Option<Vec<usize>>,
    },
    /// Needs a `product` measure spec. `epsilon`, when given, overrides the selector.
    Tensor {
        #[serde(default)]
        selector: Selector,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        epsilon: Option<Vec<u8>>,
        /// One-dimensional system per factor; canonical by default.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        factors: Option<Vec<HaarSpec>>,
    },
    Indicator,
    Custom {
        #[serde(default = "yes")]
        cancellative: bool,
        /// Child values per cube, in grid child order.
        functions: BTreeMap<CubeId, Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        base: Option<Box<HaarSpec>>,
    },
    R2Nonstandard {
        k_max: u32,
    },
}

impl HaarSpec {
    /// Builds the system on `mu`; `mu_spec` is needed only for tensor systems.
    pub fn build(&self, mu: &MeasureTree, mu_spec: Option<&MeasureSpec>) -> Result<HaarSystem> {
        match self {
            HaarSpec::Canonical1d => HaarSystem::canonical_1d(mu),
            HaarSpec::Wilson { selector, enumeration: None } => HaarSystem::wilson(mu, selector),
            HaarSpec::Wilson { selector, enumeration: Some(e) } => HaarSystem::wilson_enumerated(mu, selector, e),
            HaarSpec::Mitrea { selector, enumeration: None } => HaarSystem::mitrea(mu, selector),
            HaarSpec::Mitrea { selector, enumeration: Some(e) } => HaarSystem::mitrea_enumerated(mu, selector, e),
            HaarSpec::Tensor { selector, epsilon, factors } => {
                let Some(MeasureSpec::Product { factors: measure_specs }) = mu_spec else {
                    return Err(Error::InvalidSpec("a tensor system needs a product measure spec".into()));
                };
                let measures: Vec<MeasureTree> = measure_specs
                    .iter()
                    .map(|s| s.with_depth(mu.depth()).and_then(|s| s.build()))
                    .collect::<Result<_>>()?;
                let systems: Vec<HaarSystem> = match factors {
                    Some(specs) if specs.len() != measures.len() => {
                        return Err(Error::DimensionMismatch { expected: measures.len(), got: specs.len() })
                    }
                    Some(specs) => specs.iter().zip(&measures).map(|(s, m)| s.build(m, None)).collect::<Result<_>>()?,
                    None => measures.iter().map(HaarSystem::canonical_1d).collect::<Result<_>>()?,
                };
                let tf: Vec<TensorFactor> =
                    measures.iter().zip(&systems).map(|(measure, system)| TensorFactor { measure, system }).collect();
                let selector = match epsilon {
                    Some(eps) => Selector::Fixed(tensor_epsilon_index(eps)?),
                    None => selector.clone(),
                };
                HaarSystem::tensor(mu, &tf, &selector)
            }
            HaarSpec::Indicator => HaarSystem::indicator(mu),
            HaarSpec::Custom { cancellative, functions, base } => {
                let base = base.as_ref().map(|b| b.build(mu, mu_spec)).transpose()?;
                HaarSystem::custom(mu, functions, *cancellative, base.as_ref())
            }
            HaarSpec::R2Nonstandard { k_max } => HaarSystem::r2_nonstandard(mu, *k_max),
        }
    }
}
