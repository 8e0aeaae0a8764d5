use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{CoefficientSource, CubeCoefficients, Operator, ShiftCoefficients};
use crate::error::{Error, Result};
use crate::func::CoefficientSequence;
use crate::grid::{cubes_at, CubeId};
use crate::haar::{HaarSpec, HaarSystem};
use crate::measure::{MeasureSpec, MeasureTree};

fn half() -> f64 {
    0.5
}

fn one() -> f64 {
    1.0
}

/// JSON description of a coefficient sequence `γ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GammaSpec {
    /// `γ = value · δ_cube`; the value defaults to `μ(cube)^{1/2}`.
    Single {
        cube: CubeId,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        value: Option<f64>,
    },
    Explicit {
        values: CoefficientSequence,
    },
    /// Each positive-mass cube of generation below `upto` carries, with
    /// probability `density`, `scale · u · μ(Q)^{1/2}` with `u` uniform in `[-1, 1)`.
    Random {
        seed: u64,
        #[serde(default = "half")]
        density: f64,
        #[serde(default = "one")]
        scale: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        upto: Option<u32>,
    },
}

pub fn build_gamma(spec: &GammaSpec, mu: &MeasureTree) -> Result<CoefficientSequence> {
    let gamma = match spec {
        GammaSpec::Single { cube, value } => {
            CoefficientSequence::single(*cube, value.unwrap_or_else(|| mu.mass(cube).sqrt()))
        }
        GammaSpec::Explicit { values } => values.clone(),
        GammaSpec::Random { seed, density, scale, upto } => {
            if !(0.0..=1.0).contains(density) {
                return Err(Error::InvalidSpec(format!("density {density} outside [0, 1]")));
            }
            let upto = upto.unwrap_or(mu.depth()).min(mu.depth());
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let mut gamma = CoefficientSequence::new();
            for g in 0..upto {
                for (i, &m) in mu.masses_at(g).iter().enumerate().take(cubes_at(mu.dim(), g)) {
                    let keep = rng.random_bool(*density);
                    let u: f64 = rng.random_range(-1.0..1.0);
                    if keep && m > 0.0 {
                        gamma.insert(CubeId::from_parts(mu.dim(), g, i), scale * u * m.sqrt());
                    }
                }
            }
            gamma
        }
    };
    gamma.validate(mu)?;
    Ok(gamma)
}

/// JSON description of an operator, keyed by `"op"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorSpec {
    /// The dyadic Hilbert transform; one-dimensional, canonical system by default.
    Hilbert {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        system: Option<HaarSpec>,
    },
    HilbertAdjoint {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        system: Option<HaarSpec>,
    },
    Shift {
        r: u32,
        s: u32,
        coefficients: CoefficientSource,
        phi: HaarSpec,
        psi: HaarSpec,
    },
    /// `Σ_Q α_Q ⟨f, φ_Q⟩ φ_Q`.
    Multiplier {
        coefficients: CubeCoefficients,
        system: HaarSpec,
    },
    Paraproduct {
        gamma: GammaSpec,
        system: HaarSpec,
    },
    ParaproductAdjoint {
        gamma: GammaSpec,
        system: HaarSpec,
    },
    /// `Π*_γ` with `γ` concentrated on the test cube.
    ParaproductAdjointNecessity {
        system: HaarSpec,
    },
    Square,
    Maximal,
    MartingaleTransform {
        coefficients: CubeCoefficients,
    },
}

impl OperatorSpec {
    /// Builds the operator on `mu`; `mu_spec` is passed on to tensor systems.
    pub fn build(&self, mu: &MeasureTree, mu_spec: Option<&MeasureSpec>) -> Result<Operator> {
        let sys = |s: &HaarSpec| s.build(mu, mu_spec).map(Arc::new);
        let one_d = |system: &Option<HaarSpec>| -> Result<Arc<HaarSystem>> {
            if mu.dim() != 1 {
                return Err(Error::DimensionMismatch { expected: 1, got: mu.dim() });
            }
            sys(system.as_ref().unwrap_or(&HaarSpec::Canonical1d))
        };
        Ok(match self {
            OperatorSpec::Hilbert { system } => {
                let h = one_d(system)?;
                Operator::Shift { coeffs: ShiftCoefficients::hilbert(), phi: h.clone(), psi: h }
            }
            OperatorSpec::HilbertAdjoint { system } => {
                let h = one_d(system)?;
                Operator::Shift { coeffs: ShiftCoefficients::hilbert_adjoint(), phi: h.clone(), psi: h }
            }
            OperatorSpec::Shift { r, s, coefficients, phi, psi } => Operator::Shift {
                coeffs: ShiftCoefficients::new(*r, *s, coefficients.clone())?,
                phi: sys(phi)?,
                psi: sys(psi)?,
            },
            OperatorSpec::Multiplier { coefficients, system } => {
                let h = sys(system)?;
                Operator::Shift { coeffs: ShiftCoefficients::multiplier(coefficients.clone()), phi: h.clone(), psi: h }
            }
            OperatorSpec::Paraproduct { gamma, system } => {
                Operator::Paraproduct { gamma: build_gamma(gamma, mu)?, psi: sys(system)? }
            }
            OperatorSpec::ParaproductAdjoint { gamma, system } => {
                Operator::ParaproductAdjoint { gamma: build_gamma(gamma, mu)?, psi: sys(system)? }
            }
            OperatorSpec::ParaproductAdjointNecessity { system } => {
                Operator::ParaproductAdjointNecessity { psi: sys(system)? }
            }
            OperatorSpec::Square => Operator::Square,
            OperatorSpec::Maximal => Operator::Maximal,
            OperatorSpec::MartingaleTransform { coefficients } => Operator::MartingaleTransform(coefficients.clone()),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::func::carleson_norm;

    #[test]
    fn parse_operators() {
        let mu = MeasureTree::random(1, 6, 2, 0.2).unwrap();
        for (json, name) in [
            (r#"{"op":"hilbert"}"#, "shift"),
            (r#"{"op":"hilbert_adjoint","system":{"builder":"canonical1d"}}"#, "shift"),
            (
                r#"{"op":"shift","r":1,"s":2,"coefficients":{"kind":"signs","seed":4},"phi":{"builder":"wilson"},"psi":{"builder":"mitrea"}}"#,
                "shift",
            ),
            (r#"{"op":"multiplier","coefficients":{"kind":"constant","value":-1},"system":{"builder":"wilson"}}"#, "shift"),
            (
                r#"{"op":"paraproduct","gamma":{"kind":"random","seed":1},"system":{"builder":"canonical1d"}}"#,
                "paraproduct",
            ),
            (
                r#"{"op":"paraproduct_adjoint","gamma":{"kind":"single","cube":"0:0"},"system":{"builder":"canonical1d"}}"#,
                "paraproduct_adjoint",
            ),
            (r#"{"op":"paraproduct_adjoint_necessity","system":{"builder":"canonical1d"}}"#, "paraproduct_adjoint_necessity"),
            (r#"{"op":"square"}"#, "square"),
            (r#"{"op":"maximal"}"#, "maximal"),
            (r#"{"op":"martingale_transform","coefficients":{"kind":"signs","seed":1}}"#, "martingale_transform"),
        ] {
            let spec: OperatorSpec = serde_json::from_str(json).unwrap();
            assert_eq!(spec.build(&mu, None).unwrap().name(), name, "{json}");
        }
        let bad: OperatorSpec =
            serde_json::from_str(r#"{"op":"shift","r":0,"s":0,"coefficients":{"kind":"hilbert"},"phi":{"builder":"wilson"},"psi":{"builder":"wilson"}}"#)
                .unwrap();
        assert!(bad.build(&mu, None).is_err());
        let planar = MeasureTree::lebesgue(2, 3).unwrap();
        assert!(OperatorSpec::Hilbert { system: None }.build(&planar, None).is_err());
    }

    #[test]
    fn random_gamma_is_carleson() {
        let mu = MeasureTree::random(2, 5, 7, 0.3).unwrap();
        let spec = GammaSpec::Random { seed: 3, density: 0.7, scale: 1.0, upto: None };
        let gamma = build_gamma(&spec, &mu).unwrap();
        assert!(!gamma.is_empty());
        assert_eq!(gamma, build_gamma(&spec, &mu).unwrap());
        assert!(carleson_norm(&gamma, &mu, 5).unwrap().is_finite());
    }
}
