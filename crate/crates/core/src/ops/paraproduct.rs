use super::{averages, push_down, synthesize};
use crate::error::{Error, Result};
use crate::func::{check, cube_integrals, CoefficientSequence, SimpleFunction};
use crate::grid::{child_count, cubes_at};
use crate::haar::HaarSystem;
use crate::measure::MeasureTree;

fn check_inputs(gamma: &CoefficientSequence, psi: &HaarSystem, f: &SimpleFunction, mu: &MeasureTree) -> Result<()> {
    check(f, mu)?;
    if psi.dim() != mu.dim() {
        return Err(Error::DimensionMismatch { expected: mu.dim(), got: psi.dim() });
    }
    if !psi.is_cancellative() {
        return Err(Error::NonCancellative);
    }
    gamma.validate(mu)?;
    if let Some(g) = gamma.max_gen() {
        if g >= psi.depth() {
            return Err(Error::DepthOverflow { requested: g + 1, available: psi.depth() });
        }
    }
    Ok(())
}

/// `Π_γ f = Σ_Q γ_Q ⟨f⟩_Q ψ_Q`.
pub fn paraproduct(
    gamma: &CoefficientSequence,
    psi: &HaarSystem,
    f: &SimpleFunction,
    mu: &MeasureTree,
) -> Result<SimpleFunction> {
    check_inputs(gamma, psi, f, mu)?;
    let d = mu.dim();
    let m = f.resolution();
    let Some(top) = gamma.max_gen() else {
        return Ok(SimpleFunction::zeros(d, m));
    };
    let avg = averages(f, mu);
    let mut coeffs: Vec<Vec<f64>> = (0..=top).map(|g| vec![0.0; cubes_at(d, g)]).collect();
    for (q, &g) in gamma.iter() {
        let a = if q.gen() <= m {
            avg[q.gen() as usize][q.idx()]
        } else {
            f.value_on(q).unwrap_or(0.0)
        };
        coeffs[q.gen() as usize][q.idx()] = g * a;
    }
    synthesize(d, m.max(top + 1), &coeffs, psi)
}

/// `Π*_γ f = Σ_Q γ_Q ⟨f, ψ_Q⟩ 1_Q / μ(Q)`.
pub fn paraproduct_adjoint(
    gamma: &CoefficientSequence,
    psi: &HaarSystem,
    f: &SimpleFunction,
    mu: &MeasureTree,
) -> Result<SimpleFunction> {
    check_inputs(gamma, psi, f, mu)?;
    let d = mu.dim();
    let k = child_count(d);
    let m = f.resolution();
    let ints = cube_integrals(f, mu);
    let mut weights: Vec<Vec<f64>> = (0..m).map(|g| vec![0.0; cubes_at(d, g)]).collect();
    for (q, &g) in gamma.iter() {
        // ψ_Q is cancellative, so the pairing vanishes once f is constant on Q
        if q.gen() >= m {
            continue;
        }
        let (gen, i) = (q.gen() as usize, q.idx());
        let pair: f64 =
            psi.values_at(q.gen(), i).iter().zip(&ints[gen + 1][i * k..(i + 1) * k]).map(|(v, a)| v * a).sum();
        weights[gen][i] = g * pair / mu.masses_at(q.gen())[i];
    }
    SimpleFunction::new(d, m, push_down(d, m, &weights))
}
