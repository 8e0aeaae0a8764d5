use crate::error::{Error, Result};
use crate::func::SimpleFunction;
use crate::grid::{child_count, CubeId};
use crate::haar::HaarSystem;
use crate::measure::MeasureTree;

/// The child `Q∞` of `q` where `|φ_q|` is largest (lowest child index on
/// ties, positive-mass children only) and `sgn φ_q` there.
fn peak(phi: &HaarSystem, q: &CubeId, mu: &MeasureTree) -> Result<(usize, f64)> {
    if q.dim() != mu.dim() || phi.dim() != mu.dim() {
        return Err(Error::DimensionMismatch { expected: mu.dim(), got: q.dim() });
    }
    if q.gen() >= phi.depth().min(mu.depth()) || !phi.in_support(q) {
        return Err(Error::NotInSupport(q.to_string()));
    }
    let k = child_count(q.dim());
    let vals = phi.values_at(q.gen(), q.idx());
    let masses = &mu.masses_at(q.gen() + 1)[q.idx() * k..(q.idx() + 1) * k];
    let mut best = None;
    for (c, (&v, &m)) in vals.iter().zip(masses).enumerate() {
        if m > 0.0 && v != 0.0 && best.is_none_or(|(_, b): (usize, f64)| v.abs() > b.abs()) {
            best = Some((c, v));
        }
    }
    let (c, v) = best.ok_or_else(|| Error::NotInSupport(q.to_string()))?;
    Ok((c, v.signum()))
}

/// `sgn(φ_q) 1_{Q∞} / μ(Q∞)`, at resolution `gen(q) + 1`.
pub fn peak_test_function(phi: &HaarSystem, q: &CubeId, mu: &MeasureTree) -> Result<SimpleFunction> {
    let (c, sign) = peak(phi, q, mu)?;
    let child = q.child(c);
    SimpleFunction::indicator(&child, q.gen() + 1, sign / mu.mass(&child))
}

/// The mean-zero test function `φ̃_q = g - ⟨g⟩_q 1_q` with
/// `g = sgn(φ_q) 1_{Q∞} / μ(Q∞)`. It has `‖φ̃_q‖₁ ≤ 2`, pairs with `φ_q` to
/// `‖φ_q‖_∞`, and is orthogonal to every other `φ_R` of a cancellative system.
pub fn adversarial_test_function(phi: &HaarSystem, q: &CubeId, mu: &MeasureTree) -> Result<SimpleFunction> {
    let (c, sign) = peak(phi, q, mu)?;
    let k = child_count(q.dim());
    let child = q.child(c);
    let (mq, mc) = (mu.mass(q), mu.mass(&child));
    let mut f = SimpleFunction::zeros(q.dim(), q.gen() + 1);
    let base = q.idx() * k;
    let vals = f.values_mut();
    for j in 0..k {
        vals[base + j] = -sign / mq;
    }
    vals[base + c] = sign * (1.0 / mc - 1.0 / mq);
    Ok(f)
}
