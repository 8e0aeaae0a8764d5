use super::SimpleFunction;
use crate::error::{Error, Result};
use crate::grid::{child_count, CubeId};
use crate::haar::HaarFunction;
use crate::measure::MeasureTree;

/// Checks that `f` lives on the tree of `mu`.
pub(crate) fn check(f: &SimpleFunction, mu: &MeasureTree) -> Result<()> {
    if f.dim() != mu.dim() {
        return Err(Error::DimensionMismatch { expected: mu.dim(), got: f.dim() });
    }
    if f.resolution() > mu.depth() {
        return Err(Error::DepthOverflow { requested: f.resolution(), available: mu.depth() });
    }
    Ok(())
}

/// `∫_Q f dμ` for every cube of generation `0..=f.resolution()`, summed bottom-up.
pub(crate) fn cube_integrals(f: &SimpleFunction, mu: &MeasureTree) -> Vec<Vec<f64>> {
    let res = f.resolution();
    let k = child_count(f.dim());
    let leaves: Vec<f64> = f.values().iter().zip(mu.masses_at(res)).map(|(v, m)| v * m).collect();
    let mut out = vec![leaves];
    for _ in 0..res {
        let below = out.last().unwrap();
        let up = below.chunks_exact(k).map(|c| c.iter().sum()).collect();
        out.push(up);
    }
    out.reverse();
    out
}

/// `∫ f dμ` over the root.
pub fn integral(f: &SimpleFunction, mu: &MeasureTree) -> Result<f64> {
    check(f, mu)?;
    Ok(f.values().iter().zip(mu.masses_at(f.resolution())).map(|(v, m)| v * m).sum())
}

/// `⟨f⟩_Q`, zero when `μ(Q) = 0`.
pub fn average(f: &SimpleFunction, q: &CubeId, mu: &MeasureTree) -> Result<f64> {
    check(f, mu)?;
    if q.dim() != mu.dim() {
        return Err(Error::DimensionMismatch { expected: mu.dim(), got: q.dim() });
    }
    if q.gen() > mu.depth() {
        return Err(Error::DepthOverflow { requested: q.gen(), available: mu.depth() });
    }
    let mass = mu.mass(q);
    if mass == 0.0 {
        return Ok(0.0);
    }
    if let Some(v) = f.value_on(q) {
        return Ok(v);
    }
    let shift = f.dim() as u32 * (f.resolution() - q.gen());
    let lo = q.idx() << shift;
    let hi = lo + (1usize << shift);
    let masses = &mu.masses_at(f.resolution())[lo..hi];
    let total: f64 = f.values()[lo..hi].iter().zip(masses).map(|(v, m)| v * m).sum();
    Ok(total / mass)
}

/// `‖f‖_{L^p(μ)}` for `1 <= p <= ∞`; the sup ignores null leaves.
pub fn lp_norm(f: &SimpleFunction, p: f64, mu: &MeasureTree) -> Result<f64> {
    check(f, mu)?;
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidInput(format!("L^p norm needs p >= 1, got {p}")));
    }
    let pairs = f.values().iter().zip(mu.masses_at(f.resolution()));
    if p == f64::INFINITY {
        return Ok(pairs.filter(|(_, &m)| m > 0.0).fold(0.0, |a, (v, _)| a.max(v.abs())));
    }
    let sum: f64 = if p == 1.0 {
        pairs.map(|(v, m)| v.abs() * m).sum()
    } else if p == 2.0 {
        pairs.map(|(v, m)| v * v * m).sum()
    } else {
        pairs.map(|(v, m)| v.abs().powf(p) * m).sum()
    };
    Ok(if p == 1.0 { sum } else { sum.powf(1.0 / p) })
}

/// `‖f‖_{L^{1,∞}(μ)} = sup_λ λ μ{|f| > λ}`, exact for simple functions: the
/// sup is `max_v v · μ{|f| >= v}` over the distinct values `v` of `|f|`.
pub fn weak_l1_norm(f: &SimpleFunction, mu: &MeasureTree) -> Result<f64> {
    check(f, mu)?;
    let mut pairs: Vec<(f64, f64)> = f
        .values()
        .iter()
        .zip(mu.masses_at(f.resolution()))
        .filter(|(v, &m)| m > 0.0 && **v != 0.0)
        .map(|(v, &m)| (v.abs(), m))
        .collect();
    pairs.sort_unstable_by(|a, b| b.0.total_cmp(&a.0));
    let mut best = 0.0f64;
    let mut cumulative = 0.0;
    let mut i = 0;
    while i < pairs.len() {
        let v = pairs[i].0;
        while i < pairs.len() && pairs[i].0 == v {
            cumulative += pairs[i].1;
            i += 1;
        }
        best = best.max(v * cumulative);
    }
    Ok(best)
}

/// `∫ f g dμ`.
pub fn inner(f: &SimpleFunction, g: &SimpleFunction, mu: &MeasureTree) -> Result<f64> {
    let prod = f.mul(g);
    integral(&prod, mu)
}

/// `⟨f, φ⟩ = Σ_c φ(c) ∫_c f dμ` over the children `c` of `φ.cube`.
pub fn inner_product(f: &SimpleFunction, phi: &HaarFunction, mu: &MeasureTree) -> Result<f64> {
    check(f, mu)?;
    let q = phi.cube;
    if q.dim() != mu.dim() {
        return Err(Error::DimensionMismatch { expected: mu.dim(), got: q.dim() });
    }
    if q.gen() + 1 > mu.depth() {
        return Err(Error::DepthOverflow { requested: q.gen() + 1, available: mu.depth() });
    }
    let k = child_count(q.dim());
    let child_gen = q.gen() + 1;
    let mut total = 0.0;
    for (c, &v) in phi.child_values.iter().enumerate() {
        if v == 0.0 {
            continue;
        }
        let child = CubeId::from_parts(q.dim(), child_gen, q.idx() * k + c);
        let int = match f.value_on(&child) {
            Some(fv) => fv * mu.mass(&child),
            None => {
                let shift = f.dim() as u32 * (f.resolution() - child_gen);
                let lo = child.idx() << shift;
                let hi = lo + (1usize << shift);
                f.values()[lo..hi].iter().zip(&mu.masses_at(f.resolution())[lo..hi]).map(|(a, m)| a * m).sum()
            }
        };
        total += v * int;
    }
    Ok(total)
}
