use serde::{Deserialize, Serialize};

use super::{l1, linf, mitrea_basis, wilson_basis, HaarSystem};
use crate::error::{Error, Result};
use crate::grid::{cubes_at, CubeId};
use crate::measure::MeasureTree;

/// `max ‖φ_Q‖₁ ‖φ_Q‖_∞` over the support of the system up to `upto_gen`.
pub fn standardness(system: &HaarSystem, upto_gen: u32) -> f64 {
    let mut best = 0.0f64;
    for g in 0..system.depth().min(upto_gen.saturating_add(1)) {
        for (a, b) in system.l1_at(g).iter().zip(system.linf_at(g)) {
            best = best.max(a * b);
        }
    }
    best
}

/// `max_Q (max_{R ∈ D_r(Q)} a_R)(max_{S ∈ D_s(Q)} b_S)` over cubes `Q` with
/// `gen(Q) + max(r, s) <= upto_gen`, for per-generation arrays `a` and `b`.
fn aligned_max(dim: usize, a: &[Vec<f64>], b: &[Vec<f64>], r: u32, s: u32, upto_gen: u32) -> f64 {
    let reach = r.max(s);
    if upto_gen < reach {
        return 0.0;
    }
    let mut best = 0.0f64;
    for g in 0..=upto_gen - reach {
        let ra = &a[(g + r) as usize];
        let sb = &b[(g + s) as usize];
        let bra = 1usize << (dim as u32 * r);
        let bsb = 1usize << (dim as u32 * s);
        for i in 0..cubes_at(dim, g) {
            let ma = ra[i * bra..(i + 1) * bra].iter().fold(0.0f64, |m, &v| m.max(v));
            if ma == 0.0 {
                continue;
            }
            let mb = sb[i * bsb..(i + 1) * bsb].iter().fold(0.0f64, |m, &v| m.max(v));
            best = best.max(ma * mb);
        }
    }
    best
}

/// `Ξ(Φ, Ψ; r, s) = sup ‖φ_R‖_∞ ‖ψ_S‖₁` over `R ∈ D_r(Q)`, `S ∈ D_s(Q)`, for
/// all `Q` with `gen(Q) + max(r, s) <= upto_gen`. `upto_gen` is capped at
/// the last generation carrying functions.
pub fn xi(phi: &HaarSystem, psi: &HaarSystem, r: u32, s: u32, upto_gen: u32) -> Result<f64> {
    if phi.dim() != psi.dim() {
        return Err(Error::DimensionMismatch { expected: phi.dim(), got: psi.dim() });
    }
    let top = phi.depth().min(psi.depth());
    if top == 0 {
        return Ok(0.0);
    }
    let upto = upto_gen.min(top - 1);
    let a: Vec<Vec<f64>> = (0..top).map(|g| phi.linf_at(g).to_vec()).collect();
    let b: Vec<Vec<f64>> = (0..top).map(|g| psi.l1_at(g).to_vec()).collect();
    Ok(aligned_max(phi.dim(), &a, &b, r, s, upto))
}

/// Multi-function bases for which Ξ can be maximized over selectors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisKind {
    Wilson,
    Mitrea,
}

/// Per-cube maxima of `‖·‖_∞` and `‖·‖₁` over a basis, per generation.
fn basis_maxima(mu: &MeasureTree, kind: BasisKind, top: u32) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let d = mu.dim();
    let k = 1usize << d;
    let mut sup = Vec::with_capacity(top as usize);
    let mut one = Vec::with_capacity(top as usize);
    for g in 0..top {
        let n = cubes_at(d, g);
        let masses = mu.masses_at(g + 1);
        let mut sg = vec![0.0; n];
        let mut og = vec![0.0; n];
        for i in 0..n {
            let q = CubeId::from_parts(d, g, i);
            let basis = match kind {
                BasisKind::Wilson => wilson_basis(mu, &q)?,
                BasisKind::Mitrea => mitrea_basis(mu, &q)?,
            };
            let m = &masses[i * k..(i + 1) * k];
            for f in basis {
                sg[i] = f64::max(sg[i], linf(&f.child_values, m));
                og[i] = f64::max(og[i], l1(&f.child_values, m));
            }
        }
        sup.push(sg);
        one.push(og);
    }
    Ok((sup, one))
}

/// Ξ maximized over all selectors, with `Φ` and `Ψ` drawn independently from
/// the given bases of `mu`.
pub fn xi_max_over_selectors(
    mu: &MeasureTree,
    phi: BasisKind,
    psi: BasisKind,
    r: u32,
    s: u32,
    upto_gen: u32,
) -> Result<f64> {
    let top = mu.depth();
    if top == 0 {
        return Ok(0.0);
    }
    let upto = upto_gen.min(top - 1);
    let (phi_sup, phi_one) = basis_maxima(mu, phi, top)?;
    let psi_one = if psi == phi { phi_one } else { basis_maxima(mu, psi, top)?.1 };
    Ok(aligned_max(mu.dim(), &phi_sup, &psi_one, r, s, upto))
}
