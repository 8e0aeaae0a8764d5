//! Operators: conditional expectations and martingale differences, the
//! maximal and square functions, Haar shifts, martingale transforms,
//! paraproducts, and empirical weak-(1,1) estimation.

mod adversarial;
mod martingale;
mod paraproduct;
mod shift;
mod spec;
mod weak11;

pub use adversarial::{adversarial_test_function, peak_test_function};
pub use martingale::{
    difference, difference_at, expectation, martingale_transform, martingale_transform_haar, maximal,
    square_function, CubeCoefficients,
};
pub use paraproduct::{paraproduct, paraproduct_adjoint};
pub use shift::{haar_shift, haar_shift_truncated, local_l2_constant, CoefficientSource, ShiftCoefficients};
pub use spec::{build_gamma, GammaSpec, OperatorSpec};
pub use weak11::{
    paraproduct_ceiling, shift_ceiling, shift_l2_bound, weak11_estimate, BatterySpec, Family, GenerationRatio,
    Operator, TestInput, Weak11Report,
};

use crate::error::Result;
use crate::func::{cube_integrals, SimpleFunction};
use crate::grid::child_count;
use crate::haar::HaarSystem;
use crate::measure::MeasureTree;

/// `⟨f⟩_Q` for every cube of generation `0..=f.resolution()`; zero on null cubes.
pub(crate) fn averages(f: &SimpleFunction, mu: &MeasureTree) -> Vec<Vec<f64>> {
    let mut ints = cube_integrals(f, mu);
    for (g, row) in ints.iter_mut().enumerate() {
        for (a, &m) in row.iter_mut().zip(mu.masses_at(g as u32)) {
            *a = if m > 0.0 { *a / m } else { 0.0 };
        }
    }
    ints
}

/// `Σ_S d_S ψ_S` at resolution `res`, where `coeffs[g]` holds `d_S` for the
/// cubes of generation `g` (generations past the end of `coeffs` contribute
/// nothing). Values are pushed down the tree one generation at a time.
pub(crate) fn synthesize(dim: usize, res: u32, coeffs: &[Vec<f64>], psi: &HaarSystem) -> Result<SimpleFunction> {
    let k = child_count(dim);
    let mut cur = vec![0.0];
    for g in 0..res {
        let mut next = Vec::with_capacity(cur.len() * k);
        match coeffs.get(g as usize) {
            Some(d) if d.iter().any(|&x| x != 0.0) => {
                let vals = psi.gen_values(g);
                for (i, &base) in cur.iter().enumerate() {
                    let c = d[i];
                    for j in 0..k {
                        next.push(base + c * vals[i * k + j]);
                    }
                }
            }
            _ => {
                for &base in &cur {
                    next.extend(std::iter::repeat_n(base, k));
                }
            }
        }
        cur = next;
    }
    SimpleFunction::new(dim, res, cur)
}

/// Leaf values of `Σ_Q w_Q 1_Q` at resolution `res`, for weights given per
/// generation (missing generations count as zero).
pub(crate) fn push_down(dim: usize, res: u32, weights: &[Vec<f64>]) -> Vec<f64> {
    let k = child_count(dim);
    let mut cur = vec![weights.first().map_or(0.0, |w| w[0])];
    for g in 1..=res {
        let w = weights.get(g as usize);
        let mut next = Vec::with_capacity(cur.len() * k);
        for (i, &base) in cur.iter().enumerate() {
            for j in 0..k {
                next.push(base + w.map_or(0.0, |w| w[i * k + j]));
            }
        }
        cur = next;
    }
    cur
}
