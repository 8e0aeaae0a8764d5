//! The three-part Calderón–Zygmund decomposition `f = g + b + β` at a level
//! `λ`, and numerical verification of its estimates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::func::{check, lp_norm, Patch, SimpleFunction};
use crate::grid::{child_count, cubes_at, CubeId};
use crate::measure::MeasureTree;
use crate::ops::{averages, maximal, push_down};

/// Relative slack on the norm inequalities, for rounding in the sums.
const ROUNDING: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct CZDecomposition {
    pub lambda: f64,
    /// Disjoint, in increasing `(gen, index)` order.
    pub maximal_cubes: Vec<CubeId>,
    pub g: SimpleFunction,
    /// `f 1_{Ω^c}`, `Σ ⟨f⟩_{Q̂_j} 1_{Q_j}`, and
    /// `Σ (⟨f⟩_{Q_j} - ⟨f⟩_{Q̂_j}) μ(Q_j)/μ(Q̂_j) 1_{Q̂_j}`.
    pub g_parts: [SimpleFunction; 3],
    /// `b_j = (f - ⟨f⟩_{Q_j}) 1_{Q_j}`, one patch on each `Q_j`.
    pub b_parts: Vec<Patch>,
    /// `β_j`, one patch on each parent `Q̂_j`.
    pub beta_parts: Vec<Patch>,
}

fn check_lambda(f: &SimpleFunction, lambda: f64, mu: &MeasureTree) -> Result<Vec<Vec<f64>>> {
    check(f, mu)?;
    if lambda.is_nan() || lambda <= 0.0 {
        return Err(Error::NonPositiveLambda(lambda));
    }
    let avg = averages(&f.abs(), mu);
    if lambda <= avg[0][0] {
        return Err(Error::LambdaBelowAverage { lambda, average: avg[0][0] });
    }
    Ok(avg)
}

/// Stopping time on the averages of `|f|`: the first cubes, going down from
/// the root, with `⟨|f|⟩_Q > λ`.
fn stopping_cubes(dim: usize, abs_avg: &[Vec<f64>], lambda: f64) -> Vec<CubeId> {
    let k = child_count(dim);
    let mut out = Vec::new();
    let mut covered = vec![false];
    for (g, row) in abs_avg.iter().enumerate() {
        let next: Vec<bool> = (0..row.len())
            .map(|i| {
                let above = g > 0 && covered[i / k];
                if !above && row[i] > lambda {
                    out.push(CubeId::from_parts(dim, g as u32, i));
                    return true;
                }
                above
            })
            .collect();
        covered = next;
    }
    out
}

/// The maximal dyadic cubes with `⟨|f|⟩_Q > λ`. Requires `λ > ⟨|f|⟩_root`,
/// so none of them is the root.
pub fn maximal_cubes(f: &SimpleFunction, lambda: f64, mu: &MeasureTree) -> Result<Vec<CubeId>> {
    let avg = check_lambda(f, lambda, mu)?;
    Ok(stopping_cubes(f.dim(), &avg, lambda))
}

pub fn decompose(f: &SimpleFunction, lambda: f64, mu: &MeasureTree) -> Result<CZDecomposition> {
    let abs_avg = check_lambda(f, lambda, mu)?;
    let cubes = stopping_cubes(f.dim(), &abs_avg, lambda);
    let d = f.dim();
    let m = f.resolution();
    let k = child_count(d);
    let avg = averages(f, mu);

    let mut g1 = f.clone();
    let mut g2 = SimpleFunction::zeros(d, m);
    let mut g3_weights: Vec<Vec<f64>> = (0..m).map(|g| vec![0.0; cubes_at(d, g)]).collect();
    let mut b_parts = Vec::with_capacity(cubes.len());
    let mut beta_parts = Vec::with_capacity(cubes.len());
    for q in &cubes {
        let parent = q.parent().expect("maximal cubes are below the root");
        let (gq, i) = (q.gen(), q.idx());
        let a = avg[gq as usize][i];
        let a_hat = avg[parent.gen() as usize][parent.idx()];
        let ratio = mu.mass(q) / mu.mass(&parent);

        let sh = d as u32 * (m - gq);
        let leaves = (i << sh)..((i + 1) << sh);
        g1.values_mut()[leaves.clone()].iter_mut().for_each(|x| *x = 0.0);
        g2.values_mut()[leaves.clone()].iter_mut().for_each(|x| *x = a_hat);
        g3_weights[parent.gen() as usize][parent.idx()] += (a - a_hat) * ratio;

        b_parts.push(Patch::new(*q, m, f.values()[leaves].iter().map(|v| v - a).collect())?);
        let c = q.child_index().expect("not the root");
        let beta: Vec<f64> =
            (0..k).map(|j| (a - a_hat) * (if j == c { 1.0 } else { 0.0 } - ratio)).collect();
        beta_parts.push(Patch::new(parent, gq, beta)?);
    }
    let g3 = SimpleFunction::new(d, m, push_down(d, m, &g3_weights))?;
    let g = g1.add(&g2).add(&g3);
    Ok(CZDecomposition { lambda, maximal_cubes: cubes, g, g_parts: [g1, g2, g3], b_parts, beta_parts })
}

impl CZDecomposition {
    pub fn b(&self) -> SimpleFunction {
        sum_patches(self.g.dim(), self.g.resolution(), &self.b_parts)
    }

    pub fn beta(&self) -> SimpleFunction {
        sum_patches(self.g.dim(), self.g.resolution(), &self.beta_parts)
    }
}

fn sum_patches(dim: usize, res: u32, parts: &[Patch]) -> SimpleFunction {
    let mut out = SimpleFunction::zeros(dim, res);
    for p in parts {
        p.add_into(&mut out);
    }
    out
}

/// One verified inequality: `measured <= bound`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub bound: f64,
    pub measured: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub lambda: f64,
    pub cubes: usize,
    pub f_l1: f64,
    pub checks: Vec<Check>,
}

impl VerificationReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }
}

/// `(2^p (m!)^{(p-1)/(m-1)})`, the constant of `‖g₃‖_p^p ≤ K λ^{p-1} ‖f‖₁`,
/// with `m = p` for integer `p` and `m = ⌊p⌋ + 1` otherwise.
fn g3_constant(p: f64) -> f64 {
    if p == 1.0 {
        return 2.0;
    }
    let m = if p.fract() == 0.0 { p } else { p.floor() + 1.0 };
    let fact: f64 = (1..=m as u64).map(|x| x as f64).product();
    2f64.powf(p) * fact.powf((p - 1.0) / (m - 1.0))
}

/// `C_p` in `‖g‖_p^p ≤ C_p λ^{p-1} ‖f‖₁`. `g₁ + g₂` is bounded by `λ` with
/// `‖g₁ + g₂‖₁ ≤ ‖f‖₁`; Minkowski then gives `C_p = (1 + K_p^{1/p})^p`.
pub fn good_part_constant(p: f64) -> f64 {
    (1.0 + g3_constant(p).powf(1.0 / p)).powf(p)
}

fn factorial(m: u32) -> f64 {
    (1..=m).map(|x| x as f64).product()
}

/// Checks the decomposition of `f` at level `dec.lambda`: reconstruction,
/// supports, vanishing integrals, the `L¹` bounds for `b`, `β`, and `g`, the
/// `L^m` bounds for `g₃` at the integers in `p_list`, and `‖g‖_p^p` against
/// [`good_part_constant`] at every `p` in `p_list`.
pub fn verify(dec: &CZDecomposition, f: &SimpleFunction, mu: &MeasureTree, p_list: &[f64]) -> Result<VerificationReport> {
    check(f, mu)?;
    if dec.g.dim() != f.dim() || dec.g.resolution() != f.resolution() {
        return Err(Error::InvalidInput("decomposition does not match the function".into()));
    }
    if dec.b_parts.len() != dec.maximal_cubes.len() || dec.beta_parts.len() != dec.maximal_cubes.len() {
        return Err(Error::InvalidInput("decomposition parts do not match its cubes".into()));
    }
    if let Some(p) = p_list.iter().find(|p| !(**p >= 1.0 && p.is_finite())) {
        return Err(Error::InvalidInput(format!("exponent {p} outside [1, ∞)")));
    }
    let lambda = dec.lambda;
    let f1 = lp_norm(f, 1.0, mu)?;
    let mut checks = Vec::new();
    let mut push = |name: String, bound: f64, measured: f64, slack: f64| {
        let pass = measured <= bound * (1.0 + slack);
        checks.push(Check { name, bound, measured, pass });
    };

    let rebuilt = dec.g.add(&dec.b()).add(&dec.beta());
    let scale = f.max_abs().max(f64::MIN_POSITIVE);
    push("reconstruction".into(), 1e-9, rebuilt.max_abs_diff_ae(f, mu)? / scale, 0.0);

    let b_misplaced = dec.b_parts.iter().zip(&dec.maximal_cubes).filter(|(p, q)| p.cube != **q).count();
    let beta_misplaced =
        dec.beta_parts.iter().zip(&dec.maximal_cubes).filter(|(p, q)| Some(p.cube) != q.parent()).count();
    push("support_b".into(), 0.0, b_misplaced as f64, 0.0);
    push("support_beta".into(), 0.0, beta_misplaced as f64, 0.0);

    let max_int = |parts: &[Patch]| parts.iter().map(|p| p.integral(mu).abs()).fold(0.0, f64::max);
    push("mean_zero_b".into(), 1e-12 * f1, max_int(&dec.b_parts), 0.0);
    push("mean_zero_beta".into(), 1e-12 * f1, max_int(&dec.beta_parts), 0.0);

    let sum_l1 = |parts: &[Patch]| parts.iter().map(|p| p.l1_norm(mu)).sum::<f64>();
    push("sum_b_l1".into(), 2.0 * f1, sum_l1(&dec.b_parts), ROUNDING);
    push("sum_beta_l1".into(), 4.0 * f1, sum_l1(&dec.beta_parts), ROUNDING);

    let g3 = &dec.g_parts[2];
    push("g_l1".into(), 4.0 * f1, lp_norm(&dec.g, 1.0, mu)?, ROUNDING);
    push("g3_l2_squared".into(), 8.0 * lambda * f1, lp_norm(g3, 2.0, mu)?.powi(2), ROUNDING);
    for &p in p_list {
        if p.fract() == 0.0 {
            let m = p as u32;
            let bound = 2f64.powi(m as i32) * factorial(m) * lambda.powi(m as i32 - 1) * f1;
            push(format!("g3_lm_m{m}"), bound, lp_norm(g3, p, mu)?.powf(p), ROUNDING);
        }
        let bound = good_part_constant(p) * lambda.powf(p - 1.0) * f1;
        push(format!("g_lp_p{p}"), bound, lp_norm(&dec.g, p, mu)?.powf(p), ROUNDING);
    }
    Ok(VerificationReport { lambda, cubes: dec.maximal_cubes.len(), f_l1: f1, checks })
}

fn check_family(cubes: &[CubeId], mu: &MeasureTree) -> Result<()> {
    let mut sorted = cubes.to_vec();
    sorted.sort();
    for q in &sorted {
        if q.dim() != mu.dim() {
            return Err(Error::DimensionMismatch { expected: mu.dim(), got: q.dim() });
        }
        if q.is_root() {
            return Err(Error::InvalidFamily(format!("{q} is the root and has no parent")));
        }
        if q.gen() > mu.depth() {
            return Err(Error::DepthOverflow { requested: q.gen(), available: mu.depth() });
        }
    }
    for (i, a) in sorted.iter().enumerate() {
        if let Some(b) = sorted[i + 1..].iter().find(|b| a.contains(b) || b.contains(a)) {
            return Err(Error::InvalidFamily(format!("cubes {a} and {b} overlap")));
        }
    }
    Ok(())
}

/// `Tf = Σ_j (∫_{Q_j} |f| dμ) 1_{Q̂_j} / μ(Q̂_j)` for pairwise disjoint
/// non-root cubes, at resolution `max(gen(Q̂_j))`.
pub fn lemma_aux_operator(cubes: &[CubeId], f: &SimpleFunction, mu: &MeasureTree) -> Result<SimpleFunction> {
    check(f, mu)?;
    check_family(cubes, mu)?;
    let d = f.dim();
    let res = cubes.iter().map(|q| q.gen() - 1).max().unwrap_or(0);
    let abs_avg = averages(&f.abs(), mu);
    let mut weights: Vec<Vec<f64>> = (0..=res).map(|g| vec![0.0; cubes_at(d, g)]).collect();
    for q in cubes {
        let parent = q.parent().expect("checked");
        let mp = mu.mass(&parent);
        if mp == 0.0 {
            continue;
        }
        let mean = if q.gen() <= f.resolution() {
            abs_avg[q.gen() as usize][q.idx()]
        } else {
            f.value_on(q).map_or(0.0, f64::abs)
        };
        weights[parent.gen() as usize][parent.idx()] += mean * mu.mass(q) / mp;
    }
    SimpleFunction::new(d, res, push_down(d, res, &weights))
}

/// `m! (sup_j ⟨|f|⟩_{Q̂_j})^{m-1} ∫_{∪Q_j} |f| dμ`, the bound on `‖Tf‖_m^m`.
pub fn lemma_aux_bound(cubes: &[CubeId], f: &SimpleFunction, mu: &MeasureTree, m: u32) -> Result<f64> {
    check(f, mu)?;
    check_family(cubes, mu)?;
    if m == 0 {
        return Err(Error::InvalidInput("the exponent must be at least 1".into()));
    }
    let abs = f.abs();
    let abs_avg = averages(&abs, mu);
    let mean = |q: &CubeId| {
        if q.gen() <= f.resolution() {
            abs_avg[q.gen() as usize][q.idx()]
        } else {
            abs.value_on(q).unwrap_or(0.0)
        }
    };
    let sup = cubes.iter().map(|q| mean(&q.parent().expect("checked"))).fold(0.0, f64::max);
    let mass: f64 = cubes.iter().map(|q| mean(q) * mu.mass(q)).sum();
    Ok(factorial(m) * sup.powi(m as i32 - 1) * mass)
}

/// `λ μ{M_D f > λ}` against `‖f‖₁`, valid for every `λ > 0` including the
/// regime `λ ≤ ⟨|f|⟩_root` that [`decompose`] refuses.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakTypeReport {
    pub lambda: f64,
    pub level_set_mass: f64,
    pub f_l1: f64,
    /// `λ ≤ ⟨|f|⟩_root`, where the level set can be the whole root.
    pub root_regime: bool,
    pub pass: bool,
}

pub fn maximal_weak_type(f: &SimpleFunction, lambda: f64, mu: &MeasureTree) -> Result<WeakTypeReport> {
    check(f, mu)?;
    if lambda.is_nan() || lambda <= 0.0 {
        return Err(Error::NonPositiveLambda(lambda));
    }
    let mf = maximal(f, mu)?;
    let level_set_mass: f64 =
        mf.values().iter().zip(mu.masses_at(f.resolution())).filter(|(v, _)| **v > lambda).map(|(_, m)| m).sum();
    let f_l1 = lp_norm(f, 1.0, mu)?;
    let root_avg = averages(&f.abs(), mu)[0][0];
    Ok(WeakTypeReport {
        lambda,
        level_set_mass,
        f_l1,
        root_regime: lambda <= root_avg,
        pass: lambda * level_set_mass <= f_l1,
    })
}
