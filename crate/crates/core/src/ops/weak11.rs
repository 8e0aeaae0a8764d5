use std::ops::RangeInclusive;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    adversarial_test_function, haar_shift, martingale_transform, maximal, paraproduct, paraproduct_adjoint,
    peak_test_function, square_function, CubeCoefficients, ShiftCoefficients,
};
use crate::error::{Error, Result};
use crate::func::{carleson_norm, lp_norm, weak_l1_norm, CoefficientSequence, SimpleFunction};
use crate::grid::{child_count, cubes_at, CubeId};
use crate::haar::{xi, HaarSystem, Selector};
use crate::measure::MeasureTree;
use crate::rng::{keyed_sign, keyed_u64};

/// Constant of the weak-type bound for cancellative Haar shifts.
pub const SHIFT_CONSTANT: f64 = 217.0;
/// Constant of the weak-type bound for paraproducts, per unit of `‖γ‖_Car`.
pub const PARAPRODUCT_CONSTANT: f64 = 288.0;

/// An operator under test.
#[derive(Clone, Debug)]
pub enum Operator {
    Shift { coeffs: ShiftCoefficients, phi: Arc<HaarSystem>, psi: Arc<HaarSystem> },
    Paraproduct { gamma: CoefficientSequence, psi: Arc<HaarSystem> },
    ParaproductAdjoint { gamma: CoefficientSequence, psi: Arc<HaarSystem> },
    /// `Π*_γ` with `γ = δ_{Q0} μ(Q0)^{1/2}`, where `Q0` is the test cube.
    /// Every such `γ` has Carleson norm 1.
    ParaproductAdjointNecessity { psi: Arc<HaarSystem> },
    Square,
    Maximal,
    MartingaleTransform(CubeCoefficients),
}

impl Operator {
    /// `T f`; `cube` is the test cube the input was built from.
    pub fn apply(&self, f: &SimpleFunction, mu: &MeasureTree, cube: &CubeId) -> Result<SimpleFunction> {
        match self {
            Operator::Shift { coeffs, phi, psi } => haar_shift(coeffs, phi, psi, f, mu),
            Operator::Paraproduct { gamma, psi } => paraproduct(gamma, psi, f, mu),
            Operator::ParaproductAdjoint { gamma, psi } => paraproduct_adjoint(gamma, psi, f, mu),
            Operator::ParaproductAdjointNecessity { psi } => {
                let gamma = CoefficientSequence::single(*cube, mu.mass(cube).sqrt());
                paraproduct_adjoint(&gamma, psi, f, mu)
            }
            Operator::Square => square_function(f, mu),
            Operator::Maximal => maximal(f, mu),
            Operator::MartingaleTransform(alpha) => martingale_transform(alpha, f, mu),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Operator::Shift { .. } => "shift",
            Operator::Paraproduct { .. } => "paraproduct",
            Operator::ParaproductAdjoint { .. } => "paraproduct_adjoint",
            Operator::ParaproductAdjointNecessity { .. } => "paraproduct_adjoint_necessity",
            Operator::Square => "square",
            Operator::Maximal => "maximal",
            Operator::MartingaleTransform(_) => "martingale_transform",
        }
    }

    /// The system the Haar-type test functions are drawn from.
    pub fn input_system(&self) -> Option<&HaarSystem> {
        match self {
            Operator::Shift { phi, .. } => Some(phi),
            Operator::Paraproduct { psi, .. }
            | Operator::ParaproductAdjoint { psi, .. }
            | Operator::ParaproductAdjointNecessity { psi } => Some(psi),
            _ => None,
        }
    }
}

/// Test-function families. `Haar` uses `φ_Q` itself, `Adversarial` the
/// mean-zero function `φ̃_Q`, `Peak` the normalized indicator of the child
/// where `|φ_Q|` peaks, `NormalizedIndicators` `1_Q/μ(Q)`, and `RandomSigns`
/// seeded `±1` on the children of `Q`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    #[serde(alias = "haar_family")]
    Haar,
    #[serde(alias = "adversarial_family")]
    Adversarial,
    Peak,
    NormalizedIndicators,
    RandomSigns,
    All,
}

impl Family {
    fn members(self) -> Vec<Family> {
        match self {
            Family::All => vec![
                Family::Haar,
                Family::Adversarial,
                Family::Peak,
                Family::NormalizedIndicators,
                Family::RandomSigns,
            ],
            f => vec![f],
        }
    }
}

fn default_limit() -> usize {
    64
}

fn default_samples() -> usize {
    16
}

/// Which inputs to try.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatterySpec {
    pub family: Family,
    #[serde(default)]
    pub seed: u64,
    /// Generations of test cubes; all available by default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gens: Option<RangeInclusive<u32>>,
    /// Generations with at most this many cubes are tried exhaustively.
    #[serde(default = "default_limit")]
    pub exhaustive_limit: usize,
    /// Otherwise the chain cube at the origin, its siblings, and this many
    /// seeded samples are tried.
    #[serde(default = "default_samples")]
    pub samples_per_gen: usize,
    /// Explicit test cubes; overrides `gens`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cubes: Option<Vec<CubeId>>,
}

impl BatterySpec {
    pub fn new(family: Family, seed: u64) -> Self {
        BatterySpec {
            family,
            seed,
            gens: None,
            exhaustive_limit: default_limit(),
            samples_per_gen: default_samples(),
            cubes: None,
        }
    }

    pub fn with_gens(mut self, gens: RangeInclusive<u32>) -> Self {
        self.gens = Some(gens);
        self
    }

    pub fn with_cubes(mut self, cubes: Vec<CubeId>) -> Self {
        self.cubes = Some(cubes);
        self
    }
}

/// One test input.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestInput {
    pub family: Family,
    pub cube: CubeId,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationRatio {
    pub gen: u32,
    pub max_ratio: f64,
    pub count: usize,
    pub witness: TestInput,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CubeRatio {
    pub cube: CubeId,
    pub max_ratio: f64,
    pub witness: TestInput,
}

/// Empirical `‖T f‖_{1,∞} / ‖f‖₁` over a battery. The ratios are lower bounds
/// for the weak-(1,1) norm of `T`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Weak11Report {
    pub operator: String,
    pub family: Family,
    pub seed: u64,
    pub max_ratio: f64,
    pub witness: Option<TestInput>,
    /// Maximum per generation of the test cube, in increasing generation.
    pub series: Vec<GenerationRatio>,
    /// Maximum per test cube, in the given order; only for explicit cube lists.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub per_cube: Vec<CubeRatio>,
    /// Inputs whose image would need more depth than the measure has.
    pub skipped: usize,
    /// Theoretical upper bound, where one applies.
    pub ceiling: Option<f64>,
}

fn test_function(
    family: Family,
    sys: &HaarSystem,
    q: &CubeId,
    mu: &MeasureTree,
    seed: u64,
) -> Result<Option<SimpleFunction>> {
    let f = match family {
        Family::Haar => {
            if !sys.in_support(q) {
                return Ok(None);
            }
            SimpleFunction::from_haar(&sys.function(q)?)
        }
        Family::Adversarial | Family::Peak => {
            if !sys.in_support(q) {
                return Ok(None);
            }
            match family {
                Family::Adversarial => adversarial_test_function(sys, q, mu)?,
                _ => peak_test_function(sys, q, mu)?,
            }
        }
        Family::NormalizedIndicators => SimpleFunction::indicator(q, q.gen(), 1.0 / mu.mass(q))?,
        Family::RandomSigns => {
            let k = child_count(q.dim());
            let mut f = SimpleFunction::zeros(q.dim(), q.gen() + 1);
            let w = 1.0 / mu.mass(q);
            for c in 0..k {
                f.values_mut()[q.idx() * k + c] = w * keyed_sign(seed, &[q.gen() as u64, q.index(), c as u64]);
            }
            f
        }
        Family::All => unreachable!("expanded by the caller"),
    };
    Ok(Some(f))
}

fn test_cubes(spec: &BatterySpec, mu: &MeasureTree, top: u32) -> Vec<CubeId> {
    if let Some(cubes) = &spec.cubes {
        return cubes.clone();
    }
    let d = mu.dim();
    let k = child_count(d);
    let range = spec.gens.clone().unwrap_or(0..=top);
    let mut out = Vec::new();
    for g in *range.start()..=(*range.end()).min(top) {
        let count = cubes_at(d, g);
        let mut idx: Vec<usize> = if count <= spec.exhaustive_limit {
            (0..count).collect()
        } else {
            let mut v: Vec<usize> = (0..k).collect();
            v.extend((0..spec.samples_per_gen).map(|j| (keyed_u64(spec.seed, &[g as u64, j as u64]) % count as u64) as usize));
            v
        };
        idx.sort_unstable();
        idx.dedup();
        out.extend(idx.into_iter().map(|i| CubeId::from_parts(d, g, i)));
    }
    out
}

enum Outcome {
    Ratio(f64),
    Skipped,
    Empty,
}

/// Runs the battery. Test cubes of zero mass, inputs of zero norm, and cubes
/// outside the support of the input system are left out; inputs whose image
/// needs more depth than available are counted as skipped.
pub fn weak11_estimate(op: &Operator, mu: &MeasureTree, battery: &BatterySpec) -> Result<Weak11Report> {
    let fallback;
    let sys = match op.input_system() {
        Some(s) => s,
        None => {
            fallback = if mu.dim() == 1 {
                HaarSystem::canonical_1d(mu)?
            } else {
                HaarSystem::wilson(mu, &Selector::Fixed(0))?
            };
            &fallback
        }
    };
    if sys.dim() != mu.dim() {
        return Err(Error::DimensionMismatch { expected: mu.dim(), got: sys.dim() });
    }
    let top = mu.depth().min(sys.depth()).saturating_sub(1);
    let cubes = test_cubes(battery, mu, top);
    for q in &cubes {
        if q.dim() != mu.dim() || q.gen() > top {
            return Err(Error::InvalidInput(format!("test cube {q} is outside the grid")));
        }
    }
    let members = battery.family.members();
    let tasks: Vec<TestInput> = cubes
        .iter()
        .filter(|q| mu.mass(q) > 0.0)
        .flat_map(|q| members.iter().map(move |&family| TestInput { family, cube: *q }))
        .collect();
    let outcomes: Vec<Result<Outcome>> = tasks
        .par_iter()
        .map(|t| {
            let Some(f) = test_function(t.family, sys, &t.cube, mu, battery.seed)? else {
                return Ok(Outcome::Empty);
            };
            let norm = lp_norm(&f, 1.0, mu)?;
            if norm == 0.0 {
                return Ok(Outcome::Empty);
            }
            match op.apply(&f, mu, &t.cube) {
                Ok(tf) => Ok(Outcome::Ratio(weak_l1_norm(&tf, mu)? / norm)),
                Err(Error::DepthOverflow { .. }) => Ok(Outcome::Skipped),
                Err(e) => Err(e),
            }
        })
        .collect();

    let mut report = Weak11Report {
        operator: op.name().to_string(),
        family: battery.family,
        seed: battery.seed,
        max_ratio: 0.0,
        witness: None,
        series: Vec::new(),
        per_cube: Vec::new(),
        skipped: 0,
        ceiling: None,
    };
    for (t, outcome) in tasks.iter().zip(outcomes) {
        let ratio = match outcome? {
            Outcome::Ratio(r) => r,
            Outcome::Skipped => {
                report.skipped += 1;
                continue;
            }
            Outcome::Empty => continue,
        };
        if report.witness.is_none() || ratio > report.max_ratio {
            report.max_ratio = ratio;
            report.witness = Some(*t);
        }
        let g = t.cube.gen();
        match report.series.iter_mut().find(|s| s.gen == g) {
            Some(s) => {
                s.count += 1;
                if ratio > s.max_ratio {
                    s.max_ratio = ratio;
                    s.witness = *t;
                }
            }
            None => report.series.push(GenerationRatio { gen: g, max_ratio: ratio, count: 1, witness: *t }),
        }
        if battery.cubes.is_some() {
            match report.per_cube.iter_mut().find(|c| c.cube == t.cube) {
                Some(c) if ratio > c.max_ratio => {
                    c.max_ratio = ratio;
                    c.witness = *t;
                }
                Some(_) => {}
                None => report.per_cube.push(CubeRatio { cube: t.cube, max_ratio: ratio, witness: *t }),
            }
        }
    }
    report.series.sort_by_key(|s| s.gen);
    report.ceiling = match op {
        Operator::Shift { coeffs, phi, psi } if phi.is_cancellative() && psi.is_cancellative() => {
            Some(shift_ceiling(coeffs, phi, psi, top)?)
        }
        Operator::Paraproduct { gamma, .. } | Operator::ParaproductAdjoint { gamma, .. } => {
            Some(paraproduct_ceiling(gamma, mu, mu.depth())?)
        }
        _ => None,
    };
    Ok(report)
}

/// `2^{(r+s)d/2} sup|α|`, an upper bound for `‖Ш‖_{L²→L²}`.
pub fn shift_l2_bound(coeffs: &ShiftCoefficients, dim: usize) -> f64 {
    2f64.powf((coeffs.r + coeffs.s) as f64 * dim as f64 / 2.0) * coeffs.bound()
}

/// `C₀ (‖Ш‖₂ + 2^{sd}(r 2^{rd} + 1) Ξ sup|α|)` with `C₀ = 217`, using
/// [`shift_l2_bound`] for the operator norm and `Ξ` up to `upto_gen`.
pub fn shift_ceiling(coeffs: &ShiftCoefficients, phi: &HaarSystem, psi: &HaarSystem, upto_gen: u32) -> Result<f64> {
    let d = phi.dim() as f64;
    let (r, s) = (coeffs.r as f64, coeffs.s as f64);
    let xi = xi(phi, psi, coeffs.r, coeffs.s, upto_gen)?;
    let sup = coeffs.bound();
    Ok(SHIFT_CONSTANT * (shift_l2_bound(coeffs, phi.dim()) + 2f64.powf(s * d) * (r * 2f64.powf(r * d) + 1.0) * xi * sup))
}

/// `288 ‖γ‖_Car`.
pub fn paraproduct_ceiling(gamma: &CoefficientSequence, mu: &MeasureTree, upto_gen: u32) -> Result<f64> {
    Ok(PARAPRODUCT_CONSTANT * carleson_norm(gamma, mu, upto_gen)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{SplitFormula, SplitSequenceSpec};

    fn split(formula: SplitFormula, n: u32) -> MeasureTree {
        MeasureTree::split(&SplitSequenceSpec::new(formula, n)).unwrap()
    }

    #[test]
    fn hilbert_on_lebesgue_is_flat() {
        let mu = MeasureTree::lebesgue(1, 12).unwrap();
        let h = Arc::new(HaarSystem::canonical_1d(&mu).unwrap());
        let op = Operator::Shift { coeffs: ShiftCoefficients::hilbert(), phi: h.clone(), psi: h };
        let rep = weak11_estimate(&op, &mu, &BatterySpec::new(Family::All, 1)).unwrap();
        let lo = rep.series.iter().map(|s| s.max_ratio).fold(f64::INFINITY, f64::min);
        assert!(rep.max_ratio / lo < 1.5, "{rep:?}");
        assert!(rep.max_ratio < rep.ceiling.unwrap());
        // h_I at generation N-1 would need resolution N+1
        assert!(rep.skipped > 0);
    }

    #[test]
    fn deterministic_and_ordered() {
        let mu = split(SplitFormula::C, 10);
        let op = Operator::Square;
        let spec = BatterySpec::new(Family::All, 9);
        let a = weak11_estimate(&op, &mu, &spec).unwrap();
        let b = weak11_estimate(&op, &mu, &spec).unwrap();
        assert_eq!(a, b);
        assert!(a.series.windows(2).all(|w| w[0].gen < w[1].gen));
    }

    #[test]
    fn explicit_cubes_report_per_cube() {
        let mu = MeasureTree::r2_nonstandard(6, 4).unwrap();
        let sys = Arc::new(HaarSystem::r2_nonstandard(&mu, 6).unwrap());
        let blocks: Vec<CubeId> = (2..=6).map(|k| crate::measure::r2_block(6, k).unwrap()).collect();
        let values = blocks.iter().map(|q| (*q, 1.0)).collect();
        let coeffs = ShiftCoefficients::multiplier(CubeCoefficients::Explicit { values, default: 0.0 });
        let op = Operator::Shift { coeffs, phi: sys.clone(), psi: sys };
        let rep = weak11_estimate(&op, &mu, &BatterySpec::new(Family::Peak, 0).with_cubes(blocks.clone())).unwrap();
        assert_eq!(rep.per_cube.len(), blocks.len());
        for (k, cr) in (2..=6).zip(&rep.per_cube) {
            let kf = k as f64;
            // |Tf| is k²/4 on mass 2/k² and kc/2 <= k²/4 on the rest of a unit-mass block
            let c = (kf * kf / (2.0 * (kf * kf - 2.0))).sqrt();
            let expect = f64::max(0.5, kf * c / 2.0);
            assert!((cr.max_ratio - expect).abs() < 1e-12 * expect, "k={k}: {} vs {expect}", cr.max_ratio);
        }
    }

    #[test]
    fn necessity_pair_grows_on_formula_a() {
        let mu = split(SplitFormula::A, 14);
        let psi = Arc::new(HaarSystem::canonical_1d(&mu).unwrap());
        let op = Operator::ParaproductAdjointNecessity { psi };
        let rep = weak11_estimate(&op, &mu, &BatterySpec::new(Family::Peak, 0)).unwrap();
        let first = rep.series.iter().find(|s| s.gen == 2).unwrap().max_ratio;
        let last = rep.series.iter().find(|s| s.gen == 12).unwrap().max_ratio;
        assert!(last > first);
    }
}
