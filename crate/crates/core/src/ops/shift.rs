use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{synthesize, CubeCoefficients};
use crate::error::{Error, Result};
use crate::func::{check, cube_integrals, CoefficientSequence, SimpleFunction};
use crate::grid::{child_count, cubes_at, CubeId};
use crate::haar::HaarSystem;
use crate::measure::MeasureTree;
use crate::rng::keyed_sign;

/// One explicit coefficient `α^Q_{R,S}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitAlpha {
    pub q: CubeId,
    pub r: CubeId,
    pub s: CubeId,
    pub alpha: f64,
}

/// Explicit coefficients keyed by `(Q, R, S)`; missing triples are zero.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExplicitAlphas(HashMap<(CubeId, CubeId, CubeId), f64>);

impl From<Vec<ExplicitAlpha>> for ExplicitAlphas {
    fn from(v: Vec<ExplicitAlpha>) -> Self {
        ExplicitAlphas(v.into_iter().map(|e| ((e.q, e.r, e.s), e.alpha)).collect())
    }
}

impl From<ExplicitAlphas> for Vec<ExplicitAlpha> {
    fn from(e: ExplicitAlphas) -> Self {
        let mut v: Vec<ExplicitAlpha> = e.0.into_iter().map(|((q, r, s), alpha)| ExplicitAlpha { q, r, s, alpha }).collect();
        v.sort_by_key(|a| (a.q, a.r, a.s));
        v
    }
}

impl Serialize for ExplicitAlphas {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        Vec::<ExplicitAlpha>::from(self.clone()).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ExplicitAlphas {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        Ok(Vec::<ExplicitAlpha>::deserialize(deserializer)?.into())
    }
}

/// Where the coefficients `α^Q_{R,S}` come from, in the source's own `(r, s)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CoefficientSource {
    Constant {
        value: f64,
    },
    /// `±scale`, seeded per `(Q, R, S)`.
    Signs {
        seed: u64,
        #[serde(default = "one")]
        scale: f64,
    },
    Explicit {
        entries: ExplicitAlphas,
    },
    /// Complexity `(0, 1)`: `α^I_{I, I-} = 1`, `α^I_{I, I+} = -1`.
    Hilbert,
    /// Complexity `(1, 0)`: `α^I_{I-, I} = 1`, `α^I_{I+, I} = -1`.
    HilbertAdjoint,
    /// Complexity `(0, 0)`: `α^Q_{Q,Q} = α_Q`.
    Multiplier {
        coefficients: CubeCoefficients,
    },
}

fn one() -> f64 {
    1.0
}

/// Coefficients of a Haar shift of complexity `(r, s)`. A transposed set
/// reads the source with the roles of `R` and `S` exchanged.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShiftCoefficients {
    pub r: u32,
    pub s: u32,
    pub source: CoefficientSource,
    #[serde(default)]
    pub transposed: bool,
}

impl ShiftCoefficients {
    pub fn new(r: u32, s: u32, source: CoefficientSource) -> Result<Self> {
        let need = match &source {
            CoefficientSource::Hilbert => Some((0, 1)),
            CoefficientSource::HilbertAdjoint => Some((1, 0)),
            CoefficientSource::Multiplier { .. } => Some((0, 0)),
            _ => None,
        };
        if let Some((nr, ns)) = need {
            if (r, s) != (nr, ns) {
                return Err(Error::InvalidSpec(format!("this coefficient source has complexity ({nr}, {ns})")));
            }
        }
        if let CoefficientSource::Explicit { entries } = &source {
            for (q, rr, ss) in entries.0.keys() {
                let ok = rr.gen() == q.gen() + r && ss.gen() == q.gen() + s && q.contains(rr) && q.contains(ss);
                if !ok {
                    return Err(Error::InvalidSpec(format!("coefficient ({q}, {rr}, {ss}) is not aligned for ({r}, {s})")));
                }
            }
        }
        Ok(ShiftCoefficients { r, s, source, transposed: false })
    }

    /// The dyadic Hilbert transform `h_I ↦ h_{I-} - h_{I+}`.
    pub fn hilbert() -> Self {
        ShiftCoefficients { r: 0, s: 1, source: CoefficientSource::Hilbert, transposed: false }
    }

    /// Its adjoint `h_I ↦ σ(I) h_{Î}`.
    pub fn hilbert_adjoint() -> Self {
        ShiftCoefficients { r: 1, s: 0, source: CoefficientSource::HilbertAdjoint, transposed: false }
    }

    pub fn constant(r: u32, s: u32, value: f64) -> Self {
        ShiftCoefficients { r, s, source: CoefficientSource::Constant { value }, transposed: false }
    }

    pub fn signs(r: u32, s: u32, seed: u64, scale: f64) -> Self {
        ShiftCoefficients { r, s, source: CoefficientSource::Signs { seed, scale }, transposed: false }
    }

    pub fn multiplier(coefficients: CubeCoefficients) -> Self {
        ShiftCoefficients { r: 0, s: 0, source: CoefficientSource::Multiplier { coefficients }, transposed: false }
    }

    /// Multiplier coefficients `γ_Q/√μ(Q)`: with the indicator system as input
    /// and `Ψ` as output this is the paraproduct `Π_γ`.
    pub fn paraproduct(gamma: &CoefficientSequence, mu: &MeasureTree) -> Result<Self> {
        gamma.validate(mu)?;
        let values = gamma.iter().map(|(q, v)| (*q, v / mu.mass(q).sqrt())).collect();
        Ok(Self::multiplier(CubeCoefficients::Explicit { values, default: 0.0 }))
    }

    /// Coefficients of the adjoint shift: `(r, s)` exchanged and `α` transposed.
    pub fn adjoint(&self) -> Self {
        ShiftCoefficients { r: self.s, s: self.r, source: self.source.clone(), transposed: !self.transposed }
    }

    /// `sup |α|`.
    pub fn bound(&self) -> f64 {
        match &self.source {
            CoefficientSource::Constant { value } => value.abs(),
            CoefficientSource::Signs { scale, .. } => scale.abs(),
            CoefficientSource::Explicit { entries } => entries.0.values().fold(0.0, |m, v| m.max(v.abs())),
            CoefficientSource::Hilbert | CoefficientSource::HilbertAdjoint => 1.0,
            CoefficientSource::Multiplier { coefficients } => coefficients.bound(),
        }
    }

    /// `inf |α|` when the source is non-degenerate by construction.
    pub fn inf(&self) -> Option<f64> {
        match &self.source {
            CoefficientSource::Constant { value } => Some(value.abs()),
            CoefficientSource::Signs { scale, .. } => Some(scale.abs()),
            CoefficientSource::Explicit { .. } => None,
            CoefficientSource::Hilbert | CoefficientSource::HilbertAdjoint => Some(1.0),
            CoefficientSource::Multiplier { coefficients } => coefficients.inf(),
        }
    }

    /// `α^Q_{R,S}` with `R`, `S` given by their offsets in the index blocks
    /// of `D_r(Q)` and `D_s(Q)`.
    pub(crate) fn alpha(&self, q: &CubeId, r_rel: usize, s_rel: usize) -> f64 {
        let (a, b, ra, sb) =
            if self.transposed { (s_rel, r_rel, self.s, self.r) } else { (r_rel, s_rel, self.r, self.s) };
        match &self.source {
            CoefficientSource::Constant { value } => *value,
            CoefficientSource::Signs { seed, scale } => {
                scale * keyed_sign(*seed, &[q.gen() as u64, q.index(), a as u64, b as u64])
            }
            CoefficientSource::Explicit { entries } => {
                let d = q.dim() as u32;
                let rr = CubeId::from_parts(q.dim(), q.gen() + ra, (q.idx() << (d * ra)) | a);
                let ss = CubeId::from_parts(q.dim(), q.gen() + sb, (q.idx() << (d * sb)) | b);
                entries.0.get(&(*q, rr, ss)).copied().unwrap_or(0.0)
            }
            CoefficientSource::Hilbert => {
                if b == 0 {
                    1.0
                } else {
                    -1.0
                }
            }
            CoefficientSource::HilbertAdjoint => {
                if a == 0 {
                    1.0
                } else {
                    -1.0
                }
            }
            CoefficientSource::Multiplier { coefficients } => coefficients.at(q),
        }
    }

    fn constant_value(&self) -> Option<f64> {
        match &self.source {
            CoefficientSource::Constant { value } => Some(*value),
            _ => None,
        }
    }
}

fn check_systems(phi: &HaarSystem, psi: &HaarSystem, mu: &MeasureTree) -> Result<()> {
    for sys in [phi, psi] {
        if sys.dim() != mu.dim() {
            return Err(Error::DimensionMismatch { expected: mu.dim(), got: sys.dim() });
        }
    }
    Ok(())
}

/// Index range of the descendants of `q0` (or of all cubes) at generation `g`.
fn block(dim: usize, g: u32, q0: Option<&CubeId>) -> std::ops::Range<usize> {
    match q0 {
        None => 0..cubes_at(dim, g),
        Some(q) => {
            let sh = dim as u32 * (g - q.gen());
            (q.idx() << sh)..((q.idx() + 1) << sh)
        }
    }
}

/// `d_S = Σ_Q Σ_R α^Q_{R,S} c_R` for `Q` of generation `qlow..=qtop` (inside
/// `q0` when given); `c[g]` holds `c_R` for generation `g`.
fn accumulate(
    coeffs: &ShiftCoefficients,
    dim: usize,
    c: &[Vec<f64>],
    qlow: u32,
    qtop: u32,
    q0: Option<&CubeId>,
) -> Vec<Vec<f64>> {
    let (r, s) = (coeffs.r, coeffs.s);
    let nr = 1usize << (dim as u32 * r);
    let ns = 1usize << (dim as u32 * s);
    let mut d: Vec<Vec<f64>> = (0..=qtop + s).map(|g| if g >= qlow + s { vec![0.0; cubes_at(dim, g)] } else { Vec::new() }).collect();
    let konst = coeffs.constant_value();
    for g in qlow..=qtop {
        let cr = &c[(g + r) as usize];
        let ds = &mut d[(g + s) as usize];
        for i in block(dim, g, q0) {
            let ins = &cr[i * nr..(i + 1) * nr];
            if ins.iter().all(|&x| x == 0.0) {
                continue;
            }
            let outs = &mut ds[i * ns..(i + 1) * ns];
            if let Some(k) = konst {
                let total: f64 = ins.iter().sum();
                outs.iter_mut().for_each(|x| *x += k * total);
                continue;
            }
            let q = CubeId::from_parts(dim, g, i);
            for (a, &ca) in ins.iter().enumerate() {
                if ca == 0.0 {
                    continue;
                }
                for (b, out) in outs.iter_mut().enumerate() {
                    *out += coeffs.alpha(&q, a, b) * ca;
                }
            }
        }
    }
    d
}

fn shift_impl(
    coeffs: &ShiftCoefficients,
    phi: &HaarSystem,
    psi: &HaarSystem,
    f: &SimpleFunction,
    mu: &MeasureTree,
    q0: Option<&CubeId>,
) -> Result<SimpleFunction> {
    check(f, mu)?;
    check_systems(phi, psi, mu)?;
    let (r, s) = (coeffs.r, coeffs.s);
    let d = mu.dim();
    let n = mu.depth().min(phi.depth()).min(psi.depth());
    let m = f.resolution();
    if m + s > n + r {
        return Err(Error::DepthOverflow { requested: m + s - r, available: n });
    }
    let reach = r.max(s);
    let mut qtop = n as i64 - 1 - reach as i64;
    if phi.is_cancellative() {
        // ⟨f, φ_R⟩ vanishes once f is constant on R
        qtop = qtop.min(m as i64 - 1 - r as i64);
    }
    let qlow = q0.map_or(0, |q| q.gen());
    if qtop < qlow as i64 {
        return Ok(SimpleFunction::zeros(d, m));
    }
    let qtop = qtop as u32;
    let k = child_count(d);
    let ints = cube_integrals(f, mu);
    let mut c: Vec<Vec<f64>> = vec![Vec::new(); (qtop + r + 1) as usize];
    for g in (qlow + r)..=(qtop + r) {
        let mut row = vec![0.0; cubes_at(d, g)];
        let child_masses = mu.masses_at(g + 1);
        for i in block(d, g, q0) {
            if phi.is_zero_at(g, i) {
                continue;
            }
            let vals = phi.values_at(g, i);
            row[i] = if g < m {
                let below = &ints[g as usize + 1][i * k..(i + 1) * k];
                vals.iter().zip(below).map(|(v, a)| v * a).sum()
            } else {
                let fv = f.values()[i >> (d as u32 * (g - m))];
                fv * vals.iter().zip(&child_masses[i * k..(i + 1) * k]).map(|(v, w)| v * w).sum::<f64>()
            };
        }
        c[g as usize] = row;
    }
    let dcoef = accumulate(coeffs, d, &c, qlow, qtop, q0);
    let res = m.max(qtop + s + 1);
    synthesize(d, res, &dcoef, psi)
}

/// `Ш f = Σ_Q Σ_{R ∈ D_r(Q), S ∈ D_s(Q)} α^Q_{R,S} ⟨f, φ_R⟩ ψ_S`, summed over
/// cubes with `gen(Q) + max(r, s) <= N - 1`. Fails with a depth overflow when
/// the output would need resolution past `N`.
pub fn haar_shift(
    coeffs: &ShiftCoefficients,
    phi: &HaarSystem,
    psi: &HaarSystem,
    f: &SimpleFunction,
    mu: &MeasureTree,
) -> Result<SimpleFunction> {
    shift_impl(coeffs, phi, psi, f, mu, None)
}

/// The shift with `Q` restricted to the cubes inside `q0`.
pub fn haar_shift_truncated(
    coeffs: &ShiftCoefficients,
    phi: &HaarSystem,
    psi: &HaarSystem,
    f: &SimpleFunction,
    mu: &MeasureTree,
    q0: &CubeId,
) -> Result<SimpleFunction> {
    if q0.dim() != mu.dim() {
        return Err(Error::DimensionMismatch { expected: mu.dim(), got: q0.dim() });
    }
    shift_impl(coeffs, phi, psi, f, mu, Some(q0))
}

/// `max ‖Ш^{q0}(1_{q0})‖₂ / μ(q0)^{1/2}` over cubes `q0` of positive mass and
/// generation at most `upto_gen`.
///
/// `⟨1_{q0}, φ_R⟩ = ∫ φ_R dμ` for every `R ⊆ q0`, so the coefficients `d_S`
/// are shared by all `q0`; each `Ш^{q0}(1_{q0})` is then synthesized on the
/// subtree of `q0` from the `S` at least `s` generations below it.
pub fn local_l2_constant(
    coeffs: &ShiftCoefficients,
    phi: &HaarSystem,
    psi: &HaarSystem,
    mu: &MeasureTree,
    upto_gen: u32,
) -> Result<f64> {
    check_systems(phi, psi, mu)?;
    let (r, s) = (coeffs.r, coeffs.s);
    let d = mu.dim();
    let k = child_count(d);
    let n = mu.depth().min(phi.depth()).min(psi.depth());
    let reach = r.max(s);
    if n < reach + 1 {
        return Ok(0.0);
    }
    let qtop = n - 1 - reach;
    let mut c: Vec<Vec<f64>> = vec![Vec::new(); (qtop + r + 1) as usize];
    for g in r..=(qtop + r) {
        let child_masses = mu.masses_at(g + 1);
        c[g as usize] = (0..cubes_at(d, g))
            .map(|i| phi.values_at(g, i).iter().zip(&child_masses[i * k..(i + 1) * k]).map(|(v, w)| v * w).sum())
            .collect();
    }
    if c.iter().all(|row| row.iter().all(|&x| x == 0.0)) {
        return Ok(0.0);
    }
    let dcoef = accumulate(coeffs, d, &c, 0, qtop, None);
    let res = qtop + s + 1;
    let leaf_masses = mu.masses_at(res);
    let mut cubes = Vec::new();
    for g in 0..=upto_gen.min(qtop) {
        for i in 0..cubes_at(d, g) {
            if mu.masses_at(g)[i] > 0.0 {
                cubes.push(CubeId::from_parts(d, g, i));
            }
        }
    }
    let best = cubes
        .par_iter()
        .map(|q0| {
            let g0 = q0.gen();
            let mut cur = vec![0.0];
            let mut base = q0.idx();
            for g in g0..res {
                let mut next = Vec::with_capacity(cur.len() * k);
                let use_coeffs = g >= g0 + s && (g as usize) < dcoef.len();
                for (j, &v) in cur.iter().enumerate() {
                    let i = base + j;
                    let dc = if use_coeffs { dcoef[g as usize][i] } else { 0.0 };
                    if dc == 0.0 {
                        next.extend(std::iter::repeat_n(v, k));
                    } else {
                        let vals = psi.values_at(g, i);
                        next.extend(vals.iter().map(|w| v + dc * w));
                    }
                }
                cur = next;
                base *= k;
            }
            let masses = &leaf_masses[base..base + cur.len()];
            let norm2: f64 = cur.iter().zip(masses).map(|(v, m)| v * v * m).sum();
            (norm2 / mu.mass(q0)).sqrt()
        })
        .reduce(|| 0.0, f64::max);
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::func::{inner, lp_norm};
    use crate::haar::{Selector, TensorFactor};
    use crate::measure::{SplitFormula, SplitSequenceSpec};
    use crate::ops::{martingale_transform, paraproduct};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_fn(mu: &MeasureTree, res: u32, seed: u64) -> SimpleFunction {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vals = (0..cubes_at(mu.dim(), res)).map(|_| rng.random_range(-4.0..4.0)).collect();
        SimpleFunction::new(mu.dim(), res, vals).unwrap()
    }

    fn haar(sys: &HaarSystem, q: &CubeId) -> SimpleFunction {
        SimpleFunction::from_haar(&sys.function(q).unwrap())
    }

    #[test]
    fn hilbert_on_haar_functions() {
        let mu = MeasureTree::split(&SplitSequenceSpec::new(SplitFormula::A, 8)).unwrap();
        let h = HaarSystem::canonical_1d(&mu).unwrap();
        for q in [CubeId::root(1), CubeId::new(1, 3, &[5]).unwrap()] {
            let out = haar_shift(&ShiftCoefficients::hilbert(), &h, &h, &haar(&h, &q), &mu).unwrap();
            let expect = haar(&h, &q.child(0)).sub(&haar(&h, &q.child(1)));
            assert!(out.max_abs_diff_ae(&expect, &mu).unwrap() < 1e-9 * expect.max_abs());
            let q1 = q.child(1);
            let out = haar_shift(&ShiftCoefficients::hilbert_adjoint(), &h, &h, &haar(&h, &q1), &mu).unwrap();
            let expect = haar(&h, &q).scale(q1.sibling_sign().unwrap() as f64);
            assert!(out.max_abs_diff_ae(&expect, &mu).unwrap() < 1e-9 * expect.max_abs());
        }
    }

    #[test]
    fn identity_multiplier_reproduces_span() {
        let mu = MeasureTree::random(2, 4, 8, 0.1).unwrap();
        let w = HaarSystem::wilson(&mu, &Selector::Fixed(1)).unwrap();
        let q = CubeId::from_parts(2, 2, 5);
        let f = haar(&w, &q).add(&haar(&w, &CubeId::root(2)).scale(-2.0));
        let out = haar_shift(&ShiftCoefficients::constant(0, 0, 1.0), &w, &w, &f, &mu).unwrap();
        assert!(out.max_abs_diff_ae(&f, &mu).unwrap() < 1e-10);
    }

    #[test]
    fn depth_overflow() {
        let mu = MeasureTree::lebesgue(1, 4).unwrap();
        let h = HaarSystem::canonical_1d(&mu).unwrap();
        let f = SimpleFunction::constant(1, 4, 1.0);
        assert!(matches!(
            haar_shift(&ShiftCoefficients::hilbert(), &h, &h, &f, &mu),
            Err(Error::DepthOverflow { .. })
        ));
        assert!(haar_shift(&ShiftCoefficients::hilbert_adjoint(), &h, &h, &f, &mu).is_ok());
    }

    #[test]
    fn multiplier_matches_martingale_transform_in_one_dimension() {
        let mu = MeasureTree::split(&SplitSequenceSpec::new(SplitFormula::C, 9)).unwrap();
        let h = HaarSystem::canonical_1d(&mu).unwrap();
        let f = random_fn(&mu, 9, 4);
        let alpha = CubeCoefficients::Signs { seed: 3, scale: 2.0 };
        let a = haar_shift(&ShiftCoefficients::multiplier(alpha.clone()), &h, &h, &f, &mu).unwrap();
        let b = martingale_transform(&alpha, &f, &mu).unwrap();
        assert!(a.max_abs_diff_ae(&b, &mu).unwrap() < 1e-12 * f.max_abs().max(1.0) * 8.0);
    }

    #[test]
    fn local_constant_cases() {
        let mu = MeasureTree::split(&SplitSequenceSpec::new(SplitFormula::A, 7)).unwrap();
        let h = HaarSystem::canonical_1d(&mu).unwrap();
        assert_eq!(local_l2_constant(&ShiftCoefficients::hilbert(), &h, &h, &mu, 6).unwrap(), 0.0);
        let ind = HaarSystem::indicator(&mu).unwrap();
        assert_eq!(local_l2_constant(&ShiftCoefficients::constant(0, 0, 0.0), &ind, &h, &mu, 6).unwrap(), 0.0);
        let gamma: CoefficientSequence =
            h.support(6).into_iter().map(|q| (q, 0.5 * mu.mass(&q).sqrt())).collect();
        let car = crate::func::carleson_norm(&gamma, &mu, 7).unwrap();
        let coeffs = ShiftCoefficients::paraproduct(&gamma, &mu).unwrap();
        let local = local_l2_constant(&coeffs, &ind, &h, &mu, 6).unwrap();
        assert!(local > 0.0 && local <= 2.0 * car, "{local} vs {car}");
        // the truncated operator on 1_{q0} matches the subtree computation
        let q0 = CubeId::new(1, 2, &[0]).unwrap();
        let one = SimpleFunction::indicator(&q0, 2, 1.0).unwrap();
        let t = haar_shift_truncated(&coeffs, &ind, &h, &one, &mu, &q0).unwrap();
        assert!(lp_norm(&t, 2.0, &mu).unwrap() / mu.mass(&q0).sqrt() <= local * (1.0 + 1e-12));
        // and the shift form of the paraproduct is the paraproduct
        let f = random_fn(&mu, 5, 1);
        let a = haar_shift(&coeffs, &ind, &h, &f, &mu).unwrap();
        let b = paraproduct(&gamma, &h, &f, &mu).unwrap();
        assert!(a.max_abs_diff_ae(&b, &mu).unwrap() < 1e-9);
    }

    fn systems(d: usize, mu: &MeasureTree, seed: u64) -> (HaarSystem, HaarSystem) {
        if d == 1 {
            (HaarSystem::canonical_1d(mu).unwrap(), HaarSystem::canonical_1d(mu).unwrap())
        } else {
            (
                HaarSystem::wilson(mu, &Selector::Random { seed }).unwrap(),
                HaarSystem::mitrea(mu, &Selector::Random { seed: seed ^ 1 }).unwrap(),
            )
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn shift_adjointness(seed in any::<u64>(), d in 1usize..=2, r in 0u32..3, s in 0u32..3) {
            let n = if d == 1 { 8 } else { 5 };
            let mu = MeasureTree::random(d, n, seed, 0.15).unwrap();
            let (phi, psi) = systems(d, &mu, seed);
            let coeffs = ShiftCoefficients::signs(r, s, seed, 1.0);
            let f = random_fn(&mu, n - s, seed ^ 2);
            let g = random_fn(&mu, n - r, seed ^ 3);
            let sf = haar_shift(&coeffs, &phi, &psi, &f, &mu).unwrap();
            let sg = haar_shift(&coeffs.adjoint(), &psi, &phi, &g, &mu).unwrap();
            let lhs = inner(&sf, &g, &mu).unwrap();
            let rhs = inner(&f, &sg, &mu).unwrap();
            let scale = lp_norm(&sf, 2.0, &mu).unwrap() * lp_norm(&g, 2.0, &mu).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-10 * scale.max(1e-300), "{lhs} vs {rhs}");
        }

        #[test]
        fn shift_l2_bound(seed in any::<u64>(), d in 1usize..=2, r in 0u32..3, s in 0u32..3) {
            let n = if d == 1 { 8 } else { 5 };
            let mu = MeasureTree::random(d, n, seed, 0.15).unwrap();
            let (phi, psi) = systems(d, &mu, seed);
            let coeffs = ShiftCoefficients::signs(r, s, seed, 0.75);
            let f = random_fn(&mu, n - s, seed ^ 5);
            let out = haar_shift(&coeffs, &phi, &psi, &f, &mu).unwrap();
            let bound = 2f64.powf((r + s) as f64 * d as f64 / 2.0) * coeffs.bound() * lp_norm(&f, 2.0, &mu).unwrap();
            prop_assert!(lp_norm(&out, 2.0, &mu).unwrap() <= bound * (1.0 + 1e-12));
        }

        #[test]
        fn tensor_shift_adjointness(seed in any::<u64>()) {
            let a = MeasureTree::random(1, 4, seed, 0.0).unwrap();
            let b = MeasureTree::split(&SplitSequenceSpec::new(SplitFormula::A, 4)).unwrap();
            let ha = HaarSystem::canonical_1d(&a).unwrap();
            let hb = HaarSystem::canonical_1d(&b).unwrap();
            let mu = MeasureTree::product(&[a.clone(), b.clone()]).unwrap();
            let factors = [TensorFactor { measure: &a, system: &ha }, TensorFactor { measure: &b, system: &hb }];
            let phi = HaarSystem::tensor(&mu, &factors, &Selector::Random { seed }).unwrap();
            let coeffs = ShiftCoefficients::constant(1, 1, -1.0);
            let f = random_fn(&mu, 3, seed);
            let g = random_fn(&mu, 3, !seed);
            let lhs = inner(&haar_shift(&coeffs, &phi, &phi, &f, &mu).unwrap(), &g, &mu).unwrap();
            let rhs = inner(&f, &haar_shift(&coeffs.adjoint(), &phi, &phi, &g, &mu).unwrap(), &mu).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-10 * (lhs.abs() + rhs.abs()).max(1e-12));
        }
    }
}
