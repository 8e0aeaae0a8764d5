use std::collections::HashMap;

use super::{check, cube_integrals, CoefficientSequence, SimpleFunction};
use crate::error::{Error, Result};
use crate::grid::{child_count, CubeId};
use crate::haar::HaarSystem;
use crate::measure::MeasureTree;

/// `sup_Q ((1/μ(Q)) ∫_Q |ρ - ⟨ρ⟩_Q|² dμ)^{1/2}` over cubes of generation at
/// most `upto_gen`. Cubes at or below the resolution of `ρ` contribute zero.
pub fn bmo_norm(rho: &SimpleFunction, mu: &MeasureTree, upto_gen: u32) -> Result<f64> {
    check(rho, mu)?;
    let res = rho.resolution();
    let masses = mu.masses_at(res);
    let values = rho.values();
    let mut best = 0.0f64;
    for g in 0..res.min(upto_gen.saturating_add(1)) {
        let block = 1usize << (rho.dim() as u32 * (res - g));
        for (vs, ms) in values.chunks_exact(block).zip(masses.chunks_exact(block)) {
            let mass: f64 = ms.iter().sum();
            if mass <= 0.0 {
                continue;
            }
            let avg = vs.iter().zip(ms).map(|(v, m)| v * m).sum::<f64>() / mass;
            let var = vs.iter().zip(ms).map(|(v, m)| (v - avg) * (v - avg) * m).sum::<f64>() / mass;
            best = best.max(var);
        }
    }
    Ok(best.sqrt())
}

/// `sup_Q (Σ_{Q' ⊆ Q} |γ_{Q'}|² / μ(Q))^{1/2}` over cubes of positive mass
/// and generation at most `upto_gen`; the inner sum stops at the tree depth.
pub fn carleson_norm(gamma: &CoefficientSequence, mu: &MeasureTree, upto_gen: u32) -> Result<f64> {
    gamma.validate(mu)?;
    let mut sums: HashMap<CubeId, f64> = HashMap::new();
    for (q, v) in gamma.iter() {
        let sq = v * v;
        let mut cur = *q;
        loop {
            if cur.gen() <= upto_gen {
                *sums.entry(cur).or_insert(0.0) += sq;
            }
            match cur.parent() {
                Some(p) => cur = p,
                None => break,
            }
        }
    }
    let mut best = 0.0f64;
    for (q, s) in sums {
        let m = mu.mass(&q);
        if m > 0.0 {
            best = best.max(s / m);
        }
    }
    Ok(best.sqrt())
}

/// `γ_Q = ⟨ρ, θ_Q⟩` for every cube of the support of `θ` above the
/// resolution of `ρ` (deeper coefficients vanish by cancellation).
pub fn carleson_from_bmo(rho: &SimpleFunction, theta: &HaarSystem, mu: &MeasureTree) -> Result<CoefficientSequence> {
    check(rho, mu)?;
    if !theta.is_cancellative() {
        return Err(Error::NonCancellative);
    }
    let ints = cube_integrals(rho, mu);
    let k = child_count(mu.dim());
    let mut out = CoefficientSequence::new();
    for g in 0..rho.resolution().min(theta.depth()) {
        let below = &ints[g as usize + 1];
        for i in 0..below.len() / k {
            if theta.is_zero_at(g, i) {
                continue;
            }
            let vals = theta.values_at(g, i);
            let c: f64 = vals.iter().zip(&below[i * k..(i + 1) * k]).map(|(v, a)| v * a).sum();
            out.insert(CubeId::from_parts(mu.dim(), g, i), c);
        }
    }
    Ok(out)
}

/// Builds `ρ` from a Carleson sequence along the corner chain `Q_k` (the
/// cubes of index 0): on `Q_k ∖ Q_{k+1}`, `ρ` sums `γ_Q θ_Q` over `Q ⊆ Q_k`.
/// Equivalently each term `γ_Q θ_Q` is kept whole, except that for a chain
/// cube it is cut off on the next chain cube.
pub fn bmo_from_carleson(gamma: &CoefficientSequence, theta: &HaarSystem, mu: &MeasureTree) -> Result<SimpleFunction> {
    if !theta.is_cancellative() {
        return Err(Error::NonCancellative);
    }
    gamma.validate(mu)?;
    let d = mu.dim();
    let res = gamma.max_gen().map_or(0, |g| g + 1);
    if res > theta.depth() {
        return Err(Error::DepthOverflow { requested: res, available: theta.depth() });
    }
    let mut rho = SimpleFunction::zeros(d, res);
    let k = child_count(d);
    for (q, &v) in gamma.iter() {
        if theta.is_zero_at(q.gen(), q.idx()) {
            continue;
        }
        let vals = theta.values_at(q.gen(), q.idx());
        let block = 1usize << (d as u32 * (res - q.gen() - 1));
        let base = q.idx() * k;
        for (c, &h) in vals.iter().enumerate() {
            if c == 0 && q.index() == 0 {
                continue;
            }
            let lo = (base + c) * block;
            rho.values_mut()[lo..lo + block].iter_mut().for_each(|x| *x += v * h);
        }
    }
    Ok(rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::func::lp_norm;
    use crate::measure::{SplitFormula, SplitSequenceSpec};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constants_have_zero_oscillation() {
        let mu = MeasureTree::random(2, 3, 4, 0.2).unwrap();
        let c = SimpleFunction::constant(2, 3, 7.25);
        assert!(bmo_norm(&c, &mu, 3).unwrap() < 1e-12);
    }

    #[test]
    fn scaled_haar_function_has_bmo_norm_one() {
        let mu = MeasureTree::split(&SplitSequenceSpec::new(SplitFormula::A, 8)).unwrap();
        let psi = HaarSystem::canonical_1d(&mu).unwrap();
        for q in [CubeId::new(1, 2, &[0]).unwrap(), CubeId::new(1, 4, &[3]).unwrap()] {
            let f = SimpleFunction::from_haar(&psi.function(&q).unwrap()).scale(mu.mass(&q).sqrt());
            let n = bmo_norm(&f, &mu, 8).unwrap();
            assert!((n - 1.0).abs() < 1e-12, "{q}: {n}");
            // single-coefficient Carleson sequence of norm one
            let gamma = CoefficientSequence::single(q, mu.mass(&q).sqrt());
            assert!((carleson_norm(&gamma, &mu, 8).unwrap() - 1.0).abs() < 1e-12);
        }
        assert_eq!(carleson_norm(&CoefficientSequence::new(), &mu, 8).unwrap(), 0.0);
    }

    #[test]
    fn single_cube_gamma_off_chain_and_on_chain() {
        let mu = MeasureTree::lebesgue(1, 5).unwrap();
        let theta = HaarSystem::canonical_1d(&mu).unwrap();
        let q = CubeId::new(1, 2, &[2]).unwrap();
        let rho = bmo_from_carleson(&CoefficientSequence::single(q, 0.5), &theta, &mu).unwrap();
        let expect = SimpleFunction::from_haar(&theta.function(&q).unwrap()).scale(0.5);
        assert_eq!(rho, expect);
        // on the chain the term is cut off on the corner child
        let rho = bmo_from_carleson(&CoefficientSequence::single(CubeId::root(1), 1.0), &theta, &mu).unwrap();
        assert_eq!(rho.values(), &[0.0, -1.0]);
        assert!(bmo_from_carleson(&CoefficientSequence::new(), &theta, &mu).unwrap().max_abs() == 0.0);
        let ind = HaarSystem::indicator(&mu).unwrap();
        assert_eq!(bmo_from_carleson(&CoefficientSequence::new(), &ind, &mu), Err(Error::NonCancellative));
    }

    #[test]
    fn carleson_rejects_null_cubes() {
        let mu = MeasureTree::from_packed_leaves(1, 2, 1.0, vec![0.0, 0.0, 1.0, 1.0]).unwrap();
        let gamma = CoefficientSequence::single(CubeId::new(1, 1, &[0]).unwrap(), 1.0);
        assert!(matches!(carleson_norm(&gamma, &mu, 2), Err(Error::ZeroMassCoefficient(_))));
    }

    fn random_gamma(mu: &MeasureTree, theta: &HaarSystem, seed: u64, upto: u32) -> CoefficientSequence {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut gamma = CoefficientSequence::new();
        for g in 0..upto {
            for i in 0..crate::grid::cubes_at(mu.dim(), g) {
                let q = CubeId::from_parts(mu.dim(), g, i);
                if mu.mass(&q) > 0.0 && !theta.is_zero_at(g, i) && rng.random_bool(0.4) {
                    gamma.insert(q, rng.random_range(-1.0..1.0) * mu.mass(&q).sqrt());
                }
            }
        }
        gamma
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn bmo_of_constructed_rho_is_at_most_carleson(seed in any::<u64>(), d in 1usize..=2, z in 0.0f64..0.3) {
            let n = if d == 1 { 7 } else { 4 };
            let mu = MeasureTree::random(d, n, seed, z).unwrap();
            let theta = if d == 1 { HaarSystem::canonical_1d(&mu).unwrap() } else {
                HaarSystem::wilson(&mu, &crate::haar::Selector::Fixed(0)).unwrap()
            };
            let gamma = random_gamma(&mu, &theta, seed ^ 0x55, n);
            let rho = bmo_from_carleson(&gamma, &theta, &mu).unwrap();
            let car = carleson_norm(&gamma, &mu, n).unwrap();
            let bmo = bmo_norm(&rho, &mu, n).unwrap();
            prop_assert!(bmo <= car + 1e-9, "bmo {bmo} car {car}");
        }

        #[test]
        fn carleson_of_coefficients_is_at_most_bmo(seed in any::<u64>(), d in 1usize..=2) {
            let n = if d == 1 { 7 } else { 4 };
            let mu = MeasureTree::random(d, n, seed, 0.1).unwrap();
            let theta = if d == 1 { HaarSystem::canonical_1d(&mu).unwrap() } else {
                HaarSystem::mitrea(&mu, &crate::haar::Selector::Random { seed }).unwrap()
            };
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let vals: Vec<f64> = (0..crate::grid::cubes_at(d, n)).map(|_| rng.random_range(-3.0..3.0)).collect();
            let rho = SimpleFunction::new(d, n, vals).unwrap();
            let gamma = carleson_from_bmo(&rho, &theta, &mu).unwrap();
            let car = carleson_norm(&gamma, &mu, n).unwrap();
            let bmo = bmo_norm(&rho, &mu, n).unwrap();
            prop_assert!(car <= bmo * (1.0 + 1e-12) + 1e-12, "car {car} bmo {bmo}");
            prop_assert!(lp_norm(&rho, 2.0, &mu).unwrap().is_finite());
        }
    }
}
