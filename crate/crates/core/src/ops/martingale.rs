use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::averages;
use crate::error::{Error, Result};
use crate::func::{check, inner_product, SimpleFunction};
use crate::grid::{child_count, cubes_at, CubeId};
use crate::haar::wilson_basis;
use crate::measure::MeasureTree;
use crate::rng::keyed_sign;

fn one() -> f64 {
    1.0
}

/// Per-cube coefficients `α_Q` of a martingale transform or Haar multiplier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CubeCoefficients {
    Constant {
        value: f64,
    },
    /// `±scale` with seeded signs per cube.
    Signs {
        seed: u64,
        #[serde(default = "one")]
        scale: f64,
    },
    Explicit {
        values: BTreeMap<CubeId, f64>,
        #[serde(default)]
        default: f64,
    },
}

impl CubeCoefficients {
    pub fn at(&self, q: &CubeId) -> f64 {
        match self {
            CubeCoefficients::Constant { value } => *value,
            CubeCoefficients::Signs { seed, scale } => scale * keyed_sign(*seed, &[q.gen() as u64, q.index()]),
            CubeCoefficients::Explicit { values, default } => values.get(q).copied().unwrap_or(*default),
        }
    }

    /// `sup |α_Q|`.
    pub fn bound(&self) -> f64 {
        match self {
            CubeCoefficients::Constant { value } => value.abs(),
            CubeCoefficients::Signs { scale, .. } => scale.abs(),
            CubeCoefficients::Explicit { values, default } => {
                values.values().fold(default.abs(), |m, v| m.max(v.abs()))
            }
        }
    }

    /// `inf |α_Q|` when it is known without enumerating cubes.
    pub fn inf(&self) -> Option<f64> {
        match self {
            CubeCoefficients::Constant { value } => Some(value.abs()),
            CubeCoefficients::Signs { scale, .. } => Some(scale.abs()),
            CubeCoefficients::Explicit { .. } => None,
        }
    }
}

/// `E_k f = Σ_{Q ∈ D_k} ⟨f⟩_Q 1_Q`, at resolution `k`. For `k` at or past the
/// resolution of `f` this is `f` itself.
pub fn expectation(f: &SimpleFunction, k: u32, mu: &MeasureTree) -> Result<SimpleFunction> {
    check(f, mu)?;
    if k >= f.resolution() {
        return Ok(f.clone());
    }
    let mut avg = averages(f, mu);
    SimpleFunction::new(f.dim(), k, avg.swap_remove(k as usize))
}

/// `D_k f = E_k f - E_{k-1} f` for `k >= 1`.
pub fn difference(f: &SimpleFunction, k: u32, mu: &MeasureTree) -> Result<SimpleFunction> {
    if k == 0 {
        return Err(Error::InvalidInput("martingale differences start at k = 1".into()));
    }
    Ok(expectation(f, k, mu)?.sub(&expectation(f, k - 1, mu)?))
}

/// `D_Q f = (D_{k+1} f) 1_Q` for `Q` of generation `k`, at resolution `k + 1`.
pub fn difference_at(f: &SimpleFunction, q: &CubeId, mu: &MeasureTree) -> Result<SimpleFunction> {
    check(f, mu)?;
    if q.dim() != mu.dim() {
        return Err(Error::DimensionMismatch { expected: mu.dim(), got: q.dim() });
    }
    let g = q.gen();
    if g + 1 > mu.depth() {
        return Err(Error::DepthOverflow { requested: g + 1, available: mu.depth() });
    }
    let mut out = SimpleFunction::zeros(f.dim(), g + 1);
    if g >= f.resolution() {
        return Ok(out);
    }
    let avg = averages(f, mu);
    let k = child_count(f.dim());
    let parent = avg[g as usize][q.idx()];
    for c in 0..k {
        let i = q.idx() * k + c;
        out.values_mut()[i] = avg[g as usize + 1][i] - parent;
    }
    Ok(out)
}

/// Accumulates `Σ_{Q ∋ x, gen(Q) = 1..M} term(Q)` down to the leaves, where
/// `term` receives the generation, index, and the averages of `Q` and its parent.
fn along_chains(f: &SimpleFunction, mu: &MeasureTree, term: impl Fn(u32, usize, f64, f64) -> f64) -> Vec<f64> {
    let avg = averages(f, mu);
    let k = child_count(f.dim());
    let mut cur = vec![0.0];
    for g in 1..=f.resolution() {
        let row = &avg[g as usize];
        let up = &avg[g as usize - 1];
        let mut next = vec![0.0; cubes_at(f.dim(), g)];
        for (i, slot) in next.iter_mut().enumerate() {
            *slot = cur[i / k] + term(g, i, row[i], up[i / k]);
        }
        cur = next;
    }
    cur
}

/// `𝒮f = (Σ_Q |⟨f⟩_Q - ⟨f⟩_{Q̂}|² 1_Q)^{1/2}` over cubes of generation `1..=M`.
pub fn square_function(f: &SimpleFunction, mu: &MeasureTree) -> Result<SimpleFunction> {
    check(f, mu)?;
    let sq = along_chains(f, mu, |_, _, a, p| (a - p) * (a - p));
    SimpleFunction::new(f.dim(), f.resolution(), sq.into_iter().map(f64::sqrt).collect())
}

/// `M_D f(x) = max ⟨|f|⟩_Q` over the cubes containing `x`, root included.
pub fn maximal(f: &SimpleFunction, mu: &MeasureTree) -> Result<SimpleFunction> {
    check(f, mu)?;
    let abs = f.abs();
    let avg = averages(&abs, mu);
    let k = child_count(f.dim());
    let mut cur = avg[0].clone();
    for row in &avg[1..] {
        cur = row.iter().enumerate().map(|(i, &a)| a.max(cur[i / k])).collect();
    }
    SimpleFunction::new(f.dim(), f.resolution(), cur)
}

/// `Tf = Σ_Q α_Q D_Q f` over cubes of generation below the resolution of `f`.
pub fn martingale_transform(alpha: &CubeCoefficients, f: &SimpleFunction, mu: &MeasureTree) -> Result<SimpleFunction> {
    check(f, mu)?;
    let d = f.dim();
    let k = child_count(d);
    let vals = along_chains(f, mu, |g, i, a, p| alpha.at(&CubeId::from_parts(d, g - 1, i / k)) * (a - p));
    SimpleFunction::new(d, f.resolution(), vals)
}

/// The same transform computed as a Haar multiplier: `Σ_Q α_Q Σ_ω ⟨f, h_Q^ω⟩ h_Q^ω`
/// over the full Wilson basis of each cube.
pub fn martingale_transform_haar(
    alpha: &CubeCoefficients,
    f: &SimpleFunction,
    mu: &MeasureTree,
) -> Result<SimpleFunction> {
    check(f, mu)?;
    let d = f.dim();
    let res = f.resolution();
    let mut out = vec![0.0; cubes_at(d, res)];
    for g in 0..res {
        for i in 0..cubes_at(d, g) {
            let q = CubeId::from_parts(d, g, i);
            let a = alpha.at(&q);
            if a == 0.0 {
                continue;
            }
            for h in wilson_basis(mu, &q)? {
                if h.is_zero {
                    continue;
                }
                let c = a * inner_product(f, &h, mu)?;
                let block = 1usize << (d as u32 * (res - g - 1));
                for (j, &v) in h.child_values.iter().enumerate() {
                    let lo = (i * h.child_values.len() + j) * block;
                    out[lo..lo + block].iter_mut().for_each(|x| *x += c * v);
                }
            }
        }
    }
    SimpleFunction::new(d, res, out)
}
