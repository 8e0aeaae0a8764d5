use std::collections::BTreeMap;

use super::{check_function, Builder, HaarFunction, HaarSystem, Selector, MASS_FLOOR};
use crate::error::{Error, Result};
use crate::grid::{child_count, CubeId};
use crate::measure::{r2_block, r2_block_generation, MeasureTree};

/// `√m (1_A/μ(A) - 1_B/μ(B))` with `m = μ(A)μ(B)/(μ(A)+μ(B))`, or `None`
/// when either side is null.
fn two_set(masses: &[f64], a: &[usize], b: &[usize]) -> Option<Vec<f64>> {
    let ma: f64 = a.iter().map(|&c| masses[c]).sum();
    let mb: f64 = b.iter().map(|&c| masses[c]).sum();
    if ma < MASS_FLOOR || mb < MASS_FLOOR {
        return None;
    }
    let m = ma * mb / (ma + mb);
    let root = m.sqrt();
    let mut v = vec![0.0; masses.len()];
    for &c in a {
        v[c] = root / ma;
    }
    for &c in b {
        v[c] = -root / mb;
    }
    Some(v)
}

fn identity(k: usize) -> Vec<usize> {
    (0..k).collect()
}

fn check_enumeration(enumeration: &[usize], k: usize) -> Result<()> {
    let mut seen = vec![false; k];
    if enumeration.len() != k {
        return Err(Error::InvalidSpec(format!("enumeration needs {k} entries, got {}", enumeration.len())));
    }
    for &c in enumeration {
        if c >= k || seen[c] {
            return Err(Error::InvalidSpec(format!("enumeration {enumeration:?} is not a permutation of 0..{k}")));
        }
        seen[c] = true;
    }
    Ok(())
}

/// Child values of the `2^d - 1` Wilson functions, built by halving the
/// enumerated children level by level. Function `2^l - 1 + b` splits block
/// `b` of level `l`.
fn wilson_values(masses: &[f64], enumeration: &[usize]) -> Vec<Option<Vec<f64>>> {
    let k = masses.len();
    let mut out = Vec::with_capacity(k - 1);
    let mut size = k;
    while size > 1 {
        for block in enumeration.chunks_exact(size) {
            let (lo, hi) = block.split_at(size / 2);
            out.push(two_set(masses, lo, hi));
        }
        size /= 2;
    }
    out
}

/// Child values of the `2^d - 1` Mitrea functions: function `j` separates the
/// `j`-th enumerated child from the union of the later ones.
fn mitrea_values(masses: &[f64], enumeration: &[usize]) -> Vec<Option<Vec<f64>>> {
    (0..masses.len() - 1).map(|j| two_set(masses, &enumeration[j..=j], &enumeration[j + 1..])).collect()
}

fn to_functions(q: &CubeId, vals: Vec<Option<Vec<f64>>>) -> Vec<HaarFunction> {
    vals.into_iter()
        .map(|v| match v {
            Some(v) => HaarFunction::from_values(*q, v),
            None => HaarFunction::zero(*q),
        })
        .collect()
}

fn child_masses<'a>(mu: &'a MeasureTree, q: &CubeId) -> Result<&'a [f64]> {
    if q.dim() != mu.dim() {
        return Err(Error::DimensionMismatch { expected: mu.dim(), got: q.dim() });
    }
    if q.gen() >= mu.depth() {
        return Err(Error::DepthOverflow { requested: q.gen() + 1, available: mu.depth() });
    }
    let k = child_count(mu.dim());
    Ok(&mu.masses_at(q.gen() + 1)[q.idx() * k..(q.idx() + 1) * k])
}

fn zero_null_children(mut f: HaarFunction, masses: &[f64]) -> HaarFunction {
    for (v, m) in f.child_values.iter_mut().zip(masses) {
        if *m == 0.0 {
            *v = 0.0;
        }
    }
    HaarFunction::from_values(f.cube, f.child_values)
}

/// All `2^d - 1` Wilson functions on `q`, for the grid child order.
pub fn wilson_basis(mu: &MeasureTree, q: &CubeId) -> Result<Vec<HaarFunction>> {
    let masses = child_masses(mu, q)?;
    let fs = to_functions(q, wilson_values(masses, &identity(masses.len())));
    Ok(fs.into_iter().map(|f| zero_null_children(f, masses)).collect())
}

/// All `2^d - 1` Mitrea functions on `q`, for the grid child order.
pub fn mitrea_basis(mu: &MeasureTree, q: &CubeId) -> Result<Vec<HaarFunction>> {
    let masses = child_masses(mu, q)?;
    let fs = to_functions(q, mitrea_values(masses, &identity(masses.len())));
    Ok(fs.into_iter().map(|f| zero_null_children(f, masses)).collect())
}

/// A one-dimensional factor of a tensor-product system.
#[derive(Clone, Copy, Debug)]
pub struct TensorFactor<'a> {
    pub measure: &'a MeasureTree,
    pub system: &'a HaarSystem,
}

/// Basis position of the sign vector `eps` (not all zero): the vector is
/// read as a binary number, first coordinate most significant, minus one.
pub fn tensor_epsilon_index(eps: &[u8]) -> Result<usize> {
    let mask = eps.iter().try_fold(0usize, |acc, &e| match e {
        0 | 1 => Ok(acc * 2 + e as usize),
        _ => Err(Error::InvalidInput(format!("epsilon entries must be 0 or 1, got {eps:?}"))),
    })?;
    if mask == 0 {
        return Err(Error::InvalidInput("epsilon = 0 is not a Haar index".into()));
    }
    Ok(mask - 1)
}

fn check_tensor(mu: &MeasureTree, factors: &[TensorFactor]) -> Result<()> {
    let d = mu.dim();
    if factors.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: factors.len() });
    }
    for f in factors {
        if f.measure.dim() != 1 || f.system.dim() != 1 {
            return Err(Error::InvalidSpec("tensor factors must be one-dimensional".into()));
        }
        if f.measure.depth() != mu.depth() || f.system.depth() != mu.depth() {
            return Err(Error::DepthOverflow { requested: mu.depth(), available: f.measure.depth().min(f.system.depth()) });
        }
        if !f.system.is_cancellative() {
            return Err(Error::NonCancellative);
        }
    }
    let n = mu.depth();
    for (i, &m) in mu.masses_at(n).iter().enumerate() {
        let q = CubeId::from_parts(d, n, i);
        let coords = q.coords();
        let product: f64 = factors
            .iter()
            .zip(&coords)
            .map(|(f, &c)| f.measure.masses_at(n)[c as usize])
            .product();
        if (m - product).abs() > 1e-12 * m.abs().max(product.abs()) {
            return Err(Error::NonProductMeasure(q.to_string()));
        }
    }
    Ok(())
}

/// Values of the tensor function `φ_Q^ε` (mask `eps_mask`, first coordinate
/// in the highest bit), or `None` when a factor vanishes.
fn tensor_values(factors: &[TensorFactor], gen: u32, coords: &[u64], eps_mask: usize) -> Option<Vec<f64>> {
    let d = factors.len();
    let k = 1usize << d;
    let mut per_coord: Vec<[f64; 2]> = Vec::with_capacity(d);
    for (j, (f, &c)) in factors.iter().zip(coords).enumerate() {
        let eps = (eps_mask >> (d - 1 - j)) & 1;
        if eps == 1 {
            if f.system.is_zero_at(gen, c as usize) {
                return None;
            }
            let v = f.system.values_at(gen, c as usize);
            per_coord.push([v[0], v[1]]);
        } else {
            let m = f.measure.masses_at(gen)[c as usize];
            if m < MASS_FLOOR {
                return None;
            }
            let v = 1.0 / m.sqrt();
            per_coord.push([v, v]);
        }
    }
    Some(
        (0..k)
            .map(|c| (0..d).map(|j| per_coord[j][(c >> (d - 1 - j)) & 1]).product())
            .collect(),
    )
}

/// All `2^d - 1` tensor functions on `q`, indexed as in [`tensor_epsilon_index`].
pub fn tensor_basis(mu: &MeasureTree, factors: &[TensorFactor], q: &CubeId) -> Result<Vec<HaarFunction>> {
    check_tensor(mu, factors)?;
    let masses = child_masses(mu, q)?;
    let coords = q.coords();
    let vals = (1..masses.len()).map(|e| tensor_values(factors, q.gen(), &coords, e)).collect();
    Ok(to_functions(q, vals).into_iter().map(|f| zero_null_children(f, masses)).collect())
}

impl HaarSystem {
    /// `h_I = √m(I) (1_{I-}/μ(I-) - 1_{I+}/μ(I+))`, zero when a child is null.
    pub fn canonical_1d(mu: &MeasureTree) -> Result<Self> {
        if mu.dim() != 1 {
            return Err(Error::DimensionMismatch { expected: 1, got: mu.dim() });
        }
        Self::assemble(mu, Builder::Canonical1d, true, None, |_, m| Ok(two_set(m, &[0], &[1])))
    }

    pub fn wilson(mu: &MeasureTree, selector: &Selector) -> Result<Self> {
        Self::wilson_enumerated(mu, selector, &identity(child_count(mu.dim())))
    }

    /// Wilson system for a custom child enumeration.
    pub fn wilson_enumerated(mu: &MeasureTree, selector: &Selector, enumeration: &[usize]) -> Result<Self> {
        check_enumeration(enumeration, child_count(mu.dim()))?;
        Self::assemble(mu, Builder::Wilson, true, Some(selector.clone()), |q, m| {
            let j = selector.pick(&q, m.len() - 1)?;
            Ok(wilson_values(m, enumeration).swap_remove(j))
        })
    }

    pub fn mitrea(mu: &MeasureTree, selector: &Selector) -> Result<Self> {
        Self::mitrea_enumerated(mu, selector, &identity(child_count(mu.dim())))
    }

    pub fn mitrea_enumerated(mu: &MeasureTree, selector: &Selector, enumeration: &[usize]) -> Result<Self> {
        check_enumeration(enumeration, child_count(mu.dim()))?;
        Self::assemble(mu, Builder::Mitrea, true, Some(selector.clone()), |q, m| {
            let j = selector.pick(&q, m.len() - 1)?;
            Ok(mitrea_values(m, enumeration).swap_remove(j))
        })
    }

    /// Tensor products `φ_Q^ε = ∏_j φ_{j,I_j}^{ε_j}` with `φ^0_{j,I} = 1_I/√μ_j(I)`.
    /// `mu` must equal the product of the factor measures.
    pub fn tensor(mu: &MeasureTree, factors: &[TensorFactor], selector: &Selector) -> Result<Self> {
        check_tensor(mu, factors)?;
        Self::assemble(mu, Builder::Tensor, true, Some(selector.clone()), |q, m| {
            let j = selector.pick(&q, m.len() - 1)?;
            Ok(tensor_values(factors, q.gen(), &q.coords(), j + 1))
        })
    }

    /// The non-cancellative system `1_Q/√μ(Q)`.
    pub fn indicator(mu: &MeasureTree) -> Result<Self> {
        Self::assemble(mu, Builder::Indicator, false, None, |_, m| {
            let total: f64 = m.iter().sum();
            if total < MASS_FLOOR {
                return Ok(None);
            }
            Ok(Some(vec![1.0 / total.sqrt(); m.len()]))
        })
    }

    /// A system given by explicit child values. Cubes not listed take their
    /// function from `base`, or are zero. Every listed function is validated.
    pub fn custom(
        mu: &MeasureTree,
        functions: &BTreeMap<CubeId, Vec<f64>>,
        cancellative: bool,
        base: Option<&HaarSystem>,
    ) -> Result<Self> {
        for q in functions.keys() {
            if q.dim() != mu.dim() {
                return Err(Error::DimensionMismatch { expected: mu.dim(), got: q.dim() });
            }
            if q.gen() >= mu.depth() {
                return Err(Error::DepthOverflow { requested: q.gen() + 1, available: mu.depth() });
            }
            check_function(q, &functions[q], child_masses(mu, q)?, cancellative)?;
        }
        if let Some(b) = base {
            if b.dim() != mu.dim() || b.depth() < mu.depth() {
                return Err(Error::InvalidSpec("base system does not cover the measure".into()));
            }
            if cancellative && !b.is_cancellative() {
                return Err(Error::NonCancellative);
            }
        }
        Self::assemble(mu, Builder::Custom, cancellative, None, |q, _| {
            Ok(match functions.get(&q) {
                Some(v) => Some(v.clone()),
                None => base.map(|b| b.values_at(q.gen(), q.idx()).to_vec()),
            })
        })
    }

    /// The system on the block measure of [`MeasureTree::r2_nonstandard`]:
    /// on each block `Q_k`, `(k/2)(1_{Q_k^1} - 1_{Q_k^2}) + c_k(1_{Q_k^3} - 1_{Q_k^4})`
    /// with `c_k = √(k²/(2(k²-2)))`; Wilson functions (first index) elsewhere.
    pub fn r2_nonstandard(mu: &MeasureTree, k_max: u32) -> Result<Self> {
        if mu.dim() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, got: mu.dim() });
        }
        if mu.depth() <= r2_block_generation(k_max) {
            return Err(Error::DepthOverflow { requested: r2_block_generation(k_max) + 1, available: mu.depth() });
        }
        let base = Self::wilson(mu, &Selector::Fixed(0))?;
        let mut functions = BTreeMap::new();
        for k in 2..=k_max {
            let kf = k as f64;
            let c = (kf * kf / (2.0 * (kf * kf - 2.0))).sqrt();
            functions.insert(r2_block(k_max, k)?, vec![kf / 2.0, -kf / 2.0, c, -c]);
        }
        let mut sys = Self::custom(mu, &functions, true, Some(&base))?;
        sys.builder = Builder::R2Nonstandard;
        Ok(sys)
    }
}
