//! Finite-depth dyadic measures.
//!
//! Masses are stored densely for every cube down to the depth `N`. Builders
//! compute leaf masses and sum upward, so each parent mass is the floating
//! point sum of its children's masses.

mod diagnostics;
mod spec;
mod split;

pub use diagnostics::{diagnostics, DiagnosticsReport, GenerationDiagnostics};
pub use spec::MeasureSpec;
pub use split::{SplitFormula, SplitSequenceSpec};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{child_count, cubes_at, max_generation, packed_to_row_major, row_major_to_packed, CubeId};

/// Nonnegative masses on every dyadic cube of generation at most `depth`.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasureTree {
    dim: usize,
    depth: u32,
    root_volume: f64,
    masses: Vec<Vec<f64>>,
}

impl MeasureTree {
    /// Builds a measure from leaf masses given in packed cube order.
    pub fn from_packed_leaves(dim: usize, depth: u32, root_volume: f64, leaves: Vec<f64>) -> Result<Self> {
        if dim == 0 || depth > max_generation(dim) {
            return Err(Error::InvalidMeasure(format!("dimension {dim} with depth {depth} is not representable")));
        }
        if !(root_volume.is_finite() && root_volume > 0.0) {
            return Err(Error::InvalidMeasure(format!("root volume must be positive, got {root_volume}")));
        }
        if leaves.len() != cubes_at(dim, depth) {
            return Err(Error::InvalidMeasure(format!(
                "expected {} leaf masses, got {}",
                cubes_at(dim, depth),
                leaves.len()
            )));
        }
        if let Some(bad) = leaves.iter().find(|m| !(m.is_finite() && **m >= 0.0)) {
            return Err(Error::InvalidMeasure(format!("leaf mass {bad} is not a finite nonnegative number")));
        }
        let k = child_count(dim);
        let mut masses = vec![leaves];
        for _ in 0..depth {
            let below = masses.last().unwrap();
            let above: Vec<f64> = below.chunks_exact(k).map(|c| c.iter().sum()).collect();
            masses.push(above);
        }
        masses.reverse();
        Ok(MeasureTree { dim, depth, root_volume, masses })
    }

    /// Builds a measure from leaf masses given in row-major order.
    pub fn from_row_major_leaves(dim: usize, depth: u32, root_volume: f64, leaves: &[f64]) -> Result<Self> {
        if leaves.len() != cubes_at(dim, depth.min(max_generation(dim))) {
            return Err(Error::InvalidMeasure(format!("wrong number of leaf masses: {}", leaves.len())));
        }
        Self::from_packed_leaves(dim, depth, root_volume, row_major_to_packed(dim, depth, leaves))
    }

    /// Lebesgue measure on the unit cube.
    pub fn lebesgue(dim: usize, depth: u32) -> Result<Self> {
        let n = cubes_at(dim, depth.min(max_generation(dim)));
        let leaf = (0.5f64).powi((dim as u32 * depth) as i32);
        Self::from_packed_leaves(dim, depth, 1.0, vec![leaf; n])
    }

    /// The split measure on `[0,1)` defined by a sequence `b_k`.
    pub fn split(spec: &SplitSequenceSpec) -> Result<Self> {
        let n = spec.depth;
        let b = spec.b_values()?;
        let mut leaves = vec![0.0; cubes_at(1, n)];
        let mut chain = 1.0f64;
        for k in 1..=n {
            let bk = b[k as usize - 1];
            let ak = 1.0 - bk;
            let side_mass = bk * chain;
            chain *= ak;
            // I_k^b = [2^-k, 2^-k+1) holds leaves [2^(n-k), 2^(n-k+1)), uniform below.
            let lo = 1usize << (n - k);
            let per_leaf = side_mass * (0.5f64).powi((n - k) as i32);
            leaves[lo..2 * lo].iter_mut().for_each(|m| *m = per_leaf);
        }
        leaves[0] = chain;
        Self::from_packed_leaves(1, n, 1.0, leaves)
    }

    /// The planar measure with the blocks `Q_k = [k,k+1)^2`, `2 <= k <= k_max`.
    ///
    /// The root is `[0, L)^2` with `L` the least power of two above `k_max`, so each
    /// `Q_k` is a dyadic cube of generation `log2 L`. Masses are in units where each
    /// `Q_k` and every unit square off the blocks has mass 1; the root volume is `L^2`.
    pub fn r2_nonstandard(k_max: u32, depth: u32) -> Result<Self> {
        if k_max < 2 {
            return Err(Error::InvalidMeasure(format!("k_max must be at least 2, got {k_max}")));
        }
        let p = r2_block_generation(k_max);
        if depth < p + 1 {
            return Err(Error::InvalidMeasure(format!(
                "depth {depth} does not resolve the children of the blocks (need at least {})",
                p + 1
            )));
        }
        if depth > max_generation(2) {
            return Err(Error::InvalidMeasure(format!("depth {depth} is not representable in dimension 2")));
        }
        let side = (1u64 << p) as f64;
        let leaf_volume = (side * (0.5f64).powi(depth as i32)).powi(2);
        let below_child = (0.25f64).powi((depth - p - 1) as i32);
        let n = cubes_at(2, depth);
        let mut leaves = vec![leaf_volume; n];
        for (i, m) in leaves.iter_mut().enumerate() {
            let leaf = CubeId::from_parts(2, depth, i);
            let unit = leaf.ancestor(depth - p).unwrap().coords();
            let k = unit[0];
            if unit[1] == k && (2..=k_max as u64).contains(&k) {
                let c = leaf.ancestor(depth - p - 1).unwrap().child_index().unwrap();
                *m = r2_child_masses(k as u32)[c] * below_child;
            }
        }
        Self::from_packed_leaves(2, depth, side * side, leaves)
    }

    /// Product of measures; masses are products of the factor masses.
    pub fn product(factors: &[MeasureTree]) -> Result<Self> {
        let first = factors.first().ok_or_else(|| Error::InvalidMeasure("product of no factors".into()))?;
        let depth = first.depth;
        if let Some(f) = factors.iter().find(|f| f.depth != depth) {
            return Err(Error::InvalidMeasure(format!("factor depths differ: {} vs {}", depth, f.depth)));
        }
        let dims: Vec<usize> = factors.iter().map(|f| f.dim).collect();
        let dim: usize = dims.iter().sum();
        if depth > max_generation(dim) {
            return Err(Error::InvalidMeasure(format!("depth {depth} is not representable in dimension {dim}")));
        }
        let n = cubes_at(dim, depth);
        let mut leaves = vec![0.0; n];
        for (i, m) in leaves.iter_mut().enumerate() {
            let coords = CubeId::from_parts(dim, depth, i).coords();
            let mut offset = 0;
            let mut mass = 1.0;
            for f in factors {
                let q = CubeId::new(f.dim, depth, &coords[offset..offset + f.dim]).unwrap();
                mass *= f.mass(&q);
                offset += f.dim;
            }
            *m = mass;
        }
        let volume = factors.iter().map(|f| f.root_volume).product();
        Self::from_packed_leaves(dim, depth, volume, leaves)
    }

    /// A seeded random measure.
    ///
    /// Each cube splits its mass among its children with random weights drawn as
    /// `u^skew`; with probability `zero_fraction` a child receives no mass (at
    /// least one child of each cube keeps positive mass).
    pub fn random(dim: usize, depth: u32, seed: u64, zero_fraction: f64) -> Result<Self> {
        if dim == 0 || depth > max_generation(dim) || cubes_at(dim, depth) > 1 << 24 {
            return Err(Error::InvalidMeasure(format!("random measure too large: dim {dim}, depth {depth}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let skew: f64 = rng.random_range(1.0..4.0);
        let k = child_count(dim);
        let mut level = vec![1.0f64];
        for _ in 0..depth {
            let mut next = Vec::with_capacity(level.len() * k);
            for &m in &level {
                let mut w: Vec<f64> = (0..k).map(|_| rng.random_range(0.02f64..1.0).powf(skew)).collect();
                for x in w.iter_mut() {
                    if rng.random::<f64>() < zero_fraction {
                        *x = 0.0;
                    }
                }
                if w.iter().all(|&x| x == 0.0) {
                    let c = rng.random_range(0..k);
                    w[c] = 1.0;
                }
                let total: f64 = w.iter().sum();
                next.extend(w.iter().map(|x| m * x / total));
            }
            level = next;
        }
        Self::from_packed_leaves(dim, depth, 1.0, level)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn root_volume(&self) -> f64 {
        self.root_volume
    }

    pub fn total_mass(&self) -> f64 {
        self.masses[0][0]
    }

    pub fn mass(&self, q: &CubeId) -> f64 {
        assert_eq!(q.dim(), self.dim, "cube dimension does not match the measure");
        assert!(q.gen() <= self.depth, "cube {q} is below the measure depth");
        self.masses[q.gen() as usize][q.idx()]
    }

    /// Masses of generation `gen` in packed order.
    pub fn masses_at(&self, gen: u32) -> &[f64] {
        &self.masses[gen as usize]
    }

    /// Leaf masses in row-major order.
    pub fn leaf_masses_row_major(&self) -> Vec<f64> {
        packed_to_row_major(self.dim, self.depth, &self.masses[self.depth as usize])
    }

    /// Lebesgue volume of a cube of generation `gen`.
    pub fn volume(&self, gen: u32) -> f64 {
        self.root_volume * (0.5f64).powi((self.dim as u32 * gen) as i32)
    }

    /// `m(I) = mu(I_-) mu(I_+) / mu(I)`, zero when `mu(I) = 0` (d = 1).
    pub fn m_value(&self, q: &CubeId) -> Result<f64> {
        if self.dim != 1 {
            return Err(Error::DimensionMismatch { expected: 1, got: self.dim });
        }
        if q.gen() >= self.depth {
            return Err(Error::DepthOverflow { requested: q.gen() + 1, available: self.depth });
        }
        Ok(self.m_at(q.gen(), q.idx()))
    }

    pub(crate) fn m_at(&self, gen: u32, idx: usize) -> f64 {
        let total = self.masses[gen as usize][idx];
        if total == 0.0 {
            return 0.0;
        }
        let kids = &self.masses[gen as usize + 1];
        kids[2 * idx] * kids[2 * idx + 1] / total
    }

    /// Largest relative additivity defect over all parents.
    pub fn additivity_defect(&self) -> f64 {
        let k = child_count(self.dim);
        let mut worst = 0.0f64;
        for g in 0..self.depth as usize {
            for (i, &m) in self.masses[g].iter().enumerate() {
                let s: f64 = self.masses[g + 1][i * k..(i + 1) * k].iter().sum();
                let scale = m.abs().max(s.abs());
                if scale > 0.0 {
                    worst = worst.max((m - s).abs() / scale);
                }
            }
        }
        worst
    }

    /// The same measure restricted to generations `<= depth`.
    pub fn truncated(&self, depth: u32) -> Result<Self> {
        if depth > self.depth {
            return Err(Error::DepthOverflow { requested: depth, available: self.depth });
        }
        Ok(MeasureTree {
            dim: self.dim,
            depth,
            root_volume: self.root_volume,
            masses: self.masses[..=depth as usize].to_vec(),
        })
    }
}

/// Generation at which the unit squares live for `r2_nonstandard(k_max, _)`.
pub fn r2_block_generation(k_max: u32) -> u32 {
    let mut p = 0;
    while (1u64 << p) < k_max as u64 + 1 {
        p += 1;
    }
    p
}

/// The block `Q_k` of `r2_nonstandard`.
pub fn r2_block(k_max: u32, k: u32) -> Result<CubeId> {
    if !(2..=k_max).contains(&k) {
        return Err(Error::InvalidInput(format!("block index {k} outside 2..={k_max}")));
    }
    CubeId::new(2, r2_block_generation(k_max), &[k as u64, k as u64])
}

/// Child masses of `Q_k` in grid order.
pub fn r2_child_masses(k: u32) -> [f64; 4] {
    let k2 = (k as f64) * (k as f64);
    let small = 1.0 / k2;
    let large = (k2 - 2.0) / (2.0 * k2);
    [small, small, large, large]
}
