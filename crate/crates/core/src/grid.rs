//! Dyadic cubes inside a fixed root cube.
//!
//! A cube is addressed by its generation and integer coordinates. The
//! coordinates are packed into a Morton (bit-interleaved) index: the children
//! of index `i` are `i * 2^d + c` for the row-major child index `c`, and the
//! descendants of a cube at relative depth `s` form one contiguous index block.
//! Per-generation arrays elsewhere in the crate are laid out in this order.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Bits available for the packed index; bounds `dim * gen`.
const INDEX_BITS: u32 = 63;

/// Largest generation representable in dimension `dim`.
pub fn max_generation(dim: usize) -> u32 {
    INDEX_BITS / dim.max(1) as u32
}

/// Number of cubes in generation `gen`.
pub fn cubes_at(dim: usize, gen: u32) -> usize {
    1usize << (dim as u32 * gen)
}

/// Number of children of a cube.
pub fn child_count(dim: usize) -> usize {
    1usize << dim
}

/// Address of a dyadic subcube of the root.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CubeId {
    dim: u8,
    gen: u8,
    index: u64,
}

impl CubeId {
    pub fn root(dim: usize) -> Self {
        assert!((1..=INDEX_BITS as usize).contains(&dim), "dimension {dim} out of range");
        CubeId { dim: dim as u8, gen: 0, index: 0 }
    }

    /// Builds a cube from its coordinates, `0 <= coords[i] < 2^gen`.
    pub fn new(dim: usize, gen: u32, coords: &[u64]) -> Result<Self> {
        check_dim_gen(dim, gen)?;
        if coords.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: coords.len() });
        }
        let side = 1u64 << gen;
        if let Some(c) = coords.iter().find(|&&c| c >= side) {
            return Err(Error::InvalidCube(format!("coordinate {c} out of range for generation {gen}")));
        }
        let mut index = 0u64;
        for level in (0..gen).rev() {
            let mut digit = 0u64;
            for (i, &c) in coords.iter().enumerate() {
                digit |= ((c >> level) & 1) << (dim - 1 - i);
            }
            index = (index << dim) | digit;
        }
        Ok(CubeId { dim: dim as u8, gen: gen as u8, index })
    }

    /// Builds a cube from its packed index.
    pub fn from_index(dim: usize, gen: u32, index: u64) -> Result<Self> {
        check_dim_gen(dim, gen)?;
        if index >= (cubes_at(dim, gen) as u64) {
            return Err(Error::InvalidCube(format!("index {index} out of range for generation {gen}")));
        }
        Ok(CubeId { dim: dim as u8, gen: gen as u8, index })
    }

    pub(crate) fn from_parts(dim: usize, gen: u32, index: usize) -> Self {
        CubeId { dim: dim as u8, gen: gen as u8, index: index as u64 }
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn gen(&self) -> u32 {
        self.gen as u32
    }

    /// Packed (Morton) index within the generation.
    pub fn index(&self) -> u64 {
        self.index
    }

    pub(crate) fn idx(&self) -> usize {
        self.index as usize
    }

    pub fn coords(&self) -> Vec<u64> {
        let d = self.dim();
        let mut coords = vec![0u64; d];
        for level in 0..self.gen() {
            let digit = self.index >> (d as u32 * level);
            for (i, c) in coords.iter_mut().enumerate() {
                *c |= ((digit >> (d - 1 - i)) & 1) << level;
            }
        }
        coords
    }

    /// Position of this cube in row-major order within its generation.
    pub fn row_major_index(&self) -> u64 {
        let side = 1u64 << self.gen;
        self.coords().iter().fold(0u64, |acc, &c| acc * side + c)
    }

    pub fn is_root(&self) -> bool {
        self.gen == 0
    }

    /// The `c`-th child in row-major order.
    pub fn child(&self, c: usize) -> CubeId {
        assert!(c < child_count(self.dim()), "child index {c} out of range");
        assert!(self.gen() < max_generation(self.dim()), "cube {self} is at the representable depth");
        CubeId { dim: self.dim, gen: self.gen + 1, index: (self.index << self.dim) | c as u64 }
    }

    /// The 2^d children in row-major coordinate order.
    pub fn children(&self) -> Vec<CubeId> {
        (0..child_count(self.dim())).map(|c| self.child(c)).collect()
    }

    /// Position of this cube among its parent's children.
    pub fn child_index(&self) -> Option<usize> {
        if self.is_root() {
            None
        } else {
            Some((self.index & ((1u64 << self.dim) - 1)) as usize)
        }
    }

    pub fn parent(&self) -> Option<CubeId> {
        self.ancestor(1).ok()
    }

    /// The `r`-th dyadic ancestor; `ancestor(0)` is the cube itself.
    pub fn ancestor(&self, r: u32) -> Result<CubeId> {
        if r > self.gen() {
            return Err(Error::AboveRoot { cube: self.to_string(), levels: r });
        }
        Ok(CubeId {
            dim: self.dim,
            gen: self.gen - r as u8,
            index: self.index >> (self.dim as u32 * r),
        })
    }

    /// The cubes `R` with `R.ancestor(s) == self`, in row-major order.
    pub fn descendants(&self, s: u32) -> Result<Vec<CubeId>> {
        let gen = self.gen() + s;
        if gen > max_generation(self.dim()) {
            return Err(Error::DepthOverflow { requested: gen, available: max_generation(self.dim()) });
        }
        let d = self.dim as u32;
        let start = self.index << (d * s);
        let mut out: Vec<CubeId> = (0..(1u64 << (d * s)))
            .map(|k| CubeId { dim: self.dim, gen: gen as u8, index: start + k })
            .collect();
        if d > 1 {
            out.sort_by_key(|c| c.coords());
        }
        Ok(out)
    }

    /// Whether `other` is this cube or one of its descendants.
    pub fn contains(&self, other: &CubeId) -> bool {
        other.dim == self.dim
            && other.gen >= self.gen
            && other.index >> (self.dim as u32 * (other.gen - self.gen) as u32) == self.index
    }

    /// +1 for a left child, -1 for a right child (d = 1 only).
    pub fn sibling_sign(&self) -> Result<i8> {
        if self.dim != 1 {
            return Err(Error::DimensionMismatch { expected: 1, got: self.dim() });
        }
        match self.child_index() {
            None => Err(Error::AboveRoot { cube: self.to_string(), levels: 1 }),
            Some(0) => Ok(1),
            Some(_) => Ok(-1),
        }
    }

    /// Lower corner and side length as fractions of the root side.
    pub fn corner_and_side(&self) -> (Vec<f64>, f64) {
        let side = (0.5f64).powi(self.gen() as i32);
        let corner = self.coords().iter().map(|&c| c as f64 * side).collect();
        (corner, side)
    }
}

fn check_dim_gen(dim: usize, gen: u32) -> Result<()> {
    if dim == 0 || dim > INDEX_BITS as usize {
        return Err(Error::InvalidCube(format!("dimension {dim} out of range")));
    }
    if gen > max_generation(dim) {
        return Err(Error::DepthOverflow { requested: gen, available: max_generation(dim) });
    }
    Ok(())
}

impl fmt::Display for CubeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:", self.gen)?;
        for (i, c) in self.coords().iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for CubeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CubeId({self})")
    }
}

impl FromStr for CubeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidCube(format!("cannot parse cube address {s:?}"));
        let (gen, coords) = s.trim().split_once(':').ok_or_else(bad)?;
        let gen: u32 = gen.trim().parse().map_err(|_| bad())?;
        let coords: Vec<u64> = coords
            .split(',')
            .map(|c| c.trim().parse::<u64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad())?;
        CubeId::new(coords.len(), gen, &coords)
    }
}

impl Serialize for CubeId {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for CubeId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Reorders a generation-`gen` array from packed order to row-major order.
pub fn packed_to_row_major<T: Copy>(dim: usize, gen: u32, values: &[T]) -> Vec<T> {
    if dim == 1 {
        return values.to_vec();
    }
    let mut out = values.to_vec();
    for (i, &v) in values.iter().enumerate() {
        let q = CubeId::from_parts(dim, gen, i);
        out[q.row_major_index() as usize] = v;
    }
    out
}

/// Reorders a generation-`gen` array from row-major order to packed order.
pub fn row_major_to_packed<T: Copy>(dim: usize, gen: u32, values: &[T]) -> Vec<T> {
    if dim == 1 {
        return values.to_vec();
    }
    let mut out = values.to_vec();
    for (i, slot) in out.iter_mut().enumerate() {
        let q = CubeId::from_parts(dim, gen, i);
        *slot = values[q.row_major_index() as usize];
    }
    out
}
