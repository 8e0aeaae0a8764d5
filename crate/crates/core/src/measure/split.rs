use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sequence `b_k` defining a split measure; `a_k = 1 - b_k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitFormula {
    /// `b_1, ..., b_L` given explicitly.
    ExplicitList(Vec<f64>),
    /// `b_k = 1/k`.
    A,
    /// `b_k = 2^(-k^2)`.
    B,
    /// `b_k = 1/(2(k - f(n-1)))` for `f(n-1) < k <= f(n)`, `f(n) = n(n+1)/2`.
    C,
    /// `b_2 = b_3 = 1/2`, `b_{2k} = 1/k`, `b_{2k+1} = 1 - 1/k` for `k >= 2`.
    D,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitSequenceSpec {
    pub formula: SplitFormula,
    pub depth: u32,
}

impl SplitSequenceSpec {
    pub fn new(formula: SplitFormula, depth: u32) -> Self {
        SplitSequenceSpec { formula, depth }
    }

    /// `b_k` for `k >= 1`; `b_1 = 1/2` for every formula.
    pub fn b(&self, k: u32) -> f64 {
        assert!(k >= 1, "b_k is indexed from k = 1");
        if k == 1 {
            return match &self.formula {
                SplitFormula::ExplicitList(list) => list.first().copied().unwrap_or(f64::NAN),
                _ => 0.5,
            };
        }
        let kf = k as f64;
        match &self.formula {
            SplitFormula::ExplicitList(list) => list.get(k as usize - 1).copied().unwrap_or(f64::NAN),
            SplitFormula::A => 1.0 / kf,
            SplitFormula::B => (-((k * k) as f64)).exp2(),
            SplitFormula::C => {
                let mut n = 1u32;
                while n * (n + 1) / 2 < k {
                    n += 1;
                }
                let prev = (n - 1) * n / 2;
                1.0 / (2.0 * (k - prev) as f64)
            }
            SplitFormula::D => match k {
                2 | 3 => 0.5,
                _ if k.is_multiple_of(2) => 1.0 / (k / 2) as f64,
                _ => 1.0 - 1.0 / ((k - 1) / 2) as f64,
            },
        }
    }

    pub fn a(&self, k: u32) -> f64 {
        1.0 - self.b(k)
    }

    /// `b_1, ..., b_N` after validation.
    pub fn b_values(&self) -> Result<Vec<f64>> {
        if let SplitFormula::ExplicitList(list) = &self.formula {
            if list.len() < self.depth as usize {
                return Err(Error::InvalidSplit(format!(
                    "explicit list has {} entries but depth is {}",
                    list.len(),
                    self.depth
                )));
            }
        }
        if self.depth > crate::grid::max_generation(1) {
            return Err(Error::InvalidSplit(format!("depth {} is not representable", self.depth)));
        }
        let b: Vec<f64> = (1..=self.depth).map(|k| self.b(k)).collect();
        if let Some(&b1) = b.first() {
            if b1 != 0.5 {
                return Err(Error::InvalidSplit(format!("a_1 must be 1/2, got b_1 = {b1}")));
            }
        }
        for (i, &bk) in b.iter().enumerate() {
            if !(bk > 0.0 && bk < 1.0) {
                return Err(Error::InvalidSplit(format!("b_{} = {bk} is outside (0, 1)", i + 1)));
            }
        }
        Ok(b)
    }
}
