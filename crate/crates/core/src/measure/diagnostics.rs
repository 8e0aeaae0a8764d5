use serde::Serialize;

use super::MeasureTree;
use crate::error::{Error, Result};
use crate::grid::child_count;

/// Per-generation measure constants. Ratios are taken over the cubes of this
/// generation (as the smaller cube `I`, compared with its parent).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GenerationDiagnostics {
    pub gen: u32,
    /// max m(I)/m(parent) over nonzero m-values (d = 1 only).
    pub c_inc: Option<f64>,
    /// max m(parent)/m(I) over nonzero m-values (d = 1 only).
    pub c_dec: Option<f64>,
    /// max mu(parent)/mu(I) over mu(I) > 0.
    pub c_doub: Option<f64>,
    /// Some cube of this generation has zero mass inside a parent of positive mass.
    pub degenerate: bool,
    /// max mu(Q)/|Q|^t for each requested exponent t.
    pub growth: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiagnosticsReport {
    pub upto_gen: u32,
    pub exponents: Vec<f64>,
    pub c_inc: Option<f64>,
    pub c_dec: Option<f64>,
    pub c_doub: Option<f64>,
    pub degenerate: bool,
    pub generations: Vec<GenerationDiagnostics>,
}

fn max_opt(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.max(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

/// m-monotonicity, doubling and growth constants for generations `0..=upto_gen`.
pub fn diagnostics(mu: &MeasureTree, upto_gen: u32, exponents: &[f64]) -> Result<DiagnosticsReport> {
    if upto_gen >= mu.depth() {
        return Err(Error::DepthOverflow { requested: upto_gen + 1, available: mu.depth() });
    }
    let k = child_count(mu.dim());
    let mut generations = Vec::with_capacity(upto_gen as usize + 1);
    for g in 0..=upto_gen {
        let masses = mu.masses_at(g);
        let mut row = GenerationDiagnostics {
            gen: g,
            c_inc: None,
            c_dec: None,
            c_doub: None,
            degenerate: false,
            growth: Vec::with_capacity(exponents.len()),
        };
        if g >= 1 {
            let parents = mu.masses_at(g - 1);
            for (i, &m) in masses.iter().enumerate() {
                let p = parents[i / k];
                if m > 0.0 {
                    row.c_doub = max_opt(row.c_doub, Some(p / m));
                } else if p > 0.0 {
                    row.degenerate = true;
                }
                if mu.dim() == 1 {
                    let mi = mu.m_at(g, i);
                    let mp = mu.m_at(g - 1, i / 2);
                    if mi > 0.0 && mp > 0.0 {
                        row.c_inc = max_opt(row.c_inc, Some(mi / mp));
                        row.c_dec = max_opt(row.c_dec, Some(mp / mi));
                    }
                }
            }
        }
        let vol = mu.volume(g);
        for &t in exponents {
            let denom = vol.powf(t);
            let best = masses.iter().fold(0.0f64, |acc, &m| acc.max(m / denom));
            row.growth.push(best);
        }
        generations.push(row);
    }
    let mut report = DiagnosticsReport {
        upto_gen,
        exponents: exponents.to_vec(),
        c_inc: None,
        c_dec: None,
        c_doub: None,
        degenerate: false,
        generations: Vec::new(),
    };
    for row in &generations {
        report.c_inc = max_opt(report.c_inc, row.c_inc);
        report.c_dec = max_opt(report.c_dec, row.c_dec);
        report.c_doub = max_opt(report.c_doub, row.c_doub);
        report.degenerate |= row.degenerate;
    }
    report.generations = generations;
    Ok(report)
}
