use haarlab::measure::{diagnostics, DiagnosticsReport, MeasureSpec};
use haarlab::MeasureTree;
use serde::{Deserialize, Serialize};

use crate::config;
use crate::report::{float, opt_float, Bundle, Meta, Table};
use crate::{CliError, Overrides};

fn unit_exponent() -> Vec<f64> {
    vec![1.0]
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureConfig {
    pub measure: MeasureSpec,
    /// Last generation reported; the measure depth minus one by default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upto_gen: Option<u32>,
    /// Exponents `t` of the growth profiles `max μ(Q)/|Q|^t`.
    #[serde(default = "unit_exponent")]
    pub exponents: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
}

/// The per-generation diagnostics table shared with the studies.
pub fn diagnostics_table(name: &str, mu: &MeasureTree, rep: &DiagnosticsReport) -> Table {
    let mut header =
        vec!["gen", "positive_cubes", "min_positive_mass", "max_mass", "c_inc", "c_dec", "c_doub", "degenerate"]
            .into_iter()
            .map(String::from)
            .collect::<Vec<_>>();
    header.extend(rep.exponents.iter().map(|t| format!("growth_t{t}")));
    let mut table = Table { name: name.into(), header, rows: Vec::new(), notes: Vec::new() };
    table.note("c_inc", opt_float(rep.c_inc));
    table.note("c_dec", opt_float(rep.c_dec));
    table.note("c_doub", opt_float(rep.c_doub));
    table.note("degenerate", rep.degenerate);
    for g in &rep.generations {
        let masses = mu.masses_at(g.gen);
        let positive: Vec<f64> = masses.iter().copied().filter(|&m| m > 0.0).collect();
        let mut row = vec![
            g.gen.to_string(),
            positive.len().to_string(),
            float(positive.iter().copied().fold(f64::INFINITY, f64::min)),
            float(masses.iter().copied().fold(0.0, f64::max)),
            opt_float(g.c_inc),
            opt_float(g.c_dec),
            opt_float(g.c_doub),
            g.degenerate.to_string(),
        ];
        row.extend(g.growth.iter().copied().map(float));
        table.push(row);
    }
    table
}

pub fn run(cfg: &MeasureConfig, ov: Overrides) -> Result<Bundle, CliError> {
    let (spec, mu) = config::measure(&cfg.measure, ov)?;
    let upto = cfg.upto_gen.unwrap_or(mu.depth().saturating_sub(1)).min(mu.depth());
    let rep = diagnostics(&mu, upto, &cfg.exponents)?;
    let effective = MeasureConfig { measure: spec, seed: ov.seed.unwrap_or(cfg.seed), ..cfg.clone() };
    let meta = Meta::new("measure", &effective, effective.seed, mu.depth());
    Ok(Bundle { meta, tables: vec![diagnostics_table("measure", &mu, &rep)], pass: true, study: None })
}
