use haarlab::measure::MeasureSpec;
use haarlab::ops::{weak11_estimate, BatterySpec, Family, OperatorSpec, TestInput, Weak11Report};
use haarlab::MeasureTree;
use serde::{Deserialize, Serialize};

use crate::config;
use crate::report::{float, opt_float, Bundle, Meta, Table};
use crate::{CliError, Overrides};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Weak11Config {
    pub measure: MeasureSpec,
    pub operators: Vec<OperatorSpec>,
    pub battery: BatterySpec,
}

pub const HEADER: [&str; 11] = [
    "operator_index",
    "operator",
    "status",
    "gen",
    "cube",
    "max_ratio",
    "tests",
    "witness_family",
    "witness_cube",
    "ceiling",
    "below_ceiling",
];

pub fn family_name(f: Family) -> String {
    serde_json::to_value(f).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
}

/// Appends the series (or the per-cube maxima, for explicit cube lists) of
/// one report. Returns whether the measured maximum stays below the ceiling.
pub fn push_report(table: &mut Table, index: usize, rep: &Weak11Report) -> bool {
    let below = rep.ceiling.is_none_or(|c| rep.max_ratio < c);
    let witness = |w: &TestInput| [family_name(w.family), w.cube.to_string()];
    let tail = |t: &mut Vec<String>| {
        t.push(opt_float(rep.ceiling));
        t.push(rep.ceiling.map(|_| below.to_string()).unwrap_or_default());
    };
    let status = if rep.skipped > 0 { format!("ok ({} inputs skipped: depth overflow)", rep.skipped) } else { "ok".into() };
    if rep.per_cube.is_empty() {
        for s in &rep.series {
            let mut row = vec![index.to_string(), rep.operator.clone(), status.clone(), s.gen.to_string(), String::new()];
            row.extend([float(s.max_ratio), s.count.to_string()]);
            row.extend(witness(&s.witness));
            tail(&mut row);
            table.push(row);
        }
    } else {
        for c in &rep.per_cube {
            let mut row =
                vec![index.to_string(), rep.operator.clone(), status.clone(), c.cube.gen().to_string(), c.cube.to_string()];
            row.extend([float(c.max_ratio), String::new()]);
            row.extend(witness(&c.witness));
            tail(&mut row);
            table.push(row);
        }
    }
    below
}

fn push_error(table: &mut Table, index: usize, name: &str, err: &haarlab::Error) {
    let mut row = vec![index.to_string(), name.to_string(), format!("error: {err}")];
    row.resize(HEADER.len(), String::new());
    table.push(row);
}

fn op_name(spec: &OperatorSpec) -> String {
    serde_json::to_value(spec).ok().and_then(|v| v.get("op").and_then(|o| o.as_str()).map(String::from)).unwrap_or_default()
}

pub fn run(cfg: &Weak11Config, ov: Overrides) -> Result<Bundle, CliError> {
    let (spec, mu): (MeasureSpec, MeasureTree) = config::measure(&cfg.measure, ov)?;
    let mut battery = cfg.battery.clone();
    if let Some(seed) = ov.seed {
        battery.seed = seed;
    }
    let mut table = Table::new("weak11", &HEADER);
    let mut pass = true;
    for (i, op_spec) in cfg.operators.iter().enumerate() {
        // Configuration errors abort; errors while running are reported per operator.
        let op = op_spec.build(&mu, Some(&spec))?;
        match weak11_estimate(&op, &mu, &battery) {
            Ok(rep) => pass &= push_report(&mut table, i, &rep),
            Err(e @ haarlab::Error::DepthOverflow { .. }) => push_error(&mut table, i, &op_name(op_spec), &e),
            Err(e) => return Err(e.into()),
        }
    }
    let effective = Weak11Config { measure: spec, operators: cfg.operators.clone(), battery };
    let meta = Meta::new("weak11", &effective, effective.battery.seed, mu.depth());
    Ok(Bundle { meta, tables: vec![table], pass, study: None })
}
