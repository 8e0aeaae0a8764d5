use std::path::Path;

use haarlab::measure::MeasureSpec;
use haarlab::MeasureTree;
use serde::de::DeserializeOwned;

use crate::{CliError, Overrides};

pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("malformed config {}: {e}", path.display())))
}

/// Applies `--depth` to the measure spec and builds it.
pub fn measure(spec: &MeasureSpec, ov: Overrides) -> Result<(MeasureSpec, MeasureTree), CliError> {
    let spec = match ov.depth {
        Some(d) => spec.with_depth(d)?,
        None => spec.clone(),
    };
    let mu = spec.build()?;
    Ok((spec, mu))
}
