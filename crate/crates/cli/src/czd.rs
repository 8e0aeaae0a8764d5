use haarlab::czd::{decompose, verify, VerificationReport};
use haarlab::func::{lp_norm, FunctionSpec};
use haarlab::measure::MeasureSpec;
use haarlab::{MeasureTree, SimpleFunction};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config;
use crate::report::{float, Bundle, Meta, Table};
use crate::{CliError, Overrides};

fn default_p() -> Vec<f64> {
    vec![1.0, 2.0, 3.0]
}

fn one() -> f64 {
    1.0
}

fn ten() -> f64 {
    10.0
}

fn one_count() -> usize {
    1
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionSource {
    /// Leaf values in row-major order.
    Explicit {
        resolution: u32,
        values: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dim: Option<usize>,
    },
    /// `count` functions at `resolution`; each leaf is nonzero with
    /// probability `density`, uniform in `[-amplitude, amplitude)`.
    Random {
        resolution: u32,
        #[serde(default = "one")]
        density: f64,
        #[serde(default = "ten")]
        amplitude: f64,
        #[serde(default = "one_count")]
        count: usize,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CzdCase {
    pub function: FunctionSource,
    /// Absolute thresholds.
    #[serde(default)]
    pub lambda: Vec<f64>,
    /// Thresholds as multiples of `⟨|f|⟩` over the root.
    #[serde(default)]
    pub lambda_factors: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CzdConfig {
    pub measure: MeasureSpec,
    pub cases: Vec<CzdCase>,
    /// Exponents of the good-part bounds.
    #[serde(default = "default_p")]
    pub p: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
}

struct Job {
    case: usize,
    instance: usize,
    f: SimpleFunction,
    lambda: f64,
}

fn functions(src: &FunctionSource, mu: &MeasureTree, rng: &mut ChaCha8Rng) -> Result<Vec<SimpleFunction>, CliError> {
    match src {
        FunctionSource::Explicit { resolution, values, dim } => {
            let f = FunctionSpec { resolution: *resolution, values: values.clone(), dim: *dim }.build()?;
            if f.dim() != mu.dim() {
                return Err(CliError::Usage(format!("function has dimension {}, measure has {}", f.dim(), mu.dim())));
            }
            Ok(vec![f])
        }
        FunctionSource::Random { resolution, density, amplitude, count } => {
            if *resolution > mu.depth() || !(0.0..=1.0).contains(density) || amplitude.is_nan() || *amplitude <= 0.0 {
                return Err(CliError::Usage(format!(
                    "random function needs resolution <= {}, density in [0, 1] and positive amplitude",
                    mu.depth()
                )));
            }
            let n = haarlab::grid::cubes_at(mu.dim(), *resolution);
            Ok((0..*count)
                .map(|_| {
                    let vals = (0..n)
                        .map(|_| if rng.random_bool(*density) { rng.random_range(-amplitude..*amplitude) } else { 0.0 })
                        .collect();
                    SimpleFunction::new(mu.dim(), *resolution, vals).expect("sized to the grid")
                })
                .collect())
        }
    }
}

pub fn run(cfg: &CzdConfig, ov: Overrides) -> Result<Bundle, CliError> {
    let (spec, mu) = config::measure(&cfg.measure, ov)?;
    let seed = ov.seed.unwrap_or(cfg.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut jobs = Vec::new();
    for (case, c) in cfg.cases.iter().enumerate() {
        for (instance, f) in functions(&c.function, &mu, &mut rng)?.into_iter().enumerate() {
            let avg = lp_norm(&f, 1.0, &mu)? / mu.total_mass();
            let lambdas = c.lambda.iter().copied().chain(c.lambda_factors.iter().map(|t| t * avg));
            for lambda in lambdas {
                jobs.push(Job { case, instance, f: f.clone(), lambda });
            }
        }
    }
    let reports: Vec<VerificationReport> = jobs
        .par_iter()
        .map(|j| decompose(&j.f, j.lambda, &mu).and_then(|dec| verify(&dec, &j.f, &mu, &cfg.p)))
        .collect::<Result<_, _>>()?;

    let mut table = Table::new("czd", &["case", "instance", "lambda", "maximal_cubes", "check", "bound", "measured", "pass"]);
    let mut pass = true;
    for (j, rep) in jobs.iter().zip(&reports) {
        pass &= rep.all_pass();
        for c in &rep.checks {
            table.push(vec![
                j.case.to_string(),
                j.instance.to_string(),
                float(rep.lambda),
                rep.cubes.to_string(),
                c.name.clone(),
                float(c.bound),
                float(c.measured),
                c.pass.to_string(),
            ]);
        }
    }
    table.note("decompositions", reports.len());
    table.note("all_pass", pass);
    let effective = CzdConfig { measure: spec, seed, ..cfg.clone() };
    let meta = Meta::new("czd", &effective, seed, mu.depth());
    Ok(Bundle { meta, tables: vec![table], pass, study: None })
}
