//! Experiment configuration: JSON with explicit probabilities, validated
//! with field-level diagnostics before any computation runs.

use serde::Deserialize;

use piblab::estimators::{BatchMode, EntropyMethod, ThetaSource};
use piblab::finite_info::{Alphabet, Channel, FiniteDistribution, Variable};
use piblab::posterior::VariationalFamily;
use piblab::world::{World, DEFAULT_CELL_BUDGET, VAR_XP};

use crate::AppError;

/// Rows in configs may drift from unit mass by at most this much; they are
/// renormalized exactly before use.
const ROW_MASS_TOL: f64 = 1e-9;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub world: WorldSpec,
    pub family: FamilySpec,
    #[serde(default)]
    pub grids: Option<GridSpec>,
    #[serde(default)]
    pub thresholds: Option<ThresholdSpec>,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Default output directory, overridable with --out.
    #[serde(default)]
    pub output_dir: Option<String>,
    #[serde(default)]
    pub estimate: Option<EstimateSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldSpec {
    pub phi_symbols: Vec<String>,
    pub x_symbols: Vec<String>,
    pub prior: Vec<f64>,
    pub emission: Vec<Vec<f64>>,
    pub m: usize,
    pub v: usize,
    pub f: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub theta_symbols: Vec<String>,
    pub q_theta: Vec<f64>,
    pub q_lik: Vec<Vec<f64>>,
    /// Rows indexed by (x_p tuple, theta), row-major; omitted means the
    /// validation likelihood ignores x_p and copies q_lik.
    #[serde(default)]
    pub q_val_lik: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdSpec {
    pub i0_train: f64,
    pub i0_val: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateSpec {
    /// Corpus path, resolved relative to the config file's directory.
    pub corpus: String,
    pub method: MethodSpec,
    pub batch_size: usize,
    #[serde(default)]
    pub batch_mode: BatchModeSpec,
    pub theta: ThetaSpec,
    pub i0: f64,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodSpec {
    PlugIn,
    Compression(String),
}

#[derive(Debug, Deserialize, Default, Clone, Copy)]
#[serde(rename_all = "snake_case")]
pub enum BatchModeSpec {
    #[default]
    Partition,
    WithReplacement {
        n_batches: usize,
    },
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThetaSpec {
    /// A fixed theta symbol label.
    Fixed(String),
    /// Explicit posterior weights over theta, in symbol order.
    Posterior(Vec<f64>),
}

/// Everything the runner needs, converted into library types.
pub struct Experiment {
    pub world: World,
    pub family: VariationalFamily,
    pub beta_grid: Vec<f64>,
    pub gamma_grid: Vec<f64>,
    pub thresholds: Option<(f64, f64)>,
    pub seed: u64,
    pub output_dir: Option<std::path::PathBuf>,
    pub estimate: Option<EstimatePlan>,
}

pub struct EstimatePlan {
    pub corpus_path: std::path::PathBuf,
    pub method: EntropyMethod,
    pub batch_size: usize,
    pub batch_mode: BatchMode,
    pub theta_source: ThetaSource,
    pub i0: f64,
}

pub fn parse_config(path: &std::path::Path) -> Result<Experiment, AppError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| AppError::Config(format!("cannot read {}: {e}", path.display())))?;
    let file: ConfigFile = serde_json::from_str(&text)
        .map_err(|e| AppError::Config(format!("{}: {e}", path.display())))?;
    build_experiment(file, path)
}

fn build_experiment(file: ConfigFile, path: &std::path::Path) -> Result<Experiment, AppError> {
    let ws = &file.world;

    // Tensor size gate on the raw spec numbers, before anything is built.
    let tuple_len = ws
        .m
        .checked_add(ws.v)
        .and_then(|s| s.checked_add(ws.f))
        .unwrap_or(usize::MAX);
    let cells = joint_cells(
        ws.phi_symbols.len(),
        ws.x_symbols.len(),
        tuple_len,
        file.family.theta_symbols.len().max(1),
        DEFAULT_CELL_BUDGET,
    );
    if cells > DEFAULT_CELL_BUDGET as u128 {
        return Err(AppError::Config(format!(
            "SizeOverflow: joint tensor needs more than {DEFAULT_CELL_BUDGET} cells"
        )));
    }

    let phi = Alphabet::new("phi", ws.phi_symbols.clone())
        .map_err(|e| field_err("world.phi_symbols", &e))?;
    let x =
        Alphabet::new("x", ws.x_symbols.clone()).map_err(|e| field_err("world.x_symbols", &e))?;
    let prior = distribution("world.prior", phi.clone(), &ws.prior)?;
    if ws.emission.len() != phi.size() {
        return Err(AppError::Config(format!(
            "world.emission has {} rows, phi has {} symbols",
            ws.emission.len(),
            phi.size()
        )));
    }
    let emission_rows = ws
        .emission
        .iter()
        .enumerate()
        .map(|(i, row)| distribution(&format!("world.emission[{i}]"), x.clone(), row))
        .collect::<Result<Vec<_>, _>>()?;
    let emission = Channel::new(
        vec![Variable::new("phi", phi.clone())],
        x.clone(),
        emission_rows,
    )
    .map_err(|e| field_err("world.emission", &e))?;
    let world =
        World::new(prior, emission, ws.m, ws.v, ws.f).map_err(|e| field_err("world", &e))?;

    let fs = &file.family;
    let theta = Alphabet::new("theta", fs.theta_symbols.clone())
        .map_err(|e| field_err("family.theta_symbols", &e))?;
    let q_theta = distribution("family.q_theta", theta.clone(), &fs.q_theta)?;
    if fs.q_lik.len() != theta.size() {
        return Err(AppError::Config(format!(
            "family.q_lik has {} rows, theta has {} symbols",
            fs.q_lik.len(),
            theta.size()
        )));
    }
    let lik_rows = fs
        .q_lik
        .iter()
        .enumerate()
        .map(|(i, row)| distribution(&format!("family.q_lik[{i}]"), x.clone(), row))
        .collect::<Result<Vec<_>, _>>()?;
    let q_lik = Channel::new(
        vec![Variable::new("theta", theta.clone())],
        x.clone(),
        lik_rows,
    )
    .map_err(|e| field_err("family.q_lik", &e))?;

    let family = match &fs.q_val_lik {
        None => VariationalFamily::factorized_for(&world, q_theta, q_lik)
            .map_err(|e| field_err("family", &e))?,
        Some(rows) => {
            let xp_alpha = world.xp_alphabet();
            let expected = xp_alpha.size() * theta.size();
            if rows.len() != expected {
                return Err(AppError::Config(format!(
                    "family.q_val_lik has {} rows, (x_p, theta) requires {expected}",
                    rows.len()
                )));
            }
            let val_rows = rows
                .iter()
                .enumerate()
                .map(|(i, row)| distribution(&format!("family.q_val_lik[{i}]"), x.clone(), row))
                .collect::<Result<Vec<_>, _>>()?;
            let q_val_lik = Channel::new(
                vec![
                    Variable::new(VAR_XP, xp_alpha),
                    Variable::new("theta", theta.clone()),
                ],
                x.clone(),
                val_rows,
            )
            .map_err(|e| field_err("family.q_val_lik", &e))?;
            VariationalFamily::new(q_theta, q_lik, q_val_lik)
                .map_err(|e| field_err("family", &e))?
        }
    };

    let (beta_grid, gamma_grid) = match &file.grids {
        Some(g) => {
            if g.beta.is_empty() || g.gamma.is_empty() {
                return Err(AppError::Config(
                    "grids.beta and grids.gamma must be nonempty".into(),
                ));
            }
            for (name, grid) in [("grids.beta", &g.beta), ("grids.gamma", &g.gamma)] {
                for &v in grid.iter() {
                    if !v.is_finite() || v < 0.0 {
                        return Err(AppError::Config(format!(
                            "{name} contains invalid temperature {v}"
                        )));
                    }
                }
            }
            (g.beta.clone(), g.gamma.clone())
        }
        None => (
            piblab::solver::default_grid(),
            piblab::solver::default_grid(),
        ),
    };
    if file.thresholds.is_some() && (!beta_grid.contains(&1.0) || !gamma_grid.contains(&1.0)) {
        return Err(AppError::Config(
            "thresholds require both grids to include the base temperature 1.0".into(),
        ));
    }

    let estimate = match &file.estimate {
        None => None,
        Some(es) => {
            let method = match &es.method {
                MethodSpec::PlugIn => EntropyMethod::PlugIn,
                MethodSpec::Compression(id) => EntropyMethod::Compression(id.clone()),
            };
            let theta_source = match &es.theta {
                ThetaSpec::Fixed(label) => match theta.index_of(label) {
                    Some(i) => ThetaSource::Fixed(i),
                    None => {
                        return Err(AppError::Config(format!(
                            "estimate.theta.fixed: unknown theta symbol {label:?}"
                        )))
                    }
                },
                ThetaSpec::Posterior(weights) => {
                    let d = distribution("estimate.theta.posterior", theta.clone(), weights)?;
                    ThetaSource::PosteriorSamples(d)
                }
            };
            let batch_mode = match es.batch_mode {
                BatchModeSpec::Partition => BatchMode::Partition,
                BatchModeSpec::WithReplacement { n_batches } => {
                    BatchMode::WithReplacement { n_batches }
                }
            };
            if es.batch_size < 1 {
                return Err(AppError::Config(
                    "estimate.batch_size must be at least 1".into(),
                ));
            }
            let corpus_path = path
                .parent()
                .unwrap_or_else(|| std::path::Path::new("."))
                .join(&es.corpus);
            Some(EstimatePlan {
                corpus_path,
                method,
                batch_size: es.batch_size,
                batch_mode,
                theta_source,
                i0: es.i0,
            })
        }
    };

    // Relative output directories resolve against the config location.
    let output_dir = file.output_dir.as_ref().map(|dir| {
        let p = std::path::Path::new(dir);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            path.parent()
                .unwrap_or_else(|| std::path::Path::new("."))
                .join(p)
        }
    });

    Ok(Experiment {
        world,
        family,
        beta_grid,
        gamma_grid,
        thresholds: file.thresholds.map(|t| (t.i0_train, t.i0_val)),
        seed: file.seed.unwrap_or(0),
        output_dir,
        estimate,
    })
}

/// Validates a probability row (mass within 1e-9, entries nonnegative) and
/// renormalizes it exactly.
fn distribution(
    field: &str,
    alphabet: Alphabet,
    row: &[f64],
) -> Result<FiniteDistribution, AppError> {
    if row.len() != alphabet.size() {
        return Err(AppError::Config(format!(
            "{field}: has {} entries, alphabet has {} symbols",
            row.len(),
            alphabet.size()
        )));
    }
    let mut mass = 0.0;
    for (i, &p) in row.iter().enumerate() {
        if !p.is_finite() || p < 0.0 {
            return Err(AppError::Config(format!(
                "{field}[{i}]: invalid probability {p}"
            )));
        }
        mass += p;
    }
    if (mass - 1.0).abs() > ROW_MASS_TOL {
        return Err(AppError::Config(format!(
            "{field}: probabilities sum to {mass}, expected 1 within {ROW_MASS_TOL}"
        )));
    }
    let probs: Vec<f64> = row.iter().map(|p| p / mass).collect();
    FiniteDistribution::new(alphabet, probs).map_err(|e| field_err(field, &e))
}

fn field_err(field: &str, e: &piblab::Error) -> AppError {
    AppError::Config(format!("{field}: {e}"))
}

/// `phi * x^tuple_len * theta`, saturating just above `cap` so arbitrarily
/// large split sizes cannot overflow or allocate.
fn joint_cells(phi: usize, x: usize, tuple_len: usize, theta: usize, cap: u64) -> u128 {
    let cap = cap as u128 + 1;
    let mut cells = (phi as u128).saturating_mul(theta as u128).min(cap);
    if x > 1 {
        for _ in 0..tuple_len {
            cells = cells.saturating_mul(x as u128).min(cap);
            if cells == cap {
                break;
            }
        }
    }
    cells
}
