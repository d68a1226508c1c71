//! Subcommand implementations. Each writes its files under `out` and returns
//! the report it wrote.

use std::path::{Path, PathBuf};

use pbit_forge_core::mapping::{random_colorable_graph, random_weighted_graph, WeightedGraph};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::campaign::{
    trial_stem, write_trial, CampaignSummary, Instance, Optimum, TrialResult, TrialRun,
};
use crate::config::{DriftSection, LoadedConfig, ModeKind, Problem};
use crate::error::HarnessError;
use crate::graph_io::format_graph;
use crate::output::{conductance_csv, write_atomic, write_json};

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub mode: Option<ModeKind>,
}

impl Overrides {
    pub fn apply(&self, loaded: &LoadedConfig) -> LoadedConfig {
        let mut out = loaded.clone();
        if let Some(seed) = self.seed {
            out.config.seed = seed;
        }
        if let Some(trials) = self.trials {
            out.config.trials = trials;
        }
        if let Some(mode) = self.mode {
            out.config.machine.mode = mode;
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapReport {
    pub problem: Problem,
    pub n: usize,
    pub nonzeros: usize,
    pub sparsity: f64,
    pub rows: usize,
    pub columns: usize,
    pub bias_column: Option<usize>,
    pub levels_us: Vec<f64>,
}

pub fn cmd_map(loaded: &LoadedConfig, out: &Path) -> Result<MapReport, HarnessError> {
    let instance = Instance::load(loaded)?;
    let targets = &instance.lowering.conductance_targets;
    let report = MapReport {
        problem: instance.config.problem,
        n: instance.model.len(),
        nonzeros: instance.model.couplings().len(),
        sparsity: instance.model.zero_coupling_fraction(),
        rows: targets.rows(),
        columns: targets.cols(),
        bias_column: instance.lowering.bias_column,
        levels_us: instance.config.levels_us.clone(),
    };
    write_atomic(
        &out.join("conductance_map.csv"),
        conductance_csv(targets).as_bytes(),
    )?;
    write_json(&out.join("map.json"), &report)?;
    Ok(report)
}

pub fn cmd_oracle(loaded: &LoadedConfig, out: &Path) -> Result<Optimum, HarnessError> {
    let instance = Instance::load(loaded)?;
    let optimum = instance.optimum()?;
    write_json(&out.join("oracle.json"), &optimum)?;
    Ok(optimum)
}

/// Runs a campaign and writes per-trial traces plus `summary.json`.
pub fn cmd_run(loaded: &LoadedConfig, out: &Path) -> Result<CampaignSummary, HarnessError> {
    let instance = Instance::load(loaded)?;
    run_instance(&instance, out)
}

fn run_instance(instance: &Instance, out: &Path) -> Result<CampaignSummary, HarnessError> {
    let optimum = instance.optimum()?;
    let results = instance.run_campaign(&optimum);
    write_results(out, &results)?;
    let summary = CampaignSummary::new(&instance.config, &optimum, &results);
    write_json(&out.join("summary.json"), &summary)?;
    Ok(summary)
}

fn write_results(out: &Path, results: &[TrialResult]) -> Result<(), HarnessError> {
    results
        .par_iter()
        .filter_map(|r| r.outcome.as_ref().ok())
        .try_for_each(|run| write_trial(out, &trial_stem(run.sidecar.trial), run))
}

/// Turns `key=v1,v2,...` arguments into a grid; values are parsed as TOML.
pub fn parse_grid(args: &[String]) -> Result<Vec<(String, Vec<toml::Value>)>, HarnessError> {
    args.iter()
        .map(|arg| {
            let (key, values) = arg.split_once('=').ok_or_else(|| {
                HarnessError::Validation(format!("grid entry `{arg}` is not key=v1,v2,..."))
            })?;
            let values = values
                .split(',')
                .filter(|v| !v.trim().is_empty())
                .map(|v| parse_value(v.trim()))
                .collect::<Result<Vec<_>, _>>()?;
            Ok((key.trim().to_string(), values))
        })
        .collect()
}

fn parse_value(text: &str) -> Result<toml::Value, HarnessError> {
    let doc: toml::Table = toml::from_str(&format!("v = {text}"))
        .or_else(|_| toml::from_str(&format!("v = \"{text}\"")))
        .map_err(|e| HarnessError::Validation(format!("grid value `{text}`: {e}")))?;
    Ok(doc["v"].clone())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub index: usize,
    pub overrides: Vec<(String, toml::Value)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub successes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub success_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub median_updates_to_optimum: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Trend {
    Constant,
    NonDecreasing,
    NonIncreasing,
    NonMonotonic,
}

/// Direction of a sequence; `None` when fewer than two values are present.
pub fn trend(values: &[f64]) -> Option<Trend> {
    if values.len() < 2 {
        return None;
    }
    let up = values.windows(2).all(|w| w[1] >= w[0]);
    let down = values.windows(2).all(|w| w[1] <= w[0]);
    Some(match (up, down) {
        (true, true) => Trend::Constant,
        (true, false) => Trend::NonDecreasing,
        (false, true) => Trend::NonIncreasing,
        (false, false) => Trend::NonMonotonic,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub points: Vec<SweepPoint>,
    /// Success rate against the swept value, for one-key grids of successful points.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub monotonicity: Option<Trend>,
}

/// Runs a campaign at every point of the cartesian product of `grid`.
///
/// With no explicit grid the config's `[sweep]` table is used. Point `k` writes
/// under `out/point_kkk`.
pub fn cmd_sweep(
    loaded: &LoadedConfig,
    grid: Option<Vec<(String, Vec<toml::Value>)>>,
    out: &Path,
) -> Result<SweepReport, HarnessError> {
    let grid = match grid {
        Some(g) if !g.is_empty() => g,
        _ => loaded
            .config
            .sweep
            .clone()
            .map(|t| t.into_iter().collect())
            .unwrap_or_default(),
    };
    if grid.is_empty() || grid.iter().any(|(_, v)| v.is_empty()) {
        return Err(HarnessError::Validation("sweep grid is empty".into()));
    }
    let mut base = loaded.clone();
    base.config.sweep = None;
    let mut points = Vec::new();
    for (index, overrides) in cartesian(&grid).into_iter().enumerate() {
        let dir = out.join(format!("point_{index:03}"));
        let outcome = overrides
            .iter()
            .try_fold(base.config.clone(), |c, (k, v)| c.with_override(k, v))
            .and_then(|config| {
                let point = LoadedConfig {
                    config,
                    base_dir: base.base_dir.clone(),
                };
                Instance::load(&point)
            })
            .and_then(|instance| run_instance(&instance, &dir));
        points.push(match outcome {
            Ok(s) => SweepPoint {
                index,
                overrides,
                successes: Some(s.successes),
                success_rate: Some(s.success_rate),
                median_updates_to_optimum: s.median_updates_to_optimum,
                error: None,
            },
            Err(e) => SweepPoint {
                index,
                overrides,
                successes: None,
                success_rate: None,
                median_updates_to_optimum: None,
                error: Some(e.to_string()),
            },
        });
    }
    let monotonicity = if grid.len() == 1 {
        let rates: Option<Vec<f64>> = points.iter().map(|p| p.success_rate).collect();
        rates.and_then(|r| trend(&r))
    } else {
        None
    };
    let report = SweepReport {
        points,
        monotonicity,
    };
    write_json(&out.join("sweep.json"), &report)?;
    Ok(report)
}

fn cartesian(grid: &[(String, Vec<toml::Value>)]) -> Vec<Vec<(String, toml::Value)>> {
    grid.iter().fold(vec![Vec::new()], |acc, (key, values)| {
        acc.iter()
            .flat_map(|prefix| {
                values.iter().map(move |v| {
                    let mut p = prefix.clone();
                    p.push((key.clone(), v.clone()));
                    p
                })
            })
            .collect()
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftPair {
    pub trial: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fresh_final_energy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aged_final_energy: Option<f64>,
    pub fresh_reached_optimum: bool,
    pub aged_reached_optimum: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_energy_delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    pub drift: DriftSection,
    pub optimum_energy: f64,
    pub fresh: CampaignSummary,
    pub aged: CampaignSummary,
    /// Aged minus fresh success rate.
    pub success_rate_delta: f64,
    pub pairs: Vec<DriftPair>,
}

/// Runs every trial fresh, then ages the same array and reruns it in ideal
/// mode with the same annealing seed.
pub fn cmd_drift_rerun(loaded: &LoadedConfig, out: &Path) -> Result<DriftReport, HarnessError> {
    let drift = loaded
        .config
        .drift
        .ok_or_else(|| HarnessError::Validation("drift-rerun needs a [drift] block".into()))?;
    let instance = Instance::load(loaded)?;
    let optimum = instance.optimum()?;
    let outcomes: Vec<Result<(TrialRun, TrialRun), String>> = (0..instance.config.trials)
        .into_par_iter()
        .map(|t| {
            instance
                .run_drift_pair(t, &optimum)
                .map_err(|e| e.to_string())
        })
        .collect();
    let split = |pick: fn(&(TrialRun, TrialRun)) -> &TrialRun| -> Vec<TrialResult> {
        outcomes
            .iter()
            .enumerate()
            .map(|(trial, o)| TrialResult {
                trial,
                outcome: o
                    .as_ref()
                    .map(|pair| pick(pair).clone())
                    .map_err(Clone::clone),
            })
            .collect()
    };
    let fresh_results = split(|p| &p.0);
    let aged_results = split(|p| &p.1);
    write_results(&out.join("fresh"), &fresh_results)?;
    write_results(&out.join("aged"), &aged_results)?;
    let fresh = CampaignSummary::new(&instance.config, &optimum, &fresh_results);
    let aged = CampaignSummary::new(&instance.config, &optimum, &aged_results);
    let pairs = outcomes
        .iter()
        .enumerate()
        .map(|(trial, o)| match o {
            Ok((f, a)) => DriftPair {
                trial,
                fresh_final_energy: Some(f.sidecar.final_energy),
                aged_final_energy: Some(a.sidecar.final_energy),
                fresh_reached_optimum: f.sidecar.reached_optimum,
                aged_reached_optimum: a.sidecar.reached_optimum,
                final_energy_delta: Some(a.sidecar.final_energy - f.sidecar.final_energy),
                error: None,
            },
            Err(e) => DriftPair {
                trial,
                fresh_final_energy: None,
                aged_final_energy: None,
                fresh_reached_optimum: false,
                aged_reached_optimum: false,
                final_energy_delta: None,
                error: Some(e.clone()),
            },
        })
        .collect();
    let report = DriftReport {
        drift,
        optimum_energy: optimum.energy,
        success_rate_delta: aged.success_rate - fresh.success_rate,
        fresh,
        aged,
        pairs,
    };
    write_json(&out.join("drift_report.json"), &report)?;
    Ok(report)
}

/// Parameters of the seeded benchmark-graph generator.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerateSpec {
    pub problem: Problem,
    pub vertices: usize,
    pub edges: usize,
    pub colors: usize,
    pub weights: Vec<f64>,
    pub seed: u64,
}

impl GenerateSpec {
    pub fn maxcut_benchmark(seed: u64) -> Self {
        Self {
            problem: Problem::Maxcut,
            vertices: 24,
            edges: 42,
            colors: 0,
            weights: vec![1.0, 2.0, 3.0],
            seed,
        }
    }

    pub fn coloring_benchmark(seed: u64) -> Self {
        Self {
            problem: Problem::Coloring,
            vertices: 10,
            edges: 17,
            colors: 3,
            weights: vec![1.0],
            seed,
        }
    }

    pub fn graph(&self) -> Result<WeightedGraph, HarnessError> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        Ok(match self.problem {
            Problem::Maxcut => {
                random_weighted_graph(self.vertices, self.edges, &self.weights, &mut rng)?
            }
            Problem::Coloring => {
                random_colorable_graph(self.vertices, self.edges, self.colors, &mut rng)?
            }
        })
    }
}

pub fn cmd_generate(spec: &GenerateSpec, path: &Path) -> Result<WeightedGraph, HarnessError> {
    let graph = spec.graph()?;
    write_atomic(path, format_graph(&graph).as_bytes())?;
    Ok(graph)
}

/// `--out`, else `PBIT_FORGE_OUT`, else `pbit-forge-out`.
pub fn output_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os("PBIT_FORGE_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("pbit-forge-out"))
}

/// Loads a config and applies overrides.
pub fn load(path: &Path, overrides: &Overrides) -> Result<LoadedConfig, HarnessError> {
    Ok(overrides.apply(&LoadedConfig::load(path)?))
}
