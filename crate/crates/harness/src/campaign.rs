//! Instances, trials and campaigns.

use std::path::Path;

use pbit_forge_core::anneal::{
    AnnealSchedule, InitialState, IsingMachine, MachineConfig, RunTrace, SamplerMode, SmtjPool,
    TraceOptions, UpdateOrder,
};
use pbit_forge_core::device::{
    ArrayGeometry, CrossbarArray, ProgramVerifyConfig, ProgrammingReport, SmtjVariability,
};
use pbit_forge_core::ising::{IsingModel, SpinDomain, SpinState};
use pbit_forge_core::mapping::{
    conflict_coloring, decode_coloring, decode_cut, map_coloring, map_maxcut, to_crossbar,
    CrossbarLowering, Edge, WeightedGraph,
};
use pbit_forge_core::oracle::{coloring_optimum, exhaustive_ground_state, ENERGY_TOLERANCE};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Assignment, ExperimentConfig, LoadedConfig, ModeKind, OrderKind, Problem};
use crate::error::HarnessError;
use crate::graph_io::read_graph;
use crate::output::{trace_csv, write_atomic, write_json};

/// A validated config with its graph, logical model and crossbar layout.
#[derive(Debug, Clone)]
pub struct Instance {
    pub config: ExperimentConfig,
    pub graph: WeightedGraph,
    pub model: IsingModel,
    pub lowering: CrossbarLowering,
    program: ProgramVerifyConfig,
}

impl Instance {
    pub fn load(loaded: &LoadedConfig) -> Result<Self, HarnessError> {
        let graph = read_graph(&loaded.graph_path())?;
        Self::new(loaded.config.clone(), graph)
    }

    /// Checks every section before anything runs.
    pub fn new(config: ExperimentConfig, graph: WeightedGraph) -> Result<Self, HarnessError> {
        if config.trials == 0 {
            return Err(HarnessError::Validation("trials must be at least 1".into()));
        }
        AnnealSchedule::from(&config.schedule).validate()?;
        if config.schedule.v_end > config.crossbar.v_read_max {
            return Err(HarnessError::Validation(format!(
                "schedule v_end {} V exceeds the crossbar read bound {} V",
                config.schedule.v_end, config.crossbar.v_read_max
            )));
        }
        config.device.nominal().validate()?;
        if !(config.machine.pulse_width_s > 0.0) {
            return Err(HarnessError::Validation(
                "pulse_width_s must be positive".into(),
            ));
        }
        let program = config.crossbar.programming.resolve();
        program.validate()?;
        let model = match config.problem {
            Problem::Maxcut => {
                if config.colors.is_some() {
                    return Err(HarnessError::Validation(
                        "`colors` only applies to coloring problems".into(),
                    ));
                }
                map_maxcut(&graph, config.scale)?
            }
            Problem::Coloring => {
                let colors = config.colors.ok_or_else(|| {
                    HarnessError::Validation("coloring problems need `colors`".into())
                })?;
                map_coloring(&graph, colors, config.scale)?
            }
        };
        let lowering = to_crossbar(
            &model,
            &config.levels_us,
            config.g_scale_us,
            config.quantization.into(),
        )?;
        CrossbarArray::new(
            lowering.spins,
            lowering.columns(),
            config.crossbar.geometry.into(),
        )?;
        Ok(Self {
            config,
            graph,
            model,
            lowering,
            program,
        })
    }

    pub fn colors(&self) -> usize {
        self.config.colors.unwrap_or(0)
    }

    /// Certified optimum energy of the logical model.
    pub fn optimum(&self) -> Result<Optimum, HarnessError> {
        match self.config.problem {
            Problem::Maxcut => {
                let oracle = exhaustive_ground_state(&self.model)?;
                Ok(Optimum {
                    energy: oracle.min_energy,
                    ground_state_count: Some(oracle.ground_state_count),
                    cut_weight: Some(self.cut_weight_for(oracle.min_energy)),
                    coloring: None,
                })
            }
            Problem::Coloring => {
                let colors = self.colors();
                let opt = coloring_optimum(&self.graph, colors, self.config.scale)?;
                match (opt.optimum_energy, opt.witness) {
                    (Some(energy), Some(witness)) => Ok(Optimum {
                        energy,
                        ground_state_count: None,
                        cut_weight: None,
                        coloring: Some(witness),
                    }),
                    _ => Err(HarnessError::CampaignFailed(format!(
                        "graph is not {colors}-colorable"
                    ))),
                }
            }
        }
    }

    /// Cut weight implied by a MAX-CUT model energy: `(ΣW − H/A) / 2`.
    pub fn cut_weight_for(&self, energy: f64) -> f64 {
        (self.graph.total_weight() - energy / self.config.scale) / 2.0
    }

    fn pool<R: RngCore>(&self, rng: &mut R) -> Result<SmtjPool, HarnessError> {
        let nominal = self.config.device.nominal();
        let spread: SmtjVariability = self.config.device.variability.unwrap_or_default().into();
        let mut draw = || -> Result<_, HarnessError> {
            Ok(if spread.is_zero() {
                nominal
            } else {
                spread.sample(&nominal, rng)?
            })
        };
        Ok(match self.config.device.assignment {
            Assignment::Shared => SmtjPool::Shared(draw()?),
            Assignment::PerRow => SmtjPool::PerRow(
                (0..self.lowering.spins)
                    .map(|_| draw())
                    .collect::<Result<_, _>>()?,
            ),
        })
    }

    /// Programs a fresh array and draws the trial's devices from its substream.
    pub fn prepare_trial(&self, trial: usize) -> Result<PreparedTrial, HarnessError> {
        let mut rng = trial_rng(self.config.seed, trial);
        let anneal_seed = rng.next_u64();
        let pool = self.pool(&mut rng)?;
        let mut array = CrossbarArray::new(
            self.lowering.spins,
            self.lowering.columns(),
            ArrayGeometry::from(self.config.crossbar.geometry),
        )?;
        array.set_v_read_max(self.config.crossbar.v_read_max)?;
        let programming = array.program_and_verify(
            &self.lowering.conductance_targets,
            &self.program,
            &mut rng,
        )?;
        Ok(PreparedTrial {
            trial,
            anneal_seed,
            array,
            pool,
            programming,
            drift_applied: false,
            rng,
        })
    }

    /// Ages the trial's array by the config's drift block.
    pub fn age(&self, prepared: &mut PreparedTrial) -> Result<(), HarnessError> {
        let drift = self
            .config
            .drift
            .ok_or_else(|| HarnessError::Validation("config has no [drift] block".into()))?;
        prepared
            .array
            .apply_drift(drift.elapsed_hours, &drift.into(), &mut prepared.rng)?;
        prepared.drift_applied = true;
        Ok(())
    }

    pub fn machine(
        &self,
        prepared: &PreparedTrial,
        mode: ModeKind,
    ) -> Result<IsingMachine, HarnessError> {
        let order = match self.config.machine.order {
            OrderKind::Sequential => UpdateOrder::Sequential,
            OrderKind::Shuffled => UpdateOrder::Shuffled,
            OrderKind::Chromatic => UpdateOrder::Chromatic(conflict_coloring(&self.model)),
        };
        Ok(IsingMachine::on_crossbar(
            self.model.clone(),
            &self.lowering,
            prepared.array.clone(),
            self.config.crossbar.read_noise.map(Into::into),
            prepared.pool.clone(),
            MachineConfig {
                mode: SamplerMode::from(mode),
                order,
                pulse_width_s: self.config.machine.pulse_width_s,
            },
        )?)
    }

    pub fn anneal(
        &self,
        prepared: &PreparedTrial,
        mode: ModeKind,
    ) -> Result<RunTrace, HarnessError> {
        let machine = self.machine(prepared, mode)?;
        Ok(machine.run_annealing(
            &AnnealSchedule::from(&self.config.schedule),
            InitialState::Random,
            &TraceOptions {
                record_updates: true,
                snapshot_stride: self.config.machine.snapshot_stride,
            },
            prepared.anneal_seed,
        )?)
    }

    pub fn decode(&self, state: &SpinState) -> Result<Decoded, HarnessError> {
        Ok(match self.config.problem {
            Problem::Maxcut => {
                let cut = decode_cut(&self.graph, state)?;
                Decoded::Cut {
                    weight: cut.weight,
                    side: cut.side,
                }
            }
            Problem::Coloring => {
                let report = decode_coloring(&self.graph, self.colors(), state)?;
                Decoded::Coloring {
                    valid: report.is_valid(),
                    colors: report.colors,
                    one_hot_violations: report.one_hot_violations,
                    edge_violations: report.edge_violations,
                }
            }
        })
    }

    /// Programs, optionally ages, anneals and scores one trial.
    pub fn run_trial(
        &self,
        trial: usize,
        optimum: &Optimum,
        phase: Phase,
    ) -> Result<TrialRun, HarnessError> {
        let mut prepared = self.prepare_trial(trial)?;
        let mode = match phase {
            Phase::Run => self.config.machine.mode,
            Phase::Fresh => self.config.machine.mode,
            Phase::Aged => ModeKind::Ideal,
        };
        if phase == Phase::Aged || (phase == Phase::Run && self.config.drift.is_some()) {
            self.age(&mut prepared)?;
        }
        let trace = self.anneal(&prepared, mode)?;
        self.score(&prepared, trace, mode, optimum, phase)
    }

    /// Fresh and aged runs of one trial on the same programmed array.
    pub fn run_drift_pair(
        &self,
        trial: usize,
        optimum: &Optimum,
    ) -> Result<(TrialRun, TrialRun), HarnessError> {
        let mut prepared = self.prepare_trial(trial)?;
        let mode = self.config.machine.mode;
        let fresh = self.anneal(&prepared, mode)?;
        let fresh = self.score(&prepared, fresh, mode, optimum, Phase::Fresh)?;
        self.age(&mut prepared)?;
        let aged = self.anneal(&prepared, ModeKind::Ideal)?;
        let aged = self.score(&prepared, aged, ModeKind::Ideal, optimum, Phase::Aged)?;
        Ok((fresh, aged))
    }

    fn score(
        &self,
        prepared: &PreparedTrial,
        trace: RunTrace,
        mode: ModeKind,
        optimum: &Optimum,
        phase: Phase,
    ) -> Result<TrialRun, HarnessError> {
        let reached_optimum = (trace.final_energy - optimum.energy).abs() <= ENERGY_TOLERANCE;
        let sidecar = TrialSidecar {
            trial: prepared.trial,
            phase,
            mode,
            anneal_seed: trace.seed,
            drift_applied: prepared.drift_applied,
            programming_pulses: prepared.programming.total_pulses,
            config: self.config.clone(),
            graph: GraphRecord::from(&self.graph),
            final_state: trace.final_state.values().to_vec(),
            final_energy: trace.final_energy,
            optimum_energy: optimum.energy,
            reached_optimum,
            updates_to_optimum: trace.first_hit(optimum.energy, ENERGY_TOLERANCE),
            clamp_events: trace.clamp_events,
            decoded: self.decode(&trace.final_state)?,
            snapshots: trace
                .snapshots
                .iter()
                .map(|s| SnapshotRecord {
                    iteration: s.iteration,
                    energy: s.energy,
                })
                .collect(),
        };
        Ok(TrialRun { sidecar, trace })
    }

    /// Runs every trial in parallel; failures are kept per trial.
    pub fn run_campaign(&self, optimum: &Optimum) -> Vec<TrialResult> {
        (0..self.config.trials)
            .into_par_iter()
            .map(|t| TrialResult {
                trial: t,
                outcome: self
                    .run_trial(t, optimum, Phase::Run)
                    .map_err(|e| e.to_string()),
            })
            .collect()
    }
}

/// ChaCha8 stream `trial` of the campaign seed.
pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

/// A programmed array with the devices and RNG state of one trial.
#[derive(Debug, Clone)]
pub struct PreparedTrial {
    pub trial: usize,
    pub anneal_seed: u64,
    pub array: CrossbarArray,
    pub pool: SmtjPool,
    pub programming: ProgrammingReport,
    pub drift_applied: bool,
    rng: ChaCha8Rng,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    Run,
    Fresh,
    Aged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Optimum {
    pub energy: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ground_state_count: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cut_weight: Option<f64>,
    /// A proper coloring attaining the optimum.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coloring: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Decoded {
    Cut {
        weight: f64,
        side: Vec<bool>,
    },
    Coloring {
        valid: bool,
        colors: Vec<Option<usize>>,
        one_hot_violations: Vec<usize>,
        edge_violations: Vec<(usize, usize, usize)>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphRecord {
    pub n_vertices: usize,
    pub edges: Vec<(usize, usize, f64)>,
}

impl From<&WeightedGraph> for GraphRecord {
    fn from(g: &WeightedGraph) -> Self {
        Self {
            n_vertices: g.n_vertices(),
            edges: g.edges().iter().map(|e| (e.u, e.v, e.weight)).collect(),
        }
    }
}

impl GraphRecord {
    pub fn to_graph(&self) -> Result<WeightedGraph, HarnessError> {
        let edges = self
            .edges
            .iter()
            .map(|&(u, v, weight)| Edge { u, v, weight })
            .collect();
        Ok(WeightedGraph::new(self.n_vertices, edges)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnapshotRecord {
    pub iteration: u64,
    pub energy: f64,
}

/// Everything needed to replay a trial, plus its scored result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSidecar {
    pub trial: usize,
    pub phase: Phase,
    pub mode: ModeKind,
    pub anneal_seed: u64,
    pub drift_applied: bool,
    pub programming_pulses: u64,
    pub config: ExperimentConfig,
    pub graph: GraphRecord,
    pub final_state: Vec<i8>,
    pub final_energy: f64,
    pub optimum_energy: f64,
    pub reached_optimum: bool,
    pub updates_to_optimum: Option<u64>,
    pub clamp_events: u64,
    pub decoded: Decoded,
    pub snapshots: Vec<SnapshotRecord>,
}

#[derive(Debug, Clone)]
pub struct TrialRun {
    pub sidecar: TrialSidecar,
    pub trace: RunTrace,
}

#[derive(Debug, Clone)]
pub struct TrialResult {
    pub trial: usize,
    pub outcome: Result<TrialRun, String>,
}

impl TrialResult {
    pub fn reached_optimum(&self) -> bool {
        matches!(&self.outcome, Ok(run) if run.sidecar.reached_optimum)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialBrief {
    pub trial: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_energy: Option<f64>,
    pub reached_optimum: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub updates_to_optimum: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignSummary {
    pub problem: Problem,
    pub seed: u64,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    /// Median first-hit iteration over trials that ended at the optimum.
    pub median_updates_to_optimum: Option<f64>,
    pub optimum: Optimum,
    pub per_trial: Vec<TrialBrief>,
}

impl CampaignSummary {
    pub fn new(config: &ExperimentConfig, optimum: &Optimum, results: &[TrialResult]) -> Self {
        let per_trial: Vec<TrialBrief> = results
            .iter()
            .map(|r| match &r.outcome {
                Ok(run) => TrialBrief {
                    trial: r.trial,
                    final_energy: Some(run.sidecar.final_energy),
                    reached_optimum: run.sidecar.reached_optimum,
                    updates_to_optimum: run.sidecar.updates_to_optimum,
                    error: None,
                },
                Err(e) => TrialBrief {
                    trial: r.trial,
                    final_energy: None,
                    reached_optimum: false,
                    updates_to_optimum: None,
                    error: Some(e.clone()),
                },
            })
            .collect();
        let successes = per_trial.iter().filter(|t| t.reached_optimum).count();
        let hits: Vec<u64> = per_trial
            .iter()
            .filter(|t| t.reached_optimum)
            .filter_map(|t| t.updates_to_optimum)
            .collect();
        Self {
            problem: config.problem,
            seed: config.seed,
            trials: results.len(),
            successes,
            success_rate: successes as f64 / results.len().max(1) as f64,
            median_updates_to_optimum: median(hits),
            optimum: optimum.clone(),
            per_trial,
        }
    }
}

pub fn median(mut values: Vec<u64>) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_unstable();
    let mid = values.len() / 2;
    Some(if values.len() % 2 == 1 {
        values[mid] as f64
    } else {
        (values[mid - 1] + values[mid]) as f64 / 2.0
    })
}

/// Writes `<stem>.csv` and `<stem>.json` for a trial run.
pub fn write_trial(dir: &Path, stem: &str, run: &TrialRun) -> Result<(), HarnessError> {
    write_atomic(
        &dir.join(format!("{stem}.csv")),
        trace_csv(&run.trace).as_bytes(),
    )?;
    write_json(&dir.join(format!("{stem}.json")), &run.sidecar)
}

pub fn trial_stem(trial: usize) -> String {
    format!("trial_{trial:03}")
}

/// Re-executes the trial described by a sidecar and returns its final state.
pub fn replay(sidecar: &TrialSidecar) -> Result<SpinState, HarnessError> {
    let instance = Instance::new(sidecar.config.clone(), sidecar.graph.to_graph()?)?;
    let mut prepared = instance.prepare_trial(sidecar.trial)?;
    if sidecar.drift_applied {
        instance.age(&mut prepared)?;
    }
    Ok(instance.anneal(&prepared, sidecar.mode)?.final_state)
}

/// Decodes a sidecar's final state into a [`SpinState`].
pub fn sidecar_state(sidecar: &TrialSidecar) -> Result<SpinState, HarnessError> {
    let domain = match sidecar.config.problem {
        Problem::Maxcut => SpinDomain::PlusMinusOne,
        Problem::Coloring => SpinDomain::ZeroOne,
    };
    Ok(SpinState::new(domain, sidecar.final_state.clone())?)
}
