//! Simulated annealing by read-voltage ramp.
//!
//! A Gibbs update of spin `i` runs the hardware chain: the spins drive the
//! crossbar columns, row `i` sums a MAC current `I = G·V_read·f_i`, the current
//! is converted to `V_mtj = V_0.5 + I R_α`, and the SMTJ is pulsed and read.
//! An AP readout sets the spin high. Raising `V_read` steepens the effective
//! sigmoid `σ(K R_α G V_read f_i)`, which is the annealing knob.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::device::{spin_drive_voltages, CrossbarArray, MtjState, ReadNoise, SmtjDevice};
use crate::error::{check_len, invalid, Error, Result};
use crate::ising::{IsingModel, SpinState};
use crate::mapping::{ColorClasses, CrossbarLowering};
use crate::math::sigmoid;

/// Running trace energy is recomputed from scratch at this update interval.
const ENERGY_RESYNC_INTERVAL: u64 = 1024;

/// How `V_read` moves between its end points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RampShape {
    /// `V_read` linear in the step index.
    #[default]
    LinearVoltage,
    /// Pseudo-temperature `1/β ∝ 1/V_read` linear in the step index.
    LinearTemperature,
}

/// Read-voltage ramp from `v_start` to `v_end`, one step every
/// `updates_per_step` single-site updates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnealSchedule {
    pub v_start: f64,
    pub v_end: f64,
    pub updates_per_step: u64,
    pub total_updates: u64,
    /// Normalization for `β = V_read / V_ref`.
    pub v_ref: f64,
    pub shape: RampShape,
}

impl AnnealSchedule {
    /// Fixed read voltage: sampling at constant temperature.
    pub fn constant(v_read: f64, total_updates: u64, v_ref: f64) -> Self {
        Self {
            v_start: v_read,
            v_end: v_read,
            updates_per_step: total_updates.max(1),
            total_updates: total_updates.max(1),
            v_ref,
            shape: RampShape::LinearVoltage,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.v_start > 0.0 && self.v_start <= self.v_end && self.v_end.is_finite()) {
            return Err(invalid("schedule", "need 0 < V_start ≤ V_end"));
        }
        if self.updates_per_step == 0 {
            return Err(invalid("updates_per_step", "must be at least 1"));
        }
        if self.total_updates < self.updates_per_step {
            return Err(invalid(
                "total_updates",
                "must be at least updates_per_step",
            ));
        }
        if !(self.v_ref > 0.0) {
            return Err(invalid("v_ref", "must be positive"));
        }
        Ok(())
    }

    /// Number of distinct voltage plateaus.
    pub fn steps(&self) -> u64 {
        self.total_updates.div_ceil(self.updates_per_step)
    }

    /// `V_read` in force for the update with 0-based index `update`.
    pub fn v_read_at(&self, update: u64) -> f64 {
        let steps = self.steps();
        if steps <= 1 {
            return self.v_start;
        }
        let step = (update / self.updates_per_step).min(steps - 1);
        if step == 0 {
            return self.v_start;
        }
        if step == steps - 1 {
            return self.v_end;
        }
        let frac = step as f64 / (steps - 1) as f64;
        let v = match self.shape {
            RampShape::LinearVoltage => self.v_start + (self.v_end - self.v_start) * frac,
            RampShape::LinearTemperature => {
                let t = 1.0 / self.v_start + (1.0 / self.v_end - 1.0 / self.v_start) * frac;
                1.0 / t
            }
        };
        v.clamp(self.v_start, self.v_end)
    }

    pub fn beta_at(&self, update: u64) -> f64 {
        self.v_read_at(update) / self.v_ref
    }
}

/// Pseudo-inverse-temperature `β = V_read / V_ref`.
pub fn effective_beta(v_read: f64, v_ref: f64) -> Result<f64> {
    if !(v_ref > 0.0) {
        return Err(invalid("v_ref", "must be positive"));
    }
    Ok(v_read / v_ref)
}

/// Sigmoid gain `K R_α G V_read` of the hardware chain per unit of local field.
pub fn hardware_beta(device: &SmtjDevice, v_read: f64, g_scale_us: f64) -> f64 {
    device.slope_per_volt * v_read * device.r_alpha() * g_scale_us * 1e-6
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SamplerMode {
    /// Pulse and read an SMTJ for every update.
    #[default]
    HardwareFaithful,
    /// Draw from the fitted sigmoid in software; the MAC still runs on the substrate.
    IdealSigmoid,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum UpdateOrder {
    /// Round-robin `0..n`.
    #[default]
    Sequential,
    /// A fresh random permutation for every sweep.
    Shuffled,
    /// Color classes updated one after another, all members of a class at once.
    Chromatic(ColorClasses),
}

/// SMTJs serving the spins.
#[derive(Debug, Clone, PartialEq)]
pub enum SmtjPool {
    /// One junction multiplexed over every spin.
    Shared(SmtjDevice),
    /// A dedicated junction per row.
    PerRow(Vec<SmtjDevice>),
}

impl SmtjPool {
    #[inline]
    pub fn device(&self, row: usize) -> &SmtjDevice {
        match self {
            SmtjPool::Shared(d) => d,
            SmtjPool::PerRow(ds) => &ds[row],
        }
    }

    fn validate(&self, rows: usize) -> Result<()> {
        match self {
            SmtjPool::Shared(d) => d.validate(),
            SmtjPool::PerRow(ds) => {
                check_len("per-row SMTJ pool", rows, ds.len())?;
                ds.iter().try_for_each(SmtjDevice::validate)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MachineConfig {
    pub mode: SamplerMode,
    pub order: UpdateOrder,
    /// Read pulse applied to the SMTJ (s).
    pub pulse_width_s: f64,
}

impl Default for MachineConfig {
    fn default() -> Self {
        Self {
            mode: SamplerMode::HardwareFaithful,
            order: UpdateOrder::Sequential,
            pulse_width_s: 50e-6,
        }
    }
}

/// Where the MAC is computed.
#[derive(Debug, Clone, PartialEq)]
pub enum Substrate {
    /// Exact arithmetic: `I = G_scale · V_read · f_i`.
    Software { g_scale_us: f64 },
    /// A programmed crossbar driven with the lowering's column polarity.
    Crossbar {
        array: CrossbarArray,
        read_noise: Option<ReadNoise>,
        g_scale_us: f64,
    },
}

/// Result of one single-site update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub high: bool,
    pub flipped: bool,
    /// The SMTJ bias hit compliance.
    pub clamped: bool,
    pub i_mac_ua: f64,
}

/// The emulated Ising machine: a logical model, its MAC substrate and the p-bits.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingMachine {
    model: IsingModel,
    substrate: Substrate,
    pool: SmtjPool,
    config: MachineConfig,
}

impl IsingMachine {
    /// Machine computing fields in exact arithmetic.
    pub fn software(
        model: IsingModel,
        g_scale_us: f64,
        pool: SmtjPool,
        config: MachineConfig,
    ) -> Result<Self> {
        if !(g_scale_us > 0.0) {
            return Err(invalid("G_scale", "must be positive"));
        }
        Self::build(model, Substrate::Software { g_scale_us }, pool, config)
    }

    /// Machine reading fields from `array`, which must hold `lowering`'s layout.
    ///
    /// The array's column polarity is set from the lowering.
    pub fn on_crossbar(
        model: IsingModel,
        lowering: &CrossbarLowering,
        mut array: CrossbarArray,
        read_noise: Option<ReadNoise>,
        pool: SmtjPool,
        config: MachineConfig,
    ) -> Result<Self> {
        check_len("lowering spins", model.len(), lowering.spins)?;
        if lowering.domain != model.domain() {
            return Err(Error::DomainMismatch {
                model: model.domain(),
                state: lowering.domain,
            });
        }
        check_len("crossbar rows", model.len(), array.rows())?;
        check_len("crossbar cols", lowering.columns(), array.cols())?;
        array.set_column_polarity(lowering.column_polarity.clone())?;
        Self::build(
            model,
            Substrate::Crossbar {
                array,
                read_noise,
                g_scale_us: lowering.g_scale_us,
            },
            pool,
            config,
        )
    }

    fn build(
        model: IsingModel,
        substrate: Substrate,
        pool: SmtjPool,
        config: MachineConfig,
    ) -> Result<Self> {
        pool.validate(model.len())?;
        if !(config.pulse_width_s > 0.0) {
            return Err(invalid("pulse_width", "must be positive"));
        }
        if let UpdateOrder::Chromatic(classes) = &config.order {
            ColorClasses::new(classes.classes().to_vec(), &model)?;
        }
        Ok(Self {
            model,
            substrate,
            pool,
            config,
        })
    }

    pub fn model(&self) -> &IsingModel {
        &self.model
    }

    pub fn substrate(&self) -> &Substrate {
        &self.substrate
    }

    pub fn substrate_mut(&mut self) -> &mut Substrate {
        &mut self.substrate
    }

    pub fn pool(&self) -> &SmtjPool {
        &self.pool
    }

    pub fn config(&self) -> &MachineConfig {
        &self.config
    }

    pub fn set_mode(&mut self, mode: SamplerMode) {
        self.config.mode = mode;
    }

    pub fn g_scale_us(&self) -> f64 {
        match &self.substrate {
            Substrate::Software { g_scale_us } | Substrate::Crossbar { g_scale_us, .. } => {
                *g_scale_us
            }
        }
    }

    fn check_state(&self, state: &SpinState) -> Result<()> {
        if state.domain() != self.model.domain() {
            return Err(Error::DomainMismatch {
                model: self.model.domain(),
                state: state.domain(),
            });
        }
        check_len("state length", self.model.len(), state.len())
    }

    fn check_v_read(&self, v_read: f64) -> Result<()> {
        let bound = match &self.substrate {
            Substrate::Software { .. } => f64::INFINITY,
            Substrate::Crossbar { array, .. } => array.v_read_max(),
        };
        if v_read >= 0.0 && v_read <= bound {
            Ok(())
        } else {
            Err(invalid(
                "v_read",
                alloc::format!("{v_read} V outside [0, {bound}] V"),
            ))
        }
    }

    /// MAC current of row `i` in µA.
    fn row_current<R: Rng + ?Sized>(
        &self,
        state: &SpinState,
        i: usize,
        v_read: f64,
        rng: &mut R,
    ) -> Result<f64> {
        match &self.substrate {
            Substrate::Software { g_scale_us } => {
                Ok(g_scale_us * v_read * self.model.field_of(state.values(), i))
            }
            Substrate::Crossbar {
                array, read_noise, ..
            } => {
                let drive = spin_drive_voltages(state, array.column_polarity(), v_read)?;
                array.mac_row_current(i, &drive, read_noise.as_ref(), rng)
            }
        }
    }

    /// Probability that the spin goes high given a MAC current, and whether the
    /// bias was clamped. No randomness is consumed.
    pub fn high_probability_for_current(&self, i: usize, i_mac_ua: f64) -> Result<(f64, bool)> {
        let device = self.pool.device(i);
        match self.config.mode {
            SamplerMode::HardwareFaithful => {
                let drive = device.drive_voltage(i_mac_ua);
                Ok((
                    device.ap_probability_after(drive.volts, self.config.pulse_width_s)?,
                    drive.clamped,
                ))
            }
            SamplerMode::IdealSigmoid => Ok((
                sigmoid(device.slope_per_volt * device.r_alpha() * i_mac_ua * 1e-6),
                false,
            )),
        }
    }

    /// Noise-free probability that spin `i` goes high in the current mode.
    pub fn high_probability(&self, state: &SpinState, i: usize, v_read: f64) -> Result<f64> {
        self.check_state(state)?;
        if i >= self.model.len() {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: self.model.len(),
            });
        }
        self.check_v_read(v_read)?;
        let current = match &self.substrate {
            Substrate::Software { g_scale_us } => {
                g_scale_us * v_read * self.model.field_of(state.values(), i)
            }
            Substrate::Crossbar { array, .. } => {
                let drive = spin_drive_voltages(state, array.column_polarity(), v_read)?;
                array.mac_current(&drive)?[i]
            }
        };
        Ok(self.high_probability_for_current(i, current)?.0)
    }

    fn decide<R: Rng + ?Sized>(
        &self,
        i: usize,
        i_mac_ua: f64,
        rng: &mut R,
    ) -> Result<(bool, bool)> {
        let device = self.pool.device(i);
        match self.config.mode {
            SamplerMode::HardwareFaithful => {
                let drive = device.drive_voltage(i_mac_ua);
                let readout = device.sample(drive.volts, self.config.pulse_width_s, rng)?;
                Ok((readout.state == MtjState::AP, drive.clamped))
            }
            SamplerMode::IdealSigmoid => {
                let p = sigmoid(device.slope_per_volt * device.r_alpha() * i_mac_ua * 1e-6);
                Ok((rng.random::<f64>() < p, false))
            }
        }
    }

    /// One Gibbs update of spin `i` at read voltage `v_read`.
    pub fn gibbs_step<R: Rng + ?Sized>(
        &self,
        state: &mut SpinState,
        i: usize,
        v_read: f64,
        rng: &mut R,
    ) -> Result<StepOutcome> {
        self.check_state(state)?;
        if i >= self.model.len() {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: self.model.len(),
            });
        }
        self.check_v_read(v_read)?;
        self.step_unchecked(state, i, v_read, rng)
    }

    fn step_unchecked<R: Rng + ?Sized>(
        &self,
        state: &mut SpinState,
        i: usize,
        v_read: f64,
        rng: &mut R,
    ) -> Result<StepOutcome> {
        let i_mac_ua = self.row_current(state, i, v_read, rng)?;
        let (high, clamped) = self.decide(i, i_mac_ua, rng)?;
        let flipped = state.is_high(i) != high;
        state.set_high(i, high);
        Ok(StepOutcome {
            high,
            flipped,
            clamped,
            i_mac_ua,
        })
    }

    /// Updates every class of `classes` in turn; members of a class sample
    /// simultaneously from the state before that class.
    ///
    /// Member `i` of a class draws from its own ChaCha stream `i`, keyed by one
    /// word taken from `rng` per class, so the result does not depend on the
    /// order in which members are evaluated. The partition is validated against
    /// the model before any spin changes.
    pub fn chromatic_sweep<R: Rng + ?Sized>(
        &self,
        state: &mut SpinState,
        classes: &ColorClasses,
        v_read: f64,
        rng: &mut R,
    ) -> Result<SweepOutcome> {
        self.check_state(state)?;
        self.check_v_read(v_read)?;
        ColorClasses::new(classes.classes().to_vec(), &self.model)?;
        let mut outcome = SweepOutcome::default();
        for class in classes.classes() {
            let class_outcome = self.update_class(state, class, v_read, rng)?;
            outcome.flipped.extend(class_outcome.flipped);
            outcome.clamp_events += class_outcome.clamp_events;
        }
        Ok(outcome)
    }

    fn update_class<R: Rng + ?Sized>(
        &self,
        state: &mut SpinState,
        members: &[usize],
        v_read: f64,
        rng: &mut R,
    ) -> Result<SweepOutcome> {
        let key = rng.next_u64();
        let snapshot = state.clone();
        let mut decisions = Vec::with_capacity(members.len());
        for &i in members {
            let mut stream = ChaCha8Rng::seed_from_u64(key);
            stream.set_stream(i as u64);
            let current = self.row_current(&snapshot, i, v_read, &mut stream)?;
            decisions.push(self.decide(i, current, &mut stream)?);
        }
        let mut outcome = SweepOutcome::default();
        for (&i, &(high, clamped)) in members.iter().zip(&decisions) {
            if state.is_high(i) != high {
                outcome.flipped.push(i);
            }
            outcome.clamp_events += u64::from(clamped);
            state.set_high(i, high);
        }
        Ok(outcome)
    }

    /// Runs the schedule from `init` with a ChaCha8 stream seeded by `seed`.
    pub fn run_annealing(
        &self,
        schedule: &AnnealSchedule,
        init: InitialState,
        options: &TraceOptions,
        seed: u64,
    ) -> Result<RunTrace> {
        self.run_annealing_observed(schedule, init, options, seed, |_, _| {})
    }

    /// [`Self::run_annealing`], calling `observe(updates_done, state)` after
    /// every single-site update (after every class in chromatic order).
    pub fn run_annealing_observed<F>(
        &self,
        schedule: &AnnealSchedule,
        init: InitialState,
        options: &TraceOptions,
        seed: u64,
        mut observe: F,
    ) -> Result<RunTrace>
    where
        F: FnMut(u64, &SpinState),
    {
        schedule.validate()?;
        self.check_v_read(schedule.v_end)?;
        let n = self.model.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut state = match init {
            InitialState::Random => SpinState::random(self.model.domain(), n, &mut rng),
            InitialState::Given(s) => {
                self.check_state(&s)?;
                s
            }
        };
        let mut trace = RunTrace {
            seed,
            initial_state: state.clone(),
            records: Vec::new(),
            snapshots: Vec::new(),
            final_state: state.clone(),
            final_energy: 0.0,
            clamp_events: 0,
            updates: 0,
        };
        let mut energy = self.model.energy_of(state.values());
        if options.snapshot_stride > 0 {
            trace.snapshots.push(Snapshot {
                iteration: 0,
                energy,
                state: state.clone(),
            });
        }

        let mut done = 0u64;
        let mut permutation: Vec<usize> = (0..n).collect();
        let mut class_cursor = 0usize;
        while done < schedule.total_updates {
            let v_read = schedule.v_read_at(done);
            let sites: Vec<usize> = match &self.config.order {
                UpdateOrder::Sequential => alloc::vec![(done % n as u64) as usize],
                UpdateOrder::Shuffled => {
                    let pos = (done % n as u64) as usize;
                    if pos == 0 {
                        permutation.shuffle(&mut rng);
                    }
                    alloc::vec![permutation[pos]]
                }
                UpdateOrder::Chromatic(classes) => {
                    let class = &classes.classes()[class_cursor];
                    class_cursor = (class_cursor + 1) % classes.len();
                    let room = (schedule.total_updates - done) as usize;
                    class[..class.len().min(room)].to_vec()
                }
            };

            let flipped: Vec<usize> =
                if sites.len() == 1 && !matches!(self.config.order, UpdateOrder::Chromatic(_)) {
                    let i = sites[0];
                    let delta = self.model.flip_delta_of(state.values(), i);
                    let step = self.step_unchecked(&mut state, i, v_read, &mut rng)?;
                    trace.clamp_events += u64::from(step.clamped);
                    if step.flipped {
                        energy += delta;
                        alloc::vec![i]
                    } else {
                        Vec::new()
                    }
                } else {
                    let before = state.clone();
                    let outcome = self.update_class(&mut state, &sites, v_read, &mut rng)?;
                    trace.clamp_events += outcome.clamp_events;
                    // members are mutually uncoupled, so deltas against `before` add up
                    for &i in &outcome.flipped {
                        energy += self.model.flip_delta_of(before.values(), i);
                    }
                    outcome.flipped
                };

            for (k, &site) in sites.iter().enumerate() {
                let iteration = done + k as u64 + 1;
                if iteration.is_multiple_of(ENERGY_RESYNC_INTERVAL) {
                    energy = self.model.energy_of(state.values());
                }
                if options.record_updates {
                    trace.records.push(UpdateRecord {
                        iteration,
                        v_read,
                        site,
                        flipped: flipped.contains(&site),
                        energy,
                    });
                }
                if options.snapshot_stride > 0 && iteration.is_multiple_of(options.snapshot_stride)
                {
                    trace.snapshots.push(Snapshot {
                        iteration,
                        energy,
                        state: state.clone(),
                    });
                }
            }
            done += sites.len() as u64;
            observe(done, &state);
        }

        trace.updates = done;
        trace.final_energy = self.model.energy_of(state.values());
        trace.final_state = state;
        Ok(trace)
    }
}

/// Spins flipped by a chromatic sweep, in update order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SweepOutcome {
    pub flipped: Vec<usize>,
    pub clamp_events: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InitialState {
    /// Uniform random spins drawn from the run's seed.
    Random,
    Given(SpinState),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceOptions {
    /// Keep one [`UpdateRecord`] per single-site update.
    pub record_updates: bool,
    /// Store the full state every this many updates; 0 disables snapshots.
    pub snapshot_stride: u64,
}

impl Default for TraceOptions {
    fn default() -> Self {
        Self {
            record_updates: true,
            snapshot_stride: 50,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateRecord {
    /// 1-based count of single-site updates completed.
    pub iteration: u64,
    pub v_read: f64,
    pub site: usize,
    pub flipped: bool,
    /// Model energy after the update (after the whole class in chromatic order).
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub iteration: u64,
    pub energy: f64,
    pub state: SpinState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub seed: u64,
    pub initial_state: SpinState,
    pub records: Vec<UpdateRecord>,
    pub snapshots: Vec<Snapshot>,
    pub final_state: SpinState,
    pub final_energy: f64,
    pub clamp_events: u64,
    pub updates: u64,
}

impl RunTrace {
    /// First iteration whose recorded energy is within `tolerance` of `target`.
    pub fn first_hit(&self, target: f64, tolerance: f64) -> Option<u64> {
        if (self.initial_energy_hint() - target).abs() <= tolerance {
            return Some(0);
        }
        self.records
            .iter()
            .find(|r| (r.energy - target).abs() <= tolerance)
            .map(|r| r.iteration)
    }

    fn initial_energy_hint(&self) -> f64 {
        self.snapshots
            .first()
            .filter(|s| s.iteration == 0)
            .map_or(f64::NAN, |s| s.energy)
    }
}
