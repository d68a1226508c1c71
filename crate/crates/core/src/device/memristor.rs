use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{check_len, invalid, Error, Result};
use crate::ising::SpinState;
use crate::math::{log10, sqrt};

/// Rows of the physical 2T1R array.
pub const HW_MAX_ROWS: usize = 32;
/// Columns of the physical 2T1R array.
pub const HW_MAX_COLS: usize = 64;

/// Retention clock origin: drift is measured in decades above this age.
const DRIFT_ORIGIN_HOURS: f64 = 1e-3;

/// Sign applied to a column's read voltage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Polarity {
    #[default]
    Positive,
    Negative,
}

impl Polarity {
    #[inline]
    pub fn sign(self) -> f64 {
        match self {
            Polarity::Positive => 1.0,
            Polarity::Negative => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ArrayGeometry {
    /// Bounded by the physical 32 × 64 array.
    #[default]
    HardwareFaithful,
    Unconstrained,
}

/// Dense row-major conductance matrix in µS.
#[derive(Debug, Clone, PartialEq)]
pub struct ConductanceMap {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl ConductanceMap {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            values: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let n_rows = rows.len();
        let mut values = Vec::with_capacity(n_rows * cols);
        for row in rows {
            check_len("conductance row length", cols, row.len())?;
            values.extend(row);
        }
        if let Some(bad) = values.iter().find(|g| !(**g >= 0.0) || !g.is_finite()) {
            return Err(invalid(
                "conductance",
                alloc::format!("{bad} µS is not a valid conductance"),
            ));
        }
        Ok(Self {
            rows: n_rows,
            cols,
            values,
        })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.values[row * self.cols + col] = value;
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.values[row * self.cols..(row + 1) * self.cols]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// One memristor. Conductances in µS, timestamps in hours of array time.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MemristorCell {
    pub target_us: f64,
    /// Conductance accepted by the verify step.
    pub programmed_us: f64,
    /// Accumulated retention drift relative to `programmed_us`.
    pub drift_us: f64,
    pub programmed_at_h: f64,
    pub pulses: u32,
}

impl MemristorCell {
    #[inline]
    pub fn conductance_us(&self) -> f64 {
        (self.programmed_us + self.drift_us).max(0.0)
    }

    #[inline]
    pub fn is_programmed(&self) -> bool {
        self.target_us > 0.0
    }
}

/// Program-and-verify loop parameters.
///
/// Each iteration issues one RESET pulse that lowers the conductance by
/// `approach_fraction` of the remaining distance to target plus Gaussian noise,
/// then reads it back. A cell that undershoots the window is SET back to
/// `start_us` (this also costs a pulse).
#[derive(Debug, Clone, PartialEq)]
pub struct ProgramVerifyConfig {
    pub tolerance_us: f64,
    pub max_pulses: u32,
    pub per_pulse_noise_sigma_us: f64,
    /// Re-read after the settling delay, adding relaxation noise of half the pulse noise.
    pub settle_check: bool,
    pub start_us: f64,
    pub approach_fraction: f64,
    /// Keep failed cells at their last conductance instead of returning an error.
    pub allow_degraded: bool,
}

impl Default for ProgramVerifyConfig {
    fn default() -> Self {
        Self {
            tolerance_us: 3.0,
            max_pulses: 200,
            per_pulse_noise_sigma_us: 0.8,
            settle_check: true,
            start_us: 160.0,
            approach_fraction: 0.8,
            allow_degraded: false,
        }
    }
}

impl ProgramVerifyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance_us > 0.0) {
            return Err(invalid("tolerance_us", "must be positive"));
        }
        if self.max_pulses == 0 {
            return Err(invalid("max_pulses", "must be at least 1"));
        }
        if !(self.per_pulse_noise_sigma_us >= 0.0) {
            return Err(invalid("per_pulse_noise_sigma_us", "must be nonnegative"));
        }
        if !(self.approach_fraction > 0.0 && self.approach_fraction <= 1.0) {
            return Err(invalid("approach_fraction", "must lie in (0, 1]"));
        }
        if !(self.start_us > 0.0) {
            return Err(invalid("start_us", "must be positive"));
        }
        Ok(())
    }
}

/// Outcome of [`CrossbarArray::program_and_verify`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ProgrammingReport {
    pub total_pulses: u64,
    pub programmed_cells: usize,
    /// Cells still outside the window after `max_pulses`.
    pub failed: Vec<(usize, usize)>,
}

/// Retention drift: a zero-mean Gaussian walk in log-time, hard-clamped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftModel {
    /// Standard deviation added per decade of age (µS).
    pub sigma_per_decade_us: f64,
    /// Maximum |drift| relative to the programmed value (µS).
    pub bound_us: f64,
}

impl Default for DriftModel {
    fn default() -> Self {
        Self {
            sigma_per_decade_us: 1.0,
            bound_us: 15.0,
        }
    }
}

/// Gaussian read noise on MAC currents.
///
/// The standard deviation is `relative_sigma × full_scale_us × max|V_drive|`, in µA.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReadNoise {
    pub relative_sigma: f64,
    pub full_scale_us: f64,
}

impl Default for ReadNoise {
    fn default() -> Self {
        Self {
            relative_sigma: 0.01,
            full_scale_us: 140.0,
        }
    }
}

/// A memristor crossbar: rows produce MAC currents, columns receive drive voltages.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossbarArray {
    rows: usize,
    cols: usize,
    cells: Vec<MemristorCell>,
    column_polarity: Vec<Polarity>,
    clock_h: f64,
    v_read_max: f64,
}

impl CrossbarArray {
    pub fn new(rows: usize, cols: usize, geometry: ArrayGeometry) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(invalid("array", "rows and cols must be positive"));
        }
        if geometry == ArrayGeometry::HardwareFaithful {
            if rows > HW_MAX_ROWS {
                return Err(Error::Capacity {
                    what: "crossbar rows",
                    size: rows,
                    limit: HW_MAX_ROWS,
                });
            }
            if cols > HW_MAX_COLS {
                return Err(Error::Capacity {
                    what: "crossbar columns",
                    size: cols,
                    limit: HW_MAX_COLS,
                });
            }
        }
        Ok(Self {
            rows,
            cols,
            cells: vec![MemristorCell::default(); rows * cols],
            column_polarity: vec![Polarity::Positive; cols],
            clock_h: 0.0,
            v_read_max: 1.0,
        })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn column_polarity(&self) -> &[Polarity] {
        &self.column_polarity
    }

    pub fn set_column_polarity(&mut self, polarity: Vec<Polarity>) -> Result<()> {
        check_len("column polarity", self.cols, polarity.len())?;
        self.column_polarity = polarity;
        Ok(())
    }

    /// Largest |drive voltage| accepted by the MAC.
    pub fn v_read_max(&self) -> f64 {
        self.v_read_max
    }

    pub fn set_v_read_max(&mut self, volts: f64) -> Result<()> {
        if !(volts > 0.0) {
            return Err(invalid("v_read_max", "must be positive"));
        }
        self.v_read_max = volts;
        Ok(())
    }

    /// Hours of array time elapsed since construction.
    pub fn clock_hours(&self) -> f64 {
        self.clock_h
    }

    #[inline]
    pub fn cell(&self, row: usize, col: usize) -> &MemristorCell {
        &self.cells[row * self.cols + col]
    }

    #[inline]
    pub fn conductance(&self, row: usize, col: usize) -> f64 {
        self.cell(row, col).conductance_us()
    }

    pub fn conductances(&self) -> ConductanceMap {
        ConductanceMap {
            rows: self.rows,
            cols: self.cols,
            values: self
                .cells
                .iter()
                .map(MemristorCell::conductance_us)
                .collect(),
        }
    }

    fn check_targets(&self, targets: &ConductanceMap) -> Result<()> {
        check_len("target rows", self.rows, targets.rows())?;
        check_len("target cols", self.cols, targets.cols())?;
        if let Some(bad) = targets.values().iter().find(|g| !(**g >= 0.0)) {
            return Err(invalid("targets", alloc::format!("{bad} µS is negative")));
        }
        Ok(())
    }

    /// Writes every target exactly, as an ideal array would.
    pub fn program_exact(&mut self, targets: &ConductanceMap) -> Result<()> {
        self.check_targets(targets)?;
        let now = self.clock_h;
        for (cell, &t) in self.cells.iter_mut().zip(targets.values()) {
            *cell = MemristorCell {
                target_us: t,
                programmed_us: t,
                drift_us: 0.0,
                programmed_at_h: now,
                pulses: 0,
            };
        }
        Ok(())
    }

    /// Simulated program-and-verify of every cell towards `targets`.
    ///
    /// Zero targets leave the cell off with no pulses. Failures after
    /// `max_pulses` abort with [`Error::Programming`] unless the config allows
    /// degraded operation, in which case they are listed in the report.
    pub fn program_and_verify<R: Rng + ?Sized>(
        &mut self,
        targets: &ConductanceMap,
        config: &ProgramVerifyConfig,
        rng: &mut R,
    ) -> Result<ProgrammingReport> {
        self.check_targets(targets)?;
        config.validate()?;
        let pulse_noise = Normal::new(0.0, config.per_pulse_noise_sigma_us)
            .map_err(|_| invalid("per_pulse_noise_sigma_us", "invalid sigma"))?;
        let settle_noise = Normal::new(0.0, 0.5 * config.per_pulse_noise_sigma_us)
            .map_err(|_| invalid("per_pulse_noise_sigma_us", "invalid sigma"))?;
        let now = self.clock_h;
        let mut report = ProgrammingReport::default();

        for (idx, cell) in self.cells.iter_mut().enumerate() {
            let target = targets.values()[idx];
            *cell = MemristorCell {
                target_us: target,
                programmed_at_h: now,
                ..MemristorCell::default()
            };
            if target == 0.0 {
                continue;
            }
            report.programmed_cells += 1;
            let mut g = config.start_us;
            let mut pulses = 0u32;
            let mut verified = false;
            while pulses < config.max_pulses {
                g = if g < target - config.tolerance_us {
                    config.start_us
                } else {
                    (g - config.approach_fraction * (g - target) + pulse_noise.sample(rng)).max(0.0)
                };
                pulses += 1;
                if config.settle_check {
                    g = (g + settle_noise.sample(rng)).max(0.0);
                }
                if (g - target).abs() <= config.tolerance_us {
                    verified = true;
                    break;
                }
            }
            cell.programmed_us = g;
            cell.pulses = pulses;
            report.total_pulses += u64::from(pulses);
            if !verified {
                report.failed.push((idx / self.cols, idx % self.cols));
            }
        }

        if !report.failed.is_empty() && !config.allow_degraded {
            return Err(Error::Programming {
                failed: report.failed,
            });
        }
        Ok(report)
    }

    fn check_drive(&self, drive: &[f64]) -> Result<()> {
        check_len("drive voltages", self.cols, drive.len())?;
        if let Some(v) = drive.iter().find(|v| !(v.abs() <= self.v_read_max)) {
            return Err(invalid(
                "drive voltage",
                alloc::format!("{v} V exceeds the ±{} V read bound", self.v_read_max),
            ));
        }
        Ok(())
    }

    /// Kirchhoff summation `I_i = Σ_j G_ij V_j` (µA) for every row.
    pub fn mac_current(&self, drive: &[f64]) -> Result<Vec<f64>> {
        self.check_drive(drive)?;
        Ok((0..self.rows).map(|r| self.mac_row(r, drive)).collect())
    }

    /// [`Self::mac_current`] with per-read Gaussian current noise.
    pub fn mac_current_noisy<R: Rng + ?Sized>(
        &self,
        drive: &[f64],
        noise: &ReadNoise,
        rng: &mut R,
    ) -> Result<Vec<f64>> {
        self.check_drive(drive)?;
        Ok((0..self.rows)
            .map(|r| self.mac_row(r, drive) + noise_sample(noise, drive, rng))
            .collect())
    }

    #[inline]
    pub(crate) fn mac_row(&self, row: usize, drive: &[f64]) -> f64 {
        self.cells[row * self.cols..(row + 1) * self.cols]
            .iter()
            .zip(drive)
            .map(|(c, v)| c.conductance_us() * v)
            .sum()
    }

    /// Single-row MAC, optionally with read noise. Used by the sampler.
    pub fn mac_row_current<R: Rng + ?Sized>(
        &self,
        row: usize,
        drive: &[f64],
        noise: Option<&ReadNoise>,
        rng: &mut R,
    ) -> Result<f64> {
        if row >= self.rows {
            return Err(Error::IndexOutOfRange {
                index: row,
                len: self.rows,
            });
        }
        self.check_drive(drive)?;
        let clean = self.mac_row(row, drive);
        Ok(match noise {
            Some(noise) => clean + noise_sample(noise, drive, rng),
            None => clean,
        })
    }

    /// Ages the array by `elapsed_hours`.
    ///
    /// Each programmed cell takes Gaussian steps whose variance is
    /// `sigma_per_decade² × Δdecades` of cell age (counted from 10⁻³ h), and its
    /// accumulated drift is clamped to `±bound` and to nonnegative conductance.
    /// Unprogrammed cells stay at 0 µS.
    pub fn apply_drift<R: Rng + ?Sized>(
        &mut self,
        elapsed_hours: f64,
        model: &DriftModel,
        rng: &mut R,
    ) -> Result<()> {
        if !(elapsed_hours >= 0.0) {
            return Err(invalid("elapsed_hours", "must be nonnegative"));
        }
        if !(model.sigma_per_decade_us >= 0.0) || !(model.bound_us >= 0.0) {
            return Err(invalid(
                "drift model",
                "sigma and bound must be nonnegative",
            ));
        }
        let before = self.clock_h;
        let after = before + elapsed_hours;
        self.clock_h = after;
        let unit = Normal::new(0.0, 1.0).expect("unit normal");
        for cell in self.cells.iter_mut().filter(|c| c.is_programmed()) {
            let decades = age_decades(after - cell.programmed_at_h)
                - age_decades(before - cell.programmed_at_h);
            if decades <= 0.0 {
                continue;
            }
            let step = model.sigma_per_decade_us * sqrt(decades) * unit.sample(rng);
            cell.drift_us = (cell.drift_us + step)
                .clamp(-model.bound_us, model.bound_us)
                .max(-cell.programmed_us);
        }
        Ok(())
    }
}

fn age_decades(age_h: f64) -> f64 {
    log10(age_h.max(DRIFT_ORIGIN_HOURS) / DRIFT_ORIGIN_HOURS)
}

fn noise_sample<R: Rng + ?Sized>(noise: &ReadNoise, drive: &[f64], rng: &mut R) -> f64 {
    let v_max = drive.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let sigma = noise.relative_sigma * noise.full_scale_us * v_max;
    if sigma > 0.0 {
        Normal::new(0.0, sigma).expect("positive sigma").sample(rng)
    } else {
        0.0
    }
}

/// Column drive voltages for a spin state.
///
/// Column `j` receives `polarity_j × s_j × V_read`: with negative polarity an
/// Ising spin `+1` maps to `-V_read` and `-1` to `+V_read`, while a QUBO `1`
/// maps to `-V_read` and `0` to ground. When `polarity` has one entry more than
/// the state, the extra column is the bias column, driven at `polarity × V_read`.
pub fn spin_drive_voltages(
    state: &SpinState,
    polarity: &[Polarity],
    v_read: f64,
) -> Result<Vec<f64>> {
    let n = state.len();
    if polarity.len() != n && polarity.len() != n + 1 {
        return Err(Error::Dimension {
            what: "polarity (spins, optionally plus bias column)",
            expected: n,
            actual: polarity.len(),
        });
    }
    let mut drive = Vec::with_capacity(polarity.len());
    drive.extend(
        state
            .values()
            .iter()
            .zip(polarity)
            .map(|(&s, p)| p.sign() * f64::from(s) * v_read),
    );
    if polarity.len() == n + 1 {
        drive.push(polarity[n].sign() * v_read);
    }
    Ok(drive)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ising::SpinDomain;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn programmed(rows: Vec<Vec<f64>>) -> CrossbarArray {
        let map = ConductanceMap::from_rows(rows).unwrap();
        let mut a =
            CrossbarArray::new(map.rows(), map.cols(), ArrayGeometry::Unconstrained).unwrap();
        a.program_exact(&map).unwrap();
        a
    }

    #[test]
    fn hardware_geometry_is_bounded() {
        assert!(CrossbarArray::new(32, 64, ArrayGeometry::HardwareFaithful).is_ok());
        assert!(matches!(
            CrossbarArray::new(33, 10, ArrayGeometry::HardwareFaithful),
            Err(Error::Capacity { .. })
        ));
        assert!(matches!(
            CrossbarArray::new(10, 65, ArrayGeometry::HardwareFaithful),
            Err(Error::Capacity { .. })
        ));
        assert!(CrossbarArray::new(100, 100, ArrayGeometry::Unconstrained).is_ok());
    }

    #[test]
    fn mac_hand_evaluation() {
        let a = programmed(vec![vec![33.0, 66.0]]);
        let i = a.mac_current(&[-0.1, 0.1]).unwrap();
        assert!((i[0] - 3.3).abs() < 1e-12);
        assert_eq!(a.mac_current(&[0.0, 0.0]).unwrap(), vec![0.0]);
    }

    #[test]
    fn mac_rejects_bad_drive() {
        let a = programmed(vec![vec![33.0, 66.0]]);
        assert!(a.mac_current(&[0.1]).is_err());
        assert!(a.mac_current(&[0.1, 1.5]).is_err());
    }

    #[test]
    fn noisy_mac_scatters_around_ideal() {
        let a = programmed(vec![vec![140.0, 140.0, 0.0]]);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let noise = ReadNoise::default();
        let drive = [0.2, -0.1, 0.2];
        let n = 20_000;
        let samples: Vec<f64> = (0..n)
            .map(|_| a.mac_current_noisy(&drive, &noise, &mut rng).unwrap()[0])
            .collect();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        // ideal 14 µA, sigma = 0.01 × 140 × 0.2 = 0.28 µA
        assert!((mean - 14.0).abs() < 0.02);
        assert!((var.sqrt() - 0.28).abs() < 0.01);
    }

    #[test]
    fn drive_voltage_rules() {
        let neg = [Polarity::Negative, Polarity::Negative];
        let pm = SpinState::new(SpinDomain::PlusMinusOne, vec![1, -1]).unwrap();
        assert_eq!(
            spin_drive_voltages(&pm, &neg, 0.1).unwrap(),
            vec![-0.1, 0.1]
        );
        let q = SpinState::new(SpinDomain::ZeroOne, vec![1, 0]).unwrap();
        let d = spin_drive_voltages(&q, &neg, 0.1).unwrap();
        assert_eq!(d[0], -0.1);
        assert_eq!(d[1], 0.0);
        let with_bias = [Polarity::Negative, Polarity::Negative, Polarity::Positive];
        assert_eq!(spin_drive_voltages(&q, &with_bias, 0.1).unwrap()[2], 0.1);
        assert!(spin_drive_voltages(&pm, &neg, 0.0)
            .unwrap()
            .iter()
            .all(|v| *v == 0.0));
        assert!(spin_drive_voltages(&pm, &neg[..1], 0.1).is_err());
    }

    #[test]
    fn off_cells_take_no_pulses() {
        let mut a = CrossbarArray::new(2, 2, ArrayGeometry::HardwareFaithful).unwrap();
        let t = ConductanceMap::from_rows(vec![vec![0.0, 66.0], vec![0.0, 0.0]]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let report = a
            .program_and_verify(&t, &ProgramVerifyConfig::default(), &mut rng)
            .unwrap();
        assert_eq!(report.programmed_cells, 1);
        assert_eq!(a.cell(0, 0).pulses, 0);
        assert_eq!(a.conductance(0, 0), 0.0);
        assert!((a.conductance(0, 1) - 66.0).abs() <= 3.0);
    }

    #[test]
    fn programming_hits_paper_levels() {
        let levels = [33.0, 66.0, 99.0, 140.0];
        let t = ConductanceMap::from_rows(vec![levels.to_vec(); 8]).unwrap();
        let mut a = CrossbarArray::new(8, 4, ArrayGeometry::HardwareFaithful).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        a.program_and_verify(&t, &ProgramVerifyConfig::default(), &mut rng)
            .unwrap();
        for r in 0..8 {
            for (c, level) in levels.iter().enumerate() {
                assert!((a.conductance(r, c) - level).abs() <= 3.0);
            }
        }
    }

    #[test]
    fn programming_is_deterministic_per_seed() {
        let t = ConductanceMap::from_rows(vec![vec![33.0, 99.0, 140.0]; 4]).unwrap();
        let run = |seed| {
            let mut a = CrossbarArray::new(4, 3, ArrayGeometry::HardwareFaithful).unwrap();
            a.program_and_verify(
                &t,
                &ProgramVerifyConfig::default(),
                &mut ChaCha8Rng::seed_from_u64(seed),
            )
            .unwrap();
            a
        };
        assert_eq!(run(5), run(5));
        assert_ne!(run(5), run(6));
    }

    #[test]
    fn programming_failure_is_reported() {
        let t = ConductanceMap::from_rows(vec![vec![66.0, 33.0]]).unwrap();
        let config = ProgramVerifyConfig {
            max_pulses: 1,
            ..ProgramVerifyConfig::default()
        };
        let mut a = CrossbarArray::new(1, 2, ArrayGeometry::HardwareFaithful).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let err = a.program_and_verify(&t, &config, &mut rng).unwrap_err();
        assert_eq!(
            err,
            Error::Programming {
                failed: vec![(0, 0), (0, 1)]
            }
        );

        let degraded = ProgramVerifyConfig {
            allow_degraded: true,
            ..config
        };
        let report = a.program_and_verify(&t, &degraded, &mut rng).unwrap();
        assert_eq!(report.failed.len(), 2);
    }

    #[test]
    fn program_verify_statistics_at_66_us() {
        let t = ConductanceMap::from_rows(vec![vec![66.0; 50]; 20]).unwrap();
        let mut a = CrossbarArray::new(20, 50, ArrayGeometry::HardwareFaithful).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(66);
        a.program_and_verify(&t, &ProgramVerifyConfig::default(), &mut rng)
            .unwrap();
        let g = a.conductances();
        let n = g.values().len() as f64;
        let mean = g.values().iter().sum::<f64>() / n;
        let sd = (g.values().iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!(sd <= 1.5, "sd {sd}");
    }

    #[test]
    fn drift_zero_elapsed_is_identity() {
        let mut a = programmed(vec![vec![33.0, 0.0, 140.0]]);
        let before = a.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        a.apply_drift(0.0, &DriftModel::default(), &mut rng)
            .unwrap();
        a.apply_drift(1e-3, &DriftModel::default(), &mut rng)
            .unwrap();
        assert_eq!(a.conductances(), before.conductances());
        assert!(a
            .apply_drift(-1.0, &DriftModel::default(), &mut rng)
            .is_err());
    }

    #[test]
    fn drift_stays_inside_envelope() {
        let mut a = programmed(vec![vec![2.0, 33.0, 66.0, 99.0, 140.0, 0.0]; 30]);
        let model = DriftModel {
            sigma_per_decade_us: 6.0,
            bound_us: 15.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..4 {
            a.apply_drift(180.0, &model, &mut rng).unwrap();
        }
        assert_eq!(a.clock_hours(), 720.0);
        let mut moved = false;
        for r in 0..30 {
            for c in 0..6 {
                let cell = a.cell(r, c);
                let g = cell.conductance_us();
                assert!(g >= 0.0);
                assert!((g - cell.programmed_us).abs() <= 15.0 + 1e-12);
                if c == 5 {
                    assert_eq!(g, 0.0);
                }
                moved |= g != cell.programmed_us;
            }
        }
        assert!(moved);
    }

    #[test]
    fn drift_spread_grows_with_log_time() {
        let model = DriftModel {
            sigma_per_decade_us: 1.0,
            bound_us: 1e9,
        };
        let spread = |hours: f64| {
            let mut a = programmed(vec![vec![100.0; 100]; 20]);
            a.apply_drift(hours, &model, &mut ChaCha8Rng::seed_from_u64(21))
                .unwrap();
            let g = a.conductances();
            let n = g.values().len() as f64;
            (g.values().iter().map(|x| (x - 100.0).powi(2)).sum::<f64>() / n).sqrt()
        };
        // 10^-2 h is one decade above the origin, 10^3 h is six.
        let one = spread(1e-2);
        let six = spread(1e3);
        assert!((one - 1.0).abs() < 0.08, "{one}");
        assert!((six - 6f64.sqrt()).abs() < 0.15, "{six}");
    }
}
