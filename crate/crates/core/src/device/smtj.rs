use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Exp, Normal};

use crate::error::{invalid, Error, Result};
use crate::math::{cosh, exp, ln, sigmoid};

/// `rate_scale × pulse` beyond which the transient term `e^{-Γt}` is below 10⁻¹⁷.
const SATURATION_EXPONENT: f64 = 20.0;

/// Magnetic configuration of the free layer relative to the reference layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MtjState {
    /// Parallel, low resistance.
    P,
    /// Antiparallel, high resistance.
    AP,
}

/// A superparamagnetic tunnel junction used as a p-bit.
///
/// At a fixed bias the junction is a two-state telegraph process with rates
/// `Γ_{P→AP} = r·e^{x/2}` and `Γ_{AP→P} = r·e^{-x/2}`, where
/// `x = K (V_mtj − V_0.5)` and `r` is `rate_scale`. Its stationary AP occupancy
/// is therefore `σ(x)` and it relaxes at `Γ = 2r·cosh(x/2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmtjDevice {
    /// Sigmoid slope `K` (1/V).
    pub slope_per_volt: f64,
    /// Bias giving `P(AP) = 1/2` (V).
    pub v_half: f64,
    pub r_p_ohm: f64,
    pub r_ap_ohm: f64,
    /// Series resistor `R_+` of the SMTJ branch.
    pub r_series_ohm: f64,
    pub v_compliance: f64,
    /// Attempt rate `r` of the telegraph model (1/s).
    pub rate_scale_hz: f64,
}

impl Default for SmtjDevice {
    /// Fast device: 5 %→95 % over 200 mV around 575 mV, saturated above ~200 ns.
    fn default() -> Self {
        Self {
            slope_per_volt: 2.0 * ln(19.0) / 0.2,
            v_half: 0.575,
            r_p_ohm: 6_600.0,
            r_ap_ohm: 13_200.0,
            r_series_ohm: 1_000.0,
            v_compliance: 1.0,
            rate_scale_hz: 1e8,
        }
    }
}

impl SmtjDevice {
    /// Slow device: same sigmoid, but pulses shorter than ~40 µs under-reach it.
    pub fn slow() -> Self {
        Self {
            rate_scale_hz: 2e5,
            ..Self::default()
        }
    }
}

/// Bias presented to the SMTJ after the current-to-voltage conversion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MtjDrive {
    pub volts: f64,
    /// The requested bias exceeded compliance and was clamped.
    pub clamped: bool,
}

/// A single end-of-pulse resistance measurement and its thresholded state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MtjReadout {
    pub resistance_ohm: f64,
    pub state: MtjState,
}

/// Dwell interval of a simulated telegraph trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TelegraphSegment {
    pub start_s: f64,
    pub end_s: f64,
    pub state: MtjState,
}

impl SmtjDevice {
    pub fn validate(&self) -> Result<()> {
        if !(self.slope_per_volt > 0.0 && self.slope_per_volt.is_finite()) {
            return Err(invalid("slope_per_volt", "K must be positive"));
        }
        if !(self.r_p_ohm > 0.0 && self.r_ap_ohm > self.r_p_ohm) {
            return Err(invalid("resistances", "need R_AP > R_P > 0"));
        }
        if !(self.r_series_ohm >= 0.0) {
            return Err(invalid("r_series_ohm", "must be nonnegative"));
        }
        if !(self.v_compliance > self.v_half) {
            return Err(invalid("v_compliance", "must exceed V_0.5"));
        }
        if !(self.rate_scale_hz > 0.0 && self.rate_scale_hz.is_finite()) {
            return Err(invalid("rate_scale_hz", "must be positive"));
        }
        Ok(())
    }

    /// Parallel resistance of a circular junction from its resistance-area product.
    pub fn r_p_from_ra(ra_ohm_um2: f64, diameter_nm: f64) -> f64 {
        let radius_um = diameter_nm * 1e-3 / 2.0;
        ra_ohm_um2 / (core::f64::consts::PI * radius_um * radius_um)
    }

    /// Resistance threshold `(R_AP + R_P) / 2` separating the two states.
    pub fn r_mean(&self) -> f64 {
        0.5 * (self.r_ap_ohm + self.r_p_ohm)
    }

    /// Current-to-voltage conversion constant `R_α = 2 (R̄_mtj + R_+)`.
    pub fn r_alpha(&self) -> f64 {
        2.0 * (self.r_mean() + self.r_series_ohm)
    }

    /// Shortest pulse for which the readout equals the stationary sigmoid.
    pub fn saturation_width(&self) -> f64 {
        SATURATION_EXPONENT / self.rate_scale_hz
    }

    #[inline]
    fn reduced_bias(&self, v_mtj: f64) -> f64 {
        self.slope_per_volt * (v_mtj - self.v_half)
    }

    fn check_compliance(&self, v_mtj: f64) -> Result<()> {
        if v_mtj <= self.v_compliance {
            Ok(())
        } else {
            Err(Error::Compliance {
                volts: v_mtj,
                compliance: self.v_compliance,
            })
        }
    }

    /// Saturated switching probability `P_AP = 1 / (1 + e^{-K (V − V_0.5)})`.
    pub fn probability(&self, v_mtj: f64) -> Result<f64> {
        self.check_compliance(v_mtj)?;
        Ok(sigmoid(self.reduced_bias(v_mtj)))
    }

    /// `V_mtj = V_0.5 + I_MAC R_α` for a MAC current in µA, clamped to compliance.
    pub fn drive_voltage(&self, i_mac_ua: f64) -> MtjDrive {
        let volts = self.v_half + i_mac_ua * 1e-6 * self.r_alpha();
        if volts > self.v_compliance {
            MtjDrive {
                volts: self.v_compliance,
                clamped: true,
            }
        } else {
            MtjDrive {
                volts,
                clamped: false,
            }
        }
    }

    /// Telegraph rates `(Γ_{P→AP}, Γ_{AP→P})` at bias `v_mtj`.
    pub fn switching_rates(&self, v_mtj: f64) -> (f64, f64) {
        let half = 0.5 * self.reduced_bias(v_mtj);
        (
            self.rate_scale_hz * exp(half),
            self.rate_scale_hz * exp(-half),
        )
    }

    /// AP probability at the end of a pulse of `pulse_width` seconds.
    ///
    /// The junction enters each pulse in P, so the occupancy rises as
    /// `σ(x) (1 − e^{−Γ t})`. From [`Self::saturation_width`] on it is `σ(x)`.
    pub fn ap_probability_after(&self, v_mtj: f64, pulse_width: f64) -> Result<f64> {
        if !(pulse_width > 0.0) {
            return Err(invalid("pulse_width", "must be positive"));
        }
        let stationary = self.probability(v_mtj)?;
        if pulse_width >= self.saturation_width() {
            return Ok(stationary);
        }
        let relax = 2.0 * self.rate_scale_hz * cosh(0.5 * self.reduced_bias(v_mtj));
        Ok(stationary * (1.0 - exp(-relax * pulse_width)))
    }

    #[inline]
    pub fn resistance(&self, state: MtjState) -> f64 {
        match state {
            MtjState::P => self.r_p_ohm,
            MtjState::AP => self.r_ap_ohm,
        }
    }

    /// Threshold a measured resistance against `R̄_mtj`.
    #[inline]
    pub fn classify(&self, resistance_ohm: f64) -> MtjState {
        if resistance_ohm > self.r_mean() {
            MtjState::AP
        } else {
            MtjState::P
        }
    }

    /// One pulse at `v_mtj` followed by a single resistance readout.
    pub fn sample<R: Rng + ?Sized>(
        &self,
        v_mtj: f64,
        pulse_width: f64,
        rng: &mut R,
    ) -> Result<MtjReadout> {
        let p_ap = self.ap_probability_after(v_mtj, pulse_width)?;
        let state = if rng.random::<f64>() < p_ap {
            MtjState::AP
        } else {
            MtjState::P
        };
        let resistance_ohm = self.resistance(state);
        Ok(MtjReadout {
            resistance_ohm,
            state: self.classify(resistance_ohm),
        })
    }

    /// Simulates the telegraph switching path for `duration` seconds.
    pub fn telegraph_trajectory<R: Rng + ?Sized>(
        &self,
        v_mtj: f64,
        duration: f64,
        initial: MtjState,
        rng: &mut R,
    ) -> Result<Vec<TelegraphSegment>> {
        self.check_compliance(v_mtj)?;
        if !(duration > 0.0) {
            return Err(invalid("duration", "must be positive"));
        }
        let (to_ap, to_p) = self.switching_rates(v_mtj);
        let leave_p = Exp::new(to_ap).map_err(|_| invalid("rate", "P→AP rate invalid"))?;
        let leave_ap = Exp::new(to_p).map_err(|_| invalid("rate", "AP→P rate invalid"))?;
        let mut segments = Vec::new();
        let mut t = 0.0;
        let mut state = initial;
        while t < duration {
            let dwell = match state {
                MtjState::P => leave_p.sample(rng),
                MtjState::AP => leave_ap.sample(rng),
            };
            let end = (t + dwell).min(duration);
            segments.push(TelegraphSegment {
                start_s: t,
                end_s: end,
                state,
            });
            t = end;
            state = match state {
                MtjState::P => MtjState::AP,
                MtjState::AP => MtjState::P,
            };
        }
        Ok(segments)
    }
}

/// Gaussian die-to-die spread of SMTJ parameters around a nominal device.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SmtjVariability {
    /// Relative standard deviation of `K`.
    pub slope_rel_sigma: f64,
    /// Standard deviation of `V_0.5` (V).
    pub v_half_sigma: f64,
    /// Standard deviation of `log10(rate_scale)`.
    pub rate_log10_sigma: f64,
}

impl SmtjVariability {
    pub fn is_zero(&self) -> bool {
        self.slope_rel_sigma == 0.0 && self.v_half_sigma == 0.0 && self.rate_log10_sigma == 0.0
    }

    /// Draws one device. `K` is truncated at 10 % of nominal and `V_0.5` kept
    /// below compliance.
    pub fn sample<R: Rng + ?Sized>(&self, nominal: &SmtjDevice, rng: &mut R) -> Result<SmtjDevice> {
        if !(self.slope_rel_sigma >= 0.0
            && self.v_half_sigma >= 0.0
            && self.rate_log10_sigma >= 0.0)
        {
            return Err(invalid("variability", "sigmas must be nonnegative"));
        }
        let unit = Normal::new(0.0, 1.0).expect("unit normal");
        let mut device = *nominal;
        device.slope_per_volt = (nominal.slope_per_volt
            * (1.0 + self.slope_rel_sigma * unit.sample(rng)))
        .max(0.1 * nominal.slope_per_volt);
        device.v_half = (nominal.v_half + self.v_half_sigma * unit.sample(rng))
            .min(nominal.v_compliance - 1e-3);
        device.rate_scale_hz =
            nominal.rate_scale_hz * libm::pow(10.0, self.rate_log10_sigma * unit.sample(rng));
        device.validate()?;
        Ok(device)
    }
}

/// Observed AP frequency at one bias.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub v_mtj: f64,
    pub ap_count: u64,
    pub trials: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmoidFit {
    pub slope_per_volt: f64,
    pub v_half: f64,
    pub iterations: usize,
}

/// Maximum-likelihood fit of `P_AP = σ(K (V − V_0.5))` to binomial sweep data.
///
/// Newton iterations on the logistic log-likelihood with the bias centered on
/// the mean sweep voltage.
pub fn fit_sigmoid(points: &[SweepPoint]) -> Result<SigmoidFit> {
    if points.len() < 2 {
        return Err(invalid("points", "need at least two bias points"));
    }
    if points
        .iter()
        .any(|p| p.trials == 0 || p.ap_count > p.trials)
    {
        return Err(invalid(
            "points",
            "each point needs 0 ≤ ap_count ≤ trials, trials > 0",
        ));
    }
    let center = points.iter().map(|p| p.v_mtj).sum::<f64>() / points.len() as f64;
    let log_likelihood = |a: f64, b: f64| -> f64 {
        points
            .iter()
            .map(|p| {
                let q = sigmoid(a + b * (p.v_mtj - center)).clamp(1e-300, 1.0 - 1e-16);
                p.ap_count as f64 * ln(q) + (p.trials - p.ap_count) as f64 * ln(1.0 - q)
            })
            .sum()
    };

    // a: logit at the center voltage, b: slope
    let (mut a, mut b) = (0.0f64, 1.0f64);
    let mut ll = log_likelihood(a, b);
    for iteration in 1..=200 {
        let (mut ga, mut gb, mut haa, mut hab, mut hbb) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for p in points {
            let x = p.v_mtj - center;
            let q = sigmoid(a + b * x);
            let n = p.trials as f64;
            let resid = p.ap_count as f64 - n * q;
            let w = n * q * (1.0 - q);
            ga += resid;
            gb += resid * x;
            haa += w;
            hab += w * x;
            hbb += w * x * x;
        }
        let det = haa * hbb - hab * hab;
        if !(det.abs() > 0.0) {
            return Err(invalid("points", "sweep does not constrain the sigmoid"));
        }
        let da = (hbb * ga - hab * gb) / det;
        let db = (haa * gb - hab * ga) / det;
        let mut step = 1.0;
        let (mut na, mut nb, mut nll) = (a + da, b + db, log_likelihood(a + da, b + db));
        while nll < ll && step > 1e-6 {
            step *= 0.5;
            na = a + step * da;
            nb = b + step * db;
            nll = log_likelihood(na, nb);
        }
        let converged = (na - a).abs() < 1e-12 && (nb - b).abs() < 1e-9 * nb.abs().max(1.0);
        a = na;
        b = nb;
        ll = nll;
        if converged {
            if !(b > 0.0) {
                return Err(invalid("points", "fitted slope is not positive"));
            }
            return Ok(SigmoidFit {
                slope_per_volt: b,
                v_half: center - a / b,
                iterations: iteration,
            });
        }
    }
    Err(invalid("points", "sigmoid fit did not converge"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn default_device_is_valid() {
        let d = SmtjDevice::default();
        d.validate().unwrap();
        // 5 % at V_0.5 - 100 mV, 95 % at V_0.5 + 100 mV
        assert!((d.probability(d.v_half + 0.1).unwrap() - 0.95).abs() < 1e-12);
        assert!((d.probability(d.v_half - 0.1).unwrap() - 0.05).abs() < 1e-12);
    }

    #[test]
    fn validation_catches_bad_parameters() {
        let d = SmtjDevice::default();
        assert!(SmtjDevice {
            slope_per_volt: 0.0,
            ..d
        }
        .validate()
        .is_err());
        assert!(SmtjDevice {
            r_ap_ohm: d.r_p_ohm,
            ..d
        }
        .validate()
        .is_err());
        assert!(SmtjDevice {
            v_compliance: d.v_half,
            ..d
        }
        .validate()
        .is_err());
        assert!(SmtjDevice {
            rate_scale_hz: 0.0,
            ..d
        }
        .validate()
        .is_err());
    }

    #[test]
    fn resistance_from_junction_geometry() {
        // RA = 6.7 Ω·µm², eCD = 36 nm
        let r_p = SmtjDevice::r_p_from_ra(6.7, 36.0);
        assert!((r_p - 6_582.3).abs() < 0.5, "{r_p}");
        assert!((r_p / 1e3 - 6.6).abs() < 0.05);
    }

    #[test]
    fn probability_midpoint_and_saturation() {
        let d = SmtjDevice::default();
        assert_eq!(d.probability(d.v_half).unwrap(), 0.5);
        assert!(d.probability(-50.0).unwrap() < 1e-300);
        let steep = SmtjDevice {
            slope_per_volt: 500.0,
            ..d
        };
        assert!(steep.probability(steep.v_compliance).unwrap() > 1.0 - 1e-12);
        assert!(matches!(
            d.probability(d.v_compliance + 1e-9),
            Err(Error::Compliance { .. })
        ));
    }

    #[test]
    fn probability_strictly_increasing() {
        let d = SmtjDevice::default();
        let mut last = -1.0;
        for k in 0..200 {
            let v = d.v_half - 0.3 + k as f64 * 0.003;
            let p = d.probability(v).unwrap();
            assert!(p > last);
            last = p;
        }
    }

    #[test]
    fn current_to_voltage_conversion() {
        let d = SmtjDevice::default();
        assert!((d.r_alpha() - 21_800.0).abs() < 1e-9);
        assert_eq!(
            d.drive_voltage(0.0),
            MtjDrive {
                volts: d.v_half,
                clamped: false
            }
        );
        let one = d.drive_voltage(1.0);
        assert!((one.volts - (d.v_half + 0.0218)).abs() < 1e-12);
        assert!(!one.clamped);
        let big = d.drive_voltage(1_000.0);
        assert_eq!(big.volts, d.v_compliance);
        assert!(big.clamped);
    }

    #[test]
    fn telegraph_rates_balance_to_sigmoid() {
        let d = SmtjDevice::slow();
        for dv in [-0.1, -0.02, 0.0, 0.03, 0.2] {
            let v = d.v_half + dv;
            let (up, down) = d.switching_rates(v);
            assert!((up / (up + down) - d.probability(v).unwrap()).abs() < 1e-14);
        }
    }

    #[test]
    fn long_pulse_equals_sigmoid_and_short_pulse_under_reaches() {
        let d = SmtjDevice::slow();
        let long = d.saturation_width();
        for k in 1..=10 {
            let v = d.v_half + 0.01 * k as f64;
            let sat = d.probability(v).unwrap();
            assert_eq!(d.ap_probability_after(v, long).unwrap(), sat);
            assert!(d.ap_probability_after(v, 1e-6).unwrap() < sat);
        }
        assert!(d.ap_probability_after(d.v_half, 0.0).is_err());
    }

    #[test]
    fn ap_probability_monotone_in_pulse_width() {
        let d = SmtjDevice::slow();
        let widths = [
            130e-9, 500e-9, 1e-6, 2e-6, 5e-6, 10e-6, 20e-6, 40e-6, 80e-6, 200e-6,
        ];
        for dv in [0.005, 0.03, 0.08] {
            let v = d.v_half + dv;
            let ps: Vec<f64> = widths
                .iter()
                .map(|&w| d.ap_probability_after(v, w).unwrap())
                .collect();
            assert!(ps.windows(2).all(|w| w[0] <= w[1]), "{ps:?}");
        }
    }

    #[test]
    fn closed_form_matches_simulated_telegraph_path() {
        // Independent route: simulate switching events and read the state at the
        // end of the pulse.
        let d = SmtjDevice::slow();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let v = d.v_half + 0.02;
        let width = 1.5e-6;
        let n = 40_000;
        let ap = (0..n)
            .filter(|_| {
                let path = d
                    .telegraph_trajectory(v, width, MtjState::P, &mut rng)
                    .unwrap();
                path.last().unwrap().state == MtjState::AP
            })
            .count();
        let p = d.ap_probability_after(v, width).unwrap();
        let freq = ap as f64 / n as f64;
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        assert!((freq - p).abs() < 4.0 * sigma, "{freq} vs {p}");
    }

    #[test]
    fn telegraph_path_covers_duration() {
        let d = SmtjDevice::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let path = d
            .telegraph_trajectory(d.v_half, 2e-6, MtjState::AP, &mut rng)
            .unwrap();
        assert_eq!(path[0].start_s, 0.0);
        assert_eq!(path[0].state, MtjState::AP);
        assert_eq!(path.last().unwrap().end_s, 2e-6);
        assert!(path
            .windows(2)
            .all(|w| w[0].end_s == w[1].start_s && w[0].state != w[1].state));
        // rate 1e8/s over 2 µs: hundreds of switches
        assert!(path.len() > 100);
    }

    #[test]
    fn midpoint_sampling_is_a_fair_coin() {
        let d = SmtjDevice::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 10_000;
        let ap = (0..n)
            .filter(|_| d.sample(d.v_half, 50e-6, &mut rng).unwrap().state == MtjState::AP)
            .count();
        let sigma = (0.25 / n as f64).sqrt();
        assert!((ap as f64 / n as f64 - 0.5).abs() < 3.0 * sigma);
    }

    #[test]
    fn readout_thresholds_resistance() {
        let d = SmtjDevice::default();
        assert_eq!(d.classify(d.r_ap_ohm), MtjState::AP);
        assert_eq!(d.classify(d.r_p_ohm), MtjState::P);
        assert_eq!(d.classify(d.r_mean() + 1.0), MtjState::AP);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = d.sample(d.v_half + 0.3, 1e-3, &mut rng).unwrap();
        assert_eq!(r.state, MtjState::AP);
        assert_eq!(r.resistance_ohm, d.r_ap_ohm);
    }

    #[test]
    fn fit_recovers_device_parameters() {
        let truth = SmtjDevice {
            slope_per_volt: 45.0,
            v_half: 0.61,
            ..SmtjDevice::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let points: Vec<SweepPoint> = (0..21)
            .map(|k| {
                let v = truth.v_half - 0.1 + 0.01 * k as f64;
                let ap_count = (0..1000)
                    .filter(|_| truth.sample(v, 50e-6, &mut rng).unwrap().state == MtjState::AP)
                    .count() as u64;
                SweepPoint {
                    v_mtj: v,
                    ap_count,
                    trials: 1000,
                }
            })
            .collect();
        let fit = fit_sigmoid(&points).unwrap();
        assert!((fit.slope_per_volt / truth.slope_per_volt - 1.0).abs() < 0.05);
        assert!((fit.v_half - truth.v_half).abs() < 2e-3);
    }

    #[test]
    fn fit_rejects_degenerate_input() {
        assert!(fit_sigmoid(&[]).is_err());
        let p = SweepPoint {
            v_mtj: 0.5,
            ap_count: 3,
            trials: 2,
        };
        assert!(fit_sigmoid(&[p, p]).is_err());
    }

    #[test]
    fn variability_draws_valid_devices() {
        let nominal = SmtjDevice::default();
        let spread = SmtjVariability {
            slope_rel_sigma: 0.1,
            v_half_sigma: 0.02,
            rate_log10_sigma: 0.5,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let devices: Vec<SmtjDevice> = (0..200)
            .map(|_| spread.sample(&nominal, &mut rng).unwrap())
            .collect();
        assert!(devices.iter().all(|d| d.validate().is_ok()));
        assert!(devices.windows(2).any(|w| w[0] != w[1]));
        let same = SmtjVariability::default()
            .sample(&nominal, &mut rng)
            .unwrap();
        assert_eq!(same, nominal);
    }
}
