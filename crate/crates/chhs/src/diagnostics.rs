//! Monitored quantities and theorem-level checks on simulation output:
//! mass and energy, dissipation terms, Sobolev distances from the mean,
//! the t-weighted H^4 smoothing monitor, Gevrey spectral-decay fits,
//! exponential decay-rate fits, and the stored-energy continuous-dependence
//! audit.

use crate::error::{Error, Result};
use crate::model::{ModelParams, State, SPINODAL_THRESHOLD};
use crate::spectral::ops::{grad_norm_sq, sobolev_tower_sq, vector_h1_norm_sq};
use crate::spectral::transform::synthesize;
use crate::spectral::{Domain, SpectralField};

/// Coefficients below this magnitude are rounding noise and are excluded
/// from spectral-decay fits.
pub const GEVREY_COEFF_FLOOR: f64 = 1e-14;

/// Default eigenvalue floor for [`gevrey_fit`], excluding the flat low-mode
/// band from the fit.
pub const GEVREY_LAMBDA_FLOOR: f64 = 2.0;

/// Per-step scalar diagnostics. `h1_dist`/`h2_dist` are distances from the
/// mean in the H^1/H^2 norms; `h4_weighted` is `t * ||phi||_{H^4}^2`;
/// `gevrey_slope` is NaN when too few spectral shells participate.
#[derive(Clone, Debug)]
pub struct DiagnosticsRecord {
    pub time: f64,
    pub mass: f64,
    pub energy: f64,
    pub grad_mu_sq: f64,
    pub v_sq: f64,
    pub h1_dist: f64,
    pub h2_dist: f64,
    pub h4_weighted: f64,
    pub gevrey_slope: f64,
    pub dt: f64,
}

impl DiagnosticsRecord {
    pub fn measure(state: &State, p: &ModelParams, dt: f64) -> Result<Self> {
        let eval = state.eval(p)?;
        let phi = &state.phi;
        let gevrey_slope = gevrey_fit(phi, GEVREY_LAMBDA_FLOOR)
            .map(|(slope, _)| slope)
            .unwrap_or(f64::NAN);
        Ok(DiagnosticsRecord {
            time: state.time,
            mass: phi.mean(),
            energy: eval.energy,
            grad_mu_sq: grad_norm_sq(&eval.mu),
            v_sq: eval.v.l2_norm_sq(),
            h1_dist: sobolev_tower_sq(phi, 1, true).sqrt(),
            h2_dist: sobolev_tower_sq(phi, 2, true).sqrt(),
            h4_weighted: state.time * sobolev_tower_sq(phi, 4, false),
            gevrey_slope,
            dt,
        })
    }
}

/// Result of a log-linear least-squares fit `log v ~ intercept - rate * t`.
#[derive(Clone, Copy, Debug)]
pub struct DecayFit {
    pub rate: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
}

fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        let f = intercept + slope * x;
        ss_res += (y - f) * (y - f);
        ss_tot += (y - my) * (y - my);
    }
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    (slope, intercept, r2)
}

/// Fit `value = C exp(-rate * t)` over the samples inside `window` by least
/// squares on `(t, log value)`. Requires at least 10 positive samples.
pub fn fit_exponential_decay(series: &[(f64, f64)], window: (f64, f64)) -> Result<DecayFit> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &(t, v) in series {
        if t < window.0 || t > window.1 {
            continue;
        }
        if !(v > 0.0) {
            return Err(Error::NonpositiveSeries(t));
        }
        xs.push(t);
        ys.push(v.ln());
    }
    if xs.len() < 10 {
        return Err(Error::InsufficientData(format!(
            "decay fit needs >= 10 samples in the window, got {}",
            xs.len()
        )));
    }
    let (slope, intercept, r2) = linear_fit(&xs, &ys);
    Ok(DecayFit {
        rate: -slope,
        intercept,
        r_squared: r2,
        window: (
            xs.first().copied().unwrap(),
            xs.last().copied().unwrap(),
        ),
    })
}

/// Fit `log |phi_k|` against `(1 + lambda_k)^{1/2}` over shell maxima.
///
/// Modes with `lambda >= lambda_floor` and `|coefficient| > 1e-14`
/// participate; within each unit-width shell of `(1+lambda)^{1/2}` the
/// largest coefficient represents the shell (zeros forced by symmetry never
/// win). A negative slope of magnitude `sigma` indicates an analyticity band
/// of width about `sigma`. Returns `(slope, r_squared)`.
pub fn gevrey_fit(phi: &SpectralField, lambda_floor: f64) -> Result<(f64, f64)> {
    let d = phi.domain();
    let kx = d.kappa_sq(0);
    let ky = d.kappa_sq(1);
    let kz = d.kappa_sq(2);
    use std::collections::HashMap;
    let mut shells: HashMap<i64, (f64, f64)> = HashMap::new(); // shell -> (max |c|, x at max)
    for ((i, j, k), v) in phi.coeffs().indexed_iter() {
        let lam = kx[i] + ky[j] + kz[k];
        if lam < lambda_floor {
            continue;
        }
        let c = v.abs();
        if c <= GEVREY_COEFF_FLOOR {
            continue;
        }
        let x = (1.0 + lam).sqrt();
        let shell = x.floor() as i64;
        let e = shells.entry(shell).or_insert((c, x));
        if c > e.0 {
            *e = (c, x);
        }
    }
    if shells.len() < 5 {
        return Err(Error::InsufficientData(format!(
            "gevrey fit needs >= 5 usable shells, got {}",
            shells.len()
        )));
    }
    let mut pts: Vec<(f64, f64)> = shells.values().map(|&(c, x)| (x, c.ln())).collect();
    pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let (slope, _, r2) = linear_fit(&xs, &ys);
    Ok((slope, r2))
}

/// Hypotheses of the long-time theorems for a given domain and initial state.
#[derive(Clone, Debug)]
pub struct ConditionsReport {
    pub mean: f64,
    pub spinodal_threshold: f64,
    /// `|mean| > sqrt(3)/3`: constant state outside the chemical spinodal.
    pub outside_spinodal: bool,
    pub longest_edge: f64,
    pub epsilon_pi: f64,
    /// Longest edge < eps*pi: the small-domain hypothesis.
    pub small_domain: bool,
    pub poincare_constant: f64,
    pub epsilon_sq: f64,
    /// `C_Omega < eps^2`, equivalent to the small-domain condition.
    pub poincare_below_eps_sq: bool,
    pub initial_h2_dist_sq: f64,
}

impl std::fmt::Display for ConditionsReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "mean(phi0)                 = {:.6}", self.mean)?;
        writeln!(
            f,
            "spinodal exit |mean| > {:.6}   : {}",
            self.spinodal_threshold,
            if self.outside_spinodal { "satisfied" } else { "violated" }
        )?;
        writeln!(
            f,
            "small domain  L = {:.6} < eps*pi = {:.6} : {}",
            self.longest_edge,
            self.epsilon_pi,
            if self.small_domain { "satisfied" } else { "violated" }
        )?;
        writeln!(
            f,
            "Poincare      C = {:.6} < eps^2 = {:.6}  : {}",
            self.poincare_constant,
            self.epsilon_sq,
            if self.poincare_below_eps_sq { "satisfied" } else { "violated" }
        )?;
        write!(f, "||phi0 - mean||_H2^2       = {:.6e}", self.initial_h2_dist_sq)
    }
}

/// Evaluate the hypotheses of the three long-time theorems: spinodal exit of
/// the mean, the small-domain edge condition, the equivalent Poincare
/// criterion, and the size of the initial H^2 perturbation.
pub fn check_theorem_conditions(domain: &Domain, phi0: &SpectralField) -> ConditionsReport {
    let mean = phi0.mean();
    let eps = domain.epsilon;
    let longest = domain.longest_edge();
    let c_omega = domain.poincare_constant();
    ConditionsReport {
        mean,
        spinodal_threshold: SPINODAL_THRESHOLD,
        outside_spinodal: mean.abs() > SPINODAL_THRESHOLD,
        longest_edge: longest,
        epsilon_pi: eps * std::f64::consts::PI,
        small_domain: longest < eps * std::f64::consts::PI,
        poincare_constant: c_omega,
        epsilon_sq: eps * eps,
        poincare_below_eps_sq: c_omega < eps * eps,
        initial_h2_dist_sq: sobolev_tower_sq(phi0, 2, true),
    }
}

/// Continuous-dependence functional between two states on the same domain:
/// `1/2 ||grad d||^2 + 1/2 ||d||^2 + int G(d)` with `d = phi1 - phi2` and
/// the stored energy `G(d) = d^4/4 + phi2 d^3 + 3/2 phi2^2 d^2 >= 0`.
pub fn stored_energy_distance(phi1: &SpectralField, phi2: &SpectralField) -> Result<f64> {
    phi1.same_domain(phi2)?;
    if !phi1.is_cosine() || !phi2.is_cosine() {
        return Err(Error::Parity("stored_energy_distance requires cosine parity".into()));
    }
    let d = phi1.domain().clone();
    let mut diff = phi1.clone();
    for (a, b) in diff.coeffs_mut().iter_mut().zip(phi2.coeffs().iter()) {
        *a -= b;
    }
    let quad = 0.5 * (diff.l2_norm().powi(2) + grad_norm_sq(&diff));

    let m = d.modes();
    let grid = [
        if m[0] == 1 { 1 } else { 2 * m[0] },
        if m[1] == 1 { 1 } else { 2 * m[1] },
        if m[2] == 1 { 1 } else { 2 * m[2] },
    ];
    let dv = synthesize(&diff, grid);
    let p2 = synthesize(phi2, grid);
    let cell = d.volume() / (grid[0] * grid[1] * grid[2]) as f64;
    let mut g = 0.0;
    for (t, q) in dv.iter().zip(p2.iter()) {
        g += 0.25 * t.powi(4) + q * t.powi(3) + 1.5 * q * q * t * t;
    }
    Ok(quad + g * cell)
}

/// Series of `t * ||phi(t)||_{H^4}^2` with its maximum over `(0, T]`.
#[derive(Clone, Debug)]
pub struct SmoothingReport {
    pub series: Vec<(f64, f64)>,
    pub max: f64,
}

/// Extract the parabolic-smoothing monitor from recorded diagnostics.
pub fn smoothing_monitor(records: &[DiagnosticsRecord]) -> SmoothingReport {
    let series: Vec<(f64, f64)> = records.iter().map(|r| (r.time, r.h4_weighted)).collect();
    let max = series
        .iter()
        .filter(|(t, _)| *t > 0.0)
        .map(|(_, v)| *v)
        .fold(0.0, f64::max);
    SmoothingReport { series, max }
}

/// Numerical Gronwall audit of continuous dependence between two runs.
#[derive(Clone, Debug)]
pub struct DependenceAudit {
    pub times: Vec<f64>,
    /// Stored-energy distance `D(t)` between the paired states.
    pub distance: Vec<f64>,
    /// `exp(K(t)) * D(0)` with `K(t)` the trapezoid integral of
    /// `||mu_2||_{H^2}^2 + ||v_2||_{H^1}^2 + 1` along the second run.
    pub bound: Vec<f64>,
    /// Number of samples where the distance exceeds the bound.
    pub crossings: usize,
}

pub fn continuous_dependence_audit(
    run1: &[State],
    run2: &[State],
    p: &ModelParams,
) -> Result<DependenceAudit> {
    if run1.len() != run2.len() || run1.len() < 2 {
        return Err(Error::InsufficientData(
            "audit needs two equally sampled runs with >= 2 snapshots".into(),
        ));
    }
    let mut times = Vec::with_capacity(run1.len());
    let mut distance = Vec::with_capacity(run1.len());
    let mut coeff = Vec::with_capacity(run1.len());
    for (a, b) in run1.iter().zip(run2.iter()) {
        if (a.time - b.time).abs() > 1e-12 * (1.0 + a.time.abs()) {
            return Err(Error::Mismatch(format!(
                "paired snapshots at mismatched times {} vs {}",
                a.time, b.time
            )));
        }
        times.push(a.time);
        distance.push(stored_energy_distance(&a.phi, &b.phi)?);
        let e2 = b.eval(p)?;
        coeff.push(sobolev_tower_sq(&e2.mu, 2, false) + vector_h1_norm_sq(&e2.v) + 1.0);
    }
    let d0 = distance[0];
    let mut k = 0.0;
    let mut bound = Vec::with_capacity(times.len());
    bound.push(d0);
    for i in 1..times.len() {
        k += 0.5 * (coeff[i - 1] + coeff[i]) * (times[i] - times[i - 1]);
        bound.push(k.exp() * d0);
    }
    let crossings = distance
        .iter()
        .zip(bound.iter())
        .filter(|(d, b)| d > b)
        .count();
    Ok(DependenceAudit {
        times,
        distance,
        bound,
        crossings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::COSINE;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn params() -> ModelParams {
        ModelParams {
            epsilon: 1.0,
            gamma: 1.0,
            advection_enabled: true,
            dealias_padding: 2,
        }
    }

    #[test]
    fn record_of_constant_state() {
        let d = Domain::new_2d(1.0, 1.0, 8, 8, 1.0, 1.0).unwrap();
        let st = State::new(SpectralField::constant(d, 0.0), 0.0);
        let r = DiagnosticsRecord::measure(&st, &params(), 1e-3).unwrap();
        assert_eq!(r.mass, 0.0);
        assert!((r.energy - 0.25).abs() < 1e-14);
        assert_eq!(r.grad_mu_sq, 0.0);
        assert_eq!(r.v_sq, 0.0);
        assert_eq!(r.h1_dist, 0.0);
        assert_eq!(r.h2_dist, 0.0);
        assert!(r.gevrey_slope.is_nan());
    }

    #[test]
    fn exponential_fit_recovers_planted_rate() {
        let series: Vec<(f64, f64)> = (0..50)
            .map(|i| {
                let t = i as f64 * 0.1;
                (t, 3.0 * (-2.0 * t).exp())
            })
            .collect();
        let fit = fit_exponential_decay(&series, (0.0, 5.0)).unwrap();
        assert!((fit.rate - 2.0).abs() < 1e-10);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert!((fit.intercept - 3.0_f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn exponential_fit_edge_cases() {
        let constant: Vec<(f64, f64)> = (0..20).map(|i| (i as f64, 4.0)).collect();
        let fit = fit_exponential_decay(&constant, (0.0, 100.0)).unwrap();
        assert_eq!(fit.rate, 0.0);

        let neg: Vec<(f64, f64)> = (0..20).map(|i| (i as f64, 1.0 - 0.2 * i as f64)).collect();
        assert!(matches!(
            fit_exponential_decay(&neg, (0.0, 100.0)),
            Err(Error::NonpositiveSeries(_))
        ));

        let short: Vec<(f64, f64)> = (0..5).map(|i| (i as f64, 1.0)).collect();
        assert!(matches!(
            fit_exponential_decay(&short, (0.0, 100.0)),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn gevrey_fit_recovers_planted_slope() {
        let d = Domain::new_2d(2.0, 2.0, 32, 32, 1.0, 1.0).unwrap();
        let mut phi = SpectralField::zeros(d.clone(), COSINE);
        let kx = d.kappa_sq(0);
        let ky = d.kappa_sq(1);
        for ((i, j, _), v) in phi.coeffs_mut().indexed_iter_mut() {
            let x = (1.0 + kx[i] + ky[j]).sqrt();
            *v = (-2.0 * x).exp();
        }
        let (slope, r2) = gevrey_fit(&phi, GEVREY_LAMBDA_FLOOR).unwrap();
        assert!((slope + 2.0).abs() < 1e-6, "slope {slope}");
        assert!(r2 > 1.0 - 1e-9);
    }

    #[test]
    fn gevrey_fit_on_white_noise_is_flat() {
        let d = Domain::new_2d(std::f64::consts::PI, std::f64::consts::PI, 32, 32, 1.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut phi = SpectralField::zeros(d, COSINE);
        for v in phi.coeffs_mut().iter_mut() {
            *v = rng.random_range(-1.0..1.0);
        }
        let (slope, r2) = gevrey_fit(&phi, GEVREY_LAMBDA_FLOOR).unwrap();
        assert!(slope.abs() < 0.05, "slope {slope}");
        assert!(r2 < 0.5, "r2 {r2}");
    }

    #[test]
    fn gevrey_fit_insufficient_shells() {
        let d = Domain::new_2d(1.0, 1.0, 4, 4, 1.0, 1.0).unwrap();
        let phi = SpectralField::constant(d, 1.0);
        assert!(matches!(
            gevrey_fit(&phi, GEVREY_LAMBDA_FLOOR),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn theorem_conditions_reference_cases() {
        let p = params();
        // phi_bar = 0.7 > sqrt(3)/3: spinodal exit satisfied.
        let d = Domain::new_2d(3.0, 3.0, 8, 8, 1.0, 1.0).unwrap();
        let phi = SpectralField::constant(d.clone(), 0.7);
        let rep = check_theorem_conditions(&d, &phi);
        assert!(rep.outside_spinodal);
        // L = l = 3 < pi with eps = 1: domain condition satisfied.
        assert!(rep.small_domain);
        assert!(rep.poincare_below_eps_sq);
        let _ = p;

        // L = 2 pi: domain condition violated.
        let d = Domain::new_2d(2.0 * std::f64::consts::PI, 1.0, 8, 8, 1.0, 1.0).unwrap();
        let phi = SpectralField::constant(d.clone(), 0.2);
        let rep = check_theorem_conditions(&d, &phi);
        assert!(!rep.small_domain);
        assert!(!rep.outside_spinodal);
    }

    #[test]
    fn stored_energy_distance_basics() {
        let d = Domain::new_2d(2.0, 1.0, 8, 8, 1.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut phi = SpectralField::constant(d.clone(), 0.3);
        for v in phi.coeffs_mut().iter_mut().take(20) {
            *v += 0.01 * rng.random_range(-1.0..1.0);
        }
        phi.set_mean(0.3);
        // Identical fields: distance 0.
        assert_eq!(stored_energy_distance(&phi, &phi).unwrap(), 0.0);

        // The pointwise stored energy is nonnegative for random pairs.
        for _ in 0..100 {
            let t: f64 = rng.random_range(-3.0..3.0);
            let q: f64 = rng.random_range(-3.0..3.0);
            let g = 0.25 * t.powi(4) + q * t.powi(3) + 1.5 * q * q * t * t;
            assert!(g >= -1e-12, "G({t}, {q}) = {g}");
        }

        // And the functional itself is nonnegative on random field pairs.
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut a = SpectralField::zeros(d.clone(), COSINE);
            let mut b = SpectralField::zeros(d.clone(), COSINE);
            for v in a.coeffs_mut().iter_mut() {
                *v = 0.3 * rng.random_range(-1.0..1.0);
            }
            for v in b.coeffs_mut().iter_mut() {
                *v = 0.3 * rng.random_range(-1.0..1.0);
            }
            assert!(stored_energy_distance(&a, &b).unwrap() >= 0.0);
        }
    }

    #[test]
    fn smoothing_monitor_reports_max() {
        let recs: Vec<DiagnosticsRecord> = (0..5)
            .map(|i| DiagnosticsRecord {
                time: i as f64,
                mass: 0.0,
                energy: 0.0,
                grad_mu_sq: 0.0,
                v_sq: 0.0,
                h1_dist: 0.0,
                h2_dist: 0.0,
                h4_weighted: (i as f64 - 2.0).abs(),
                gevrey_slope: f64::NAN,
                dt: 0.1,
            })
            .collect();
        let rep = smoothing_monitor(&recs);
        assert_eq!(rep.max, 2.0);
        assert_eq!(rep.series.len(), 5);
    }
}
