//! The CHHS right-hand side: chemical potential, Darcy velocity, pressure,
//! advection, and the free energy.
//!
//! Nonlinear terms are evaluated pointwise on a grid padded by
//! `dealias_padding` per axis and then truncated back to the retained modes.
//! With padding 2 every quadrature below is exact for the polynomial degree
//! involved, so the truncation realizes the exact Galerkin projection of the
//! cubic and advective terms; padding 1 is the cheaper aliased collocation
//! variant.

use std::sync::{Arc, OnceLock};

use ndarray::Array3;

use crate::error::{Error, Result};
use crate::spectral::ops::{grad_norm_sq, sobolev_tower_sq};
use crate::spectral::transform::{analyze, synthesize};
use crate::spectral::{
    divergence, gradient, helmholtz_leray_project, laplacian, velocity_parity, Domain,
    SpectralField, VectorField, COSINE,
};

/// Double-well potential `F(x) = (x^2 - 1)^2 / 4`.
pub fn double_well(x: f64) -> f64 {
    let t = x * x - 1.0;
    0.25 * t * t
}

/// `F'(x) = x^3 - x`.
pub fn double_well_prime(x: f64) -> f64 {
    x * x * x - x
}

/// Boundary of the spinodal region, `sqrt(3)/3`: constant states with
/// `|mean|` below it are linearly unstable (`F'' < 0`).
pub const SPINODAL_THRESHOLD: f64 = 0.577_350_269_189_625_8;

#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub epsilon: f64,
    pub gamma: f64,
    pub advection_enabled: bool,
    /// Grid padding factor for nonlinear terms; 1 or 2.
    pub dealias_padding: usize,
}

impl ModelParams {
    pub fn from_domain(d: &Domain) -> Self {
        ModelParams {
            epsilon: d.epsilon,
            gamma: d.gamma,
            advection_enabled: true,
            dealias_padding: 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidDomain(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if !(self.gamma >= 0.0) {
            return Err(Error::InvalidDomain(format!(
                "gamma must be nonnegative, got {}",
                self.gamma
            )));
        }
        if self.dealias_padding != 1 && self.dealias_padding != 2 {
            return Err(Error::InvalidDomain(format!(
                "dealias_padding must be 1 or 2, got {}",
                self.dealias_padding
            )));
        }
        Ok(())
    }

    fn padded_grid(&self, d: &Domain) -> [usize; 3] {
        let m = d.modes();
        let pad = |n: usize| if n == 1 { 1 } else { n * self.dealias_padding };
        [pad(m[0]), pad(m[1]), pad(m[2])]
    }
}

fn check_finite(values: &Array3<f64>, stage: &'static str) -> Result<()> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Overflow { stage });
    }
    Ok(())
}

/// Chemical potential `mu = P_m(phi^3 - phi) - eps^2 Delta phi`.
pub fn chemical_potential(phi: &SpectralField, p: &ModelParams) -> Result<SpectralField> {
    if !phi.is_cosine() {
        return Err(Error::Parity("chemical_potential requires cosine parity".into()));
    }
    let d = phi.domain().clone();
    let grid = p.padded_grid(&d);
    let mut w = synthesize(phi, grid);
    w.mapv_inplace(|x| x * x * x - x);
    check_finite(&w, "chemical_potential: cubic term")?;
    let mut mu = analyze(w, &d, COSINE);
    let eps2 = p.epsilon * p.epsilon;
    let lap = laplacian(phi)?;
    for (m, l) in mu.coeffs_mut().iter_mut().zip(lap.coeffs().iter()) {
        *m -= eps2 * l;
    }
    Ok(mu)
}

/// `T(mu grad phi)`: the Galerkin truncation of the Darcy forcing, before
/// projection. Component `a` carries the velocity parity pattern.
fn truncated_flux(phi: &SpectralField, mu: &SpectralField, p: &ModelParams) -> Result<VectorField> {
    let d = phi.domain().clone();
    let grid = p.padded_grid(&d);
    let g = gradient(phi)?;
    let mu_grid = synthesize(mu, grid);
    let mut comps = Vec::with_capacity(d.dim());
    for a in 0..d.dim() {
        let mut w = synthesize(g.component(a), grid);
        w.zip_mut_with(&mu_grid, |x, m| *x *= m);
        check_finite(&w, "velocity: mu grad phi product")?;
        comps.push(analyze(w, &d, velocity_parity(a)));
    }
    VectorField::new(comps)
}

/// Darcy velocity `v = gamma P_m P_sigma(mu grad phi)`; zero when advection
/// is disabled or gamma = 0.
pub fn velocity(phi: &SpectralField, mu: &SpectralField, p: &ModelParams) -> Result<VectorField> {
    let d = phi.domain();
    if !p.advection_enabled || p.gamma == 0.0 {
        return Ok(VectorField::zeros(d));
    }
    let flux = truncated_flux(phi, mu, p)?;
    let mut v = helmholtz_leray_project(&flux)?;
    for a in 0..v.dim() {
        v.component_mut(a).coeffs_mut().mapv_inplace(|x| x * p.gamma);
    }
    Ok(v)
}

/// Pressure from `v = -grad P + gamma mu grad phi`: solves
/// `Delta P = div(gamma mu grad phi)` spectrally with zero mean.
pub fn pressure(phi: &SpectralField, mu: &SpectralField, p: &ModelParams) -> Result<SpectralField> {
    let d = phi.domain().clone();
    let mut flux = truncated_flux(phi, mu, p)?;
    for a in 0..flux.dim() {
        flux.component_mut(a).coeffs_mut().mapv_inplace(|x| x * p.gamma);
    }
    let mut rhs = divergence(&flux)?;
    rhs.coeffs_mut()[[0, 0, 0]] = 0.0;
    let kx = d.kappa_sq(0);
    let ky = d.kappa_sq(1);
    let kz = d.kappa_sq(2);
    let mut pr = rhs;
    for ((i, j, k), v) in pr.coeffs_mut().indexed_iter_mut() {
        let lam = kx[i] + ky[j] + kz[k];
        if lam > 0.0 {
            *v /= -lam;
        } else {
            *v = 0.0;
        }
    }
    Ok(pr)
}

/// `T(v . grad phi)`: the dealiased advection term, cosine parity.
pub fn advection(phi: &SpectralField, v: &VectorField, p: &ModelParams) -> Result<SpectralField> {
    let d = phi.domain().clone();
    let grid = p.padded_grid(&d);
    let g = gradient(phi)?;
    let mut acc: Option<Array3<f64>> = None;
    for a in 0..d.dim() {
        let mut w = synthesize(v.component(a), grid);
        let gw = synthesize(g.component(a), grid);
        w.zip_mut_with(&gw, |x, y| *x *= y);
        match &mut acc {
            None => acc = Some(w),
            Some(t) => t.zip_mut_with(&w, |x, y| *x += y),
        }
    }
    let w = acc.expect("domain has at least two axes");
    check_finite(&w, "advection: v . grad phi product")?;
    Ok(analyze(w, &d, COSINE))
}

/// Full right-hand side `Delta mu - T(v . grad phi)` with the mass mode
/// zeroed; `mu` and `v` must belong to `phi`.
pub fn rhs_with(
    phi: &SpectralField,
    mu: &SpectralField,
    v: &VectorField,
    p: &ModelParams,
) -> Result<SpectralField> {
    let mut out = laplacian(mu)?;
    if p.advection_enabled && p.gamma > 0.0 {
        let adv = advection(phi, v, p)?;
        for (o, a) in out.coeffs_mut().iter_mut().zip(adv.coeffs().iter()) {
            *o -= a;
        }
    }
    // Mass conservation: the mean of Delta mu is exactly zero and the mean
    // of the advective term vanishes analytically (div v = 0); pin the mode.
    out.coeffs_mut()[[0, 0, 0]] = 0.0;
    Ok(out)
}

/// Right-hand side computed from `phi` alone.
pub fn rhs(phi: &SpectralField, p: &ModelParams) -> Result<SpectralField> {
    let mu = chemical_potential(phi, p)?;
    let v = velocity(phi, &mu, p)?;
    rhs_with(phi, &mu, &v, p)
}

/// Ginzburg-Landau free energy
/// `E = 1/4 int (phi^2-1)^2 + eps^2/2 int |grad phi|^2`.
pub fn ginzburg_landau_energy(phi: &SpectralField, p: &ModelParams) -> Result<f64> {
    if !phi.is_cosine() {
        return Err(Error::Parity("energy requires cosine parity".into()));
    }
    let d = phi.domain().clone();
    let grid = p.padded_grid(&d);
    let w = synthesize(phi, grid);
    let cell = d.volume() / (grid[0] * grid[1] * grid[2]) as f64;
    let bulk: f64 = w.iter().map(|&x| double_well(x)).sum::<f64>() * cell;
    let grad = 0.5 * p.epsilon * p.epsilon * grad_norm_sq(phi);
    Ok(bulk + grad)
}

/// Derived fields of a state, computed once per `phi`.
#[derive(Clone, Debug)]
pub struct StateEval {
    pub mu: SpectralField,
    pub v: VectorField,
    pub energy: f64,
}

/// Order parameter plus simulation clock; derived quantities (`mu`, `v`,
/// energy) are cached against the parameters they were computed with.
#[derive(Debug)]
pub struct State {
    pub phi: SpectralField,
    pub time: f64,
    cache: OnceLock<(ModelParams, Arc<StateEval>)>,
}

impl Clone for State {
    fn clone(&self) -> Self {
        let cache = OnceLock::new();
        if let Some(entry) = self.cache.get() {
            let _ = cache.set(entry.clone());
        }
        State {
            phi: self.phi.clone(),
            time: self.time,
            cache,
        }
    }
}

impl State {
    pub fn new(phi: SpectralField, time: f64) -> Self {
        State {
            phi,
            time,
            cache: OnceLock::new(),
        }
    }

    pub fn mean(&self) -> f64 {
        self.phi.mean()
    }

    /// Chemical potential, velocity, and energy for this state. The first
    /// call computes and caches them; a call with different parameters
    /// computes fresh values without touching the cache.
    pub fn eval(&self, p: &ModelParams) -> Result<Arc<StateEval>> {
        if let Some((params, e)) = self.cache.get() {
            if params == p {
                return Ok(e.clone());
            }
            return Ok(Arc::new(compute_eval(&self.phi, p)?));
        }
        let e = Arc::new(compute_eval(&self.phi, p)?);
        let _ = self.cache.set((p.clone(), e.clone()));
        Ok(self
            .cache
            .get()
            .map(|(_, e)| e.clone())
            .unwrap_or(e))
    }

    /// `|| mu ||_{H^2}^2` of this state, used by the continuous-dependence audit.
    pub fn mu_h2_sq(&self, p: &ModelParams) -> Result<f64> {
        let e = self.eval(p)?;
        Ok(sobolev_tower_sq(&e.mu, 2, false))
    }
}

fn compute_eval(phi: &SpectralField, p: &ModelParams) -> Result<StateEval> {
    let mu = chemical_potential(phi, p)?;
    let v = velocity(phi, &mu, p)?;
    let energy = ginzburg_landau_energy(phi, p)?;
    Ok(StateEval { mu, v, energy })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::inner;

    fn params(pad: usize) -> ModelParams {
        ModelParams {
            epsilon: 1.0,
            gamma: 1.0,
            advection_enabled: true,
            dealias_padding: pad,
        }
    }

    #[test]
    fn double_well_values() {
        assert_eq!(double_well(1.0), 0.0);
        assert_eq!(double_well(-1.0), 0.0);
        assert_eq!(double_well_prime(1.0), 0.0);
        assert_eq!(double_well_prime(-1.0), 0.0);
        assert_eq!(double_well(0.0), 0.25);
        assert_eq!(double_well_prime(0.0), 0.0);
        // F'' = 3x^2 - 1 changes sign at +-sqrt(3)/3.
        let s = SPINODAL_THRESHOLD;
        assert!((3.0 * s * s - 1.0).abs() < 1e-15);
        assert!(3.0 * (s - 1e-9) * (s - 1e-9) - 1.0 < 0.0);
        assert!(3.0 * (s + 1e-9) * (s + 1e-9) - 1.0 > 0.0);
    }

    #[test]
    fn constant_state_chemical_potential() {
        // phi = c: mu = c^3 - c everywhere; c = 2 gives mu = 6.
        let d = Domain::new_2d(2.0, 1.0, 8, 8, 1.0, 1.0).unwrap();
        let phi = SpectralField::constant(d.clone(), 2.0);
        let mu = chemical_potential(&phi, &params(2)).unwrap();
        assert!((mu.mean() - 6.0).abs() < 1e-12);
        let off: f64 = mu
            .coeffs()
            .indexed_iter()
            .filter(|(idx, _)| *idx != (0, 0, 0))
            .map(|(_, v)| v.abs())
            .fold(0.0, f64::max);
        assert!(off < 1e-12);
    }

    #[test]
    fn small_mode_linearization() {
        // mu ~ (-1 + eps^2 lambda) a e_1 + O(a^3) around zero mean.
        let d = Domain::new_2d(std::f64::consts::PI, 1.0, 8, 8, 1.0, 1.0).unwrap();
        let a = 1e-7;
        let mut phi = SpectralField::zeros(d, COSINE);
        phi.coeffs_mut()[[1, 0, 0]] = a;
        let mu = chemical_potential(&phi, &params(2)).unwrap();
        let lam = 1.0;
        let expect = (-1.0 + lam) * a;
        assert!((mu.coeffs()[[1, 0, 0]] - expect).abs() < 1e-18 + 1e-6 * a.abs());
    }

    #[test]
    fn velocity_vanishes_for_gradient_forcing() {
        // Constant phi: grad phi = 0 so v = 0.
        let d = Domain::new_2d(2.0, 1.0, 8, 8, 1.0, 1.0).unwrap();
        let phi = SpectralField::constant(d.clone(), 0.4);
        let mu = chemical_potential(&phi, &params(2)).unwrap();
        let v = velocity(&phi, &mu, &params(2)).unwrap();
        assert_eq!(v.max_abs_coeff(), 0.0);

        // Constant mu with nontrivial phi: mu grad phi is a pure gradient.
        let mut phi = SpectralField::constant(d.clone(), 0.1);
        phi.coeffs_mut()[[2, 1, 0]] = 0.3;
        let mu_const = SpectralField::constant(d, 1.7);
        let v = velocity(&phi, &mu_const, &params(2)).unwrap();
        assert!(v.max_abs_coeff() < 1e-13);
    }

    #[test]
    fn pressure_of_constant_state_is_zero() {
        let d = Domain::new_2d(2.0, 1.0, 8, 8, 1.0, 1.0).unwrap();
        let phi = SpectralField::constant(d.clone(), 0.4);
        let mu = chemical_potential(&phi, &params(2)).unwrap();
        let pr = pressure(&phi, &mu, &params(2)).unwrap();
        assert_eq!(pr.max_abs_coeff(), 0.0);
    }

    #[test]
    fn constant_state_is_equilibrium() {
        let d = Domain::new_2d(2.0, 1.0, 8, 8, 1.0, 1.0).unwrap();
        let phi = SpectralField::constant(d, -0.3);
        let r = rhs(&phi, &params(2)).unwrap();
        assert_eq!(r.max_abs_coeff(), 0.0);
    }

    #[test]
    fn energy_of_reference_states() {
        // phi = 0 on the unit square: E = |Omega|/4 = 0.25.
        let d = Domain::new_2d(1.0, 1.0, 8, 8, 1.0, 1.0).unwrap();
        let phi = SpectralField::constant(d.clone(), 0.0);
        assert!((ginzburg_landau_energy(&phi, &params(2)).unwrap() - 0.25).abs() < 1e-14);
        // phi = 1: well minimum, E = 0.
        let phi = SpectralField::constant(d, 1.0);
        assert!(ginzburg_landau_energy(&phi, &params(2)).unwrap().abs() < 1e-14);
    }

    #[test]
    fn overflow_is_reported() {
        let d = Domain::new_2d(1.0, 1.0, 4, 4, 1.0, 1.0).unwrap();
        let phi = SpectralField::constant(d, 1e160);
        match chemical_potential(&phi, &params(2)) {
            Err(Error::Overflow { stage }) => assert!(stage.contains("cubic")),
            other => panic!("expected overflow, got {other:?}"),
        }
    }

    #[test]
    fn state_cache_consistency() {
        let d = Domain::new_2d(2.0, 1.0, 8, 8, 1.0, 1.0).unwrap();
        let mut phi = SpectralField::constant(d, 0.5);
        phi.coeffs_mut()[[1, 1, 0]] = 0.05;
        let st = State::new(phi.clone(), 0.0);
        let p = params(2);
        let e1 = st.eval(&p).unwrap();
        let e2 = st.eval(&p).unwrap();
        assert!(Arc::ptr_eq(&e1, &e2));
        // Recomputing from scratch matches the cache.
        let mu = chemical_potential(&phi, &p).unwrap();
        let diff = inner(&e1.mu, &mu).unwrap() - inner(&mu, &mu).unwrap();
        assert!(diff.abs() < 1e-12);
        // Different parameters bypass the cache but still agree on shared physics.
        let p1 = ModelParams {
            dealias_padding: 1,
            ..p.clone()
        };
        let e3 = st.eval(&p1).unwrap();
        assert!(!Arc::ptr_eq(&e1, &e3));
    }
}
