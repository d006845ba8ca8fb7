//! Initial-condition generation. All constructions are deterministic given
//! the config: the seed fully determines random perturbations (fixed mode
//! iteration order, platform-independent generator).

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::State;
use crate::spectral::ops::sobolev_tower_sq;
use crate::spectral::transform::{forward_transform, inverse_transform};
use crate::spectral::{Domain, ScalarField, SpectralField, COSINE};

/// Pointwise bound enforced on generated initial data.
const MAX_POINTWISE: f64 = 10.0;

#[derive(Clone, Debug, PartialEq)]
pub enum IcKind {
    /// Constant mean plus explicitly listed `(mode, coefficient)` pairs in
    /// the orthonormal basis.
    ConstantPlusModes { modes: Vec<([usize; 3], f64)> },
    /// Seeded random coefficients with spectrum `amplitude * (1+lambda)^-q`;
    /// `q >= 2` guarantees H^2 membership. When `h2_target` is set the
    /// perturbation is rescaled to that exact H^2 distance from the mean.
    RandomPerturbation {
        amplitude: f64,
        seed: u64,
        q: f64,
        h2_target: Option<f64>,
    },
    /// `amplitude * tanh((x_axis - x0) / (sqrt(2) epsilon))`, sampled and
    /// transformed.
    TanhInterface { axis: usize, x0: f64, amplitude: f64 },
    /// Load the coefficients from a snapshot file; the configured mean is
    /// ignored in favor of the stored field's.
    FromSnapshot { path: std::path::PathBuf },
}

#[derive(Clone, Debug, PartialEq)]
pub struct IcConfig {
    pub kind: IcKind,
    pub mean: f64,
}

pub fn generate_ic(domain: &Domain, cfg: &IcConfig) -> Result<State> {
    let mut phi = match &cfg.kind {
        IcKind::ConstantPlusModes { modes } => {
            let m = domain.modes();
            let mut phi = SpectralField::zeros(domain.clone(), COSINE);
            for &(idx, amp) in modes {
                if idx[0] >= m[0] || idx[1] >= m[1] || idx[2] >= m[2] {
                    return Err(Error::InvalidIc(format!(
                        "mode {idx:?} out of range for truncation {m:?}"
                    )));
                }
                if idx == [0, 0, 0] {
                    return Err(Error::InvalidIc(
                        "mode (0,0,0) is reserved for the mean; use ic.mean".into(),
                    ));
                }
                phi.coeffs_mut()[[idx[0], idx[1], idx[2]]] = amp;
            }
            phi
        }
        IcKind::RandomPerturbation {
            amplitude,
            seed,
            q,
            h2_target,
        } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let kx = domain.kappa_sq(0);
            let ky = domain.kappa_sq(1);
            let kz = domain.kappa_sq(2);
            let mut phi = SpectralField::zeros(domain.clone(), COSINE);
            // Fixed (i, j, k) iteration order: the seed fully determines the field.
            for ((i, j, k), v) in phi.coeffs_mut().indexed_iter_mut() {
                let u: f64 = rng.random_range(-1.0..1.0);
                if (i, j, k) == (0, 0, 0) {
                    continue;
                }
                let lam = kx[i] + ky[j] + kz[k];
                *v = amplitude * (1.0 + lam).powf(-q) * u;
            }
            if let Some(target) = h2_target {
                let h2 = sobolev_tower_sq(&phi, 2, true).sqrt();
                if !(h2 > 0.0) {
                    return Err(Error::InvalidIc(
                        "cannot rescale a zero perturbation to an H2 target".into(),
                    ));
                }
                let s = target / h2;
                phi.coeffs_mut().mapv_inplace(|c| c * s);
            }
            phi
        }
        IcKind::TanhInterface { axis, x0, amplitude } => {
            if *axis >= domain.dim() {
                return Err(Error::InvalidIc(format!(
                    "interface axis {axis} out of range for a {}D domain",
                    domain.dim()
                )));
            }
            let w = std::f64::consts::SQRT_2 * domain.epsilon;
            let (a, c, amp) = (*axis, *x0, *amplitude);
            let f = ScalarField::from_fn(domain.clone(), move |x, y, z| {
                let s = [x, y, z][a];
                amp * ((s - c) / w).tanh()
            });
            forward_transform(&f, COSINE)?
        }
        IcKind::FromSnapshot { path } => {
            let (state, _, _) = crate::snapshot::load(path)?;
            if state.phi.domain() != domain {
                return Err(Error::InvalidIc(format!(
                    "snapshot domain does not match the configured domain ({:?} vs {:?})",
                    state.phi.domain().modes(),
                    domain.modes()
                )));
            }
            return Ok(State::new(state.phi, 0.0));
        }
    };

    phi.set_mean(cfg.mean);

    let values = inverse_transform(&phi)?;
    let peak = values.max_abs();
    if peak > MAX_POINTWISE {
        return Err(Error::InvalidIc(format!(
            "initial data reaches |phi| = {peak:.3} > {MAX_POINTWISE}"
        )));
    }
    Ok(State::new(phi, 0.0))
}
