//! Differential operators and the Helmholtz-Leray projection in coefficient
//! space.
//!
//! Every operator here is diagonal (or 2x2/3x3 block-diagonal) over modes:
//! with the orthonormal scaling, differentiating the frequency-i cosine mode
//! along its axis gives `-(i pi / extent)` times the frequency-i sine mode,
//! and vice versa with sign `+`. The Laplacian multiplies mode `(i,j,k)` by
//! `-lambda_{ijk}`.

use crate::error::{Error, Result};
use crate::spectral::{velocity_parity, Domain, SpectralField, VectorField};

fn require_cosine(c: &SpectralField, what: &str) -> Result<()> {
    if !c.is_cosine() {
        return Err(Error::Parity(format!("{what} requires cosine parity on all axes")));
    }
    Ok(())
}

fn wavenumbers(domain: &Domain, axis: usize) -> Vec<f64> {
    let n = domain.modes()[axis];
    let base = std::f64::consts::PI / domain.extents()[axis];
    (0..n).map(|i| i as f64 * base).collect()
}

/// `Delta f` in coefficient space: multiply by `-lambda_{ijk}`. Parity is
/// unchanged (eigenfunctions of either parity share the eigenvalue).
pub fn laplacian(c: &SpectralField) -> Result<SpectralField> {
    require_cosine(c, "laplacian")?;
    let d = c.domain();
    let kx = d.kappa_sq(0);
    let ky = d.kappa_sq(1);
    let kz = d.kappa_sq(2);
    let mut out = c.clone();
    for ((i, j, k), v) in out.coeffs_mut().indexed_iter_mut() {
        *v *= -(kx[i] + ky[j] + kz[k]);
    }
    Ok(out)
}

/// Gradient of a cosine-parity field. Component `a` is sine along axis `a`:
/// `d/dx [c_i e_i(x)] = -(i pi / L) c_i s_i(x)`.
pub fn gradient(c: &SpectralField) -> Result<VectorField> {
    require_cosine(c, "gradient")?;
    let d = c.domain().clone();
    let mut comps = Vec::with_capacity(d.dim());
    for a in 0..d.dim() {
        let k = wavenumbers(&d, a);
        let mut g = SpectralField::zeros(d.clone(), velocity_parity(a));
        for ((i, j, kk), v) in g.coeffs_mut().indexed_iter_mut() {
            let idx = [i, j, kk];
            *v = -k[idx[a]] * c.coeffs()[[i, j, kk]];
        }
        comps.push(g);
    }
    VectorField::new(comps)
}

/// Divergence of a velocity-parity vector field, a cosine-parity scalar:
/// `d/dx [b_i s_i(x)] = (i pi / L) b_i e_i(x)`.
pub fn divergence(v: &VectorField) -> Result<SpectralField> {
    let d = v.domain().clone();
    let mut out = SpectralField::zeros(d.clone(), crate::spectral::COSINE);
    for a in 0..v.dim() {
        let comp = v.component(a);
        if comp.parity() != velocity_parity(a) {
            return Err(Error::Parity(format!(
                "divergence: component {a} does not carry the velocity parity pattern"
            )));
        }
        let k = wavenumbers(&d, a);
        for ((i, j, kk), val) in out.coeffs_mut().indexed_iter_mut() {
            let idx = [i, j, kk];
            *val += k[idx[a]] * comp.coeffs()[[i, j, kk]];
        }
    }
    Ok(out)
}

/// Helmholtz-Leray projection onto divergence-free fields with zero normal
/// trace: `P u = u - grad q` where `Delta q = div u` with Neumann data,
/// solved spectrally (`q_k = (div u)_k / (-lambda_k)`, zero mean).
///
/// The `lambda = 0` mode of the divergence vanishes identically for the
/// velocity parity pattern; it is asserted small and zeroed.
pub fn helmholtz_leray_project(u: &VectorField) -> Result<VectorField> {
    let d = u.domain().clone();
    let mut div = divergence(u)?;
    debug_assert!(div.coeffs()[[0, 0, 0]].abs() <= 1e-12 * (1.0 + u.max_abs_coeff()));
    div.coeffs_mut()[[0, 0, 0]] = 0.0;

    let kx = d.kappa_sq(0);
    let ky = d.kappa_sq(1);
    let kz = d.kappa_sq(2);
    let mut q = div;
    for ((i, j, k), v) in q.coeffs_mut().indexed_iter_mut() {
        let lam = kx[i] + ky[j] + kz[k];
        if lam > 0.0 {
            *v /= -lam;
        } else {
            *v = 0.0;
        }
    }

    let gq = gradient(&q)?;
    let mut comps = Vec::with_capacity(u.dim());
    for a in 0..u.dim() {
        let mut c = u.component(a).clone();
        for (v, g) in c.coeffs_mut().iter_mut().zip(gq.component(a).coeffs().iter()) {
            *v -= g;
        }
        comps.push(c);
    }
    VectorField::new(comps)
}

/// Poincare constant of the domain, `1/lambda_1`.
pub fn poincare_constant(d: &Domain) -> f64 {
    d.poincare_constant()
}

/// Spectral Sobolev norm `( sum |c_k|^2 (1 + lambda_k)^s )^{1/2}` for s >= 0.
pub fn sobolev_norm(c: &SpectralField, s: f64) -> Result<f64> {
    if s < 0.0 {
        return Err(Error::NegativeOrder(s));
    }
    require_cosine(c, "sobolev_norm")?;
    let d = c.domain();
    let kx = d.kappa_sq(0);
    let ky = d.kappa_sq(1);
    let kz = d.kappa_sq(2);
    let mut sum = 0.0;
    for ((i, j, k), v) in c.coeffs().indexed_iter() {
        let lam = kx[i] + ky[j] + kz[k];
        sum += v * v * (1.0 + lam).powf(s);
    }
    Ok(sum.sqrt())
}

/// L2 inner product of two same-parity fields (coefficient dot product).
pub fn inner(a: &SpectralField, b: &SpectralField) -> Result<f64> {
    a.same_domain(b)?;
    if a.parity() != b.parity() {
        return Err(Error::Parity("inner product of mixed parities".into()));
    }
    Ok(a.coeffs().iter().zip(b.coeffs().iter()).map(|(x, y)| x * y).sum())
}

/// `|| grad f ||^2 = sum lambda_k c_k^2`, valid for any parity.
pub fn grad_norm_sq(c: &SpectralField) -> f64 {
    let d = c.domain();
    let kx = d.kappa_sq(0);
    let ky = d.kappa_sq(1);
    let kz = d.kappa_sq(2);
    c.coeffs()
        .indexed_iter()
        .map(|((i, j, k), v)| (kx[i] + ky[j] + kz[k]) * v * v)
        .sum()
}

/// Squared Sobolev norm with the full derivative tower
/// `sum_k c_k^2 (1 + lambda + ... + lambda^s)`: the sum over derivative
/// orders 0..=s of all mixed partials, which is the textbook `H^s` norm
/// (the order-r tensor of partials of an eigenfunction has squared norm
/// `lambda^r` times the function's).
pub fn sobolev_tower_sq(c: &SpectralField, s: u32, exclude_mean: bool) -> f64 {
    let d = c.domain();
    let kx = d.kappa_sq(0);
    let ky = d.kappa_sq(1);
    let kz = d.kappa_sq(2);
    let mut sum = 0.0;
    for ((i, j, k), v) in c.coeffs().indexed_iter() {
        if exclude_mean && i == 0 && j == 0 && k == 0 {
            continue;
        }
        let lam = kx[i] + ky[j] + kz[k];
        let mut w = 1.0;
        let mut pow = 1.0;
        for _ in 0..s {
            pow *= lam;
            w += pow;
        }
        sum += v * v * w;
    }
    sum
}

/// Squared H^1 norm of a vector field, `sum (1 + lambda) v_k^2` over
/// components (each mixed-parity basis function is still a Laplacian
/// eigenfunction with the same eigenvalue).
pub fn vector_h1_norm_sq(v: &VectorField) -> f64 {
    let d = v.domain();
    let kx = d.kappa_sq(0);
    let ky = d.kappa_sq(1);
    let kz = d.kappa_sq(2);
    v.components()
        .iter()
        .map(|c| {
            c.coeffs()
                .indexed_iter()
                .map(|((i, j, k), val)| (1.0 + kx[i] + ky[j] + kz[k]) * val * val)
                .sum::<f64>()
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::COSINE;
    use std::f64::consts::PI;

    #[test]
    fn laplacian_eigenvalues() {
        // Mode (1,0) on an L = pi domain has lambda = 1.
        let d = Domain::new_2d(PI, 1.0, 8, 8, 1.0, 1.0).unwrap();
        let mut c = SpectralField::zeros(d, COSINE);
        c.coeffs_mut()[[1, 0, 0]] = 2.0;
        let lc = laplacian(&c).unwrap();
        assert!((lc.coeffs()[[1, 0, 0]] + 2.0).abs() < 1e-15);

        // Constant field: lambda_0 = 0.
        let d = Domain::new_2d(2.0, 1.0, 8, 8, 1.0, 1.0).unwrap();
        let c = SpectralField::constant(d, 5.0);
        let lc = laplacian(&c).unwrap();
        assert_eq!(lc.max_abs_coeff(), 0.0);

        // Mode (2,3) on L=2, l=1: multiplier -10 pi^2.
        let d = Domain::new_2d(2.0, 1.0, 8, 8, 1.0, 1.0).unwrap();
        let mut c = SpectralField::zeros(d, COSINE);
        c.coeffs_mut()[[2, 3, 0]] = 1.0;
        let lc = laplacian(&c).unwrap();
        assert!((lc.coeffs()[[2, 3, 0]] + 10.0 * PI * PI).abs() < 1e-12);
    }

    #[test]
    fn gradient_of_constant_is_zero() {
        let d = Domain::new_2d(2.0, 1.0, 8, 8, 1.0, 1.0).unwrap();
        let c = SpectralField::constant(d, 3.0);
        let g = gradient(&c).unwrap();
        assert_eq!(g.max_abs_coeff(), 0.0);
    }

    #[test]
    fn divergence_of_gradient_is_laplacian() {
        let d = Domain::new_2d(1.7, 1.2, 6, 6, 1.0, 1.0).unwrap();
        let mut c = SpectralField::zeros(d, COSINE);
        c.coeffs_mut()[[1, 0, 0]] = 1.0;
        c.coeffs_mut()[[2, 3, 0]] = -0.7;
        c.coeffs_mut()[[5, 5, 0]] = 0.3;
        let div_grad = divergence(&gradient(&c).unwrap()).unwrap();
        let lap = laplacian(&c).unwrap();
        for (a, b) in div_grad.coeffs().iter().zip(lap.coeffs().iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn projection_annihilates_gradients() {
        let d = Domain::new_2d(2.0, 1.0, 8, 8, 1.0, 1.0).unwrap();
        let mut psi = SpectralField::zeros(d, COSINE);
        psi.coeffs_mut()[[1, 2, 0]] = 1.0;
        psi.coeffs_mut()[[3, 0, 0]] = -0.5;
        let g = gradient(&psi).unwrap();
        let p = helmholtz_leray_project(&g).unwrap();
        assert!(p.max_abs_coeff() < 1e-12);
    }

    #[test]
    fn sobolev_norm_examples() {
        // Constant field a / sqrt|Omega|: norm = |a| for every s.
        let d = Domain::new_2d(2.0, 1.5, 8, 8, 1.0, 1.0).unwrap();
        let mut c = SpectralField::zeros(d, COSINE);
        c.coeffs_mut()[[0, 0, 0]] = -2.5;
        for s in [0.0, 1.0, 2.0, 3.5] {
            assert!((sobolev_norm(&c, s).unwrap() - 2.5).abs() < 1e-14);
        }

        // Single mode (1,0) on L = pi, unit coefficient, s = 2: (1+1)^2 = 4, norm 2.
        let d = Domain::new_2d(PI, 1.0, 8, 8, 1.0, 1.0).unwrap();
        let mut c = SpectralField::zeros(d, COSINE);
        c.coeffs_mut()[[1, 0, 0]] = 1.0;
        assert!((sobolev_norm(&c, 2.0).unwrap() - 2.0).abs() < 1e-14);

        // s = 0 is the plain coefficient 2-norm.
        assert!((sobolev_norm(&c, 0.0).unwrap() - c.l2_norm()).abs() < 1e-15);

        assert!(sobolev_norm(&c, -1.0).is_err());
    }
}
