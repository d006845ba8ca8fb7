use ndarray::Array3;

use crate::error::{Error, Result};
use crate::spectral::Domain;

/// Per-axis symmetry of a spectral expansion. Fields with Neumann data are
/// cosine along every axis; differentiating along axis `a` flips that axis
/// to sine. A sine axis keeps slot 0 identically zero (there is no constant
/// sine mode) so coefficient arrays stay the same shape for both parities.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    Cosine,
    Sine,
}

/// All-cosine parity tag, the representation of any field with `grad f . n = 0`.
pub const COSINE: [Parity; 3] = [Parity::Cosine; 3];

/// Parity pattern of velocity component `axis`: sine along its own axis so the
/// normal trace vanishes identically on the two faces, cosine elsewhere.
pub fn velocity_parity(axis: usize) -> [Parity; 3] {
    let mut p = COSINE;
    p[axis] = Parity::Sine;
    p
}

/// Grid values on the midpoint collocation nodes, stored as `[ix, iy, iz]`
/// (2D fields have `iz` extent 1).
#[derive(Clone, Debug)]
pub struct ScalarField {
    domain: Domain,
    values: Array3<f64>,
}

impl ScalarField {
    pub fn new(domain: Domain, values: Array3<f64>) -> Result<Self> {
        let m = domain.modes();
        if values.dim() != (m[0], m[1], m[2]) {
            return Err(Error::Mismatch(format!(
                "value grid {:?} does not match domain modes {:?}",
                values.dim(),
                m
            )));
        }
        Ok(ScalarField { domain, values })
    }

    pub fn zeros(domain: Domain) -> Self {
        let m = domain.modes();
        let values = Array3::zeros((m[0], m[1], m[2]));
        ScalarField { domain, values }
    }

    /// Build a field by evaluating `f(x, y, z)` at the collocation nodes.
    pub fn from_fn(domain: Domain, f: impl Fn(f64, f64, f64) -> f64) -> Self {
        let m = domain.modes();
        let xs = domain.nodes(0, m[0]);
        let ys = domain.nodes(1, m[1]);
        let zs = domain.nodes(2, m[2]);
        let values = Array3::from_shape_fn((m[0], m[1], m[2]), |(i, j, k)| f(xs[i], ys[j], zs[k]));
        ScalarField { domain, values }
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn values(&self) -> &Array3<f64> {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut Array3<f64> {
        &mut self.values
    }

    pub fn into_values(self) -> Array3<f64> {
        self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Coefficients of the orthonormal trigonometric eigenbasis, indexed by
/// `[i, j, k]` with the same shape as the collocation grid. Slot `i` on a
/// cosine axis is the frequency-`i` cosine mode; on a sine axis it is the
/// frequency-`i` sine mode with slot 0 unused (kept zero).
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    domain: Domain,
    coeffs: Array3<f64>,
    parity: [Parity; 3],
}

impl SpectralField {
    pub fn new(domain: Domain, coeffs: Array3<f64>, parity: [Parity; 3]) -> Result<Self> {
        let m = domain.modes();
        if coeffs.dim() != (m[0], m[1], m[2]) {
            return Err(Error::Mismatch(format!(
                "coefficient array {:?} does not match domain modes {:?}",
                coeffs.dim(),
                m
            )));
        }
        Ok(SpectralField {
            domain,
            coeffs,
            parity,
        })
    }

    pub fn zeros(domain: Domain, parity: [Parity; 3]) -> Self {
        let m = domain.modes();
        let coeffs = Array3::zeros((m[0], m[1], m[2]));
        SpectralField {
            domain,
            coeffs,
            parity,
        }
    }

    /// Constant field with the given mean value.
    pub fn constant(domain: Domain, value: f64) -> Self {
        let mut f = Self::zeros(domain, COSINE);
        f.set_mean(value);
        f
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn parity(&self) -> [Parity; 3] {
        self.parity
    }

    pub fn is_cosine(&self) -> bool {
        self.parity == COSINE
    }

    pub fn coeffs(&self) -> &Array3<f64> {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut Array3<f64> {
        &mut self.coeffs
    }

    /// Spatial mean; the (0,0,0) basis function is `1/sqrt(|Omega|)`.
    pub fn mean(&self) -> f64 {
        self.coeffs[[0, 0, 0]] / self.domain.volume().sqrt()
    }

    /// Overwrite the 0-mode so that the spatial mean is exactly `m`.
    pub fn set_mean(&mut self, m: f64) {
        self.coeffs[[0, 0, 0]] = m * self.domain.volume().sqrt();
    }

    /// Coefficient 2-norm; equals the L2 norm by Parseval.
    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|v| v.is_finite())
    }

    /// Copy the shared modes into a domain with a different truncation
    /// (zero-padding when refining). Extents and parameters must agree.
    pub fn resampled(&self, target: &Domain) -> Result<SpectralField> {
        if target.extents() != self.domain.extents() || target.dim() != self.domain.dim() {
            return Err(Error::Mismatch(
                "resampling requires identical domain geometry".into(),
            ));
        }
        let mut out = SpectralField::zeros(target.clone(), self.parity);
        let a = self.domain.modes();
        let b = target.modes();
        let n = [a[0].min(b[0]), a[1].min(b[1]), a[2].min(b[2])];
        for i in 0..n[0] {
            for j in 0..n[1] {
                for k in 0..n[2] {
                    out.coeffs[[i, j, k]] = self.coeffs[[i, j, k]];
                }
            }
        }
        Ok(out)
    }

    pub(crate) fn same_domain(&self, other: &SpectralField) -> Result<()> {
        if self.domain != other.domain {
            return Err(Error::Mismatch("fields live on different domains".into()));
        }
        Ok(())
    }
}

/// Velocity-like vector field: `dim` spectral components, component `a`
/// carrying sine parity along axis `a` so that `v . n = 0` on the boundary.
#[derive(Clone, Debug)]
pub struct VectorField {
    components: Vec<SpectralField>,
}

impl VectorField {
    pub fn new(components: Vec<SpectralField>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Mismatch("vector field needs at least one component".into()));
        }
        let dim = components[0].domain().dim();
        if components.len() != dim {
            return Err(Error::Mismatch(format!(
                "expected {dim} components, got {}",
                components.len()
            )));
        }
        for (a, c) in components.iter().enumerate() {
            components[0].same_domain(c)?;
            if c.parity() != velocity_parity(a) {
                return Err(Error::Parity(format!(
                    "component {a} must be sine along its own axis and cosine elsewhere"
                )));
            }
        }
        Ok(VectorField { components })
    }

    pub fn zeros(domain: &Domain) -> Self {
        let components = (0..domain.dim())
            .map(|a| SpectralField::zeros(domain.clone(), velocity_parity(a)))
            .collect();
        VectorField { components }
    }

    pub fn domain(&self) -> &Domain {
        self.components[0].domain()
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, a: usize) -> &SpectralField {
        &self.components[a]
    }

    pub fn component_mut(&mut self, a: usize) -> &mut SpectralField {
        &mut self.components[a]
    }

    pub fn components(&self) -> &[SpectralField] {
        &self.components
    }

    /// Squared L2 norm, summed over components.
    pub fn l2_norm_sq(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.coeffs().iter().map(|v| v * v).sum::<f64>())
            .sum()
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.components
            .iter()
            .fold(0.0, |m, c| m.max(c.max_abs_coeff()))
    }
}
