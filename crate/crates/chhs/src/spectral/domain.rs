use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Rectangular (2D) or box (3D) domain `[0,L] x [0,l] x [0,h]` with Neumann
/// boundary conditions, together with the per-axis truncation and the
/// physical parameters of the phase-field model.
///
/// In 2D the z axis is degenerate: `modes[2] == 1` and `extents[2] == 1`, so
/// every 3D formula reduces to its 2D counterpart without special cases.
#[derive(Clone, Debug, PartialEq)]
pub struct Domain {
    dim: usize,
    extents: [f64; 3],
    modes: [usize; 3],
    /// Interface thickness parameter (eps > 0).
    pub epsilon: f64,
    /// Cell adhesion parameter (gamma >= 0).
    pub gamma: f64,
}

impl Domain {
    pub fn new_2d(lx: f64, ly: f64, nx: usize, ny: usize, epsilon: f64, gamma: f64) -> Result<Self> {
        Self::build(2, [lx, ly, 1.0], [nx, ny, 1], epsilon, gamma)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn new_3d(
        lx: f64,
        ly: f64,
        lz: f64,
        nx: usize,
        ny: usize,
        nz: usize,
        epsilon: f64,
        gamma: f64,
    ) -> Result<Self> {
        Self::build(3, [lx, ly, lz], [nx, ny, nz], epsilon, gamma)
    }

    fn build(dim: usize, extents: [f64; 3], modes: [usize; 3], epsilon: f64, gamma: f64) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::InvalidDomain(format!("dim must be 2 or 3, got {dim}")));
        }
        for a in 0..dim {
            if !(extents[a] > 0.0) || !extents[a].is_finite() {
                return Err(Error::InvalidDomain(format!(
                    "extent of axis {a} must be positive and finite, got {}",
                    extents[a]
                )));
            }
            if modes[a] < 2 {
                return Err(Error::InvalidDomain(format!(
                    "axis {a} needs at least 2 modes, got {}",
                    modes[a]
                )));
            }
        }
        if dim == 2 && modes[2] != 1 {
            return Err(Error::InvalidDomain("2D domains must have nz = 1".into()));
        }
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::InvalidDomain(format!("epsilon must be positive, got {epsilon}")));
        }
        if !(gamma >= 0.0) || !gamma.is_finite() {
            return Err(Error::InvalidDomain(format!("gamma must be nonnegative, got {gamma}")));
        }
        Ok(Domain {
            dim,
            extents,
            modes,
            epsilon,
            gamma,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn extents(&self) -> [f64; 3] {
        self.extents
    }

    pub fn modes(&self) -> [usize; 3] {
        self.modes
    }

    /// Total number of retained modes (= collocation points).
    pub fn len(&self) -> usize {
        self.modes[0] * self.modes[1] * self.modes[2]
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Measure of the domain (area in 2D since the dummy z extent is 1).
    pub fn volume(&self) -> f64 {
        self.extents[0] * self.extents[1] * self.extents[2]
    }

    /// Squared wavenumbers `(i*pi/extent)^2` for `i = 0..n` on one axis.
    pub(crate) fn kappa_sq(&self, axis: usize) -> Vec<f64> {
        let n = self.modes[axis];
        let base = PI / self.extents[axis];
        (0..n).map(|i| (i as f64 * base).powi(2)).collect()
    }

    /// Neumann Laplacian eigenvalue of mode `(i, j, k)`.
    pub fn lambda(&self, idx: [usize; 3]) -> f64 {
        let mut s = 0.0;
        for a in 0..3 {
            let k = idx[a] as f64 * PI / self.extents[a];
            s += k * k;
        }
        s
    }

    /// Smallest nonzero eigenvalue, `(pi / longest-edge)^2`.
    pub fn lambda_min_nonzero(&self) -> f64 {
        (0..self.dim)
            .map(|a| (PI / self.extents[a]).powi(2))
            .fold(f64::INFINITY, f64::min)
    }

    /// Poincare constant `C_Omega = 1/lambda_1 = (longest edge)^2 / pi^2`.
    pub fn poincare_constant(&self) -> f64 {
        1.0 / self.lambda_min_nonzero()
    }

    /// Length of the longest edge over the active axes.
    pub fn longest_edge(&self) -> f64 {
        (0..self.dim).map(|a| self.extents[a]).fold(0.0, f64::max)
    }

    /// Midpoint collocation nodes `(p + 1/2) * extent / m` on one axis.
    pub fn nodes(&self, axis: usize, m: usize) -> Vec<f64> {
        let d = self.extents[axis] / m as f64;
        (0..m).map(|p| (p as f64 + 0.5) * d).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poincare_matches_formula() {
        // L = pi, l = 1: lambda_1 = (pi/pi)^2 = 1, C = 1.
        let d = Domain::new_2d(PI, 1.0, 8, 8, 1.0, 1.0).unwrap();
        assert!((d.poincare_constant() - 1.0).abs() < 1e-15);

        // L = 2, l = 1: C = 4/pi^2.
        let d = Domain::new_2d(2.0, 1.0, 8, 8, 1.0, 1.0).unwrap();
        assert!((d.poincare_constant() - 4.0 / (PI * PI)).abs() < 1e-15);

        // Cube: C = L^2/pi^2 in 3D.
        let d = Domain::new_3d(1.5, 1.5, 1.5, 4, 4, 4, 1.0, 1.0).unwrap();
        assert!((d.poincare_constant() - 1.5_f64.powi(2) / (PI * PI)).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(Domain::new_2d(0.0, 1.0, 8, 8, 1.0, 1.0).is_err());
        assert!(Domain::new_2d(1.0, 1.0, 1, 8, 1.0, 1.0).is_err());
        assert!(Domain::new_2d(1.0, 1.0, 8, 8, 0.0, 1.0).is_err());
        assert!(Domain::new_2d(1.0, 1.0, 8, 8, 1.0, -0.5).is_err());
        assert!(Domain::new_3d(1.0, 1.0, -1.0, 8, 8, 8, 1.0, 1.0).is_err());
    }

    #[test]
    fn lambda_formula() {
        let d = Domain::new_2d(2.0, 1.0, 8, 8, 1.0, 1.0).unwrap();
        let expect = (2.0 * PI / 2.0).powi(2) + (3.0 * PI).powi(2);
        assert!((d.lambda([2, 3, 0]) - expect).abs() < 1e-12);
    }
}
