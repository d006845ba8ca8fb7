//! Fast cosine/sine transforms between midpoint collocation grids and the
//! orthonormal Neumann eigenbasis.
//!
//! A length-n DCT-II/III pair is evaluated through one complex FFT of length
//! 2n on the even extension of the line; the sine transforms reuse the cosine
//! kernels through the identity `sin(k t_p) = (-1)^p cos((n-k) t_p)` at the
//! midpoint nodes `t_p = pi (p + 1/2) / n`. With the orthonormal scaling the
//! forward transform of a band-limited line is exactly its vector of basis
//! inner products, and the round trip is exact to rounding.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use ndarray::{Array3, Axis, Zip};
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::Result;
use crate::spectral::{Domain, Parity, ScalarField, SpectralField};

struct LinePlan {
    n: usize,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
    /// e^{-i pi k / (2n)} for k = 0..n.
    twiddle: Vec<Complex64>,
}

fn plan(n: usize) -> Arc<LinePlan> {
    static PLANS: OnceLock<Mutex<HashMap<usize, Arc<LinePlan>>>> = OnceLock::new();
    let mut cache = PLANS.get_or_init(|| Mutex::new(HashMap::new())).lock().unwrap();
    cache
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            let fft = planner.plan_fft_forward(2 * n);
            let ifft = planner.plan_fft_inverse(2 * n);
            let twiddle = (0..=n)
                .map(|k| {
                    let th = std::f64::consts::PI * k as f64 / (2.0 * n as f64);
                    Complex64::new(th.cos(), -th.sin())
                })
                .collect();
            Arc::new(LinePlan { n, fft, ifft, twiddle })
        })
        .clone()
}

/// Raw DCT-II: `out[k] = sum_p f[p] cos(k t_p)`.
fn dct2_raw(plan: &LinePlan, f: &[f64], out: &mut [f64], buf: &mut [Complex64]) {
    let n = plan.n;
    for p in 0..n {
        buf[p] = Complex64::new(f[p], 0.0);
        buf[2 * n - 1 - p] = Complex64::new(f[p], 0.0);
    }
    plan.fft.process(buf);
    for k in 0..n {
        let t = plan.twiddle[k];
        out[k] = 0.5 * (t.re * buf[k].re - t.im * buf[k].im);
    }
}

/// Raw DCT-III synthesis: `out[p] = sum_k a[k] cos(k t_p)`.
fn dct3_raw(plan: &LinePlan, a: &[f64], out: &mut [f64], buf: &mut [Complex64]) {
    let n = plan.n;
    buf[0] = Complex64::new(2.0 * a[0], 0.0);
    for k in 1..n {
        let t = plan.twiddle[k];
        let z = Complex64::new(t.re * a[k], -t.im * a[k]); // e^{+i pi k/(2n)} a_k
        buf[k] = z;
        buf[2 * n - k] = z.conj();
    }
    buf[n] = Complex64::new(0.0, 0.0);
    plan.ifft.process(buf);
    for p in 0..n {
        out[p] = 0.5 * buf[p].re;
    }
}

/// Raw DST-II: `out[k] = sum_p f[p] sin(k t_p)` for k = 1..n-1; slot 0 is zero.
/// The frequency-n component (which the midpoint grid can represent) is
/// deliberately dropped: differentiation of cosine modes below the truncation
/// never excites it.
fn dst2_raw(plan: &LinePlan, f: &mut [f64], out: &mut [f64], buf: &mut [Complex64]) {
    let n = plan.n;
    for (p, v) in f.iter_mut().enumerate() {
        if p % 2 == 1 {
            *v = -*v;
        }
    }
    let mut c = vec![0.0; n];
    dct2_raw(plan, f, &mut c, buf);
    out[0] = 0.0;
    for k in 1..n {
        out[k] = c[n - k];
    }
}

/// Raw DST-III synthesis: `out[p] = sum_{k>=1} b[k] sin(k t_p)`.
fn dst3_raw(plan: &LinePlan, b: &[f64], out: &mut [f64], buf: &mut [Complex64]) {
    let n = plan.n;
    let mut a = vec![0.0; n];
    for k in 1..n {
        a[n - k] = b[k];
    }
    dct3_raw(plan, &a, out, buf);
    for (p, v) in out.iter_mut().enumerate() {
        if p % 2 == 1 {
            *v = -*v;
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Direction {
    Forward,
    Inverse,
}

/// One separable transform pass along `axis`, in place over all lanes.
fn axis_pass(data: &mut Array3<f64>, axis: usize, extent: f64, parity: Parity, dir: Direction) {
    let m = data.shape()[axis];
    if m == 1 {
        // Degenerate 2D z-axis; its extent is pinned to 1 so the
        // orthonormal scaling is the identity.
        debug_assert!((extent - 1.0).abs() < 1e-15);
        return;
    }
    let plan = plan(m);
    let dx = extent / m as f64;
    let half = (1.0 / extent).sqrt();
    let full = (2.0 / extent).sqrt();
    // Per-index scale turning raw sums into orthonormal coefficients
    // (forward) or coefficients into synthesis amplitudes (inverse).
    let scale: Vec<f64> = (0..m)
        .map(|i| {
            let w = match (parity, i) {
                (Parity::Cosine, 0) => half,
                _ => full,
            };
            match dir {
                Direction::Forward => dx * w,
                Direction::Inverse => w,
            }
        })
        .collect();

    crate::threads::pool().install(|| {
        Zip::from(data.lanes_mut(Axis(axis))).par_for_each(|mut lane| {
            let mut f: Vec<f64> = lane.iter().copied().collect();
            let mut out = vec![0.0; m];
            let mut buf = vec![Complex64::default(); 2 * m];
            match (dir, parity) {
                (Direction::Forward, Parity::Cosine) => {
                    dct2_raw(&plan, &f, &mut out, &mut buf);
                    for (o, s) in out.iter_mut().zip(&scale) {
                        *o *= s;
                    }
                }
                (Direction::Forward, Parity::Sine) => {
                    dst2_raw(&plan, &mut f, &mut out, &mut buf);
                    for (o, s) in out.iter_mut().zip(&scale) {
                        *o *= s;
                    }
                    out[0] = 0.0;
                }
                (Direction::Inverse, Parity::Cosine) => {
                    for (v, s) in f.iter_mut().zip(&scale) {
                        *v *= s;
                    }
                    dct3_raw(&plan, &f, &mut out, &mut buf);
                }
                (Direction::Inverse, Parity::Sine) => {
                    for (v, s) in f.iter_mut().zip(&scale) {
                        *v *= s;
                    }
                    f[0] = 0.0;
                    dst3_raw(&plan, &f, &mut out, &mut buf);
                }
            }
            for (dst, src) in lane.iter_mut().zip(&out) {
                *dst = *src;
            }
        });
    });
}

fn run_passes(values: &mut Array3<f64>, extents: [f64; 3], parity: [Parity; 3], dir: Direction) {
    for axis in 0..3 {
        axis_pass(values, axis, extents[axis], parity[axis], dir);
    }
}

/// Expand a grid function in the orthonormal eigenbasis.
///
/// For band-limited input the coefficients equal the continuum inner
/// products exactly (midpoint quadrature is exact below twice the grid
/// frequency); the round trip with [`inverse_transform`] is exact to
/// rounding for every grid function.
pub fn forward_transform(f: &ScalarField, parity: [Parity; 3]) -> Result<SpectralField> {
    let domain = f.domain().clone();
    let mut values = f.values().clone();
    run_passes(&mut values, domain.extents(), parity, Direction::Forward);
    SpectralField::new(domain, values, parity)
}

/// Evaluate the truncated eigenfunction sum at the collocation nodes.
pub fn inverse_transform(c: &SpectralField) -> Result<ScalarField> {
    let domain = c.domain().clone();
    let mut values = c.coeffs().clone();
    run_passes(&mut values, domain.extents(), c.parity(), Direction::Inverse);
    ScalarField::new(domain, values)
}

/// Synthesize onto a (possibly finer) grid by zero-padding the spectrum.
pub(crate) fn synthesize(c: &SpectralField, grid: [usize; 3]) -> Array3<f64> {
    let m = c.domain().modes();
    assert!(
        grid[0] >= m[0] && grid[1] >= m[1] && grid[2] >= m[2],
        "synthesis grid must not truncate"
    );
    let mut values = Array3::zeros((grid[0], grid[1], grid[2]));
    for i in 0..m[0] {
        for j in 0..m[1] {
            for k in 0..m[2] {
                values[[i, j, k]] = c.coeffs()[[i, j, k]];
            }
        }
    }
    run_passes(&mut values, c.domain().extents(), c.parity(), Direction::Inverse);
    values
}

/// Analyze grid values (from a padded grid) and truncate to the domain's
/// retained modes: the Galerkin projection of the grid function.
pub(crate) fn analyze(mut values: Array3<f64>, domain: &Domain, parity: [Parity; 3]) -> SpectralField {
    run_passes(&mut values, domain.extents(), parity, Direction::Forward);
    let m = domain.modes();
    let mut out = SpectralField::zeros(domain.clone(), parity);
    for i in 0..m[0] {
        for j in 0..m[1] {
            for k in 0..m[2] {
                out.coeffs_mut()[[i, j, k]] = values[[i, j, k]];
            }
        }
    }
    if parity != crate::spectral::COSINE {
        for a in 0..3 {
            if parity[a] == Parity::Sine {
                zero_slice(&mut out, a);
            }
        }
    }
    out
}

fn zero_slice(f: &mut SpectralField, axis: usize) {
    let m = f.domain().modes();
    for i in 0..m[0] {
        for j in 0..m[1] {
            for k in 0..m[2] {
                let idx = [i, j, k];
                if idx[axis] == 0 {
                    f.coeffs_mut()[[i, j, k]] = 0.0;
                }
            }
        }
    }
}
