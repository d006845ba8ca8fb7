//! Field snapshots: an ASCII header terminated by a blank line, then the
//! coefficients as little-endian f64 in row-major order with the x index
//! fastest. Saving a loaded snapshot reproduces the file byte for byte.
//!
//! The optional `dt` and `accept_streak` lines carry the adaptive
//! integrator's state so a resumed run continues bit-identically.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::State;
use crate::spectral::{Domain, SpectralField, COSINE};

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "chhs-snapshot";

pub fn save(path: &Path, state: &State, dt: f64, accept_streak: u32) -> Result<()> {
    let d = state.phi.domain();
    let m = d.modes();
    let e = d.extents();
    let mut header = String::new();
    header.push_str(&format!("{MAGIC} {FORMAT_VERSION}\n"));
    header.push_str(&format!("dim {}\n", d.dim()));
    header.push_str(&format!("modes {} {} {}\n", m[0], m[1], m[2]));
    header.push_str(&format!("extents {} {} {}\n", e[0], e[1], e[2]));
    header.push_str(&format!("epsilon {}\n", d.epsilon));
    header.push_str(&format!("gamma {}\n", d.gamma));
    header.push_str(&format!("time {}\n", state.time));
    header.push_str(&format!("mean {}\n", state.phi.mean()));
    header.push_str(&format!("dt {dt}\n"));
    header.push_str(&format!("accept_streak {accept_streak}\n"));
    header.push('\n');

    let mut payload = Vec::with_capacity(d.len() * 8);
    for k in 0..m[2] {
        for j in 0..m[1] {
            for i in 0..m[0] {
                payload.extend_from_slice(&state.phi.coeffs()[[i, j, k]].to_le_bytes());
            }
        }
    }

    let mut f = std::fs::File::create(path).map_err(|err| Error::io(path, err))?;
    f.write_all(header.as_bytes())
        .and_then(|_| f.write_all(&payload))
        .map_err(|err| Error::io(path, err))
}

/// Load a snapshot; returns the state plus the stored integrator step size
/// and accept streak when present.
pub fn load(path: &Path) -> Result<(State, Option<f64>, Option<u32>)> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|err| Error::io(path, err))?;

    let snap_err = |msg: String| Error::Snapshot {
        path: path.to_path_buf(),
        msg,
    };

    let split = bytes
        .windows(2)
        .position(|w| w == b"\n\n")
        .ok_or_else(|| snap_err("missing blank line after header".into()))?;
    let header = std::str::from_utf8(&bytes[..split])
        .map_err(|_| snap_err("header is not valid UTF-8".into()))?;
    let payload = &bytes[split + 2..];

    let mut dim = None;
    let mut modes = None;
    let mut extents = None;
    let mut epsilon = None;
    let mut gamma = None;
    let mut time = None;
    let mut dt = None;
    let mut streak = None;

    for (n, line) in header.lines().enumerate() {
        let mut parts = line.split_whitespace();
        let key = parts.next().unwrap_or("");
        if n == 0 {
            if key != MAGIC {
                return Err(snap_err(format!("not a {MAGIC} file")));
            }
            let v: u32 = parts
                .next()
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| snap_err("missing format version".into()))?;
            if v != FORMAT_VERSION {
                return Err(snap_err(format!("unsupported format version {v}")));
            }
            continue;
        }
        let rest: Vec<&str> = parts.collect();
        let one = || -> Result<f64> {
            rest.first()
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| snap_err(format!("bad value for '{key}'")))
        };
        match key {
            "dim" => dim = Some(one()? as usize),
            "modes" => {
                if rest.len() != 3 {
                    return Err(snap_err("modes needs three values".into()));
                }
                let mut m = [0usize; 3];
                for (a, v) in m.iter_mut().zip(&rest) {
                    *a = v.parse().map_err(|_| snap_err("bad mode count".into()))?;
                }
                modes = Some(m);
            }
            "extents" => {
                if rest.len() != 3 {
                    return Err(snap_err("extents needs three values".into()));
                }
                let mut e = [0f64; 3];
                for (a, v) in e.iter_mut().zip(&rest) {
                    *a = v.parse().map_err(|_| snap_err("bad extent".into()))?;
                }
                extents = Some(e);
            }
            "epsilon" => epsilon = Some(one()?),
            "gamma" => gamma = Some(one()?),
            "time" => time = Some(one()?),
            "mean" => {} // informational; the payload is authoritative
            "dt" => dt = Some(one()?),
            "accept_streak" => streak = Some(one()? as u32),
            other => return Err(snap_err(format!("unknown header key '{other}'"))),
        }
    }

    let dim = dim.ok_or_else(|| snap_err("missing dim".into()))?;
    let m = modes.ok_or_else(|| snap_err("missing modes".into()))?;
    let e = extents.ok_or_else(|| snap_err("missing extents".into()))?;
    let epsilon = epsilon.ok_or_else(|| snap_err("missing epsilon".into()))?;
    let gamma = gamma.ok_or_else(|| snap_err("missing gamma".into()))?;
    let time = time.ok_or_else(|| snap_err("missing time".into()))?;

    let domain = match dim {
        2 => Domain::new_2d(e[0], e[1], m[0], m[1], epsilon, gamma),
        3 => Domain::new_3d(e[0], e[1], e[2], m[0], m[1], m[2], epsilon, gamma),
        other => return Err(snap_err(format!("bad dim {other}"))),
    }
    .map_err(|err| snap_err(err.to_string()))?;

    let n = domain.len();
    if payload.len() != n * 8 {
        return Err(snap_err(format!(
            "payload has {} bytes, expected {}",
            payload.len(),
            n * 8
        )));
    }
    let mut phi = SpectralField::zeros(domain.clone(), COSINE);
    let mm = domain.modes();
    let mut off = 0;
    for k in 0..mm[2] {
        for j in 0..mm[1] {
            for i in 0..mm[0] {
                let mut b = [0u8; 8];
                b.copy_from_slice(&payload[off..off + 8]);
                phi.coeffs_mut()[[i, j, k]] = f64::from_le_bytes(b);
                off += 8;
            }
        }
    }
    Ok((State::new(phi, time), dt, streak))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn save_load_save_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let d = Domain::new_2d(3.0, 1.5, 8, 6, 0.9, 1.1).unwrap();
        let mut phi = SpectralField::zeros(d, COSINE);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for v in phi.coeffs_mut().iter_mut() {
            *v = rng.random_range(-1.0..1.0);
        }
        let state = State::new(phi, 0.127);

        let p1 = dir.path().join("a.snap");
        let p2 = dir.path().join("b.snap");
        save(&p1, &state, 3e-4, 7).unwrap();
        let (loaded, dt, streak) = load(&p1).unwrap();
        assert_eq!(dt, Some(3e-4));
        assert_eq!(streak, Some(7));
        assert_eq!(loaded.time.to_bits(), state.time.to_bits());
        assert_eq!(loaded.phi.coeffs(), state.phi.coeffs());
        save(&p2, &loaded, 3e-4, 7).unwrap();
        let b1 = std::fs::read(&p1).unwrap();
        let b2 = std::fs::read(&p2).unwrap();
        assert_eq!(b1, b2);
    }

    #[test]
    fn truncated_payload_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let d = Domain::new_2d(1.0, 1.0, 4, 4, 1.0, 1.0).unwrap();
        let state = State::new(SpectralField::constant(d, 0.5), 0.0);
        let p = dir.path().join("t.snap");
        save(&p, &state, 1e-4, 0).unwrap();
        let mut bytes = std::fs::read(&p).unwrap();
        bytes.truncate(bytes.len() - 8);
        std::fs::write(&p, &bytes).unwrap();
        assert!(matches!(load(&p), Err(Error::Snapshot { .. })));
    }

    #[test]
    fn three_dimensional_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let d = Domain::new_3d(1.0, 2.0, 3.0, 4, 3, 5, 1.0, 0.5).unwrap();
        let mut phi = SpectralField::zeros(d, COSINE);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for v in phi.coeffs_mut().iter_mut() {
            *v = rng.random_range(-1.0..1.0);
        }
        let state = State::new(phi, 2.5);
        let p = dir.path().join("c.snap");
        save(&p, &state, 1e-3, 0).unwrap();
        let (loaded, _, _) = load(&p).unwrap();
        assert_eq!(loaded.phi.coeffs(), state.phi.coeffs());
        assert_eq!(loaded.phi.domain(), state.phi.domain());
    }
}
