//! Run output: the diagnostics CSV, decay-fit CSV, grayscale PGM images of
//! 2D snapshots, and a gnuplot script referencing them.

use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::diagnostics::{DecayFit, DiagnosticsRecord};
use crate::error::{Error, Result};
use crate::spectral::ScalarField;

/// Fixed column set of `diagnostics.csv`.
pub const CSV_HEADER: &str =
    "time,mass,energy,grad_mu_sq,v_sq,h1_dist,h2_dist,h4_weighted,gevrey_slope,dt";

pub struct DiagnosticsCsv {
    w: BufWriter<std::fs::File>,
    path: PathBuf,
}

impl DiagnosticsCsv {
    /// Create the file with its header row.
    pub fn create(path: &Path) -> Result<Self> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(f);
        writeln!(w, "{CSV_HEADER}").map_err(|e| Error::io(path, e))?;
        Ok(DiagnosticsCsv {
            w,
            path: path.to_path_buf(),
        })
    }

    /// Open an existing file for appending (no header written).
    pub fn append(path: &Path) -> Result<Self> {
        let f = std::fs::OpenOptions::new()
            .append(true)
            .open(path)
            .map_err(|e| Error::io(path, e))?;
        Ok(DiagnosticsCsv {
            w: BufWriter::new(f),
            path: path.to_path_buf(),
        })
    }

    pub fn write_record(&mut self, r: &DiagnosticsRecord) -> Result<()> {
        writeln!(
            self.w,
            "{},{},{},{},{},{},{},{},{},{}",
            r.time,
            r.mass,
            r.energy,
            r.grad_mu_sq,
            r.v_sq,
            r.h1_dist,
            r.h2_dist,
            r.h4_weighted,
            r.gevrey_slope,
            r.dt
        )
        .map_err(|e| Error::io(&self.path, e))
    }

    pub fn flush(&mut self) -> Result<()> {
        self.w.flush().map_err(|e| Error::io(&self.path, e))
    }
}

/// Parse a diagnostics CSV written by [`DiagnosticsCsv`].
pub fn read_diagnostics_csv(path: &Path) -> Result<Vec<DiagnosticsRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    if header != CSV_HEADER {
        return Err(Error::Mismatch(format!(
            "unexpected CSV header in {}: '{header}'",
            path.display()
        )));
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 10 {
            return Err(Error::Mismatch(format!(
                "{}:{}: expected 10 columns, got {}",
                path.display(),
                i + 2,
                fields.len()
            )));
        }
        let mut v = [0f64; 10];
        for (slot, field) in v.iter_mut().zip(&fields) {
            *slot = field.parse().map_err(|_| {
                Error::Mismatch(format!("{}:{}: bad float '{field}'", path.display(), i + 2))
            })?;
        }
        out.push(DiagnosticsRecord {
            time: v[0],
            mass: v[1],
            energy: v[2],
            grad_mu_sq: v[3],
            v_sq: v[4],
            h1_dist: v[5],
            h2_dist: v[6],
            h4_weighted: v[7],
            gevrey_slope: v[8],
            dt: v[9],
        });
    }
    Ok(out)
}

/// Append decay fits to `fits.csv`, creating it with a header if needed.
pub fn append_fits_csv(path: &Path, fits: &[(String, DecayFit)]) -> Result<()> {
    let exists = path.exists();
    let f = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    if !exists {
        writeln!(w, "quantity,t_start,t_end,rate,intercept,r_squared").map_err(|e| Error::io(path, e))?;
    }
    for (name, fit) in fits {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            name, fit.window.0, fit.window.1, fit.rate, fit.intercept, fit.r_squared
        )
        .map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Write a 2D field as a binary PGM image, values affinely mapped from
/// `[min, max]` onto 0..=255. Row r is the y index, column c the x index.
pub fn write_pgm(path: &Path, field: &ScalarField) -> Result<()> {
    let m = field.domain().modes();
    let (nx, ny) = (m[0], m[1]);
    let v = field.values();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for x in v.iter() {
        lo = lo.min(*x);
        hi = hi.max(*x);
    }
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut bytes = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let t = (v[[i, j, 0]] - lo) / span;
            bytes.push((t * 255.0).round().clamp(0.0, 255.0) as u8);
        }
    }
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write!(f, "P5\n{nx} {ny}\n255\n").map_err(|e| Error::io(path, e))?;
    f.write_all(&bytes).map_err(|e| Error::io(path, e))
}

/// Emit a gnuplot script plotting the recorded diagnostics.
pub fn write_plot_script(path: &Path, csv: &str, pgms: &[String]) -> Result<()> {
    let mut s = String::new();
    s.push_str("# gnuplot script generated by chhs\n");
    s.push_str("set datafile separator ','\n");
    s.push_str("set key autotitle columnhead\n");
    s.push_str("set xlabel 't'\n");
    s.push_str("set terminal pngcairo size 900,600\n\n");
    s.push_str("set output 'energy.png'\n");
    s.push_str(&format!("plot '{csv}' using 1:3 with lines title 'energy'\n\n"));
    s.push_str("set output 'dissipation.png'\n");
    s.push_str("set logscale y\n");
    s.push_str(&format!(
        "plot '{csv}' using 1:4 with lines title '|grad mu|^2', \\\n     '{csv}' using 1:5 with lines title '|v|^2'\n\n"
    ));
    s.push_str("set output 'decay.png'\n");
    s.push_str(&format!(
        "plot '{csv}' using 1:($6*$6) with lines title '|phi-mean|_H1^2', \\\n     '{csv}' using 1:($7*$7) with lines title '|phi-mean|_H2^2'\n"
    ));
    if !pgms.is_empty() {
        s.push_str("\n# snapshot images:\n");
        for p in pgms {
            s.push_str(&format!("# {p}\n"));
        }
    }
    std::fs::write(path, s).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Domain;

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        let recs = vec![
            DiagnosticsRecord {
                time: 0.0,
                mass: 0.3,
                energy: 1.5,
                grad_mu_sq: 0.1,
                v_sq: 0.01,
                h1_dist: 0.2,
                h2_dist: 0.5,
                h4_weighted: 0.0,
                gevrey_slope: f64::NAN,
                dt: 1e-4,
            },
            DiagnosticsRecord {
                time: 1e-4,
                mass: 0.3,
                energy: 1.4,
                grad_mu_sq: 0.09,
                v_sq: 0.009,
                h1_dist: 0.19,
                h2_dist: 0.45,
                h4_weighted: 2e-5,
                gevrey_slope: -1.25,
                dt: 1e-4,
            },
        ];
        let mut w = DiagnosticsCsv::create(&path).unwrap();
        for r in &recs {
            w.write_record(r).unwrap();
        }
        w.flush().unwrap();
        let back = read_diagnostics_csv(&path).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].time, 0.0);
        assert!(back[0].gevrey_slope.is_nan());
        assert_eq!(back[1].energy, 1.4);
        assert_eq!(back[1].gevrey_slope, -1.25);
    }

    #[test]
    fn pgm_has_correct_shape() {
        let dir = tempfile::tempdir().unwrap();
        let d = Domain::new_2d(1.0, 1.0, 4, 3, 1.0, 1.0).unwrap();
        let f = ScalarField::from_fn(d, |x, y, _| x + y);
        let p = dir.path().join("f.pgm");
        write_pgm(&p, &f).unwrap();
        let bytes = std::fs::read(&p).unwrap();
        let header = b"P5\n4 3\n255\n";
        assert!(bytes.starts_with(header));
        assert_eq!(bytes.len(), header.len() + 12);
    }
}
