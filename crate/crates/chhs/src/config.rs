//! Run configuration: a flat, line-oriented `section.key=value` format with
//! no external dependencies. Full-line comments start with `#`; keys are
//! grouped by dotted section prefixes (`domain.L=3.0`). Parsing a serialized
//! config yields an equivalent config.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::ic::{IcConfig, IcKind};
use crate::integrator::{IntegratorConfig, Scheme};
use crate::model::ModelParams;
use crate::spectral::Domain;

#[derive(Clone, Debug, PartialEq)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub snapshot_times: Vec<f64>,
    pub csv_every: usize,
    pub emit_plots: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("out"),
            snapshot_times: Vec::new(),
            csv_every: 1,
            emit_plots: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub domain: Domain,
    pub model: ModelParams,
    pub ic: IcConfig,
    pub integrator: IntegratorConfig,
    pub output: OutputConfig,
    pub tag: String,
}

struct Entry {
    value: String,
    line: usize,
    used: std::cell::Cell<bool>,
}

struct Raw<'a> {
    path: &'a str,
    map: std::collections::BTreeMap<String, Entry>,
}

impl<'a> Raw<'a> {
    fn err(&self, line: usize, msg: impl Into<String>) -> Error {
        Error::Config {
            path: self.path.to_string(),
            line,
            msg: msg.into(),
        }
    }

    fn get(&self, key: &str) -> Option<&Entry> {
        let e = self.map.get(key);
        if let Some(e) = e {
            e.used.set(true);
        }
        e
    }

    fn require(&self, key: &str) -> Result<&Entry> {
        self.get(key)
            .ok_or_else(|| self.err(0, format!("missing required key '{key}'")))
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let e = self.require(key)?;
        e.value
            .parse::<T>()
            .map_err(|_| self.err(e.line, format!("cannot parse '{}' for key '{key}'", e.value)))
    }

    fn parse_opt<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.get(key) {
            None => Ok(None),
            Some(e) => e
                .value
                .parse::<T>()
                .map(Some)
                .map_err(|_| self.err(e.line, format!("cannot parse '{}' for key '{key}'", e.value))),
        }
    }

    fn parse_or<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.parse_opt(key)?.unwrap_or(default))
    }
}

fn parse_bool(raw: &Raw, key: &str, default: bool) -> Result<bool> {
    match raw.get(key) {
        None => Ok(default),
        Some(e) => match e.value.as_str() {
            "true" | "1" | "yes" => Ok(true),
            "false" | "0" | "no" => Ok(false),
            other => Err(raw.err(e.line, format!("expected a boolean for '{key}', got '{other}'"))),
        },
    }
}

impl RunConfig {
    pub fn parse_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_str(&text, &path.display().to_string())
    }

    pub fn parse_str(text: &str, path: &str) -> Result<Self> {
        let mut map = std::collections::BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let lineno = i + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (key, value) = trimmed.split_once('=').ok_or_else(|| Error::Config {
                path: path.to_string(),
                line: lineno,
                msg: format!("expected 'key=value', got '{trimmed}'"),
            })?;
            let key = key.trim().to_string();
            if map.contains_key(&key) {
                return Err(Error::Config {
                    path: path.to_string(),
                    line: lineno,
                    msg: format!("duplicate key '{key}'"),
                });
            }
            map.insert(
                key,
                Entry {
                    value: value.trim().to_string(),
                    line: lineno,
                    used: std::cell::Cell::new(false),
                },
            );
        }
        let raw = Raw { path, map };
        let cfg = Self::from_raw(&raw)?;
        for (key, e) in raw.map.iter() {
            if !e.used.get() {
                return Err(Error::Config {
                    path: path.to_string(),
                    line: e.line,
                    msg: format!("unknown key '{key}'"),
                });
            }
        }
        Ok(cfg)
    }

    fn from_raw(raw: &Raw) -> Result<Self> {
        let dim: usize = raw.parse("domain.dim")?;
        let lx: f64 = raw.parse("domain.L")?;
        let ly: f64 = raw.parse("domain.l")?;
        let nx: usize = raw.parse("domain.nx")?;
        let ny: usize = raw.parse("domain.ny")?;
        let epsilon: f64 = raw.parse_or("domain.epsilon", 1.0)?;
        let gamma: f64 = raw.parse_or("domain.gamma", 1.0)?;
        let domain = match dim {
            2 => Domain::new_2d(lx, ly, nx, ny, epsilon, gamma),
            3 => {
                let lz: f64 = raw.parse("domain.h")?;
                let nz: usize = raw.parse("domain.nz")?;
                Domain::new_3d(lx, ly, lz, nx, ny, nz, epsilon, gamma)
            }
            other => {
                let e = raw.require("domain.dim")?;
                return Err(raw.err(e.line, format!("domain.dim must be 2 or 3, got {other}")));
            }
        }
        .map_err(|e| raw.err(0, e.to_string()))?;

        let model = ModelParams {
            epsilon,
            gamma,
            advection_enabled: parse_bool(raw, "model.advection", true)?,
            dealias_padding: raw.parse_or("model.dealias_padding", 2usize)?,
        };
        model.validate().map_err(|e| raw.err(0, e.to_string()))?;

        let mean: f64 = raw.parse_or("ic.mean", 0.0)?;
        let kind_entry = raw.require("ic.kind")?;
        let kind = match kind_entry.value.as_str() {
            "constant_plus_modes" => IcKind::ConstantPlusModes {
                modes: parse_modes(raw)?,
            },
            "random_perturbation" => IcKind::RandomPerturbation {
                amplitude: raw.parse_or("ic.amplitude", 0.01)?,
                seed: raw.parse_or("ic.seed", 0u64)?,
                q: raw.parse_or("ic.q", 2.0)?,
                h2_target: raw.parse_opt("ic.h2_target")?,
            },
            "tanh_interface" => {
                let axis_entry = raw.require("ic.interface_axis")?;
                let axis = match axis_entry.value.as_str() {
                    "x" => 0,
                    "y" => 1,
                    "z" => 2,
                    other => {
                        return Err(raw.err(
                            axis_entry.line,
                            format!("interface_axis must be x, y or z, got '{other}'"),
                        ))
                    }
                };
                IcKind::TanhInterface {
                    axis,
                    x0: raw.parse("ic.interface_x0")?,
                    amplitude: raw.parse_or("ic.amplitude", 1.0)?,
                }
            }
            "from_snapshot" => IcKind::FromSnapshot {
                path: PathBuf::from(&raw.require("ic.snapshot")?.value),
            },
            other => {
                return Err(raw.err(kind_entry.line, format!("unknown ic.kind '{other}'")));
            }
        };
        let ic = IcConfig { kind, mean };

        let scheme_name: String = raw.parse_or("integrator.scheme", "imex_stabilized".to_string())?;
        let scheme = match scheme_name.as_str() {
            "imex_stabilized" => Scheme::ImexStabilized,
            "rk4_reference" => Scheme::Rk4Reference,
            other => {
                let e = raw.require("integrator.scheme")?;
                return Err(raw.err(e.line, format!("unknown scheme '{other}'")));
            }
        };
        let t_end: f64 = raw.parse("integrator.t_end")?;
        let mut integrator = IntegratorConfig::new(t_end);
        integrator.scheme = scheme;
        integrator.dt = raw.parse_or("integrator.dt", integrator.dt)?;
        integrator.dt_min = raw.parse_or("integrator.dt_min", integrator.dt_min)?;
        integrator.dt_max = raw.parse_or("integrator.dt_max", integrator.dt_max)?;
        integrator.stabilization_s = raw.parse_or("integrator.stabilization_s", integrator.stabilization_s)?;
        integrator.energy_tol = raw.parse_or("integrator.energy_tol", integrator.energy_tol)?;
        integrator.adapt = parse_bool(raw, "integrator.adapt", true)?;
        integrator.checkpoint_every = raw.parse_or("integrator.checkpoint_every", 100usize)?;
        integrator
            .validate()
            .map_err(|e| raw.err(0, e.to_string()))?;

        let mut output = OutputConfig {
            dir: PathBuf::from(raw.parse_or("output.dir", "out".to_string())?),
            snapshot_times: Vec::new(),
            csv_every: raw.parse_or("output.csv_every", 1usize)?,
            emit_plots: parse_bool(raw, "output.emit_plots", false)?,
        };
        if let Some(e) = raw.get("output.snapshot_times") {
            if !e.value.is_empty() {
                for part in e.value.split(',') {
                    let t: f64 = part.trim().parse().map_err(|_| {
                        raw.err(e.line, format!("cannot parse snapshot time '{}'", part.trim()))
                    })?;
                    output.snapshot_times.push(t);
                }
            }
        }
        output
            .snapshot_times
            .sort_by(|a, b| a.partial_cmp(b).unwrap());
        integrator.snapshot_times = output.snapshot_times.clone();

        let tag: String = raw.parse_or("experiment.tag", String::new())?;

        Ok(RunConfig {
            domain,
            model,
            ic,
            integrator,
            output,
            tag,
        })
    }

    /// Canonical serialization; parsing it back yields an equal config.
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        let d = &self.domain;
        let e = d.extents();
        let m = d.modes();
        push(&mut s, "domain.dim", d.dim());
        push(&mut s, "domain.L", e[0]);
        push(&mut s, "domain.l", e[1]);
        if d.dim() == 3 {
            push(&mut s, "domain.h", e[2]);
        }
        push(&mut s, "domain.nx", m[0]);
        push(&mut s, "domain.ny", m[1]);
        if d.dim() == 3 {
            push(&mut s, "domain.nz", m[2]);
        }
        push(&mut s, "domain.epsilon", d.epsilon);
        push(&mut s, "domain.gamma", d.gamma);
        push(&mut s, "model.advection", self.model.advection_enabled);
        push(&mut s, "model.dealias_padding", self.model.dealias_padding);
        push(&mut s, "ic.mean", self.ic.mean);
        match &self.ic.kind {
            IcKind::ConstantPlusModes { modes } => {
                push(&mut s, "ic.kind", "constant_plus_modes");
                if !modes.is_empty() {
                    let parts: Vec<String> = modes
                        .iter()
                        .map(|(idx, a)| format!("{},{},{},{}", idx[0], idx[1], idx[2], a))
                        .collect();
                    push(&mut s, "ic.modes", parts.join(";"));
                }
            }
            IcKind::RandomPerturbation {
                amplitude,
                seed,
                q,
                h2_target,
            } => {
                push(&mut s, "ic.kind", "random_perturbation");
                push(&mut s, "ic.amplitude", *amplitude);
                push(&mut s, "ic.seed", *seed);
                push(&mut s, "ic.q", *q);
                if let Some(h) = h2_target {
                    push(&mut s, "ic.h2_target", *h);
                }
            }
            IcKind::TanhInterface { axis, x0, amplitude } => {
                push(&mut s, "ic.kind", "tanh_interface");
                push(&mut s, "ic.interface_axis", ["x", "y", "z"][*axis]);
                push(&mut s, "ic.interface_x0", *x0);
                push(&mut s, "ic.amplitude", *amplitude);
            }
            IcKind::FromSnapshot { path } => {
                push(&mut s, "ic.kind", "from_snapshot");
                push(&mut s, "ic.snapshot", path.display());
            }
        }
        let i = &self.integrator;
        push(
            &mut s,
            "integrator.scheme",
            match i.scheme {
                Scheme::ImexStabilized => "imex_stabilized",
                Scheme::Rk4Reference => "rk4_reference",
            },
        );
        push(&mut s, "integrator.dt", i.dt);
        push(&mut s, "integrator.dt_min", i.dt_min);
        push(&mut s, "integrator.dt_max", i.dt_max);
        push(&mut s, "integrator.stabilization_s", i.stabilization_s);
        push(&mut s, "integrator.energy_tol", i.energy_tol);
        push(&mut s, "integrator.adapt", i.adapt);
        push(&mut s, "integrator.t_end", i.t_end);
        push(&mut s, "integrator.checkpoint_every", i.checkpoint_every);
        push(&mut s, "output.dir", self.output.dir.display());
        if !self.output.snapshot_times.is_empty() {
            let parts: Vec<String> = self.output.snapshot_times.iter().map(|t| t.to_string()).collect();
            push(&mut s, "output.snapshot_times", parts.join(","));
        }
        push(&mut s, "output.csv_every", self.output.csv_every);
        push(&mut s, "output.emit_plots", self.output.emit_plots);
        if !self.tag.is_empty() {
            push(&mut s, "experiment.tag", &self.tag);
        }
        s
    }
}

fn push(s: &mut String, key: &str, value: impl std::fmt::Display) {
    s.push_str(&format!("{key}={value}\n"));
}

fn parse_modes(raw: &Raw) -> Result<Vec<([usize; 3], f64)>> {
    let mut out = Vec::new();
    if let Some(e) = raw.get("ic.modes") {
        for group in e.value.split(';') {
            let group = group.trim();
            if group.is_empty() {
                continue;
            }
            let parts: Vec<&str> = group.split(',').map(str::trim).collect();
            if parts.len() != 4 {
                return Err(raw.err(
                    e.line,
                    format!("mode entry '{group}' must be 'i,j,k,amplitude'"),
                ));
            }
            let idx = [
                parts[0].parse().map_err(|_| raw.err(e.line, "bad mode index"))?,
                parts[1].parse().map_err(|_| raw.err(e.line, "bad mode index"))?,
                parts[2].parse().map_err(|_| raw.err(e.line, "bad mode index"))?,
            ];
            let amp: f64 = parts[3]
                .parse()
                .map_err(|_| raw.err(e.line, "bad mode amplitude"))?;
            out.push((idx, amp));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# reference run
domain.dim=2
domain.L=3.0
domain.l=3.0
domain.nx=32
domain.ny=32
domain.epsilon=1.0
domain.gamma=1.0
ic.kind=random_perturbation
ic.mean=0.7
ic.amplitude=0.05
ic.seed=42
ic.q=2.0
integrator.t_end=1.0
integrator.dt=0.001
output.dir=out/sample
output.snapshot_times=0.5,1.0
experiment.tag=sample
";

    #[test]
    fn parse_serialize_round_trip() {
        let a = RunConfig::parse_str(SAMPLE, "sample").unwrap();
        let b = RunConfig::parse_str(&a.serialize(), "serialized").unwrap();
        assert_eq!(a, b);
        // And idempotent from there.
        let c = RunConfig::parse_str(&b.serialize(), "serialized2").unwrap();
        assert_eq!(b, c);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let bad = "domain.dim=2\ndomain.L=abc\n";
        match RunConfig::parse_str(bad, "t") {
            Err(Error::Config { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected config error, got {other:?}"),
        }

        let unknown = format!("{SAMPLE}nonsense.key=1\n");
        match RunConfig::parse_str(&unknown, "t") {
            Err(Error::Config { msg, .. }) => assert!(msg.contains("unknown key")),
            other => panic!("expected config error, got {other:?}"),
        }

        let noeq = "domain.dim\n";
        match RunConfig::parse_str(noeq, "t") {
            Err(Error::Config { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn mode_lists_parse() {
        let text = "\
domain.dim=2
domain.L=3.14159
domain.l=1.0
domain.nx=8
domain.ny=8
ic.kind=constant_plus_modes
ic.mean=0.7
ic.modes=1,0,0,0.0001;2,1,0,-0.5
integrator.t_end=0.1
";
        let cfg = RunConfig::parse_str(text, "t").unwrap();
        match &cfg.ic.kind {
            IcKind::ConstantPlusModes { modes } => {
                assert_eq!(modes.len(), 2);
                assert_eq!(modes[0], ([1, 0, 0], 0.0001));
                assert_eq!(modes[1], ([2, 1, 0], -0.5));
            }
            other => panic!("wrong kind {other:?}"),
        }
    }
}
