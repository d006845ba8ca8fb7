//! Batch orchestration behind the CLI subcommands: run, resume, analyze,
//! conditions. File writes are append-only and flushed at checkpoints so an
//! interrupted run can resume from the last complete snapshot.

use std::path::{Path, PathBuf};

use crate::config::RunConfig;
use crate::diagnostics::{check_theorem_conditions, fit_exponential_decay, DiagnosticsRecord};
use crate::error::{Error, Result};
use crate::ic::generate_ic;
use crate::integrator::{run_from, RunHooks, Trajectory};
use crate::model::{ModelParams, State};
use crate::output::{append_fits_csv, read_diagnostics_csv, write_pgm, write_plot_script, DiagnosticsCsv};
use crate::snapshot;
use crate::spectral::inverse_transform;

struct FileHooks {
    dir: PathBuf,
    csv: DiagnosticsCsv,
    csv_every: usize,
    rows_seen: usize,
    skip_first_record: bool,
}

impl FileHooks {
    fn snapshot_name(t: f64) -> String {
        format!("snapshot_t{t}.snap")
    }
}

impl RunHooks for FileHooks {
    fn on_record(&mut self, rec: &DiagnosticsRecord, _state: &State) -> Result<()> {
        if self.skip_first_record {
            self.skip_first_record = false;
            return Ok(());
        }
        if self.rows_seen % self.csv_every.max(1) == 0 {
            self.csv.write_record(rec)?;
        }
        self.rows_seen += 1;
        Ok(())
    }

    fn on_checkpoint(&mut self, _step: usize, state: &State, dt: f64, streak: u32) -> Result<()> {
        self.csv.flush()?;
        let tmp = self.dir.join("checkpoint.snap.tmp");
        let fin = self.dir.join("checkpoint.snap");
        snapshot::save(&tmp, state, dt, streak)?;
        std::fs::rename(&tmp, &fin).map_err(|e| Error::io(&fin, e))
    }

    fn on_snapshot(&mut self, state: &State, dt: f64, streak: u32) -> Result<()> {
        self.csv.flush()?;
        let path = self.dir.join(Self::snapshot_name(state.time));
        snapshot::save(&path, state, dt, streak)
    }
}

fn finish_run(
    dir: &Path,
    cfg: &RunConfig,
    result: Result<Trajectory>,
    mut hooks: FileHooks,
) -> Result<Trajectory> {
    match result {
        Ok(traj) => {
            hooks.csv.flush()?;
            snapshot::save(
                &dir.join("final.snap"),
                &traj.final_state,
                traj.final_dt,
                traj.final_streak,
            )?;
            if cfg.output.emit_plots {
                let mut pgms = Vec::new();
                if cfg.domain.dim() == 2 {
                    for st in &traj.snapshots {
                        let name = format!("phi_t{}.pgm", st.time);
                        write_pgm(&dir.join(&name), &inverse_transform(&st.phi)?)?;
                        pgms.push(name);
                    }
                    let f = inverse_transform(&traj.final_state.phi)?;
                    let name = format!("phi_t{}.pgm", traj.final_state.time);
                    write_pgm(&dir.join(&name), &f)?;
                    pgms.push(name);
                }
                write_plot_script(&dir.join("plot.gp"), "diagnostics.csv", &pgms)?;
            }
            let last = traj.records.last().expect("runs record at least one row");
            println!(
                "run complete: t = {}, {} accepted steps, energy {:.6e}, mass drift {:.3e}",
                last.time,
                traj.records.len() - 1,
                last.energy,
                (last.mass - traj.records[0].mass).abs()
            );
            Ok(traj)
        }
        Err(e) => {
            hooks.csv.flush().ok();
            if let Error::BlowUp { state, .. } | Error::DissipationFailure { state, .. } = &e {
                let dump = dir.join("blowup.snap");
                if snapshot::save(&dump, state, 0.0, 0).is_ok() {
                    eprintln!("last accepted state dumped to {}", dump.display());
                }
            }
            Err(e)
        }
    }
}

/// `chhs run`: execute a config to completion, writing diagnostics.csv and
/// snapshots into the output directory.
pub fn cmd_run(cfg: &RunConfig, output_override: Option<&Path>) -> Result<Trajectory> {
    let dir = output_override.unwrap_or(&cfg.output.dir).to_path_buf();
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    std::fs::write(dir.join("config.resolved"), cfg.serialize())
        .map_err(|e| Error::io(dir.join("config.resolved"), e))?;

    let state = generate_ic(&cfg.domain, &cfg.ic)?;
    let hooks = FileHooks {
        dir: dir.clone(),
        csv: DiagnosticsCsv::create(&dir.join("diagnostics.csv"))?,
        csv_every: cfg.output.csv_every,
        rows_seen: 0,
        skip_first_record: false,
    };
    let mut hooks = hooks;
    let result = run_from(
        state,
        &cfg.model,
        &cfg.integrator,
        cfg.integrator.dt,
        0,
        &mut hooks,
    );
    finish_run(&dir, cfg, result, hooks)
}

/// `chhs resume`: continue a run from a snapshot under the same config.
/// When the output directory already holds a diagnostics.csv the new rows
/// are appended (the snapshot's own row is already the last one there).
pub fn cmd_resume(snapshot_path: &Path, cfg: &RunConfig, output_override: Option<&Path>) -> Result<Trajectory> {
    let dir = output_override.unwrap_or(&cfg.output.dir).to_path_buf();
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;

    let (state, dt, streak) = snapshot::load(snapshot_path)?;
    if state.phi.domain() != &cfg.domain {
        return Err(Error::Mismatch(
            "snapshot domain does not match the configured domain".into(),
        ));
    }
    if state.time >= cfg.integrator.t_end {
        return Err(Error::Mismatch(format!(
            "snapshot time {} is already past t_end {}",
            state.time, cfg.integrator.t_end
        )));
    }

    let csv_path = dir.join("diagnostics.csv");
    let existing = csv_path.exists();
    let csv = if existing {
        DiagnosticsCsv::append(&csv_path)?
    } else {
        DiagnosticsCsv::create(&csv_path)?
    };
    let mut hooks = FileHooks {
        dir: dir.clone(),
        csv,
        csv_every: cfg.output.csv_every,
        rows_seen: if existing { 1 } else { 0 },
        skip_first_record: existing,
    };
    let result = run_from(
        state,
        &cfg.model,
        &cfg.integrator,
        dt.unwrap_or(cfg.integrator.dt),
        streak.unwrap_or(0),
        &mut hooks,
    );
    finish_run(&dir, cfg, result, hooks)
}

/// `chhs analyze`: fit exponential decay rates from a run's diagnostics.csv
/// and cross-check any stored snapshots against the recorded rows. Appends
/// the fits to fits.csv in the same directory.
pub fn cmd_analyze(dir: &Path, fit_window: Option<(f64, f64)>) -> Result<()> {
    let csv = dir.join("diagnostics.csv");
    let records = read_diagnostics_csv(&csv)?;
    if records.is_empty() {
        return Err(Error::InsufficientData(format!("{} has no rows", csv.display())));
    }
    let window = fit_window.unwrap_or((
        records.first().unwrap().time,
        records.last().unwrap().time,
    ));

    let mut fits = Vec::new();
    for (name, series) in [
        (
            "h1_dist_sq",
            records
                .iter()
                .map(|r| (r.time, r.h1_dist * r.h1_dist))
                .collect::<Vec<_>>(),
        ),
        (
            "h2_dist_sq",
            records
                .iter()
                .map(|r| (r.time, r.h2_dist * r.h2_dist))
                .collect::<Vec<_>>(),
        ),
    ] {
        match fit_exponential_decay(&series, window) {
            Ok(fit) => {
                println!(
                    "{name}: rate = {:.6} (r^2 = {:.4}) over t in [{}, {}]",
                    fit.rate, fit.r_squared, fit.window.0, fit.window.1
                );
                fits.push((name.to_string(), fit));
            }
            Err(e) => println!("{name}: no fit ({e})"),
        }
    }
    if !fits.is_empty() {
        append_fits_csv(&dir.join("fits.csv"), &fits)?;
    }

    // Recompute diagnostics from stored snapshots as a consistency check.
    let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension().is_some_and(|x| x == "snap")
                && p.file_name()
                    .is_some_and(|n| n.to_string_lossy().starts_with("snapshot_"))
        })
        .collect();
    entries.sort();
    for path in entries {
        let (state, recorded_dt, _) = snapshot::load(&path)?;
        let params = ModelParams::from_domain(state.phi.domain());
        let rec = DiagnosticsRecord::measure(&state, &params, recorded_dt.unwrap_or(0.0))?;
        let nearest = records
            .iter()
            .min_by(|a, b| {
                (a.time - state.time)
                    .abs()
                    .partial_cmp(&(b.time - state.time).abs())
                    .unwrap()
            })
            .unwrap();
        let de = (rec.energy - nearest.energy).abs();
        println!(
            "{}: recomputed energy {:.6e} vs recorded {:.6e} (|diff| = {:.2e})",
            path.file_name().unwrap().to_string_lossy(),
            rec.energy,
            nearest.energy,
            de
        );
    }
    Ok(())
}

/// `chhs conditions`: evaluate the long-time-theorem hypotheses for a config.
pub fn cmd_conditions(cfg: &RunConfig) -> Result<()> {
    let state = generate_ic(&cfg.domain, &cfg.ic)?;
    let report = check_theorem_conditions(&cfg.domain, &state.phi);
    println!("{report}");
    Ok(())
}
