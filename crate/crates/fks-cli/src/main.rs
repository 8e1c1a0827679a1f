//! Command-line front end: run configured cases, compare dumps, report
//! relaxation errors, and time the collision evaluator.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fks::config::parse_config;
use fks::dump::{bkw_report, diff_files, write_binary_dump, write_diagnostics_csv, write_text_dump};
use fks::solver::Solver;
use fks::spectral::{CollisionTables, KernelKind, SpectralConfig};
use fks::{FksError, Result};

#[derive(Parser)]
#[command(name = "fks", version, about = "Deterministic kinetic solver")]
struct Cli {
    /// Worker threads for the collision stage (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a configured case and write dumps plus the diagnostics CSV.
    Simulate {
        /// Path to the INI config file.
        config_path: Option<PathBuf>,
        /// Alternative way to pass the config file.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        output_dir: PathBuf,
        /// Dump fields every this many steps (overrides the config file).
        #[arg(long)]
        dump_every: Option<usize>,
    },
    /// Relative L1/L2/Linf difference between two dump files.
    Diff { a: PathBuf, b: PathBuf },
    /// Errors of a directory of homogeneous relaxation dumps against the
    /// exact solution.
    ReportBkw { series_dir: PathBuf },
    /// Median wall time of the fast collision evaluation on random data.
    BenchCollision {
        #[arg(long)]
        dv: usize,
        #[arg(long)]
        n: usize,
        /// Angle count, or two comma-separated counts in 3D.
        #[arg(long)]
        angles: String,
        #[arg(long, default_value_t = 21)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(workers) = cli.workers {
        if rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .is_err()
        {
            eprintln!("error: could not size the worker pool");
            return ExitCode::from(1);
        }
    }
    match dispatch(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                FksError::Instability { .. } | FksError::Degenerate { .. } => 2,
                FksError::Config(_) | FksError::Grid(_) | FksError::Format(_) => 3,
                _ => 1,
            })
        }
    }
}

fn dispatch(cmd: Cmd) -> Result<()> {
    match cmd {
        Cmd::Simulate { config_path, config, output_dir, dump_every } => {
            let path = match (config_path, config) {
                (Some(p), None) | (None, Some(p)) => p,
                _ => {
                    return Err(FksError::Config(
                        "pass the config file either positionally or via --config".into(),
                    ))
                }
            };
            simulate(&path, &output_dir, dump_every)
        }
        Cmd::Diff { a, b } => {
            let rep = diff_files(&a, &b)?;
            println!("L1 {:.10e}  L2 {:.10e}  Linf {:.10e}", rep.l1, rep.l2, rep.linf);
            Ok(())
        }
        Cmd::ReportBkw { series_dir } => {
            let reports = bkw_report(&series_dir)?;
            if reports.is_empty() {
                return Err(FksError::Format(format!(
                    "no .bin dumps under {}",
                    series_dir.display()
                )));
            }
            for (t, rep) in reports {
                println!(
                    "t={:.6} L1={:.10e} L2={:.10e} Linf={:.10e}",
                    t, rep.l1, rep.l2, rep.linf
                );
            }
            Ok(())
        }
        Cmd::BenchCollision { dv, n, angles, reps, seed } => bench_collision(dv, n, &angles, reps, seed),
    }
}

fn simulate(config: &Path, output_dir: &Path, dump_every: Option<usize>) -> Result<()> {
    let text = std::fs::read_to_string(config)
        .map_err(|e| FksError::Config(format!("cannot read {}: {e}", config.display())))?;
    let mut cfg = parse_config(&text)?;
    if let Some(every) = dump_every {
        cfg.dump_every = every;
    }
    std::fs::create_dir_all(output_dir)?;
    let mut solver = cfg.build()?;

    let mut last_dumped = None;
    let outcome = {
        let cfg = &cfg;
        let dump = |s: &Solver, step: u64| -> Result<()> {
            write_text_dump(&output_dir.join(format!("macro_{step:06}.txt")), s, cfg.case.name(), step)?;
            if cfg.binary_dumps {
                write_binary_dump(&output_dir.join(format!("f_{step:06}.bin")), s, step)?;
            }
            Ok(())
        };
        let last = &mut last_dumped;
        solver.run(cfg.t_final, |s| {
            let step = s.steps_done() as u64;
            let due = step == 0 || (cfg.dump_every > 0 && step % cfg.dump_every as u64 == 0);
            if due {
                dump(s, step)?;
                *last = Some(step);
            }
            Ok(())
        })
    };

    // The audit trail and the last reached state are written even when the
    // run aborts, so failures stay inspectable.
    write_diagnostics_csv(&output_dir.join("diagnostics.csv"), &solver.diagnostics)?;
    let step = solver.steps_done() as u64;
    if last_dumped != Some(step) {
        write_text_dump(
            &output_dir.join(format!("macro_{step:06}.txt")),
            &solver,
            cfg.case.name(),
            step,
        )?;
        if cfg.binary_dumps {
            write_binary_dump(&output_dir.join(format!("f_{step:06}.bin")), &solver, step)?;
        }
    }
    outcome?;

    let tail = solver.diagnostics.rows.last();
    println!(
        "case={} steps={} t={:.6} mass={:.10e} energy={:.10e}",
        cfg.case.name(),
        step,
        solver.state.t,
        tail.map_or(f64::NAN, |r| r.mass),
        tail.map_or(f64::NAN, |r| r.energy),
    );
    println!("output: {}", output_dir.display());
    Ok(())
}

fn bench_collision(dv: usize, n: usize, angles: &str, reps: usize, seed: u64) -> Result<()> {
    let angles = parse_angles(angles, dv)?;
    let cfg = SpectralConfig {
        dv,
        n,
        kernel: if dv == 2 { KernelKind::Maxwell } else { KernelKind::HardSphere },
        angles,
        vel_bound: 6.0,
        kernel_const: 1.0,
        tau: 1.0,
    };
    let tables = CollisionTables::build(&cfg)?;
    let nodes = n.pow(dv as u32);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f: Vec<f64> = (0..nodes).map(|_| rng.gen_range(0.0..1.0)).collect();
    let mut scratch = tables.make_scratch();
    let mut q = vec![0.0; nodes];
    for _ in 0..3 {
        tables.evaluate_fast(&f, &mut scratch, &mut q);
    }
    let mut times: Vec<f64> = (0..reps.max(1))
        .map(|_| {
            let start = Instant::now();
            tables.evaluate_fast(&f, &mut scratch, &mut q);
            start.elapsed().as_secs_f64() * 1e6
        })
        .collect();
    times.sort_by(f64::total_cmp);
    println!(
        "dv={dv} n={n} angles={}x{} reps={} median_us={:.2}",
        angles[0],
        angles[1],
        reps.max(1),
        times[times.len() / 2]
    );
    Ok(())
}

fn parse_angles(s: &str, dv: usize) -> Result<[usize; 2]> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let parse = |p: &str| -> Result<usize> {
        p.parse().map_err(|_| FksError::Config(format!("bad angle count `{p}`")))
    };
    match (parts.len(), dv) {
        (1, 2) => Ok([parse(parts[0])?, 1]),
        (1, 3) => {
            let a = parse(parts[0])?;
            Ok([a, a])
        }
        (2, 3) => Ok([parse(parts[0])?, parse(parts[1])?]),
        _ => Err(FksError::Config(format!("angle spec `{s}` does not fit dv={dv}"))),
    }
}
