//! Command-line interface: experiment runner, barrier search, kernel dumps,
//! field-theory computations, the 1D Ising benchmark and refits.

use anyonmem::barrier::energy_barrier;
use anyonmem::fieldtheory::{
    chemical_potential_continuum, energy_functional, goldstone_contact_energy, solve_static_field,
    ScalarFieldGrid,
};
use anyonmem::harness::fit::fit_scaling;
use anyonmem::harness::{load_spec, run_experiment, stable_seed, CellSummary, Manifest};
use anyonmem::ising1d::{ising_memory_time, IsingChain};
use anyonmem::kernels::KernelSpec;
use anyonmem::lattice::{LogicalClass, TorusGeometry};
use clap::{Parser, Subcommand, ValueEnum};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "anyonmem",
    version,
    about = "Thermal memory-time laboratory for 2D topological memories with long-range anyon interactions"
)]
struct Cli {
    /// Worker threads for trial-level parallelism; 0 means auto
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a memory-time experiment from a spec (or manifest) JSON file
    Simulate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override the spec's master seed
        #[arg(long)]
        seed: Option<u64>,
        /// Override the spec's time horizon
        #[arg(long = "t-max")]
        t_max: Option<f64>,
    },
    /// Exact energy barrier of a kernel on a small lattice
    Barrier {
        /// Kernel description: inline JSON or a path to a JSON file
        #[arg(long)]
        kernel: String,
        #[arg(long)]
        l: usize,
        /// Write the result record here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dump a kernel table as CSV with a JSON header
    Kernel {
        #[arg(long)]
        kernel: String,
        #[arg(long)]
        l: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Scalar-field computations on the discrete 3D grid
    Field {
        #[arg(long, default_value_t = 64)]
        n: usize,
        #[arg(long, default_value_t = 0.0)]
        mass2: f64,
        #[arg(long, default_value_t = 1.0)]
        coupling: f64,
        #[arg(long, value_enum, default_value_t = FieldTask::Point)]
        task: FieldTask,
        /// Disk diameter (disk and energy tasks) or bump diameter (goldstone)
        #[arg(long, default_value_t = 16.0)]
        diameter: f64,
        #[arg(long, default_value_t = 1.0)]
        w0: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// First-passage benchmark on the 1D Ising ring
    Ising1d {
        #[arg(long)]
        l: usize,
        #[arg(long, value_delimiter = ',')]
        betas: Vec<f64>,
        /// uniform:J | alternating:Ja,Jb | sampled:Jmin,Jmax
        #[arg(long, default_value = "uniform:1.0")]
        couplings: String,
        #[arg(long, default_value_t = 64)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Horizon in sweeps
        #[arg(long, default_value_t = 1e6)]
        horizon: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Refit persisted experiment results
    Fit {
        /// Directory containing manifest.json
        #[arg(long)]
        results: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FieldTask {
    /// Point-source Green profile plus a plane slice CSV
    Point,
    /// Chemical potential of the uniform disk
    Disk,
    /// Derivative-coupled source vs the contact prediction
    Goldstone,
    /// Surface- and volume-form energies of the disk source
    Energy,
}

enum CliError {
    Validation(String),
    Io(String),
}

impl From<anyonmem::harness::HarnessError> for CliError {
    fn from(e: anyonmem::harness::HarnessError) -> Self {
        use anyonmem::harness::HarnessError as H;
        match e {
            H::Io { .. } => CliError::Io(e.to_string()),
            H::Json { .. } => CliError::Validation(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

macro_rules! validation_from {
    ($($ty:ty),*) => {$(
        impl From<$ty> for CliError {
            fn from(e: $ty) -> Self {
                CliError::Validation(e.to_string())
            }
        }
    )*};
}
validation_from!(
    anyonmem::kernels::KernelError,
    anyonmem::lattice::LatticeError,
    anyonmem::barrier::BarrierError,
    anyonmem::fieldtheory::FieldError,
    anyonmem::ising1d::IsingError,
    anyonmem::harness::fit::FitError,
    serde_json::Error
);

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("io failure on {}: {e}", path.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 0 {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global();
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

fn parse_kernel(arg: &str) -> Result<KernelSpec, CliError> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        let path = Path::new(arg);
        std::fs::read_to_string(path).map_err(|e| io_err(path, e))?
    };
    Ok(serde_json::from_str(&text)?)
}

fn write_json_file(path: &Path, value: &serde_json::Value) -> Result<(), CliError> {
    std::fs::write(path, serde_json::to_string_pretty(value).expect("serializable"))
        .map_err(|e| io_err(path, e))
}

fn ensure_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path).map_err(|e| io_err(path, e))
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Simulate { spec, out, seed, t_max } => {
            let mut experiment = load_spec(&spec)?;
            if let Some(s) = seed {
                experiment.seed = s;
            }
            if let Some(t) = t_max {
                experiment.t_max = t;
            }
            let run = run_experiment(&experiment, &out)?;
            for cell in &run.cells {
                println!(
                    "cell {:>3}  L={:<3} beta={:<6} median_tau={} censored={}/{}",
                    cell.index,
                    cell.l,
                    cell.beta,
                    cell.median_tau.map_or("censored".into(), |m| format!("{m:.4}")),
                    cell.censored,
                    cell.trials
                );
            }
            println!("results written to {}", out.display());
            Ok(())
        }
        Command::Barrier { kernel, l, out } => {
            let spec = parse_kernel(&kernel)?;
            let geometry = TorusGeometry::new(l)?;
            let built = spec.build(geometry)?;
            let result = energy_barrier(&built, &geometry, &LogicalClass::nontrivial_classes())?;
            let record = serde_json::json!({
                "L": l,
                "kernel": spec,
                "barrier": result.barrier,
                "witness_height_sequence": result.witness,
            });
            match out {
                Some(path) => write_json_file(&path, &record)?,
                None => println!("{}", serde_json::to_string_pretty(&record).unwrap()),
            }
            Ok(())
        }
        Command::Kernel { kernel, l, out } => {
            let spec = parse_kernel(&kernel)?;
            let geometry = TorusGeometry::new(l)?;
            let built = spec.build(geometry)?;
            ensure_dir(&out)?;
            let csv_path = out.join("kernel.csv");
            let file = std::fs::File::create(&csv_path).map_err(|e| io_err(&csv_path, e))?;
            built
                .write_table_csv(file)
                .map_err(|e| CliError::Io(format!("writing {}: {e}", csv_path.display())))?;
            write_json_file(
                &out.join("kernel.json"),
                &serde_json::json!({ "L": l, "kernel": spec }),
            )?;
            println!("kernel table written to {}", out.display());
            Ok(())
        }
        Command::Field { n, mass2, coupling, task, diameter, w0, out } => {
            ensure_dir(&out)?;
            let mut grid = ScalarFieldGrid::new(n, mass2, coupling)?;
            let record = match task {
                FieldTask::Point => {
                    grid.set_point_source(w0);
                    let stats = solve_static_field(&mut grid)?;
                    let csv_path = out.join("plane.csv");
                    let file =
                        std::fs::File::create(&csv_path).map_err(|e| io_err(&csv_path, e))?;
                    grid.write_plane_csv(file).map_err(|e| {
                        CliError::Io(format!("writing {}: {e}", csv_path.display()))
                    })?;
                    let profile: Vec<(i64, f64)> = (1..=(n as i64 - n as i64 / 2 - 1)
                        .min(n as i64 / 4))
                        .map(|r| (r, grid.phi_at(r, 0)))
                        .collect();
                    serde_json::json!({
                        "task": "point", "n": n, "mass2": mass2, "coupling": coupling,
                        "iterations": stats.iterations, "residual": stats.residual,
                        "axis_profile": profile,
                    })
                }
                FieldTask::Disk => {
                    let mu = chemical_potential_continuum(&mut grid, w0, diameter)?;
                    serde_json::json!({
                        "task": "disk", "n": n, "mass2": mass2, "coupling": coupling,
                        "diameter": diameter, "w0": w0, "mu": mu,
                        "mu_over_continuum": mu / (w0 * coupling * coupling * diameter / 2.0),
                    })
                }
                FieldTask::Goldstone => {
                    let radius = diameter / 2.0;
                    let profile = move |dx: i64, dy: i64| {
                        let r = ((dx * dx + dy * dy) as f64).sqrt();
                        0.5 * w0 * (1.0 - ((r - radius) / 2.0).tanh())
                    };
                    let (e_field, e_contact) = goldstone_contact_energy(&mut grid, &profile)?;
                    serde_json::json!({
                        "task": "goldstone", "n": n, "coupling": coupling,
                        "diameter": diameter, "w0": w0,
                        "e_field": e_field, "e_contact": e_contact,
                        "ratio": e_field / e_contact,
                    })
                }
                FieldTask::Energy => {
                    grid.set_disk_source(diameter, w0)?;
                    let stats = solve_static_field(&mut grid)?;
                    let forms = energy_functional(&grid);
                    serde_json::json!({
                        "task": "energy", "n": n, "mass2": mass2, "coupling": coupling,
                        "diameter": diameter, "w0": w0,
                        "surface_form": forms.surface, "volume_form": forms.volume,
                        "iterations": stats.iterations, "residual": stats.residual,
                    })
                }
            };
            write_json_file(&out.join("field.json"), &record)?;
            println!("{}", serde_json::to_string_pretty(&record).unwrap());
            Ok(())
        }
        Command::Ising1d { l, betas, couplings, trials, seed, horizon, out } => {
            if betas.is_empty() {
                return Err(CliError::Validation("at least one beta is required".into()));
            }
            ensure_dir(&out)?;
            let chain_couplings = parse_couplings(&couplings, l, seed)?;
            let csv_path = out.join("ising_trials.csv");
            let mut wtr = csv::Writer::from_path(&csv_path)
                .map_err(|e| CliError::Io(format!("{}: {e}", csv_path.display())))?;
            wtr.write_record(["beta", "L", "seed", "trial", "tau", "censored"])
                .map_err(|e| CliError::Io(e.to_string()))?;
            let mut points = Vec::new();
            let mut summaries = Vec::new();
            for (bi, &beta) in betas.iter().enumerate() {
                let chain = IsingChain::new(chain_couplings.clone(), beta)?;
                let run_seed = stable_seed(seed, bi as u64 + 1, 0);
                let stats = ising_memory_time(&chain, trials, run_seed, horizon)?;
                for (trial, tau) in stats.taus.iter().enumerate() {
                    wtr.write_record([
                        format!("{beta}"),
                        l.to_string(),
                        run_seed.to_string(),
                        trial.to_string(),
                        tau.map_or(String::new(), |t| format!("{t:.17e}")),
                        (tau.is_none() as u8).to_string(),
                    ])
                    .map_err(|e| CliError::Io(e.to_string()))?;
                }
                if let Some(median) = stats.median {
                    points.push((beta, median));
                }
                summaries.push(serde_json::json!({
                    "beta": beta, "median": stats.median, "mean": stats.mean,
                    "ci95": stats.ci95, "censored": stats.censored, "trials": trials,
                }));
            }
            wtr.flush().map_err(|e| CliError::Io(e.to_string()))?;
            let slope_fit = if points.len() >= 3 { Some(fit_scaling(&points)?) } else { None };
            let record = serde_json::json!({
                "L": l, "couplings": couplings, "trials": trials, "horizon_sweeps": horizon,
                "cells": summaries,
                "arrhenius_fit": slope_fit,
            });
            write_json_file(&out.join("ising_summary.json"), &record)?;
            if let Some(fit) = &slope_fit {
                println!("ln(tau) vs beta slope: {:.4}", fit.linear.slope);
            }
            println!("results written to {}", out.display());
            Ok(())
        }
        Command::Fit { results, out } => {
            let manifest_path = results.join("manifest.json");
            let text =
                std::fs::read_to_string(&manifest_path).map_err(|e| io_err(&manifest_path, e))?;
            let manifest: Manifest = serde_json::from_str(&text)?;
            let cells: &[CellSummary] = &manifest.cells;
            let mut by_beta = Vec::new();
            for &beta in manifest.spec.betas.iter() {
                let pts = anyonmem::harness::size_scaling_points(cells, beta);
                if pts.len() >= 3 {
                    let fit = fit_scaling(&pts)?;
                    println!(
                        "beta={beta}: ln tau vs L slope {:.4} (preferred {:?})",
                        fit.linear.slope, fit.preferred
                    );
                    by_beta.push(serde_json::json!({ "beta": beta, "fit": fit }));
                }
            }
            let mut by_l = Vec::new();
            for &l in manifest.spec.sizes.iter() {
                let pts = anyonmem::harness::beta_scaling_points(cells, l);
                if pts.len() >= 3 {
                    let fit = fit_scaling(&pts)?;
                    println!("L={l}: ln tau vs beta slope {:.4}", fit.linear.slope);
                    by_l.push(serde_json::json!({ "L": l, "fit": fit }));
                }
            }
            if by_beta.is_empty() && by_l.is_empty() {
                return Err(CliError::Validation(
                    "insufficient data: no axis has 3 uncensored cells".into(),
                ));
            }
            let record = serde_json::json!({ "by_beta": by_beta, "by_L": by_l });
            let target = out.unwrap_or_else(|| results.clone());
            ensure_dir(&target)?;
            write_json_file(&target.join("fits.json"), &record)?;
            Ok(())
        }
    }
}

fn parse_couplings(arg: &str, l: usize, seed: u64) -> Result<Vec<f64>, CliError> {
    use rand::{Rng, SeedableRng};
    let bad = || {
        CliError::Validation(format!(
            "could not parse couplings `{arg}`; expected uniform:J, alternating:Ja,Jb or sampled:Jmin,Jmax"
        ))
    };
    let (kind, rest) = arg.split_once(':').ok_or_else(bad)?;
    let values: Vec<f64> = rest
        .split(',')
        .map(str::trim)
        .map(str::parse)
        .collect::<Result<_, _>>()
        .map_err(|_| bad())?;
    match (kind, values.as_slice()) {
        ("uniform", [j]) => Ok(vec![*j; l]),
        ("alternating", [ja, jb]) => {
            Ok((0..l).map(|i| if i % 2 == 0 { *ja } else { *jb }).collect())
        }
        ("sampled", [lo, hi]) => {
            let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(stable_seed(seed, 0x5eed, 0));
            Ok((0..l).map(|_| rng.gen_range(*lo..=*hi)).collect())
        }
        _ => Err(bad()),
    }
}
