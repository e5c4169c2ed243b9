mod commands;
mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;
use crate::output::{render_csv, write_file, Metadata, Table};

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_VALIDATION: u8 = 4;

#[derive(Parser)]
#[command(name = "dipvac", version, about = "Propagators, emission and vacuum energies of point-dipole media")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML run configuration
    config: PathBuf,
    /// Override a configuration key, e.g. `--set grid.points=20`
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Light, emission and coherent LDOS over the wavenumber grid
    Ldos(ConfigArgs),
    /// Emission spectrum split by channel and coherence
    Emission(ConfigArgs),
    /// Self-consistent polarizability and line width versus density
    Renorm(ConfigArgs),
    /// Local-field and bulk vacuum energies of Lorentzian media
    VacuumEnergy(ConfigArgs),
    /// Coupled-dipole ensemble against the analytic self-propagator
    CdmValidate(ConfigArgs),
    /// Built-in identity and closed-form checks
    Selftest,
}

fn load(args: &ConfigArgs) -> Result<RunConfig, ExitCode> {
    let text = std::fs::read_to_string(&args.config).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", args.config.display());
        ExitCode::from(EXIT_CONFIG)
    })?;
    config::load(&text, &args.set).map_err(|e| {
        eprintln!("config error: {e}");
        ExitCode::from(EXIT_CONFIG)
    })
}

fn units(cfg: &RunConfig) -> String {
    format!(
        "length unit L0 = {:e} m; k in 1/L0; LDOS in 1/L0^2 (c = 1); energies per volume in hbar c/L0^4",
        cfg.units.length_m
    )
}

fn emit(cfg: &RunConfig, command: &str, table: &Table) -> Result<(), ExitCode> {
    let hash = cfg.hash();
    let meta = Metadata {
        command,
        config_hash: &hash,
        units: units(cfg),
    };
    save(Path::new(&cfg.output.dir), &format!("{command}.csv"), &render_csv(&meta, table))
}

fn save(dir: &Path, name: &str, text: &str) -> Result<(), ExitCode> {
    match write_file(dir, name, text) {
        Ok(p) => {
            eprintln!("wrote {}", p.display());
            Ok(())
        }
        Err(e) => {
            eprintln!("error: cannot write {}: {e}", dir.join(name).display());
            Err(ExitCode::from(EXIT_CONFIG))
        }
    }
}

fn numerical(e: commands::Failure) -> ExitCode {
    eprintln!("numerical failure in {e}");
    ExitCode::from(EXIT_NUMERICAL)
}

fn run(cli: Cli) -> Result<(), ExitCode> {
    let table = |args: &ConfigArgs, name: &str, f: fn(&RunConfig) -> Result<Table, commands::Failure>| {
        let cfg = load(args)?;
        let t = f(&cfg).map_err(numerical)?;
        emit(&cfg, name, &t)
    };
    match cli.command {
        Command::Ldos(a) => table(&a, "ldos", commands::run_ldos),
        Command::Emission(a) => table(&a, "emission", commands::run_emission),
        Command::Renorm(a) => table(&a, "renorm", commands::run_renorm),
        Command::VacuumEnergy(a) => table(&a, "vacuum-energy", commands::run_vacuum_energy),
        Command::CdmValidate(a) => {
            let cfg = load(&a)?;
            let out = commands::run_cdm_validate(&cfg).map_err(numerical)?;
            emit(&cfg, "cdm-validate", &out.summary)?;
            let mut lines = out.records.join("\n");
            lines.push('\n');
            save(Path::new(&cfg.output.dir), "cdm-validate.jsonl", &lines)?;
            let r = &out.report;
            println!(
                "trace {:.6} {:+.6}i ± {:.6}, analytic {:.6} {:+.6}i, deviation {:.2}% -> {}",
                r.estimate.re,
                r.estimate.im,
                r.estimate_stderr,
                r.analytic.re,
                r.analytic.im,
                100.0 * r.relative_deviation,
                if r.pass { "pass" } else { "FAIL" }
            );
            if r.pass {
                Ok(())
            } else {
                Err(ExitCode::from(EXIT_VALIDATION))
            }
        }
        Command::Selftest => {
            let checks = commands::selftest();
            for c in &checks {
                println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            if checks.iter().all(|c| c.pass) {
                Ok(())
            } else {
                Err(ExitCode::from(EXIT_VALIDATION))
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => code,
    }
}
