use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use spopo::homodyne::Provenance;
use spopo_cli::config::{Diagnostics, Scenario};
use spopo_cli::sweep::parse_values;
use spopo_cli::{
    load_config, parse_orders, presets, run_scenario, run_sweep, with_pool, write_bundle,
    write_sweep, CliError, SweepParam,
};

/// Squeezing spectra of a multimode synchronously pumped OPO with
/// intracavity dispersion.
#[derive(Debug, Parser)]
#[command(name = "spopo", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Methods to emit: pert2, pert4, exact or all. Overrides output.orders.
    #[arg(long, global = true)]
    orders: Option<String>,
    /// Worker threads (0: one per core).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// Exit with status 2 when any validity warning is raised.
    #[arg(long, global = true)]
    strict: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a scenario file or built-in preset.
    Run { config: String },
    /// Run a scenario once per value of one parameter.
    Sweep {
        config: String,
        /// D, lambda, n_max, omega_max or phi.
        #[arg(long)]
        param: String,
        /// Comma-separated values; D and lambda are multipliers.
        #[arg(long, allow_hyphen_values = true)]
        values: String,
    },
    /// Check a scenario and print derived scales.
    Validate { config: String },
    /// Built-in scenarios.
    Presets {
        #[command(subcommand)]
        action: PresetAction,
    },
}

#[derive(Debug, Subcommand)]
enum PresetAction {
    List,
    /// Print a preset's TOML.
    Show { name: String },
}

fn print_diagnostics(name: &str, d: &Diagnostics) {
    println!("scenario {name}");
    println!("  gamma/2pi          {:.4} MHz", d.gamma_over_2pi_hz / 1e6);
    println!("  N_gamma            {:.3}", d.photon_round_trips);
    println!("  R                  {:.4}", d.reflectivity);
    if let Some(t) = d.tau_s_fs {
        println!("  tau_s              {t:.2} fs");
    }
    if let (Some(ld), Some(nd)) = (d.dispersion_length_mm, d.dispersion_round_trips) {
        println!("  D                  {:.4e} s", d.dispersion_s.unwrap_or(f64::NAN));
        println!("  L_D                {ld:.3} mm");
        println!("  N_D                {nd:.3}");
    }
    println!("  N_gamma/N_D        {:.4}", d.ratio);
    println!("  C/gamma scale      {:.4} (C_nm/gamma = scale * O_nm tau_s^2)", d.coupling_scale);
}

fn report(warnings: &[String], strict: bool) -> ExitCode {
    for w in warnings {
        eprintln!("warning: {w}");
    }
    if strict && !warnings.is_empty() {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    }
}

fn execute(cli: Cli) -> Result<ExitCode, CliError> {
    let orders: Option<Vec<Provenance>> = cli.orders.as_deref().map(parse_orders).transpose()?;
    match cli.command {
        Command::Presets { action } => {
            match action {
                PresetAction::List => {
                    for (name, text) in presets::PRESETS {
                        println!("{name:<16}{}", presets::summary(text));
                    }
                }
                PresetAction::Show { name } => match presets::get(&name) {
                    Some(t) => print!("{t}"),
                    None => {
                        return Err(CliError::Validation(format!("no preset named '{name}'")))
                    }
                },
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { config } => {
            let (cfg, base) = load_config(&config)?;
            let s = Scenario::resolve(cfg, &base, orders)?;
            print_diagnostics(s.config.name.as_deref().unwrap_or(&config), &s.diagnostics);
            println!("  jobs               {}", s.config.pump.levels.len() * s.config.dispersion.scales.len());
            println!("ok");
            Ok(report(&s.warnings, cli.strict))
        }
        Command::Run { config } => {
            let (cfg, base) = load_config(&config)?;
            let s = Scenario::resolve(cfg, &base, orders)?;
            let bundle = with_pool(cli.jobs, || run_scenario(&s))??;
            write_bundle(&bundle, &cli.out)?;
            for j in &bundle.jobs {
                for f in &j.files {
                    println!("{}", cli.out.join(f).display());
                }
            }
            println!("{}", cli.out.join("manifest.json").display());
            Ok(report(&bundle.warnings(), cli.strict))
        }
        Command::Sweep {
            config,
            param,
            values,
        } => {
            let param: SweepParam = param.parse()?;
            let values = parse_values(&values)?;
            let (cfg, base) = load_config(&config)?;
            let sweep = with_pool(cli.jobs, || run_sweep(&cfg, &base, orders, param, &values))??;
            for p in write_sweep(&sweep, &cli.out)? {
                println!("{}", p.display());
            }
            Ok(report(&sweep.warnings(), cli.strict))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
