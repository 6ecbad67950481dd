use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use neckflow_cli::commands::{self, NeckCommand};
use neckflow_cli::config::resolve_output;
use neckflow_cli::verify::{self, Suite};
use neckflow_cli::{io, plot, CliError};

#[derive(Parser)]
#[command(
    name = "neckflow",
    version,
    about = "Harmonic map / flat metric flow experiments and neck analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the coupled flow described by a config file.
    Run { config: PathBuf },
    /// Analyze a neck from a snapshot file or a synthetic spec `family:key=value,...`.
    Neck {
        input: String,
        /// Degeneration type: torus, I or II.
        #[arg(long = "type", value_name = "TYPE")]
        kind: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        rho_threshold: Option<f64>,
        #[arg(long)]
        eps0: Option<f64>,
        #[arg(long)]
        min_nodes_per_unit: Option<usize>,
        #[arg(long)]
        min_fiber_nodes: Option<usize>,
        #[arg(long)]
        trim_exponent: Option<f64>,
        #[arg(long)]
        velocity_floor: Option<f64>,
        #[arg(long)]
        decay_c: Option<f64>,
    },
    /// Run an invariant suite: geometry, diagnostics, flow, neck or all.
    Verify {
        suite: String,
        /// Where to write the JSON results (default verify_<suite>.json under the output root).
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Render SVG plots of a timeseries.csv or curve.csv.
    Plot {
        csv: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every config matching a glob, in parallel.
    Sweep {
        pattern: String,
        #[arg(long)]
        jobs: Option<usize>,
    },
}

fn report(err: CliError) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(err.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config } => match commands::cmd_run(&config) {
            Ok(s) => {
                println!("status {}", s.status.name());
                println!("records {}", s.records);
                println!("output {}", s.output_dir.display());
                if let Some(m) = &s.message {
                    println!("message {m}");
                }
                if s.is_success() {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(3)
                }
            }
            Err(e) => report(e),
        },
        Command::Neck {
            input,
            kind,
            out,
            rho_threshold,
            eps0,
            min_nodes_per_unit,
            min_fiber_nodes,
            trim_exponent,
            velocity_floor,
            decay_c,
        } => {
            let deg = match commands::parse_degeneration(&kind) {
                Ok(d) => d,
                Err(e) => return report(e),
            };
            let mut cmd = NeckCommand::new(deg);
            cmd.out = out;
            if let Some(x) = rho_threshold {
                cmd.rescale.rho_threshold = x;
            }
            if let Some(x) = eps0 {
                cmd.options.eps0 = x;
            }
            if let Some(x) = min_nodes_per_unit {
                cmd.rescale.min_nodes_per_unit = x;
            }
            if let Some(x) = min_fiber_nodes {
                cmd.rescale.min_fiber_nodes = x;
            }
            if let Some(x) = trim_exponent {
                cmd.options.curve.trim_exponent = x;
            }
            if let Some(x) = velocity_floor {
                cmd.options.curve.velocity_floor = x;
            }
            if let Some(x) = decay_c {
                cmd.options.decay_c = x;
            }
            match commands::cmd_neck(&input, &cmd) {
                Ok(o) => {
                    let r = &o.report;
                    println!("alpha {:.16e}", r.alpha);
                    println!("mu {:.16e}", r.mu);
                    println!("length {:.16e}", r.length);
                    println!("full_length {:.16e}", r.full_length);
                    println!("velocity_norm {:.16e}", r.velocity_norm);
                    println!("residual_l1 {:.16e}", r.residual_l1);
                    println!("output {}", o.output_dir.display());
                    ExitCode::SUCCESS
                }
                Err(e) => report(e),
            }
        }
        Command::Verify { suite, json } => {
            let suite_kind = match Suite::parse(&suite) {
                Ok(s) => s,
                Err(e) => return report(e),
            };
            let checks = verify::run_suite(suite_kind);
            print!("{}", verify::checks_table(&checks));
            let path = json.unwrap_or_else(|| resolve_output(&PathBuf::from(format!("verify_{suite}.json"))));
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                if let Err(e) = io::ensure_dir(parent) {
                    return report(e);
                }
            }
            if let Err(e) = io::write_json(&path, &verify::checks_json(&checks)) {
                return report(e);
            }
            if checks.iter().all(|c| c.pass) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Command::Plot { csv, out } => match plot::cmd_plot(&csv, out.as_deref()) {
            Ok(files) => {
                for f in files {
                    println!("{}", f.display());
                }
                ExitCode::SUCCESS
            }
            Err(e) => report(e),
        },
        Command::Sweep { pattern, jobs } => match commands::cmd_sweep(&pattern, jobs) {
            Ok(entries) => {
                let mut ok = true;
                for e in &entries {
                    match &e.result {
                        Ok(s) => {
                            ok &= s.is_success();
                            println!(
                                "{}\t{}\t{}",
                                e.config.display(),
                                s.status.name(),
                                s.output_dir.display()
                            );
                        }
                        Err(err) => {
                            ok = false;
                            println!("{}\terror\t{err}", e.config.display());
                        }
                    }
                }
                if ok {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(3)
                }
            }
            Err(e) => report(e),
        },
    }
}
