use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use qvie::cli::{dump_mesh, run, RunConfig, RunOptions};
use qvie::Error;

#[derive(Parser)]
#[command(name = "qvie", version, about = "Volume integral equation solver for quantized fields in dispersive dielectrics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a configuration and report every violated constraint.
    Validate { config: PathBuf },
    /// Run the full pipeline and write artifacts and the manifest.
    Run {
        config: PathBuf,
        /// Worker threads (1 = sequential, 0 = all cores).
        #[arg(long, env = "QVIE_THREADS", default_value_t = 0)]
        threads: usize,
        /// Also compare every drive against an independent solver.
        #[arg(long, value_enum)]
        oracle: Option<Oracle>,
    },
    /// Build the mesh only and dump voxels and facets.
    Mesh { config: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum Oracle {
    /// Explicit time marching of the retarded equation.
    Mot,
}

fn report(e: &Error) -> ExitCode {
    match e {
        Error::Config(issues) => {
            eprintln!("configuration rejected:");
            for i in issues {
                eprintln!("  {i}");
            }
        }
        other => eprintln!("error: {other}"),
    }
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Validate { config } => RunConfig::load(&config).and_then(|c| c.validate()).map(|v| {
            println!("ok: {} voxels, {} drives, t_max = {:e}", v.mesh.len(), v.drives.len(), v.t_max);
        }),
        Command::Run { config, threads, oracle } => {
            let opts = RunOptions { threads, oracle_mot: matches!(oracle, Some(Oracle::Mot)) };
            RunConfig::load(&config).and_then(|c| run(&c, &opts)).map(|m| {
                for s in &m.stages {
                    println!("{:>10}  {:.3} s", s.name, s.seconds);
                }
                for o in &m.oracle {
                    println!("oracle {}: rel L2 {:e}", o.label, o.rel_l2);
                }
                println!("wrote {} artifacts to {}", m.artifacts.len() + 1, m.config.output.dir.display());
            })
        }
        Command::Mesh { config } => RunConfig::load(&config).and_then(|c| dump_mesh(&c)).map(|s| {
            println!("{} voxels, {} facets, h = {:e}, fingerprint {}", s.voxels, s.facets, s.h, s.fingerprint);
        }),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report(&e),
    }
}
