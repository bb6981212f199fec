use clap::{Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;
use yeefield::cli::{self, CliError};
use yeefield::experiment::{RunOptions, Weights};
use yeefield::mesh::MeshMode;
use yeefield::scene::{ScenarioName, SceneConfig};

/// FDTD runs for the 28 GHz patch element and 2x2 array.
///
/// Thread count comes from YEEFIELD_THREADS (default: all cores).
#[derive(Parser)]
#[command(name = "yeefield", version)]
struct Args {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mesh {
    Coarse,
    Fine,
}

#[derive(clap::Args)]
struct Common {
    /// single_no_frame, single_with_frame, array_no_frame, array_with_frame or amc_cell
    scenario: ScenarioName,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "coarse")]
    mesh: Mesh,
    /// GHZ_START:GHZ_STOP:GHZ_STEP
    #[arg(long)]
    freqs: Option<String>,
    /// odd, even, all, or a list like 1,0,1@90,0
    #[arg(long, default_value = "odd")]
    weights: String,
    /// key=value override, repeatable
    #[arg(long = "set")]
    set: Vec<String>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    max_steps: Option<usize>,
    /// Comma list of ports to excite
    #[arg(long, value_delimiter = ',')]
    ports: Option<Vec<usize>>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write the scene dump and mesh statistics
    Build(Common),
    /// Run every port excitation and write all outputs
    Run(Common),
    /// Metrics from a Touchstone file and/or a pattern CSV
    Metrics {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        touchstone: Option<PathBuf>,
        #[arg(long)]
        pattern: Option<PathBuf>,
        /// Aperture area in mm²; defaults to the scenario footprint
        #[arg(long)]
        area: Option<f64>,
        /// Pattern frequency in GHz
        #[arg(long, default_value_t = 28.0)]
        freq: f64,
    },
    /// Repeat `run` over values of one parameter
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        param: String,
        /// START:STOP:COUNT
        #[arg(long)]
        range: String,
    },
}

impl Common {
    fn config(&self) -> Result<SceneConfig, CliError> {
        cli::load_config(self.config.as_deref(), &self.set)
    }

    fn mode(&self) -> MeshMode {
        match self.mesh {
            Mesh::Coarse => MeshMode::Coarse,
            Mesh::Fine => MeshMode::Fine,
        }
    }

    fn options(&self) -> Result<RunOptions, CliError> {
        let mut o = RunOptions {
            mesh: self.mode(),
            weights: Weights::parse(&self.weights)?,
            ports: self.ports.clone(),
            ..RunOptions::default()
        };
        if let Some(f) = &self.freqs {
            o.freqs = cli::parse_freqs(f)?;
        }
        if let Some(n) = self.max_steps {
            o.max_steps = n;
        }
        Ok(o)
    }
}

fn execute(cmd: Cmd) -> Result<(), CliError> {
    match cmd {
        Cmd::Build(c) => {
            print!("{}", cli::cmd_build(&c.config()?, c.scenario, c.mode(), &c.out)?);
        }
        Cmd::Run(c) => {
            let report = cli::cmd_run(&c.config()?, c.scenario, &c.options()?, &c.out)?;
            print!("{}", report.summary);
            if !report.errors.is_empty() {
                return Err(CliError::RunFailed(report.errors.join("\n")));
            }
        }
        Cmd::Metrics {
            common,
            touchstone,
            pattern,
            area,
            freq,
        } => {
            let cfg = common.config()?;
            let area = match area {
                Some(a) => a * 1e-6,
                None => cli::scenario_area(&cfg, common.scenario)?,
            };
            let nports = cfg.build(common.scenario)?.ports.len();
            let pol = Weights::parse(&common.weights)?.polarization(&(1..=nports).collect::<Vec<_>>());
            let s = cli::cmd_metrics(touchstone.as_deref(), pattern.as_deref(), area, freq * 1e9, pol)?;
            print!("{}", s.render());
        }
        Cmd::Sweep { common, param, range } => {
            let values = cli::parse_range(&range)?;
            let table = cli::cmd_sweep(&common.config()?, common.scenario, &param, &values, &common.options()?, &common.out)?;
            print!("{table}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Args::parse().cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("yeefield: {e}");
            ExitCode::FAILURE
        }
    }
}
