//! Argument parsing and dispatch for the `govdyn` binary.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use govdyn_core::ModelVariant;

use crate::commands::{run, Command};
use crate::config::{parse_assignment, parse_state, InitialCondition, RunConfig};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "govdyn", version, about = "Evolutionary dynamics of the four-population AI governance game")]
pub struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Seed for every stochastic component (default 0).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for parallel commands (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Model variant: I / investigate_developers or II / investigate_regulators.
    #[arg(long, global = true, value_parser = parse_model)]
    pub model: Option<ModelVariant>,
    /// Parameter override `name=value`; repeatable.
    #[arg(long = "param", global = true, value_parser = parse_assignment)]
    pub params: Vec<(String, f64)>,
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Integrate the replicator equations.
    Integrate {
        #[arg(long)]
        t_end: Option<f64>,
        /// Initial state `x,y,z,w`.
        #[arg(long, value_parser = parse_state)]
        initial: Option<[f64; 4]>,
    },
    /// Eigenvalues and classification of the 16 vertices.
    Vertices,
    /// Count interior equilibria over random parameter draws.
    Census {
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Stationary distribution of the small-mutation chain.
    Stationary {
        #[arg(long)]
        dump_matrix: bool,
        #[command(flatten)]
        finite: FiniteFlags,
    },
    /// Agent-based simulation with mutation.
    Simulate {
        #[arg(long)]
        steps: Option<u64>,
        #[arg(long)]
        record_every: Option<u64>,
        /// Monomorphic start such as `D-N-D-D`.
        #[arg(long)]
        initial: Option<String>,
        #[command(flatten)]
        finite: FiniteFlags,
    },
    /// Statistics over a parameter grid.
    Sweep,
    /// Run the language-model experiment.
    Llm {
        #[arg(long)]
        repetitions: Option<usize>,
        /// Prompt template file.
        #[arg(long)]
        template: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, clap::Args)]
pub struct FiniteFlags {
    /// Size of every population.
    #[arg(long)]
    pub population: Option<usize>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub mu: Option<f64>,
}

fn parse_model(s: &str) -> Result<ModelVariant, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|_| format!("unknown model {s:?}"))
}

impl FiniteFlags {
    fn apply(&self, cfg: &mut RunConfig) {
        if let Some(n) = self.population {
            cfg.finite.n_commentariat = n;
            cfg.finite.n_user = n;
            cfg.finite.n_developer = n;
            cfg.finite.n_regulator = n;
        }
        if let Some(b) = self.beta {
            cfg.finite.beta = b;
        }
        if let Some(m) = self.mu {
            cfg.finite.mu = m;
        }
    }
}

impl Cli {
    /// File config with flags applied on top.
    pub fn resolve(&self) -> Result<(Command, RunConfig), CliError> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = Some(s);
        }
        if let Some(t) = self.threads {
            cfg.threads = Some(t);
        }
        if let Some(m) = self.model {
            cfg.model = Some(m);
        }
        for (k, v) in &self.params {
            cfg.params.insert(k.clone(), *v);
        }
        let command = match &self.command {
            Cmd::Integrate { t_end, initial } => {
                if let Some(t) = t_end {
                    cfg.integrate.t_end = *t;
                }
                if let Some(s) = initial {
                    cfg.integrate.initial = *s;
                }
                Command::Integrate
            }
            Cmd::Vertices => Command::Vertices,
            Cmd::Census { samples } => {
                if let Some(n) = samples {
                    cfg.census.n_samples = *n;
                }
                Command::Census
            }
            Cmd::Stationary { dump_matrix, finite } => {
                cfg.stationary.dump_matrix |= *dump_matrix;
                finite.apply(&mut cfg);
                Command::Stationary
            }
            Cmd::Simulate { steps, record_every, initial, finite } => {
                if let Some(s) = steps {
                    cfg.simulate.steps = *s;
                }
                if let Some(r) = record_every {
                    cfg.simulate.record_every = *r;
                }
                if let Some(i) = initial {
                    cfg.simulate.initial = InitialCondition::Profile(i.clone());
                }
                finite.apply(&mut cfg);
                Command::Simulate
            }
            Cmd::Sweep => Command::Sweep,
            Cmd::Llm { repetitions, template } => {
                if let (Some(n), Some(game)) = (repetitions, cfg.llm.as_mut()) {
                    game.n_repetitions = *n;
                }
                if let Some(t) = template {
                    cfg.template = Some(t.clone());
                }
                Command::Llm
            }
        };
        Ok((command, cfg))
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = cli.resolve().and_then(|(cmd, cfg)| run(cmd, &cfg, cli.config.as_deref(), &cli.out));
    match result {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            0
        }
        Err(e) => {
            eprintln!("govdyn: {e}");
            e.exit_code()
        }
    }
}
