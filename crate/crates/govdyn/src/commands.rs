//! The subcommands, as functions from a resolved config to an output set.

use std::path::{Path, PathBuf};

use chrono::Utc;
use govdyn_core::equilibrium::census_sample_count;
use govdyn_core::finite::{counts_from_profile, restricted_transition_matrix};
use govdyn_core::{
    integrate, simulate_agents, stationary_distribution, vertex_reports, Action,
    EquilibriumCensus, FiniteError, IntegrateError, ModelVariant, ParamRanges, PopulationState, Role,
    StationaryDistribution, TransitionMatrix, ValidParams,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{apply_params, parse_profile, InitialCondition, RunConfig, SweepStatistic};
use crate::error::CliError;
use crate::llm::{aggregate, render_prompt, run_experiment, History, DEFAULT_TEMPLATE};
use crate::output::{fmt_f64, OutputSet, RunManifest, MANIFEST_NAME};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Integrate,
    Vertices,
    Census,
    Stationary,
    Simulate,
    Sweep,
    Llm,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Integrate => "integrate",
            Command::Vertices => "vertices",
            Command::Census => "census",
            Command::Stationary => "stationary",
            Command::Simulate => "simulate",
            Command::Sweep => "sweep",
            Command::Llm => "llm",
        }
    }
}

/// Runs `command` and returns its outputs without touching the disk.
pub fn execute(command: Command, cfg: &RunConfig) -> Result<OutputSet, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads.unwrap_or(0))
        .build()
        .map_err(CliError::runtime)?;
    pool.install(|| match command {
        Command::Integrate => cmd_integrate(cfg),
        Command::Vertices => cmd_vertices(cfg),
        Command::Census => cmd_census(cfg),
        Command::Stationary => cmd_stationary(cfg),
        Command::Simulate => cmd_simulate(cfg),
        Command::Sweep => cmd_sweep(cfg),
        Command::Llm => cmd_llm(cfg),
    })
}

/// Runs `command`, then writes its outputs and a manifest into `out_dir`.
/// Nothing is written when the command fails.
pub fn run(command: Command, cfg: &RunConfig, config_path: Option<&Path>, out_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let started = Utc::now();
    let params = cfg.resolve_params()?;
    let mut outputs = execute(command, cfg)?;
    let manifest = RunManifest {
        command: command.name().to_string(),
        config_path: config_path.map(Path::to_path_buf),
        seed: cfg.seed(),
        threads: cfg.threads,
        model: cfg.model().to_string(),
        params: params.into_inner(),
        started,
        finished: Utc::now(),
        outputs: outputs.names().map(str::to_string).collect(),
        engine_version: env!("CARGO_PKG_VERSION").to_string(),
    };
    outputs.add_json(MANIFEST_NAME, &manifest)?;
    outputs.commit(out_dir)
}

fn integrate_error(e: IntegrateError) -> CliError {
    match e {
        IntegrateError::InvalidSetup(_) => CliError::config(e),
        _ => CliError::runtime(e),
    }
}

fn finite_error(e: FiniteError) -> CliError {
    match e {
        FiniteError::InvalidConfig(_) => CliError::config(e),
        _ => CliError::runtime(e),
    }
}

fn action_label(role: Role, a: Action) -> &'static str {
    a.label(role)
}

#[derive(Serialize)]
struct TrajectorySummary {
    final_state: [f64; 4],
    converged: bool,
    nearest_vertex: String,
    distance_to_nearest_vertex: f64,
    accepted_steps: usize,
    rejected_steps: usize,
}

fn cmd_integrate(cfg: &RunConfig) -> Result<OutputSet, CliError> {
    let params = cfg.resolve_params()?;
    let sec = &cfg.integrate;
    let initial = PopulationState::from_array(sec.initial);
    let tr = integrate(cfg.model(), &params, initial, sec.t_end, &sec.integrator).map_err(integrate_error)?;
    let last = tr.final_state().unwrap_or(initial);
    let vertex = last.nearest_vertex();
    let summary = TrajectorySummary {
        final_state: last.to_array(),
        converged: tr.converged,
        nearest_vertex: vertex.label().to_string(),
        distance_to_nearest_vertex: last.distance_inf(&PopulationState::vertex(vertex)),
        accepted_steps: tr.accepted_steps,
        rejected_steps: tr.rejected_steps,
    };
    let mut out = OutputSet::new();
    let rows = tr.times.iter().zip(&tr.states).map(|(t, s)| {
        let [x, y, z, w] = s.to_array();
        [*t, x, y, z, w].map(fmt_f64)
    });
    out.add_csv("trajectory.csv", &["t", "x", "y", "z", "w"], rows)?;
    out.add_json("trajectory_summary.json", &summary)?;
    Ok(out)
}

fn cmd_vertices(cfg: &RunConfig) -> Result<OutputSet, CliError> {
    let params = cfg.resolve_params()?;
    let reports = vertex_reports(cfg.model(), &params);
    let mut out = OutputSet::new();
    let rows = reports.iter().map(|r| {
        let mut row: Vec<String> = r.vertex.to_array().iter().map(|v| format!("{}", *v as u8)).collect();
        row.extend(r.eigenvalues.iter().map(|l| fmt_f64(*l)));
        row.push(r.classification.name().to_string());
        row
    });
    out.add_csv("vertices.csv", &["x", "y", "z", "w", "l1", "l2", "l3", "l4", "class"], rows)?;
    out.add_json("vertices.json", &reports)?;
    Ok(out)
}

/// Interior-root census, parallel over samples.
pub fn census(cfg: &RunConfig) -> Result<EquilibriumCensus, CliError> {
    let sec = &cfg.census;
    let ranges = sec.ranges.unwrap_or_else(ParamRanges::appendix);
    if sec.n_samples == 0 {
        return Err(CliError::Config("census.n_samples must be at least 1".into()));
    }
    if !ranges.is_well_formed() {
        return Err(CliError::Config("census ranges must be finite with lo <= hi".into()));
    }
    let model = cfg.model();
    let seed = cfg.seed();
    let counts = (0..sec.n_samples as u64)
        .into_par_iter()
        .map(|i| census_sample_count(model, &ranges, seed, i, &sec.search))
        .collect::<Result<Vec<_>, _>>()
        .map_err(CliError::config)?;
    Ok(EquilibriumCensus::from_counts(model, ranges, seed, counts))
}

fn cmd_census(cfg: &RunConfig) -> Result<OutputSet, CliError> {
    let c = census(cfg)?;
    let max = c.histogram.keys().next_back().copied().unwrap_or(0);
    let rows = (0..=max).map(|k| {
        let f = c.frequency(k);
        [k.to_string(), f.to_string(), fmt_f64(100.0 * f as f64 / c.n_samples as f64)]
    });
    let mut out = OutputSet::new();
    out.add_csv("census.csv", &["count", "frequency", "percentage"], rows)?;
    out.add_json("census.json", &c)?;
    Ok(out)
}

/// Transition matrix and stationary distribution for the config's model,
/// finite-population settings and pinned roles.
pub fn stationary(cfg: &RunConfig, params: &ValidParams) -> Result<(TransitionMatrix, StationaryDistribution), CliError> {
    let m = restricted_transition_matrix(cfg.model(), &cfg.finite, params, cfg.stationary.fixed_array())
        .map_err(finite_error)?;
    let pi = stationary_distribution(&m).map_err(finite_error)?;
    Ok((m, pi))
}

fn cmd_stationary(cfg: &RunConfig) -> Result<OutputSet, CliError> {
    let params = cfg.resolve_params()?;
    let (m, pi) = stationary(cfg, &params)?;
    let mut out = OutputSet::new();
    let rows = pi.sorted_desc().into_iter().map(|(s, p)| {
        let mut row: Vec<String> = Role::ALL.iter().map(|r| action_label(*r, s.get(*r)).to_string()).collect();
        row.push(fmt_f64(p));
        row
    });
    out.add_csv("stationary.csv", &["com", "user", "dev", "reg", "probability"], rows)?;
    if cfg.stationary.dump_matrix {
        let header: Vec<String> = m.states.iter().map(|s| s.label().to_string()).collect();
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        let rows = (0..m.len()).map(|i| m.row(i).iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>());
        out.add_csv("transition_matrix.csv", &header, rows)?;
    }
    Ok(out)
}

#[derive(Serialize)]
struct SimulationSummary {
    steps: u64,
    seed: u64,
    initial_counts: [usize; 4],
    unassigned_steps: u64,
    mean_frequencies: [f64; 4],
}

fn cmd_simulate(cfg: &RunConfig) -> Result<OutputSet, CliError> {
    let params = cfg.resolve_params()?;
    let sec = &cfg.simulate;
    let initial = match &sec.initial {
        InitialCondition::Profile(label) => counts_from_profile(&cfg.finite, parse_profile(label).map_err(CliError::Config)?),
        InitialCondition::Counts(c) => *c,
    };
    let rec = simulate_agents(cfg.model(), &cfg.finite, &params, initial, sec.steps, sec.record_every.max(1), cfg.seed())
        .map_err(finite_error)?;
    let mut out = OutputSet::new();
    let rows = rec.samples.iter().map(|(step, f)| {
        let mut row = vec![step.to_string()];
        row.extend(f.iter().map(|v| fmt_f64(*v)));
        row
    });
    out.add_csv("simulation.csv", &["step", "x", "y", "z", "w"], rows)?;
    let occ = rec.occupancy_distribution();
    let rows = (0..16).map(|i| {
        let s = govdyn_core::ActionProfile::from_index(i);
        let mut row: Vec<String> = Role::ALL.iter().map(|r| action_label(*r, s.get(*r)).to_string()).collect();
        row.push(rec.occupancy[i].to_string());
        row.push(fmt_f64(occ[i]));
        row
    });
    out.add_csv("occupancy.csv", &["com", "user", "dev", "reg", "steps", "fraction"], rows)?;
    out.add_json(
        "simulation_summary.json",
        &SimulationSummary {
            steps: sec.steps,
            seed: cfg.seed(),
            initial_counts: initial,
            unassigned_steps: rec.unassigned_steps,
            mean_frequencies: rec.mean_frequencies,
        },
    )?;
    Ok(out)
}

const FINAL_STATE_NAMES: [&str; 4] = ["final_x", "final_y", "final_z", "final_w"];
const STATIONARY_NAMES: [&str; 4] =
    ["stationary_commentariat", "stationary_user", "stationary_developer", "stationary_regulator"];

fn sweep_point(cfg: &RunConfig, model: ModelVariant, params: &ValidParams) -> Result<Vec<(&'static str, f64)>, CliError> {
    let mut stats = Vec::new();
    for stat in &cfg.sweep.statistics {
        match stat {
            SweepStatistic::FinalState => {
                let sec = &cfg.integrate;
                let initial = PopulationState::from_array(sec.initial);
                let tr = integrate(model, params, initial, sec.t_end, &sec.integrator).map_err(integrate_error)?;
                let last = tr.final_state().unwrap_or(initial).to_array();
                stats.extend(FINAL_STATE_NAMES.iter().copied().zip(last));
            }
            SweepStatistic::StationaryCooperation => {
                let (_, pi) = stationary(cfg, params)?;
                for (name, role) in STATIONARY_NAMES.iter().zip(Role::ALL) {
                    stats.push((*name, pi.mass_where(|s| s.get(role) == Action::Cooperate)));
                }
            }
        }
    }
    Ok(stats)
}

fn cmd_sweep(cfg: &RunConfig) -> Result<OutputSet, CliError> {
    let axes = &cfg.sweep.axes;
    if axes.is_empty() || axes.len() > 2 {
        return Err(CliError::Config("sweep needs one or two axes".into()));
    }
    if cfg.sweep.statistics.is_empty() {
        return Err(CliError::Config("sweep needs at least one statistic".into()));
    }
    for a in axes {
        if a.values.is_empty() {
            return Err(CliError::Config(format!("sweep axis {} has no values", a.param)));
        }
        if govdyn_core::GovernanceParams::ZERO.get(&a.param).is_none() {
            return Err(CliError::Config(format!("unknown sweep parameter {:?}", a.param)));
        }
    }
    let base = apply_params(cfg.preset.params(), &cfg.params)?;
    let mut points: Vec<Vec<f64>> = vec![Vec::new()];
    for a in axes {
        points = points.iter().flat_map(|p| a.values.iter().map(move |v| [p.as_slice(), &[*v]].concat())).collect();
    }
    let model = cfg.model();
    let results = points
        .par_iter()
        .map(|point| {
            let mut p = base;
            for (a, v) in axes.iter().zip(point) {
                p.set(&a.param, *v);
            }
            let vp = p.validate().map_err(CliError::config)?;
            sweep_point(cfg, model, &vp)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut header: Vec<&str> = axes.iter().map(|a| a.param.as_str()).collect();
    header.extend(["statistic", "value"]);
    let rows = points.iter().zip(&results).flat_map(|(point, stats)| {
        stats.iter().map(move |(name, v)| {
            let mut row: Vec<String> = point.iter().map(|x| fmt_f64(*x)).collect();
            row.push(name.to_string());
            row.push(fmt_f64(*v));
            row
        })
    });
    let mut out = OutputSet::new();
    out.add_csv("sweep.csv", &header, rows)?;
    Ok(out)
}

#[derive(Serialize)]
struct LlmReport<'a> {
    model: ModelVariant,
    llm: &'a str,
    weights: &'a [f64],
    repetitions: &'a [crate::llm::GameResult],
    frequencies: &'a [crate::llm::RoleFrequency; 4],
}

fn cmd_llm(cfg: &RunConfig) -> Result<OutputSet, CliError> {
    let params = cfg.resolve_params()?;
    let model = cfg.model();
    let game = cfg
        .llm
        .clone()
        .ok_or_else(|| CliError::Config("the llm command needs an \"llm\" section".into()))?
        .with_weights_from(model, &params);
    game.validate().map_err(CliError::config)?;
    let template = match &cfg.template {
        Some(path) => {
            std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        }
        None => DEFAULT_TEMPLATE.to_string(),
    };
    let provider = game.build_provider();
    let results = run_experiment(&game, provider.as_ref(), &template).map_err(CliError::config)?;
    let freqs = aggregate(&results).map_err(CliError::runtime)?;
    let mut out = OutputSet::new();
    for agent in &game.agent_names {
        let prompt = render_prompt(&template, &game, agent, 1, &History::default()).map_err(CliError::config)?;
        out.add_text(&format!("prompt_{agent}.txt"), prompt);
    }
    let rows = freqs.iter().map(|f| {
        [
            f.role.name().to_string(),
            f.frequency.map_or_else(|| "NaN".to_string(), fmt_f64),
            f.n_parsed.to_string(),
            f.n_missing.to_string(),
        ]
    });
    out.add_csv("llm_summary.csv", &["role", "coop_frequency", "n_parsed", "n_missing"], rows)?;
    out.add_json(
        "llm_results.json",
        &LlmReport {
            model,
            llm: provider.model_name(),
            weights: game.weights.as_deref().unwrap_or_default(),
            repetitions: &results,
            frequencies: &freqs,
        },
    )?;
    Ok(out)
}
