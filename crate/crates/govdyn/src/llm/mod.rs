//! One-shot governance games played by language-model agents.

mod parse;
mod prompt;
mod provider;
mod weights;

pub use parse::{parse_choice, parse_choice_bound, ParseError};
pub use prompt::{canonicalize, render_prompt, History, PromptError};
pub use provider::{
    ChatRequest, Provider, ProviderError, ProviderSpec, RemoteChatProvider, RemoteChatSpec, ScriptedProvider,
    ScriptedReply,
};
pub use weights::{
    format_weight, outcome_profile, tables_from_weights, weights_from_params, weights_with_binding,
    DEFAULT_FIRST_LABEL_ACTION, TEMPLATE_ROLE_ORDER,
};

use govdyn_core::{Action, GovernanceParams, ModelVariant, Role, ValidParams};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// The prompt template shipped with the crate.
pub const DEFAULT_TEMPLATE: &str = include_str!("../../assets/prompt_template.txt");

/// Parameter set behind the published regulator example prompt.
pub fn appendix_prompt_params() -> GovernanceParams {
    GovernanceParams {
        b_i: 0.0,
        b_u: 4.0,
        b_p: 4.0,
        b_r: 4.0,
        b_fo: 4.4,
        c_i: 5.0,
        c_w: 0.0,
        epsilon: -0.1,
        c_p: 0.5,
        u: 1.6,
        v: 0.0,
        c_r: 5.0,
        p_w: 0.5,
    }
}

fn default_agent_names() -> [String; 4] {
    TEMPLATE_ROLE_ORDER.map(|r| r.name().to_string())
}

fn default_labels() -> [String; 2] {
    ["Option A".into(), "Option B".into()]
}

fn one() -> u32 {
    1
}

fn default_repetitions() -> usize {
    20
}

fn default_first() -> Action {
    DEFAULT_FIRST_LABEL_ACTION
}

/// Game setup. Agent names, personalities and roles are positional in the
/// order regulator, developer, user, commentariat.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameConfig {
    #[serde(default = "default_agent_names")]
    pub agent_names: [String; 4],
    #[serde(default)]
    pub personalities: [Option<String>; 4],
    pub provider: ProviderSpec,
    #[serde(default = "one")]
    pub n_rounds: u32,
    #[serde(default)]
    pub agents_communicate: bool,
    #[serde(default)]
    pub know_personalities: bool,
    #[serde(default)]
    pub stopping_condition: Option<String>,
    #[serde(default = "default_labels")]
    pub strategy_labels: [String; 2],
    /// Action named by the first strategy label.
    #[serde(default = "default_first")]
    pub first_label_action: Action,
    /// Explicit template weights. Filled from the payoff tables when absent.
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
    #[serde(default = "default_repetitions")]
    pub n_repetitions: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GameConfigError {
    #[error("n_rounds must be at least 1")]
    NoRounds,
    #[error("n_repetitions must be at least 1")]
    NoRepetitions,
    #[error("expected 64 weights, found {0}")]
    WeightCount(usize),
    #[error("weights must be finite")]
    NonFiniteWeight,
    #[error("strategy labels must be distinct and non-empty")]
    Labels,
    #[error("agent names must be distinct and non-empty")]
    AgentNames,
    #[error("agent communication is not supported; set agents_communicate to false")]
    Communication,
}

impl GameConfig {
    /// The one-shot setup with four unnamed personalities and the default labels.
    pub fn one_shot(provider: ProviderSpec) -> Self {
        GameConfig {
            agent_names: default_agent_names(),
            personalities: Default::default(),
            provider,
            n_rounds: 1,
            agents_communicate: false,
            know_personalities: false,
            stopping_condition: None,
            strategy_labels: default_labels(),
            first_label_action: DEFAULT_FIRST_LABEL_ACTION,
            weights: None,
            n_repetitions: default_repetitions(),
        }
    }

    /// Fills `weights` from the payoff tables unless they were given explicitly.
    pub fn with_weights_from(mut self, model: ModelVariant, params: &ValidParams) -> Self {
        if self.weights.is_none() {
            self.weights = Some(weights_with_binding(model, params, self.first_label_action).to_vec());
        }
        self
    }

    pub fn validate(&self) -> Result<(), GameConfigError> {
        if self.n_rounds == 0 {
            return Err(GameConfigError::NoRounds);
        }
        if self.n_repetitions == 0 {
            return Err(GameConfigError::NoRepetitions);
        }
        match &self.weights {
            Some(w) if w.len() != 64 => return Err(GameConfigError::WeightCount(w.len())),
            Some(w) if w.iter().any(|x| !x.is_finite()) => return Err(GameConfigError::NonFiniteWeight),
            None => return Err(GameConfigError::WeightCount(0)),
            _ => {}
        }
        let [a, b] = &self.strategy_labels;
        if a.trim().is_empty() || b.trim().is_empty() || a.trim().eq_ignore_ascii_case(b.trim()) {
            return Err(GameConfigError::Labels);
        }
        let names = &self.agent_names;
        for i in 0..4 {
            if names[i].is_empty() || names[..i].contains(&names[i]) {
                return Err(GameConfigError::AgentNames);
            }
        }
        if self.agents_communicate {
            return Err(GameConfigError::Communication);
        }
        Ok(())
    }

    pub fn role_of(&self, agent: &str) -> Option<Role> {
        self.agent_names.iter().position(|a| a == agent).map(|i| TEMPLATE_ROLE_ORDER[i])
    }

    /// Builds the provider described by `self.provider`.
    pub fn build_provider(&self) -> Box<dyn Provider> {
        match &self.provider {
            ProviderSpec::Scripted { model_name, script } => Box::new(ScriptedProvider {
                model_name: model_name.clone(),
                script: script.clone(),
                labels: self.strategy_labels.clone(),
                first: self.first_label_action,
                n_rounds: self.n_rounds,
            }),
            ProviderSpec::RemoteChat(spec) => Box::new(RemoteChatProvider::new(spec.clone())),
        }
    }
}

/// One agent's decision in one round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentCall {
    pub agent: String,
    pub role: Role,
    pub round: u32,
    /// Raw model output; absent when the call itself failed.
    pub response: Option<String>,
    /// Parsed decision; absent when the call failed or the text was unparseable.
    pub decision: Option<Action>,
    pub error: Option<CallError>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "message", rename_all = "snake_case")]
pub enum CallError {
    Provider(String),
    Parse(String),
}

/// All calls of one repetition, ordered by round and then by agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameResult {
    pub repetition: usize,
    pub calls: Vec<AgentCall>,
    /// False when any provider call failed.
    pub complete: bool,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] GameConfigError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
}

/// Plays `config.n_repetitions` independent games. Repetitions run in
/// parallel; results are in repetition order.
pub fn run_experiment(
    config: &GameConfig,
    provider: &dyn Provider,
    template: &str,
) -> Result<Vec<GameResult>, ExperimentError> {
    config.validate()?;
    // Surface template problems before any call is made.
    render_prompt(template, config, &config.agent_names[0], 1, &History::default())?;
    (0..config.n_repetitions).into_par_iter().map(|rep| play(config, provider, template, rep)).collect()
}

fn play(config: &GameConfig, provider: &dyn Provider, template: &str, repetition: usize) -> Result<GameResult, ExperimentError> {
    let mut history = History::default();
    let mut calls = Vec::new();
    let mut complete = true;
    for round in 1..=config.n_rounds {
        let mut this_round = Vec::new();
        for (i, agent) in config.agent_names.iter().enumerate() {
            let prompt = render_prompt(template, config, agent, round, &history)?;
            let reply = provider.complete(&ChatRequest { agent, repetition, round, prompt: &prompt });
            let role = TEMPLATE_ROLE_ORDER[i];
            let call = match reply {
                Ok(text) => match parse_choice_bound(&text, &config.strategy_labels, config.first_label_action) {
                    Ok(a) => AgentCall { agent: agent.clone(), role, round, response: Some(text), decision: Some(a), error: None },
                    Err(e) => AgentCall {
                        agent: agent.clone(),
                        role,
                        round,
                        response: Some(text),
                        decision: None,
                        error: Some(CallError::Parse(e.to_string())),
                    },
                },
                Err(e) => {
                    complete = false;
                    AgentCall {
                        agent: agent.clone(),
                        role,
                        round,
                        response: None,
                        decision: None,
                        error: Some(CallError::Provider(e.to_string())),
                    }
                }
            };
            let label = match call.decision {
                Some(a) if a == config.first_label_action => config.strategy_labels[0].clone(),
                Some(_) => config.strategy_labels[1].clone(),
                None => "no choice".to_string(),
            };
            this_round.push((agent.clone(), label));
            calls.push(call);
        }
        history.rounds.push(this_round);
    }
    Ok(GameResult { repetition, calls, complete })
}

/// Cooperation tally of one role.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoleFrequency {
    pub role: Role,
    pub n_cooperate: usize,
    pub n_parsed: usize,
    pub n_missing: usize,
    /// `n_cooperate / n_parsed`; absent when nothing was parsed.
    pub frequency: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("cannot aggregate an empty result list")]
pub struct EmptyResults;

/// Per-role cooperation frequencies in template role order. Missing
/// decisions are counted but left out of the denominator.
pub fn aggregate(results: &[GameResult]) -> Result<[RoleFrequency; 4], EmptyResults> {
    if results.is_empty() {
        return Err(EmptyResults);
    }
    Ok(TEMPLATE_ROLE_ORDER.map(|role| {
        let mut f = RoleFrequency { role, n_cooperate: 0, n_parsed: 0, n_missing: 0, frequency: None };
        for call in results.iter().flat_map(|r| &r.calls).filter(|c| c.role == role) {
            match call.decision {
                Some(a) => {
                    f.n_parsed += 1;
                    f.n_cooperate += usize::from(a == Action::Cooperate);
                }
                None => f.n_missing += 1,
            }
        }
        if f.n_parsed > 0 {
            f.frequency = Some(f.n_cooperate as f64 / f.n_parsed as f64);
        }
        f
    }))
}
