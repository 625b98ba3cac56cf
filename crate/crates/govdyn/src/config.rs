//! JSON run configuration. Precedence is flag > file > default.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use govdyn_core::{
    Action, ActionProfile, FiniteConfig, GovernanceParams, IntegratorConfig, ModelVariant, ParamRanges, Role,
    SearchConfig, ValidParams,
};
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::llm::{appendix_prompt_params, GameConfig};

/// Starting point for the `params` block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// Infinite-population panels with `c_I = 0.5`.
    #[default]
    ReplicatorBaseline,
    /// Four-population finite-size regime with `c_I = 5`.
    MediaIncentiveBaseline,
    /// Parameters behind the published regulator prompt.
    AppendixPrompt,
    Zero,
}

impl Preset {
    pub fn params(self) -> GovernanceParams {
        match self {
            Preset::ReplicatorBaseline => GovernanceParams::replicator_baseline(),
            Preset::MediaIncentiveBaseline => GovernanceParams::media_incentive_baseline(),
            Preset::AppendixPrompt => appendix_prompt_params(),
            Preset::Zero => GovernanceParams::ZERO,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegrateSection {
    pub initial: [f64; 4],
    pub t_end: f64,
    pub integrator: IntegratorConfig,
}

impl Default for IntegrateSection {
    fn default() -> Self {
        IntegrateSection { initial: [0.5; 4], t_end: 100.0, integrator: IntegratorConfig::default() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StationarySection {
    /// Also write the transition matrix.
    pub dump_matrix: bool,
    /// Roles held at one action, e.g. `{"commentariat": "C"}`.
    pub fixed: BTreeMap<Role, Action>,
}

impl StationarySection {
    pub fn fixed_array(&self) -> [Option<Action>; 4] {
        let mut out = [None; 4];
        for (r, a) in &self.fixed {
            out[r.index()] = Some(*a);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CensusSection {
    pub n_samples: usize,
    /// Sampling box; the published ranges when absent.
    pub ranges: Option<ParamRanges>,
    pub search: SearchConfig,
}

impl Default for CensusSection {
    fn default() -> Self {
        CensusSection { n_samples: 10_000, ranges: None, search: SearchConfig::default() }
    }
}

/// Initial condition of an agent simulation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialCondition {
    /// A monomorphic profile label such as `D-N-D-D`.
    Profile(String),
    /// Cooperator counts per population in role order.
    Counts([usize; 4]),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSection {
    pub steps: u64,
    pub record_every: u64,
    pub initial: InitialCondition,
}

impl Default for SimulateSection {
    fn default() -> Self {
        SimulateSection { steps: 1_000_000, record_every: 1000, initial: InitialCondition::Profile("D-N-D-D".into()) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub param: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepStatistic {
    /// End point of the replicator trajectory from the `integrate` section.
    FinalState,
    /// Stationary mass on states where each role cooperates, using the
    /// `finite` and `stationary` sections.
    StationaryCooperation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub axes: Vec<SweepAxis>,
    pub statistics: Vec<SweepStatistic>,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            axes: Vec::new(),
            statistics: vec![SweepStatistic::FinalState, SweepStatistic::StationaryCooperation],
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: Option<ModelVariant>,
    pub preset: Preset,
    /// Overrides applied on top of the preset, keyed by parameter name.
    pub params: BTreeMap<String, f64>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub integrate: IntegrateSection,
    pub finite: FiniteConfig,
    pub stationary: StationarySection,
    pub census: CensusSection,
    pub simulate: SimulateSection,
    pub sweep: SweepSection,
    pub llm: Option<GameConfig>,
    /// Prompt template file; the bundled template when absent.
    pub template: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn model(&self) -> ModelVariant {
        self.model.unwrap_or(ModelVariant::InvestigateDevelopers)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    /// Preset plus overrides, validated.
    pub fn resolve_params(&self) -> Result<ValidParams, CliError> {
        apply_params(self.preset.params(), &self.params)?.validate().map_err(CliError::config)
    }
}

pub fn apply_params(mut base: GovernanceParams, overrides: &BTreeMap<String, f64>) -> Result<GovernanceParams, CliError> {
    for (k, v) in overrides {
        if !base.set(k, *v) {
            return Err(CliError::Config(format!("unknown parameter {k:?}")));
        }
    }
    Ok(base)
}

/// Parses `name=value`.
pub fn parse_assignment(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected name=value, got {s:?}"))?;
    let v: f64 = v.trim().parse().map_err(|e| format!("{s:?}: {e}"))?;
    Ok((k.trim().to_string(), v))
}

/// Parses a profile label like `C-CT-D-C` (commentariat, user, developer,
/// regulator). `C`/`CT` cooperate, `D`/`N` defect.
pub fn parse_profile(label: &str) -> Result<ActionProfile, String> {
    let parts: Vec<&str> = label.split('-').map(str::trim).collect();
    if parts.len() != 4 {
        return Err(format!("profile {label:?} needs four dash-separated actions"));
    }
    let mut out = [Action::Cooperate; 4];
    for (slot, p) in out.iter_mut().zip(&parts) {
        *slot = match p.to_ascii_uppercase().as_str() {
            "C" | "CT" => Action::Cooperate,
            "D" | "N" => Action::Defect,
            _ => return Err(format!("unknown action {p:?} in profile {label:?}")),
        };
    }
    Ok(ActionProfile::from_array(out))
}

/// Parses `x,y,z,w`.
pub fn parse_state(s: &str) -> Result<[f64; 4], String> {
    let v: Vec<f64> = s.split(',').map(|p| p.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|e| format!("{s:?}: {e}"))?;
    v.try_into().map_err(|_| format!("expected four comma-separated numbers, got {s:?}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_overrides() {
        let c = RunConfig::from_json(r#"{"model": "II", "params": {"c_i": 5}}"#).unwrap();
        assert_eq!(c.model(), ModelVariant::InvestigateRegulators);
        assert_eq!(c.seed(), 0);
        let p = c.resolve_params().unwrap();
        assert_eq!(p.c_i, 5.0);
        assert_eq!(p.b_u, 4.0);
    }

    #[test]
    fn rejects_unknown_keys_and_params() {
        assert!(RunConfig::from_json(r#"{"modle": "I"}"#).is_err());
        let c = RunConfig::from_json(r#"{"params": {"b_x": 1}}"#).unwrap();
        assert!(matches!(c.resolve_params(), Err(CliError::Config(_))));
        let c = RunConfig::from_json(r#"{"params": {"p_w": 2}}"#).unwrap();
        assert!(matches!(c.resolve_params(), Err(CliError::Config(_))));
    }

    #[test]
    fn nested_sections() {
        let c = RunConfig::from_json(
            r#"{"stationary": {"fixed": {"commentariat": "C"}}, "finite": {"beta": 0.0},
                "simulate": {"initial": [1, 2, 3, 4]}, "sweep": {"axes": [{"param": "c_i", "values": [0.5, 5]}]}}"#,
        )
        .unwrap();
        assert_eq!(c.stationary.fixed_array(), [Some(Action::Cooperate), None, None, None]);
        assert_eq!(c.finite.beta, 0.0);
        assert_eq!(c.finite.n_user, 100);
        assert_eq!(c.simulate.initial, InitialCondition::Counts([1, 2, 3, 4]));
        assert_eq!(c.sweep.statistics.len(), 2);
    }

    #[test]
    fn small_parsers() {
        assert_eq!(parse_assignment("c_i = 5").unwrap(), ("c_i".into(), 5.0));
        assert!(parse_assignment("c_i").is_err());
        let p = parse_profile("D-ct-C-n").unwrap();
        assert_eq!(p.to_array(), [Action::Defect, Action::Cooperate, Action::Cooperate, Action::Defect]);
        assert!(parse_profile("C-C-C").is_err());
        assert_eq!(parse_state("0.1, 0.2,0.3,0.4").unwrap(), [0.1, 0.2, 0.3, 0.4]);
        assert!(parse_state("0.1,0.2").is_err());
    }
}
