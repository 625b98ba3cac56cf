//! Template rendering.
//!
//! Placeholders are `{name}`. A line of the form `{key}: [text]` is an
//! optional block: `text` is kept when `key` is active and the whole line is
//! dropped otherwise. `{}` with nothing inside is literal text.

use std::collections::BTreeMap;

use super::weights::format_weight;
use super::GameConfig;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PromptError {
    #[error("agent {0:?} is not one of the configured agent names")]
    UnknownAgent(String),
    #[error("round {round} is outside 1..={n_rounds}")]
    RoundOutOfRange { round: u32, n_rounds: u32 },
    #[error("unresolved placeholder {{{0}}}")]
    UnresolvedPlaceholder(String),
    #[error("unterminated placeholder starting at byte {0}")]
    Unterminated(usize),
    #[error("unknown optional block {{{0}}}")]
    UnknownBlock(String),
    #[error("the config carries no payoff weights")]
    MissingWeights,
}

/// Choices of earlier rounds, as `(agent, label)` pairs per round.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct History {
    pub rounds: Vec<Vec<(String, String)>>,
}

impl History {
    pub fn render(&self) -> String {
        let rounds: Vec<String> = self
            .rounds
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let inner: Vec<String> = r.iter().map(|(a, l)| format!("{a}: {l}")).collect();
                format!("{}: {{{}}}", i + 1, inner.join(", "))
            })
            .collect();
        format!("{{{}}}", rounds.join(", "))
    }
}

fn is_none_label(s: &Option<String>) -> bool {
    match s {
        None => true,
        Some(s) => s.trim().is_empty() || s.trim().eq_ignore_ascii_case("none"),
    }
}

/// Renders the prompt seen by `agent` in `round` (1-based).
pub fn render_prompt(
    template: &str,
    config: &GameConfig,
    agent: &str,
    round: u32,
    history: &History,
) -> Result<String, PromptError> {
    let me = config
        .agent_names
        .iter()
        .position(|a| a == agent)
        .ok_or_else(|| PromptError::UnknownAgent(agent.to_string()))?;
    if round == 0 || round > config.n_rounds {
        return Err(PromptError::RoundOutOfRange { round, n_rounds: config.n_rounds });
    }
    let weights = config.weights.as_ref().filter(|w| w.len() == 64).ok_or(PromptError::MissingWeights)?;

    let mut values: BTreeMap<String, String> = BTreeMap::new();
    values.insert("currentPlayerName".into(), agent.to_string());
    for (i, other) in config.agent_names.iter().enumerate().filter(|(i, _)| *i != me).map(|(_, a)| a).enumerate() {
        values.insert(format!("opponent{}", i + 1), other.clone());
    }
    let personality = &config.personalities[me];
    if !is_none_label(personality) {
        values.insert("personality".into(), personality.clone().unwrap_or_default());
    }
    values.insert("strategy1".into(), config.strategy_labels[0].clone());
    values.insert("strategy2".into(), config.strategy_labels[1].clone());
    values.insert("nRounds".into(), config.n_rounds.to_string());
    values.insert("currentRound".into(), round.to_string());
    values.insert("history".into(), history.render());
    for (i, w) in weights.iter().enumerate() {
        values.insert(format!("weight{}", i + 1), format_weight(*w));
    }

    let block_active = |key: &str| -> Result<bool, PromptError> {
        match key {
            "intro" => Ok(!is_none_label(personality)),
            "gameLength" => Ok(is_none_label(&config.stopping_condition)),
            other => Err(PromptError::UnknownBlock(other.to_string())),
        }
    };

    let mut out = String::with_capacity(template.len() + 1024);
    for line in template.split_inclusive('\n') {
        let body = line.trim_end_matches(['\n', '\r']);
        let ending = &line[body.len()..];
        let text = match optional_block(body) {
            Some((key, inner)) => {
                if !block_active(key)? {
                    continue;
                }
                inner
            }
            None => body,
        };
        substitute(text, &values, &mut out)?;
        out.push_str(ending);
    }
    Ok(out)
}

/// Splits `{key}: [text]` into `(key, text)`.
fn optional_block(line: &str) -> Option<(&str, &str)> {
    let t = line.trim_end();
    let rest = t.strip_prefix('{')?;
    let close = rest.find("}: [")?;
    let key = &rest[..close];
    if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
        return None;
    }
    let inner = rest[close + 4..].strip_suffix(']')?;
    Some((key, inner))
}

fn substitute(text: &str, values: &BTreeMap<String, String>, out: &mut String) -> Result<(), PromptError> {
    let mut rest = text;
    let mut offset = 0;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let close = after.find('}').ok_or(PromptError::Unterminated(offset + open))?;
        let name = &after[..close];
        if name.is_empty() {
            out.push_str("{}");
        } else {
            let v = values.get(name).ok_or_else(|| PromptError::UnresolvedPlaceholder(name.to_string()))?;
            out.push_str(v);
        }
        let consumed = open + 1 + close + 1;
        offset += consumed;
        rest = &rest[consumed..];
    }
    out.push_str(rest);
    Ok(())
}

/// Whitespace normalization used for byte comparisons: LF line endings, no
/// trailing spaces, runs of blank lines collapsed to one, no leading or
/// trailing blank lines.
pub fn canonicalize(text: &str) -> String {
    let text = text.replace("\r\n", "\n").replace('\r', "\n");
    let mut out: Vec<&str> = Vec::new();
    for line in text.split('\n').map(str::trim_end) {
        if line.is_empty() && out.last().is_none_or(|l| l.is_empty()) {
            continue;
        }
        out.push(line);
    }
    while out.last().is_some_and(|l| l.is_empty()) {
        out.pop();
    }
    out.join("\n")
}
