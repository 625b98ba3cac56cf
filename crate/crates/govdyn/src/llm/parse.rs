use govdyn_core::Action;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("response names both strategies: {raw:?}")]
    Ambiguous { raw: String },
    #[error("response names neither strategy: {raw:?}")]
    NoChoice { raw: String },
}

impl ParseError {
    pub fn raw(&self) -> &str {
        match self {
            ParseError::Ambiguous { raw } | ParseError::NoChoice { raw } => raw,
        }
    }
}

fn is_wrapper(c: char) -> bool {
    c.is_whitespace() || c.is_ascii_punctuation() || matches!(c, '‘' | '’' | '“' | '”' | '«' | '»')
}

/// True when `needle` occurs in `hay` as a whole phrase.
fn contains_phrase(hay: &str, needle: &str) -> bool {
    if needle.is_empty() {
        return false;
    }
    hay.match_indices(needle).any(|(i, _)| {
        let before = hay[..i].chars().next_back();
        let after = hay[i + needle.len()..].chars().next();
        !before.is_some_and(char::is_alphanumeric) && !after.is_some_and(char::is_alphanumeric)
    })
}

/// Maps a free-text response to the strategy it names, with the first label
/// standing for `Cooperate`.
pub fn parse_choice(response: &str, labels: &[String; 2]) -> Result<Action, ParseError> {
    parse_choice_bound(response, labels, Action::Cooperate)
}

/// As [`parse_choice`], with the first label standing for `first`.
pub fn parse_choice_bound(response: &str, labels: &[String; 2], first: Action) -> Result<Action, ParseError> {
    let text = response.trim_matches(is_wrapper).to_lowercase();
    let a = labels[0].trim().to_lowercase();
    let b = labels[1].trim().to_lowercase();
    if text == a {
        return Ok(first);
    }
    if text == b {
        return Ok(first.other());
    }
    match (contains_phrase(&text, &a), contains_phrase(&text, &b)) {
        (true, false) => Ok(first),
        (false, true) => Ok(first.other()),
        (true, true) => Err(ParseError::Ambiguous { raw: response.to_string() }),
        (false, false) => Err(ParseError::NoChoice { raw: response.to_string() }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels() -> [String; 2] {
        ["Option A".to_string(), "Option B".to_string()]
    }

    #[test]
    fn exact_and_normalized() {
        assert_eq!(parse_choice("Option A", &labels()), Ok(Action::Cooperate));
        assert_eq!(parse_choice("  option b.\n", &labels()), Ok(Action::Defect));
        assert_eq!(parse_choice("**Option B**", &labels()), Ok(Action::Defect));
        assert_eq!(parse_choice("'Option A'", &labels()), Ok(Action::Cooperate));
        assert_eq!(parse_choice("I pick option a", &labels()), Ok(Action::Cooperate));
    }

    #[test]
    fn ambiguous_and_missing() {
        let raw = "I choose Option A because Option B is risky";
        assert_eq!(parse_choice(raw, &labels()), Err(ParseError::Ambiguous { raw: raw.into() }));
        assert_eq!(parse_choice("Trust", &labels()), Err(ParseError::NoChoice { raw: "Trust".into() }));
        assert_eq!(parse_choice("", &labels()), Err(ParseError::NoChoice { raw: String::new() }));
        // "Option AB" is not "Option A".
        assert!(matches!(parse_choice("Option AB", &labels()), Err(ParseError::NoChoice { .. })));
    }

    #[test]
    fn binding_flips_actions() {
        assert_eq!(parse_choice_bound("Option A", &labels(), Action::Defect), Ok(Action::Defect));
        assert_eq!(parse_choice_bound("Option B", &labels(), Action::Defect), Ok(Action::Cooperate));
    }
}
