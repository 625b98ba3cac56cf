//! Mapping between payoff tables and the 64 template weights.

use govdyn_core::{payoff, Action, ActionProfile, ModelVariant, PayoffVector, Role, ValidParams};

/// Roles in the order the template lists them, both in each outcome clause
/// and inside the weight quadruple.
pub const TEMPLATE_ROLE_ORDER: [Role; 4] = [Role::Regulator, Role::Developer, Role::User, Role::Commentariat];

/// Action bound to the first strategy label unless a config says otherwise.
pub const DEFAULT_FIRST_LABEL_ACTION: Action = Action::Cooperate;

/// Profile described by outcome clause `k` (zero-based) when the first label
/// stands for `first`. The regulator varies fastest, the commentariat slowest.
pub fn outcome_profile(k: usize, first: Action) -> ActionProfile {
    let profile = ActionProfile::from_index(k);
    match first {
        Action::Cooperate => profile,
        Action::Defect => ActionProfile::from_index(k ^ 0b1111),
    }
}

/// The 64 template weights with the default label binding.
pub fn weights_from_params(model: ModelVariant, params: &ValidParams) -> [f64; 64] {
    weights_with_binding(model, params, DEFAULT_FIRST_LABEL_ACTION)
}

pub fn weights_with_binding(model: ModelVariant, params: &ValidParams, first: Action) -> [f64; 64] {
    let mut out = [0.0; 64];
    for k in 0..16 {
        let pay = payoff(model, outcome_profile(k, first), params);
        for (j, role) in TEMPLATE_ROLE_ORDER.iter().enumerate() {
            out[4 * k + j] = pay.get(*role);
        }
    }
    out
}

/// Inverse of [`weights_with_binding`]: payoff vectors indexed by
/// [`ActionProfile::index`].
pub fn tables_from_weights(weights: &[f64; 64], first: Action) -> [PayoffVector; 16] {
    let mut out = [PayoffVector::default(); 16];
    for k in 0..16 {
        let mut v = [0.0; 4];
        for (j, role) in TEMPLATE_ROLE_ORDER.iter().enumerate() {
            v[role.index()] = weights[4 * k + j];
        }
        out[outcome_profile(k, first).index()] = PayoffVector::from_array(v);
    }
    out
}

/// Weight text as it appears in a prompt: rounded to 10 decimals, shortest
/// round-trip form, always with a decimal point, no negative zero.
pub fn format_weight(w: f64) -> String {
    let r = (w * 1e10).round() / 1e10;
    let r = if r == 0.0 { 0.0 } else { r };
    format!("{r:?}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use govdyn_core::GovernanceParams;

    fn appendix() -> ValidParams {
        crate::llm::appendix_prompt_params().validate().unwrap()
    }

    #[test]
    fn first_and_ninth_outcomes() {
        let w = weights_from_params(ModelVariant::InvestigateDevelopers, &appendix());
        assert_eq!(&w[0..4], &[-1.0, 3.5, 4.0, -5.0]);
        assert_eq!(&w[32..36], &[-3.0, 1.5, 2.0, 0.0]);
    }

    #[test]
    fn zero_params_give_zero_weights() {
        let p = GovernanceParams::ZERO.validate().unwrap();
        for model in ModelVariant::ALL {
            assert!(weights_from_params(model, &p).iter().all(|w| *w == 0.0));
        }
    }

    #[test]
    fn outcome_two_flips_only_the_regulator() {
        let p = outcome_profile(1, Action::Cooperate);
        assert_eq!(p, ActionProfile::uniform(Action::Cooperate).with(Role::Regulator, Action::Defect));
        let p = outcome_profile(8, Action::Cooperate);
        assert_eq!(p, ActionProfile::uniform(Action::Cooperate).with(Role::Commentariat, Action::Defect));
    }

    #[test]
    fn weight_formatting() {
        assert_eq!(format_weight(4.0), "4.0");
        assert_eq!(format_weight(-0.0), "0.0");
        assert_eq!(format_weight(4.2 - 5.0), "-0.8");
        assert_eq!(format_weight(-1e-12), "0.0");
        assert_eq!(format_weight(0.125), "0.125");
    }
}
