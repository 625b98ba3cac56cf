//! Roles, actions, model parameters and the exact payoff tables of both model
//! variants.
//!
//! Profiles are indexed with the commentariat as the slowest-varying bit and the
//! regulator as the fastest, `Cooperate = 0`, so index 0 is `(C, CT, C, C)` and
//! index 15 is `(D, N, D, D)`. This is the row order of the payoff tables and the
//! outcome order of the LLM prompt template.

use alloc::vec::Vec;
use core::fmt;
use core::ops::Deref;

use serde::{Deserialize, Serialize};

/// Which population the commentariat investigates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelVariant {
    /// Model I: commentators investigate developers.
    #[serde(alias = "I", alias = "model_i")]
    InvestigateDevelopers,
    /// Model II: commentators investigate regulators.
    #[serde(alias = "II", alias = "model_ii")]
    InvestigateRegulators,
}

impl ModelVariant {
    pub const ALL: [ModelVariant; 2] = [
        ModelVariant::InvestigateDevelopers,
        ModelVariant::InvestigateRegulators,
    ];

    pub fn short_name(self) -> &'static str {
        match self {
            ModelVariant::InvestigateDevelopers => "I",
            ModelVariant::InvestigateRegulators => "II",
        }
    }
}

impl fmt::Display for ModelVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelVariant::InvestigateDevelopers => f.write_str("investigate_developers"),
            ModelVariant::InvestigateRegulators => f.write_str("investigate_regulators"),
        }
    }
}

/// The four populations. The discriminant is the position in every
/// four-component vector (`x, y, z, w`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Commentariat = 0,
    User = 1,
    Developer = 2,
    Regulator = 3,
}

impl Role {
    pub const ALL: [Role; 4] = [Role::Commentariat, Role::User, Role::Developer, Role::Regulator];

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Role> {
        Role::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Role::Commentariat => "commentariat",
            Role::User => "user",
            Role::Developer => "developer",
            Role::Regulator => "regulator",
        }
    }

    /// The three other roles in index order.
    pub fn others(self) -> [Role; 3] {
        let mut out = [Role::Commentariat; 3];
        let mut k = 0;
        for r in Role::ALL {
            if r != self {
                out[k] = r;
                k += 1;
            }
        }
        out
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Binary action. For users `Cooperate` is conditional trust (CT) and
/// `Defect` is never adopting (N).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Action {
    #[serde(alias = "C", alias = "CT", alias = "cooperate")]
    Cooperate = 0,
    #[serde(alias = "D", alias = "N", alias = "defect")]
    Defect = 1,
}

impl Action {
    pub const ALL: [Action; 2] = [Action::Cooperate, Action::Defect];

    #[inline]
    pub fn bit(self) -> usize {
        self as usize
    }

    #[inline]
    pub fn from_bit(bit: usize) -> Action {
        if bit & 1 == 0 {
            Action::Cooperate
        } else {
            Action::Defect
        }
    }

    #[inline]
    pub fn other(self) -> Action {
        match self {
            Action::Cooperate => Action::Defect,
            Action::Defect => Action::Cooperate,
        }
    }

    /// Table label: `C`/`D`, or `CT`/`N` for users.
    pub fn label(self, role: Role) -> &'static str {
        match (role, self) {
            (Role::User, Action::Cooperate) => "CT",
            (Role::User, Action::Defect) => "N",
            (_, Action::Cooperate) => "C",
            (_, Action::Defect) => "D",
        }
    }
}

/// One action per role.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ActionProfile {
    pub commentariat: Action,
    pub user: Action,
    pub developer: Action,
    pub regulator: Action,
}

/// A monomorphic configuration of all four populations; the states of the
/// small-mutation Markov chain.
pub type MonomorphicState = ActionProfile;

impl ActionProfile {
    pub const COUNT: usize = 16;

    pub fn new(commentariat: Action, user: Action, developer: Action, regulator: Action) -> Self {
        ActionProfile { commentariat, user, developer, regulator }
    }

    pub fn uniform(action: Action) -> Self {
        ActionProfile::new(action, action, action, action)
    }

    pub fn from_array(a: [Action; 4]) -> Self {
        ActionProfile::new(a[0], a[1], a[2], a[3])
    }

    pub fn to_array(self) -> [Action; 4] {
        [self.commentariat, self.user, self.developer, self.regulator]
    }

    #[inline]
    pub fn index(self) -> usize {
        (self.commentariat.bit() << 3)
            | (self.user.bit() << 2)
            | (self.developer.bit() << 1)
            | self.regulator.bit()
    }

    pub fn from_index(index: usize) -> Self {
        assert!(index < 16, "profile index {index} out of range");
        ActionProfile::new(
            Action::from_bit(index >> 3),
            Action::from_bit(index >> 2),
            Action::from_bit(index >> 1),
            Action::from_bit(index),
        )
    }

    /// All 16 profiles in table order.
    pub fn all() -> impl Iterator<Item = ActionProfile> + Clone {
        (0..16).map(ActionProfile::from_index)
    }

    #[inline]
    pub fn get(self, role: Role) -> Action {
        match role {
            Role::Commentariat => self.commentariat,
            Role::User => self.user,
            Role::Developer => self.developer,
            Role::Regulator => self.regulator,
        }
    }

    pub fn with(mut self, role: Role, action: Action) -> Self {
        match role {
            Role::Commentariat => self.commentariat = action,
            Role::User => self.user = action,
            Role::Developer => self.developer = action,
            Role::Regulator => self.regulator = action,
        }
        self
    }

    /// Roles whose actions differ between the two profiles.
    pub fn differing_roles(self, other: ActionProfile) -> impl Iterator<Item = Role> {
        Role::ALL.into_iter().filter(move |&r| self.get(r) != other.get(r))
    }

    /// Vertex of the frequency cube: coordinate 1 for `Cooperate`.
    pub fn vertex(self) -> [f64; 4] {
        self.to_array().map(|a| if a == Action::Cooperate { 1.0 } else { 0.0 })
    }

    /// Compact label such as `C-CT-D-C`.
    pub fn label(self) -> ProfileLabel {
        ProfileLabel(self)
    }
}

pub struct ProfileLabel(ActionProfile);

impl fmt::Display for ProfileLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = self.0;
        write!(
            f,
            "{}-{}-{}-{}",
            p.commentariat.label(Role::Commentariat),
            p.user.label(Role::User),
            p.developer.label(Role::Developer),
            p.regulator.label(Role::Regulator)
        )
    }
}

/// The thirteen model parameters. JSON keys are the snake_case field names.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GovernanceParams {
    /// Commentator reputational benefit for a correct recommendation.
    pub b_i: f64,
    /// User benefit from adopting a safe technology.
    pub b_u: f64,
    /// Developer benefit when the technology is adopted.
    pub b_p: f64,
    /// Regulator benefit when the technology is adopted.
    pub b_r: f64,
    /// Regulator benefit for catching an unsafe developer.
    pub b_fo: f64,
    /// Cost of an informed recommendation.
    pub c_i: f64,
    /// Reputational cost of a wrong recommendation.
    pub c_w: f64,
    /// Risk factor: fraction of `b_u` obtained from an unsafe product. At most 1.
    pub epsilon: f64,
    /// Additional cost of safe development.
    pub c_p: f64,
    /// Punishment suffered by a caught unsafe developer.
    pub u: f64,
    /// Regulator's cost of punishing.
    pub v: f64,
    /// Cost of effective regulation.
    pub c_r: f64,
    /// Probability weight of a defecting commentator's recommendation, as it
    /// enters the payoff tables.
    pub p_w: f64,
}

/// Parameter names in declaration order, matching the JSON keys.
pub const PARAM_NAMES: [&str; 13] = [
    "b_i", "b_u", "b_p", "b_r", "b_fo", "c_i", "c_w", "epsilon", "c_p", "u", "v", "c_r", "p_w",
];

impl GovernanceParams {
    pub const ZERO: GovernanceParams = GovernanceParams {
        b_i: 0.0,
        b_u: 0.0,
        b_p: 0.0,
        b_r: 0.0,
        b_fo: 0.0,
        c_i: 0.0,
        c_w: 0.0,
        epsilon: 0.0,
        c_p: 0.0,
        u: 0.0,
        v: 0.0,
        c_r: 0.0,
        p_w: 0.0,
    };

    /// Parameter set of the low-investigation-cost replicator panels:
    /// `b_U = b_P = b_R = 4, c_P = 0.5, c_w = 1, u = 1.5, v = 0.5, b_fo = 1,
    /// ε = 0.2, p_w = 0.5`, with `c_I = 0.5, b_I = 1, c_R = 0.5`.
    pub fn replicator_baseline() -> Self {
        GovernanceParams {
            b_i: 1.0,
            b_u: 4.0,
            b_p: 4.0,
            b_r: 4.0,
            b_fo: 1.0,
            c_i: 0.5,
            c_w: 1.0,
            epsilon: 0.2,
            c_p: 0.5,
            u: 1.5,
            v: 0.5,
            c_r: 0.5,
            p_w: 0.5,
        }
    }

    /// Four-population finite-size regime with costly investigation:
    /// `b_U = b_R = b_P = 4, u = 1.5, c_I = 5, ε = 0.2, b_fo = 1, v = 0,
    /// p_w = 0.5, c_R = 0.5, c_P = 0.5`, with low `b_I = 1` and `c_w = 1`.
    pub fn media_incentive_baseline() -> Self {
        GovernanceParams {
            b_i: 1.0,
            b_u: 4.0,
            b_p: 4.0,
            b_r: 4.0,
            b_fo: 1.0,
            c_i: 5.0,
            c_w: 1.0,
            epsilon: 0.2,
            c_p: 0.5,
            u: 1.5,
            v: 0.0,
            c_r: 0.5,
            p_w: 0.5,
        }
    }

    pub fn values(&self) -> [f64; 13] {
        [
            self.b_i, self.b_u, self.b_p, self.b_r, self.b_fo, self.c_i, self.c_w, self.epsilon,
            self.c_p, self.u, self.v, self.c_r, self.p_w,
        ]
    }

    pub fn from_values(v: [f64; 13]) -> Self {
        GovernanceParams {
            b_i: v[0],
            b_u: v[1],
            b_p: v[2],
            b_r: v[3],
            b_fo: v[4],
            c_i: v[5],
            c_w: v[6],
            epsilon: v[7],
            c_p: v[8],
            u: v[9],
            v: v[10],
            c_r: v[11],
            p_w: v[12],
        }
    }

    /// Looks a parameter up by its JSON key.
    pub fn get(&self, name: &str) -> Option<f64> {
        PARAM_NAMES.iter().position(|n| *n == name).map(|i| self.values()[i])
    }

    /// Sets a parameter by its JSON key. Returns `false` for an unknown key.
    pub fn set(&mut self, name: &str, value: f64) -> bool {
        match PARAM_NAMES.iter().position(|n| *n == name) {
            Some(i) => {
                let mut v = self.values();
                v[i] = value;
                *self = GovernanceParams::from_values(v);
                true
            }
            None => false,
        }
    }

    pub fn validate(self) -> Result<ValidParams, ParamError> {
        validate_params(self)
    }
}

/// A single violated parameter bound.
#[derive(Debug, Clone, PartialEq)]
pub enum ParamViolation {
    NonFinite { name: &'static str },
    EpsilonOutOfRange { value: f64 },
    PwOutOfRange { value: f64 },
    NegativeCost { name: &'static str, value: f64 },
}

impl fmt::Display for ParamViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamViolation::NonFinite { name } => write!(f, "{name} is not finite"),
            ParamViolation::EpsilonOutOfRange { value } => {
                write!(f, "epsilon = {value} exceeds 1")
            }
            ParamViolation::PwOutOfRange { value } => write!(f, "p_w = {value} is outside [0, 1]"),
            ParamViolation::NegativeCost { name, value } => write!(f, "{name} = {value} is negative"),
        }
    }
}

/// Every violated bound of a rejected parameter set.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid parameters: {}", DisplayList(.violations))]
pub struct ParamError {
    pub violations: Vec<ParamViolation>,
}

struct DisplayList<'a>(&'a [ParamViolation]);

impl fmt::Display for DisplayList<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Parameters that passed [`validate_params`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ValidParams(GovernanceParams);

impl ValidParams {
    pub fn get(&self) -> &GovernanceParams {
        &self.0
    }

    pub fn into_inner(self) -> GovernanceParams {
        self.0
    }
}

impl Deref for ValidParams {
    type Target = GovernanceParams;

    fn deref(&self) -> &GovernanceParams {
        &self.0
    }
}

impl TryFrom<GovernanceParams> for ValidParams {
    type Error = ParamError;

    fn try_from(p: GovernanceParams) -> Result<Self, ParamError> {
        validate_params(p)
    }
}

pub fn validate_params(params: GovernanceParams) -> Result<ValidParams, ParamError> {
    let mut violations = Vec::new();
    for (name, value) in PARAM_NAMES.iter().zip(params.values()) {
        if !value.is_finite() {
            violations.push(ParamViolation::NonFinite { name });
        }
    }
    if params.epsilon > 1.0 {
        violations.push(ParamViolation::EpsilonOutOfRange { value: params.epsilon });
    }
    if !(0.0..=1.0).contains(&params.p_w) && params.p_w.is_finite() {
        violations.push(ParamViolation::PwOutOfRange { value: params.p_w });
    }
    let costs = [
        ("c_i", params.c_i),
        ("c_w", params.c_w),
        ("c_p", params.c_p),
        ("u", params.u),
        ("v", params.v),
        ("c_r", params.c_r),
    ];
    for (name, value) in costs {
        if value < 0.0 {
            violations.push(ParamViolation::NegativeCost { name, value });
        }
    }
    if violations.is_empty() {
        Ok(ValidParams(params))
    } else {
        Err(ParamError { violations })
    }
}

/// Payoff of each role in one encounter, in role order.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PayoffVector {
    pub commentariat: f64,
    pub user: f64,
    pub developer: f64,
    pub regulator: f64,
}

impl PayoffVector {
    pub fn new(commentariat: f64, user: f64, developer: f64, regulator: f64) -> Self {
        PayoffVector { commentariat, user, developer, regulator }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.commentariat, self.user, self.developer, self.regulator]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        PayoffVector::new(a[0], a[1], a[2], a[3])
    }

    #[inline]
    pub fn get(&self, role: Role) -> f64 {
        match role {
            Role::Commentariat => self.commentariat,
            Role::User => self.user,
            Role::Developer => self.developer,
            Role::Regulator => self.regulator,
        }
    }
}

/// Payoffs of one encounter under the given model variant.
pub fn payoff(model: ModelVariant, profile: ActionProfile, params: &ValidParams) -> PayoffVector {
    raw_payoff(model, profile, params.get())
}

pub(crate) fn raw_payoff(
    model: ModelVariant,
    profile: ActionProfile,
    p: &GovernanceParams,
) -> PayoffVector {
    use Action::{Cooperate as C, Defect as D};
    let pw = p.p_w;
    let v = PayoffVector::new;
    // Rows shared by both variants: a non-adopting user zeroes every benefit.
    match (profile.commentariat, profile.user, profile.developer, profile.regulator) {
        (C, D, C, C) => return v(-p.c_i, 0.0, -p.c_p, -p.c_r),
        (C, D, C, D) => return v(-p.c_i, 0.0, -p.c_p, 0.0),
        (C, D, D, C) => return v(-p.c_i, 0.0, 0.0, -p.c_r),
        (C, D, D, D) => return v(-p.c_i, 0.0, 0.0, 0.0),
        (D, D, C, C) => return v(0.0, 0.0, -p.c_p, -p.c_r),
        (D, D, C, D) => return v(0.0, 0.0, -p.c_p, 0.0),
        (D, D, D, C) => return v(0.0, 0.0, 0.0, -p.c_r),
        (D, D, D, D) => return v(0.0, 0.0, 0.0, 0.0),
        _ => {}
    }
    let informed = p.b_i - p.c_i;
    let uninformed = (1.0 - pw) * p.b_i - pw * p.c_w;
    match model {
        ModelVariant::InvestigateDevelopers => match (profile.commentariat, profile.developer, profile.regulator) {
            (C, C, C) => v(informed, p.b_u, p.b_p - p.c_p, p.b_r - p.c_r),
            (C, C, D) => v(informed, p.b_u, p.b_p - p.c_p, p.b_r),
            (C, D, C) => v(informed, 0.0, 0.0, -p.c_r),
            (C, D, D) => v(informed, 0.0, 0.0, 0.0),
            (D, C, C) => v(
                uninformed,
                (1.0 - pw) * p.b_u,
                (1.0 - pw) * p.b_p - p.c_p,
                (1.0 - pw) * p.b_r - p.c_r,
            ),
            (D, C, D) => v(uninformed, (1.0 - pw) * p.b_u, (1.0 - pw) * p.b_p - p.c_p, (1.0 - pw) * p.b_r),
            (D, D, C) => v(
                uninformed,
                pw * p.epsilon * p.b_u,
                pw * (p.b_p - p.u),
                pw * (p.b_r + p.b_fo - p.v) - p.c_r,
            ),
            (D, D, D) => v(uninformed, pw * p.epsilon * p.b_u, pw * p.b_p, pw * p.b_r),
        },
        ModelVariant::InvestigateRegulators => match (profile.commentariat, profile.developer, profile.regulator) {
            (C, C, C) => v(informed, p.b_u, p.b_p - p.c_p, p.b_r - p.c_r),
            (C, C, D) => v(informed, 0.0, -p.c_p, 0.0),
            (C, D, C) => v(informed, p.epsilon * p.b_u, p.b_p - p.u, p.b_r - p.c_r - p.v + p.b_fo),
            (C, D, D) => v(informed, 0.0, 0.0, 0.0),
            (D, C, C) => v(
                uninformed,
                (1.0 - pw) * p.b_u,
                (1.0 - pw) * p.b_p - p.c_p,
                (1.0 - pw) * p.b_r - p.c_r,
            ),
            (D, C, D) => v(uninformed, pw * p.b_u, pw * p.b_p - p.c_p, pw * p.b_r),
            (D, D, C) => v(
                uninformed,
                (1.0 - pw) * p.epsilon * p.b_u,
                (1.0 - pw) * (p.b_p - p.u),
                (p.b_r - p.c_r + p.b_fo - p.v) * (1.0 - pw) - pw * p.c_r,
            ),
            (D, D, D) => v(uninformed, pw * p.epsilon * p.b_u, pw * p.b_p, pw * p.b_r),
        },
    }
}

/// All 16 payoff vectors in table order.
pub fn payoff_table(model: ModelVariant, params: &ValidParams) -> [PayoffVector; 16] {
    core::array::from_fn(|i| payoff(model, ActionProfile::from_index(i), params))
}
