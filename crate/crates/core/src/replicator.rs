//! Expected fitness and the four-population replicator vector field.
//!
//! Fitness is the expectation of the payoff tables when every other role plays
//! `Cooperate` independently with its population frequency. Each population
//! evolves as `η̇ = η(1 − η)(f_C − f_D)`.

use serde::{Deserialize, Serialize};

use crate::params::{raw_payoff, Action, ActionProfile, ModelVariant, Role, ValidParams};

/// Frequencies of the cooperative (or trusting) strategy in each population.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopulationState {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub w: f64,
}

impl PopulationState {
    pub const fn new(x: f64, y: f64, z: f64, w: f64) -> Self {
        PopulationState { x, y, z, w }
    }

    pub const fn splat(v: f64) -> Self {
        PopulationState::new(v, v, v, v)
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        PopulationState::new(a[0], a[1], a[2], a[3])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.x, self.y, self.z, self.w]
    }

    /// The cube vertex of a monomorphic profile.
    pub fn vertex(profile: ActionProfile) -> Self {
        PopulationState::from_array(profile.vertex())
    }

    #[inline]
    pub fn get(&self, role: Role) -> f64 {
        match role {
            Role::Commentariat => self.x,
            Role::User => self.y,
            Role::Developer => self.z,
            Role::Regulator => self.w,
        }
    }

    pub fn with(mut self, role: Role, value: f64) -> Self {
        match role {
            Role::Commentariat => self.x = value,
            Role::User => self.y = value,
            Role::Developer => self.z = value,
            Role::Regulator => self.w = value,
        }
        self
    }

    pub fn in_unit_cube(&self) -> bool {
        self.to_array().iter().all(|v| (0.0..=1.0).contains(v))
    }

    pub fn clamped(self) -> Self {
        PopulationState::from_array(self.to_array().map(|v| v.clamp(0.0, 1.0)))
    }

    pub fn distance_inf(&self, other: &PopulationState) -> f64 {
        let (a, b) = (self.to_array(), other.to_array());
        (0..4).map(|i| libm::fabs(a[i] - b[i])).fold(0.0, f64::max)
    }

    /// Nearest cube vertex, rounding each coordinate, ties to `Cooperate`.
    pub fn nearest_vertex(&self) -> ActionProfile {
        ActionProfile::from_array(
            self.to_array().map(|v| if v >= 0.5 { Action::Cooperate } else { Action::Defect }),
        )
    }
}

/// Time derivative of a [`PopulationState`].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StateDerivative {
    pub dx: f64,
    pub dy: f64,
    pub dz: f64,
    pub dw: f64,
}

impl StateDerivative {
    pub fn from_array(a: [f64; 4]) -> Self {
        StateDerivative { dx: a[0], dy: a[1], dz: a[2], dw: a[3] }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.dx, self.dy, self.dz, self.dw]
    }

    pub fn norm_inf(&self) -> f64 {
        self.to_array().iter().fold(0.0, |m, v| f64::max(m, libm::fabs(*v)))
    }
}

/// Expected payoff of `role` playing `action` against independent opponents.
///
/// This is the explicit eight-term sum over the co-players' actions.
pub fn fitness(
    model: ModelVariant,
    role: Role,
    action: Action,
    state: &PopulationState,
    params: &ValidParams,
) -> f64 {
    let others = role.others();
    let mut total = 0.0;
    for co in 0..8usize {
        let mut profile = ActionProfile::uniform(action);
        let mut weight = 1.0;
        for (k, other) in others.iter().enumerate() {
            let a = Action::from_bit(co >> (2 - k));
            profile = profile.with(*other, a);
            let freq = state.get(*other);
            weight *= match a {
                Action::Cooperate => freq,
                Action::Defect => 1.0 - freq,
            };
        }
        total += weight * raw_payoff(model, profile, params.get()).get(role);
    }
    total
}

/// `fitness(Cooperate) − fitness(Defect)` for one role.
pub fn fitness_difference(
    model: ModelVariant,
    role: Role,
    state: &PopulationState,
    params: &ValidParams,
) -> f64 {
    fitness(model, role, Action::Cooperate, state, params)
        - fitness(model, role, Action::Defect, state, params)
}

/// Replicator vector field evaluated through [`fitness_difference`].
pub fn rhs(model: ModelVariant, state: &PopulationState, params: &ValidParams) -> StateDerivative {
    let s = state.to_array();
    StateDerivative::from_array(core::array::from_fn(|i| {
        let role = Role::ALL[i];
        s[i] * (1.0 - s[i]) * fitness_difference(model, role, state, params)
    }))
}

/// Payoff gaps `P(C, co) − P(D, co)` for every role and co-profile, ready for
/// fast repeated evaluation.
///
/// Since the three co-players are independent, each fitness difference is the
/// trilinear interpolation of the eight corner gaps. The field of a role does
/// not depend on that role's own frequency and is affine in every other one.
#[derive(Debug, Clone, PartialEq)]
pub struct GapField {
    model: ModelVariant,
    /// `gaps[role][co]`, `co` bits ordered like `Role::others()` (first = MSB),
    /// with a 0 bit meaning `Cooperate`.
    gaps: [[f64; 8]; 4],
    /// Expected payoff of the `Cooperate` action, same layout.
    coop: [[f64; 8]; 4],
}

impl GapField {
    pub fn new(model: ModelVariant, params: &ValidParams) -> Self {
        let mut gaps = [[0.0; 8]; 4];
        let mut coop = [[0.0; 8]; 4];
        for role in Role::ALL {
            let others = role.others();
            for co in 0..8usize {
                let mut profile = ActionProfile::uniform(Action::Cooperate);
                for (k, other) in others.iter().enumerate() {
                    profile = profile.with(*other, Action::from_bit(co >> (2 - k)));
                }
                let pc = raw_payoff(model, profile.with(role, Action::Cooperate), params.get()).get(role);
                let pd = raw_payoff(model, profile.with(role, Action::Defect), params.get()).get(role);
                gaps[role.index()][co] = pc - pd;
                coop[role.index()][co] = pc;
            }
        }
        GapField { model, gaps, coop }
    }

    pub fn model(&self) -> ModelVariant {
        self.model
    }

    #[inline]
    fn interpolate(table: &[f64; 8], role: Role, s: &[f64; 4]) -> f64 {
        let [a, b, c] = role.others().map(|r| s[r.index()]);
        // Reduce the fastest co-player first; a 0 bit is `Cooperate`.
        let l0 = table[1] + c * (table[0] - table[1]);
        let l1 = table[3] + c * (table[2] - table[3]);
        let l2 = table[5] + c * (table[4] - table[5]);
        let l3 = table[7] + c * (table[6] - table[7]);
        let m0 = l1 + b * (l0 - l1);
        let m1 = l3 + b * (l2 - l3);
        m1 + a * (m0 - m1)
    }

    /// Fitness difference of one role.
    #[inline]
    pub fn component(&self, role: Role, s: &[f64; 4]) -> f64 {
        Self::interpolate(&self.gaps[role.index()], role, s)
    }

    /// Fitness differences of all four roles (the bracket terms `F_i`).
    #[inline]
    pub fn eval(&self, s: &[f64; 4]) -> [f64; 4] {
        [
            self.component(Role::Commentariat, s),
            self.component(Role::User, s),
            self.component(Role::Developer, s),
            self.component(Role::Regulator, s),
        ]
    }

    /// Expected payoff of `action` for `role`.
    pub fn fitness(&self, role: Role, action: Action, s: &[f64; 4]) -> f64 {
        let coop = Self::interpolate(&self.coop[role.index()], role, s);
        match action {
            Action::Cooperate => coop,
            Action::Defect => coop - self.component(role, s),
        }
    }

    /// Exact Jacobian of the bracket terms, `J[i][j] = ∂F_i/∂η_j`.
    pub fn jacobian(&self, s: &[f64; 4]) -> [[f64; 4]; 4] {
        let mut jac = [[0.0; 4]; 4];
        for role in Role::ALL {
            for other in role.others() {
                let j = other.index();
                let mut hi = *s;
                let mut lo = *s;
                hi[j] = 1.0;
                lo[j] = 0.0;
                jac[role.index()][j] = self.component(role, &hi) - self.component(role, &lo);
            }
        }
        jac
    }

    /// Replicator vector field.
    #[inline]
    pub fn rhs(&self, s: &[f64; 4]) -> [f64; 4] {
        let f = self.eval(s);
        core::array::from_fn(|i| s[i] * (1.0 - s[i]) * f[i])
    }
}
