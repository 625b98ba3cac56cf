//! Finite populations: Fermi imitation, fixation of single mutants, the
//! small-mutation chain over monomorphic states and an agent-based simulator.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::params::{raw_payoff, Action, ActionProfile, ModelVariant, MonomorphicState, Role, ValidParams};
use crate::replicator::GapField;

/// Population sizes, selection strength and mutation probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FiniteConfig {
    pub n_commentariat: usize,
    pub n_user: usize,
    pub n_developer: usize,
    pub n_regulator: usize,
    pub beta: f64,
    pub mu: f64,
}

impl Default for FiniteConfig {
    fn default() -> Self {
        FiniteConfig { n_commentariat: 100, n_user: 100, n_developer: 100, n_regulator: 100, beta: 0.1, mu: 1e-3 }
    }
}

impl FiniteConfig {
    pub fn uniform(size: usize, beta: f64, mu: f64) -> Self {
        FiniteConfig { n_commentariat: size, n_user: size, n_developer: size, n_regulator: size, beta, mu }
    }

    pub fn size(&self, role: Role) -> usize {
        match role {
            Role::Commentariat => self.n_commentariat,
            Role::User => self.n_user,
            Role::Developer => self.n_developer,
            Role::Regulator => self.n_regulator,
        }
    }

    pub fn sizes(&self) -> [usize; 4] {
        Role::ALL.map(|r| self.size(r))
    }

    pub fn validate(&self) -> Result<(), FiniteError> {
        if self.sizes().iter().any(|n| *n < 2) {
            return Err(FiniteError::InvalidConfig("population sizes must be at least 2".into()));
        }
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return Err(FiniteError::InvalidConfig("beta must be finite and non-negative".into()));
        }
        if !(0.0..=1.0).contains(&self.mu) {
            return Err(FiniteError::InvalidConfig("mu must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FiniteError {
    #[error("invalid finite-population config: {0}")]
    InvalidConfig(String),
    #[error("the mutant action equals the resident action of {role}")]
    NoMutant { role: Role },
    #[error("the chain is reducible; communicating classes: {}", BlockList(.blocks))]
    Reducible { blocks: Vec<Vec<MonomorphicState>> },
}

struct BlockList<'a>(&'a [Vec<MonomorphicState>]);

impl fmt::Display for BlockList<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, block) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            f.write_str("{")?;
            for (j, s) in block.iter().enumerate() {
                if j > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{}", s.label())?;
            }
            f.write_str("}")?;
        }
        Ok(())
    }
}

/// Probability that a focal agent with payoff `f_focal` imitates a role model
/// with payoff `f_model`: `1 / (1 + exp(−β (f_model − f_focal)))`.
pub fn fermi(f_focal: f64, f_model: f64, beta: f64) -> f64 {
    let t = beta * (f_model - f_focal);
    if t >= 0.0 {
        1.0 / (1.0 + libm::exp(-t))
    } else {
        let e = libm::exp(t);
        e / (1.0 + e)
    }
}

/// Probability that the number of mutants grows from `k` in a population of `z`.
pub fn t_plus(k: usize, z: usize, f_mutant: f64, f_resident: f64, beta: f64) -> f64 {
    let (k, z) = (k as f64, z as f64);
    (z - k) / z * k / z * fermi(f_resident, f_mutant, beta)
}

/// Probability that the number of mutants shrinks from `k` in a population of `z`.
pub fn t_minus(k: usize, z: usize, f_mutant: f64, f_resident: f64, beta: f64) -> f64 {
    let (k, z) = (k as f64, z as f64);
    k / z * (z - k) / z * fermi(f_mutant, f_resident, beta)
}

/// Fixation probability of one mutant among `z − 1` residents with constant
/// fitnesses, `1 / (1 + Σ_i Π_{j≤i} T⁻(j)/T⁺(j))`.
pub fn fixation_from_fitness(f_mutant: f64, f_resident: f64, z: usize, beta: f64) -> f64 {
    // T-/T+ is the same at every j under the Fermi rule.
    let ratio = libm::exp(-beta * (f_mutant - f_resident));
    let mut sum = 0.0;
    let mut prod = 1.0;
    for _ in 1..z {
        prod *= ratio;
        sum += prod;
    }
    1.0 / (1.0 + sum)
}

/// Fixation probability of a single `mutant` in the population of
/// `focal_role`, while the other three populations stay at `context`.
///
/// Each payoff involves one member of every population, so mutant and
/// resident fitness are the payoffs of the two profiles that differ in the
/// focal role, whatever the number of mutants.
#[allow(clippy::too_many_arguments)]
pub fn fixation_probability(
    model: ModelVariant,
    focal_role: Role,
    mutant: Action,
    context: MonomorphicState,
    z: usize,
    beta: f64,
    params: &ValidParams,
) -> Result<f64, FiniteError> {
    if context.get(focal_role) == mutant {
        return Err(FiniteError::NoMutant { role: focal_role });
    }
    if z < 2 {
        return Err(FiniteError::InvalidConfig("population size must be at least 2".into()));
    }
    let f_res = raw_payoff(model, context, params.get()).get(focal_role);
    let f_mut = raw_payoff(model, context.with(focal_role, mutant), params.get()).get(focal_role);
    Ok(fixation_from_fitness(f_mut, f_res, z, beta))
}

/// Small-mutation transition matrix over monomorphic states.
///
/// `entry(i, j)` is the probability of moving from `states[i]` to `states[j]`.
/// Roles pinned by `fixed` never mutate and the states of the chain are the
/// profiles that agree with the pins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionMatrix {
    pub states: Vec<MonomorphicState>,
    pub entries: Vec<f64>,
    pub fixed: [Option<Action>; 4],
}

impl TransitionMatrix {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.states.len() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.states.len();
        &self.entries[i * n..(i + 1) * n]
    }

    pub fn index_of(&self, state: MonomorphicState) -> Option<usize> {
        self.states.iter().position(|s| *s == state)
    }
}

/// Transition matrix of the full four-population chain.
pub fn transition_matrix(
    model: ModelVariant,
    config: &FiniteConfig,
    params: &ValidParams,
) -> Result<TransitionMatrix, FiniteError> {
    restricted_transition_matrix(model, config, params, [None; 4])
}

/// Transition matrix with some roles pinned to one action.
///
/// A mutant appears in one of the free populations with equal probability, so
/// each permitted move has probability `ρ / n_free`.
pub fn restricted_transition_matrix(
    model: ModelVariant,
    config: &FiniteConfig,
    params: &ValidParams,
    fixed: [Option<Action>; 4],
) -> Result<TransitionMatrix, FiniteError> {
    config.validate()?;
    let free: Vec<Role> = Role::ALL.into_iter().filter(|r| fixed[r.index()].is_none()).collect();
    if free.is_empty() {
        return Err(FiniteError::InvalidConfig("at least one role must be free".into()));
    }
    let states: Vec<MonomorphicState> = ActionProfile::all()
        .filter(|s| Role::ALL.iter().all(|r| fixed[r.index()].map_or(true, |a| s.get(*r) == a)))
        .collect();
    let n = states.len();
    let mut entries = vec![0.0; n * n];
    let divisor = free.len() as f64;
    for (i, s) in states.iter().enumerate() {
        let mut off = 0.0;
        for role in &free {
            let target = s.with(*role, s.get(*role).other());
            let j = states.iter().position(|t| *t == target).expect("target state is in the chain");
            let rho = fixation_probability(model, *role, target.get(*role), *s, config.size(*role), config.beta, params)?;
            let p = rho / divisor;
            entries[i * n + j] = p;
            off += p;
        }
        entries[i * n + i] = 1.0 - off;
    }
    Ok(TransitionMatrix { states, entries, fixed })
}

/// Long-run probability of each monomorphic state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryDistribution {
    pub states: Vec<MonomorphicState>,
    pub probabilities: Vec<f64>,
}

impl StationaryDistribution {
    pub fn get(&self, state: MonomorphicState) -> f64 {
        self.states.iter().position(|s| *s == state).map_or(0.0, |i| self.probabilities[i])
    }

    /// Total probability of the states satisfying `pred`.
    pub fn mass_where(&self, pred: impl Fn(&MonomorphicState) -> bool) -> f64 {
        self.states.iter().zip(&self.probabilities).filter(|(s, _)| pred(s)).map(|(_, p)| p).sum()
    }

    /// States and probabilities, most likely first. Ties keep state order.
    pub fn sorted_desc(&self) -> Vec<(MonomorphicState, f64)> {
        let mut v: Vec<_> = self.states.iter().copied().zip(self.probabilities.iter().copied()).collect();
        v.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(core::cmp::Ordering::Equal));
        v
    }

    /// Probability spread over all 16 profiles; states outside the chain get 0.
    pub fn to_full(&self) -> [f64; 16] {
        let mut out = [0.0; 16];
        for (s, p) in self.states.iter().zip(&self.probabilities) {
            out[s.index()] = *p;
        }
        out
    }
}

/// Threshold below which a transition counts as absent when checking that
/// the chain is irreducible.
pub const REDUCIBILITY_THRESHOLD: f64 = 1e-300;

/// Strongly connected components of the chain, in Tarjan order.
pub fn communicating_classes(matrix: &TransitionMatrix) -> Vec<Vec<usize>> {
    let n = matrix.len();
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| j != i && matrix.entry(i, j) > REDUCIBILITY_THRESHOLD).collect())
        .collect();
    // Iterative Tarjan.
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut comps = Vec::new();
    let mut next = 0;
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        let mut work = vec![(root, 0usize)];
        while let Some((v, ei)) = work.pop() {
            if ei == 0 {
                index[v] = next;
                low[v] = next;
                next += 1;
                stack.push(v);
                on_stack[v] = true;
            }
            if let Some(&w) = adj[v].get(ei) {
                work.push((v, ei + 1));
                if index[w] == usize::MAX {
                    work.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            if low[v] == index[v] {
                let mut comp = Vec::new();
                loop {
                    let w = stack.pop().expect("tarjan stack");
                    on_stack[w] = false;
                    comp.push(w);
                    if w == v {
                        break;
                    }
                }
                comp.sort_unstable();
                comps.push(comp);
            }
            if let Some(&(parent, _)) = work.last() {
                low[parent] = low[parent].min(low[v]);
            }
        }
    }
    comps
}

/// Solve `π Λ = π`, `Σ π = 1` for an irreducible chain.
pub fn stationary_distribution(matrix: &TransitionMatrix) -> Result<StationaryDistribution, FiniteError> {
    let n = matrix.len();
    let classes = communicating_classes(matrix);
    if classes.len() > 1 {
        let blocks = classes.into_iter().map(|c| c.into_iter().map(|i| matrix.states[i]).collect()).collect();
        return Err(FiniteError::Reducible { blocks });
    }
    let mut a = DMatrix::from_fn(n, n, |i, j| matrix.entry(j, i) - if i == j { 1.0 } else { 0.0 });
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut b = DVector::zeros(n);
    b[n - 1] = 1.0;
    let sol = a
        .lu()
        .solve(&b)
        .ok_or_else(|| FiniteError::InvalidConfig("singular stationary system".into()))?;
    let mut probabilities: Vec<f64> = sol.iter().map(|p| p.max(0.0)).collect();
    let total: f64 = probabilities.iter().sum();
    for p in probabilities.iter_mut() {
        *p /= total;
    }
    Ok(StationaryDistribution { states: matrix.states.clone(), probabilities })
}

/// Output of [`simulate_agents`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationRecord {
    /// `(step, frequencies)` pairs, including step 0 and the final step.
    pub samples: Vec<(u64, [f64; 4])>,
    /// Number of steps credited to each profile (indexed by
    /// [`ActionProfile::index`]), counting every step toward the monomorphic
    /// state most recently visited.
    pub occupancy: [u64; 16],
    /// Steps before the first monomorphic state was reached.
    pub unassigned_steps: u64,
    /// Time-averaged cooperative frequency of each population.
    pub mean_frequencies: [f64; 4],
}

impl SimulationRecord {
    /// Occupancy normalized to a probability vector.
    pub fn occupancy_distribution(&self) -> [f64; 16] {
        let total: u64 = self.occupancy.iter().sum();
        if total == 0 {
            return [0.0; 16];
        }
        self.occupancy.map(|c| c as f64 / total as f64)
    }
}

/// Initial condition of a simulation: the number of cooperators in each population.
pub fn counts_from_profile(config: &FiniteConfig, profile: MonomorphicState) -> [usize; 4] {
    Role::ALL.map(|r| match profile.get(r) {
        Action::Cooperate => config.size(r),
        Action::Defect => 0,
    })
}

/// Asynchronous imitation dynamics with mutation.
///
/// Each step picks a population uniformly at random and a focal agent within
/// it. With probability `mu` the focal switches action; otherwise it compares
/// itself with a random other member and copies it with the Fermi
/// probability. Payoffs are the mean-field fitness of each action at the
/// current frequencies. Frequencies are recorded every `record_every` steps.
pub fn simulate_agents(
    model: ModelVariant,
    config: &FiniteConfig,
    params: &ValidParams,
    initial: [usize; 4],
    steps: u64,
    record_every: u64,
    seed: u64,
) -> Result<SimulationRecord, FiniteError> {
    config.validate()?;
    if steps == 0 {
        return Err(FiniteError::InvalidConfig("steps must be at least 1".into()));
    }
    let sizes = config.sizes();
    if initial.iter().zip(&sizes).any(|(k, n)| k > n) {
        return Err(FiniteError::InvalidConfig("initial counts exceed population sizes".into()));
    }
    let field = GapField::new(model, params);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = initial;
    let freq = |c: &[usize; 4]| -> [f64; 4] { core::array::from_fn(|i| c[i] as f64 / sizes[i] as f64) };
    let monomorphic = |c: &[usize; 4]| -> Option<usize> {
        let mut idx = 0;
        for i in 0..4 {
            let bit = if c[i] == sizes[i] {
                0
            } else if c[i] == 0 {
                1
            } else {
                return None;
            };
            idx |= bit << (3 - i);
        }
        Some(idx)
    };

    let mut samples = vec![(0u64, freq(&counts))];
    let mut occupancy = [0u64; 16];
    let mut unassigned = 0u64;
    let mut sums = [0.0f64; 4];
    let mut last_mono = monomorphic(&counts);

    for step in 1..=steps {
        let r = rng.gen_range(0..4usize);
        let n = sizes[r];
        let k = counts[r];
        let focal_coop = rng.gen_range(0..n) < k;
        if rng.gen_bool(config.mu) {
            if focal_coop {
                counts[r] -= 1;
            } else {
                counts[r] += 1;
            }
        } else {
            let others_coop = k - usize::from(focal_coop);
            let model_coop = rng.gen_range(0..n - 1) < others_coop;
            if model_coop != focal_coop {
                let s = freq(&counts);
                let role = Role::ALL[r];
                let f_c = field.fitness(role, Action::Cooperate, &s);
                let f_d = field.fitness(role, Action::Defect, &s);
                let (f_focal, f_model) = if focal_coop { (f_c, f_d) } else { (f_d, f_c) };
                if rng.gen_bool(fermi(f_focal, f_model, config.beta)) {
                    if focal_coop {
                        counts[r] -= 1;
                    } else {
                        counts[r] += 1;
                    }
                }
            }
        }
        if let Some(m) = monomorphic(&counts) {
            last_mono = Some(m);
        }
        match last_mono {
            Some(m) => occupancy[m] += 1,
            None => unassigned += 1,
        }
        let s = freq(&counts);
        for i in 0..4 {
            sums[i] += s[i];
        }
        if step == steps || (record_every > 0 && step % record_every == 0) {
            samples.push((step, s));
        }
    }
    Ok(SimulationRecord {
        samples,
        occupancy,
        unassigned_steps: unassigned,
        mean_frequencies: sums.map(|v| v / steps as f64),
    })
}
