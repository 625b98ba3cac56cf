//! Rest points of the replicator flow: vertex stability, interior roots,
//! boundary faces and the random-parameter census.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use nalgebra::{Matrix4, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::params::{ActionProfile, GovernanceParams, ModelVariant, ParamError, Role, ValidParams, PARAM_NAMES};
use crate::replicator::{fitness_difference, GapField, PopulationState};

/// Stability type of a vertex rest point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Stable,
    Unstable,
    Saddle,
    Degenerate,
}

impl Classification {
    pub fn name(self) -> &'static str {
        match self {
            Classification::Stable => "stable",
            Classification::Unstable => "unstable",
            Classification::Saddle => "saddle",
            Classification::Degenerate => "degenerate",
        }
    }
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Relative tolerance under which an eigenvalue counts as zero.
pub const ZERO_EIGENVALUE_TOL: f64 = 1e-12;

/// Classify a vertex from its (real, diagonal) Jacobian spectrum.
pub fn classify(eigenvalues: &[f64; 4]) -> Classification {
    let tol = zero_tolerance(eigenvalues);
    if eigenvalues.iter().any(|l| libm::fabs(*l) <= tol) {
        Classification::Degenerate
    } else if eigenvalues.iter().all(|l| *l < 0.0) {
        Classification::Stable
    } else if eigenvalues.iter().all(|l| *l > 0.0) {
        Classification::Unstable
    } else {
        Classification::Saddle
    }
}

fn zero_tolerance(eigenvalues: &[f64; 4]) -> f64 {
    let scale = eigenvalues.iter().fold(1.0f64, |m, l| m.max(libm::fabs(*l)));
    ZERO_EIGENVALUE_TOL * scale
}

/// Eigen-data of one vertex.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VertexReport {
    pub profile: ActionProfile,
    pub vertex: PopulationState,
    /// Diagonal Jacobian entries in `x, y, z, w` order.
    pub eigenvalues: [f64; 4],
    pub classification: Classification,
}

impl VertexReport {
    /// Stable, or degenerate with every non-zero eigenvalue negative.
    ///
    /// The second case covers vertices that attract along some directions and
    /// are neutral along the rest, such as the end points of edge continua.
    pub fn is_attracting_candidate(&self) -> bool {
        let tol = zero_tolerance(&self.eigenvalues);
        match self.classification {
            Classification::Stable => true,
            Classification::Degenerate => self.eigenvalues.iter().all(|l| *l <= tol),
            _ => false,
        }
    }
}

/// Eigenvalues `(1 − 2η_i) F_i` at one vertex.
pub fn vertex_eigenvalues(model: ModelVariant, profile: ActionProfile, params: &ValidParams) -> [f64; 4] {
    let vertex = PopulationState::vertex(profile);
    let c = vertex.to_array();
    core::array::from_fn(|i| (1.0 - 2.0 * c[i]) * fitness_difference(model, Role::ALL[i], &vertex, params))
}

/// Reports for all 16 vertices, ordered by `(x, y, z, w)` read as a binary
/// number: `(0,0,0,0)` first and `(1,1,1,1)` last.
pub fn vertex_reports(model: ModelVariant, params: &ValidParams) -> Vec<VertexReport> {
    (0..16)
        .map(|k| {
            let profile = ActionProfile::from_index(15 - k);
            let eigenvalues = vertex_eigenvalues(model, profile, params);
            VertexReport {
                profile,
                vertex: PopulationState::vertex(profile),
                eigenvalues,
                classification: classify(&eigenvalues),
            }
        })
        .collect()
}

/// Settings for the interior root search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    pub n_starts: usize,
    pub max_iter: usize,
    /// Maximum residual `‖F‖∞` accepted as a root.
    pub tol: f64,
    /// Accepted roots must lie in `(margin, 1 − margin)^4`.
    pub margin: f64,
    /// Roots closer than this in the infinity norm are merged.
    pub dedup_tol: f64,
    /// Seed of the digit scrambling of the start sequence.
    pub seed: u64,
    /// Also start from the closed-form roots of each model.
    pub closed_form_seeds: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            n_starts: 64,
            max_iter: 200,
            tol: 1e-9,
            margin: 1e-6,
            dedup_tol: 1e-6,
            seed: 0,
            closed_form_seeds: true,
        }
    }
}

/// A rest point strictly inside the cube.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InteriorEquilibrium {
    pub point: PopulationState,
    /// `‖F‖∞` at the point.
    pub residual: f64,
}

const HALTON_BASES: [u64; 4] = [2, 3, 5, 7];
const HALTON_DIGITS: usize = 24;

/// Halton sequence in bases 2, 3, 5 and 7 with random digit permutations.
#[derive(Debug, Clone)]
pub struct ScrambledHalton {
    perms: [Vec<Vec<u64>>; 4],
    index: u64,
}

impl ScrambledHalton {
    pub fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let perms = HALTON_BASES.map(|b| {
            (0..HALTON_DIGITS)
                .map(|_| {
                    let mut p: Vec<u64> = (0..b).collect();
                    for i in (1..p.len()).rev() {
                        let j = rng.gen_range(0..=i);
                        p.swap(i, j);
                    }
                    p
                })
                .collect()
        });
        ScrambledHalton { perms, index: 1 }
    }
}

impl Iterator for ScrambledHalton {
    type Item = [f64; 4];

    fn next(&mut self) -> Option<[f64; 4]> {
        let n = self.index;
        self.index += 1;
        Some(core::array::from_fn(|d| {
            let b = HALTON_BASES[d];
            let mut k = n;
            let mut scale = 1.0 / b as f64;
            let mut v = 0.0;
            for digit in 0..HALTON_DIGITS {
                v += self.perms[d][digit][(k % b) as usize] as f64 * scale;
                k /= b;
                scale /= b as f64;
            }
            v
        }))
    }
}

fn norm_inf(v: &[f64; 4]) -> f64 {
    v.iter().fold(0.0, |m, x| f64::max(m, libm::fabs(*x)))
}

/// Damped Newton iteration on `F = 0` restricted to the coordinates in `free`.
///
/// Fixed coordinates keep their starting value. Returns the final point and
/// its residual if the iteration converged.
fn newton(field: &GapField, start: [f64; 4], free: [bool; 4], cfg: &SearchConfig) -> Option<([f64; 4], f64)> {
    let residual = |s: &[f64; 4]| {
        let f = field.eval(s);
        core::array::from_fn::<f64, 4, _>(|i| if free[i] { f[i] } else { 0.0 })
    };
    let mut s = start;
    let mut r = residual(&s);
    let mut rn = norm_inf(&r);
    for _ in 0..cfg.max_iter {
        if rn < cfg.tol * 1e-3 {
            break;
        }
        let jac = field.jacobian(&s);
        let m = Matrix4::from_fn(|i, j| {
            if free[i] {
                if free[j] { jac[i][j] } else { 0.0 }
            } else if i == j {
                1.0
            } else {
                0.0
            }
        });
        let rhs = Vector4::from_column_slice(&r);
        let step = match m.lu().solve(&rhs) {
            Some(d) if d.iter().all(|v| v.is_finite()) => d,
            _ => break,
        };
        let mut lambda = 1.0;
        let mut improved = false;
        for _ in 0..30 {
            let trial: [f64; 4] = core::array::from_fn(|i| s[i] - lambda * step[i]);
            let tr = residual(&trial);
            let tn = norm_inf(&tr);
            if tn < rn {
                s = trial;
                r = tr;
                rn = tn;
                improved = true;
                break;
            }
            lambda *= 0.5;
        }
        if !improved || s.iter().any(|v| !(-5.0..=6.0).contains(v)) {
            break;
        }
    }
    (rn < cfg.tol).then_some((s, rn))
}

fn push_unique(found: &mut Vec<InteriorEquilibrium>, point: [f64; 4], residual: f64, dedup_tol: f64) {
    let p = PopulationState::from_array(point);
    if let Some(existing) = found.iter_mut().find(|e| e.point.distance_inf(&p) < dedup_tol) {
        if residual < existing.residual {
            *existing = InteriorEquilibrium { point: p, residual };
        }
    } else {
        found.push(InteriorEquilibrium { point: p, residual });
    }
}

fn sort_points(found: &mut [InteriorEquilibrium]) {
    found.sort_by(|a, b| {
        a.point
            .to_array()
            .partial_cmp(&b.point.to_array())
            .unwrap_or(core::cmp::Ordering::Equal)
    });
}

/// Multi-start damped Newton search for rest points inside `(0, 1)^4`.
///
/// Starting points come from a scrambled Halton sequence and, when enabled,
/// from [`closed_form_roots`]. Only points with residual below `cfg.tol` and at
/// least `cfg.margin` away from every face are returned.
pub fn find_interior_equilibria(
    model: ModelVariant,
    params: &ValidParams,
    cfg: &SearchConfig,
) -> Vec<InteriorEquilibrium> {
    let field = GapField::new(model, params);
    let mut found = Vec::new();
    let inside = |s: &[f64; 4]| s.iter().all(|v| *v > cfg.margin && *v < 1.0 - cfg.margin);
    let mut try_start = |start: [f64; 4]| {
        if let Some((s, r)) = newton(&field, start, [true; 4], cfg) {
            if inside(&s) {
                push_unique(&mut found, s, r, cfg.dedup_tol);
            }
        }
    };
    if cfg.closed_form_seeds {
        for seed in closed_form_roots(model, params) {
            if seed.iter().all(|v| v.is_finite()) {
                try_start(seed);
            }
        }
    }
    for h in ScrambledHalton::new(cfg.seed).take(cfg.n_starts) {
        try_start(h.map(|v| 0.02 + 0.96 * v));
    }
    sort_points(&mut found);
    found
}

/// A rest point on a face of the cube with at least one coordinate in `{0, 1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryEquilibrium {
    pub point: PopulationState,
    /// Which coordinates are pinned at 0 or 1.
    pub fixed: [bool; 4],
    pub residual: f64,
}

/// Isolated rest points in the relative interior of the two- and
/// three-dimensional faces of the cube.
///
/// Edges carry no isolated rest points because the bracket term of the free
/// coordinate is constant along an edge; see [`equilibrium_edges`].
pub fn find_boundary_equilibria(
    model: ModelVariant,
    params: &ValidParams,
    cfg: &SearchConfig,
) -> Vec<BoundaryEquilibrium> {
    let field = GapField::new(model, params);
    let mut out = Vec::new();
    for mask in 1u32..15 {
        let fixed: [bool; 4] = core::array::from_fn(|i| mask & (1 << (3 - i)) != 0);
        let n_fixed = fixed.iter().filter(|f| **f).count();
        if n_fixed > 2 {
            continue;
        }
        for corner in 0u32..(1 << n_fixed) {
            let mut values = [0.0; 4];
            let mut bit = 0;
            for i in 0..4 {
                if fixed[i] {
                    values[i] = ((corner >> bit) & 1) as f64;
                    bit += 1;
                }
            }
            let mut found = Vec::new();
            for h in ScrambledHalton::new(cfg.seed).take(cfg.n_starts) {
                let start: [f64; 4] = core::array::from_fn(|i| if fixed[i] { values[i] } else { 0.02 + 0.96 * h[i] });
                if let Some((s, r)) = newton(&field, start, fixed.map(|f| !f), cfg) {
                    let ok = (0..4).all(|i| fixed[i] || (s[i] > cfg.margin && s[i] < 1.0 - cfg.margin));
                    if ok {
                        push_unique(&mut found, s, r, cfg.dedup_tol);
                    }
                }
            }
            out.extend(found.into_iter().map(|e| BoundaryEquilibrium { point: e.point, fixed, residual: e.residual }));
        }
    }
    out
}

/// An edge of the cube made entirely of rest points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumEdge {
    /// The coordinate that varies along the edge.
    pub free: Role,
    /// Values of the other coordinates; the entry of `free` is meaningless.
    pub anchor: PopulationState,
}

/// Edges of the cube on which the flow vanishes identically.
///
/// Along an edge only the free coordinate moves, and its bracket term does not
/// depend on it, so the edge is a continuum of rest points exactly when that
/// bracket vanishes at one end.
pub fn equilibrium_edges(model: ModelVariant, params: &ValidParams) -> Vec<EquilibriumEdge> {
    let mut out = Vec::new();
    for free in Role::ALL {
        for k in 0..8u32 {
            let mut anchor = [0.0; 4];
            let mut bit = 0;
            for (i, a) in anchor.iter_mut().enumerate() {
                if i != free.index() {
                    *a = ((k >> (2 - bit)) & 1) as f64;
                    bit += 1;
                }
            }
            let anchor = PopulationState::from_array(anchor);
            let f = fitness_difference(model, free, &anchor, params);
            let scale = params.values().iter().fold(1.0f64, |m, v| m.max(libm::fabs(*v)));
            if libm::fabs(f) <= ZERO_EIGENVALUE_TOL * scale {
                out.push(EquilibriumEdge { free, anchor });
            }
        }
    }
    out
}

/// Sufficient conditions under which the developer-investigation model has
/// no interior rest point: `v − b_fo > 0` or `0 < ε < 1`.
pub fn lemma_guarantees_no_interior(params: &GovernanceParams) -> bool {
    params.v - params.b_fo > 0.0 || (params.epsilon > 0.0 && params.epsilon < 1.0)
}

/// Model-aware form of [`lemma_guarantees_no_interior`]. When the commentariat
/// investigates regulators, the regulator bracket keeps a `b_R (1 − 2q)` term,
/// so `v > b_fo` no longer rules out a sign change and only `0 < ε < 1` applies.
pub fn lemma_guarantees_no_interior_in(model: ModelVariant, params: &GovernanceParams) -> bool {
    match model {
        ModelVariant::InvestigateDevelopers => lemma_guarantees_no_interior(params),
        ModelVariant::InvestigateRegulators => params.epsilon > 0.0 && params.epsilon < 1.0,
    }
}

/// The two root candidates as printed for the developer-investigation model,
/// evaluated verbatim. Non-finite entries are kept so callers can discard them.
pub fn printed_candidates(params: &GovernanceParams) -> [[f64; 4]; 2] {
    let GovernanceParams { c_i, c_r, p_w: p, epsilon: e, b_p, c_p, u, v, b_fo, .. } = *params;
    let big_v = v - b_fo;
    let bsum = params.b_i + params.c_w;
    let disc = -2.0 * (e - 1.0) * c_i * c_r * p * big_v * bsum
        + c_i * c_i * big_v * big_v
        + (e + 1.0) * (e + 1.0) * c_r * c_r * p * p * bsum * bsum;
    let sq = libm::sqrt(disc);
    let y = c_i / (p * bsum);
    let x1 = (-sq + c_i * (2.0 * p - 1.0) * big_v + (e + 1.0) * c_r * p * bsum) / (2.0 * c_i * p * big_v);
    let z1 = (sq + c_i * big_v + (e + 1.0) * c_r * p * bsum) / (2.0 * c_i * big_v);
    let w1 = -(b_p * (sq + c_i * (b_fo - v))) / (2.0 * u * c_r * p * bsum)
        + c_p * (sq + c_i * (b_fo - v) + (e + 1.0) * c_r * p * bsum) / (c_i * 2.0 * u * c_r)
        + (e - 3.0) * b_p * c_r / (2.0 * u * c_r);
    let x2 = (sq + c_i * (2.0 * p - 1.0) * big_v + (e + 1.0) * c_r * p * bsum) / (2.0 * c_i * p * big_v);
    let z2 = (-sq + c_i * big_v + (e + 1.0) * c_r * p * bsum) / (2.0 * c_i * big_v);
    let w2 = b_p * (sq + c_i * big_v) / (2.0 * u * c_r * p * bsum)
        + c_p * (-sq + c_i * (b_fo - v) + (e + 1.0) * c_r * p * bsum) / (2.0 * u * c_r * c_i)
        + (3.0 - e) * b_p * c_r / (2.0 * u * c_r);
    [[x1, y, z1, w1], [x2, y, z2, w2]]
}

/// Real roots of `a t² + b t + c = 0`, computed without cancellation.
fn real_quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    let mut roots = Vec::new();
    if a == 0.0 {
        if b != 0.0 {
            roots.push(-c / b);
        }
        return roots;
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return roots;
    }
    let q = -0.5 * (b + libm::copysign(libm::sqrt(disc), b));
    if q != 0.0 {
        roots.push(q / a);
        roots.push(c / q);
    } else {
        roots.push(0.0);
    }
    roots
}

/// Real solutions of `F = 0` obtained by elimination, whether or not they lie
/// in the cube. Degenerate parameter sets (vanishing denominators) give none.
///
/// For the developer-investigation model `y` is fixed by the commentariat
/// bracket, `a = 1 − x` solves a quadratic, and `z`, `w` follow from the user
/// and developer brackets. For the regulator-investigation model the user
/// bracket forces `z = −ε/(1 − ε)`, after which `x` and `w` are linear.
pub fn closed_form_roots(model: ModelVariant, params: &GovernanceParams) -> Vec<[f64; 4]> {
    let GovernanceParams { c_i, c_r, p_w: p, epsilon: e, b_p, b_r, c_p, u, v, b_fo, .. } = *params;
    let bsum = params.b_i + params.c_w;
    let mut out = Vec::new();
    if p == 0.0 || bsum == 0.0 {
        return out;
    }
    let y = c_i / (p * bsum);
    match model {
        ModelVariant::InvestigateDevelopers => {
            let big_v = v - b_fo;
            for a in real_quadratic_roots(p * c_i * big_v, c_r * bsum * p * (1.0 + e) - c_i * big_v, -c_r * bsum) {
                let z = -a * p * e / (1.0 - a * p * (1.0 + e));
                let w = (c_p - y * b_p + 2.0 * a * y * p * b_p) / (a * y * p * u);
                out.push([1.0 - a, y, z, w]);
            }
        }
        ModelVariant::InvestigateRegulators => {
            if e == 1.0 {
                return out;
            }
            let z = -e / (1.0 - e);
            let g = (b_fo - v) * (1.0 - z);
            let q = (y * (b_r + g) - c_r) / (y * (2.0 * b_r + g));
            let w = c_p / (u * y * (1.0 - q));
            out.push([1.0 - q / p, y, z, w]);
        }
    }
    out.retain(|s| s.iter().all(|v| v.is_finite()));
    out
}

/// Closed interval used for random parameter draws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub const fn point(v: f64) -> Self {
        Interval { lo: v, hi: v }
    }

    pub fn is_well_formed(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite() && self.lo <= self.hi
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        let t: f64 = rng.gen();
        self.lo + t * (self.hi - self.lo)
    }
}

/// Sampling box for the census. `u` is drawn from `u_over_v · v`, so its upper
/// limit moves with the drawn `v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamRanges {
    pub b_i: Interval,
    pub b_u: Interval,
    pub b_p: Interval,
    pub b_r: Interval,
    pub b_fo: Interval,
    pub c_i: Interval,
    pub c_w: Interval,
    pub epsilon: Interval,
    pub c_p: Interval,
    pub u_over_v: Interval,
    pub v: Interval,
    pub c_r: Interval,
    pub p_w: Interval,
}

impl ParamRanges {
    /// The ranges of the published bar-chart experiment.
    pub fn appendix() -> Self {
        let unit = Interval::new(0.0, 1.0);
        let four = Interval::new(0.0, 4.0);
        ParamRanges {
            b_i: four,
            b_u: four,
            b_p: four,
            b_r: four,
            b_fo: Interval::new(0.0, 5.0),
            c_i: unit,
            c_w: unit,
            epsilon: Interval::new(-2.0, 1.0),
            c_p: unit,
            u_over_v: Interval::new(0.0, 5.0),
            v: unit,
            c_r: unit,
            p_w: unit,
        }
    }

    /// Degenerate box holding every parameter at the given values.
    pub fn fixed(params: &GovernanceParams) -> Self {
        let ratio = if params.v == 0.0 { 0.0 } else { params.u / params.v };
        let mut r = ParamRanges::appendix();
        for name in PARAM_NAMES {
            if name != "u" {
                r.set(name, Interval::point(params.get(name).unwrap_or(0.0)));
            }
        }
        r.u_over_v = Interval::point(ratio);
        r
    }

    fn set(&mut self, name: &str, iv: Interval) {
        match name {
            "b_i" => self.b_i = iv,
            "b_u" => self.b_u = iv,
            "b_p" => self.b_p = iv,
            "b_r" => self.b_r = iv,
            "b_fo" => self.b_fo = iv,
            "c_i" => self.c_i = iv,
            "c_w" => self.c_w = iv,
            "epsilon" => self.epsilon = iv,
            "c_p" => self.c_p = iv,
            "v" => self.v = iv,
            "c_r" => self.c_r = iv,
            "p_w" => self.p_w = iv,
            _ => {}
        }
    }

    fn intervals(&self) -> [Interval; 13] {
        [
            self.b_i, self.b_u, self.b_p, self.b_r, self.b_fo, self.c_i, self.c_w, self.epsilon, self.c_p,
            self.u_over_v, self.v, self.c_r, self.p_w,
        ]
    }

    pub fn is_well_formed(&self) -> bool {
        self.intervals().iter().all(Interval::is_well_formed)
    }

    /// Draw one parameter set. Draw `index` of a given `seed` is independent of
    /// every other index, so samples can be generated in any order.
    pub fn sample(&self, seed: u64, index: u64) -> GovernanceParams {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        self.sample_with(&mut rng)
    }

    pub fn sample_with<R: Rng>(&self, rng: &mut R) -> GovernanceParams {
        let b_i = self.b_i.sample(rng);
        let b_u = self.b_u.sample(rng);
        let b_p = self.b_p.sample(rng);
        let b_r = self.b_r.sample(rng);
        let b_fo = self.b_fo.sample(rng);
        let c_i = self.c_i.sample(rng);
        let c_w = self.c_w.sample(rng);
        let epsilon = self.epsilon.sample(rng);
        let c_p = self.c_p.sample(rng);
        let v = self.v.sample(rng);
        let u = self.u_over_v.sample(rng) * v;
        let c_r = self.c_r.sample(rng);
        let p_w = self.p_w.sample(rng);
        GovernanceParams { b_i, b_u, b_p, b_r, b_fo, c_i, c_w, epsilon, c_p, u, v, c_r, p_w }
    }
}

/// Histogram of interior-root counts over random parameter draws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumCensus {
    pub model: ModelVariant,
    pub n_samples: usize,
    pub histogram: BTreeMap<usize, usize>,
    pub parameter_ranges: ParamRanges,
    pub seed: u64,
}

impl EquilibriumCensus {
    pub fn from_counts(
        model: ModelVariant,
        ranges: ParamRanges,
        seed: u64,
        counts: impl IntoIterator<Item = usize>,
    ) -> Self {
        let mut histogram = BTreeMap::new();
        let mut n_samples = 0;
        for c in counts {
            *histogram.entry(c).or_insert(0) += 1;
            n_samples += 1;
        }
        EquilibriumCensus { model, n_samples, histogram, parameter_ranges: ranges, seed }
    }

    pub fn frequency(&self, count: usize) -> usize {
        self.histogram.get(&count).copied().unwrap_or(0)
    }

    /// Most frequent count, the smallest one on ties.
    pub fn mode(&self) -> Option<usize> {
        self.histogram.iter().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0))).map(|(k, _)| *k)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CensusError {
    #[error("at least one sample is required")]
    NoSamples,
    #[error("parameter ranges must be finite with lo <= hi")]
    MalformedRanges,
    #[error("sample {index} is not a valid parameter set: {source}")]
    InvalidSample { index: u64, source: ParamError },
}

/// Number of interior rest points for sample `index` of a census.
pub fn census_sample_count(
    model: ModelVariant,
    ranges: &ParamRanges,
    seed: u64,
    index: u64,
    search: &SearchConfig,
) -> Result<usize, CensusError> {
    let params = ranges
        .sample(seed, index)
        .validate()
        .map_err(|source| CensusError::InvalidSample { index, source })?;
    Ok(find_interior_equilibria(model, &params, search).len())
}

/// Count interior rest points for `n_samples` random parameter sets.
pub fn census_interior_equilibria(
    model: ModelVariant,
    ranges: &ParamRanges,
    n_samples: usize,
    seed: u64,
    search: &SearchConfig,
) -> Result<EquilibriumCensus, CensusError> {
    if n_samples == 0 {
        return Err(CensusError::NoSamples);
    }
    if !ranges.is_well_formed() {
        return Err(CensusError::MalformedRanges);
    }
    let counts = (0..n_samples as u64)
        .map(|i| census_sample_count(model, ranges, seed, i, search))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(EquilibriumCensus::from_counts(model, *ranges, seed, counts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Action;
    use proptest::prelude::*;

    const M1: ModelVariant = ModelVariant::InvestigateDevelopers;
    const M2: ModelVariant = ModelVariant::InvestigateRegulators;

    fn caption_params() -> GovernanceParams {
        GovernanceParams::replicator_baseline()
    }

    fn report(model: ModelVariant, p: &GovernanceParams, v: [u8; 4]) -> VertexReport {
        let reports = vertex_reports(model, &p.validate().unwrap());
        let k = (v[0] as usize) << 3 | (v[1] as usize) << 2 | (v[2] as usize) << 1 | v[3] as usize;
        reports[k]
    }

    #[test]
    fn origin_eigenvalues_model_i() {
        let p = caption_params();
        let r = report(M1, &p, [0, 0, 0, 0]);
        assert_eq!(r.eigenvalues, [-p.c_i, p.epsilon * p.b_u * p.p_w, -p.c_p, -p.c_r]);
        assert_eq!(r.classification, Classification::Saddle);
        let neg = GovernanceParams { epsilon: -0.1, ..p };
        assert_eq!(report(M1, &neg, [0, 0, 0, 0]).classification, Classification::Stable);
    }

    #[test]
    fn full_cooperation_model_ii() {
        let p = caption_params();
        let r = report(M2, &p, [1, 1, 1, 1]);
        let expect = [-p.b_u, -p.b_r + p.c_r, p.c_p - p.u, p.c_i - p.p_w * (p.b_i + p.c_w)];
        let mut got = r.eigenvalues;
        let mut want = expect;
        got.sort_by(|a, b| a.partial_cmp(b).unwrap());
        want.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() < 1e-12);
        }
    }

    #[test]
    fn informed_no_adoption_vertex_is_degenerate() {
        let r = report(M1, &caption_params(), [1, 0, 0, 0]);
        assert_eq!(r.eigenvalues[1], 0.0);
        assert_eq!(r.classification, Classification::Degenerate);
    }

    #[test]
    fn classification_rules() {
        assert_eq!(classify(&[-1.0, -2.0, -0.5, -3.0]), Classification::Stable);
        assert_eq!(classify(&[1.0, 2.0, 0.5, 3.0]), Classification::Unstable);
        assert_eq!(classify(&[1.0, -2.0, 0.5, 3.0]), Classification::Saddle);
        assert_eq!(classify(&[1.0, -2.0, 1e-13, 3.0]), Classification::Degenerate);
        assert_eq!(classify(&[1e3, -2.0, 1e-10, 3.0]), Classification::Degenerate);
    }

    #[test]
    fn lemma_examples() {
        let base = GovernanceParams::ZERO;
        assert!(lemma_guarantees_no_interior(&GovernanceParams { v: 1.0, b_fo: 0.5, epsilon: -0.5, ..base }));
        assert!(lemma_guarantees_no_interior(&GovernanceParams { v: 0.5, b_fo: 1.0, epsilon: 0.5, ..base }));
        assert!(!lemma_guarantees_no_interior(&GovernanceParams { v: 0.5, b_fo: 1.0, epsilon: -0.1, ..base }));
        assert!(!lemma_guarantees_no_interior_in(M2, &GovernanceParams { v: 1.0, b_fo: 0.5, epsilon: -0.5, ..base }));
        assert!(lemma_guarantees_no_interior_in(M2, &GovernanceParams { v: 0.5, b_fo: 1.0, epsilon: 0.5, ..base }));
    }

    #[test]
    fn halton_points_are_in_unit_cube_and_distinct() {
        let pts: Vec<_> = ScrambledHalton::new(7).take(64).collect();
        for p in &pts {
            assert!(p.iter().all(|v| *v > 0.0 && *v < 1.0));
        }
        for i in 0..pts.len() {
            for j in 0..i {
                assert_ne!(pts[i], pts[j]);
            }
        }
    }

    #[test]
    fn quadratic_roots() {
        let mut r = real_quadratic_roots(1.0, -3.0, 2.0);
        r.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(r, [1.0, 2.0]);
        assert!(real_quadratic_roots(1.0, 0.0, 1.0).is_empty());
        assert_eq!(real_quadratic_roots(0.0, 2.0, -1.0), [0.5]);
    }

    #[test]
    fn edge_continua_of_model_i() {
        let p = caption_params().validate().unwrap();
        let edges = equilibrium_edges(M1, &p);
        let user_edges: Vec<_> = edges.iter().filter(|e| e.free == Role::User).collect();
        for w in [0.0, 1.0] {
            assert!(user_edges.iter().any(|e| e.anchor.x == 1.0 && e.anchor.z == 0.0 && e.anchor.w == w));
        }
    }

    #[test]
    fn edge_continua_of_model_ii() {
        let p = caption_params().validate().unwrap();
        let edges = equilibrium_edges(M2, &p);
        for z in [0.0, 1.0] {
            assert!(edges
                .iter()
                .any(|e| e.free == Role::User && e.anchor.x == 1.0 && e.anchor.w == 0.0 && e.anchor.z == z));
        }
    }

    /// Parameters with a known interior root of the developer-investigation model.
    fn interior_example() -> GovernanceParams {
        GovernanceParams {
            b_i: 1.4,
            b_u: 2.0,
            b_p: 0.6,
            b_r: 1.0,
            b_fo: 3.9,
            c_i: 0.92,
            c_w: 0.3,
            epsilon: -0.2,
            c_p: 0.3,
            u: 1.9,
            v: 0.5,
            c_r: 0.66,
            p_w: 1.0,
        }
    }

    #[test]
    fn closed_form_roots_solve_the_brackets() {
        let p = interior_example();
        let vp = p.validate().unwrap();
        let field = GapField::new(M1, &vp);
        let roots = closed_form_roots(M1, &p);
        assert_eq!(roots.len(), 2);
        for r in &roots {
            assert!(norm_inf(&field.eval(r)) < 1e-12, "{r:?}");
        }
    }

    #[test]
    fn newton_finds_the_in_cube_roots() {
        let p = interior_example();
        let vp = p.validate().unwrap();
        let inside: Vec<_> = closed_form_roots(M1, &p)
            .into_iter()
            .filter(|r| r.iter().all(|v| *v > 0.0 && *v < 1.0))
            .collect();
        assert_eq!(inside.len(), 2);
        let cfg = SearchConfig { closed_form_seeds: false, ..Default::default() };
        let found = find_interior_equilibria(M1, &vp, &cfg);
        assert_eq!(found.len(), inside.len());
        for r in inside {
            let r = PopulationState::from_array(r);
            assert!(found.iter().any(|e| e.point.distance_inf(&r) < 1e-8));
        }
    }

    #[test]
    fn second_printed_candidate_matches_elimination() {
        let p = interior_example();
        let printed = printed_candidates(&p);
        let roots = closed_form_roots(M1, &p);
        let hit = roots.iter().any(|r| (0..4).all(|i| (r[i] - printed[1][i]).abs() < 1e-9));
        assert!(hit, "{printed:?} vs {roots:?}");
        // The first candidate shares x, y and z with an exact root.
        let hit_xyz = roots.iter().any(|r| (0..3).all(|i| (r[i] - printed[0][i]).abs() < 1e-9));
        assert!(hit_xyz);
    }

    #[test]
    fn census_is_deterministic_and_small() {
        let ranges = ParamRanges::appendix();
        let cfg = SearchConfig::default();
        let a = census_interior_equilibria(M1, &ranges, 40, 3, &cfg).unwrap();
        let b = census_interior_equilibria(M1, &ranges, 40, 3, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.histogram.values().sum::<usize>(), 40);
        assert!(a.histogram.keys().all(|k| *k <= 2));
    }

    #[test]
    fn census_with_lemma_point_range() {
        let p = GovernanceParams { v: 1.0, b_fo: 0.5, ..caption_params() };
        let c = census_interior_equilibria(M1, &ParamRanges::fixed(&p), 1, 0, &SearchConfig::default()).unwrap();
        assert_eq!(c.histogram, BTreeMap::from([(0, 1)]));
        assert_eq!(ParamRanges::fixed(&p).sample(0, 0), p);
    }

    #[test]
    fn census_rejects_bad_input() {
        let mut r = ParamRanges::appendix();
        assert_eq!(census_interior_equilibria(M1, &r, 0, 0, &SearchConfig::default()), Err(CensusError::NoSamples));
        r.c_i = Interval::new(1.0, 0.0);
        assert_eq!(
            census_interior_equilibria(M1, &r, 5, 0, &SearchConfig::default()),
            Err(CensusError::MalformedRanges)
        );
    }

    #[test]
    fn appendix_samples_stay_in_range() {
        let r = ParamRanges::appendix();
        for i in 0..200 {
            let p = r.sample(11, i);
            assert!(p.validate().is_ok());
            assert!(p.u <= 5.0 * p.v && p.u >= 0.0);
            assert!((-2.0..=1.0).contains(&p.epsilon));
        }
        assert_ne!(r.sample(11, 0), r.sample(11, 1));
        assert_eq!(r.sample(11, 5), r.sample(11, 5));
    }

    #[test]
    fn boundary_search_stays_on_faces() {
        let p = caption_params().validate().unwrap();
        let cfg = SearchConfig { n_starts: 16, ..Default::default() };
        for model in ModelVariant::ALL {
            let field = GapField::new(model, &p);
            for b in find_boundary_equilibria(model, &p, &cfg) {
                let s = b.point.to_array();
                let f = field.eval(&s);
                for i in 0..4 {
                    if b.fixed[i] {
                        assert!(s[i] == 0.0 || s[i] == 1.0);
                    } else {
                        assert!(f[i].abs() < 1e-9);
                    }
                }
            }
        }
    }

    fn appendix_params() -> impl Strategy<Value = GovernanceParams> {
        (any::<u64>(), 0u64..1000).prop_map(|(s, i)| ParamRanges::appendix().sample(s, i))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn never_more_than_two_interior_roots(p in appendix_params()) {
            for model in [M1, M2] {
                let found = find_interior_equilibria(model, &p.validate().unwrap(), &SearchConfig::default());
                prop_assert!(found.len() <= 2);
                for e in found {
                    prop_assert!(e.residual < 1e-9);
                    prop_assert!(e.point.to_array().iter().all(|v| *v > 1e-6 && *v < 1.0 - 1e-6));
                }
            }
        }

        #[test]
        fn lemma_conditions_leave_no_interior_root(p in appendix_params(), flip in any::<bool>(), e in 0.01f64..0.99) {
            let p = if flip {
                GovernanceParams { v: p.b_fo + 0.1 + p.v, ..p }
            } else {
                GovernanceParams { epsilon: e, ..p }
            };
            prop_assert!(lemma_guarantees_no_interior(&p));
            prop_assert!(find_interior_equilibria(M1, &p.validate().unwrap(), &SearchConfig::default()).is_empty());
        }

        #[test]
        fn epsilon_condition_also_covers_model_ii(p in appendix_params(), e in 0.01f64..0.99) {
            let p = GovernanceParams { epsilon: e, ..p };
            prop_assert!(find_interior_equilibria(M2, &p.validate().unwrap(), &SearchConfig::default()).is_empty());
        }

        #[test]
        fn model_ii_closed_forms(p in appendix_params(), s in prop::array::uniform4(0.0f64..=1.0)) {
            let [x, y, z, w] = s;
            let vp = p.validate().unwrap();
            let a = 1.0 - x;
            let q = p.p_w * a;
            let expect = [
                y * p.p_w * (p.b_i + p.c_w) - p.c_i,
                p.b_u * (z + p.epsilon * (1.0 - z)) * (w + q * (1.0 - 2.0 * w)),
                p.u * w * y * (1.0 - q) - p.c_p,
                y * (p.b_r * (1.0 - 2.0 * q) + (p.b_fo - p.v) * (1.0 - z) * (1.0 - q)) - p.c_r,
            ];
            let st = PopulationState::from_array(s);
            for r in Role::ALL {
                let got = fitness_difference(M2, r, &st, &vp);
                prop_assert!((got - expect[r.index()]).abs() < 1e-10);
            }
        }

        #[test]
        fn vertex_eigenvalue_sign_at_origin_follows_epsilon(p in appendix_params()) {
            prop_assume!(p.epsilon != 0.0 && p.b_u > 0.0 && p.p_w > 0.0);
            prop_assume!(p.c_i > 0.0 && p.c_p > 0.0 && p.c_r > 0.0);
            for model in [M1, M2] {
                let r = vertex_reports(model, &p.validate().unwrap())[0];
                prop_assert_eq!(r.profile, ActionProfile::uniform(Action::Defect));
                prop_assert_eq!(r.classification == Classification::Stable, p.epsilon < 0.0);
            }
        }
    }
}
