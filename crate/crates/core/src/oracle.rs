//! Independent reference implementations used to validate the engine.
//!
//! Nothing here shares code paths with the production modules beyond the
//! parameter and profile types: payoffs are transcribed again row by row,
//! vertex spectra are taken from the published tables, and the grid scan
//! evaluates fitness differences from its own eight-term sums.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::params::{Action, ActionProfile, GovernanceParams, ModelVariant, Role};

/// Payoffs `(com, user, dev, reg)` read off the published tables. Rows are
/// keyed by their printed labels.
pub fn table_payoff(model: ModelVariant, com: &str, user: &str, dev: &str, reg: &str, p: &GovernanceParams) -> [f64; 4] {
    let (b_i, c_i, b_u, b_p, c_p, b_r, c_r) = (p.b_i, p.c_i, p.b_u, p.b_p, p.c_p, p.b_r, p.c_r);
    let (p_w, c_w, e, u, v, b_fo) = (p.p_w, p.c_w, p.epsilon, p.u, p.v, p.b_fo);
    let d_com = (1.0 - p_w) * b_i - p_w * c_w;
    let row = (com, user, dev, reg);
    let common = match row {
        ("C", "N", "C", "C") => Some([-c_i, 0.0, -c_p, -c_r]),
        ("C", "N", "C", "D") => Some([-c_i, 0.0, -c_p, 0.0]),
        ("C", "N", "D", "C") => Some([-c_i, 0.0, 0.0, -c_r]),
        ("C", "N", "D", "D") => Some([-c_i, 0.0, 0.0, 0.0]),
        ("D", "N", "C", "C") => Some([0.0, 0.0, -c_p, -c_r]),
        ("D", "N", "C", "D") => Some([0.0, 0.0, -c_p, 0.0]),
        ("D", "N", "D", "C") => Some([0.0, 0.0, 0.0, -c_r]),
        ("D", "N", "D", "D") => Some([0.0, 0.0, 0.0, 0.0]),
        ("C", "CT", "C", "C") => Some([b_i - c_i, b_u, b_p - c_p, b_r - c_r]),
        ("C", "CT", "D", "D") => Some([b_i - c_i, 0.0, 0.0, 0.0]),
        ("D", "CT", "C", "C") => Some([d_com, (1.0 - p_w) * b_u, (1.0 - p_w) * b_p - c_p, (1.0 - p_w) * b_r - c_r]),
        ("D", "CT", "D", "D") => Some([d_com, p_w * e * b_u, p_w * b_p, p_w * b_r]),
        _ => None,
    };
    if let Some(r) = common {
        return r;
    }
    match (model, row) {
        (ModelVariant::InvestigateDevelopers, ("C", "CT", "C", "D")) => [b_i - c_i, b_u, b_p - c_p, b_r],
        (ModelVariant::InvestigateDevelopers, ("C", "CT", "D", "C")) => [b_i - c_i, 0.0, 0.0, -c_r],
        (ModelVariant::InvestigateDevelopers, ("D", "CT", "C", "D")) => {
            [d_com, (1.0 - p_w) * b_u, (1.0 - p_w) * b_p - c_p, (1.0 - p_w) * b_r]
        }
        (ModelVariant::InvestigateDevelopers, ("D", "CT", "D", "C")) => {
            [d_com, p_w * e * b_u, p_w * (b_p - u), p_w * (b_r + b_fo - v) - c_r]
        }
        (ModelVariant::InvestigateRegulators, ("C", "CT", "C", "D")) => [b_i - c_i, 0.0, -c_p, 0.0],
        (ModelVariant::InvestigateRegulators, ("C", "CT", "D", "C")) => {
            [b_i - c_i, e * b_u, b_p - u, b_r - c_r - v + b_fo]
        }
        (ModelVariant::InvestigateRegulators, ("D", "CT", "C", "D")) => [d_com, p_w * b_u, p_w * b_p - c_p, p_w * b_r],
        (ModelVariant::InvestigateRegulators, ("D", "CT", "D", "C")) => [
            d_com,
            (1.0 - p_w) * e * b_u,
            (1.0 - p_w) * (b_p - u),
            (b_r - c_r + b_fo - v) * (1.0 - p_w) - p_w * c_r,
        ],
        _ => panic!("no table row {com} {user} {dev} {reg}"),
    }
}

/// [`table_payoff`] for a profile.
pub fn table_payoff_for(model: ModelVariant, profile: ActionProfile, p: &GovernanceParams) -> [f64; 4] {
    let l = |r: Role| profile.get(r).label(r);
    table_payoff(model, l(Role::Commentariat), l(Role::User), l(Role::Developer), l(Role::Regulator), p)
}

/// The 16 rows of [`table_payoff_for`], indexed by [`ActionProfile::index`].
pub fn transcribed_table(model: ModelVariant, p: &GovernanceParams) -> [[f64; 4]; 16] {
    core::array::from_fn(|i| table_payoff_for(model, ActionProfile::from_index(i), p))
}

/// Fitness difference of `role` at `s = (x, y, z, w)` from an explicit sum
/// over the eight co-player profiles of a transcribed table.
pub fn brute_from_table(table: &[[f64; 4]; 16], role: Role, s: &[f64; 4]) -> f64 {
    let mut total = 0.0;
    for (bits, row) in table.iter().enumerate() {
        let profile = ActionProfile::from_index(bits);
        let mut weight = 1.0;
        for other in Role::ALL {
            if other == role {
                continue;
            }
            weight *= match profile.get(other) {
                Action::Cooperate => s[other.index()],
                Action::Defect => 1.0 - s[other.index()],
            };
        }
        let sign = match profile.get(role) {
            Action::Cooperate => 1.0,
            Action::Defect => -1.0,
        };
        total += sign * weight * row[role.index()];
    }
    total
}

/// [`brute_from_table`] on a freshly transcribed table.
pub fn brute_fitness_difference(model: ModelVariant, role: Role, s: &[f64; 4], p: &GovernanceParams) -> f64 {
    brute_from_table(&transcribed_table(model, p), role, s)
}

/// Central-difference Jacobian of the replicator field `η_i (1 − η_i) F_i`.
pub fn finite_difference_jacobian(model: ModelVariant, p: &GovernanceParams, s: &[f64; 4], h: f64) -> [[f64; 4]; 4] {
    let table = transcribed_table(model, p);
    let field = |q: &[f64; 4]| -> [f64; 4] {
        core::array::from_fn(|i| q[i] * (1.0 - q[i]) * brute_from_table(&table, Role::ALL[i], q))
    };
    let mut jac = [[0.0; 4]; 4];
    for j in 0..4 {
        let mut hi = *s;
        let mut lo = *s;
        hi[j] += h;
        lo[j] -= h;
        let (fh, fl) = (field(&hi), field(&lo));
        for i in 0..4 {
            jac[i][j] = (fh[i] - fl[i]) / (2.0 * h);
        }
    }
    jac
}

/// A published vertex-table entry that disagrees with the payoff tables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Erratum {
    pub model: ModelVariant,
    pub vertex: [u8; 4],
    /// Column of the printed table (0-based).
    pub column: usize,
    pub note: &'static str,
}

/// Every entry of the vertex tables that contradicts the payoff tables.
pub const VERTEX_TABLE_ERRATA: [Erratum; 3] = [
    Erratum {
        model: ModelVariant::InvestigateDevelopers,
        vertex: [0, 0, 1, 0],
        column: 2,
        note: "developer eigenvalue printed as a regulator expression of the other model; the tables give c_P",
    },
    Erratum {
        model: ModelVariant::InvestigateRegulators,
        vertex: [0, 1, 0, 0],
        column: 1,
        note: "user eigenvalue printed as +b_U eps p_w; the tables give -b_U eps p_w",
    },
    Erratum {
        model: ModelVariant::InvestigateRegulators,
        vertex: [0, 0, 1, 1],
        column: 3,
        note: "user eigenvalue printed as -b_U (1 - p_w); the tables give +b_U (1 - p_w)",
    },
];

/// The 16 vertices in the printed row order.
pub const TABLE_VERTEX_ORDER: [[u8; 4]; 16] = [
    [0, 0, 0, 0],
    [0, 0, 0, 1],
    [0, 0, 1, 0],
    [0, 1, 0, 0],
    [1, 0, 0, 0],
    [1, 1, 0, 0],
    [1, 0, 1, 0],
    [1, 0, 0, 1],
    [0, 1, 0, 1],
    [0, 1, 1, 0],
    [0, 0, 1, 1],
    [1, 1, 1, 0],
    [1, 1, 0, 1],
    [1, 0, 1, 1],
    [0, 1, 1, 1],
    [1, 1, 1, 1],
];

/// The printed eigenvalue row of a vertex, verbatim (errata included).
///
/// The developer-investigation table lists eigenvalues in `x, y, z, w` order;
/// the regulator-investigation table uses a different column order per row, so
/// its rows are compared as multisets.
pub fn printed_vertex_eigenvalues(model: ModelVariant, vertex: [u8; 4], p: &GovernanceParams) -> [f64; 4] {
    let (b_i, c_i, b_u, b_p, c_p, b_r, c_r) = (p.b_i, p.c_i, p.b_u, p.b_p, p.c_p, p.b_r, p.c_r);
    let (pw, c_w, e, u, v, b_fo) = (p.p_w, p.c_w, p.epsilon, p.u, p.v, p.b_fo);
    let mixed = b_fo + b_r - c_r - v - b_fo * pw - 2.0 * b_r * pw + v * pw;
    match model {
        ModelVariant::InvestigateDevelopers => match vertex {
            [0, 0, 0, 0] => [-c_i, e * b_u * pw, -c_p, -c_r],
            [0, 0, 0, 1] => [-c_i, e * b_u * pw, -c_p, c_r],
            [0, 0, 1, 0] => [-c_i, b_u * (1.0 - pw), mixed, -c_r],
            [0, 1, 0, 0] => [pw * (b_i + c_w) - c_i, -e * b_u * pw, -2.0 * b_p * pw + b_p - c_p, -pw * (v - b_fo) - c_r],
            [1, 0, 0, 0] => [c_i, 0.0, -c_p, -c_r],
            [1, 1, 0, 0] => [c_i - pw * (b_i + c_w), 0.0, b_p - c_p, -c_r],
            [1, 0, 1, 0] => [c_i, b_u, c_p, -c_r],
            [1, 0, 0, 1] => [c_i, 0.0, -c_p, c_r],
            [0, 1, 0, 1] => [pw * (b_i + c_w) - c_i, -e * b_u * pw, -pw * (2.0 * b_p - u) + b_p - c_p, pw * (v - b_fo) + c_r],
            [0, 1, 1, 0] => [pw * (b_i + c_w) - c_i, -b_u * (1.0 - pw), 2.0 * b_p * pw - b_p + c_p, -c_r],
            [0, 0, 1, 1] => [-c_i, b_u * (1.0 - pw), c_p, c_r],
            [1, 1, 1, 0] => [c_i - pw * (b_i + c_w), -b_u, c_p - b_p, -c_r],
            [1, 1, 0, 1] => [c_i - pw * (b_i + c_w), 0.0, b_p - c_p, c_r],
            [1, 0, 1, 1] => [c_i, b_u, c_p, c_r],
            [0, 1, 1, 1] => [pw * (b_i + c_w) - c_i, -b_u * (1.0 - pw), pw * (2.0 * b_p - u) - b_p + c_p, c_r],
            [1, 1, 1, 1] => [c_i - pw * (b_i + c_w), -b_u, c_p - b_p, c_r],
            _ => panic!("not a vertex"),
        },
        ModelVariant::InvestigateRegulators => match vertex {
            [0, 0, 0, 0] => [-c_i, -c_p, -c_r, b_u * e * pw],
            [0, 0, 0, 1] => [-c_i, -c_p, c_r, b_u * e * (1.0 - pw)],
            [0, 0, 1, 0] => [-c_i, c_p, -c_r, b_u * pw],
            [0, 1, 0, 0] => [-c_p, b_u * e * pw, mixed, -c_i + b_i * pw + c_w * pw],
            [1, 0, 0, 0] => [0.0, c_i, -c_p, -c_r],
            [1, 1, 0, 0] => [0.0, -c_p, b_fo + b_r - c_r - v, c_i - b_i * pw - c_w * pw],
            [1, 0, 1, 0] => [0.0, c_i, c_p, -c_r],
            [1, 0, 0, 1] => [c_i, -c_p, c_r, b_u * e],
            [0, 1, 0, 1] => [
                -b_u * e * (1.0 - pw),
                -c_p + u - u * pw,
                -b_fo - b_r + c_r + v + b_fo * pw + 2.0 * b_r * pw - v * pw,
                -c_i + b_i * pw + c_w * pw,
            ],
            [0, 1, 1, 0] => [c_p, -b_u * pw, b_r - c_r - 2.0 * b_r * pw, -c_i + b_i * pw + c_w * pw],
            [0, 0, 1, 1] => [-c_i, c_p, c_r, -b_u * (1.0 - pw)],
            [1, 1, 1, 0] => [0.0, c_p, b_r - c_r, c_i - b_i * pw - c_w * pw],
            [1, 1, 0, 1] => [-b_u * e, -c_p + u, -b_fo - b_r + c_r + v, c_i - b_i * pw - c_w * pw],
            [1, 0, 1, 1] => [b_u, c_i, c_p, c_r],
            [0, 1, 1, 1] => [b_u * (-1.0 + pw), -b_r + c_r + 2.0 * b_r * pw, c_p - u + u * pw, -c_i + b_i * pw + c_w * pw],
            [1, 1, 1, 1] => [-b_u, -b_r + c_r, c_p - u, c_i - b_i * pw - c_w * pw],
            _ => panic!("not a vertex"),
        },
    }
}

/// Corrected value of an erratum entry, derived from the payoff tables.
pub fn corrected_entry(erratum: &Erratum, p: &GovernanceParams) -> f64 {
    match (erratum.model, erratum.vertex) {
        (ModelVariant::InvestigateDevelopers, [0, 0, 1, 0]) => p.c_p,
        (ModelVariant::InvestigateRegulators, [0, 1, 0, 0]) => -p.b_u * p.epsilon * p.p_w,
        (ModelVariant::InvestigateRegulators, [0, 0, 1, 1]) => p.b_u * (1.0 - p.p_w),
        _ => panic!("unknown erratum"),
    }
}

/// Printed row with the errata replaced by their corrected values.
pub fn corrected_vertex_eigenvalues(model: ModelVariant, vertex: [u8; 4], p: &GovernanceParams) -> [f64; 4] {
    let mut row = printed_vertex_eigenvalues(model, vertex, p);
    for e in VERTEX_TABLE_ERRATA.iter().filter(|e| e.model == model && e.vertex == vertex) {
        row[e.column] = corrected_entry(e, p);
    }
    row
}

/// Whether `a` is a permutation of `b` up to `tol`, trying all 24 pairings.
pub fn matches_as_multiset(a: &[f64; 4], b: &[f64; 4], tol: f64) -> bool {
    fn go(a: &[f64; 4], b: &[f64; 4], used: &mut [bool; 4], i: usize, tol: f64) -> bool {
        if i == 4 {
            return true;
        }
        for j in 0..4 {
            if !used[j] && libm::fabs(a[i] - b[j]) <= tol {
                used[j] = true;
                if go(a, b, used, i + 1, tol) {
                    return true;
                }
                used[j] = false;
            }
        }
        false
    }
    go(a, b, &mut [false; 4], 0, tol)
}

/// `(1 − e^{−βΔ}) / (1 − e^{−ZβΔ})`, with the neutral limit `1/Z`.
pub fn fixation_closed_form(delta: f64, beta: f64, z: usize) -> f64 {
    let x = beta * delta;
    if x == 0.0 {
        return 1.0 / z as f64;
    }
    let zf = z as f64;
    if x > 0.0 {
        libm::expm1(-x) / libm::expm1(-zf * x)
    } else {
        // (e^y − 1) / (e^{Zy} − 1) with y = −x, in log form once e^{Zy} overflows.
        let y = -x;
        let den = libm::expm1(zf * y);
        if den.is_finite() {
            libm::expm1(y) / den
        } else {
            libm::exp(libm::log(libm::expm1(y)) - zf * y - libm::log1p(-libm::exp(-zf * y)))
        }
    }
}

/// Fraction of `trials` in which a single mutant takes over a population of
/// `z`, simulated on the embedded birth-death chain of the imitation process.
pub fn monte_carlo_fixation(f_mutant: f64, f_resident: f64, z: usize, beta: f64, trials: u64, seed: u64) -> f64 {
    let x = beta * (f_mutant - f_resident);
    // Given a change occurs, it is an increase with probability e^x / (1 + e^x).
    let p_up = 1.0 / (1.0 + libm::exp(-x));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fixed = 0u64;
    for _ in 0..trials {
        let mut k = 1usize;
        while k > 0 && k < z {
            if rng.gen_bool(p_up) {
                k += 1;
            } else {
                k -= 1;
            }
        }
        if k == z {
            fixed += 1;
        }
    }
    fixed as f64 / trials as f64
}

/// Result of a sign-change scan over a regular grid of cells.
#[derive(Debug, Clone, PartialEq)]
pub struct GridScan {
    pub cells_per_axis: usize,
    /// Flagged cells as integer coordinates.
    pub flagged: Vec<[usize; 4]>,
    /// Connected groups of flagged cells (cells sharing at least a corner).
    pub clusters: usize,
}

impl GridScan {
    /// Whether the cell holding `s` (or any cell touching it, when `s` lies
    /// on a cell boundary) is flagged.
    pub fn covers(&self, s: &[f64; 4]) -> bool {
        let n = self.cells_per_axis as f64;
        self.flagged.iter().any(|c| (0..4).all(|i| s[i] * n >= c[i] as f64 - 1e-9 && s[i] * n <= (c[i] + 1) as f64 + 1e-9))
    }
}

/// Flag every cell of a `cells³`-per-face grid of `[0, 1]^4` on which all
/// four bracket terms strictly change sign between the cell corners.
///
/// Each bracket is multilinear and independent of its own coordinate, so its
/// range over a cell is spanned by the corner values and it can be tabulated
/// on the three-dimensional grid of the remaining coordinates.
pub fn grid_scan(model: ModelVariant, p: &GovernanceParams, cells: usize) -> GridScan {
    let nodes = cells + 1;
    let h = 1.0 / cells as f64;
    let idx3 = |a: usize, b: usize, c: usize, n: usize| (a * n + b) * n + c;
    let table = transcribed_table(model, p);
    // straddle[i][cell3] is true when F_i takes both signs on that 3-cell.
    let mut straddle = vec![vec![false; cells * cells * cells]; 4];
    for role in Role::ALL {
        let i = role.index();
        let others = role.others().map(|r| r.index());
        // F_i is multilinear in the co-player shares, so its corner values fix it.
        let corner: [f64; 8] = core::array::from_fn(|k| {
            let mut s = [0.0; 4];
            s[others[0]] = (k >> 2) as f64;
            s[others[1]] = ((k >> 1) & 1) as f64;
            s[others[2]] = (k & 1) as f64;
            brute_from_table(&table, role, &s)
        });
        let mut values = vec![0.0; nodes * nodes * nodes];
        for a in 0..nodes {
            let ta = a as f64 * h;
            let fa: [f64; 4] = core::array::from_fn(|k| corner[k] * (1.0 - ta) + corner[k + 4] * ta);
            for b in 0..nodes {
                let tb = b as f64 * h;
                let fb = [fa[0] * (1.0 - tb) + fa[2] * tb, fa[1] * (1.0 - tb) + fa[3] * tb];
                for c in 0..nodes {
                    let tc = c as f64 * h;
                    values[idx3(a, b, c, nodes)] = fb[0] * (1.0 - tc) + fb[1] * tc;
                }
            }
        }
        for a in 0..cells {
            for b in 0..cells {
                for c in 0..cells {
                    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
                    for corner in 0..8 {
                        let v = values[idx3(a + (corner >> 2), b + ((corner >> 1) & 1), c + (corner & 1), nodes)];
                        lo = lo.min(v);
                        hi = hi.max(v);
                    }
                    straddle[i][idx3(a, b, c, cells)] = lo < 0.0 && hi > 0.0;
                }
            }
        }
    }
    let mut flagged = Vec::new();
    // The commentariat bracket ignores x, so prune on (y, z, w) first.
    for k1 in 0..cells {
        for k2 in 0..cells {
            for k3 in 0..cells {
                if !straddle[0][idx3(k1, k2, k3, cells)] {
                    continue;
                }
                for k0 in 0..cells {
                    let k = [k0, k1, k2, k3];
                    let rest = Role::ALL[1..].iter().all(|role| {
                        let o = role.others().map(|r| k[r.index()]);
                        straddle[role.index()][idx3(o[0], o[1], o[2], cells)]
                    });
                    if rest {
                        flagged.push(k);
                    }
                }
            }
        }
    }
    flagged.sort_unstable();
    let clusters = count_clusters(&flagged);
    GridScan { cells_per_axis: cells, flagged, clusters }
}

fn count_clusters(cells: &[[usize; 4]]) -> usize {
    let n = cells.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    // `cells` is sorted lexicographically by construction.
    for i in 0..n {
        for j in (i + 1)..n {
            if cells[j][0] > cells[i][0] + 1 {
                break;
            }
            let adjacent = (0..4).all(|d| cells[i][d].abs_diff(cells[j][d]) <= 1);
            if adjacent {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    (0..n).filter(|&i| find(&mut parent, i) == i).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_limits() {
        assert_eq!(fixation_closed_form(0.0, 1.0, 50), 0.02);
        assert!((fixation_closed_form(1e-9, 1.0, 10) - 0.1).abs() < 1e-9);
        let strong = fixation_closed_form(10.0, 1.0, 100);
        assert!((strong - (1.0 - libm::exp(-10.0))).abs() < 1e-12);
        assert!(fixation_closed_form(-10.0, 1.0, 200) >= 0.0);
        assert!(fixation_closed_form(-3.0, 0.5, 200) < 1e-100);
    }

    #[test]
    fn multiset_matching() {
        assert!(matches_as_multiset(&[1.0, 2.0, 3.0, 4.0], &[4.0, 3.0, 2.0, 1.0], 0.0));
        assert!(!matches_as_multiset(&[1.0, 1.0, 3.0, 4.0], &[1.0, 3.0, 3.0, 4.0], 1e-12));
    }

    #[test]
    fn clusters_join_diagonal_neighbours() {
        assert_eq!(count_clusters(&[[0, 0, 0, 0], [1, 1, 1, 1], [3, 3, 3, 3]]), 2);
        assert_eq!(count_clusters(&[]), 0);
    }
}
