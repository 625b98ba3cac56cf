use govdyn_core::equilibrium::{closed_form_roots, printed_candidates};
use govdyn_core::finite::fixation_from_fitness;
use govdyn_core::oracle::*;
use govdyn_core::*;
use proptest::prelude::*;

fn appendix_params() -> impl Strategy<Value = GovernanceParams> {
    (any::<u64>(), 0u64..10_000).prop_map(|(s, i)| ParamRanges::appendix().sample(s, i))
}

fn wide_params() -> impl Strategy<Value = GovernanceParams> {
    (prop::array::uniform13(-10.0f64..10.0), -5.0f64..=1.0, 0.0f64..=1.0).prop_map(|(v, e, pw)| {
        let mut p = GovernanceParams::from_values(v);
        p.epsilon = e;
        p.p_w = pw;
        for c in ["c_i", "c_w", "c_p", "u", "v", "c_r"] {
            let x = p.get(c).unwrap();
            p.set(c, x.abs());
        }
        p
    })
}

proptest! {
    #[test]
    fn payoffs_equal_transcribed_tables_bit_for_bit(p in wide_params()) {
        let vp = p.validate().unwrap();
        for model in ModelVariant::ALL {
            for profile in ActionProfile::all() {
                let got = payoff(model, profile, &vp).to_array();
                let want = table_payoff_for(model, profile, &p);
                for i in 0..4 {
                    prop_assert_eq!(got[i].to_bits(), want[i].to_bits(), "{} {:?}", model, profile);
                }
            }
        }
    }

    #[test]
    fn fitness_differences_equal_brute_force(p in wide_params(), s in prop::array::uniform4(0.0f64..=1.0)) {
        let vp = p.validate().unwrap();
        let st = PopulationState::from_array(s);
        for model in ModelVariant::ALL {
            for role in Role::ALL {
                let a = fitness_difference(model, role, &st, &vp);
                let b = brute_fitness_difference(model, role, &s, &p);
                prop_assert!((a - b).abs() < 1e-10 * (1.0 + b.abs()));
            }
        }
    }

    #[test]
    fn vertex_spectra_match_printed_tables(p in appendix_params()) {
        let vp = p.validate().unwrap();
        for model in ModelVariant::ALL {
            let reports = vertex_reports(model, &vp);
            for v in TABLE_VERTEX_ORDER {
                let k = (v[0] as usize) << 3 | (v[1] as usize) << 2 | (v[2] as usize) << 1 | v[3] as usize;
                let analytic = reports[k].eigenvalues;
                let table = corrected_vertex_eigenvalues(model, v, &p);
                match model {
                    ModelVariant::InvestigateDevelopers => {
                        for i in 0..4 {
                            prop_assert!((analytic[i] - table[i]).abs() < 1e-10, "{:?} {:?} {:?}", v, analytic, table);
                        }
                    }
                    ModelVariant::InvestigateRegulators => {
                        prop_assert!(matches_as_multiset(&analytic, &table, 1e-10), "{:?} {:?} {:?}", v, analytic, table);
                    }
                }
            }
        }
    }

    #[test]
    fn errata_really_contradict_the_payoff_tables(p in appendix_params()) {
        prop_assume!(p.epsilon.abs() > 1e-3 && p.p_w > 1e-3 && p.p_w < 1.0 - 1e-3 && p.b_u > 1e-3);
        let vp = p.validate().unwrap();
        for e in VERTEX_TABLE_ERRATA {
            let printed = printed_vertex_eigenvalues(e.model, e.vertex, &p)[e.column];
            let fixed = corrected_entry(&e, &p);
            prop_assert!((printed - fixed).abs() > 1e-6, "{}", e.note);
            let k = (e.vertex[0] as usize) << 3 | (e.vertex[1] as usize) << 2 | (e.vertex[2] as usize) << 1 | e.vertex[3] as usize;
            let analytic = vertex_reports(e.model, &vp)[k].eigenvalues;
            prop_assert!(analytic.iter().any(|a| (a - fixed).abs() < 1e-10));
            prop_assert!(!matches_as_multiset(&analytic, &printed_vertex_eigenvalues(e.model, e.vertex, &p), 1e-10));
        }
    }

    #[test]
    fn vertex_jacobian_is_diagonal(p in appendix_params()) {
        let vp = p.validate().unwrap();
        for model in ModelVariant::ALL {
            for r in vertex_reports(model, &vp) {
                let jac = finite_difference_jacobian(model, &p, &r.vertex.to_array(), 1e-6);
                for i in 0..4 {
                    for j in 0..4 {
                        let want = if i == j { r.eigenvalues[i] } else { 0.0 };
                        prop_assert!((jac[i][j] - want).abs() < 1e-6, "{:?} J[{}][{}]={} want {}", r.vertex, i, j, jac[i][j], want);
                    }
                }
            }
        }
    }

    #[test]
    fn fixation_sum_equals_geometric_form(delta in -5.0f64..5.0, beta in 0.0f64..3.0, z in 2usize..=200) {
        let a = fixation_from_fitness(delta, 0.0, z, beta);
        let b = fixation_closed_form(delta, beta, z);
        prop_assert!((a - b).abs() < 1e-12, "{} vs {}", a, b);
    }
}

#[test]
fn monte_carlo_fixation_agrees_with_formula() {
    let p = GovernanceParams::media_incentive_baseline().validate().unwrap();
    let model = ModelVariant::InvestigateDevelopers;
    let ctx = ActionProfile::new(Action::Defect, Action::Cooperate, Action::Defect, Action::Defect);
    // A developer switching to safe development in this context.
    let rho = fixation_probability(model, Role::Developer, Action::Cooperate, ctx, 100, 0.1, &p).unwrap();
    let f_mut = payoff(model, ctx.with(Role::Developer, Action::Cooperate), &p).developer;
    let f_res = payoff(model, ctx, &p).developer;
    let trials = 100_000;
    let mc = monte_carlo_fixation(f_mut, f_res, 100, 0.1, trials, 42);
    let se = (rho * (1.0 - rho) / trials as f64).sqrt();
    assert!(rho > 1e-4, "choose a transition with a measurable rate, got {rho}");
    assert!((mc - rho).abs() < 3.0 * se, "mc {mc} formula {rho} se {se}");
}

#[test]
fn printed_candidates_versus_exact_roots() {
    let mut checked = 0;
    for i in 0..20_000 {
        let p = ParamRanges::appendix().sample(5, i);
        let roots = closed_form_roots(ModelVariant::InvestigateDevelopers, &p);
        let printed = printed_candidates(&p);
        if roots.len() < 2 || !printed.iter().flatten().all(|v| v.is_finite()) {
            continue;
        }
        let vp = p.validate().unwrap();
        let field = GapField::new(ModelVariant::InvestigateDevelopers, &vp);
        let res = |s: &[f64; 4]| field.eval(s).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let scale = printed.iter().flatten().fold(1.0f64, |m, v| m.max(v.abs()));
        // The second printed candidate is an exact root.
        assert!(res(&printed[1]) < 1e-8 * scale, "{p:?}");
        checked += 1;
    }
    assert!(checked > 1000);
}

#[test]
fn grid_scan_brackets_every_newton_root() {
    let mut with_roots = 0;
    let mut n = 0;
    let mut i = 0;
    while n < 60 {
        let p = ParamRanges::appendix().sample(17, i);
        i += 1;
        let vp = p.validate().unwrap();
        for model in ModelVariant::ALL {
            // Bias the sample toward parameter sets that admit interior roots.
            let roots = find_interior_equilibria(model, &vp, &SearchConfig::default());
            if roots.is_empty() && i % 10 != 0 {
                continue;
            }
            n += 1;
            let scan = grid_scan(model, &p, 50);
            if scan.flagged.is_empty() {
                assert!(roots.is_empty());
            }
            for r in &roots {
                let s = r.point.to_array();
                if s.iter().all(|v| *v > 0.01 && *v < 0.99) {
                    assert!(scan.covers(&s), "{model} {p:?} root {s:?} not in a flagged cell");
                    with_roots += 1;
                }
            }
        }
    }
    assert!(with_roots > 0);
}
