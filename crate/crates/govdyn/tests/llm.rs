use govdyn::core::{Action, ActionProfile, GovernanceParams, ModelVariant, ParamRanges, Role};
use govdyn::llm::*;
use proptest::prelude::*;

const FIXTURE: &str = include_str!("fixtures/appendix_regulator_prompt.txt");

fn all_cooperate() -> ProviderSpec {
    let names = GameConfig::one_shot(ProviderSpec::scripted_uniform(&[], vec![])).agent_names;
    ProviderSpec::scripted_uniform(&names, vec![ScriptedReply::Action(Action::Cooperate)])
}

fn appendix_game() -> GameConfig {
    let p = appendix_prompt_params().validate().unwrap();
    GameConfig::one_shot(all_cooperate()).with_weights_from(ModelVariant::InvestigateDevelopers, &p)
}

fn prompt_for(cfg: &GameConfig, agent: &str) -> String {
    render_prompt(DEFAULT_TEMPLATE, cfg, agent, 1, &History::default()).unwrap()
}

#[test]
fn regulator_prompt_matches_published_example() {
    let got = prompt_for(&appendix_game(), "regulator");
    assert_eq!(canonicalize(&got), canonicalize(FIXTURE));
    assert!(got.trim_end().ends_with("Output ONLY the choice."));
}

#[test]
fn personality_none_omits_intro_and_a_personality_adds_it() {
    let mut cfg = appendix_game();
    assert!(!prompt_for(&cfg, "developer").contains("You are None"));
    cfg.personalities[1] = Some("None".into());
    assert!(!prompt_for(&cfg, "developer").contains("You are None"));
    cfg.personalities[1] = Some("a cautious engineer".into());
    let p = prompt_for(&cfg, "developer");
    assert!(p.contains("\nYou are a cautious engineer.\n"));
    assert!(!prompt_for(&cfg, "user").contains("a cautious engineer"));
}

#[test]
fn opponents_follow_template_order() {
    let cfg = appendix_game();
    assert!(prompt_for(&cfg, "user").contains("You are user and the others are [regulator, developer, commentariat]."));
    assert!(prompt_for(&cfg, "commentariat").contains("the others are [regulator, developer, user]."));
}

#[test]
fn stopping_condition_drops_round_count() {
    let mut cfg = appendix_game();
    cfg.stopping_condition = Some("a player defects".into());
    assert!(!prompt_for(&cfg, "regulator").contains("rounds to decide"));
}

#[test]
fn render_errors() {
    let cfg = appendix_game();
    let h = History::default();
    assert_eq!(render_prompt(DEFAULT_TEMPLATE, &cfg, "judge", 1, &h), Err(PromptError::UnknownAgent("judge".into())));
    assert_eq!(
        render_prompt(DEFAULT_TEMPLATE, &cfg, "user", 2, &h),
        Err(PromptError::RoundOutOfRange { round: 2, n_rounds: 1 })
    );
    assert_eq!(
        render_prompt("Hello {audience}.", &cfg, "user", 1, &h),
        Err(PromptError::UnresolvedPlaceholder("audience".into()))
    );
    let mut bare = cfg.clone();
    bare.weights = None;
    assert_eq!(render_prompt(DEFAULT_TEMPLATE, &bare, "user", 1, &h), Err(PromptError::MissingWeights));
}

#[test]
fn label_neutrality_is_structural() {
    let p = appendix_prompt_params().validate().unwrap();
    let a = appendix_game();
    let mut b = GameConfig::one_shot(all_cooperate());
    b.strategy_labels = ["Option B".into(), "Option A".into()];
    b.first_label_action = Action::Defect;
    let b = b.with_weights_from(ModelVariant::InvestigateDevelopers, &p);
    let pa = prompt_for(&a, "regulator");
    let pb = prompt_for(&b, "regulator");
    assert_ne!(pa, pb);
    let clauses = |s: &str| {
        let mut v: Vec<String> = s
            .split("\n\n")
            .filter(|c| c.contains(" If the regulator chooses"))
            .map(|c| c.split_once(". ").unwrap().1.to_string())
            .collect();
        v.sort();
        v
    };
    assert_eq!(clauses(&pa).len(), 16);
    assert_eq!(clauses(&pa), clauses(&pb));
    let strip = |s: &str| s.replace("Option A", "#").replace("Option B", "#");
    let head = |s: &str| strip(s.split("Outcomes:").next().unwrap());
    let tail = |s: &str| strip(s.rsplit("\n\n").next().unwrap());
    assert_eq!(head(&pa), head(&pb));
    assert_eq!(tail(&pa), tail(&pb));
}

proptest! {
    #[test]
    fn prompts_are_deterministic(seed in any::<u64>(), i in 0u64..1000) {
        let p = ParamRanges::appendix().sample(seed, i).validate().unwrap();
        let cfg = GameConfig::one_shot(all_cooperate()).with_weights_from(ModelVariant::InvestigateRegulators, &p);
        for agent in &cfg.agent_names {
            prop_assert_eq!(prompt_for(&cfg, agent), prompt_for(&cfg, agent));
        }
    }

    #[test]
    fn weights_round_trip_to_tables(seed in any::<u64>(), i in 0u64..1000, flip in any::<bool>()) {
        let p = ParamRanges::appendix().sample(seed, i).validate().unwrap();
        let first = if flip { Action::Defect } else { Action::Cooperate };
        for model in ModelVariant::ALL {
            let w = weights_with_binding(model, &p, first);
            let back = tables_from_weights(&w, first);
            for profile in ActionProfile::all() {
                prop_assert_eq!(back[profile.index()], govdyn::core::payoff(model, profile, &p));
            }
        }
    }
}

fn scripted(script: Vec<(&str, Vec<ScriptedReply>)>, reps: usize) -> GameConfig {
    let spec = ProviderSpec::Scripted {
        model_name: "scripted".into(),
        script: script.into_iter().map(|(a, r)| (a.to_string(), r)).collect(),
    };
    let mut cfg = GameConfig::one_shot(spec);
    cfg.n_repetitions = reps;
    cfg.with_weights_from(ModelVariant::InvestigateDevelopers, &GovernanceParams::replicator_baseline().validate().unwrap())
}

fn run(cfg: &GameConfig) -> Vec<GameResult> {
    run_experiment(cfg, cfg.build_provider().as_ref(), DEFAULT_TEMPLATE).unwrap()
}

fn freq(f: &[RoleFrequency; 4], role: Role) -> RoleFrequency {
    *f.iter().find(|x| x.role == role).unwrap()
}

#[test]
fn all_cooperate_gives_frequency_one() {
    let mut cfg = appendix_game();
    cfg.n_repetitions = 10;
    let res = run(&cfg);
    assert_eq!(res.len(), 10);
    assert!(res.iter().all(|r| r.complete && r.calls.len() == 4));
    for f in aggregate(&res).unwrap() {
        assert_eq!((f.frequency, f.n_parsed, f.n_missing), (Some(1.0), 10, 0));
    }
}

#[test]
fn alternating_script_gives_one_half() {
    use ScriptedReply::Action as A;
    let alt = vec![A(Action::Cooperate), A(Action::Defect)];
    let cfg = scripted(
        vec![("regulator", alt.clone()), ("developer", alt.clone()), ("user", alt.clone()), ("commentariat", alt)],
        10,
    );
    let res = run(&cfg);
    assert_eq!(res[0].calls[0].decision, Some(Action::Cooperate));
    assert_eq!(res[1].calls[0].decision, Some(Action::Defect));
    for f in aggregate(&res).unwrap() {
        assert_eq!(f.frequency, Some(0.5));
    }
    assert_eq!(res, run(&cfg));
}

#[test]
fn hand_counted_frequencies_with_unparsed_replies() {
    use ScriptedReply::{Action as A, Text};
    let c = A(Action::Cooperate);
    let d = A(Action::Defect);
    let junk = Text { text: "I would rather not say".into() };
    let both = Text { text: "I choose Option A because Option B is risky".into() };
    let reg = vec![c.clone(), c.clone(), c.clone(), c.clone(), c.clone(), c.clone(), d.clone(), d.clone(), d.clone(), d.clone()];
    let user = vec![c.clone(), c.clone(), c.clone(), c.clone(), c.clone(), d.clone(), d.clone(), d.clone(), junk, both];
    let cfg = scripted(
        vec![("regulator", reg), ("developer", vec![d.clone()]), ("user", user), ("commentariat", vec![Text { text: "??".into() }])],
        10,
    );
    let res = run(&cfg);
    let f = aggregate(&res).unwrap();
    assert_eq!(freq(&f, Role::Regulator).frequency, Some(0.6));
    assert_eq!(freq(&f, Role::Developer).frequency, Some(0.0));
    let u = freq(&f, Role::User);
    assert_eq!((u.frequency, u.n_parsed, u.n_missing), (Some(0.625), 8, 2));
    let c = freq(&f, Role::Commentariat);
    assert_eq!((c.frequency, c.n_parsed, c.n_missing), (None, 0, 10));
    let raw = res[9].calls.iter().find(|c| c.role == Role::User).unwrap();
    assert_eq!(raw.response.as_deref(), Some("I choose Option A because Option B is risky"));
    assert!(matches!(raw.error, Some(CallError::Parse(_))));
    assert!(res.iter().all(|r| r.complete));
}

#[test]
fn unreachable_endpoint_records_errors() {
    let spec = ProviderSpec::RemoteChat(RemoteChatSpec {
        model_name: "gpt-4o".into(),
        endpoint: "http://127.0.0.1:9/v1/chat/completions".into(),
        api_key_env: None,
        timeout_secs: 2.0,
        retries: 1,
        backoff_ms: 1,
        temperature: None,
    });
    let mut cfg = GameConfig::one_shot(spec);
    cfg.n_repetitions = 2;
    let cfg = cfg.with_weights_from(ModelVariant::InvestigateDevelopers, &appendix_prompt_params().validate().unwrap());
    let res = run(&cfg);
    assert_eq!(res.len(), 2);
    for r in &res {
        assert!(!r.complete);
        assert_eq!(r.calls.len(), 4);
        assert!(r.calls.iter().all(|c| c.decision.is_none() && matches!(c.error, Some(CallError::Provider(_)))));
    }
    for f in aggregate(&res).unwrap() {
        assert_eq!((f.frequency, f.n_missing), (None, 2));
    }
}

#[test]
fn missing_api_key_is_a_call_error() {
    let spec = ProviderSpec::RemoteChat(RemoteChatSpec {
        model_name: "m".into(),
        endpoint: "http://127.0.0.1:9/".into(),
        api_key_env: Some("GOVDYN_TEST_KEY_THAT_IS_NOT_SET".into()),
        timeout_secs: 1.0,
        retries: 0,
        backoff_ms: 0,
        temperature: None,
    });
    let mut cfg = GameConfig::one_shot(spec);
    cfg.n_repetitions = 1;
    let cfg = cfg.with_weights_from(ModelVariant::InvestigateDevelopers, &appendix_prompt_params().validate().unwrap());
    let res = run(&cfg);
    assert!(matches!(&res[0].calls[0].error, Some(CallError::Provider(m)) if m.contains("GOVDYN_TEST_KEY_THAT_IS_NOT_SET")));
}

#[test]
fn config_validation() {
    let mut cfg = appendix_game();
    cfg.strategy_labels = ["Same".into(), "same".into()];
    assert_eq!(cfg.validate(), Err(GameConfigError::Labels));
    let mut cfg = appendix_game();
    cfg.weights = Some(vec![0.0; 63]);
    assert_eq!(cfg.validate(), Err(GameConfigError::WeightCount(63)));
    let mut cfg = appendix_game();
    cfg.n_rounds = 0;
    assert_eq!(cfg.validate(), Err(GameConfigError::NoRounds));
    assert!(aggregate(&[]).is_err());
}

#[test]
fn multi_round_history_is_rendered() {
    let mut cfg = appendix_game();
    cfg.n_rounds = 2;
    cfg.n_repetitions = 1;
    let res = run(&cfg);
    assert_eq!(res[0].calls.len(), 8);
    assert_eq!(res[0].calls[7].round, 2);
    let h = History { rounds: vec![cfg.agent_names.iter().map(|a| (a.clone(), "Option A".to_string())).collect()] };
    let p = render_prompt(DEFAULT_TEMPLATE, &cfg, "user", 2, &h).unwrap();
    assert!(p.contains("so far: {1: {regulator: Option A, developer: Option A, user: Option A, commentariat: Option A}}."));
    assert!(p.contains("There are 2 rounds to decide."));
}
