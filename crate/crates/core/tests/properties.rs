//! Property tests for the grammar, the engine's effect contract, the
//! evaluator and the generator.

mod common;

use std::collections::BTreeMap;

use proptest::prelude::*;

use clawforge::agents::RandomValidAgent;
use clawforge::command::{parse_command, Effect, EffectKind, Engine};
use clawforge::evaluator::{
    build_eval_state, run_checks, CheckArg, CheckFamily, CheckSpec, CheckTarget, OutputTarget, Predicate,
};
use clawforge::generator::{builtin_templates, compile_task, generate_task, PromptStyle, FAMILIES};
use clawforge::state::WorkflowState;

fn value() -> impl Strategy<Value = String> {
    prop_oneof![
        "[a-zA-Z0-9_./#@:-]{1,12}",
        "[a-zA-Z0-9 '\"]{0,16}",
        "--[a-z]{1,6}",
        Just(String::new()),
    ]
}

fn line() -> impl Strategy<Value = String> {
    let family = prop::sample::select(vec!["tasks", "calendar", "email", "file", "weather", "openclaw", "curl"]);
    let verb = prop::collection::vec("[a-z][a-z-]{0,8}", 0..3);
    let flags = prop::collection::vec(("[a-z][a-z_]{0,6}", value()), 0..4);
    (family, verb, flags).prop_map(|(family, verb, flags)| {
        let mut parts = vec![family.to_string()];
        parts.extend(verb);
        for (k, v) in flags {
            parts.push(format!("--{k}"));
            parts.push(if v.contains('\'') {
                format!("\"{}\"", v.replace('"', ""))
            } else {
                format!("'{v}'")
            });
        }
        parts.join(" ")
    })
}

fn output_check(i: usize, weight: f64, required: bool, pass: bool) -> CheckSpec {
    CheckSpec {
        id: format!("c{i}"),
        family: CheckFamily::Output,
        target: CheckTarget::Output(OutputTarget::FinalExit),
        predicate: Predicate::Equals,
        matchers: BTreeMap::new(),
        arg: Some(CheckArg::Int(if pass { 0 } else { 1 })),
        weight,
        required,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn render_reparses_to_the_same_command(text in prop_oneof![line(), ".{0,40}"]) {
        if let Ok(cmd) = parse_command(&text) {
            let again = parse_command(&cmd.render()).expect("rendered commands parse");
            prop_assert_eq!(again, cmd);
        }
    }

    #[test]
    fn failures_never_touch_state(seed in any::<u64>(), family in prop::sample::select(FAMILIES.to_vec())) {
        let tmpl = builtin_templates().into_iter().find(|t| t.family == family).unwrap();
        let task = compile_task(&tmpl, seed % 64, PromptStyle::Directive).unwrap();
        let mut state = task.initial_state().unwrap();
        let engine = Engine::default();
        let mut fuzz = RandomValidAgent::new(seed);
        for _ in 0..40 {
            let line = fuzz.next_line();
            let before = state.clone();
            let r = engine.execute_line(&line, &mut state);
            prop_assert!(r.exit_code == 0 || r.exit_code == 1, "{}: {}", line, r.stderr);
            if r.exit_code == 0 {
                let want = common::expected_effects(&before, &state).map_err(TestCaseError::fail)?;
                prop_assert_eq!(want, common::effect_keys(&r.effects), "{}", line);
            } else {
                prop_assert_eq!(&state, &before);
                prop_assert!(r.effects.is_empty());
            }
        }
    }

    #[test]
    fn arbitrary_text_never_panics_the_engine(text in ".{0,60}") {
        let mut state = WorkflowState::base();
        let before = state.clone();
        let r = Engine::default().execute_line(&text, &mut state);
        prop_assert!((0..=2).contains(&r.exit_code));
        if r.exit_code != 0 {
            prop_assert_eq!(state, before);
        }
    }

    #[test]
    fn partial_credit_is_bounded_and_monotone(
        checks in prop::collection::vec((1u32..5, any::<bool>(), any::<bool>()), 1..8),
        flip in any::<prop::sample::Index>(),
    ) {
        let mut checks = checks;
        checks[0].1 = true;
        let mut state = WorkflowState::base();
        let r = Engine::default().execute_line("tasks list", &mut state);
        let eval = build_eval_state([("tasks list", &r)], &state);
        let suite = |cs: &[(u32, bool, bool)]| -> Vec<CheckSpec> {
            cs.iter().enumerate().map(|(i, (w, req, pass))| output_check(i, f64::from(*w), *req, *pass)).collect()
        };
        let v = run_checks(&eval, &suite(&checks)).unwrap();
        prop_assert!((0.0..=1.0).contains(&v.partial_score));
        prop_assert_eq!(v.strict_pass, checks.iter().all(|c| !c.1 || c.2));
        if v.strict_pass && checks.iter().all(|c| c.2) {
            prop_assert_eq!(v.partial_score, 1.0);
        }
        // Turning one failing check into a passing one never lowers either score.
        let i = flip.index(checks.len());
        let mut better = checks.clone();
        better[i].2 = true;
        let w = run_checks(&eval, &suite(&better)).unwrap();
        prop_assert!(w.partial_score >= v.partial_score);
        prop_assert!(w.strict_pass || !v.strict_pass);
    }

    #[test]
    fn generation_is_a_function_of_family_seed_and_style(
        family in prop::sample::select(FAMILIES.to_vec()),
        seed in 0u64..10_000,
    ) {
        let tmpl = builtin_templates().into_iter().find(|t| t.family == family).unwrap();
        for style in PromptStyle::ALL {
            let a = generate_task(&tmpl, seed, style).unwrap();
            let b = generate_task(&tmpl, seed, style).unwrap();
            prop_assert_eq!(a.to_canonical(), b.to_canonical());
        }
        let d = compile_task(&tmpl, seed, PromptStyle::Directive).unwrap();
        let c = compile_task(&tmpl, seed, PromptStyle::Conversational).unwrap();
        prop_assert_eq!(d.reference_trajectory, c.reference_trajectory);
        prop_assert_eq!(d.initial_state_overrides, c.initial_state_overrides);
    }
}

#[test]
fn diff_oracle_rejects_wrong_effect_sets() {
    let engine = Engine::default();
    let mut state = WorkflowState::base();
    let before = state.clone();
    let r = engine.execute_line("tasks add --title 'Oracle probe'", &mut state);
    let want = common::expected_effects(&before, &state).unwrap();
    assert_eq!(want, common::effect_keys(&r.effects));
    let mut doubled = r.effects.clone();
    doubled.push(r.effects[0].clone());
    assert_ne!(want, common::effect_keys(&doubled));
    let wrong = vec![Effect::new(EffectKind::TasksCompleted, [("title", "Oracle probe".to_string())])];
    assert_ne!(want, common::effect_keys(&wrong));
    assert_ne!(want, common::effect_keys(&[]));
}
