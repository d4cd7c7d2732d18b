use std::collections::BTreeMap;
use std::path::PathBuf;

use teachable::dialog::{DialogError, Phase, Session, Template, TurnInput, UNDO_CAPACITY};
use teachable::dsl::Branch;
use teachable::gateway::transcript::Step;
use teachable::gateway::{parse_transcript, Gateway};
use teachable::kb::KnowledgeBase;
use teachable::screenworld::{load_app_dir, World};

fn fresh() -> Session {
    let apps = load_app_dir(&Gateway::bundled_apps_dir()).unwrap();
    Session::with_kb(KnowledgeBase::new(), World::new(apps))
}

fn transcript(name: &str) -> Vec<Step> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/transcripts").join(format!("{name}.transcript"));
    let text = std::fs::read_to_string(path).unwrap();
    parse_transcript(&text).unwrap().into_iter().map(|l| l.step).collect()
}

/// Plays the turns and environment lines of a transcript, returning the agent templates.
fn play(s: &mut Session, steps: &[Step]) -> Vec<Template> {
    let mut out = Vec::new();
    for step in steps {
        match step {
            Step::Turn(input) => {
                let outcome = s.handle(input.clone()).unwrap();
                s.state().check_invariants().unwrap();
                out.extend(outcome.agent.map(|m| m.template));
            }
            Step::Env(env) => {
                for (k, v) in env {
                    s.world_mut().set_env(k, v);
                }
            }
            _ => {}
        }
    }
    out
}

#[test]
fn coffee_rule_asks_in_teaching_order() {
    let mut s = fresh();
    let templates = play(&mut s, &transcript("coffee_rule"));
    use Template::*;
    assert_eq!(
        templates,
        vec![
            AskBool,
            AskValue,
            DemoValue,
            ConfirmValue,
            ConfirmBool,
            AskProc,
            DemoProc,
            ConfirmProc,
            AskElse,
            ConfirmRule,
            Done
        ]
    );
    assert_eq!(s.state().phase, Phase::Done);
    let name = "order_a_cup_of_iced_cappuccino";
    let hot = BTreeMap::from([("weather.temperature".to_string(), "90".to_string())]);
    let cold = BTreeMap::from([("weather.temperature".to_string(), "60".to_string())]);
    assert_eq!(s.run_script(name, &hot).unwrap().branch(), Some(Branch::Then));
    assert_eq!(s.run_script(name, &cold).unwrap().branch(), Some(Branch::Else));
}

#[test]
fn undo_with_empty_history_says_so() {
    let mut s = fresh();
    let before = s.state().clone();
    let out = s.handle(TurnInput::Undo).unwrap();
    assert_eq!(out.agent.unwrap().template, Template::NothingToUndo);
    assert_eq!(s.state(), &before);
    assert_eq!(s.undo(), Err(DialogError::NothingToUndo));
}

#[test]
fn two_undos_go_back_two_turns() {
    let mut s = fresh();
    s.world_mut().set_env("weather.temperature", "72");
    s.handle(TurnInput::text("If it's hot, order a cup of Iced Cappuccino.")).unwrap();
    let after_first = (s.state().clone(), s.kb().clone(), s.lexicon().clone());
    s.handle(TurnInput::text("It is hot when the temperature is above 85 degrees Fahrenheit.")).unwrap();
    let out = s.handle(TurnInput::text("Let me demonstrate.")).unwrap();
    assert_eq!(out.demonstration, Some(true));
    let again = s.handle(TurnInput::text("undo")).unwrap().agent.unwrap();
    assert_eq!(again.template, Template::AskValue);
    let again = s.handle(TurnInput::Undo).unwrap().agent.unwrap();
    assert_eq!(again.template, Template::AskBool);
    assert_eq!((s.state().clone(), s.kb().clone(), s.lexicon().clone()), after_first);
    // two taught turns plus the first undo exchange
    let retracted = s.transcript().iter().filter(|r| r.retracted).count();
    assert_eq!(retracted, 6);
}

#[test]
fn illegal_input_leaves_the_session_untouched() {
    let mut s = fresh();
    let before = (s.state().clone(), s.kb().clone(), s.transcript().len());
    let err = s.handle(TurnInput::DemoFinish).unwrap_err();
    assert!(matches!(err, DialogError::IllegalInputForPhase { phase: "awaitingCommand", .. }));
    assert_eq!((s.state().clone(), s.kb().clone(), s.transcript().len()), before);
    assert_eq!(s.undo_depth(), 0);
}

#[test]
fn unknown_option_is_rejected() {
    let mut s = fresh();
    s.world_mut().set_env("reviews.rating", "3.5");
    s.handle(TurnInput::text("If the restaurant is good, reserve a table.")).unwrap();
    s.handle(TurnInput::text("The restaurant is good if the rating is better than 2.")).unwrap();
    assert_eq!(s.state().phase, Phase::AwaitingDisambiguation);
    assert_eq!(s.handle(TurnInput::Option { index: 9 }), Err(DialogError::NoSuchOption(9)));
    let out = s.handle(TurnInput::Option { index: 0 }).unwrap();
    assert_eq!(out.agent.unwrap().template, Template::AskValue);
}

#[test]
fn unparseable_command_asks_to_rephrase() {
    let mut s = fresh();
    let out = s.handle(TurnInput::text("order a coffee")).unwrap();
    let mv = out.agent.unwrap();
    assert_eq!(mv.template, Template::Rephrase);
    assert_eq!(s.state().phase, Phase::AwaitingCommand);
}

#[test]
fn known_procedure_commands_execute() {
    let mut s = fresh();
    play(&mut s, &transcript("coffee_rule"));
    let out = s.handle(TurnInput::text("order hot coffee")).unwrap();
    assert_eq!(out.agent.unwrap().template, Template::Executed);
    assert!(out.screen_changed);
    assert_eq!(s.world().current().0, "Starbucks");
}

#[test]
fn undo_history_is_bounded() {
    let mut s = fresh();
    for i in 0..UNDO_CAPACITY + 10 {
        s.handle(TurnInput::text(&format!("blorp {i}"))).unwrap();
    }
    assert_eq!(s.undo_depth(), UNDO_CAPACITY);
    for _ in 0..UNDO_CAPACITY {
        s.undo().unwrap();
    }
    assert_eq!(s.undo(), Err(DialogError::NothingToUndo));
}

#[test]
fn every_bundled_transcript_keeps_invariants() {
    for name in [
        "coffee_rule",
        "task1",
        "task2",
        "task3",
        "task4",
        "disambiguation",
        "disambiguation_worse",
        "generalization_l1",
        "generalization_l2",
        "generalization_l3",
    ] {
        let mut s = fresh();
        let templates = play(&mut s, &transcript(name));
        assert_eq!(templates.last(), Some(&Template::Done), "{name}");
    }
}
