//! Scripted transcripts: user turns, expected agent moves, and assertions on
//! the knowledge base and on script runs. Turns go through the [`Gateway`]
//! exactly as UI messages do.
//!
//! ```text
//! # comment
//! ENV: weather.temperature=72
//! U: If it's hot, order a cup of Iced Cappuccino.
//! A: ask_bool "it's hot"
//! DEMO: launchApp(Weather); longClickSelect(current_temp)
//! ASSERT-KB: bool hot
//! ASSERT-PHASE: done
//! ASSERT-BRANCH: then weather.temperature=90 clicked="Iced Cappuccino"
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde_json::Value;
use thiserror::Error;

use super::protocol::{MessageKind, SessionMessage};
use super::server::{Gateway, GatewayError};
use crate::dialog::{Session, Template, TurnInput};
use crate::dsl::Expr;
use crate::kb::ValueSource;
use crate::screenworld::parse_action_list;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TranscriptError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: expected {expected}, got {actual}")]
    Mismatch { line: usize, expected: String, actual: String },
    #[error("line {line}: {source}")]
    Gateway { line: usize, source: GatewayError },
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Step {
    Turn(TurnInput),
    Expect { template: Template, args: Vec<String> },
    Env(BTreeMap<String, String>),
    AssertKb(Vec<String>),
    AssertPhase(String),
    AssertBranch {
        branch: String,
        script: Option<String>,
        clicked: Vec<String>,
        env: BTreeMap<String, String>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TranscriptLine {
    pub line: usize,
    pub step: Step,
}

/// Outcome of a passing run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TranscriptReport {
    pub turns: usize,
    pub checks: usize,
    /// Template ids of every agent move, in order.
    pub agent_templates: Vec<String>,
}

/// Splits on whitespace, keeping `"quoted text"` (also after `key=`) together.
pub fn split_quoted(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut quoted = false;
    let mut any = false;
    for c in s.chars() {
        match c {
            '"' => {
                quoted = !quoted;
                any = true;
            }
            c if c.is_whitespace() && !quoted => {
                if any {
                    out.push(std::mem::take(&mut cur));
                    any = false;
                }
            }
            c => {
                cur.push(c);
                any = true;
            }
        }
    }
    if any {
        out.push(cur);
    }
    out
}

fn key_values(tokens: &[String], line: usize) -> Result<BTreeMap<String, String>, TranscriptError> {
    tokens
        .iter()
        .map(|t| {
            t.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| TranscriptError::Parse {
                    line,
                    message: format!("expected key=value, got {t:?}"),
                })
        })
        .collect()
}

pub fn parse_transcript(text: &str) -> Result<Vec<TranscriptLine>, TranscriptError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let bad = |message: String| TranscriptError::Parse { line, message };
        let (tag, rest) = trimmed.split_once(':').ok_or_else(|| bad(format!("missing tag in {trimmed:?}")))?;
        let rest = rest.trim();
        let step = match tag.trim() {
            "U" => Step::Turn(TurnInput::text(rest)),
            "DEMO" => Step::Turn(TurnInput::Demonstration {
                actions: parse_action_list(rest).map_err(|e| bad(e.to_string()))?,
            }),
            "A" => {
                let tokens = split_quoted(rest);
                let (id, args) = tokens.split_first().ok_or_else(|| bad("missing template id".into()))?;
                let template = Template::from_id(id).ok_or_else(|| bad(format!("unknown template {id:?}")))?;
                Step::Expect {
                    template,
                    args: args.to_vec(),
                }
            }
            "ENV" => Step::Env(key_values(&split_quoted(rest), line)?),
            "ASSERT-KB" => {
                let tokens = split_quoted(rest);
                if tokens.is_empty() {
                    return Err(bad("empty KB assertion".into()));
                }
                Step::AssertKb(tokens)
            }
            "ASSERT-PHASE" => Step::AssertPhase(rest.to_string()),
            "ASSERT-BRANCH" => {
                let tokens = split_quoted(rest);
                let (branch, opts) = tokens.split_first().ok_or_else(|| bad("missing branch".into()))?;
                if !matches!(branch.as_str(), "then" | "else" | "none") {
                    return Err(bad(format!("branch must be then, else or none, got {branch:?}")));
                }
                let mut kv = key_values(opts, line)?;
                let script = kv.remove("script");
                let clicked = kv.remove("clicked").map(|c| vec![c]).unwrap_or_default();
                Step::AssertBranch {
                    branch: branch.clone(),
                    script,
                    clicked,
                    env: kv,
                }
            }
            other => return Err(bad(format!("unknown tag {other:?}"))),
        };
        out.push(TranscriptLine { line, step });
    }
    Ok(out)
}

fn mismatch(line: usize, expected: impl Into<String>, actual: impl Into<String>) -> TranscriptError {
    TranscriptError::Mismatch {
        line,
        expected: expected.into(),
        actual: actual.into(),
    }
}

fn check_kb(session: &Session, tokens: &[String], line: usize) -> Result<(), TranscriptError> {
    let kb = session.kb();
    let t: Vec<&str> = tokens.iter().map(String::as_str).collect();
    let want = tokens.join(" ");
    let ok = match t.as_slice() {
        ["procedure", name] => kb.procedure(name).is_some(),
        ["bool", name] => kb.bool_concept(name).is_some(),
        ["value", name] => kb.value_concept(name).is_some(),
        ["script", name] => kb.script(name).is_some(),
        ["variants", name, n] => {
            let count = kb
                .bool_concept(name)
                .map(|e| e.variants.len())
                .or_else(|| kb.value_concept(name).map(|e| e.variants.len()));
            let actual = count.map(|c| c.to_string()).unwrap_or_else(|| "no such concept".into());
            if actual != *n {
                return Err(mismatch(line, want, format!("{actual} variants")));
            }
            true
        }
        ["operator", name, op] => {
            let ops: Vec<String> = kb
                .bool_concept(name)
                .map(|e| {
                    e.variants
                        .iter()
                        .map(|v| match &v.expr {
                            Expr::Compare { op, .. } => op.symbol().to_string(),
                            other => other.to_string(),
                        })
                        .collect()
                })
                .unwrap_or_default();
            if ops.is_empty() || ops.iter().any(|o| o != op) {
                return Err(mismatch(line, want, format!("operators {ops:?}")));
            }
            true
        }
        ["query", name, app] => kb.value_concept(name).is_some_and(|e| {
            e.variants
                .iter()
                .any(|v| matches!(&v.source, ValueSource::Query(q) if q.app == *app))
        }),
        ["parameter", proc_name, param, value] => kb
            .procedure(proc_name)
            .and_then(|p| p.script.parameter(param))
            .is_some_and(|p| p.recorded_value == *value),
        ["alternative", proc_name, param, value] => kb
            .procedure(proc_name)
            .and_then(|p| p.script.parameter(param))
            .is_some_and(|p| p.alternatives.iter().any(|a| a == value)),
        _ => {
            return Err(TranscriptError::Parse {
                line,
                message: format!("unknown KB assertion {want:?}"),
            })
        }
    };
    if ok {
        Ok(())
    } else {
        Err(mismatch(line, want, "absent"))
    }
}

fn agent_move(messages: &[SessionMessage]) -> Option<(String, Vec<String>)> {
    messages.iter().find(|m| m.kind == MessageKind::AgentText).map(|m| {
        let template = m.payload["template"].as_str().unwrap_or_default().to_string();
        let args = m.payload["args"]
            .as_array()
            .map(|a| a.iter().filter_map(Value::as_str).map(str::to_string).collect())
            .unwrap_or_default();
        (template, args)
    })
}

/// Runs a parsed transcript on a fresh session. Stops at the first failure.
pub fn run_transcript(
    gateway: &Gateway,
    lines: &[TranscriptLine],
    kb_path: Option<&Path>,
    apps_dir: Option<&Path>,
) -> Result<TranscriptReport, TranscriptError> {
    let gw_err = |line: usize| move |source: GatewayError| TranscriptError::Gateway { line, source };
    let (id, _) = gateway.create_session(kb_path, apps_dir, &BTreeMap::new()).map_err(gw_err(0))?;
    let mut report = TranscriptReport::default();
    let mut last: Option<(String, Vec<String>)> = None;
    let mut last_script: Option<String> = None;
    for TranscriptLine { line, step } in lines {
        let line = *line;
        match step {
            Step::Turn(input) => {
                let messages = gateway.send_turn(&id, input.clone()).map_err(gw_err(line))?;
                if let Some(err) = messages.iter().find(|m| m.kind == MessageKind::Error) {
                    return Err(mismatch(line, "turn accepted", err.payload["message"].to_string()));
                }
                last = agent_move(&messages);
                if let Some((t, args)) = &last {
                    report.agent_templates.push(t.clone());
                    if t == Template::Done.id() {
                        last_script = args.first().cloned();
                    }
                }
                report.turns += 1;
            }
            Step::Expect { template, args } => {
                let Some((actual, actual_args)) = last.take() else {
                    return Err(mismatch(line, template.id(), "no agent move"));
                };
                if actual != template.id() {
                    return Err(mismatch(line, template.id(), format!("{actual} {actual_args:?}")));
                }
                if !args.is_empty() && *args != actual_args {
                    return Err(mismatch(line, format!("{} {args:?}", template.id()), format!("{actual} {actual_args:?}")));
                }
                report.checks += 1;
            }
            Step::Env(env) => {
                gateway.set_env(&id, env).map_err(gw_err(line))?;
            }
            Step::AssertKb(tokens) => {
                gateway.with_session(&id, |s| check_kb(s, tokens, line)).map_err(gw_err(line))??;
                report.checks += 1;
            }
            Step::AssertPhase(phase) => {
                let actual = gateway.with_session(&id, |s| s.state().phase.name()).map_err(gw_err(line))?;
                if actual != phase {
                    return Err(mismatch(line, phase.clone(), actual));
                }
                report.checks += 1;
            }
            Step::AssertBranch {
                branch,
                script,
                clicked,
                env,
            } => {
                let name = script
                    .clone()
                    .or_else(|| last_script.clone())
                    .ok_or_else(|| mismatch(line, "a saved script", "none saved yet"))?;
                let messages = gateway.run_script(&id, &name, env).map_err(gw_err(line))?;
                let result = messages
                    .iter()
                    .find(|m| m.kind == MessageKind::ScriptResult)
                    .ok_or_else(|| mismatch(line, "script result", "no result"))?;
                let actual = result.payload["branch"].as_str().unwrap_or("none");
                if actual != branch {
                    return Err(mismatch(line, format!("{branch} branch"), format!("{actual} branch")));
                }
                let texts: Vec<&str> = result.payload["clicked"]
                    .as_array()
                    .map(|a| a.iter().filter_map(Value::as_str).collect())
                    .unwrap_or_default();
                for c in clicked {
                    if !texts.contains(&c.as_str()) {
                        return Err(mismatch(line, format!("click on {c:?}"), format!("clicked {texts:?}")));
                    }
                }
                report.checks += 1;
            }
        }
    }
    let _ = gateway.close_session(&id);
    Ok(report)
}

/// Reads, parses and runs a transcript file.
pub fn replay_transcript_file(
    gateway: &Gateway,
    path: &Path,
    kb_path: Option<&Path>,
    apps_dir: Option<&Path>,
) -> Result<TranscriptReport, TranscriptError> {
    let text = std::fs::read_to_string(path).map_err(|e| TranscriptError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    run_transcript(gateway, &parse_transcript(&text)?, kb_path, apps_dir)
}
