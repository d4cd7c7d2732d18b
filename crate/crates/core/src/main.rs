use std::collections::BTreeMap;
use std::io::{self, BufRead, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::Parser;
use teachable::dialog::TurnInput;
use teachable::gateway::{replay_transcript_file, Gateway, MessageKind};
use teachable::screenworld::parse_action_list;

/// Teach a simulated phone agent by talking to it and showing it what to do.
#[derive(Debug, Parser)]
#[command(name = "teachable", version)]
struct Cli {
    /// Knowledge base to load (and to save to with --save).
    #[arg(long)]
    kb: Option<PathBuf>,
    /// Directory of app definition files. Defaults to the bundled fixtures.
    #[arg(long)]
    apps: Option<PathBuf>,
    /// Environment variables for the simulated apps, `key=value`.
    #[arg(long, value_parser = parse_kv, num_args = 1..)]
    env: Vec<(String, String)>,
    /// Replay transcript files and report pass/fail.
    #[arg(long, num_args = 1..)]
    transcript: Vec<PathBuf>,
    /// Run a stored script and print its trace.
    #[arg(long)]
    run: Option<String>,
    /// Serve the NDJSON protocol on stdin/stdout.
    #[arg(long)]
    serve: bool,
    /// Serve the NDJSON protocol on a TCP address, e.g. 127.0.0.1:7878.
    #[arg(long)]
    listen: Option<String>,
    /// Write the knowledge base here when the interactive session ends.
    #[arg(long)]
    save: Option<PathBuf>,
}

fn parse_kv(s: &str) -> Result<(String, String), String> {
    s.split_once('=')
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .ok_or_else(|| format!("expected key=value, got {s:?}"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let apps = cli.apps.clone().unwrap_or_else(Gateway::bundled_apps_dir);
    let gateway = Gateway::new(apps);
    let env: BTreeMap<String, String> = cli.env.iter().cloned().collect();
    let result = if !cli.transcript.is_empty() {
        transcripts(&gateway, &cli)
    } else if let Some(script) = &cli.run {
        run(&gateway, &cli, script, &env)
    } else if cli.serve {
        gateway.serve(io::stdin().lock(), io::stdout().lock()).map(|()| true).map_err(|e| e.to_string())
    } else if let Some(addr) = &cli.listen {
        eprintln!("listening on {addr}");
        Arc::new(gateway).listen(addr.as_str()).map(|()| true).map_err(|e| e.to_string())
    } else {
        repl(&gateway, &cli, &env)
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn transcripts(gateway: &Gateway, cli: &Cli) -> Result<bool, String> {
    let mut all = true;
    for path in &cli.transcript {
        match replay_transcript_file(gateway, path, cli.kb.as_deref(), None) {
            Ok(r) => println!("PASS {} ({} turns, {} checks)", path.display(), r.turns, r.checks),
            Err(e) => {
                all = false;
                println!("FAIL {}: {e}", path.display());
            }
        }
    }
    Ok(all)
}

fn run(gateway: &Gateway, cli: &Cli, script: &str, env: &BTreeMap<String, String>) -> Result<bool, String> {
    let (id, _) = gateway.create_session(cli.kb.as_deref(), None, env).map_err(|e| e.to_string())?;
    let messages = gateway.run_script(&id, script, env).map_err(|e| e.to_string())?;
    for m in messages.iter().filter(|m| m.kind == MessageKind::ScriptResult) {
        println!("{}", serde_json::to_string_pretty(&m.payload).map_err(|e| e.to_string())?);
    }
    Ok(true)
}

fn repl(gateway: &Gateway, cli: &Cli, env: &BTreeMap<String, String>) -> Result<bool, String> {
    let (id, greeting) = gateway.create_session(cli.kb.as_deref(), None, env).map_err(|e| e.to_string())?;
    let show = |messages: &[teachable::gateway::SessionMessage]| {
        for m in messages {
            match m.kind {
                MessageKind::AgentText => println!("agent: {}", m.payload["text"].as_str().unwrap_or_default()),
                MessageKind::OptionPrompt | MessageKind::Confirmation => {
                    if let Some(opts) = m.payload["options"].as_array() {
                        let opts: Vec<&str> = opts.iter().filter_map(|o| o.as_str()).collect();
                        println!("       [{}]", opts.join(" | "));
                    }
                }
                MessageKind::ScreenUpdate => {
                    println!("screen: {}/{}", m.payload["app"].as_str().unwrap_or_default(), m.payload["screen"].as_str().unwrap_or_default())
                }
                MessageKind::Error => println!("error: {}", m.payload["message"].as_str().unwrap_or_default()),
                _ => {}
            }
        }
    };
    show(&greeting);
    println!("(type DEMO: action; action to demonstrate, RUN: name to run a script, Ctrl-D to quit)");
    let stdin = io::stdin();
    loop {
        print!("> ");
        io::stdout().flush().map_err(|e| e.to_string())?;
        let mut line = String::new();
        if stdin.lock().read_line(&mut line).map_err(|e| e.to_string())? == 0 {
            break;
        }
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let messages = if let Some(actions) = line.strip_prefix("DEMO:") {
            match parse_action_list(actions) {
                Ok(actions) => gateway.send_turn(&id, TurnInput::Demonstration { actions }),
                Err(e) => {
                    println!("error: {e}");
                    continue;
                }
            }
        } else if let Some(name) = line.strip_prefix("RUN:") {
            gateway.run_script(&id, name.trim(), env)
        } else {
            gateway.send_turn(&id, TurnInput::text(line))
        };
        match messages {
            Ok(m) => show(&m),
            Err(e) => println!("error: {e}"),
        }
    }
    if let Some(path) = cli.save.as_ref().or(cli.kb.as_ref()) {
        gateway.save_kb(&id, path).map_err(|e| e.to_string())?;
        println!("saved knowledge base to {}", path.display());
    }
    Ok(true)
}
