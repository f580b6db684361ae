use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use serde_json::Value;
use tracing_subscriber::EnvFilter;

use symenv_core::escape::{generate, solve, GeneratedRoom, LevelConfig, SolveOptions};
use symenv_core::eval::{render_table, run_benchmark, BenchmarkSuite, PolicyKind};
use symenv_core::harness::LlmEndpointConfig;
use symenv_server::api::{ActionsRequest, EditsRequest, Move, RecheckRequest};
use symenv_server::client::Client;
use symenv_server::{router, AppState, Config, Store};

#[derive(Parser)]
#[command(name = "symenv", version, about = "Symbolic escape rooms, household tasks, and the session server")]
struct Cli {
    /// TOML config file (port, session TTL, snapshot dir, LLM defaults).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the HTTP session server.
    Serve {
        #[arg(long)]
        port: Option<u16>,
        /// Directory of static UI assets served under `/`.
        #[arg(long = "static")]
        static_dir: Option<PathBuf>,
        #[arg(long)]
        snapshot_dir: Option<PathBuf>,
    },
    /// Generate an escape room with its solution certificate.
    Generate {
        #[arg(long)]
        level: u8,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        rooms: Option<usize>,
        #[arg(long)]
        decoys: Option<usize>,
        #[arg(long)]
        code_length: Option<usize>,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve a generated room file and print the plan.
    Solve {
        #[arg(long)]
        room: PathBuf,
        #[arg(long, default_value_t = symenv_core::escape::DEFAULT_BUDGET)]
        budget: usize,
    },
    /// Run a benchmark suite and print the success table.
    Bench {
        /// Suite JSON; the standard suite when absent.
        #[arg(long)]
        suite: Option<PathBuf>,
        /// Comma-separated: oracle, random, llm (config default), llm:<endpoint.json>.
        #[arg(long, default_value = "oracle,random")]
        policies: String,
        /// Seeds per task for the standard suite.
        #[arg(long, default_value_t = 20)]
        seeds: u64,
        /// Worker threads; 0 uses every core.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// Full JSON report.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Line-mode client for a running server.
    Edit {
        #[arg(long, default_value = "http://127.0.0.1:8080")]
        url: String,
        /// Existing session id; otherwise a room is generated.
        #[arg(long)]
        session: Option<String>,
        #[arg(long, default_value_t = 1)]
        level: u8,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    tracing_subscriber::fmt().with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info"))).with_writer(std::io::stderr).init();
    let cli = Cli::parse();
    let config = match &cli.config {
        Some(p) => match Config::load(p) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        },
        None => Config::default(),
    };
    let result = match cli.command {
        Command::Serve { port, static_dir, snapshot_dir } => serve(config, port, static_dir, snapshot_dir),
        Command::Generate { level, seed, rooms, decoys, code_length, out } => {
            let mut cfg = LevelConfig::new(level, seed);
            cfg.room_count = rooms;
            cfg.decoy_objects = decoys.unwrap_or(cfg.decoy_objects);
            cfg.code_length = code_length.unwrap_or(cfg.code_length);
            generate_room(&cfg, out.as_deref())
        }
        Command::Solve { room, budget } => solve_room(&room, budget),
        Command::Bench { suite, policies, seeds, jobs, out } => bench(&config, suite.as_deref(), &policies, seeds, jobs, out.as_deref()),
        Command::Edit { url, session, level, seed } => edit(&url, session, level, seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn serve(config: Config, port: Option<u16>, static_dir: Option<PathBuf>, snapshot_dir: Option<PathBuf>) -> Result<(), String> {
    let port = port.unwrap_or(config.port);
    let snapshot_dir = snapshot_dir.or(config.snapshot_dir.clone());
    let rt = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
    rt.block_on(async move {
        let store = Arc::new(Store::new(config.ttl()));
        if let Some(dir) = snapshot_dir.as_deref().filter(|d| d.is_dir()) {
            let n = store.load(dir).map_err(|e| e.to_string())?;
            tracing::info!("restored {n} sessions from {}", dir.display());
        }
        let sweeper = store.clone();
        let every = (config.ttl() / 2).clamp(std::time::Duration::from_secs(1), std::time::Duration::from_secs(60));
        tokio::spawn(async move {
            loop {
                tokio::time::sleep(every).await;
                let n = sweeper.sweep();
                if n > 0 {
                    tracing::info!("expired {n} sessions");
                }
            }
        });
        let app = router(AppState::new(store.clone()), static_dir);
        let listener = tokio::net::TcpListener::bind(("0.0.0.0", port)).await.map_err(|e| e.to_string())?;
        tracing::info!("listening on {}", listener.local_addr().map_err(|e| e.to_string())?);
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
        };
        symenv_server::routes::serve(listener, app, shutdown).await.map_err(|e| e.to_string())?;
        if let Some(dir) = snapshot_dir {
            let n = store.save(&dir).map_err(|e| e.to_string())?;
            tracing::info!("saved {n} sessions to {}", dir.display());
        }
        Ok(())
    })
}

fn write_out(out: Option<&Path>, text: &str) -> Result<(), String> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| format!("{}: {e}", p.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn generate_room(cfg: &LevelConfig, out: Option<&Path>) -> Result<(), String> {
    let room = generate(cfg).map_err(|e| e.to_string())?;
    let text = serde_json::to_string_pretty(&room).map_err(|e| e.to_string())?;
    write_out(out, &text)
}

fn solve_room(path: &Path, budget: usize) -> Result<(), String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let room: GeneratedRoom = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    let cert = solve(&room.graph, &room.goal, &SolveOptions::with_budget(budget)).map_err(|e| e.to_string())?;
    for (i, step) in cert.plan.iter().enumerate() {
        println!("{:>3}. {} {}", i + 1, step.agent, serde_json::to_string(&step.action).expect("actions serialize"));
    }
    println!("optimal length: {}", cert.optimal_length);
    Ok(())
}

fn parse_policies(config: &Config, spec: &str) -> Result<Vec<PolicyKind>, String> {
    spec.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|p| match p {
            "oracle" => Ok(PolicyKind::Oracle),
            "random" => Ok(PolicyKind::Random),
            "llm" => config.llm.clone().map(PolicyKind::llm).ok_or_else(|| "policy `llm` needs [llm] in the config file".to_string()),
            other => match other.strip_prefix("llm:") {
                Some(path) => {
                    let text = std::fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))?;
                    let cfg: LlmEndpointConfig = serde_json::from_str(&text).map_err(|e| format!("{path}: {e}"))?;
                    Ok(PolicyKind::llm(cfg))
                }
                None => Err(format!("unknown policy {other}")),
            },
        })
        .collect()
}

fn bench(config: &Config, suite: Option<&Path>, policies: &str, seeds: u64, jobs: usize, out: Option<&Path>) -> Result<(), String> {
    let suite = match suite {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
            serde_json::from_str::<BenchmarkSuite>(&text).map_err(|e| format!("{}: {e}", p.display()))?
        }
        None => BenchmarkSuite::standard(seeds),
    };
    let policies = parse_policies(config, policies)?;
    let report = run_benchmark(&suite, &policies, jobs).map_err(|e| e.to_string())?;
    println!("{}", render_table(&report));
    if let Some(p) = out {
        std::fs::write(p, report.to_json()).map_err(|e| format!("{}: {e}", p.display()))?;
    }
    Ok(())
}

const EDIT_HELP: &str = "commands:
  [..] or {..}          apply an edit list, one edit, or {\"edits\": [..], \"viewpoint\": id}
  act <agent> <json>    run one action, e.g. act agent_1 {\"type\":\"open\",\"object\":\"box_1\"}
  obs <agent>           observation
  graph                 scene graph document
  goal                  goal check
  recheck [budget]      solvability of the current state
  help | quit";

fn edit(url: &str, session: Option<String>, level: u8, seed: u64) -> Result<(), String> {
    let client = Client::new(url);
    let id = match session {
        Some(id) => id,
        None => {
            let created = client.create(&serde_json::json!({ "level": level, "seed": seed })).map_err(|e| e.to_string())?;
            created.id
        }
    };
    println!("session {id}\n{EDIT_HELP}");
    let show = |r: Result<Value, String>| match r {
        Ok(v) => println!("{}", serde_json::to_string_pretty(&v).expect("values serialize")),
        Err(e) => println!("error: {e}"),
    };
    let stdin = std::io::stdin();
    loop {
        print!("> ");
        std::io::stdout().flush().map_err(|e| e.to_string())?;
        let mut line = String::new();
        if stdin.lock().read_line(&mut line).map_err(|e| e.to_string())? == 0 {
            return Ok(());
        }
        let line = line.trim();
        let (cmd, rest) = line.split_once(' ').map(|(a, b)| (a, b.trim())).unwrap_or((line, ""));
        match cmd {
            "" => {}
            "quit" | "exit" => return Ok(()),
            "help" => println!("{EDIT_HELP}"),
            "graph" => show(as_json(client.scene_graph(&id))),
            "goal" => show(as_json(client.goal_check(&id))),
            "obs" => show(as_json(client.observation(&id, rest))),
            "recheck" => {
                let budget = if rest.is_empty() { None } else { rest.parse().ok() };
                show(as_json(client.recheck(&id, &RecheckRequest { budget })))
            }
            "act" => {
                let Some((agent, action)) = rest.split_once(' ') else {
                    println!("usage: act <agent> <action json>");
                    continue;
                };
                match serde_json::from_str(action) {
                    Ok(action) => {
                        let req = ActionsRequest { moves: vec![Move { agent: agent.into(), action }] };
                        show(as_json(client.actions(&id, &req)))
                    }
                    Err(e) => println!("bad action: {e}"),
                }
            }
            _ if line.starts_with('[') || line.starts_with('{') => match parse_edit_line(line) {
                Ok(req) => show(as_json(client.edits(&id, &req))),
                Err(e) => println!("bad edit: {e}"),
            },
            other => println!("unknown command {other}; try help"),
        }
    }
}

fn as_json<T: serde::Serialize>(r: Result<T, symenv_server::client::ClientError>) -> Result<Value, String> {
    r.map(|x| serde_json::to_value(x).expect("responses serialize")).map_err(|e| e.to_string())
}

fn parse_edit_line(line: &str) -> Result<EditsRequest, String> {
    let v: Value = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let v = match v {
        Value::Array(_) => serde_json::json!({ "edits": v }),
        Value::Object(ref m) if m.contains_key("edits") => v,
        other => serde_json::json!({ "edits": [other] }),
    };
    serde_json::from_value(v).map_err(|e| e.to_string())
}
