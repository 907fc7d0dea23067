use std::collections::BTreeMap;
use std::fs;
use std::io::BufWriter;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use hdm_core::agents::{AgentCheckpoint, PolicySnapshot};
use hdm_core::config::{load_config, parse_config};
use hdm_core::goals::{generate_goal_corpus, goals_from_json, goals_to_json};
use hdm_core::kb::{default_city_pool, generate_kb, Kb};
use hdm_core::trainer::{evaluate, run_seed_with, AgentKind, Environment, EpisodeOptions, TrainConfig};
use hdm_core::{Error, Result};
use hdm_server::store::Store;
use hdm_server::{AppState, ServiceConfig};

#[derive(Parser)]
#[command(name = "hdm", version, about = "Hierarchical dialogue manager for flight + hotel booking")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic flight/hotel knowledge base.
    GenKb {
        #[arg(long, default_value_t = 2017)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        flights: usize,
        #[arg(long, default_value_t = 80)]
        hotels: usize,
        #[arg(long, default_value_t = 0.7)]
        coverage: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sample a user-goal corpus from a knowledge base.
    GenGoals {
        #[arg(long)]
        kb: PathBuf,
        #[arg(long, default_value_t = 759)]
        n: usize,
        /// Proportions of user types A,B,C.
        #[arg(long, default_value = "0,1,0", value_parser = parse_mix)]
        mix: [f64; 3],
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train agents, one run per configured seed.
    Train {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        out_dir: PathBuf,
        /// Print per-epoch probe metrics.
        #[arg(long)]
        verbose: bool,
    },
    /// Evaluate a checkpoint (or a rule agent) greedily.
    Eval {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Agent checkpoint JSON; rule agents need none.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long, default_value_t = 500)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        eval_seed: u64,
        /// Write every episode as a JSON line.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Serve agents over HTTP for human evaluation.
    Serve {
        #[arg(long)]
        kb: PathBuf,
        #[arg(long)]
        goals: PathBuf,
        /// `name=checkpoint.json`; repeatable. `rule` and `rule+` are always served.
        #[arg(long = "agent")]
        agents: Vec<String>,
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        #[arg(long, default_value = "sessions.jsonl")]
        store: PathBuf,
    },
}

/// Config file plus per-field overrides.
#[derive(Args, Default)]
struct ConfigArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    kb: Option<PathBuf>,
    #[arg(long)]
    goals: Option<PathBuf>,
    #[arg(long)]
    agent: Option<String>,
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    dialogues_per_epoch: Option<usize>,
    #[arg(long)]
    probe_dialogues: Option<usize>,
    #[arg(long)]
    eval_dialogues: Option<usize>,
    #[arg(long)]
    user_type: Option<String>,
    #[arg(long)]
    error_prob: Option<f64>,
    #[arg(long)]
    max_turn: Option<usize>,
    #[arg(long)]
    warm_start_dialogues: Option<usize>,
    #[arg(long)]
    flush_threshold: Option<f64>,
    #[arg(long)]
    switch_termination: Option<bool>,
    #[arg(long)]
    action_mask: Option<bool>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    kb_seed: Option<u64>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<TrainConfig> {
        let mut c = match &self.config {
            Some(path) => load_config(path)?,
            None => parse_config("")?,
        };
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = self.$field.clone() {
                    c.$field = v;
                }
            )*};
        }
        set!(seeds, epochs, dialogues_per_epoch, probe_dialogues, eval_dialogues, error_prob, max_turn);
        set!(warm_start_dialogues, switch_termination, kb_seed);
        if let Some(a) = &self.agent {
            c.agent = a.parse()?;
        }
        if let Some(t) = &self.user_type {
            c.user_type = t.parse().map_err(|_| Error::config("user_type", format!("unknown user type `{t}`")))?;
        }
        if self.flush_threshold.is_some() {
            c.flush_threshold = self.flush_threshold;
        }
        if let Some(v) = self.action_mask {
            c.learner.action_mask = v;
        }
        if let Some(v) = self.lr {
            c.learner.lr = v;
        }
        if let Some(v) = self.hidden {
            c.learner.hidden = v;
        }
        c.validate()?;
        Ok(c)
    }

    fn environment(&self, c: &TrainConfig) -> Result<Environment> {
        let mut env = match &self.kb {
            Some(path) => Environment::from_kb(Kb::from_json(&fs::read_to_string(path)?)?, c)?,
            None => Environment::build(c)?,
        };
        if let Some(path) = &self.goals {
            env.train_goals = goals_from_json(&fs::read_to_string(path)?)?;
            if env.train_goals.is_empty() {
                return Err(Error::config("goals", "goal file is empty"));
            }
        }
        Ok(env)
    }
}

fn parse_mix(s: &str) -> std::result::Result<[f64; 3], String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| e.to_string()))
        .collect::<std::result::Result<_, _>>()?;
    parts.try_into().map_err(|_| "expected three comma-separated weights".to_string())
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text)?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenKb {
            seed,
            flights,
            hotels,
            coverage,
            out,
        } => {
            let kb = generate_kb(seed, flights, hotels, &default_city_pool(), coverage)?;
            write(&out, &kb.to_json())?;
            println!("wrote {} flights and {} hotels to {}", kb.flights.len(), kb.hotels.len(), out.display());
        }
        Command::GenGoals { kb, n, mix, seed, out } => {
            let kb = Kb::from_json(&fs::read_to_string(kb)?)?;
            let goals = generate_goal_corpus(n, mix, &kb, seed)?;
            write(&out, &goals_to_json(&goals))?;
            println!("wrote {} goals to {}", goals.len(), out.display());
        }
        Command::Train { cfg, out_dir, verbose } => {
            let config = cfg.resolve()?;
            let env = cfg.environment(&config)?;
            fs::create_dir_all(&out_dir)?;
            write(&out_dir.join("config.toml"), &hdm_core::config::to_toml(&config))?;
            for &seed in &config.seeds {
                let result = run_seed_with(&config, &env, seed, |e| {
                    if verbose {
                        eprintln!(
                            "seed {seed} epoch {} success {:.3} turns {:.1} reward {:.1}",
                            e.epoch, e.probe.success_rate, e.probe.avg_turns, e.probe.avg_reward
                        );
                    }
                })?;
                write(&out_dir.join(format!("metrics_seed{seed}.csv")), &result.metrics_csv())?;
                let ck = AgentCheckpoint::from_snapshot(&result.best);
                write(
                    &out_dir.join(format!("checkpoint_seed{seed}.json")),
                    &serde_json::to_string(&ck)?,
                )?;
                let mut opts = EpisodeOptions::from_config(&config);
                opts.keep_turns = true;
                let log = fs::File::create(out_dir.join(format!("episodes_seed{seed}.jsonl")))?;
                let mut log = BufWriter::new(log);
                evaluate(&result.best, &env, config.eval_dialogues, seed, &opts, Some(&mut log))?;
                let m = result.eval.metrics;
                println!(
                    "{} seed {seed}: success {:.3} turns {:.2} reward {:.2} (best epoch {})",
                    config.agent, m.success_rate, m.avg_turns, m.avg_reward, result.best_epoch
                );
            }
        }
        Command::Eval {
            cfg,
            checkpoint,
            n,
            eval_seed,
            log,
        } => {
            let config = cfg.resolve()?;
            let env = cfg.environment(&config)?;
            let snapshot = match (&checkpoint, config.agent) {
                (Some(path), _) => load_checkpoint(path)?,
                (None, AgentKind::Rule) => PolicySnapshot::Rule,
                (None, AgentKind::RulePlus) => PolicySnapshot::RulePlus,
                (None, _) => return Err(Error::config("checkpoint", "learning agents need --checkpoint")),
            };
            let opts = EpisodeOptions::from_config(&config);
            let mut file = log.map(fs::File::create).transpose()?.map(BufWriter::new);
            let report = evaluate(
                &snapshot,
                &env,
                n,
                eval_seed,
                &opts,
                file.as_mut().map(|f| f as &mut dyn std::io::Write),
            )?;
            println!("{}", serde_json::to_string(&report.metrics)?);
        }
        Command::Serve {
            kb,
            goals,
            agents,
            addr,
            store,
        } => {
            let kb = Kb::from_json(&fs::read_to_string(kb)?)?;
            let goals = goals_from_json(&fs::read_to_string(goals)?)?;
            let mut table = BTreeMap::new();
            table.insert("rule".to_string(), PolicySnapshot::Rule);
            table.insert("rule+".to_string(), PolicySnapshot::RulePlus);
            for spec in &agents {
                let (name, path) = spec
                    .split_once('=')
                    .ok_or_else(|| Error::config("agent", format!("expected name=path, got `{spec}`")))?;
                table.insert(name.to_string(), load_checkpoint(Path::new(path))?);
            }
            let state = AppState::new(table, kb, goals, Store::open(&store)?, ServiceConfig::default());
            println!("serving {} on http://{addr}", state.agent_names().collect::<Vec<_>>().join(", "));
            tokio::runtime::Runtime::new()?.block_on(hdm_server::serve(Arc::new(state), addr))?;
        }
    }
    Ok(())
}

fn load_checkpoint(path: &Path) -> Result<PolicySnapshot> {
    let ck: AgentCheckpoint = serde_json::from_str(&fs::read_to_string(path)?)?;
    ck.to_snapshot()
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ Error::Config { .. }) => {
            eprintln!("config error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
