use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use secure_session::checker::{check_model, CheckError, ModelConfig, Property, DEFAULT_BOUND};
use secure_session::scenario::{
    run_attack, run_purchase, AttackConfig, PurchaseConfig, Script, Security, TransportKind, DEFAULT_TIMEOUT,
};
use secure_session::srp::{Registry, SrpGroup};
use secure_session::transcript::Transcript;
use secure_session::types::{is_dual, parse_file};

#[derive(Parser)]
#[command(name = "secsess", version, about = "Session types with secure delegation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a protocol file and optionally check two protocols for duality.
    Check {
        file: PathBuf,
        /// Two protocol names to compare.
        #[arg(num_args = 2, value_names = ["A", "B"])]
        pair: Vec<String>,
        #[arg(long)]
        json: bool,
    },
    /// Run the online purchase between customer, vendor and payment handler.
    Demo {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        secure: bool,
        /// Customer decisions, e.g. "add 2 items; CHECKOUT" or "EXIT".
        #[arg(long, default_value = "add 2 items; CHECKOUT")]
        script: Script,
    },
    /// Run the delegation-signal interception attack against the purchase.
    Attack {
        mode: Mode,
        #[command(flatten)]
        run: RunArgs,
        /// Hand the attacker the real credential.
        #[arg(long)]
        leak_cred: bool,
        /// Number of runs, with consecutive seeds.
        #[arg(long, default_value_t = 1)]
        runs: u64,
    },
    /// Explore the protocol model and check its properties.
    Modelcheck {
        mode: Mode,
        /// Properties to check.
        properties: Vec<Property>,
        /// Check every property.
        #[arg(long)]
        all: bool,
        /// Include the network attacker.
        #[arg(long)]
        attacker: bool,
        /// Unacknowledged messages at delegation time; all of 0..=2 if absent.
        #[arg(long, value_parser = clap::value_parser!(u8).range(0..=2))]
        k: Option<u8>,
        #[arg(long, default_value_t = DEFAULT_BOUND)]
        bound: usize,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, default_value = "sim")]
    transport: TransportKind,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_name = "MS")]
    timeout_ms: Option<u64>,
    /// Verifier registry to use instead of the built-in demo accounts.
    #[arg(long)]
    registry: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Original,
    Secure,
}

impl RunArgs {
    fn timeout(&self) -> Duration {
        self.timeout_ms.map_or(DEFAULT_TIMEOUT, Duration::from_millis)
    }

    fn security(&self) -> Result<Security, String> {
        match &self.registry {
            None => Ok(Security::demo()),
            Some(p) => {
                let registry = Registry::load(p).map_err(|e| e.to_string())?;
                Ok(Security { group: SrpGroup::rfc5054_1024(), registry: Arc::new(registry) })
            }
        }
    }
}

enum Failure {
    Check(String),
    Usage(String),
}

type Outcome = Result<bool, Failure>;

fn emit(json: bool, value: Value, text: String) {
    let out = if json { serde_json::to_string_pretty(&value).expect("serializable") + "\n" } else { text };
    let _ = std::io::stdout().write_all(out.as_bytes());
}

fn transcript_json(t: &Transcript) -> Value {
    serde_json::to_value(t.events()).expect("serializable")
}

fn cmd_check(file: &PathBuf, pair: &[String], json: bool) -> Outcome {
    let text = std::fs::read_to_string(file).map_err(|e| Failure::Check(format!("{}: {e}", file.display())))?;
    let protocols = parse_file(&text).map_err(|e| Failure::Check(format!("{}: {e}", file.display())))?;
    let names: Vec<&str> = protocols.iter().map(|p| p.name.as_str()).collect();
    let mut out = names.iter().map(|n| format!("protocol {n}: ok\n")).collect::<String>();
    let mut doc = json!({ "command": "check", "protocols": names });
    let mut ok = true;
    if let [a, b] = pair {
        let find = |n: &str| {
            protocols
                .iter()
                .find(|p| p.name == n)
                .map(|p| &p.ty)
                .ok_or_else(|| Failure::Check(format!("no protocol named {n}")))
        };
        ok = is_dual(find(a)?, find(b)?);
        let verdict = if ok { "dual" } else { "not dual" };
        out.push_str(&format!("{a} / {b}: {verdict}\n"));
        doc["pair"] = json!([a, b]);
        doc["dual"] = json!(ok);
    }
    emit(json, doc, out);
    Ok(ok)
}

fn cmd_demo(run: &RunArgs, secure: bool, script: Script) -> Outcome {
    let cfg = PurchaseConfig {
        transport: run.transport,
        secure,
        seed: run.seed,
        script,
        timeout: run.timeout(),
        security: run.security().map_err(Failure::Check)?,
    };
    let r = run_purchase(&cfg).map_err(Failure::Check)?;
    let ok = r.completed();
    let mut text = r.transcript.render();
    match (r.receipt(), r.failure()) {
        (_, Some(f)) => text.push_str(&format!("outcome: failed ({f})\n")),
        (Some(receipt), None) => text.push_str(&format!("outcome: completed, receipt {receipt}\n")),
        (None, None) => text.push_str("outcome: completed\n"),
    }
    let doc = json!({
        "command": "demo",
        "transport": run.transport,
        "secure": secure,
        "seed": run.seed,
        "script": script.to_string(),
        "transcript": transcript_json(&r.transcript),
        "completed": ok,
        "receipt": r.receipt(),
        "failure": r.failure(),
    });
    emit(run.json, doc, text);
    Ok(ok)
}

fn cmd_attack(mode: Mode, run: &RunArgs, leak_cred: bool, runs: u64) -> Outcome {
    if run.transport != TransportKind::Sim {
        return Err(Failure::Usage("attacks run only on the simulated network (--transport sim)".into()));
    }
    let security = run.security().map_err(Failure::Check)?;
    let mut text = String::new();
    let mut results = Vec::new();
    for seed in run.seed..run.seed + runs {
        let cfg = AttackConfig {
            secure: matches!(mode, Mode::Secure),
            seed,
            leak_cred,
            timeout: run.timeout(),
            security: security.clone(),
            ..AttackConfig::default()
        };
        let r = run_attack(&cfg).map_err(Failure::Check)?;
        if runs == 1 {
            text.push_str(&r.run.transcript.render());
            text.push_str(&format!("attacker: {}\n", r.attacker));
        }
        text.push_str(&format!("seed {seed}: {}\n", r.verdict));
        results.push(json!({
            "seed": seed,
            "verdict": r.verdict,
            "attacker": r.attacker,
            "transcript": transcript_json(&r.run.transcript),
        }));
    }
    let doc = json!({
        "command": "attack",
        "mode": if matches!(mode, Mode::Secure) { "secure" } else { "original" },
        "leak_cred": leak_cred,
        "runs": results,
    });
    emit(run.json, doc, text);
    Ok(true)
}

fn cmd_modelcheck(
    mode: Mode,
    properties: &[Property],
    all: bool,
    attacker: bool,
    k: Option<u8>,
    bound: usize,
    json: bool,
) -> Outcome {
    let properties: Vec<Property> = if all { Property::ALL.to_vec() } else { properties.to_vec() };
    if properties.is_empty() {
        return Err(Failure::Usage("name at least one property, or pass --all".into()));
    }
    let ks: Vec<u8> = k.map_or_else(|| (0..=2).collect(), |k| vec![k]);
    let mut text = String::new();
    let mut reports = Vec::new();
    let mut ok = true;
    for k in ks {
        let config = ModelConfig { secure: matches!(mode, Mode::Secure), attacker, k };
        let r = match check_model(config, &properties, bound) {
            Ok(r) => r,
            Err(e @ CheckError::BoundExceeded { .. }) => return Err(Failure::Check(format!("{e}; raise --bound"))),
            Err(e) => return Err(Failure::Check(e.to_string())),
        };
        ok &= r.verdicts.iter().all(|v| v.holds);
        text.push_str(&r.render());
        text.push('\n');
        reports.push(r);
    }
    emit(json, json!({ "command": "modelcheck", "reports": reports, "all_hold": ok }), text);
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Check { file, pair, json } => cmd_check(file, pair, *json),
        Command::Demo { run, secure, script } => cmd_demo(run, *secure, *script),
        Command::Attack { mode, run, leak_cred, runs } => cmd_attack(*mode, run, *leak_cred, *runs),
        Command::Modelcheck { mode, properties, all, attacker, k, bound, json } => {
            cmd_modelcheck(*mode, properties, *all, *attacker, *k, *bound, *json)
        }
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Check(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(e)) => {
            eprintln!("usage error: {e}");
            ExitCode::from(2)
        }
    }
}
