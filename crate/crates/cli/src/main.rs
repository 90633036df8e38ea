//! `wkqfa`: check, run, sweep, compile and export Watson-Crick quantum
//! finite automata.
//!
//! Exit codes: 0 success, 1 a well-defined negative answer, 2 invalid input,
//! 3 strand budget exceeded.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use wkqfa::amplitude::DEFAULT_TOL;
use wkqfa::compiler::{compile, load_dfa};
use wkqfa::corpus::{get_machine, resolve, NAMES};
use wkqfa::machine::{check_well_formed, fill_default_rejects, load_machine, MachineDef};
use wkqfa::simulator::{
    accepts, language_sweep, run_strand, AcceptOptions, AcceptancePolicy, Decision, RunOptions, RunOutcome, SimError,
};
use wkqfa::strand::{complements, Strand, StrandError, DEFAULT_STRAND_BUDGET};

const BUDGET_VAR: &str = "WKQFA_STRAND_BUDGET";

#[derive(Parser)]
#[command(name = "wkqfa", version, about = "Watson-Crick quantum finite automata toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check that every operator of a machine is unitary.
    Check {
        /// Machine file, or a corpus name such as corpus/example1.
        machine: String,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Run a machine on one strand pair, or decide a word over all strands.
    Run {
        machine: String,
        /// Upper strand; an empty value is the empty word.
        #[arg(long, allow_hyphen_values = true)]
        upper: String,
        /// Lower strand. Without it every complementary strand is tried.
        #[arg(long, conflicts_with = "all_strands")]
        lower: Option<String>,
        #[arg(long)]
        all_strands: bool,
        #[arg(long, default_value = "certain")]
        policy: AcceptancePolicy,
        /// Emit the computation as JSON lines, one per step.
        #[arg(long)]
        trace: bool,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        /// Exit 1 when the word or strand is not accepted.
        #[arg(long)]
        assert_accept: bool,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Decide every upper word up to a length.
    Lang {
        machine: String,
        #[arg(long)]
        max_len: usize,
        #[arg(long, default_value = "certain")]
        policy: AcceptancePolicy,
        #[arg(long, value_enum, default_value_t = TableFormat::Tsv)]
        format: TableFormat,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Compile a total DFA into an equivalent machine.
    CompileDfa {
        dfa: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// List or export the built-in machines.
    Corpus {
        #[command(subcommand)]
        action: CorpusAction,
    },
}

#[derive(Subcommand)]
enum CorpusAction {
    List,
    /// Write NAME.json and NAME.oracle.txt into DIR.
    Export {
        name: String,
        dir: PathBuf,
    },
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum TableFormat {
    Tsv,
    Json,
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        let code = if matches!(e, SimError::Strand(StrandError::BudgetExceeded { .. })) {
            3
        } else {
            2
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

type Outcome = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Check { machine, tol, format } => cmd_check(&machine, tol, format),
        Command::Run {
            machine,
            upper,
            lower,
            all_strands: _,
            policy,
            trace,
            format,
            assert_accept,
            jobs,
        } => configure_jobs(jobs).and_then(|()| {
            let args = RunArgs {
                policy,
                trace,
                format,
                assert_accept,
            };
            cmd_run(&machine, &upper, lower.as_deref(), args)
        }),
        Command::Lang {
            machine,
            max_len,
            policy,
            format,
            jobs,
        } => configure_jobs(jobs).and_then(|()| cmd_lang(&machine, max_len, policy, format)),
        Command::CompileDfa { dfa, output } => cmd_compile_dfa(&dfa, &output),
        Command::Corpus { action } => cmd_corpus(action),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn configure_jobs(jobs: Option<usize>) -> Result<(), Failure> {
    match jobs {
        Some(0) => Err(Failure::input("--jobs must be at least 1")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::input(e.to_string())),
        None => Ok(()),
    }
}

fn strand_budget() -> Result<u128, Failure> {
    match std::env::var(BUDGET_VAR) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Failure::input(format!("{BUDGET_VAR} must be a non-negative integer, got '{v}'"))),
        Err(_) => Ok(DEFAULT_STRAND_BUDGET),
    }
}

/// Loads a machine file, or a corpus machine when no such file exists, with
/// every zero column sent to a fresh reject state.
fn load(arg: &str) -> Result<MachineDef, Failure> {
    let path = Path::new(arg);
    if path.is_file() {
        let text = fs::read_to_string(path).map_err(|e| Failure::input(format!("{arg}: {e}")))?;
        let m = load_machine(&text).map_err(|e| Failure::input(format!("{arg}: {e}")))?;
        return Ok(fill_default_rejects(&m));
    }
    resolve(arg)
        .map(|entry| entry.machine)
        .map_err(|e| Failure::input(format!("{arg} is neither a readable file nor a corpus machine: {e}")))
}

fn parse_strand(m: &MachineDef, flag: &str, text: &str) -> Result<Strand, Failure> {
    Strand::parse(m.alphabet(), text).map_err(|e| Failure::input(format!("--{flag} '{text}': {e}")))
}

fn prob(p: f64) -> String {
    format!("{p:.9}")
}

fn count(n: u128) -> u64 {
    u64::try_from(n).unwrap_or(u64::MAX)
}

fn print_json(value: &Value) {
    println!("{value}");
}

fn cmd_check(arg: &str, tol: f64, format: Format) -> Outcome {
    let m = load(arg)?;
    let report = check_well_formed(&m, tol);
    match format {
        Format::Text => println!("{report}"),
        Format::Json => {
            for p in &report.pairs {
                print_json(&json!({
                    "upper": p.upper,
                    "lower": p.lower,
                    "max_deviation": p.max_deviation,
                    "ok": p.max_deviation <= tol,
                }));
            }
            print_json(&json!({"well_formed": report.is_well_formed(), "tol": tol}));
        }
    }
    Ok(if report.is_well_formed() { 0 } else { 1 })
}

#[derive(Clone, Copy)]
struct RunArgs {
    policy: AcceptancePolicy,
    trace: bool,
    format: Format,
    assert_accept: bool,
}

fn cmd_run(arg: &str, upper: &str, lower: Option<&str>, args: RunArgs) -> Outcome {
    let m = load(arg)?;
    let w1 = parse_strand(&m, "upper", upper)?;
    let accepted = match lower {
        Some(text) => {
            let w2 = parse_strand(&m, "lower", text)?;
            let out = run_strand(
                &m,
                &w1,
                &w2,
                RunOptions {
                    trace: args.trace,
                    ..Default::default()
                },
            )?;
            emit_trace(&out);
            report_run(&m, &w1, &w2, &out, args);
            args.policy.qualifies(out.p_acc)
        }
        None => {
            let opts = AcceptOptions {
                strand_budget: strand_budget()?,
                ..Default::default()
            };
            let d = accepts(&m, &w1, args.policy, opts)?;
            if args.trace {
                if let Some(w2) = traced_strand(&m, &w1, &d)? {
                    emit_trace(&run_strand(
                        &m,
                        &w1,
                        &w2,
                        RunOptions {
                            trace: true,
                            ..Default::default()
                        },
                    )?);
                }
            }
            report_decision(&m, &w1, &d, args);
            d.accepted
        }
    };
    Ok(if args.assert_accept && !accepted { 1 } else { 0 })
}

/// The witness, or else the first strand reaching the best acceptance.
fn traced_strand(m: &MachineDef, w1: &Strand, d: &Decision) -> Result<Option<Strand>, Failure> {
    if d.witness.is_some() {
        return Ok(d.witness.clone());
    }
    for w2 in complements(w1, m.rho()) {
        if run_strand(m, w1, &w2, RunOptions::default())?.p_acc == d.best_p_acc {
            return Ok(Some(w2));
        }
    }
    Ok(None)
}

fn emit_trace(out: &RunOutcome) {
    for record in out.trace.iter().flatten() {
        println!("{}", serde_json::to_string(record).expect("trace records serialize"));
    }
}

fn report_run(m: &MachineDef, w1: &Strand, w2: &Strand, out: &RunOutcome, args: RunArgs) {
    let accepted = args.policy.qualifies(out.p_acc);
    let overrun = out
        .overrun_at
        .map(|c| json!({"state": m.state_name(c.state), "upos": c.upos, "lpos": c.lpos}));
    match args.format {
        Format::Json => print_json(&json!({
            "upper": w1.render(m.alphabet()),
            "lower": w2.render(m.alphabet()),
            "policy": args.policy.to_string(),
            "accepted": accepted,
            "p_acc": out.p_acc,
            "p_rej": out.p_rej,
            "p_residual": out.p_residual,
            "steps": out.steps,
            "halt_reason": out.halt_reason,
            "overrun_at": overrun,
            "max_conservation_error": out.max_conservation_error,
            "norm_anomalies": out.norm_anomalies.len(),
        })),
        Format::Text => {
            println!("upper = {}", w1.render(m.alphabet()));
            println!("lower = {}", w2.render(m.alphabet()));
            println!(
                "{} under {}",
                if accepted { "accepted" } else { "rejected" },
                args.policy
            );
            println!("p_acc = {}", prob(out.p_acc));
            println!("p_rej = {}", prob(out.p_rej));
            println!("p_residual = {}", prob(out.p_residual));
            println!("steps = {}", out.steps);
            println!(
                "halt_reason = {}",
                serde_json::to_value(out.halt_reason).unwrap().as_str().unwrap()
            );
            if let Some(c) = out.overrun_at {
                println!("overrun_at = ({}, {}, {})", m.state_name(c.state), c.upos, c.lpos);
            }
            println!("max_conservation_error = {:.3e}", out.max_conservation_error);
            for a in &out.norm_anomalies {
                println!(
                    "norm_anomaly = step {} norm {} -> {}",
                    a.step,
                    prob(a.before),
                    prob(a.after)
                );
            }
        }
    }
}

fn report_decision(m: &MachineDef, w1: &Strand, d: &Decision, args: RunArgs) {
    let witness = d.witness.as_ref().map(|w| w.render(m.alphabet()));
    match args.format {
        Format::Json => print_json(&json!({
            "upper": w1.render(m.alphabet()),
            "policy": args.policy.to_string(),
            "accepted": d.accepted,
            "witness": witness,
            "best_p_acc": d.best_p_acc,
            "min_p_rej": d.min_p_rej,
            "strands_examined": count(d.strands_examined),
            "capped_strands": count(d.capped_strands),
            "rejection_gap_holds": d.rejection_gap_holds,
            "max_conservation_error": d.max_conservation_error,
            "norm_anomalies": d.norm_anomalies,
        })),
        Format::Text => {
            println!("upper = {}", w1.render(m.alphabet()));
            println!(
                "{} under {}",
                if d.accepted { "accepted" } else { "rejected" },
                args.policy
            );
            println!("witness = {}", witness.as_deref().unwrap_or("-"));
            println!("best_p_acc = {}", prob(d.best_p_acc));
            println!("min_p_rej = {}", prob(d.min_p_rej));
            println!("strands_examined = {}", d.strands_examined);
            if d.capped_strands > 0 {
                println!("capped_strands = {}", d.capped_strands);
            }
            if let Some(holds) = d.rejection_gap_holds {
                println!("rejection_gap_holds = {holds}");
            }
            println!("max_conservation_error = {:.3e}", d.max_conservation_error);
            if d.norm_anomalies > 0 {
                println!("norm_anomalies = {}", d.norm_anomalies);
            }
        }
    }
}

fn cmd_lang(arg: &str, max_len: usize, policy: AcceptancePolicy, format: TableFormat) -> Outcome {
    let m = load(arg)?;
    let opts = AcceptOptions {
        strand_budget: strand_budget()?,
        ..Default::default()
    };
    let rows = language_sweep(&m, max_len, policy, opts);
    if format == TableFormat::Tsv {
        println!("word\taccepted\tbest_p_acc\tstrands_examined");
    }
    let mut code = 0;
    for row in &rows {
        let word = row.word.render(m.alphabet());
        match (&row.result, format) {
            (Ok(d), TableFormat::Tsv) => {
                println!("{word}\t{}\t{}\t{}", d.accepted, prob(d.best_p_acc), d.strands_examined);
            }
            (Ok(d), TableFormat::Json) => print_json(&json!({
                "word": word,
                "accepted": d.accepted,
                "best_p_acc": d.best_p_acc,
                "strands_examined": count(d.strands_examined),
                "witness": d.witness.as_ref().map(|w| w.render(m.alphabet())),
                "rejection_gap_holds": d.rejection_gap_holds,
            })),
            (Err(e), _) => {
                let failure = Failure::from(e.clone());
                code = code.max(failure.code);
                match format {
                    TableFormat::Tsv => println!("{word}\terror\t-\t-\t{}", failure.message),
                    TableFormat::Json => print_json(&json!({"word": word, "error": failure.message})),
                }
            }
        }
    }
    Ok(code)
}

fn cmd_compile_dfa(path: &Path, output: &Path) -> Outcome {
    let name = path.display();
    let text = fs::read_to_string(path).map_err(|e| Failure::input(format!("{name}: {e}")))?;
    let dfa = load_dfa(&text).map_err(|e| Failure::input(format!("{name}: {e}")))?;
    let m = compile(&dfa);
    fs::write(output, m.to_json()).map_err(|e| Failure::input(format!("{}: {e}", output.display())))?;
    println!("|V'| = {}", m.alphabet().input_symbols().len());
    println!("|rho| = {}", m.rho().len());
    println!("|Q'| = {}", m.state_count());
    Ok(0)
}

fn cmd_corpus(action: CorpusAction) -> Outcome {
    match action {
        CorpusAction::List => {
            for name in NAMES {
                println!("{}", get_machine(name).expect("listed names exist"));
            }
        }
        CorpusAction::Export { name, dir } => {
            let entry = resolve(&name).map_err(|e| Failure::input(e.to_string()))?;
            let write = |file: String, contents: String| {
                let path = dir.join(file);
                fs::write(&path, contents).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
                println!("{}", path.display());
                Ok::<(), Failure>(())
            };
            write(format!("{}.json", entry.name), entry.definition.to_json())?;
            write(
                format!("{}.oracle.txt", entry.name),
                format!("{}\n\n{}\n", entry.oracle.describe(), entry.notes),
            )?;
        }
    }
    Ok(0)
}
