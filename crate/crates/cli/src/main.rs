use std::path::Path;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use pcat_core::compare::compare;
use pcat_core::compile::{compile, Construction};
use pcat_core::engine::ControlMode;
use pcat_core::explorer::{explore, sample_run, Bounds, Dedup, RunOutcome, Strategy};
use pcat_core::machine::{bundled, rm_validate, RegisterMachine};
use pcat_core::model::{validate_system, MembraneNode, PSystem};
use pcat_core::text::psys::parse_system;
use pcat_core::text::rm::{line_of, parse_machine};

/// Compile register machines into one-catalyst P systems and explore them.
#[derive(Parser)]
#[command(name = "pcat", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compile a machine (`.rm` file or bundled name) into a P system.
    Compile {
        machine: String,
        #[arg(short, long)]
        construction: Construction,
        /// Write the system here instead of standard output.
        #[arg(short, long)]
        out: Option<String>,
    },
    /// One random computation of a system.
    Run {
        system: String,
        /// Treat SYSTEM as a machine and compile it first.
        #[arg(short, long)]
        construction: Option<Construction>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Print every step.
        #[arg(long)]
        trace: bool,
        #[command(flatten)]
        bounds: BoundArgs,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Explore the computations of a system within bounds.
    Explore {
        system: String,
        #[arg(short, long)]
        construction: Option<Construction>,
        #[command(flatten)]
        bounds: BoundArgs,
        /// Sample this many random runs instead of exploring exhaustively.
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Compare a compiled machine against the machine itself.
    Compare {
        machine: String,
        #[arg(short, long)]
        construction: Construction,
        #[command(flatten)]
        bounds: BoundArgs,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Check a `.rm` or `.psys` file.
    Validate { file: String },
    /// Summarize a machine or system.
    Describe {
        file: String,
        #[arg(short, long)]
        construction: Option<Construction>,
    },
}

#[derive(Args)]
struct BoundArgs {
    #[arg(long, default_value_t = 200)]
    max_steps: usize,
    #[arg(long, default_value_t = 200)]
    max_objects: u64,
    #[arg(long, default_value_t = 200_000)]
    max_configs: usize,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long, value_enum, default_value_t = DedupArg::Global)]
    dedup: DedupArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum DedupArg {
    Global,
    PerLevel,
    None,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

impl BoundArgs {
    fn bounds(&self) -> Bounds {
        Bounds {
            max_steps: self.max_steps,
            max_total_objects: self.max_objects,
            max_configs: self.max_configs,
            jobs: self.jobs,
            dedup: match self.dedup {
                DedupArg::Global => Dedup::Global,
                DedupArg::PerLevel => Dedup::PerLevel,
                DedupArg::None => Dedup::None,
            },
            ..Bounds::default()
        }
    }
}

fn is_machine_file(path: &str) -> bool {
    Path::new(path).extension().is_some_and(|e| e == "rm")
}

fn load_machine(arg: &str) -> Result<RegisterMachine> {
    if !Path::new(arg).exists() {
        return bundled::by_name(arg).ok_or_else(|| {
            let names: Vec<_> = bundled::all().into_iter().map(|(n, _)| n).collect();
            anyhow!("{arg}: no such file or bundled machine (bundled: {})", names.join(", "))
        });
    }
    let text = std::fs::read_to_string(arg).with_context(|| format!("reading {arg}"))?;
    let m = parse_machine(&text).map_err(|e| anyhow!("{arg}: {e}"))?;
    let violations = rm_validate(&m);
    if !violations.is_empty() {
        bail!("{arg}: invalid machine\n{}", machine_violations(&text, &m).join("\n"));
    }
    Ok(m)
}

fn machine_violations(text: &str, m: &RegisterMachine) -> Vec<String> {
    rm_validate(m)
        .iter()
        .map(|v| match v.label.as_deref().and_then(|l| line_of(text, l)) {
            Some(line) => format!("line {line}: {v}"),
            None => v.to_string(),
        })
        .collect()
}

fn load_system(arg: &str, construction: Option<Construction>) -> Result<PSystem> {
    if let Some(c) = construction {
        let m = load_machine(arg)?;
        return Ok(compile(&m, c).map_err(|e| anyhow!("{e}"))?.system);
    }
    let text = std::fs::read_to_string(arg).with_context(|| format!("reading {arg}"))?;
    let sys = parse_system(&text).map_err(|e| anyhow!("{arg}: {e}"))?;
    let violations = validate_system(&sys);
    if !violations.is_empty() {
        let lines: Vec<String> = violations.iter().map(ToString::to_string).collect();
        bail!("{arg}: invalid system\n{}", lines.join("\n"));
    }
    Ok(sys)
}

fn print_json(value: &serde_json::Value) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn outcome_name(o: RunOutcome) -> &'static str {
    match o {
        RunOutcome::Halted => "halted",
        RunOutcome::Stuck => "stuck",
        RunOutcome::StepLimit => "step limit",
        RunOutcome::ObjectLimit => "object limit",
    }
}

fn mode_name(c: &ControlMode) -> String {
    match c {
        ControlMode::Plain => "plain".into(),
        ControlMode::LabelSelection { sets } => format!("label-selection, {} sets", sets.len()),
        ControlMode::TargetSelection => "target-selection".into(),
        ControlMode::Controlled { schedule, weak, period } => format!(
            "{}, {} sets, {} halting",
            if period.is_some() { "time-varying" } else { "controlled" },
            schedule.len(),
            if *weak { "weak" } else { "strong" }
        ),
    }
}

fn shape(node: &MembraneNode) -> String {
    let inner: String = node.children.iter().map(|c| format!(" {}", shape(c))).collect();
    format!("[{}{inner}]", node.label)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Compile { machine, construction, out } => {
            let m = load_machine(&machine)?;
            let art = compile(&m, construction).map_err(|e| anyhow!("{e}"))?;
            let text = art.render();
            match out {
                Some(path) => std::fs::write(&path, text).with_context(|| format!("writing {path}"))?,
                None => print!("{text}"),
            }
        }
        Command::Run { system, construction, seed, trace, bounds, format } => {
            let sys = load_system(&system, construction)?;
            let r = sample_run(&sys, &bounds.bounds(), seed)?;
            if format == Format::Json {
                print_json(&json!({
                    "outcome": outcome_name(r.outcome),
                    "steps": r.steps,
                    "result": r.result,
                    "choices": r.choices,
                    "trace": if trace { r.trace.clone() } else { vec![] },
                }))?;
            } else {
                if trace {
                    for line in &r.trace {
                        println!("{line}");
                    }
                }
                let result = r.result.map(|v| v.to_string()).unwrap_or_else(|| "-".into());
                println!("{} after {} steps, result {result}", outcome_name(r.outcome), r.steps);
            }
        }
        Command::Explore { system, construction, bounds, samples, seed, format } => {
            let sys = load_system(&system, construction)?;
            let mut b = bounds.bounds();
            if let Some(samples) = samples {
                b.strategy = Strategy::Random { samples, seed };
            }
            let report = explore(&sys, &b)?;
            match format {
                Format::Json => print_json(&json!({
                    "summary": report.summary(),
                    "halting": report.halting,
                    "witnesses": report.witnesses.iter().map(|(v, w)| json!({"result": v, "choices": w})).collect::<Vec<_>>(),
                }))?,
                Format::Text => print!("{}", report.to_text()),
            }
        }
        Command::Compare { machine, construction, bounds, format } => {
            let m = load_machine(&machine)?;
            let art = compile(&m, construction).map_err(|e| anyhow!("{e}"))?;
            let cmp = compare(&art, &bounds.bounds())?;
            match format {
                Format::Json => print_json(&json!(cmp))?,
                Format::Text => print!("{}", cmp.to_text()),
            }
            if !cmp.pass {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Validate { file } => {
            let text = std::fs::read_to_string(&file).with_context(|| format!("reading {file}"))?;
            let problems = if is_machine_file(&file) {
                let m = parse_machine(&text).map_err(|e| anyhow!("{file}: {e}"))?;
                machine_violations(&text, &m)
            } else {
                let sys = parse_system(&text).map_err(|e| anyhow!("{file}: {e}"))?;
                validate_system(&sys).iter().map(ToString::to_string).collect()
            };
            if problems.is_empty() {
                println!("{file}: ok");
            } else {
                for p in &problems {
                    println!("{file}: {p}");
                }
                return Ok(ExitCode::from(1));
            }
        }
        Command::Describe { file, construction } => {
            if construction.is_none() && (is_machine_file(&file) || !Path::new(&file).exists()) {
                let m = load_machine(&file)?;
                println!("registers: {}", m.registers);
                println!("instructions: {} ADD, {} SUB, 1 HALT", m.adds().count(), m.subs().count());
                println!("outputs: {}", m.outputs());
                print!("{m}");
                return Ok(ExitCode::SUCCESS);
            }
            let sys = load_system(&file, construction)?;
            println!("membranes: {}", shape(&sys.initial.skin));
            println!("objects: {}", sys.alphabet.len());
            let cats: Vec<&str> = sys.catalysts.iter().map(|&c| sys.name(c)).collect();
            println!("catalysts: {}", cats.join(" "));
            println!("mode: {}", mode_name(&sys.control));
            let v = sys.variant;
            println!("variant: mobile={} creation={} labeled-targets={}", v.mobile, v.creation, v.targets_labeled);
            for (region, rules) in &sys.rules {
                println!("rules in {region}: {}", rules.len());
            }
            let outs: Vec<&str> = sys.output_order.iter().map(|&s| sys.name(s)).collect();
            println!("output: {}", outs.join(" "));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
