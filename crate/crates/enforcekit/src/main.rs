//! `enforcekit` — validate enforcement models, rewrite traces, generate
//! hook modules, and run simulator scenarios, corpora, and benches.
//!
//! Exit codes: 0 success, 1 domain failure (validation errors, expectation
//! mismatch), 2 input error (unreadable or malformed files).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use enforcekit::codegen::{self, ProfileKind, TargetProfile};
use enforcekit::engine::{Session, SessionConfig};
use enforcekit::model::{EnforcementModel, Trace};
use enforcekit::sim;
use enforcekit::spec_io::{self, ApiCatalog};

#[derive(Parser)]
#[command(
    name = "enforcekit",
    version,
    about = "Runtime enforcement toolkit for API usage policies"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Args)]
struct OutputArgs {
    /// Emit machine-readable JSON instead of text
    #[arg(long)]
    json: bool,
    /// Write the primary output to this path instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Validate a model against a catalog
    Validate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        catalog: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Rewrite a trace through one or more models
    Enforce {
        /// Model file; repeat to chain models in activation order
        #[arg(long, required = true)]
        model: Vec<PathBuf>,
        #[arg(long)]
        trace: PathBuf,
        /// Catalog for subclass matching and resource semantics
        #[arg(long)]
        catalog: Option<PathBuf>,
        #[command(flatten)]
        output: OutputArgs,
        /// Where to write the enforcement report (JSON)
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Generate hook-module source from a model
    Gen {
        #[arg(long)]
        model: PathBuf,
        /// Target profile: xposed-java or simscript
        #[arg(long, value_parser = parse_profile)]
        profile: ProfileKind,
        /// Output directory for the generated file
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Run one scenario with enforcement on or off
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        catalog: PathBuf,
        /// Model file; defaults to the models the scenario names
        #[arg(long)]
        model: Vec<PathBuf>,
        #[arg(long, value_enum, default_value = "on")]
        enforce: Switch,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Run a corpus directory (cases/ and models/) and tally verdicts
    Corpus {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        catalog: PathBuf,
        #[arg(long, value_enum, default_value = "on")]
        enforce: Switch,
        /// Fail unless the tally is exactly HEALED:NOVIOLATION
        #[arg(long, value_parser = parse_expect)]
        expect: Option<(usize, usize)>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Measure per-event dispatch overhead for 0..=N deployed modules
    Bench {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        catalog: PathBuf,
        /// Base model to replicate; defaults to the scenario's models
        #[arg(long)]
        model: Vec<PathBuf>,
        /// Largest module count to deploy
        #[arg(long, default_value_t = 60)]
        modules: usize,
        #[arg(long, default_value_t = 10)]
        reps: usize,
        /// Seed for measurement-order shuffling
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
}

fn parse_profile(s: &str) -> Result<ProfileKind, String> {
    s.parse()
}

fn parse_expect(s: &str) -> Result<(usize, usize), String> {
    let (h, v) =
        s.split_once(':').ok_or_else(|| "expected HEALED:NOVIOLATION, e.g. 17:10".to_string())?;
    Ok((
        h.parse().map_err(|e| format!("bad healed count: {e}"))?,
        v.parse().map_err(|e| format!("bad no-violation count: {e}"))?,
    ))
}

enum CliError {
    /// Unreadable or malformed input: exit 2.
    Input(String),
    /// The inputs were fine but the domain outcome is a failure: exit 1.
    Domain(String),
}

impl CliError {
    fn input(e: impl ToString) -> Self {
        CliError::Input(e.to_string())
    }
}

fn emit(text: String, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text).map_err(CliError::input),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

fn load_catalog(path: &Path) -> Result<ApiCatalog, CliError> {
    spec_io::load_catalog(path).map_err(CliError::input)
}

fn load_models(paths: &[PathBuf]) -> Result<Vec<EnforcementModel>, CliError> {
    paths.iter().map(|p| spec_io::load_model(p).map_err(CliError::input)).collect()
}

/// Validates every model against the catalog; any error finding is a
/// domain failure.
fn require_valid(models: &[EnforcementModel], catalog: &ApiCatalog) -> Result<(), CliError> {
    for m in models {
        let report = spec_io::validate_model(m, catalog);
        if !report.is_deployable() {
            let first = &report.errors[0];
            return Err(CliError::Domain(format!(
                "model `{}` fails validation: {} at {}: {} ({} error(s))",
                m.name,
                first.code,
                first.location,
                first.message,
                report.errors.len()
            )));
        }
    }
    Ok(())
}

fn resolve_scenario_models(
    scenario_path: &Path,
    scenario: &sim::Scenario,
) -> Result<Vec<PathBuf>, CliError> {
    let dir = scenario_path.parent().unwrap_or_else(|| Path::new("."));
    let mut out = Vec::new();
    for stem in &scenario.models {
        let candidates = [
            dir.join("..").join("models").join(format!("{stem}.json")),
            dir.join("models").join(format!("{stem}.json")),
            dir.join(format!("{stem}.json")),
            // the shipped layout: scenarios/ next to corpus/models/
            dir.join("..").join("corpus").join("models").join(format!("{stem}.json")),
        ];
        match candidates.iter().find(|p| p.exists()) {
            Some(p) => out.push(p.clone()),
            None => {
                return Err(CliError::Input(format!(
                    "cannot resolve model `{stem}` near {}",
                    scenario_path.display()
                )))
            }
        }
    }
    Ok(out)
}

fn cmd_validate(model: &Path, catalog: &Path, output: &OutputArgs) -> Result<(), CliError> {
    let catalog = load_catalog(catalog)?;
    let model = spec_io::load_model(model).map_err(CliError::input)?;
    let report = spec_io::validate_model(&model, &catalog);
    let text = if output.json {
        to_json(&report)
    } else {
        let mut t = String::new();
        for f in &report.errors {
            t.push_str(&format!(
                "error  {:<22} {:<16} {}\n",
                f.code.to_string(),
                f.location,
                f.message
            ));
        }
        for f in &report.warnings {
            t.push_str(&format!(
                "warn   {:<22} {:<16} {}\n",
                f.code.to_string(),
                f.location,
                f.message
            ));
        }
        t.push_str(&format!(
            "model `{}`: {} error(s), {} warning(s)\n",
            model.name,
            report.errors.len(),
            report.warnings.len()
        ));
        t
    };
    emit(text, output.out.as_deref())?;
    if report.is_deployable() {
        Ok(())
    } else {
        Err(CliError::Domain(format!("model `{}` is not deployable", model.name)))
    }
}

fn cmd_enforce(
    model_paths: &[PathBuf],
    trace: &Path,
    catalog: Option<&Path>,
    output: &OutputArgs,
    report_path: Option<&Path>,
) -> Result<(), CliError> {
    let models = load_models(model_paths)?;
    let trace_in = spec_io::load_trace(trace).map_err(CliError::input)?;
    let mut cfg = SessionConfig::default();
    if let Some(path) = catalog {
        let catalog = load_catalog(path)?;
        require_valid(&models, &catalog)?;
        cfg.hierarchy = catalog.hierarchy();
        cfg.resource_profiles = catalog.resource_profiles();
    }
    let mut session = Session::new(models, cfg).map_err(|e| CliError::Domain(e.to_string()))?;
    let events_out: Vec<_> =
        trace_in.events.iter().cloned().flat_map(|ev| session.dispatch(ev)).collect();
    let report = session.finalize();

    let trace_out = Trace::new(events_out);
    match output.out.as_deref() {
        Some(path) => spec_io::store_trace(&trace_out, path).map_err(CliError::input)?,
        None => {
            for ev in &trace_out.events {
                println!("{}", serde_json::to_string(ev).expect("event serializes"));
            }
        }
    }
    if let Some(path) = report_path {
        fs::write(path, to_json(&report)).map_err(CliError::input)?;
    } else if output.json {
        print!("{}", to_json(&report));
    } else {
        eprintln!(
            "events: {} in, {} out; suppressed {}, inserted {}, resumes {}",
            report.totals.events_in,
            report.totals.events_out,
            report.totals.suppressed,
            report.totals.inserted,
            report.totals.resumes
        );
    }
    Ok(())
}

fn cmd_gen(model: &Path, profile: ProfileKind, out_dir: &Path, json: bool) -> Result<(), CliError> {
    let model = spec_io::load_model(model).map_err(CliError::input)?;
    let profile = TargetProfile::by_kind(profile);
    let module =
        codegen::generate(&model, &profile).map_err(|e| CliError::Domain(e.to_string()))?;
    fs::create_dir_all(out_dir).map_err(CliError::input)?;
    let file = out_dir.join(codegen::output_file_name(&model, profile.kind));
    fs::write(&file, &module.source_text).map_err(CliError::input)?;
    if json {
        print!(
            "{}",
            to_json(&serde_json::json!({
                "file": file.display().to_string(),
                "sections": codegen::section_report(&module),
            }))
        );
    } else {
        println!("wrote {}", file.display());
        for name in codegen::section_report(&module) {
            println!("  section {name}");
        }
    }
    Ok(())
}

fn cmd_run(
    scenario_path: &Path,
    catalog: &Path,
    model_paths: &[PathBuf],
    enforce: Switch,
    output: &OutputArgs,
) -> Result<(), CliError> {
    let catalog = load_catalog(catalog)?;
    let scenario = sim::load_scenario(scenario_path).map_err(CliError::input)?;
    let model_paths = if model_paths.is_empty() {
        resolve_scenario_models(scenario_path, &scenario)?
    } else {
        model_paths.to_vec()
    };
    let models = load_models(&model_paths)?;
    require_valid(&models, &catalog)?;
    let outcome = sim::run_scenario(&scenario, &models, enforce == Switch::On, &catalog).map_err(
        |e| match e {
            sim::SimError::Scenario(_) | sim::SimError::MissingFixture(_) => CliError::input(e),
            other => CliError::Domain(other.to_string()),
        },
    )?;
    let text = if output.json {
        to_json(&outcome)
    } else {
        let mut t = format!(
            "scenario {}: verdict {:?} (enforcement {})\n",
            outcome.scenario,
            outcome.verdict,
            if outcome.enforcement { "on" } else { "off" }
        );
        for e in &outcome.exceptions {
            t.push_str(&format!("  exception at step {}: {}\n", e.step, e.kind));
        }
        for l in &outcome.leaks {
            t.push_str(&format!(
                "  leak: {} held by component {} (receiver {})\n",
                l.class, l.component, l.receiver
            ));
        }
        if let Some(report) = &outcome.report {
            t.push_str(&format!(
                "  events: {} in, {} out; suppressed {}, inserted {}, resumes {}\n",
                report.totals.events_in,
                report.totals.events_out,
                report.totals.suppressed,
                report.totals.inserted,
                report.totals.resumes
            ));
        }
        t
    };
    emit(text, output.out.as_deref())
}

fn cmd_corpus(
    corpus: &Path,
    catalog: &Path,
    enforce: Switch,
    expect: Option<(usize, usize)>,
    output: &OutputArgs,
) -> Result<(), CliError> {
    let catalog = load_catalog(catalog)?;
    let report = sim::run_corpus(
        &corpus.join("cases"),
        &corpus.join("models"),
        &catalog,
        enforce == Switch::On,
    )
    .map_err(|e| match e {
        sim::SimError::MissingFixture(_) => CliError::input(e),
        other => CliError::Domain(other.to_string()),
    })?;
    let text = if output.json { to_json(&report) } else { report.text_table() };
    emit(text, output.out.as_deref())?;
    if let Some((healed, no_violation)) = expect {
        if report.healed != healed || report.no_violation != no_violation {
            return Err(CliError::Domain(format!(
                "expected {healed}:{no_violation}, got {}:{}",
                report.healed, report.no_violation
            )));
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_bench(
    scenario_path: &Path,
    catalog: &Path,
    model_paths: &[PathBuf],
    modules: usize,
    reps: usize,
    seed: u64,
    output: &OutputArgs,
) -> Result<(), CliError> {
    let catalog = load_catalog(catalog)?;
    let scenario = sim::load_scenario(scenario_path).map_err(CliError::input)?;
    let model_paths = if model_paths.is_empty() {
        resolve_scenario_models(scenario_path, &scenario)?
    } else {
        model_paths.to_vec()
    };
    let models = load_models(&model_paths)?;
    require_valid(&models, &catalog)?;
    let report = sim::bench_overhead(&scenario, &models, &catalog, modules, reps, seed)
        .map_err(|e| CliError::Domain(e.to_string()))?;
    let text = if output.json { to_json(&report) } else { report.to_csv() };
    emit(text, output.out.as_deref())?;
    if output.out.is_some() && !output.json {
        let o1 = report.overhead_for(1).unwrap_or(0.0);
        let omax = report.overhead_for(modules).unwrap_or(0.0);
        println!(
            "bench {}: {} reps, {} events/run; overhead {o1:.1}% @1 module, {omax:.1}% @{modules}",
            report.scenario, report.repetitions, report.events_per_run
        );
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match &cli.cmd {
        Cmd::Validate { model, catalog, output } => cmd_validate(model, catalog, output),
        Cmd::Enforce { model, trace, catalog, output, report } => {
            cmd_enforce(model, trace, catalog.as_deref(), output, report.as_deref())
        }
        Cmd::Gen { model, profile, out, json } => cmd_gen(model, *profile, out, *json),
        Cmd::Run { scenario, catalog, model, enforce, output } => {
            cmd_run(scenario, catalog, model, *enforce, output)
        }
        Cmd::Corpus { corpus, catalog, enforce, expect, output } => {
            cmd_corpus(corpus, catalog, *enforce, *expect, output)
        }
        Cmd::Bench { scenario, catalog, model, modules, reps, seed, output } => {
            cmd_bench(scenario, catalog, model, *modules, *reps, *seed, output)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Domain(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
