//! `pcr-fuse`: runs combination rules on a scenario file.

mod render;
mod report;
mod scenario;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use pcr_fusion::{Arithmetic, MinCVersion, Options, Rule, WaoMode, WeightAssignment};

use report::Choice;
use scenario::InputError;

const INPUT_ERROR: u8 = 2;
const COMPUTATION_ERROR: u8 = 3;

#[derive(Clone, Copy, ValueEnum)]
enum Version {
    A,
    B,
}

#[derive(Clone, Copy, ValueEnum)]
enum Wao {
    Static,
    Dynamic,
}

#[derive(Clone, Copy, ValueEnum)]
enum Pcr5 {
    Exact,
    Approx,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Machine,
}

#[derive(Clone, Copy, ValueEnum)]
enum Numbers {
    Auto,
    Float,
    Exact,
}

/// Combine the sources of a scenario file with belief-function fusion rules.
#[derive(Parser)]
#[command(name = "pcr-fuse", version)]
struct Args {
    /// Scenario JSON file.
    scenario: PathBuf,
    /// Rule to run; repeat for several. Defaults to the scenario's "rules", or every rule.
    #[arg(long = "rule", value_name = "NAME")]
    rules: Vec<String>,
    /// Run the full rule registry.
    #[arg(long, conflicts_with = "rules")]
    all: bool,
    /// Fold the first source with each later source and stream entry in turn.
    #[arg(long)]
    sequential: bool,
    /// Add the pairwise max-abs-difference matrix of the rules run.
    #[arg(long)]
    compare: bool,
    #[arg(long, value_enum, default_value = "a")]
    minc_version: Version,
    #[arg(long, value_enum, default_value = "static")]
    wao_mode: Wao,
    /// Which PCR5 `pcr5` and `--all` use.
    #[arg(long, value_enum, default_value = "exact")]
    pcr5: Pcr5,
    /// Source order for PCR5-approximate, one-based, e.g. 1,2,3.
    #[arg(long, value_delimiter = ',')]
    order: Option<Vec<usize>>,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
    /// Decimals in the table.
    #[arg(long, default_value_t = 6)]
    precision: usize,
    /// Arithmetic used for the combination.
    #[arg(long, value_enum, default_value = "auto")]
    arithmetic: Numbers,
}

fn rules(args: &Args, scenario: &scenario::Scenario) -> Result<Vec<Rule>, InputError> {
    let order = match &args.order {
        None => None,
        Some(o) => {
            if o.contains(&0) {
                return Err(InputError("--order is one-based".into()));
            }
            Some(o.iter().map(|i| i - 1).collect())
        }
    };
    let weights = match &scenario.weights {
        None => None,
        Some(w) => Some(
            WeightAssignment::new(w.iter().cloned())
                .map_err(|e| InputError(format!("weights: {e}")))?,
        ),
    };
    let choice = Choice {
        wao: match args.wao_mode {
            Wao::Static => WaoMode::Static,
            Wao::Dynamic => WaoMode::Dynamic,
        },
        minc: match args.minc_version {
            Version::A => MinCVersion::A,
            Version::B => MinCVersion::B,
        },
        approximate: matches!(args.pcr5, Pcr5::Approx),
        order,
        weights,
    };
    let names: &[String] = if !args.rules.is_empty() {
        &args.rules
    } else if !args.all && !scenario.rules.is_empty() {
        &scenario.rules
    } else {
        return Ok(choice.registry());
    };
    let mut out: Vec<Rule> = Vec::new();
    for name in names {
        let rule = choice.rule(name).map_err(InputError)?;
        if !out.contains(&rule) {
            out.push(rule);
        }
    }
    Ok(out)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let scenario = match scenario::load(&args.scenario) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(INPUT_ERROR);
        }
    };
    let rules = match rules(&args, &scenario) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {}: {e}", args.scenario.display());
            return ExitCode::from(INPUT_ERROR);
        }
    };
    if args.sequential && scenario.sources.len() + scenario.stream.len() < 2 {
        eprintln!(
            "error: {}: sequential mode needs a prior and at least one observation",
            args.scenario.display()
        );
        return ExitCode::from(INPUT_ERROR);
    }
    let options = Options {
        arithmetic: match args.arithmetic {
            Numbers::Auto => Arithmetic::Auto,
            Numbers::Float => Arithmetic::Float,
            Numbers::Exact => Arithmetic::Exact,
        },
        ..Options::default()
    };
    let report = report::run(&scenario, &rules, args.sequential, args.compare, &options);
    match args.format {
        Format::Table => print!(
            "{}",
            render::table(&report, scenario.model.frame(), args.precision)
        ),
        Format::Machine => println!(
            "{}",
            serde_json::to_string_pretty(&report).expect("report serializes")
        ),
    }
    let failed: Vec<&str> = report
        .results
        .iter()
        .filter(|r| r.error.is_some())
        .map(|r| r.rule.as_str())
        .collect();
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        for r in &report.results {
            if let Some(e) = &r.error {
                eprintln!("error: {}: {e}", r.rule);
            }
        }
        ExitCode::from(COMPUTATION_ERROR)
    }
}
