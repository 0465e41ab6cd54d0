//! Running the selected rules and collecting what gets printed.

use pcr_fusion::{
    combine_with, sequential_fusion, Arithmetic, Bba, Element, Fallback, Frame, Fusion, MassMatrix,
    MinCVersion, Model, Options, Output, Rule, WaoMode, WeightAssignment,
};
use serde::Serialize;

use crate::scenario::{Kind, Scenario, WorldSpec};

/// Rules closer than this in every mass are reported as coinciding.
pub const COINCIDENCE: f64 = 1e-9;

pub struct Choice {
    pub wao: WaoMode,
    pub minc: MinCVersion,
    pub approximate: bool,
    /// Zero-based source order for PCR5-approximate.
    pub order: Option<Vec<usize>>,
    pub weights: Option<WeightAssignment>,
}

pub const RULE_NAMES: &[&str] = &[
    "conjunctive",
    "disjunctive",
    "dempster",
    "smets",
    "yager",
    "dubois-prade",
    "dsm-hybrid",
    "weighted",
    "wao",
    "wao-dynamic",
    "minc",
    "minc-a",
    "minc-b",
    "pcr1",
    "pcr2",
    "pcr3",
    "pcr4",
    "pcr5",
    "pcr5-pair",
    "pcr5-approx",
];

impl Choice {
    fn pcr5(&self) -> Rule {
        if self.approximate {
            Rule::Pcr5Approximate(self.order.clone())
        } else {
            Rule::Pcr5
        }
    }

    pub fn rule(&self, name: &str) -> Result<Rule, String> {
        Ok(match name.to_ascii_lowercase().as_str() {
            "conjunctive" => Rule::Conjunctive,
            "disjunctive" => Rule::Disjunctive,
            "dempster" => Rule::Dempster,
            "smets" => Rule::Smets,
            "yager" => Rule::Yager,
            "dubois-prade" | "dp" => Rule::DuboisPrade,
            "dsm-hybrid" | "dsmh" => Rule::DsmHybrid,
            "weighted" => match &self.weights {
                Some(w) => Rule::Weighted(w.clone()),
                None => {
                    return Err("rule `weighted` needs a \"weights\" table in the scenario".into())
                }
            },
            "wao" => Rule::Wao(self.wao),
            "wao-static" => Rule::Wao(WaoMode::Static),
            "wao-dynamic" => Rule::Wao(WaoMode::Dynamic),
            "minc" => Rule::MinC(self.minc),
            "minc-a" => Rule::MinC(MinCVersion::A),
            "minc-b" => Rule::MinC(MinCVersion::B),
            "pcr1" => Rule::Pcr1,
            "pcr2" => Rule::Pcr2,
            "pcr3" => Rule::Pcr3,
            "pcr4" => Rule::Pcr4,
            "pcr5" => self.pcr5(),
            "pcr5-pair" => Rule::Pcr5Pair,
            "pcr5-approx" => Rule::Pcr5Approximate(self.order.clone()),
            _ => {
                return Err(format!(
                    "unknown rule `{name}` (known: {})",
                    RULE_NAMES.join(", ")
                ))
            }
        })
    }

    pub fn registry(&self) -> Vec<Rule> {
        Rule::registry(self.wao, self.minc, self.pcr5())
    }
}

#[derive(Serialize)]
pub struct Report {
    pub scenario: String,
    pub frame: Vec<String>,
    pub model: ModelOut,
    pub mode: &'static str,
    pub sources: usize,
    pub observations: usize,
    pub results: Vec<RuleResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub comparison: Option<Comparison>,
}

#[derive(Serialize)]
pub struct ModelOut {
    pub kind: &'static str,
    pub empty: Vec<String>,
    pub world: &'static str,
    pub theta0: bool,
    pub dynamic: bool,
}

#[derive(Serialize)]
pub struct RuleResult {
    pub rule: String,
    pub steps: Vec<Step>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip)]
    pub bbas: Vec<Bba>,
}

#[derive(Serialize)]
pub struct Step {
    pub output: &'static str,
    pub conflict: f64,
    pub masses: Vec<MassOut>,
    pub mass_sum: f64,
    pub under_normalized: bool,
    pub arithmetic: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<&'static str>,
    pub transfers: Vec<TransferOut>,
    pub fallbacks: Vec<FallbackOut>,
}

#[derive(Serialize)]
pub struct MassOut {
    pub element: String,
    pub mass: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<String>,
}

#[derive(Serialize)]
pub struct TransferOut {
    pub item: usize,
    pub conflict: String,
    pub factors: Vec<String>,
    pub destination: String,
    pub mass: f64,
    pub item_mass: f64,
    pub normalizer: f64,
}

#[derive(Serialize)]
pub struct FallbackOut {
    pub item: usize,
    pub kind: &'static str,
    pub mass: f64,
}

#[derive(Serialize)]
pub struct Comparison {
    pub rules: Vec<String>,
    /// Largest absolute mass difference between two rules' final outputs;
    /// `null` when either rule failed.
    pub max_abs_diff: Vec<Vec<Option<f64>>>,
    pub coincident: Vec<[String; 2]>,
}

pub fn fallback_name(kind: Fallback) -> &'static str {
    match kind {
        Fallback::ColumnSums => "column-sums",
        Fallback::Disjunctive => "disjunctive-form",
        Fallback::TotalIgnorance => "total-ignorance",
        Fallback::Closure => "theta0",
        Fallback::EmptySet => "empty-set",
    }
}

fn output_name(output: Output) -> &'static str {
    match output {
        Output::Closed => "closed",
        Output::Open => "open",
        Output::Raw => "raw",
    }
}

fn step(frame: &Frame, fused: &Fusion) -> Step {
    let show = |e: &Element| frame.show(e);
    let masses = fused
        .bba
        .iter()
        .map(|(e, m)| MassOut {
            element: show(e),
            mass: m,
            exact: fused
                .exact
                .as_ref()
                .and_then(|x| x.get(e))
                .map(ToString::to_string),
        })
        .collect();
    let d = &fused.diagnostics;
    Step {
        output: output_name(fused.output),
        conflict: fused.conflict,
        masses,
        mass_sum: d.mass_sum,
        under_normalized: d.under_normalized,
        arithmetic: match d.arithmetic {
            Arithmetic::Exact => "exact",
            _ => "float",
        },
        order: d.order.as_ref().map(|o| o.iter().map(|i| i + 1).collect()),
        note: d.note,
        transfers: d
            .transfers
            .iter()
            .map(|t| TransferOut {
                item: t.item,
                conflict: show(&t.conflict),
                factors: t.factors.iter().map(show).collect(),
                destination: show(&t.destination),
                mass: t.mass,
                item_mass: t.item_mass,
                normalizer: t.normalizer,
            })
            .collect(),
        fallbacks: d
            .fallbacks
            .iter()
            .map(|f| FallbackOut {
                item: f.item,
                kind: fallback_name(f.kind),
                mass: f.mass,
            })
            .collect(),
    }
}

fn revalidate(model: &Model, fused: &Fusion) -> Result<(), String> {
    if fused.output == Output::Closed && !fused.diagnostics.under_normalized {
        fused
            .check(model)
            .map_err(|e| format!("output failed validation: {e}"))?;
    }
    Ok(())
}

fn run_rule(scenario: &Scenario, rule: &Rule, sequential: bool, options: &Options) -> RuleResult {
    let frame = scenario.model.frame();
    let mut result = RuleResult {
        rule: rule.name(),
        steps: Vec::new(),
        error: None,
        bbas: Vec::new(),
    };
    let fusions = if sequential {
        let (prior, rest) = scenario.sources.split_first().expect("at least one source");
        let stream: Vec<Bba> = rest.iter().chain(&scenario.stream).cloned().collect();
        let mut fusions = Vec::new();
        let mut state = prior.clone();
        for observation in &stream {
            match sequential_fusion(
                &scenario.model,
                &state,
                std::slice::from_ref(observation),
                rule,
                options,
            ) {
                Ok(mut steps) => {
                    let fused = steps.pop().expect("one step");
                    state = fused.bba.clone();
                    fusions.push(fused);
                }
                Err(e) => {
                    result.error = Some(format!("step {}: {e}", fusions.len() + 1));
                    break;
                }
            }
        }
        fusions
    } else {
        let matrix = match MassMatrix::new(&scenario.model, scenario.sources.clone()) {
            Ok(m) => m,
            Err(e) => {
                result.error = Some(e.to_string());
                return result;
            }
        };
        match combine_with(&matrix, rule, options) {
            Ok(fused) => vec![fused],
            Err(e) => {
                result.error = Some(e.to_string());
                Vec::new()
            }
        }
    };
    for fused in fusions {
        if let Err(e) = revalidate(&scenario.model, &fused) {
            result.error.get_or_insert(e);
        }
        result.steps.push(step(frame, &fused));
        result.bbas.push(fused.bba);
    }
    result
}

fn compare(results: &[RuleResult]) -> Comparison {
    let finals: Vec<Option<&Bba>> = results
        .iter()
        .map(|r| {
            if r.error.is_none() {
                r.bbas.last()
            } else {
                None
            }
        })
        .collect();
    let mut matrix = Vec::with_capacity(results.len());
    let mut coincident = Vec::new();
    for (i, a) in finals.iter().enumerate() {
        let mut row = Vec::with_capacity(results.len());
        for (j, b) in finals.iter().enumerate() {
            let gap = match (a, b) {
                (Some(a), Some(b)) => Some(a.max_abs_diff(b)),
                _ => None,
            };
            if j > i && gap.is_some_and(|g| g <= COINCIDENCE) {
                coincident.push([results[i].rule.clone(), results[j].rule.clone()]);
            }
            row.push(gap);
        }
        matrix.push(row);
    }
    Comparison {
        rules: results.iter().map(|r| r.rule.clone()).collect(),
        max_abs_diff: matrix,
        coincident,
    }
}

pub fn run(
    scenario: &Scenario,
    rules: &[Rule],
    sequential: bool,
    comparison: bool,
    options: &Options,
) -> Report {
    let results: Vec<RuleResult> = rules
        .iter()
        .map(|r| run_rule(scenario, r, sequential, options))
        .collect();
    let frame = scenario.model.frame();
    let spec = &scenario.spec;
    Report {
        scenario: scenario.name.clone(),
        frame: frame.labels().to_vec(),
        model: ModelOut {
            kind: match spec.kind {
                Kind::Shafer => "shafer",
                Kind::Free => "free",
                Kind::Hybrid => "hybrid",
            },
            empty: scenario
                .model
                .constraints()
                .iter()
                .map(|e| frame.show(e))
                .collect(),
            world: match spec.world {
                WorldSpec::Closed => "closed",
                WorldSpec::Open => "open",
            },
            theta0: spec.theta0,
            dynamic: spec.dynamic,
        },
        mode: if sequential { "sequential" } else { "combine" },
        sources: scenario.sources.len(),
        observations: if sequential {
            scenario.sources.len() - 1 + scenario.stream.len()
        } else {
            0
        },
        comparison: comparison.then(|| compare(&results)),
        results,
    }
}
