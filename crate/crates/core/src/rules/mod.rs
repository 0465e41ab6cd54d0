//! Combination rules and the dispatcher that runs them.
//!
//! Every rule is generic over [`Scalar`] and runs either in floating point
//! or in exact rationals, as chosen by [`Options::arithmetic`].

mod classic;
mod core;
mod minc;
mod pcr;

use std::collections::BTreeMap;

use num_rational::BigRational;
use thiserror::Error;

use crate::bba::{Bba, BbaError, ConflictLedger, MassMatrix, NORMALIZATION_TOLERANCE};
use crate::engine::{
    ignorance_destination, Execution, Fallback, TooManyTerms, Workspace, MAX_TERMS,
};
use crate::lattice::{Element, Model};
use crate::numeric::{is_short_decimal, Arithmetic, Scalar, AUTO_EXACT_TERMS};

pub use self::classic::{
    dempster, dsm_hybrid, dubois_prade, smets, wao, wao_weights, weighted_operator, yager,
};
pub use self::core::{conjunctive, conjunctive_free, disjunctive, ebr_reallocate, RawConjunctive};
pub use self::minc::minc;
pub use self::pcr::{pcr1, pcr2, pcr3, pcr4, pcr5_approximate, pcr5_multi, pcr5_pair};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FusionError {
    #[error(transparent)]
    Bba(#[from] BbaError),
    #[error("total conflict (k = {0}); the rule is undefined")]
    TotalConflict(f64),
    #[error("too many terms to enumerate (limit {limit})")]
    TooManyTerms { limit: usize },
    #[error("{rule} needs {expected} sources, got {found}")]
    SourceCount {
        rule: &'static str,
        expected: &'static str,
        found: usize,
    },
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("invalid source order {0:?}")]
    InvalidOrder(Vec<usize>),
}

impl From<TooManyTerms> for FusionError {
    fn from(_: TooManyTerms) -> Self {
        FusionError::TooManyTerms { limit: MAX_TERMS }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WaoMode {
    Static,
    Dynamic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MinCVersion {
    /// Destinations are the unions of the conflict's components.
    A,
    /// Destinations are all non-empty subsets of u(X).
    B,
}

/// Coefficients w(X) of the weighted operator, ∅ included.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightAssignment {
    weights: BTreeMap<Element, f64>,
}

impl WeightAssignment {
    pub fn new<I: IntoIterator<Item = (Element, f64)>>(entries: I) -> Result<Self, FusionError> {
        let mut weights = BTreeMap::new();
        for (e, w) in entries {
            if !(0.0..=1.0).contains(&w) {
                return Err(FusionError::InvalidWeights(format!(
                    "weight {w} outside [0, 1]"
                )));
            }
            *weights.entry(e).or_insert(0.0) += w;
        }
        let total = <f64 as Scalar>::sum(weights.values().copied());
        if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(FusionError::InvalidWeights(format!(
                "weights sum to {total}"
            )));
        }
        Ok(WeightAssignment { weights })
    }

    pub fn weight(&self, element: &Element) -> f64 {
        self.weights.get(element).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Element, f64)> + '_ {
        self.weights.iter().map(|(e, w)| (e, *w))
    }
}

/// A combination rule with its options.
#[derive(Debug, Clone, PartialEq)]
pub enum Rule {
    Conjunctive,
    Disjunctive,
    Dempster,
    Smets,
    Yager,
    DuboisPrade,
    DsmHybrid,
    Weighted(WeightAssignment),
    Wao(WaoMode),
    MinC(MinCVersion),
    Pcr1,
    Pcr2,
    Pcr3,
    Pcr4,
    /// PCR5 through the product-term procedure, any number of sources.
    Pcr5,
    /// The two-source PCR5 formula.
    Pcr5Pair,
    /// Conjunctive fold of all but the last source, then pairwise PCR5.
    /// `None` keeps the matrix order.
    Pcr5Approximate(Option<Vec<usize>>),
}

impl Rule {
    pub fn name(&self) -> String {
        match self {
            Rule::Conjunctive => "conjunctive".into(),
            Rule::Disjunctive => "disjunctive".into(),
            Rule::Dempster => "dempster".into(),
            Rule::Smets => "smets".into(),
            Rule::Yager => "yager".into(),
            Rule::DuboisPrade => "dubois-prade".into(),
            Rule::DsmHybrid => "dsm-hybrid".into(),
            Rule::Weighted(_) => "weighted".into(),
            Rule::Wao(WaoMode::Static) => "wao".into(),
            Rule::Wao(WaoMode::Dynamic) => "wao-dynamic".into(),
            Rule::MinC(MinCVersion::A) => "minc".into(),
            Rule::MinC(MinCVersion::B) => "minc-b".into(),
            Rule::Pcr1 => "pcr1".into(),
            Rule::Pcr2 => "pcr2".into(),
            Rule::Pcr3 => "pcr3".into(),
            Rule::Pcr4 => "pcr4".into(),
            Rule::Pcr5 => "pcr5".into(),
            Rule::Pcr5Pair => "pcr5-pair".into(),
            Rule::Pcr5Approximate(_) => "pcr5-approx".into(),
        }
    }

    /// The standard rule list, in report order.
    pub fn registry(wao: WaoMode, minc: MinCVersion, pcr5: Rule) -> Vec<Rule> {
        vec![
            Rule::Conjunctive,
            Rule::Disjunctive,
            Rule::Dempster,
            Rule::Smets,
            Rule::Yager,
            Rule::DuboisPrade,
            Rule::DsmHybrid,
            Rule::Wao(wao),
            Rule::MinC(minc),
            Rule::Pcr1,
            Rule::Pcr2,
            Rule::Pcr3,
            Rule::Pcr4,
            pcr5,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Options {
    pub arithmetic: Arithmetic,
    pub execution: Execution,
}

/// How the output masses are to be read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Output {
    /// A closed-world bba.
    Closed,
    /// ∅ may carry mass.
    Open,
    /// Conjunctive consensus with its conflicting intersections kept.
    Raw,
}

/// One transfer of conflicting mass.
#[derive(Debug, Clone, PartialEq)]
pub struct Transfer {
    /// Index of the redistributed item (a partial conflict, a group or a
    /// product term); transfers of one item sum to `item_mass`.
    pub item: usize,
    /// Free-lattice form of the conflicting intersection.
    pub conflict: Element,
    /// Factors or components the item came from.
    pub factors: Vec<Element>,
    pub destination: Element,
    pub mass: f64,
    pub item_mass: f64,
    /// Σ of the proportional weights (K).
    pub normalizer: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FallbackEvent {
    pub item: usize,
    pub kind: Fallback,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub transfers: Vec<Transfer>,
    pub fallbacks: Vec<FallbackEvent>,
    /// Σ of the output masses.
    pub mass_sum: f64,
    /// Set when a closed-world result does not sum to 1.
    pub under_normalized: bool,
    /// Arithmetic actually used.
    pub arithmetic: Arithmetic,
    /// Source order, for order-dependent rules.
    pub order: Option<Vec<usize>>,
    pub note: Option<&'static str>,
}

/// Result of one combination.
#[derive(Debug, Clone, PartialEq)]
pub struct Fusion {
    pub rule: String,
    pub bba: Bba,
    pub output: Output,
    /// Total conflict k of the conjunctive stage.
    pub conflict: f64,
    pub diagnostics: Diagnostics,
    /// Exact masses when the rational path was used.
    pub exact: Option<BTreeMap<Element, BigRational>>,
}

impl Fusion {
    pub fn mass(&self, element: &Element) -> f64 {
        self.bba.mass(element)
    }

    /// Re-validates the output according to its kind. Flagged
    /// under-normalized results pass the sum check; ∅ is accepted in a
    /// closed world only when a fallback sent mass there.
    pub fn check(&self, model: &Model) -> Result<(), BbaError> {
        let frame = model.frame();
        let total = self.bba.total();
        if !self.diagnostics.under_normalized && (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(BbaError::NotNormalized(total));
        }
        let to_empty = self
            .diagnostics
            .fallbacks
            .iter()
            .any(|f| f.kind == Fallback::EmptySet);
        for (e, m) in self.bba.iter() {
            if m < 0.0 || !m.is_finite() {
                return Err(BbaError::NegativeMass {
                    element: frame.show(e),
                    mass: m,
                });
            }
            let allowed = match self.output {
                Output::Raw => true,
                Output::Open => e.is_classically_empty(),
                Output::Closed => e.is_classically_empty() && to_empty,
            };
            if !allowed && model.is_empty(e) {
                return Err(BbaError::MassOnEmpty {
                    element: frame.show(e),
                    mass: m,
                });
            }
        }
        Ok(())
    }
}

pub fn combine(matrix: &MassMatrix, rule: &Rule) -> Result<Fusion, FusionError> {
    combine_with(matrix, rule, &Options::default())
}

pub fn combine_with(
    matrix: &MassMatrix,
    rule: &Rule,
    options: &Options,
) -> Result<Fusion, FusionError> {
    if matrix.len() == 1 && *rule != Rule::Pcr5Pair {
        return Ok(echo(matrix, rule));
    }
    if resolve(matrix, options.arithmetic) == Arithmetic::Exact {
        finish(rule, run::<BigRational>(matrix, rule, options.execution)?)
    } else {
        finish(rule, run::<f64>(matrix, rule, options.execution)?)
    }
}

/// The arithmetic `Auto` would pick for this matrix.
pub fn resolve(matrix: &MassMatrix, arithmetic: Arithmetic) -> Arithmetic {
    match arithmetic {
        Arithmetic::Auto => {
            let short = matrix
                .sources()
                .iter()
                .all(|s| s.iter().all(|(_, m)| is_short_decimal(m)));
            let small = matrix.term_count().is_some_and(|c| c <= AUTO_EXACT_TERMS);
            if short && small {
                Arithmetic::Exact
            } else {
                Arithmetic::Float
            }
        }
        other => other,
    }
}

/// Folds `prior` with each observation in turn, keeping only the fused
/// result as the next prior. Returns the state after every step.
pub fn sequential_fusion(
    model: &Model,
    prior: &Bba,
    stream: &[Bba],
    rule: &Rule,
    options: &Options,
) -> Result<Vec<Fusion>, FusionError> {
    let mut state = prior.clone();
    let mut steps = Vec::with_capacity(stream.len());
    for observation in stream {
        let matrix = MassMatrix::new(model, vec![state, observation.clone()])?;
        let fused = combine_with(&matrix, rule, options)?;
        state = fused.bba.clone();
        steps.push(fused);
    }
    Ok(steps)
}

fn echo(matrix: &MassMatrix, rule: &Rule) -> Fusion {
    let bba = matrix.sources()[0].clone();
    let total = bba.total();
    Fusion {
        rule: rule.name(),
        bba,
        output: Output::Closed,
        conflict: 0.0,
        diagnostics: Diagnostics {
            transfers: Vec::new(),
            fallbacks: Vec::new(),
            mass_sum: total,
            under_normalized: false,
            arithmetic: Arithmetic::Float,
            order: None,
            note: Some("single source returned unchanged"),
        },
        exact: None,
    }
}

fn run<S: Scalar>(
    matrix: &MassMatrix,
    rule: &Rule,
    exec: Execution,
) -> Result<Computed<S>, FusionError> {
    if let Rule::Pcr5Approximate(order) = rule {
        return pcr::approximate::<S>(matrix, order.as_deref(), exec);
    }
    if *rule == Rule::Pcr5Pair && matrix.len() != 2 {
        return Err(FusionError::SourceCount {
            rule: "pcr5-pair",
            expected: "exactly 2",
            found: matrix.len(),
        });
    }
    if *rule == Rule::DuboisPrade || (*rule == Rule::Yager && matrix.len() > 2) {
        return classic::fold::<S>(matrix, rule, exec);
    }
    let ws = Workspace::<S>::from_matrix(matrix, exec)?;
    match rule {
        Rule::Conjunctive => Ok(self::core::raw(&ws)),
        Rule::Disjunctive => Ok(self::core::union(&ws)),
        Rule::Dempster => classic::dempster_rule(&ws),
        Rule::Smets => Ok(classic::smets_rule(&ws)),
        Rule::Yager => Ok(classic::yager_rule(&ws)),
        Rule::DsmHybrid => Ok(classic::hybrid_rule(&ws)),
        Rule::Weighted(w) => Ok(classic::weighted_rule(&ws, w)),
        Rule::Wao(mode) => Ok(classic::wao_rule(&ws, *mode)),
        Rule::MinC(v) => Ok(minc::minc_rule(&ws, *v)),
        Rule::Pcr1 => Ok(pcr::pcr1_rule(&ws)),
        Rule::Pcr2 => Ok(pcr::pcr2_rule(&ws)),
        Rule::Pcr3 => Ok(pcr::pcr3_rule(&ws)),
        Rule::Pcr4 => Ok(pcr::pcr4_rule(&ws)),
        Rule::Pcr5 => Ok(pcr::pcr5_rule(&ws, exec)),
        Rule::Pcr5Pair => Ok(pcr::pcr5_pair_rule(&ws)),
        Rule::DuboisPrade | Rule::Pcr5Approximate(_) => unreachable!("handled above"),
    }
}

fn finish<S: Scalar>(rule: &Rule, computed: Computed<S>) -> Result<Fusion, FusionError> {
    let Computed {
        outcome,
        conflict,
        output,
        order,
        note,
    } = computed;
    let masses: BTreeMap<Element, S> = outcome
        .masses
        .into_iter()
        .map(|(e, acc)| (e, S::total(&acc)))
        .filter(|(_, m)| *m > S::zero())
        .collect();
    let exact = masses
        .iter()
        .map(|(e, m)| m.to_rational().map(|r| (e.clone(), r)))
        .collect::<Option<BTreeMap<_, _>>>();
    let arithmetic = if exact.is_some() {
        Arithmetic::Exact
    } else {
        Arithmetic::Float
    };
    let bba = Bba::from_positive(
        masses
            .iter()
            .map(|(e, m)| (e.clone(), m.to_f64()))
            .collect(),
    );
    let mass_sum = bba.total();
    let under_normalized = output == Output::Closed && mass_sum < 1.0 - NORMALIZATION_TOLERANCE;
    Ok(Fusion {
        rule: rule.name(),
        bba,
        output,
        conflict: conflict.to_f64(),
        diagnostics: Diagnostics {
            transfers: outcome.transfers,
            fallbacks: outcome.fallbacks,
            mass_sum,
            under_normalized,
            arithmetic,
            order,
            note,
        },
        exact,
    })
}

pub(crate) struct Computed<S: Scalar> {
    pub outcome: Outcome<S>,
    pub conflict: S,
    pub output: Output,
    pub order: Option<Vec<usize>>,
    pub note: Option<&'static str>,
}

impl<S: Scalar> Computed<S> {
    pub fn closed(outcome: Outcome<S>, conflict: S) -> Self {
        Computed {
            outcome,
            conflict,
            output: Output::Closed,
            order: None,
            note: None,
        }
    }
}

/// Output masses under construction together with the transfer ledger.
pub(crate) struct Outcome<S: Scalar> {
    pub masses: BTreeMap<Element, S::Sum>,
    pub transfers: Vec<Transfer>,
    pub fallbacks: Vec<FallbackEvent>,
    items: usize,
}

impl<S: Scalar> Outcome<S> {
    pub fn new() -> Self {
        Outcome {
            masses: BTreeMap::new(),
            transfers: Vec::new(),
            fallbacks: Vec::new(),
            items: 0,
        }
    }

    /// Starts from the conjunctive masses on non-empty elements.
    pub fn conjunctive(ws: &Workspace<'_, S>) -> Self {
        let mut out = Outcome::new();
        for (e, m) in &ws.nonempty {
            out.add(e.clone(), m.clone());
        }
        out
    }

    pub fn add(&mut self, element: Element, mass: S) {
        S::add_to(self.masses.entry(element).or_default(), mass);
    }

    pub fn next_item(&mut self) -> usize {
        self.items += 1;
        self.items - 1
    }

    #[allow(clippy::too_many_arguments)]
    fn record(
        &mut self,
        item: usize,
        conflict: &Element,
        factors: &[Element],
        destination: Element,
        mass: S,
        item_mass: &S,
        normalizer: &S,
    ) {
        self.transfers.push(Transfer {
            item,
            conflict: conflict.clone(),
            factors: factors.to_vec(),
            destination: destination.clone(),
            mass: mass.to_f64(),
            item_mass: item_mass.to_f64(),
            normalizer: normalizer.to_f64(),
        });
        self.add(destination, mass);
    }

    /// Splits `item_mass` over `weighted` proportionally to the weights.
    /// Returns `false`, moving nothing, when the weights sum to zero.
    pub fn proportional(
        &mut self,
        item: usize,
        conflict: &Element,
        factors: &[Element],
        item_mass: &S,
        weighted: &[(Element, S)],
    ) -> bool {
        let norm = S::sum(weighted.iter().map(|(_, w)| w.clone()));
        if norm.is_zero() {
            return false;
        }
        for (dest, w) in weighted {
            if w.is_zero() {
                continue;
            }
            let share = item_mass.clone() * w.clone() / norm.clone();
            self.record(
                item,
                conflict,
                factors,
                dest.clone(),
                share,
                item_mass,
                &norm,
            );
        }
        true
    }

    /// Sends the whole item to one destination.
    pub fn whole(
        &mut self,
        item: usize,
        conflict: &Element,
        factors: &[Element],
        destination: Element,
        item_mass: &S,
    ) {
        self.record(
            item,
            conflict,
            factors,
            destination,
            item_mass.clone(),
            item_mass,
            item_mass,
        );
    }

    pub fn fallback(&mut self, item: usize, kind: Fallback, mass: &S) {
        self.fallbacks.push(FallbackEvent {
            item,
            kind,
            mass: mass.to_f64(),
        });
    }

    /// Runs the u(·) → I_t → θ0/∅ chain for an item.
    pub fn send_to_ignorance(
        &mut self,
        model: &Model,
        item: usize,
        conflict: &Element,
        factors: &[Element],
        labels: &Element,
        item_mass: &S,
    ) {
        let (dest, kind) = ignorance_destination(model, labels);
        self.fallback(item, kind, item_mass);
        self.whole(item, conflict, factors, dest, item_mass);
    }
}

/// Union of the labels of several elements, as a single clause.
pub(crate) fn label_union<'a, I: IntoIterator<Item = &'a Element>>(elements: I) -> Element {
    Element::clause(elements.into_iter().fold(0, |acc, e| acc | e.label_mask()))
}

/// Conflict ledger of the matrix's conjunctive stage.
pub fn conflict_ledger(matrix: &MassMatrix) -> Result<ConflictLedger, FusionError> {
    if resolve(matrix, Arithmetic::Auto) == Arithmetic::Exact {
        Ok(Workspace::<BigRational>::from_matrix(matrix, Execution::default())?.ledger())
    } else {
        Ok(Workspace::<f64>::from_matrix(matrix, Execution::default())?.ledger())
    }
}
