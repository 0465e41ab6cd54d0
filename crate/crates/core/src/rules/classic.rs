//! Dempster, Smets, Yager, Dubois-Prade, the hybrid DSm rule, the weighted
//! operator and WAO.

use crate::bba::MassMatrix;
use crate::engine::{Execution, Focal, Workspace};
use crate::lattice::Element;
use crate::numeric::Scalar;

use super::{
    combine, label_union, Computed, Fusion, FusionError, Outcome, Output, Rule, WaoMode,
    WeightAssignment,
};

/// k at or above `1 - TOTAL_CONFLICT_MARGIN` makes Dempster's rule undefined.
pub const TOTAL_CONFLICT_MARGIN: f64 = 1e-12;

pub fn dempster(matrix: &MassMatrix) -> Result<Fusion, FusionError> {
    combine(matrix, &Rule::Dempster)
}

pub fn smets(matrix: &MassMatrix) -> Result<Fusion, FusionError> {
    combine(matrix, &Rule::Smets)
}

pub fn yager(matrix: &MassMatrix) -> Result<Fusion, FusionError> {
    combine(matrix, &Rule::Yager)
}

pub fn dubois_prade(matrix: &MassMatrix) -> Result<Fusion, FusionError> {
    combine(matrix, &Rule::DuboisPrade)
}

pub fn dsm_hybrid(matrix: &MassMatrix) -> Result<Fusion, FusionError> {
    combine(matrix, &Rule::DsmHybrid)
}

pub fn weighted_operator(
    matrix: &MassMatrix,
    weights: &WeightAssignment,
) -> Result<Fusion, FusionError> {
    combine(matrix, &Rule::Weighted(weights.clone()))
}

pub fn wao(matrix: &MassMatrix, mode: WaoMode) -> Result<Fusion, FusionError> {
    combine(matrix, &Rule::Wao(mode))
}

/// w(X) = c(X)/s over the focal elements of the matrix.
pub fn wao_weights(matrix: &MassMatrix) -> WeightAssignment {
    let s = matrix.len() as f64;
    WeightAssignment::new(matrix.columns().iter().map(|(e, c)| (e.clone(), c / s)))
        .expect("column sums add up to s")
}

pub(super) fn dempster_rule<S: Scalar>(ws: &Workspace<'_, S>) -> Result<Computed<S>, FusionError> {
    let k = ws.k.to_f64();
    if k >= 1.0 - TOTAL_CONFLICT_MARGIN {
        return Err(FusionError::TotalConflict(k));
    }
    let scale = S::one() - ws.k.clone();
    let mut out = Outcome::new();
    for (e, m) in &ws.nonempty {
        out.add(e.clone(), m.clone() / scale.clone());
    }
    Ok(Computed::closed(out, ws.k.clone()))
}

pub(super) fn smets_rule<S: Scalar>(ws: &Workspace<'_, S>) -> Computed<S> {
    let mut out = Outcome::conjunctive(ws);
    if !ws.k.is_zero() {
        out.add(ws.model.empty_target(), ws.k.clone());
    }
    Computed {
        output: Output::Open,
        ..Computed::closed(out, ws.k.clone())
    }
}

pub(super) fn yager_rule<S: Scalar>(ws: &Workspace<'_, S>) -> Computed<S> {
    let mut out = Outcome::conjunctive(ws);
    if !ws.k.is_zero() {
        let item = out.next_item();
        let top = ws.model.frame().total_ignorance();
        let factors: Vec<Element> = ws.conflicts.keys().cloned().collect();
        match ws.model.total_ignorance() {
            Some(t) => out.whole(item, &Element::empty(), &factors, t, &ws.k),
            None => out.send_to_ignorance(ws.model, item, &Element::empty(), &factors, &top, &ws.k),
        }
    }
    Computed::closed(out, ws.k.clone())
}

fn dubois_prade_step<S: Scalar>(ws: &Workspace<'_, S>) -> Computed<S> {
    let mut out = Outcome::conjunctive(ws);
    for t in ws.conflict_terms() {
        let factors: Vec<Element> = ws.factors(t).map(|f| f.element.clone()).collect();
        let join = factors[1..]
            .iter()
            .fold(factors[0].clone(), |acc, f| acc.join(f));
        let item = out.next_item();
        match ws.model.reduce(&join) {
            Some(r) => out.whole(item, &t.meet, &factors, r, &t.product),
            None => {
                let labels = label_union(&factors);
                out.send_to_ignorance(ws.model, item, &t.meet, &factors, &labels, &t.product);
            }
        }
    }
    Computed::closed(out, ws.k.clone())
}

/// Pairwise rules applied left to right over the sources.
pub(super) fn fold<S: Scalar>(
    matrix: &MassMatrix,
    rule: &Rule,
    exec: Execution,
) -> Result<Computed<S>, FusionError> {
    let step = |ws: &Workspace<'_, S>| match rule {
        Rule::Yager => yager_rule(ws),
        _ => dubois_prade_step(ws),
    };
    let model = matrix.model();
    let mut sources: Vec<Vec<Focal<S>>> = matrix
        .sources()
        .iter()
        .map(|b| crate::engine::lift(b, model))
        .collect();
    if sources.len() == 2 {
        let ws = Workspace::new(model, sources, exec)?;
        return Ok(step(&ws));
    }
    let conflict = Workspace::<S>::new(model, sources.clone(), exec)?.k;
    let rest = sources.split_off(1);
    let mut state = sources.pop().expect("at least two sources");
    let mut transfers = Vec::new();
    let mut fallbacks = Vec::new();
    let mut last = None;
    for next in rest {
        let ws = Workspace::new(model, vec![state, next], exec)?;
        let computed = step(&ws);
        let offset = transfers
            .iter()
            .map(|t: &super::Transfer| t.item + 1)
            .max()
            .unwrap_or(0);
        let mut outcome = computed.outcome;
        transfers.extend(outcome.transfers.drain(..).map(|mut t| {
            t.item += offset;
            t
        }));
        fallbacks.extend(outcome.fallbacks.drain(..).map(|mut f| {
            f.item += offset;
            f
        }));
        state = outcome
            .masses
            .iter()
            .map(|(e, acc)| Focal {
                element: e.clone(),
                mass: S::total(acc),
                empty: model.is_empty(e),
            })
            .filter(|f| !f.mass.is_zero())
            .collect();
        last = Some(outcome);
    }
    let mut outcome = last.expect("at least one fold step");
    outcome.transfers = transfers;
    outcome.fallbacks = fallbacks;
    Ok(Computed {
        note: Some("pairwise rule folded left to right; depends on source order"),
        ..Computed::closed(outcome, conflict)
    })
}

pub(super) fn hybrid_rule<S: Scalar>(ws: &Workspace<'_, S>) -> Computed<S> {
    let mut out = Outcome::new();
    for t in &ws.terms {
        if let Some(r) = &t.reduced {
            out.add(r.clone(), t.product.clone());
            continue;
        }
        let factors: Vec<Element> = ws.factors(t).map(|f| f.element.clone()).collect();
        let item = out.next_item();
        let labels = if ws.factors(t).all(|f| f.empty) {
            label_union(&factors)
        } else {
            t.meet.disjunctive_form()
        };
        out.send_to_ignorance(ws.model, item, &t.meet, &factors, &labels, &t.product);
    }
    Computed::closed(out, ws.k.clone())
}

pub(super) fn weighted_rule<S: Scalar>(
    ws: &Workspace<'_, S>,
    weights: &WeightAssignment,
) -> Computed<S> {
    let mut out = Outcome::conjunctive(ws);
    let mut open = false;
    if !ws.k.is_zero() {
        let item = out.next_item();
        let factors: Vec<Element> = ws.conflicts.keys().cloned().collect();
        for (e, w) in weights.iter() {
            if w == 0.0 {
                continue;
            }
            let share = S::from_mass(w) * ws.k.clone();
            let dest = if e.is_classically_empty() {
                open = true;
                Some(ws.model.empty_target())
            } else {
                ws.model.reduce(e)
            };
            if let Some(dest) = dest {
                out.record_share(item, &factors, dest, share, &ws.k);
            }
        }
    }
    Computed {
        output: if open { Output::Open } else { Output::Closed },
        ..Computed::closed(out, ws.k.clone())
    }
}

pub(super) fn wao_rule<S: Scalar>(ws: &Workspace<'_, S>, mode: WaoMode) -> Computed<S> {
    let mut out = Outcome::conjunctive(ws);
    if ws.k.is_zero() {
        return Computed::closed(out, ws.k.clone());
    }
    let s = S::from_mass(ws.sources.len() as f64);
    let live: Vec<(&Element, &S)> = ws
        .columns
        .iter()
        .filter(|(e, _)| !ws.model.is_empty(e))
        .collect();
    let item = out.next_item();
    let factors: Vec<Element> = ws.conflicts.keys().cloned().collect();
    match mode {
        WaoMode::Static => {
            for (e, c) in live {
                let share = c.clone() / s.clone() * ws.k.clone();
                out.record_share(item, &factors, e.clone(), share, &ws.k);
            }
        }
        WaoMode::Dynamic => {
            let total = S::sum(ws.columns.values().cloned());
            let d = S::sum(live.iter().map(|(_, c)| (*c).clone()));
            if !d.is_zero() {
                for (e, c) in live {
                    let share = S::one() / s.clone()
                        * (total.clone() / d.clone())
                        * c.clone()
                        * ws.k.clone();
                    out.record_share(item, &factors, e.clone(), share, &ws.k);
                }
            }
        }
    }
    Computed::closed(out, ws.k.clone())
}

impl<S: Scalar> Outcome<S> {
    /// Records one coefficient-weighted share of the total conflict.
    fn record_share(&mut self, item: usize, factors: &[Element], dest: Element, share: S, k: &S) {
        self.transfers.push(super::Transfer {
            item,
            conflict: Element::empty(),
            factors: factors.to_vec(),
            destination: dest.clone(),
            mass: share.to_f64(),
            item_mass: k.to_f64(),
            normalizer: 1.0,
        });
        self.add(dest, share);
    }
}
