//! Proportional conflict redistribution rules PCR1 to PCR5.

use std::collections::{BTreeMap, BTreeSet};

use crate::bba::{Bba, MassMatrix};
use crate::engine::{map_ordered, Execution, Fallback, Focal, Term, Workspace};
use crate::lattice::{Element, Model};
use crate::numeric::Scalar;

use super::{combine, label_union, Computed, Fusion, FusionError, Outcome, Rule};

pub fn pcr1(matrix: &MassMatrix) -> Result<Fusion, FusionError> {
    combine(matrix, &Rule::Pcr1)
}

pub fn pcr2(matrix: &MassMatrix) -> Result<Fusion, FusionError> {
    combine(matrix, &Rule::Pcr2)
}

pub fn pcr3(matrix: &MassMatrix) -> Result<Fusion, FusionError> {
    combine(matrix, &Rule::Pcr3)
}

pub fn pcr4(matrix: &MassMatrix) -> Result<Fusion, FusionError> {
    combine(matrix, &Rule::Pcr4)
}

pub fn pcr5_multi(matrix: &MassMatrix) -> Result<Fusion, FusionError> {
    combine(matrix, &Rule::Pcr5)
}

pub fn pcr5_pair(m1: &Bba, m2: &Bba, model: &Model) -> Result<Fusion, FusionError> {
    let matrix = MassMatrix::new(model, vec![m1.clone(), m2.clone()])?;
    combine(&matrix, &Rule::Pcr5Pair)
}

/// `order` lists source indices; the last one is combined pairwise with the
/// conjunctive consensus of the others.
pub fn pcr5_approximate(
    matrix: &MassMatrix,
    order: Option<&[usize]>,
) -> Result<Fusion, FusionError> {
    combine(matrix, &Rule::Pcr5Approximate(order.map(<[usize]>::to_vec)))
}

/// Total conflict split over non-empty focal elements by column sum.
pub(super) fn pcr1_rule<S: Scalar>(ws: &Workspace<'_, S>) -> Computed<S> {
    let mut out = Outcome::conjunctive(ws);
    if ws.k.is_zero() {
        return Computed::closed(out, ws.k.clone());
    }
    let item = out.next_item();
    let factors: Vec<Element> = ws.conflicts.keys().cloned().collect();
    let weighted: Vec<(Element, S)> = ws
        .columns
        .iter()
        .filter(|(e, _)| !ws.model.is_empty(e))
        .map(|(e, c)| (e.clone(), c.clone()))
        .collect();
    if !out.proportional(item, &Element::empty(), &factors, &ws.k, &weighted) {
        let labels = label_union(ws.columns.keys());
        out.send_to_ignorance(ws.model, item, &Element::empty(), &factors, &labels, &ws.k);
    }
    Computed::closed(out, ws.k.clone())
}

/// Total conflict split over the involved elements by column sum.
pub(super) fn pcr2_rule<S: Scalar>(ws: &Workspace<'_, S>) -> Computed<S> {
    let mut out = Outcome::conjunctive(ws);
    if ws.k.is_zero() {
        return Computed::closed(out, ws.k.clone());
    }
    let item = out.next_item();
    let factors: Vec<Element> = ws.conflicts.keys().cloned().collect();
    let weighted: Vec<(Element, S)> = ws
        .involved()
        .into_iter()
        .map(|e| {
            let c = ws.column(&e);
            (e, c)
        })
        .collect();
    if !out.proportional(item, &Element::empty(), &factors, &ws.k, &weighted) {
        let mut survivors = BTreeSet::new();
        for t in ws.conflict_terms() {
            for i in ws.surviving(t) {
                survivors.insert(ws.factor(t, i).element.clone());
            }
        }
        let labels = label_union(&survivors);
        out.send_to_ignorance(ws.model, item, &Element::empty(), &factors, &labels, &ws.k);
    }
    Computed::closed(out, ws.k.clone())
}

type Grouped<S> = BTreeMap<Vec<Element>, (Vec<Focal<S>>, <S as Scalar>::Sum)>;

/// Partial conflicts grouped by the distinct surviving factors of their
/// terms.
fn groups<S: Scalar>(ws: &Workspace<'_, S>) -> Vec<(Vec<Focal<S>>, S)> {
    let mut map: Grouped<S> = BTreeMap::new();
    for t in ws.conflict_terms() {
        let comps = ws.components(t);
        let key: Vec<Element> = comps.iter().map(|f| f.element.clone()).collect();
        let entry = map.entry(key).or_insert_with(|| (comps, S::Sum::default()));
        S::add_to(&mut entry.1, t.product.clone());
    }
    map.into_values()
        .map(|(comps, acc)| (comps, S::total(&acc)))
        .collect()
}

fn group_conflict<S>(comps: &[Focal<S>]) -> (Element, Vec<Element>) {
    let elements: Vec<Element> = comps.iter().map(|f| f.element.clone()).collect();
    let meet = elements[1..]
        .iter()
        .fold(elements[0].clone(), |acc, e| acc.meet(e));
    (meet, elements)
}

/// Each partial conflict split over its components by column sum.
pub(super) fn pcr3_rule<S: Scalar>(ws: &Workspace<'_, S>) -> Computed<S> {
    let mut out = Outcome::conjunctive(ws);
    for (comps, mass) in groups(ws) {
        let item = out.next_item();
        let (conflict, elements) = group_conflict(&comps);
        let weighted: Vec<(Element, S)> = comps
            .iter()
            .filter(|f| !f.empty)
            .map(|f| (f.element.clone(), ws.column(&f.element)))
            .collect();
        if !out.proportional(item, &conflict, &elements, &mass, &weighted) {
            let labels = label_union(&elements);
            out.send_to_ignorance(ws.model, item, &conflict, &elements, &labels, &mass);
        }
    }
    Computed::closed(out, ws.k.clone())
}

/// Each partial conflict split over its components by conjunctive mass;
/// column sums replace the weights when any of them is zero.
pub(super) fn pcr4_rule<S: Scalar>(ws: &Workspace<'_, S>) -> Computed<S> {
    let mut out = Outcome::conjunctive(ws);
    for (comps, mass) in groups(ws) {
        let item = out.next_item();
        let (conflict, elements) = group_conflict(&comps);
        let live: Vec<&Focal<S>> = comps.iter().filter(|f| !f.empty).collect();
        let by_conjunctive: Vec<(Element, S)> = live
            .iter()
            .map(|f| (f.element.clone(), ws.conjunctive_mass(&f.element)))
            .collect();
        let moved = if by_conjunctive.iter().all(|(_, w)| !w.is_zero()) {
            out.proportional(item, &conflict, &elements, &mass, &by_conjunctive)
        } else {
            let by_column: Vec<(Element, S)> = live
                .iter()
                .map(|f| (f.element.clone(), ws.column(&f.element)))
                .collect();
            let moved = out.proportional(item, &conflict, &elements, &mass, &by_column);
            if moved {
                out.fallback(item, Fallback::ColumnSums, &mass);
            }
            moved
        };
        if !moved {
            let labels = label_union(&elements);
            out.send_to_ignorance(ws.model, item, &conflict, &elements, &labels, &mass);
        }
    }
    Computed::closed(out, ws.k.clone())
}

/// Destinations of one product term and their weights: every non-empty
/// surviving factor, weighted by the product of the masses that point at it.
struct TermPlan<S> {
    factors: Vec<Element>,
    survivors: Vec<Element>,
    weighted: Vec<(Element, S)>,
}

fn plan_term<S: Scalar>(ws: &Workspace<'_, S>, term: &Term<S>) -> TermPlan<S> {
    let mut grouped: BTreeMap<Element, Vec<S>> = BTreeMap::new();
    let mut survivors = Vec::new();
    for i in ws.surviving(term) {
        let f = ws.factor(term, i);
        survivors.push(f.element.clone());
        if !f.empty {
            grouped
                .entry(f.element.clone())
                .or_default()
                .push(f.mass.clone());
        }
    }
    TermPlan {
        factors: ws.factors(term).map(|f| f.element.clone()).collect(),
        survivors,
        weighted: grouped
            .into_iter()
            .map(|(e, masses)| (e, S::product(masses)))
            .collect(),
    }
}

fn apply_plan<S: Scalar>(out: &mut Outcome<S>, model: &Model, term: &Term<S>, plan: &TermPlan<S>) {
    let item = out.next_item();
    if !out.proportional(
        item,
        &term.meet,
        &plan.factors,
        &term.product,
        &plan.weighted,
    ) {
        let labels = label_union(&plan.survivors);
        out.send_to_ignorance(
            model,
            item,
            &term.meet,
            &plan.factors,
            &labels,
            &term.product,
        );
    }
}

/// Every conflicting product term split over its own factors.
pub(super) fn pcr5_rule<S: Scalar>(ws: &Workspace<'_, S>, exec: Execution) -> Computed<S> {
    let mut out = Outcome::conjunctive(ws);
    let terms: Vec<&Term<S>> = ws.conflict_terms().collect();
    let plans = map_ordered(&terms, exec, |t| plan_term(ws, t));
    for (term, plan) in terms.iter().zip(&plans) {
        apply_plan(&mut out, ws.model, term, plan);
    }
    Computed::closed(out, ws.k.clone())
}

/// The two-source formula: X gains m1(X)²m2(Y)/(m1(X)+m2(Y)) and
/// m2(X)²m1(Y)/(m2(X)+m1(Y)) from every non-empty Y with X∩Y empty.
/// Products involving an element that is empty in the model follow the
/// general term procedure.
pub(super) fn pcr5_pair_rule<S: Scalar>(ws: &Workspace<'_, S>) -> Computed<S> {
    let mut out = Outcome::conjunctive(ws);
    let model = ws.model;
    let live = |source: usize| -> BTreeMap<Element, S> {
        ws.sources[source]
            .iter()
            .filter(|f| !f.empty)
            .map(|f| (f.element.clone(), f.mass.clone()))
            .collect()
    };
    let (m1, m2) = (live(0), live(1));
    let elements: BTreeSet<&Element> = m1.keys().chain(m2.keys()).collect();
    let mut items: BTreeMap<(Element, Element), usize> = BTreeMap::new();
    let mut gain = |out: &mut Outcome<S>, x: &Element, y: &Element, from_first: bool| {
        let (mx, my) = if from_first {
            (m1.get(x), m2.get(y))
        } else {
            (m2.get(x), m1.get(y))
        };
        let (Some(mx), Some(my)) = (mx, my) else {
            return;
        };
        let key = if from_first {
            (x.clone(), y.clone())
        } else {
            (y.clone(), x.clone())
        };
        let next = items.len();
        let item = *items.entry(key.clone()).or_insert(next);
        let product = mx.clone() * my.clone();
        let denominator = S::sum([mx.clone(), my.clone()]);
        let share = product.clone() * mx.clone() / denominator.clone();
        out.record(
            item,
            &x.meet(y),
            &[key.0, key.1],
            x.clone(),
            share,
            &product,
            &denominator,
        );
    };
    for &x in &elements {
        for &y in &elements {
            if x == y || model.reduce(&x.meet(y)).is_some() {
                continue;
            }
            gain(&mut out, x, y, true);
            gain(&mut out, x, y, false);
        }
    }
    let offset = items.len();
    for term in ws.conflict_terms() {
        if ws.factors(term).all(|f| !f.empty) {
            continue;
        }
        let plan = plan_term(ws, term);
        let item = out.next_item() + offset;
        if !out.proportional(
            item,
            &term.meet,
            &plan.factors,
            &term.product,
            &plan.weighted,
        ) {
            let labels = label_union(&plan.survivors);
            out.send_to_ignorance(
                model,
                item,
                &term.meet,
                &plan.factors,
                &labels,
                &term.product,
            );
        }
    }
    Computed::closed(out, ws.k.clone())
}

pub(super) fn approximate<S: Scalar>(
    matrix: &MassMatrix,
    order: Option<&[usize]>,
    exec: Execution,
) -> Result<Computed<S>, FusionError> {
    let s = matrix.len();
    let order: Vec<usize> = match order {
        Some(o) => {
            let mut sorted = o.to_vec();
            sorted.sort_unstable();
            if sorted != (0..s).collect::<Vec<_>>() {
                return Err(FusionError::InvalidOrder(o.to_vec()));
            }
            o.to_vec()
        }
        None => (0..s).collect(),
    };
    let permuted = matrix.permuted(&order);
    let model = matrix.model();
    let note = Some("conjunctive of all but the last source, then pairwise PCR5");
    if s == 2 {
        let ws = Workspace::<S>::from_matrix(&permuted, exec)?;
        return Ok(Computed {
            order: Some(order),
            note,
            ..pcr5_pair_rule(&ws)
        });
    }
    let mut sources: Vec<Vec<Focal<S>>> = permuted
        .sources()
        .iter()
        .map(|b| crate::engine::lift(b, model))
        .collect();
    let last = sources.pop().expect("at least three sources");
    let head = Workspace::new(model, sources, exec)?;
    let stored = head.conjunctive_focal();
    let ws = Workspace::new(model, vec![stored, last], exec)?;
    let mut out = Outcome::conjunctive(&ws);
    for term in ws.conflict_terms() {
        let item = out.next_item();
        let pair: Vec<&Focal<S>> = ws.factors(term).collect();
        let factors: Vec<Element> = pair.iter().map(|f| f.element.clone()).collect();
        let weighted: Vec<(Element, S)> = pair
            .iter()
            .filter(|f| !f.empty)
            .map(|f| (f.element.clone(), f.mass.clone()))
            .collect();
        if !out.proportional(item, &term.meet, &factors, &term.product, &weighted) {
            let labels = label_union(&factors);
            out.send_to_ignorance(model, item, &term.meet, &factors, &labels, &term.product);
        }
    }
    Ok(Computed {
        order: Some(order),
        note,
        ..Computed::closed(out, ws.k.clone())
    })
}
