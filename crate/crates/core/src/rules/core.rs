//! Conjunctive and disjunctive consensus.

use std::collections::BTreeMap;

use crate::bba::{Bba, ConflictLedger, MassMatrix};
use crate::engine::Workspace;
use crate::lattice::{Element, Model};
use crate::numeric::Scalar;

use super::{label_union, Computed, Fusion, FusionError, Outcome, Output, Rule};

/// Conjunctive consensus with its conflicting intersections kept as
/// separate entries.
#[derive(Debug, Clone, PartialEq)]
pub struct RawConjunctive {
    /// Masses on non-empty elements (canonical form) and on empty
    /// intersections (free form).
    pub masses: Bba,
    pub ledger: ConflictLedger,
}

impl RawConjunctive {
    pub fn mass(&self, element: &Element) -> f64 {
        self.masses.mass(element)
    }
}

pub fn conjunctive(matrix: &MassMatrix) -> Result<RawConjunctive, FusionError> {
    let fused = super::combine(matrix, &Rule::Conjunctive)?;
    Ok(RawConjunctive {
        masses: fused.bba,
        ledger: super::conflict_ledger(matrix)?,
    })
}

/// Conjunctive consensus on the free lattice: every entry keeps the free
/// form of its intersection.
pub fn conjunctive_free(matrix: &MassMatrix) -> Result<RawConjunctive, FusionError> {
    let ws = Workspace::<f64>::from_matrix(matrix, Default::default())?;
    let mut sums: BTreeMap<Element, Vec<f64>> = BTreeMap::new();
    for t in &ws.terms {
        sums.entry(t.meet.clone()).or_default().push(t.product);
    }
    let masses = sums
        .into_iter()
        .map(|(e, v)| (e, <f64 as Scalar>::sum(v)))
        .collect();
    Ok(RawConjunctive {
        masses: Bba::from_positive(masses),
        ledger: ws.ledger(),
    })
}

/// Moves the mass of every entry that is non-empty under `model` onto its
/// canonical form; conflicting entries stay where they are.
pub fn ebr_reallocate(raw: &RawConjunctive, model: &Model) -> RawConjunctive {
    RawConjunctive {
        masses: raw.masses.canonicalize(model),
        ledger: raw.ledger.clone(),
    }
}

pub fn disjunctive(matrix: &MassMatrix) -> Result<Fusion, FusionError> {
    super::combine(matrix, &Rule::Disjunctive)
}

pub(super) fn raw<S: Scalar>(ws: &Workspace<'_, S>) -> Computed<S> {
    let mut out = Outcome::conjunctive(ws);
    for (e, m) in &ws.conflicts {
        out.add(e.clone(), m.clone());
    }
    Computed {
        output: Output::Raw,
        ..Computed::closed(out, ws.k.clone())
    }
}

pub(super) fn union<S: Scalar>(ws: &Workspace<'_, S>) -> Computed<S> {
    let mut out = Outcome::new();
    for t in &ws.terms {
        let factors: Vec<Element> = ws.factors(t).map(|f| f.element.clone()).collect();
        let join = factors[1..]
            .iter()
            .fold(factors[0].clone(), |acc, f| acc.join(f));
        match ws.model.reduce(&join) {
            Some(r) => out.add(r, t.product.clone()),
            None => {
                let item = out.next_item();
                let labels = label_union(&factors);
                out.send_to_ignorance(ws.model, item, &join, &factors, &labels, &t.product);
            }
        }
    }
    Computed::closed(out, S::zero())
}
