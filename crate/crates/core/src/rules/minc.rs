//! The minC rule.
//!
//! The conjunctive stage already reallocates every non-empty intersection
//! onto its canonical form, so what remains are the pure conflicts. Each is
//! split proportionally to the conjunctive masses of its destinations.

use std::collections::BTreeSet;

use crate::bba::MassMatrix;
use crate::engine::{Fallback, Workspace};
use crate::lattice::{bits, Element};
use crate::numeric::Scalar;

use super::{combine, Computed, Fusion, FusionError, MinCVersion, Outcome, Rule};

pub fn minc(matrix: &MassMatrix, version: MinCVersion) -> Result<Fusion, FusionError> {
    combine(matrix, &Rule::MinC(version))
}

fn destinations<S: Scalar>(
    ws: &Workspace<'_, S>,
    conflict: &Element,
    version: MinCVersion,
) -> BTreeSet<Element> {
    let candidates: Vec<u32> = match version {
        MinCVersion::A => {
            let clauses = conflict.clauses();
            (1u32..(1 << clauses.len()))
                .map(|subset| bits(subset).fold(0, |acc, i| acc | clauses[i]))
                .collect()
        }
        MinCVersion::B => {
            let labels = conflict.label_mask();
            let mut subsets = Vec::new();
            let mut sub = labels;
            while sub != 0 {
                subsets.push(sub);
                sub = (sub - 1) & labels;
            }
            subsets
        }
    };
    candidates
        .into_iter()
        .filter_map(|mask| ws.model.reduce(&Element::clause(mask)))
        .collect()
}

pub(super) fn minc_rule<S: Scalar>(ws: &Workspace<'_, S>, version: MinCVersion) -> Computed<S> {
    let mut out = Outcome::conjunctive(ws);
    for (conflict, mass) in &ws.conflicts {
        let item = out.next_item();
        let components: Vec<Element> = conflict
            .clauses()
            .iter()
            .map(|&c| Element::clause(c))
            .collect();
        let weighted: Vec<(Element, S)> = destinations(ws, conflict, version)
            .into_iter()
            .map(|d| {
                let w = ws.conjunctive_mass(&d);
                (d, w)
            })
            .collect();
        if out.proportional(item, conflict, &components, mass, &weighted) {
            continue;
        }
        let columns: Vec<(Element, S)> = components
            .iter()
            .filter_map(|c| ws.model.reduce(c))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .map(|c| {
                let w = ws.column(&c);
                (c, w)
            })
            .collect();
        if out.proportional(item, conflict, &components, mass, &columns) {
            out.fallback(item, Fallback::ColumnSums, mass);
            continue;
        }
        out.send_to_ignorance(ws.model, item, conflict, &components, conflict, mass);
    }
    Computed::closed(out, ws.k.clone())
}
