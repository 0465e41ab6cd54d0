//! Term enumeration shared by every rule.
//!
//! A term is one s-tuple of focal elements, one per source. Terms are built
//! by mixed-radix index, in parallel when enabled, and collected in index
//! order, which is the lexicographic order of the factor tuples.

use std::collections::{BTreeMap, BTreeSet};

use smallvec::SmallVec;

use crate::bba::{Bba, ConflictLedger, ConflictTerm, MassMatrix};
use crate::lattice::{Element, Model, World};
use crate::numeric::Scalar;

/// Upper bound on the number of s-tuples a single combination may visit.
pub const MAX_TERMS: usize = 1 << 24;

/// Terms below this count are always built on the calling thread.
const PARALLEL_THRESHOLD: usize = 1024;

/// How terms are enumerated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Uses the rayon pool when the `parallel` feature is enabled, and falls
    /// back to sequential enumeration otherwise.
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Focal<S> {
    pub element: Element,
    pub mass: S,
    pub empty: bool,
}

#[derive(Debug, Clone)]
pub(crate) struct Term<S> {
    pub picks: SmallVec<[u32; 4]>,
    pub product: S,
    /// Free-lattice intersection of the factors.
    pub meet: Element,
    /// Canonical form under the model, `None` when empty.
    pub reduced: Option<Element>,
}

/// Sources lifted to a scalar type, all their terms and the conjunctive
/// consensus.
pub(crate) struct Workspace<'m, S: Scalar> {
    pub model: &'m Model,
    pub sources: Vec<Vec<Focal<S>>>,
    pub terms: Vec<Term<S>>,
    /// Conjunctive mass on non-empty elements, keyed by canonical form.
    pub nonempty: BTreeMap<Element, S>,
    /// Conjunctive mass on empty intersections, keyed by free form.
    pub conflicts: BTreeMap<Element, S>,
    /// Total conflict k.
    pub k: S,
    pub columns: BTreeMap<Element, S>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct TooManyTerms(pub Option<usize>);

impl<'m, S: Scalar> Workspace<'m, S> {
    pub fn from_matrix(matrix: &'m MassMatrix, exec: Execution) -> Result<Self, TooManyTerms> {
        let sources = matrix
            .sources()
            .iter()
            .map(|b| lift(b, matrix.model()))
            .collect();
        Workspace::new(matrix.model(), sources, exec)
    }

    pub fn new(
        model: &'m Model,
        sources: Vec<Vec<Focal<S>>>,
        exec: Execution,
    ) -> Result<Self, TooManyTerms> {
        let terms = enumerate(model, &sources, exec)?;
        let mut nonempty: BTreeMap<Element, S::Sum> = BTreeMap::new();
        let mut conflicts: BTreeMap<Element, S::Sum> = BTreeMap::new();
        for t in &terms {
            match &t.reduced {
                Some(r) => S::add_to(nonempty.entry(r.clone()).or_default(), t.product.clone()),
                None => S::add_to(
                    conflicts.entry(t.meet.clone()).or_default(),
                    t.product.clone(),
                ),
            }
        }
        let nonempty = totals::<S>(nonempty);
        let conflicts = totals::<S>(conflicts);
        let k = S::sum(conflicts.values().cloned());
        let mut columns: BTreeMap<Element, S::Sum> = BTreeMap::new();
        for source in &sources {
            for f in source {
                S::add_to(
                    columns.entry(f.element.clone()).or_default(),
                    f.mass.clone(),
                );
            }
        }
        let columns = totals::<S>(columns);
        Ok(Workspace {
            model,
            sources,
            terms,
            nonempty,
            conflicts,
            k,
            columns,
        })
    }

    pub fn factor(&self, term: &Term<S>, source: usize) -> &Focal<S> {
        &self.sources[source][term.picks[source] as usize]
    }

    pub fn factors<'a>(&'a self, term: &'a Term<S>) -> impl Iterator<Item = &'a Focal<S>> + 'a {
        (0..self.sources.len()).map(move |i| self.factor(term, i))
    }

    pub fn column(&self, element: &Element) -> S {
        self.columns.get(element).cloned().unwrap_or_else(S::zero)
    }

    pub fn conjunctive_mass(&self, element: &Element) -> S {
        self.nonempty.get(element).cloned().unwrap_or_else(S::zero)
    }

    pub fn conflict_terms(&self) -> impl Iterator<Item = &Term<S>> + '_ {
        self.terms.iter().filter(|t| t.reduced.is_none())
    }

    /// Source indices whose factor survives absorption in the term's
    /// intersection: no other factor lies strictly below it.
    pub fn surviving(&self, term: &Term<S>) -> SmallVec<[usize; 4]> {
        let s = self.sources.len();
        (0..s)
            .filter(|&i| {
                let x = &self.factor(term, i).element;
                (0..s).all(|j| j == i || !self.factor(term, j).element.strictly_below(x))
            })
            .collect()
    }

    /// Distinct surviving factor elements of a term, in element order.
    pub fn components(&self, term: &Term<S>) -> Vec<Focal<S>> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for i in self.surviving(term) {
            let f = self.factor(term, i);
            if seen.insert(f.element.clone()) {
                out.push(f.clone());
            }
        }
        out.sort_by(|a, b| a.element.cmp(&b.element));
        out
    }

    /// Non-empty elements that survive in at least one conflicting term.
    pub fn involved(&self) -> BTreeSet<Element> {
        let mut set = BTreeSet::new();
        for t in self.conflict_terms() {
            for i in self.surviving(t) {
                let f = self.factor(t, i);
                if !f.empty {
                    set.insert(f.element.clone());
                }
            }
        }
        set
    }

    pub fn ledger(&self) -> ConflictLedger {
        let terms = self
            .conflict_terms()
            .map(|t| {
                let factors: Vec<&Focal<S>> = self.factors(t).collect();
                ConflictTerm {
                    factors: factors.iter().map(|f| f.element.clone()).collect(),
                    masses: factors.iter().map(|f| f.mass.to_f64()).collect(),
                    product: t.product.to_f64(),
                    intersection: t.meet.clone(),
                }
            })
            .collect();
        ConflictLedger {
            terms,
            partial: self
                .conflicts
                .iter()
                .map(|(e, m)| (e.clone(), m.to_f64()))
                .collect(),
            total: self.k.to_f64(),
            involved: self.involved().into_iter().collect(),
        }
    }

    /// Conjunctive consensus as focal elements: non-empty masses under their
    /// canonical form, conflicts under their free form.
    pub fn conjunctive_focal(&self) -> Vec<Focal<S>> {
        let mut out: Vec<Focal<S>> = self
            .nonempty
            .iter()
            .map(|(e, m)| Focal {
                element: e.clone(),
                mass: m.clone(),
                empty: false,
            })
            .chain(self.conflicts.iter().map(|(e, m)| Focal {
                element: e.clone(),
                mass: m.clone(),
                empty: true,
            }))
            .collect();
        out.sort_by(|a, b| a.element.cmp(&b.element));
        out
    }
}

pub(crate) fn lift<S: Scalar>(bba: &Bba, model: &Model) -> Vec<Focal<S>> {
    bba.iter()
        .map(|(e, m)| Focal {
            element: e.clone(),
            mass: S::from_mass(m),
            empty: model.is_empty(e),
        })
        .collect()
}

pub(crate) fn totals<S: Scalar>(map: BTreeMap<Element, S::Sum>) -> BTreeMap<Element, S> {
    map.into_iter()
        .map(|(e, acc)| (e, S::total(&acc)))
        .collect()
}

fn enumerate<S: Scalar>(
    model: &Model,
    sources: &[Vec<Focal<S>>],
    exec: Execution,
) -> Result<Vec<Term<S>>, TooManyTerms> {
    let count = sources
        .iter()
        .try_fold(1usize, |acc, s| acc.checked_mul(s.len()));
    let count = match count {
        Some(c) if c <= MAX_TERMS => c,
        other => return Err(TooManyTerms(other)),
    };
    let build = |index: usize| -> Term<S> {
        let mut rest = index;
        let mut picks: SmallVec<[u32; 4]> = SmallVec::from_elem(0, sources.len());
        for (i, source) in sources.iter().enumerate().rev() {
            picks[i] = (rest % source.len()) as u32;
            rest /= source.len();
        }
        let mut meet: Option<Element> = None;
        let mut masses: SmallVec<[S; 4]> = SmallVec::new();
        for (i, &p) in picks.iter().enumerate() {
            let f = &sources[i][p as usize];
            meet = Some(match meet {
                None => f.element.clone(),
                Some(m) => m.meet(&f.element),
            });
            masses.push(f.mass.clone());
        }
        let meet = meet.expect("at least one source");
        let reduced = model.reduce(&meet);
        Term {
            picks,
            product: S::product(masses),
            meet,
            reduced,
        }
    };
    let parallel = exec == Execution::Parallel && count >= PARALLEL_THRESHOLD;
    Ok(run_indexed(count, parallel, build))
}

#[cfg(feature = "parallel")]
fn run_indexed<T: Send, F: Fn(usize) -> T + Sync + Send>(
    count: usize,
    parallel: bool,
    build: F,
) -> Vec<T> {
    use rayon::prelude::*;
    if parallel {
        (0..count).into_par_iter().map(build).collect()
    } else {
        (0..count).map(build).collect()
    }
}

#[cfg(not(feature = "parallel"))]
fn run_indexed<T: Send, F: Fn(usize) -> T + Sync + Send>(
    count: usize,
    _parallel: bool,
    build: F,
) -> Vec<T> {
    (0..count).map(build).collect()
}

/// Maps each item with `f`, in parallel when allowed; output keeps the
/// input order.
pub(crate) fn map_ordered<T: Sync, U: Send, F: Fn(&T) -> U + Sync + Send>(
    items: &[T],
    exec: Execution,
    f: F,
) -> Vec<U> {
    run_indexed(items.len(), exec == Execution::Parallel, |i| f(&items[i]))
}

/// Where mass goes when no proportional destination exists: the
/// disjunctive form if it is non-empty, then the total ignorance in a closed
/// world, then θ0 or ∅.
pub(crate) fn ignorance_destination(model: &Model, labels: &Element) -> (Element, Fallback) {
    if let Some(u) = model.reduce(&labels.disjunctive_form()) {
        return (u, Fallback::Disjunctive);
    }
    if model.world() == World::Closed {
        if let Some(t) = model.total_ignorance() {
            return (t, Fallback::TotalIgnorance);
        }
    }
    if model.closure() {
        (Element::closure(), Fallback::Closure)
    } else {
        (Element::empty(), Fallback::EmptySet)
    }
}

/// Kinds of fallback transfer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Fallback {
    /// Proportional weights were all zero; column sums were used instead.
    ColumnSums,
    /// Mass sent to the disjunctive form u(·) of the conflict.
    Disjunctive,
    /// Mass sent to the total ignorance.
    TotalIgnorance,
    /// Mass sent to the closure hypothesis θ0.
    Closure,
    /// Mass sent to ∅.
    EmptySet,
}
