//! Basic belief assignments, the mass matrix and the conflict ledger.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::expr::ParseError;
use crate::lattice::{Element, Frame, Model, World};
use crate::numeric::Scalar;

/// Masses below this are dropped at construction.
pub const PRUNE_BELOW: f64 = 1e-12;
/// Tolerance on Σ m = 1.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BbaError {
    #[error("masses sum to {0}, expected 1")]
    NotNormalized(f64),
    #[error("negative or non-finite mass {mass} on `{element}`")]
    NegativeMass { element: String, mass: f64 },
    #[error("mass {mass} on `{element}`, which is empty in a closed world")]
    MassOnEmpty { element: String, mass: f64 },
    #[error("element uses labels outside the frame")]
    ForeignElement,
    #[error("a mass matrix needs at least one source")]
    NoSources,
    #[error(transparent)]
    Parse(#[from] ParseError),
}

/// Mapping from canonical elements to non-negative masses.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Bba {
    masses: BTreeMap<Element, f64>,
}

impl Bba {
    /// Merges duplicate keys and prunes dust. Normalization is checked by
    /// [`validate_bba`], not here.
    pub fn new<I: IntoIterator<Item = (Element, f64)>>(entries: I) -> Result<Self, BbaError> {
        let mut sums: BTreeMap<Element, Vec<f64>> = BTreeMap::new();
        for (element, mass) in entries {
            if !mass.is_finite() || mass < 0.0 {
                return Err(BbaError::NegativeMass {
                    element: format!("{element:?}"),
                    mass,
                });
            }
            sums.entry(element).or_default().push(mass);
        }
        let masses = sums
            .into_iter()
            .map(|(e, v)| (e, <f64 as Scalar>::sum(v)))
            .filter(|(_, m)| *m >= PRUNE_BELOW)
            .collect();
        Ok(Bba { masses })
    }

    /// Builds a bba from `(expression, mass)` pairs.
    pub fn parse(frame: &Frame, entries: &[(&str, f64)]) -> Result<Self, BbaError> {
        let mut parsed = Vec::with_capacity(entries.len());
        for (text, mass) in entries {
            parsed.push((frame.element(text)?, *mass));
        }
        Bba::new(parsed)
    }

    pub(crate) fn from_positive(masses: BTreeMap<Element, f64>) -> Self {
        Bba {
            masses: masses.into_iter().filter(|(_, m)| *m > 0.0).collect(),
        }
    }

    pub fn mass(&self, element: &Element) -> f64 {
        self.masses.get(element).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Element, f64)> + '_ {
        self.masses.iter().map(|(e, m)| (e, *m))
    }

    pub fn focal_elements(&self) -> impl Iterator<Item = &Element> + '_ {
        self.masses.keys()
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn total(&self) -> f64 {
        <f64 as Scalar>::sum(self.masses.values().copied())
    }

    pub fn as_map(&self) -> &BTreeMap<Element, f64> {
        &self.masses
    }

    /// Keys replaced by their canonical form under `model`; masses of keys
    /// that become equal are added. Empty keys keep their free form.
    pub fn canonicalize(&self, model: &Model) -> Bba {
        let mut sums: BTreeMap<Element, Vec<f64>> = BTreeMap::new();
        for (e, m) in &self.masses {
            sums.entry(model.canonical(e).element).or_default().push(*m);
        }
        Bba {
            masses: sums
                .into_iter()
                .map(|(e, v)| (e, <f64 as Scalar>::sum(v)))
                .collect(),
        }
    }

    /// Largest absolute mass difference over the union of focal elements.
    pub fn max_abs_diff(&self, other: &Bba) -> f64 {
        let keys: std::collections::BTreeSet<&Element> =
            self.masses.keys().chain(other.masses.keys()).collect();
        keys.into_iter()
            .map(|k| (self.mass(k) - other.mass(k)).abs())
            .fold(0.0, f64::max)
    }
}

/// Checks normalization, signs, frame membership and, in a closed world,
/// that no mass sits on an element the model makes empty.
pub fn validate_bba(bba: &Bba, model: &Model) -> Result<(), BbaError> {
    let frame = model.frame();
    for (e, m) in bba.iter() {
        if !frame.contains(e) {
            return Err(BbaError::ForeignElement);
        }
        if m < 0.0 || !m.is_finite() {
            return Err(BbaError::NegativeMass {
                element: frame.show(e),
                mass: m,
            });
        }
    }
    let total = bba.total();
    if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(BbaError::NotNormalized(total));
    }
    for (e, m) in bba.iter() {
        let allowed = match model.world() {
            World::Closed => false,
            World::Open => e.is_classically_empty(),
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

/// m(I_t) = 1.
pub fn vacuous_bba(model: &Model) -> Bba {
    let top = model
        .total_ignorance()
        .unwrap_or_else(|| model.frame().total_ignorance());
    Bba::new([(top, 1.0)]).expect("unit mass is valid")
}

/// The sources of one combination, canonicalized under a shared model.
#[derive(Debug, Clone)]
pub struct MassMatrix {
    model: Model,
    sources: Vec<Bba>,
    columns: BTreeMap<Element, f64>,
}

impl MassMatrix {
    /// Canonicalizes every source under `model`. Sources must be normalized
    /// but may carry mass on elements the model makes empty (dynamic
    /// fusion); use [`validate_bba`] to reject those up front.
    pub fn new(model: &Model, sources: Vec<Bba>) -> Result<Self, BbaError> {
        if sources.is_empty() {
            return Err(BbaError::NoSources);
        }
        let mut canonical = Vec::with_capacity(sources.len());
        for source in &sources {
            if source.focal_elements().any(|e| !model.frame().contains(e)) {
                return Err(BbaError::ForeignElement);
            }
            let total = source.total();
            if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
                return Err(BbaError::NotNormalized(total));
            }
            canonical.push(source.canonicalize(model));
        }
        let mut columns: BTreeMap<Element, Vec<f64>> = BTreeMap::new();
        for source in &canonical {
            for (e, m) in source.iter() {
                columns.entry(e.clone()).or_default().push(m);
            }
        }
        let columns = columns
            .into_iter()
            .map(|(e, v)| (e, <f64 as Scalar>::sum(v)))
            .collect();
        Ok(MassMatrix {
            model: model.clone(),
            sources: canonical,
            columns,
        })
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn sources(&self) -> &[Bba] {
        &self.sources
    }

    pub fn len(&self) -> usize {
        self.sources.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sources.is_empty()
    }

    /// c(X) = Σ_i m_i(X), with X canonicalized under the model.
    pub fn column_sum(&self, element: &Element) -> f64 {
        let key = self.model.canonical(element).element;
        self.columns.get(&key).copied().unwrap_or(0.0)
    }

    /// Column sums of every focal element, in element order.
    pub fn columns(&self) -> &BTreeMap<Element, f64> {
        &self.columns
    }

    /// Product of the focal-set sizes: the number of s-tuples enumerated.
    pub fn term_count(&self) -> Option<usize> {
        self.sources
            .iter()
            .try_fold(1usize, |acc, s| acc.checked_mul(s.len()))
    }

    /// The same sources in the order given by `order`.
    pub fn permuted(&self, order: &[usize]) -> MassMatrix {
        let sources: Vec<Bba> = order.iter().map(|&i| self.sources[i].clone()).collect();
        MassMatrix {
            model: self.model.clone(),
            sources,
            columns: self.columns.clone(),
        }
    }
}

pub fn column_sum(matrix: &MassMatrix, element: &Element) -> f64 {
    matrix.column_sum(element)
}

/// One conflicting product m_1(X_1)···m_s(X_s).
#[derive(Debug, Clone, PartialEq)]
pub struct ConflictTerm {
    pub factors: Vec<Element>,
    pub masses: Vec<f64>,
    pub product: f64,
    /// Free-lattice canonical form of X_1 ∩ … ∩ X_s.
    pub intersection: Element,
}

/// Decomposition of the total conflict.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConflictLedger {
    /// Terms in lexicographic order of their factor tuples.
    pub terms: Vec<ConflictTerm>,
    /// Partial conflicts keyed by empty intersection.
    pub partial: BTreeMap<Element, f64>,
    /// Σ of the partial conflicts.
    pub total: f64,
    /// Non-empty elements involved in some conflicting term.
    pub involved: Vec<Element>,
}

impl ConflictLedger {
    pub fn is_involved(&self, element: &Element) -> bool {
        self.involved.binary_search(element).is_ok()
    }
}
