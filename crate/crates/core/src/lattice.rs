//! Frames of discernment, lattice elements and models.
//!
//! An [`Element`] is stored in reduced conjunctive normal form: a sorted
//! antichain of clauses, each clause a bit mask of labels read as the union
//! of those singletons, the element being the intersection of its clauses.
//! The same representation covers the power set (single-clause elements) and
//! the hyper-power set.
//!
//! A [`Model`] decides which elements are empty. Shafer models use singleton
//! exclusivity and accept up to [`MAX_LABELS`] labels; free and hybrid models
//! work on the Venn regions of the frame and are capped at
//! [`MAX_HYPER_LABELS`].

use std::fmt;
use std::sync::Arc;

use smallvec::SmallVec;
use thiserror::Error;

/// Largest frame accepted by the Shafer model.
pub const MAX_LABELS: usize = 16;
/// Largest frame accepted by free and hybrid models.
pub const MAX_HYPER_LABELS: usize = 6;

const CLOSURE_CLAUSE: u32 = 1 << 31;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LatticeError {
    #[error("a frame needs at least one label")]
    EmptyFrame,
    #[error("duplicate label `{0}`")]
    DuplicateLabel(String),
    #[error("invalid label `{0}`")]
    InvalidLabel(String),
    #[error("frame has {labels} labels, the limit for this model is {limit}")]
    TooManyLabels { labels: usize, limit: usize },
    #[error("element uses labels outside the frame")]
    ForeignElement,
}

/// Ordered, distinct hypothesis labels.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Frame {
    labels: Vec<String>,
}

impl Frame {
    pub fn new<I, S>(labels: I) -> Result<Self, LatticeError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(LatticeError::EmptyFrame);
        }
        if labels.len() > MAX_LABELS {
            return Err(LatticeError::TooManyLabels {
                labels: labels.len(),
                limit: MAX_LABELS,
            });
        }
        for (i, label) in labels.iter().enumerate() {
            let bad = label.is_empty()
                || label
                    .chars()
                    .any(|c| c.is_whitespace() || matches!(c, '|' | '&' | '(' | ')'));
            if bad {
                return Err(LatticeError::InvalidLabel(label.clone()));
            }
            if labels[..i].contains(label) {
                return Err(LatticeError::DuplicateLabel(label.clone()));
            }
        }
        Ok(Frame { labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Mask with one bit per label.
    pub fn full_mask(&self) -> u32 {
        low_bits(self.len())
    }

    pub fn singleton(&self, index: usize) -> Element {
        assert!(index < self.len(), "label index out of range");
        Element::clause(1 << index)
    }

    /// I_t, the union of all labels.
    pub fn total_ignorance(&self) -> Element {
        Element::clause(self.full_mask())
    }

    /// Parses `text` and returns its free-lattice canonical form.
    pub fn element(&self, text: &str) -> Result<Element, crate::expr::ParseError> {
        Ok(crate::expr::parse_expr(text, self)?.to_element())
    }

    pub fn contains(&self, element: &Element) -> bool {
        element.is_closure() || element.label_mask() & !self.full_mask() == 0
    }

    /// Text form using `&`, `|` and parentheses; `∅` and `θ0` for the
    /// classical empty set and the closure hypothesis.
    pub fn show(&self, element: &Element) -> String {
        if element.is_closure() {
            return "θ0".to_string();
        }
        if element.is_classically_empty() {
            return "∅".to_string();
        }
        let clauses = element.clauses();
        let mut out = String::new();
        for (i, &clause) in clauses.iter().enumerate() {
            if i > 0 {
                out.push('&');
            }
            let wrap = clauses.len() > 1 && clause.count_ones() > 1;
            if wrap {
                out.push('(');
            }
            let mut first = true;
            for bit in bits(clause) {
                if !first {
                    out.push('|');
                }
                first = false;
                out.push_str(&self.labels[bit]);
            }
            if wrap {
                out.push(')');
            }
        }
        out
    }
}

pub(crate) fn low_bits(n: usize) -> u32 {
    if n >= 32 {
        u32::MAX
    } else {
        (1u32 << n) - 1
    }
}

pub(crate) fn bits(mask: u32) -> impl Iterator<Item = usize> {
    let mut rest = mask;
    std::iter::from_fn(move || {
        if rest == 0 {
            None
        } else {
            let bit = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            Some(bit)
        }
    })
}

type Clauses = SmallVec<[u32; 4]>;

/// A lattice element in reduced conjunctive normal form.
///
/// Equality, hashing and ordering are structural on the sorted clause list.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Element {
    clauses: Clauses,
}

impl fmt::Debug for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_closure() {
            return write!(f, "θ0");
        }
        write!(f, "Element[")?;
        for (i, c) in self.clauses.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c:#b}")?;
        }
        write!(f, "]")
    }
}

impl Element {
    /// The classical empty set.
    pub fn empty() -> Self {
        Element {
            clauses: SmallVec::from_slice(&[0]),
        }
    }

    /// The closure hypothesis θ0 that stands in for ∅ when enabled.
    pub fn closure() -> Self {
        Element {
            clauses: SmallVec::from_slice(&[CLOSURE_CLAUSE]),
        }
    }

    /// Union of the labels in `mask`; a zero mask gives ∅.
    pub fn clause(mask: u32) -> Self {
        Element {
            clauses: SmallVec::from_slice(&[mask]),
        }
    }

    /// Intersection of the given clauses, absorbed and sorted.
    pub fn from_clauses<I: IntoIterator<Item = u32>>(clauses: I) -> Self {
        let raw: Clauses = clauses.into_iter().collect();
        assert!(!raw.is_empty(), "an element needs at least one clause");
        Element {
            clauses: absorb(raw),
        }
    }

    pub fn clauses(&self) -> &[u32] {
        &self.clauses
    }

    pub fn is_classically_empty(&self) -> bool {
        self.clauses[0] == 0
    }

    pub fn is_closure(&self) -> bool {
        self.clauses.len() == 1 && self.clauses[0] == CLOSURE_CLAUSE
    }

    /// True for power-set elements (a plain union of singletons).
    pub fn is_union(&self) -> bool {
        self.clauses.len() == 1
    }

    /// Every label occurring in the element.
    pub fn label_mask(&self) -> u32 {
        self.clauses.iter().fold(0, |acc, c| acc | c) & !CLOSURE_CLAUSE
    }

    /// u(X): the union of all singletons composing the element.
    pub fn disjunctive_form(&self) -> Element {
        if self.is_closure() {
            return self.clone();
        }
        Element::clause(self.label_mask())
    }

    pub fn meet(&self, other: &Element) -> Element {
        let mut all: Clauses = self.clauses.clone();
        all.extend_from_slice(&other.clauses);
        Element {
            clauses: absorb(all),
        }
    }

    pub fn join(&self, other: &Element) -> Element {
        let mut all = Clauses::new();
        for &a in &self.clauses {
            for &b in &other.clauses {
                all.push(a | b);
            }
        }
        Element {
            clauses: absorb(all),
        }
    }

    /// Order of the free lattice: every clause of `other` contains a clause
    /// of `self`.
    pub fn leq(&self, other: &Element) -> bool {
        other
            .clauses
            .iter()
            .all(|&d| self.clauses.iter().any(|&c| c & !d == 0))
    }

    pub fn strictly_below(&self, other: &Element) -> bool {
        self != other && self.leq(other)
    }
}

fn absorb(mut raw: Clauses) -> Clauses {
    raw.sort_unstable_by_key(|c| (c.count_ones(), *c));
    raw.dedup();
    let mut kept = Clauses::new();
    for c in raw {
        if !kept.iter().any(|&k| k & !c == 0) {
            kept.push(c);
        }
    }
    kept.sort_unstable();
    kept
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Free,
    Shafer,
    Hybrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum World {
    #[default]
    Closed,
    Open,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Semantics {
    Free,
    /// Singleton exclusivity; `allowed` lists the singletons still possible.
    Singletons {
        allowed: u32,
    },
    /// Venn regions of the frame; region `r` (a non-empty label set) is bit
    /// `r - 1`.
    Regions {
        labels: Vec<u64>,
        allowed: u64,
    },
}

/// Integrity constraints over a frame together with world and closure flags.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Model {
    frame: Arc<Frame>,
    kind: ModelKind,
    constraints: Vec<Element>,
    world: World,
    closure: bool,
    semantics: Semantics,
}

impl Model {
    /// No constraints: every non-∅ element of the hyper-power set exists.
    pub fn free(frame: Frame) -> Result<Self, LatticeError> {
        check_hyper(&frame)?;
        Ok(Model {
            frame: Arc::new(frame),
            kind: ModelKind::Free,
            constraints: Vec::new(),
            world: World::Closed,
            closure: false,
            semantics: Semantics::Free,
        })
    }

    /// Exclusive singletons.
    pub fn shafer(frame: Frame) -> Self {
        let allowed = frame.full_mask();
        Model {
            frame: Arc::new(frame),
            kind: ModelKind::Shafer,
            constraints: Vec::new(),
            world: World::Closed,
            closure: false,
            semantics: Semantics::Singletons { allowed },
        }
    }

    /// Free model plus the given elements forced empty.
    pub fn hybrid(frame: Frame, constraints: Vec<Element>) -> Result<Self, LatticeError> {
        check_hyper(&frame)?;
        let n = frame.len();
        let regions = (1u64 << n) - 1;
        let mut labels = vec![0u64; n];
        for r in 1..=regions {
            for (i, slot) in labels.iter_mut().enumerate() {
                if r & (1 << i) != 0 {
                    *slot |= 1 << (r - 1);
                }
            }
        }
        let mut model = Model {
            frame: Arc::new(frame),
            kind: ModelKind::Hybrid,
            constraints: Vec::new(),
            world: World::Closed,
            closure: false,
            semantics: Semantics::Regions {
                labels,
                allowed: low_bits64(regions as usize),
            },
        };
        model.add_constraints(constraints)?;
        Ok(model)
    }

    /// Adds further elements forced empty. A free model becomes hybrid.
    pub fn with_constraints(mut self, constraints: Vec<Element>) -> Result<Self, LatticeError> {
        if constraints.is_empty() {
            return Ok(self);
        }
        if self.kind == ModelKind::Free {
            let frame = (*self.frame).clone();
            let mut hybrid = Model::hybrid(frame, constraints)?;
            hybrid.world = self.world;
            hybrid.closure = self.closure;
            return Ok(hybrid);
        }
        self.add_constraints(constraints)?;
        Ok(self)
    }

    pub fn with_world(mut self, world: World) -> Self {
        self.world = world;
        self
    }

    pub fn with_closure(mut self, closure: bool) -> Self {
        self.closure = closure;
        self
    }

    fn add_constraints(&mut self, constraints: Vec<Element>) -> Result<(), LatticeError> {
        for c in constraints {
            if !self.frame.contains(&c) || c.is_closure() {
                return Err(LatticeError::ForeignElement);
            }
            match &mut self.semantics {
                Semantics::Free => unreachable!("free models carry no constraints"),
                Semantics::Singletons { allowed } => {
                    let common = c.clauses().iter().fold(u32::MAX, |acc, k| acc & k);
                    *allowed &= !common;
                }
                Semantics::Regions { labels, allowed } => {
                    let covered = region_mask(labels, &c);
                    *allowed &= !covered;
                }
            }
            self.constraints.push(c);
        }
        Ok(())
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn constraints(&self) -> &[Element] {
        &self.constraints
    }

    pub fn world(&self) -> World {
        self.world
    }

    pub fn closure(&self) -> bool {
        self.closure
    }

    /// Not φ(X): whether the element is empty under this model.
    pub fn is_empty(&self, element: &Element) -> bool {
        self.reduce(element).is_none()
    }

    /// Canonical form under the model, or `None` when the element is empty.
    pub fn reduce(&self, element: &Element) -> Option<Element> {
        if element.is_closure() {
            return Some(element.clone());
        }
        if element.is_classically_empty() {
            return None;
        }
        match &self.semantics {
            Semantics::Free => Some(element.clone()),
            Semantics::Singletons { allowed } => {
                let common = element.clauses().iter().fold(*allowed, |acc, k| acc & k);
                (common != 0).then(|| Element::clause(common))
            }
            Semantics::Regions { labels, allowed } => {
                let live = region_mask(labels, element) & allowed;
                if live == 0 {
                    return None;
                }
                Some(from_regions(labels, up_closure(live, self.frame.len())))
            }
        }
    }

    /// Canonical form together with the emptiness flag. Empty elements keep
    /// their free-lattice form.
    pub fn canonical(&self, element: &Element) -> Canonical {
        match self.reduce(element) {
            Some(element) => Canonical {
                element,
                empty: false,
            },
            None => Canonical {
                element: element.clone(),
                empty: true,
            },
        }
    }

    /// I_t under the model, `None` when every label has been ruled out.
    pub fn total_ignorance(&self) -> Option<Element> {
        self.reduce(&self.frame.total_ignorance())
    }

    /// ∅, or θ0 when the closure hypothesis is enabled.
    pub fn empty_target(&self) -> Element {
        if self.closure {
            Element::closure()
        } else {
            Element::empty()
        }
    }
}

fn check_hyper(frame: &Frame) -> Result<(), LatticeError> {
    if frame.len() > MAX_HYPER_LABELS {
        return Err(LatticeError::TooManyLabels {
            labels: frame.len(),
            limit: MAX_HYPER_LABELS,
        });
    }
    Ok(())
}

fn low_bits64(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

fn clause_regions(labels: &[u64], clause: u32) -> u64 {
    bits(clause).fold(0, |acc, i| acc | labels[i])
}

fn region_mask(labels: &[u64], element: &Element) -> u64 {
    element
        .clauses()
        .iter()
        .fold(u64::MAX, |acc, &c| acc & clause_regions(labels, c))
}

fn up_closure(regions: u64, n: usize) -> u64 {
    let count = (1u64 << n) - 1;
    let mut up = 0u64;
    for r in 1..=count {
        if regions & (1 << (r - 1)) == 0 {
            continue;
        }
        for q in 1..=count {
            if q & r == r {
                up |= 1 << (q - 1);
            }
        }
    }
    up
}

fn from_regions(labels: &[u64], up: u64) -> Element {
    let n = labels.len();
    let candidates = (1u32..(1 << n)).filter(|&c| clause_regions(labels, c) & up == up);
    Element::from_clauses(candidates)
}

/// An element in canonical form with its emptiness flag.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Canonical {
    pub element: Element,
    pub empty: bool,
}
