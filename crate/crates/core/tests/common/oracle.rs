//! Independent oracles: Venn-region semantics for the lattice and a
//! brute-force exact-rational enumerator for PCR5.
//!
//! A region is a non-empty subset of the labels; an expression denotes the
//! set of regions it covers, and a model keeps only its live regions.

use std::collections::{BTreeMap, HashMap, HashSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use pcr_fusion::{canonical_form, Canonical, Element, Frame, Model, SetExpr};

pub const MAX_DEPTH: usize = 4;

pub fn label_regions(n: usize, label: usize) -> u64 {
    (1u64..(1 << n))
        .filter(|r| r & (1 << label) != 0)
        .fold(0, |acc, r| acc | (1 << r))
}

pub fn all_regions(n: usize) -> u64 {
    (1u64..(1 << n)).fold(0, |acc, r| acc | (1 << r))
}

pub fn expr_regions(n: usize, expr: &SetExpr) -> u64 {
    match expr {
        SetExpr::Label(i) => label_regions(n, *i),
        SetExpr::Union(a, b) => expr_regions(n, a) | expr_regions(n, b),
        SetExpr::Intersection(a, b) => expr_regions(n, a) & expr_regions(n, b),
    }
}

pub fn element_regions(n: usize, element: &Element) -> u64 {
    if element.is_classically_empty() {
        return 0;
    }
    element
        .clauses()
        .iter()
        .fold(all_regions(n), |acc, &clause| {
            let covered = (0..n)
                .filter(|i| clause & (1 << i) != 0)
                .fold(0, |c, i| c | label_regions(n, i));
            acc & covered
        })
}

/// Every expression tree of depth at most `depth`, with labels at depth 1.
pub fn expressions(n: usize, depth: usize) -> Vec<SetExpr> {
    let mut all: Vec<SetExpr> = (0..n).map(SetExpr::Label).collect();
    let mut depth_of = vec![1; n];
    for d in 2..=depth {
        let count = all.len();
        for i in 0..count {
            for j in 0..count {
                if depth_of[i].max(depth_of[j]) != d - 1 {
                    continue;
                }
                let (a, b) = (Box::new(all[i].clone()), Box::new(all[j].clone()));
                all.push(SetExpr::Union(a.clone(), b.clone()));
                all.push(SetExpr::Intersection(a, b));
                depth_of.extend([d, d]);
            }
        }
    }
    all
}

pub struct Semantics {
    pub name: &'static str,
    pub model: Model,
    pub live: u64,
}

pub fn models(n: usize) -> Vec<Semantics> {
    let labels: Vec<String> = (0..n).map(|i| format!("L{i}")).collect();
    let frame = Frame::new(labels).unwrap();
    let full = all_regions(n);
    let singletons = (0..n).fold(0, |acc, i| acc | (1u64 << (1 << i)));
    let mut out = vec![
        Semantics {
            name: "free",
            model: Model::free(frame.clone()).unwrap(),
            live: full,
        },
        Semantics {
            name: "shafer",
            model: Model::shafer(frame.clone()),
            live: singletons,
        },
    ];
    if n >= 2 {
        let both = label_regions(n, 0) & label_regions(n, 1);
        out.push(Semantics {
            name: "hybrid L0&L1",
            model: Model::hybrid(
                frame.clone(),
                vec![Element::clause(1).meet(&Element::clause(2))],
            )
            .unwrap(),
            live: full & !both,
        });
    }
    if n >= 3 {
        let dead = (label_regions(n, 0) & label_regions(n, 1)) | label_regions(n, 2);
        let constraint = Element::clause(1)
            .meet(&Element::clause(2))
            .join(&Element::clause(4));
        out.push(Semantics {
            name: "hybrid (L0&L1)|L2",
            model: Model::hybrid(frame, vec![constraint]).unwrap(),
            live: full & !dead,
        });
    }
    out
}

pub fn check(
    n: usize,
    s: &Semantics,
    truth: u64,
    canonical: &Canonical,
    seen: &mut HashMap<u64, Element>,
) {
    let live = truth & s.live;
    assert_eq!(canonical.empty, live == 0, "{}: emptiness", s.name);
    if canonical.empty {
        return;
    }
    assert_eq!(
        element_regions(n, &canonical.element) & s.live,
        live,
        "{}: regions of {:?}",
        s.name,
        canonical.element
    );
    let first = seen
        .entry(live)
        .or_insert_with(|| canonical.element.clone());
    assert_eq!(
        first, &canonical.element,
        "{}: two forms for one set",
        s.name
    );
}

/// Trees up to depth 3 go through `canonical_form` directly. Depth-4 trees
/// are the 2·N² (op, left, right) combinations of shallower trees; their
/// free elements are built with the same meet/join composition, memoized
/// per distinct child pair and checked once per distinct (element, region
/// set) outcome; every 101st tree is also materialized and
/// run through `canonical_form`.
pub fn check_all(n: usize) -> usize {
    let semantics = models(n);
    let mut seen: Vec<HashMap<u64, Element>> = vec![HashMap::new(); semantics.len()];
    let shallow = expressions(n, MAX_DEPTH - 1);
    let mut ids: Vec<usize> = Vec::new();
    let mut elements: Vec<Element> = Vec::new();
    let mut regions = Vec::new();
    let mut checked = 0;
    for expr in &shallow {
        let truth = expr_regions(n, expr);
        for (s, seen) in semantics.iter().zip(seen.iter_mut()) {
            check(n, s, truth, &canonical_form(expr, &s.model), seen);
            checked += 1;
        }
        let e = expr.to_element();
        let id = elements.iter().position(|x| *x == e).unwrap_or_else(|| {
            elements.push(e);
            elements.len() - 1
        });
        ids.push(id);
        regions.push(truth);
    }
    let top = shallow.len() - expressions(n, MAX_DEPTH - 2).len();
    let deepest = shallow.len() - top..shallow.len();
    let mut combined: HashMap<(bool, usize, usize), usize> = HashMap::new();
    let mut verified: HashSet<(usize, usize, u64)> = HashSet::new();
    let mut count = 0usize;
    for i in 0..shallow.len() {
        for j in 0..shallow.len() {
            if !deepest.contains(&i) && !deepest.contains(&j) {
                continue;
            }
            for union in [true, false] {
                let id = *combined.entry((union, ids[i], ids[j])).or_insert_with(|| {
                    let (a, b) = (&elements[ids[i]], &elements[ids[j]]);
                    let e = if union { a.join(b) } else { a.meet(b) };
                    elements.iter().position(|x| *x == e).unwrap_or_else(|| {
                        elements.push(e);
                        elements.len() - 1
                    })
                });
                let truth = if union {
                    regions[i] | regions[j]
                } else {
                    regions[i] & regions[j]
                };
                count += 1;
                let sample = count.is_multiple_of(101);
                let tree = sample.then(|| {
                    let (a, b) = (Box::new(shallow[i].clone()), Box::new(shallow[j].clone()));
                    if union {
                        SetExpr::Union(a, b)
                    } else {
                        SetExpr::Intersection(a, b)
                    }
                });
                if let Some(tree) = &tree {
                    assert_eq!(expr_regions(n, tree), truth);
                    assert_eq!(tree.to_element(), elements[id]);
                }
                for (k, (s, seen)) in semantics.iter().zip(seen.iter_mut()).enumerate() {
                    checked += 1;
                    if let Some(tree) = &tree {
                        check(n, s, truth, &canonical_form(tree, &s.model), seen);
                    } else if verified.insert((k, id, truth)) {
                        let canonical = s.model.canonical(&elements[id]);
                        check(n, s, truth, &canonical, seen);
                    }
                }
            }
        }
    }
    checked
}

/// PCR5 by direct enumeration of product terms over region sets.
///
/// A conflicting term keeps the factors with no other factor strictly
/// inside them; equal factors pool into one destination weighted by the
/// product of their masses.
pub fn pcr5_regions(sources: &[Vec<(u64, BigRational)>]) -> BTreeMap<u64, BigRational> {
    let mut out: BTreeMap<u64, BigRational> = BTreeMap::new();
    let mut picks = vec![0usize; sources.len()];
    loop {
        let factors: Vec<&(u64, BigRational)> =
            picks.iter().zip(sources).map(|(&p, s)| &s[p]).collect();
        let product = factors
            .iter()
            .fold(BigRational::one(), |acc, (_, m)| acc * m);
        let meet = factors.iter().fold(u64::MAX, |acc, (r, _)| acc & r);
        if meet != 0 {
            *out.entry(meet).or_insert_with(BigRational::zero) += &product;
        } else {
            let mut weights: BTreeMap<u64, BigRational> = BTreeMap::new();
            for (r, m) in &factors {
                let inner = factors.iter().any(|(q, _)| q != r && q & r == *q);
                if !inner {
                    let w = weights.entry(*r).or_insert_with(BigRational::one);
                    *w *= m;
                }
            }
            let norm = weights.values().fold(BigRational::zero(), |acc, w| acc + w);
            for (r, w) in weights {
                *out.entry(r).or_insert_with(BigRational::zero) += &product * w / &norm;
            }
        }
        let mut i = 0;
        loop {
            if i == picks.len() {
                return out;
            }
            picks[i] += 1;
            if picks[i] < sources[i].len() {
                break;
            }
            picks[i] = 0;
            i += 1;
        }
    }
}

pub struct Instance {
    pub name: &'static str,
    pub model: Model,
    pub live: u64,
    /// Focal elements with masses in hundredths.
    pub sources: Vec<Vec<(Element, u32)>>,
}

impl Instance {
    pub fn bbas(&self) -> Vec<pcr_fusion::Bba> {
        self.sources
            .iter()
            .map(|s| {
                pcr_fusion::Bba::new(s.iter().map(|(e, c)| (e.clone(), f64::from(*c) / 100.0)))
                    .unwrap()
            })
            .collect()
    }

    pub fn regions(&self) -> Vec<Vec<(u64, BigRational)>> {
        let n = self.model.frame().len();
        self.sources
            .iter()
            .map(|s| {
                s.iter()
                    .map(|(e, c)| {
                        let r = element_regions(n, e) & self.live;
                        (r, BigRational::new(BigInt::from(*c), BigInt::from(100)))
                    })
                    .collect()
            })
            .collect()
    }

    /// A fused assignment keyed by live region sets.
    pub fn keyed<T: Clone + std::ops::AddAssign + Zero>(
        &self,
        masses: impl IntoIterator<Item = (Element, T)>,
    ) -> BTreeMap<u64, T> {
        let n = self.model.frame().len();
        let mut out: BTreeMap<u64, T> = BTreeMap::new();
        for (e, m) in masses {
            if m.is_zero() {
                continue;
            }
            *out.entry(element_regions(n, &e) & self.live)
                .or_insert_with(T::zero) += m;
        }
        out
    }
}

/// Random instances over three labels under the Shafer and hybrid models,
/// drawn from a fixed seed.
pub fn instances(count: usize, sources: usize) -> Vec<Instance> {
    use proptest::prelude::*;
    use proptest::strategy::ValueTree;
    use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

    let semantics: Vec<Semantics> = models(3).into_iter().filter(|s| s.name != "free").collect();
    let source = (
        prop::collection::vec(prop::collection::vec(1u32..8, 1..=2), 4),
        prop::collection::btree_set(1u32..100, 0..=3),
    );
    let strategy = (0..semantics.len(), prop::collection::vec(source, sources));
    let mut runner = TestRunner::new_with_rng(
        Config::default(),
        TestRng::deterministic_rng(RngAlgorithm::ChaCha),
    );
    (0..count)
        .map(|_| {
            let (pick, drawn) = strategy.new_tree(&mut runner).unwrap().current();
            let s = &semantics[pick];
            let sources = drawn
                .into_iter()
                .map(|(elements, cuts)| {
                    let mut bounds: Vec<u32> = cuts.into_iter().collect();
                    bounds.push(100);
                    let mut focal: BTreeMap<Element, u32> = BTreeMap::new();
                    let mut previous = 0;
                    for (clauses, bound) in elements.into_iter().zip(bounds) {
                        let e = Element::from_clauses(clauses);
                        let e = s
                            .model
                            .reduce(&e)
                            .unwrap_or_else(|| s.model.total_ignorance().unwrap());
                        *focal.entry(e).or_default() += bound - previous;
                        previous = bound;
                    }
                    focal.into_iter().collect()
                })
                .collect();
            Instance {
                name: s.name,
                model: s.model.clone(),
                live: s.live,
                sources,
            }
        })
        .collect()
}

fn bits(bba: &pcr_fusion::Bba) -> BTreeMap<Element, u64> {
    bba.iter().map(|(e, m)| (e.clone(), m.to_bits())).collect()
}

/// Instances where the general procedure and the two-source formula differ
/// in any bit, under float and automatic arithmetic.
pub fn pair_mismatches(instances: &[Instance]) -> Vec<String> {
    use pcr_fusion::{combine_with, Arithmetic, MassMatrix, Options, Rule};
    let mut out = Vec::new();
    for (i, inst) in instances.iter().enumerate() {
        let matrix = MassMatrix::new(&inst.model, inst.bbas()).unwrap();
        for arithmetic in [Arithmetic::Float, Arithmetic::Auto] {
            let options = Options {
                arithmetic,
                ..Options::default()
            };
            let multi = combine_with(&matrix, &Rule::Pcr5, &options).unwrap();
            let pair = combine_with(&matrix, &Rule::Pcr5Pair, &options).unwrap();
            if bits(&multi.bba) != bits(&pair.bba) {
                out.push(format!("instance {i} ({}, {arithmetic:?})", inst.name));
            }
        }
    }
    out
}

pub struct OracleReport {
    pub exact_mismatches: Vec<String>,
    pub max_float_gap: f64,
}

/// Three or more sources: exact engine output against the enumerator, and
/// the float engine against the enumerator's value.
pub fn multi_report(instances: &[Instance]) -> OracleReport {
    use num_traits::ToPrimitive;
    use pcr_fusion::{combine_with, Arithmetic, MassMatrix, Options, Rule};
    let mut exact_mismatches = Vec::new();
    let mut max_float_gap: f64 = 0.0;
    for (i, inst) in instances.iter().enumerate() {
        let want = pcr5_regions(&inst.regions());
        let matrix = MassMatrix::new(&inst.model, inst.bbas()).unwrap();
        let exact = combine_with(
            &matrix,
            &Rule::Pcr5,
            &Options {
                arithmetic: Arithmetic::Exact,
                ..Options::default()
            },
        )
        .unwrap();
        let got = inst.keyed(exact.exact.clone().expect("exact masses"));
        if got != want {
            exact_mismatches.push(format!("instance {i} ({})", inst.name));
        }
        let float = combine_with(
            &matrix,
            &Rule::Pcr5,
            &Options {
                arithmetic: Arithmetic::Float,
                ..Options::default()
            },
        )
        .unwrap();
        let got = inst.keyed(float.bba.iter().map(|(e, m)| (e.clone(), m)));
        let keys: HashSet<u64> = got.keys().chain(want.keys()).copied().collect();
        for key in keys {
            let g = got.get(&key).copied().unwrap_or(0.0);
            let w = want.get(&key).map_or(0.0, |m| m.to_f64().unwrap());
            max_float_gap = max_float_gap.max((g - w).abs());
        }
    }
    OracleReport {
        exact_mismatches,
        max_float_gap,
    }
}

pub const ORACLE_INSTANCES: usize = 100;
pub const ORACLE_TOLERANCE: f64 = 1e-12;
