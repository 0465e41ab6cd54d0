//! Combination rules for belief functions over power sets and hyper-power
//! sets.
//!
//! Sources are [`Bba`]s over a [`Frame`]; a [`Model`] decides which lattice
//! elements are empty. A [`MassMatrix`] gathers the sources of one
//! combination, and [`combine`] runs a [`Rule`] on it:
//!
//! ```
//! use pcr_fusion::{combine, Bba, Frame, MassMatrix, Model, Rule};
//!
//! let frame = Frame::new(["A", "B", "C"]).unwrap();
//! let model = Model::shafer(frame.clone());
//! let m1 = Bba::parse(&frame, &[("A", 0.9), ("C", 0.1)]).unwrap();
//! let m2 = Bba::parse(&frame, &[("B", 0.9), ("C", 0.1)]).unwrap();
//! let matrix = MassMatrix::new(&model, vec![m1, m2]).unwrap();
//!
//! let fused = combine(&matrix, &Rule::Pcr5).unwrap();
//! let a = frame.element("A").unwrap();
//! assert!((fused.mass(&a) - 0.486).abs() < 1e-12);
//! ```
//!
//! Term enumeration runs on the rayon pool when the `parallel` feature is
//! enabled (the default); [`Execution::Sequential`] forces a single thread.

pub mod bba;
pub mod engine;
pub mod expr;
pub mod lattice;
pub mod numeric;
pub mod rules;

pub use bba::{
    column_sum, vacuous_bba, validate_bba, Bba, BbaError, ConflictLedger, ConflictTerm, MassMatrix,
};
pub use engine::{Execution, Fallback};
pub use expr::{canonical_form, disjunctive_form, is_empty, parse_expr, ParseError, SetExpr};
pub use lattice::{Canonical, Element, Frame, LatticeError, Model, ModelKind, World};
pub use numeric::Arithmetic;
pub use rules::{
    combine, combine_with, conflict_ledger, conjunctive, conjunctive_free, dempster, disjunctive,
    dsm_hybrid, dubois_prade, ebr_reallocate, minc, pcr1, pcr2, pcr3, pcr4, pcr5_approximate,
    pcr5_multi, pcr5_pair, resolve, sequential_fusion, smets, wao, wao_weights, weighted_operator,
    yager, Diagnostics, FallbackEvent, Fusion, FusionError, MinCVersion, Options, Output,
    RawConjunctive, Rule, Transfer, WaoMode, WeightAssignment,
};
