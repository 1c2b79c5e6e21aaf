//! Exact engine for set-pebble games with debt scheduling on finite
//! relational structures, the equivalence relations they induce, classical
//! back-and-forth oracles, and a property harness that mechanically verifies
//! their laws on exhaustive small corpora.

pub mod error;
pub mod vocab;
pub mod structure;
pub mod partial_map;
pub mod iso;
pub mod game;
pub mod solver;
pub mod stability;
pub mod backforth;
pub mod equiv;
pub mod harness;

pub use error::{CoreError, Result};
pub use game::{Clock, GameConfig, State, Winner};
pub use partial_map::{preserves_gamma, GammaMode, PartialMap};
pub use solver::{e0_equiv, solve, Solver};
pub use stability::{rank, stabilization_report, Rank};
pub use structure::{eval_atomic, AtomicFormula, ElemId, Structure, StructureBuilder};
pub use vocab::{SymbolBijection, Vocabulary};
