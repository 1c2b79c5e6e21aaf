//! Mechanical verification of the game laws on exhaustive small corpora:
//! determinacy, symmetry, monotonicity, rigidity, the back-and-forth bridge,
//! sum/product congruence with composed-strategy playouts, and the
//! memoization/clamping soundness checks.

pub mod corpus;
pub mod oracle;
pub mod suites;

pub use corpus::{gen_alpha_order, gen_exhaustive, gen_linear_order, gen_m_n_alpha, Corpus};
pub use oracle::{compose_product_state, compose_sum_state, minimax_winner};
pub use suites::{CheckResult, SuiteReport};
