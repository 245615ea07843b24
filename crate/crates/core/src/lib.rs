//! Countable families of continuous and 1-Lipschitz maps covering squares of
//! point sets in Cantor space.
//!
//! - [`sierpinski`]: the ordinal covering `f_n(β) = n mod β` and its Ulam matrix.
//! - [`cantor`]: the block-projection family `f_n` on `2^ω`, diagonal
//!   extensions, and chains of points covered by it.
//! - [`lipschitz`]: 1-Lipschitz self-maps of the finite trees `2^n`.
//! - [`forcing`]: the poset of finite conditions, its density extensions,
//!   amalgamation, and generic runs.
//! - [`verifier`]: independent covering checks for both families.
//! - [`artifact`] and [`cli`]: JSON artifacts and the command-line surface.

pub mod artifact;
pub mod bits;
pub mod cantor;
pub mod cli;
pub mod forcing;
pub mod lipschitz;
pub mod sierpinski;
pub mod verifier;

pub use bits::{metric_distance, BitString, Distance};
pub use cantor::{build_chain, verify_chain, Chain, PointExpr, PointId, PointStore};
pub use forcing::{
    amalgamate, amalgamation_preconditions, extend_with_index, extend_with_ordinal, generic_run,
    leq, random_isomorphic_pair, Condition, GenericOutput, OrdLabel, PairParams,
};
pub use lipschitz::{enumerate_l1, LeafTable, TreeMap};
pub use verifier::{covers_cantor, covers_tree, CoverReport};
