//! Random closed subsets of Cantor space.
//!
//! Closed sets are handled through the trees of their finite prefixes and the
//! symbol codes of those trees: trit codes for trees without dead ends, quad
//! codes for Galton-Watson trees. On top of the codecs sit the survival
//! recurrence and pruning of branching processes, the intersection algebra of
//! Bernoulli random closed sets, dimension bounds for their members, and a
//! seeded Monte Carlo harness that checks each closed form against sampled
//! trees.

pub mod cli;
pub mod dimension;
pub mod error;
pub mod galton_watson;
pub mod intersection;
pub mod measures;
pub mod montecarlo;
pub mod stats;
pub mod tree_codec;

pub use error::{Error, Result};
pub use measures::{BernoulliPair, OffspringLaw, RandomStream, SurvivalPair};
pub use tree_codec::{DecodeOutcome, PrefixTree, QuadCode, TritCode};
