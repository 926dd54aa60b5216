//! Residual risk scoring for vulnerable/patched C and C++ function pairs.
//!
//! The pipeline parses both versions of a function, measures how much of the
//! vulnerable structure and embedding-space position survives the patch, and
//! combines those signals into a single score used to rank pairs for
//! follow-up with static analyzers.

pub mod astkit;
pub mod corpus;
pub mod embedkit;
#[cfg(any(test, feature = "oracles"))]
pub mod oracle;
pub mod pipeline;
pub mod report;
pub mod scoring;
pub mod staticval;
pub mod treediff;

pub use astkit::{parse_function, LanguageHint, SyntaxTree};
pub use corpus::{CorpusFilterConfig, FunctionPair};
