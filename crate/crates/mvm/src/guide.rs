//! The narrative guide, one module per chapter of the book in `book/` at
//! the repository root. Including the chapters here makes every code
//! sample a doc-test, so `cargo test --doc` keeps the book honest.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/sample-sets-and-metrics.md")]
pub mod sample_sets_and_metrics {}

#[doc = include_str!("../../../book/src/shape-descriptors.md")]
pub mod shape_descriptors {}

#[doc = include_str!("../../../book/src/networks-and-optimization.md")]
pub mod networks_and_optimization {}

#[doc = include_str!("../../../book/src/objectives.md")]
pub mod objectives {}

#[doc = include_str!("../../../book/src/training.md")]
pub mod training {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
