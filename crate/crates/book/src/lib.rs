//! Compiles the code listings of the guide in `book/` as doctests, so the
//! guide cannot drift from the library.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/mps.md")]
pub mod mps {}

#[doc = include_str!("../../../book/src/circuit.md")]
pub mod circuit {}

#[doc = include_str!("../../../book/src/training.md")]
pub mod training {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
