//! The guide's chapters as doc comments, so that `cargo test` runs every
//! listing in the book.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/timeline.md")]
pub mod timeline {}
#[doc = include_str!("../../../book/src/decode.md")]
pub mod decode {}
#[doc = include_str!("../../../book/src/composition.md")]
pub mod composition {}
#[doc = include_str!("../../../book/src/fusion.md")]
pub mod fusion {}
#[doc = include_str!("../../../book/src/suppression.md")]
pub mod suppression {}
#[doc = include_str!("../../../book/src/evaluation.md")]
pub mod evaluation {}
#[doc = include_str!("../../../book/src/simulation.md")]
pub mod simulation {}
#[doc = include_str!("../../../book/src/reliability.md")]
pub mod reliability {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
