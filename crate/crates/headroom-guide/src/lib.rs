//! Doc-test shim for the book.
//!
//! Each module includes one book chapter as its documentation, so
//! `cargo test -p headroom-guide` compiles and runs every Rust snippet in
//! the book against the current `headroom` API. A chapter that drifts from
//! the library fails the build here, not in a reader's terminal.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/model.md")]
pub mod model {}

#[doc = include_str!("../../../book/src/streams.md")]
pub mod streams {}

#[doc = include_str!("../../../book/src/study.md")]
pub mod study {}

#[doc = include_str!("../../../book/src/fit.md")]
pub mod fit {}

#[doc = include_str!("../../../book/src/drift.md")]
pub mod drift {}

#[doc = include_str!("../../../book/src/control.md")]
pub mod control {}

#[doc = include_str!("../../../book/src/suite.md")]
pub mod suite {}
