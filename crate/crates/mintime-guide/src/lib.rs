//! The book under `book/` is the narrative guide to the `mintime` crates.
//! mdBook cannot run Rust snippets as tests, so each chapter is included
//! here as a doc comment and `cargo test --doc` compiles and runs every
//! code block. Editing a chapter therefore keeps the snippets honest.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
