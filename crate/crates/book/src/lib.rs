//! The guide's chapters, included so that `cargo test` runs their snippets.

#[doc = include_str!("../../../book/src/intro.md")]
pub mod intro {}

#[doc = include_str!("../../../book/src/app-specs.md")]
pub mod app_specs {}

#[doc = include_str!("../../../book/src/emulator.md")]
pub mod emulator {}

#[doc = include_str!("../../../book/src/exploration.md")]
pub mod exploration {}

#[doc = include_str!("../../../book/src/model.md")]
pub mod model {}

#[doc = include_str!("../../../book/src/generation.md")]
pub mod generation {}

#[doc = include_str!("../../../book/src/runner.md")]
pub mod runner {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
