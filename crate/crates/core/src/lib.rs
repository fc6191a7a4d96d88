//! Model-based testing for D-pad navigated TV apps.
//!
//! An [`appspec::AppSpec`] describes an app. The [`emulator`] runs it, the
//! [`creeper`] explores it breadth first, [`navmodel`] turns what was seen
//! into a navigation model, [`testgen`] derives and repairs test suites from
//! the model, and [`runner`] replays them and classifies failures.

pub mod appspec;
pub mod creeper;
pub mod emulator;
pub mod key;
pub mod navmodel;
pub mod pipeline;
pub mod runner;
pub mod testgen;
