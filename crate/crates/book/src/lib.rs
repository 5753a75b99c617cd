//! Runs the guide chapters under `book/src` as doctests, one module per
//! chapter so a failure points at its file.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/tasks.md")]
pub mod tasks {}
#[doc = include_str!("../../../book/src/experts.md")]
pub mod experts {}
#[doc = include_str!("../../../book/src/meta_control.md")]
pub mod meta_control {}
#[doc = include_str!("../../../book/src/human.md")]
pub mod human {}
#[doc = include_str!("../../../book/src/experiments.md")]
pub mod experiments {}
#[doc = include_str!("../../../book/src/live_protocol.md")]
pub mod live_protocol {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
