//! The listings of the guide in `book/`, compiled and run as doctests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/chebyshev.md")]
pub mod chebyshev {}

#[doc = include_str!("../../../book/src/operator.md")]
pub mod operator {}

#[doc = include_str!("../../../book/src/spacetime.md")]
pub mod spacetime {}

#[doc = include_str!("../../../book/src/newmark.md")]
pub mod newmark {}

#[doc = include_str!("../../../book/src/experiments.md")]
pub mod experiments {}
