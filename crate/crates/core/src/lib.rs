//! Strict Weyl quantization on duals of Lie algebroids.
//!
//! The crate builds concrete Lie groupoids (pair groupoids, Lie groups and
//! transformation groupoids), quantizes Paley-Wiener observables on the dual
//! of their algebroids into the convolution algebra, and measures how close
//! the result comes to a strict quantization as `ħ → 0`.

pub mod cstar;
pub mod error;
pub mod expmaps;
pub mod geometry;
pub mod fourier;
pub mod harness;
pub mod observable;
pub mod poisson;
pub mod quantize;

pub use error::{Error, Result};

// The guide under book/ is compiled here so its snippets run as doctests.
#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/groupoids.md")]
    mod groupoids {}
    #[doc = include_str!("../../../book/src/quantization.md")]
    mod quantization {}
    #[doc = include_str!("../../../book/src/checks.md")]
    mod checks {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
