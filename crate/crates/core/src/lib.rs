//! Limit shapes of volume-weighted lozenge tilings.
//!
//! The pipeline goes: exact bivariate polynomial arithmetic ([`bipoly`]),
//! spectral-curve services such as the Ronkin function and surface tension
//! ([`spectral`]), the complex coordinate on the liquid region ([`burgers`]),
//! tropical degeneration and inscribed algebraic curves ([`tropical`]),
//! frozen-boundary extraction ([`frozen`]), height-function reconstruction
//! ([`shape`]), and exact finite-size sampling for comparison ([`sampler`]).
//! [`scene`] ties a full problem description together for the CLI.

pub mod bipoly;
pub mod burgers;
pub mod error;
mod quad;
pub mod spectral;
pub mod tropical;

pub use error::{Error, Result};
