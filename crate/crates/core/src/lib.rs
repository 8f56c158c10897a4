//! Rotational relaxation of a homo-nuclear rigid-rotor impurity in a weakly
//! interacting Bose–Einstein condensate.
//!
//! The crate computes single- and two-phonon transition rates between
//! rotational levels, assembles them into the generator of the j-resolved
//! Boltzmann equation, and propagates populations in time.
#![allow(non_snake_case)]

pub mod cli_io;
pub mod condensate;
pub mod error;
pub mod kinetics;
pub mod params;
pub mod quadrature;
pub mod rates_single;
pub mod rates_two;
pub mod special_fn;

pub use error::{Error, Result};
pub use params::{critical_j, derive_constants, thermal_angular_momentum, CriticalJ, DerivedConstants, SystemParams};
