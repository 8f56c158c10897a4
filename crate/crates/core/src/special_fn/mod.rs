//! Special functions with integer quantum numbers.

mod bessel;
mod clebsch;

pub use bessel::{spherical_bessel, spherical_bessel_seq};
pub use clebsch::{clebsch_gordan, clebsch_gordan_m0, g_coefficient, CgKey, CgTable, FrozenCgTable};
