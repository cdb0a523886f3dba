//! Unit conversion constants.
//!
//! All internal computation uses SI units (Pa, Hz, T, m, kg, s). Boundary
//! I/O speaks the conventional units of the domain (GPa, MHz, mT, um, pN,
//! zg); conversions happen exactly once, at parse or format time, by
//! multiplying or dividing with the constants below.

/// Pascals per gigapascal.
pub const GPA: f64 = 1e9;
/// Pascals per megapascal.
pub const MPA: f64 = 1e6;
/// Hertz per gigahertz.
pub const GHZ: f64 = 1e9;
/// Hertz per megahertz.
pub const MHZ: f64 = 1e6;
/// Hertz per kilohertz.
pub const KHZ: f64 = 1e3;
/// Metres per micrometre.
pub const UM: f64 = 1e-6;
/// Metres per nanometre.
pub const NM: f64 = 1e-9;
/// Tesla per millitesla.
pub const MT: f64 = 1e-3;
/// Newtons per piconewton.
pub const PN: f64 = 1e-12;
/// Newtons per nanonewton.
pub const NN: f64 = 1e-9;
/// Newtons per micronewton.
pub const UN: f64 = 1e-6;
/// Seconds per microsecond.
pub const US: f64 = 1e-6;
/// Seconds per nanosecond.
pub const NS: f64 = 1e-9;
/// Kilograms per zeptogram.
pub const ZG: f64 = 1e-24;

/// Susceptibility conversion: Hz/Pa per (MHz/GPa).
pub const MHZ_PER_GPA: f64 = MHZ / GPA;
