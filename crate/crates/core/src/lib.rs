//! Simulation and estimation toolkit for spin-mechanical sensing with NV
//! centers in diamond nanostructures.
//!
//! The crate covers five connected problem areas:
//!
//! - [`spin`]: the ground-state spin Hamiltonian under stress and
//!   magnetic field, resonance computation (closed form and exact
//!   eigensolve) and ODMR spectrum synthesis for oriented ensembles.
//! - [`beam`]: Euler-Bernoulli statics for pillars and cantilevers, and
//!   the flexural mode basis of doubly clamped nanobeams.
//! - [`calibrate`]: synthetic uniaxial-stress experiments, susceptibility
//!   fitting with intrinsic-stress nuisance parameters, and force
//!   inference from ODMR shifts of an embedded NV.
//! - [`sense`]: shot-noise-limited force sensitivity of nanopillar
//!   devices, and force-vector imaging with nanopillar arrays.
//! - [`inertial`]: adsorbate-induced mode perturbations, spin readout of
//!   the in/out-of-phase response, mass moments and mass-distribution
//!   reconstruction, and mass sensitivity.
//!
//! All quantities are SI internally (Pa, Hz, T, m, kg, s); the [`units`]
//! module holds the boundary conversion constants. Values are immutable
//! after construction and all operations are pure functions of their
//! inputs, so everything here is safe to share across threads.

pub mod beam;
pub mod calibrate;
pub mod inertial;
pub mod quad;
pub mod sense;
pub mod spin;
pub mod units;
