//! Numerical laboratory for the multidimensional stochastic viscous Burgers
//! equation
//!
//! ```text
//! y(t,x) = φ(x) + ∫₀ᵗ [ νΔy − (y,∂ₓ)y ](s,x) ds + η(t,x)
//! ```
//!
//! on a periodic box, with Hölder-rough initial data and additive noise that
//! is rough in time and smooth in space. Two independent checks accompany
//! the solver: the Cole–Hopf exact solution for potential noiseless data
//! ([`colehopf`]) and a Monte Carlo Feynman–Kac representation for general
//! data ([`fbsde`]).

pub mod colehopf;
pub mod fbsde;
pub mod fields;
pub mod initial_data;
pub mod noise;
pub mod rng;
pub mod solver;
