//! Physics-informed training and spectral-bias diagnostics at desk scale.
//!
//! The crate is organized around eight subsystems:
//!
//! - [`ndcore`] — dense tensors, forward-mode univariate jets (input
//!   derivatives up to order 3), and a reverse-mode tape for parameter
//!   gradients over jet-augmented forward passes.
//! - [`models`] — MLPs (Tanh / SIREN / adaptive-Tanh), KANs (Chebyshev /
//!   RBF / B-spline bases), the Tanh-cKAN variant, and input embeddings.
//! - [`optim`] — Adam, L-BFGS, SOAP, and self-scaled Broyden, sharing a
//!   strong Wolfe line search.
//! - [`problems`] — PDE and regression benchmarks: KdV, the driven wave
//!   equation, steady reaction–diffusion, and two data-driven cases.
//! - [`reference`] — ground-truth generators (pseudo-spectral KdV solver,
//!   analytic wave and elliptic solutions) and the on-disk field cache.
//! - [`spectral`] — frequency-resolved error metrics, Barron norm,
//!   statistical moments, binned spectral power loss, and empirical NTK.
//! - [`operator`] — 1D operator learning (DeepONet, FNO) on a synthetic
//!   Green's-function convolution task.
//! - [`cli`] — experiment runner, report generator, and oracle checks
//!   backing the `spectra` binary.

pub mod cli;
pub mod models;
pub mod ndcore;
pub mod operator;
pub mod optim;
pub mod problems;
pub mod reference;
pub mod spectral;
