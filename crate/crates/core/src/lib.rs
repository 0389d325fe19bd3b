//! Proper losses on the probability simplex and the geometry of their
//! surrogate regret.
//!
//! A convex generator `f` on `Δ^N` induces a proper loss through the Savage
//! construction, and the surrogate regret of that loss is the Bregman
//! divergence of `f`. The modulus of convexity `ω` of `f` turns the regret into
//! a p-norm bound `‖q − q̂‖_p ≤ ω⁻¹(R/2)`, and the order analysis measures how
//! fast that bound can possibly converge.
//!
//! Modules, bottom-up:
//!
//! - [`simplex`]: simplex points, p-norms, exact-distance pairs, grids, sampling
//! - [`generators`]: convex generator families and subgradient selectors
//! - [`proper_loss`]: Savage losses, risks, regret, properness certificates
//! - [`modulus`]: closed-form and brute-force moduli of convexity
//! - [`order`]: Simonenko order, local modulus `K`, the cosine integral
//! - [`downstream`]: plug-in classification, noisy labels, bipartite ranking
//! - [`cli`]: the command-line front end

pub mod cli;
pub mod downstream;
pub mod error;
pub mod generators;
pub mod interp;
pub mod modulus;
pub mod order;
pub mod output;
pub mod proper_loss;
pub mod simplex;
pub mod special;

pub use error::{Error, Result};
pub use generators::{ConvexGenerator, Family, GeneratorSpec};
pub use modulus::{ModulusCurve, ModulusMethod};
pub use simplex::{PNorm, ProbVec, SimplexPair};
