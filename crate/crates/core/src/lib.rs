//! Linear impulsive delay differential equations
//!
//! ```text
//! x'(t) + sum_k A_k(t) x(h_k(t)) = f(t),      t >= 0
//! x(xi) = phi(xi),                            xi < 0
//! x(tau_j) = B_j x(tau_j - 0) + alpha_j,      j = 1, 2, ...
//! ```
//!
//! The crate integrates such systems, builds their fundamental matrices and
//! Cauchy operators, evaluates the function-space norms that enter the
//! admissibility theory, and produces explicit exponential-stability and
//! integrability certificates.
//!
//! Module map:
//!
//! - [`schedule`]: impulse times, jump matrices, counting constants
//! - [`timefn`]: expression language for coefficients and delay laws
//! - [`system`]: problem assembly and hypothesis checks
//! - [`solver`]: fixed-step RK4 with exact jumps and interpolated history
//! - [`fundamental`]: closed-form and numerical fundamental matrices,
//!   Cauchy operator, representation of solutions
//! - [`norms`]: `L_p`, `M_p`, `D_p` norms and membership probes
//! - [`stability`]: certificates, decay fits, admissibility probes
//! - [`config`]: TOML problem description

pub mod config;
pub mod error;
pub mod fundamental;
pub mod linalg;
pub mod norms;
pub mod schedule;
pub mod solver;
pub mod stability;
pub mod system;
pub mod timefn;

pub use error::{Error, Result};
pub use schedule::{GapMode, ImpulseSchedule};
pub use system::DelaySystem;
pub use timefn::{DelayLaw, MatrixFunction, TimeExpr};
