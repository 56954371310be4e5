//! Multivector-field analysis of first-order classical field theories.
//!
//! Everything works on a single natural chart: `(x, y, v)` on the jet
//! bundle for Lagrangian systems and `(x, y, p)` on the multimomentum
//! bundle for Hamiltonian systems.
//!
//! * [`symcore`]: exact expressions, differentiation, linear solving.
//! * [`extcalc`]: differential forms and multivector fields.
//! * [`mvf`]: normalized decomposable multivector-field families.
//! * [`lagrangian`], [`hamiltonian`]: field equations and their solutions.
//! * [`connection`]: associated connections, curvature, holonomy.
//! * [`numeric`]: grid sections, residuals, integration of flat fields.

pub mod symcore;
pub mod extcalc;
pub mod mvf;
pub mod lagrangian;
pub mod connection;
pub mod hamiltonian;
pub mod numeric;
