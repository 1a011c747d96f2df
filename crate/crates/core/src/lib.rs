//! Dirichlet forms of one-dimensional diffusions with thin singular barriers.
//!
//! The crate discretizes the energy forms of diffusions on the line and on the
//! line with a doubled origin, solves their resolvents and heat semigroups,
//! simulates snapping-out paths, and runs the convergence experiments that
//! separate the impermeable, semi-permeable and permeable regimes.

pub mod assembly;
pub mod error;
pub mod evolve;
pub mod io;
pub mod lab;
pub mod mc;
pub mod measures;
pub mod probe;

pub use assembly::{BarrierGrid, DiscreteForm, FormKind, Grid, Interface, Origin, Point, Side};
pub use error::{Error, Result};
pub use measures::{BarrierSpec, Conductivity, MonotoneMeasure};
