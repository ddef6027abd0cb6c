//! Two-qubit EPR-steering, Bell-nonlocality and entanglement measures.
//!
//! States live in the basis `|00>, |01>, |10>, |11>` and are mostly handled
//! through their Fano form `(a, b, T)`. Closed-form maxima of the steering and
//! Bell functionals are in [`measures`]; [`optimizer`] maximizes the raw
//! functionals numerically and [`harness`] runs seeded campaigns checking the
//! two against each other.

pub mod document;
pub mod error;
pub mod harness;
pub mod inequalities;
pub mod measures;
pub mod optimizer;
pub mod sampling;
pub mod state;

pub use document::{NamedState, StateDocument};
pub use error::{Error, Result};
pub use inequalities::{BellSetting, Setting, SteeringSetting};
pub use measures::{analyze, MeasureReport, WernerReport};
pub use optimizer::{maximize, Functional, OptimizationResult, OptimizerConfig};
pub use sampling::{SamplerKind, SamplerSpec};
pub use state::{BellState, CanonicalCoefficients, DensityMatrix, FanoForm, XStateParams};
