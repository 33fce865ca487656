//! Exact arithmetic in divided power algebras `Γ_R(M)` of finite free
//! modules, randomized checks of the divided power axioms, polynomial laws
//! given by coefficient tables, and base change of divided power algebras.

pub mod basechange;
pub mod checks;
pub mod dpaxioms;
pub mod error;
pub mod freemodule;
pub mod gamma;
pub mod multiindex;
pub mod polylaw;
pub mod sampling;
pub mod scalars;

pub use error::{Error, Result};
pub use freemodule::{FreeModuleSpec, LinearMap, ModuleVector};
pub use gamma::GammaElement;
pub use multiindex::{Basis, BasisLabels, MultiIndex};
pub use scalars::{Ring, RingDescriptor, Scalar, Value};
