//! Stability, Lyapunov exponents and Barabanov norms of planar linear switching systems.

pub mod applications;
pub mod barabanov;
pub mod control_set;
pub mod io;
pub mod linalg;
pub mod stability;
pub mod trajectory;

pub use control_set::{ControlSet, ControlSetError, LeadingDirection, Noise, SetKind, Side};
pub use linalg::{Mat2, Vec2};
