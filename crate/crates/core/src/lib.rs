//! Exact computational tools for thick Cantor sets.
//!
//! Cantor sets are approximated by finite unions of closed rational
//! intervals ([`CantorStage`]) and by refinement families of them
//! ([`family::StageFamily`]). On top of exact thickness computation the crate
//! provides gap-lemma intersection certificates, constructive searches for
//! three-point configurations `{x - t, x, x + f(t)}`, and a finite set that
//! avoids `{x - t, x, x + t^2}` at the endpoints of its largest gap.

pub mod constructions;
pub mod error;
pub mod family;
pub mod functions;
pub mod gaplemma;
pub mod poly;
pub mod rational;
pub mod search;
pub mod stage;

pub use error::{Error, Result};
pub use functions::{CertifiedValue, DerivativeWindow, FunctionSpec};
pub use rational::Rational;
pub use stage::{CantorStage, ClosedInterval, Gap, GapBridgeReport, GapKind, Side, Thickness};
