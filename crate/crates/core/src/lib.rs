//! Exact-arithmetic random assignment with weak preferences.
//!
//! The crate implements the probabilistic serial rule and its flow-based
//! extension to indifferences, random serial dictatorship, stochastic
//! dominance, trading-cycle based efficiency checks, an exact rational LP
//! solver, manipulation search, and a checker that replays the impossibility
//! argument for extensions of probabilistic serial.

pub mod assignment;
pub mod dominance;
pub mod efficiency;
pub mod exactlp;
pub mod mechanisms;
pub mod preference;
pub mod profile;
pub mod rational;
pub mod sampling;
pub mod strategyproofness;

pub use assignment::{validate_assignment, Assignment, AssignmentError, DiscreteAssignment};
pub use preference::{AgentId, ObjectId, WeakOrder};
pub use profile::{pad_profile, parse_profile, Profile, ProfileError};
pub use rational::{q, Rational};
