//! Assignment rules: probabilistic serial (strict preferences), its
//! flow-based extension to weak preferences, serial dictatorship and random
//! serial dictatorship.

mod eps;
mod flow;
mod ps;
mod serial;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assignment::{Assignment, AssignmentError};
use crate::preference::AgentId;
use crate::profile::Profile;

pub use eps::{eps, eps_with_trace, TiePolicy};
pub use ps::{ps, EatingInterval, EatingTrace};
pub use serial::{rsd, serial_dictatorship, serial_dictatorship_with_tiebreak, RSD_CAP};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MechanismError {
    #[error("agent {} has indifferences; this rule needs strict preferences (use eps for weak ones)", .agent.0 + 1)]
    NotStrict { agent: AgentId },
    #[error("{n} agents exceeds the cap of {cap}")]
    TooLarge { n: usize, cap: usize },
    #[error("{0:?} is not a permutation")]
    BadOrder(Vec<usize>),
    #[error("rule produced an invalid assignment: {0}")]
    Internal(AssignmentError),
}

/// Preference domain on which a rule is defined.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PreferenceDomain {
    Strict,
    Weak,
}

/// A random assignment rule: profile in, doubly stochastic matrix out.
pub trait AssignmentRule: Sync {
    fn name(&self) -> String;
    fn domain(&self) -> PreferenceDomain;
    fn assign(&self, profile: &Profile) -> Result<Assignment, MechanismError>;
}

/// The rules shipped with the crate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rule {
    Ps,
    Eps(TiePolicy),
    Rsd,
}

impl AssignmentRule for Rule {
    fn name(&self) -> String {
        self.to_string()
    }

    fn domain(&self) -> PreferenceDomain {
        match self {
            Rule::Eps(_) => PreferenceDomain::Weak,
            Rule::Ps | Rule::Rsd => PreferenceDomain::Strict,
        }
    }

    fn assign(&self, profile: &Profile) -> Result<Assignment, MechanismError> {
        match self {
            Rule::Ps => ps(profile).map(|(a, _)| a),
            Rule::Eps(policy) => Ok(eps(profile, *policy)),
            Rule::Rsd => rsd(profile),
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rule::Ps => f.write_str("ps"),
            Rule::Eps(TiePolicy::Symmetric) => f.write_str("eps"),
            Rule::Eps(TiePolicy::Lexicographic) => f.write_str("eps-lex"),
            Rule::Rsd => f.write_str("rsd"),
        }
    }
}

impl FromStr for Rule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ps" => Ok(Rule::Ps),
            "eps" | "eps-symmetric" => Ok(Rule::Eps(TiePolicy::Symmetric)),
            "eps-lex" | "eps-lexicographic" => Ok(Rule::Eps(TiePolicy::Lexicographic)),
            "rsd" => Ok(Rule::Rsd),
            other => Err(format!("unknown mechanism `{other}` (expected ps, eps, eps-lex or rsd)")),
        }
    }
}

impl<F> AssignmentRule for (&str, PreferenceDomain, F)
where
    F: Fn(&Profile) -> Result<Assignment, MechanismError> + Sync,
{
    fn name(&self) -> String {
        self.0.to_string()
    }

    fn domain(&self) -> PreferenceDomain {
        self.1
    }

    fn assign(&self, profile: &Profile) -> Result<Assignment, MechanismError> {
        (self.2)(profile)
    }
}
