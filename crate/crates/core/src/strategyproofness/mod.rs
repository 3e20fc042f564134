//! Manipulation search, PS-extension and symmetry checks, and the
//! impossibility checker.

mod theorem;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assignment::Assignment;
use crate::dominance::{sd_compare, DominanceError, SdComparison};
use crate::mechanisms::{ps, AssignmentRule, MechanismError, PreferenceDomain};
use crate::preference::{
    enumerate_strict_orders, enumerate_weak_orders, permutations, AgentId, PreferenceError, WeakOrder,
};
use crate::profile::Profile;
use crate::rational::Rational;
use crate::sampling::{random_strict_profile, rng};

pub use theorem::{
    impossibility_profiles, verify_impossibility_theorem, Entry, ImpossibilityProfiles, ProofNode, Refutation,
    TheoremCertificate, TheoremError, ZeroProof, THEOREM_MAX_N,
};

/// Largest `n` for which all strict profiles are swept.
pub const STRICT_SWEEP_CAP: usize = 3;
/// Largest `n` for which all agent and object permutations are tried.
pub const SYMMETRY_CAP: usize = 6;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ManipulationError {
    #[error(transparent)]
    Mechanism(#[from] MechanismError),
    #[error(transparent)]
    Preference(#[from] PreferenceError),
    #[error(transparent)]
    Dominance(#[from] DominanceError),
    #[error("{n} exceeds the cap of {cap} for this search")]
    TooLarge { n: usize, cap: usize },
    #[error("misreport ranks {got} objects, the profile has {expected}")]
    MisreportShape { expected: usize, got: usize },
}

/// Which deviation counts as a successful manipulation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Notion {
    /// The misreport yields a row that strictly SD-dominates the truthful one.
    WeakSd,
    /// The truthful row fails to weakly SD-dominate the misreport's row.
    Sd,
}

impl Notion {
    /// `comparison` is `sd_compare(true pref, manipulated, truthful)`.
    pub fn is_violation(self, comparison: SdComparison) -> bool {
        match self {
            Notion::WeakSd => comparison == SdComparison::StrictlyDominates,
            Notion::Sd => !comparison.mirror().weakly_dominates(),
        }
    }
}

impl fmt::Display for Notion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Notion::WeakSd => "weak-sd",
            Notion::Sd => "sd",
        })
    }
}

impl FromStr for Notion {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "weak-sd" => Ok(Notion::WeakSd),
            "sd" => Ok(Notion::Sd),
            other => Err(format!("unknown notion `{other}` (expected weak-sd or sd)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManipulationWitness {
    pub profile: Profile,
    pub agent: AgentId,
    pub notion: Notion,
    pub true_preference: WeakOrder,
    pub misreport: WeakOrder,
    pub truthful_row: Vec<Rational>,
    pub manipulated_row: Vec<Rational>,
    /// Manipulated row against truthful row under the true preference.
    pub comparison: SdComparison,
}

impl ManipulationWitness {
    /// Reruns the rule on both profiles and re-derives the verdict.
    pub fn verify(&self, rule: &dyn AssignmentRule) -> Result<bool, ManipulationError> {
        let truthful = rule.assign(&self.profile)?;
        let manipulated = rule.assign(&self.profile.with_pref(self.agent, self.misreport.clone()))?;
        let cmp = sd_compare(&self.true_preference, manipulated.row(self.agent), truthful.row(self.agent))?;
        Ok(self.profile.pref(self.agent) == &self.true_preference
            && truthful.row(self.agent) == self.truthful_row.as_slice()
            && manipulated.row(self.agent) == self.manipulated_row.as_slice()
            && cmp == self.comparison
            && self.notion.is_violation(cmp))
    }

    pub fn to_text(&self) -> String {
        let p = &self.profile;
        let fmt_row = |row: &[Rational]| row.iter().map(Rational::to_string).collect::<Vec<_>>().join(", ");
        let mut out = String::new();
        out.push_str(&format!("{} manipulation by agent {}\n", self.notion, p.agent_label(self.agent)));
        out.push_str(&format!("profile:\n{}", indent(&p.to_text())));
        out.push_str(&format!("true preference: {}\n", p.format_pref(&self.true_preference)));
        out.push_str(&format!("misreport:       {}\n", p.format_pref(&self.misreport)));
        out.push_str(&format!("truthful row:    ({})\n", fmt_row(&self.truthful_row)));
        out.push_str(&format!("manipulated row: ({})\n", fmt_row(&self.manipulated_row)));
        out.push_str(&format!("manipulated vs truthful: {:?}\n", self.comparison));
        out
    }
}

fn indent(text: &str) -> String {
    text.lines().map(|l| format!("  {l}\n")).collect()
}

/// Restricts which agents deviate and which reports they may use.
#[derive(Clone, Debug, Default)]
pub struct ManipulationScope {
    pub agents: Option<Vec<AgentId>>,
    pub misreports: Option<Vec<WeakOrder>>,
}

/// All reports a rule accepts: weak orders for weak-domain rules, strict
/// orders otherwise.
pub fn candidate_reports(rule: &dyn AssignmentRule, n: usize) -> Result<Vec<WeakOrder>, ManipulationError> {
    Ok(match rule.domain() {
        PreferenceDomain::Weak => enumerate_weak_orders(n)?,
        PreferenceDomain::Strict => enumerate_strict_orders(n),
    })
}

/// Every violation in search order (agents ascending, reports in
/// enumeration order).
pub fn all_manipulations(
    rule: &dyn AssignmentRule,
    profile: &Profile,
    notion: Notion,
    scope: &ManipulationScope,
    first_only: bool,
) -> Result<Vec<ManipulationWitness>, ManipulationError> {
    let n = profile.n();
    let reports = match &scope.misreports {
        Some(list) => list.clone(),
        None => candidate_reports(rule, n)?,
    };
    if let Some(bad) = reports.iter().find(|r| r.num_objects() != n) {
        return Err(ManipulationError::MisreportShape { expected: n, got: bad.num_objects() });
    }
    let agents = scope.agents.clone().unwrap_or_else(|| (0..n).map(AgentId).collect());
    let truthful = rule.assign(profile)?;
    let mut found = Vec::new();
    for agent in agents {
        let true_pref = profile.pref(agent);
        for report in reports.iter().filter(|r| *r != true_pref) {
            let manipulated = rule.assign(&profile.with_pref(agent, report.clone()))?;
            let cmp = sd_compare(true_pref, manipulated.row(agent), truthful.row(agent))?;
            if notion.is_violation(cmp) {
                found.push(ManipulationWitness {
                    profile: profile.clone(),
                    agent,
                    notion,
                    true_preference: true_pref.clone(),
                    misreport: report.clone(),
                    truthful_row: truthful.row(agent).to_vec(),
                    manipulated_row: manipulated.row(agent).to_vec(),
                    comparison: cmp,
                });
                if first_only {
                    return Ok(found);
                }
            }
        }
    }
    Ok(found)
}

pub fn find_manipulation(
    rule: &dyn AssignmentRule,
    profile: &Profile,
    notion: Notion,
    scope: &ManipulationScope,
) -> Result<Option<ManipulationWitness>, ManipulationError> {
    Ok(all_manipulations(rule, profile, notion, scope, true)?.into_iter().next())
}

pub fn find_weak_sd_manipulation(
    rule: &dyn AssignmentRule,
    profile: &Profile,
) -> Result<Option<ManipulationWitness>, ManipulationError> {
    find_manipulation(rule, profile, Notion::WeakSd, &ManipulationScope::default())
}

pub fn find_sd_manipulation(
    rule: &dyn AssignmentRule,
    profile: &Profile,
) -> Result<Option<ManipulationWitness>, ManipulationError> {
    find_manipulation(rule, profile, Notion::Sd, &ManipulationScope::default())
}

/// All `(n!)^n` strict profiles with default labels, in lexicographic order
/// of the agents' rankings.
pub fn all_strict_profiles(n: usize) -> Result<Vec<Profile>, ManipulationError> {
    if n > STRICT_SWEEP_CAP {
        return Err(ManipulationError::TooLarge { n, cap: STRICT_SWEEP_CAP });
    }
    let orders = enumerate_strict_orders(n);
    let mut profiles = vec![Vec::new()];
    for _ in 0..n {
        profiles = profiles
            .into_iter()
            .flat_map(|prefix: Vec<WeakOrder>| {
                orders.iter().map(move |o| {
                    let mut next = prefix.clone();
                    next.push(o.clone());
                    next
                })
            })
            .collect();
    }
    Ok(profiles.into_iter().map(|prefs| Profile::with_default_labels(prefs).expect("square")).collect())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepReport {
    pub n: usize,
    pub notion: Notion,
    pub profiles: usize,
    /// `(profile, agent, misreport)` triples examined.
    pub checks: usize,
    pub violations: usize,
    /// First violation in enumeration order.
    pub first_witness: Option<ManipulationWitness>,
}

/// Exhaustive strict-profile sweep. Profiles are checked in parallel; the
/// reported witness is the first in enumeration order.
pub fn sweep_strict_profiles(
    rule: &dyn AssignmentRule,
    n: usize,
    notion: Notion,
) -> Result<SweepReport, ManipulationError> {
    let profiles = all_strict_profiles(n)?;
    let reports = enumerate_strict_orders(n);
    let scope = ManipulationScope { agents: None, misreports: Some(reports.clone()) };
    let per_profile: Vec<Vec<ManipulationWitness>> = profiles
        .par_iter()
        .map(|p| all_manipulations(rule, p, notion, &scope, false))
        .collect::<Result<_, _>>()?;
    Ok(SweepReport {
        n,
        notion,
        profiles: profiles.len(),
        checks: profiles.len() * n * (reports.len() - 1),
        violations: per_profile.iter().map(Vec::len).sum(),
        first_witness: per_profile.into_iter().flatten().next(),
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Discrepancy {
    pub profile: Profile,
    pub expected: Assignment,
    pub got: Assignment,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtensionReport {
    pub n: usize,
    pub exhaustive: bool,
    pub profiles_checked: usize,
    pub first_discrepancy: Option<Discrepancy>,
}

impl ExtensionReport {
    pub fn holds(&self) -> bool {
        self.first_discrepancy.is_none()
    }
}

/// Samples drawn by [`check_extension_of_ps`] above the exhaustive cap.
pub const EXTENSION_SAMPLES: usize = 200;

/// Compares `rule` with PS on strict profiles: all of them up to the sweep
/// cap, [`EXTENSION_SAMPLES`] seeded samples beyond.
pub fn check_extension_of_ps(rule: &dyn AssignmentRule, n: usize) -> Result<ExtensionReport, ManipulationError> {
    if n <= STRICT_SWEEP_CAP {
        compare_with_ps(rule, n, all_strict_profiles(n)?, true)
    } else {
        check_extension_of_ps_sampled(rule, n, EXTENSION_SAMPLES, 0)
    }
}

pub fn check_extension_of_ps_sampled(
    rule: &dyn AssignmentRule,
    n: usize,
    samples: usize,
    seed: u64,
) -> Result<ExtensionReport, ManipulationError> {
    let mut r = rng(seed);
    let profiles = (0..samples).map(|_| random_strict_profile(&mut r, n)).collect();
    compare_with_ps(rule, n, profiles, false)
}

fn compare_with_ps(
    rule: &dyn AssignmentRule,
    n: usize,
    profiles: Vec<Profile>,
    exhaustive: bool,
) -> Result<ExtensionReport, ManipulationError> {
    let outcomes: Vec<Option<Discrepancy>> = profiles
        .par_iter()
        .map(|p| {
            let (expected, _) = ps(p)?;
            let got = rule.assign(p)?;
            Ok((expected != got).then(|| Discrepancy { profile: p.clone(), expected, got }))
        })
        .collect::<Result<_, ManipulationError>>()?;
    Ok(ExtensionReport {
        n,
        exhaustive,
        profiles_checked: profiles.len(),
        first_discrepancy: outcomes.into_iter().flatten().next(),
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymmetryReport {
    pub anonymous: bool,
    pub neutral: bool,
    pub equal_treatment: bool,
    /// Human-readable description of each failure found.
    pub violations: Vec<String>,
}

/// Anonymity: relabelling agents permutes the rows. Neutrality: relabelling
/// objects permutes the columns. Equal treatment: agents with identical
/// preferences receive identical rows.
pub fn check_symmetry_properties(
    rule: &dyn AssignmentRule,
    profile: &Profile,
) -> Result<SymmetryReport, ManipulationError> {
    let n = profile.n();
    if n > SYMMETRY_CAP {
        return Err(ManipulationError::TooLarge { n, cap: SYMMETRY_CAP });
    }
    let base = rule.assign(profile)?;
    let mut violations = Vec::new();

    let mut anonymous = true;
    for order in permutations(n) {
        let permuted = rule.assign(&profile.permute_agents(&order))?;
        if permuted != base.permute_rows(&order) {
            anonymous = false;
            violations.push(format!("agent order {order:?} changes the outcome beyond relabelling"));
            break;
        }
    }

    let mut neutral = true;
    for mapping in permutations(n) {
        let permuted = rule.assign(&profile.permute_objects(&mapping))?;
        if permuted != base.permute_columns(&mapping) {
            neutral = false;
            violations.push(format!("object relabelling {mapping:?} changes the outcome beyond relabelling"));
            break;
        }
    }

    let mut equal_treatment = true;
    for i in 0..n {
        for j in (i + 1)..n {
            if profile.prefs()[i] == profile.prefs()[j] && base.rows()[i] != base.rows()[j] {
                equal_treatment = false;
                violations.push(format!(
                    "agents {} and {} report the same preference but receive different rows",
                    profile.agents()[i],
                    profile.agents()[j]
                ));
            }
        }
    }

    Ok(SymmetryReport { anonymous, neutral, equal_treatment, violations })
}
