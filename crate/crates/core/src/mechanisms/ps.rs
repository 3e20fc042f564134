use serde::Serialize;

use crate::assignment::{validate_assignment, Assignment};
use crate::preference::{AgentId, ObjectId};
use crate::profile::Profile;
use crate::rational::Rational;

use super::MechanismError;

/// One interval of simultaneous eating.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EatingInterval {
    pub start: Rational,
    pub end: Rational,
    /// What each agent eats during the interval (its current demand set).
    pub eating: Vec<Vec<ObjectId>>,
    /// Total consumption rate of each object during the interval.
    pub consumption_rates: Vec<Rational>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct EatingTrace {
    pub intervals: Vec<EatingInterval>,
}

impl EatingTrace {
    /// Intervals tile `[0, 1]` and every object is eaten at most once over.
    pub fn is_well_formed(&self, n: usize) -> bool {
        let mut t = Rational::zero();
        let mut eaten = vec![Rational::zero(); n];
        for interval in &self.intervals {
            if interval.start != t || interval.end <= interval.start {
                return false;
            }
            let duration = &interval.end - &interval.start;
            for (o, rate) in interval.consumption_rates.iter().enumerate() {
                eaten[o] += &(rate * &duration);
            }
            t = interval.end.clone();
        }
        t.is_one() && eaten.iter().all(|e| *e <= 1)
    }
}

/// Probabilistic serial on a strict profile: every agent eats its favourite
/// remaining object at unit speed; an object leaves the table once eaten.
pub fn ps(profile: &Profile) -> Result<(Assignment, EatingTrace), MechanismError> {
    if let Some(agent) = profile.prefs().iter().position(|p| !p.is_strict()) {
        return Err(MechanismError::NotStrict { agent: AgentId(agent) });
    }
    let n = profile.n();
    let mut remaining = vec![Rational::one(); n];
    let mut available = vec![true; n];
    let mut matrix = vec![vec![Rational::zero(); n]; n];
    let mut trace = EatingTrace::default();
    let mut time = Rational::zero();

    while time < 1 {
        let targets: Vec<ObjectId> = profile
            .prefs()
            .iter()
            .map(|pref| pref.top_among(&available)[0])
            .collect();
        let mut eaters = vec![0i64; n];
        for t in &targets {
            eaters[t.0] += 1;
        }
        let mut step = Rational::one() - &time;
        for o in 0..n {
            if eaters[o] > 0 {
                step = step.min_of(&remaining[o] / Rational::from_integer(eaters[o]));
            }
        }
        for (agent, t) in targets.iter().enumerate() {
            matrix[agent][t.0] += &step;
        }
        for o in 0..n {
            if eaters[o] > 0 {
                remaining[o] -= &(&step * Rational::from_integer(eaters[o]));
                if remaining[o].is_zero() {
                    available[o] = false;
                }
            }
        }
        let end = &time + &step;
        trace.intervals.push(EatingInterval {
            start: time,
            end: end.clone(),
            eating: targets.iter().map(|t| vec![*t]).collect(),
            consumption_rates: eaters.iter().map(|&e| Rational::from_integer(e)).collect(),
        });
        time = end;
    }
    let assignment = validate_assignment(matrix).map_err(MechanismError::Internal)?;
    Ok((assignment, trace))
}
