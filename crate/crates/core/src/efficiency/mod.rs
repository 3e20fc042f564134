//! Trading cycles, SD-efficiency, Pareto optimal matchings and ex post
//! efficiency.
//!
//! A random assignment is SD-efficient iff it admits no trading cycle: a
//! closed sequence in which every agent holds some of the object pointing at
//! it and weakly prefers the object it points to, with at least one strict
//! step.

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assignment::{Assignment, DiscreteAssignment};
use crate::exactlp::{lp_feasible, Feasibility, InfeasibilityCertificate, LinearExpr, LinearSystem, Relation};
use crate::preference::{permutations, AgentId, ObjectId};
use crate::profile::Profile;
use crate::rational::Rational;

/// Largest `n` for which matchings are enumerated.
pub const MATCHING_CAP: usize = 8;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EfficiencyError {
    #[error("{n} agents exceeds the matching enumeration cap of {cap}")]
    TooLarge { n: usize, cap: usize },
    #[error("assignment is {got}x{got} but the profile has {expected} agents")]
    Shape { expected: usize, got: usize },
    #[error("the ex post / SD-efficiency equivalence is only claimed for 3 agents, got {0}")]
    NotThreeAgents(usize),
    #[error("not a trading cycle: {0}")]
    InvalidCycle(String),
}

/// Agent `agent` holds part of `holding` and points at `target`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TradeStep {
    pub holding: ObjectId,
    pub agent: AgentId,
    pub target: ObjectId,
    pub strict: bool,
}

/// `o₀, i₀, o₁, i₁, …, o_{k−1}, i_{k−1}` closing back at `o₀`; step `j`
/// holds `o_j` and targets `o_{j+1}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TradingCycle {
    pub steps: Vec<TradeStep>,
}

impl TradingCycle {
    /// Builds a cycle from alternating objects and agents, deriving the
    /// strictness flags from the profile.
    pub fn from_sequence(objects: &[usize], agents: &[usize], profile: &Profile) -> Self {
        let k = objects.len();
        let steps = (0..k)
            .map(|j| {
                let holding = ObjectId(objects[j]);
                let target = ObjectId(objects[(j + 1) % k]);
                let agent = AgentId(agents[j]);
                TradeStep { holding, agent, target, strict: profile.pref(agent).strictly_prefers(target, holding) }
            })
            .collect();
        TradingCycle { steps }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn objects(&self) -> Vec<ObjectId> {
        self.steps.iter().map(|s| s.holding).collect()
    }

    pub fn agents(&self) -> Vec<AgentId> {
        self.steps.iter().map(|s| s.agent).collect()
    }

    /// Checks the defining conditions against `support` (which entries are
    /// positive) and the profile.
    pub fn validate_on_support(&self, support: &[Vec<bool>], profile: &Profile) -> Result<(), EfficiencyError> {
        let k = self.steps.len();
        if k < 2 {
            return Err(EfficiencyError::InvalidCycle(format!("size {k} is below 2")));
        }
        let n = profile.n();
        for (j, s) in self.steps.iter().enumerate() {
            if s.agent.0 >= n || s.holding.0 >= n || s.target.0 >= n {
                return Err(EfficiencyError::InvalidCycle(format!("step {j} is out of range")));
            }
            if s.target != self.steps[(j + 1) % k].holding {
                return Err(EfficiencyError::InvalidCycle(format!("step {j} does not link to the next step")));
            }
            if !support[s.agent.0][s.holding.0] {
                return Err(EfficiencyError::InvalidCycle(format!(
                    "agent {} holds none of object {}",
                    profile.agent_label(s.agent),
                    profile.object_label(s.holding)
                )));
            }
            let pref = profile.pref(s.agent);
            if !pref.weakly_prefers(s.target, s.holding) {
                return Err(EfficiencyError::InvalidCycle(format!(
                    "agent {} prefers {} to {}",
                    profile.agent_label(s.agent),
                    profile.object_label(s.holding),
                    profile.object_label(s.target)
                )));
            }
            if s.strict != pref.strictly_prefers(s.target, s.holding) {
                return Err(EfficiencyError::InvalidCycle(format!("strictness flag of step {j} is wrong")));
            }
        }
        if !self.steps.iter().any(|s| s.strict) {
            return Err(EfficiencyError::InvalidCycle("no step is strict".into()));
        }
        Ok(())
    }

    pub fn validate(&self, p: &Assignment, profile: &Profile) -> Result<(), EfficiencyError> {
        self.validate_on_support(&support_of(p), profile)
    }

    /// Distinct agents and distinct objects.
    pub fn is_simple(&self) -> bool {
        let mut agents = self.agents();
        let mut objects = self.objects();
        agents.sort();
        agents.dedup();
        objects.sort();
        objects.dedup();
        agents.len() == self.len() && objects.len() == self.len()
    }

    /// `b -> (1) -> a -> (3) -> b [strict at 1]`
    pub fn display<'a>(&'a self, profile: &'a Profile) -> impl fmt::Display + 'a {
        CycleDisplay { cycle: self, profile }
    }
}

struct CycleDisplay<'a> {
    cycle: &'a TradingCycle,
    profile: &'a Profile,
}

impl fmt::Display for CycleDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = self.profile;
        for s in &self.cycle.steps {
            write!(f, "{} -> ({}) -> ", p.object_label(s.holding), p.agent_label(s.agent))?;
        }
        if let Some(first) = self.cycle.steps.first() {
            write!(f, "{}", p.object_label(first.holding))?;
        }
        let strict: Vec<&str> =
            self.cycle.steps.iter().filter(|s| s.strict).map(|s| p.agent_label(s.agent)).collect();
        write!(f, " [strict at {}]", strict.join(", "))
    }
}

pub fn support_of(p: &Assignment) -> Vec<Vec<bool>> {
    p.rows().iter().map(|r| r.iter().map(Rational::is_positive).collect()).collect()
}

/// Edge `from → to` witnessed by `agent`, who holds some of `from` and
/// weakly prefers `to`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TradeEdge {
    pub from: ObjectId,
    pub to: ObjectId,
    pub agent: AgentId,
    pub strict: bool,
}

/// Object-level graph whose cycles through a strict edge are exactly the
/// trading cycles.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TradeGraph {
    pub n: usize,
    pub edges: Vec<TradeEdge>,
}

impl TradeGraph {
    pub fn from_support(support: &[Vec<bool>], profile: &Profile) -> Self {
        let n = profile.n();
        let mut edges = Vec::new();
        for from in 0..n {
            for agent in 0..n {
                if !support[agent][from] {
                    continue;
                }
                let pref = profile.pref(AgentId(agent));
                for to in 0..n {
                    if to != from && pref.weakly_prefers(ObjectId(to), ObjectId(from)) {
                        edges.push(TradeEdge {
                            from: ObjectId(from),
                            to: ObjectId(to),
                            agent: AgentId(agent),
                            strict: pref.strictly_prefers(ObjectId(to), ObjectId(from)),
                        });
                    }
                }
            }
        }
        TradeGraph { n, edges }
    }

    pub fn new(p: &Assignment, profile: &Profile) -> Self {
        Self::from_support(&support_of(p), profile)
    }

    /// Breadth-first path `start ⇝ goal` as a list of edges.
    fn path(&self, start: ObjectId, goal: ObjectId) -> Option<Vec<TradeEdge>> {
        let mut via: Vec<Option<TradeEdge>> = vec![None; self.n];
        let mut seen = vec![false; self.n];
        seen[start.0] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(o) = queue.pop_front() {
            if o == goal {
                let mut path = Vec::new();
                let mut cur = goal;
                while cur != start {
                    let e = via[cur.0].expect("visited nodes have a parent");
                    path.push(e);
                    cur = e.from;
                }
                path.reverse();
                return Some(path);
            }
            for e in self.edges.iter().filter(|e| e.from == o) {
                if !seen[e.to.0] {
                    seen[e.to.0] = true;
                    via[e.to.0] = Some(*e);
                    queue.push_back(e.to);
                }
            }
        }
        None
    }
}

/// First trading cycle found (strict edges in graph order, each closed by a
/// shortest path), reduced to distinct agents and objects.
pub fn detect_trading_cycle_on_support(support: &[Vec<bool>], profile: &Profile) -> Option<TradingCycle> {
    let graph = TradeGraph::from_support(support, profile);
    for strict in graph.edges.iter().filter(|e| e.strict) {
        if let Some(path) = graph.path(strict.to, strict.from) {
            let steps = std::iter::once(strict)
                .chain(path.iter())
                .map(|e| TradeStep { holding: e.from, agent: e.agent, target: e.to, strict: e.strict })
                .collect();
            return Some(reduce_steps(TradingCycle { steps }, profile));
        }
    }
    None
}

pub fn detect_trading_cycle(p: &Assignment, profile: &Profile) -> Option<TradingCycle> {
    detect_trading_cycle_on_support(&support_of(p), profile)
}

pub fn is_sd_efficient(p: &Assignment, profile: &Profile) -> bool {
    detect_trading_cycle(p, profile).is_none()
}

/// Shrinks a trading cycle until every agent and every object occurs once,
/// so its size is at most `n`.
///
/// A repeated object splits the cycle into two closed halves and the half
/// with a strict step is kept. For a repeated agent at positions `p < q`,
/// the agent is rerouted so that one occurrence is dropped: it either holds
/// `o_q` and points to `o_{p+1}`, or holds `o_p` and points to `o_{q+1}`.
/// Both rerouted steps failing would need `o_q ≻ o_{p+1} ≿ o_p ≻ o_{q+1} ≿ o_q`,
/// and whenever one is invalid the other is strict, so a valid half with a
/// strict step always exists.
pub fn reduce_trading_cycle(
    cycle: &TradingCycle,
    p: &Assignment,
    profile: &Profile,
) -> Result<TradingCycle, EfficiencyError> {
    cycle.validate(p, profile)?;
    let reduced = reduce_steps(cycle.clone(), profile);
    debug_assert!(reduced.validate(p, profile).is_ok());
    Ok(reduced)
}

fn reduce_steps(mut cycle: TradingCycle, profile: &Profile) -> TradingCycle {
    while let Some((a, b)) = repeated(&cycle.steps, |s| s.holding) {
        let steps = &cycle.steps;
        let inner: Vec<TradeStep> = steps[a..b].to_vec();
        let outer: Vec<TradeStep> = steps[b..].iter().chain(&steps[..a]).copied().collect();
        cycle.steps = if inner.iter().any(|s| s.strict) { inner } else { outer };
    }
    while let Some((a, b)) = repeated(&cycle.steps, |s| s.agent) {
        cycle.steps = split_at_agent(&cycle.steps, a, b, profile);
    }
    cycle
}

fn repeated<K: PartialEq>(steps: &[TradeStep], key: impl Fn(&TradeStep) -> K) -> Option<(usize, usize)> {
    for b in 0..steps.len() {
        for a in 0..b {
            if key(&steps[a]) == key(&steps[b]) {
                return Some((a, b));
            }
        }
    }
    None
}

fn split_at_agent(steps: &[TradeStep], p: usize, q: usize, profile: &Profile) -> Vec<TradeStep> {
    let sp = steps[p];
    let sq = steps[q];
    let pref = profile.pref(sp.agent);
    let reroute = |holding: ObjectId, target: ObjectId| {
        pref.weakly_prefers(target, holding).then(|| TradeStep {
            holding,
            agent: sp.agent,
            target,
            strict: pref.strictly_prefers(target, holding),
        })
    };
    // holds o_q and points to o_{p+1}, keeping steps p+1..q-1
    let first = reroute(sq.holding, sp.target)
        .map(|step| std::iter::once(step).chain(steps[p + 1..q].iter().copied()).collect::<Vec<_>>());
    // holds o_p and points to o_{q+1}, keeping steps q+1..p-1 around the end
    let second = reroute(sp.holding, sq.target).map(|step| {
        std::iter::once(step)
            .chain(steps[q + 1..].iter().copied())
            .chain(steps[..p].iter().copied())
            .collect::<Vec<_>>()
    });
    [first, second]
        .into_iter()
        .flatten()
        .find(|body| body.iter().any(|s| s.strict))
        .expect("one rerouted half of a trading cycle is itself a trading cycle")
}

fn check_shape(p: &Assignment, profile: &Profile) -> Result<(), EfficiencyError> {
    if p.n() != profile.n() {
        return Err(EfficiencyError::Shape { expected: profile.n(), got: p.n() });
    }
    Ok(())
}

/// All matchings admitting no trading cycle, in lexicographic order of the
/// object vector.
pub fn enumerate_pareto_optimal_discrete(profile: &Profile) -> Result<Vec<DiscreteAssignment>, EfficiencyError> {
    let n = profile.n();
    if n > MATCHING_CAP {
        return Err(EfficiencyError::TooLarge { n, cap: MATCHING_CAP });
    }
    Ok(permutations(n)
        .into_iter()
        .map(|objects| DiscreteAssignment::new(objects).expect("permutation"))
        .filter(|m| is_sd_efficient(&m.to_assignment(), profile))
        .collect())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightedMatching {
    pub matching: Vec<usize>,
    pub weight: Rational,
}

/// Outcome of decomposing an assignment over Pareto optimal matchings.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum ExPostVerdict {
    /// Positive weights reconstructing the assignment exactly.
    Efficient { decomposition: Vec<WeightedMatching> },
    /// Farkas multipliers over the rows of the decomposition system
    /// (one per matrix entry in row-major order, then the weight sum).
    NotEfficient { certificate: InfeasibilityCertificate },
}

impl ExPostVerdict {
    pub fn is_efficient(&self) -> bool {
        matches!(self, ExPostVerdict::Efficient { .. })
    }

    pub fn decomposition(&self) -> Option<&[WeightedMatching]> {
        match self {
            ExPostVerdict::Efficient { decomposition } => Some(decomposition),
            ExPostVerdict::NotEfficient { .. } => None,
        }
    }
}

/// `{Σ λ_M·M = p, Σ λ_M = 1, λ ≥ 0}` over the given matchings.
pub fn decomposition_system(p: &Assignment, matchings: &[DiscreteAssignment]) -> LinearSystem {
    let n = p.n();
    let mut system = LinearSystem::new();
    let vars: Vec<_> = matchings
        .iter()
        .map(|m| system.nonneg(format!("w{:?}", m.objects())))
        .collect();
    for i in 0..n {
        for o in 0..n {
            let lhs = LinearExpr::sum(
                matchings.iter().zip(&vars).filter(|(m, _)| m.objects()[i] == o).map(|(_, v)| *v),
            );
            system.add_labeled(format!("entry ({i}, {o})"), lhs, Relation::Eq, p.rows()[i][o].clone());
        }
    }
    system.add_labeled("weights", LinearExpr::sum(vars), Relation::Eq, Rational::one());
    system
}

/// Ex post efficiency: `p` is a lottery over Pareto optimal matchings.
pub fn is_ex_post_efficient(p: &Assignment, profile: &Profile) -> Result<ExPostVerdict, EfficiencyError> {
    check_shape(p, profile)?;
    let matchings = enumerate_pareto_optimal_discrete(profile)?;
    let system = decomposition_system(p, &matchings);
    Ok(match lp_feasible(&system) {
        Feasibility::Feasible { point } => ExPostVerdict::Efficient {
            decomposition: matchings
                .iter()
                .zip(point)
                .filter(|(_, w)| w.is_positive())
                .map(|(m, weight)| WeightedMatching { matching: m.objects().to_vec(), weight })
                .collect(),
        },
        Feasibility::Infeasible { certificate } => ExPostVerdict::NotEfficient { certificate },
    })
}

/// Rebuilds the matrix from a decomposition.
pub fn recompose(decomposition: &[WeightedMatching]) -> Option<Assignment> {
    let parts: Option<Vec<(Rational, DiscreteAssignment)>> = decomposition
        .iter()
        .map(|w| DiscreteAssignment::new(w.matching.clone()).ok().map(|m| (w.weight.clone(), m)))
        .collect();
    Assignment::convex_combination(&parts?).ok()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub sd_efficient: bool,
    pub ex_post_efficient: bool,
    pub agree: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cycle: Option<TradingCycle>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decomposition: Option<Vec<WeightedMatching>>,
}

/// Runs both checkers on a 3-agent instance and reports whether they agree.
pub fn check_expost_sd_equivalence(profile: &Profile, p: &Assignment) -> Result<EquivalenceReport, EfficiencyError> {
    if profile.n() != 3 {
        return Err(EfficiencyError::NotThreeAgents(profile.n()));
    }
    check_shape(p, profile)?;
    let cycle = detect_trading_cycle(p, profile);
    let verdict = is_ex_post_efficient(p, profile)?;
    let sd_efficient = cycle.is_none();
    let ex_post_efficient = verdict.is_efficient();
    Ok(EquivalenceReport {
        sd_efficient,
        ex_post_efficient,
        agree: sd_efficient == ex_post_efficient,
        cycle,
        decomposition: verdict.decomposition().map(<[_]>::to_vec),
    })
}

#[cfg(test)]
mod tests;
