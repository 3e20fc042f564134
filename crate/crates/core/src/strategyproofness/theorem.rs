//! Machine-checked impossibility: no rule that extends PS is both SD-efficient
//! (equivalently ex post efficient for three agents) and weak
//! SD-strategyproof.
//!
//! Three profiles differ only in agent 3's report: `a > b > c` (≻),
//! `b > c > a` (≻′) and `a ~ b > c` (≻″). Any such rule must give PS on the
//! first two. On ≻″ its outcome `C` is unknown, so every claim about `C` is
//! established by exact LP refutations over the doubly stochastic polytope:
//!
//! 1. PS on ≻ and ≻′ is computed and compared with the expected matrices.
//! 2. SD-efficiency forces `C3a = 0` (and, for padded profiles, zero mass
//!    for agent 3 on the added objects). Each claim is a branch tree: assume
//!    the entry positive, split on further entries, and close every leaf
//!    either by a trading cycle among the entries assumed positive or by an
//!    infeasible LP. Row 3 then gives `C3b + C3c = 1`.
//! 3. Reporting ≻ instead of ≻″ must not help agent 3, which yields one of
//!    finitely many disjuncts; each one bounds `C3b` below by 5/6.
//! 4. Reporting ≻″ instead of ≻′ must not help agent 3 either; every
//!    disjunct of that condition is infeasible given steps 2 and 3.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assignment::{validate_assignment, Assignment};
use crate::dominance::cut_point_masses;
use crate::efficiency::{detect_trading_cycle_on_support, TradingCycle};
use crate::exactlp::{
    lp_feasible, lp_minimize, Feasibility, InfeasibilityCertificate, LinearExpr, LinearSystem, Optimum, Relation,
    VarId,
};
use crate::mechanisms::ps;
use crate::preference::{AgentId, ObjectId, WeakOrder};
use crate::profile::{pad_profile, parse_profile, Profile};
use crate::rational::Rational;

pub const THEOREM_MAX_N: usize = 5;
const NODE_BUDGET: usize = 4096;

const AGENT3: usize = 2;
const A: usize = 0;
const B: usize = 1;
const C: usize = 2;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TheoremError {
    #[error("the check runs for 3 to {max} agents, got {n}")]
    UnsupportedSize { n: usize, max: usize },
    #[error("step {step} failed: {message}")]
    Step { step: u8, message: String },
}

fn fail(step: u8, message: impl Into<String>) -> TheoremError {
    TheoremError::Step { step, message: message.into() }
}

/// The three profiles, padded to `n` agents. Field names give agent 3's
/// report.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImpossibilityProfiles {
    pub strict_abc: Profile,
    pub strict_bca: Profile,
    pub tied_ab: Profile,
}

pub fn impossibility_profiles(n: usize) -> Result<ImpossibilityProfiles, TheoremError> {
    if !(3..=THEOREM_MAX_N).contains(&n) {
        return Err(TheoremError::UnsupportedSize { n, max: THEOREM_MAX_N });
    }
    let build = |third: &str| {
        let base = parse_profile(&format!("1: a > b > c\n2: a > c > b\n3: {third}")).expect("fixed profile");
        pad_profile(&base, n).expect("padding up")
    };
    Ok(ImpossibilityProfiles {
        strict_abc: build("a > b > c"),
        strict_bca: build("b > c > a"),
        tied_ab: build("a ~ b > c"),
    })
}

/// Expected PS outcomes: the 3×3 matrices on the original objects, and each
/// added agent alone on its favourite added object.
fn expected_ps(n: usize) -> (Assignment, Assignment) {
    let r = Rational::new;
    let abc = [[r(1, 3), r(1, 2), r(1, 6)], [r(1, 3), r(0, 1), r(2, 3)], [r(1, 3), r(1, 2), r(1, 6)]];
    let bca = [[r(1, 2), r(1, 4), r(1, 4)], [r(1, 2), r(0, 1), r(1, 2)], [r(0, 1), r(3, 4), r(1, 4)]];
    let embed = |block: &[[Rational; 3]; 3]| {
        let mut rows = vec![vec![Rational::zero(); n]; n];
        for i in 0..n {
            for j in 0..n {
                rows[i][j] = if i < 3 && j < 3 {
                    block[i][j].clone()
                } else if i == j {
                    Rational::one()
                } else {
                    Rational::zero()
                };
            }
        }
        validate_assignment(rows).expect("expected outcome is doubly stochastic")
    };
    (embed(&abc), embed(&bca))
}

/// Entry `(agent, object)` of the unknown outcome on ≻″.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Entry {
    pub agent: usize,
    pub object: usize,
}

impl Entry {
    fn var(self, n: usize) -> VarId {
        VarId(self.agent * n + self.object)
    }

    fn name(self, profile: &Profile) -> String {
        format!("C{}{}", profile.agent_label(AgentId(self.agent)), profile.object_label(ObjectId(self.object)))
    }
}

fn entry(agent: usize, object: usize) -> Entry {
    Entry { agent, object }
}

/// Variables `C{agent}{object}` in row-major order with the doubly
/// stochastic constraints.
fn doubly_stochastic(profile: &Profile) -> LinearSystem {
    let n = profile.n();
    let mut s = LinearSystem::new();
    for i in 0..n {
        for o in 0..n {
            s.nonneg(entry(i, o).name(profile));
        }
    }
    for i in 0..n {
        let lhs = LinearExpr::sum((0..n).map(|o| entry(i, o).var(n)));
        s.add_labeled(format!("row {}", profile.agent_label(AgentId(i))), lhs, Relation::Eq, Rational::one());
    }
    for o in 0..n {
        let lhs = LinearExpr::sum((0..n).map(|i| entry(i, o).var(n)));
        s.add_labeled(format!("column {}", profile.object_label(ObjectId(o))), lhs, Relation::Eq, Rational::one());
    }
    s
}

fn node_system(profile: &Profile, positive: &[Entry], zero: &[Entry]) -> LinearSystem {
    let n = profile.n();
    let mut s = doubly_stochastic(profile);
    for e in positive {
        s.add_labeled(format!("{} > 0", e.name(profile)), LinearExpr::var(e.var(n)), Relation::Gt, Rational::zero());
    }
    for e in zero {
        s.add_labeled(format!("{} = 0", e.name(profile)), LinearExpr::var(e.var(n)), Relation::Eq, Rational::zero());
    }
    s
}

fn support(n: usize, positive: &[Entry]) -> Vec<Vec<bool>> {
    let mut s = vec![vec![false; n]; n];
    for e in positive {
        s[e.agent][e.object] = true;
    }
    s
}

fn point_to_assignment(point: &[Rational], n: usize) -> Result<Assignment, TheoremError> {
    let rows = point.chunks(n).map(<[Rational]>::to_vec).collect();
    validate_assignment(rows).map_err(|e| fail(2, format!("LP witness is not doubly stochastic: {e}")))
}

/// One node of a branch tree; `positive` entries are assumed `> 0` and
/// `zero` entries `= 0`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProofNode {
    /// The assumptions contradict double stochasticity.
    Infeasible { positive: Vec<Entry>, zero: Vec<Entry>, certificate: InfeasibilityCertificate },
    /// The entries assumed positive already carry a trading cycle; `witness`
    /// is a concrete outcome satisfying the assumptions.
    Cycle { positive: Vec<Entry>, zero: Vec<Entry>, cycle: TradingCycle, witness: Assignment },
    Branch {
        positive: Vec<Entry>,
        zero: Vec<Entry>,
        entry: Entry,
        if_positive: Box<ProofNode>,
        if_zero: Box<ProofNode>,
    },
}

impl ProofNode {
    pub fn size(&self) -> usize {
        match self {
            ProofNode::Branch { if_positive, if_zero, .. } => 1 + if_positive.size() + if_zero.size(),
            _ => 1,
        }
    }

    fn assumptions(&self) -> (&[Entry], &[Entry]) {
        match self {
            ProofNode::Infeasible { positive, zero, .. }
            | ProofNode::Cycle { positive, zero, .. }
            | ProofNode::Branch { positive, zero, .. } => (positive, zero),
        }
    }
}

/// Proof that SD-efficiency forces `target` to zero on ≻″.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZeroProof {
    pub target: Entry,
    pub tree: ProofNode,
}

fn build_tree(
    profile: &Profile,
    positive: Vec<Entry>,
    zero: Vec<Entry>,
    budget: &mut usize,
) -> Result<ProofNode, TheoremError> {
    if *budget == 0 {
        return Err(fail(2, format!("branch tree exceeded {NODE_BUDGET} nodes")));
    }
    *budget -= 1;
    let n = profile.n();
    let point = match lp_feasible(&node_system(profile, &positive, &zero)) {
        Feasibility::Infeasible { certificate } => {
            return Ok(ProofNode::Infeasible { positive, zero, certificate });
        }
        Feasibility::Feasible { point } => point,
    };
    if let Some(cycle) = detect_trading_cycle_on_support(&support(n, &positive), profile) {
        let witness = point_to_assignment(&point, n)?;
        cycle
            .validate(&witness, profile)
            .map_err(|e| fail(2, format!("cycle fails on the witness point: {e}")))?;
        return Ok(ProofNode::Cycle { positive, zero, cycle, witness });
    }

    // prefer an entry whose positivity would close a trading cycle
    let undecided: Vec<Entry> = (0..n)
        .flat_map(|i| (0..n).map(move |o| entry(i, o)))
        .filter(|e| !positive.contains(e) && !zero.contains(e))
        .collect();
    let closes_cycle = |e: &Entry| {
        let mut with = positive.clone();
        with.push(*e);
        detect_trading_cycle_on_support(&support(n, &with), profile).is_some()
    };
    let Some(&next) = undecided.iter().find(|e| closes_cycle(e)).or(undecided.first()) else {
        return Err(fail(2, "feasible leaf with every entry decided and no trading cycle"));
    };
    let mut pos_child = positive.clone();
    pos_child.push(next);
    let mut zero_child = zero.clone();
    zero_child.push(next);
    let if_positive = Box::new(build_tree(profile, pos_child, zero.clone(), budget)?);
    let if_zero = Box::new(build_tree(profile, positive.clone(), zero_child, budget)?);
    Ok(ProofNode::Branch { positive, zero, entry: next, if_positive, if_zero })
}

fn check_tree(profile: &Profile, node: &ProofNode, positive: &[Entry], zero: &[Entry]) -> Result<(), TheoremError> {
    let n = profile.n();
    if node.assumptions() != (positive, zero) {
        return Err(fail(2, "branch tree node carries the wrong assumptions"));
    }
    match node {
        ProofNode::Infeasible { certificate, .. } => {
            if !certificate.verify(&node_system(profile, positive, zero)) {
                return Err(fail(2, "infeasibility certificate of a branch leaf does not verify"));
            }
        }
        ProofNode::Cycle { cycle, witness, .. } => {
            cycle
                .validate_on_support(&support(n, positive), profile)
                .map_err(|e| fail(2, format!("cycle is not implied by the positive entries: {e}")))?;
            let flat: Vec<Rational> = witness.rows().iter().flatten().cloned().collect();
            if node_system(profile, positive, zero).check_point(&flat).is_err() || witness.n() != n {
                return Err(fail(2, "cycle witness violates the branch assumptions"));
            }
            cycle.validate(witness, profile).map_err(|e| fail(2, format!("cycle fails on its witness: {e}")))?;
        }
        ProofNode::Branch { entry, if_positive, if_zero, .. } => {
            if positive.contains(entry) || zero.contains(entry) {
                return Err(fail(2, "branch on an entry that is already decided"));
            }
            let mut p = positive.to_vec();
            p.push(*entry);
            let mut z = zero.to_vec();
            z.push(*entry);
            check_tree(profile, if_positive, &p, zero)?;
            check_tree(profile, if_zero, positive, &z)?;
        }
    }
    Ok(())
}

/// A labelled system together with the certificate that it has no solution.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Refutation {
    pub label: String,
    pub system: LinearSystem,
    pub certificate: InfeasibilityCertificate,
}

impl Refutation {
    fn prove(step: u8, label: String, system: LinearSystem) -> Result<Self, TheoremError> {
        match lp_feasible(&system) {
            Feasibility::Infeasible { certificate } => Ok(Refutation { label, system, certificate }),
            Feasibility::Feasible { point } => {
                Err(fail(step, format!("`{label}` is feasible, e.g. at {}", format_point(&system, &point))))
            }
        }
    }

    fn check(&self, step: u8, expected: &LinearSystem) -> Result<(), TheoremError> {
        if &self.system != expected {
            return Err(fail(step, format!("`{}` refutes a different system than the one required", self.label)));
        }
        if !self.certificate.verify(&self.system) {
            return Err(fail(step, format!("certificate for `{}` does not verify", self.label)));
        }
        Ok(())
    }
}

fn format_point(system: &LinearSystem, point: &[Rational]) -> String {
    system
        .variables
        .iter()
        .zip(point)
        .filter(|(_, v)| !v.is_zero())
        .map(|(var, v)| format!("{}={v}", var.name))
        .collect::<Vec<_>>()
        .join(", ")
}

type Disjunct = (String, Vec<(LinearExpr, Relation, Rational)>);

/// Cumulative share of agent 3 on each upper contour set of `pref`.
fn cut_exprs(pref: &WeakOrder, n: usize) -> Vec<LinearExpr> {
    let mut acc = LinearExpr::new();
    pref.classes()
        .iter()
        .map(|class| {
            for o in class {
                acc = acc.clone().plus(entry(AGENT3, o.0).var(n), Rational::one());
            }
            acc.clone()
        })
        .collect()
}

/// Disjuncts of "`dominator` does not strictly SD-dominate `dominated`"
/// under `pref`, where one side is agent 3's unknown row and the other is
/// the fixed row. Either every cut is equal, or some cut favours the
/// dominated side.
fn non_domination_disjuncts(
    profile: &Profile,
    pref: &WeakOrder,
    fixed: &[Rational],
    unknown_is_dominator: bool,
) -> Vec<Disjunct> {
    let n = profile.n();
    let exprs = cut_exprs(pref, n);
    let masses = cut_point_masses(pref, fixed);
    let names = doubly_stochastic(profile);
    let describe = |e: &LinearExpr, rel: &str, m: &Rational| format!("{} {rel} {m}", names.format_expr(e));
    let mut out = Vec::new();
    let equal: Vec<_> = exprs.iter().zip(&masses).map(|(e, m)| (e.clone(), Relation::Eq, m.clone())).collect();
    let equal_label =
        exprs.iter().zip(&masses).map(|(e, m)| describe(e, "=", m)).collect::<Vec<_>>().join(" and ");
    out.push((equal_label, equal));
    let (rel, symbol) = if unknown_is_dominator { (Relation::Lt, "<") } else { (Relation::Gt, ">") };
    for (e, m) in exprs.iter().zip(&masses) {
        out.push((describe(e, symbol, m), vec![(e.clone(), rel, m.clone())]));
    }
    out
}

fn with_constraints(mut system: LinearSystem, extra: &[(LinearExpr, Relation, Rational)], label: &str) -> LinearSystem {
    for (e, r, m) in extra {
        system.add_labeled(label, e.clone(), *r, m.clone());
    }
    system
}

fn c3(object: usize, n: usize) -> LinearExpr {
    LinearExpr::var(entry(AGENT3, object).var(n))
}

fn facts_system(profile: &Profile, zeros: &[Entry]) -> LinearSystem {
    node_system(profile, &[], zeros)
}

/// Lower bound on `C3b` under one disjunct of step 3.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisjunctBound {
    pub disjunct: String,
    /// Infimum of `C3b` over the disjunct, `None` when the disjunct itself
    /// is infeasible.
    pub infimum: Option<Rational>,
    /// Refutes the disjunct together with `C3b < bound` (or alone when it is
    /// infeasible).
    pub refutation: Refutation,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TheoremCertificate {
    pub n: usize,
    pub profiles: ImpossibilityProfiles,
    pub ps_strict_abc: Assignment,
    pub ps_strict_bca: Assignment,
    pub zero_proofs: Vec<ZeroProof>,
    /// `C3b + C3c < 1` and `C3b + C3c > 1` are both infeasible.
    pub row_identity: Vec<Refutation>,
    pub lower_bound: Rational,
    pub bound_disjuncts: Vec<DisjunctBound>,
    pub cases: Vec<Refutation>,
    pub verified: bool,
}

fn zero_targets(n: usize) -> Vec<Entry> {
    std::iter::once(entry(AGENT3, A)).chain((3..n).map(|o| entry(AGENT3, o))).collect()
}

fn row_identity_systems(profile: &Profile, zeros: &[Entry]) -> Vec<(String, LinearSystem)> {
    let n = profile.n();
    let bc = c3(B, n).plus(entry(AGENT3, C).var(n), Rational::one());
    let name = |rel: &str| format!("C3b + C3c {rel} 1");
    [(Relation::Lt, "<"), (Relation::Gt, ">")]
        .into_iter()
        .map(|(rel, sym)| {
            let label = name(sym);
            let s = with_constraints(facts_system(profile, zeros), &[(bc.clone(), rel, Rational::one())], &label);
            (label, s)
        })
        .collect()
}

fn bound_systems(profiles: &ImpossibilityProfiles, ps_abc: &Assignment, zeros: &[Entry]) -> Vec<(String, LinearSystem)> {
    let p = &profiles.tied_ab;
    let pref = p.pref(AgentId(AGENT3));
    non_domination_disjuncts(p, pref, ps_abc.row(AgentId(AGENT3)), false)
        .into_iter()
        .map(|(label, cons)| {
            let s = with_constraints(facts_system(p, zeros), &cons, &label);
            (label, s)
        })
        .collect()
}

fn bounded(system: &LinearSystem, n: usize, bound: &Rational) -> LinearSystem {
    with_constraints(system.clone(), &[(c3(B, n), Relation::Lt, bound.clone())], &format!("C3b < {bound}"))
}

fn case_systems(
    profiles: &ImpossibilityProfiles,
    ps_bca: &Assignment,
    zeros: &[Entry],
    bound: &Rational,
) -> Vec<(String, LinearSystem)> {
    let p = &profiles.tied_ab;
    let n = p.n();
    let true_pref = profiles.strict_bca.pref(AgentId(AGENT3));
    let mut facts = facts_system(p, zeros);
    facts.add_labeled(format!("C3b >= {bound}"), c3(B, n), Relation::Ge, bound.clone());
    facts.add_labeled(
        "C3b + C3c = 1",
        c3(B, n).plus(entry(AGENT3, C).var(n), Rational::one()),
        Relation::Eq,
        Rational::one(),
    );
    non_domination_disjuncts(p, true_pref, ps_bca.row(AgentId(AGENT3)), true)
        .into_iter()
        .map(|(label, cons)| {
            let s = with_constraints(facts.clone(), &cons, &label);
            (label, s)
        })
        .collect()
}

/// Runs every step and returns the certificate, or names the first step
/// that does not go through.
pub fn verify_impossibility_theorem(n: usize) -> Result<TheoremCertificate, TheoremError> {
    let profiles = impossibility_profiles(n)?;

    // step 1
    let ps_of = |p: &Profile| ps(p).map(|(a, _)| a).map_err(|e| fail(1, e.to_string()));
    let ps_strict_abc = ps_of(&profiles.strict_abc)?;
    let ps_strict_bca = ps_of(&profiles.strict_bca)?;
    let (want_abc, want_bca) = expected_ps(n);
    if ps_strict_abc != want_abc || ps_strict_bca != want_bca {
        return Err(fail(1, "PS outcomes differ from the expected matrices"));
    }

    // step 2
    let tied = &profiles.tied_ab;
    let mut zero_proofs = Vec::new();
    for target in zero_targets(n) {
        let mut budget = NODE_BUDGET;
        let tree = build_tree(tied, vec![target], Vec::new(), &mut budget)?;
        zero_proofs.push(ZeroProof { target, tree });
    }
    let zeros = zero_targets(n);
    let row_identity = row_identity_systems(tied, &zeros)
        .into_iter()
        .map(|(label, s)| Refutation::prove(2, label, s))
        .collect::<Result<Vec<_>, _>>()?;

    // step 3
    let mut infima = Vec::new();
    for (label, s) in bound_systems(&profiles, &ps_strict_abc, &zeros) {
        if !lp_feasible(&s).is_feasible() {
            infima.push((label, s, None));
            continue;
        }
        // a nonempty system's closure is its weak relaxation, so the infimum carries over
        let mut relaxed = s.clone();
        for c in relaxed.constraints.iter_mut() {
            c.relation = match c.relation {
                Relation::Lt => Relation::Le,
                Relation::Gt => Relation::Ge,
                r => r,
            };
        }
        let infimum = match lp_minimize(&relaxed, &c3(B, n)).map_err(|e| fail(3, e.to_string()))? {
            Optimum::Optimal { value, .. } => Some(value),
            Optimum::Infeasible { .. } => None,
            Optimum::Unbounded { .. } => return Err(fail(3, "C3b is unbounded below")),
        };
        infima.push((label, s, infimum));
    }
    let lower_bound = infima
        .iter()
        .filter_map(|(_, _, v)| v.clone())
        .min()
        .ok_or_else(|| fail(3, "every disjunct is infeasible"))?;
    if lower_bound != Rational::new(5, 6) {
        return Err(fail(3, format!("derived lower bound on C3b is {lower_bound}, expected 5/6")));
    }
    let bound_disjuncts = infima
        .into_iter()
        .map(|(label, s, infimum)| {
            let target = if infimum.is_some() { bounded(&s, n, &lower_bound) } else { s };
            Ok(DisjunctBound { disjunct: label.clone(), infimum, refutation: Refutation::prove(3, label, target)? })
        })
        .collect::<Result<Vec<_>, TheoremError>>()?;

    // step 4
    let cases = case_systems(&profiles, &ps_strict_bca, &zeros, &lower_bound)
        .into_iter()
        .map(|(label, s)| Refutation::prove(4, label, s))
        .collect::<Result<Vec<_>, _>>()?;

    let cert = TheoremCertificate {
        n,
        profiles,
        ps_strict_abc,
        ps_strict_bca,
        zero_proofs,
        row_identity,
        lower_bound,
        bound_disjuncts,
        cases,
        verified: true,
    };
    cert.revalidate()?;
    Ok(cert)
}

impl TheoremCertificate {
    /// Re-derives every system from the profiles and checks every
    /// certificate with exact arithmetic, without calling the LP solver.
    pub fn revalidate(&self) -> Result<(), TheoremError> {
        let n = self.n;
        let profiles = impossibility_profiles(n)?;
        if profiles != self.profiles {
            return Err(fail(1, "profiles differ from the fixed construction"));
        }

        let (want_abc, want_bca) = expected_ps(n);
        let got_abc = ps(&profiles.strict_abc).map_err(|e| fail(1, e.to_string()))?.0;
        let got_bca = ps(&profiles.strict_bca).map_err(|e| fail(1, e.to_string()))?.0;
        if got_abc != want_abc || self.ps_strict_abc != want_abc || got_bca != want_bca || self.ps_strict_bca != want_bca {
            return Err(fail(1, "PS outcomes differ from the expected matrices"));
        }

        let tied = &profiles.tied_ab;
        let zeros = zero_targets(n);
        if self.zero_proofs.iter().map(|z| z.target).collect::<Vec<_>>() != zeros {
            return Err(fail(2, "zero proofs do not cover the required entries"));
        }
        for z in &self.zero_proofs {
            check_tree(tied, &z.tree, &[z.target], &[])?;
        }
        let expected = row_identity_systems(tied, &zeros);
        if expected.len() != self.row_identity.len() {
            return Err(fail(2, "row identity needs both directions"));
        }
        for (r, (_, s)) in self.row_identity.iter().zip(&expected) {
            r.check(2, s)?;
        }

        if self.lower_bound != Rational::new(5, 6) {
            return Err(fail(3, "lower bound is not 5/6"));
        }
        let expected = bound_systems(&profiles, &self.ps_strict_abc, &zeros);
        if expected.len() != self.bound_disjuncts.len() {
            return Err(fail(3, "bound must cover every disjunct"));
        }
        for (d, (_, s)) in self.bound_disjuncts.iter().zip(&expected) {
            // either the disjunct alone or the disjunct with C3b below the bound is refuted
            let alone = d.refutation.check(3, s);
            let with_bound = d.refutation.check(3, &bounded(s, n, &self.lower_bound));
            alone.or(with_bound)?;
        }

        let expected = case_systems(&profiles, &self.ps_strict_bca, &zeros, &self.lower_bound);
        if expected.len() != self.cases.len() {
            return Err(fail(4, "every case must be refuted"));
        }
        for (r, (_, s)) in self.cases.iter().zip(&expected) {
            r.check(4, s)?;
        }
        if !self.verified {
            return Err(fail(4, "certificate is not marked verified"));
        }
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.zero_proofs.iter().map(|z| z.tree.size()).sum()
    }

    /// Plain-text proof transcript.
    pub fn to_text(&self) -> String {
        let p = &self.profiles;
        let tied = &p.tied_ab;
        let mut out = String::new();
        let w = &mut out;
        let _ = writeln!(w, "Impossibility check, n = {}", self.n);
        let _ = writeln!(w, "profiles (agents 1 and 2 fixed, agent 3 varies):");
        for (name, profile) in [("≻", &p.strict_abc), ("≻′", &p.strict_bca), ("≻″", tied)] {
            let _ = writeln!(w, "  {name}:");
            for line in profile.to_text().lines() {
                let _ = writeln!(w, "    {line}");
            }
        }
        let _ = writeln!(w);
        let _ = writeln!(w, "step 1: a PS extension must return PS on the strict profiles");
        for (name, m) in [("ps(≻)", &self.ps_strict_abc), ("ps(≻′)", &self.ps_strict_bca)] {
            let _ = writeln!(w, "  {name} =");
            for line in m.to_text().lines() {
                let _ = writeln!(w, "    {line}");
            }
        }
        let _ = writeln!(w, "  both match the expected matrices");
        let _ = writeln!(w);
        let _ = writeln!(w, "step 2: SD-efficiency on ≻″ forces zeros in agent 3's row");
        for z in &self.zero_proofs {
            let _ = writeln!(w, "  assume {} > 0", z.target.name(tied));
            write_tree(w, tied, &z.tree, 2);
            let _ = writeln!(w, "  hence {} = 0", z.target.name(tied));
        }
        for r in &self.row_identity {
            let _ = writeln!(w, "  {} is infeasible: {}", r.label, r.certificate.describe(&r.system));
        }
        let _ = writeln!(w, "  hence C3b + C3c = 1");
        let _ = writeln!(w);
        let _ = writeln!(w, "step 3: reporting ≻ at ≻″ must not help agent 3 (true preference {})", tied.format_pref(tied.pref(AgentId(AGENT3))));
        for d in &self.bound_disjuncts {
            match &d.infimum {
                Some(v) => {
                    let _ = writeln!(w, "  {}: min C3b = {v}; C3b < {} infeasible", d.disjunct, self.lower_bound);
                }
                None => {
                    let _ = writeln!(w, "  {}: infeasible", d.disjunct);
                }
            }
        }
        let _ = writeln!(w, "  hence C3b >= {}", self.lower_bound);
        let _ = writeln!(w);
        let bca = &p.strict_bca;
        let _ = writeln!(
            w,
            "step 4: reporting ≻″ at ≻′ must not help agent 3 (true preference {})",
            bca.format_pref(bca.pref(AgentId(AGENT3)))
        );
        for (k, r) in self.cases.iter().enumerate() {
            let letter = (b'a' + k as u8) as char;
            let _ = writeln!(w, "  ({letter}) {}: infeasible ({})", r.label, r.certificate.describe(&r.system));
        }
        let _ = writeln!(w, "all cases infeasible");
        out
    }
}

fn write_tree(w: &mut String, profile: &Profile, node: &ProofNode, depth: usize) {
    let pad = "  ".repeat(depth);
    match node {
        ProofNode::Infeasible { positive, zero, .. } => {
            let _ = writeln!(w, "{pad}{}: infeasible", assumption_text(profile, positive, zero));
        }
        ProofNode::Cycle { cycle, .. } => {
            let _ = writeln!(w, "{pad}trading cycle {}", cycle.display(profile));
        }
        ProofNode::Branch { entry, if_positive, if_zero, .. } => {
            let name = entry.name(profile);
            let _ = writeln!(w, "{pad}if {name} > 0:");
            write_tree(w, profile, if_positive, depth + 1);
            let _ = writeln!(w, "{pad}if {name} = 0:");
            write_tree(w, profile, if_zero, depth + 1);
        }
    }
}

fn assumption_text(profile: &Profile, positive: &[Entry], zero: &[Entry]) -> String {
    let parts: Vec<String> = positive
        .iter()
        .map(|e| format!("{} > 0", e.name(profile)))
        .chain(zero.iter().map(|e| format!("{} = 0", e.name(profile))))
        .collect();
    parts.join(", ")
}
