//! Exact linear feasibility and optimisation over the rationals.
//!
//! Systems mix weak (`≤`, `≥`, `=`) and strict (`<`, `>`) constraints over
//! nonnegative or free variables. Weak systems go through a two-phase dense
//! simplex with Bland's rule. Strict constraints are handled by maximising a
//! common slack `s` (`e > b` becomes `e − b ≥ s`, with `s ≤ 1`); the system is
//! strictly feasible iff the optimum is positive. No tolerance exists
//! anywhere: every answer carries a witness point or a certificate that is
//! checked with exact arithmetic.

mod fourier_motzkin;
mod simplex;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rational::Rational;

pub use fourier_motzkin::{fm_feasible, FM_VARIABLE_CAP};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VarId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarKind {
    NonNegative,
    Free,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = ">")]
    Gt,
}

impl Relation {
    pub fn is_strict(self) -> bool {
        matches!(self, Relation::Lt | Relation::Gt)
    }

    pub fn holds(self, lhs: &Rational, rhs: &Rational) -> bool {
        match self {
            Relation::Le => lhs <= rhs,
            Relation::Ge => lhs >= rhs,
            Relation::Eq => lhs == rhs,
            Relation::Lt => lhs < rhs,
            Relation::Gt => lhs > rhs,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Eq => "=",
            Relation::Lt => "<",
            Relation::Gt => ">",
        }
    }
}

/// Sparse linear form `Σ coeff·var`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LinearExpr {
    pub terms: Vec<(VarId, Rational)>,
}

impl LinearExpr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn var(v: VarId) -> Self {
        LinearExpr { terms: vec![(v, Rational::one())] }
    }

    pub fn sum(vars: impl IntoIterator<Item = VarId>) -> Self {
        LinearExpr { terms: vars.into_iter().map(|v| (v, Rational::one())).collect() }
    }

    pub fn plus(mut self, v: VarId, coeff: Rational) -> Self {
        self.terms.push((v, coeff));
        self
    }

    pub fn dense(&self, num_vars: usize) -> Vec<Rational> {
        let mut out = vec![Rational::zero(); num_vars];
        for (v, c) in &self.terms {
            out[v.0] += c;
        }
        out
    }

    pub fn evaluate(&self, point: &[Rational]) -> Rational {
        self.terms.iter().map(|(v, c)| c * &point[v.0]).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Constraint {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub lhs: LinearExpr,
    pub relation: Relation,
    pub rhs: Rational,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinearSystem {
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
}

impl LinearSystem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, name: impl Into<String>, kind: VarKind) -> VarId {
        self.variables.push(Variable { name: name.into(), kind });
        VarId(self.variables.len() - 1)
    }

    pub fn nonneg(&mut self, name: impl Into<String>) -> VarId {
        self.add_var(name, VarKind::NonNegative)
    }

    pub fn free(&mut self, name: impl Into<String>) -> VarId {
        self.add_var(name, VarKind::Free)
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn var_by_name(&self, name: &str) -> Option<VarId> {
        self.variables.iter().position(|v| v.name == name).map(VarId)
    }

    pub fn add(&mut self, lhs: LinearExpr, relation: Relation, rhs: Rational) -> &mut Self {
        self.constraints.push(Constraint { label: None, lhs, relation, rhs });
        self
    }

    pub fn add_labeled(
        &mut self,
        label: impl Into<String>,
        lhs: LinearExpr,
        relation: Relation,
        rhs: Rational,
    ) -> &mut Self {
        self.constraints.push(Constraint { label: Some(label.into()), lhs, relation, rhs });
        self
    }

    pub fn has_strict(&self) -> bool {
        self.constraints.iter().any(|c| c.relation.is_strict())
    }

    /// Index of the first violated constraint, `usize::MAX` for a bad
    /// variable bound, or `Ok` when the point satisfies everything exactly.
    pub fn check_point(&self, point: &[Rational]) -> Result<(), usize> {
        if point.len() != self.num_vars() {
            return Err(usize::MAX);
        }
        for (v, x) in self.variables.iter().zip(point) {
            if v.kind == VarKind::NonNegative && x.is_negative() {
                return Err(usize::MAX);
            }
        }
        for (k, c) in self.constraints.iter().enumerate() {
            if !c.relation.holds(&c.lhs.evaluate(point), &c.rhs) {
                return Err(k);
            }
        }
        Ok(())
    }

    pub fn format_expr(&self, expr: &LinearExpr) -> String {
        let mut out = String::new();
        for (i, (v, c)) in expr.terms.iter().enumerate() {
            let name = &self.variables[v.0].name;
            let sign = if c.is_negative() { "-" } else { "+" };
            let mag = c.abs();
            if i == 0 {
                if c.is_negative() {
                    out.push('-');
                }
            } else {
                out.push_str(&format!(" {sign} "));
            }
            if mag.is_one() {
                out.push_str(name);
            } else {
                out.push_str(&format!("{mag}*{name}"));
            }
        }
        if out.is_empty() {
            out.push('0');
        }
        out
    }

    pub fn format_constraint(&self, c: &Constraint) -> String {
        format!("{} {} {}", self.format_expr(&c.lhs), c.relation.symbol(), c.rhs)
    }
}

impl fmt::Display for LinearSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.constraints {
            match &c.label {
                Some(label) => writeln!(f, "  [{label}] {}", self.format_constraint(c))?,
                None => writeln!(f, "  {}", self.format_constraint(c))?,
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LpError {
    #[error("maximisation needs a system without strict inequalities")]
    StrictInOptimization,
    #[error("Fourier-Motzkin is capped at {cap} variables, got {got}")]
    TooManyVariables { got: usize, cap: usize },
    #[error("Fourier-Motzkin exceeded {0} derived inequalities")]
    BlowUp(usize),
}

/// Multipliers, one per constraint, whose combination refutes the system.
///
/// With `c = Σ μ_k·lhs_k` and `β = Σ μ_k·rhs_k`, the multipliers satisfy the
/// sign rules (`μ ≥ 0` on `≤`/`<`, `μ ≤ 0` on `≥`/`>`), `c_j ≥ 0` for
/// nonnegative variables and `c_j = 0` for free ones. Any feasible point
/// would then give `0 ≤ c·x ≤ β`, so `β < 0` is a contradiction; with
/// `β = 0` a nonzero multiplier on a strict row makes the middle step strict.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InfeasibilityCertificate {
    pub multipliers: Vec<Rational>,
}

/// Multipliers proving `objective ≤ bound` on the system.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundCertificate {
    pub multipliers: Vec<Rational>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum Feasibility {
    Feasible { point: Vec<Rational> },
    Infeasible { certificate: InfeasibilityCertificate },
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Feasibility::Feasible { .. })
    }

    pub fn point(&self) -> Option<&[Rational]> {
        match self {
            Feasibility::Feasible { point } => Some(point),
            Feasibility::Infeasible { .. } => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum Optimum {
    Optimal { value: Rational, point: Vec<Rational>, certificate: BoundCertificate },
    Unbounded { point: Vec<Rational>, ray: Vec<Rational> },
    Infeasible { certificate: InfeasibilityCertificate },
}

fn sign_ok(relation: Relation, mu: &Rational) -> bool {
    match relation {
        Relation::Le | Relation::Lt => !mu.is_negative(),
        Relation::Ge | Relation::Gt => !mu.is_positive(),
        Relation::Eq => true,
    }
}

fn combine(system: &LinearSystem, multipliers: &[Rational]) -> (Vec<Rational>, Rational) {
    let n = system.num_vars();
    let mut coeffs = vec![Rational::zero(); n];
    let mut rhs = Rational::zero();
    for (c, mu) in system.constraints.iter().zip(multipliers) {
        if mu.is_zero() {
            continue;
        }
        for (v, a) in &c.lhs.terms {
            coeffs[v.0] += &(mu * a);
        }
        rhs += &(mu * &c.rhs);
    }
    (coeffs, rhs)
}

impl InfeasibilityCertificate {
    /// Re-derives the contradiction with exact arithmetic.
    pub fn verify(&self, system: &LinearSystem) -> bool {
        if self.multipliers.len() != system.constraints.len() {
            return false;
        }
        if !system.constraints.iter().zip(&self.multipliers).all(|(c, mu)| sign_ok(c.relation, mu)) {
            return false;
        }
        let (coeffs, beta) = combine(system, &self.multipliers);
        let coeffs_ok = system.variables.iter().zip(&coeffs).all(|(v, c)| match v.kind {
            VarKind::NonNegative => !c.is_negative(),
            VarKind::Free => c.is_zero(),
        });
        if !coeffs_ok {
            return false;
        }
        let strict_used = system
            .constraints
            .iter()
            .zip(&self.multipliers)
            .any(|(c, mu)| c.relation.is_strict() && !mu.is_zero());
        beta.is_negative() || (beta.is_zero() && strict_used)
    }

    /// The derived inequality `c·x ≤ β` (or `<`) as readable text.
    pub fn describe(&self, system: &LinearSystem) -> String {
        let (coeffs, beta) = combine(system, &self.multipliers);
        let strict = system
            .constraints
            .iter()
            .zip(&self.multipliers)
            .any(|(c, mu)| c.relation.is_strict() && !mu.is_zero());
        let expr = LinearExpr {
            terms: coeffs
                .into_iter()
                .enumerate()
                .filter(|(_, c)| !c.is_zero())
                .map(|(j, c)| (VarId(j), c))
                .collect(),
        };
        let lhs = system.format_expr(&expr);
        format!("0 <= {lhs} {} {beta}", if strict { "<" } else { "<=" })
    }
}

impl BoundCertificate {
    pub fn verify(&self, system: &LinearSystem, objective: &LinearExpr, bound: &Rational) -> bool {
        if self.multipliers.len() != system.constraints.len() || system.has_strict() {
            return false;
        }
        if !system.constraints.iter().zip(&self.multipliers).all(|(c, mu)| sign_ok(c.relation, mu)) {
            return false;
        }
        let (coeffs, beta) = combine(system, &self.multipliers);
        let target = objective.dense(system.num_vars());
        let coeffs_ok = system.variables.iter().zip(coeffs.iter().zip(&target)).all(|(v, (c, t))| {
            match v.kind {
                VarKind::NonNegative => c >= t,
                VarKind::Free => c == t,
            }
        });
        coeffs_ok && beta <= *bound
    }
}

/// Checks that `ray` is a recession direction of the system that strictly
/// improves `objective`.
pub fn verify_unbounded_ray(system: &LinearSystem, objective: &LinearExpr, ray: &[Rational]) -> bool {
    if ray.len() != system.num_vars() {
        return false;
    }
    let bounds_ok = system
        .variables
        .iter()
        .zip(ray)
        .all(|(v, d)| v.kind == VarKind::Free || !d.is_negative());
    let rows_ok = system.constraints.iter().all(|c| {
        let a = c.lhs.evaluate(ray);
        match c.relation {
            Relation::Le | Relation::Lt => !a.is_positive(),
            Relation::Ge | Relation::Gt => !a.is_negative(),
            Relation::Eq => a.is_zero(),
        }
    });
    bounds_ok && rows_ok && objective.evaluate(ray).is_positive()
}

/// Decides feasibility of a system that may contain strict inequalities.
pub fn lp_feasible(system: &LinearSystem) -> Feasibility {
    if !system.has_strict() {
        return match simplex::solve(system, None) {
            simplex::Outcome::Infeasible(multipliers) => {
                Feasibility::Infeasible { certificate: InfeasibilityCertificate { multipliers } }
            }
            simplex::Outcome::Optimal { point, .. } | simplex::Outcome::Unbounded { point, .. } => {
                Feasibility::Feasible { point }
            }
        };
    }

    // maximise s subject to the weak rows, e - b >= s for e > b, b - e >= s for e < b, s <= 1
    let mut aux = LinearSystem { variables: system.variables.clone(), constraints: Vec::new() };
    let slack = aux.free("__slack");
    for c in &system.constraints {
        let (lhs, relation) = match c.relation {
            Relation::Gt => (c.lhs.clone().plus(slack, -Rational::one()), Relation::Ge),
            Relation::Lt => (c.lhs.clone().plus(slack, Rational::one()), Relation::Le),
            weak => (c.lhs.clone(), weak),
        };
        aux.add(lhs, relation, c.rhs.clone());
    }
    aux.add(LinearExpr::var(slack), Relation::Le, Rational::one());
    let objective = LinearExpr::var(slack);
    let strip = |mut v: Vec<Rational>| {
        v.truncate(system.constraints.len());
        v
    };
    match simplex::solve(&aux, Some(&objective)) {
        simplex::Outcome::Infeasible(multipliers) => Feasibility::Infeasible {
            certificate: InfeasibilityCertificate { multipliers: strip(multipliers) },
        },
        simplex::Outcome::Unbounded { .. } => unreachable!("slack is bounded above by 1"),
        simplex::Outcome::Optimal { value, mut point, duals } => {
            if value.is_positive() {
                point.truncate(system.num_vars());
                Feasibility::Feasible { point }
            } else {
                Feasibility::Infeasible {
                    certificate: InfeasibilityCertificate { multipliers: strip(duals) },
                }
            }
        }
    }
}

/// Maximises `objective` over a weak system.
pub fn lp_maximize(system: &LinearSystem, objective: &LinearExpr) -> Result<Optimum, LpError> {
    if system.has_strict() {
        return Err(LpError::StrictInOptimization);
    }
    Ok(match simplex::solve(system, Some(objective)) {
        simplex::Outcome::Infeasible(multipliers) => {
            Optimum::Infeasible { certificate: InfeasibilityCertificate { multipliers } }
        }
        simplex::Outcome::Optimal { value, point, duals } => {
            Optimum::Optimal { value, point, certificate: BoundCertificate { multipliers: duals } }
        }
        simplex::Outcome::Unbounded { point, ray } => Optimum::Unbounded { point, ray },
    })
}

/// Minimises by maximising the negation; the reported value is the minimum.
pub fn lp_minimize(system: &LinearSystem, objective: &LinearExpr) -> Result<Optimum, LpError> {
    let negated = LinearExpr { terms: objective.terms.iter().map(|(v, c)| (*v, -c)).collect() };
    Ok(match lp_maximize(system, &negated)? {
        Optimum::Optimal { value, point, certificate } => Optimum::Optimal { value: -value, point, certificate },
        other => other,
    })
}
