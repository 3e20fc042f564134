//! Fourier–Motzkin elimination, used as an independent second opinion on
//! small systems.

use std::collections::HashMap;

use crate::rational::Rational;

use super::{Feasibility, InfeasibilityCertificate, LinearSystem, LpError, Relation, VarKind};

pub const FM_VARIABLE_CAP: usize = 12;
const ROW_CAP: usize = 50_000;

/// `coeffs·x < rhs` when `strict`, else `≤`; `origin` holds the nonnegative
/// weights of the input rows that produced it.
#[derive(Clone)]
struct Row {
    coeffs: Vec<Rational>,
    rhs: Rational,
    strict: bool,
    origin: Vec<Rational>,
}

impl Row {
    fn scaled_sum(a: &Row, wa: &Rational, b: &Row, wb: &Rational) -> Row {
        Row {
            coeffs: a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| x * wa + y * wb).collect(),
            rhs: &a.rhs * wa + &b.rhs * wb,
            strict: a.strict || b.strict,
            origin: a.origin.iter().zip(&b.origin).map(|(x, y)| x * wa + y * wb).collect(),
        }
    }
}

/// Scales each row so its first nonzero coefficient is ±1, drops rows that
/// hold trivially, and keeps only the tightest row per coefficient vector.
fn prune(rows: Vec<Row>) -> Vec<Row> {
    let mut best: HashMap<Vec<Rational>, usize> = HashMap::new();
    let mut out: Vec<Row> = Vec::new();
    for mut r in rows {
        let Some(lead) = r.coeffs.iter().find(|c| !c.is_zero()).map(Rational::abs) else {
            let satisfied = r.rhs.is_positive() || (!r.strict && r.rhs.is_zero());
            if !satisfied {
                out.push(r);
            }
            continue;
        };
        let scale = lead.recip();
        for c in r.coeffs.iter_mut().chain(std::iter::once(&mut r.rhs)).chain(r.origin.iter_mut()) {
            *c *= &scale;
        }
        match best.get(&r.coeffs) {
            Some(&k) => {
                let old = &out[k];
                if r.rhs < old.rhs || (r.rhs == old.rhs && r.strict && !old.strict) {
                    out[k] = r;
                }
            }
            None => {
                best.insert(r.coeffs.clone(), out.len());
                out.push(r);
            }
        }
    }
    out
}

pub fn fm_feasible(system: &LinearSystem) -> Result<Feasibility, LpError> {
    let n = system.num_vars();
    if n > FM_VARIABLE_CAP {
        return Err(LpError::TooManyVariables { got: n, cap: FM_VARIABLE_CAP });
    }
    let m = system.constraints.len();
    // origin slots: [constraint k as ≤ form, constraint k as ≥ form] for each k, then bounds
    let slots = 2 * m + n;
    let unit = |slot: usize| {
        let mut v = vec![Rational::zero(); slots];
        v[slot] = Rational::one();
        v
    };

    let mut rows = Vec::new();
    for (k, c) in system.constraints.iter().enumerate() {
        let dense = c.lhs.dense(n);
        let upper = Row {
            coeffs: dense.clone(),
            rhs: c.rhs.clone(),
            strict: c.relation == Relation::Lt,
            origin: unit(2 * k),
        };
        let lower = Row {
            coeffs: dense.iter().map(|x| -x).collect(),
            rhs: -&c.rhs,
            strict: c.relation == Relation::Gt,
            origin: unit(2 * k + 1),
        };
        match c.relation {
            Relation::Le | Relation::Lt => rows.push(upper),
            Relation::Ge | Relation::Gt => rows.push(lower),
            Relation::Eq => {
                rows.push(upper);
                rows.push(lower);
            }
        }
    }
    for (j, v) in system.variables.iter().enumerate() {
        if v.kind == VarKind::NonNegative {
            let mut coeffs = vec![Rational::zero(); n];
            coeffs[j] = -Rational::one();
            rows.push(Row { coeffs, rhs: Rational::zero(), strict: false, origin: unit(2 * m + j) });
        }
    }

    let mut stages = Vec::with_capacity(n);
    for j in 0..n {
        let (mut pos, mut neg, mut rest) = (Vec::new(), Vec::new(), Vec::new());
        for r in &rows {
            if r.coeffs[j].is_positive() {
                pos.push(r.clone());
            } else if r.coeffs[j].is_negative() {
                neg.push(r.clone());
            } else {
                rest.push(r.clone());
            }
        }
        if rest.len() + pos.len() * neg.len() > ROW_CAP {
            return Err(LpError::BlowUp(ROW_CAP));
        }
        for p in &pos {
            for q in &neg {
                let wp = (-&q.coeffs[j]).clone();
                let wq = p.coeffs[j].clone();
                let mut r = Row::scaled_sum(p, &wp, q, &wq);
                r.coeffs[j] = Rational::zero();
                rest.push(r);
            }
        }
        stages.push(std::mem::replace(&mut rows, prune(rest)));
    }

    // every remaining row reads 0 (<|≤) rhs
    if let Some(bad) = rows.iter().find(|r| r.rhs.is_negative() || (r.strict && r.rhs.is_zero())) {
        let multipliers = system
            .constraints
            .iter()
            .enumerate()
            .map(|(k, _)| &bad.origin[2 * k] - &bad.origin[2 * k + 1])
            .collect();
        return Ok(Feasibility::Infeasible { certificate: InfeasibilityCertificate { multipliers } });
    }

    let mut point = vec![Rational::zero(); n];
    for j in (0..n).rev() {
        let mut lo: Option<(Rational, bool)> = None;
        let mut hi: Option<(Rational, bool)> = None;
        for r in &stages[j] {
            let a = &r.coeffs[j];
            if a.is_zero() {
                continue;
            }
            let others: Rational = ((j + 1)..n).map(|i| &r.coeffs[i] * &point[i]).sum();
            let bound = (&r.rhs - &others) / a;
            if a.is_positive() {
                if hi.as_ref().is_none_or(|(h, s)| bound < *h || (bound == *h && r.strict && !s)) {
                    hi = Some((bound, r.strict));
                }
            } else if lo.as_ref().is_none_or(|(l, s)| bound > *l || (bound == *l && r.strict && !s)) {
                lo = Some((bound, r.strict));
            }
        }
        point[j] = match (lo, hi) {
            (None, None) => Rational::zero(),
            (Some((l, strict)), None) => if strict { l + Rational::one() } else { l },
            (None, Some((h, strict))) => if strict { h - Rational::one() } else { h },
            (Some((l, _)), Some((h, _))) if l == h => l,
            (Some((l, _)), Some((h, _))) => (l + h) / Rational::from_integer(2),
        };
    }
    Ok(Feasibility::Feasible { point })
}
