//! Dense two-phase simplex on exact rationals with Bland's rule.
//!
//! Every row gets an artificial column; those columns are kept after phase 1
//! so that `c_B·B⁻¹` (the dual vector) can be read off at any time.

use crate::rational::Rational;

use super::{LinearExpr, LinearSystem, Relation, VarKind};

pub(super) enum Outcome {
    /// Farkas multipliers, one per constraint.
    Infeasible(Vec<Rational>),
    Optimal { value: Rational, point: Vec<Rational>, duals: Vec<Rational> },
    Unbounded { point: Vec<Rational>, ray: Vec<Rational> },
}

struct Tableau {
    rows: Vec<Vec<Rational>>,
    rhs: Vec<Rational>,
    basis: Vec<usize>,
    /// Columns that may enter the basis.
    allowed: Vec<bool>,
}

enum Step {
    Optimal,
    Unbounded(usize),
}

impl Tableau {
    fn duals(&self, cost: &[Rational], first_artificial: usize) -> Vec<Rational> {
        let m = self.rows.len();
        (0..m)
            .map(|r| {
                (0..m)
                    .filter(|&i| !cost[self.basis[i]].is_zero())
                    .map(|i| &cost[self.basis[i]] * &self.rows[i][first_artificial + r])
                    .sum()
            })
            .collect()
    }

    fn reduced_cost(&self, cost: &[Rational], j: usize) -> Rational {
        let mut d = cost[j].clone();
        for (i, &b) in self.basis.iter().enumerate() {
            if !cost[b].is_zero() && !self.rows[i][j].is_zero() {
                d -= &(&cost[b] * &self.rows[i][j]);
            }
        }
        d
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.rows[row][col].recip();
        for x in self.rows[row].iter_mut() {
            if !x.is_zero() {
                *x *= &p;
            }
        }
        self.rhs[row] *= &p;
        let pivot_row = self.rows[row].clone();
        let pivot_rhs = self.rhs[row].clone();
        for i in 0..self.rows.len() {
            if i == row || self.rows[i][col].is_zero() {
                continue;
            }
            let factor = self.rows[i][col].clone();
            for (x, y) in self.rows[i].iter_mut().zip(&pivot_row) {
                if !y.is_zero() {
                    *x -= &(&factor * y);
                }
            }
            self.rhs[i] -= &(&factor * &pivot_rhs);
        }
        self.basis[row] = col;
    }

    /// Maximises `cost` from the current feasible basis.
    fn run(&mut self, cost: &[Rational]) -> Step {
        loop {
            let entering = (0..cost.len())
                .filter(|&j| self.allowed[j] && !self.basis.contains(&j))
                .find(|&j| self.reduced_cost(cost, j).is_positive());
            let Some(col) = entering else {
                return Step::Optimal;
            };
            let mut best: Option<(usize, Rational)> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][col];
                if !a.is_positive() {
                    continue;
                }
                let ratio = &self.rhs[i] / a;
                let better = match &best {
                    None => true,
                    Some((bi, br)) => ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi]),
                };
                if better {
                    best = Some((i, ratio));
                }
            }
            match best {
                Some((row, _)) => self.pivot(row, col),
                None => return Step::Unbounded(col),
            }
        }
    }

    fn values(&self, width: usize) -> Vec<Rational> {
        let mut z = vec![Rational::zero(); width];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < width {
                z[b] = self.rhs[i].clone();
            }
        }
        z
    }
}

/// Column layout: one or two columns per variable (free ones are split into
/// `x⁺ − x⁻`), then one slack per inequality, then one artificial per row.
struct Layout {
    var_cols: Vec<(usize, Option<usize>)>,
    width: usize,
}

impl Layout {
    fn to_point(&self, z: &[Rational]) -> Vec<Rational> {
        self.var_cols
            .iter()
            .map(|&(pos, neg)| match neg {
                Some(neg) => &z[pos] - &z[neg],
                None => z[pos].clone(),
            })
            .collect()
    }
}

pub(super) fn solve(system: &LinearSystem, objective: Option<&LinearExpr>) -> Outcome {
    let n = system.num_vars();
    let m = system.constraints.len();

    let mut var_cols = Vec::with_capacity(n);
    let mut next = 0;
    for v in &system.variables {
        match v.kind {
            VarKind::NonNegative => {
                var_cols.push((next, None));
                next += 1;
            }
            VarKind::Free => {
                var_cols.push((next, Some(next + 1)));
                next += 2;
            }
        }
    }
    let structural = next;
    let slack_count = system.constraints.iter().filter(|c| c.relation != Relation::Eq).count();
    let width = structural + slack_count;
    let first_artificial = width;
    let total = width + m;
    let layout = Layout { var_cols, width };

    let mut rows = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    let mut sigma = Vec::with_capacity(m);
    let mut slack = structural;
    for (r, c) in system.constraints.iter().enumerate() {
        let mut row = vec![Rational::zero(); total];
        for (v, a) in &c.lhs.terms {
            let (pos, neg) = layout.var_cols[v.0];
            row[pos] += a;
            if let Some(neg) = neg {
                row[neg] -= a;
            }
        }
        match c.relation {
            Relation::Le | Relation::Lt => {
                row[slack] = Rational::one();
                slack += 1;
            }
            Relation::Ge | Relation::Gt => {
                row[slack] = -Rational::one();
                slack += 1;
            }
            Relation::Eq => {}
        }
        let mut b = c.rhs.clone();
        let s = if b.is_negative() { -1 } else { 1 };
        if s < 0 {
            for x in row.iter_mut() {
                *x = -&*x;
            }
            b = -b;
        }
        row[first_artificial + r] = Rational::one();
        rows.push(row);
        rhs.push(b);
        sigma.push(Rational::from_integer(s));
    }

    let mut tab = Tableau {
        rows,
        rhs,
        basis: (first_artificial..total).collect(),
        allowed: vec![true; total],
    };

    // phase 1: maximise minus the sum of artificials
    let mut cost1 = vec![Rational::zero(); total];
    for c in cost1.iter_mut().skip(first_artificial) {
        *c = -Rational::one();
    }
    if let Step::Unbounded(_) = tab.run(&cost1) {
        unreachable!("phase 1 objective is bounded by zero");
    }
    let infeasibility: Rational = tab
        .basis
        .iter()
        .zip(&tab.rhs)
        .filter(|(b, _)| **b >= first_artificial)
        .map(|(_, v)| v.clone())
        .sum();
    if infeasibility.is_positive() {
        let y = tab.duals(&cost1, first_artificial);
        return Outcome::Infeasible(y.iter().zip(&sigma).map(|(y, s)| y * s).collect());
    }

    // drive zero-level artificials out where possible; the rest sit in redundant rows
    for i in 0..m {
        if tab.basis[i] >= first_artificial {
            if let Some(col) = (0..width).find(|&j| !tab.rows[i][j].is_zero()) {
                tab.pivot(i, col);
            }
        }
    }
    for a in tab.allowed.iter_mut().skip(first_artificial) {
        *a = false;
    }

    let Some(objective) = objective else {
        let point = layout.to_point(&tab.values(layout.width));
        return Outcome::Optimal {
            value: Rational::zero(),
            point,
            duals: vec![Rational::zero(); m],
        };
    };

    let mut cost2 = vec![Rational::zero(); total];
    for (v, c) in &objective.terms {
        let (pos, neg) = layout.var_cols[v.0];
        cost2[pos] += c;
        if let Some(neg) = neg {
            cost2[neg] -= c;
        }
    }
    match tab.run(&cost2) {
        Step::Optimal => {
            let z = tab.values(layout.width);
            let value: Rational = z.iter().zip(&cost2).map(|(x, c)| x * c).sum();
            let y = tab.duals(&cost2, first_artificial);
            Outcome::Optimal {
                value,
                point: layout.to_point(&z),
                duals: y.iter().zip(&sigma).map(|(y, s)| y * s).collect(),
            }
        }
        Step::Unbounded(col) => {
            let point = layout.to_point(&tab.values(layout.width));
            let mut dz = vec![Rational::zero(); layout.width];
            dz[col] = Rational::one();
            for (i, &b) in tab.basis.iter().enumerate() {
                if b < layout.width {
                    dz[b] = -&tab.rows[i][col];
                }
            }
            Outcome::Unbounded { point, ray: layout.to_point(&dz) }
        }
    }
}
