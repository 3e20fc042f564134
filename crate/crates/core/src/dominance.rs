//! Stochastic dominance between lotteries over objects.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::preference::{ObjectId, WeakOrder};
use crate::rational::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SdComparison {
    Equal,
    StrictlyDominates,
    StrictlyDominated,
    Incomparable,
}

impl SdComparison {
    pub fn mirror(self) -> Self {
        match self {
            SdComparison::StrictlyDominates => SdComparison::StrictlyDominated,
            SdComparison::StrictlyDominated => SdComparison::StrictlyDominates,
            other => other,
        }
    }

    /// `p ≿_SD q`
    pub fn weakly_dominates(self) -> bool {
        matches!(self, SdComparison::Equal | SdComparison::StrictlyDominates)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DominanceError {
    #[error("allocation has {got} entries but the preference ranks {expected} objects")]
    Shape { expected: usize, got: usize },
    #[error("allocations carry different total mass ({left} vs {right})")]
    MassMismatch { left: Box<Rational>, right: Box<Rational> },
}

/// Cumulative mass of `row` on each upper contour set, one value per
/// indifference class.
pub fn cut_point_masses(pref: &WeakOrder, row: &[Rational]) -> Vec<Rational> {
    let mut acc = Rational::zero();
    pref.classes()
        .iter()
        .map(|class| {
            for o in class {
                acc += &row[o.0];
            }
            acc.clone()
        })
        .collect()
}

/// Compares `p` against `q` under `pref`. The cumulative is constant inside
/// an indifference class, so only class boundaries are inspected.
pub fn sd_compare(
    pref: &WeakOrder,
    p: &[Rational],
    q: &[Rational],
) -> Result<SdComparison, DominanceError> {
    let n = pref.num_objects();
    for row in [p, q] {
        if row.len() != n {
            return Err(DominanceError::Shape { expected: n, got: row.len() });
        }
    }
    let left = cut_point_masses(pref, p);
    let right = cut_point_masses(pref, q);
    let (total_l, total_r) = (left.last().cloned(), right.last().cloned());
    if total_l != total_r {
        return Err(DominanceError::MassMismatch {
            left: Box::new(total_l.unwrap_or_default()),
            right: Box::new(total_r.unwrap_or_default()),
        });
    }
    let mut above = false;
    let mut below = false;
    for (l, r) in left.iter().zip(&right) {
        if l > r {
            above = true;
        } else if l < r {
            below = true;
        }
    }
    Ok(match (above, below) {
        (false, false) => SdComparison::Equal,
        (true, false) => SdComparison::StrictlyDominates,
        (false, true) => SdComparison::StrictlyDominated,
        (true, true) => SdComparison::Incomparable,
    })
}

/// Cardinal utilities, one per object.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UtilityVector(pub Vec<Rational>);

impl UtilityVector {
    /// `u(a) > u(b)` exactly when `a ≻ b` and `u(a) = u(b)` when `a ∼ b`.
    pub fn is_consistent_with(&self, pref: &WeakOrder) -> bool {
        let n = pref.num_objects();
        if self.0.len() != n {
            return false;
        }
        (0..n).all(|a| {
            (0..n).all(|b| {
                let (oa, ob) = (ObjectId(a), ObjectId(b));
                match pref.class_of(oa).cmp(&pref.class_of(ob)) {
                    std::cmp::Ordering::Less => self.0[a] > self.0[b],
                    std::cmp::Ordering::Equal => self.0[a] == self.0[b],
                    std::cmp::Ordering::Greater => self.0[a] < self.0[b],
                }
            })
        })
    }

    pub fn expected(&self, row: &[Rational]) -> Rational {
        self.0.iter().zip(row).map(|(u, p)| u * p).sum()
    }

    fn from_class_values(pref: &WeakOrder, class_values: &[Rational]) -> Self {
        let mut values = vec![Rational::zero(); pref.num_objects()];
        for (class, value) in pref.classes().iter().zip(class_values) {
            for o in class {
                values[o.0] = value.clone();
            }
        }
        UtilityVector(values)
    }
}

/// A random utility vector consistent with `pref`, deterministic in `seed`.
/// Gaps between consecutive classes are random positive rationals.
pub fn sample_consistent_utility(pref: &WeakOrder, seed: u64) -> UtilityVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = pref.classes().len();
    let mut class_values = vec![Rational::zero(); k];
    let mut current = Rational::new(rng.gen_range(-20..=20), rng.gen_range(1..=10));
    for c in (0..k).rev() {
        class_values[c] = current.clone();
        // heavy-tailed gaps so that near-degenerate utilities also show up
        let gap = if rng.gen_bool(0.25) {
            Rational::new(1, rng.gen_range(100..=10_000))
        } else {
            Rational::new(rng.gen_range(1..=1000), rng.gen_range(1..=50))
        };
        current += gap;
    }
    UtilityVector::from_class_values(pref, &class_values)
}

/// Utility that is close to the indicator of the upper contour set ending at
/// class `cut`: classes `0..=cut` are worth about 1, the rest about 0, and
/// every class boundary carries an extra `epsilon` step.
pub fn near_threshold_utility(pref: &WeakOrder, cut: usize, epsilon: &Rational) -> UtilityVector {
    let k = pref.classes().len();
    let class_values: Vec<Rational> = (0..k)
        .map(|c| {
            let base = if c <= cut { Rational::one() } else { Rational::zero() };
            base + epsilon * Rational::from_integer((k - 1 - c) as i64)
        })
        .collect();
    UtilityVector::from_class_values(pref, &class_values)
}

/// For an incomparable pair, a pair of consistent utilities ranking `p` and
/// `q` in opposite directions, found among near-threshold utilities.
pub fn incomparability_witness(
    pref: &WeakOrder,
    p: &[Rational],
    q: &[Rational],
) -> Option<(UtilityVector, UtilityVector)> {
    let left = cut_point_masses(pref, p);
    let right = cut_point_masses(pref, q);
    let favour_p = left.iter().zip(&right).position(|(l, r)| l > r)?;
    let favour_q = left.iter().zip(&right).position(|(l, r)| l < r)?;
    let mut epsilon = Rational::new(1, 10);
    for _ in 0..60 {
        let u = near_threshold_utility(pref, favour_p, &epsilon);
        let v = near_threshold_utility(pref, favour_q, &epsilon);
        if u.expected(p) > u.expected(q) && v.expected(q) > v.expected(p) {
            return Some((u, v));
        }
        epsilon = epsilon * Rational::new(1, 10);
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    fn pref_ab_c() -> WeakOrder {
        WeakOrder::from_classes(&[&[0, 1], &[2]]).unwrap()
    }

    #[test]
    fn equal_at_class_cut_points() {
        let p = [q(1, 3), q(1, 2), q(1, 6)];
        let r = [q(0, 1), q(5, 6), q(1, 6)];
        assert_eq!(sd_compare(&pref_ab_c(), &p, &r), Ok(SdComparison::Equal));
    }

    #[test]
    fn reflexive() {
        let p = [q(1, 3), q(1, 2), q(1, 6)];
        for pref in crate::preference::enumerate_weak_orders(3).unwrap() {
            assert_eq!(sd_compare(&pref, &p, &p), Ok(SdComparison::Equal));
        }
    }

    #[test]
    fn strict_dominance_and_its_mirror() {
        let p = [q(1, 3), q(1, 2), q(1, 6)];
        let r = [q(0, 1), q(4, 5), q(1, 5)];
        assert_eq!(sd_compare(&pref_ab_c(), &p, &r), Ok(SdComparison::StrictlyDominates));
        assert_eq!(sd_compare(&pref_ab_c(), &r, &p), Ok(SdComparison::StrictlyDominated));
    }

    #[test]
    fn incomparable_rows() {
        let pref = WeakOrder::strict(&[0, 1, 2]).unwrap();
        let p = [q(1, 2), q(0, 1), q(1, 2)];
        let r = [q(0, 1), q(1, 1), q(0, 1)];
        assert_eq!(sd_compare(&pref, &p, &r), Ok(SdComparison::Incomparable));
        let (u, v) = incomparability_witness(&pref, &p, &r).unwrap();
        assert!(u.is_consistent_with(&pref) && v.is_consistent_with(&pref));
        assert!(u.expected(&p) > u.expected(&r));
        assert!(v.expected(&r) > v.expected(&p));
    }

    #[test]
    fn shape_and_mass_errors() {
        let pref = WeakOrder::strict(&[0, 1]).unwrap();
        assert_eq!(
            sd_compare(&pref, &[q(1, 1)], &[q(1, 1), q(0, 1)]),
            Err(DominanceError::Shape { expected: 2, got: 1 })
        );
        assert!(matches!(
            sd_compare(&pref, &[q(1, 1), q(0, 1)], &[q(1, 2), q(0, 1)]),
            Err(DominanceError::MassMismatch { .. })
        ));
    }

    #[test]
    fn sampled_utilities_respect_the_order() {
        let strict = WeakOrder::strict(&[0, 1, 2]).unwrap();
        let flat = WeakOrder::indifferent(3);
        for seed in 0..200 {
            let u = sample_consistent_utility(&strict, seed);
            assert!(u.0[0] > u.0[1] && u.0[1] > u.0[2]);
            let u = sample_consistent_utility(&pref_ab_c(), seed);
            assert!(u.0[0] == u.0[1] && u.0[1] > u.0[2]);
            assert!(u.is_consistent_with(&pref_ab_c()));
            let u = sample_consistent_utility(&flat, seed);
            assert!(u.0.iter().all(|x| *x == u.0[0]));
        }
        assert_eq!(sample_consistent_utility(&strict, 7), sample_consistent_utility(&strict, 7));
    }

    #[test]
    fn threshold_utilities_are_consistent() {
        let pref = WeakOrder::from_classes(&[&[2], &[0, 1], &[3]]).unwrap();
        for cut in 0..3 {
            assert!(near_threshold_utility(&pref, cut, &q(1, 1000)).is_consistent_with(&pref));
        }
    }
}
