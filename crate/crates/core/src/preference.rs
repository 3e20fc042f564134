//! Weak orders over objects and their enumeration.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default upper bound on the number of objects for exhaustive enumeration
/// of weak orders (541 orders at 5 objects).
pub const WEAK_ORDER_CAP: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ObjectId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AgentId(pub usize);

impl ObjectId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl AgentId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PreferenceError {
    #[error("indifference class {0} is empty")]
    EmptyClass(usize),
    #[error("object {0} appears more than once")]
    DuplicateObject(usize),
    #[error("object {0} is outside the universe of {1} objects")]
    OutOfRange(usize, usize),
    #[error("object {0} is missing from the order")]
    MissingObject(usize),
    #[error("{requested} objects exceeds the enumeration cap of {cap}")]
    TooLarge { requested: usize, cap: usize },
    #[error("cannot enumerate orders over zero objects")]
    Empty,
}

/// A complete, transitive preference over `0..n` objects, stored as an
/// ordered partition into indifference classes (best class first).
#[derive(Clone, PartialEq, Eq, Hash, Serialize)]
pub struct WeakOrder {
    classes: Vec<Vec<ObjectId>>,
    #[serde(skip)]
    rank: Vec<usize>,
}

impl WeakOrder {
    /// Builds an order from explicit classes. Objects inside a class are kept
    /// sorted by index so that equal orders compare equal.
    pub fn new(classes: Vec<Vec<ObjectId>>) -> Result<Self, PreferenceError> {
        let n: usize = classes.iter().map(Vec::len).sum();
        let mut rank = vec![usize::MAX; n];
        let mut sorted = Vec::with_capacity(classes.len());
        for (c, class) in classes.into_iter().enumerate() {
            if class.is_empty() {
                return Err(PreferenceError::EmptyClass(c));
            }
            let mut class = class;
            for &o in &class {
                if o.0 >= n {
                    return Err(PreferenceError::OutOfRange(o.0, n));
                }
                if rank[o.0] != usize::MAX {
                    return Err(PreferenceError::DuplicateObject(o.0));
                }
                rank[o.0] = c;
            }
            class.sort();
            sorted.push(class);
        }
        if let Some(missing) = rank.iter().position(|&r| r == usize::MAX) {
            return Err(PreferenceError::MissingObject(missing));
        }
        Ok(WeakOrder { classes: sorted, rank })
    }

    /// Strict order from a ranking, best first.
    pub fn strict(order: &[usize]) -> Result<Self, PreferenceError> {
        Self::new(order.iter().map(|&o| vec![ObjectId(o)]).collect())
    }

    /// Builds from raw class indices, e.g. `&[&[0, 1], &[2]]` for `{a,b} > c`.
    pub fn from_classes(classes: &[&[usize]]) -> Result<Self, PreferenceError> {
        Self::new(classes.iter().map(|c| c.iter().map(|&o| ObjectId(o)).collect()).collect())
    }

    /// Every object in one class.
    pub fn indifferent(n: usize) -> Self {
        Self::new(vec![(0..n).map(ObjectId).collect()]).expect("single class is a partition")
    }

    pub fn num_objects(&self) -> usize {
        self.rank.len()
    }

    pub fn classes(&self) -> &[Vec<ObjectId>] {
        &self.classes
    }

    /// Index of the indifference class holding `o` (0 = most preferred).
    pub fn class_of(&self, o: ObjectId) -> usize {
        self.rank[o.0]
    }

    pub fn is_strict(&self) -> bool {
        self.classes.iter().all(|c| c.len() == 1)
    }

    /// `a ≿ b`
    pub fn weakly_prefers(&self, a: ObjectId, b: ObjectId) -> bool {
        self.rank[a.0] <= self.rank[b.0]
    }

    /// `a ≻ b`
    pub fn strictly_prefers(&self, a: ObjectId, b: ObjectId) -> bool {
        self.rank[a.0] < self.rank[b.0]
    }

    pub fn is_indifferent(&self, a: ObjectId, b: ObjectId) -> bool {
        self.rank[a.0] == self.rank[b.0]
    }

    /// All objects weakly preferred to `o`, including `o` itself.
    pub fn upper_contour(&self, o: ObjectId) -> Vec<ObjectId> {
        let cut = self.rank[o.0];
        let mut set: Vec<ObjectId> = self.classes[..=cut].iter().flatten().copied().collect();
        set.sort();
        set
    }

    /// Objects in preference order, ties broken by index.
    pub fn linear_extension(&self) -> Vec<ObjectId> {
        self.classes.iter().flatten().copied().collect()
    }

    /// Best class restricted to `available` objects.
    pub fn top_among(&self, available: &[bool]) -> Vec<ObjectId> {
        for class in &self.classes {
            let top: Vec<ObjectId> = class.iter().copied().filter(|o| available[o.0]).collect();
            if !top.is_empty() {
                return top;
            }
        }
        Vec::new()
    }

    /// Relabels objects: object `o` becomes `mapping[o]`.
    pub fn relabel(&self, mapping: &[usize]) -> Self {
        Self::new(
            self.classes
                .iter()
                .map(|c| c.iter().map(|o| ObjectId(mapping[o.0])).collect())
                .collect(),
        )
        .expect("relabelling by a permutation preserves the partition")
    }

    /// Appends `extra` new objects (indices `n..n+extra`) as strictly worse
    /// singleton classes in index order.
    pub fn extended_with_tail(&self, extra: usize) -> Self {
        let n = self.num_objects();
        let mut classes = self.classes.clone();
        classes.extend((n..n + extra).map(|o| vec![ObjectId(o)]));
        Self::new(classes).expect("tail extension preserves the partition")
    }
}

impl fmt::Debug for WeakOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .classes
            .iter()
            .map(|c| c.iter().map(|o| o.0.to_string()).collect::<Vec<_>>().join("~"))
            .collect();
        write!(f, "WeakOrder({})", parts.join(" > "))
    }
}

impl<'de> Deserialize<'de> for WeakOrder {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            classes: Vec<Vec<ObjectId>>,
        }
        let raw = Raw::deserialize(deserializer)?;
        WeakOrder::new(raw.classes).map_err(serde::de::Error::custom)
    }
}

/// Number of weak orders on `n` labelled items (ordered Bell / Fubini numbers),
/// via `a(n) = Σ_{k=1..n} C(n,k)·a(n−k)`.
pub fn ordered_bell(n: usize) -> u128 {
    let mut a = vec![0u128; n + 1];
    a[0] = 1;
    for m in 1..=n {
        let mut binom = 1u128;
        let mut total = 0u128;
        for k in 1..=m {
            binom = binom * (m - k + 1) as u128 / k as u128;
            total += binom * a[m - k];
        }
        a[m] = total;
    }
    a[n]
}

/// Every weak order over `num_objects` objects exactly once, using the
/// default cap.
pub fn enumerate_weak_orders(num_objects: usize) -> Result<Vec<WeakOrder>, PreferenceError> {
    enumerate_weak_orders_capped(num_objects, WEAK_ORDER_CAP)
}

/// Ordered set partitions in a fixed order: the first class ranges over the
/// nonempty subsets of the remaining objects in increasing bitmask order,
/// then the rest is enumerated recursively.
pub fn enumerate_weak_orders_capped(
    num_objects: usize,
    cap: usize,
) -> Result<Vec<WeakOrder>, PreferenceError> {
    if num_objects == 0 {
        return Err(PreferenceError::Empty);
    }
    if num_objects > cap {
        return Err(PreferenceError::TooLarge { requested: num_objects, cap });
    }
    let full: u32 = (1u32 << num_objects) - 1;
    let mut out = Vec::new();
    let mut prefix: Vec<u32> = Vec::new();
    fill_partitions(full, &mut prefix, &mut out);
    Ok(out
        .into_iter()
        .map(|masks| {
            let classes = masks
                .iter()
                .map(|&m| (0..num_objects).filter(|b| m >> b & 1 == 1).map(ObjectId).collect())
                .collect();
            WeakOrder::new(classes).expect("bitmask partition is valid")
        })
        .collect())
}

fn fill_partitions(remaining: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if remaining == 0 {
        out.push(prefix.clone());
        return;
    }
    // iterate submasks of `remaining` in increasing numeric order
    let mut sub: u32 = 0;
    loop {
        sub = (sub.wrapping_sub(remaining)) & remaining;
        if sub == 0 {
            break;
        }
        prefix.push(sub);
        fill_partitions(remaining & !sub, prefix, out);
        prefix.pop();
    }
}

/// All `n!` strict orders, lexicographic in the ranking sequence.
pub fn enumerate_strict_orders(num_objects: usize) -> Vec<WeakOrder> {
    permutations(num_objects)
        .into_iter()
        .map(|p| WeakOrder::strict(&p).expect("permutation is a strict order"))
        .collect()
}

/// All permutations of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut current: Vec<usize> = (0..n).collect();
    let mut out = vec![current.clone()];
    loop {
        // next lexicographic permutation
        let Some(i) = (1..n).rev().find(|&i| current[i - 1] < current[i]) else {
            return out;
        };
        let j = (i..n).rev().find(|&j| current[j] > current[i - 1]).expect("pivot exists");
        current.swap(i - 1, j);
        current[i..].reverse();
        out.push(current.clone());
    }
}

pub fn factorial(n: usize) -> u128 {
    (1..=n as u128).product()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn upper_contour_examples() {
        // b > c > a
        let pref = WeakOrder::strict(&[1, 2, 0]).unwrap();
        assert_eq!(pref.upper_contour(ObjectId(2)), vec![ObjectId(1), ObjectId(2)]);
        // {a,b} > c
        let pref = WeakOrder::from_classes(&[&[0, 1], &[2]]).unwrap();
        assert_eq!(pref.upper_contour(ObjectId(0)), vec![ObjectId(0), ObjectId(1)]);
        assert_eq!(pref.upper_contour(ObjectId(1)), vec![ObjectId(0), ObjectId(1)]);
        assert_eq!(pref.upper_contour(ObjectId(2)).len(), 3);
    }

    #[test]
    fn rejects_bad_partitions() {
        assert_eq!(WeakOrder::from_classes(&[&[0], &[]]), Err(PreferenceError::EmptyClass(1)));
        assert_eq!(
            WeakOrder::from_classes(&[&[0, 1], &[1]]),
            Err(PreferenceError::DuplicateObject(1))
        );
        assert_eq!(WeakOrder::from_classes(&[&[0], &[3]]), Err(PreferenceError::OutOfRange(3, 2)));
    }

    #[test]
    fn small_enumeration_counts() {
        assert_eq!(enumerate_weak_orders(1).unwrap().len(), 1);
        let two = enumerate_weak_orders(2).unwrap();
        assert_eq!(two.len(), 3);
        let expected: HashSet<WeakOrder> = [
            WeakOrder::strict(&[0, 1]).unwrap(),
            WeakOrder::strict(&[1, 0]).unwrap(),
            WeakOrder::indifferent(2),
        ]
        .into_iter()
        .collect();
        assert_eq!(two.into_iter().collect::<HashSet<_>>(), expected);
        assert_eq!(enumerate_weak_orders(3).unwrap().len(), 13);
    }

    #[test]
    fn enumeration_respects_cap() {
        assert_eq!(
            enumerate_weak_orders(6),
            Err(PreferenceError::TooLarge { requested: 6, cap: WEAK_ORDER_CAP })
        );
        assert_eq!(enumerate_weak_orders(0), Err(PreferenceError::Empty));
    }

    /// Brute force: assign each object a class index in `0..n`, keep the
    /// assignments whose used indices are exactly `0..k`.
    fn brute_force_count(n: usize) -> usize {
        let mut count = 0;
        let total = n.pow(n as u32);
        for code in 0..total {
            let mut c = code;
            let mut labels = vec![0; n];
            for l in labels.iter_mut() {
                *l = c % n;
                c /= n;
            }
            let max = *labels.iter().max().unwrap();
            if (0..=max).all(|k| labels.contains(&k)) {
                count += 1;
            }
        }
        count
    }

    #[test]
    fn counts_match_ordered_bell_and_brute_force() {
        let expected = [1u128, 1, 3, 13, 75, 541];
        for n in 0..=5 {
            assert_eq!(ordered_bell(n), expected[n]);
        }
        for n in 1..=5 {
            let orders = enumerate_weak_orders(n).unwrap();
            assert_eq!(orders.len() as u128, ordered_bell(n));
            assert_eq!(orders.len(), brute_force_count(n));
            let distinct: HashSet<&WeakOrder> = orders.iter().collect();
            assert_eq!(distinct.len(), orders.len());
        }
    }

    #[test]
    fn enumeration_is_deterministic() {
        assert_eq!(enumerate_weak_orders(4).unwrap(), enumerate_weak_orders(4).unwrap());
        let three = enumerate_weak_orders(3).unwrap();
        assert_eq!(three[0], WeakOrder::strict(&[0, 1, 2]).unwrap());
    }

    #[test]
    fn permutations_are_lexicographic() {
        let perms = permutations(3);
        assert_eq!(perms.len(), 6);
        assert_eq!(perms[0], vec![0, 1, 2]);
        assert_eq!(perms[1], vec![0, 2, 1]);
        assert_eq!(perms[5], vec![2, 1, 0]);
        assert_eq!(permutations(1), vec![vec![0]]);
        assert_eq!(enumerate_strict_orders(4).len(), 24);
    }
}
