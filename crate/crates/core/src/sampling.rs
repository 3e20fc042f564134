//! Seeded generators for profiles and doubly stochastic matrices.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assignment::{Assignment, DiscreteAssignment};
use crate::preference::{ObjectId, WeakOrder};
use crate::profile::Profile;
use crate::rational::Rational;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform over orderings, with each adjacent pair merged into one
/// indifference class with probability `tie_probability`.
pub fn random_weak_order<R: Rng>(rng: &mut R, n: usize, tie_probability: f64) -> WeakOrder {
    let mut objects: Vec<usize> = (0..n).collect();
    objects.shuffle(rng);
    let mut classes: Vec<Vec<ObjectId>> = Vec::new();
    for o in objects {
        match classes.last_mut() {
            Some(last) if rng.gen_bool(tie_probability) => last.push(ObjectId(o)),
            _ => classes.push(vec![ObjectId(o)]),
        }
    }
    for c in classes.iter_mut() {
        c.sort();
    }
    WeakOrder::new(classes).expect("shuffled objects form a partition")
}

pub fn random_strict_order<R: Rng>(rng: &mut R, n: usize) -> WeakOrder {
    random_weak_order(rng, n, 0.0)
}

pub fn random_weak_profile<R: Rng>(rng: &mut R, n: usize, tie_probability: f64) -> Profile {
    let prefs = (0..n).map(|_| random_weak_order(rng, n, tie_probability)).collect();
    Profile::with_default_labels(prefs).expect("square by construction")
}

pub fn random_strict_profile<R: Rng>(rng: &mut R, n: usize) -> Profile {
    random_weak_profile(rng, n, 0.0)
}

pub fn random_matching<R: Rng>(rng: &mut R, n: usize) -> DiscreteAssignment {
    let mut objects: Vec<usize> = (0..n).collect();
    objects.shuffle(rng);
    DiscreteAssignment::new(objects).expect("shuffle is a permutation")
}

/// Convex combination of 1 to 6 random permutation matrices with small
/// integer weights, so the result is doubly stochastic exactly.
pub fn random_doubly_stochastic<R: Rng>(rng: &mut R, n: usize) -> Assignment {
    let k = rng.gen_range(1..=6);
    let weights: Vec<i64> = (0..k).map(|_| rng.gen_range(1..=12)).collect();
    let total: i64 = weights.iter().sum();
    let parts: Vec<(Rational, DiscreteAssignment)> =
        weights.into_iter().map(|w| (Rational::new(w, total), random_matching(rng, n))).collect();
    Assignment::convex_combination(&parts).expect("weights sum to one")
}
