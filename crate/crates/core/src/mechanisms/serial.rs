use crate::assignment::{Assignment, DiscreteAssignment};
use crate::preference::{factorial, permutations, AgentId};
use crate::profile::Profile;
use crate::rational::Rational;

use super::MechanismError;

/// Largest `n` for which [`rsd`] sweeps all `n!` orders.
pub const RSD_CAP: usize = 8;

/// Agents pick in `order`, each taking its favourite remaining object.
pub fn serial_dictatorship(
    profile: &Profile,
    order: &[usize],
) -> Result<DiscreteAssignment, MechanismError> {
    if let Some(agent) = profile.prefs().iter().position(|p| !p.is_strict()) {
        return Err(MechanismError::NotStrict { agent: AgentId(agent) });
    }
    let identity: Vec<usize> = (0..profile.n()).collect();
    serial_dictatorship_with_tiebreak(profile, order, &identity)
}

/// Serial dictatorship for weak preferences: within its best remaining
/// class an agent takes the object that comes first in `tiebreak`.
pub fn serial_dictatorship_with_tiebreak(
    profile: &Profile,
    order: &[usize],
    tiebreak: &[usize],
) -> Result<DiscreteAssignment, MechanismError> {
    let n = profile.n();
    if !is_permutation(order, n) {
        return Err(MechanismError::BadOrder(order.to_vec()));
    }
    if !is_permutation(tiebreak, n) {
        return Err(MechanismError::BadOrder(tiebreak.to_vec()));
    }
    let mut position = vec![0; n];
    for (rank, &o) in tiebreak.iter().enumerate() {
        position[o] = rank;
    }
    let mut available = vec![true; n];
    let mut objects = vec![0; n];
    for &agent in order {
        let top = profile.prefs()[agent].top_among(&available);
        let pick = top.iter().min_by_key(|o| position[o.0]).expect("an object is left").0;
        available[pick] = false;
        objects[agent] = pick;
    }
    Ok(DiscreteAssignment::new(objects).expect("each object is picked once"))
}

fn is_permutation(order: &[usize], n: usize) -> bool {
    let mut seen = vec![false; n];
    order.len() == n && order.iter().all(|&i| i < n && !std::mem::replace(&mut seen[i], true))
}

/// Random serial dictatorship: the exact average of serial dictatorship
/// over all `n!` picking orders.
pub fn rsd(profile: &Profile) -> Result<Assignment, MechanismError> {
    let n = profile.n();
    if n > RSD_CAP {
        return Err(MechanismError::TooLarge { n, cap: RSD_CAP });
    }
    let mut counts = vec![vec![0u64; n]; n];
    for order in permutations(n) {
        let matching = serial_dictatorship(profile, &order)?;
        for (agent, &o) in matching.objects().iter().enumerate() {
            counts[agent][o] += 1;
        }
    }
    let total = factorial(n) as i64;
    let entries = counts
        .into_iter()
        .map(|row| row.into_iter().map(|c| Rational::new(c as i64, total)).collect())
        .collect();
    crate::assignment::validate_assignment(entries).map_err(MechanismError::Internal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    fn theorem_strict() -> Profile {
        Profile::strict(&[&[0, 1, 2], &[0, 2, 1], &[0, 1, 2]]).unwrap()
    }

    #[test]
    fn greedy_picks() {
        let p = theorem_strict();
        assert_eq!(serial_dictatorship(&p, &[0, 1, 2]).unwrap().objects(), &[0, 2, 1]);
        assert_eq!(serial_dictatorship(&p, &[2, 1, 0]).unwrap().objects(), &[1, 2, 0]);
        let single = Profile::strict(&[&[0]]).unwrap();
        assert_eq!(serial_dictatorship(&single, &[0]).unwrap().objects(), &[0]);
    }

    #[test]
    fn rsd_matches_ps_on_the_first_theorem_profile() {
        let a = rsd(&theorem_strict()).unwrap();
        assert_eq!(
            a.rows(),
            &[
                vec![q(1, 3), q(1, 2), q(1, 6)],
                vec![q(1, 3), q(0, 1), q(2, 3)],
                vec![q(1, 3), q(1, 2), q(1, 6)],
            ]
        );
    }

    #[test]
    fn identity_top_profile() {
        let p = Profile::strict(&[&[0, 1, 2], &[1, 2, 0], &[2, 0, 1]]).unwrap();
        assert_eq!(rsd(&p).unwrap(), Assignment::identity(3));
    }

    #[test]
    fn tiebreak_is_required_for_weak_preferences() {
        let p = crate::profile::parse_profile("1: a ~ b\n2: a ~ b").unwrap();
        assert!(matches!(serial_dictatorship(&p, &[0, 1]), Err(MechanismError::NotStrict { .. })));
        let m = serial_dictatorship_with_tiebreak(&p, &[0, 1], &[1, 0]).unwrap();
        assert_eq!(m.objects(), &[1, 0]);
        assert!(matches!(
            serial_dictatorship_with_tiebreak(&p, &[0, 0], &[0, 1]),
            Err(MechanismError::BadOrder(_))
        ));
    }

    #[test]
    fn rsd_cap() {
        let prefs = vec![crate::preference::WeakOrder::strict(&(0..9).collect::<Vec<_>>()).unwrap(); 9];
        let p = Profile::with_default_labels(prefs).unwrap();
        assert_eq!(rsd(&p), Err(MechanismError::TooLarge { n: 9, cap: RSD_CAP }));
    }
}
