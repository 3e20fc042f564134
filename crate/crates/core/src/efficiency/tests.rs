use proptest::prelude::*;

use super::*;
use crate::assignment::validate_assignment;
use crate::mechanisms::{ps, rsd};
use crate::preference::enumerate_weak_orders;
use crate::profile::parse_profile;
use crate::rational::q;
use crate::sampling::{random_doubly_stochastic, random_weak_profile, rng};

fn strict_base() -> Profile {
    parse_profile("1: a > b > c\n2: a > c > b\n3: a > b > c").unwrap()
}

fn double_prime() -> Profile {
    parse_profile("1: a > b > c\n2: a > c > b\n3: a ~ b > c").unwrap()
}

fn cycle_fixture() -> Assignment {
    validate_assignment(vec![
        vec![q(1, 2), q(1, 2), q(0, 1)],
        vec![q(0, 1), q(0, 1), q(1, 1)],
        vec![q(1, 2), q(1, 2), q(0, 1)],
    ])
    .unwrap()
}

fn uniform(n: usize) -> Assignment {
    validate_assignment(vec![vec![Rational::new(1, n as i64); n]; n]).unwrap()
}

/// Every alternating sequence of at most `n` (object, agent) pairs that
/// satisfies the trading cycle conditions literally.
fn brute_force_has_cycle(p: &Assignment, profile: &Profile) -> bool {
    let n = profile.n();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|o| (0..n).map(move |i| (o, i))).collect();
    fn extend(seq: &mut Vec<(usize, usize)>, max: usize, pairs: &[(usize, usize)], ok: &dyn Fn(&[(usize, usize)]) -> bool) -> bool {
        if !seq.is_empty() && ok(seq) {
            return true;
        }
        if seq.len() == max {
            return false;
        }
        for &pair in pairs {
            seq.push(pair);
            if extend(seq, max, pairs, ok) {
                return true;
            }
            seq.pop();
        }
        false
    }
    let ok = |seq: &[(usize, usize)]| {
        let k = seq.len();
        let mut strict = false;
        for j in 0..k {
            let (o, i) = seq[j];
            let next = ObjectId(seq[(j + 1) % k].0);
            let pref = profile.pref(AgentId(i));
            if !p.rows()[i][o].is_positive() || !pref.weakly_prefers(next, ObjectId(o)) {
                return false;
            }
            strict |= pref.strictly_prefers(next, ObjectId(o));
        }
        strict
    };
    extend(&mut Vec::new(), n, &pairs, &ok)
}

/// `m` is Pareto optimal iff no other matching makes everyone weakly better
/// off and someone strictly better off.
fn brute_force_po(profile: &Profile) -> Vec<Vec<usize>> {
    let n = profile.n();
    let all = permutations(n);
    all.iter()
        .filter(|m| {
            !all.iter().any(|other| {
                let weakly = (0..n).all(|i| profile.prefs()[i].weakly_prefers(ObjectId(other[i]), ObjectId(m[i])));
                let strictly =
                    (0..n).any(|i| profile.prefs()[i].strictly_prefers(ObjectId(other[i]), ObjectId(m[i])));
                weakly && strictly
            })
        })
        .cloned()
        .collect()
}

#[test]
fn detects_the_swap_between_agents_one_and_three() {
    let profile = double_prime();
    let cycle = detect_trading_cycle(&cycle_fixture(), &profile).unwrap();
    assert_eq!(cycle.display(&profile).to_string(), "b -> (1) -> a -> (3) -> b [strict at 1]");
    assert_eq!(cycle.validate(&cycle_fixture(), &profile), Ok(()));
    assert!(!is_sd_efficient(&cycle_fixture(), &profile));
    assert!(brute_force_has_cycle(&cycle_fixture(), &profile));
}

#[test]
fn ps_outcome_and_top_choices_are_efficient() {
    let profile = strict_base();
    let (p, _) = ps(&profile).unwrap();
    assert!(detect_trading_cycle(&p, &profile).is_none());
    assert!(!brute_force_has_cycle(&p, &profile));

    let tops = Profile::strict(&[&[0, 1, 2], &[1, 2, 0], &[2, 0, 1]]).unwrap();
    assert!(is_sd_efficient(&Assignment::identity(3), &tops));
}

#[test]
fn full_indifference_has_no_strict_edges() {
    let profile = parse_profile("1: a ~ b ~ c\n2: a ~ b ~ c\n3: a ~ b ~ c").unwrap();
    let graph = TradeGraph::new(&uniform(3), &profile);
    assert!(graph.edges.iter().all(|e| !e.strict));
    assert!(is_sd_efficient(&uniform(3), &profile));
    assert_eq!(enumerate_pareto_optimal_discrete(&profile).unwrap().len(), 6);
    assert!(is_ex_post_efficient(&uniform(3), &profile).unwrap().is_efficient());
}

#[test]
fn trade_graph_edges_follow_support_and_preferences() {
    let profile = double_prime();
    let graph = TradeGraph::new(&cycle_fixture(), &profile);
    for e in &graph.edges {
        assert!(cycle_fixture().get(e.agent, e.from).is_positive());
        let pref = profile.pref(e.agent);
        assert!(pref.weakly_prefers(e.to, e.from));
        assert_eq!(e.strict, pref.strictly_prefers(e.to, e.from));
    }
    // b→a by 1 (strict), a→b and b→a by 3, c→a by 2 (strict)
    assert_eq!(graph.edges.len(), 4);
}

#[test]
fn minimal_cycle_is_a_fixed_point() {
    let profile = double_prime();
    let cycle = TradingCycle::from_sequence(&[1, 0], &[0, 2], &profile);
    let reduced = reduce_trading_cycle(&cycle, &cycle_fixture(), &profile).unwrap();
    assert_eq!(reduced, cycle);
}

#[test]
fn repeated_object_is_cut_out() {
    // 1: a > b > c, 2: c > b > a, 3: b > a > c, every entry positive
    let profile = Profile::strict(&[&[0, 1, 2], &[2, 1, 0], &[1, 0, 2]]).unwrap();
    let cycle = TradingCycle::from_sequence(&[1, 0, 1, 2], &[0, 2, 1, 0], &profile);
    assert_eq!(cycle.validate(&uniform(3), &profile), Ok(()));
    let reduced = reduce_trading_cycle(&cycle, &uniform(3), &profile).unwrap();
    assert!(reduced.len() <= 3);
    assert!(reduced.is_simple());
    assert_eq!(reduced.validate(&uniform(3), &profile), Ok(()));
}

#[test]
fn repeated_agent_without_strict_steps_is_rerouted() {
    // agent 1 is indifferent everywhere and appears twice; agent 2 supplies the strict step
    let profile = parse_profile("1: a ~ b ~ c\n2: c > b > a\n3: a > b > c").unwrap();
    let cycle = TradingCycle::from_sequence(&[0, 1, 2], &[0, 1, 0], &profile);
    assert_eq!(cycle.validate(&uniform(3), &profile), Ok(()));
    let reduced = reduce_trading_cycle(&cycle, &uniform(3), &profile).unwrap();
    assert_eq!(reduced.agents().iter().filter(|a| a.0 == 0).count(), 1);
    assert!(reduced.steps.iter().any(|s| s.strict));
    assert!(reduced.is_simple());
    assert_eq!(reduced.validate(&uniform(3), &profile), Ok(()));
    assert_eq!(reduced.display(&profile).to_string(), "c -> (1) -> b -> (2) -> c [strict at 2]");
}

#[test]
fn invalid_cycles_are_rejected() {
    let profile = double_prime();
    let backwards = TradingCycle::from_sequence(&[0, 1], &[0, 2], &profile);
    assert!(matches!(
        reduce_trading_cycle(&backwards, &cycle_fixture(), &profile),
        Err(EfficiencyError::InvalidCycle(_))
    ));
    let unheld = TradingCycle::from_sequence(&[1, 0], &[1, 2], &profile);
    assert!(unheld.validate(&cycle_fixture(), &profile).is_err());
    let weak_only = TradingCycle::from_sequence(&[0, 1], &[2, 2], &profile);
    assert!(weak_only.validate(&cycle_fixture(), &profile).is_err());
}

#[test]
fn pareto_optimal_matchings_match_pairwise_domination() {
    let profile = strict_base();
    let po: Vec<Vec<usize>> =
        enumerate_pareto_optimal_discrete(&profile).unwrap().iter().map(|m| m.objects().to_vec()).collect();
    assert_eq!(po, brute_force_po(&profile));
    // whoever gets a, the other two split b and c without a profitable swap
    assert_eq!(po, vec![vec![0, 2, 1], vec![1, 0, 2], vec![1, 2, 0], vec![2, 0, 1]]);

    let single = Profile::strict(&[&[0]]).unwrap();
    assert_eq!(enumerate_pareto_optimal_discrete(&single).unwrap().len(), 1);

    let tops = Profile::strict(&[&[0, 1, 2], &[1, 2, 0], &[2, 0, 1]]).unwrap();
    assert_eq!(
        enumerate_pareto_optimal_discrete(&tops).unwrap().iter().map(|m| m.objects().to_vec()).collect::<Vec<_>>(),
        brute_force_po(&tops)
    );
}

#[test]
fn pareto_optimality_agrees_with_brute_force_on_all_weak_three_agent_profiles() {
    let orders = enumerate_weak_orders(3).unwrap();
    for x in &orders {
        for y in &orders {
            for z in &orders {
                let profile = Profile::with_default_labels(vec![x.clone(), y.clone(), z.clone()]).unwrap();
                let po: Vec<Vec<usize>> = enumerate_pareto_optimal_discrete(&profile)
                    .unwrap()
                    .iter()
                    .map(|m| m.objects().to_vec())
                    .collect();
                assert_eq!(po, brute_force_po(&profile));
                assert!(!po.is_empty());
            }
        }
    }
}

#[test]
fn ps_outcome_decomposes_over_pareto_optimal_matchings() {
    let profile = strict_base();
    let (p, _) = ps(&profile).unwrap();
    let verdict = is_ex_post_efficient(&p, &profile).unwrap();
    let decomposition = verdict.decomposition().unwrap();
    assert!(decomposition.len() <= 6);
    assert_eq!(decomposition.iter().map(|w| w.weight.clone()).sum::<Rational>(), q(1, 1));
    assert_eq!(recompose(decomposition).unwrap(), p);
    let po = enumerate_pareto_optimal_discrete(&profile).unwrap();
    assert!(decomposition.iter().all(|w| po.iter().any(|m| m.objects() == w.matching.as_slice())));
}

#[test]
fn cycle_fixture_is_not_ex_post_efficient() {
    let profile = double_prime();
    let p = cycle_fixture();
    let ExPostVerdict::NotEfficient { certificate } = is_ex_post_efficient(&p, &profile).unwrap() else {
        panic!("fixture should not decompose");
    };
    let po = enumerate_pareto_optimal_discrete(&profile).unwrap();
    assert!(certificate.verify(&decomposition_system(&p, &po)));
    let report = check_expost_sd_equivalence(&profile, &p).unwrap();
    assert!(!report.sd_efficient && !report.ex_post_efficient && report.agree);
}

#[test]
fn single_pareto_optimal_matching_has_weight_one() {
    let profile = strict_base();
    let m = DiscreteAssignment::new(vec![0, 2, 1]).unwrap();
    let verdict = is_ex_post_efficient(&m.to_assignment(), &profile).unwrap();
    assert_eq!(
        verdict.decomposition().unwrap(),
        &[WeightedMatching { matching: vec![0, 2, 1], weight: q(1, 1) }]
    );
}

#[test]
fn equivalence_needs_three_agents() {
    let profile = Profile::strict(&[&[0, 1], &[1, 0]]).unwrap();
    assert_eq!(
        check_expost_sd_equivalence(&profile, &Assignment::identity(2)),
        Err(EfficiencyError::NotThreeAgents(2))
    );
    assert_eq!(
        is_ex_post_efficient(&Assignment::identity(3), &profile),
        Err(EfficiencyError::Shape { expected: 2, got: 3 })
    );
}

#[test]
fn equivalence_holds_on_random_three_agent_instances() {
    let mut r = rng(2024);
    for _ in 0..1000 {
        let profile = random_weak_profile(&mut r, 3, 0.35);
        let p = random_doubly_stochastic(&mut r, 3);
        let report = check_expost_sd_equivalence(&profile, &p).unwrap();
        assert!(report.agree, "{}\n{}", profile.to_text(), p.to_text());
        if let Some(d) = &report.decomposition {
            assert_eq!(recompose(d).unwrap(), p);
        }
    }
}

#[test]
fn sd_efficiency_implies_ex_post_for_four_agents() {
    let mut r = rng(77);
    let mut checked = 0;
    for _ in 0..150 {
        let profile = random_weak_profile(&mut r, 4, 0.3);
        let p = random_doubly_stochastic(&mut r, 4);
        if is_sd_efficient(&p, &profile) {
            checked += 1;
            assert!(is_ex_post_efficient(&p, &profile).unwrap().is_efficient());
        }
        // efficient matchings themselves are always efficient lotteries
        let m = &enumerate_pareto_optimal_discrete(&profile).unwrap()[0];
        assert!(is_sd_efficient(&m.to_assignment(), &profile));
    }
    assert!(checked > 0);
}

#[test]
fn rsd_is_not_sd_efficient_for_four_agents() {
    let profile = parse_profile("1: a > b > c > d\n2: a > b > c > d\n3: b > a > d > c\n4: b > a > d > c").unwrap();
    let p = rsd(&profile).unwrap();
    let cycle = detect_trading_cycle(&p, &profile).unwrap();
    assert_eq!(cycle.validate(&p, &profile), Ok(()));
    assert!(is_ex_post_efficient(&p, &profile).unwrap().is_efficient());
}

#[test]
fn cycle_json_round_trip() {
    let profile = double_prime();
    let cycle = detect_trading_cycle(&cycle_fixture(), &profile).unwrap();
    let json = serde_json::to_string(&cycle).unwrap();
    assert_eq!(serde_json::from_str::<TradingCycle>(&json).unwrap(), cycle);
}

fn instance() -> impl Strategy<Value = (Profile, Assignment)> {
    (3usize..=4, any::<u64>()).prop_map(|(n, seed)| {
        let mut r = rng(seed);
        (random_weak_profile(&mut r, n, 0.3), random_doubly_stochastic(&mut r, n))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn detected_cycles_are_valid_and_simple((profile, p) in instance()) {
        if let Some(cycle) = detect_trading_cycle(&p, &profile) {
            prop_assert_eq!(cycle.validate(&p, &profile), Ok(()));
            prop_assert!(cycle.is_simple());
            prop_assert!(cycle.len() <= profile.n());
        }
        if profile.n() == 3 {
            prop_assert_eq!(detect_trading_cycle(&p, &profile).is_some(), brute_force_has_cycle(&p, &profile));
        }
    }

    #[test]
    fn long_cycles_reduce_to_simple_ones((profile, p) in instance(), repeats in 2usize..4, rotation in 0usize..8) {
        if let Some(cycle) = detect_trading_cycle(&p, &profile) {
            let mut steps: Vec<TradeStep> = (0..repeats).flat_map(|_| cycle.steps.iter().copied()).collect();
            let r = rotation % steps.len();
            steps.rotate_left(r);
            let long = TradingCycle { steps };
            prop_assert_eq!(long.validate(&p, &profile), Ok(()));
            let reduced = reduce_trading_cycle(&long, &p, &profile).unwrap();
            prop_assert_eq!(reduced.validate(&p, &profile), Ok(()));
            prop_assert!(reduced.is_simple());
            prop_assert!(reduced.len() <= profile.n());
        }
    }
}
