use assign_core::efficiency::{detect_trading_cycle, is_ex_post_efficient};
use assign_core::mechanisms::{eps, TiePolicy};
use assign_core::preference::enumerate_weak_orders;
use assign_core::Profile;

fn all_weak_profiles() -> Vec<Profile> {
    let orders = enumerate_weak_orders(3).unwrap();
    let mut out = Vec::new();
    for a in &orders {
        for b in &orders {
            for c in &orders {
                out.push(Profile::with_default_labels(vec![a.clone(), b.clone(), c.clone()]).unwrap());
            }
        }
    }
    out
}

#[test]
fn eps_is_sd_efficient_on_every_weak_profile() {
    let profiles = all_weak_profiles();
    assert_eq!(profiles.len(), 13 * 13 * 13);
    for policy in [TiePolicy::Symmetric, TiePolicy::Lexicographic] {
        for p in &profiles {
            let a = eps(p, policy);
            if let Some(c) = detect_trading_cycle(&a, p) {
                panic!("{policy:?} on\n{}has cycle {}", p.to_text(), c.display(p));
            }
        }
    }
}

#[test]
fn eps_is_ex_post_efficient_on_a_slice_of_weak_profiles() {
    for p in all_weak_profiles().iter().step_by(17) {
        let a = eps(p, TiePolicy::Symmetric);
        assert!(is_ex_post_efficient(&a, p).unwrap().is_efficient(), "{}", p.to_text());
    }
}
