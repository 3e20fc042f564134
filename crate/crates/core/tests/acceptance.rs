//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the process exits non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use assign_core::dominance::{sd_compare, sample_consistent_utility, SdComparison};
use assign_core::efficiency::{detect_trading_cycle, is_ex_post_efficient, is_sd_efficient, recompose, reduce_trading_cycle};
use assign_core::mechanisms::{eps, ps, rsd, AssignmentRule, Rule, TiePolicy};
use assign_core::preference::{AgentId, ObjectId, WeakOrder};
use assign_core::sampling::{random_doubly_stochastic, random_weak_order, random_weak_profile, rng};
use assign_core::strategyproofness::{
    all_manipulations, all_strict_profiles, impossibility_profiles, sweep_strict_profiles, verify_impossibility_theorem,
    ManipulationScope, Notion,
};
use assign_core::{parse_profile, q, Rational};
use rand::Rng;

type Check = Result<String, String>;

fn ensure(cond: bool, message: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(message.into())
    }
}

fn rows(entries: &[[(i64, i64); 3]]) -> Vec<Vec<Rational>> {
    entries.iter().map(|r| r.iter().map(|&(a, b)| q(a, b)).collect()).collect()
}

fn ps_golden_matrices() -> Check {
    let profiles = impossibility_profiles(3).map_err(|e| e.to_string())?;
    let base = ps(&profiles.strict_abc).map_err(|e| e.to_string())?.0;
    let prime = ps(&profiles.strict_bca).map_err(|e| e.to_string())?.0;
    let want_base = rows(&[[(1, 3), (1, 2), (1, 6)], [(1, 3), (0, 1), (2, 3)], [(1, 3), (1, 2), (1, 6)]]);
    let want_prime = rows(&[[(1, 2), (1, 4), (1, 4)], [(1, 2), (0, 1), (1, 2)], [(0, 1), (3, 4), (1, 4)]]);
    ensure(base.rows() == want_base.as_slice(), format!("ps(base) = {:?}", base.rows()))?;
    ensure(prime.rows() == want_prime.as_slice(), format!("ps(prime) = {:?}", prime.rows()))?;
    Ok("both matrices match entrywise".into())
}

fn theorem_verification() -> Check {
    let cert = verify_impossibility_theorem(3).map_err(|e| e.to_string())?;
    cert.revalidate().map_err(|e| e.to_string())?;
    ensure(cert.verified, "certificate not marked verified")?;
    ensure(cert.lower_bound == q(5, 6), format!("lower bound {}", cert.lower_bound))?;
    ensure(!cert.zero_proofs.is_empty(), "no zero-entry proofs")?;
    ensure(cert.row_identity.len() == 2, "row identity needs both one-sided refutations")?;
    for r in cert.row_identity.iter().chain(&cert.cases) {
        ensure(r.certificate.verify(&r.system), format!("certificate for `{}` does not verify", r.label))?;
    }
    ensure(cert.cases.len() >= 3, format!("only {} cases", cert.cases.len()))?;
    ensure(cert.to_text().trim_end().ends_with("all cases infeasible"), "transcript ending")?;
    Ok(format!("{} proof nodes, {} cases refuted, bound 5/6", cert.node_count(), cert.cases.len()))
}

fn theorem_padded() -> Check {
    for n in [4, 5] {
        let cert = verify_impossibility_theorem(n).map_err(|e| format!("n = {n}: {e}"))?;
        cert.revalidate().map_err(|e| format!("n = {n}: {e}"))?;
        ensure(cert.lower_bound == q(5, 6), format!("n = {n}: lower bound {}", cert.lower_bound))?;
    }
    Ok("n = 4 and n = 5 re-validated".into())
}

fn eps_manipulability() -> Check {
    let profiles = impossibility_profiles(3).map_err(|e| e.to_string())?;
    let rule = Rule::Eps(TiePolicy::Symmetric);
    let reports = vec![
        WeakOrder::strict(&[0, 1, 2]).unwrap(),
        WeakOrder::strict(&[1, 2, 0]).unwrap(),
        WeakOrder::from_classes(&[&[0, 1], &[2]]).unwrap(),
    ];
    let scope = ManipulationScope { agents: Some(vec![AgentId(2)]), misreports: Some(reports) };
    let mut found = 0;
    for p in [&profiles.strict_bca, &profiles.tied_ab] {
        let witnesses = all_manipulations(&rule, p, Notion::WeakSd, &scope, false)
            .map_err(|e| e.to_string())?;
        for w in &witnesses {
            let truthful = eps(p, TiePolicy::Symmetric);
            let lied = eps(&p.with_pref(AgentId(2), w.misreport.clone()), TiePolicy::Symmetric);
            let cmp = sd_compare(p.pref(AgentId(2)), lied.row(AgentId(2)), truthful.row(AgentId(2)))
                .map_err(|e| e.to_string())?;
            ensure(cmp == SdComparison::StrictlyDominates, "witness does not replay")?;
        }
        found += witnesses.len();
    }
    ensure(found >= 1, "no witness")?;
    Ok(format!("{found} witness(es)"))
}

fn extension_property() -> Check {
    let profiles = all_strict_profiles(3).map_err(|e| e.to_string())?;
    ensure(profiles.len() == 216, format!("{} profiles", profiles.len()))?;
    for p in &profiles {
        let want = ps(p).map_err(|e| e.to_string())?.0;
        ensure(eps(p, TiePolicy::Symmetric) == want, format!("eps differs from ps on\n{}", p.to_text()))?;
    }
    Ok("eps = ps on 216 profiles".into())
}

const EQUIVALENCE_INSTANCES: usize = 1000;

fn equivalence_and_reduction() -> (Check, Check) {
    let mut r = rng(2024);
    let mut disagreements = Vec::new();
    let mut cycles = 0;
    let mut bad_reductions = Vec::new();
    for i in 0..EQUIVALENCE_INSTANCES {
        let profile = random_weak_profile(&mut r, 3, 0.4);
        let p = random_doubly_stochastic(&mut r, 3);
        let sd = is_sd_efficient(&p, &profile);
        let ex_post = match is_ex_post_efficient(&p, &profile) {
            Ok(v) => v,
            Err(e) => return (Err(e.to_string()), Err("skipped".into())),
        };
        if let Some(d) = ex_post.decomposition() {
            if recompose(d).as_ref() != Some(&p) {
                disagreements.push(format!("instance {i}: decomposition does not recompose"));
            }
        }
        if sd != ex_post.is_efficient() {
            disagreements.push(format!("instance {i}: sd {sd}, ex post {}", ex_post.is_efficient()));
        }
        if let Some(cycle) = detect_trading_cycle(&p, &profile) {
            cycles += 1;
            match reduce_trading_cycle(&cycle, &p, &profile) {
                Ok(c) if c.validate(&p, &profile).is_ok() && c.is_simple() && c.len() <= 3 => {}
                Ok(c) => bad_reductions.push(format!("instance {i}: {}", c.display(&profile))),
                Err(e) => bad_reductions.push(format!("instance {i}: {e}")),
            }
        }
    }
    let equivalence = if disagreements.is_empty() {
        Ok(format!("{EQUIVALENCE_INSTANCES} instances, 100% agreement, {cycles} with cycles"))
    } else {
        Err(format!("{} disagreements, first: {}", disagreements.len(), disagreements[0]))
    };
    let reduction = if !bad_reductions.is_empty() {
        Err(format!("{} bad reductions, first: {}", bad_reductions.len(), bad_reductions[0]))
    } else if cycles == 0 {
        Err("no instance had a cycle".into())
    } else {
        Ok(format!("{cycles} cycles reduced to simple cycles of size <= 3"))
    };
    (equivalence, reduction)
}

fn strict_sweeps() -> Check {
    let ps_report = sweep_strict_profiles(&Rule::Ps, 3, Notion::WeakSd).map_err(|e| e.to_string())?;
    let rsd_report = sweep_strict_profiles(&Rule::Rsd, 3, Notion::Sd).map_err(|e| e.to_string())?;
    for report in [&ps_report, &rsd_report] {
        ensure(report.profiles == 216 && report.checks == 216 * 3 * 5, format!("coverage {report:?}"))?;
    }
    ensure(ps_report.violations == 0, format!("ps: {} weak-SD violations", ps_report.violations))?;
    ensure(rsd_report.violations == 0, format!("rsd: {} SD violations", rsd_report.violations))?;
    Ok(format!("{} checks each, 0 witnesses", ps_report.checks))
}

fn rsd_inefficiency() -> Check {
    let profile = parse_profile("1: a > b > c > d\n2: a > b > c > d\n3: b > a > d > c\n4: b > a > d > c")
        .map_err(|e| e.to_string())?;
    let p = rsd(&profile).map_err(|e| e.to_string())?;
    let cycle = detect_trading_cycle(&p, &profile).ok_or("rsd outcome has no trading cycle")?;
    cycle.validate(&p, &profile).map_err(|e| e.to_string())?;
    let shown = cycle.display(&profile).to_string();
    for strict in all_strict_profiles(3).map_err(|e| e.to_string())? {
        let p = Rule::Rsd.assign(&strict).map_err(|e| e.to_string())?;
        let v = is_ex_post_efficient(&p, &strict).map_err(|e| e.to_string())?;
        let d = v.decomposition().ok_or_else(|| format!("rsd not ex post efficient on\n{}", strict.to_text()))?;
        ensure(recompose(d).as_ref() == Some(&p), "decomposition does not recompose")?;
    }
    Ok(format!("cycle {shown}; ex post efficient on 216 strict profiles"))
}

fn random_row<R: Rng>(r: &mut R, n: usize) -> Vec<Rational> {
    let weights: Vec<i64> = (0..n).map(|_| if r.gen_bool(0.25) { 0 } else { r.gen_range(1..=12) }).collect();
    let total: i64 = weights.iter().sum();
    if total == 0 {
        return (0..n).map(|i| if i == 0 { q(1, 1) } else { q(0, 1) }).collect();
    }
    weights.iter().map(|&w| q(w, total)).collect()
}

/// Moves some mass from a lower indifference class to a strictly higher one.
fn improve<R: Rng>(r: &mut R, pref: &WeakOrder, row: &[Rational]) -> Vec<Rational> {
    let classes = pref.classes();
    let mut out = row.to_vec();
    if classes.len() < 2 {
        return out;
    }
    let donors: Vec<usize> = (0..row.len()).filter(|&o| row[o].is_positive() && pref.class_of(ObjectId(o)) > 0).collect();
    let Some(&from) = donors.get(r.gen_range(0..donors.len().max(1))) else { return out };
    let upper = pref.class_of(ObjectId(from));
    let to_class = r.gen_range(0..upper);
    let to = classes[to_class][r.gen_range(0..classes[to_class].len())].0;
    let share = &row[from] * &q(r.gen_range(1..=4), 4);
    out[from] = &out[from] - &share;
    out[to] = &out[to] + &share;
    out
}

const TRIPLES: usize = 500;
const UTILITIES: u64 = 100;

fn dominance_utility_coherence() -> Check {
    let mut r = rng(99);
    let mut dominating = 0;
    for t in 0..TRIPLES {
        let n = r.gen_range(2..=5);
        let pref = random_weak_order(&mut r, n, 0.35);
        let q_row = random_row(&mut r, n);
        let p_row = if t % 2 == 0 { improve(&mut r, &pref, &q_row) } else { random_row(&mut r, n) };
        let cmp = sd_compare(&pref, &p_row, &q_row).map_err(|e| e.to_string())?;
        if cmp != SdComparison::StrictlyDominates {
            continue;
        }
        dominating += 1;
        for s in 0..UTILITIES {
            let u = sample_consistent_utility(&pref, (t as u64) * UTILITIES + s);
            ensure(u.is_consistent_with(&pref), "sampled utility inconsistent")?;
            ensure(
                u.expected(&p_row) > u.expected(&q_row),
                format!("triple {t}: dominating row has lower expected utility"),
            )?;
        }
    }
    ensure(dominating > 0, "no dominating pairs generated")?;
    Ok(format!("{TRIPLES} triples, {dominating} strict dominations, no contradiction"))
}

struct Runner {
    failures: usize,
}

impl Runner {
    fn report(&mut self, id: &str, name: &str, limit: Duration, elapsed: Duration, result: Check) {
        let outcome = match result {
            Ok(detail) if elapsed < limit => Ok(detail),
            Ok(detail) => Err(format!("{detail}; took {elapsed:.2?}, limit {limit:?}")),
            Err(e) => Err(e),
        };
        match outcome {
            Ok(detail) => println!("PASS {id} {name} ({elapsed:.2?}): {detail}"),
            Err(e) => {
                self.failures += 1;
                println!("FAIL {id} {name} ({elapsed:.2?}): {e}");
            }
        }
    }

    fn run(&mut self, id: &str, name: &str, limit: Duration, f: impl FnOnce() -> Check) {
        let start = Instant::now();
        let result = f();
        self.report(id, name, limit, start.elapsed(), result);
    }
}

fn main() -> ExitCode {
    let secs = Duration::from_secs;
    let mut runner = Runner { failures: 0 };
    runner.run("1", "ps golden matrices", secs(1), ps_golden_matrices);
    runner.run("2", "theorem verification", secs(1), theorem_verification);
    runner.run("2", "theorem verification, padded n = 4, 5", secs(10), theorem_padded);
    runner.run("3", "eps weak-SD manipulability", secs(5), eps_manipulability);
    runner.run("4", "eps extends ps on strict profiles", secs(10), extension_property);

    let start = Instant::now();
    let (equivalence, reduction) = equivalence_and_reduction();
    let elapsed = start.elapsed();
    runner.report("5", "sd-efficiency equals ex post efficiency", secs(60), elapsed, equivalence);
    runner.report("6", "trading cycles reduce to size <= n", Duration::MAX, elapsed, reduction);

    runner.run("7", "strict-domain strategyproofness sweeps", secs(120), strict_sweeps);
    runner.run("8", "rsd inefficiency and ex post efficiency", secs(300), rsd_inefficiency);
    runner.run("9", "dominance agrees with expected utility", secs(60), dominance_utility_coherence);

    if runner.failures == 0 {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {} criteria failed", runner.failures);
        ExitCode::FAILURE
    }
}
