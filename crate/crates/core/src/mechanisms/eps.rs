//! Extended probabilistic serial for weak preferences.
//!
//! All agents eat at unit speed. During a phase each agent eats from its
//! demand set, the best indifference class among objects that are not yet
//! exhausted. The phase length is the largest `t` for which the cumulative
//! eating so far stays feasible, i.e. the transportation network
//!
//! ```text
//! source --demand--> (agent, phase) --∞--> object --1--> sink
//! ```
//!
//! still carries all demand. The binding constraint is a bottleneck set of
//! agents whose demand sets are too small; its objects become exhausted.
//! `t` is found by iterating on minimum cuts: from a cut at the current
//! guess, `(|objects on the source side| − fixed demand on the source side)
//! / (current-phase nodes on the source side)` is the next, smaller guess.
//!
//! Which object an agent ate within its demand set is only pinned down at
//! the end, once, over the whole cumulative network; see [`TiePolicy`].

use serde::{Deserialize, Serialize};

use crate::assignment::{validate_assignment, Assignment};
use crate::preference::{permutations, ObjectId};
use crate::profile::Profile;
use crate::rational::Rational;

use super::flow::FlowNetwork;
use super::ps::{EatingInterval, EatingTrace};

/// How to pick among equally valid eating plans.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TiePolicy {
    /// Average of the lexicographic plans over every order of the agents
    /// whose plan is not forced. Treats agents symmetrically.
    #[default]
    Symmetric,
    /// Agents in index order, each (per phase) taking as much as possible of
    /// its lowest-index demanded object first.
    Lexicographic,
}

#[derive(Clone, Debug)]
struct DemandNode {
    agent: usize,
    demand: Rational,
    objects: Vec<ObjectId>,
}

struct Layout {
    nodes: usize,
    objects: usize,
}

impl Layout {
    const SOURCE: usize = 0;
    fn node(&self, k: usize) -> usize {
        1 + k
    }
    fn object(&self, o: usize) -> usize {
        1 + self.nodes + o
    }
    fn sink(&self) -> usize {
        1 + self.nodes + self.objects
    }
}

fn build_network(nodes: &[DemandNode], n: usize) -> (FlowNetwork, Layout) {
    let layout = Layout { nodes: nodes.len(), objects: n };
    let mut net = FlowNetwork::new(layout.sink() + 1);
    let unbounded = Rational::from_integer(n as i64 + 1);
    for (k, node) in nodes.iter().enumerate() {
        net.set_capacity(Layout::SOURCE, layout.node(k), node.demand.clone());
        for o in &node.objects {
            net.set_capacity(layout.node(k), layout.object(o.0), unbounded.clone());
        }
    }
    for o in 0..n {
        net.set_capacity(layout.object(o), layout.sink(), Rational::one());
    }
    (net, layout)
}

pub fn eps(profile: &Profile, policy: TiePolicy) -> Assignment {
    eps_with_trace(profile, policy).0
}

pub fn eps_with_trace(profile: &Profile, policy: TiePolicy) -> (Assignment, EatingTrace) {
    let n = profile.n();
    let mut available = vec![true; n];
    let mut nodes: Vec<DemandNode> = Vec::new();
    let mut phases: Vec<(Rational, Rational, usize)> = Vec::new();
    let mut time = Rational::zero();
    let mut plan: Vec<Vec<Rational>> = Vec::new();

    while time < 1 {
        let first = nodes.len();
        for (agent, pref) in profile.prefs().iter().enumerate() {
            let objects = pref.top_among(&available);
            debug_assert!(!objects.is_empty(), "an object is left while time < 1");
            nodes.push(DemandNode { agent, demand: Rational::zero(), objects });
        }
        let fixed: Rational = nodes[..first].iter().map(|d| &d.demand).sum();

        let mut step = Rational::one() - &time;
        let (net, layout) = loop {
            for node in &mut nodes[first..] {
                node.demand = step.clone();
            }
            let (mut net, layout) = build_network(&nodes, n);
            let total = &fixed + &(&step * Rational::from_integer(n as i64));
            let value = net.max_flow(Layout::SOURCE, layout.sink());
            if value == total {
                break (net, layout);
            }
            let side = net.reachable_from(Layout::SOURCE);
            let objects_in = (0..n).filter(|&o| side[layout.object(o)]).count() as i64;
            let fixed_in: Rational =
                (0..first).filter(|&k| side[layout.node(k)]).map(|k| &nodes[k].demand).sum();
            let current_in = (first..nodes.len()).filter(|&k| side[layout.node(k)]).count() as i64;
            assert!(current_in > 0, "history alone is always feasible");
            let next = (Rational::from_integer(objects_in) - fixed_in) / Rational::from_integer(current_in);
            assert!(next < step && next.is_positive(), "cut iteration must strictly shrink a positive step");
            step = next;
        };

        let mut residual = net;
        residual.block(Layout::SOURCE);
        for o in 0..n {
            if available[o] && !residual.reaches(layout.object(o), layout.sink()) {
                available[o] = false;
            }
        }
        plan = (0..nodes.len())
            .map(|k| (0..n).map(|o| residual.flow(layout.node(k), layout.object(o)).clone()).collect())
            .collect();
        let end = &time + &step;
        phases.push((time, end.clone(), first));
        time = end;
    }

    let plan = match policy {
        TiePolicy::Lexicographic => {
            let order: Vec<usize> = (0..n).collect();
            lexicographic_plan(&nodes, plan, &order, n)
        }
        TiePolicy::Symmetric => symmetric_plan(&nodes, plan, n),
    };

    let mut matrix = vec![vec![Rational::zero(); n]; n];
    for (node, row) in nodes.iter().zip(&plan) {
        for (o, x) in row.iter().enumerate() {
            matrix[node.agent][o] += x;
        }
    }
    let trace = EatingTrace {
        intervals: phases
            .iter()
            .map(|(start, end, first)| {
                let duration = end - start;
                let batch = &nodes[*first..*first + n];
                EatingInterval {
                    start: start.clone(),
                    end: end.clone(),
                    eating: batch.iter().map(|d| d.objects.clone()).collect(),
                    consumption_rates: (0..n)
                        .map(|o| {
                            let eaten: Rational = plan[*first..*first + n].iter().map(|r| &r[o]).sum();
                            eaten / &duration
                        })
                        .collect(),
                }
            })
            .collect(),
    };
    let assignment = validate_assignment(matrix).expect("eating plans are doubly stochastic");
    (assignment, trace)
}

/// Whether another plan with the same node demands exists: a cycle in the
/// bipartite graph that raises some pairs and lowers positive ones.
fn plan_is_unique(nodes: &[DemandNode], plan: &[Vec<Rational>], n: usize) -> bool {
    let m = nodes.len();
    // node k -> object o when o is demanded; object o -> node k when plan[k][o] > 0
    let reaches_without_direct = |start: usize, target_obj: usize| -> bool {
        let mut seen_nodes = vec![false; m];
        let mut seen_objs = vec![false; n];
        seen_nodes[start] = true;
        let mut stack: Vec<(bool, usize)> = vec![(true, start)];
        while let Some((is_node, v)) = stack.pop() {
            if is_node {
                for o in &nodes[v].objects {
                    if v == start && o.0 == target_obj {
                        continue;
                    }
                    if o.0 == target_obj {
                        return true;
                    }
                    if !seen_objs[o.0] {
                        seen_objs[o.0] = true;
                        stack.push((false, o.0));
                    }
                }
            } else {
                for k in 0..m {
                    if !seen_nodes[k] && plan[k][v].is_positive() {
                        seen_nodes[k] = true;
                        stack.push((true, k));
                    }
                }
            }
        }
        false
    };
    (0..m).all(|k| (0..n).all(|o| !plan[k][o].is_positive() || !reaches_without_direct(k, o)))
}

/// Lexicographic maximisation of the plan: for each pair `(node, object)` in
/// the order given, push as much as possible onto the pair while keeping all
/// earlier pairs fixed. Extra mass on a pair is routed as a circulation
/// through the pairs that are still free.
fn lexicographic_plan(
    nodes: &[DemandNode],
    mut plan: Vec<Vec<Rational>>,
    agent_order: &[usize],
    n: usize,
) -> Vec<Vec<Rational>> {
    let m = nodes.len();
    let mut rank = vec![0; n];
    for (position, &agent) in agent_order.iter().enumerate() {
        rank[agent] = position;
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by_key(|&k| (rank[nodes[k].agent], k));
    let mut frozen = vec![vec![false; n]; m];
    let unbounded = Rational::from_integer(n as i64 + 1);

    for &k in &order {
        for target in &nodes[k].objects {
            let o = target.0;
            let mut net = FlowNetwork::new(m + n);
            for (j, node) in nodes.iter().enumerate() {
                for obj in &node.objects {
                    if frozen[j][obj.0] || (j == k && obj.0 == o) {
                        continue;
                    }
                    net.set_capacity(j, m + obj.0, unbounded.clone());
                    net.set_capacity(m + obj.0, j, plan[j][obj.0].clone());
                }
            }
            let extra = net.max_flow(m + o, k);
            if extra.is_positive() {
                for (j, node) in nodes.iter().enumerate() {
                    for obj in &node.objects {
                        let up = net.flow(j, m + obj.0);
                        let down = net.flow(m + obj.0, j);
                        if !up.is_zero() || !down.is_zero() {
                            plan[j][obj.0] = &plan[j][obj.0] + up - down;
                        }
                    }
                }
                plan[k][o] += &extra;
            }
            frozen[k][o] = true;
        }
    }
    plan
}

fn symmetric_plan(nodes: &[DemandNode], plan: Vec<Vec<Rational>>, n: usize) -> Vec<Vec<Rational>> {
    if plan_is_unique(nodes, &plan, n) {
        return plan;
    }
    // Only agents with a non-singleton demand set can influence the result.
    let mut flexible: Vec<usize> = nodes
        .iter()
        .filter(|d| d.objects.len() > 1)
        .map(|d| d.agent)
        .collect();
    flexible.sort_unstable();
    flexible.dedup();
    let rigid: Vec<usize> = (0..n).filter(|a| !flexible.contains(a)).collect();

    let perms = permutations(flexible.len());
    let count = Rational::from_integer(perms.len() as i64);
    let mut total = vec![vec![Rational::zero(); n]; nodes.len()];
    for perm in &perms {
        let mut order: Vec<usize> = perm.iter().map(|&i| flexible[i]).collect();
        order.extend(&rigid);
        let lex = lexicographic_plan(nodes, plan.clone(), &order, n);
        for (acc, row) in total.iter_mut().zip(&lex) {
            for (a, x) in acc.iter_mut().zip(row) {
                *a += x;
            }
        }
    }
    total
        .into_iter()
        .map(|row| row.into_iter().map(|x| x / &count).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanisms::ps::ps;
    use crate::preference::enumerate_strict_orders;
    use crate::profile::parse_profile;
    use crate::rational::q;

    #[test]
    fn full_indifference_is_uniform_under_symmetric_policy() {
        let p = parse_profile("1: a ~ b ~ c\n2: a ~ b ~ c\n3: a ~ b ~ c").unwrap();
        let (a, trace) = eps_with_trace(&p, TiePolicy::Symmetric);
        assert!(a.rows().iter().flatten().all(|x| *x == q(1, 3)));
        assert_eq!(trace.intervals.len(), 1);
        assert!(trace.is_well_formed(3));

        let lex = eps(&p, TiePolicy::Lexicographic);
        assert_eq!(lex, Assignment::identity(3));
    }

    #[test]
    fn matches_ps_on_all_strict_three_agent_profiles() {
        let orders = enumerate_strict_orders(3);
        for a in &orders {
            for b in &orders {
                for c in &orders {
                    let p = Profile::with_default_labels(vec![a.clone(), b.clone(), c.clone()]).unwrap();
                    let expected = ps(&p).unwrap().0;
                    assert_eq!(eps(&p, TiePolicy::Symmetric), expected);
                    assert_eq!(eps(&p, TiePolicy::Lexicographic), expected);
                }
            }
        }
    }

    #[test]
    fn double_prime_profile() {
        let p = parse_profile("1: a > b > c\n2: a > c > b\n3: a ~ b > c").unwrap();
        let (a, trace) = eps_with_trace(&p, TiePolicy::Symmetric);
        // agent 3 is pushed off a by agents 1 and 2 and takes b first
        assert_eq!(
            a.rows(),
            &[
                vec![q(1, 2), q(1, 4), q(1, 4)],
                vec![q(1, 2), q(0, 1), q(1, 2)],
                vec![q(0, 1), q(3, 4), q(1, 4)],
            ]
        );
        let ends: Vec<Rational> = trace.intervals.iter().map(|i| i.end.clone()).collect();
        assert_eq!(ends, vec![q(1, 2), q(3, 4), q(1, 1)]);
        assert!(trace.is_well_formed(3));
    }

    #[test]
    fn two_agents_sharing_a_pair_split_evenly() {
        // agents 1 and 2 are indifferent between a and b, agent 3 only wants a
        let p = parse_profile("1: a ~ b > c\n2: a ~ b > c\n3: a > c > b").unwrap();
        let a = eps(&p, TiePolicy::Symmetric);
        assert_eq!(a.row(crate::preference::AgentId(0)), a.row(crate::preference::AgentId(1)));
        let lex = eps(&p, TiePolicy::Lexicographic);
        assert_ne!(lex.row(crate::preference::AgentId(0)), lex.row(crate::preference::AgentId(1)));
    }
}
