//! Dense max-flow over exact rationals (Edmonds–Karp). The eating networks
//! have a few dozen nodes at most, so an adjacency matrix is plenty.

use std::collections::VecDeque;

use crate::rational::Rational;

#[derive(Clone, Debug)]
pub(crate) struct FlowNetwork {
    cap: Vec<Vec<Rational>>,
    flow: Vec<Vec<Rational>>,
    blocked: Vec<bool>,
}

impl FlowNetwork {
    pub fn new(nodes: usize) -> Self {
        FlowNetwork {
            cap: vec![vec![Rational::zero(); nodes]; nodes],
            flow: vec![vec![Rational::zero(); nodes]; nodes],
            blocked: vec![false; nodes],
        }
    }

    pub fn len(&self) -> usize {
        self.cap.len()
    }

    pub fn set_capacity(&mut self, from: usize, to: usize, capacity: Rational) {
        self.cap[from][to] = capacity;
    }

    pub fn flow(&self, from: usize, to: usize) -> &Rational {
        &self.flow[from][to]
    }

    /// A blocked node is never used by augmenting paths or reachability.
    pub fn block(&mut self, node: usize) {
        self.blocked[node] = true;
    }

    fn residual(&self, from: usize, to: usize) -> Rational {
        // antiparallel edges are netted: pushing back cancels flow first
        &self.cap[from][to] - &self.flow[from][to] + &self.flow[to][from]
    }

    fn push(&mut self, from: usize, to: usize, amount: &Rational) {
        let back = self.flow[to][from].clone();
        if back >= *amount {
            self.flow[to][from] = back - amount;
        } else {
            self.flow[to][from] = Rational::zero();
            self.flow[from][to] += &(amount - &back);
        }
    }

    fn bfs_parents(&self, source: usize) -> Vec<Option<usize>> {
        let n = self.len();
        let mut parent = vec![None; n];
        let mut seen = vec![false; n];
        seen[source] = true;
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            for v in 0..n {
                if !seen[v] && !self.blocked[v] && self.residual(u, v).is_positive() {
                    seen[v] = true;
                    parent[v] = Some(u);
                    queue.push_back(v);
                }
            }
        }
        parent
    }

    /// Augments until no path remains; returns the added flow value.
    pub fn max_flow(&mut self, source: usize, sink: usize) -> Rational {
        let mut total = Rational::zero();
        loop {
            let parent = self.bfs_parents(source);
            if parent[sink].is_none() {
                return total;
            }
            let mut bottleneck: Option<Rational> = None;
            let mut v = sink;
            while let Some(u) = parent[v] {
                let r = self.residual(u, v);
                bottleneck = Some(match bottleneck {
                    Some(b) => b.min_of(r),
                    None => r,
                });
                v = u;
            }
            let amount = bottleneck.expect("path has at least one edge");
            let mut v = sink;
            while let Some(u) = parent[v] {
                self.push(u, v, &amount);
                v = u;
            }
            total += &amount;
        }
    }

    /// Nodes reachable from `from` in the residual graph.
    pub fn reachable_from(&self, from: usize) -> Vec<bool> {
        let n = self.len();
        let mut seen = vec![false; n];
        seen[from] = true;
        let mut stack = vec![from];
        while let Some(u) = stack.pop() {
            for v in 0..n {
                if !seen[v] && !self.blocked[v] && self.residual(u, v).is_positive() {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen
    }

    /// Whether `to` is reachable from `from` in the residual graph.
    pub fn reaches(&self, from: usize, to: usize) -> bool {
        self.reachable_from(from)[to]
    }
}
