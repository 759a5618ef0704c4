//! Primal network simplex for the dense transportation problem.
//!
//! Sources `0..m` ship `supply[i]` to sinks `0..n` demanding `demand[j]`
//! along arcs `i -> j` of cost `cost[i * n + j]`. The starting basis routes
//! everything through an artificial root with prohibitively expensive arcs,
//! which makes it strongly feasible; the leaving-arc tie rule keeps it so
//! and rules out cycling on degenerate pivots. Entering arcs are chosen by
//! block search.

use std::collections::VecDeque;

use crate::{Error, Result};

#[derive(Debug, Clone)]
pub(crate) struct TransportSolution {
    /// `(source, sink, flow)` for every arc with positive flow.
    pub flows: Vec<(usize, usize, f64)>,
    pub cost: f64,
    /// Node potentials; `cost[i][j] + pi[i] - pi[m + j] >= 0` at optimum.
    pub pi: Vec<f64>,
}

struct Network<'a> {
    m: usize,
    n: usize,
    cost: &'a [f64],
    art_cost: f64,
    root: usize,
    flow: Vec<f64>,
    adjacency: Vec<Vec<usize>>,
    parent: Vec<usize>,
    pred: Vec<usize>,
    /// `up[v]`: the tree arc `pred[v]` points from `v` to its parent.
    up: Vec<bool>,
    depth: Vec<usize>,
    pi: Vec<f64>,
}

impl Network<'_> {
    fn real_arcs(&self) -> usize {
        self.m * self.n
    }

    fn tail(&self, a: usize) -> usize {
        let e = self.real_arcs();
        if a < e {
            a / self.n
        } else if a - e < self.m {
            a - e
        } else {
            self.root
        }
    }

    fn head(&self, a: usize) -> usize {
        let e = self.real_arcs();
        if a < e {
            self.m + a % self.n
        } else if a - e < self.m {
            self.root
        } else {
            a - e
        }
    }

    fn arc_cost(&self, a: usize) -> f64 {
        if a < self.real_arcs() {
            self.cost[a]
        } else {
            self.art_cost
        }
    }

    fn reduced_cost(&self, a: usize) -> f64 {
        self.arc_cost(a) + self.pi[self.tail(a)] - self.pi[self.head(a)]
    }

    /// Rebuilds parent, depth and potentials by breadth-first search from
    /// the root.
    fn rebuild_tree(&mut self) {
        let nodes = self.m + self.n + 1;
        let mut seen = vec![false; nodes];
        let mut queue = VecDeque::with_capacity(nodes);
        seen[self.root] = true;
        self.depth[self.root] = 0;
        self.pi[self.root] = 0.0;
        self.parent[self.root] = self.root;
        queue.push_back(self.root);
        while let Some(u) = queue.pop_front() {
            for k in 0..self.adjacency[u].len() {
                let a = self.adjacency[u][k];
                let (t, h) = (self.tail(a), self.head(a));
                let v = if t == u { h } else { t };
                if seen[v] {
                    continue;
                }
                seen[v] = true;
                self.parent[v] = u;
                self.pred[v] = a;
                self.depth[v] = self.depth[u] + 1;
                if t == u {
                    self.up[v] = false;
                    self.pi[v] = self.pi[u] + self.arc_cost(a);
                } else {
                    self.up[v] = true;
                    self.pi[v] = self.pi[u] - self.arc_cost(a);
                }
                queue.push_back(v);
            }
        }
    }

    fn join(&self, mut u: usize, mut v: usize) -> usize {
        while u != v {
            if self.depth[u] >= self.depth[v] {
                u = self.parent[u];
            } else {
                v = self.parent[v];
            }
        }
        u
    }

    /// Pushes flow around the cycle closed by `entering` and swaps the
    /// blocking arc out of the basis.
    fn pivot(&mut self, entering: usize) {
        let u_in = self.tail(entering);
        let v_in = self.head(entering);
        let join = self.join(u_in, v_in);

        // Blocking arc: strict on the u_in side, non-strict on the v_in side,
        // which selects the last blocking arc met when walking the cycle from
        // the join in its orientation.
        let mut delta = f64::INFINITY;
        let mut u_out = usize::MAX;
        let mut u = u_in;
        while u != join {
            if self.up[u] && self.flow[self.pred[u]] < delta {
                delta = self.flow[self.pred[u]];
                u_out = u;
            }
            u = self.parent[u];
        }
        let mut u = v_in;
        while u != join {
            if !self.up[u] && self.flow[self.pred[u]] <= delta {
                delta = self.flow[self.pred[u]];
                u_out = u;
            }
            u = self.parent[u];
        }
        debug_assert!(u_out != usize::MAX, "artificial arcs bound every cycle");

        if delta > 0.0 {
            self.flow[entering] += delta;
            let mut u = u_in;
            while u != join {
                let a = self.pred[u];
                self.flow[a] += if self.up[u] { -delta } else { delta };
                u = self.parent[u];
            }
            let mut u = v_in;
            while u != join {
                let a = self.pred[u];
                self.flow[a] += if self.up[u] { delta } else { -delta };
                u = self.parent[u];
            }
        }

        let leaving = self.pred[u_out];
        self.flow[leaving] = 0.0;
        for node in [self.tail(leaving), self.head(leaving)] {
            let list = &mut self.adjacency[node];
            let pos = list.iter().position(|&a| a == leaving).expect("leaving arc is in the tree");
            list.swap_remove(pos);
        }
        self.adjacency[u_in].push(entering);
        self.adjacency[v_in].push(entering);
        self.rebuild_tree();
    }
}

pub(crate) fn solve_transport(supply: &[f64], demand: &[f64], cost: &[f64]) -> Result<TransportSolution> {
    let (m, n) = (supply.len(), demand.len());
    if m == 0 || n == 0 || cost.len() != m * n {
        return Err(Error::Solver(format!("bad problem shape {m}x{n} with {} costs", cost.len())));
    }
    let max_cost = cost.iter().copied().fold(0.0, f64::max);
    if !max_cost.is_finite() || cost.iter().any(|&c| c < 0.0) {
        return Err(Error::Solver("costs must be finite and nonnegative".into()));
    }
    let nodes = m + n + 1;
    let root = m + n;
    let e = m * n;
    let mut net = Network {
        m,
        n,
        cost,
        art_cost: (max_cost + 1.0) * nodes as f64,
        root,
        flow: vec![0.0; e + m + n],
        adjacency: vec![Vec::new(); nodes],
        parent: vec![root; nodes],
        pred: vec![usize::MAX; nodes],
        up: vec![false; nodes],
        depth: vec![0; nodes],
        pi: vec![0.0; nodes],
    };
    for (i, &s) in supply.iter().enumerate() {
        net.flow[e + i] = s;
        net.adjacency[i].push(e + i);
        net.adjacency[root].push(e + i);
    }
    for (j, &d) in demand.iter().enumerate() {
        net.flow[e + m + j] = d;
        net.adjacency[m + j].push(e + m + j);
        net.adjacency[root].push(e + m + j);
    }
    net.rebuild_tree();

    let eps = 1e-12 * net.art_cost;
    let block = ((e as f64).sqrt().ceil() as usize).max(10).min(e);
    let mut next_arc = 0;
    let max_pivots = 50 * nodes * nodes + 10_000;
    let mut pivots = 0;
    loop {
        // block search for the most negative reduced cost
        let mut best = usize::MAX;
        let mut min = -eps;
        let mut in_block = 0;
        let mut a = next_arc;
        for _ in 0..e {
            let c = net.reduced_cost(a);
            if c < min {
                min = c;
                best = a;
            }
            a += 1;
            if a == e {
                a = 0;
            }
            in_block += 1;
            if in_block == block {
                if best != usize::MAX {
                    break;
                }
                in_block = 0;
            }
        }
        if best == usize::MAX {
            break;
        }
        next_arc = a;
        net.pivot(best);
        pivots += 1;
        if pivots > max_pivots {
            return Err(Error::Solver(format!("no convergence after {pivots} pivots")));
        }
    }

    let flows: Vec<(usize, usize, f64)> = (0..e)
        .filter(|&a| net.flow[a] > 0.0)
        .map(|a| (a / n, a % n, net.flow[a]))
        .collect();
    let total: f64 = flows.iter().map(|&(i, j, f)| cost[i * n + j] * f).sum();
    Ok(TransportSolution { flows, cost: total, pi: net.pi })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two() {
        // cheapest: 0 -> 0 and 1 -> 1
        let sol = solve_transport(&[0.5, 0.5], &[0.5, 0.5], &[0.0, 1.0, 1.0, 0.0]).unwrap();
        assert_eq!(sol.cost, 0.0);
        let sol = solve_transport(&[1.0, 0.0], &[0.25, 0.75], &[1.0, 2.0, 0.0, 0.0]).unwrap();
        assert!((sol.cost - 1.75).abs() < 1e-15);
    }

    #[test]
    fn degenerate_ties_terminate() {
        // equal masses everywhere produce many degenerate pivots
        let m = 12;
        let s = vec![1.0 / m as f64; m];
        let cost: Vec<f64> = (0..m * m).map(|a| (((a / m) as f64) - ((a % m) as f64)).abs()).collect();
        let sol = solve_transport(&s, &s, &cost).unwrap();
        assert!(sol.cost.abs() < 1e-12);
    }
}
