//! Primal network simplex specialised to the uncapacitated transportation problem.
//!
//! Nodes `0..m` are sources, `m..m + n` sinks and `m + n` an auxiliary root.
//! Arc `i * n + j` joins source `i` to sink `m + j`; arc `m * n` is a zero-cost
//! link from node 0 to the root that keeps the spanning tree rooted. The initial
//! basis comes from the north-west corner rule, so every pivot is between real arcs.
//! Tree bookkeeping (thread order, subtree sizes, last successors) follows the
//! classical LEMON implementation. Only tree arcs carry flow, so flows are stored
//! per node for the arc joining the node to its parent.

use std::fmt::Debug;
use std::ops::{Add, Sub};

use crate::scalar::Real;

pub(crate) trait Flow: Copy + PartialOrd + Debug + Add<Output = Self> + Sub<Output = Self> {
    fn zero_flow() -> Self;
    fn inf_flow() -> Self;
}

impl Flow for i64 {
    fn zero_flow() -> Self {
        0
    }
    fn inf_flow() -> Self {
        i64::MAX
    }
}

impl<T: Real> Flow for T {
    fn zero_flow() -> Self {
        T::zero()
    }
    fn inf_flow() -> Self {
        T::infinity()
    }
}

const NONE: usize = usize::MAX;

pub(crate) enum Costs<'a, T> {
    Table(Vec<T>),
    Oracle(&'a (dyn Fn(usize, usize) -> T + Sync)),
}

pub(crate) struct Solution<T, F> {
    /// `(row, col, flow)` for every tree arc with positive flow, sorted.
    pub entries: Vec<(usize, usize, F)>,
    /// Row potentials `f` and column potentials `g` with `f_i + g_j <= c_ij + eps`.
    pub f: Vec<T>,
    pub g: Vec<T>,
}

pub(crate) struct Simplex<'a, T, F> {
    m: usize,
    n: usize,
    costs: Costs<'a, T>,
    parent: Vec<usize>,
    pred: Vec<usize>,
    up: Vec<bool>,
    thread: Vec<usize>,
    rev_thread: Vec<usize>,
    succ_num: Vec<isize>,
    last_succ: Vec<usize>,
    dirty_revs: Vec<usize>,
    flow: Vec<F>,
    pi: Vec<T>,
    eps: T,
    block_size: usize,
    next_arc: usize,
    in_arc: usize,
    join: usize,
    u_in: usize,
    v_in: usize,
    u_out: usize,
    delta: F,
}

impl<'a, T: Real, F: Flow> Simplex<'a, T, F> {
    /// `supply` has length `m`, `demand` length `n`; both sum to the same total.
    pub fn new(supply: &[F], demand: &[F], costs: Costs<'a, T>, eps: T) -> Self {
        let (m, n) = (supply.len(), demand.len());
        let nodes = m + n + 1;
        let arcs = m * n;
        let block_size = ((arcs as f64).sqrt() as usize).max(10);
        let mut s = Simplex {
            m,
            n,
            costs,
            parent: vec![NONE; nodes],
            pred: vec![NONE; nodes],
            up: vec![false; nodes],
            thread: vec![0; nodes],
            rev_thread: vec![0; nodes],
            succ_num: vec![0; nodes],
            last_succ: vec![0; nodes],
            dirty_revs: Vec::new(),
            flow: vec![F::zero_flow(); nodes],
            pi: vec![T::zero(); nodes],
            eps,
            block_size,
            next_arc: 0,
            in_arc: 0,
            join: 0,
            u_in: 0,
            v_in: 0,
            u_out: 0,
            delta: F::zero_flow(),
        };
        s.init_tree(supply, demand);
        s
    }

    #[inline]
    fn root(&self) -> usize {
        self.m + self.n
    }

    #[inline]
    fn source(&self, e: usize) -> usize {
        if e == self.m * self.n {
            0
        } else {
            e / self.n
        }
    }

    #[inline]
    fn target(&self, e: usize) -> usize {
        if e == self.m * self.n {
            self.root()
        } else {
            self.m + e % self.n
        }
    }

    #[inline]
    fn cost(&self, e: usize) -> T {
        if e == self.m * self.n {
            return T::zero();
        }
        match &self.costs {
            Costs::Table(t) => t[e],
            Costs::Oracle(f) => f(e / self.n, e % self.n),
        }
    }

    fn init_tree(&mut self, supply: &[F], demand: &[F]) {
        let (m, n) = (self.m, self.n);
        let root = self.root();
        let nodes = m + n + 1;
        // North-west corner basis: a staircase path through the cost table.
        let mut adj: Vec<Vec<(usize, usize, F)>> = vec![Vec::new(); nodes];
        let mut ra = supply.to_vec();
        let mut rb = demand.to_vec();
        let (mut i, mut j) = (0, 0);
        loop {
            let x = if ra[i] < rb[j] { ra[i] } else { rb[j] };
            ra[i] = ra[i] - x;
            rb[j] = rb[j] - x;
            let e = i * n + j;
            adj[i].push((m + j, e, x));
            adj[m + j].push((i, e, x));
            if i == m - 1 && j == n - 1 {
                break;
            }
            let row_done = ra[i] <= F::zero_flow();
            if (row_done && i < m - 1) || j == n - 1 {
                i += 1;
            } else {
                j += 1;
            }
        }
        let art = m * n;
        adj[root].push((0, art, F::zero_flow()));
        adj[0].push((root, art, F::zero_flow()));

        let mut order = Vec::with_capacity(nodes);
        let mut stack = vec![root];
        let mut seen = vec![false; nodes];
        seen[root] = true;
        while let Some(u) = stack.pop() {
            order.push(u);
            // Push in reverse so that neighbours are visited in insertion order.
            for &(v, e, x) in adj[u].iter().rev() {
                if seen[v] {
                    continue;
                }
                seen[v] = true;
                self.parent[v] = u;
                self.pred[v] = e;
                self.flow[v] = x;
                self.up[v] = self.source(e) == v;
                let c = self.cost(e);
                self.pi[v] = if self.up[v] {
                    self.pi[u] - c
                } else {
                    self.pi[u] + c
                };
                stack.push(v);
            }
        }
        debug_assert_eq!(order.len(), nodes);
        let mut pos = vec![0; nodes];
        for (p, &u) in order.iter().enumerate() {
            pos[u] = p;
            let next = order[(p + 1) % nodes];
            self.thread[u] = next;
            self.rev_thread[next] = u;
            self.succ_num[u] = 1;
        }
        for &u in order.iter().rev() {
            if self.parent[u] != NONE {
                let p = self.parent[u];
                self.succ_num[p] += self.succ_num[u];
            }
        }
        for &u in &order {
            self.last_succ[u] = order[pos[u] + self.succ_num[u] as usize - 1];
        }
    }

    /// Block-search pricing over the real arcs in index order.
    fn find_entering_arc(&mut self) -> bool {
        let (m, n) = (self.m, self.n);
        let arcs = m * n;
        let mut min = T::zero();
        let mut best = NONE;
        let mut cnt = self.block_size;
        let mut e = self.next_arc;
        let mut i = e / n;
        let mut j = e % n;
        for _ in 0..arcs {
            let c = match &self.costs {
                Costs::Table(t) => t[e],
                Costs::Oracle(f) => f(i, j),
            };
            let rc = c + self.pi[i] - self.pi[m + j];
            if rc < min {
                min = rc;
                best = e;
            }
            e += 1;
            j += 1;
            if j == n {
                j = 0;
                i += 1;
                if i == m {
                    i = 0;
                    e = 0;
                }
            }
            cnt -= 1;
            if cnt == 0 {
                if min < -self.eps {
                    self.in_arc = best;
                    self.next_arc = e;
                    return true;
                }
                cnt = self.block_size;
            }
        }
        if min < -self.eps {
            self.in_arc = best;
            self.next_arc = e;
            return true;
        }
        false
    }

    fn find_join_node(&mut self) {
        let mut u = self.source(self.in_arc);
        let mut v = self.target(self.in_arc);
        while u != v {
            if self.succ_num[u] < self.succ_num[v] {
                u = self.parent[u];
            } else {
                v = self.parent[v];
            }
        }
        self.join = u;
    }

    fn find_leaving_arc(&mut self) -> bool {
        let first = self.source(self.in_arc);
        let second = self.target(self.in_arc);
        self.delta = F::inf_flow();
        let mut result = 0;
        let mut u = first;
        while u != self.join {
            let d = if self.up[u] { self.flow[u] } else { F::inf_flow() };
            if d < self.delta {
                self.delta = d;
                self.u_out = u;
                result = 1;
            }
            u = self.parent[u];
        }
        let mut u = second;
        while u != self.join {
            let d = if self.up[u] { F::inf_flow() } else { self.flow[u] };
            if d <= self.delta {
                self.delta = d;
                self.u_out = u;
                result = 2;
            }
            u = self.parent[u];
        }
        if result == 1 {
            self.u_in = first;
            self.v_in = second;
        } else {
            self.u_in = second;
            self.v_in = first;
        }
        result != 0
    }

    fn change_flow(&mut self) {
        let val = self.delta;
        if val > F::zero_flow() {
            let mut u = self.source(self.in_arc);
            while u != self.join {
                self.flow[u] = if self.up[u] { self.flow[u] - val } else { self.flow[u] + val };
                u = self.parent[u];
            }
            let mut u = self.target(self.in_arc);
            while u != self.join {
                self.flow[u] = if self.up[u] { self.flow[u] + val } else { self.flow[u] - val };
                u = self.parent[u];
            }
        }
    }

    fn update_tree_structure(&mut self) {
        let (u_in, v_in, u_out, join, in_arc) = (self.u_in, self.v_in, self.u_out, self.join, self.in_arc);
        let old_rev_thread = self.rev_thread[u_out];
        let old_succ_num = self.succ_num[u_out];
        let old_last_succ = self.last_succ[u_out];
        let v_out = self.parent[u_out];

        if u_in == u_out {
            self.parent[u_in] = v_in;
            self.pred[u_in] = in_arc;
            self.up[u_in] = u_in == self.source(in_arc);
            self.flow[u_in] = self.delta;
            if self.thread[v_in] != u_out {
                let mut after = self.thread[old_last_succ];
                self.thread[old_rev_thread] = after;
                self.rev_thread[after] = old_rev_thread;
                after = self.thread[v_in];
                self.thread[v_in] = u_out;
                self.rev_thread[u_out] = v_in;
                self.thread[old_last_succ] = after;
                self.rev_thread[after] = old_last_succ;
            }
        } else {
            let thread_continue = if old_rev_thread == v_in {
                self.thread[old_last_succ]
            } else {
                self.thread[v_in]
            };
            let mut stem = u_in;
            let mut par_stem = v_in;
            let mut last = self.last_succ[u_in];
            let mut after = self.thread[last];
            self.thread[v_in] = u_in;
            self.dirty_revs.clear();
            self.dirty_revs.push(v_in);
            while stem != u_out {
                let next_stem = self.parent[stem];
                self.thread[last] = next_stem;
                self.dirty_revs.push(last);
                let before = self.rev_thread[stem];
                self.thread[before] = after;
                self.rev_thread[after] = before;
                self.parent[stem] = par_stem;
                par_stem = stem;
                stem = next_stem;
                last = if self.last_succ[stem] == self.last_succ[par_stem] {
                    self.rev_thread[par_stem]
                } else {
                    self.last_succ[stem]
                };
                after = self.thread[last];
            }
            self.parent[u_out] = par_stem;
            self.thread[last] = thread_continue;
            self.rev_thread[thread_continue] = last;
            self.last_succ[u_out] = last;
            if old_rev_thread != v_in {
                self.thread[old_rev_thread] = after;
                self.rev_thread[after] = old_rev_thread;
            }
            for idx in 0..self.dirty_revs.len() {
                let u = self.dirty_revs[idx];
                let t = self.thread[u];
                self.rev_thread[t] = u;
            }
            let mut tmp_sc = 0isize;
            let tmp_ls = self.last_succ[u_out];
            let mut u = u_out;
            let mut p = self.parent[u];
            while u != u_in {
                self.pred[u] = self.pred[p];
                self.up[u] = !self.up[p];
                self.flow[u] = self.flow[p];
                tmp_sc += self.succ_num[u] - self.succ_num[p];
                self.succ_num[u] = tmp_sc;
                self.last_succ[p] = tmp_ls;
                u = p;
                p = self.parent[u];
            }
            self.pred[u_in] = in_arc;
            self.up[u_in] = u_in == self.source(in_arc);
            self.flow[u_in] = self.delta;
            self.succ_num[u_in] = old_succ_num;
        }

        let up_limit_out = if self.last_succ[join] == v_in { join } else { NONE };
        let last_succ_out = self.last_succ[u_out];
        let mut u = v_in;
        while u != NONE && self.last_succ[u] == v_in {
            self.last_succ[u] = last_succ_out;
            u = self.parent[u];
        }
        if join != old_rev_thread && v_in != old_rev_thread {
            let mut u = v_out;
            while u != NONE && u != up_limit_out && self.last_succ[u] == old_last_succ {
                self.last_succ[u] = old_rev_thread;
                u = self.parent[u];
            }
        } else if last_succ_out != old_last_succ {
            let mut u = v_out;
            while u != NONE && u != up_limit_out && self.last_succ[u] == old_last_succ {
                self.last_succ[u] = last_succ_out;
                u = self.parent[u];
            }
        }
        let mut u = v_in;
        while u != join {
            self.succ_num[u] += old_succ_num;
            u = self.parent[u];
        }
        let mut u = v_out;
        while u != join {
            self.succ_num[u] -= old_succ_num;
            u = self.parent[u];
        }
    }

    fn update_potential(&mut self) {
        let u_in = self.u_in;
        let c = self.cost(self.in_arc);
        let sigma = if self.up[u_in] {
            self.pi[self.v_in] - self.pi[u_in] - c
        } else {
            self.pi[self.v_in] - self.pi[u_in] + c
        };
        let end = self.thread[self.last_succ[u_in]];
        let mut u = u_in;
        while u != end {
            self.pi[u] += sigma;
            u = self.thread[u];
        }
    }

    pub fn solve(mut self) -> Solution<T, F> {
        while self.find_entering_arc() {
            self.find_join_node();
            let changed = self.find_leaving_arc();
            debug_assert!(changed && self.delta < F::inf_flow(), "transport problems are bounded");
            self.change_flow();
            self.update_tree_structure();
            self.update_potential();
        }
        let (m, n) = (self.m, self.n);
        let mut entries = Vec::with_capacity(m + n);
        for u in 0..m + n {
            let e = self.pred[u];
            if e < m * n && self.flow[u] > F::zero_flow() {
                entries.push((e / n, e % n, self.flow[u]));
            }
        }
        entries.sort_unstable_by_key(|&(i, j, _)| (i, j));
        let f = (0..m).map(|i| -self.pi[i]).collect();
        let g = (0..n).map(|j| self.pi[m + j]).collect();
        Solution {
            entries,
            f,
            g,
        }
    }
}
