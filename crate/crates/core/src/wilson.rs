//! Wilson's algorithm driven by replayable arrow stacks, and cycle popping.
//!
//! All walks run on the slot graph: ghost edges are ordinary edges to the
//! ghost vertex, and on wired quotients the sink is Δ.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gf2::BitVec;
use crate::graph::Graph;
use crate::rng::{bounded, derive_seed, hash3, stream_rng};

/// Default guard on walk steps and popped cycles.
pub const STEP_CAP: usize = 50_000_000;

/// Stack of arrows at every vertex; arrow `i ≥ 1` at `v` is a uniform
/// incident slot chosen by hashing `(seed, v, i)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ArrowStacks {
    pub seed: u64,
}

impl ArrowStacks {
    pub fn new(seed: u64) -> Self {
        ArrowStacks { seed }
    }

    /// `(slot, head)` of arrow `color` at `v`. Panics at isolated vertices.
    pub fn arrow(&self, g: &Graph, v: usize, color: usize) -> (usize, usize) {
        let inc = g.slot_incident(v);
        assert!(!inc.is_empty(), "vertex {v} has no incident slots");
        inc[bounded(hash3(self.seed, v as u64, color as u64), inc.len())]
    }
}

/// Directed cycle of exposed arrows, rotated to start at its lowest vertex.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct ColoredCycle {
    /// `(vertex, color, slot)`; the slot leads to the next entry.
    pub arrows: Vec<(usize, usize, usize)>,
}

impl ColoredCycle {
    fn canonical(mut arrows: Vec<(usize, usize, usize)>) -> Self {
        let i = (0..arrows.len()).min_by_key(|&i| arrows[i].0).unwrap_or(0);
        arrows.rotate_left(i);
        ColoredCycle { arrows }
    }

    pub fn len(&self) -> usize {
        self.arrows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arrows.is_empty()
    }
}

/// Spanning tree oriented toward `sink`: `parent[v]` is the slot leaving `v`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct OrientedTree {
    pub sink: usize,
    pub parent: Vec<Option<usize>>,
}

impl OrientedTree {
    pub fn slots(&self, g: &Graph) -> BitVec {
        let mut b = BitVec::zeros(g.num_slots());
        for s in self.parent.iter().flatten() {
            b.set(*s, true);
        }
        b
    }

    /// Tree slots with no endpoint at a non-ordinary vertex.
    pub fn ordinary_forest(&self, g: &Graph) -> BitVec {
        let mut b = self.slots(g);
        for s in 0..g.num_slots() {
            let (u, v) = g.slot_endpoints(s);
            if !g.is_ordinary(u) || !g.is_ordinary(v) {
                b.set(s, false);
            }
        }
        b
    }

    /// Checks that following parents from every vertex reaches the sink.
    pub fn is_spanning_tree(&self, g: &Graph) -> bool {
        let n = g.num_vertices();
        if self.parent.len() != n || self.parent[self.sink].is_some() {
            return false;
        }
        for v in 0..n {
            let mut cur = v;
            for _ in 0..=n {
                if cur == self.sink {
                    break;
                }
                let Some(s) = self.parent[cur] else { return false };
                let (a, b) = g.slot_endpoints(s);
                cur = if a == cur { b } else if b == cur { a } else { return false };
            }
            if cur != self.sink {
                return false;
            }
        }
        true
    }
}

/// Sink used when none is given: Δ, then the ghost, then vertex 0.
pub fn default_sink(g: &Graph) -> usize {
    g.wired().or(g.ghost()).unwrap_or(0)
}

fn check_sink(g: &Graph, sink: usize) -> Result<()> {
    if sink >= g.num_vertices() {
        return Err(Error::InvalidVertex(sink));
    }
    let reach = reachable_from(g, &[sink]);
    if let Some(v) = reach.iter().position(|r| !r) {
        return Err(Error::NotSpanning(format!("vertex {v} cannot reach sink {sink}")));
    }
    Ok(())
}

fn reachable_from(g: &Graph, roots: &[usize]) -> Vec<bool> {
    let mut seen = vec![false; g.num_vertices()];
    let mut q = VecDeque::new();
    for &r in roots {
        if !seen[r] {
            seen[r] = true;
            q.push_back(r);
        }
    }
    while let Some(v) = q.pop_front() {
        for &(_, w) in g.slot_incident(v) {
            if !seen[w] {
                seen[w] = true;
                q.push_back(w);
            }
        }
    }
    seen
}

/// Loop-erased simple random walk from `start` until it hits `absorbing`.
pub fn lerw<R: Rng + ?Sized>(g: &Graph, start: usize, absorbing: &[bool], rng: &mut R) -> Result<Vec<usize>> {
    if start >= g.num_vertices() {
        return Err(Error::InvalidVertex(start));
    }
    if absorbing.len() != g.num_vertices() {
        return Err(Error::DimensionMismatch {
            expected: g.num_vertices(),
            got: absorbing.len(),
        });
    }
    let roots: Vec<usize> = (0..g.num_vertices()).filter(|&v| absorbing[v]).collect();
    if !reachable_from(g, &roots)[start] {
        return Err(Error::NoRouteToBoundary(start));
    }
    let mut path = vec![start];
    let mut pos = vec![usize::MAX; g.num_vertices()];
    pos[start] = 0;
    let mut steps = 0;
    while !absorbing[*path.last().unwrap()] {
        steps += 1;
        if steps > STEP_CAP {
            return Err(Error::StepCap(STEP_CAP));
        }
        let inc = g.slot_incident(*path.last().unwrap());
        let (_, w) = inc[rng.gen_range(0..inc.len())];
        if pos[w] != usize::MAX {
            for &x in &path[pos[w] + 1..] {
                pos[x] = usize::MAX;
            }
            path.truncate(pos[w] + 1);
        } else {
            pos[w] = path.len();
            path.push(w);
        }
    }
    Ok(path)
}

/// Wilson's algorithm with walks read off `stacks`: the `k`-th visit to a
/// vertex uses its `k`-th arrow, and loops are erased by last exit.
pub fn wilson_with_stacks(g: &Graph, sink: usize, order: &[usize], stacks: ArrowStacks) -> Result<OrientedTree> {
    check_sink(g, sink)?;
    let n = g.num_vertices();
    let mut in_tree = vec![false; n];
    in_tree[sink] = true;
    let mut used = vec![0usize; n];
    let mut next: Vec<Option<(usize, usize)>> = vec![None; n];
    let mut parent = vec![None; n];
    let mut steps = 0;
    let starts = order.iter().copied().chain(0..n);
    for v in starts {
        if v >= n {
            return Err(Error::InvalidVertex(v));
        }
        let mut cur = v;
        while !in_tree[cur] {
            steps += 1;
            if steps > STEP_CAP {
                return Err(Error::StepCap(STEP_CAP));
            }
            used[cur] += 1;
            let a = stacks.arrow(g, cur, used[cur]);
            next[cur] = Some(a);
            cur = a.1;
        }
        let mut cur = v;
        while !in_tree[cur] {
            let (s, w) = next[cur].expect("walk left a trail");
            parent[cur] = Some(s);
            in_tree[cur] = true;
            cur = w;
        }
    }
    Ok(OrientedTree { sink, parent })
}

/// Uniform spanning tree oriented toward `sink`. `order` lists walk starts
/// (remaining vertices follow in index order).
pub fn wilson_ust(g: &Graph, sink: usize, order: &[usize], seed: u64) -> Result<OrientedTree> {
    wilson_with_stacks(g, sink, order, ArrowStacks::new(seed))
}

/// Wilson's algorithm on a wired quotient with sink Δ.
pub fn wilson_wired(gq: &Graph, seed: u64) -> Result<OrientedTree> {
    let d = gq.wired().ok_or(Error::NotWired)?;
    wilson_ust(gq, d, &[], seed)
}

/// Rule for choosing which exposed cycle to pop next.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PopOrder {
    /// Repeated sweeps over vertices in index order, popping the cycle
    /// through each vertex met.
    Sweep,
    /// A uniformly random vertex among those on exposed cycles.
    RandomVertex(u64),
    LargestFirst,
    SmallestFirst,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PopResult {
    pub tree: OrientedTree,
    /// Popped cycles, sorted.
    pub cycles: Vec<ColoredCycle>,
}

struct PopState<'a> {
    g: &'a Graph,
    sink: usize,
    stacks: ArrowStacks,
    top: Vec<usize>,
    head: Vec<(usize, usize)>,
}

impl PopState<'_> {
    fn exposed(&self, v: usize) -> (usize, usize) {
        self.head[v]
    }

    /// Cycles of the functional graph `v → head(v)`, as vertex lists
    /// starting from their lowest vertex.
    fn cycles(&self) -> Vec<Vec<usize>> {
        let n = self.g.num_vertices();
        let mut state = vec![0u8; n];
        state[self.sink] = 2;
        let mut out = Vec::new();
        for s in 0..n {
            let mut trail = Vec::new();
            let mut cur = s;
            while state[cur] == 0 {
                state[cur] = 1;
                trail.push(cur);
                cur = self.exposed(cur).1;
            }
            if state[cur] == 1 {
                let i = trail.iter().position(|&x| x == cur).unwrap();
                let mut c = trail[i..].to_vec();
                let j = (0..c.len()).min_by_key(|&j| c[j]).unwrap();
                c.rotate_left(j);
                out.push(c);
            }
            for x in trail {
                state[x] = 2;
            }
        }
        out
    }

    fn cycle_through(&self, v: usize) -> Option<Vec<usize>> {
        let n = self.g.num_vertices();
        let mut cur = v;
        let mut c = Vec::new();
        for _ in 0..n {
            if cur == self.sink {
                return None;
            }
            c.push(cur);
            cur = self.exposed(cur).1;
            if cur == v {
                return Some(c);
            }
        }
        None
    }

    fn pop(&mut self, cycle: &[usize]) -> ColoredCycle {
        let arrows = cycle
            .iter()
            .map(|&v| (v, self.top[v], self.head[v].0))
            .collect();
        for &v in cycle {
            self.top[v] += 1;
            self.head[v] = self.stacks.arrow(self.g, v, self.top[v]);
        }
        ColoredCycle::canonical(arrows)
    }
}

/// Pops exposed cycles in the given order until the exposed arrows form a
/// spanning tree oriented toward `sink`.
pub fn cycle_pop_run(g: &Graph, sink: usize, stacks: ArrowStacks, order: PopOrder) -> Result<PopResult> {
    check_sink(g, sink)?;
    let n = g.num_vertices();
    let top: Vec<usize> = vec![1; n];
    let head = (0..n)
        .map(|v| if v == sink { (usize::MAX, sink) } else { stacks.arrow(g, v, 1) })
        .collect();
    let mut st = PopState {
        g,
        sink,
        stacks,
        top,
        head,
    };
    let mut popped = Vec::new();
    let mut rng = match order {
        PopOrder::RandomVertex(s) => Some(stream_rng(s, 0)),
        _ => None,
    };
    loop {
        if popped.len() > STEP_CAP {
            return Err(Error::StepCap(STEP_CAP));
        }
        match order {
            PopOrder::Sweep => {
                let mut any = false;
                for v in 0..n {
                    if let Some(c) = st.cycle_through(v) {
                        popped.push(st.pop(&c));
                        any = true;
                    }
                }
                if !any {
                    break;
                }
            }
            PopOrder::RandomVertex(_) => {
                let cycles = st.cycles();
                let on: Vec<usize> = cycles.iter().flatten().copied().collect();
                let Some(&v) = on.choose(rng.as_mut().unwrap()) else { break };
                let c = st.cycle_through(v).expect("vertex lies on a cycle");
                popped.push(st.pop(&c));
            }
            PopOrder::LargestFirst | PopOrder::SmallestFirst => {
                let cycles = st.cycles();
                let pick = if order == PopOrder::LargestFirst {
                    cycles.iter().max_by(|a, b| a.len().cmp(&b.len()).then(b[0].cmp(&a[0])))
                } else {
                    cycles.iter().min_by(|a, b| a.len().cmp(&b.len()).then(a[0].cmp(&b[0])))
                };
                let Some(c) = pick.cloned() else { break };
                popped.push(st.pop(&c));
            }
        }
    }
    let parent = (0..n).map(|v| (v != sink).then(|| st.head[v].0)).collect();
    popped.sort();
    Ok(PopResult {
        tree: OrientedTree { sink, parent },
        cycles: popped,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InvarianceReport {
    pub trials: usize,
    pub orders: Vec<PopOrder>,
    pub cycles_popped: usize,
    pub counterexample: Option<String>,
    pub ok: bool,
}

/// For `n_trials` stack seeds, pops with every order and compares colored
/// cycle multisets and final trees against the sweep order.
pub fn legal_order_invariance_check(g: &Graph, sink: usize, seed: u64, n_trials: usize) -> Result<InvarianceReport> {
    let mut report = InvarianceReport {
        trials: n_trials,
        orders: vec![
            PopOrder::Sweep,
            PopOrder::RandomVertex(seed),
            PopOrder::LargestFirst,
            PopOrder::SmallestFirst,
        ],
        cycles_popped: 0,
        counterexample: None,
        ok: true,
    };
    for t in 0..n_trials as u64 {
        let stacks = ArrowStacks::new(derive_seed(seed, t));
        let orders = [
            PopOrder::Sweep,
            PopOrder::RandomVertex(derive_seed(seed ^ 0x9e37, t)),
            PopOrder::LargestFirst,
            PopOrder::SmallestFirst,
        ];
        let base = cycle_pop_run(g, sink, stacks, orders[0])?;
        report.cycles_popped += base.cycles.len();
        for &o in &orders[1..] {
            let other = cycle_pop_run(g, sink, stacks, o)?;
            if other != base {
                report.ok = false;
                report.counterexample = Some(format!(
                    "stack seed {}: {:?} gave {:?}, {:?} gave {:?}",
                    stacks.seed, orders[0], base, o, other
                ));
                return Ok(report);
            }
        }
    }
    Ok(report)
}

/// All spanning trees of the slot graph, as slot keys (brute force).
pub fn enumerate_spanning_trees(g: &Graph) -> Result<Vec<u64>> {
    let len = g.num_slots();
    crate::oracle::check_cap(len)?;
    let n = g.num_vertices();
    let mut out = Vec::new();
    for key in 0..(1u64 << len) {
        if key.count_ones() as usize + 1 != n {
            continue;
        }
        let mut d = crate::dsu::Dsu::new(n);
        let mut acyclic = true;
        let mut k = key;
        while k != 0 {
            let s = k.trailing_zeros() as usize;
            k &= k - 1;
            let (a, b) = g.slot_endpoints(s);
            if !d.union(a, b) {
                acyclic = false;
                break;
            }
        }
        if acyclic {
            out.push(key);
        }
    }
    Ok(out)
}
