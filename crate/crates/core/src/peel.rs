//! k-core decomposition.
//!
//! [`core_numbers`] is the Batagelj–Zaversnik bucket algorithm: vertices sit
//! in an array sorted by current degree, with `bin[d]` marking where degree
//! `d` starts. Removing the front vertex decrements each neighbour of larger
//! degree by swapping it to the start of its bucket, so the whole pass is
//! `O(n + m)` and every core is computed at once.

use std::collections::{BTreeMap, VecDeque};
use std::io::Write;

use crate::graph::{Graph, VertexId};
use crate::{Error, Result};

/// Largest graph [`brute_force_core`] accepts.
pub const BRUTE_FORCE_LIMIT: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoreResult {
    core_number: Vec<u32>,
    peel_order: Vec<VertexId>,
    core_sizes: Vec<usize>,
}

impl CoreResult {
    pub fn core_number(&self, v: usize) -> u32 {
        self.core_number[v]
    }

    pub fn core_numbers(&self) -> &[u32] {
        &self.core_number
    }

    /// Vertices in removal order. Every vertex has at most `core_number(v)`
    /// neighbours later in this order.
    pub fn peel_order(&self) -> &[VertexId] {
        &self.peel_order
    }

    /// `c_k` for `k = 0..=degeneracy`.
    pub fn core_sizes(&self) -> &[usize] {
        &self.core_sizes
    }

    /// `c_k`, zero beyond the degeneracy.
    pub fn core_size(&self, k: usize) -> usize {
        self.core_sizes.get(k).copied().unwrap_or(0)
    }

    pub fn degeneracy(&self) -> usize {
        self.core_sizes.len().saturating_sub(1)
    }

    /// Membership mask of the k-core.
    pub fn in_core(&self, k: usize) -> Vec<bool> {
        self.core_number.iter().map(|&c| c as usize >= k).collect()
    }

    /// Sorted vertex ids of the k-core.
    pub fn core_vertices(&self, k: usize) -> Vec<VertexId> {
        (0..self.core_number.len())
            .filter(|&v| self.core_number[v] as usize >= k)
            .map(|v| v as VertexId)
            .collect()
    }

    /// CSV with columns `vertex,core_number`.
    pub fn write_core_numbers_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["vertex", "core_number"])?;
        for (v, c) in self.core_number.iter().enumerate() {
            out.write_record([v.to_string(), c.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }

    /// CSV with columns `k,c_k`.
    pub fn write_core_sizes_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["k", "c_k"])?;
        for (k, c) in self.core_sizes.iter().enumerate() {
            out.write_record([k.to_string(), c.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }
}

pub fn core_numbers(g: &Graph) -> CoreResult {
    let n = g.n();
    if n == 0 {
        return CoreResult {
            core_number: Vec::new(),
            peel_order: Vec::new(),
            core_sizes: vec![0],
        };
    }
    let mut deg: Vec<usize> = (0..n).map(|v| g.degree(v)).collect();
    let max_deg = deg.iter().copied().max().unwrap_or(0);

    let mut bin = vec![0usize; max_deg + 1];
    for &d in &deg {
        bin[d] += 1;
    }
    let mut start = 0;
    for b in bin.iter_mut() {
        let count = *b;
        *b = start;
        start += count;
    }
    let mut pos = vec![0usize; n];
    let mut vert = vec![0usize; n];
    for v in 0..n {
        pos[v] = bin[deg[v]];
        vert[pos[v]] = v;
        bin[deg[v]] += 1;
    }
    for d in (1..=max_deg).rev() {
        bin[d] = bin[d - 1];
    }
    bin[0] = 0;

    for i in 0..n {
        let v = vert[i];
        for &u in g.neighbors(v) {
            let u = u as usize;
            if deg[u] > deg[v] {
                let du = deg[u];
                let pu = pos[u];
                let pw = bin[du];
                let w = vert[pw];
                if u != w {
                    vert.swap(pu, pw);
                    pos[u] = pw;
                    pos[w] = pu;
                }
                bin[du] += 1;
                deg[u] -= 1;
            }
        }
    }

    let degeneracy = deg.iter().copied().max().unwrap_or(0);
    let mut at_exactly = vec![0usize; degeneracy + 1];
    for &c in &deg {
        at_exactly[c] += 1;
    }
    let mut core_sizes = vec![0usize; degeneracy + 1];
    let mut acc = 0;
    for k in (0..=degeneracy).rev() {
        acc += at_exactly[k];
        core_sizes[k] = acc;
    }
    CoreResult {
        core_number: deg.into_iter().map(|c| c as u32).collect(),
        peel_order: vert.into_iter().map(|v| v as VertexId).collect(),
        core_sizes,
    }
}

fn guard(g: &Graph) -> Result<()> {
    if g.n() > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge {
            n: g.n(),
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    Ok(())
}

/// The k-core by literal repeated deletion of vertices with degree below `k`.
/// Returns the sorted surviving vertices.
pub fn brute_force_core(g: &Graph, k: usize) -> Result<Vec<VertexId>> {
    guard(g)?;
    let n = g.n();
    let mut deg: Vec<usize> = (0..n).map(|v| g.degree(v)).collect();
    let mut alive = vec![true; n];
    let mut queue: VecDeque<usize> = (0..n).filter(|&v| deg[v] < k).collect();
    for &v in &queue {
        alive[v] = false;
    }
    while let Some(v) = queue.pop_front() {
        for &u in g.neighbors(v) {
            let u = u as usize;
            if alive[u] {
                deg[u] -= 1;
                if deg[u] < k {
                    alive[u] = false;
                    queue.push_back(u);
                }
            }
        }
    }
    Ok(survivors(&alive))
}

/// Like [`brute_force_core`], but sweeps the vertices in the given order,
/// deleting any vertex whose current degree is below `k`, until a sweep
/// deletes nothing. The survivors do not depend on `order`.
pub fn brute_force_core_ordered(g: &Graph, k: usize, order: &[usize]) -> Result<Vec<VertexId>> {
    guard(g)?;
    let n = g.n();
    let mut seen = vec![false; n];
    if order.len() != n || order.iter().any(|&v| v >= n || std::mem::replace(&mut seen[v], true)) {
        return Err(Error::config("deletion order must be a permutation of the vertices"));
    }
    let mut deg: Vec<usize> = (0..n).map(|v| g.degree(v)).collect();
    let mut alive = vec![true; n];
    loop {
        let mut changed = false;
        for &v in order {
            if alive[v] && deg[v] < k {
                alive[v] = false;
                changed = true;
                for &u in g.neighbors(v) {
                    if alive[u as usize] {
                        deg[u as usize] -= 1;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    Ok(survivors(&alive))
}

fn survivors(alive: &[bool]) -> Vec<VertexId> {
    (0..alive.len())
        .filter(|&v| alive[v])
        .map(|v| v as VertexId)
        .collect()
}

/// Degree histogram of the subgraph induced by the k-core. Every key is at
/// least `k`; an empty core gives an empty map.
pub fn core_degree_histogram(g: &Graph, k: usize) -> BTreeMap<usize, usize> {
    let cores = core_numbers(g);
    core_degree_histogram_from(g, &cores, k)
}

/// [`core_degree_histogram`] reusing an existing decomposition.
pub fn core_degree_histogram_from(g: &Graph, cores: &CoreResult, k: usize) -> BTreeMap<usize, usize> {
    let inside = |v: usize| cores.core_number(v) as usize >= k;
    let mut hist = BTreeMap::new();
    for v in (0..g.n()).filter(|&v| inside(v)) {
        let d = g.neighbors(v).iter().filter(|&&u| inside(u as usize)).count();
        *hist.entry(d).or_insert(0) += 1;
    }
    hist
}
