//! Finite electrical networks: the depth-n tree network, effective
//! resistance, trace (Schur-complement) reduction onto vertex subsets, and
//! exact linear-algebra oracles for hitting and cover times.
//!
//! A network is a connected graph with symmetric positive conductances and a
//! strictly positive vertex measure. For the canonical T_n network the
//! measure is the conductance row sum μ_n; traced networks carry whatever
//! measure the time change assigns (μ̄_n, μ̃_n), which need not match the
//! row sums.

use crate::error::{CoreError, Result};
use crate::linalg::{Lu, Mat};
use crate::rng::StreamRng;
use crate::tree::{self, LeafAddress, Params, Vertex};
use serde::{Deserialize, Serialize};

/// Hard cap for the dense elimination working matrix.
pub const DENSE_TRACE_CAP: usize = 8192;

/// Default vertex cap for the visited-set cover-time DP.
pub const COVER_DP_CAP: usize = 16;

/// Conductances below `CLAMP_REL * max` are dropped after a reduction, then
/// symmetry is re-enforced by averaging.
const CLAMP_REL: f64 = 1e-15;

/// What a network node stands for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeLabel {
    /// A vertex of some T_n.
    Tree(Vertex),
    /// A boundary point with an eventually-zero address.
    Boundary(LeafAddress),
}

impl NodeLabel {
    pub fn text(&self) -> String {
        match self {
            NodeLabel::Tree(v) => v.text(),
            NodeLabel::Boundary(a) => a.text(),
        }
    }

    pub fn parse(s: &str) -> Result<NodeLabel> {
        if s.contains("|0*") {
            Ok(NodeLabel::Boundary(LeafAddress::parse(s)?))
        } else {
            Ok(NodeLabel::Tree(Vertex::parse(s)?))
        }
    }
}

/// A finite electrical network with a vertex measure.
#[derive(Clone, Debug)]
pub struct Network {
    labels: Vec<NodeLabel>,
    /// Edges as (i, j, conductance) with i < j and conductance > 0.
    edges: Vec<(u32, u32, f64)>,
    measure: Vec<f64>,
}

impl Network {
    pub fn new(
        labels: Vec<NodeLabel>,
        mut edges: Vec<(u32, u32, f64)>,
        measure: Vec<f64>,
    ) -> Result<Network> {
        let n = labels.len();
        if n == 0 {
            return Err(CoreError::InvalidParams("network needs at least one vertex".into()));
        }
        if measure.len() != n {
            return Err(CoreError::InvalidParams("measure length mismatch".into()));
        }
        if let Some(m) = measure.iter().find(|m| !m.is_finite() || **m <= 0.0) {
            return Err(CoreError::InvalidParams(format!("measure entries must be positive, got {m}")));
        }
        for e in edges.iter_mut() {
            if e.0 == e.1 {
                return Err(CoreError::InvalidParams("self loop".into()));
            }
            if e.0 > e.1 {
                *e = (e.1, e.0, e.2);
            }
            if !e.2.is_finite() || e.2 <= 0.0 {
                return Err(CoreError::InvalidParams(format!("conductance must be positive, got {}", e.2)));
            }
            if e.0 as usize >= n || e.1 as usize >= n {
                return Err(CoreError::InvalidParams("edge endpoint out of range".into()));
            }
        }
        edges.sort_unstable_by_key(|e| (e.0, e.1));
        if edges.windows(2).any(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1)) {
            return Err(CoreError::InvalidParams("duplicate edge".into()));
        }
        let net = Network { labels, edges, measure };
        if !net.is_connected() {
            return Err(CoreError::Disconnected(format!("{} vertices", n)));
        }
        Ok(net)
    }

    /// A single isolated vertex (no edges) with the given measure.
    pub fn single(label: NodeLabel, measure: f64) -> Result<Network> {
        Network::new(vec![label], Vec::new(), vec![measure])
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[NodeLabel] {
        &self.labels
    }

    pub fn edges(&self) -> &[(u32, u32, f64)] {
        &self.edges
    }

    pub fn measure(&self) -> &[f64] {
        &self.measure
    }

    /// Adjacency lists (neighbor, conductance), in global edge order.
    pub fn neighbor_lists(&self) -> Vec<Vec<(u32, f64)>> {
        let mut nbr = vec![Vec::new(); self.len()];
        for &(i, j, c) in &self.edges {
            nbr[i as usize].push((j, c));
            nbr[j as usize].push((i, c));
        }
        nbr
    }

    /// Per-vertex conductance row sums, accumulated in global edge order.
    pub fn row_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.len()];
        for &(i, j, c) in &self.edges {
            s[i as usize] += c;
            s[j as usize] += c;
        }
        s
    }

    fn is_connected(&self) -> bool {
        let n = self.len();
        if n == 1 {
            return true;
        }
        let nbr = self.neighbor_lists();
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &(u, _) in &nbr[v] {
                if !seen[u as usize] {
                    seen[u as usize] = true;
                    count += 1;
                    stack.push(u as usize);
                }
            }
        }
        count == n
    }

    /// Hop distance of every vertex from vertex 0 (the root in canonical
    /// networks); used to order eliminations leaf-first.
    fn hop_depths(&self) -> Vec<u32> {
        let nbr = self.neighbor_lists();
        let mut depth = vec![u32::MAX; self.len()];
        let mut queue = std::collections::VecDeque::new();
        depth[0] = 0;
        queue.push_back(0usize);
        while let Some(v) = queue.pop_front() {
            for &(u, _) in &nbr[v] {
                if depth[u as usize] == u32::MAX {
                    depth[u as usize] = depth[v] + 1;
                    queue.push_back(u as usize);
                }
            }
        }
        depth
    }

    pub fn to_json(&self) -> NetworkJson {
        NetworkJson {
            vertices: self.labels.iter().map(NodeLabel::text).collect(),
            conductance: self.edges.clone(),
            measure: self.measure.clone(),
        }
    }

    pub fn from_json(j: &NetworkJson) -> Result<Network> {
        let labels = j
            .vertices
            .iter()
            .map(|s| NodeLabel::parse(s))
            .collect::<Result<Vec<_>>>()?;
        Network::new(labels, j.conductance.clone(), j.measure.clone())
    }
}

/// JSON wire form: vertices in text form, conductances as a triplet list.
/// Values survive a round trip bit-exactly (serde_json emits shortest
/// round-trip decimal).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NetworkJson {
    pub vertices: Vec<String>,
    pub conductance: Vec<(u32, u32, f64)>,
    pub measure: Vec<f64>,
}

/// The canonical electrical network of T_n: vertices in level order, an edge
/// of conductance λ^{-m} between each depth-m vertex and its children, and
/// measure equal to the conductance row sums (= μ_n).
pub fn build_tree_network(p: &Params) -> Result<Network> {
    let n = p.depth();
    if n < 1 {
        return Err(CoreError::InvalidParams("tree network needs depth >= 1".into()));
    }
    let vertices = tree::level_order_vertices(n);
    let labels: Vec<NodeLabel> = vertices.iter().map(|&v| NodeLabel::Tree(v)).collect();
    let mut edges = Vec::with_capacity(labels.len() - 1);
    let mut measure = vec![0.0; labels.len()];
    for (idx, v) in vertices.iter().enumerate() {
        if v.depth() == n {
            continue;
        }
        let c = 1.0 / p.lambda_pow(v.depth());
        for bit in 0..2u8 {
            let ch = tree::level_order_index(v.child(bit));
            edges.push((idx as u32, ch as u32, c));
            measure[idx] += c;
            measure[ch] += c;
        }
    }
    Network::new(labels, edges, measure)
}

/// Indices of the vertices of T_n at depths in `[lo, hi]`, level order.
pub fn level_range_indices(lo: u32, hi: u32) -> Vec<u32> {
    let mut out = Vec::new();
    for m in lo..=hi {
        let base = (1u64 << m) - 1;
        for w in 0..(1u64 << m) {
            out.push((base + w) as u32);
        }
    }
    out
}

/// The observation window Σ̄_n of the canonical T_n network: all vertices at
/// depths max(0, n − ⌈ln n⌉) through n.
pub fn bar_sigma_indices(n: u32) -> Vec<u32> {
    level_range_indices(tree::bar_level_floor(n), n)
}

/// A reusable effective-resistance solver: one factorization of the grounded
/// Laplacian per network.
pub struct ResistanceSolver {
    lu: Option<Lu>,
    n: usize,
}

impl ResistanceSolver {
    pub fn new(net: &Network) -> Result<ResistanceSolver> {
        let n = net.len();
        if n == 1 {
            return Ok(ResistanceSolver { lu: None, n });
        }
        // Ground vertex 0: drop its row and column.
        let mut a = Mat::zeros(n - 1);
        for &(i, j, c) in net.edges() {
            let (i, j) = (i as usize, j as usize);
            if i > 0 {
                a.add(i - 1, i - 1, c);
            }
            if j > 0 {
                a.add(j - 1, j - 1, c);
            }
            if i > 0 && j > 0 {
                a.add(i - 1, j - 1, -c);
                a.add(j - 1, i - 1, -c);
            }
        }
        Ok(ResistanceSolver { lu: Some(a.lu()?), n })
    }

    /// R(x, y) by injecting a unit current at x and extracting it at y.
    pub fn resistance(&self, x: u32, y: u32) -> f64 {
        if x == y {
            return 0.0;
        }
        let lu = self.lu.as_ref().expect("single-vertex network has no distinct pairs");
        let mut rhs = vec![0.0; self.n - 1];
        if x > 0 {
            rhs[x as usize - 1] = 1.0;
        }
        if y > 0 {
            rhs[y as usize - 1] = -1.0;
        }
        let v = lu.solve(&rhs);
        let pot = |z: u32| if z == 0 { 0.0 } else { v[z as usize - 1] };
        pot(x) - pot(y)
    }
}

/// Effective resistance between two vertices via the Laplacian solve.
/// R(x,x) = 0 by convention; errors only if the factorization does (the
/// constructor already guarantees connectivity).
pub fn effective_resistance(net: &Network, x: u32, y: u32) -> Result<f64> {
    Ok(ResistanceSolver::new(net)?.resistance(x, y))
}

/// Path-sum resistance, valid on tree networks only: the sum of 1/c along
/// the unique path. The independent oracle for the Laplacian route.
pub fn resistance_path_tree(net: &Network, x: u32, y: u32) -> Result<f64> {
    if net.edges().len() + 1 != net.len() {
        return Err(CoreError::Domain("path-sum resistance needs a tree network".into()));
    }
    let nbr = net.neighbor_lists();
    // BFS parents from x.
    let mut parent: Vec<Option<(u32, f64)>> = vec![None; net.len()];
    let mut seen = vec![false; net.len()];
    let mut queue = std::collections::VecDeque::new();
    seen[x as usize] = true;
    queue.push_back(x);
    while let Some(v) = queue.pop_front() {
        if v == y {
            break;
        }
        for &(u, c) in &nbr[v as usize] {
            if !seen[u as usize] {
                seen[u as usize] = true;
                parent[u as usize] = Some((v, c));
                queue.push_back(u);
            }
        }
    }
    let mut r = 0.0;
    let mut cur = y;
    while cur != x {
        let (p, c) = parent[cur as usize].expect("connected tree");
        r += 1.0 / c;
        cur = p;
    }
    Ok(r)
}

/// Diagnostics from a trace reduction.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReductionReport {
    pub kept: usize,
    pub eliminated: usize,
    /// Largest number of previously-absent pairs created by one elimination.
    pub max_fill_in: usize,
    /// Largest |C[a][b] − C[b][a]| seen before re-symmetrization, relative to
    /// the largest entry.
    pub residual_asymmetry: f64,
}

/// Trace the network onto `keep`, realizing the trace Dirichlet form: the
/// effective resistance between kept vertices is preserved. Non-kept
/// vertices are eliminated one at a time by the star-mesh transform
/// (a Schur complement on the weighted Laplacian), deepest-first.
pub fn trace_network(net: &Network, keep: &[u32], new_measure: &[f64]) -> Result<Network> {
    trace_network_with_report(net, keep, new_measure).map(|(n, _)| n)
}

pub fn trace_network_with_report(
    net: &Network,
    keep: &[u32],
    new_measure: &[f64],
) -> Result<(Network, ReductionReport)> {
    let n = net.len();
    if n > DENSE_TRACE_CAP {
        return Err(CoreError::SizeCap {
            got: n,
            cap: DENSE_TRACE_CAP,
            hint: "trace reduction uses a dense working matrix".into(),
        });
    }
    if keep.is_empty() {
        return Err(CoreError::InvalidParams("keep set is empty".into()));
    }
    if new_measure.len() != keep.len() {
        return Err(CoreError::InvalidParams("new_measure length must match keep".into()));
    }
    let mut kept_mask = vec![false; n];
    for &k in keep {
        if k as usize >= n {
            return Err(CoreError::InvalidParams("keep index out of range".into()));
        }
        if kept_mask[k as usize] {
            return Err(CoreError::InvalidParams("duplicate keep index".into()));
        }
        kept_mask[k as usize] = true;
    }

    let mut c = Mat::zeros(n);
    for &(i, j, w) in net.edges() {
        c.set(i as usize, j as usize, w);
        c.set(j as usize, i as usize, w);
    }

    // Leaf-first: deepest vertices (hop distance from vertex 0) go first.
    let depths = net.hop_depths();
    let mut order: Vec<usize> = (0..n).filter(|&v| !kept_mask[v]).collect();
    order.sort_unstable_by(|&a, &b| depths[b].cmp(&depths[a]).then(a.cmp(&b)));

    let mut alive: Vec<bool> = vec![true; n];
    let mut max_fill_in = 0usize;
    let mut nbrs: Vec<usize> = Vec::new();
    for &v in &order {
        nbrs.clear();
        let mut s = 0.0;
        for (u, &live) in alive.iter().enumerate() {
            if live && u != v {
                let w = c.get(v, u);
                if w != 0.0 {
                    nbrs.push(u);
                    s += w;
                }
            }
        }
        let mut fill = 0usize;
        for ai in 0..nbrs.len() {
            let a = nbrs[ai];
            let cva = c.get(v, a);
            for &b in &nbrs[ai + 1..] {
                let add = cva * c.get(v, b) / s;
                if c.get(a, b) == 0.0 {
                    fill += 1;
                }
                c.add(a, b, add);
                c.add(b, a, add);
            }
        }
        max_fill_in = max_fill_in.max(fill);
        for &u in &nbrs {
            c.set(v, u, 0.0);
            c.set(u, v, 0.0);
        }
        alive[v] = false;
    }

    // Extract the kept block, measuring residual asymmetry before averaging.
    let mut max_entry = 0.0f64;
    let mut max_asym = 0.0f64;
    for (ai, &a) in keep.iter().enumerate() {
        for &b in &keep[ai + 1..] {
            let x = c.get(a as usize, b as usize);
            let y = c.get(b as usize, a as usize);
            max_entry = max_entry.max(x.abs().max(y.abs()));
            max_asym = max_asym.max((x - y).abs());
        }
    }
    let clamp = CLAMP_REL * max_entry;
    let mut edges = Vec::new();
    for (ai, &a) in keep.iter().enumerate() {
        for (bj, &b) in keep.iter().enumerate().skip(ai + 1) {
            let w = 0.5 * (c.get(a as usize, b as usize) + c.get(b as usize, a as usize));
            if w > clamp {
                edges.push((ai as u32, bj as u32, w));
            }
        }
    }
    let labels: Vec<NodeLabel> = keep.iter().map(|&k| net.labels()[k as usize]).collect();
    let traced = Network::new(labels, edges, new_measure.to_vec())?;
    let report = ReductionReport {
        kept: keep.len(),
        eliminated: n - keep.len(),
        max_fill_in,
        residual_asymmetry: if max_entry > 0.0 { max_asym / max_entry } else { 0.0 },
    };
    Ok((traced, report))
}

/// Expected hitting time E_start[τ_target] of the continuous-time chain with
/// generator Δf(x) = Σ_y c(x,y)/ν({x}) (f(y) − f(x)).
pub fn expected_hitting_time(net: &Network, start: u32, target: u32) -> Result<f64> {
    if start == target {
        return Ok(0.0);
    }
    let n = net.len();
    // Unknowns: all vertices except target. (D − C) h = ν on that block.
    let idx = |v: usize| if v < target as usize { v } else { v - 1 };
    let mut a = Mat::zeros(n - 1);
    for &(i, j, c) in net.edges() {
        let (i, j) = (i as usize, j as usize);
        if i != target as usize {
            a.add(idx(i), idx(i), c);
        }
        if j != target as usize {
            a.add(idx(j), idx(j), c);
        }
        if i != target as usize && j != target as usize {
            a.add(idx(i), idx(j), -c);
            a.add(idx(j), idx(i), -c);
        }
    }
    let rhs: Vec<f64> = (0..n)
        .filter(|&v| v != target as usize)
        .map(|v| net.measure()[v])
        .collect();
    let h = a.lu()?.solve(&rhs);
    Ok(h[idx(start as usize)])
}

/// Max relative error of the commute identity
/// E_xτ_y + E_yτ_x = R(x,y) · ν(V) over `pairs` sampled pairs.
/// Requires the measure to equal the conductance row sums.
pub fn commute_identity_check(net: &Network, pairs: usize, seed: u64) -> Result<f64> {
    let sums = net.row_sums();
    for (m, s) in net.measure().iter().zip(&sums) {
        if (m - s).abs() > 1e-12 * s.abs().max(1.0) {
            return Err(CoreError::Domain(
                "commute identity needs measure = conductance row sums".into(),
            ));
        }
    }
    let total: f64 = net.measure().iter().sum();
    let solver = ResistanceSolver::new(net)?;
    let mut rng = StreamRng::new(seed, 0);
    let n = net.len() as u64;
    let mut worst = 0.0f64;
    for _ in 0..pairs {
        let x = rng.next_below(n) as u32;
        let mut y = rng.next_below(n) as u32;
        while y == x {
            y = rng.next_below(n) as u32;
        }
        let commute = expected_hitting_time(net, x, y)? + expected_hitting_time(net, y, x)?;
        let rhs = solver.resistance(x, y) * total;
        worst = worst.max((commute - rhs).abs() / rhs);
    }
    Ok(worst)
}

/// Exact expected cover time of the continuous-time chain, by linear solves
/// over (current vertex, visited set) layers in decreasing |visited| order.
/// Capped at [`COVER_DP_CAP`] vertices; beyond that, use Monte Carlo
/// (`walk::simulate_cover`).
pub fn exact_expected_cover_time(net: &Network, start: u32) -> Result<f64> {
    exact_expected_cover_time_capped(net, start, COVER_DP_CAP)
}

pub fn exact_expected_cover_time_capped(net: &Network, start: u32, cap: usize) -> Result<f64> {
    let n = net.len();
    if n > cap {
        return Err(CoreError::SizeCap {
            got: n,
            cap,
            hint: "visited-set DP is exponential; use Monte Carlo simulation instead".into(),
        });
    }
    if n == 1 {
        return Ok(0.0);
    }
    let nbr = net.neighbor_lists();
    let sums = net.row_sums();
    // Mean holding at x is ν(x)/Σ_y c(x,y); jump probabilities c(x,y)/Σ.
    let hold: Vec<f64> = net.measure().iter().zip(&sums).map(|(m, s)| m / s).collect();

    let full: u32 = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    let start_bit = 1u32 << start;
    // values[mask * n + x] = E[extra time to cover | at x, visited = mask]
    let mut values = vec![f64::NAN; (full as usize + 1) * n];

    // Masks containing start, by decreasing popcount.
    let mut masks: Vec<u32> = (0..=full).filter(|m| m & start_bit != 0).collect();
    masks.sort_unstable_by_key(|m| std::cmp::Reverse(m.count_ones()));

    for &mask in &masks {
        if mask == full {
            for x in 0..n {
                values[mask as usize * n + x] = 0.0;
            }
            continue;
        }
        let members: Vec<usize> = (0..n).filter(|&x| mask & (1 << x) != 0).collect();
        let pos: Vec<usize> = {
            let mut p = vec![usize::MAX; n];
            for (i, &x) in members.iter().enumerate() {
                p[x] = i;
            }
            p
        };
        let k = members.len();
        let mut a = Mat::zeros(k);
        let mut rhs = vec![0.0; k];
        for (i, &x) in members.iter().enumerate() {
            a.add(i, i, 1.0);
            rhs[i] = hold[x];
            for &(y, c) in &nbr[x] {
                let p = c / sums[x];
                let yb = 1u32 << y;
                if mask & yb != 0 {
                    a.add(i, pos[y as usize], -p);
                } else {
                    let v = values[(mask | yb) as usize * n + y as usize];
                    debug_assert!(v.is_finite());
                    rhs[i] += p * v;
                }
            }
        }
        let sol = a.lu()?.solve(&rhs);
        for (i, &x) in members.iter().enumerate() {
            values[mask as usize * n + x] = sol[i];
        }
    }
    Ok(values[start_bit as usize * n + start as usize])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params(lambda: f64, n: u32) -> Params {
        Params::new(lambda, n).unwrap()
    }

    #[test]
    fn t1_network_shape() {
        let net = build_tree_network(&params(0.5, 1)).unwrap();
        assert_eq!(net.len(), 3);
        assert_eq!(net.edges(), &[(0, 1, 1.0), (0, 2, 1.0)]);
        assert_eq!(net.measure(), &[2.0, 1.0, 1.0]);
    }

    #[test]
    fn t2_level_one_conductances() {
        let net = build_tree_network(&params(0.5, 2)).unwrap();
        // edges out of depth-1 vertices have conductance λ^{-1} = 2
        for &(i, j, c) in net.edges() {
            let di = net.labels()[i as usize];
            if let NodeLabel::Tree(v) = di {
                if v.depth() == 1 {
                    let NodeLabel::Tree(w) = net.labels()[j as usize] else { panic!() };
                    if w.depth() == 2 {
                        assert_relative_eq!(c, 2.0);
                    }
                }
            }
        }
    }

    #[test]
    fn total_measure_is_b_n() {
        for lam in [0.4, 0.5, 0.8] {
            for n in 1..=8u32 {
                let p = params(lam, n);
                let net = build_tree_network(&p).unwrap();
                let total: f64 = net.measure().iter().sum();
                assert_relative_eq!(total, tree::b_n(&p), max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn measure_matches_mu_n_formula() {
        let p = params(0.5, 5);
        let net = build_tree_network(&p).unwrap();
        for (i, v) in tree::level_order_vertices(5).iter().enumerate() {
            let formula = tree::mu_n_vertex(*v, &p).unwrap();
            assert_relative_eq!(net.measure()[i], formula, max_relative = 1e-12);
        }
    }

    #[test]
    fn resistance_examples() {
        let p = params(0.5, 2);
        let net = build_tree_network(&p).unwrap();
        // root -> a depth-2 leaf: 1 + 0.5
        let leaf = tree::level_order_index(Vertex::new(2, 0).unwrap()) as u32;
        assert_relative_eq!(
            effective_resistance(&net, 0, leaf).unwrap(),
            1.5,
            max_relative = 1e-10
        );
        // two depth-2 leaves under one parent: 2 λ = 1
        let l2 = tree::level_order_index(Vertex::new(2, 1).unwrap()) as u32;
        assert_relative_eq!(
            effective_resistance(&net, leaf, l2).unwrap(),
            1.0,
            max_relative = 1e-10
        );
        assert_eq!(effective_resistance(&net, leaf, leaf).unwrap(), 0.0);
    }

    #[test]
    fn laplacian_equals_path_sum_equals_metric() {
        let p = params(0.6, 4);
        let net = build_tree_network(&p).unwrap();
        let vs = tree::level_order_vertices(4);
        let solver = ResistanceSolver::new(&net).unwrap();
        let mut rng = StreamRng::new(11, 0);
        for _ in 0..40 {
            let x = rng.next_below(net.len() as u64) as u32;
            let y = rng.next_below(net.len() as u64) as u32;
            let lap = solver.resistance(x, y);
            let path = resistance_path_tree(&net, x, y).unwrap();
            let metric = tree::metric_d(vs[x as usize], vs[y as usize], &p);
            if x == y {
                assert_eq!(lap, 0.0);
            } else {
                assert_relative_eq!(lap, path, max_relative = 1e-10);
                assert_relative_eq!(lap, metric, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn two_point_trace_is_single_resistor() {
        let p = params(0.5, 3);
        let net = build_tree_network(&p).unwrap();
        let x = 3u32;
        let y = 11u32;
        let r = effective_resistance(&net, x, y).unwrap();
        let traced = trace_network(&net, &[x, y], &[1.0, 1.0]).unwrap();
        assert_eq!(traced.edges().len(), 1);
        assert_relative_eq!(traced.edges()[0].2, 1.0 / r, max_relative = 1e-10);
    }

    #[test]
    fn series_law_for_degree_two_elimination() {
        // path a - b - c with conductances 2 and 3: eliminating b leaves
        // 1/(1/2 + 1/3) = 6/5
        let labels: Vec<NodeLabel> = (0..3u64)
            .map(|w| NodeLabel::Tree(Vertex::new(2, w).unwrap()))
            .collect();
        let net = Network::new(
            labels,
            vec![(0, 1, 2.0), (1, 2, 3.0)],
            vec![1.0, 1.0, 1.0],
        )
        .unwrap();
        let traced = trace_network(&net, &[0, 2], &[1.0, 1.0]).unwrap();
        assert_eq!(traced.edges().len(), 1);
        assert_relative_eq!(traced.edges()[0].2, 1.2, max_relative = 1e-12);
    }

    #[test]
    fn trace_preserves_resistance_in_bar_window() {
        let n = 5u32;
        let p = params(0.5, n);
        let net = build_tree_network(&p).unwrap();
        let keep = bar_sigma_indices(n);
        let measure: Vec<f64> = keep.iter().map(|&k| net.measure()[k as usize]).collect();
        let (traced, report) = trace_network_with_report(&net, &keep, &measure).unwrap();
        assert!(report.residual_asymmetry <= 1e-10);
        let orig = ResistanceSolver::new(&net).unwrap();
        let red = ResistanceSolver::new(&traced).unwrap();
        for a in 0..keep.len() as u32 {
            for b in (a + 1)..keep.len() as u32 {
                let r0 = orig.resistance(keep[a as usize], keep[b as usize]);
                let r1 = red.resistance(a, b);
                assert_relative_eq!(r0, r1, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn bar_trace_keeps_tree_edges_and_connects_top_level() {
        let n = 5u32;
        let p = params(0.5, n);
        let net = build_tree_network(&p).unwrap();
        let keep = bar_sigma_indices(n);
        let floor = tree::bar_level_floor(n);
        let measure: Vec<f64> = keep.iter().map(|&k| net.measure()[k as usize]).collect();
        let traced = trace_network(&net, &keep, &measure).unwrap();
        let pos: std::collections::HashMap<u32, u32> = keep
            .iter()
            .enumerate()
            .map(|(i, &k)| (k, i as u32))
            .collect();
        // parent-child conductances strictly inside the window are unchanged
        for &(i, j, c) in net.edges() {
            if let (Some(&a), Some(&b)) = (pos.get(&i), pos.get(&j)) {
                let found = traced
                    .edges()
                    .iter()
                    .find(|&&(x, y, _)| (x, y) == (a.min(b), a.max(b)))
                    .expect("tree edge survives trace");
                assert_relative_eq!(found.2, c, max_relative = 1e-9);
            }
        }
        // every pair at the floor level is directly connected
        let floor_local: Vec<u32> = level_range_indices(floor, floor)
            .iter()
            .map(|k| pos[k])
            .collect();
        for (ai, &a) in floor_local.iter().enumerate() {
            for &b in &floor_local[ai + 1..] {
                let (lo, hi) = (a.min(b), a.max(b));
                assert!(
                    traced.edges().iter().any(|&(x, y, c)| (x, y) == (lo, hi) && c > 0.0),
                    "floor pair ({a},{b}) must be connected"
                );
            }
        }
    }

    #[test]
    fn trace_preserves_resistance_random_keep_at_depth_eight() {
        let p = params(0.5, 8);
        let net = build_tree_network(&p).unwrap();
        let mut rng = StreamRng::new(88, 0);
        let keep: Vec<u32> = (0..net.len() as u32)
            .filter(|_| rng.next_f64() < 0.08)
            .collect();
        assert!(keep.len() >= 2);
        let traced = trace_network(&net, &keep, &vec![1.0; keep.len()]).unwrap();
        let orig = ResistanceSolver::new(&net).unwrap();
        let red = ResistanceSolver::new(&traced).unwrap();
        for _ in 0..60 {
            let a = rng.next_below(keep.len() as u64) as usize;
            let b = rng.next_below(keep.len() as u64) as usize;
            if a == b {
                continue;
            }
            let r0 = orig.resistance(keep[a], keep[b]);
            let r1 = red.resistance(a as u32, b as u32);
            assert_relative_eq!(r0, r1, max_relative = 1e-9);
        }
    }

    #[test]
    fn trace_is_composable() {
        let p = params(0.5, 4);
        let net = build_tree_network(&p).unwrap();
        // S1: depths 2..4, S2: leaves only
        let s1 = level_range_indices(2, 4);
        let m1: Vec<f64> = s1.iter().map(|&k| net.measure()[k as usize]).collect();
        let t1 = trace_network(&net, &s1, &m1).unwrap();
        let leaves = level_range_indices(4, 4);
        let m2 = vec![1.0; leaves.len()];
        // indices of leaves within s1
        let s2_local: Vec<u32> = leaves
            .iter()
            .map(|k| s1.iter().position(|x| x == k).unwrap() as u32)
            .collect();
        let via = trace_network(&t1, &s2_local, &m2).unwrap();
        let direct = trace_network(&net, &leaves, &m2).unwrap();
        assert_eq!(via.edges().len(), direct.edges().len());
        for (a, b) in via.edges().iter().zip(direct.edges()) {
            assert_eq!((a.0, a.1), (b.0, b.1));
            assert_relative_eq!(a.2, b.2, max_relative = 1e-9);
        }
    }

    #[test]
    fn hitting_time_examples() {
        let p = params(0.7, 1);
        let net = build_tree_network(&p).unwrap();
        assert_eq!(expected_hitting_time(&net, 1, 1).unwrap(), 0.0);
        // leaf to root in T_1: one forced unit-mean jump
        assert_relative_eq!(
            expected_hitting_time(&net, 1, 0).unwrap(),
            1.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn commute_identity_t1() {
        let p = params(0.5, 1);
        let net = build_tree_network(&p).unwrap();
        // leaf <-> leaf: R = 2, total conductance 4, commute = 8
        let c = expected_hitting_time(&net, 1, 2).unwrap()
            + expected_hitting_time(&net, 2, 1).unwrap();
        assert_relative_eq!(c, 8.0, max_relative = 1e-12);
        assert!(commute_identity_check(&net, 10, 3).unwrap() <= 1e-9);
    }

    #[test]
    fn commute_identity_t3_random_pairs() {
        let net = build_tree_network(&params(0.5, 3)).unwrap();
        assert!(commute_identity_check(&net, 20, 17).unwrap() <= 1e-9);
    }

    #[test]
    fn commute_identity_requires_row_sum_measure() {
        let p = params(0.5, 2);
        let net = build_tree_network(&p).unwrap();
        let keep = level_range_indices(2, 2);
        let traced = trace_network(&net, &keep, &vec![0.25; keep.len()]).unwrap();
        assert!(commute_identity_check(&traced, 5, 0).is_err());
    }

    #[test]
    fn cover_dp_t1_is_five_for_any_lambda() {
        for lam in [0.3, 0.5, 1.0, 2.5] {
            let net = build_tree_network(&params(lam, 1)).unwrap();
            assert_relative_eq!(
                exact_expected_cover_time(&net, 0).unwrap(),
                5.0,
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn cover_dp_single_vertex() {
        let net = Network::single(NodeLabel::Tree(Vertex::ROOT), 1.0).unwrap();
        assert_eq!(exact_expected_cover_time(&net, 0).unwrap(), 0.0);
    }

    #[test]
    fn cover_dp_respects_cap() {
        let net = build_tree_network(&params(0.5, 4)).unwrap();
        match exact_expected_cover_time(&net, 0) {
            Err(CoreError::SizeCap { hint, .. }) => assert!(hint.contains("Monte Carlo")),
            other => panic!("expected size-cap error, got {other:?}"),
        }
    }

    #[test]
    fn network_json_round_trip() {
        let net = build_tree_network(&params(0.5, 3)).unwrap();
        let text = serde_json::to_string(&net.to_json()).unwrap();
        let back = Network::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(net.labels(), back.labels());
        assert_eq!(net.measure(), back.measure());
        assert_eq!(net.edges(), back.edges());
    }

    #[test]
    fn disconnected_network_rejected() {
        let labels: Vec<NodeLabel> = (0..3u64)
            .map(|w| NodeLabel::Tree(Vertex::new(2, w).unwrap()))
            .collect();
        let r = Network::new(labels, vec![(0, 1, 1.0)], vec![1.0; 3]);
        assert!(matches!(r, Err(CoreError::Disconnected(_))));
    }
}
