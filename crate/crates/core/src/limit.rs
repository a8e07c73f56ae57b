//! The approximation ladder towards the limiting jump process on the
//! boundary: the leaf-trace chain on the depth-n representatives, nested
//! cover times along embedded levels, and the cover-time rescaling.
//!
//! The trace of T_n's network onto its 2^n leaves is built by eliminating
//! internal vertices deepest-first; each leaf keeps a single conductance to
//! the ancestor currently being processed, which makes the elimination run
//! in O(4^n) with the fill-in confined to the leaf block.

use crate::error::{CoreError, Result};
use crate::network::{Network, NodeLabel};
use crate::rng::StreamRng;
use crate::tree::{b_n, LeafAddress, Params, Vertex};
use crate::walk::Family;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Leaf-trace chains are stored dense; 2^12 states is the default ceiling.
pub const TILDE_DENSE_CAP: u32 = 12;

/// The leaf-trace network: T_n's network traced onto its 2^n depth-n
/// vertices (identified with the zero-tail boundary representatives), with
/// the uniform measure 2^{−n}. Resistances between representatives equal the
/// tree path metric of the padded leaf addresses.
pub fn build_tilde_chain(p: &Params) -> Result<Network> {
    build_tilde_chain_capped(p, TILDE_DENSE_CAP)
}

#[allow(clippy::needless_range_loop)]
pub fn build_tilde_chain_capped(p: &Params, cap: u32) -> Result<Network> {
    let n = p.depth();
    if n < 1 {
        return Err(CoreError::InvalidParams("leaf trace needs depth >= 1".into()));
    }
    if n > cap {
        return Err(CoreError::SizeCap {
            got: 1usize << n,
            cap: 1usize << cap,
            hint: "leaf-trace networks are dense".into(),
        });
    }
    let leaves = 1usize << n;
    let mut dense = vec![0.0f64; leaves * leaves];
    // Conductance from each leaf to its currently-shallowest live ancestor;
    // before any elimination that ancestor is the depth-(n-1) parent.
    let mut up = vec![1.0 / p.lambda_pow(n - 1); leaves];
    for d in (0..n).rev() {
        let span = 1usize << (n - d);
        let parent_c = if d == 0 { 0.0 } else { 1.0 / p.lambda_pow(d - 1) };
        for w in 0..(1usize << d) {
            let lo = w * span;
            let hi = lo + span;
            let mut s = parent_c;
            for k in lo..hi {
                s += up[k];
            }
            for k in lo..hi {
                let row = k * leaves;
                let ck = up[k] / s;
                for j in (k + 1)..hi {
                    dense[row + j] += ck * up[j];
                }
            }
            if d > 0 {
                for k in lo..hi {
                    up[k] *= parent_c / s;
                }
            }
        }
    }
    let max_entry = dense.iter().cloned().fold(0.0f64, f64::max);
    let clamp = 1e-15 * max_entry;
    let mut edges = Vec::with_capacity(leaves * (leaves - 1) / 2);
    for k in 0..leaves {
        for j in (k + 1)..leaves {
            let c = dense[k * leaves + j];
            if c > clamp {
                edges.push((k as u32, j as u32, c));
            }
        }
    }
    let labels: Vec<NodeLabel> = (0..leaves as u64)
        .map(|w| NodeLabel::Boundary(LeafAddress::new(Vertex::new(n, w).expect("valid word"))))
        .collect();
    let measure = vec![crate::tree::mu_tilde_point(n); leaves];
    Network::new(labels, edges, measure)
}

/// The all-zero representative, a member of every embedded level.
pub const TILDE_START: u32 = 0;

/// Per-lca-depth conductance scalars of the leaf trace: by the symmetry of
/// the tree, the traced conductance between two leaves depends only on the
/// depth of their deepest common ancestor. Computing the elimination on these
/// scalars reproduces the dense build exactly and makes jump sampling O(1):
/// draw the lca depth from an n-way alias table, then flip one address bit
/// and randomize the bits below it.
#[derive(Clone, Debug)]
pub struct TildeWalkSampler {
    n: u32,
    /// g[L]: conductance between leaves whose lca has depth L
    level_conductance: Vec<f64>,
    level_alias: crate::walk::AliasTable,
    /// common exponential holding rate (row sum / 2^{-n})
    rate: f64,
    /// log of the nearest-sibling jump probability, for run collapsing
    ln_flip: f64,
    /// jump distribution conditioned on not flipping (levels 0..n-2)
    non_flip_alias: Option<crate::walk::AliasTable>,
}

impl TildeWalkSampler {
    pub fn new(p: &Params) -> Result<TildeWalkSampler> {
        let n = p.depth();
        if n < 1 {
            return Err(CoreError::InvalidParams("leaf trace needs depth >= 1".into()));
        }
        // same elimination as the dense build, collapsed to per-level scalars
        let mut inc = vec![0.0f64; n as usize];
        let mut up = 1.0 / p.lambda_pow(n - 1);
        for d in (0..n).rev() {
            let span = (1u64 << (n - d)) as f64;
            let parent_c = if d == 0 { 0.0 } else { 1.0 / p.lambda_pow(d - 1) };
            let s = parent_c + span * up;
            inc[d as usize] = up * up / s;
            up *= parent_c / s;
        }
        let mut level_conductance = vec![0.0f64; n as usize];
        let mut acc = 0.0;
        for l in 0..n as usize {
            acc += inc[l];
            level_conductance[l] = acc;
        }
        // weight of jumping to lca depth L: g(L) · 2^{n-1-L} targets
        let weights: Vec<f64> = (0..n)
            .map(|l| level_conductance[l as usize] * 2.0f64.powi((n - 1 - l) as i32))
            .collect();
        let row_sum: f64 = weights.iter().sum();
        let rate = row_sum / crate::tree::mu_tilde_point(n);
        let non_flip_alias = if n >= 2 {
            Some(crate::walk::AliasTable::new(&weights[..n as usize - 1]))
        } else {
            None
        };
        Ok(TildeWalkSampler {
            n,
            level_conductance,
            ln_flip: (weights[n as usize - 1] / row_sum).ln(),
            level_alias: crate::walk::AliasTable::new(&weights),
            rate,
            non_flip_alias,
        })
    }

    pub fn depth(&self) -> u32 {
        self.n
    }

    pub fn states(&self) -> usize {
        1usize << self.n
    }

    /// Conductance between two distinct leaf words: g(lca depth), where the
    /// lca depth is n − 1 − (index of the highest differing bit).
    pub fn conductance(&self, x: u64, y: u64) -> f64 {
        assert_ne!(x, y);
        let hb = 63 - (x ^ y).leading_zeros();
        self.level_conductance[(self.n - hb - 1) as usize]
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    #[inline]
    fn step(&self, cur: u64, rng: &mut StreamRng) -> u64 {
        let l = self.level_alias.sample(rng) as u32;
        self.jump_to_level(cur, l, rng)
    }

    #[inline]
    fn jump_to_level(&self, cur: u64, l: u32, rng: &mut StreamRng) -> u64 {
        let b = self.n - 1 - l;
        let flipped = ((cur >> b) ^ 1) << b;
        if b == 0 {
            flipped
        } else {
            flipped | rng.next_below(1u64 << b)
        }
    }

    /// Consecutive nearest-sibling flips before the next longer jump:
    /// geometric run, one draw. Returns (flip count, position after flips).
    #[inline]
    fn flip_run(&self, cur: u64, rng: &mut StreamRng) -> (u64, u64) {
        let u = 1.0 - rng.next_f64();
        let m = (u.ln() / self.ln_flip) as u64;
        (m, cur ^ (m & 1))
    }

    /// Cover time of all 2^n representatives from the all-zero leaf, via the
    /// Gamma shortcut (all rates coincide by symmetry): (τ, jumps). Flip
    /// runs between two already-visited siblings are collapsed.
    pub fn simulate_cover(&self, rng: &mut StreamRng) -> (f64, u64) {
        let states = self.states();
        let mut visited = vec![false; states];
        visited[TILDE_START as usize] = true;
        let mut remaining = states - 1;
        let mut cur = TILDE_START as u64;
        let mut jumps = 0u64;
        while remaining > 0 {
            if let Some(non_flip) = &self.non_flip_alias {
                if visited[(cur ^ 1) as usize] {
                    let (m, moved) = self.flip_run(cur, rng);
                    jumps += m;
                    let l = non_flip.sample(rng) as u32;
                    cur = self.jump_to_level(moved, l, rng);
                    jumps += 1;
                    if !visited[cur as usize] {
                        visited[cur as usize] = true;
                        remaining -= 1;
                    }
                    continue;
                }
            }
            cur = self.step(cur, rng);
            jumps += 1;
            if !visited[cur as usize] {
                visited[cur as usize] = true;
                remaining -= 1;
            }
        }
        let g: f64 = rand_distr::Gamma::new(jumps as f64, 1.0)
            .expect("valid shape")
            .sample(rng);
        (g / self.rate, jumps)
    }
}

/// A ladder of embedded levels m₁ < … < m_k ≤ n inside the depth-n leaf
/// chain: the depth-m representatives are the leaf words divisible by
/// 2^{n−m}.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LadderSpec {
    pub lambda: f64,
    pub depth: u32,
    pub levels: Vec<u32>,
    pub samples: usize,
    pub seed: u64,
}

impl LadderSpec {
    pub fn new(lambda: f64, depth: u32, levels: Vec<u32>, samples: usize, seed: u64) -> Result<LadderSpec> {
        if levels.is_empty() {
            return Err(CoreError::InvalidParams("ladder needs at least one level".into()));
        }
        if levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CoreError::InvalidParams("ladder levels must be strictly increasing".into()));
        }
        if *levels.last().unwrap() > depth {
            return Err(CoreError::InvalidParams("ladder levels must not exceed the depth".into()));
        }
        if samples == 0 {
            return Err(CoreError::InvalidParams("ladder needs samples >= 1".into()));
        }
        Ok(LadderSpec { lambda, depth, levels, samples, seed })
    }

    /// Default ladder: every even level in [4, n] (with [n] as the fallback
    /// for shallow trees).
    pub fn default_levels(depth: u32) -> Vec<u32> {
        if depth < 4 {
            return vec![depth];
        }
        let mut levels: Vec<u32> = (4..=depth).filter(|m| m % 2 == 0).collect();
        if *levels.last().unwrap() != depth {
            levels.push(depth);
        }
        levels
    }
}

/// Per-path nested cover times: `taus[s][i]` is the time sample `s` first
/// had visited every level-i representative.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LadderSamples {
    pub levels: Vec<u32>,
    pub taus: Vec<Vec<f64>>,
}

impl LadderSamples {
    pub fn level_means(&self) -> Vec<f64> {
        let mut means = vec![0.0; self.levels.len()];
        for path in &self.taus {
            for (m, t) in means.iter_mut().zip(path) {
                *m += t;
            }
        }
        for m in &mut means {
            *m /= self.taus.len() as f64;
        }
        means
    }
}

/// Simulates the leaf-trace chain and records, on each path, the nested
/// cover time of every ladder level. Holding times are per-event
/// exponentials so the within-path times share one clock; nested levels make
/// them nondecreasing pathwise, which is asserted.
pub fn sample_limit_cover(spec: &LadderSpec) -> Result<LadderSamples> {
    let p = Params::new(spec.lambda, spec.depth)?;
    LadderSpec::new(spec.lambda, spec.depth, spec.levels.clone(), spec.samples, spec.seed)?;
    let sampler = TildeWalkSampler::new(&p)?;
    let n = spec.depth;
    let taus: Vec<Vec<f64>> = (0..spec.samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = StreamRng::new(spec.seed, i);
            ladder_path(&sampler, n, &spec.levels, &mut rng)
        })
        .collect();
    for path in &taus {
        assert!(
            path.windows(2).all(|w| w[0] <= w[1]),
            "nested cover times must be nondecreasing"
        );
    }
    Ok(LadderSamples { levels: spec.levels.clone(), taus })
}

fn ladder_path(sampler: &TildeWalkSampler, n: u32, levels: &[u32], rng: &mut StreamRng) -> Vec<f64> {
    let mut visited = vec![false; sampler.states()];
    // remaining representatives per level; level m has 2^m of them
    let mut remaining: Vec<u64> = levels.iter().map(|&m| 1u64 << m).collect();
    let mut taus = vec![f64::NAN; levels.len()];
    let mut outstanding = levels.len();
    let mut t = 0.0;
    let mut cur = TILDE_START as u64;
    loop {
        // arrival bookkeeping
        if !visited[cur as usize] {
            visited[cur as usize] = true;
            let tz = if cur == 0 { n } else { (cur.trailing_zeros()).min(n) };
            // member of level m iff 2^{n-m} divides the word, i.e. m >= n - tz
            for (i, &m) in levels.iter().enumerate() {
                if m >= n - tz {
                    remaining[i] -= 1;
                    if remaining[i] == 0 {
                        taus[i] = t;
                        outstanding -= 1;
                    }
                }
            }
            if outstanding == 0 {
                return taus;
            }
        }
        // collapse sibling flip runs; recorded times only move at arrivals to
        // unvisited states, which a run cannot contain
        if let Some(non_flip) = &sampler.non_flip_alias {
            if visited[(cur ^ 1) as usize] {
                let (m, moved) = sampler.flip_run(cur, rng);
                let g: f64 = rand_distr::Gamma::new((m + 1) as f64, 1.0)
                    .expect("valid shape")
                    .sample(rng);
                t += g / sampler.rate();
                let l = non_flip.sample(rng) as u32;
                cur = sampler.jump_to_level(moved, l, rng);
                continue;
            }
        }
        let h: f64 = Exp1.sample(rng);
        t += h / sampler.rate();
        cur = sampler.step(cur, rng);
    }
}

/// Parallel leaf-chain cover sampling, one stream per sample index.
pub fn sample_tilde_covers(
    p: &Params,
    seed: u64,
    count: usize,
) -> Result<Vec<crate::walk::RunRecord>> {
    let sampler = TildeWalkSampler::new(p)?;
    Ok((0..count as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = StreamRng::new(seed, i);
            let (tau, jumps) = sampler.simulate_cover(&mut rng);
            crate::walk::RunRecord {
                family: Family::Tilde,
                lambda: p.lambda(),
                n: p.depth(),
                seed,
                stream: i,
                tau,
                jumps,
            }
        })
        .collect())
}

/// A cover-time sample together with its family-appropriate normalizations.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct RescaledSample {
    pub family: Family,
    pub lambda: f64,
    pub n: u32,
    pub tau: f64,
    /// The headline normalization: (2−λ)/(4λ)·(λ/2)^n·τ for the raw walk,
    /// τ/b_n for the windowed walk, τ itself for the leaf chain.
    pub value: f64,
    /// The b_n^{-1} variant (coincides with `value` up to 1−(λ/2)^n for the
    /// raw family; identity for the leaf chain).
    pub bn_value: f64,
}

/// The rescaling constant (2−λ)/(4λ)·(λ/2)^n of the distributional limit.
pub fn scaling_prefactor(p: &Params) -> f64 {
    let lam = p.lambda();
    (2.0 - lam) / (4.0 * lam) * (lam / 2.0).powi(p.depth() as i32)
}

pub fn rescale_cover(tau: f64, family: Family, p: &Params) -> RescaledSample {
    let bn = b_n(p);
    let (value, bn_value) = match family {
        Family::Raw => (scaling_prefactor(p) * tau, tau / bn),
        Family::Bar => (tau / bn, tau / bn),
        Family::Tilde => (tau, tau),
    };
    RescaledSample { family, lambda: p.lambda(), n: p.depth(), tau, value, bn_value }
}
