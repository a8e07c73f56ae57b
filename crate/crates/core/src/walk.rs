//! Event-driven simulation of the continuous-time chains attached to a
//! [`Network`]: cover times, hitting times, local-time ledgers, additive
//! functionals and the excision time change onto a vertex subset.
//!
//! Two sampling modes coexist deliberately. Cover times are assembled with
//! the Gamma shortcut — run the discrete jump chain, then draw one
//! Gamma(visits, rate) per vertex — which is exact in distribution and needs
//! far fewer variates. Anywhere pathwise time alignment matters (ledgers,
//! excision, coupled runs) holding times are drawn per event instead.

use crate::error::{CoreError, Result};
use crate::network::Network;
use crate::rng::StreamRng;
use rand_distr::{Distribution, Exp1, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Which of the process families a sample belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// X^n, the biased walk on all of T_n.
    Raw,
    /// X̄^n, the walk watched on the window Σ̄_n.
    Bar,
    /// X̃^n, the leaf-trace chain.
    Tilde,
}

impl Family {
    pub fn text(&self) -> &'static str {
        match self {
            Family::Raw => "raw",
            Family::Bar => "bar",
            Family::Tilde => "tilde",
        }
    }

    pub fn parse(s: &str) -> Result<Family> {
        match s {
            "raw" => Ok(Family::Raw),
            "bar" => Ok(Family::Bar),
            "tilde" => Ok(Family::Tilde),
            _ => Err(CoreError::Parse(format!("unknown family {s:?}"))),
        }
    }
}

/// Walker alias slots for all vertices, stored flat.
#[derive(Clone, Debug)]
struct AliasSlots {
    prob: Vec<f64>,
    alias: Vec<u32>,
}

/// A standalone alias table over `k` outcomes.
#[derive(Clone, Debug)]
pub struct AliasTable {
    prob: Vec<f64>,
    alias: Vec<u32>,
}

impl AliasTable {
    pub fn new(weights: &[f64]) -> AliasTable {
        assert!(!weights.is_empty());
        let mut prob = Vec::new();
        let mut alias = Vec::new();
        build_alias(weights, &mut prob, &mut alias);
        AliasTable { prob, alias }
    }

    #[inline]
    pub fn sample(&self, rng: &mut StreamRng) -> usize {
        let k = self.prob.len();
        let t = rng.next_f64() * k as f64;
        let idx = (t as usize).min(k - 1);
        let frac = t - idx as f64;
        if frac < self.prob[idx] {
            idx
        } else {
            self.alias[idx] as usize
        }
    }
}

fn build_alias(weights: &[f64], prob: &mut Vec<f64>, alias: &mut Vec<u32>) {
    let k = weights.len();
    let total: f64 = weights.iter().sum();
    let base = prob.len();
    prob.resize(base + k, 0.0);
    alias.resize(base + k, 0);
    let mut scaled: Vec<f64> = weights.iter().map(|w| w * k as f64 / total).collect();
    let mut small: Vec<u32> = Vec::new();
    let mut large: Vec<u32> = Vec::new();
    for (i, &s) in scaled.iter().enumerate() {
        if s < 1.0 {
            small.push(i as u32);
        } else {
            large.push(i as u32);
        }
    }
    while !small.is_empty() && !large.is_empty() {
        let s = small.pop().unwrap();
        let l = *large.last().unwrap();
        prob[base + s as usize] = scaled[s as usize];
        alias[base + s as usize] = l;
        scaled[l as usize] -= 1.0 - scaled[s as usize];
        if scaled[l as usize] < 1.0 {
            large.pop();
            small.push(l);
        }
    }
    // Float drift can leave orphans on either stack; they saturate to 1.
    for i in small.into_iter().chain(large) {
        prob[base + i as usize] = 1.0;
        alias[base + i as usize] = i;
    }
}

/// Precomputed jump distributions and holding rates for one network.
#[derive(Clone, Debug)]
pub struct JumpChainEngine {
    offsets: Vec<u32>,
    targets: Vec<u32>,
    slots: AliasSlots,
    rates: Vec<f64>,
    len: usize,
}

impl JumpChainEngine {
    pub fn new(net: &Network) -> Result<JumpChainEngine> {
        let n = net.len();
        let nbr = net.neighbor_lists();
        let sums = net.row_sums();
        let mut rates = Vec::with_capacity(n);
        for (s, m) in sums.iter().zip(net.measure()) {
            let r = s / m;
            if !r.is_finite() || (n > 1 && r <= 0.0) {
                return Err(CoreError::Domain(format!("non-finite holding rate {r}")));
            }
            rates.push(r);
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut targets = Vec::new();
        let mut prob = Vec::new();
        let mut alias = Vec::new();
        offsets.push(0u32);
        for list in &nbr {
            let weights: Vec<f64> = list.iter().map(|&(_, c)| c).collect();
            if !weights.is_empty() {
                build_alias(&weights, &mut prob, &mut alias);
            }
            targets.extend(list.iter().map(|&(t, _)| t));
            offsets.push(targets.len() as u32);
        }
        Ok(JumpChainEngine {
            offsets,
            targets,
            slots: AliasSlots { prob, alias },
            rates,
            len: n,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Exponential holding rate at `v` (row sum / measure).
    #[inline]
    pub fn rate(&self, v: u32) -> f64 {
        self.rates[v as usize]
    }

    /// True when every holding rate is exactly 1 (canonical T_n networks).
    pub fn unit_rates(&self) -> bool {
        self.rates.iter().all(|&r| r == 1.0)
    }

    /// Jump probability from `x` to `y` (zero when not adjacent).
    /// Reconstructed from the alias structure; introspection/test use.
    pub fn jump_probability(&self, x: u32, y: u32) -> f64 {
        let lo = self.offsets[x as usize] as usize;
        let hi = self.offsets[x as usize + 1] as usize;
        let k = hi - lo;
        let mut hit = 0.0;
        for slot in 0..k {
            let mut w = self.slots.prob[lo + slot];
            for s in 0..k {
                if self.slots.alias[lo + s] as usize == slot && self.slots.prob[lo + s] < 1.0 {
                    w += 1.0 - self.slots.prob[lo + s];
                }
            }
            if self.targets[lo + slot] == y {
                hit += w / k as f64;
            }
        }
        hit
    }

    /// One step of the embedded jump chain.
    #[inline]
    pub fn next_state(&self, cur: u32, rng: &mut StreamRng) -> u32 {
        let lo = self.offsets[cur as usize] as usize;
        let hi = self.offsets[cur as usize + 1] as usize;
        let k = hi - lo;
        debug_assert!(k > 0, "jump from an isolated vertex");
        let t = rng.next_f64() * k as f64;
        let idx = (t as usize).min(k - 1);
        let frac = t - idx as f64;
        let slot = if frac < self.slots.prob[lo + idx] {
            idx
        } else {
            self.slots.alias[lo + idx] as usize
        };
        self.targets[lo + slot]
    }

    /// One holding time at `v`.
    #[inline]
    pub fn holding(&self, v: u32, rng: &mut StreamRng) -> f64 {
        let e: f64 = Exp1.sample(rng);
        e / self.rates[v as usize]
    }
}

/// One completed simulation run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub family: Family,
    pub lambda: f64,
    pub n: u32,
    /// Global seed of the sample set this run belongs to.
    pub seed: u64,
    /// Stream index of this run within the sample set.
    pub stream: u64,
    /// Cover (or stopping) time.
    pub tau: f64,
    /// Number of jumps of the embedded chain.
    pub jumps: u64,
}

/// Provenance stamped onto run records.
#[derive(Clone, Copy, Debug)]
pub struct SampleMeta {
    pub family: Family,
    pub lambda: f64,
    pub n: u32,
    pub seed: u64,
}

/// Runs the jump chain until every vertex has been visited and assembles the
/// cover time as Σ_x Gamma(visits(x), rate(x)) — exact in distribution since
/// holding times at x are i.i.d. exponentials.
pub fn simulate_cover(
    engine: &JumpChainEngine,
    start: u32,
    meta: &SampleMeta,
    stream: u64,
    rng: &mut StreamRng,
) -> RunRecord {
    let (tau, jumps, _) = simulate_cover_detailed(engine, start, rng);
    RunRecord {
        family: meta.family,
        lambda: meta.lambda,
        n: meta.n,
        seed: meta.seed,
        stream,
        tau,
        jumps,
    }
}

/// As [`simulate_cover`], also returning per-vertex visit counts (holdings
/// completed before the covering arrival).
pub fn simulate_cover_detailed(
    engine: &JumpChainEngine,
    start: u32,
    rng: &mut StreamRng,
) -> (f64, u64, Vec<u32>) {
    let n = engine.len();
    let mut visited = vec![false; n];
    let mut counts = vec![0u32; n];
    let mut remaining = n - 1;
    visited[start as usize] = true;
    let mut jumps = 0u64;
    let mut cur = start;
    while remaining > 0 {
        counts[cur as usize] += 1;
        cur = engine.next_state(cur, rng);
        jumps += 1;
        if !visited[cur as usize] {
            visited[cur as usize] = true;
            remaining -= 1;
        }
    }
    let mut tau = 0.0;
    for (x, &c) in counts.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let g: f64 = if c == 1 {
            Exp1.sample(rng)
        } else {
            Gamma::new(c as f64, 1.0).expect("valid shape").sample(rng)
        };
        tau += g / engine.rates[x];
    }
    (tau, jumps, counts)
}

/// Samples `count` independent cover times in parallel, one counter-based
/// stream per sample index; output order and contents are independent of the
/// worker count.
pub fn sample_covers(
    engine: &JumpChainEngine,
    start: u32,
    meta: &SampleMeta,
    count: usize,
) -> Vec<RunRecord> {
    (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = StreamRng::new(meta.seed, i);
            simulate_cover(engine, start, meta, i, &mut rng)
        })
        .collect()
}

/// Stopping rules for [`simulate_until`].
#[derive(Clone, Debug)]
pub enum StopRule {
    HitVertex(u32),
    HitSet(Vec<u32>),
    /// Stop at the arrival that completes a visit to every listed vertex.
    CoverSet(Vec<u32>),
    TimeHorizon(f64),
}

/// Why a run stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopCause {
    Hit,
    Covered,
    HorizonReached,
}

/// Outcome of an event-driven run.
#[derive(Clone, Debug)]
pub struct UntilOutcome {
    pub final_vertex: u32,
    pub elapsed: f64,
    pub jumps: u64,
    pub cause: StopCause,
}

/// Event-driven simulation with per-event exponential holding times, so that
/// ledgers and time changes are path-exact. Every completed holding is
/// reported as `(vertex, holding)`; a run stopped by a hit or cover rule
/// additionally reports its final arrival as `(vertex, 0.0)`.
pub fn simulate_until<F: FnMut(u32, f64)>(
    engine: &JumpChainEngine,
    start: u32,
    stop: &StopRule,
    rng: &mut StreamRng,
    mut on_event: F,
) -> Result<UntilOutcome> {
    let n = engine.len();
    let mut hit_mask = vec![false; n];
    let mut cover_mask = vec![false; n];
    let mut remaining = 0usize;
    let mut horizon = f64::INFINITY;
    match stop {
        StopRule::HitVertex(v) => hit_mask[*v as usize] = true,
        StopRule::HitSet(s) => {
            for &v in s {
                hit_mask[v as usize] = true;
            }
        }
        StopRule::CoverSet(s) => {
            if s.is_empty() {
                return Err(CoreError::InvalidParams("empty cover set".into()));
            }
            for &v in s {
                if !cover_mask[v as usize] {
                    cover_mask[v as usize] = true;
                    remaining += 1;
                }
            }
        }
        StopRule::TimeHorizon(t) => {
            if t.is_nan() || *t < 0.0 {
                return Err(CoreError::InvalidParams("negative time horizon".into()));
            }
            horizon = *t;
        }
    }
    let is_hit_rule = matches!(stop, StopRule::HitVertex(_) | StopRule::HitSet(_));
    let is_cover_rule = matches!(stop, StopRule::CoverSet(_));

    let mut t = 0.0;
    let mut jumps = 0u64;
    let mut cur = start;
    loop {
        // arrival processing
        if is_hit_rule && hit_mask[cur as usize] {
            on_event(cur, 0.0);
            return Ok(UntilOutcome { final_vertex: cur, elapsed: t, jumps, cause: StopCause::Hit });
        }
        if is_cover_rule && cover_mask[cur as usize] {
            cover_mask[cur as usize] = false;
            remaining -= 1;
            if remaining == 0 {
                on_event(cur, 0.0);
                return Ok(UntilOutcome {
                    final_vertex: cur,
                    elapsed: t,
                    jumps,
                    cause: StopCause::Covered,
                });
            }
        }
        let h = engine.holding(cur, rng);
        if t + h >= horizon {
            let part = horizon - t;
            on_event(cur, part);
            return Ok(UntilOutcome {
                final_vertex: cur,
                elapsed: horizon,
                jumps,
                cause: StopCause::HorizonReached,
            });
        }
        on_event(cur, h);
        t += h;
        cur = engine.next_state(cur, rng);
        jumps += 1;
    }
}

/// Per-vertex occupied times accumulated from an event stream.
#[derive(Clone, Debug)]
pub struct LocalTimeLedger {
    occupied: Vec<f64>,
    elapsed: f64,
}

impl LocalTimeLedger {
    pub fn new(n: usize) -> LocalTimeLedger {
        LocalTimeLedger { occupied: vec![0.0; n], elapsed: 0.0 }
    }

    #[inline]
    pub fn record(&mut self, v: u32, holding: f64) {
        self.occupied[v as usize] += holding;
        self.elapsed += holding;
    }

    pub fn occupied(&self) -> &[f64] {
        &self.occupied
    }

    pub fn elapsed(&self) -> f64 {
        self.elapsed
    }

    /// Local time L(x) = occupied(x) / ν({x}).
    pub fn local_time(&self, v: u32, measure: &[f64]) -> f64 {
        self.occupied[v as usize] / measure[v as usize]
    }
}

/// Relative defect of the occupation density identity
/// Σ f(x) o(x) = Σ f(x) L(x) ν({x}); exact by construction, this guards the
/// bookkeeping.
pub fn occupation_identity_check(ledger: &LocalTimeLedger, net: &Network, f: &[f64]) -> f64 {
    let direct: f64 = f
        .iter()
        .zip(ledger.occupied())
        .map(|(fx, ox)| fx * ox)
        .sum();
    let via_local: f64 = (0..net.len())
        .map(|x| f[x] * ledger.local_time(x as u32, net.measure()) * net.measure()[x])
        .sum();
    (direct - via_local).abs() / direct.abs().max(1.0)
}

/// Additive functional A = Σ_x L(x) w({x}) of a completed run.
pub fn additive_functional(ledger: &LocalTimeLedger, weights: &[f64], measure: &[f64]) -> f64 {
    ledger
        .occupied()
        .iter()
        .zip(weights)
        .zip(measure)
        .map(|((o, w), m)| if *w == 0.0 { 0.0 } else { o * w / m })
        .sum()
}

/// A_t = Σ_x L_t(x) w(x) along a trajectory, as a piecewise-linear clock with
/// its right-continuous inverse.
#[derive(Clone, Debug)]
pub struct AdditiveClock {
    /// (t_k, A_k) breakpoints; A is linear in between.
    points: Vec<(f64, f64)>,
}

impl AdditiveClock {
    pub fn from_events(events: &[(u32, f64)], weights: &[f64], measure: &[f64]) -> AdditiveClock {
        let mut points = Vec::with_capacity(events.len() + 1);
        let mut t = 0.0;
        let mut a = 0.0;
        points.push((0.0, 0.0));
        for &(v, h) in events {
            if h == 0.0 {
                continue;
            }
            t += h;
            a += h * weights[v as usize] / measure[v as usize];
            points.push((t, a));
        }
        AdditiveClock { points }
    }

    pub fn total(&self) -> f64 {
        self.points.last().map_or(0.0, |p| p.1)
    }

    /// A_t, linearly interpolated; clamped beyond the recorded horizon.
    pub fn value(&self, t: f64) -> f64 {
        let pts = &self.points;
        if t <= 0.0 {
            return 0.0;
        }
        match pts.binary_search_by(|p| p.0.partial_cmp(&t).unwrap()) {
            Ok(i) => pts[i].1,
            Err(i) if i >= pts.len() => pts.last().unwrap().1,
            Err(i) => {
                let (t0, a0) = pts[i - 1];
                let (t1, a1) = pts[i];
                a0 + (a1 - a0) * (t - t0) / (t1 - t0)
            }
        }
    }

    /// Right-continuous inverse α(a) = inf{ s : A_s > a }; `None` once `a`
    /// is at or beyond the terminal value.
    pub fn inverse(&self, a: f64) -> Option<f64> {
        let pts = &self.points;
        if a >= self.total() {
            return None;
        }
        if a < 0.0 {
            return Some(0.0);
        }
        // first breakpoint index whose value exceeds a
        let mut i = pts.partition_point(|p| p.1 <= a);
        if i == 0 {
            i = 1;
        }
        let (t0, a0) = pts[i - 1];
        let (t1, a1) = pts[i];
        if a1 == a0 {
            Some(t1)
        } else {
            Some(t0 + (t1 - t0) * (a - a0).max(0.0) / (a1 - a0))
        }
    }
}

/// Streaming excision of the time spent outside `keep`: consumes arrivals and
/// holdings in order and tracks the traced process's clock.
#[derive(Clone, Debug)]
pub struct Exciser {
    keep: Vec<bool>,
    seen: Vec<bool>,
    remaining: usize,
    excised: f64,
    cover_tau: Option<f64>,
    first_entry: Option<u32>,
}

impl Exciser {
    pub fn new(n: usize, keep: &[u32]) -> Result<Exciser> {
        if keep.is_empty() {
            return Err(CoreError::InvalidParams("keep set is empty".into()));
        }
        let mut mask = vec![false; n];
        let mut remaining = 0;
        for &v in keep {
            if !mask[v as usize] {
                mask[v as usize] = true;
                remaining += 1;
            }
        }
        Ok(Exciser {
            keep: mask,
            seen: vec![false; n],
            remaining,
            excised: 0.0,
            cover_tau: None,
            first_entry: None,
        })
    }

    #[inline]
    pub fn arrival(&mut self, v: u32) {
        let vi = v as usize;
        if self.keep[vi] && !self.seen[vi] {
            self.seen[vi] = true;
            if self.first_entry.is_none() {
                self.first_entry = Some(v);
            }
            self.remaining -= 1;
            if self.remaining == 0 {
                self.cover_tau = Some(self.excised);
            }
        }
    }

    #[inline]
    pub fn holding(&mut self, v: u32, h: f64) {
        if self.keep[v as usize] {
            self.excised += h;
        }
    }

    pub fn total_excised(&self) -> f64 {
        self.excised
    }

    pub fn cover_tau(&self) -> Option<f64> {
        self.cover_tau
    }

    pub fn first_entry(&self) -> Option<u32> {
        self.first_entry
    }
}

/// Result of excising a recorded trajectory onto a subset.
#[derive(Clone, Debug)]
pub struct ExcisedRecord {
    /// Traced-process cover time of the keep set, when the trajectory covered it.
    pub cover_tau: Option<f64>,
    /// Total excised duration (the traced clock at the end of the trajectory).
    pub total_excised: f64,
    /// Where the trajectory first entered the keep set.
    pub first_entry: u32,
}

/// Deletes the holding intervals spent outside `keep` and reads off the
/// traced process's cover time. The event list is the output of
/// [`simulate_until`]: each event is an arrival followed by its holding, the
/// final arrival carrying a zero holding.
pub fn excise_time_change<I>(events: I, n: usize, keep: &[u32]) -> Result<ExcisedRecord>
where
    I: IntoIterator<Item = (u32, f64)>,
{
    let mut ex = Exciser::new(n, keep)?;
    for (v, h) in events {
        ex.arrival(v);
        ex.holding(v, h);
    }
    let first_entry = ex
        .first_entry()
        .ok_or_else(|| CoreError::Domain("trajectory never enters the keep set".into()))?;
    Ok(ExcisedRecord {
        cover_tau: ex.cover_tau(),
        total_excised: ex.total_excised(),
        first_entry,
    })
}

/// Specialized sampler for the biased walk on the canonical T_n itself: the
/// topology is heap-index arithmetic (children of i are 2i+1, 2i+2), a leaf
/// jump is forced (no variate needed), and because every holding rate is 1
/// the Gamma assembly Σ_x Gamma(visits(x), 1) collapses to a single
/// Gamma(jumps, 1) draw.
///
/// Once a bottom-level parent and both its leaves have been visited, the
/// leaf excursions below it carry no covering information, so the whole
/// excursion run (m downs before the next up, m geometric) is folded into
/// one draw: 2m+1 jumps, or a Gamma(2m+1, 1) time increment on event-exact
/// paths whose keep set contains the triple. Agrees with the generic engine
/// in distribution; used where raw-walk throughput matters.
#[derive(Clone, Debug)]
pub struct TreeWalkSampler {
    len: usize,
    leaf_base: usize,
    parent_base: usize,
    /// jump up when u < λ/(2+λ); to child 0 when u < (1+λ)/(2+λ)
    up: f64,
    mid: f64,
    /// ln of the downward probability 2/(2+λ), for geometric excursion runs
    ln_down: f64,
}

impl TreeWalkSampler {
    pub fn new(p: &crate::tree::Params) -> TreeWalkSampler {
        let n = p.depth();
        let lam = p.lambda();
        TreeWalkSampler {
            len: (1usize << (n + 1)) - 1,
            leaf_base: (1usize << n) - 1,
            parent_base: if n == 0 { usize::MAX } else { (1usize << n.saturating_sub(1)) - 1 },
            up: lam / (2.0 + lam),
            mid: (1.0 + lam) / (2.0 + lam),
            ln_down: (2.0 / (2.0 + lam)).ln(),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    fn step(&self, cur: usize, rng: &mut StreamRng) -> usize {
        if cur >= self.leaf_base {
            return (cur - 1) >> 1;
        }
        let u = rng.next_f64();
        if cur == 0 {
            1 + usize::from(u >= 0.5)
        } else if u < self.up {
            (cur - 1) >> 1
        } else if u < self.mid {
            2 * cur + 1
        } else {
            2 * cur + 2
        }
    }

    /// True at a non-root bottom-level parent whose leaves are both visited.
    #[inline]
    fn collapsible(&self, cur: usize, visited: &[bool]) -> bool {
        cur >= self.parent_base
            && cur < self.leaf_base
            && cur != 0
            && visited[2 * cur + 1]
            && visited[2 * cur + 2]
    }

    /// Number of leaf excursions before the next upward jump: geometric with
    /// success probability λ/(2+λ).
    #[inline]
    fn excursion_run(&self, rng: &mut StreamRng) -> u64 {
        let u = 1.0 - rng.next_f64(); // in (0, 1]
        (u.ln() / self.ln_down) as u64
    }

    /// Cover time from the root via the Gamma shortcut: (τ, jumps).
    pub fn simulate_cover(&self, rng: &mut StreamRng) -> (f64, u64) {
        if self.len == 1 {
            return (0.0, 0);
        }
        let mut visited = vec![false; self.len];
        visited[0] = true;
        let mut remaining = self.len - 1;
        let mut cur = 0usize;
        let mut jumps = 0u64;
        while remaining > 0 {
            if self.collapsible(cur, &visited) {
                jumps += 2 * self.excursion_run(rng) + 1;
                cur = (cur - 1) >> 1;
                // the parent was visited before cur; no bookkeeping needed
                continue;
            }
            cur = self.step(cur, rng);
            jumps += 1;
            if !visited[cur] {
                visited[cur] = true;
                remaining -= 1;
            }
        }
        let tau = Gamma::new(jumps as f64, 1.0).expect("valid shape").sample(rng);
        (tau, jumps)
    }

    /// Coupled realization of (τ_cov of the full walk, excised cover time of
    /// `keep`), event-exact: holdings are per-event exponentials, with the
    /// excursion collapse applied only where the triple lies inside `keep`
    /// and carries no first visits, so both clocks advance by the identical
    /// Gamma(2m+1, 1) total they would accumulate event by event.
    pub fn coupled_cover_with_excision(
        &self,
        keep: &[u32],
        rng: &mut StreamRng,
    ) -> Result<(f64, f64, u64)> {
        let mut ex = Exciser::new(self.len, keep)?;
        let mut keep_mask = vec![false; self.len];
        for &k in keep {
            keep_mask[k as usize] = true;
        }
        let mut visited = vec![false; self.len];
        visited[0] = true;
        let mut remaining = self.len - 1;
        let mut t = 0.0;
        let mut jumps = 0u64;
        let mut cur = 0usize;
        ex.arrival(0);
        while remaining > 0 {
            if self.collapsible(cur, &visited)
                && keep_mask[cur]
                && keep_mask[2 * cur + 1]
                && keep_mask[2 * cur + 2]
            {
                let m = self.excursion_run(rng);
                let block = 2 * m + 1;
                let g: f64 = Gamma::new(block as f64, 1.0).expect("valid shape").sample(rng);
                t += g;
                ex.holding(cur as u32, g); // all of it is spent inside keep
                jumps += block;
                cur = (cur - 1) >> 1;
                continue;
            }
            let h: f64 = Exp1.sample(rng);
            ex.holding(cur as u32, h);
            t += h;
            cur = self.step(cur, rng);
            jumps += 1;
            if !visited[cur] {
                visited[cur] = true;
                remaining -= 1;
            }
            ex.arrival(cur as u32);
        }
        let bar = ex
            .cover_tau()
            .ok_or_else(|| CoreError::Domain("keep set not covered".into()))?;
        Ok((t, bar, jumps))
    }
}

/// Parallel raw-walk cover sampling via [`TreeWalkSampler`].
pub fn sample_tree_covers(
    p: &crate::tree::Params,
    meta: &SampleMeta,
    count: usize,
) -> Vec<RunRecord> {
    let sampler = TreeWalkSampler::new(p);
    (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = StreamRng::new(meta.seed, i);
            let (tau, jumps) = sampler.simulate_cover(&mut rng);
            RunRecord {
                family: meta.family,
                lambda: meta.lambda,
                n: meta.n,
                seed: meta.seed,
                stream: i,
                tau,
                jumps,
            }
        })
        .collect()
}

/// One coupled realization: the full chain's cover time together with the
/// excised (traced) chain's cover time of `keep`, from the same path. Holding
/// times are drawn per event; no Gamma shortcut.
pub fn coupled_cover_with_excision(
    engine: &JumpChainEngine,
    start: u32,
    keep: &[u32],
    rng: &mut StreamRng,
) -> Result<(f64, f64, u64)> {
    let n = engine.len();
    let mut ex = Exciser::new(n, keep)?;
    let mut visited = vec![false; n];
    let mut remaining = n - 1;
    visited[start as usize] = true;
    let mut t = 0.0;
    let mut jumps = 0u64;
    let mut cur = start;
    ex.arrival(cur);
    while remaining > 0 {
        let h = engine.holding(cur, rng);
        ex.holding(cur, h);
        t += h;
        cur = engine.next_state(cur, rng);
        jumps += 1;
        if !visited[cur as usize] {
            visited[cur as usize] = true;
            remaining -= 1;
        }
        ex.arrival(cur);
    }
    let bar = ex.cover_tau().ok_or_else(|| {
        CoreError::Domain("keep set not covered by a full cover; is keep ⊆ vertices?".into())
    })?;
    Ok((t, bar, jumps))
}
