//! The Gaussian field attached to the tree metric: exact sampling via
//! independent edge increments, expected-supremum estimation, the chaining
//! functional upper bound, and the concentration-tail fit for cover times.

use crate::error::{CoreError, Result};
use crate::rng::StreamRng;
use crate::tree::Params;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// One realization of the centred field on T_n in level order: η(root) = 0
/// and independent N(0, λ^m) increments across each depth-m edge, so that
/// E((η(x) − η(y))²) = d(x, y).
pub fn sample_field(p: &Params, rng: &mut StreamRng) -> Vec<f64> {
    let n = p.depth();
    let len = (1usize << (n + 1)) - 1;
    let mut eta = vec![0.0f64; len];
    let mut depth = 1u32;
    let mut next_level = 3usize; // first index of depth 2
    let mut sd = p.lambda_pow(0).sqrt();
    for i in 1..len {
        if i >= next_level {
            depth += 1;
            next_level = (1usize << (depth + 1)) - 1;
            sd = p.lambda_pow(depth - 1).sqrt();
        }
        let z: f64 = StandardNormal.sample(rng);
        eta[i] = eta[(i - 1) / 2] + z * sd;
    }
    eta
}

/// Monte Carlo estimate (mean, standard error) of E sup_x η(x).
pub fn estimate_esup(p: &Params, samples: usize, seed: u64) -> Result<(f64, f64)> {
    if samples < 100 {
        return Err(CoreError::InsufficientSamples(format!(
            "esup estimation needs >= 100 samples, got {samples}"
        )));
    }
    let sups: Vec<f64> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = StreamRng::new(seed, i);
            sample_field(p, &mut rng)
                .into_iter()
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    let n = samples as f64;
    let mean = sups.iter().sum::<f64>() / n;
    let var = sups.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok((mean, (var / n).sqrt()))
}

/// Deterministic upper bound on the chaining functional
/// γ₂(T_n, √d) = inf sup_x Σ_k 2^{k/2} √(d(x, C_k)), using the deepest
/// depth-truncation nets the cardinality budget |C_k| ≤ 2^{2^k} admits
/// (|C_0| = 1). Nonincreasing in the budget scale.
pub fn gamma2_upper(p: &Params) -> f64 {
    gamma2_upper_with_budget(p, 1)
}

pub fn gamma2_upper_with_budget(p: &Params, budget_scale: u32) -> f64 {
    assert!(budget_scale >= 1);
    let n = p.depth();
    let mut total = 0.0;
    for k in 0..64u32 {
        // C_k = all vertices to depth m_k; |C_k| = 2^{m_k+1} − 1 ≤ 2^{s·2^k}
        // caps m_k at s·2^k − 1 (and C_0 must be a single vertex).
        let budget = if k == 0 {
            0
        } else if k >= 6 {
            n // 2^{2^6} dwarfs any enumerable tree
        } else {
            (budget_scale * (1u32 << k) - 1).min(n)
        };
        if budget >= n {
            break;
        }
        // farthest point is any deepest vertex: d = Σ_{j=budget}^{n-1} λ^j
        let d = p.edge_prefix_sum(n) - p.edge_prefix_sum(budget);
        total += 2.0f64.powf(k as f64 / 2.0) * d.sqrt();
    }
    total
}

/// A fitted exponential tail P(τ ≥ u (2/λ)^n) ≈ C e^{−c u}.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TailFit {
    pub c: f64,
    pub log_c_intercept: f64,
    pub residual_rms: f64,
    /// (u, empirical exceedance, fitted exceedance) over the fit window.
    pub points: Vec<(f64, f64, f64)>,
}

impl TailFit {
    pub fn amplitude(&self) -> f64 {
        self.log_c_intercept.exp()
    }
}

/// Grid size spanning the exceedance curve; the fit window is the top 20%.
const TAIL_GRID: usize = 100;
const TAIL_WINDOW_FRACTION: f64 = 0.2;
const TAIL_MIN_EXCEEDANCES: usize = 10;

/// Fits log P̂(τ ≥ u (2/λ)^n) against u by least squares over the top 20% of
/// grid points that keep at least 10 exceedances; the fit window is fixed a
/// priori, not tuned.
pub fn concentration_tail_check(taus: &[f64], p: &Params) -> Result<TailFit> {
    if taus.len() < 1000 {
        return Err(CoreError::InsufficientSamples(format!(
            "tail fit needs >= 1000 samples, got {}; raise the sample budget",
            taus.len()
        )));
    }
    let scale = (p.lambda() / 2.0).powi(p.depth() as i32);
    let mut v: Vec<f64> = taus.iter().map(|t| t * scale).collect();
    v.sort_unstable_by(|a, b| a.total_cmp(b));
    let nf = v.len() as f64;
    let u_lo = v[v.len() / 2];
    let u_hi = v[v.len() - TAIL_MIN_EXCEEDANCES];
    if u_hi.partial_cmp(&u_lo) != Some(std::cmp::Ordering::Greater) {
        return Err(CoreError::InsufficientSamples(
            "degenerate tail: median and upper quantile coincide".into(),
        ));
    }
    let mut us = Vec::with_capacity(TAIL_GRID);
    let mut logp = Vec::with_capacity(TAIL_GRID);
    for g in 0..TAIL_GRID {
        let u = u_lo + (u_hi - u_lo) * g as f64 / (TAIL_GRID - 1) as f64;
        let exceed = v.len() - v.partition_point(|&x| x < u);
        if exceed >= TAIL_MIN_EXCEEDANCES {
            us.push(u);
            logp.push((exceed as f64 / nf).ln());
        }
    }
    let window = ((us.len() as f64 * TAIL_WINDOW_FRACTION).ceil() as usize).max(2);
    if us.len() < window {
        return Err(CoreError::InsufficientSamples(
            "not enough tail grid points with 10 exceedances; raise the sample budget".into(),
        ));
    }
    let us = &us[us.len() - window..];
    let logp = &logp[logp.len() - window..];
    let (slope, intercept) = crate::analysis::linear_fit(us, logp);
    let c = -slope;
    let mut points = Vec::with_capacity(window);
    let mut ss = 0.0;
    for (&u, &lp) in us.iter().zip(logp) {
        let fitted = intercept + slope * u;
        ss += (lp - fitted).powi(2);
        points.push((u, lp.exp(), fitted.exp()));
    }
    Ok(TailFit {
        c,
        log_c_intercept: intercept,
        residual_rms: (ss / window as f64).sqrt(),
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::build_tree_network;
    use crate::tree::{metric_d, Vertex};
    use crate::walk::{sample_covers, Family, JumpChainEngine, SampleMeta};

    #[test]
    fn field_root_is_zero_and_leaf_variance() {
        let p = Params::new(0.5, 3).unwrap();
        let samples = 100_000u64;
        // leaf index 14 = last vertex; Var = 1 + 1/2 + 1/4 = 1.75
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for i in 0..samples {
            let mut rng = StreamRng::new(500, i);
            let eta = sample_field(&p, &mut rng);
            assert_eq!(eta[0], 0.0);
            sum += eta[14];
            sumsq += eta[14] * eta[14];
        }
        let mean = sum / samples as f64;
        let var = sumsq / samples as f64 - mean * mean;
        // SE of a sample variance of N(0,σ²) is σ²√(2/N)
        let se = 1.75 * (2.0 / samples as f64).sqrt();
        assert!((var - 1.75).abs() < 3.0 * se, "var {var}");
    }

    #[test]
    fn increment_variances_match_metric() {
        let p = Params::new(0.5, 4).unwrap();
        let vs = crate::tree::level_order_vertices(4);
        let mut rng_pairs = StreamRng::new(42, 0);
        let pairs: Vec<(usize, usize)> = (0..20)
            .map(|_| {
                (
                    rng_pairs.next_below(vs.len() as u64) as usize,
                    rng_pairs.next_below(vs.len() as u64) as usize,
                )
            })
            .collect();
        let samples = 100_000u64;
        let mut acc = vec![0.0f64; pairs.len()];
        for i in 0..samples {
            let mut rng = StreamRng::new(4242, i);
            let eta = sample_field(&p, &mut rng);
            for (k, &(a, b)) in pairs.iter().enumerate() {
                let d = eta[a] - eta[b];
                acc[k] += d * d;
            }
        }
        for (k, &(a, b)) in pairs.iter().enumerate() {
            let want = metric_d(vs[a], vs[b], &p);
            let got = acc[k] / samples as f64;
            let se = want * (2.0 / samples as f64).sqrt();
            assert!(
                (got - want).abs() <= 4.0 * se + 1e-12,
                "pair {a},{b}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn sibling_increments_uncorrelated_beyond_lca() {
        // increments of two siblings relative to their parent share no edges
        let p = Params::new(0.5, 2).unwrap();
        let a = crate::tree::level_order_index(Vertex::new(2, 0).unwrap());
        let b = crate::tree::level_order_index(Vertex::new(2, 1).unwrap());
        let parent = crate::tree::level_order_index(Vertex::new(1, 0).unwrap());
        let samples = 200_000u64;
        let mut cross = 0.0;
        for i in 0..samples {
            let mut rng = StreamRng::new(77, i);
            let eta = sample_field(&p, &mut rng);
            cross += (eta[a] - eta[parent]) * (eta[b] - eta[parent]);
        }
        let cov = cross / samples as f64;
        // each increment has variance λ = 0.5; SE of the product mean ≈ 0.5/√N
        assert!(cov.abs() < 4.0 * 0.5 / (samples as f64).sqrt(), "cov {cov}");
    }

    #[test]
    fn esup_zero_at_depth_zero() {
        let p = Params::new(0.5, 0).unwrap();
        let (mean, se) = estimate_esup(&p, 200, 1).unwrap();
        assert_eq!(mean, 0.0);
        assert_eq!(se, 0.0);
    }

    #[test]
    fn esup_nondecreasing_and_bounded() {
        let mut prev = f64::NEG_INFINITY;
        let mut prev_se = 0.0;
        let mut estimates = Vec::new();
        for n in [4u32, 6, 8, 10] {
            let p = Params::new(0.5, n).unwrap();
            let (mean, se) = estimate_esup(&p, 2000, 9000 + u64::from(n)).unwrap();
            assert!(
                mean >= prev - 2.0 * (se + prev_se),
                "esup at n={n} fell: {mean} after {prev}"
            );
            estimates.push(mean);
            prev = mean;
            prev_se = se;
        }
        // boundedness evidence: the deepest estimate stays close to the first
        assert!(estimates[3] <= 3.0 * estimates[0]);
    }

    #[test]
    fn esup_requires_samples() {
        let p = Params::new(0.5, 2).unwrap();
        assert!(estimate_esup(&p, 50, 0).is_err());
    }

    #[test]
    fn gamma2_values_and_uniformity() {
        let p8 = Params::new(0.5, 8).unwrap();
        let p14 = Params::with_max_depth(0.5, 14, 30).unwrap();
        let g8 = gamma2_upper(&p8);
        let g14 = gamma2_upper(&p14);
        // the C_0 term alone is √d(root, leaf) ≥ 1
        assert!(g8 >= (p8.edge_prefix_sum(8)).sqrt());
        assert!(g8 >= 1.0);
        assert!(g8.is_finite() && g14.is_finite());
        let drift = (g14 - g8).abs() / g8;
        assert!(drift <= 0.10, "gamma2 drift {drift}");
    }

    #[test]
    fn gamma2_single_vertex_tree_is_zero() {
        let p = Params::new(0.5, 0).unwrap();
        assert_eq!(gamma2_upper(&p), 0.0);
    }

    #[test]
    fn gamma2_monotone_in_budget() {
        let p = Params::new(0.5, 10).unwrap();
        let mut prev = f64::INFINITY;
        for scale in 1..=4u32 {
            let g = gamma2_upper_with_budget(&p, scale);
            assert!(g <= prev + 1e-12, "budget scale {scale}: {g} > {prev}");
            prev = g;
        }
    }

    #[test]
    fn tail_fit_has_positive_slope_on_cover_samples() {
        let p = Params::new(0.5, 6).unwrap();
        let net = build_tree_network(&p).unwrap();
        let engine = JumpChainEngine::new(&net).unwrap();
        let meta = SampleMeta { family: Family::Raw, lambda: 0.5, n: 6, seed: 606 };
        let taus: Vec<f64> = sample_covers(&engine, 0, &meta, 4000)
            .into_iter()
            .map(|r| r.tau)
            .collect();
        let fit = concentration_tail_check(&taus, &p).unwrap();
        assert!(fit.c > 0.0, "c = {}", fit.c);
        assert!(fit.residual_rms.is_finite());
        assert!(!fit.points.is_empty());
    }

    #[test]
    fn tail_fit_needs_samples() {
        let p = Params::new(0.5, 4).unwrap();
        let taus = vec![1.0; 100];
        assert!(matches!(
            concentration_tail_check(&taus, &p),
            Err(CoreError::InsufficientSamples(_))
        ));
    }
}
