//! Vertex addressing for the binary tree, the resistance metric, the boundary
//! Cantor set, and the measures attached to all of these.
//!
//! A vertex at depth `m` is the bit word `(i_1, …, i_m)` stored as an integer
//! with `i_1` in the most significant position; the root is the empty word.
//! Boundary points are represented only through eventually-zero addresses
//! (`LeafAddress`): a finite prefix followed by an infinite tail of zeros.

use crate::error::{CoreError, Result};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Default cap on tree depth, keeping `2^n` enumerable and `λ^m` well away
/// from underflow for the λ range used in experiments.
pub const DEFAULT_MAX_DEPTH: u32 = 30;

/// A vertex of the (finite or infinite) binary tree: a depth and a bit word.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Vertex {
    depth: u32,
    word: u64,
}

impl Vertex {
    pub const ROOT: Vertex = Vertex { depth: 0, word: 0 };

    pub fn new(depth: u32, word: u64) -> Result<Vertex> {
        if depth > 63 {
            return Err(CoreError::InvalidParams(format!(
                "vertex depth {depth} exceeds word width"
            )));
        }
        if depth < 64 && word >> depth != 0 {
            return Err(CoreError::InvalidParams(format!(
                "word {word:#b} does not fit in depth {depth}"
            )));
        }
        Ok(Vertex { depth, word })
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn word(&self) -> u64 {
        self.word
    }

    pub fn is_root(&self) -> bool {
        self.depth == 0
    }

    /// Strips the last bit; `None` at the root.
    pub fn parent(&self) -> Option<Vertex> {
        if self.depth == 0 {
            None
        } else {
            Some(Vertex {
                depth: self.depth - 1,
                word: self.word >> 1,
            })
        }
    }

    /// Appends one bit.
    pub fn child(&self, bit: u8) -> Vertex {
        debug_assert!(bit < 2);
        Vertex {
            depth: self.depth + 1,
            word: (self.word << 1) | u64::from(bit),
        }
    }

    /// The i-th bit of the word, 1-indexed from the root end.
    pub fn bit(&self, i: u32) -> u8 {
        debug_assert!(i >= 1 && i <= self.depth);
        ((self.word >> (self.depth - i)) & 1) as u8
    }

    /// The ancestor at the given depth (a prefix of this word).
    pub fn ancestor(&self, depth: u32) -> Vertex {
        assert!(depth <= self.depth);
        Vertex {
            depth,
            word: self.word >> (self.depth - depth),
        }
    }

    /// Text form used in CSV/JSON outputs: the root is `∅`, any other vertex
    /// its bit string, e.g. `101`. Parsing accepts `e` as a root alias.
    pub fn text(&self) -> String {
        if self.depth == 0 {
            "∅".to_string()
        } else {
            (1..=self.depth).map(|i| char::from(b'0' + self.bit(i))).collect()
        }
    }

    pub fn parse(s: &str) -> Result<Vertex> {
        let s = s.trim();
        if s == "∅" || s == "e" {
            return Ok(Vertex::ROOT);
        }
        let mut v = Vertex::ROOT;
        for ch in s.chars() {
            match ch {
                '0' => v = v.child(0),
                '1' => v = v.child(1),
                _ => {
                    return Err(CoreError::Parse(format!("bad vertex text {s:?}")));
                }
            }
        }
        Ok(v)
    }
}

impl fmt::Debug for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Vertex({})", self.text())
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text())
    }
}

/// Deepest common ancestor of two vertices.
pub fn lca(x: Vertex, y: Vertex) -> Vertex {
    let d = x.depth.min(y.depth);
    let mut wx = x.word >> (x.depth - d);
    let mut wy = y.word >> (y.depth - d);
    let mut depth = d;
    while wx != wy {
        wx >>= 1;
        wy >>= 1;
        depth -= 1;
    }
    Vertex { depth, word: wx }
}

/// A boundary point with an eventually-zero address: a finite prefix followed
/// by the tail `(0,0,0,…)`. Stored canonically with trailing zero bits of the
/// prefix stripped, so that e.g. `10|0*` and `100|0*` compare equal.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LeafAddress {
    prefix: Vertex,
}

impl LeafAddress {
    /// The address with prefix `v` and zero tail, canonicalised.
    pub fn new(v: Vertex) -> LeafAddress {
        let mut p = v;
        while p.depth > 0 && p.word & 1 == 0 {
            p = p.parent().unwrap();
        }
        LeafAddress { prefix: p }
    }

    /// The all-zeros address `(0,0,0,…)`.
    pub const ZERO: LeafAddress = LeafAddress { prefix: Vertex::ROOT };

    pub fn prefix(&self) -> Vertex {
        self.prefix
    }

    /// The depth-n representative vertex (the prefix padded with zeros).
    /// Distinct addresses padded to a common depth give distinct words.
    pub fn at_depth(&self, n: u32) -> Vertex {
        assert!(n >= self.prefix.depth);
        Vertex {
            depth: n,
            word: self.prefix.word << (n - self.prefix.depth),
        }
    }

    /// Text form, e.g. `101|0*`; the all-zero address renders as `∅|0*`.
    pub fn text(&self) -> String {
        format!("{}|0*", self.prefix.text())
    }

    pub fn parse(s: &str) -> Result<LeafAddress> {
        let body = s
            .strip_suffix("|0*")
            .ok_or_else(|| CoreError::Parse(format!("bad leaf address {s:?}")))?;
        Ok(LeafAddress::new(Vertex::parse(body)?))
    }
}

impl fmt::Debug for LeafAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LeafAddress({})", self.text())
    }
}

impl fmt::Display for LeafAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text())
    }
}

/// Model parameters: the bias λ and the tree depth n, with cached powers of λ
/// so that `λ^m` is always the same repeated-multiplication value.
#[derive(Clone, Debug)]
pub struct Params {
    lambda: f64,
    depth: u32,
    /// pow[m] = λ^m, m = 0..=max_depth+1
    pow: Vec<f64>,
    /// prefix[m] = Σ_{j<m} λ^j
    prefix: Vec<f64>,
}

impl Params {
    /// λ must be finite and positive; the main experiments use λ ∈ (0,1) but
    /// the regime-table operations accept any λ > 0. Depth is capped at
    /// [`DEFAULT_MAX_DEPTH`].
    pub fn new(lambda: f64, depth: u32) -> Result<Params> {
        Params::with_max_depth(lambda, depth, DEFAULT_MAX_DEPTH)
    }

    pub fn with_max_depth(lambda: f64, depth: u32, max_depth: u32) -> Result<Params> {
        if !lambda.is_finite() || lambda <= 0.0 {
            return Err(CoreError::InvalidParams(format!(
                "lambda must be finite and positive, got {lambda}"
            )));
        }
        if depth > max_depth {
            return Err(CoreError::InvalidParams(format!(
                "depth {depth} exceeds configured maximum {max_depth}"
            )));
        }
        let len = (max_depth as usize + 2).max(depth as usize + 2);
        let mut pow = Vec::with_capacity(len);
        let mut prefix = Vec::with_capacity(len + 1);
        let mut p = 1.0;
        prefix.push(0.0);
        for _ in 0..len {
            pow.push(p);
            prefix.push(prefix.last().unwrap() + p);
            p *= lambda;
        }
        Ok(Params { lambda, depth, pow, prefix })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    /// λ^m from the cached table.
    pub fn lambda_pow(&self, m: u32) -> f64 {
        let m = m as usize;
        if m < self.pow.len() {
            self.pow[m]
        } else {
            self.lambda.powi(m as i32)
        }
    }

    /// Σ_{j=0}^{m-1} λ^j (the resistance from the root down to depth m).
    pub fn edge_prefix_sum(&self, m: u32) -> f64 {
        let m = m as usize;
        if m < self.prefix.len() {
            self.prefix[m]
        } else {
            (0..m).map(|j| self.lambda.powi(j as i32)).sum()
        }
    }

    /// Same parameters at another depth, reusing nothing but the validation.
    pub fn at_depth(&self, depth: u32) -> Result<Params> {
        Params::new(self.lambda, depth)
    }
}

/// Path metric: sum of edge lengths λ^m along the unique tree path between
/// `x` and `y`. Equals the effective resistance between them in T_n.
pub fn metric_d(x: Vertex, y: Vertex, p: &Params) -> f64 {
    let a = lca(x, y);
    let s = p.edge_prefix_sum(a.depth());
    (p.edge_prefix_sum(x.depth()) - s) + (p.edge_prefix_sum(y.depth()) - s)
}

/// Upper bound λ^n/(1−λ) on d(x, y) over all descendants and boundary points
/// below a depth-n vertex. Requires λ < 1.
pub fn boundary_distance_bound(depth: u32, p: &Params) -> Result<f64> {
    if p.lambda() >= 1.0 {
        return Err(CoreError::Domain(
            "boundary distance bound needs lambda < 1".into(),
        ));
    }
    Ok(p.lambda_pow(depth) / (1.0 - p.lambda()))
}

/// The vertex measure μ_n({x}) of T_n: the sum of the conductances incident
/// to x, in closed form.
pub fn mu_n_vertex(x: Vertex, p: &Params) -> Result<f64> {
    let n = p.depth();
    let m = x.depth();
    if m > n {
        return Err(CoreError::Domain(format!(
            "vertex depth {m} exceeds tree depth {n}"
        )));
    }
    if n == 0 {
        // T_0 has no edges.
        return Ok(0.0);
    }
    Ok(if m == 0 {
        2.0
    } else if m == n {
        1.0 / p.lambda_pow(n - 1)
    } else {
        1.0 / p.lambda_pow(m - 1) + 2.0 / p.lambda_pow(m)
    })
}

/// Total conductance measure b_n = μ_n(T_n); handles λ = 2 by the direct sum.
pub fn b_n(p: &Params) -> f64 {
    total_conductance(p.lambda(), p.depth())
}

/// μ_n(T_n) = 4 Σ_{j<n} (2/λ)^j for any λ > 0.
pub fn total_conductance(lambda: f64, n: u32) -> f64 {
    let r = 2.0 / lambda;
    if (r - 1.0).abs() < 1e-12 {
        4.0 * n as f64
    } else {
        4.0 * (r.powi(n as i32) - 1.0) / (r - 1.0)
    }
}

/// Resistance diameter of T_n: the distance between two leaves on opposite
/// sides of the root, 2 Σ_{m<n} λ^m.
pub fn resistance_diameter(lambda: f64, n: u32) -> f64 {
    if (lambda - 1.0).abs() < 1e-12 {
        2.0 * n as f64
    } else {
        2.0 * (1.0 - lambda.powi(n as i32)) / (1.0 - lambda)
    }
}

/// Mass 2^{−depth(i)} of the boundary cylinder Σ(i).
pub fn mu_sigma_cylinder(i: Vertex) -> f64 {
    0.5f64.powi(i.depth() as i32)
}

/// Uniform mass 2^{−n} of each point of the depth-n leaf representative set.
pub fn mu_tilde_point(n: u32) -> f64 {
    0.5f64.powi(n as i32)
}

/// The middle-thirds contraction pair underlying the boundary embedding.
fn psi(bit: u8, x: f64) -> f64 {
    (2.0 * f64::from(bit) + x) / 3.0
}

/// Embeds an eventually-zero boundary address into the middle-thirds Cantor
/// set: the limit ψ_{i1}∘…∘ψ_{im}(0), a ternary expansion with digits 0/2.
pub fn cantor_embed_point(a: LeafAddress) -> f64 {
    let v = a.prefix();
    let mut x = 0.0;
    for i in (1..=v.depth()).rev() {
        x = psi(v.bit(i), x);
    }
    x
}

/// The closed interval image of the cylinder below a prefix: the prefix point
/// plus a window of width 3^{−depth}.
pub fn cantor_embed_cylinder(prefix: Vertex) -> (f64, f64) {
    let lo = cantor_embed_point(LeafAddress::new(prefix));
    (lo, lo + 3.0f64.powi(-(prefix.depth() as i32)))
}

/// Explicit covering-number bound: the smallest depth m whose subtree-radius
/// bound λ^m/(1−λ) is ≤ eps gives at most 2^m (λ^{−m} + 2) covering balls.
/// Satisfies bound ≤ C·eps^{−c} with c = −log(2/λ)/log(λ). Requires λ < 1.
pub fn covering_bound(eps: f64, p: &Params) -> Result<f64> {
    if eps.is_nan() || eps <= 0.0 {
        return Err(CoreError::Domain("eps must be positive".into()));
    }
    if p.lambda() >= 1.0 {
        return Err(CoreError::Domain("covering bound needs lambda < 1".into()));
    }
    let lam = p.lambda();
    let mut m = 0u32;
    let mut radius = 1.0 / (1.0 - lam);
    while radius > eps && m < 4000 {
        m += 1;
        radius *= lam;
    }
    let mf = m as i32;
    Ok(2.0f64.powi(mf) * (lam.powi(-mf) + 2.0))
}

/// The covering exponent c = −log(2/λ)/log(λ), positive for λ ∈ (0,1).
pub fn covering_exponent(lambda: f64) -> f64 {
    -((2.0 / lambda).ln()) / lambda.ln()
}

/// The level floor of the observation window Σ̄_n: max(0, n − ⌈ln n⌉).
/// The log base is a convention that the results are insensitive to;
/// natural log is the default and the choice is exposed rather than hidden.
pub fn bar_level_floor(n: u32) -> u32 {
    if n == 0 {
        return 0;
    }
    let drop = (n as f64).ln().ceil() as u32;
    n.saturating_sub(drop)
}

/// All vertices of T_n in level order (root first); index of (m, w) is
/// 2^m − 1 + w.
pub fn level_order_vertices(n: u32) -> Vec<Vertex> {
    let mut out = Vec::with_capacity((1usize << (n + 1)) - 1);
    for m in 0..=n {
        for w in 0..(1u64 << m) {
            out.push(Vertex { depth: m, word: w });
        }
    }
    out
}

/// Level-order index of a vertex among the vertices of T_n.
pub fn level_order_index(v: Vertex) -> usize {
    ((1u64 << v.depth()) - 1 + v.word()) as usize
}
