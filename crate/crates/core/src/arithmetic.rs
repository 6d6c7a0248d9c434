//! Continued fractions, the Gauss map and finite-horizon Diophantine checks.
//!
//! The expansion is driven by the exact residuals `q_n·α − p_n` (computed
//! with a fused multiply-add, which is correctly rounded as long as
//! `q_n < 2⁵³`) instead of by iterating the Gauss map in floating point:
//! the Gauss map amplifies rounding by `1/α²` per step, the residuals do not.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gauss iterates below this value are treated as "α was rational".
pub const IRRATIONALITY_GUARD: f64 = 1e-12;

/// Convergent denominators are capped so that `q·α − p` stays exact.
pub const MAX_DENOMINATOR: i64 = 1 << 53;

/// The Gauss map `x ↦ {1/x}`.
pub fn gauss(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!(
            "Gauss map needs alpha in (0,1), got {alpha}"
        )));
    }
    let inv = 1.0 / alpha;
    Ok(inv - inv.floor())
}

/// `U(x) = [[⌊1/x⌋, 1], [1, 0]]`.
pub fn gauss_matrix(x: f64) -> [[i64; 2]; 2] {
    [[(1.0 / x).floor() as i64, 1], [1, 0]]
}

/// Continued fraction data of a frequency `α ∈ (0,1)` up to a finite depth.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuedFraction {
    pub alpha: f64,
    pub depth: usize,
    /// Partial quotients `a_1, …, a_n`.
    pub a: Vec<i64>,
    /// Numerators `p_0, …, p_n`.
    pub p: Vec<i64>,
    /// Denominators `q_0, …, q_n`.
    pub q: Vec<i64>,
    /// Gauss iterates `α_0, …, α_n`.
    pub alphas: Vec<f64>,
    /// `β_k = α_0 ⋯ α_k = (-1)^k (q_k α − p_k)`, `k = 0, …, n`.
    pub betas: Vec<f64>,
}

/// Wire format: `{alpha, a[], p[], q[], beta[]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContinuedFractionJson {
    pub alpha: f64,
    pub a: Vec<i64>,
    pub p: Vec<i64>,
    pub q: Vec<i64>,
    pub beta: Vec<f64>,
}

/// Expand `alpha` to `depth` partial quotients.
pub fn expand(alpha: f64, depth: usize) -> Result<ContinuedFraction> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha must lie in (0,1), got {alpha}")));
    }
    if depth == 0 {
        return Err(Error::Domain("depth must be at least 1".into()));
    }
    if alpha < IRRATIONALITY_GUARD {
        return Err(Error::PrecisionExhausted {
            level: 0,
            value: alpha,
        });
    }
    // (q_{-1}, p_{-1}) = (0, 1), (q_0, p_0) = (1, 0)
    let (mut q_prev, mut p_prev) = (0i64, 1i64);
    let mut p = vec![0i64];
    let mut q = vec![1i64];
    let mut a = Vec::with_capacity(depth);
    let mut alphas = vec![alpha];
    let mut betas = vec![alpha];
    // residual r_k = q_k α − p_k; β_k = |r_k|
    let mut r_prev: f64 = -1.0; // q_{-1}α − p_{-1}
    let mut r = alpha;
    for n in 1..=depth {
        let alpha_prev = alphas[n - 1];
        // a_n = ⌊1/α_{n-1}⌋ = ⌊β_{n-2}/β_{n-1}⌋, from exact residuals
        let ratio = r_prev.abs() / r.abs();
        let mut an = ratio.floor();
        // guard the floor against the last-ulp ambiguity of the ratio
        let frac = ratio - an;
        if frac > 1.0 - 1e-15 || frac < 1e-15 {
            let cand = ratio.round() as i64;
            let rem = (cand as f64).mul_add(-r.abs(), r_prev.abs());
            an = if rem < 0.0 { (cand - 1) as f64 } else { cand as f64 };
        }
        let an = an as i64;
        if an < 1 {
            return Err(Error::PrecisionExhausted {
                level: n,
                value: alpha_prev,
            });
        }
        let q_n = an
            .checked_mul(q[n - 1])
            .and_then(|v| v.checked_add(q_prev))
            .filter(|v| *v < MAX_DENOMINATOR)
            .ok_or(Error::PrecisionExhausted {
                level: n,
                value: alpha_prev,
            })?;
        let p_n = an * p[n - 1] + p_prev;
        let r_n = (q_n as f64).mul_add(alpha, -(p_n as f64));
        let beta_n = r_n.abs();
        let alpha_n = beta_n / betas[n - 1];
        if alpha_n < IRRATIONALITY_GUARD || alpha_n >= 1.0 {
            return Err(Error::PrecisionExhausted {
                level: n,
                value: alpha_n,
            });
        }
        a.push(an);
        q_prev = q[n - 1];
        p_prev = p[n - 1];
        q.push(q_n);
        p.push(p_n);
        alphas.push(alpha_n);
        betas.push(beta_n);
        r_prev = r;
        r = r_n;
    }
    Ok(ContinuedFraction {
        alpha,
        depth,
        a,
        p,
        q,
        alphas,
        betas,
    })
}

/// Expand until the next denominator would exceed `q_limit` (at least one
/// level is always produced).
pub fn expand_to_denominator(alpha: f64, q_limit: i64) -> Result<ContinuedFraction> {
    let mut cf = expand(alpha, 1)?;
    let mut depth = 1;
    loop {
        let next = match expand(alpha, depth + 1) {
            Ok(next) => next,
            Err(_) => return Ok(cf),
        };
        if next.q[depth + 1] > q_limit {
            return Ok(cf);
        }
        cf = next;
        depth += 1;
    }
}

impl ContinuedFraction {
    /// `Q_n = [[q_n, p_n], [q_{n-1}, p_{n-1}]]`; `Q_0 = I`.
    pub fn convergent_matrix(&self, n: usize) -> [[i64; 2]; 2] {
        if n == 0 {
            return [[1, 0], [0, 1]];
        }
        [[self.q[n], self.p[n]], [self.q[n - 1], self.p[n - 1]]]
    }

    /// `U(α_{n-1})⋯U(α_0)` built as an explicit product of the partial-quotient
    /// matrices.
    pub fn convergent_matrix_product(&self, n: usize) -> [[i64; 2]; 2] {
        let mut m = [[1i64, 0], [0, 1]];
        for k in 0..n {
            let u = [[self.a[k], 1], [1, 0]];
            m = int_mat_mul(&u, &m);
        }
        m
    }

    pub fn to_json(&self) -> ContinuedFractionJson {
        ContinuedFractionJson {
            alpha: self.alpha,
            a: self.a.clone(),
            p: self.p.clone(),
            q: self.q.clone(),
            beta: self.betas.clone(),
        }
    }

    /// Rebuild from the wire format (Gauss iterates recovered as `β_k/β_{k-1}`).
    pub fn from_json(j: &ContinuedFractionJson) -> Result<Self> {
        let depth = j.a.len();
        if j.p.len() != depth + 1 || j.q.len() != depth + 1 || j.beta.len() != depth + 1 {
            return Err(Error::Parse("inconsistent continued fraction lengths".into()));
        }
        let mut alphas = vec![j.alpha];
        for k in 1..=depth {
            alphas.push(j.beta[k] / j.beta[k - 1]);
        }
        Ok(ContinuedFraction {
            alpha: j.alpha,
            depth,
            a: j.a.clone(),
            p: j.p.clone(),
            q: j.q.clone(),
            alphas,
            betas: j.beta.clone(),
        })
    }

    /// Check every structural identity; returns a description of the first
    /// violated one.
    pub fn verify(&self, tol: f64) -> std::result::Result<(), String> {
        let n = self.depth;
        for k in 0..=n {
            let (q_km2, p_km2) = if k >= 2 {
                (self.q[k - 2], self.p[k - 2])
            } else if k == 1 {
                (0, 1)
            } else {
                (0, 0)
            };
            if k >= 1 {
                let ak = self.a[k - 1];
                if self.q[k] != ak * self.q[k - 1] + q_km2 || self.p[k] != ak * self.p[k - 1] + p_km2
                {
                    return Err(format!("recurrence fails at level {k}"));
                }
                let det = det_int(&self.convergent_matrix(k));
                if det != if k % 2 == 0 { 1 } else { -1 } {
                    return Err(format!("det Q_{k} = {det}"));
                }
            }
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let r = sign * (self.q[k] as f64).mul_add(self.alpha, -(self.p[k] as f64));
            if (r - self.betas[k]).abs() > tol {
                return Err(format!("beta_{k} mismatch: {} vs {r}", self.betas[k]));
            }
            let prod: f64 = self.alphas[..=k].iter().product();
            if (prod - self.betas[k]).abs() > tol * self.betas[k].max(1e-300) * 1e3 + tol * 1e-3 {
                return Err(format!("beta_{k} is not the product of Gauss iterates"));
            }
            if k < n {
                let lo = 1.0 / (self.q[k + 1] + self.q[k]) as f64;
                let hi = 1.0 / self.q[k + 1] as f64;
                if !(lo < self.betas[k] && self.betas[k] < hi) {
                    return Err(format!("beta_{k} outside (1/(q_k+1 + q_k), 1/q_k+1)"));
                }
            }
        }
        Ok(())
    }
}

pub fn int_mat_mul(x: &[[i64; 2]; 2], y: &[[i64; 2]; 2]) -> [[i64; 2]; 2] {
    [
        [
            x[0][0] * y[0][0] + x[0][1] * y[1][0],
            x[0][0] * y[0][1] + x[0][1] * y[1][1],
        ],
        [
            x[1][0] * y[0][0] + x[1][1] * y[1][0],
            x[1][0] * y[0][1] + x[1][1] * y[1][1],
        ],
    ]
}

pub fn det_int(m: &[[i64; 2]; 2]) -> i64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

/// Parameters `(κ, τ)` of `DC(κ, τ)` with a finite verification horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DioParams {
    pub kappa: f64,
    pub tau: f64,
    pub k_max: u64,
}

impl DioParams {
    pub fn new(kappa: f64, tau: f64, k_max: u64) -> Result<Self> {
        if !(kappa > 0.0) || !(tau > 0.0) || k_max < 1 {
            return Err(Error::Domain(format!(
                "invalid Diophantine parameters kappa={kappa}, tau={tau}, k_max={k_max}"
            )));
        }
        Ok(DioParams { kappa, tau, k_max })
    }
}

/// Outcome of a finite-horizon Diophantine check.
///
/// `worst_margin` is the smallest normalized margin
/// `dist·(scale)^τ/κ − 1`; the check holds iff it is positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DioCheck {
    pub holds: bool,
    pub worst: i64,
    pub worst_margin: f64,
}

/// Distance from `x` to the nearest integer.
#[inline]
pub fn dist_to_integer(x: f64) -> f64 {
    (x - x.round()).abs()
}

/// Finite-horizon surrogate of `α ∈ DC(κ, τ)`: checks
/// `|qα − p| > κ q^{-τ}` for `1 ≤ q ≤ k_max`.
pub fn check_dc(alpha: f64, params: DioParams) -> DioCheck {
    let mut worst = 1i64;
    let mut worst_margin = f64::INFINITY;
    for q in 1..=params.k_max {
        let qf = q as f64;
        let prod = qf * alpha;
        let p = prod.round();
        let dist = qf.mul_add(alpha, -p).abs();
        let margin = dist * qf.powf(params.tau) / params.kappa - 1.0;
        if margin < worst_margin {
            worst_margin = margin;
            worst = q as i64;
        }
    }
    DioCheck {
        holds: worst_margin > 0.0,
        worst,
        worst_margin,
    }
}

/// Levels `n ∈ [0, n_range]` at which `G^n(α)` passes [`check_dc`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RdcWitness {
    pub levels: Vec<usize>,
    /// Set when the Gauss orbit lost precision before `n_range`.
    pub truncated: bool,
}

pub fn check_rdc(alpha: f64, params: DioParams, n_range: usize) -> RdcWitness {
    let (alphas, truncated) = match gauss_orbit(alpha, n_range) {
        Ok(v) => (v, false),
        Err(partial) => (partial, true),
    };
    let levels = alphas
        .iter()
        .enumerate()
        .filter(|(_, &an)| check_dc(an, params).holds)
        .map(|(n, _)| n)
        .collect();
    RdcWitness { levels, truncated }
}

/// `α_0, …, α_n`, or the prefix computed before precision ran out.
fn gauss_orbit(alpha: f64, n: usize) -> std::result::Result<Vec<f64>, Vec<f64>> {
    if n == 0 {
        return Ok(vec![alpha]);
    }
    match expand(alpha, n) {
        Ok(cf) => Ok(cf.alphas),
        Err(_) => {
            // longest successful prefix
            let mut best = vec![alpha];
            for d in (1..n).rev() {
                if let Ok(cf) = expand(alpha, d) {
                    best = cf.alphas;
                    break;
                }
            }
            Err(best)
        }
    }
}

/// Finite-horizon check that `β` is Diophantine with respect to `α`:
/// `‖2β − kα‖_{ℝ/ℤ} ≥ κ(1+|k|)^{-τ}` for `|k| ≤ k_max`.
pub fn dio_wrt_alpha(beta: f64, alpha: f64, params: DioParams) -> DioCheck {
    let k_max = params.k_max as i64;
    let mut worst = 0i64;
    let mut worst_margin = f64::INFINITY;
    for k in -k_max..=k_max {
        let dist = dist_to_integer(2.0 * beta - k as f64 * alpha);
        let margin = dist * (1.0 + k.unsigned_abs() as f64).powf(params.tau) / params.kappa - 1.0;
        if margin < worst_margin {
            worst_margin = margin;
            worst = k;
        }
    }
    DioCheck {
        holds: worst_margin >= 0.0,
        worst,
        worst_margin,
    }
}

/// The golden mean `(√5 − 1)/2`.
pub fn golden() -> f64 {
    (5f64.sqrt() - 1.0) / 2.0
}

/// The silver mean `√2 − 1`.
pub fn silver() -> f64 {
    2f64.sqrt() - 1.0
}
