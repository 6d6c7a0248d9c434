//! Topological degree, fibered rotation number and integrated density of
//! states.
//!
//! Lifts of the projective action are continuous in `x` only once the
//! Iwasawa angle `θ(x) = arg A(x)e₁` is followed continuously; an
//! [`AngleReference`] records such a continuation and serves as the anchor
//! for [`lift_increment_anchored`].

use serde::{Deserialize, Serialize};

use crate::cocycle::{Cocycle, QpMap, ScalarMap};
use crate::error::{Error, Result};
use crate::linalg2::{iwasawa_angle, lift_increment_anchored, wrap_half, Mat2};
use crate::spectral::schrodinger;

/// Adaptive refinement gives up beyond this many samples.
pub const MAX_CONTINUATION_STEPS: usize = 1 << 20;

/// Adjacent angle increments accepted by the continuation (turns).
const MAX_INCREMENT: f64 = 0.125;

/// A continuous lift of `x ↦ f(x)` (an angle in turns) on `[x0, x0 + span]`,
/// extended to ℝ by `θ(x + span) = θ(x) + winding`.
#[derive(Debug, Clone)]
pub struct AngleReference {
    x0: f64,
    span: f64,
    xs: Vec<f64>,
    thetas: Vec<f64>,
    winding: f64,
}

impl AngleReference {
    /// Continue the principal angle `f` over `[x0, x0 + span]`, bisecting
    /// every step whose increment is not below 1/8 turn.
    pub fn build(f: impl Fn(f64) -> f64, x0: f64, span: f64) -> Result<Self> {
        const INITIAL: usize = 64;
        let mut xs = Vec::with_capacity(4 * INITIAL);
        let mut thetas = Vec::with_capacity(4 * INITIAL);
        let mut evals = INITIAL + 1;
        let mut lifted = f(x0);
        xs.push(x0);
        thetas.push(lifted);
        let mut prev_raw = lifted;
        // explicit stack of pending intervals, processed left to right
        for i in 0..INITIAL {
            let a = x0 + span * i as f64 / INITIAL as f64;
            let b = x0 + span * (i + 1) as f64 / INITIAL as f64;
            let mut stack = vec![(b, f(b))];
            let mut left = a;
            while let Some(&(right, raw_right)) = stack.last() {
                let step = wrap_half(raw_right - prev_raw);
                if step.abs() < MAX_INCREMENT {
                    lifted += step;
                    xs.push(right);
                    thetas.push(lifted);
                    prev_raw = raw_right;
                    left = right;
                    stack.pop();
                } else {
                    let mid = 0.5 * (left + right);
                    if !(mid > left && mid < right) || evals >= MAX_CONTINUATION_STEPS {
                        return Err(Error::Resolution {
                            max_steps: MAX_CONTINUATION_STEPS,
                        });
                    }
                    evals += 1;
                    stack.push((mid, f(mid)));
                }
            }
        }
        let winding = thetas[thetas.len() - 1] - thetas[0];
        Ok(AngleReference {
            x0,
            span,
            xs,
            thetas,
            winding,
        })
    }

    /// Continuation of the Iwasawa angle of a periodic map over one period.
    pub fn iwasawa(map: &QpMap) -> Result<Self> {
        let p = map.period().unwrap_or(1) as f64;
        AngleReference::build(|x| iwasawa_angle(&map.eval_scaled(x).0), 0.0, p)
    }

    /// Total change of the lifted angle over one span.
    pub fn winding(&self) -> f64 {
        self.winding
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    /// Interpolated lifted angle at any `x ∈ ℝ`.
    pub fn at(&self, x: f64) -> f64 {
        let k = ((x - self.x0) / self.span).floor();
        let r = x - k * self.span;
        let i = match self.xs.binary_search_by(|p| p.total_cmp(&r)) {
            Ok(i) => return self.thetas[i] + k * self.winding,
            Err(i) => i.clamp(1, self.xs.len() - 1),
        };
        let (xa, xb) = (self.xs[i - 1], self.xs[i]);
        let t = ((r - xa) / (xb - xa)).clamp(0.0, 1.0);
        self.thetas[i - 1] + t * (self.thetas[i] - self.thetas[i - 1]) + k * self.winding
    }
}

fn check_positive_det(map: &QpMap) -> Result<()> {
    let p = map.period().unwrap_or(1) as f64;
    for j in 0..256 {
        let x = p * j as f64 / 256.0;
        let det = map.eval_scaled(x).0.det();
        if !(det > 0.0) {
            return Err(Error::Domain(format!("det A({x}) = {det} is not positive")));
        }
    }
    Ok(())
}

fn check_period_one(map: &QpMap) -> Result<()> {
    match map.period() {
        Some(1) => Ok(()),
        other => Err(Error::Domain(format!(
            "degree needs a map of period 1, got period {other:?}"
        ))),
    }
}

/// Winding of `x ↦ A(x)w` over `[x0, x0 + 1]`.
pub fn degree_at(map: &QpMap, x0: f64, w: f64) -> Result<i64> {
    check_period_one(map)?;
    check_positive_det(map)?;
    let (s, c) = (std::f64::consts::TAU * w).sin_cos();
    let reference = AngleReference::build(
        |x| {
            let v = map.eval_scaled(x).0.apply([c, s]);
            v[1].atan2(v[0]) / std::f64::consts::TAU
        },
        x0,
        1.0,
    )?;
    Ok(reference.winding().round() as i64)
}

/// Topological degree of a period-1 map `ℝ/ℤ → SL(2,ℝ)`.
pub fn degree(map: &QpMap) -> Result<i64> {
    degree_at(map, 0.0, 0.0)
}

/// The lift `d^A(x, w)` of a degree-0 periodic map, continuous in `(x, w)`
/// and periodic in `x`.
#[derive(Debug, Clone)]
pub struct PeriodicLift {
    reference: AngleReference,
}

impl PeriodicLift {
    pub fn new(map: &QpMap) -> Result<Self> {
        check_period_one(map)?;
        check_positive_det(map)?;
        let reference = AngleReference::iwasawa(map)?;
        let deg = reference.winding().round() as i64;
        if deg != 0 {
            return Err(Error::DegreeObstruction { degree: deg });
        }
        Ok(PeriodicLift { reference })
    }

    /// `d^A(x, w)` given the already evaluated `m = A(x)` (any positive
    /// multiple works).
    #[inline]
    pub fn increment(&self, m: &Mat2, x: f64, w: f64) -> f64 {
        lift_increment_anchored(m, w, self.reference.at(x))
    }

    /// `d^{A⁻¹}(x, w) = −d^A(x, w')` with `w'` the preimage direction.
    #[inline]
    pub fn inverse_increment(&self, m: &Mat2, x: f64, w: f64) -> f64 {
        let (s, c) = (std::f64::consts::TAU * w).sin_cos();
        let v = m.adjugate().apply([c, s]);
        let pre = v[1].atan2(v[0]) / std::f64::consts::TAU;
        -self.increment(m, x, pre)
    }
}

/// Which lattice the rotation number is defined modulo.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Modulus {
    /// `ℤ`, for cocycles over `ℝ/ℤ`.
    Integers,
    /// The frequency module `{nγ₁₀ + mγ₀₁}` of a fibered action.
    Frequencies { gamma10: f64, gamma01: f64 },
}

/// A fibered rotation number with its estimation data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotationNumber {
    /// Representative in `[0, 1)` (for actions: the raw representative).
    pub value: f64,
    /// Birkhoff average of the lift before reduction.
    pub lift: f64,
    /// Half the range of the averages over independent initial directions.
    pub spread: f64,
    pub n_iter: u64,
    pub modulus: Modulus,
}

/// Number of initial directions used for the spread estimate.
pub const DIRECTIONS: usize = 8;

/// Birkhoff average of `d^A` along the orbit of `(x0, w0)`, together with
/// seven more orbits started at `w0 + j/8`.
pub fn fibered_rotation_number(c: &Cocycle, n_iter: u64, x0: f64, w0: f64) -> Result<RotationNumber> {
    if n_iter == 0 {
        return Err(Error::Domain("n_iter must be at least 1".into()));
    }
    let lift = PeriodicLift::new(&c.map)?;
    let mut w: [f64; DIRECTIONS] =
        std::array::from_fn(|j| (w0 + j as f64 / DIRECTIONS as f64).rem_euclid(1.0));
    let mut totals = [0.0; DIRECTIONS];
    for k in 0..n_iter {
        let x = x0 + k as f64 * c.alpha;
        let m = c.map.eval_scaled(x).0;
        let anchor = lift.reference.at(x);
        for j in 0..DIRECTIONS {
            let d = lift_increment_anchored(&m, w[j], anchor);
            totals[j] += d;
            w[j] = (w[j] + d).rem_euclid(1.0);
        }
    }
    Ok(summarize(&totals, n_iter))
}

pub(crate) fn summarize(totals: &[f64; DIRECTIONS], n_iter: u64) -> RotationNumber {
    let avgs = totals.map(|t| t / n_iter as f64);
    let (lo, hi) = avgs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    RotationNumber {
        value: avgs[0].rem_euclid(1.0),
        lift: avgs[0],
        spread: 0.5 * (hi - lo),
        n_iter,
        modulus: Modulus::Integers,
    }
}

/// `N(E) = 1 − 2ρ(α, S_{v,E})`, with the lift normalized so that
/// `ρ ∈ [0, 1/2]`.
pub fn ids(v: &ScalarMap, alpha: f64, e: f64, n_iter: u64) -> Result<f64> {
    let c = schrodinger(v, e, alpha)?;
    let rho = fibered_rotation_number(&c, n_iter, 0.0, 0.0)?;
    Ok(1.0 - 2.0 * rho.lift)
}
