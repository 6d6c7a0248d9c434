//! Fibered ℤ²-actions, rescaling / translation / base change, the
//! continued-fraction renormalization operator, action-level degree and
//! rotation number, the SO(2,ℝ) cohomological reducer and the reduction
//! pipeline.
//!
//! Generators are kept as skew maps `(γ, A)` whose matrix parts are lazy
//! [`Word`]s, so every operation below acts on generator pairs alone. The
//! closed form of `Rⁿ` for a normalized action goes back to the cocycle
//! instead and evaluates `A_{±q}` products directly.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::arithmetic::{dio_wrt_alpha, expand, gauss, DioCheck, DioParams};
use crate::cocycle::{iterate, lyapunov, Cocycle, Factor, QpMap, ScalarTrigPoly, TrigPoly, Word};
use crate::error::{Error, Result};
use crate::linalg2::{iwasawa_angle, lift_increment_anchored, Mat2};
use crate::rotnum::{self, fibered_rotation_number, AngleReference, Modulus, RotationNumber, DIRECTIONS};

/// Coefficient bound of the nondegeneracy check.
pub const NONDEGENERACY_RANGE: i64 = 1000;
/// Smallest admissible `|nγ₁₀ + mγ₀₁|` over that range.
pub const NONDEGENERACY_TOL: f64 = 1e-10;
/// Matrix products per window point allowed in deep renormalization.
pub const DEEP_BUDGET: u64 = 10_000_000;
/// Tolerated `‖Φ(1,0)∘Φ(0,1) − Φ(0,1)∘Φ(1,0)‖`.
pub const COMMUTATION_TOL: f64 = 1e-8;
/// Window points used by checks and fits.
pub const WINDOW_SAMPLES: usize = 256;

/// A skew map `(x, w) ↦ (x + γ, A(x)w)`.
#[derive(Debug, Clone)]
pub struct Generator {
    pub gamma: f64,
    pub map: Arc<QpMap>,
}

fn map_factor(map: &Arc<QpMap>, shift: f64, inverse: bool) -> Factor {
    Factor::Map {
        map: map.clone(),
        scale: 1.0,
        shift,
        inverse,
    }
}

impl Generator {
    pub fn new(gamma: f64, map: QpMap) -> Self {
        Generator {
            gamma,
            map: Arc::new(map),
        }
    }

    /// `(γ, id)`.
    pub fn translation(gamma: f64) -> Self {
        Generator::new(gamma, QpMap::constant(Mat2::IDENTITY))
    }

    pub fn eval(&self, x: f64) -> Mat2 {
        self.map.eval(x)
    }

    /// `self ∘ h = (γ + γ_h, x ↦ A(x + γ_h)·A_h(x))`.
    pub fn compose(&self, h: &Generator) -> Generator {
        Generator::new(
            self.gamma + h.gamma,
            QpMap::Word(Word {
                factors: vec![map_factor(&self.map, h.gamma, false), map_factor(&h.map, 0.0, false)],
            }),
        )
    }

    /// `(−γ, x ↦ A(x − γ)⁻¹)`.
    pub fn inverse(&self) -> Generator {
        Generator::new(
            -self.gamma,
            QpMap::Word(Word {
                factors: vec![map_factor(&self.map, -self.gamma, true)],
            }),
        )
    }

    /// `selfᵏ` as one word of `|k|` factors.
    pub fn power(&self, k: i64) -> Generator {
        let g = self.gamma;
        let factors: Vec<Factor> = if k >= 0 {
            (0..k).rev().map(|j| map_factor(&self.map, j as f64 * g, false)).collect()
        } else {
            (1..=-k).rev().map(|j| map_factor(&self.map, -(j as f64) * g, true)).collect()
        };
        if factors.is_empty() {
            return Generator::translation(0.0);
        }
        Generator::new(k as f64 * g, QpMap::Word(Word { factors }))
    }

    /// `(x, w) ↦ (x + γ, A(x)·w/‖·‖)` on unit vectors.
    fn step(&self, x: f64, w: [f64; 2]) -> (f64, [f64; 2]) {
        let v = self.map.eval_scaled(x).0.apply(w);
        let n = v[0].hypot(v[1]);
        (x + self.gamma, [v[0] / n, v[1] / n])
    }

    fn step_back(&self, x: f64, w: [f64; 2]) -> (f64, [f64; 2]) {
        let x0 = x - self.gamma;
        let v = self.map.eval_scaled(x0).0.adjugate().apply(w);
        let n = v[0].hypot(v[1]);
        (x0, [v[0] / n, v[1] / n])
    }
}

/// A fibered ℤ²-action given by its generators `Φ(1,0)`, `Φ(0,1)`.
///
/// `window` is where the generator maps are meant to be evaluated
/// (infinite for actions of periodic cocycles).
#[derive(Debug, Clone)]
pub struct FiberedAction {
    pub gen10: Generator,
    pub gen01: Generator,
    pub window: (f64, f64),
    pub normalized: bool,
    cocycle: Option<Cocycle>,
}

/// `Φ(0,1) = (α, A)`, `Φ(1,0) = (1, id)`.
pub fn normalize(c: &Cocycle) -> Result<FiberedAction> {
    if c.map.period() != Some(1) {
        return Err(Error::Domain("normalize needs a map of period 1".into()));
    }
    if !(c.alpha > 0.0 && c.alpha < 1.0) {
        return Err(Error::Domain(format!("alpha must lie in (0,1), got {}", c.alpha)));
    }
    check_nondegenerate(1.0, c.alpha)?;
    Ok(FiberedAction {
        gen10: Generator::translation(1.0),
        gen01: Generator {
            gamma: c.alpha,
            map: c.map.clone(),
        },
        window: (f64::NEG_INFINITY, f64::INFINITY),
        normalized: true,
        cocycle: Some(c.clone()),
    })
}

/// `(n, m) ↦ nγ₁₀ + mγ₀₁` stays away from 0 for `|n|, |m| ≤ 1000`.
pub fn check_nondegenerate(gamma10: f64, gamma01: f64) -> Result<()> {
    let r = NONDEGENERACY_RANGE;
    let mut worst = (f64::INFINITY, 0, 0);
    for m in -r..=r {
        let candidates: Vec<i64> = if gamma10 == 0.0 {
            vec![0, 1]
        } else {
            let c = (-(m as f64) * gamma01 / gamma10).round() as i64;
            vec![c.clamp(-r, r)]
        };
        for n in candidates {
            if (n, m) == (0, 0) {
                continue;
            }
            let v = (n as f64 * gamma10 + m as f64 * gamma01).abs();
            if v < worst.0 {
                worst = (v, n, m);
            }
        }
    }
    if !(worst.0 >= NONDEGENERACY_TOL) {
        return Err(Error::Degenerate(format!(
            "{}·γ₁₀ + {}·γ₀₁ = {:e}",
            worst.1, worst.2, worst.0
        )));
    }
    Ok(())
}

fn det2(u: &[[i64; 2]; 2]) -> i64 {
    u[0][0] * u[1][1] - u[0][1] * u[1][0]
}

impl FiberedAction {
    pub fn frequencies(&self) -> (f64, f64) {
        (self.gen10.gamma, self.gen01.gamma)
    }

    /// The cocycle behind a normalized action.
    pub fn cocycle(&self) -> Option<&Cocycle> {
        self.cocycle.as_ref()
    }

    /// `Φ(n, m) = Φ(1,0)ⁿ ∘ Φ(0,1)ᵐ` by composing generators.
    pub fn element_by_composition(&self, n: i64, m: i64) -> Generator {
        match (n, m) {
            (_, 0) => self.gen10.power(n),
            (0, _) => self.gen01.power(m),
            _ => self.gen10.power(n).compose(&self.gen01.power(m)),
        }
    }

    /// Interval sampled by checks: the window, or `[0, 1]` when unbounded.
    pub fn sample_interval(&self) -> (f64, f64) {
        let (lo, hi) = self.window;
        if lo.is_finite() && hi.is_finite() {
            (lo, hi)
        } else {
            (0.0, 1.0)
        }
    }

    pub fn window_samples(&self, n: usize) -> Vec<f64> {
        let (lo, hi) = self.sample_interval();
        (0..n).map(|j| lo + (hi - lo) * (j as f64 + 0.5) / n as f64).collect()
    }

    /// Largest `‖Φ(1,0)∘Φ(0,1) − Φ(0,1)∘Φ(1,0)‖` over 64 window points,
    /// relative to the size of the products.
    pub fn commutation_defect(&self) -> f64 {
        let a = self.gen10.compose(&self.gen01);
        let b = self.gen01.compose(&self.gen10);
        self.window_samples(64)
            .iter()
            .map(|&x| {
                let (ma, mb) = (a.eval(x), b.eval(x));
                (ma - mb).operator_norm() / ma.operator_norm().max(1.0)
            })
            .fold(0.0, f64::max)
    }

    pub fn check_commutation(&self) -> Result<()> {
        let d = self.commutation_defect();
        if !(d <= COMMUTATION_TOL) {
            return Err(Error::Degenerate(format!("generators fail to commute: defect {d:e}")));
        }
        Ok(())
    }
}

/// `N_U(Φ)(n, m) = Φ(U⁻¹(n, m))` for `U ∈ GL(2,ℤ)`.
pub fn base_change(phi: &FiberedAction, u: [[i64; 2]; 2]) -> Result<FiberedAction> {
    let det = det2(&u);
    if det.abs() != 1 {
        return Err(Error::InvalidBase(det));
    }
    if u == [[1, 0], [0, 1]] {
        return Ok(phi.clone());
    }
    let inv = [[det * u[1][1], -det * u[0][1]], [-det * u[1][0], det * u[0][0]]];
    Ok(FiberedAction {
        gen10: phi.element_by_composition(inv[0][0], inv[1][0]),
        gen01: phi.element_by_composition(inv[0][1], inv[1][1]),
        window: phi.window,
        normalized: false,
        cocycle: None,
    })
}

/// `M_λ(Φ)(n, m) = (γ/λ, x ↦ A(λx))`.
pub fn rescale(phi: &FiberedAction, lambda: f64) -> Result<FiberedAction> {
    if !(lambda != 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidScale(lambda));
    }
    if lambda == 1.0 {
        return Ok(phi.clone());
    }
    let g = |gen: &Generator| Generator::new(gen.gamma / lambda, QpMap::reparametrized(gen.map.clone(), lambda, 0.0));
    let (a, b) = (phi.window.0 / lambda, phi.window.1 / lambda);
    Ok(FiberedAction {
        gen10: g(&phi.gen10),
        gen01: g(&phi.gen01),
        window: (a.min(b), a.max(b)),
        normalized: false,
        cocycle: None,
    })
}

/// `T_{x*}(Φ)(n, m) = (γ, x ↦ A(x + x*))`.
pub fn translate(phi: &FiberedAction, x_star: f64) -> FiberedAction {
    if x_star == 0.0 {
        return phi.clone();
    }
    let g = |gen: &Generator| Generator::new(gen.gamma, QpMap::reparametrized(gen.map.clone(), 1.0, x_star));
    FiberedAction {
        gen10: g(&phi.gen10),
        gen01: g(&phi.gen01),
        window: (phi.window.0 - x_star, phi.window.1 - x_star),
        normalized: phi.normalized,
        cocycle: None,
    }
}

fn frequency_in_gamma0(phi: &FiberedAction) -> Result<f64> {
    let (g10, alpha) = phi.frequencies();
    if (g10 - 1.0).abs() > 1e-12 {
        return Err(Error::Domain(format!("renormalization needs γ₁₀ = 1, got {g10}")));
    }
    gauss(alpha)?;
    check_nondegenerate(1.0, alpha)?;
    Ok(alpha)
}

/// `R(Φ) = M_α(N_{U(α)}(Φ))` with `α = γ₀₁`.
pub fn renormalize(phi: &FiberedAction) -> Result<FiberedAction> {
    let alpha = frequency_in_gamma0(phi)?;
    let a = (1.0 / alpha).floor() as i64;
    rescale(&base_change(phi, [[a, 1], [1, 0]])?, alpha)
}

/// `R_{x*} = T_{x*}⁻¹ ∘ R ∘ T_{x*}`.
pub fn renormalize_around(phi: &FiberedAction, x_star: f64) -> Result<FiberedAction> {
    Ok(translate(&renormalize(&translate(phi, x_star))?, -x_star))
}

/// `R_{x*}ⁿ(Φ)` for a normalized action, from the closed form
/// `A_{(−1)^{n−1}q_{n−1}}` and `A_{(−1)ⁿqₙ}` evaluated at `x* + β_{n−1}(x − x*)`.
///
/// The result is evaluable on `[x* − h, x* + h]`.
pub fn renormalize_deep(phi: &FiberedAction, n: usize, x_star: f64, window_halfwidth: f64) -> Result<FiberedAction> {
    let c = phi
        .cocycle
        .as_ref()
        .ok_or_else(|| Error::Domain("the closed form needs a normalized action".into()))?;
    if n == 0 {
        return Err(Error::Domain("renormalization depth must be at least 1".into()));
    }
    if !(window_halfwidth > 0.0) {
        return Err(Error::Domain(format!("window half-width must be positive, got {window_halfwidth}")));
    }
    let cf = expand(c.alpha, n)?;
    let (q_prev, q) = (cf.q[n - 1], cf.q[n]);
    let needed = (q as u64).saturating_mul(c.map.cost());
    if needed > DEEP_BUDGET {
        return Err(Error::Budget {
            depth: n,
            needed,
            limit: DEEP_BUDGET,
        });
    }
    let beta = cf.betas[n - 1];
    let sign = if n % 2 == 1 { 1 } else { -1 };
    let gen = |count: i64, gamma: f64| {
        Generator::new(
            gamma,
            QpMap::Word(Word {
                factors: vec![Factor::Iterate {
                    cocycle: c.clone(),
                    count,
                    scale: beta,
                    shift: x_star * (1.0 - beta),
                }],
            }),
        )
    };
    Ok(FiberedAction {
        gen10: gen(sign * q_prev, 1.0),
        gen01: gen(-sign * q, cf.alphas[n]),
        window: (x_star - window_halfwidth, x_star + window_halfwidth),
        normalized: false,
        cocycle: None,
    })
}

/// Continuous lift `d^A(x, y)` of a generator on an interval.
struct Lift<'a> {
    gen: &'a Generator,
    reference: AngleReference,
}

impl<'a> Lift<'a> {
    fn new(gen: &'a Generator, lo: f64, hi: f64) -> Result<Self> {
        let span = (hi - lo).max(1e-9);
        let reference = AngleReference::build(|x| iwasawa_angle(&gen.map.eval_scaled(x).0), lo, span)?;
        Ok(Lift { gen, reference })
    }

    fn at(&self, x: f64, y: f64) -> f64 {
        lift_increment_anchored(&self.gen.map.eval_scaled(x).0, y, self.reference.at(x))
    }

    fn at_vec(&self, x: f64, w: [f64; 2]) -> f64 {
        self.at(x, w[1].atan2(w[0]) / std::f64::consts::TAU)
    }
}

/// `deg_{(0,1),(1,0)} Φ` from continuous lifts of both generators at one
/// point of the window.
pub fn degree_from_lifts(phi: &FiberedAction) -> Result<i64> {
    let (g1, g2) = (&phi.gen01, &phi.gen10);
    let (lo, hi) = phi.sample_interval();
    let x = 0.5 * (lo + hi);
    let y = 0.0;
    let d1 = Lift::new(g1, x.min(x + g2.gamma), x.max(x + g2.gamma))?;
    let d2 = Lift::new(g2, x.min(x + g1.gamma), x.max(x + g1.gamma))?;
    let (a1, a2) = (d1.at(x, y), d2.at(x, y));
    let deg = (d1.at(x + g2.gamma, y + a2) + a2) - (d2.at(x + g1.gamma, y + a1) + a1);
    if !((deg - deg.round()).abs() < 1e-6) {
        return Err(Error::Degenerate(format!("lift combination {deg} is not an integer")));
    }
    Ok(deg.round() as i64)
}

/// Degree of a nondegenerate action: the degree of the cocycle map when
/// normalized, the lift combination otherwise.
pub fn action_degree(phi: &FiberedAction) -> Result<i64> {
    check_nondegenerate(phi.gen10.gamma, phi.gen01.gamma)?;
    match &phi.cocycle {
        Some(c) => rotnum::degree(&c.map),
        None => degree_from_lifts(phi),
    }
}

/// Both induced integrals against one invariant measure `μ`.
///
/// `μ` restricted to `D_b = [a, a + γ_b]` is sampled by the map induced by
/// `g_a` on `D_b`; that gives `I(a, a + γ_b; d_a)` directly. Its
/// `g_b`-periodization covers `D_a = [a, a + γ_a]`, which gives
/// `I(a, a + γ_a; d_b)` from the same samples. Two independent orbits would
/// settle on different measures when the action is hyperbolic.
fn induced_integrals(
    g_a: &Generator,
    g_b: &Generator,
    a: f64,
    n_iter: u64,
    w0: f64,
) -> Result<[(f64, f64); DIRECTIONS]> {
    let (width_b, lo_b) = (g_b.gamma.abs(), a.min(a + g_b.gamma));
    let (width_a, lo_a) = (g_a.gamma.abs(), a.min(a + g_a.gamma));
    let lift_a = Lift::new(g_a, lo_b, lo_b + width_b)?;
    let lift_b = Lift::new(g_b, lo_a, lo_a + width_a)?;
    // x ↦ x + γ_b moves towards larger x exactly when γ_b > 0
    let up = |x: f64, w: [f64; 2]| if g_b.gamma > 0.0 { g_b.step(x, w) } else { g_b.step_back(x, w) };
    let down = |x: f64, w: [f64; 2]| if g_b.gamma > 0.0 { g_b.step_back(x, w) } else { g_b.step(x, w) };
    let mut out = [(0.0, 0.0); DIRECTIONS];
    for (j, o) in out.iter_mut().enumerate() {
        let (s, c) = (std::f64::consts::TAU * (w0 + j as f64 / DIRECTIONS as f64)).sin_cos();
        let (mut x, mut w) = (lo_b + 0.5 * width_b, [c, s]);
        let (mut sum_a, mut sum_b) = (0.0, 0.0);
        for _ in 0..n_iter {
            sum_a += lift_a.at_vec(x, w);
            // the g_b-translates of (x, w) lying over D_a
            let (mut y, mut v) = (x, w);
            while y >= lo_a {
                (y, v) = down(y, v);
            }
            while y < lo_a + width_a {
                if y >= lo_a {
                    sum_b += lift_b.at_vec(y, v);
                }
                (y, v) = up(y, v);
            }
            (x, w) = g_a.step(x, w);
            // back into D_b along g_b
            let k = ((x - lo_b) / width_b).floor() as i64;
            for _ in 0..k.unsigned_abs() {
                (x, w) = if k > 0 { down(x, w) } else { up(x, w) };
            }
        }
        let n = n_iter as f64;
        *o = (g_b.gamma * sum_a / n, g_a.gamma.signum() * width_b * sum_b / n);
    }
    Ok(out)
}

/// `rot_{(0,1),(1,0)} Φ = I(a, a + γ₁₀; d_{0,1}) − I(a, a + γ₀₁; d_{1,0})`,
/// both integrals against one invariant measure estimated by Birkhoff sums.
pub fn rot_from_lifts(phi: &FiberedAction, n_iter: u64) -> Result<RotationNumber> {
    if n_iter == 0 {
        return Err(Error::Domain("n_iter must be at least 1".into()));
    }
    let (lo, hi) = phi.sample_interval();
    let base = 0.5 * (lo + hi);
    let pairs = induced_integrals(&phi.gen01, &phi.gen10, base, n_iter, 0.0)?;
    let totals: [f64; DIRECTIONS] = std::array::from_fn(|j| pairs[j].0 - pairs[j].1);
    let (l, h) = totals
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    Ok(RotationNumber {
        value: totals[0],
        lift: totals[0],
        spread: 0.5 * (h - l),
        n_iter,
        modulus: Modulus::Frequencies {
            gamma10: phi.gen10.gamma,
            gamma01: phi.gen01.gamma,
        },
    })
}

/// Fibered rotation number of a degree-0 action, a representative modulo
/// its frequency module.
pub fn action_rot(phi: &FiberedAction, n_iter: u64) -> Result<RotationNumber> {
    let degree = action_degree(phi)?;
    if degree != 0 {
        return Err(Error::DegreeObstruction { degree });
    }
    match &phi.cocycle {
        Some(c) => {
            let mut rho = fibered_rotation_number(c, n_iter, 0.0, 0.0)?;
            rho.modulus = Modulus::Frequencies {
                gamma10: 1.0,
                gamma01: c.alpha,
            };
            Ok(rho)
        }
        None => rot_from_lifts(phi, n_iter),
    }
}

/// Distance from `x` to the module `{nγ₁₀ + mγ₀₁ : |n|, |m| ≤ bound}` and
/// the minimizing `(n, m)`.
pub fn module_distance(x: f64, gamma10: f64, gamma01: f64, bound: i64) -> (f64, i64, i64) {
    let mut best = (f64::INFINITY, 0, 0);
    for m in -bound..=bound {
        let r = x - m as f64 * gamma01;
        let centre = if gamma10 == 0.0 { 0 } else { (r / gamma10).round() as i64 };
        for n in (centre - 1).max(-bound)..=(centre + 1).min(bound) {
            let d = (r - n as f64 * gamma10).abs();
            if d < best.0 {
                best = (d, n, m);
            }
        }
    }
    best
}

/// `B` with `B(x+α)A(x)B(x)⁻¹ ≈ A_*`.
#[derive(Debug, Clone)]
pub struct ConjugacyMap {
    pub b: QpMap,
    /// `B = R_ψ` for the SO(2,ℝ) reducer.
    pub psi: ScalarTrigPoly,
    /// `A_* = R_{φ̂(0)}`.
    pub constant_part: Mat2,
    pub rotation: f64,
    /// `sup_x ‖B(x+α)A(x)B(x)⁻¹ − A_*‖` over [`RESIDUAL_SAMPLES`] points.
    pub residual: f64,
    pub period: u32,
}

pub const RESIDUAL_SAMPLES: usize = 512;
/// Divisors `|1 − e^{2πikα}|` below this are refused.
pub const SMALL_DIVISOR: f64 = 1e-10;

/// `sup_x ‖B(x+α)A(x)B(x)⁻¹ − target‖` on a uniform sample of `[0, 1)`.
pub fn conjugacy_residual(c: &Cocycle, b: &QpMap, target: &Mat2) -> f64 {
    (0..RESIDUAL_SAMPLES)
        .map(|j| {
            let x = j as f64 / RESIDUAL_SAMPLES as f64;
            let bx = b.eval(x);
            let m = b.eval(x + c.alpha) * c.eval(x) * bx.adjugate().scale(1.0 / bx.det());
            (m - *target).operator_norm()
        })
        .fold(0.0, f64::max)
}

/// Solve `ψ(x + α) − ψ(x) = φ̂(0) − φ(x)` mode by mode for `A = R_φ` and
/// return `B = R_ψ`.
pub fn so2_reduce(c: &Cocycle, k_modes: usize) -> Result<ConjugacyMap> {
    if k_modes == 0 {
        return Err(Error::Domain("so2_reduce needs K ≥ 1".into()));
    }
    if c.map.period() != Some(1) {
        return Err(Error::Domain("so2_reduce needs a map of period 1".into()));
    }
    for j in 0..256 {
        let x = j as f64 / 256.0;
        let d = c.eval(x).distance_to_so2().0;
        if d > 1e-8 {
            return Err(Error::Domain(format!("A({x}) is {d:e} away from SO(2)")));
        }
    }
    let reference = AngleReference::build(|x| c.map.eval_scaled(x).0.polar_angle(), 0.0, 1.0)?;
    let degree = reference.winding().round() as i64;
    if degree != 0 {
        return Err(Error::DegreeObstruction { degree });
    }
    let n = (4 * k_modes).next_power_of_two().max(64);
    let mut buf: Vec<Complex64> = (0..n)
        .map(|j| {
            let x = j as f64 / n as f64;
            let raw = c.map.eval_scaled(x).0.polar_angle();
            Complex64::new(raw + (reference.at(x) - raw).round(), 0.0)
        })
        .collect();
    FftPlanner::<f64>::new().plan_fft_forward(n).process(&mut buf);
    let phi_hat: Vec<Complex64> = buf.iter().map(|z| z / n as f64).collect();
    let rotation = phi_hat[0].re;
    let mut psi = vec![Complex64::new(0.0, 0.0); k_modes + 1];
    for k in 1..=k_modes {
        let (s, co) = (std::f64::consts::TAU * k as f64 * c.alpha).sin_cos();
        let divisor = Complex64::new(1.0 - co, -s);
        if divisor.norm() < SMALL_DIVISOR {
            return Err(Error::SmallDivisor {
                k: k as i64,
                divisor: divisor.norm(),
            });
        }
        psi[k] = phi_hat[k] / divisor;
    }
    let psi = ScalarTrigPoly::new(psi)?;
    let b = QpMap::Trig(rotation_of(&psi)?);
    let constant_part = Mat2::rotation(rotation);
    let residual = conjugacy_residual(c, &b, &constant_part);
    Ok(ConjugacyMap {
        b,
        psi,
        constant_part,
        rotation,
        residual,
        period: 1,
    })
}

/// `x ↦ R_{ψ(x)}` as a trigonometric polynomial, truncated once the
/// coefficients fall below rounding level.
fn rotation_of(psi: &ScalarTrigPoly) -> Result<TrigPoly> {
    if psi.coeffs().len() == 1 {
        return Ok(TrigPoly::constant(Mat2::rotation(psi.eval(0.0))));
    }
    let mut k = 4 * psi.coeffs().len();
    loop {
        let t = TrigPoly::from_fn(1, k, |x| Mat2::rotation(psi.eval(x)))?;
        let tail = t.coeffs()[k / 2..]
            .iter()
            .flatten()
            .fold(0.0f64, |m, z| m.max(z.norm()));
        if tail < 1e-16 || k >= 4096 {
            return Ok(t);
        }
        k *= 2;
    }
}

/// Knobs of [`reduction_pipeline`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineParams {
    pub depth: usize,
    pub x_star: f64,
    pub k_modes: usize,
    pub window_halfwidth: f64,
    pub samples: usize,
    /// Largest Lyapunov estimate accepted as zero.
    pub lyapunov_gate: f64,
    /// Largest final SO(2)-distance counted as a reduction.
    pub so2_gate: f64,
    pub n_iter: u64,
    pub dio: DioParams,
}

impl Default for PipelineParams {
    fn default() -> Self {
        PipelineParams {
            depth: 5,
            x_star: 0.0,
            k_modes: 32,
            window_halfwidth: 1.0,
            samples: WINDOW_SAMPLES,
            lyapunov_gate: 0.01,
            so2_gate: 0.5,
            n_iter: 1 << 16,
            dio: DioParams {
                kappa: 1e-3,
                tau: 2.0,
                k_max: 1000,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthReport {
    pub depth: usize,
    pub alpha_n: f64,
    pub so2_distance_gen10: f64,
    pub so2_distance_gen01: f64,
    /// The fitted constant conjugacy `B̂ = [[a, b], [c, d]]`.
    pub conjugacy: [f64; 4],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Reduced,
    NoReductionAchieved,
    ReducerFailed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalReport {
    /// Residual of the SO(2,ℝ) reducer on the projected cocycle.
    pub residual_so2_reduce: Option<f64>,
    /// Residual of the composed conjugacy on the depth-level action.
    pub residual_total: Option<f64>,
    /// Angle of the constant rotation `Φ(0,1)` is conjugated to.
    pub rotation: Option<f64>,
    pub rho: f64,
    pub dio_check: DioCheck,
    pub outcome: Outcome,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub alpha: f64,
    pub lyapunov: f64,
    pub params: PipelineParams,
    pub depths: Vec<DepthReport>,
    #[serde(rename = "final")]
    pub final_: FinalReport,
}

/// `P = R_t·diag(eˢ, e⁻ˢ)·R_{−t}`.
fn sym_unimodular(s: f64, t: f64) -> Mat2 {
    Mat2::rotation(t) * Mat2::diag(s.exp(), (-s).exp()) * Mat2::rotation(-t)
}

/// Constant `B̂` (symmetric, positive, unimodular) minimizing the summed
/// SO(2)-distance of `B̂⁻¹·G·B̂` over the samples; returns `B̂`.
pub fn fit_constant_conjugacy(samples: &[Mat2]) -> Mat2 {
    let cost = |s: f64, t: f64| {
        let p = sym_unimodular(s, t);
        let pinv = p.adjugate();
        samples.iter().map(|g| (pinv * *g * p).distance_to_so2().0).sum::<f64>()
    };
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for i in 0..=30 {
        for j in 0..32 {
            let (s, t) = (0.1 * i as f64, 0.5 * j as f64 / 32.0);
            let c = cost(s, t);
            if c < best.0 {
                best = (c, s, t);
            }
        }
    }
    let (mut hs, mut ht) = (0.05, 0.5 / 64.0);
    while hs > 1e-10 || ht > 1e-10 {
        let mut moved = false;
        for (ds, dt) in [(hs, 0.0), (-hs, 0.0), (0.0, ht), (0.0, -ht)] {
            let (s, t) = ((best.1 + ds).max(0.0), best.2 + dt);
            let c = cost(s, t);
            if c < best.0 {
                best = (c, s, t);
                moved = true;
            }
        }
        if !moved {
            hs *= 0.5;
            ht *= 0.5;
        }
    }
    sym_unimodular(best.1, best.2)
}

/// Exact continuous lift of a principal angle `f`, branch taken from a
/// continuation reference.
struct ExactLift<F: Fn(f64) -> f64> {
    f: F,
    reference: AngleReference,
}

impl<F: Fn(f64) -> f64> ExactLift<F> {
    fn new(f: F, lo: f64, span: f64) -> Result<Self> {
        let reference = AngleReference::build(&f, lo, span)?;
        Ok(ExactLift { f, reference })
    }

    fn at(&self, x: f64) -> f64 {
        let raw = (self.f)(x);
        raw + (self.reference.at(x) - raw).round()
    }

    /// First and second derivatives by fourth-order central differences.
    fn derivatives(&self, x: f64) -> (f64, f64) {
        let h = 1e-3;
        let v = [-2.0, -1.0, 1.0, 2.0].map(|k| self.at(x + k * h));
        let c = self.at(x);
        let d1 = (v[0] - 8.0 * v[1] + 8.0 * v[2] - v[3]) / (12.0 * h);
        let d2 = (-v[0] + 16.0 * v[1] - 30.0 * c + 16.0 * v[2] - v[3]) / (12.0 * h * h);
        (d1, d2)
    }
}

/// Angle `ψ₀` on `[lo, lo + 2]` with `ψ₀(x + 1) − ψ₀(x) = −φ₁₀(x)`: a cubic
/// on `[lo, lo + 1]` chosen so the extension is C² at `lo + 1`.
struct Normalizer<F: Fn(f64) -> f64> {
    lo: f64,
    phi10: ExactLift<F>,
    cubic: [f64; 3],
}

impl<F: Fn(f64) -> f64> Normalizer<F> {
    fn new(phi10: ExactLift<F>, lo: f64) -> Self {
        let c0 = phi10.at(lo);
        let (c1, c2) = phi10.derivatives(lo);
        let c = -c2 / 6.0;
        let b = (-c1 - 3.0 * c) / 2.0;
        Normalizer {
            lo,
            phi10,
            cubic: [-c0 - b - c, b, c],
        }
    }

    fn psi0(&self, x: f64) -> f64 {
        let f = |s: f64| s * (self.cubic[0] + s * (self.cubic[1] + s * self.cubic[2]));
        let s = x - self.lo;
        if s <= 1.0 {
            f(s)
        } else {
            f(s - 1.0) - self.phi10.at(x - 1.0)
        }
    }
}

struct DepthReduction {
    residual_so2_reduce: f64,
    residual_total: f64,
    rotation: f64,
}

/// Project the depth-level generators to rotations through `B̂`, conjugate
/// `Φ(1,0)` to the identity, reduce the resulting rotation cocycle over
/// `α_n` and measure `C(x) = R_{ψ(x)}·B̂⁻¹` on the unprojected action.
fn reduce_depth_level(deep: &FiberedAction, bhat: Mat2, params: &PipelineParams) -> Result<DepthReduction> {
    let (lo, hi) = deep.window;
    let alpha_n = deep.gen01.gamma;
    if !(hi - lo >= 1.0 + alpha_n + 0.02) {
        return Err(Error::Domain(format!(
            "window of length {} is too short to normalize Φ(1,0)",
            hi - lo
        )));
    }
    let binv = bhat.adjugate();
    fn angle(g: &Generator, binv: Mat2, bhat: Mat2) -> impl Fn(f64) -> f64 + '_ {
        move |x| (binv * g.map.eval_scaled(x).0 * bhat).polar_angle()
    }
    let phi10 = ExactLift::new(angle(&deep.gen10, binv, bhat), lo - 0.01, 1.02)?;
    let phi01 = ExactLift::new(angle(&deep.gen01, binv, bhat), lo - 0.01, 1.02)?;
    let norm = Normalizer::new(phi10, lo);
    let phi = |u: f64| norm.psi0(lo + u + alpha_n) + phi01.at(lo + u) - norm.psi0(lo + u);
    let k = (4 * params.k_modes).max(64);
    let map = TrigPoly::from_fn(1, k, |u| Mat2::rotation(phi(u.rem_euclid(1.0))))?;
    let red = so2_reduce(&Cocycle::new(alpha_n, QpMap::Trig(map))?, params.k_modes)?;
    let psi = |x: f64| norm.psi0(x) + red.psi.eval(x - lo);
    let conj = |x: f64| Mat2::rotation(psi(x)) * binv;
    let conj_inv = |x: f64| bhat * Mat2::rotation(-psi(x));
    let target01 = Mat2::rotation(red.rotation);
    let n = params.samples;
    let residual_total = (0..n)
        .into_par_iter()
        .map(|j| {
            let x = lo + j as f64 / n as f64;
            let r10 = conj(x + 1.0) * deep.gen10.eval(x) * conj_inv(x) - Mat2::IDENTITY;
            let r01 = conj(x + alpha_n) * deep.gen01.eval(x) * conj_inv(x) - target01;
            r10.operator_norm().max(r01.operator_norm())
        })
        .reduce(|| 0.0, f64::max);
    Ok(DepthReduction {
        residual_so2_reduce: red.residual,
        residual_total,
        rotation: red.rotation,
    })
}

/// Renormalize a zero-exponent cocycle to `depth` around `x*`, fit a
/// constant conjugacy to rotations at every depth, then reduce the
/// projected rotation cocycle and measure the composed conjugacy.
pub fn reduction_pipeline(c: &Cocycle, params: PipelineParams) -> Result<PipelineReport> {
    if params.depth == 0 || params.samples == 0 {
        return Err(Error::Domain("pipeline needs depth ≥ 1 and samples ≥ 1".into()));
    }
    let degree = rotnum::degree(&c.map)?;
    if degree != 0 {
        return Err(Error::DegreeObstruction { degree });
    }
    let lyap = lyapunov(c, 1024, 16, 0)?.value;
    if !(lyap <= params.lyapunov_gate) {
        return Err(Error::Domain(format!(
            "Lyapunov estimate {lyap} exceeds the zero-exponent gate {}",
            params.lyapunov_gate
        )));
    }
    let rho = fibered_rotation_number(c, params.n_iter, 0.0, 0.0)?;
    let dio_check = dio_wrt_alpha(rho.value, c.alpha, params.dio);
    let phi = normalize(c)?;
    let mut depths = Vec::with_capacity(params.depth);
    let mut last = None;
    for n in 1..=params.depth {
        let deep = renormalize_deep(&phi, n, params.x_star, params.window_halfwidth)?;
        let xs = deep.window_samples(params.samples);
        let g10: Vec<Mat2> = xs.par_iter().map(|&x| deep.gen10.eval(x)).collect();
        let g01: Vec<Mat2> = xs.par_iter().map(|&x| deep.gen01.eval(x)).collect();
        let all: Vec<Mat2> = g10.iter().chain(&g01).copied().collect();
        let bhat = fit_constant_conjugacy(&all);
        let binv = bhat.adjugate();
        let dist = |gs: &[Mat2]| gs.iter().map(|g| (binv * *g * bhat).distance_to_so2().0).fold(0.0, f64::max);
        depths.push(DepthReport {
            depth: n,
            alpha_n: deep.gen01.gamma,
            so2_distance_gen10: dist(&g10),
            so2_distance_gen01: dist(&g01),
            conjugacy: [bhat.a, bhat.b, bhat.c, bhat.d],
        });
        last = Some((deep, bhat));
    }
    let (deep, bhat) = last.expect("depth ≥ 1");
    let fin = &depths[depths.len() - 1];
    let mut final_ = FinalReport {
        residual_so2_reduce: None,
        residual_total: None,
        rotation: None,
        rho: rho.value,
        dio_check,
        outcome: Outcome::NoReductionAchieved,
        note: None,
    };
    if fin.so2_distance_gen10.max(fin.so2_distance_gen01) > params.so2_gate {
        final_.note = Some(format!("SO(2)-distance above {} at depth {}", params.so2_gate, params.depth));
    } else {
        match reduce_depth_level(&deep, bhat, &params) {
            Ok(red) => {
                final_.residual_so2_reduce = Some(red.residual_so2_reduce);
                final_.residual_total = Some(red.residual_total);
                final_.rotation = Some(red.rotation);
                final_.outcome = Outcome::Reduced;
            }
            Err(e) => {
                final_.outcome = Outcome::ReducerFailed;
                final_.note = Some(e.to_string());
            }
        }
    }
    Ok(PipelineReport {
        alpha: c.alpha,
        lyapunov: lyap,
        params,
        depths,
        final_,
    })
}

/// `A_m(x)` with the log-scale applied, for tests and examples.
pub fn iterate_matrix(c: &Cocycle, m: i64, x: f64) -> Mat2 {
    iterate(c, m, x).to_mat()
}
