//! Quasiperiodic cocycles `(α, A)`: map representations, overflow-safe
//! iteration, Lyapunov exponents, cone-field certificates of uniform
//! hyperbolicity and numerical checks of the a-priori iterate bounds.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::linalg2::{projective_angle_diff, Mat2};

/// Complex Fourier coefficient of a matrix-valued map, entries `[a, b, c, d]`.
pub type CMat = [Complex64; 4];

const ZERO_C: CMat = [Complex64 { re: 0.0, im: 0.0 }; 4];

fn cmat_from_real(m: Mat2) -> CMat {
    [
        Complex64::new(m.a, 0.0),
        Complex64::new(m.b, 0.0),
        Complex64::new(m.c, 0.0),
        Complex64::new(m.d, 0.0),
    ]
}

/// Matrix-valued trigonometric polynomial of period 1 or 2.
///
/// Only the coefficients `Ĉ(k)`, `k = 0..=K`, are stored; `Ĉ(-k)` is the
/// entrywise conjugate, so the map is real.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigPoly {
    period: u32,
    coeffs: Vec<CMat>,
}

fn check_period(period: u32) -> Result<()> {
    if period == 1 || period == 2 {
        Ok(())
    } else {
        Err(Error::Domain(format!("period must be 1 or 2, got {period}")))
    }
}

impl TrigPoly {
    pub fn new(period: u32, coeffs: Vec<CMat>) -> Result<Self> {
        check_period(period)?;
        if coeffs.is_empty() {
            return Err(Error::Domain("trigonometric polynomial needs Ĉ(0)".into()));
        }
        if coeffs[0].iter().any(|z| z.im.abs() > 1e-12) {
            return Err(Error::Domain("Ĉ(0) must be real".into()));
        }
        if coeffs.iter().flatten().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Domain("non-finite Fourier coefficient".into()));
        }
        Ok(TrigPoly { period, coeffs })
    }

    pub fn constant(m: Mat2) -> Self {
        TrigPoly {
            period: 1,
            coeffs: vec![cmat_from_real(m)],
        }
    }

    /// Fourier truncation of `f` at `|k| ≤ k_max`, from `4(k_max+1)` samples.
    pub fn from_fn(period: u32, k_max: usize, f: impl Fn(f64) -> Mat2) -> Result<Self> {
        check_period(period)?;
        let n = 4 * (k_max + 1);
        let p = period as f64;
        let samples: Vec<Mat2> = (0..n).map(|j| f(p * j as f64 / n as f64)).collect();
        let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
        let mut coeffs = vec![ZERO_C; k_max + 1];
        for entry in 0..4 {
            let mut buf: Vec<Complex64> = samples
                .iter()
                .map(|m| Complex64::new([m.a, m.b, m.c, m.d][entry], 0.0))
                .collect();
            fft.process(&mut buf);
            for (k, c) in coeffs.iter_mut().enumerate() {
                c[entry] = buf[k] / n as f64;
            }
        }
        for z in coeffs[0].iter_mut() {
            z.im = 0.0;
        }
        TrigPoly::new(period, coeffs)
    }

    /// `R_{kx}` (rotation by `kx` turns), exactly.
    pub fn rotation_winding(k: i64) -> Self {
        if k == 0 {
            return TrigPoly::constant(Mat2::IDENTITY);
        }
        let m = k.unsigned_abs() as usize;
        let s = k.signum() as f64;
        let half = Complex64::new(0.5, 0.0);
        // cos = (z + z̄)/2, sin = (z − z̄)/(2i)
        let sin_c = Complex64::new(0.0, -0.5 * s);
        let mut coeffs = vec![ZERO_C; m + 1];
        coeffs[m] = [half, -sin_c, sin_c, half];
        TrigPoly { period: 1, coeffs }
    }

    pub fn period(&self) -> u32 {
        self.period
    }

    pub fn k_max(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[CMat] {
        &self.coeffs
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs[1..].iter().flatten().all(|z| *z == Complex64::new(0.0, 0.0))
    }

    pub fn eval(&self, x: f64) -> Mat2 {
        self.derivative(0, x)
    }

    /// Exact `r`-th derivative.
    pub fn derivative(&self, r: u32, x: f64) -> Mat2 {
        let c0 = &self.coeffs[0];
        let mut acc = if r == 0 {
            [c0[0].re, c0[1].re, c0[2].re, c0[3].re]
        } else {
            [0.0; 4]
        };
        let omega = TAU / self.period as f64;
        let (s, c) = (omega * x.rem_euclid(self.period as f64)).sin_cos();
        let z1 = Complex64::new(c, s);
        let mut z = Complex64::new(1.0, 0.0);
        for (k, ck) in self.coeffs.iter().enumerate().skip(1) {
            z *= z1;
            let factor = if r == 0 {
                z
            } else {
                z * Complex64::new(0.0, omega * k as f64).powu(r)
            };
            for e in 0..4 {
                acc[e] += 2.0 * (ck[e] * factor).re;
            }
        }
        Mat2::new(acc[0], acc[1], acc[2], acc[3])
    }
}

/// Piecewise-linear interpolation of `N` uniform samples over one period.
#[derive(Debug, Clone, PartialEq)]
pub struct Sampled {
    period: u32,
    values: Vec<Mat2>,
}

impl Sampled {
    pub fn new(period: u32, values: Vec<Mat2>) -> Result<Self> {
        check_period(period)?;
        if values.len() < 2 {
            return Err(Error::Domain("sampled map needs at least 2 samples".into()));
        }
        if values.iter().any(|m| !m.is_finite()) {
            return Err(Error::Domain("non-finite sample".into()));
        }
        Ok(Sampled { period, values })
    }

    pub fn from_fn(period: u32, n: usize, f: impl Fn(f64) -> Mat2) -> Result<Self> {
        let p = period as f64;
        Sampled::new(period, (0..n).map(|j| f(p * j as f64 / n as f64)).collect())
    }

    pub fn period(&self) -> u32 {
        self.period
    }

    pub fn values(&self) -> &[Mat2] {
        &self.values
    }

    fn locate(&self, x: f64) -> (usize, usize, f64) {
        let n = self.values.len();
        let t = x.rem_euclid(self.period as f64) / self.period as f64 * n as f64;
        let i = (t.floor() as usize).min(n - 1);
        (i, (i + 1) % n, t - i as f64)
    }

    pub fn eval(&self, x: f64) -> Mat2 {
        let (i, j, f) = self.locate(x);
        self.values[i].scale(1.0 - f) + self.values[j].scale(f)
    }

    /// Slope of the interpolant (right derivative at the nodes).
    pub fn slope(&self, x: f64) -> Mat2 {
        let (i, j, _) = self.locate(x);
        let h = self.period as f64 / self.values.len() as f64;
        (self.values[j] - self.values[i]).scale(1.0 / h)
    }
}

/// One factor of a [`Word`]: a reparametrized map `x ↦ A(sx + t)` (possibly
/// inverted) or an iterate `x ↦ A_count(sx + t)` of a cocycle.
#[derive(Debug, Clone)]
pub enum Factor {
    Map {
        map: Arc<QpMap>,
        scale: f64,
        shift: f64,
        inverse: bool,
    },
    Iterate {
        cocycle: Cocycle,
        count: i64,
        scale: f64,
        shift: f64,
    },
}

impl Factor {
    fn eval_scaled(&self, x: f64) -> (Mat2, f64) {
        match self {
            Factor::Map {
                map,
                scale,
                shift,
                inverse,
            } => {
                let (m, s) = map.eval_scaled(scale * x + shift);
                if *inverse {
                    let det = m.det();
                    (m.adjugate().scale(1.0 / det), -s)
                } else {
                    (m, s)
                }
            }
            Factor::Iterate {
                cocycle,
                count,
                scale,
                shift,
            } => {
                let it = iterate(cocycle, *count, scale * x + shift);
                (it.m, it.log_scale)
            }
        }
    }

    /// Matrix products needed per evaluation.
    pub fn cost(&self) -> u64 {
        match self {
            Factor::Map { map, .. } => map.cost(),
            Factor::Iterate { cocycle, count, .. } => {
                count.unsigned_abs().max(1) * cocycle.map.cost()
            }
        }
    }
}

/// Pointwise product `F₀(x)·F₁(x)⋯` of reparametrized maps and iterates.
#[derive(Debug, Clone)]
pub struct Word {
    pub factors: Vec<Factor>,
}

impl Word {
    /// Common period when every factor is an unscaled periodic map.
    pub fn period(&self) -> Option<u32> {
        let mut p = 1;
        for f in &self.factors {
            let fp = match f {
                Factor::Map { map, scale, .. } if *scale == 1.0 => map.period()?,
                Factor::Iterate { cocycle, scale, .. } if *scale == 1.0 => cocycle.map.period()?,
                _ => return None,
            };
            p = p.max(fp);
        }
        Some(p)
    }
}

/// A map `ℝ → SL(2,ℝ)`.
#[derive(Debug, Clone)]
pub enum QpMap {
    Trig(TrigPoly),
    Sampled(Sampled),
    Word(Word),
}

impl QpMap {
    pub fn constant(m: Mat2) -> Self {
        QpMap::Trig(TrigPoly::constant(m))
    }

    /// Period of the map, `None` for window maps built from words.
    pub fn period(&self) -> Option<u32> {
        match self {
            QpMap::Trig(t) => Some(t.period),
            QpMap::Sampled(s) => Some(s.period),
            QpMap::Word(w) => w.period(),
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            QpMap::Trig(t) => t.is_constant(),
            _ => false,
        }
    }

    /// `(M, s)` with `A(x) = e^s·M`; words accumulate the scales of their
    /// iterates instead of overflowing.
    pub fn eval_scaled(&self, x: f64) -> (Mat2, f64) {
        match self {
            QpMap::Trig(t) => (t.eval(x), 0.0),
            QpMap::Sampled(s) => (s.eval(x), 0.0),
            QpMap::Word(w) => {
                let mut m = Mat2::IDENTITY;
                let mut log = 0.0;
                for f in &w.factors {
                    let (fm, fs) = f.eval_scaled(x);
                    m = m * fm;
                    log += fs;
                    let n = m.max_abs();
                    if n > 1e100 || (n < 1e-100 && n > 0.0) {
                        log += n.ln();
                        m = m.scale(1.0 / n);
                    }
                }
                (m, log)
            }
        }
    }

    pub fn eval(&self, x: f64) -> Mat2 {
        let (m, s) = self.eval_scaled(x);
        if s == 0.0 {
            m
        } else {
            m.scale(s.exp())
        }
    }

    /// `r`-th derivative: exact for trigonometric polynomials, the slope of
    /// the interpolant for sampled maps (`r ≤ 1`).
    pub fn derivative(&self, r: u32, x: f64) -> Result<Mat2> {
        match (self, r) {
            (_, 0) => Ok(self.eval(x)),
            (QpMap::Trig(t), _) => Ok(t.derivative(r, x)),
            (QpMap::Sampled(s), 1) => Ok(s.slope(x)),
            (QpMap::Sampled(_), _) => Ok(Mat2::ZERO),
            (QpMap::Word(_), _) => Err(Error::Representation(
                "derivatives of word maps are not available".into(),
            )),
        }
    }

    /// Matrix products per evaluation (1 for primitive maps).
    pub fn cost(&self) -> u64 {
        match self {
            QpMap::Word(w) => w.factors.iter().map(Factor::cost).sum(),
            _ => 1,
        }
    }

    /// `x ↦ B(x+α)A(x)B(x)⁻¹` as a word.
    pub fn conjugated(a: Arc<QpMap>, b: Arc<QpMap>, alpha: f64) -> QpMap {
        QpMap::Word(Word {
            factors: vec![
                Factor::Map {
                    map: b.clone(),
                    scale: 1.0,
                    shift: alpha,
                    inverse: false,
                },
                Factor::Map {
                    map: a,
                    scale: 1.0,
                    shift: 0.0,
                    inverse: false,
                },
                Factor::Map {
                    map: b,
                    scale: 1.0,
                    shift: 0.0,
                    inverse: true,
                },
            ],
        })
    }

    /// `x ↦ A(sx + t)`.
    pub fn reparametrized(a: Arc<QpMap>, scale: f64, shift: f64) -> QpMap {
        QpMap::Word(Word {
            factors: vec![Factor::Map {
                map: a,
                scale,
                shift,
                inverse: false,
            }],
        })
    }

    /// Pointwise product `x ↦ A(x)B(x)`.
    pub fn product(a: Arc<QpMap>, b: Arc<QpMap>) -> QpMap {
        let f = |map| Factor::Map {
            map,
            scale: 1.0,
            shift: 0.0,
            inverse: false,
        };
        QpMap::Word(Word {
            factors: vec![f(a), f(b)],
        })
    }

    /// JSON form `{period, repr: {type: "trigpoly", K, coeffs} | {type: "sampled", N, values}}`.
    pub fn to_json(&self) -> Result<Value> {
        match self {
            QpMap::Trig(t) => {
                let coeffs: Vec<Value> = t
                    .coeffs
                    .iter()
                    .enumerate()
                    .map(|(k, c)| {
                        let mut row = vec![json!(k)];
                        for z in c {
                            row.push(json!(z.re));
                            row.push(json!(z.im));
                        }
                        Value::Array(row)
                    })
                    .collect();
                Ok(json!({
                    "period": t.period,
                    "repr": {"type": "trigpoly", "K": t.k_max(), "coeffs": coeffs}
                }))
            }
            QpMap::Sampled(s) => Ok(json!({
                "period": s.period,
                "repr": {
                    "type": "sampled",
                    "N": s.values.len(),
                    "values": s.values.iter().map(|m| vec![m.a, m.b, m.c, m.d]).collect::<Vec<_>>()
                }
            })),
            QpMap::Word(_) => Err(Error::Representation(
                "word maps have no serialized form".into(),
            )),
        }
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let period = v["period"]
            .as_u64()
            .ok_or_else(|| Error::Parse("missing period".into()))? as u32;
        let repr = &v["repr"];
        match repr["type"].as_str() {
            Some("trigpoly") => {
                let k_max = repr["K"]
                    .as_u64()
                    .ok_or_else(|| Error::Parse("missing K".into()))? as usize;
                let mut coeffs = vec![ZERO_C; k_max + 1];
                for row in repr["coeffs"]
                    .as_array()
                    .ok_or_else(|| Error::Parse("missing coeffs".into()))?
                {
                    let nums = parse_numbers(row, 9)?;
                    let k = nums[0];
                    if k < 0.0 || k.fract() != 0.0 || k as usize > k_max {
                        return Err(Error::Parse(format!("bad mode index {k}")));
                    }
                    let c = &mut coeffs[k as usize];
                    for e in 0..4 {
                        c[e] = Complex64::new(nums[1 + 2 * e], nums[2 + 2 * e]);
                    }
                }
                Ok(QpMap::Trig(TrigPoly::new(period, coeffs)?))
            }
            Some("sampled") => {
                let values = repr["values"]
                    .as_array()
                    .ok_or_else(|| Error::Parse("missing values".into()))?
                    .iter()
                    .map(|row| parse_numbers(row, 4).map(|n| Mat2::new(n[0], n[1], n[2], n[3])))
                    .collect::<Result<Vec<_>>>()?;
                if let Some(n) = repr["N"].as_u64() {
                    if n as usize != values.len() {
                        return Err(Error::Parse("N does not match the sample count".into()));
                    }
                }
                Ok(QpMap::Sampled(Sampled::new(period, values)?))
            }
            other => Err(Error::Parse(format!("unknown map representation {other:?}"))),
        }
    }
}

fn parse_numbers(row: &Value, len: usize) -> Result<Vec<f64>> {
    let arr = row
        .as_array()
        .filter(|a| a.len() == len)
        .ok_or_else(|| Error::Parse(format!("expected an array of {len} numbers")))?;
    arr.iter()
        .map(|x| x.as_f64().ok_or_else(|| Error::Parse("expected a number".into())))
        .collect()
}

/// Real scalar trigonometric polynomial of period 1 (used for potentials).
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarTrigPoly {
    coeffs: Vec<Complex64>,
}

impl ScalarTrigPoly {
    pub fn new(coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.is_empty() || coeffs[0].im.abs() > 1e-12 {
            return Err(Error::Domain("v̂(0) must be present and real".into()));
        }
        if coeffs.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Domain("non-finite Fourier coefficient".into()));
        }
        Ok(ScalarTrigPoly { coeffs })
    }

    /// `v(x) = Σ_k a_k cos(2πkx)`, `k = 0, 1, …`.
    pub fn cosine_series(a: &[f64]) -> Result<Self> {
        let coeffs = a
            .iter()
            .enumerate()
            .map(|(k, &ak)| Complex64::new(if k == 0 { ak } else { 0.5 * ak }, 0.0))
            .collect();
        ScalarTrigPoly::new(coeffs)
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn eval(&self, x: f64) -> f64 {
        let (s, c) = (TAU * x.rem_euclid(1.0)).sin_cos();
        let z1 = Complex64::new(c, s);
        let mut z = Complex64::new(1.0, 0.0);
        let mut acc = self.coeffs[0].re;
        for ck in &self.coeffs[1..] {
            z *= z1;
            acc += 2.0 * (ck * z).re;
        }
        acc
    }

    /// `|v̂(0)| + 2Σ|v̂(k)|`, an upper bound for `sup|v|`.
    pub fn sup_bound(&self) -> f64 {
        self.coeffs[0].norm() + 2.0 * self.coeffs[1..].iter().map(|z| z.norm()).sum::<f64>()
    }
}

/// Scalar map of period 1.
#[derive(Debug, Clone, PartialEq)]
pub enum ScalarMap {
    Trig(ScalarTrigPoly),
    Sampled(Vec<f64>),
}

impl ScalarMap {
    pub fn zero() -> Self {
        ScalarMap::Trig(ScalarTrigPoly {
            coeffs: vec![Complex64::new(0.0, 0.0)],
        })
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            ScalarMap::Trig(t) => t.eval(x),
            ScalarMap::Sampled(v) => {
                let n = v.len();
                let t = x.rem_euclid(1.0) * n as f64;
                let i = (t.floor() as usize).min(n - 1);
                let f = t - i as f64;
                v[i] * (1.0 - f) + v[(i + 1) % n] * f
            }
        }
    }

    /// Upper bound for `sup|v|` (exact for sampled maps).
    pub fn sup_bound(&self) -> f64 {
        match self {
            ScalarMap::Trig(t) => t.sup_bound(),
            ScalarMap::Sampled(v) => v.iter().fold(0.0, |m, x| m.max(x.abs())),
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            ScalarMap::Trig(t) => json!({
                "period": 1,
                "repr": {
                    "type": "trigpoly",
                    "K": t.coeffs.len() - 1,
                    "coeffs": t.coeffs.iter().enumerate()
                        .map(|(k, z)| json!([k, z.re, z.im])).collect::<Vec<_>>()
                }
            }),
            ScalarMap::Sampled(v) => json!({
                "period": 1,
                "repr": {"type": "sampled", "N": v.len(), "values": v}
            }),
        }
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        if v["period"].as_u64() != Some(1) {
            return Err(Error::Parse("potentials must have period 1".into()));
        }
        let repr = &v["repr"];
        match repr["type"].as_str() {
            Some("trigpoly") => {
                let k_max = repr["K"]
                    .as_u64()
                    .ok_or_else(|| Error::Parse("missing K".into()))? as usize;
                let mut coeffs = vec![Complex64::new(0.0, 0.0); k_max + 1];
                for row in repr["coeffs"]
                    .as_array()
                    .ok_or_else(|| Error::Parse("missing coeffs".into()))?
                {
                    let n = parse_numbers(row, 3)?;
                    if n[0] < 0.0 || n[0].fract() != 0.0 || n[0] as usize > k_max {
                        return Err(Error::Parse(format!("bad mode index {}", n[0])));
                    }
                    coeffs[n[0] as usize] = Complex64::new(n[1], n[2]);
                }
                Ok(ScalarMap::Trig(ScalarTrigPoly::new(coeffs)?))
            }
            Some("sampled") => {
                let values: Vec<f64> = repr["values"]
                    .as_array()
                    .ok_or_else(|| Error::Parse("missing values".into()))?
                    .iter()
                    .map(|x| x.as_f64().ok_or_else(|| Error::Parse("expected a number".into())))
                    .collect::<Result<_>>()?;
                if values.len() < 2 || values.iter().any(|x| !x.is_finite()) {
                    return Err(Error::Parse("need at least 2 finite samples".into()));
                }
                Ok(ScalarMap::Sampled(values))
            }
            other => Err(Error::Parse(format!("unknown potential representation {other:?}"))),
        }
    }
}

/// The cocycle `(α, A)`.
#[derive(Debug, Clone)]
pub struct Cocycle {
    pub alpha: f64,
    pub map: Arc<QpMap>,
}

impl Cocycle {
    pub fn new(alpha: f64, map: QpMap) -> Result<Self> {
        Cocycle::from_arc(alpha, Arc::new(map))
    }

    pub fn from_arc(alpha: f64, map: Arc<QpMap>) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(Error::Domain(format!("alpha must be finite, got {alpha}")));
        }
        Ok(Cocycle { alpha, map })
    }

    pub fn eval(&self, x: f64) -> Mat2 {
        self.map.eval(x)
    }

    /// Length of the base circle (the period of the map, 1 for window maps).
    pub fn base_period(&self) -> f64 {
        self.map.period().unwrap_or(1) as f64
    }

    /// `(α, B(·+α)A(·)B(·)⁻¹)`.
    pub fn conjugate(&self, b: Arc<QpMap>) -> Cocycle {
        Cocycle {
            alpha: self.alpha,
            map: Arc::new(QpMap::conjugated(self.map.clone(), b, self.alpha)),
        }
    }
}

pub fn eval(c: &Cocycle, x: f64) -> Mat2 {
    c.eval(x)
}

/// `A_n(x) = e^{log_scale}·m` with `‖m‖ = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scaled {
    pub m: Mat2,
    pub log_scale: f64,
}

impl Scaled {
    /// `ln‖A_n(x)‖`.
    pub fn log_norm(&self) -> f64 {
        self.log_scale + self.m.operator_norm().ln()
    }

    pub fn to_mat(&self) -> Mat2 {
        self.m.scale(self.log_scale.exp())
    }
}

/// Multiply by an exact power of two so that the largest entry lies in
/// `[1, 2)`; returns the exponent removed.
#[inline]
pub(crate) fn renormalize_pow2(m: &mut Mat2) -> i32 {
    let big = m.max_abs();
    if !(big > 0.0) || !big.is_finite() {
        return 0;
    }
    let e = ((big.to_bits() >> 52) & 0x7ff) as i32 - 1023;
    if e == 0 || e <= -1022 {
        return 0;
    }
    let factor = f64::from_bits(((1023 - e) as u64) << 52);
    *m = m.scale(factor);
    e
}

fn forward_product(c: &Cocycle, n: u64, x: f64) -> Scaled {
    let mut p = Mat2::IDENTITY;
    let mut exp2: i64 = 0;
    let mut extra = 0.0;
    for k in 0..n {
        let (a, s) = c.map.eval_scaled(x + k as f64 * c.alpha);
        p = a * p;
        extra += s;
        let big = p.max_abs();
        if !(1e-64..=1e64).contains(&big) {
            exp2 += renormalize_pow2(&mut p) as i64;
        }
    }
    let norm = p.operator_norm();
    Scaled {
        m: p.scale(1.0 / norm),
        log_scale: exp2 as f64 * std::f64::consts::LN_2 + extra + norm.ln(),
    }
}

/// `A_n(x)` for any integer `n`, with `A_{-n}(x) = A_n(x − nα)⁻¹`.
///
/// Maps are assumed `SL(2,ℝ)`-valued, so inverses are adjugates and keep
/// the log-scale.
pub fn iterate(c: &Cocycle, n: i64, x: f64) -> Scaled {
    if n >= 0 {
        forward_product(c, n as u64, x)
    } else {
        let k = n.unsigned_abs();
        let fwd = forward_product(c, k, x - k as f64 * c.alpha);
        Scaled {
            m: fwd.m.adjugate(),
            log_scale: fwd.log_scale,
        }
    }
}

/// Monte-Carlo-free estimate of `L(α, A)` at finite `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovEstimate {
    pub value: f64,
    pub n: u64,
    pub n_samples: usize,
    pub spread: f64,
}

/// Sample points `P(j + u_j)/n_samples` with seed-driven jitter `u_j ∈ [0,1)`.
pub fn jittered_grid(period: f64, n_samples: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_samples)
        .map(|j| period * (j as f64 + rng.gen::<f64>()) / n_samples as f64)
        .collect()
}

pub fn lyapunov(c: &Cocycle, n: u64, n_samples: usize, seed: u64) -> Result<LyapunovEstimate> {
    if n == 0 || n_samples == 0 {
        return Err(Error::Domain("lyapunov needs n ≥ 1 and n_samples ≥ 1".into()));
    }
    let xs = jittered_grid(c.base_period(), n_samples, seed);
    let per: Vec<f64> = xs
        .par_iter()
        .map(|&x| iterate(c, n as i64, x).log_norm() / n as f64)
        .collect();
    Ok(summarize_lyapunov(&per, n))
}

pub(crate) fn summarize_lyapunov(per: &[f64], n: u64) -> LyapunovEstimate {
    let value = per.iter().sum::<f64>() / per.len() as f64;
    let (lo, hi) = per
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    LyapunovEstimate {
        value,
        n,
        n_samples: per.len(),
        spread: hi - lo,
    }
}

/// An invariant cone field for `A_{n_step}` on a grid of the base circle.
///
/// The cone at `grid[i]` has center `cone_center[i]` (radians modulo π); on
/// the cell `[grid[k], grid[k+1]]` cones have half-angle `half_angles[k]`.
/// The image under `A_{n_step}(x_i)` sits inside the cone at
/// `x_i + n_step·α` with angular room at least `contraction_margin` at the
/// binding grid point, which exceeds `slack` there. Slack is the
/// interpolation allowance derived from the variation of the cone field
/// over neighbouring grid cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeCertificate {
    /// Number of grid points, refinements included.
    pub grid_size: usize,
    /// Sorted grid points in `[0, P)`.
    pub grid: Vec<f64>,
    pub n_step: u64,
    pub cone_center: Vec<f64>,
    pub half_angles: Vec<f64>,
    /// Smallest of `half_angles`.
    pub half_angle: f64,
    pub contraction_margin: f64,
    pub slack: f64,
}

/// Admissible half-angles `π/4, π/8, …, π/4096`, widest first.
pub const HALF_ANGLES: [f64; 11] = {
    let mut h = [FRAC_PI_4; 11];
    let mut k = 1;
    while k < 11 {
        h[k] = h[k - 1] / 2.0;
        k += 1;
    }
    h
};

/// Orientation error tolerated in a flattened image cone (radians).
const COLLAPSE_TOL: f64 = 1e-9;

/// Angular room left when the cone `[c−h, c+h]` is mapped by `m` into the
/// cone `[t−ht, t+ht]`; negative if the image sticks out.
#[inline]
pub fn cone_margin(m: &Mat2, c: f64, h: f64, t: f64, ht: f64) -> f64 {
    let (s1, c1) = (c - h).sin_cos();
    let (s2, c2) = (c + h).sin_cos();
    let v1 = m.apply([c1, s1]);
    let v2 = m.apply([c2, s2]);
    let len = (v1[0] * v2[1] - v1[1] * v2[0]).atan2(v1[0] * v2[0] + v1[1] * v2[1]);
    // a strongly expanding `m` is numerically rank one and may flatten the
    // image to a single direction, with rounding of either sign
    if !(len > -COLLAPSE_TOL) {
        return f64::NEG_INFINITY;
    }
    let len = len.max(0.0);
    let a1 = projective_angle_diff(t, v1[1].atan2(v1[0]));
    (a1 + ht).min(ht - (a1 + len))
}

/// Bound on the derivative of the projective action of `m` over the arc
/// `[lo, hi]`, which must avoid its most contracted direction: the stretch
/// is then smallest at an end of the arc.
fn projective_gain(m: &Mat2, lo: f64, hi: f64) -> f64 {
    let stretch = |a: f64| {
        let (sn, co) = a.sin_cos();
        let v = m.apply([co, sn]);
        v[0] * v[0] + v[1] * v[1]
    };
    m.det().abs() / stretch(lo).min(stretch(hi))
}

/// `|angle[k+1] − angle[k]|` per grid cell, cyclically.
fn cell_variation(angles: &[f64]) -> Vec<f64> {
    let n = angles.len();
    (0..n)
        .map(|i| projective_angle_diff(angles[i], angles[(i + 1) % n]).abs())
        .collect()
}

/// Try to certify an invariant cone field from the normalized products
/// `past[i] ∝ A_n(x_i − nα)` and `future[i] ∝ A_n(x_i)` on the sorted grid
/// `x_i` of `[0, period)`; `shift` is `nα`.
///
/// Cone centers are the most expanded output directions of `past`; the
/// image of the cone at `x_i` is checked against the cone at `x_i + nα`,
/// whose center interpolates the grid by cubics. At each point the widest
/// admissible half-angle below half the angle to the most contracted input
/// direction of `future` is taken, and each cell keeps the smaller value
/// of its endpoints. The slack at
/// `x_i` bounds the change of the margin across the neighbouring cells:
/// the variation of the source centers, weighted by how much the
/// projective action of `future` can stretch it, plus the variation of the
/// misfit between the image direction (top output direction of `future`)
/// and the target center.
pub fn cone_condition(
    grid: &[f64],
    period: f64,
    past: &[Mat2],
    future: &[Mat2],
    n_step: u64,
    shift: f64,
) -> Option<ConeCertificate> {
    cone_check(grid, period, past, future, n_step, shift).ok()
}

/// Why a grid failed the cone condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConeFailure {
    /// Non-finite data, or expanding and contracted directions too close
    /// for any admissible half-angle somewhere.
    NoSplitting,
    /// Neighbouring cones cannot be joined without crossing a contracted
    /// direction.
    Unresolved,
    /// Some grid point's margin does not exceed its slack.
    Margin,
}

/// A failed cone check and the grid cells where it failed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConeRejection {
    pub reason: ConeFailure,
    /// Cells `[grid[k], grid[k+1]]` (cyclic) worth refining.
    pub cells: Vec<usize>,
}

impl ConeRejection {
    fn new(reason: ConeFailure, mut cells: Vec<usize>) -> Self {
        cells.sort_unstable();
        cells.dedup();
        ConeRejection { reason, cells }
    }
}

pub fn cone_check(
    grid: &[f64],
    period: f64,
    past: &[Mat2],
    future: &[Mat2],
    n_step: u64,
    shift: f64,
) -> std::result::Result<ConeCertificate, ConeRejection> {
    let n = grid.len();
    let centers: Vec<f64> = past.iter().map(Mat2::top_left_singular_angle).collect();
    let targets: Vec<f64> = future.iter().map(Mat2::top_left_singular_angle).collect();
    if n < 4
        || past.len() != n
        || future.len() != n
        || centers.iter().chain(&targets).any(|a| !a.is_finite())
        || !shift.is_finite()
    {
        return Err(ConeRejection::new(ConeFailure::NoSplitting, Vec::new()));
    }
    debug_assert!(grid.windows(2).all(|w| w[0] < w[1]) && grid[n - 1] < grid[0] + period);
    let prev = |k: usize| (k + n - 1) % n;
    let stable: Vec<f64> = future
        .iter()
        .map(|m| m.top_right_singular_angle() + FRAC_PI_2)
        .collect();
    let widest: Vec<f64> = (0..n)
        .map(|i| {
            let room = 0.5 * projective_angle_diff(centers[i], stable[i]).abs();
            HALF_ANGLES.iter().copied().find(|&h| h <= room).unwrap_or(0.0)
        })
        .collect();
    let split_fails: Vec<usize> = (0..n).filter(|&i| widest[i] == 0.0).flat_map(|i| [prev(i), i]).collect();
    if !split_fails.is_empty() {
        return Err(ConeRejection::new(ConeFailure::NoSplitting, split_fails));
    }
    // cell `[x_k, x_{k+1}]` carries the smaller of its endpoint values
    let half: Vec<f64> = (0..n).map(|k| widest[k].min(widest[(k + 1) % n])).collect();
    // Between grid points centers and contracted directions turn linearly;
    // centers go the short way round unless that makes a cone cross the
    // contracted direction (NaN: neither way works).
    let room = |r: f64, h: f64| r > h && r < PI - h;
    let rel: Vec<f64> = (0..n).map(|i| (centers[i] - stable[i]).rem_euclid(PI)).collect();
    let stable_turn: Vec<f64> =
        (0..n).map(|k| projective_angle_diff(stable[k], stable[(k + 1) % n])).collect();
    let turn: Vec<f64> = (0..n)
        .map(|k| {
            let short = projective_angle_diff(centers[k], centers[(k + 1) % n]);
            let long = short - PI.copysign(short);
            [short, long]
                .into_iter()
                .find(|&d| room(rel[k], half[k]) && room(rel[k] + d - stable_turn[k], half[k]))
                .unwrap_or(f64::NAN)
        })
        .collect();
    let unresolved: Vec<usize> = (0..n).filter(|&k| turn[k].is_nan()).collect();
    if !unresolved.is_empty() {
        return Err(ConeRejection::new(ConeFailure::Unresolved, unresolved));
    }
    // grid point `k ∈ ℤ` unwrapped along the line
    let knot = |k: isize| grid[k.rem_euclid(n as isize) as usize] + period * k.div_euclid(n as isize) as f64;
    let cell = |k: isize| k.rem_euclid(n as isize) as usize;
    // cell containing each target point `x_i + nα`, and the cubic through
    // the unwrapped centers at j−1 … j+2
    let mut located = Vec::with_capacity(n);
    let mut target_centers = Vec::with_capacity(n);
    for &x in grid {
        let y = (x + shift).rem_euclid(period);
        let j = grid.partition_point(|&g| g <= y) as isize - 1;
        let t = [knot(j - 1), knot(j), knot(j + 1), knot(j + 2)];
        let c0 = centers[cell(j)];
        let c1 = c0 + turn[cell(j)];
        let u = [c0 - turn[cell(j - 1)], c0, c1, c1 + turn[cell(j + 1)]];
        let mut value = 0.0;
        for a in 0..4 {
            let mut w = 1.0;
            for b in 0..4 {
                if a != b {
                    w *= (y - t[b]) / (t[a] - t[b]);
                }
            }
            value += w * u[a];
        }
        located.push(cell(j));
        target_centers.push(value);
    }
    let misfit: Vec<f64> = target_centers
        .iter()
        .zip(&targets)
        .map(|(&c, &t)| projective_angle_diff(c, t))
        .collect();
    let var_misfit = cell_variation(&misfit);
    let near = |v: &[f64], i: usize| v[i].max(v[prev(i)]);
    // (margin − slack, margin, slack) at the binding point
    let mut bind = (f64::INFINITY, 0.0, 0.0);
    let mut margin_fails = Vec::new();
    for i in 0..n {
        let j = located[i];
        // widest source cone next to x_i, narrowest target cone next to x_i + nα
        let h = near(&half, i);
        let ht = near(&half, j).min(half[(j + 1) % n]);
        // the source cone sweeps toward each neighbouring center:
        // (center turn, relative turn, half-angle) per side
        let sides = [
            (turn[i], turn[i] - stable_turn[i], half[i]),
            (turn[prev(i)], stable_turn[prev(i)] - turn[prev(i)], half[prev(i)]),
        ];
        let source = sides
            .into_iter()
            .map(|(d, dr, h)| {
                let (r0, r1) = (rel[i], rel[i] + dr);
                let (lo, hi) = (stable[i] + r0.min(r1) - h, stable[i] + r0.max(r1) + h);
                d.abs() * projective_gain(&future[i], lo, hi)
            })
            .fold(0.0, f64::max);
        let slack = source + near(&var_misfit, i);
        let m = cone_margin(&future[i], centers[i], h, target_centers[i], ht);
        if !(m - slack > 0.0) {
            margin_fails.extend([prev(i), i, prev(j), j, (j + 1) % n]);
        } else if m - slack < bind.0 {
            bind = (m - slack, m, slack);
        }
    }
    if !margin_fails.is_empty() {
        return Err(ConeRejection::new(ConeFailure::Margin, margin_fails));
    }
    Ok(ConeCertificate {
        grid_size: n,
        grid: grid.to_vec(),
        n_step,
        cone_center: centers,
        half_angle: half.iter().copied().fold(f64::INFINITY, f64::min),
        half_angles: half,
        contraction_margin: bind.1,
        slack: bind.2,
    })
}

/// Refined grids hold at most this many times the initial grid points.
pub const REFINE_FACTOR: usize = 8;
/// Local refinement rounds per product length.
pub const REFINE_ROUNDS: usize = 10;
/// Longest product length at which grids are refined.
pub const REFINE_MAX_STEP: u64 = 1024;

/// Midpoints of the given cells of a sorted cyclic grid.
fn cell_midpoints(grid: &[f64], period: f64, cells: &[usize]) -> Vec<f64> {
    let n = grid.len();
    cells
        .iter()
        .filter_map(|&k| {
            let (lo, hi) = (grid[k], if k + 1 == n { grid[0] + period } else { grid[k + 1] });
            let mid = 0.5 * (lo + hi);
            (mid > lo && mid < hi).then(|| mid.rem_euclid(period))
        })
        .collect()
}

/// Cone check at one product length `n`, refining the grid around failing
/// cells. `base` holds grid points with their normalized `past`/`future`
/// products; `products` evaluates them at new points.
pub(crate) fn refined_check(
    base: (&[f64], &[Mat2], &[Mat2]),
    period: f64,
    n: u64,
    shift: f64,
    max_points: usize,
    mut products: impl FnMut(&[f64]) -> (Vec<Mat2>, Vec<Mat2>),
) -> Option<ConeCertificate> {
    let (mut xs, mut past, mut future) = (base.0.to_vec(), base.1.to_vec(), base.2.to_vec());
    let rounds = if n <= REFINE_MAX_STEP { REFINE_ROUNDS } else { 0 };
    for round in 0..=rounds {
        let mut order: Vec<usize> = (0..xs.len()).collect();
        order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
        let grid: Vec<f64> = order.iter().map(|&k| xs[k]).collect();
        let p: Vec<Mat2> = order.iter().map(|&k| past[k]).collect();
        let f: Vec<Mat2> = order.iter().map(|&k| future[k]).collect();
        let cells = match cone_check(&grid, period, &p, &f, n, shift) {
            Ok(cert) => return Some(cert),
            Err(r) => r.cells,
        };
        let room = max_points.saturating_sub(grid.len());
        if round == rounds || room == 0 {
            break;
        }
        let mut mids = cell_midpoints(&grid, period, &cells);
        mids.truncate(room);
        if mids.is_empty() {
            break;
        }
        let (np, nf) = products(&mids);
        (xs, past, future) = (grid, p, f);
        xs.extend(mids);
        past.extend(np);
        future.extend(nf);
    }
    None
}

/// Search `n = 1, 2, 4, …, ≤ n_max` for a cone-field certificate, starting
/// from a uniform grid of `grid_size` points and refining it locally where
/// the check fails. `None` means "undecided", not "not hyperbolic".
pub fn uh_certificate(c: &Cocycle, grid_size: usize, n_max: u64) -> Result<Option<ConeCertificate>> {
    if grid_size < 16 || n_max < 1 {
        return Err(Error::Domain("uh_certificate needs grid_size ≥ 16 and n_max ≥ 1".into()));
    }
    let p = c.base_period();
    let xs: Vec<f64> = (0..grid_size).map(|i| p * i as f64 / grid_size as f64).collect();
    let mut n = 1u64;
    while n <= n_max {
        let products = |xs: &[f64]| -> (Vec<Mat2>, Vec<Mat2>) {
            xs.par_iter()
                .map(|&x| {
                    let past = iterate(c, n as i64, x - n as f64 * c.alpha).m;
                    let future = iterate(c, n as i64, x).m;
                    (past, future)
                })
                .unzip()
        };
        let (past, future) = products(&xs);
        let shift = n as f64 * c.alpha;
        let cert = refined_check((&xs, &past, &future), p, n, shift, REFINE_FACTOR * grid_size, products);
        if cert.is_some() {
            return Ok(cert);
        }
        n *= 2;
    }
    Ok(None)
}

/// Both sides of an a-priori inequality `lhs ≤ rhs`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl BoundCheck {
    fn new(lhs: f64, rhs: f64) -> Self {
        BoundCheck {
            lhs,
            rhs,
            holds: lhs <= rhs,
        }
    }
}

/// Samples used for sup-norms of maps and their derivatives.
pub const SUP_SAMPLES: usize = 4096;

/// Values and derivatives up to order 3 of a matrix function at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet(pub [Mat2; 4]);

impl Jet {
    pub fn of(map: &QpMap, x: f64, order: u32) -> Result<Jet> {
        let mut j = [Mat2::ZERO; 4];
        for r in 0..=order.min(3) {
            j[r as usize] = map.derivative(r, x)?;
        }
        Ok(Jet(j))
    }

    /// Leibniz rule for the product `self·rhs`.
    pub fn mul(&self, rhs: &Jet) -> Jet {
        const BINOM: [[f64; 4]; 4] = [
            [1.0, 0.0, 0.0, 0.0],
            [1.0, 1.0, 0.0, 0.0],
            [1.0, 2.0, 1.0, 0.0],
            [1.0, 3.0, 3.0, 1.0],
        ];
        let mut out = [Mat2::ZERO; 4];
        for (r, o) in out.iter_mut().enumerate() {
            for k in 0..=r {
                *o = *o + (self.0[k] * rhs.0[r - k]).scale(BINOM[r][k]);
            }
        }
        Jet(out)
    }

    /// Jet of `x ↦ M(x)⁻¹` for `SL(2,ℝ)`-valued `M` (the adjugate is linear).
    pub fn sl2_inverse(&self) -> Jet {
        Jet(self.0.map(|m| m.adjugate()))
    }
}

/// `A = B(·+α)R B⁻¹` with its jets, the data shared by both bound checks.
struct Conjugated<'a> {
    b: &'a QpMap,
    r: &'a QpMap,
    alpha: f64,
}

impl Conjugated<'_> {
    fn validate(b: &QpMap, r: &QpMap) -> Result<()> {
        for j in 0..256 {
            let x = j as f64 / 256.0;
            let bx = b.eval(x);
            if !(bx.det().abs() > 1e-12) {
                return Err(Error::DegenerateConjugacy(x));
            }
            if r.eval(x).distance_to_so2().0 > 1e-8 {
                return Err(Error::Domain(format!("R is not rotation-valued at x = {x}")));
            }
        }
        Ok(())
    }

    fn jet(&self, x: f64, order: u32) -> Result<Jet> {
        let b1 = Jet::of(self.b, x + self.alpha, order)?;
        let r = Jet::of(self.r, x, order)?;
        let binv = Jet::of(self.b, x, order)?.sl2_inverse();
        Ok(b1.mul(&r).mul(&binv))
    }

    fn value(&self, x: f64) -> Mat2 {
        let bx = self.b.eval(x);
        self.b.eval(x + self.alpha) * self.r.eval(x) * bx.adjugate().scale(1.0 / bx.det())
    }

    /// `A_n(x)` as a plain product (bounded by `φ`, no rescaling needed).
    fn iterate(&self, n: usize, x: f64) -> Mat2 {
        (0..n).fold(Mat2::IDENTITY, |p, k| self.value(x + k as f64 * self.alpha) * p)
    }

    /// Jet of `A_n` at `x` by forward-mode differentiation of the product.
    fn iterate_jet(&self, n: usize, x: f64, order: u32) -> Result<Jet> {
        let mut p = Jet([Mat2::IDENTITY, Mat2::ZERO, Mat2::ZERO, Mat2::ZERO]);
        for k in 0..n {
            p = self.jet(x + k as f64 * self.alpha, order)?.mul(&p);
        }
        Ok(p)
    }

    fn phi(&self, x: f64) -> f64 {
        let n = self.b.eval(x).operator_norm();
        n * n
    }

    /// `max_{1≤m≤n} (1/m) Σ_{k<m} φ(x₀ + kα)`.
    fn maximal_function(&self, x0: f64, n: usize) -> f64 {
        let mut sum = 0.0;
        let mut best: f64 = 0.0;
        for m in 1..=n.max(1) {
            sum += self.phi(x0 + (m - 1) as f64 * self.alpha);
            best = best.max(sum / m as f64);
        }
        best
    }

    /// `sup_x ‖∂^r A(x)‖` over a dense uniform sample.
    fn sup_derivative(&self, r: u32) -> Result<f64> {
        let mut best: f64 = 0.0;
        for j in 0..SUP_SAMPLES {
            let x = j as f64 / SUP_SAMPLES as f64;
            best = best.max(self.jet(x, r)?.0[r as usize].operator_norm());
        }
        Ok(best)
    }
}

/// Verify `‖A_n(x₀)⁻¹(A_n(x) − A_n(x₀))‖ ≤ exp(n|x−x₀|‖A‖Lip(A)φ(x₀)S(x₀)) − 1`
/// for `A = B(·+α)RB⁻¹`, with the maximal function `S` truncated at `n`.
pub fn lipschitz_bound_check(
    b: &QpMap,
    r: &QpMap,
    alpha: f64,
    n: usize,
    x0: f64,
    x: f64,
) -> Result<BoundCheck> {
    Conjugated::validate(b, r)?;
    if n == 0 {
        return Ok(BoundCheck::new(0.0, 0.0));
    }
    let a = Conjugated { b, r, alpha };
    let an0 = a.iterate(n, x0);
    let an = a.iterate(n, x);
    let lhs = (an0.adjugate() * (an - an0)).operator_norm();
    let sup_a = a.sup_derivative(0)?;
    let lip = a.sup_derivative(1)?;
    let expo = n as f64 * (x - x0).abs() * sup_a * lip * a.phi(x0) * a.maximal_function(x0, n);
    Ok(BoundCheck::new(lhs, expo.exp_m1()))
}

/// Verify `‖∂^r A_n(x)‖ ≤ Cʳnʳ φ(x₀+nα)^{1/2} (c₁ e^{n c₂|x−x₀|})^{r+1/2} ‖∂^r A‖`
/// with `c₁ = φ(x₀)S(x₀)‖A‖²` and `c₂ = 2S(x₀)φ(x₀)‖A‖‖∂A‖`.
#[allow(clippy::too_many_arguments)]
pub fn derivative_bound_check(
    b: &QpMap,
    r: &QpMap,
    alpha: f64,
    n: usize,
    order: u32,
    x0: f64,
    x: f64,
    c_const: f64,
) -> Result<BoundCheck> {
    for m in [b, r] {
        if !matches!(m, QpMap::Trig(_)) {
            return Err(Error::Representation(
                "derivative bounds need trigonometric-polynomial maps".into(),
            ));
        }
    }
    if order > 3 {
        return Err(Error::Domain("derivative order must be at most 3".into()));
    }
    Conjugated::validate(b, r)?;
    let a = Conjugated { b, r, alpha };
    let lhs = a.iterate_jet(n, x, order)?.0[order as usize].operator_norm();
    let sup_a = a.sup_derivative(0)?;
    let sup_da = a.sup_derivative(1)?;
    let sup_dr = if order == 0 { sup_a } else { a.sup_derivative(order)? };
    let phi0 = a.phi(x0);
    let s0 = a.maximal_function(x0, n);
    let c1 = phi0 * s0 * sup_a * sup_a;
    let c2 = 2.0 * s0 * phi0 * sup_a * sup_da;
    let nf = n as f64;
    let rf = order as f64;
    let rhs = c_const.powf(rf)
        * nf.powf(rf)
        * a.phi(x0 + nf * alpha).sqrt()
        * (c1 * (nf * c2 * (x - x0).abs()).exp()).powf(rf + 0.5)
        * sup_dr;
    Ok(BoundCheck::new(lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arithmetic::golden;
    use proptest::prelude::*;
    use rand::Rng;

    fn close(a: Mat2, b: Mat2, tol: f64) -> bool {
        (a - b).max_abs() <= tol
    }

    fn analytic_b() -> QpMap {
        QpMap::Trig(
            TrigPoly::from_fn(1, 32, |x| {
                let f = 1.0 + 0.3 * (TAU * x).cos();
                Mat2::diag(f, 1.0 / f)
            })
            .unwrap(),
        )
    }

    fn rotation_of(f: impl Fn(f64) -> f64) -> QpMap {
        QpMap::Trig(TrigPoly::from_fn(1, 32, |x| Mat2::rotation(f(x))).unwrap())
    }

    fn schrodinger_like(lambda: f64, e: f64) -> QpMap {
        QpMap::Trig(
            TrigPoly::from_fn(1, 4, |x| Mat2::new(e - lambda * (TAU * x).cos(), -1.0, 1.0, 0.0))
                .unwrap(),
        )
    }

    fn random_trig(rng: &mut ChaCha8Rng) -> QpMap {
        // B(x) R_{θ(x)} B(x)⁻¹-type SL(2,ℝ) map with a couple of modes
        let a1: f64 = rng.gen_range(-0.3..0.3);
        let a2: f64 = rng.gen_range(-0.3..0.3);
        let th: f64 = rng.gen_range(0.0..1.0);
        let s: f64 = rng.gen_range(-0.2..0.2);
        QpMap::Trig(
            TrigPoly::from_fn(1, 24, move |x| {
                let f = 1.0 + a1 * (TAU * x).cos() + a2 * (2.0 * TAU * x).sin();
                Mat2::diag(f, 1.0 / f) * Mat2::rotation(th + s * (TAU * x).sin())
            })
            .unwrap(),
        )
    }

    #[test]
    fn trig_rotation_at_quarter() {
        let r = TrigPoly::rotation_winding(1);
        assert!(close(r.eval(0.25), Mat2::new(0.0, -1.0, 1.0, 0.0), 1e-15));
        let r3 = TrigPoly::rotation_winding(-3);
        assert!(close(r3.eval(0.1), Mat2::rotation(-0.3), 1e-14));
    }

    #[test]
    fn trig_periodicity_and_symmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = random_trig(&mut rng);
        for j in 0..50 {
            let x = j as f64 * 0.137 - 3.0;
            let a = m.eval(x);
            assert!(close(a, m.eval(x + 1.0), 1e-12));
            assert!((a.det() - 1.0).abs() < 1e-8);
        }
        let p2 = TrigPoly::from_fn(2, 8, |x| Mat2::rotation(0.5 * x)).unwrap();
        assert!(close(p2.eval(0.3), p2.eval(2.3), 1e-12));
        assert!(close(p2.eval(0.3), Mat2::rotation(0.15), 1e-12));
    }

    #[test]
    fn trig_derivatives_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let QpMap::Trig(t) = random_trig(&mut rng) else { unreachable!() };
        let h = 1e-5;
        for r in 1..=3u32 {
            for j in 0..10 {
                let x = 0.09 * j as f64;
                let fd = (t.derivative(r - 1, x + h) - t.derivative(r - 1, x - h)).scale(0.5 / h);
                let exact = t.derivative(r, x);
                assert!(
                    (fd - exact).max_abs() <= 1e-5 * (1.0 + exact.max_abs()),
                    "r {r} x {x}"
                );
            }
        }
    }

    #[test]
    fn schrodinger_map_is_constant_without_potential() {
        let m = schrodinger_like(0.0, 2.5);
        for x in [0.0, 0.3, 0.77] {
            assert!(close(m.eval(x), Mat2::new(2.5, -1.0, 1.0, 0.0), 1e-13));
        }
    }

    #[test]
    fn word_matches_direct_composition() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let base = Arc::new(random_trig(&mut rng));
        let beta = 0.2360679;
        let x_star = 0.31;
        let w = QpMap::reparametrized(base.clone(), beta, x_star);
        for _ in 0..100 {
            let x: f64 = rng.gen_range(-2.0..2.0);
            assert!(close(w.eval(x), base.eval(beta * x + x_star), 1e-12));
        }
        let other = Arc::new(random_trig(&mut rng));
        let p = QpMap::product(base.clone(), other.clone());
        let x = 0.4;
        assert!(close(p.eval(x), base.eval(x) * other.eval(x), 1e-12));
    }

    #[test]
    fn sampled_interpolates() {
        let s = Sampled::from_fn(1, 64, |x| Mat2::rotation(0.1 * (TAU * x).sin())).unwrap();
        let m = QpMap::Sampled(s);
        assert!(close(m.eval(0.0), Mat2::IDENTITY, 1e-15));
        assert!(close(m.eval(1.0 / 64.0), m.eval(1.0 + 1.0 / 64.0), 1e-12));
        let mid = m.eval(0.5 / 64.0);
        let expect = (m.eval(0.0) + m.eval(1.0 / 64.0)).scale(0.5);
        assert!(close(mid, expect, 1e-14));
    }

    #[test]
    fn json_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let m = random_trig(&mut rng);
        let back = QpMap::from_json(&m.to_json().unwrap()).unwrap();
        assert!(close(m.eval(0.123), back.eval(0.123), 0.0));
        let s = QpMap::Sampled(Sampled::from_fn(2, 16, Mat2::rotation).unwrap());
        let back = QpMap::from_json(&s.to_json().unwrap()).unwrap();
        assert_eq!(back.period(), Some(2));
        assert!(QpMap::from_json(&json!({"period": 1, "repr": {"type": "spline"}})).is_err());
        let v = ScalarMap::Trig(ScalarTrigPoly::cosine_series(&[0.1, 2.0, -0.3]).unwrap());
        let back = ScalarMap::from_json(&v.to_json()).unwrap();
        assert_eq!(back, v);
    }

    #[test]
    fn iterate_examples() {
        let c = Cocycle::new(golden(), QpMap::constant(Mat2::diag(2.0, 0.5))).unwrap();
        let it = iterate(&c, 0, 0.3);
        assert_eq!(it.m, Mat2::IDENTITY);
        assert_eq!(it.log_scale, 0.0);
        for n in [1i64, 7, 100, 5000] {
            let it = iterate(&c, n, 0.1);
            assert!((it.log_scale - n as f64 * 2f64.ln()).abs() < 1e-9 * n as f64);
            assert!((it.m.operator_norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn iterate_does_not_overflow() {
        let c = Cocycle::new(golden(), schrodinger_like(1.0, 7.0)).unwrap();
        let it = iterate(&c, 100_000, 0.2);
        assert!(it.m.is_finite() && it.log_scale.is_finite());
        assert!(it.log_scale > 100_000.0 * 1.5);
    }

    #[test]
    fn cocycle_and_inverse_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let c = Cocycle::new(golden(), random_trig(&mut rng)).unwrap();
            let n: i64 = rng.gen_range(0..=50);
            let m: i64 = rng.gen_range(0..=50);
            let x: f64 = rng.gen_range(0.0..1.0);
            let lhs = iterate(&c, n + m, x);
            let a = iterate(&c, n, x + m as f64 * c.alpha);
            let b = iterate(&c, m, x);
            // direct-product oracle in normalized form
            let prod = a.m * b.m;
            let norm = prod.operator_norm();
            assert!(close(lhs.m, prod.scale(1.0 / norm), 1e-8));
            assert!((lhs.log_scale - (a.log_scale + b.log_scale + norm.ln())).abs() < 1e-8);

            let inv = iterate(&c, -n, x);
            let fwd = iterate(&c, n, x - n as f64 * c.alpha).to_mat();
            let direct = fwd.inverse().unwrap();
            assert!(close(inv.to_mat(), direct, 1e-8 * direct.max_abs().max(1.0)));
        }
    }

    #[test]
    fn lyapunov_examples() {
        let rot = Cocycle::new(golden(), QpMap::constant(Mat2::rotation(0.2))).unwrap();
        assert!(lyapunov(&rot, 1000, 8, 1).unwrap().value.abs() < 1e-9);

        let c = Cocycle::new(golden(), QpMap::constant(Mat2::new(3.0, -1.0, 1.0, 0.0))).unwrap();
        let l = lyapunov(&c, 1000, 4, 1).unwrap();
        assert!((l.value - ((3.0 + 5f64.sqrt()) / 2.0).ln()).abs() < 1e-3);

        let amo = Cocycle::new(golden(), schrodinger_like(4.0, 0.0)).unwrap();
        let l = lyapunov(&amo, 10_000, 32, 2).unwrap();
        assert!(l.value >= 2f64.ln() - 0.02, "{l:?}");

        assert!(lyapunov(&c, 0, 4, 1).is_err());
    }

    #[test]
    fn lyapunov_is_deterministic() {
        let c = Cocycle::new(golden(), schrodinger_like(2.0, 0.3)).unwrap();
        let a = lyapunov(&c, 2000, 16, 9).unwrap();
        let b = lyapunov(&c, 2000, 16, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn lyapunov_invariant_under_constant_conjugacy() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let c = Cocycle::new(golden(), schrodinger_like(2.5, 0.4)).unwrap();
        let base = lyapunov(&c, 10_000, 16, 3).unwrap().value;
        for _ in 0..5 {
            let b0 = loop {
                let m = Mat2::new(
                    rng.gen_range(-1.7..1.7),
                    rng.gen_range(-1.7..1.7),
                    rng.gen_range(-1.7..1.7),
                    rng.gen_range(-1.7..1.7),
                );
                let det = m.det();
                if det > 0.2 {
                    let m = m.scale(1.0 / det.sqrt());
                    if m.operator_norm() <= 3.0 {
                        break m;
                    }
                }
            };
            let conj = c.conjugate(Arc::new(QpMap::constant(b0)));
            let l = lyapunov(&conj, 10_000, 16, 3).unwrap().value;
            assert!((l - base).abs() < 2e-3, "{l} vs {base}");
        }
    }

    #[test]
    fn certificate_examples() {
        let hyp = Cocycle::new(golden(), QpMap::constant(Mat2::diag(2.0, 0.5))).unwrap();
        let cert = uh_certificate(&hyp, 64, 16).unwrap().expect("hyperbolic constant");
        assert_eq!(cert.n_step, 1);
        assert!(cert.contraction_margin > 0.0);
        assert!(cert.cone_center.iter().all(|c| c.abs() < 1e-12));

        let rot = Cocycle::new(golden(), QpMap::constant(Mat2::rotation(0.1234567))).unwrap();
        assert!(uh_certificate(&rot, 64, 1024).unwrap().is_none());

        let amo = Cocycle::new(golden(), schrodinger_like(1.0, 5.0)).unwrap();
        assert!(uh_certificate(&amo, 256, 64).unwrap().is_some());

        assert!(uh_certificate(&amo, 8, 64).is_err());
    }

    #[test]
    fn certificate_implies_growth() {
        for (lambda, e) in [(1.0, 3.5), (3.0, 4.8), (0.5, -2.9), (2.0, 3.0)] {
            let c = Cocycle::new(golden(), schrodinger_like(lambda, e)).unwrap();
            if let Some(cert) = uh_certificate(&c, 128, 512).unwrap() {
                let min_growth = (0..128)
                    .map(|i| iterate(&c, cert.n_step as i64, i as f64 / 128.0).log_norm())
                    .fold(f64::INFINITY, f64::min);
                assert!(min_growth > 0.0, "λ={lambda} E={e}");
                assert!(lyapunov(&c, 4096, 8, 0).unwrap().value > 0.0);
            }
        }
    }

    #[test]
    fn lipschitz_bound_examples() {
        let g = golden();
        let id = QpMap::constant(Mat2::IDENTITY);
        let r = rotation_of(|x| 0.2 + 0.1 * (TAU * x).cos());
        let chk = lipschitz_bound_check(&id, &r, g, 20, 0.3, 0.305).unwrap();
        assert!(chk.holds);
        let zero = lipschitz_bound_check(&id, &r, g, 0, 0.3, 0.305).unwrap();
        assert_eq!((zero.lhs, zero.rhs, zero.holds), (0.0, 0.0, true));

        let b = analytic_b();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let n = rng.gen_range(1..=50);
            let x0: f64 = rng.gen_range(0.0..1.0);
            let x = x0 + rng.gen_range(-0.01..0.01);
            let chk = lipschitz_bound_check(&b, &r, g, n, x0, x).unwrap();
            assert!(chk.holds, "{chk:?}");
        }

        let singular = QpMap::constant(Mat2::ZERO);
        assert!(matches!(
            lipschitz_bound_check(&singular, &r, g, 3, 0.0, 0.0),
            Err(Error::DegenerateConjugacy(_))
        ));
    }

    #[test]
    fn derivative_bound_examples() {
        let g = golden();
        let b = analytic_b();
        let r = rotation_of(|x| 0.2 + 0.1 * (TAU * x).cos());
        let zeroth = derivative_bound_check(&b, &r, g, 10, 0, 0.2, 0.205, 8.0).unwrap();
        assert!(zeroth.holds);
        for n in [1, 5, 20] {
            let chk = derivative_bound_check(&b, &r, g, n, 1, 0.6, 0.607, 8.0).unwrap();
            assert!(chk.holds, "{chk:?}");
        }
        let id = QpMap::constant(Mat2::IDENTITY);
        let rc = QpMap::constant(Mat2::rotation(0.3));
        let chk = derivative_bound_check(&id, &rc, g, 10, 1, 0.1, 0.1, 8.0).unwrap();
        assert!(chk.lhs.abs() < 1e-12 && chk.holds);

        let sampled = QpMap::Sampled(Sampled::from_fn(1, 32, |_| Mat2::IDENTITY).unwrap());
        assert!(matches!(
            derivative_bound_check(&sampled, &rc, g, 3, 1, 0.0, 0.0, 8.0),
            Err(Error::Representation(_))
        ));
    }

    #[test]
    fn forward_mode_matches_finite_differences() {
        let g = golden();
        let b = analytic_b();
        let r = rotation_of(|x| 0.2 + 0.1 * (TAU * x).cos());
        let a = Conjugated { b: &b, r: &r, alpha: g };
        let x = 0.37;
        let h = 1e-6;
        let jet = a.iterate_jet(15, x, 1).unwrap();
        let fd = (a.iterate(15, x + h) - a.iterate(15, x - h)).scale(0.5 / h);
        assert!((jet.0[1] - fd).max_abs() < 1e-5 * (1.0 + fd.max_abs()));
        assert!((jet.0[0] - a.iterate(15, x)).max_abs() < 1e-10);
    }

    proptest! {
        #[test]
        fn lyapunov_is_nonnegative(lambda in 0.0f64..4.0, e in -4.0f64..4.0, seed in 0u64..1000) {
            let c = Cocycle::new(golden(), schrodinger_like(lambda, e)).unwrap();
            let l = lyapunov(&c, 500, 8, seed).unwrap();
            prop_assert!(l.value >= -2e-3);
        }
    }
}
