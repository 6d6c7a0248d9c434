//! Schrödinger cocycles, spectrum scans by cone-field certification, the
//! Herman lower bound and Hofstadter-butterfly grids.
//!
//! Scans run on [`SchrodingerKernel`], which advances many phases in
//! lockstep and evaluates trigonometric potentials by phasor recurrences.
//! The generic routines of [`crate::cocycle`] and [`crate::rotnum`] compute
//! the same quantities and serve as its reference in tests.

use std::f64::consts::{FRAC_PI_4, TAU};
use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cocycle::{
    jittered_grid, refined_check, REFINE_FACTOR, lyapunov, summarize_lyapunov, Cocycle, ConeCertificate,
    LyapunovEstimate, QpMap, Sampled, ScalarMap, ScalarTrigPoly, TrigPoly,
};
use crate::error::{Error, Result};
use crate::linalg2::Mat2;
use crate::rotnum::{self, RotationNumber, DIRECTIONS};

/// `(α, S_{v,E})` with `S_{v,E}(x) = [[E − v(x), −1], [1, 0]]`.
pub fn schrodinger(v: &ScalarMap, e: f64, alpha: f64) -> Result<Cocycle> {
    if !e.is_finite() {
        return Err(Error::Domain(format!("energy must be finite, got {e}")));
    }
    let map = match v {
        ScalarMap::Trig(t) => {
            let z = Complex64::new(0.0, 0.0);
            let mut coeffs: Vec<[Complex64; 4]> = t
                .coeffs()
                .iter()
                .map(|vk| [-vk, z, z, z])
                .collect();
            coeffs[0] = [
                Complex64::new(e - t.coeffs()[0].re, 0.0),
                Complex64::new(-1.0, 0.0),
                Complex64::new(1.0, 0.0),
                z,
            ];
            QpMap::Trig(TrigPoly::new(1, coeffs)?)
        }
        ScalarMap::Sampled(values) => QpMap::Sampled(Sampled::new(
            1,
            values
                .iter()
                .map(|&vx| Mat2::new(e - vx, -1.0, 1.0, 0.0))
                .collect(),
        )?),
    };
    Cocycle::new(alpha, map)
}

/// `v(x) = λ cos 2πx`.
pub fn amo_potential(lambda: f64) -> ScalarMap {
    let coeffs = if lambda == 0.0 {
        vec![Complex64::new(0.0, 0.0)]
    } else {
        vec![Complex64::new(0.0, 0.0), Complex64::new(0.5 * lambda, 0.0)]
    };
    ScalarMap::Trig(ScalarTrigPoly::new(coeffs).expect("real coefficients"))
}

/// Half-width of the interval `[−2 − sup|v|, 2 + sup|v|]` outside which every
/// energy is uniformly hyperbolic.
pub fn inclusion_radius(v: &ScalarMap) -> f64 {
    2.0 + v.sup_bound()
}

/// Transfer-matrix engine for trigonometric potentials.
#[derive(Debug, Clone)]
pub struct SchrodingerKernel {
    alpha: f64,
    v0: f64,
    /// `v̂(1), …, v̂(K)`.
    modes: Vec<Complex64>,
    sup: f64,
}

/// Steps between phasor resynchronisations.
const RESYNC: i64 = 64;

/// The potential at `y_i + kα` for a set of starting phases `y_i`, with `k`
/// moving by `±1` per step.
struct PhaseLanes<'a> {
    kernel: &'a SchrodingerKernel,
    /// `Re/Im(2 v̂(m) e^{2πi m y_i})` per mode.
    ur: Vec<Vec<f64>>,
    ui: Vec<Vec<f64>>,
    /// Shared phasors `e^{2πi m kα}` and their one-step factors.
    w: Vec<Complex64>,
    step: Vec<Complex64>,
    k: i64,
    dir: i64,
    v: Vec<f64>,
}

impl<'a> PhaseLanes<'a> {
    fn new(kernel: &'a SchrodingerKernel, ys: &[f64], k0: i64, dir: i64) -> Self {
        let n = ys.len();
        let mut ur = vec![vec![0.0; n]; kernel.modes.len()];
        let mut ui = vec![vec![0.0; n]; kernel.modes.len()];
        for (i, &y) in ys.iter().enumerate() {
            for (m, vm) in kernel.modes.iter().enumerate() {
                let (s, c) = (TAU * ((m + 1) as f64 * y).rem_euclid(1.0)).sin_cos();
                let u = 2.0 * vm * Complex64::new(c, s);
                ur[m][i] = u.re;
                ui[m][i] = u.im;
            }
        }
        PhaseLanes {
            kernel,
            ur,
            ui,
            w: kernel.phasors(k0),
            step: kernel.phasors(dir),
            k: k0,
            dir,
            v: vec![0.0; n],
        }
    }

    /// Fill `v` for the current `k`, then move `k` on.
    fn next(&mut self) -> &[f64] {
        self.v.fill(self.kernel.v0);
        for (m, wm) in self.w.iter().enumerate() {
            for ((v, ur), ui) in self.v.iter_mut().zip(&self.ur[m]).zip(&self.ui[m]) {
                *v += ur * wm.re - ui * wm.im;
            }
        }
        self.k += self.dir;
        if self.k % RESYNC == 0 {
            self.w = self.kernel.phasors(self.k);
        } else {
            for (wm, sm) in self.w.iter_mut().zip(&self.step) {
                *wm *= sm;
            }
        }
        &self.v
    }
}

/// Structure-of-arrays `2×2` products, one per lane.
struct MatLanes {
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
    d: Vec<f64>,
    log: Vec<f64>,
}

impl MatLanes {
    fn identity(n: usize) -> Self {
        MatLanes {
            a: vec![1.0; n],
            b: vec![0.0; n],
            c: vec![0.0; n],
            d: vec![1.0; n],
            log: vec![0.0; n],
        }
    }

    /// `M ← S(v)·M`.
    fn push_left(&mut self, e: f64, v: &[f64]) {
        let it = self.a.iter_mut().zip(&mut self.b).zip(&mut self.c).zip(&mut self.d);
        for ((((a, b), c), d), v) in it.zip(v) {
            let t = e - v;
            let (a0, b0) = (*a, *b);
            *a = t * a0 - *c;
            *b = t * b0 - *d;
            *c = a0;
            *d = b0;
        }
    }

    /// `M ← M·S(v)`.
    fn push_right(&mut self, e: f64, v: &[f64]) {
        let it = self.a.iter_mut().zip(&mut self.b).zip(&mut self.c).zip(&mut self.d);
        for ((((a, b), c), d), v) in it.zip(v) {
            let t = e - v;
            let (a0, c0) = (*a, *c);
            *a = a0 * t + *b;
            *b = -a0;
            *c = c0 * t + *d;
            *d = -c0;
        }
    }

    fn rescale(&mut self) {
        for i in 0..self.a.len() {
            let m = self.a[i]
                .abs()
                .max(self.b[i].abs())
                .max(self.c[i].abs())
                .max(self.d[i].abs());
            let inv = 1.0 / m;
            self.a[i] *= inv;
            self.b[i] *= inv;
            self.c[i] *= inv;
            self.d[i] *= inv;
            self.log[i] += m.ln();
        }
    }

    fn get(&self, i: usize) -> Mat2 {
        Mat2::new(self.a[i], self.b[i], self.c[i], self.d[i])
    }

    fn normalized(&self) -> Vec<Mat2> {
        (0..self.a.len())
            .map(|i| {
                let m = self.get(i);
                m.scale(1.0 / m.operator_norm())
            })
            .collect()
    }
}

/// Grows `A_n(x_i)` forward and `A_n(x_i − nα)` backward one step at a time.
struct PastFuture<'a> {
    e: f64,
    every: u64,
    n: u64,
    fwd: PhaseLanes<'a>,
    bwd: PhaseLanes<'a>,
    future: MatLanes,
    past: MatLanes,
}

impl<'a> PastFuture<'a> {
    fn new(kernel: &'a SchrodingerKernel, e: f64, xs: &[f64]) -> Self {
        PastFuture {
            e,
            every: kernel.rescale_interval(e),
            n: 0,
            fwd: PhaseLanes::new(kernel, xs, 0, 1),
            bwd: PhaseLanes::new(kernel, xs, -1, -1),
            future: MatLanes::identity(xs.len()),
            past: MatLanes::identity(xs.len()),
        }
    }

    fn advance_to(&mut self, n: u64) {
        while self.n < n {
            self.future.push_left(self.e, self.fwd.next());
            self.past.push_right(self.e, self.bwd.next());
            self.n += 1;
            if self.n % self.every == 0 {
                self.future.rescale();
                self.past.rescale();
            }
        }
    }
}

impl SchrodingerKernel {
    pub fn new(v: &ScalarMap, alpha: f64) -> Result<Self> {
        match v {
            ScalarMap::Trig(t) => Ok(SchrodingerKernel {
                alpha,
                v0: t.coeffs()[0].re,
                modes: t.coeffs()[1..].to_vec(),
                sup: t.sup_bound(),
            }),
            ScalarMap::Sampled(_) => Err(Error::Representation(
                "the scan kernel needs a trigonometric potential".into(),
            )),
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Steps between rescalings such that entries cannot overflow.
    fn rescale_interval(&self, e: f64) -> u64 {
        let g = (e.abs() + self.sup + 2.0).log10();
        ((250.0 / g).floor() as u64).clamp(1, 32)
    }

    /// Shared phasors `e^{2πi m kα}` for every mode.
    fn phasors(&self, k: i64) -> Vec<Complex64> {
        let base = (k as f64 * self.alpha).rem_euclid(1.0);
        (1..=self.modes.len())
            .map(|m| {
                let (s, c) = (TAU * (m as f64 * base).rem_euclid(1.0)).sin_cos();
                Complex64::new(c, s)
            })
            .collect()
    }

    /// Normalized `A_n(x_i − nα)` and `A_n(x_i)` for every grid point.
    pub fn past_and_future(&self, e: f64, xs: &[f64], n: u64) -> (Vec<Mat2>, Vec<Mat2>) {
        let mut pf = PastFuture::new(self, e, xs);
        pf.advance_to(n);
        (pf.past.normalized(), pf.future.normalized())
    }

    /// `(1/n) ln‖A_n(y_i)‖` per starting phase.
    pub fn log_norms(&self, e: f64, ys: &[f64], n: u64) -> Vec<f64> {
        let every = self.rescale_interval(e);
        let mut phase = PhaseLanes::new(self, ys, 0, 1);
        let mut m = MatLanes::identity(ys.len());
        for k in 1..=n {
            m.push_left(e, phase.next());
            if k % every == 0 {
                m.rescale();
            }
        }
        (0..ys.len())
            .map(|i| (m.log[i] + m.get(i).operator_norm().ln()) / n as f64)
            .collect()
    }

    /// Certificate for `|E| > 2 + sup|v|`: the cone `|w₂| ≤ |w₁|` is mapped
    /// into itself with slope at most `1/(|E| − sup|v| − 1)` at every phase.
    pub fn outer_certificate(&self, e: f64, grid_size: usize) -> Option<ConeCertificate> {
        let a_min = e.abs() - self.sup;
        if a_min <= 2.0 {
            return None;
        }
        Some(ConeCertificate {
            grid_size,
            grid: (0..grid_size).map(|i| i as f64 / grid_size as f64).collect(),
            n_step: 1,
            cone_center: vec![0.0; grid_size],
            half_angles: vec![FRAC_PI_4; grid_size],
            half_angle: FRAC_PI_4,
            contraction_margin: FRAC_PI_4 - (1.0 / (a_min - 1.0)).atan(),
            slack: 0.0,
        })
    }

    /// Cone-field search over `n = 1, 2, 4, …, ≤ n_max` with local grid
    /// refinement, as in [`crate::cocycle::uh_certificate`].
    pub fn certify(&self, e: f64, grid_size: usize, n_max: u64) -> Option<ConeCertificate> {
        if let Some(cert) = self.outer_certificate(e, grid_size) {
            return Some(cert);
        }
        let xs: Vec<f64> = (0..grid_size).map(|i| i as f64 / grid_size as f64).collect();
        let mut pf = PastFuture::new(self, e, &xs);
        let mut n = 1;
        while n <= n_max {
            pf.advance_to(n);
            let (past, future) = (pf.past.normalized(), pf.future.normalized());
            let cert = refined_check(
                (&xs, &past, &future),
                1.0,
                n,
                n as f64 * self.alpha,
                REFINE_FACTOR * grid_size,
                |new: &[f64]| self.past_and_future(e, new, n),
            );
            if cert.is_some() {
                return cert;
            }
            n *= 2;
        }
        None
    }

    pub fn lyapunov(&self, e: f64, n: u64, n_samples: usize, seed: u64) -> LyapunovEstimate {
        let ys = jittered_grid(1.0, n_samples, seed);
        summarize_lyapunov(&self.log_norms(e, &ys, n), n)
    }

    /// Birkhoff average of the lift from `(x0, w0 + j/8)`, `j = 0..8`.
    ///
    /// Same branch as [`crate::linalg2::lift_increment`], evaluated without
    /// per-step angles: with `θ = arg(E − v, 1) ∈ (0, 1/2)` every increment
    /// lies in `(−1/2, 1)`, and sign tests decide the branch and count
    /// passages through angle 0. Only the endpoints need `atan2`.
    pub fn rotation_number(&self, e: f64, n_iter: u64, x0: f64, w0: f64) -> RotationNumber {
        let start: [[f64; 2]; DIRECTIONS] = std::array::from_fn(|j| {
            let (s, c) = (TAU * (w0 + j as f64 / DIRECTIONS as f64)).sin_cos();
            [c, s]
        });
        let mut u = start;
        // passages through angle 0 minus increments taken on the lower branch
        let mut count = [0i64; DIRECTIONS];
        let mut phase = PhaseLanes::new(self, &[x0], 0, 1);
        for _ in 0..n_iter {
            let t = e - phase.next()[0];
            for j in 0..DIRECTIONS {
                let [x, y] = u[j];
                let x1 = t * x - y;
                let cross = x * x - t * x * y + y * y;
                let (h0, h1) = (lower_half(x, y), lower_half(x1, x));
                let wrapped = h1 < h0 || (h1 == h0 && cross < 0.0);
                let lower = cross < 0.0 && t * y * x1 >= 0.0;
                count[j] += wrapped as i64 - lower as i64;
                u[j] = [x1, x];
                let big = x1.abs().max(x.abs());
                if !(1e-100..=1e100).contains(&big) {
                    let s = 1.0 / big;
                    u[j] = [x1 * s, x * s];
                }
            }
        }
        let turn = |v: [f64; 2]| (v[1].atan2(v[0]) / TAU).rem_euclid(1.0);
        let totals: [f64; DIRECTIONS] =
            std::array::from_fn(|j| turn(u[j]) - turn(start[j]) + count[j] as f64);
        rotnum::summarize(&totals, n_iter)
    }
}

/// `true` for angles in `[1/2, 1)` turns.
#[inline]
fn lower_half(x: f64, y: f64) -> bool {
    y < 0.0 || (y == 0.0 && x < 0.0)
}

/// Per-energy classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Class {
    CertifiedHyperbolic,
    Undecided,
}

impl fmt::Display for Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Class::CertifiedHyperbolic => "certified-hyperbolic",
            Class::Undecided => "undecided",
        })
    }
}

/// What a stored certificate guarantees (the cone field itself is dropped).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertificateSummary {
    pub n_step: u64,
    pub half_angle: f64,
    pub contraction_margin: f64,
    pub slack: f64,
}

impl From<&ConeCertificate> for CertificateSummary {
    fn from(c: &ConeCertificate) -> Self {
        CertificateSummary {
            n_step: c.n_step,
            half_angle: c.half_angle,
            contraction_margin: c.contraction_margin,
            slack: c.slack,
        }
    }
}

/// Parameters applied identically at every energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanParams {
    pub grid_size: usize,
    pub n_max: u64,
    /// Iterations for the rotation number; 0 skips it.
    pub n_iter: u64,
    pub lyapunov_n: u64,
    pub lyapunov_samples: usize,
    pub seed: u64,
}

impl Default for ScanParams {
    fn default() -> Self {
        ScanParams {
            grid_size: 256,
            n_max: 1 << 14,
            n_iter: 1 << 16,
            lyapunov_n: 4096,
            lyapunov_samples: 8,
            seed: 0,
        }
    }
}

impl ScanParams {
    fn validate(&self) -> Result<()> {
        if self.grid_size < 16 || self.n_max < 1 || self.lyapunov_n < 1 || self.lyapunov_samples < 1
        {
            return Err(Error::Domain(format!("invalid scan parameters {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanEntry {
    pub e: f64,
    pub class: Class,
    pub certificate: Option<CertificateSummary>,
    pub lyapunov: LyapunovEstimate,
    pub rho: Option<RotationNumber>,
}

impl ScanEntry {
    /// `N(E) = 1 − 2ρ`.
    pub fn ids(&self) -> Option<f64> {
        self.rho.map(|r| 1.0 - 2.0 * r.lift)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumScan {
    pub alpha: f64,
    #[serde(skip)]
    pub potential: Option<ScalarMap>,
    pub inclusion_radius: f64,
    pub e_min: f64,
    pub e_max: f64,
    pub de: f64,
    pub params: ScanParams,
    pub entries: Vec<ScanEntry>,
}

/// Uniform grid `E_min + j·dE`, `0 ≤ j ≤ ⌊(E_max − E_min)/dE⌋`.
pub fn energy_grid(e_min: f64, e_max: f64, de: f64) -> Result<Vec<f64>> {
    if !(de > 0.0) || !(e_max >= e_min) || !e_min.is_finite() || !e_max.is_finite() {
        return Err(Error::Domain(format!(
            "invalid energy grid [{e_min}, {e_max}] step {de}"
        )));
    }
    let count = ((e_max - e_min) / de + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|j| e_min + j as f64 * de).collect())
}

/// Classify every energy of the grid; deterministic given the parameters.
pub fn spectrum_scan(
    v: &ScalarMap,
    alpha: f64,
    e_min: f64,
    e_max: f64,
    de: f64,
    params: ScanParams,
) -> Result<SpectrumScan> {
    params.validate()?;
    let kernel = SchrodingerKernel::new(v, alpha)?;
    let energies = energy_grid(e_min, e_max, de)?;
    let entries = energies
        .par_iter()
        .map(|&e| scan_energy(&kernel, e, &params))
        .collect();
    Ok(SpectrumScan {
        alpha,
        potential: Some(v.clone()),
        inclusion_radius: inclusion_radius(v),
        e_min,
        e_max,
        de,
        params,
        entries,
    })
}

fn scan_energy(kernel: &SchrodingerKernel, e: f64, params: &ScanParams) -> ScanEntry {
    let cert = kernel.certify(e, params.grid_size, params.n_max);
    ScanEntry {
        e,
        class: if cert.is_some() {
            Class::CertifiedHyperbolic
        } else {
            Class::Undecided
        },
        certificate: cert.as_ref().map(CertificateSummary::from),
        lyapunov: kernel.lyapunov(e, params.lyapunov_n, params.lyapunov_samples, params.seed),
        rho: (params.n_iter > 0).then(|| kernel.rotation_number(e, params.n_iter, 0.0, 0.0)),
    }
}

impl SpectrumScan {
    pub fn undecided(&self) -> impl Iterator<Item = &ScanEntry> {
        self.entries.iter().filter(|x| x.class == Class::Undecided)
    }

    /// Undecided energies whose Lyapunov estimate exceeds `threshold`
    /// (the proxy for the positive-exponent part of the spectrum).
    pub fn positive_exponent_count(&self, threshold: f64) -> usize {
        self.undecided()
            .filter(|x| x.lyapunov.value > threshold)
            .count()
    }

    /// CSV with header `E,class,measure,L,L_spread,rho,rho_spread`; the
    /// `measure` column is `dE` on undecided rows, so it sums to
    /// [`spectrum_measure`].
    pub fn to_csv(&self) -> String {
        let mut out = String::from("E,class,measure,L,L_spread,rho,rho_spread\n");
        for x in &self.entries {
            let (rho, spread) = match x.rho {
                Some(r) => (r.lift.to_string(), r.spread.to_string()),
                None => (String::new(), String::new()),
            };
            let measure = if x.class == Class::Undecided { self.de } else { 0.0 };
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                x.e, x.class, measure, x.lyapunov.value, x.lyapunov.spread, rho, spread
            ));
        }
        out
    }
}

/// `dE × #undecided`: an upper-bound proxy for the measure of the spectrum
/// at this resolution.
pub fn spectrum_measure(scan: &SpectrumScan) -> Result<f64> {
    let r = scan.inclusion_radius;
    if scan.e_min > -r || scan.e_max < r {
        return Err(Error::Range {
            min: scan.e_min,
            max: scan.e_max,
            need_min: -r,
            need_max: r,
        });
    }
    Ok(scan.de * scan.undecided().count() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HermanCheck {
    pub min_l: f64,
    pub bound: f64,
    pub holds: bool,
}

/// Slack allowed below `ln(λ/2)`.
pub const HERMAN_SLACK: f64 = 0.05;

/// `min_E L(α, S_{λcos, E})` over the samples against `max(ln(λ/2), 0)`.
pub fn herman_check(lambda: f64, alpha: f64, energies: &[f64], n: u64) -> Result<HermanCheck> {
    if energies.is_empty() {
        return Err(Error::Domain("herman_check needs at least one energy".into()));
    }
    let v = amo_potential(lambda);
    let bound = (lambda.abs() / 2.0).ln().max(0.0);
    let ls = energies
        .iter()
        .map(|&e| Ok(lyapunov(&schrodinger(&v, e, alpha)?, n, 16, 0)?.value))
        .collect::<Result<Vec<f64>>>()?;
    let min_l = ls.into_iter().fold(f64::INFINITY, f64::min);
    Ok(HermanCheck {
        min_l,
        bound,
        holds: min_l >= bound - HERMAN_SLACK,
    })
}

/// One cell of a butterfly grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ButterflyCell {
    pub alpha: f64,
    pub e: f64,
    pub class: Class,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Butterfly {
    pub lambda: f64,
    pub cells: Vec<ButterflyCell>,
    /// Frequencies that were moved off a nearby rational.
    pub perturbed: Vec<(f64, f64)>,
}

impl Butterfly {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("alpha,E,class\n");
        for c in &self.cells {
            out.push_str(&format!("{},{},{}\n", c.alpha, c.e, c.class));
        }
        out
    }
}

/// Rationals `p/q` with `q ≤` this bound count as "near rational".
const RATIONAL_Q: i64 = 1000;
const RATIONAL_TOL: f64 = 1e-9;
const RATIONAL_SHIFT: f64 = 1e-7;

fn off_rational(alpha: f64) -> f64 {
    for q in 1..=RATIONAL_Q {
        let qa = q as f64 * alpha;
        if (qa - qa.round()).abs() < RATIONAL_TOL * q as f64 {
            return alpha + RATIONAL_SHIFT;
        }
    }
    alpha
}

/// Classification over an `(α, E)` grid for the potential `λ cos 2πx`.
pub fn butterfly(lambda: f64, alphas: &[f64], energies: &[f64], grid_size: usize, n_max: u64) -> Result<Butterfly> {
    if grid_size < 16 || n_max < 1 {
        return Err(Error::Domain("butterfly needs grid_size ≥ 16 and n_max ≥ 1".into()));
    }
    let v = amo_potential(lambda);
    let mut perturbed = Vec::new();
    let mut used = Vec::with_capacity(alphas.len());
    for &a in alphas {
        let b = off_rational(a);
        if b != a {
            perturbed.push((a, b));
        }
        used.push(b);
    }
    let jobs: Vec<(f64, f64)> = used
        .iter()
        .flat_map(|&a| energies.iter().map(move |&e| (a, e)))
        .collect();
    let kernels: Vec<SchrodingerKernel> = used
        .iter()
        .map(|&a| SchrodingerKernel::new(&v, a))
        .collect::<Result<_>>()?;
    let cells = jobs
        .par_iter()
        .enumerate()
        .map(|(idx, &(a, e))| {
            let kernel = &kernels[idx / energies.len()];
            let class = if kernel.certify(e, grid_size, n_max).is_some() {
                Class::CertifiedHyperbolic
            } else {
                Class::Undecided
            };
            ButterflyCell { alpha: a, e, class }
        })
        .collect();
    Ok(Butterfly {
        lambda,
        cells,
        perturbed,
    })
}
