//! Moving-average kernel g_t(s), harmonizable kernel g̃_t(x), the FFT check of
//! their Fourier-pair identity, and L² Gram integrals of both.

use crate::error::{Error, Result};
use crate::matfun::{self, Analytic, CMat, HurstSpec, RMat, Regime};
use crate::quad::{self, Endpoint, QuadSpec};
use crate::special;
use num_complex::Complex64 as C64;
use rustfft::FftPlanner;
use serde::Serialize;
use std::f64::consts::PI;

/// Matrix constants of the time-domain kernel.
#[derive(Clone, Debug)]
pub enum TimeVariant {
    General { m_plus: RMat, m_minus: RMat },
    Half { m: RMat, n: RMat },
}

#[derive(Clone, Debug)]
pub struct TimeKernelParams {
    hurst: HurstSpec,
    variant: TimeVariant,
}

fn check_dims(p: usize, mats: &[&RMat]) -> Result<()> {
    for m in mats {
        if m.nrows() != p || m.ncols() != p {
            return Err(Error::InvalidInput(format!("expected {p}x{p} matrix, got {}x{}", m.nrows(), m.ncols())));
        }
    }
    Ok(())
}

impl TimeKernelParams {
    pub fn general(hurst: HurstSpec, m_plus: RMat, m_minus: RMat) -> Result<Self> {
        check_dims(hurst.dim(), &[&m_plus, &m_minus])?;
        if !hurst.regime().supports_general_kernel() {
            return Err(Error::ValidationError(format!(
                "moving-average kernel with (M+, M-) needs Re eig(H) in (0,1) away from 1/2, regime is {:?}",
                hurst.regime()
            )));
        }
        Ok(TimeKernelParams { hurst, variant: TimeVariant::General { m_plus, m_minus } })
    }

    /// M+ = M- = M.
    pub fn well_balanced(hurst: HurstSpec, m: RMat) -> Result<Self> {
        Self::general(hurst, m.clone(), m)
    }

    pub fn half(hurst: HurstSpec, m: RMat, n: RMat) -> Result<Self> {
        check_dims(hurst.dim(), &[&m, &n])?;
        if hurst.regime() != Regime::HalfIdentity {
            return Err(Error::ValidationError("the (M, N) kernel needs H = I/2".into()));
        }
        Ok(TimeKernelParams { hurst, variant: TimeVariant::Half { m, n } })
    }

    pub fn hurst(&self) -> &HurstSpec {
        &self.hurst
    }
    pub fn variant(&self) -> &TimeVariant {
        &self.variant
    }
    pub fn dim(&self) -> usize {
        self.hurst.dim()
    }

    /// (M+, M-) for the general branch.
    pub fn m_pair(&self) -> Option<(&RMat, &RMat)> {
        match &self.variant {
            TimeVariant::General { m_plus, m_minus } => Some((m_plus, m_minus)),
            TimeVariant::Half { .. } => None,
        }
    }

    /// g_t(s).
    pub fn eval(&self, t: f64, s: f64) -> RMat {
        time_kernel(t, s, self)
    }

    /// Exponent alpha with ‖g_t(u)‖ ~ |u - a|^alpha at a singular point a.
    pub(crate) fn local_exponent(&self) -> f64 {
        match &self.variant {
            TimeVariant::General { .. } => {
                let base = self.hurst.d_min_re().min(0.0);
                if self.hurst.has_log_terms() {
                    base - 0.05
                } else {
                    base
                }
            }
            TimeVariant::Half { .. } => -0.02,
        }
    }

    /// Exponent gamma with ‖g_t(u)‖ ~ |u|^{-gamma} as |u| grows.
    pub(crate) fn tail_decay(&self) -> f64 {
        match &self.variant {
            TimeVariant::General { .. } => {
                let g = 1.0 - self.hurst.d_max_re();
                if self.hurst.has_log_terms() {
                    g - 0.02
                } else {
                    g
                }
            }
            TimeVariant::Half { .. } => 0.98,
        }
    }

    /// (left tail vanishes, right tail vanishes)
    pub(crate) fn vanishing_tails(&self) -> (bool, bool) {
        match &self.variant {
            TimeVariant::General { m_plus, m_minus } => (m_plus.iter().all(|v| *v == 0.0), m_minus.iter().all(|v| *v == 0.0)),
            TimeVariant::Half { n, .. } => {
                let z = n.iter().all(|v| *v == 0.0);
                (z, z)
            }
        }
    }
}

/// a_+^D - b_+^D with 0^D = 0, given the exact difference a - b.
fn plus_difference(h: &HurstSpec, a: f64, b: f64, diff: f64) -> Option<RMat> {
    match (a > 0.0, b > 0.0) {
        (true, true) => Some(h.pow_d_difference_with(a, b, diff)),
        (true, false) => Some(h.pow_d(a)),
        (false, true) => Some(-h.pow_d(b)),
        (false, false) => None,
    }
}

/// Moving-average kernel g_t(s).
pub fn time_kernel(t: f64, s: f64, params: &TimeKernelParams) -> RMat {
    kernel_from_offsets(params, t, t - s, -s)
}

/// g_t(s0 + ds) with the differences t - s and -s formed from the offset, so
/// they stay exact when s0 is 0 or t.
pub(crate) fn time_kernel_anchored(t: f64, s0: f64, ds: f64, params: &TimeKernelParams) -> RMat {
    kernel_from_offsets(params, t, (t - s0) - ds, -s0 - ds)
}

fn kernel_from_offsets(params: &TimeKernelParams, t: f64, t_minus_s: f64, minus_s: f64) -> RMat {
    let p = params.dim();
    let mut out = RMat::zeros(p, p);
    match &params.variant {
        TimeVariant::General { m_plus, m_minus } => {
            if let Some(d) = plus_difference(&params.hurst, t_minus_s, minus_s, t) {
                out += d * m_plus;
            }
            if let Some(d) = plus_difference(&params.hurst, -t_minus_s, -minus_s, -t) {
                out += d * m_minus;
            }
        }
        TimeVariant::Half { m, n } => {
            if minus_s == 0.0 || t_minus_s == 0.0 {
                return out;
            }
            let sgn = |v: f64| if v > 0.0 { 1.0 } else { -1.0 };
            let jump = sgn(t_minus_s) - sgn(minus_s);
            if jump != 0.0 {
                out += m * jump;
            }
            out += n * (t_minus_s.abs() / minus_s.abs()).ln();
        }
    }
    out
}

/// Harmonizable kernel parameters: complex A and the Hurst matrix.
#[derive(Clone, Debug)]
pub struct FourierKernelParams {
    hurst: HurstSpec,
    a: CMat,
}

impl FourierKernelParams {
    pub fn new(hurst: HurstSpec, a: CMat) -> Result<Self> {
        let p = hurst.dim();
        if a.nrows() != p || a.ncols() != p {
            return Err(Error::InvalidInput(format!("A must be {p}x{p}")));
        }
        Ok(FourierKernelParams { hurst, a })
    }

    /// A = Gamma(D + I) e^{-i pi D / 2} M+, the parameter whose harmonizable kernel is
    /// the Fourier transform of the moving-average kernel with M- = 0.
    pub fn linked_from_time(time: &TimeKernelParams) -> Result<Self> {
        let (m_plus, m_minus) = time
            .m_pair()
            .ok_or_else(|| Error::UnlinkedParams("conversion is defined for the (M+, M-) kernel only".into()))?;
        if m_minus.iter().any(|v| *v != 0.0) {
            return Err(Error::UnlinkedParams("conversion is implemented for M- = 0 only".into()));
        }
        let g = matfun::gamma_d_plus_identity(&time.hurst)?;
        let phase = matfun::phase_of(&time.hurst, 1.0);
        let a = g * phase * matfun::to_complex(m_plus);
        FourierKernelParams::new(time.hurst.clone(), a)
    }

    pub fn hurst(&self) -> &HurstSpec {
        &self.hurst
    }
    pub fn a(&self) -> &CMat {
        &self.a
    }
    pub fn dim(&self) -> usize {
        self.hurst.dim()
    }
    pub fn eval(&self, t: f64, x: f64) -> CMat {
        fourier_kernel(t, x, self)
    }
}

/// g̃_t(x) = ((e^{itx} - 1)/(ix)) (x_+^{-D} A + x_-^{-D} conj(A)); zero at x = 0.
pub fn fourier_kernel(t: f64, x: f64, params: &FourierKernelParams) -> CMat {
    let p = params.dim();
    if x == 0.0 || t == 0.0 {
        return CMat::zeros(p, p);
    }
    let phi = special::phase_ratio(t, x);
    let pw = matfun::to_complex(&params.hurst.pow_d(1.0 / x.abs()));
    if x > 0.0 {
        pw * &params.a * phi
    } else {
        pw * params.a.map(|z| z.conj()) * phi
    }
}

/// max_s ‖g_{ct}(cs) - c^D g_t(s)‖_F over the sample points.
pub fn kernel_scaling_residual(c: f64, t: f64, sample_points: &[f64], params: &TimeKernelParams) -> Result<f64> {
    if !(c > 0.0) {
        return Err(Error::NonPositiveBase(c));
    }
    let cd = params.hurst.pow_d(c);
    Ok(sample_points
        .iter()
        .map(|&s| (time_kernel(c * t, c * s, params) - &cd * time_kernel(t, s, params)).norm())
        .fold(0.0, f64::max))
}

/// max_x ‖g̃_{ct}(x) - c^{D+I} g̃_t(cx)‖_F over the sample points.
pub fn fourier_scaling_residual(c: f64, t: f64, sample_points: &[f64], params: &FourierKernelParams) -> Result<f64> {
    if !(c > 0.0) {
        return Err(Error::NonPositiveBase(c));
    }
    let cd = matfun::to_complex(&(params.hurst.pow_d(c) * c));
    Ok(sample_points
        .iter()
        .map(|&x| (fourier_kernel(c * t, x, params) - &cd * fourier_kernel(t, c * x, params)).norm())
        .fold(0.0, f64::max))
}

fn flatten_into(m: &RMat, out: &mut [f64]) {
    out.copy_from_slice(m.as_slice());
}

fn unflatten(p: usize, v: &[f64]) -> RMat {
    RMat::from_column_slice(p, p, v)
}

/// Integral over (lo, hi) (None = infinite) of a function with algebraic
/// singularities at `singular` points and power-law decay |u|^{-beta}.
#[allow(clippy::too_many_arguments)]
pub(crate) fn integrate_line<F: FnMut(f64, f64, &mut [f64])>(
    mut f: F,
    dim: usize,
    singular: &[(f64, f64)],
    lo: Option<f64>,
    hi: Option<f64>,
    beta: f64,
    skip: (bool, bool),
    spec: &QuadSpec,
) -> Result<Vec<f64>> {
    let inside = |u: f64| lo.is_none_or(|l| u > l) && hi.is_none_or(|h| u < h);
    let mut pts: Vec<(f64, Endpoint)> = Vec::new();
    for &(u, alpha) in singular {
        if inside(u) {
            pts.push((u, Endpoint::Singular(alpha)));
        }
    }
    for bound in [lo, hi].into_iter().flatten() {
        let e = singular.iter().find(|(u, _)| *u == bound).map(|&(_, a)| Endpoint::Singular(a)).unwrap_or(Endpoint::Regular);
        pts.push((bound, e));
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    pts.dedup_by(|a, b| a.0 == b.0);
    if pts.is_empty() {
        return Err(Error::InvalidInput("empty integration range".into()));
    }
    let spread = pts.last().unwrap().0 - pts[0].0;
    let pieces = pts.len() + 1;
    let part = spec.split(pieces);
    let mut total = vec![0.0; dim];
    let mut add = |v: &[f64]| total.iter_mut().zip(v).for_each(|(t, x)| *t += x);
    for w in pts.windows(2) {
        let r = quad::integrate_interval_anchored(&mut f, w[0].0, w[1].0, w[0].1, w[1].1, dim, &part)?;
        add(&r.value);
    }
    let (first, last) = (pts[0], *pts.last().unwrap());
    if lo.is_none() && !skip.0 {
        let scale = spread.max(first.0.abs()).max(1e-9);
        let r = quad::integrate_tail_anchored(&mut f, first.0, -1.0, beta, first.1, scale, dim, &part)?;
        add(&r.value);
    }
    if hi.is_none() && !skip.1 {
        let scale = spread.max(last.0.abs()).max(1e-9);
        let r = quad::integrate_tail_anchored(&mut f, last.0, 1.0, beta, last.1, scale, dim, &part)?;
        add(&r.value);
    }
    Ok(total)
}

fn time_singularities(params: &TimeKernelParams, times: &[f64]) -> Vec<(f64, f64)> {
    let alpha = params.local_exponent();
    let mut pts: Vec<f64> = vec![0.0];
    pts.extend_from_slice(times);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts.into_iter()
        .map(|a| {
            // Each kernel g_t is singular at 0 and t.
            let count = times.iter().filter(|&&t| t != 0.0 && (a == 0.0 || a == t)).count().max(1);
            let exponent = if alpha < 0.0 { alpha * count as f64 } else { alpha };
            (a, exponent.max(-0.99))
        })
        .collect()
}

/// ∫ g_s(u) Σ g_t(u)^T du over (lo, hi) (None = unbounded).
pub fn time_bilinear_range(
    s: f64,
    t: f64,
    params: &TimeKernelParams,
    sigma: &RMat,
    lo: Option<f64>,
    hi: Option<f64>,
    spec: &QuadSpec,
) -> Result<RMat> {
    let p = params.dim();
    if s == 0.0 || t == 0.0 {
        return Ok(RMat::zeros(p, p));
    }
    let sing = time_singularities(params, &[s, t]);
    let beta = 2.0 * params.tail_decay();
    let v = integrate_line(
        |u0, du, out: &mut [f64]| {
            let m = time_kernel_anchored(s, u0, du, params) * sigma * time_kernel_anchored(t, u0, du, params).transpose();
            flatten_into(&m, out);
        },
        p * p,
        &sing,
        lo,
        hi,
        beta,
        params.vanishing_tails(),
        spec,
    )?;
    Ok(unflatten(p, &v))
}

/// ∫_R g_s(u) Σ g_t(u)^T du.
pub fn time_bilinear(s: f64, t: f64, params: &TimeKernelParams, sigma: &RMat, spec: &QuadSpec) -> Result<RMat> {
    time_bilinear_range(s, t, params, sigma, None, None, spec)
}

/// ∫_lo^hi g_t(u) du (compensator integral).
pub fn time_kernel_integral(t: f64, params: &TimeKernelParams, lo: f64, hi: f64, spec: &QuadSpec) -> Result<RMat> {
    let p = params.dim();
    if t == 0.0 {
        return Ok(RMat::zeros(p, p));
    }
    let sing = time_singularities(params, &[t]);
    let v = integrate_line(
        |u0, du, out: &mut [f64]| flatten_into(&time_kernel_anchored(t, u0, du, params), out),
        p * p,
        &sing,
        Some(lo),
        Some(hi),
        params.tail_decay(),
        (false, false),
        spec,
    )?;
    Ok(unflatten(p, &v))
}

/// ∫ ‖g_t(u)‖_F^k du over (lo, hi), used for tail budgets and cumulants.
pub fn time_kernel_power_norm(
    t: f64,
    params: &TimeKernelParams,
    k: i32,
    lo: Option<f64>,
    hi: Option<f64>,
    spec: &QuadSpec,
) -> Result<f64> {
    if t == 0.0 {
        return Ok(0.0);
    }
    let alpha = params.local_exponent() * k as f64 / 2.0;
    let sing: Vec<(f64, f64)> = time_singularities(params, &[t]).into_iter().map(|(a, _)| (a, alpha.max(-0.99))).collect();
    let v = integrate_line(
        |u0, du, out: &mut [f64]| out[0] = time_kernel_anchored(t, u0, du, params).norm().powi(k),
        1,
        &sing,
        lo,
        hi,
        params.tail_decay() * k as f64,
        params.vanishing_tails(),
        spec,
    )?;
    Ok(v[0])
}

/// Split point between the directly integrated part of a Fourier integral and its
/// contour-rotated tail.
fn fourier_split(freqs: &[f64]) -> f64 {
    let wmin = freqs.iter().map(|w| w.abs()).filter(|w| *w > 0.0).fold(f64::INFINITY, f64::min);
    if wmin.is_finite() {
        (4.0 * PI / wmin).min(1e5)
    } else {
        1.0
    }
}

fn conj(m: &CMat) -> CMat {
    m.map(|z| z.conj())
}

/// ∫_R 4[Re g̃_s Σ_re Re g̃_t^T + Im g̃_s Σ_im Im g̃_t^T] dx over |x| > lo (lo = 0 for the whole line).
pub fn fourier_bilinear_outside(
    s: f64,
    t: f64,
    params: &FourierKernelParams,
    sigma_re: &RMat,
    sigma_im: &RMat,
    lo: f64,
    spec: &QuadSpec,
) -> Result<RMat> {
    let p = params.dim();
    if s == 0.0 || t == 0.0 {
        return Ok(RMat::zeros(p, p));
    }
    let hurst = &params.hurst;
    let a = &params.a;
    let k1 = matfun::to_complex(&(sigma_re - sigma_im));
    let k2 = matfun::to_complex(&(sigma_re + sigma_im));
    let l1 = a * &k1 * a.transpose();
    let l2 = a * &k2 * conj(a).transpose();
    // Integrand on x > 0: 4 Re[G_s K1 G_t^T + G_s K2 conj(G_t)^T] with G_t = phi_t x^{-D} A.
    let body = |x: f64, out: &mut [f64]| {
        let pw = matfun::to_complex(&hurst.pow_d(1.0 / x));
        let (ps, pt) = (special::phase_ratio(s, x), special::phase_ratio(t, x));
        let m = (&pw * (&l1 * (ps * pt) + &l2 * (ps * pt.conj())) * pw.transpose()).map(|z| 4.0 * z.re);
        flatten_into(&m, out);
    };
    let freqs = [s + t, s, t, s - t, -t];
    let x0 = fourier_split(&freqs).max(lo);
    let mut total = RMat::zeros(p, p);
    let parts = spec.split(8);
    if x0 > lo {
        let d_max = hurst.d_max_re();
        let alpha = if lo > 0.0 { None } else { Some((-2.0 * d_max).max(-0.99) - if hurst.has_log_terms() { 0.05 } else { 0.0 }) };
        let ea = alpha.map(Endpoint::Singular).unwrap_or(Endpoint::Regular);
        let r = quad::integrate_interval(body, lo, x0, ea, Endpoint::Regular, p * p, &parts)?;
        total += unflatten(p, &r.value);
    }
    // Tail: 4 Re sum_w ∫_{x0}^inf e^{iwx} x^{-2} x^{-D} K_w x^{-D^T} dx, from
    // x^2 phi_s phi_t = -(e^{is}-1)(e^{it}-1) and x^2 phi_s conj(phi_t) = (e^{is}-1)(e^{-it}-1).
    let mut terms: Vec<(f64, CMat)> = Vec::new();
    let mut push = |w: f64, k: CMat| {
        if let Some(e) = terms.iter_mut().find(|(v, _)| *v == w) {
            e.1 += k;
        } else {
            terms.push((w, k));
        }
    };
    push(s + t, -&l1);
    push(s, &l1 - &l2);
    push(t, l1.clone());
    push(0.0, &l2 - &l1);
    push(s - t, l2.clone());
    push(-t, -&l2);
    let (nodes, weights) = quad::gauss_laguerre(48);
    for (w, k) in &terms {
        if k.iter().all(|z| z.norm() == 0.0) {
            continue;
        }
        if *w == 0.0 {
            let beta = 2.0 + 2.0 * hurst.d_min_re();
            let r = quad::integrate_tail(
                |x, out: &mut [f64]| {
                    let pw = matfun::to_complex(&hurst.pow_d(1.0 / x));
                    let m = (&pw * k * pw.transpose()).map(|z| 4.0 * z.re / (x * x));
                    flatten_into(&m, out);
                },
                x0,
                1.0,
                beta,
                Endpoint::Regular,
                x0,
                p * p,
                &parts,
            )?;
            total += unflatten(p, &r.value);
            continue;
        }
        let mut acc = CMat::zeros(p, p);
        for (y, wt) in nodes.iter().zip(&weights) {
            let z = C64::new(x0, y / w);
            let pw = hurst.pow_d_complex(C64::new(1.0, 0.0) / z);
            acc += (&pw * k * pw.transpose()) * (*wt / (z * z));
        }
        let factor = C64::new(0.0, 1.0 / w) * C64::from_polar(1.0, w * x0);
        total += (acc * factor).map(|z| 4.0 * z.re);
    }
    Ok(total)
}

/// Fourier isometry integral over the whole line.
pub fn fourier_bilinear(
    s: f64,
    t: f64,
    params: &FourierKernelParams,
    sigma_re: &RMat,
    sigma_im: &RMat,
    spec: &QuadSpec,
) -> Result<RMat> {
    fourier_bilinear_outside(s, t, params, sigma_re, sigma_im, 0.0, spec)
}

/// ∫_{-lo}^{lo} g̃_t(x) dx, real because g̃_t is Hermitian: 2 Re ∫_0^lo g̃_t.
pub fn fourier_kernel_integral(t: f64, params: &FourierKernelParams, lo: f64, spec: &QuadSpec) -> Result<CMat> {
    let p = params.dim();
    if t == 0.0 {
        return Ok(CMat::zeros(p, p));
    }
    let d_max = params.hurst.d_max_re();
    let alpha = (-d_max).max(-0.99) - if params.hurst.has_log_terms() { 0.05 } else { 0.0 };
    // Split at several periods so the oscillation stays resolved.
    let r = quad::integrate_interval(
        |x, out: &mut [f64]| {
            let g = fourier_kernel(t, x, params);
            for (o, z) in out.iter_mut().zip(g.iter()) {
                *o = 2.0 * z.re;
            }
        },
        0.0,
        lo,
        Endpoint::Singular(alpha),
        Endpoint::Regular,
        p * p,
        &QuadSpec { max_intervals: spec.max_intervals.max(20000), ..*spec },
    )?;
    Ok(matfun::to_complex(&unflatten(p, &r.value)))
}

/// Integration domain of an L² Gram matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Domain {
    Time,
    Fourier,
}

/// Either kernel family, for [`kernel_l2_gram`].
#[derive(Clone, Copy, Debug)]
pub enum KernelRef<'a> {
    Time(&'a TimeKernelParams),
    Fourier(&'a FourierKernelParams),
}

/// ∫ g_{t1} g_{t2}^* over the chosen domain. The Fourier-domain Gram is real
/// because g̃ is Hermitian; it is returned with zero imaginary part.
pub fn kernel_l2_gram(t1: f64, t2: f64, kernel: KernelRef<'_>, spec: &QuadSpec) -> Result<CMat> {
    match kernel {
        KernelRef::Time(p) => {
            let id = RMat::identity(p.dim(), p.dim());
            Ok(matfun::to_complex(&time_bilinear(t1, t2, p, &id, spec)?))
        }
        KernelRef::Fourier(p) => {
            let q = RMat::identity(p.dim(), p.dim()) * 0.25;
            Ok(matfun::to_complex(&fourier_bilinear(t1, t2, p, &q, &q, spec)?))
        }
    }
}

/// Uniform sampling grid for [`verify_fourier_pair`].
#[derive(Clone, Copy, Debug)]
pub struct FftGrid {
    /// The grid covers [-half_width, half_width].
    pub half_width: f64,
    pub log2_nodes: u32,
    /// Checked frequencies: band.0 <= |x| <= band.1 (capped one decade below Nyquist).
    pub band: (f64, f64),
}

impl Default for FftGrid {
    fn default() -> Self {
        FftGrid { half_width: 2048.0, log2_nodes: 20, band: (0.01, 10.0) }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FourierPairReport {
    pub residual: f64,
    pub worst_frequency: f64,
    pub frequencies_checked: usize,
}

const NAVOT_TERMS: usize = 8;

/// Compares the discrete Fourier transform of the sampled kernel with the closed
/// form ((e^{itx}-1)/(ix)) |x|^{-D} Gamma(D+I) [e^{∓ i pi D/2} M+ - e^{± i pi D/2} M-]
/// (upper signs for x > 0). The minus in front of the M- term follows from the
/// reflection s -> -s, which maps the M- kernel at t to the M+ kernel at -t.
/// Errors are relative to the closed form with the oscillating factor replaced by
/// its envelope min(|t|, 2/|x|), since the factor itself vanishes at x = 2 pi k / t.
///
/// The sampled sum is corrected for the algebraic singularities at s = 0 and
/// s = t (generalized Euler-Maclaurin terms with zeta coefficients), for the
/// grid ends, and for the tails beyond ±S (integrated along rotated contours).
pub fn verify_fourier_pair(t: f64, params: &TimeKernelParams, grid: &FftGrid, bound: f64) -> Result<FourierPairReport> {
    let (m_plus, m_minus) = params
        .m_pair()
        .ok_or_else(|| Error::InvalidInput("Fourier pair check needs the general (M+, M-) kernel".into()))?;
    let hurst = params.hurst();
    let p = params.dim();
    let n = 1usize << grid.log2_nodes;
    let big_s = grid.half_width;
    let h = 2.0 * big_s / n as f64;
    let t_index = t / h;
    if (t_index - t_index.round()).abs() > 1e-9 || t.abs() >= big_s / 2.0 || t == 0.0 {
        return Err(Error::InvalidInput("t must be a nonzero grid node well inside the window".into()));
    }
    let node = |j: usize| -big_s + h * j as f64;

    // Sampled sum via inverse FFT (positive exponent): sum_j g(s_j) e^{i s_j x_k}.
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_inverse(n);
    let mut spectra: Vec<Vec<C64>> = vec![vec![C64::new(0.0, 0.0); n]; p * p];
    for j in 0..n {
        let g = time_kernel(t, node(j), params);
        for (e, v) in g.iter().enumerate() {
            spectra[e][j] = C64::new(*v, 0.0);
        }
    }
    for buf in spectra.iter_mut() {
        fft.process(buf);
    }

    let nyquist = PI / h;
    let hi = grid.band.1.min(nyquist / 10.0);
    let lo = grid.band.0;
    let dx = 2.0 * PI / (n as f64 * h);

    // Singular one-sided terms: (point, side, coefficient).
    let mp = matfun::to_complex(m_plus);
    let mm = matfun::to_complex(m_minus);
    let singular_terms: Vec<(f64, f64, CMat)> =
        vec![(t, -1.0, mp.clone()), (0.0, -1.0, -&mp), (t, 1.0, mm.clone()), (0.0, 1.0, -&mm)];
    let lnh = h.ln();
    let eigs = hurst.spectral_d().eigenvalues();
    let zeta_mats: Vec<CMat> = (0..NAVOT_TERMS)
        .map(|k| {
            let pole = -1.0 - k as f64;
            let cap = eigs.iter().map(|z| (z - C64::from(pole)).norm()).fold(f64::INFINITY, f64::min);
            hurst.fun_d(
                &|z| special::zeta(-z - k as f64) * (z * lnh).exp(),
                Analytic { scale: lnh.abs(), radius_cap: cap },
            )
        })
        .collect();

    let gamma = matfun::gamma_d_plus_identity(hurst)?;
    let e_minus = matfun::phase_of(hurst, 1.0);
    let e_plus = matfun::phase_of(hurst, -1.0);
    let (lag_x, lag_w) = quad::gauss_laguerre(48);

    // Grid-end data for the trapezoid end corrections.
    let g_left = matfun::to_complex(&time_kernel(t, -big_s, params));
    let g_right = matfun::to_complex(&time_kernel(t, big_s, params));
    let deriv = |s: f64| matfun::to_complex(&((time_kernel(t, s + h, params) - time_kernel(t, s - h, params)) / (2.0 * h)));
    let (dg_left, dg_right) = (deriv(-big_s), deriv(big_s));

    // Kernel continued to complex s in the tail regions.
    let tail_left = |s: C64| -> CMat {
        (hurst.pow_d_complex(C64::from(t) - s) - hurst.pow_d_complex(-s)) * &mp
    };
    let tail_right = |s: C64| -> CMat {
        (hurst.pow_d_complex(s - t) - hurst.pow_d_complex(s)) * &mm
    };

    let mut worst = 0.0_f64;
    let mut worst_x = 0.0;
    let mut checked = 0;
    let kmax = (hi / dx).floor() as i64;
    let kmin = (lo / dx).ceil().max(1.0) as i64;
    for kk in kmin..=kmax {
        for sign in [1i64, -1] {
            let k = sign * kk;
            let x = k as f64 * dx;
            let idx = k.rem_euclid(n as i64) as usize;
            let shift = C64::from_polar(h, -big_s * x);
            let mut num = CMat::from_fn(p, p, |r, c| spectra[r + c * p][idx] * shift);
            // Trapezoid ends: half weight at -S, add the missing +S node, then the h^2 term.
            let el = C64::from_polar(1.0, -big_s * x);
            let er = C64::from_polar(1.0, big_s * x);
            num -= &g_left * (el * 0.5 * h);
            num += &g_right * (er * 0.5 * h);
            let ix = C64::new(0.0, x);
            let fpr = (&dg_right + &g_right * ix) * er;
            let fpl = (&dg_left + &g_left * ix) * el;
            num -= (fpr - fpl) * C64::from(h * h / 12.0);
            // Singular corrections.
            for (a, side, coef) in &singular_terms {
                if coef.iter().all(|z| z.norm() == 0.0) {
                    continue;
                }
                let mut corr = CMat::zeros(p, p);
                let mut factor = C64::from(h);
                for (k, z) in zeta_mats.iter().enumerate() {
                    corr += z * factor;
                    factor *= C64::new(0.0, side * x) * h / (k as f64 + 1.0);
                }
                num -= corr * coef * C64::from_polar(1.0, a * x);
            }
            // Tails along rotated contours.
            let mut left = CMat::zeros(p, p);
            let mut right = CMat::zeros(p, p);
            for (y, w) in lag_x.iter().zip(&lag_w) {
                left += tail_left(C64::new(-big_s, y / x)) * C64::from(*w);
                right += tail_right(C64::new(big_s, y / x)) * C64::from(*w);
            }
            num += left * (C64::new(0.0, -1.0 / x) * el);
            num += right * (C64::new(0.0, 1.0 / x) * er);

            let phase = if x > 0.0 { &e_minus * &mp - &e_plus * &mm } else { &e_plus * &mp - &e_minus * &mm };
            let shape = matfun::to_complex(&hurst.pow_d(1.0 / x.abs())) * &gamma * phase;
            let closed = &shape * special::phase_ratio(t, x);
            // The factor (e^{itx}-1)/(ix) has zeros; normalize by its envelope.
            let envelope = t.abs().min(2.0 / x.abs());
            let rel = (&num - &closed).norm() / (shape.norm() * envelope);
            checked += 1;
            if rel > worst {
                worst = rel;
                worst_x = x;
            }
        }
    }
    if worst > bound {
        return Err(Error::GridTooCoarse { residual: worst, bound, frequency: worst_x });
    }
    Ok(FourierPairReport { residual: worst, worst_frequency: worst_x, frequencies_checked: checked })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_fbm(d: f64) -> TimeKernelParams {
        TimeKernelParams::general(HurstSpec::scalar(d + 0.5).unwrap(), RMat::identity(1, 1), RMat::zeros(1, 1)).unwrap()
    }

    #[test]
    fn scalar_example() {
        let k = scalar_fbm(0.3);
        let v = time_kernel(1.0, -1.0, &k)[(0, 0)];
        assert!((v - (2f64.powf(0.3) - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn zero_time_kernel_vanishes() {
        let k = scalar_fbm(0.3);
        for s in [-3.0, -0.1, 0.0, 0.2, 5.0] {
            assert_eq!(time_kernel(0.0, s, &k)[(0, 0)], 0.0);
        }
    }

    #[test]
    fn well_balanced_form() {
        let h = HurstSpec::diagonal(&[0.3, 0.8]).unwrap();
        let m = RMat::from_row_slice(2, 2, &[1.0, 0.5, -0.2, 2.0]);
        let k = TimeKernelParams::well_balanced(h.clone(), m.clone()).unwrap();
        for &(t, s) in &[(1.0, -0.5), (1.0, 0.5), (1.0, 3.0), (-2.0, 0.7)] {
            let expect = (h.pow_d(((t - s) as f64).abs()) - h.pow_d(f64::abs(s))) * &m;
            assert!((time_kernel(t, s, &k) - expect).norm() < 1e-14);
        }
    }

    #[test]
    fn half_branch_values() {
        let h = HurstSpec::scalar(0.5).unwrap();
        let k = TimeKernelParams::half(h, RMat::identity(1, 1), RMat::identity(1, 1) * 2.0).unwrap();
        assert_eq!(time_kernel(1.0, 0.0, &k)[(0, 0)], 0.0);
        assert_eq!(time_kernel(1.0, 1.0, &k)[(0, 0)], 0.0);
        let v = time_kernel(1.0, 0.5, &k)[(0, 0)];
        assert!((v - 2.0).abs() < 1e-15);
        let v = time_kernel(1.0, -1.0, &k)[(0, 0)];
        assert!((v - 2.0 * 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn regime_gate() {
        let h = HurstSpec::scalar(0.5).unwrap();
        assert!(TimeKernelParams::general(h, RMat::identity(1, 1), RMat::zeros(1, 1)).is_err());
        let h = HurstSpec::diagonal(&[0.5, 0.7]).unwrap();
        assert!(TimeKernelParams::general(h, RMat::identity(2, 2), RMat::zeros(2, 2)).is_err());
    }

    #[test]
    fn fourier_examples() {
        let h = HurstSpec::diagonal(&[0.3, 0.8]).unwrap();
        let a = CMat::from_row_slice(
            2,
            2,
            &[C64::new(1.0, 0.3), C64::new(-0.2, 0.5), C64::new(0.0, 1.0), C64::new(0.7, -0.1)],
        );
        let f = FourierKernelParams::new(h, a).unwrap();
        assert_eq!(fourier_kernel(0.0, 1.3, &f).norm(), 0.0);
        let d = fourier_kernel(1.0, -1.7, &f) - conj(&fourier_kernel(1.0, 1.7, &f));
        assert!(d.norm() < 1e-14);
        assert!(fourier_scaling_residual(3.0, 1.0, &[0.4], &f).unwrap() < 1e-13);
    }

    #[test]
    fn scaling_residuals() {
        let k = scalar_fbm(0.3);
        let pts: Vec<f64> = (0..100).map(|i| -5.0 + 0.1 * i as f64 + 0.013).collect();
        assert_eq!(kernel_scaling_residual(1.0, 1.0, &pts, &k).unwrap(), 0.0);
        assert!(kernel_scaling_residual(10.0, 1.0, &pts, &k).unwrap() < 1e-12);
        let h = HurstSpec::diagonal(&[0.3, 0.65]).unwrap();
        let k = TimeKernelParams::general(h, RMat::identity(2, 2), RMat::identity(2, 2) * 0.5).unwrap();
        assert!(kernel_scaling_residual(0.5, 1.0, &pts, &k).unwrap() < 1e-12);
    }

    #[test]
    fn increment_additivity() {
        let h = HurstSpec::new(RMat::from_row_slice(2, 2, &[0.7, 0.1, -0.05, 0.3])).unwrap();
        let k = TimeKernelParams::general(h, RMat::identity(2, 2), RMat::from_row_slice(2, 2, &[0.2, 0.0, 0.1, 0.4]))
            .unwrap();
        let (t, hh) = (1.3, 0.6);
        for s in [-2.0, -0.3, 0.2, 0.9, 1.5, 4.0] {
            let lhs = time_kernel(t + hh, s, &k) - time_kernel(hh, s, &k);
            let rhs = time_kernel(t, s - hh, &k);
            assert!((lhs - rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn gram_basics() {
        let h = HurstSpec::scalar(0.8).unwrap();
        let k = TimeKernelParams::well_balanced(h, RMat::identity(1, 1)).unwrap();
        let spec = QuadSpec::default();
        assert_eq!(kernel_l2_gram(0.0, 1.0, KernelRef::Time(&k), &spec).unwrap().norm(), 0.0);
        assert!(kernel_l2_gram(1.0, 1.0, KernelRef::Time(&k), &spec).unwrap()[(0, 0)].re > 0.0);
    }

    #[test]
    fn gram_closed_form_scalar() {
        // For M+ = 1, M- = 0: ∫ g_1^2 = Gamma(d+1)^2 / (Gamma(2d+2) sin(pi (d + 1/2))) ... via the
        // Fourier side: (1/2pi) ∫ |phi|^2 |x|^{-2d} Gamma(d+1)^2 dx.
        for d in [-0.3, 0.2, 0.4] {
            let k = scalar_fbm(d);
            let spec = QuadSpec::default();
            let g = kernel_l2_gram(1.0, 1.0, KernelRef::Time(&k), &spec).unwrap()[(0, 0)].re;
            // (1/2pi) Gamma(d+1)^2 ∫ 2(1 - cos x) |x|^{-2-2d} dx; the last integral has the closed
            // form 2 Gamma(-1-2d) cos(pi(1+2d)/2) * (-2).
            let hh = d + 0.5;
            let gam = special::gamma(C64::from(d + 1.0)).re;
            let beta = -4.0 * special::gamma(C64::from(-2.0 * hh)).re * (PI * hh).cos();
            let expect = gam * gam * beta / (2.0 * PI);
            assert!((g - expect).abs() < 1e-9 * expect, "d={d} {g} {expect}");
        }
    }

    #[test]
    fn time_fourier_gram_parseval() {
        let k = scalar_fbm(0.3);
        let f = FourierKernelParams::linked_from_time(&k).unwrap();
        let spec = QuadSpec::default();
        let gt = kernel_l2_gram(1.0, 2.0, KernelRef::Time(&k), &spec).unwrap()[(0, 0)].re;
        let gf = kernel_l2_gram(1.0, 2.0, KernelRef::Fourier(&f), &spec).unwrap()[(0, 0)].re;
        assert!((gt - gf / (2.0 * PI)).abs() < 1e-7, "{gt} {}", gf / (2.0 * PI));
    }

    #[test]
    fn fourier_pair_scalar() {
        let k = scalar_fbm(0.3);
        let r = verify_fourier_pair(1.0, &k, &FftGrid::default(), 1e-3).unwrap();
        assert!(r.residual < 1e-3);
        assert!(r.frequencies_checked > 1000);
    }

    #[test]
    fn fourier_pair_two_sided_matrix() {
        let h = HurstSpec::new(RMat::from_row_slice(2, 2, &[0.7, 0.1, -0.05, 0.3])).unwrap();
        let k = TimeKernelParams::general(h, RMat::identity(2, 2), RMat::from_row_slice(2, 2, &[0.4, 0.1, 0.0, -0.3]))
            .unwrap();
        let r = verify_fourier_pair(1.0, &k, &FftGrid::default(), 1e-2).unwrap();
        assert!(r.residual < 1e-2);
    }

    #[test]
    fn fourier_pair_rejects_off_grid_time() {
        let k = scalar_fbm(0.3);
        assert!(verify_fourier_pair(0.3, &k, &FftGrid::default(), 1e-3).is_err());
    }

    #[test]
    fn fourier_pair_reports_coarse_grid() {
        let k = scalar_fbm(-0.3);
        let grid = FftGrid { half_width: 64.0, log2_nodes: 8, band: (0.1, 10.0) };
        // A deliberately tiny bound must trip the diagnostic.
        match verify_fourier_pair(1.0, &k, &grid, 1e-16) {
            Err(Error::GridTooCoarse { residual, .. }) => assert!(residual > 1e-16),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn linked_grams_agree_matrix() {
        let h = HurstSpec::new(RMat::from_row_slice(2, 2, &[0.7, 0.1, -0.05, 0.3])).unwrap();
        let m = RMat::from_row_slice(2, 2, &[1.0, 0.3, -0.4, 0.8]);
        let k = TimeKernelParams::general(h, m, RMat::zeros(2, 2)).unwrap();
        let f = FourierKernelParams::linked_from_time(&k).unwrap();
        let spec = QuadSpec::default();
        let gt = kernel_l2_gram(1.0, 2.5, KernelRef::Time(&k), &spec).unwrap();
        let gf = kernel_l2_gram(1.0, 2.5, KernelRef::Fourier(&f), &spec).unwrap() / C64::from(2.0 * PI);
        assert!((&gt - &gf).norm() < 1e-8 * gt.norm(), "{gt} {gf}");
    }

    #[test]
    fn unlinked_conversion_rejected() {
        let h = HurstSpec::scalar(0.8).unwrap();
        let k = TimeKernelParams::well_balanced(h, RMat::identity(1, 1)).unwrap();
        assert!(matches!(FourierKernelParams::linked_from_time(&k), Err(Error::UnlinkedParams(_))));
    }
}
