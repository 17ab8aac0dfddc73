//! Deterministic covariances: isometry quadratures for both representations,
//! the closed-form time-reversible ofBm covariance, Parseval and scaling
//! residuals, and the properness determinant.

use crate::error::{Error, Result};
use crate::kernels::{self, FourierKernelParams, TimeKernelParams};
use crate::levy::{ComplexLevyView, LevyMeasure};
use crate::matfun::{self, HurstSpec, RMat};
use crate::quad::{self, Endpoint, QuadSpec};
use crate::special;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Ratio between the Fourier-domain and time-domain isometry integrals of a
/// Fourier pair: ∫ g_s g_t^* du = (1/2π) ∫ ĝ_s ĝ_t^* dx.
pub const PARSEVAL_CONSTANT: f64 = 2.0 * PI;

/// A covariance model: kernel plus the jump moments it is integrated against.
#[derive(Clone, Debug)]
pub enum CovModel {
    /// Moving average with ∫ z z^T mu(dz) = sigma.
    Ma { params: TimeKernelParams, sigma: RMat },
    /// Harmonizable with sigma_re = ∫ Re z Re z^T mu, sigma_im = ∫ Im z Im z^T mu.
    Rh { params: FourierKernelParams, sigma_re: RMat, sigma_im: RMat },
}

impl CovModel {
    pub fn ma(params: TimeKernelParams, mu: &LevyMeasure) -> Result<Self> {
        if mu.dim() != params.dim() {
            return Err(Error::InvalidInput("measure and kernel dimensions differ".into()));
        }
        Ok(CovModel::Ma { sigma: mu.second_moment()?, params })
    }

    pub fn rh(params: FourierKernelParams, mu: &ComplexLevyView) -> Result<Self> {
        if mu.p() != params.dim() {
            return Err(Error::InvalidInput("measure and kernel dimensions differ".into()));
        }
        let (sigma_re, sigma_im, _) = mu.moment_blocks()?;
        Ok(CovModel::Rh { params, sigma_re, sigma_im })
    }

    pub fn dim(&self) -> usize {
        match self {
            CovModel::Ma { params, .. } => params.dim(),
            CovModel::Rh { params, .. } => params.dim(),
        }
    }

    pub fn hurst(&self) -> &HurstSpec {
        match self {
            CovModel::Ma { params, .. } => params.hurst(),
            CovModel::Rh { params, .. } => params.hurst(),
        }
    }

    /// E X(s) X(t)^T.
    pub fn cov(&self, s: f64, t: f64, spec: &QuadSpec) -> Result<RMat> {
        match self {
            CovModel::Ma { params, sigma } => kernels::time_bilinear(s, t, params, sigma, spec),
            CovModel::Rh { params, sigma_re, sigma_im } => {
                // Cross moments drop out: Re g̃ is even in x and Im g̃ is odd.
                kernels::fourier_bilinear(s, t, params, sigma_re, sigma_im, spec)
            }
        }
    }

    /// Joint covariance of (X(t_1), ..., X(t_n)) as a pn x pn matrix, block (i, j) = E X(t_i) X(t_j)^T.
    pub fn gram(&self, times: &[f64], spec: &QuadSpec) -> Result<RMat> {
        let p = self.dim();
        let n = times.len();
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
        let blocks: Vec<RMat> = pairs.par_iter().map(|&(i, j)| self.cov(times[i], times[j], spec)).collect::<Result<_>>()?;
        let mut g = RMat::zeros(p * n, p * n);
        for (&(i, j), b) in pairs.iter().zip(&blocks) {
            g.view_mut((i * p, j * p), (p, p)).copy_from(b);
            if i != j {
                g.view_mut((j * p, i * p), (p, p)).copy_from(&b.transpose());
            }
        }
        Ok(g)
    }

    /// max_h ‖Var(X(t + h) - X(h)) - Var(X(t))‖_max over the shifts.
    pub fn increment_residual(&self, t: f64, shifts: &[f64], spec: &QuadSpec) -> Result<f64> {
        let base = self.cov(t, t, spec)?;
        let mut worst = 0.0_f64;
        for &h in shifts {
            let a = self.cov(t + h, t + h, spec)?;
            let b = self.cov(t + h, h, spec)?;
            let c = self.cov(h, h, spec)?;
            let inc = &a - &b - b.transpose() + c;
            worst = worst.max((inc - &base).amax());
        }
        Ok(worst)
    }
}

/// Moving-average covariance ∫ g_s(u) (∫ z z^T mu) g_t(u)^T du.
pub fn cov_ma(s: f64, t: f64, params: &TimeKernelParams, mu: &LevyMeasure, spec: &QuadSpec) -> Result<RMat> {
    CovModel::ma(params.clone(), mu)?.cov(s, t, spec)
}

/// Harmonizable covariance 4∫ Re g̃_s Σ_re Re g̃_t^T + Im g̃_s Σ_im Im g̃_t^T dx.
pub fn cov_rh(s: f64, t: f64, params: &FourierKernelParams, mu: &ComplexLevyView, spec: &QuadSpec) -> Result<RMat> {
    CovModel::rh(params.clone(), mu)?.cov(s, t, spec)
}

/// |r|^H Σ |r|^{H^T}, zero at r = 0.
fn scaled_sigma(h: &HurstSpec, r: f64, sigma: &RMat) -> RMat {
    if r == 0.0 {
        return RMat::zeros(sigma.nrows(), sigma.ncols());
    }
    let m = h.pow_h(r.abs());
    &m * sigma * m.transpose()
}

/// Covariance of a time-reversible ofBm: ½{|s|^H Σ |s|^{H^T} + |t|^H Σ |t|^{H^T} - |t-s|^H Σ |t-s|^{H^T}}.
pub fn cov_ofbm_reversible(s: f64, t: f64, h: &HurstSpec, sigma: &RMat) -> RMat {
    (scaled_sigma(h, s, sigma) + scaled_sigma(h, t, sigma) - scaled_sigma(h, t - s, sigma)) * 0.5
}

/// Q = (∫ z z^T mu)^{1/2} and the Hurst matrix Q H Q^{-1} of the ofBm sharing the covariance.
pub fn cov_matches_ofbm(mu: &LevyMeasure, h: &RMat) -> Result<(RMat, RMat)> {
    let m = mu.second_moment()?;
    if m.nrows() != h.nrows() {
        return Err(Error::InvalidInput("measure and Hurst matrix dimensions differ".into()));
    }
    let q = matfun::spd_power(&m, 0.5)?;
    let q_inv = matfun::spd_power(&m, -0.5).map_err(|e| match e {
        Error::NotPsd(_) => e,
        _ => Error::RankDeficientMoment,
    })?;
    let h2 = &q * h * q_inv;
    Ok((q, h2))
}

/// ‖c^{-H} cov(cs, ct) c^{-H^T} - cov(s, t)‖_max.
pub fn oss_residual(model: &CovModel, s: f64, t: f64, c: f64, spec: &QuadSpec) -> Result<f64> {
    let a = model.cov(c * s, c * t, spec)?;
    let ch = model.hurst().pow_h(c);
    let b = &ch * model.cov(s, t, spec)? * ch.transpose();
    Ok((a - b).amax())
}

/// ‖cov_ma(s, t) - cov_rh(s, t) / 2π‖_max for a moving-average kernel with M- = 0
/// and its Fourier transform A = Γ(D + I) e^{-iπD/2} M+, both at unit normalization:
/// ∫ z z^T mu = I in time, 4∫ Re z Re z^T = I = 4∫ Im z Im z^T in frequency.
pub fn parseval_residual(
    s: f64,
    t: f64,
    time: &TimeKernelParams,
    fourier: &FourierKernelParams,
    spec: &QuadSpec,
) -> Result<f64> {
    let linked = FourierKernelParams::linked_from_time(time)?;
    let scale = linked.a().iter().map(|z| z.norm()).fold(1e-300, f64::max);
    let gap = (linked.a() - fourier.a()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if gap > 1e-12 * scale || (time.hurst().h() - fourier.hurst().h()).amax() > 1e-14 {
        return Err(Error::UnlinkedParams(format!("A differs from Γ(D+I)e^(-iπD/2)M+ by {gap:.3e}")));
    }
    let p = time.dim();
    let id = RMat::identity(p, p);
    let quarter = &id * 0.25;
    let ma = kernels::time_bilinear(s, t, time, &id, spec)?;
    let rh = kernels::fourier_bilinear(s, t, fourier, &quarter, &quarter, spec)?;
    Ok((ma - rh / PARSEVAL_CONSTANT).amax())
}

/// β(δ) = ∫_R 2(1 - cos y) |y|^{-2-δ} dy for δ in (-1, 1).
///
/// Adaptive quadrature on (0, Y], the non-oscillatory tail in closed form and
/// the cosine tail on a rotated contour.
pub fn properness_beta(delta: f64) -> Result<f64> {
    if !(delta > -1.0 && delta < 1.0) {
        return Err(Error::InvalidInput(format!("delta must lie in (-1, 1), got {delta}")));
    }
    let a = 2.0 + delta;
    let y0 = 40.0 * PI;
    let spec = QuadSpec { abs_tol: 1e-14, rel_tol: 1e-13, max_intervals: 20000 };
    // 2(1 - cos y) = 4 sin^2(y/2) avoids cancellation near 0.
    let head = quad::integrate_scalar(
        |y| {
            let s = (0.5 * y).sin();
            4.0 * s * s * y.powf(-a)
        },
        0.0,
        y0,
        Endpoint::Singular(-delta),
        Endpoint::Regular,
        &spec,
    )?;
    let plain = 2.0 * y0.powf(1.0 - a) / (a - 1.0);
    // ∫_{y0}^∞ cos(y) y^{-a} dy = Re[i e^{i y0} ∫_0^∞ e^{-u} (y0 + iu)^{-a} du].
    let (nodes, weights) = quad::gauss_laguerre(48);
    let mut acc = C64::new(0.0, 0.0);
    for (u, w) in nodes.iter().zip(&weights) {
        acc += C64::new(y0, *u).powf(-a) * *w;
    }
    let osc = (C64::new(0.0, 1.0) * C64::from_polar(1.0, y0) * acc).re;
    // Both halves of the line.
    Ok(2.0 * (head + plain - 2.0 * osc))
}

/// Closed form of β: -4 Γ(-1-δ) cos(π(1+δ)/2), 2π at δ = 0.
pub fn properness_beta_closed(delta: f64) -> f64 {
    if delta == 0.0 {
        return 2.0 * PI;
    }
    let g = special::gamma(C64::new(-1.0 - delta, 0.0)).re;
    -4.0 * g * (PI * (1.0 + delta) / 2.0).cos()
}

/// |t|^{2+2(d1+d2)} (β(2d1) β(2d2) - β(d1+d2)^2).
pub fn properness_det(d1: f64, d2: f64, t: f64) -> Result<f64> {
    for d in [d1, d2] {
        if !(d > -0.5 && d < 0.5) {
            return Err(Error::InvalidInput(format!("d must lie in (-1/2, 1/2), got {d}")));
        }
    }
    if t == 0.0 {
        return Err(Error::InvalidInput("t must be nonzero".into()));
    }
    if d1 == d2 {
        return Ok(0.0);
    }
    let b = properness_beta(d1 + d2)?;
    let f = properness_beta(2.0 * d1)? * properness_beta(2.0 * d2)? - b * b;
    Ok(t.abs().powf(2.0 + 2.0 * (d1 + d2)) * f)
}
