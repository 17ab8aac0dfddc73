//! Scaling-limit experiments: Gaussian limits at large (moving average) and
//! small (harmonizable) scales, operator-stable local and large-scale limits for
//! tempered operator-stable noise, and the kurtosis scaling law.

use crate::error::{Error, Result};
use crate::kernels::{self, FourierKernelParams, TimeKernelParams};
use crate::levy::{ComplexLevyView, LevyKind, LevyMeasure, RVec, TemperedOpStable, Tempering};
use crate::matfun::{self, RMat};
use crate::mcstats::{self, Ensemble};
use crate::quad::{self, Endpoint, QuadSpec};
use crate::simulate::{self, MaSimulator, PathModel, RhSimulator, SimOptions};
use crate::special;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Tolerance for the unit second-moment hypotheses of the Gaussian limits.
pub const NORMALIZATION_TOL: f64 = 1e-8;

/// Which rescaling to apply.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Rescale {
    /// c^{-H} X(ct), moving average, c large.
    MaLarge { c: f64 },
    /// eps^{-H} X(eps t), harmonizable, eps small.
    RhSmall { eps: f64 },
    /// eps^{-H1} X(eps t) with H1 = H + B - I/2, moving average.
    MaLocal { eps: f64 },
    /// c^{-H2} X(ct) with H2 = H + I/2 - B, harmonizable.
    RhLarge { c: f64 },
}

impl Rescale {
    pub fn factor(&self) -> f64 {
        match *self {
            Rescale::MaLarge { c } | Rescale::RhLarge { c } => c,
            Rescale::RhSmall { eps } | Rescale::MaLocal { eps } => eps,
        }
    }
}

/// Process whose rescalings are studied.
#[derive(Clone, Debug)]
pub enum LimitModel {
    Ma { params: TimeKernelParams, mu: LevyMeasure },
    Rh { params: FourierKernelParams, mu: ComplexLevyView },
}

impl LimitModel {
    pub fn dim(&self) -> usize {
        match self {
            LimitModel::Ma { params, .. } => params.dim(),
            LimitModel::Rh { params, .. } => params.dim(),
        }
    }
    pub fn hurst(&self) -> &RMat {
        match self {
            LimitModel::Ma { params, .. } => params.hurst().h(),
            LimitModel::Rh { params, .. } => params.hurst().h(),
        }
    }
}

/// H + B - I/2.
pub fn local_exponent(h: &RMat, b: &RMat) -> RMat {
    h + b - RMat::identity(h.nrows(), h.ncols()) * 0.5
}

/// H + I/2 - B.
pub fn large_scale_exponent(h: &RMat, b: &RMat) -> RMat {
    h - b + RMat::identity(h.nrows(), h.ncols()) * 0.5
}

fn tempered(mu: &LevyMeasure) -> Result<&TemperedOpStable> {
    match mu.kind() {
        LevyKind::TemperedOpStable(t) => Ok(t),
        _ => Err(Error::HypothesisViolated("the operator-stable limits need a tempered operator-stable measure".into())),
    }
}

fn commutes(a: &RMat, b: &RMat) -> bool {
    (a * b - b * a).amax() <= 1e-12 * (a.amax() * b.amax()).max(1e-300)
}

fn re_eigs(m: &RMat) -> Result<Vec<f64>> {
    let mut v: Vec<f64> = matfun::Spectral::from_real(m)?.eigenvalues().iter().map(|z| z.re).collect();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// B of the ℂ^p measure when its ℝ^{2p} exponent is B ⊕ B.
fn complex_block_exponent(t: &TemperedOpStable, p: usize) -> Result<RMat> {
    let bt = t.b();
    let b = bt.view((0, 0), (p, p)).into_owned();
    let mut expect = RMat::zeros(2 * p, 2 * p);
    expect.view_mut((0, 0), (p, p)).copy_from(&b);
    expect.view_mut((p, p), (p, p)).copy_from(&b);
    if (bt - expect).amax() > 1e-12 * b.amax() {
        return Err(Error::HypothesisViolated("the exponent of the ℝ^{2p} measure must be B ⊕ B".into()));
    }
    Ok(b)
}

/// Checks the hypotheses of the chosen limit and returns the matrix exponent
/// used to rescale values.
pub fn limit_exponent(kind: &Rescale, model: &LimitModel) -> Result<RMat> {
    match (kind, model) {
        (Rescale::MaLarge { .. }, LimitModel::Ma { params, mu }) => {
            let p = params.dim();
            if (mu.second_moment()? - RMat::identity(p, p)).amax() > NORMALIZATION_TOL {
                return Err(Error::HypothesisViolated("the large-scale Gaussian limit needs ∫zz^T μ(dz) = I".into()));
            }
            Ok(params.hurst().h().clone())
        }
        (Rescale::RhSmall { .. }, LimitModel::Rh { params, mu }) => {
            if mu.normalization_residual()? > NORMALIZATION_TOL {
                return Err(Error::HypothesisViolated(
                    "the small-scale Gaussian limit needs 4∫Re z Re z^T = I = 4∫Im z Im z^T".into(),
                ));
            }
            Ok(params.hurst().h().clone())
        }
        (Rescale::MaLocal { .. }, LimitModel::Ma { params, mu }) => {
            let b = tempered(mu)?.b();
            let h = params.hurst().h();
            if !commutes(h, b) {
                return Err(Error::HypothesisViolated("H and B must commute".into()));
            }
            let top = params.hurst().d_max_re() + re_eigs(b)?.last().copied().unwrap_or(0.0);
            if top >= 1.0 {
                return Err(Error::HypothesisViolated(format!(
                    "Re λ_p(H - I/2) + Re λ_p(B) = {top} must be below 1"
                )));
            }
            Ok(local_exponent(h, b))
        }
        (Rescale::RhLarge { .. }, LimitModel::Rh { params, mu }) => {
            let p = params.dim();
            let b = complex_block_exponent(tempered(mu.base())?, p)?;
            let h = params.hurst().h();
            let a = params.a();
            let bc = matfun::to_complex(&b);
            let comm_a = (a * &bc - &bc * a).iter().map(|z| z.norm()).fold(0.0, f64::max);
            if !commutes(h, &b) || comm_a > 1e-12 * (a.iter().map(|z| z.norm()).fold(0.0, f64::max) * b.amax()).max(1e-300) {
                return Err(Error::HypothesisViolated("H and A must commute with B".into()));
            }
            let (he, be) = (re_eigs(h)?, re_eigs(&b)?);
            let low = he[0] + 0.5 - be[p - 1];
            let high = he[p - 1] + 0.5 - be[0];
            if !(low > 0.0 && high < 1.0) {
                return Err(Error::HypothesisViolated(format!(
                    "need Re λ_1(H) + 1/2 - Re λ_p(B) = {low} > 0 and Re λ_p(H) + 1/2 - Re λ_1(B) = {high} < 1"
                )));
            }
            Ok(large_scale_exponent(h, &b))
        }
        _ => Err(Error::InvalidInput("rescaling kind does not match the model variant".into())),
    }
}

/// Ensemble of rescaled paths on the reference grid: the model is simulated on
/// the scaled grid (its window follows the grid) and values are multiplied by
/// factor^{-exponent}. For the operator-stable limits the radial jump
/// truncation is given in rescaled units.
pub fn rescaled_ensemble(
    kind: &Rescale,
    model: &LimitModel,
    grid: &[f64],
    n: usize,
    seed: u64,
    opts: &SimOptions,
    digest: &str,
) -> Result<Ensemble> {
    let f = kind.factor();
    if !(f > 0.0 && f.is_finite()) {
        return Err(Error::InvalidInput(format!("scale factor must be positive, got {f}")));
    }
    let exponent = limit_exponent(kind, model)?;
    let scale = matfun::matrix_power(&(-&exponent), f)?;
    let scaled_grid: Vec<f64> = grid.iter().map(|t| t * f).collect();
    let mut opts = opts.clone();
    match kind {
        Rescale::MaLocal { eps } => opts.jump_truncation *= eps,
        Rescale::RhLarge { c } => opts.jump_truncation /= c,
        _ => {}
    }
    if let Some((lo, hi)) = opts.window {
        opts.window = Some(match kind {
            Rescale::RhSmall { .. } | Rescale::RhLarge { .. } => (lo / f, hi / f),
            _ => (lo * f, hi * f),
        });
    }
    let sim: Box<dyn PathModel> = match model {
        LimitModel::Ma { params, mu } => Box::new(MaSimulator::new(params.clone(), mu, &scaled_grid, &opts)?),
        LimitModel::Rh { params, mu } => Box::new(RhSimulator::new(params.clone(), mu, &scaled_grid, &opts)?),
    };
    let ens = simulate::simulate_ensemble(sim.as_ref(), n, seed, digest)?;
    let rescaled = ens.map_values(|_, x| (&scale * RVec::from_column_slice(x)).iter().copied().collect());
    Ok(rescaled.relabeled(|t| t / f))
}

/// Distances of an ensemble from a Gaussian target.
#[derive(Clone, Debug, Serialize)]
pub struct GaussianDistance {
    /// max |estimate - target| / SE over all covariance entries.
    pub max_cov_z: f64,
    pub max_chf_distance: f64,
    pub chf_radius: f64,
    /// (excess kurtosis, SE) per time and coordinate.
    pub kurtosis: Vec<(f64, f64)>,
}

/// Compares an ensemble with the centered Gaussian law whose joint covariance
/// over `times` is `target` ((p n) x (p n), blocks ordered like `times`).
pub fn gaussian_limit_distance(ens: &Ensemble, target: &RMat, times: &[f64], us: &[Vec<RVec>]) -> Result<GaussianDistance> {
    let p = ens.dim();
    let n = times.len();
    if target.nrows() != p * n || target.ncols() != p * n {
        return Err(Error::InvalidInput("target covariance does not match times and dimension".into()));
    }
    let mut max_z = 0.0_f64;
    for (i, &s) in times.iter().enumerate() {
        for (j, &t) in times.iter().enumerate() {
            let (est, se) = mcstats::sample_cov(ens, s, t)?;
            for a in 0..p {
                for b in 0..p {
                    let diff = (est[(a, b)] - target[(i * p + a, j * p + b)]).abs();
                    let z = if se[(a, b)] > 0.0 { diff / se[(a, b)] } else if diff == 0.0 { 0.0 } else { f64::INFINITY };
                    max_z = max_z.max(z);
                }
            }
        }
    }
    let chf = mcstats::empirical_chf(ens, times, us)?;
    let mut max_chf = 0.0_f64;
    for (u, (v, _)) in us.iter().zip(&chf) {
        let stacked = RVec::from_iterator(p * n, u.iter().flat_map(|x| x.iter().copied()));
        let q = stacked.dot(&(target * &stacked));
        max_chf = max_chf.max((v - C64::new((-0.5 * q).exp(), 0.0)).norm());
    }
    let mut kurt = Vec::new();
    for &t in times {
        for a in 0..p {
            kurt.push(mcstats::excess_kurtosis(ens, t, a)?);
        }
    }
    Ok(GaussianDistance { max_cov_z: max_z, max_chf_distance: max_chf, chf_radius: mcstats::chf_radius(ens.replications()), kurtosis: kurt })
}

/// ∫ z^4 μ(dz) for a measure on ℝ.
pub fn fourth_moment(mu: &LevyMeasure) -> Result<f64> {
    if mu.dim() != 1 {
        return Err(Error::InvalidInput("fourth moment is implemented for p = 1".into()));
    }
    Ok(match mu.kind() {
        LevyKind::Discrete(atoms) => atoms.iter().map(|a| a.w * a.z[0].powi(4)).sum(),
        LevyKind::GaussianJumps { sigma, rate } => 3.0 * rate * sigma[(0, 0)].powi(2),
        LevyKind::TemperedOpStable(t) => {
            let b = t.b()[(0, 0)];
            let e = 4.0 * b - 1.0;
            let radial = match t.tempering() {
                Tempering::Indicator { r0 } => r0.powf(e) / e,
                Tempering::Exponential { c } => special::gamma(C64::new(e, 0.0)).re / c.powf(e),
            };
            t.sphere_atoms().iter().map(|a| a.w * a.z[0].powi(4)).sum::<f64>() * radial
        }
        LevyKind::Mixture(parts) => parts.iter().map(fourth_moment).sum::<Result<f64>>()?,
    })
}

/// One line of the kurtosis table.
#[derive(Clone, Debug, Serialize)]
pub struct KurtosisRow {
    pub c: f64,
    pub predicted: f64,
    pub estimated: f64,
    pub se: f64,
}

/// Excess kurtosis of X(t) from cumulants: (∫g_t⁴ ∫z⁴μ) / (∫g_t² ∫z²μ)².
pub fn predicted_kurtosis(params: &TimeKernelParams, mu: &LevyMeasure, t: f64, spec: &QuadSpec) -> Result<f64> {
    if params.dim() != 1 {
        return Err(Error::InvalidInput("kurtosis scaling is implemented for p = 1".into()));
    }
    if params.hurst().d_min_re() <= -0.25 {
        return Err(Error::FourthMomentDiverged);
    }
    let g4 = kernels::time_kernel_power_norm(t, params, 4, None, None, spec)?;
    let g2 = kernels::time_kernel_power_norm(t, params, 2, None, None, spec)?;
    let m2 = mu.second_moment()?[(0, 0)];
    let m4 = fourth_moment(mu)?;
    if !(m4.is_finite() && g4.is_finite()) {
        return Err(Error::FourthMomentDiverged);
    }
    Ok(g4 * m4 / (g2 * m2).powi(2))
}

/// Predicted and simulated excess kurtosis of c^{-h} X(ct) for each c.
pub fn kurtosis_scaling(
    params: &TimeKernelParams,
    mu: &LevyMeasure,
    t: f64,
    cs: &[f64],
    n: usize,
    seed: u64,
    opts: &SimOptions,
) -> Result<Vec<KurtosisRow>> {
    let base = predicted_kurtosis(params, mu, t, &opts.quad)?;
    let model = LimitModel::Ma { params: params.clone(), mu: mu.clone() };
    cs.iter()
        .map(|&c| {
            let ens = rescaled_ensemble(&Rescale::MaLarge { c }, &model, &[t], n, seed, opts, "kurtosis")?;
            let (k, se) = mcstats::excess_kurtosis(&ens, t, 0)?;
            Ok(KurtosisRow { c, predicted: base / c, estimated: k, se })
        })
        .collect()
}

/// ∫_0^∞ (e^{i w x} - 1 - i w x) x^{-alpha-1} dx = Γ(-alpha) |w|^alpha e^{-i sign(w) π alpha / 2}.
fn stable_integral(w: f64, alpha: f64) -> C64 {
    if w == 0.0 {
        return C64::new(0.0, 0.0);
    }
    let g = special::gamma(C64::new(-alpha, 0.0)).re;
    C64::from_polar(g * w.abs().powf(alpha), -w.signum() * PI * alpha / 2.0)
}

/// ∫_0^∞ (e^{iφ(ξ)} - 1 - iφ(ξ)) ξ^{-2} dξ with φ(ξ) = Σ_k c_k ξ^{b_k}.
fn radial_integral(c: &[f64], b: &[f64], spec: &QuadSpec) -> Result<C64> {
    let active: Vec<(f64, f64)> = c.iter().zip(b).filter(|(ck, _)| **ck != 0.0).map(|(x, y)| (*x, *y)).collect();
    if active.is_empty() {
        return Ok(C64::new(0.0, 0.0));
    }
    if active.iter().all(|(_, bk)| (bk - active[0].1).abs() < 1e-14) {
        // Σ c_k ξ^b = w ξ^b; substitute x = ξ^b.
        let bb = active[0].1;
        let w: f64 = active.iter().map(|(ck, _)| ck).sum();
        return Ok(stable_integral(w, 1.0 / bb) / bb);
    }
    let phi = |x: f64| active.iter().map(|(ck, bk)| ck * x.powf(*bk)).sum::<f64>();
    let dphi = |x: f64| active.iter().map(|(ck, bk)| ck * bk * x.powf(bk - 1.0)).sum::<f64>();
    let b_min = active.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
    let b_max = active.iter().map(|x| x.1).fold(0.0, f64::max);
    let c_max = active.iter().map(|x| x.0.abs()).fold(0.0, f64::max);
    // Radius where the phase becomes O(1), then a long oscillatory stretch.
    let x1 = c_max.powf(-1.0 / b_max).min(c_max.powf(-1.0 / b_min)).max(1e-300);
    let x_end = x1 * 1e4;
    let body = |x: f64, out: &mut [f64]| {
        let v = phi(x);
        let (s, co) = v.sin_cos();
        let re = if v.abs() < 1e-3 { -v * v / 2.0 + v.powi(4) / 24.0 } else { co - 1.0 };
        let im = if v.abs() < 1e-3 { -v.powi(3) / 6.0 } else { s - v };
        out[0] = re / (x * x);
        out[1] = im / (x * x);
    };
    let wide = QuadSpec { max_intervals: spec.max_intervals.max(20000), ..*spec };
    let head = quad::integrate_interval(body, 0.0, x1, Endpoint::Singular(2.0 * b_min - 2.0), Endpoint::Regular, 2, &wide)?;
    let mid = quad::integrate_interval(body, x1, x_end, Endpoint::Regular, Endpoint::Regular, 2, &wide)?;
    // Beyond x_end: -1 and -iφ integrate in closed form; e^{iφ} x^{-2} by one integration by parts.
    let mut tail = C64::new(-1.0 / x_end, 0.0);
    for (ck, bk) in &active {
        tail -= C64::new(0.0, ck * x_end.powf(bk - 1.0) / (1.0 - bk));
    }
    let d = dphi(x_end);
    if d != 0.0 {
        tail -= C64::from_polar(1.0, phi(x_end)) / C64::new(0.0, d * x_end * x_end);
    }
    Ok(C64::new(head.value[0] + mid.value[0], head.value[1] + mid.value[1]) + tail)
}

/// Characteristic function of the operator-stable limit of the local rescaling:
/// exp ∫ dv Σ_θ λ_θ ∫_0^∞ (e^{i<a(v), ξ^B θ>} - 1 - i<a(v), ξ^B θ>) ξ^{-2} dξ
/// with a(v) = Σ_j g_{t_j}(v)^T u_j. B must be diagonal.
pub fn opstable_limit_chf(
    us: &[RVec],
    times: &[f64],
    params: &TimeKernelParams,
    tos: &TemperedOpStable,
    spec: &QuadSpec,
) -> Result<C64> {
    let p = params.dim();
    let b = tos.b();
    if b.nrows() != p || us.len() != times.len() {
        return Err(Error::InvalidInput("dimension mismatch between u-vectors, times and B".into()));
    }
    let off = (0..p).flat_map(|i| (0..p).filter(move |&j| j != i).map(move |j| (i, j))).any(|(i, j)| b[(i, j)] != 0.0);
    if off {
        return Err(Error::NonCommutingUnsupported);
    }
    if !commutes(params.hurst().h(), b) {
        return Err(Error::HypothesisViolated("H and B must commute".into()));
    }
    if us.iter().all(|u| u.iter().all(|x| *x == 0.0)) {
        return Ok(C64::new(1.0, 0.0));
    }
    let bd: Vec<f64> = b.diagonal().iter().copied().collect();
    let alpha_min = 1.0 / bd.iter().fold(0.0_f64, |a, v| a.max(*v));
    let alpha_max = 1.0 / bd.iter().fold(f64::INFINITY, |a, v| a.min(*v));
    let atoms = tos.sphere_atoms();
    let mut err = None;
    let f = |v0: f64, dv: f64, out: &mut [f64]| {
        let mut a = RVec::zeros(p);
        for (&t, u) in times.iter().zip(us) {
            a += kernels::time_kernel_anchored(t, v0, dv, params).transpose() * u;
        }
        let mut acc = C64::new(0.0, 0.0);
        for atom in atoms {
            let c: Vec<f64> = (0..p).map(|k| a[k] * atom.z[k]).collect();
            match radial_integral(&c, &bd, spec) {
                Ok(v) => acc += v * atom.w,
                Err(e) => {
                    if err.is_none() {
                        err = Some(e);
                    }
                }
            }
        }
        out[0] = acc.re;
        out[1] = acc.im;
    };
    let d_min = params.hurst().d_min_re().min(0.0);
    let local = (d_min * alpha_max).max(-0.99);
    let mut sing: Vec<(f64, f64)> = std::iter::once(0.0).chain(times.iter().copied()).map(|x| (x, local)).collect();
    sing.sort_by(|x, y| x.0.total_cmp(&y.0));
    sing.dedup_by(|x, y| x.0 == y.0);
    let beta = (1.0 - params.hurst().d_max_re()) * alpha_min;
    let v = kernels::integrate_line(f, 2, &sing, None, None, beta, params.vanishing_tails(), spec)?;
    Ok(C64::new(v[0], v[1]).exp())
}
