//! Sample paths of the moving-average and harmonizable processes from a
//! finite-window Poisson field, plus Gaussian draws for operator fBm.
//!
//! The integration variable is truncated to a window. What lies outside the
//! window (and, for infinite-activity measures, the jumps below the radial
//! truncation) is either dropped or replaced by an independent Gaussian vector
//! with the exact covariance of the discarded part, computed by quadrature.

use crate::error::{Error, Result};
use crate::kernels::{self, FourierKernelParams, TimeKernelParams, TimeVariant};
use crate::levy::{ComplexLevyView, JumpSampler, LevyMeasure, RVec};
use crate::matfun::{self, RMat};
use crate::mcstats::{Ensemble, SamplePath};
use crate::quad::QuadSpec;
use crate::special;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Treatment of the kernel mass outside the window.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FarField {
    /// Independent Gaussian with the covariance of the outside integral.
    #[default]
    Gaussian,
    /// Discard it; the window must then satisfy the tail budget.
    Drop,
}

/// Simulation settings shared by both variants.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimOptions {
    /// Window margin in units of the grid span (moving average) or of 1/min|t| (harmonizable).
    pub window_factor: Option<f64>,
    /// Explicit window; overrides `window_factor`.
    pub window: Option<(f64, f64)>,
    pub far_field: FarField,
    /// Largest admissible fraction of ∫‖g_t‖² outside the window when the far field is dropped.
    pub tail_budget: f64,
    /// Radial truncation for infinite-activity measures.
    pub jump_truncation: f64,
    /// Replace the truncated small jumps by a Gaussian with their covariance.
    pub small_jump_gaussian: bool,
    pub quad: QuadSpec,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            window_factor: None,
            window: None,
            far_field: FarField::Gaussian,
            tail_budget: 1e-4,
            jump_truncation: 1e-3,
            small_jump_gaussian: true,
            quad: QuadSpec::default(),
        }
    }
}

pub const MA_WINDOW_FACTOR: f64 = 20.0;
pub const RH_WINDOW_FACTOR: f64 = 50.0;

/// Truncation of the integration variable.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Window {
    pub lo: f64,
    pub hi: f64,
    /// max over grid times of ∫_outside ‖kernel‖_F² / ∫ ‖kernel‖_F².
    pub tail_fraction: f64,
}

impl Window {
    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Marked points of one window realization.
#[derive(Clone, Debug)]
pub struct PoissonField {
    pub window: Window,
    pub points: Vec<(f64, RVec)>,
    /// Expected number of points: length · activity.
    pub intensity_mass: f64,
}

/// Poisson number of points, uniform locations, i.i.d. marks from `sampler`.
pub fn sample_field_with<R: Rng + ?Sized>(sampler: &JumpSampler, window: &Window, rng: &mut R) -> PoissonField {
    let mass = window.length() * sampler.activity();
    let count = if mass > 0.0 { Poisson::new(mass).map(|d| d.sample(rng) as usize).unwrap_or(0) } else { 0 };
    let points = (0..count)
        .map(|_| {
            let w = window.lo + rng.random::<f64>() * window.length();
            (w, sampler.sample(rng))
        })
        .collect();
    PoissonField { window: window.clone(), points, intensity_mass: mass }
}

/// As [`sample_field_with`], building the sampler for `mu` truncated at `eps`.
pub fn sample_field<R: Rng + ?Sized>(mu: &LevyMeasure, eps: f64, window: &Window, rng: &mut R) -> Result<PoissonField> {
    if mu.has_infinite_activity() && !(eps > 0.0) {
        return Err(Error::TruncationRequired);
    }
    Ok(sample_field_with(&JumpSampler::new(mu, eps)?, window, rng))
}

/// Random stream of replication `rep` under `seed`.
pub fn replication_rng(seed: u64, rep: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    rng
}

/// Anything that can draw the values of one path on its grid.
pub trait PathModel: Sync {
    fn grid(&self) -> &Arc<[f64]>;
    fn dim(&self) -> usize;
    fn draw(&self, rng: &mut ChaCha20Rng) -> Vec<Vec<f64>>;
}

pub fn simulate_path(model: &dyn PathModel, seed: u64, rep: u64, digest: &str) -> SamplePath {
    let mut rng = replication_rng(seed, rep);
    SamplePath {
        grid: model.grid().clone(),
        values: model.draw(&mut rng),
        seed,
        replication: rep,
        config_digest: digest.to_string(),
    }
}

/// `n` replications, each on its own stream; the result does not depend on the
/// number of worker threads.
pub fn simulate_ensemble(model: &dyn PathModel, n: usize, seed: u64, digest: &str) -> Result<Ensemble> {
    let paths: Vec<SamplePath> = (0..n as u64).into_par_iter().map(|r| simulate_path(model, seed, r, digest)).collect();
    Ensemble::new(paths)
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() || grid.iter().any(|t| !t.is_finite()) || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput("grid must be finite and strictly increasing".into()));
    }
    Ok(())
}

/// Standard normal vector of length n.
fn normals<R: Rng + ?Sized>(n: usize, rng: &mut R) -> RVec {
    RVec::from_iterator(n, (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)))
}

/// Joint Gaussian over the grid, stacked as (t_0 block, t_1 block, ...).
#[derive(Clone, Debug)]
struct GaussianPart {
    factor: RMat,
}

impl GaussianPart {
    /// `block(i, j)` gives the p x p covariance of times i and j, for i <= j.
    fn build(n: usize, p: usize, block: impl Fn(usize, usize) -> Result<RMat> + Sync) -> Result<Option<Self>> {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
        let blocks: Vec<RMat> = pairs.par_iter().map(|&(i, j)| block(i, j)).collect::<Result<_>>()?;
        let mut full = RMat::zeros(n * p, n * p);
        for (&(i, j), b) in pairs.iter().zip(&blocks) {
            full.view_mut((i * p, j * p), (p, p)).copy_from(b);
            full.view_mut((j * p, i * p), (p, p)).copy_from(&b.transpose());
        }
        if full.amax() == 0.0 {
            return Ok(None);
        }
        Ok(Some(GaussianPart { factor: matfun::psd_factor(&full)? }))
    }

    fn add_draw<R: Rng + ?Sized>(&self, values: &mut [Vec<f64>], rng: &mut R) {
        let x = &self.factor * normals(self.factor.ncols(), rng);
        let p = values.first().map_or(0, |v| v.len());
        for (k, v) in values.iter_mut().enumerate() {
            for (a, slot) in v.iter_mut().enumerate() {
                *slot += x[k * p + a];
            }
        }
    }
}

/// x_+^d - y_+^d with x - y = diff given exactly.
#[inline]
fn plus_diff(x: f64, y: f64, diff: f64, d: f64) -> f64 {
    match (x > 0.0, y > 0.0) {
        (true, true) => {
            if diff.abs() < 0.5 * y {
                y.powf(d) * (d * (diff / y).ln_1p()).exp_m1()
            } else {
                x.powf(d) - y.powf(d)
            }
        }
        (true, false) => x.powf(d),
        (false, true) => -y.powf(d),
        (false, false) => 0.0,
    }
}

/// Moving-average path generator.
#[derive(Clone, Debug)]
pub struct MaSimulator {
    params: TimeKernelParams,
    grid: Arc<[f64]>,
    window: Window,
    sampler: JumpSampler,
    compensator: Vec<RVec>,
    gaussian: Option<GaussianPart>,
    diag_d: Option<Vec<f64>>,
}

impl MaSimulator {
    pub fn new(params: TimeKernelParams, mu: &LevyMeasure, grid: &[f64], opts: &SimOptions) -> Result<Self> {
        check_grid(grid)?;
        let p = params.dim();
        if mu.dim() != p {
            return Err(Error::InvalidInput(format!("measure has dimension {}, kernel {p}", mu.dim())));
        }
        let eps = if mu.has_infinite_activity() { opts.jump_truncation } else { 0.0 };
        if mu.has_infinite_activity() && !(eps > 0.0) {
            return Err(Error::TruncationRequired);
        }
        let spec = &opts.quad;
        let (a, b) = (grid[0].min(0.0), grid[grid.len() - 1].max(0.0));
        let (lo, hi) = match opts.window {
            Some((lo, hi)) => (lo, hi),
            None => {
                let span = (b - a).max(f64::MIN_POSITIVE);
                let m = opts.window_factor.unwrap_or(MA_WINDOW_FACTOR) * span;
                (a - m, b + m)
            }
        };
        if !(lo < hi) || lo > a || hi < b {
            return Err(Error::InvalidInput(format!("window [{lo}, {hi}] must cover 0 and the grid")));
        }
        let mut tail_fraction = 0.0_f64;
        for &t in grid.iter().filter(|t| **t != 0.0) {
            let total = kernels::time_kernel_power_norm(t, &params, 2, None, None, spec)?;
            let out = kernels::time_kernel_power_norm(t, &params, 2, None, Some(lo), spec)?
                + kernels::time_kernel_power_norm(t, &params, 2, Some(hi), None, spec)?;
            tail_fraction = tail_fraction.max(out / total);
        }
        if opts.far_field == FarField::Drop && tail_fraction > opts.tail_budget {
            return Err(Error::WindowTooSmall { fraction: tail_fraction, budget: opts.tail_budget });
        }
        let window = Window { lo, hi, tail_fraction };
        let sampler = JumpSampler::new(mu, eps)?;
        let kept_mean = mu.kept_mean_jump(eps)?;
        let compensator = grid
            .iter()
            .map(|&t| {
                if kept_mean.iter().all(|v| *v == 0.0) || t == 0.0 {
                    Ok(RVec::zeros(p))
                } else {
                    Ok(kernels::time_kernel_integral(t, &params, lo, hi, spec)? * &kept_mean)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let sigma_full = mu.second_moment()?;
        let sigma_small =
            if opts.small_jump_gaussian && eps > 0.0 { mu.truncated_second_moment(eps)? } else { RMat::zeros(p, p) };
        let far = opts.far_field == FarField::Gaussian;
        let small = sigma_small.amax() > 0.0;
        let gaussian = if far || small {
            GaussianPart::build(grid.len(), p, |i, j| {
                let (s, t) = (grid[i], grid[j]);
                let mut c = RMat::zeros(p, p);
                if far {
                    c += kernels::time_bilinear_range(s, t, &params, &sigma_full, None, Some(lo), spec)?;
                    c += kernels::time_bilinear_range(s, t, &params, &sigma_full, Some(hi), None, spec)?;
                }
                if small {
                    c += kernels::time_bilinear_range(s, t, &params, &sigma_small, Some(lo), Some(hi), spec)?;
                }
                Ok(c)
            })?
        } else {
            None
        };
        let diag_d = match params.variant() {
            TimeVariant::General { .. } => params.hurst().diagonal_d().map(|d| d.to_vec()),
            TimeVariant::Half { .. } => None,
        };
        Ok(MaSimulator { params, grid: grid.to_vec().into(), window, sampler, compensator, gaussian, diag_d })
    }

    pub fn window(&self) -> &Window {
        &self.window
    }
    pub fn sampler(&self) -> &JumpSampler {
        &self.sampler
    }
    pub fn has_gaussian_part(&self) -> bool {
        self.gaussian.is_some()
    }

    /// Σ_i g_t(s_i) z_i minus the compensator, for each grid time.
    pub fn evaluate_field(&self, field: &PoissonField) -> Vec<Vec<f64>> {
        let p = self.params.dim();
        let mut values: Vec<Vec<f64>> = self.compensator.iter().map(|c| c.iter().map(|v| -v).collect()).collect();
        match (&self.diag_d, self.params.m_pair()) {
            (Some(d), Some((mp, mm))) => {
                for (s, z) in &field.points {
                    let (a, b) = (mp * z, mm * z);
                    for (k, &t) in self.grid.iter().enumerate() {
                        for i in 0..p {
                            let plus = plus_diff(t - s, -s, t, d[i]);
                            let minus = plus_diff(s - t, *s, -t, d[i]);
                            values[k][i] += plus * a[i] + minus * b[i];
                        }
                    }
                }
            }
            _ => {
                for (s, z) in &field.points {
                    for (k, &t) in self.grid.iter().enumerate() {
                        let v = kernels::time_kernel(t, *s, &self.params) * z;
                        for i in 0..p {
                            values[k][i] += v[i];
                        }
                    }
                }
            }
        }
        values
    }
}

impl PathModel for MaSimulator {
    fn grid(&self) -> &Arc<[f64]> {
        &self.grid
    }
    fn dim(&self) -> usize {
        self.params.dim()
    }
    fn draw(&self, rng: &mut ChaCha20Rng) -> Vec<Vec<f64>> {
        let field = sample_field_with(&self.sampler, &self.window, rng);
        let mut values = self.evaluate_field(&field);
        if let Some(g) = &self.gaussian {
            g.add_draw(&mut values, rng);
        }
        values
    }
}

/// Harmonizable path generator using X(t) = Σ 2 Re(g̃_t(x_i) z_i) - compensator.
#[derive(Clone, Debug)]
pub struct RhSimulator {
    params: FourierKernelParams,
    grid: Arc<[f64]>,
    window: Window,
    sampler: JumpSampler,
    compensator: Vec<RVec>,
    gaussian: Option<GaussianPart>,
    diag_d: Option<Vec<f64>>,
}

impl RhSimulator {
    pub fn new(params: FourierKernelParams, mu: &ComplexLevyView, grid: &[f64], opts: &SimOptions) -> Result<Self> {
        check_grid(grid)?;
        let p = params.dim();
        if mu.p() != p {
            return Err(Error::InvalidInput(format!("measure has dimension {}, kernel {p}", mu.p())));
        }
        let base = mu.base();
        let eps = if base.has_infinite_activity() { opts.jump_truncation } else { 0.0 };
        if base.has_infinite_activity() && !(eps > 0.0) {
            return Err(Error::TruncationRequired);
        }
        let spec = &opts.quad;
        let x_max = match opts.window {
            Some((lo, hi)) => {
                if lo != -hi || !(hi > 0.0) {
                    return Err(Error::InvalidInput("harmonizable window must be symmetric about 0".into()));
                }
                hi
            }
            None => {
                let tmin = grid.iter().map(|t| t.abs()).filter(|t| *t > 0.0).fold(f64::INFINITY, f64::min);
                let tmin = if tmin.is_finite() { tmin } else { 1.0 };
                opts.window_factor.unwrap_or(RH_WINDOW_FACTOR) / tmin
            }
        };
        let id = RMat::identity(p, p);
        let mut tail_fraction = 0.0_f64;
        for &t in grid.iter().filter(|t| **t != 0.0) {
            let total = kernels::fourier_bilinear(t, t, &params, &id, &id, spec)?.trace();
            let out = kernels::fourier_bilinear_outside(t, t, &params, &id, &id, x_max, spec)?.trace();
            tail_fraction = tail_fraction.max(out / total);
        }
        if opts.far_field == FarField::Drop && tail_fraction > opts.tail_budget {
            return Err(Error::WindowTooSmall { fraction: tail_fraction, budget: opts.tail_budget });
        }
        let window = Window { lo: -x_max, hi: x_max, tail_fraction };
        let sampler = JumpSampler::new(base, eps)?;
        let (m_re, _) = mu.kept_mean(eps)?;
        let compensator = grid
            .iter()
            .map(|&t| {
                if m_re.iter().all(|v| *v == 0.0) || t == 0.0 {
                    Ok(RVec::zeros(p))
                } else {
                    let g = matfun::real_part(&kernels::fourier_kernel_integral(t, &params, x_max, spec)?);
                    Ok(g * &m_re * 2.0)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let (rr, ii, _) = mu.moment_blocks()?;
        let small_blocks = if opts.small_jump_gaussian && eps > 0.0 {
            let m = base.truncated_second_moment(eps)?;
            Some((m.view((0, 0), (p, p)).into_owned(), m.view((p, p), (p, p)).into_owned()))
        } else {
            None
        };
        let far = opts.far_field == FarField::Gaussian;
        let small = small_blocks.as_ref().is_some_and(|(a, b)| a.amax() > 0.0 || b.amax() > 0.0);
        let gaussian = if far || small {
            GaussianPart::build(grid.len(), p, |i, j| {
                let (s, t) = (grid[i], grid[j]);
                let mut c = RMat::zeros(p, p);
                if far {
                    c += kernels::fourier_bilinear_outside(s, t, &params, &rr, &ii, x_max, spec)?;
                }
                if let (true, Some((sr, si))) = (small, &small_blocks) {
                    c += kernels::fourier_bilinear(s, t, &params, sr, si, spec)?;
                    c -= kernels::fourier_bilinear_outside(s, t, &params, sr, si, x_max, spec)?;
                }
                Ok(c)
            })?
        } else {
            None
        };
        let diag_d = params.hurst().diagonal_d().map(|d| d.to_vec());
        Ok(RhSimulator { params, grid: grid.to_vec().into(), window, sampler, compensator, gaussian, diag_d })
    }

    pub fn window(&self) -> &Window {
        &self.window
    }
    pub fn has_gaussian_part(&self) -> bool {
        self.gaussian.is_some()
    }

    /// Σ_i 2 Re(g̃_t(x_i) z_i) minus the compensator; marks are (Re z, Im z).
    pub fn evaluate_field(&self, field: &PoissonField) -> Vec<Vec<f64>> {
        let p = self.params.dim();
        let mut values: Vec<Vec<f64>> = self.compensator.iter().map(|c| c.iter().map(|v| -v).collect()).collect();
        let a = self.params.a();
        for (x, z) in &field.points {
            if *x == 0.0 {
                continue;
            }
            let zc: Vec<C64> = (0..p).map(|i| C64::new(z[i], z[p + i])).collect();
            let zc = nalgebra::DVector::from_vec(zc);
            match &self.diag_d {
                Some(d) => {
                    let w = if *x > 0.0 { a * &zc } else { a.map(|c| c.conj()) * &zc };
                    let scaled: Vec<C64> = (0..p).map(|i| w[i] * x.abs().powf(-d[i])).collect();
                    for (k, &t) in self.grid.iter().enumerate() {
                        if t == 0.0 {
                            continue;
                        }
                        let phi = special::phase_ratio(t, *x);
                        for i in 0..p {
                            values[k][i] += 2.0 * (phi * scaled[i]).re;
                        }
                    }
                }
                None => {
                    for (k, &t) in self.grid.iter().enumerate() {
                        let v = kernels::fourier_kernel(t, *x, &self.params) * &zc;
                        for i in 0..p {
                            values[k][i] += 2.0 * v[i].re;
                        }
                    }
                }
            }
        }
        values
    }
}

impl PathModel for RhSimulator {
    fn grid(&self) -> &Arc<[f64]> {
        &self.grid
    }
    fn dim(&self) -> usize {
        self.params.dim()
    }
    fn draw(&self, rng: &mut ChaCha20Rng) -> Vec<Vec<f64>> {
        let field = sample_field_with(&self.sampler, &self.window, rng);
        let mut values = self.evaluate_field(&field);
        if let Some(g) = &self.gaussian {
            g.add_draw(&mut values, rng);
        }
        values
    }
}

/// Gaussian paths from a full joint covariance over the grid.
#[derive(Clone, Debug)]
pub struct GaussianSimulator {
    grid: Arc<[f64]>,
    dim: usize,
    factor: RMat,
}

impl GaussianSimulator {
    /// `gram` is (p n) x (p n), blocks ordered by grid time.
    pub fn new(grid: &[f64], dim: usize, gram: &RMat) -> Result<Self> {
        check_grid(grid)?;
        if gram.nrows() != dim * grid.len() || gram.ncols() != gram.nrows() {
            return Err(Error::InvalidInput("gram size does not match grid and dimension".into()));
        }
        Ok(GaussianSimulator { grid: grid.to_vec().into(), dim, factor: matfun::psd_factor(gram)? })
    }
}

impl PathModel for GaussianSimulator {
    fn grid(&self) -> &Arc<[f64]> {
        &self.grid
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn draw(&self, rng: &mut ChaCha20Rng) -> Vec<Vec<f64>> {
        let x = &self.factor * normals(self.factor.ncols(), rng);
        let p = self.dim;
        (0..self.grid.len()).map(|k| (0..p).map(|a| x[k * p + a]).collect()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariance::{cov_ofbm_reversible, CovModel};
    use crate::kernels::time_kernel;
    use crate::matfun::{CMat, HurstSpec};
    use crate::mcstats::{sample_cov, sample_mean};
    use approx::assert_relative_eq;

    fn ma_params(ds: &[f64], mp: RMat, mm: RMat) -> TimeKernelParams {
        let hs: Vec<f64> = ds.iter().map(|d| d + 0.5).collect();
        TimeKernelParams::general(HurstSpec::diagonal(&hs).unwrap(), mp, mm).unwrap()
    }

    fn unit_discrete(p: usize) -> LevyMeasure {
        let mut atoms = Vec::new();
        for k in 0..p {
            for s in [1.0, -1.0] {
                let mut z = vec![0.0; p];
                z[k] = s;
                atoms.push((z, 0.5));
            }
        }
        LevyMeasure::discrete(p, atoms).unwrap()
    }

    fn window(lo: f64, hi: f64) -> Window {
        Window { lo, hi, tail_fraction: 0.0 }
    }

    #[test]
    fn empty_and_counted_fields() {
        let empty = LevyMeasure::discrete(1, vec![]).unwrap();
        let mut rng = replication_rng(1, 0);
        assert!(sample_field(&empty, 0.0, &window(-1.0, 1.0), &mut rng).unwrap().points.is_empty());
        let mu = LevyMeasure::discrete(1, vec![(vec![1.0], 1.5)]).unwrap();
        let w = window(-2.0, 3.0);
        let sampler = JumpSampler::new(&mu, 0.0).unwrap();
        let n = 10_000;
        let counts: Vec<f64> = (0..n).map(|_| sample_field_with(&sampler, &w, &mut rng).points.len() as f64).collect();
        let (m, se) = crate::mcstats::mean_se(&counts);
        assert!((m - 7.5).abs() < 3.0 * se, "{m} {se}");
        let f = sample_field_with(&sampler, &w, &mut rng);
        assert!(f.points.iter().all(|(x, _)| *x >= -2.0 && *x <= 3.0));
        let tos = LevyMeasure::tempered_op_stable(
            RMat::from_element(1, 1, 0.75),
            vec![(vec![1.0], 1.0)],
            crate::levy::Tempering::Indicator { r0: 1.0 },
        )
        .unwrap();
        assert!(matches!(sample_field(&tos, 0.0, &w, &mut rng), Err(Error::TruncationRequired)));
    }

    #[test]
    fn injected_points_pass_through() {
        let mp = RMat::from_row_slice(2, 2, &[1.0, 0.3, -0.2, 0.8]);
        let mm = RMat::from_row_slice(2, 2, &[0.5, 0.0, 0.1, 1.2]);
        let params = ma_params(&[0.2, -0.3], mp, mm);
        let grid = [0.0, 0.5, 1.0, 2.0];
        let opts = SimOptions { far_field: FarField::Gaussian, ..Default::default() };
        let sim = MaSimulator::new(params.clone(), &unit_discrete(2), &grid, &opts).unwrap();
        let empty = PoissonField { window: sim.window().clone(), points: vec![], intensity_mass: 0.0 };
        assert!(sim.evaluate_field(&empty).iter().flatten().all(|v| *v == 0.0));
        let z = RVec::from_vec(vec![0.7, -1.1]);
        for s0 in [-3.0, 0.25, 1.7, 5.0] {
            let field = PoissonField { points: vec![(s0, z.clone())], ..empty.clone() };
            let vals = sim.evaluate_field(&field);
            for (k, &t) in grid.iter().enumerate() {
                let expect = time_kernel(t, s0, &params) * &z;
                for i in 0..2 {
                    assert_relative_eq!(vals[k][i], expect[i], epsilon = 1e-12, max_relative = 1e-10);
                }
            }
        }
        let fparams = FourierKernelParams::new(
            HurstSpec::diagonal(&[0.7, 0.4]).unwrap(),
            CMat::from_row_slice(2, 2, &[C64::new(1.0, 0.5), C64::new(0.0, 0.2), C64::new(-0.3, 0.0), C64::new(0.8, -0.1)]),
        )
        .unwrap();
        let cmu = ComplexLevyView::discrete(vec![
            (vec![C64::new(0.5, 0.5), C64::new(0.0, 0.0)], 0.5),
            (vec![C64::new(-0.5, -0.5), C64::new(0.0, 0.0)], 0.5),
            (vec![C64::new(0.0, 0.0), C64::new(0.5, 0.5)], 0.5),
            (vec![C64::new(0.0, 0.0), C64::new(-0.5, -0.5)], 0.5),
        ])
        .unwrap();
        let rh = RhSimulator::new(fparams.clone(), &cmu, &grid, &SimOptions::default()).unwrap();
        let zc = nalgebra::DVector::from_vec(vec![C64::new(0.3, -0.4), C64::new(1.0, 0.2)]);
        let zr = RVec::from_vec(vec![0.3, 1.0, -0.4, 0.2]);
        for x0 in [-4.0, -0.3, 0.8, 12.0] {
            let field = PoissonField { window: rh.window().clone(), points: vec![(x0, zr.clone())], intensity_mass: 0.0 };
            let vals = rh.evaluate_field(&field);
            for (k, &t) in grid.iter().enumerate() {
                let expect = kernels::fourier_kernel(t, x0, &fparams) * &zc;
                for i in 0..2 {
                    assert_relative_eq!(vals[k][i], 2.0 * expect[i].re, epsilon = 1e-12, max_relative = 1e-10);
                }
            }
            assert!(vals[0].iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn drop_requires_budget() {
        let params = ma_params(&[0.2], RMat::identity(1, 1), RMat::identity(1, 1));
        let opts = SimOptions { far_field: FarField::Drop, ..Default::default() };
        let err = MaSimulator::new(params.clone(), &unit_discrete(1), &[1.0], &opts).unwrap_err();
        assert!(matches!(err, Error::WindowTooSmall { .. }));
        let loose = SimOptions { tail_budget: 0.5, ..opts };
        let sim = MaSimulator::new(params, &unit_discrete(1), &[1.0], &loose).unwrap();
        assert!(!sim.has_gaussian_part());
        assert!(sim.window().tail_fraction > 1e-4 && sim.window().tail_fraction < 0.5);
    }

    #[test]
    fn determinism_and_zero_time() {
        let params = ma_params(&[0.2, 0.3], RMat::identity(2, 2), RMat::identity(2, 2) * 0.5);
        let mu = LevyMeasure::discrete(2, vec![(vec![1.0, 0.0], 1.0), (vec![0.0, -2.0], 0.3)]).unwrap();
        let sim = MaSimulator::new(params, &mu, &[0.0, 1.0, 2.0], &SimOptions::default()).unwrap();
        let a = simulate_path(&sim, 42, 3, "d");
        let b = simulate_path(&sim, 42, 3, "d");
        assert_eq!(a.values, b.values);
        assert_eq!(a.values[0], vec![0.0, 0.0]);
        assert_ne!(simulate_path(&sim, 42, 4, "d").values, a.values);
    }

    #[test]
    fn ma_covariance_and_mean() {
        // Nonzero mean jump exercises the compensator.
        let params = ma_params(&[0.2, 0.3], RMat::from_row_slice(2, 2, &[1.0, 0.2, 0.0, 1.0]), RMat::identity(2, 2) * 0.5);
        let mu = LevyMeasure::discrete(2, vec![(vec![1.0, 0.0], 0.5), (vec![-0.5, 1.0], 0.5), (vec![0.0, -1.0], 0.5)]).unwrap();
        let spec = QuadSpec::default();
        let sim = MaSimulator::new(params.clone(), &mu, &[1.0, 2.0], &SimOptions::default()).unwrap();
        let ens = simulate_ensemble(&sim, 4000, 7, "ma").unwrap();
        let model = CovModel::ma(params, &mu).unwrap();
        for (s, t) in [(1.0, 1.0), (1.0, 2.0), (2.0, 2.0)] {
            let (est, se) = sample_cov(&ens, s, t).unwrap();
            let exact = model.cov(s, t, &spec).unwrap();
            for i in 0..4 {
                assert!((est[i] - exact[i]).abs() < 4.0 * se[i], "({s},{t})[{i}] {} vs {} se {}", est[i], exact[i], se[i]);
            }
        }
        let (m, se) = sample_mean(&ens, 2.0).unwrap();
        for i in 0..2 {
            assert!(m[i].abs() < 4.0 * se[i]);
        }
    }

    #[test]
    fn gaussian_simulator_brownian() {
        let h = HurstSpec::scalar(0.5).unwrap();
        let grid = [0.5, 1.0, 3.0];
        let mut gram = RMat::zeros(3, 3);
        for i in 0..3 {
            for j in 0..3 {
                gram[(i, j)] = cov_ofbm_reversible(grid[i], grid[j], &h, &RMat::identity(1, 1))[(0, 0)];
            }
        }
        assert_relative_eq!(gram[(0, 2)], 0.5, epsilon = 1e-12);
        let sim = GaussianSimulator::new(&grid, 1, &gram).unwrap();
        let ens = simulate_ensemble(&sim, 4000, 1, "g").unwrap();
        for (i, &s) in grid.iter().enumerate() {
            for (j, &t) in grid.iter().enumerate() {
                let (c, se) = sample_cov(&ens, s, t).unwrap();
                assert!((c[(0, 0)] - gram[(i, j)]).abs() < 4.0 * se[(0, 0)]);
            }
        }
        let zero = GaussianSimulator::new(&grid, 1, &RMat::zeros(3, 3)).unwrap();
        assert!(simulate_path(&zero, 1, 0, "z").values.iter().flatten().all(|v| *v == 0.0));
        assert!(GaussianSimulator::new(&grid, 1, &(RMat::identity(3, 3) * -1.0)).is_err());
    }
}
