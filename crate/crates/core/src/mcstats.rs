//! Ensemble estimators: cross moments with standard errors, empirical
//! characteristic functions, excess kurtosis.
//!
//! Every reduction sums in a fixed pairwise order so results do not depend on
//! how the ensemble was produced.

use crate::error::{Error, Result};
use crate::matfun::RMat;
use nalgebra::DVector;
use num_complex::Complex64 as C64;
use std::sync::Arc;

pub type RVec = DVector<f64>;

/// One simulated path on a time grid.
#[derive(Clone, Debug)]
pub struct SamplePath {
    pub grid: Arc<[f64]>,
    pub values: Vec<Vec<f64>>,
    pub seed: u64,
    pub replication: u64,
    pub config_digest: String,
}

impl SamplePath {
    pub fn value(&self, k: usize) -> RVec {
        RVec::from_column_slice(&self.values[k])
    }

    /// CSV rows `t,X1,...,Xp` with 17 significant digits, after a digest comment line.
    pub fn to_csv(&self) -> String {
        let mut out = format!("# config_digest={} seed={} replication={}\n", self.config_digest, self.seed, self.replication);
        let p = self.values.first().map_or(0, |v| v.len());
        out.push('t');
        for i in 1..=p {
            out.push_str(&format!(",X{i}"));
        }
        out.push('\n');
        for (t, v) in self.grid.iter().zip(&self.values) {
            out.push_str(&fmt17(*t));
            for x in v {
                out.push(',');
                out.push_str(&fmt17(*x));
            }
            out.push('\n');
        }
        out
    }
}

/// Fixed 17-significant-digit float formatting.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Paths sharing one grid and one configuration digest.
#[derive(Clone, Debug)]
pub struct Ensemble {
    grid: Arc<[f64]>,
    dim: usize,
    paths: Vec<SamplePath>,
    config_digest: String,
}

impl Ensemble {
    pub fn new(paths: Vec<SamplePath>) -> Result<Self> {
        let first = paths.first().ok_or_else(|| Error::InvalidInput("empty ensemble".into()))?;
        let grid = first.grid.clone();
        let digest = first.config_digest.clone();
        let dim = first.values.first().map_or(0, |v| v.len());
        for p in &paths {
            if p.grid[..] != grid[..] || p.config_digest != digest {
                return Err(Error::MismatchedEnsembles("paths differ in grid or configuration".into()));
            }
            if p.values.len() != grid.len() || p.values.iter().any(|v| v.len() != dim) {
                return Err(Error::InvalidInput("path values do not match the grid".into()));
            }
        }
        Ok(Ensemble { grid, dim, paths, config_digest: digest })
    }

    /// Ensemble from raw values, mostly for synthetic data: values[r][k] is X(t_k) of replication r.
    pub fn from_values(grid: Vec<f64>, values: Vec<Vec<Vec<f64>>>, digest: &str) -> Result<Self> {
        let grid: Arc<[f64]> = grid.into();
        let paths = values
            .into_iter()
            .enumerate()
            .map(|(r, v)| SamplePath { grid: grid.clone(), values: v, seed: 0, replication: r as u64, config_digest: digest.into() })
            .collect();
        Ensemble::new(paths)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn replications(&self) -> usize {
        self.paths.len()
    }
    pub fn paths(&self) -> &[SamplePath] {
        &self.paths
    }
    pub fn config_digest(&self) -> &str {
        &self.config_digest
    }

    /// Index of `t` on the grid.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let scale = self.grid.iter().fold(1.0_f64, |a, &b| a.max(b.abs()));
        self.grid.iter().position(|&g| (g - t).abs() <= 1e-12 * scale).ok_or(Error::TimesNotOnGrid(t))
    }

    /// Same paths with the grid relabeled by `f` (values untouched).
    pub fn relabeled(&self, f: impl Fn(f64) -> f64) -> Ensemble {
        let grid: Arc<[f64]> = self.grid.iter().map(|&t| f(t)).collect::<Vec<_>>().into();
        let paths = self.paths.iter().map(|p| SamplePath { grid: grid.clone(), ..p.clone() }).collect();
        Ensemble { grid, dim: self.dim, paths, config_digest: self.config_digest.clone() }
    }

    /// Same grid with values mapped by `f(t, x)`.
    pub fn map_values(&self, f: impl Fn(f64, &[f64]) -> Vec<f64>) -> Ensemble {
        let paths = self
            .paths
            .iter()
            .map(|p| SamplePath {
                values: p.grid.iter().zip(&p.values).map(|(&t, v)| f(t, v)).collect(),
                ..p.clone()
            })
            .collect();
        Ensemble { paths, ..self.clone() }
    }
}

/// Pairwise (cascade) summation.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 16 {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

fn mean(v: &[f64]) -> f64 {
    pairwise_sum(v) / v.len() as f64
}

/// Mean and standard error of i.i.d. samples. For a mean, the jackknife
/// standard error coincides with s / sqrt(n).
pub fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = mean(v);
    let dev: Vec<f64> = v.iter().map(|x| (x - m) * (x - m)).collect();
    let var = pairwise_sum(&dev) / (n - 1.0);
    (m, (var / n).sqrt())
}

/// E X(t1) X(t2)^T estimated by the raw cross moment (the processes are
/// centered), with its standard error entrywise.
pub fn sample_cov(ens: &Ensemble, t1: f64, t2: f64) -> Result<(RMat, RMat)> {
    let (i, j) = (ens.index_of(t1)?, ens.index_of(t2)?);
    if ens.replications() < 2 {
        return Err(Error::InvalidInput("need at least two replications".into()));
    }
    let p = ens.dim();
    let mut est = RMat::zeros(p, p);
    let mut se = RMat::zeros(p, p);
    let mut buf = vec![0.0; ens.replications()];
    for a in 0..p {
        for b in 0..p {
            for (slot, path) in buf.iter_mut().zip(ens.paths()) {
                *slot = path.values[i][a] * path.values[j][b];
            }
            let (m, s) = mean_se(&buf);
            est[(a, b)] = m;
            se[(a, b)] = s;
        }
    }
    Ok((est, se))
}

/// Mean of X(t) with standard errors.
pub fn sample_mean(ens: &Ensemble, t: f64) -> Result<(RVec, RVec)> {
    let i = ens.index_of(t)?;
    let p = ens.dim();
    let mut m = RVec::zeros(p);
    let mut se = RVec::zeros(p);
    for a in 0..p {
        let v: Vec<f64> = ens.paths().iter().map(|x| x.values[i][a]).collect();
        let (mm, s) = mean_se(&v);
        m[a] = mm;
        se[a] = s;
    }
    Ok((m, se))
}

/// Radius of the distribution-free chf band: 3 / sqrt(N).
pub fn chf_radius(n: usize) -> f64 {
    3.0 / (n as f64).sqrt()
}

/// (1/N) Σ_r exp(i Σ_j <u_j, X_r(t_j)>) for each u-point (one vector per time),
/// with the radius 3/sqrt(N).
pub fn empirical_chf(ens: &Ensemble, times: &[f64], us: &[Vec<RVec>]) -> Result<Vec<(C64, f64)>> {
    let idx: Vec<usize> = times.iter().map(|&t| ens.index_of(t)).collect::<Result<_>>()?;
    let n = ens.replications();
    let radius = chf_radius(n);
    let mut out = Vec::with_capacity(us.len());
    let mut re = vec![0.0; n];
    let mut im = vec![0.0; n];
    for u in us {
        if u.len() != times.len() || u.iter().any(|v| v.len() != ens.dim()) {
            return Err(Error::InvalidInput("each u-point needs one p-vector per time".into()));
        }
        if u.iter().all(|v| v.iter().all(|x| *x == 0.0)) {
            out.push((C64::new(1.0, 0.0), radius));
            continue;
        }
        for (r, path) in ens.paths().iter().enumerate() {
            let mut phase = 0.0;
            for (&k, v) in idx.iter().zip(u) {
                phase += v.iter().zip(&path.values[k]).map(|(a, b)| a * b).sum::<f64>();
            }
            let (s, c) = phase.sin_cos();
            re[r] = c;
            im[r] = s;
        }
        out.push((C64::new(mean(&re), mean(&im)), radius));
    }
    Ok(out)
}

/// Sample excess kurtosis of one coordinate of X(t) with the delta-method
/// standard error from its influence function.
pub fn excess_kurtosis(ens: &Ensemble, t: f64, coordinate: usize) -> Result<(f64, f64)> {
    let i = ens.index_of(t)?;
    if coordinate >= ens.dim() {
        return Err(Error::InvalidInput(format!("coordinate {coordinate} out of range")));
    }
    let x: Vec<f64> = ens.paths().iter().map(|p| p.values[i][coordinate]).collect();
    kurtosis_of(&x)
}

/// Excess kurtosis and its standard error for raw samples.
pub fn kurtosis_of(x: &[f64]) -> Result<(f64, f64)> {
    let n = x.len();
    if n < 100 {
        return Err(Error::InvalidInput(format!("kurtosis needs at least 100 replications, got {n}")));
    }
    let m = mean(x);
    let y: Vec<f64> = x.iter().map(|v| v - m).collect();
    let pw = |k: i32| mean(&y.iter().map(|v| v.powi(k)).collect::<Vec<_>>());
    let (m2, m3, m4) = (pw(2), pw(3), pw(4));
    let scale = m.abs().max(y.iter().fold(0.0_f64, |a, v| a.max(v.abs())));
    if m2 <= (1e-14 * scale).powi(2) || m2 == 0.0 {
        return Err(Error::DegenerateVariance);
    }
    let k = m4 / (m2 * m2) - 3.0;
    // Influence function of m4/m2^2, including the estimated mean.
    let infl: Vec<f64> = y
        .iter()
        .map(|v| (v.powi(4) - m4) / (m2 * m2) - 2.0 * m4 * (v * v - m2) / (m2 * m2 * m2) - 4.0 * m3 * v / (m2 * m2))
        .collect();
    let (_, se) = mean_se(&infl);
    Ok((k, se))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;
    use rand_distr::{Distribution, Poisson, StandardNormal};

    fn gaussian_ensemble(n: usize, p: usize, seed: u64) -> Ensemble {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let values = (0..n).map(|_| vec![(0..p).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()]).collect();
        Ensemble::from_values(vec![1.0], values, "synthetic").unwrap()
    }

    #[test]
    fn zero_ensemble() {
        let ens = Ensemble::from_values(vec![1.0, 2.0], vec![vec![vec![0.0, 0.0]; 2]; 10], "z").unwrap();
        assert_eq!(sample_cov(&ens, 1.0, 2.0).unwrap().0, RMat::zeros(2, 2));
        let u = vec![vec![RVec::from_vec(vec![1.0, -2.0]), RVec::from_vec(vec![0.5, 0.5])]];
        assert_eq!(empirical_chf(&ens, &[1.0, 2.0], &u).unwrap()[0].0, C64::new(1.0, 0.0));
        assert!(matches!(sample_cov(&ens, 3.0, 1.0), Err(Error::TimesNotOnGrid(_))));
    }

    #[test]
    fn gaussian_cov_and_chf() {
        let ens = gaussian_ensemble(10_000, 2, 1);
        let (c, se) = sample_cov(&ens, 1.0, 1.0).unwrap();
        for a in 0..2 {
            for b in 0..2 {
                let target = if a == b { 1.0 } else { 0.0 };
                assert!((c[(a, b)] - target).abs() < 3.0 * se[(a, b)], "{a}{b}");
            }
        }
        let us: Vec<Vec<RVec>> = [[0.0, 0.0], [0.5, 0.0], [1.0, -1.0], [0.3, 2.0]]
            .iter()
            .map(|u| vec![RVec::from_column_slice(u)])
            .collect();
        let chf = empirical_chf(&ens, &[1.0], &us).unwrap();
        assert_eq!(chf[0].0, C64::new(1.0, 0.0));
        for (u, (v, r)) in us.iter().zip(&chf) {
            let target = (-0.5 * u[0].norm_squared()).exp();
            assert!((v - target).norm() < *r);
            assert!(v.norm() <= 1.0 + 1e-15);
        }
    }

    #[test]
    fn cov_transpose_symmetry() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let values = (0..50)
            .map(|_| (0..2).map(|_| (0..2).map(|_| rng.random::<f64>()).collect()).collect())
            .collect();
        let ens = Ensemble::from_values(vec![1.0, 2.0], values, "s").unwrap();
        let a = sample_cov(&ens, 1.0, 2.0).unwrap().0;
        let b = sample_cov(&ens, 2.0, 1.0).unwrap().0;
        assert!((a - b.transpose()).amax() < 1e-15);
    }

    #[test]
    fn kurtosis_examples() {
        let ens = gaussian_ensemble(20_000, 1, 2);
        let (k, se) = excess_kurtosis(&ens, 1.0, 0).unwrap();
        assert!(k.abs() < 3.0 * se, "{k} {se}");
        let lambda = 2.0;
        let pois = Poisson::new(lambda).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let x: Vec<f64> = (0..20_000).map(|_| pois.sample(&mut rng) - lambda).collect();
        let (k, se) = kurtosis_of(&x).unwrap();
        assert!((k - 1.0 / lambda).abs() < 3.0 * se, "{k} {se}");
        assert!(matches!(kurtosis_of(&[1.5; 200]), Err(Error::DegenerateVariance)));
        assert!(kurtosis_of(&[1.0; 10]).is_err());
    }

    #[test]
    fn pairwise_sum_matches() {
        let v: Vec<f64> = (0..1000).map(|i| i as f64 * 0.5).collect();
        assert_eq!(pairwise_sum(&v), 249750.0);
    }

    #[test]
    fn csv_format() {
        let ens = Ensemble::from_values(vec![0.0, 1.0], vec![vec![vec![0.0], vec![0.1]]], "abc").unwrap();
        let csv = ens.paths()[0].to_csv();
        assert!(csv.starts_with("# config_digest=abc"));
        assert!(csv.contains("1.0000000000000000e0,1.0000000000000001e-1"));
    }
}
