//! Parametric and empirical time-reversibility checks.
//!
//! The parametric checks assume the kernel representation is minimal; that is
//! not verified and every report carries the caveat.

use crate::error::{Error, Result};
use crate::kernels::{FourierKernelParams, TimeKernelParams};
use crate::levy::{self, Atom, ComplexLevyView, LevyKind, LevyMeasure, RVec};
use crate::matfun::{self, Analytic, CMat, RMat};
use crate::mcstats::{self, Ensemble};
use nalgebra::DVector;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub const DEFAULT_TOL: f64 = 1e-9;

pub const MINIMALITY_CAVEAT: &str = "minimality of the kernel representation is assumed, not verified";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Reversible,
    Irreversible,
}

/// Verdict report serialized as JSON.
#[derive(Clone, Debug, Serialize)]
pub struct TimerevReport {
    /// Involution residual on the support (moving average only).
    pub condition_a_residual: Option<f64>,
    /// Measure-preservation discrepancy.
    pub condition_b_residual: f64,
    /// Kernel-level cross-check of condition (a) at sampled points.
    pub condition_a_prime_residual: Option<f64>,
    pub verdict: Verdict,
    pub caveats: Vec<String>,
}

fn invert(m: &RMat) -> Option<RMat> {
    let scale = m.amax();
    if scale == 0.0 {
        return None;
    }
    let svd = m.clone().svd(false, false);
    let smin = svd.singular_values.min();
    if smin <= 1e-12 * svd.singular_values.max() {
        return None;
    }
    m.clone().try_inverse()
}

/// Points on the support of mu at which pointwise conditions are tested, or
/// None when the support is all of R^q (Gaussian jumps).
fn support_points(mu: &LevyMeasure) -> Option<Vec<RVec>> {
    fn collect(m: &LevyMeasure, out: &mut Vec<RVec>) -> bool {
        match m.kind() {
            LevyKind::Discrete(atoms) => {
                out.extend(atoms.iter().map(|a: &Atom| a.z.clone()));
                true
            }
            LevyKind::GaussianJumps { .. } => false,
            LevyKind::TemperedOpStable(t) => {
                // The support is the closure of the curves r -> r^B theta.
                for a in t.sphere_atoms() {
                    for k in -12..=12 {
                        out.push(t.power().pow_apply(10f64.powf(k as f64 / 4.0), &a.z));
                    }
                }
                true
            }
            LevyKind::Mixture(parts) => parts.iter().all(|p| collect(p, out)),
        }
    }
    let mut pts = Vec::new();
    collect(mu, &mut pts).then_some(pts)
}

fn max_relative(points: &[RVec], f: impl Fn(&RVec) -> f64) -> f64 {
    points.iter().filter(|z| z.norm() > 0.0).map(|z| f(z) / z.norm()).fold(0.0, f64::max)
}

/// Reversibility of the moving-average process from (M+, M-) and mu:
/// (a) M-^{-1}M+ z = M+^{-1}M- z on the support, (b) mu preserved by M-^{-1}M+.
pub fn check_maoflm(params: &TimeKernelParams, mu: &LevyMeasure, tol: f64) -> Result<TimerevReport> {
    let (mp, mm) = params
        .m_pair()
        .ok_or_else(|| Error::HypothesisViolated("the reversibility criterion covers the (M+, M-) kernel".into()))?;
    if mu.dim() != params.dim() {
        return Err(Error::InvalidInput("measure and kernel dimensions differ".into()));
    }
    let mp_inv = invert(mp).ok_or(Error::SingularM)?;
    let mm_inv = invert(mm).ok_or(Error::SingularM)?;
    let t_map = &mm_inv * mp;
    let t_alt = &mp_inv * mm;
    let support = support_points(mu);
    let a = match &support {
        Some(pts) => max_relative(pts, |z| (&t_map * z - &t_alt * z).norm()),
        None => (&t_map - &t_alt).norm(),
    };
    let (b_ok, b) = levy::measure_equal(mu, &mu.pushforward(&t_map)?, tol)?;
    let probe: Vec<RVec> = match support {
        Some(pts) => pts,
        None => (0..mu.dim()).map(|k| RVec::from_fn(mu.dim(), |i, _| if i == k { 1.0 } else { 0.0 })).collect(),
    };
    let a_prime = kernel_identity_residual(params, &t_map, &probe);
    Ok(TimerevReport {
        condition_a_residual: Some(a),
        condition_b_residual: b,
        condition_a_prime_residual: Some(a_prime),
        verdict: if a < tol && b_ok { Verdict::Reversible } else { Verdict::Irreversible },
        caveats: vec![MINIMALITY_CAVEAT.into()],
    })
}

/// max ‖g_{-t}(s) z - g_t(-s) T z‖ / ‖z‖ over a fixed set of (t, s).
fn kernel_identity_residual(params: &TimeKernelParams, t_map: &RMat, probe: &[RVec]) -> f64 {
    let ts = [0.5, 1.0, 2.3];
    let ss = [-3.1, -1.2, -0.4, 0.3, 0.7, 1.9, 4.2];
    let mut worst = 0.0_f64;
    for &t in &ts {
        for &s in &ss {
            let g1 = params.eval(-t, s);
            let g2 = params.eval(t, -s) * t_map;
            let scale = g1.norm().max(1.0);
            worst = worst.max(max_relative(probe, |z| (&g1 * z - &g2 * z).norm()) / scale);
        }
    }
    worst
}

/// Reversibility of the harmonizable process: the conjugation-symmetrized
/// measure must be preserved by z -> -A^{-1} conj(A) z.
pub fn check_rhoflm(params: &FourierKernelParams, mu: &ComplexLevyView, tol: f64) -> Result<TimerevReport> {
    let a = params.a();
    if mu.p() != params.dim() {
        return Err(Error::InvalidInput("measure and kernel dimensions differ".into()));
    }
    let real = levy::complex_as_real(a);
    invert(&real).ok_or(Error::SingularA)?;
    let a_inv = a.clone().try_inverse().ok_or(Error::SingularA)?;
    let map = -(a_inv * a.map(|z| z.conj()));
    let sym = mu.symmetrize_conjugate()?;
    let image = sym.pushforward_complex(&map)?;
    let (ok, b) = levy::measure_equal(sym.base(), image.base(), tol)?;
    Ok(TimerevReport {
        condition_a_residual: None,
        condition_b_residual: b,
        condition_a_prime_residual: None,
        verdict: if ok { Verdict::Reversible } else { Verdict::Irreversible },
        caveats: vec![MINIMALITY_CAVEAT.into()],
    })
}

/// Residual and verdict of a Gaussian parametric condition.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct ParamCheck {
    pub residual: f64,
    pub reversible: bool,
}

fn trig_of(d: &RMat) -> Result<(RMat, RMat)> {
    let dc = matfun::to_complex(d);
    let c = matfun::matrix_function(&dc, &|z| (z * (PI / 2.0)).cos(), Analytic::entire(PI / 2.0))?;
    let s = matfun::matrix_function(&dc, &|z| (z * (PI / 2.0)).sin(), Analytic::entire(PI / 2.0))?;
    Ok((matfun::real_part(&c), matfun::real_part(&s)))
}

/// Time-domain reversibility condition of operator fBm:
/// cos(πD/2)(M+ + M-)(M+ - M-)^T sin(πD^T/2) = sin(πD/2)(M+ - M-)(M+ + M-)^T cos(πD^T/2).
pub fn check_ofbm_time(mp: &RMat, mm: &RMat, d: &RMat, tol: f64) -> Result<ParamCheck> {
    let (c, s) = trig_of(d)?;
    let (sum, diff) = (mp + mm, mp - mm);
    let lhs = &c * &sum * diff.transpose() * s.transpose();
    let rhs = &s * &diff * sum.transpose() * c.transpose();
    let residual = (lhs - rhs).norm();
    Ok(ParamCheck { residual, reversible: residual < tol })
}

/// Fourier-domain reversibility condition of operator fBm: A A* real.
pub fn check_ofbm_fourier(a: &CMat, tol: f64) -> ParamCheck {
    let aa = a * a.adjoint();
    let residual = (&aa - aa.map(|z| z.conj())).norm();
    ParamCheck { residual, reversible: residual < tol }
}

/// O = Σ^{-1/2} M-^{-1} M+ Σ^{1/2} with the residuals ‖O O^T - I‖_F and ‖O - O^T‖_F.
pub fn symmetric_orthogonal_factor(mp: &RMat, mm: &RMat, sigma: &RMat) -> Result<(RMat, f64, f64)> {
    let eig = nalgebra::SymmetricEigen::new((sigma + sigma.transpose()) * 0.5);
    let (lo, hi) = (eig.eigenvalues.min(), eig.eigenvalues.max());
    if !(hi > 0.0) || lo <= 1e-12 * hi {
        return Err(Error::RankDeficientSigma);
    }
    let mm_inv = invert(mm).ok_or(Error::SingularM)?;
    let root = matfun::spd_power(sigma, 0.5)?;
    let root_inv = matfun::spd_power(sigma, -0.5)?;
    let o = root_inv * mm_inv * mp * root;
    let n = o.nrows();
    let orth = (&o * o.transpose() - RMat::identity(n, n)).norm();
    let sym = (&o - o.transpose()).norm();
    Ok((o, orth, sym))
}

/// Empirical comparison of the laws of (X(t_j)) and (X(-t_j)).
#[derive(Clone, Debug, Serialize)]
pub struct ReversibilityReport {
    pub max_discrepancy: f64,
    /// Sum of the two 3/sqrt(N) chf radii.
    pub ci: f64,
    pub violation: bool,
    pub worst_index: usize,
}

/// `reversed` holds paths of the same configuration on a grid containing -t
/// for every t in `times`; its chf at -t_j is compared with the forward chf at t_j.
pub fn empirical_reversibility(
    forward: &Ensemble,
    reversed: &Ensemble,
    times: &[f64],
    us: &[Vec<RVec>],
) -> Result<ReversibilityReport> {
    if forward.replications() != reversed.replications() || forward.dim() != reversed.dim() {
        return Err(Error::MismatchedEnsembles(format!(
            "{} x {} vs {} x {}",
            forward.replications(),
            forward.dim(),
            reversed.replications(),
            reversed.dim()
        )));
    }
    let neg: Vec<f64> = times.iter().map(|t| -t).collect();
    let f = mcstats::empirical_chf(forward, times, us)?;
    let r = mcstats::empirical_chf(reversed, &neg, us)?;
    let mut worst = (0.0, 0);
    for (k, ((a, _), (b, _))) in f.iter().zip(&r).enumerate() {
        let d = (a - b).norm();
        if d > worst.0 {
            worst = (d, k);
        }
    }
    let ci = 2.0 * mcstats::chf_radius(forward.replications());
    Ok(ReversibilityReport { max_discrepancy: worst.0, ci, violation: worst.0 > ci, worst_index: worst.1 })
}

/// A configuration that satisfies the operator-fBm time condition but not
/// condition (a) for the Lévy measure with atoms ±e_k.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct StringencyWitness {
    pub seed: u64,
    pub attempt: usize,
    pub m_plus: Vec<Vec<f64>>,
    pub m_minus: Vec<Vec<f64>>,
    pub d: Vec<Vec<f64>>,
    pub ofbm_residual: f64,
    pub levy_a_residual: f64,
}

fn rows(m: &RMat) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

pub fn from_rows(r: &[Vec<f64>]) -> RMat {
    RMat::from_fn(r.len(), r.first().map_or(0, |x| x.len()), |i, j| r[i][j])
}

/// Unit-covariance discrete measure with atoms ±e_k of weight 1/2.
pub fn unit_axis_measure(p: usize) -> LevyMeasure {
    let mut atoms = Vec::new();
    for k in 0..p {
        for s in [1.0, -1.0] {
            let mut z = vec![0.0; p];
            z[k] = s;
            atoms.push((z, 0.5));
        }
    }
    LevyMeasure::discrete(p, atoms).expect("valid atoms")
}

/// Randomized search over p = 2 configurations for a [`StringencyWitness`].
///
/// Half of the draws are unstructured; the other half use D = dI and
/// M+ = S M-^{-T} with S symmetric, the family in which the Gaussian condition
/// can hold without M-^{-1}M+ being an involution.
pub fn search_stringency_witness(seed: u64, max_attempts: usize, tol: f64) -> Result<Option<StringencyWitness>> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mu = unit_axis_measure(2);
    let normal = |rng: &mut ChaCha20Rng| rng.sample::<f64, _>(StandardNormal);
    for attempt in 0..max_attempts {
        let mm = RMat::from_fn(2, 2, |_, _| normal(&mut rng));
        let structured = rng.random::<bool>();
        let (mp, d) = if structured {
            let s = {
                let x = RMat::from_fn(2, 2, |_, _| normal(&mut rng));
                (&x + x.transpose()) * 0.5
            };
            let Some(inv_t) = invert(&mm.transpose()) else { continue };
            let d = rng.random_range(-0.45..0.45_f64);
            (s * inv_t, RMat::identity(2, 2) * d)
        } else {
            let mp = RMat::from_fn(2, 2, |_, _| normal(&mut rng));
            let d = RMat::from_diagonal(&DVector::from_fn(2, |_, _| rng.random_range(-0.45..0.45_f64)));
            (mp, d)
        };
        if d.diagonal().iter().any(|v| v.abs() < 0.05) || invert(&mp).is_none() || invert(&mm).is_none() {
            continue;
        }
        let g = check_ofbm_time(&mp, &mm, &d, tol)?;
        if !g.reversible {
            continue;
        }
        let hurst = matfun::HurstSpec::new(&d + RMat::identity(2, 2) * 0.5)?;
        let params = TimeKernelParams::general(hurst, mp.clone(), mm.clone())?;
        let report = check_maoflm(&params, &mu, tol)?;
        let a = report.condition_a_residual.unwrap_or(0.0);
        if a > 1e-3 {
            return Ok(Some(StringencyWitness {
                seed,
                attempt,
                m_plus: rows(&mp),
                m_minus: rows(&mm),
                d: rows(&d),
                ofbm_residual: g.residual,
                levy_a_residual: a,
            }));
        }
    }
    Ok(None)
}

/// Complex vectors helper for tests and callers building complex atoms.
pub fn cvec(v: &[(f64, f64)]) -> Vec<C64> {
    v.iter().map(|&(a, b)| C64::new(a, b)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matfun::HurstSpec;
    use crate::mcstats::Ensemble;

    fn params(ds: &[f64], mp: RMat, mm: RMat) -> TimeKernelParams {
        let hs: Vec<f64> = ds.iter().map(|d| d + 0.5).collect();
        TimeKernelParams::general(HurstSpec::diagonal(&hs).unwrap(), mp, mm).unwrap()
    }

    fn random_matrix(rng: &mut ChaCha20Rng, p: usize) -> RMat {
        RMat::from_fn(p, p, |_, _| rng.sample::<f64, _>(StandardNormal))
    }

    /// Random symmetric orthogonal matrix Q diag(±1) Q^T.
    fn symmetric_orthogonal(rng: &mut ChaCha20Rng, p: usize) -> RMat {
        let q = random_matrix(rng, p).qr().q();
        let signs = DVector::from_fn(p, |i, _| if i == 0 || rng.random::<bool>() { -1.0 } else { 1.0 });
        &q * RMat::from_diagonal(&signs) * q.transpose()
    }

    #[test]
    fn well_balanced_is_reversible() {
        let m = RMat::from_row_slice(2, 2, &[1.0, 0.4, -0.3, 0.9]);
        let mu = LevyMeasure::discrete(2, vec![(vec![1.0, 0.5], 0.7), (vec![-0.2, 2.0], 0.1)]).unwrap();
        let r = check_maoflm(&params(&[0.2, -0.1], m.clone(), m), &mu, DEFAULT_TOL).unwrap();
        assert_eq!(r.verdict, Verdict::Reversible);
        assert_eq!(r.condition_a_residual, Some(0.0));
        assert!(r.condition_a_prime_residual.unwrap() < 1e-12);
        assert_eq!(r.caveats, vec![MINIMALITY_CAVEAT.to_string()]);
    }

    #[test]
    fn scalar_cases() {
        let one = RMat::identity(1, 1);
        let sym = LevyMeasure::discrete(1, vec![(vec![1.0], 0.5), (vec![-1.0], 0.5)]).unwrap();
        let delta = LevyMeasure::discrete(1, vec![(vec![1.0], 1.0)]).unwrap();
        let anti = params(&[0.2], one.clone(), -one.clone());
        assert_eq!(check_maoflm(&anti, &sym, DEFAULT_TOL).unwrap().verdict, Verdict::Reversible);
        assert_eq!(check_maoflm(&anti, &delta, DEFAULT_TOL).unwrap().verdict, Verdict::Irreversible);
        let skew = params(&[0.2], one.clone(), one.clone() * 2.0);
        let r = check_maoflm(&skew, &delta, DEFAULT_TOL).unwrap();
        assert_eq!(r.verdict, Verdict::Irreversible);
        assert!((r.condition_a_residual.unwrap() - 1.5).abs() < 1e-12);
        // (a) and (a') agree on the verdict.
        assert!(r.condition_a_prime_residual.unwrap() > 1e-3);
        let zero = params(&[0.2], one.clone(), RMat::zeros(1, 1));
        assert!(matches!(check_maoflm(&zero, &delta, DEFAULT_TOL), Err(Error::SingularM)));
        let gauss = LevyMeasure::gaussian(one.clone(), 1.0).unwrap();
        assert_eq!(check_maoflm(&anti, &gauss, DEFAULT_TOL).unwrap().verdict, Verdict::Reversible);
        let r = check_maoflm(&skew, &gauss, DEFAULT_TOL).unwrap();
        assert!((r.condition_a_residual.unwrap() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn randomized_reversible_constructions() {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        for _ in 0..20 {
            let p = 2 + (rng.random::<u32>() % 2) as usize;
            let o = symmetric_orthogonal(&mut rng, p);
            let mm = RMat::identity(p, p) + random_matrix(&mut rng, p) * 0.3;
            let mp = &mm * &o;
            // Atoms ±e_k and their images under O: invariant under O, second moment I.
            let mut atoms = Vec::new();
            for k in 0..p {
                let e = RVec::from_fn(p, |i, _| if i == k { 1.0 } else { 0.0 });
                let f = &o * &e;
                for s in [1.0, -1.0] {
                    atoms.push(((&e * s).iter().copied().collect::<Vec<_>>(), 0.25));
                    atoms.push(((&f * s).iter().copied().collect::<Vec<_>>(), 0.25));
                }
            }
            let mu = LevyMeasure::discrete(p, atoms).unwrap();
            let sigma = mu.second_moment().unwrap();
            assert!((&sigma - RMat::identity(p, p)).amax() < 1e-12);
            let ds: Vec<f64> = (0..p).map(|_| rng.random_range(-0.4..0.4)).collect();
            let par = params(&ds, mp.clone(), mm.clone());
            let r = check_maoflm(&par, &mu, 1e-8).unwrap();
            assert_eq!(r.verdict, Verdict::Reversible, "{r:?}");
            assert!(r.condition_a_prime_residual.unwrap() < 1e-8);
            let g = check_ofbm_time(&mp, &mm, par.hurst().d(), 1e-8).unwrap();
            assert!(g.reversible, "{}", g.residual);
            let (o2, orth, sym) = symmetric_orthogonal_factor(&mp, &mm, &sigma).unwrap();
            assert!(orth < 1e-10 && sym < 1e-10);
            assert!((o2 - &o).amax() < 1e-10);
        }
    }

    #[test]
    fn orthogonal_factor_cases() {
        let id = RMat::identity(2, 2);
        let m = RMat::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 1.0]);
        let (o, _, _) = symmetric_orthogonal_factor(&m, &m, &id).unwrap();
        assert!((o - &id).amax() < 1e-14);
        let (o, _, _) = symmetric_orthogonal_factor(&m, &(-&m), &id).unwrap();
        assert!((o + &id).amax() < 1e-14);
        let rank1 = RMat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        assert!(matches!(symmetric_orthogonal_factor(&m, &m, &rank1), Err(Error::RankDeficientSigma)));
    }

    #[test]
    fn ofbm_conditions() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let m = random_matrix(&mut rng, 2);
        let d = RMat::from_diagonal(&DVector::from_vec(vec![0.2, -0.3]));
        assert_eq!(check_ofbm_time(&m, &m, &d, DEFAULT_TOL).unwrap().residual, 0.0);
        let one = |v: f64| RMat::from_element(1, 1, v);
        assert!(check_ofbm_time(&one(1.3), &one(0.0), &one(0.3), DEFAULT_TOL).unwrap().residual < 1e-15);
        assert!(check_ofbm_time(&one(1.0), &one(2.0), &one(0.3), DEFAULT_TOL).unwrap().reversible);
        let real = CMat::from_row_slice(2, 2, &[C64::new(1.0, 0.0), C64::new(2.0, 0.0), C64::new(-1.0, 0.0), C64::new(0.5, 0.0)]);
        assert_eq!(check_ofbm_fourier(&real, DEFAULT_TOL).residual, 0.0);
        let imag = real.map(|z| z * C64::i());
        assert!(check_ofbm_fourier(&imag, DEFAULT_TOL).residual < 1e-15);
        // A = [[1, i], [0, 1]]: A A* = [[2, i], [-i, 1]], so the residual is ‖[[0, 2i], [-2i, 0]]‖ = 2 sqrt 2.
        let a = CMat::from_row_slice(2, 2, &[C64::new(1.0, 0.0), C64::i(), C64::new(0.0, 0.0), C64::new(1.0, 0.0)]);
        let r = check_ofbm_fourier(&a, DEFAULT_TOL);
        assert!((r.residual - 8f64.sqrt()).abs() < 1e-14 && !r.reversible);
    }

    #[test]
    fn harmonizable_checks() {
        let h = HurstSpec::scalar(0.7).unwrap();
        let orbit = ComplexLevyView::discrete(vec![(cvec(&[(1.0, 1.0)]), 1.0)]).unwrap();
        let imag = FourierKernelParams::new(h.clone(), CMat::from_element(1, 1, C64::new(0.0, 2.0))).unwrap();
        let real = FourierKernelParams::new(h.clone(), CMat::from_element(1, 1, C64::new(1.0, 0.0))).unwrap();
        assert_eq!(check_rhoflm(&imag, &orbit, DEFAULT_TOL).unwrap().verdict, Verdict::Reversible);
        assert_eq!(check_rhoflm(&real, &orbit, DEFAULT_TOL).unwrap().verdict, Verdict::Irreversible);
        let sym = ComplexLevyView::discrete(vec![(cvec(&[(1.0, 1.0)]), 0.5), (cvec(&[(-1.0, -1.0)]), 0.5)]).unwrap();
        assert_eq!(check_rhoflm(&real, &sym, DEFAULT_TOL).unwrap().verdict, Verdict::Reversible);
        let zero = FourierKernelParams::new(h, CMat::zeros(1, 1)).unwrap();
        assert!(matches!(check_rhoflm(&zero, &sym, DEFAULT_TOL), Err(Error::SingularA)));
        // Reversible harmonizable configurations satisfy the Gaussian condition.
        assert!(check_ofbm_fourier(imag.a(), DEFAULT_TOL).reversible);
        assert!(check_ofbm_fourier(real.a(), DEFAULT_TOL).reversible);
    }

    #[test]
    fn empirical_self_comparison() {
        let values: Vec<Vec<Vec<f64>>> = (0..200).map(|r| vec![vec![r as f64 * 0.01], vec![1.0 - r as f64 * 0.02]]).collect();
        let ens = Ensemble::from_values(vec![-1.0, 1.0], values, "x").unwrap();
        let us = vec![vec![RVec::from_vec(vec![0.7])]];
        let r = empirical_reversibility(&ens, &ens.relabeled(|t| -t), &[1.0], &us).unwrap();
        assert_eq!(r.max_discrepancy, 0.0);
        assert!(!r.violation);
        let short = Ensemble::from_values(vec![-1.0, 1.0], vec![vec![vec![0.0], vec![0.0]]; 10], "x").unwrap();
        assert!(matches!(empirical_reversibility(&ens, &short, &[1.0], &us), Err(Error::MismatchedEnsembles(_))));
    }

    #[test]
    fn search_finds_witness() {
        let w = search_stringency_witness(7, 200, DEFAULT_TOL).unwrap().expect("witness");
        assert!(w.ofbm_residual < DEFAULT_TOL && w.levy_a_residual > 1e-3);
        assert_eq!(search_stringency_witness(7, 200, DEFAULT_TOL).unwrap(), Some(w));
    }
}
