use nalgebra::DVector;
use num_complex::Complex64 as C64;
use oflm::covariance::CovModel;
use oflm::kernels::{FourierKernelParams, TimeKernelParams};
use oflm::levy::{ComplexLevyView, LevyMeasure};
use oflm::limits::{self, LimitModel, Rescale};
use oflm::matfun::{CMat, HurstSpec, RMat};
use oflm::mcstats::{self, Ensemble};
use oflm::quad::QuadSpec;
use oflm::simulate::{self, GaussianSimulator, MaSimulator, RhSimulator, SimOptions};

type RVec = DVector<f64>;

fn scalar_ma(d: f64, mp: f64, mm: f64) -> TimeKernelParams {
    TimeKernelParams::general(HurstSpec::scalar(d + 0.5).unwrap(), RMat::from_element(1, 1, mp), RMat::from_element(1, 1, mm))
        .unwrap()
}

fn delta_one() -> LevyMeasure {
    LevyMeasure::discrete(1, vec![(vec![1.0], 1.0)]).unwrap()
}

fn scalar_us(us: &[f64]) -> Vec<Vec<RVec>> {
    us.iter().map(|&u| vec![RVec::from_element(1, u)]).collect()
}

#[test]
fn kurtosis_decreases_along_large_scales() {
    let params = scalar_ma(0.2, 1.0, 0.0);
    let model = LimitModel::Ma { params, mu: delta_one() };
    let opts = SimOptions::default();
    let mut prev: Option<(f64, f64)> = None;
    for c in [1.0, 4.0, 16.0, 64.0] {
        let ens = limits::rescaled_ensemble(&Rescale::MaLarge { c }, &model, &[1.0], 20_000, 3, &opts, "mono").unwrap();
        let (k, se) = mcstats::excess_kurtosis(&ens, 1.0, 0).unwrap();
        if let Some((k0, se0)) = prev {
            assert!(k <= k0 + 3.0 * se.hypot(se0), "c={c}: {k} ± {se} after {k0} ± {se0}");
        }
        prev = Some((k, se));
    }
}

#[test]
fn delta_measure_is_not_self_similar() {
    let params = scalar_ma(0.2, 1.0, 0.0);
    let model = LimitModel::Ma { params, mu: delta_one() };
    let opts = SimOptions::default();
    let n = 20_000;
    let base = limits::rescaled_ensemble(&Rescale::MaLarge { c: 1.0 }, &model, &[1.0], n, 21, &opts, "oss").unwrap();
    let big = limits::rescaled_ensemble(&Rescale::MaLarge { c: 16.0 }, &model, &[1.0], n, 22, &opts, "oss").unwrap();
    let us = scalar_us(&[0.5, 1.0, 1.5, 2.0, 3.0]);
    let a = mcstats::empirical_chf(&base, &[1.0], &us).unwrap();
    let b = mcstats::empirical_chf(&big, &[1.0], &us).unwrap();
    let worst = a.iter().zip(&b).map(|((x, _), (y, _))| (x - y).norm()).fold(0.0, f64::max);
    assert!(worst > 2.0 * mcstats::chf_radius(n), "max chf gap {worst}");
}

#[test]
fn increments_are_stationary_and_centered() {
    let params = TimeKernelParams::general(
        HurstSpec::diagonal(&[0.7, 0.35]).unwrap(),
        RMat::from_row_slice(2, 2, &[1.0, 0.2, 0.0, 1.0]),
        RMat::identity(2, 2) * 0.5,
    )
    .unwrap();
    // Nonzero mean jump exercises the compensator.
    let mu = LevyMeasure::discrete(2, vec![(vec![1.5, 0.0], 0.5), (vec![-0.5, 1.0], 0.5), (vec![0.0, -1.0], 0.3)]).unwrap();
    let n = 20_000;
    let opts = SimOptions::default();
    let ens = simulate::simulate_ensemble(&MaSimulator::new(params.clone(), &mu, &[2.0, 3.0], &opts).unwrap(), n, 4, "inc")
        .unwrap();
    let single = simulate::simulate_ensemble(&MaSimulator::new(params, &mu, &[1.0], &opts).unwrap(), n, 5, "inc").unwrap();
    let increments: Vec<Vec<Vec<f64>>> = ens
        .paths()
        .iter()
        .map(|p| vec![vec![p.values[1][0] - p.values[0][0], p.values[1][1] - p.values[0][1]]])
        .collect();
    let inc = Ensemble::from_values(vec![1.0], increments, "inc").unwrap();
    let us: Vec<Vec<RVec>> = [(0.5, 0.0), (0.0, 0.7), (0.6, -0.6), (1.2, 0.4)]
        .iter()
        .map(|&(a, b)| vec![RVec::from_vec(vec![a, b])])
        .collect();
    let x = mcstats::empirical_chf(&inc, &[1.0], &us).unwrap();
    let y = mcstats::empirical_chf(&single, &[1.0], &us).unwrap();
    for ((a, r1), (b, r2)) in x.iter().zip(&y) {
        assert!((a - b).norm() <= r1 + r2, "{a} vs {b}");
    }
    for t in [2.0, 3.0] {
        let (m, se) = mcstats::sample_mean(&ens, t).unwrap();
        for i in 0..2 {
            assert!(m[i].abs() < 4.0 * se[i], "mean {} se {}", m[i], se[i]);
        }
    }
}

#[test]
fn wider_window_gives_the_same_law() {
    let params = scalar_ma(-0.2, 1.0, 0.4);
    let mu = LevyMeasure::discrete(1, vec![(vec![1.0], 0.7), (vec![-2.0], 0.2)]).unwrap();
    let n = 20_000;
    let grid = [1.0, 2.0];
    let narrow = SimOptions { window_factor: Some(5.0), ..Default::default() };
    let wide = SimOptions { window_factor: Some(40.0), ..Default::default() };
    let a = simulate::simulate_ensemble(&MaSimulator::new(params.clone(), &mu, &grid, &narrow).unwrap(), n, 8, "w").unwrap();
    let b = simulate::simulate_ensemble(&MaSimulator::new(params, &mu, &grid, &wide).unwrap(), n, 9, "w").unwrap();
    let us: Vec<Vec<RVec>> = [(0.5, 0.0), (1.0, 0.5), (0.0, 1.5), (2.0, -1.0)]
        .iter()
        .map(|&(u, v)| vec![RVec::from_element(1, u), RVec::from_element(1, v)])
        .collect();
    let x = mcstats::empirical_chf(&a, &grid, &us).unwrap();
    let y = mcstats::empirical_chf(&b, &grid, &us).unwrap();
    for ((p, r1), (q, r2)) in x.iter().zip(&y) {
        assert!((p - q).norm() <= r1 + r2, "{p} vs {q}");
    }
}

#[test]
fn harmonizable_moments() {
    let params = FourierKernelParams::new(HurstSpec::scalar(0.35).unwrap(), CMat::from_element(1, 1, C64::new(0.8, -0.6))).unwrap();
    let mu = ComplexLevyView::discrete(vec![(vec![C64::new(0.5, 0.5)], 1.0)]).unwrap();
    let grid = [0.5, 1.0, 2.0];
    let ens = simulate::simulate_ensemble(&RhSimulator::new(params.clone(), &mu, &grid, &SimOptions::default()).unwrap(), 10_000, 12, "rh")
        .unwrap();
    let model = CovModel::rh(params, &mu).unwrap();
    let spec = QuadSpec::default();
    for &s in &grid {
        for &t in &grid {
            let (est, se) = mcstats::sample_cov(&ens, s, t).unwrap();
            let exact = model.cov(s, t, &spec).unwrap();
            assert!((est[0] - exact[0]).abs() < 4.0 * se[0], "({s},{t}) {} vs {} se {}", est[0], exact[0], se[0]);
        }
        let (m, se) = mcstats::sample_mean(&ens, s).unwrap();
        assert!(m[0].abs() < 4.0 * se[0]);
    }
}

#[test]
fn gaussian_limit_of_its_own_law() {
    let h = HurstSpec::scalar(0.7).unwrap();
    let params = TimeKernelParams::well_balanced(h, RMat::identity(1, 1)).unwrap();
    let model = CovModel::ma(params, &delta_one()).unwrap();
    let times = [1.0, 2.0];
    let gram = model.gram(&times, &QuadSpec::default()).unwrap();
    let ens = simulate::simulate_ensemble(&GaussianSimulator::new(&times, 1, &gram).unwrap(), 10_000, 13, "g").unwrap();
    let us: Vec<Vec<RVec>> = [(0.5, 0.0), (0.3, 0.3), (1.0, -0.5)]
        .iter()
        .map(|&(u, v)| vec![RVec::from_element(1, u), RVec::from_element(1, v)])
        .collect();
    let d = limits::gaussian_limit_distance(&ens, &gram, &times, &us).unwrap();
    assert!(d.max_cov_z < 4.0, "{d:?}");
    assert!(d.max_chf_distance < d.chf_radius, "{d:?}");
    assert!(d.kurtosis.iter().all(|(k, se)| k.abs() < 4.0 * se), "{d:?}");
}

#[test]
fn harmonizable_small_scale_approaches_gaussian() {
    let params = FourierKernelParams::new(HurstSpec::scalar(0.7).unwrap(), CMat::from_element(1, 1, C64::new(1.0, 0.3))).unwrap();
    let mu = ComplexLevyView::discrete(vec![(vec![C64::new(0.5, 0.5)], 0.5), (vec![C64::new(0.5, -0.5)], 0.5)]).unwrap();
    let model = LimitModel::Rh { params: params.clone(), mu: mu.clone() };
    let times = [1.0];
    let gram = CovModel::rh(params, &mu).unwrap().gram(&times, &QuadSpec::default()).unwrap();
    let us = scalar_us(&[0.5, 1.0, 2.0]);
    let opts = SimOptions::default();
    let ens = limits::rescaled_ensemble(&Rescale::RhSmall { eps: 0.01 }, &model, &times, 10_000, 14, &opts, "rh-small").unwrap();
    let d = limits::gaussian_limit_distance(&ens, &gram, &times, &us).unwrap();
    assert!(d.max_cov_z < 4.0, "{d:?}");
    assert!(d.max_chf_distance < d.chf_radius, "{d:?}");
}
