//! Scalar special functions on the complex plane: Gamma, Riemann zeta and a
//! cancellation-free `expm1`.

use num_complex::Complex64 as C64;
use std::f64::consts::PI;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma function (Lanczos, g = 7) with reflection for Re z < 1/2.
pub fn gamma(z: C64) -> C64 {
    if z.re < 0.5 {
        let s = (z * PI).sin();
        return C64::from(PI) / (s * gamma(C64::new(1.0, 0.0) - z));
    }
    let z = z - 1.0;
    let mut x = C64::from(LANCZOS[0]);
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        x += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    (2.0 * PI).sqrt() * t.powc(z + 0.5) * (-t).exp() * x
}

/// Distance from `z` to the nearest pole of Gamma (the non-positive integers).
pub fn gamma_pole_distance(z: C64) -> f64 {
    let k = z.re.round().min(0.0);
    let d = (z - C64::from(k)).norm();
    if z.re > 0.0 {
        d.min(z.norm())
    } else {
        d
    }
}

// B_{2k} / (2k)! for k = 1..=10.
const BERNOULLI_OVER_FACT: [f64; 10] = [
    1.0 / 6.0 / 2.0,
    -1.0 / 30.0 / 24.0,
    1.0 / 42.0 / 720.0,
    -1.0 / 30.0 / 40_320.0,
    5.0 / 66.0 / 3_628_800.0,
    -691.0 / 2730.0 / 479_001_600.0,
    7.0 / 6.0 / 87_178_291_200.0,
    -3617.0 / 510.0 / 20_922_789_888_000.0,
    43867.0 / 798.0 / 6_402_373_705_728_000.0,
    -174_611.0 / 330.0 / 2_432_902_008_176_640_000.0,
];

/// Riemann zeta by Euler-Maclaurin summation; valid for all s != 1 with
/// moderate |s| (the library only needs |s| < 10).
pub fn zeta(s: C64) -> C64 {
    let n = 16.0_f64;
    let mut sum = C64::new(0.0, 0.0);
    for k in 1..16 {
        sum += C64::from(k as f64).powc(-s);
    }
    let ln_n = n.ln();
    let n_pow = |e: C64| (e * ln_n).exp();
    sum += n_pow(C64::from(1.0) - s) / (s - 1.0);
    sum += 0.5 * n_pow(-s);
    let mut rising = s;
    for (k, &b) in BERNOULLI_OVER_FACT.iter().enumerate() {
        let k = k + 1;
        sum += b * rising * n_pow(-s - (2 * k - 1) as f64);
        rising = rising * (s + (2 * k - 1) as f64) * (s + (2 * k) as f64);
    }
    sum
}

/// e^z - 1 without cancellation for small |z|.
pub fn expm1(z: C64) -> C64 {
    let em1 = z.re.exp_m1();
    let half = (0.5 * z.im).sin();
    C64::new(em1 * z.im.cos() - 2.0 * half * half, z.re.exp() * z.im.sin())
}

/// (e^{i t x} - 1) / (i x), continuous at x = 0 where it equals t.
pub fn phase_ratio(t: f64, x: f64) -> C64 {
    let a = t * x;
    if a.abs() < 1e-8 {
        // Two-term series keeps full precision near the removable point.
        return C64::new(t, 0.5 * t * a);
    }
    let half = (0.5 * a).sin();
    C64::new(a.sin() / x, 2.0 * half * half / x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_known_values() {
        assert!((gamma(C64::from(1.0)).re - 1.0).abs() < 1e-14);
        assert!((gamma(C64::from(5.0)).re - 24.0).abs() < 1e-12);
        assert!((gamma(C64::from(0.5)).re - PI.sqrt()).abs() < 1e-14);
        assert!((gamma(C64::from(1.3)).re - 0.897_470_696_306_277_2).abs() < 1e-14);
        // Reflection branch.
        assert!((gamma(C64::from(-0.5)).re + 2.0 * PI.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn gamma_matches_euler_integral() {
        // Gamma(z) = int_0^inf x^{z-1} e^{-x} dx, summed on a fine log grid.
        for &z in &[0.7_f64, 1.3, 2.2] {
            let (a, b, n) = (-40.0_f64, 5.0_f64, 200_000);
            let h = (b - a) / n as f64;
            let mut s = 0.0;
            for i in 0..=n {
                let u = a + h * i as f64;
                let x = u.exp();
                let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                s += w * x.powf(z) * (-x).exp();
            }
            assert!((s * h - gamma(C64::from(z)).re).abs() < 1e-10, "z={z}");
        }
    }

    #[test]
    fn zeta_known_values() {
        assert!((zeta(C64::from(2.0)).re - PI * PI / 6.0).abs() < 1e-13);
        assert!((zeta(C64::from(0.0)).re + 0.5).abs() < 1e-14);
        assert!((zeta(C64::from(-1.0)).re + 1.0 / 12.0).abs() < 1e-12);
        assert!((zeta(C64::from(0.5)).re + 1.460_354_508_809_586_8).abs() < 1e-13);
    }

    #[test]
    fn expm1_small_and_large() {
        let z = C64::new(1e-12, -2e-12);
        assert!((expm1(z) - z - z * z * 0.5).norm() < 1e-27);
        let z = C64::new(0.3, 1.1);
        assert!((expm1(z) - (z.exp() - 1.0)).norm() < 1e-15);
    }

    #[test]
    fn phase_ratio_limit() {
        assert!((phase_ratio(2.0, 0.0) - C64::from(2.0)).norm() < 1e-15);
        let x = 0.37;
        let direct = ((C64::i() * 1.5 * x).exp() - 1.0) / (C64::i() * x);
        assert!((phase_ratio(1.5, x) - direct).norm() < 1e-15);
    }
}
