//! Matrix-analytic primitives: primary matrix functions (powers, Gamma,
//! phase factors) and spectral validation of Hurst matrices.
//!
//! A primary function f(M) is evaluated from a triangular form M = Q T Q^{-1}
//! (complex Schur, or a user-supplied Jordan factorization). Each entry of
//! f(T) is a sum over increasing index chains of products of off-diagonal
//! entries times divided differences of f on the chain's eigenvalues. Divided
//! differences use the Newton table when the nodes are well separated and a
//! Cauchy contour integral otherwise, so repeated and nearly repeated
//! eigenvalues (Jordan blocks included) need no special casing.

use crate::error::{Error, Result};
use crate::special;
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::Serialize;
use std::f64::consts::PI;

pub type RMat = DMatrix<f64>;
pub type CMat = DMatrix<C64>;

/// Default cap on the eigenvector condition number of a Hurst matrix.
pub const DEFAULT_CONDITION_CAP: f64 = 1e8;
/// Entrywise tolerance for deciding H = I/2.
pub const HALF_IDENTITY_TOL: f64 = 1e-12;
/// Distance from the line Re z = 1/2 below which an eigenvalue counts as on it.
pub const HALF_LINE_TOL: f64 = 1e-10;

const SEPARATION: f64 = 0.1;
const CONTOUR_NODES: usize = 64;

/// Analyticity information about a scalar function, used to size contours.
#[derive(Clone, Copy, Debug)]
pub struct Analytic {
    /// Typical |f'/f|; contours shrink when f varies quickly.
    pub scale: f64,
    /// Radius of a disc around the nodes where f is known to be analytic.
    pub radius_cap: f64,
}

impl Analytic {
    pub const ENTIRE: Analytic = Analytic { scale: 1.0, radius_cap: f64::INFINITY };

    pub fn entire(scale: f64) -> Self {
        Analytic { scale: scale.abs().max(1e-300), radius_cap: f64::INFINITY }
    }
}

pub fn to_complex(m: &RMat) -> CMat {
    m.map(|v| C64::new(v, 0.0))
}

pub fn real_part(m: &CMat) -> RMat {
    m.map(|v| v.re)
}

fn is_diagonal(m: &CMat) -> bool {
    let n = m.nrows();
    (0..n).all(|i| (0..n).all(|j| i == j || m[(i, j)] == C64::new(0.0, 0.0)))
}

/// Divided difference f[z_0, ..., z_k].
fn divided_difference(f: &dyn Fn(C64) -> C64, nodes: &[C64], fvals: &[C64], hint: Analytic) -> C64 {
    let k = nodes.len();
    if k == 1 {
        return fvals[0];
    }
    let mut min_sep = f64::INFINITY;
    for i in 0..k {
        for j in i + 1..k {
            min_sep = min_sep.min((nodes[i] - nodes[j]).norm());
        }
    }
    if min_sep >= SEPARATION {
        let mut dd = fvals.to_vec();
        for level in 1..k {
            for i in (level..k).rev() {
                dd[i] = (dd[i] - dd[i - 1]) / (nodes[i] - nodes[i - level]);
            }
        }
        return dd[k - 1];
    }
    let center = nodes.iter().sum::<C64>() / k as f64;
    let spread = nodes.iter().map(|z| (z - center).norm()).fold(0.0, f64::max);
    let mut radius = (2.0 * spread).max((1.0 / hint.scale).min(0.5));
    let mut count = CONTOUR_NODES;
    if radius > 0.9 * hint.radius_cap {
        radius = 0.5 * (spread + hint.radius_cap);
        count = 4 * CONTOUR_NODES;
    }
    let mut acc = C64::new(0.0, 0.0);
    for m in 0..count {
        let theta = 2.0 * PI * (m as f64 + 0.5) / count as f64;
        let w = C64::from_polar(radius, theta);
        let zeta = center + w;
        let mut denom = C64::new(1.0, 0.0);
        for z in nodes {
            denom *= zeta - z;
        }
        acc += f(zeta) * w / denom;
    }
    acc / count as f64
}

/// f(T) for upper-triangular T via the chain-sum formula.
fn triangular_function(t: &CMat, f: &dyn Fn(C64) -> C64, hint: Analytic) -> CMat {
    let n = t.nrows();
    let lam: Vec<C64> = (0..n).map(|i| t[(i, i)]).collect();
    let fl: Vec<C64> = lam.iter().map(|&z| f(z)).collect();
    let mut out = CMat::zeros(n, n);
    for i in 0..n {
        out[(i, i)] = fl[i];
    }
    let mut nodes = Vec::with_capacity(n);
    let mut vals = Vec::with_capacity(n);
    let mut chain = Vec::with_capacity(n);
    for i in 0..n {
        for j in i + 1..n {
            let inner = j - i - 1;
            let mut sum = C64::new(0.0, 0.0);
            for mask in 0u64..(1u64 << inner) {
                chain.clear();
                chain.push(i);
                for b in 0..inner {
                    if mask & (1 << b) != 0 {
                        chain.push(i + 1 + b);
                    }
                }
                chain.push(j);
                let mut prod = C64::new(1.0, 0.0);
                for w in chain.windows(2) {
                    prod *= t[(w[0], w[1])];
                }
                if prod == C64::new(0.0, 0.0) {
                    continue;
                }
                nodes.clear();
                vals.clear();
                for &c in &chain {
                    nodes.push(lam[c]);
                    vals.push(fl[c]);
                }
                sum += prod * divided_difference(f, &nodes, &vals, hint);
            }
            out[(i, j)] = sum;
        }
    }
    out
}

/// Triangular factorization used to evaluate primary matrix functions.
#[derive(Clone, Debug)]
pub struct Spectral {
    form: Form,
}

#[derive(Clone, Debug)]
enum Form {
    Diagonal(Vec<C64>),
    Schur { q: CMat, t: CMat },
    /// M = P J P^{-1}; `t` is J in upper-triangular orientation, `transposed`
    /// records whether the user's J was lower triangular.
    Jordan { p: CMat, p_inv: CMat, t: CMat, transposed: bool },
}

impl Spectral {
    pub fn new(m: &CMat) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::InvalidInput("matrix must be square".into()));
        }
        if is_diagonal(m) {
            return Ok(Spectral { form: Form::Diagonal(m.diagonal().iter().copied().collect()) });
        }
        let n = m.nrows();
        let schur = nalgebra::Schur::try_new(m.clone(), 1e-15 * m.norm().max(1e-300), 100 * n * n)
            .ok_or_else(|| Error::InvalidInput("Schur iteration did not converge".into()))?;
        let (q, mut t) = schur.unpack();
        // Clean the strictly lower part, which is rounding noise.
        for i in 0..n {
            for j in 0..i {
                t[(i, j)] = C64::new(0.0, 0.0);
            }
        }
        Ok(Spectral { form: Form::Schur { q, t } })
    }

    pub fn from_real(m: &RMat) -> Result<Self> {
        Spectral::new(&to_complex(m))
    }

    /// Jordan input: M = P J P^{-1} with J upper or lower triangular.
    pub fn from_jordan(p: &CMat, j: &CMat) -> Result<Self> {
        let n = j.nrows();
        if !j.is_square() || p.nrows() != n || p.ncols() != n {
            return Err(Error::InvalidInput("Jordan factors must be square and conformant".into()));
        }
        let upper = (0..n).all(|r| (0..r).all(|c| j[(r, c)] == C64::new(0.0, 0.0)));
        let lower = (0..n).all(|r| (r + 1..n).all(|c| j[(r, c)] == C64::new(0.0, 0.0)));
        if !upper && !lower {
            return Err(Error::InvalidInput("Jordan matrix must be triangular".into()));
        }
        let p_inv = p.clone().try_inverse().ok_or_else(|| Error::InvalidInput("P is singular".into()))?;
        let (t, transposed) = if upper { (j.clone(), false) } else { (j.transpose(), true) };
        Ok(Spectral { form: Form::Jordan { p: p.clone(), p_inv, t, transposed } })
    }

    pub fn dim(&self) -> usize {
        match &self.form {
            Form::Diagonal(d) => d.len(),
            Form::Schur { t, .. } | Form::Jordan { t, .. } => t.nrows(),
        }
    }

    pub fn eigenvalues(&self) -> Vec<C64> {
        match &self.form {
            Form::Diagonal(d) => d.clone(),
            Form::Schur { t, .. } | Form::Jordan { t, .. } => t.diagonal().iter().copied().collect(),
        }
    }

    pub fn is_diagonal(&self) -> bool {
        matches!(self.form, Form::Diagonal(_))
    }

    /// Same factorization for M + shift*I.
    pub fn shifted(&self, shift: C64) -> Spectral {
        let form = match &self.form {
            Form::Diagonal(d) => Form::Diagonal(d.iter().map(|z| z + shift).collect()),
            Form::Schur { q, t } => {
                let mut t = t.clone();
                for i in 0..t.nrows() {
                    t[(i, i)] += shift;
                }
                Form::Schur { q: q.clone(), t }
            }
            Form::Jordan { p, p_inv, t, transposed } => {
                let mut t = t.clone();
                for i in 0..t.nrows() {
                    t[(i, i)] += shift;
                }
                Form::Jordan { p: p.clone(), p_inv: p_inv.clone(), t, transposed: *transposed }
            }
        };
        Spectral { form }
    }

    /// Same factorization for `factor * M`.
    pub fn scaled(&self, factor: C64) -> Spectral {
        let form = match &self.form {
            Form::Diagonal(d) => Form::Diagonal(d.iter().map(|z| z * factor).collect()),
            Form::Schur { q, t } => Form::Schur { q: q.clone(), t: t * factor },
            Form::Jordan { p, p_inv, t, transposed } => {
                Form::Jordan { p: p.clone(), p_inv: p_inv.clone(), t: t * factor, transposed: *transposed }
            }
        };
        Spectral { form }
    }

    /// Primary matrix function f(M).
    pub fn apply(&self, f: &dyn Fn(C64) -> C64, hint: Analytic) -> CMat {
        match &self.form {
            Form::Diagonal(d) => CMat::from_diagonal(&nalgebra::DVector::from_iterator(d.len(), d.iter().map(|&z| f(z)))),
            Form::Schur { q, t } => {
                let ft = triangular_function(t, f, hint);
                q * ft * q.adjoint()
            }
            Form::Jordan { p, p_inv, t, transposed } => {
                let ft = triangular_function(t, f, hint);
                let ft = if *transposed { ft.transpose() } else { ft };
                p * ft * p_inv
            }
        }
    }

    /// Condition number of a normalized eigenvector basis (infinite when defective).
    pub fn eigenvector_condition(&self) -> f64 {
        let t = match &self.form {
            Form::Diagonal(_) => return 1.0,
            Form::Schur { t, .. } => t,
            Form::Jordan { .. } => return f64::INFINITY,
        };
        let n = t.nrows();
        let scale = t.norm().max(1e-300);
        let mut v = CMat::zeros(n, n);
        for k in 0..n {
            let lam = t[(k, k)];
            v[(k, k)] = C64::new(1.0, 0.0);
            for i in (0..k).rev() {
                let mut s = C64::new(0.0, 0.0);
                for j in i + 1..=k {
                    s += t[(i, j)] * v[(j, k)];
                }
                let mut den = t[(i, i)] - lam;
                if den.norm() < f64::EPSILON * scale {
                    if s.norm() <= 1e3 * f64::EPSILON * scale {
                        v[(i, k)] = C64::new(0.0, 0.0);
                        continue;
                    }
                    den = C64::new(f64::EPSILON * scale, 0.0);
                }
                v[(i, k)] = -s / den;
            }
            let norm = v.column(k).norm();
            v.column_mut(k).scale_mut(1.0 / norm);
        }
        let sv = v.singular_values();
        let max = sv.iter().cloned().fold(0.0, f64::max);
        let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
        if min <= 0.0 || !min.is_finite() {
            f64::INFINITY
        } else {
            max / min
        }
    }

    /// c^M = exp(M log c), c > 0.
    pub fn power(&self, c: f64) -> CMat {
        let l = c.ln();
        self.apply(&|z| (z * l).exp(), Analytic::entire(l))
    }

    /// z^M = exp(M log z) with the principal logarithm, z off the negative axis.
    pub fn power_complex(&self, z: C64) -> CMat {
        let l = z.ln();
        self.apply(&|w| (w * l).exp(), Analytic::entire(l.norm()))
    }

    /// a^M - b^M for a, b > 0, computed as b^M expm1(M log(a/b)) when a ~ b.
    pub fn power_difference(&self, a: f64, b: f64) -> CMat {
        self.power_difference_with(a, b, a - b)
    }

    /// a^M - b^M given the exact difference a - b, which may be far more
    /// accurate than the rounded a and b when both are large.
    pub fn power_difference_with(&self, a: f64, b: f64, diff: f64) -> CMat {
        if diff.abs() > 0.5 * a.max(b) {
            return self.power(a) - self.power(b);
        }
        let lb = b.ln();
        let ratio = (diff / b).ln_1p();
        self.apply(&|z| (z * lb).exp() * special::expm1(z * ratio), Analytic::entire(lb.abs().max(ratio.abs())))
    }
}

/// Eigenstructure of a Hurst matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Re eig in (0,1) and none on the line Re = 1/2.
    General,
    /// H = I/2.
    HalfIdentity,
    /// Some eigenvalue has real part 1/2 while H != I/2.
    CrossesHalfLine,
    /// Every eigenvalue has real part above 1/2 (a sub-case of general).
    Upper,
}

impl Regime {
    /// Whether the moving-average kernel with (M+, M-) is defined.
    pub fn supports_general_kernel(self) -> bool {
        matches!(self, Regime::General | Regime::Upper)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectralReport {
    pub eigenvalues: Vec<(f64, f64)>,
    pub regime: Regime,
    pub condition_number: f64,
}

impl SpectralReport {
    pub fn eigenvalues_complex(&self) -> Vec<C64> {
        self.eigenvalues.iter().map(|&(re, im)| C64::new(re, im)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Structure {
    Diagonalizable,
    Jordan { blocks: Vec<usize> },
}

fn is_half_identity(h: &RMat) -> bool {
    let n = h.nrows();
    (0..n).all(|i| (0..n).all(|j| (h[(i, j)] - if i == j { 0.5 } else { 0.0 }).abs() <= HALF_IDENTITY_TOL))
}

fn classify(eigs: &[C64], h: &RMat) -> Result<Regime> {
    for &z in eigs {
        if !(z.re > 0.0 && z.re < 1.0) {
            return Err(Error::EigenvalueOutOfRange(z));
        }
    }
    if is_half_identity(h) {
        return Ok(Regime::HalfIdentity);
    }
    if eigs.iter().any(|z| (z.re - 0.5).abs() <= HALF_LINE_TOL) {
        return Ok(Regime::CrossesHalfLine);
    }
    if eigs.iter().all(|z| z.re > 0.5) {
        Ok(Regime::Upper)
    } else {
        Ok(Regime::General)
    }
}

/// Spectral validation of a Hurst matrix with the default condition cap.
pub fn validate_hurst(h: &RMat) -> Result<SpectralReport> {
    validate_hurst_with_cap(h, DEFAULT_CONDITION_CAP)
}

pub fn validate_hurst_with_cap(h: &RMat, cap: f64) -> Result<SpectralReport> {
    let spec = Spectral::from_real(h)?;
    let eigs = spec.eigenvalues();
    let regime = classify(&eigs, h)?;
    let cond = spec.eigenvector_condition();
    if cond > cap {
        return Err(Error::NonDiagonalizableWithoutJordanInput(cond));
    }
    Ok(SpectralReport { eigenvalues: eigs.iter().map(|z| (z.re, z.im)).collect(), regime, condition_number: cond })
}

/// A validated Hurst matrix H with D = H - I/2 and a cached factorization of D.
#[derive(Clone, Debug)]
pub struct HurstSpec {
    h: RMat,
    d: RMat,
    report: SpectralReport,
    structure: Structure,
    spec_d: Spectral,
    real_diag: Option<Vec<f64>>,
}

impl HurstSpec {
    pub fn new(h: RMat) -> Result<Self> {
        Self::with_cap(h, DEFAULT_CONDITION_CAP)
    }

    pub fn scalar(h: f64) -> Result<Self> {
        Self::new(RMat::from_element(1, 1, h))
    }

    pub fn diagonal(hs: &[f64]) -> Result<Self> {
        Self::new(RMat::from_diagonal(&nalgebra::DVector::from_column_slice(hs)))
    }

    pub fn with_cap(h: RMat, cap: f64) -> Result<Self> {
        if !h.is_square() || h.nrows() == 0 {
            return Err(Error::InvalidInput("Hurst matrix must be square and non-empty".into()));
        }
        let report = validate_hurst_with_cap(&h, cap)?;
        let p = h.nrows();
        let d = &h - RMat::identity(p, p) * 0.5;
        let spec_d = Spectral::from_real(&d)?;
        let real_diag = if spec_d.is_diagonal() { Some(d.diagonal().iter().copied().collect()) } else { None };
        Ok(HurstSpec { h, d, report, structure: Structure::Diagonalizable, spec_d, real_diag })
    }

    /// H = P J P^{-1} from an explicit Jordan factorization (J triangular with the
    /// eigenvalues of H on its diagonal).
    pub fn from_jordan(p: RMat, j: RMat) -> Result<Self> {
        let n = j.nrows();
        let spec_h = Spectral::from_jordan(&to_complex(&p), &to_complex(&j))?;
        let p_inv = p.clone().try_inverse().ok_or_else(|| Error::InvalidInput("P is singular".into()))?;
        let h = &p * &j * p_inv;
        let eigs = spec_h.eigenvalues();
        let regime = classify(&eigs, &h)?;
        let spec_d = spec_h.shifted(C64::new(-0.5, 0.0));
        let mut blocks = Vec::new();
        let mut size = 1;
        for i in 1..n {
            let linked = j[(i, i - 1)] != 0.0 || j[(i - 1, i)] != 0.0;
            if linked {
                size += 1;
            } else {
                blocks.push(size);
                size = 1;
            }
        }
        blocks.push(size);
        let d = &h - RMat::identity(n, n) * 0.5;
        let report = SpectralReport {
            eigenvalues: eigs.iter().map(|z| (z.re, z.im)).collect(),
            regime,
            condition_number: f64::INFINITY,
        };
        Ok(HurstSpec { h, d, report, structure: Structure::Jordan { blocks }, spec_d, real_diag: None })
    }

    pub fn dim(&self) -> usize {
        self.h.nrows()
    }
    pub fn h(&self) -> &RMat {
        &self.h
    }
    pub fn d(&self) -> &RMat {
        &self.d
    }
    pub fn report(&self) -> &SpectralReport {
        &self.report
    }
    pub fn regime(&self) -> Regime {
        self.report.regime
    }
    pub fn structure(&self) -> &Structure {
        &self.structure
    }
    pub fn spectral_d(&self) -> &Spectral {
        &self.spec_d
    }

    /// Real parts of the eigenvalues of H.
    pub fn eig_real_parts(&self) -> Vec<f64> {
        self.report.eigenvalues.iter().map(|e| e.0).collect()
    }

    /// Largest real part of an eigenvalue of D.
    pub fn d_max_re(&self) -> f64 {
        self.eig_real_parts().into_iter().fold(f64::NEG_INFINITY, f64::max) - 0.5
    }

    /// Smallest real part of an eigenvalue of D.
    pub fn d_min_re(&self) -> f64 {
        self.eig_real_parts().into_iter().fold(f64::INFINITY, f64::min) - 0.5
    }

    /// Diagonal of D when D is diagonal.
    pub fn diagonal_d(&self) -> Option<&[f64]> {
        self.real_diag.as_deref()
    }

    /// Whether D has a Jordan block (log factors appear in powers).
    pub fn has_log_terms(&self) -> bool {
        matches!(&self.structure, Structure::Jordan { blocks } if blocks.iter().any(|&b| b > 1))
    }

    /// r^D for r > 0.
    pub fn pow_d(&self, r: f64) -> RMat {
        if let Some(diag) = &self.real_diag {
            return RMat::from_diagonal(&nalgebra::DVector::from_iterator(diag.len(), diag.iter().map(|&d| r.powf(d))));
        }
        real_part(&self.spec_d.power(r))
    }

    /// a^D - b^D for a, b > 0 without cancellation when a ~ b.
    pub fn pow_d_difference(&self, a: f64, b: f64) -> RMat {
        self.pow_d_difference_with(a, b, a - b)
    }

    /// a^D - b^D given the exact difference a - b.
    pub fn pow_d_difference_with(&self, a: f64, b: f64, diff: f64) -> RMat {
        if let Some(diag) = &self.real_diag {
            return RMat::from_diagonal(&nalgebra::DVector::from_iterator(
                diag.len(),
                diag.iter().map(|&d| {
                    if diff.abs() > 0.5 * a.max(b) {
                        a.powf(d) - b.powf(d)
                    } else {
                        b.powf(d) * (d * (diff / b).ln_1p()).exp_m1()
                    }
                }),
            ));
        }
        real_part(&self.spec_d.power_difference_with(a, b, diff))
    }

    /// z^D for complex z off the negative real axis.
    pub fn pow_d_complex(&self, z: C64) -> CMat {
        self.spec_d.power_complex(z)
    }

    /// c^H for c > 0.
    pub fn pow_h(&self, c: f64) -> RMat {
        self.pow_d(c) * c.sqrt()
    }

    /// Truncated signed power t_+^D (side plus) or (-t)_+^D = t_-^D (side minus), 0^D = 0.
    pub fn truncated_power(&self, t: f64, side: Side) -> RMat {
        let p = self.dim();
        match side {
            Side::Plus if t > 0.0 => self.pow_d(t),
            Side::Minus if t < 0.0 => self.pow_d(-t),
            _ => RMat::zeros(p, p),
        }
    }

    /// Primary function of D.
    pub fn fun_d(&self, f: &dyn Fn(C64) -> C64, hint: Analytic) -> CMat {
        self.spec_d.apply(f, hint)
    }
}

/// Pivoted Cholesky factor L (n x r) with L L^T = M for a symmetric PSD matrix.
/// Pivots below `1e-14 * max diag` are treated as zero; a negative pivot below
/// `-1e-10 * max diag` is reported as [`Error::NotPsd`].
pub fn psd_factor(m: &RMat) -> Result<RMat> {
    let n = m.nrows();
    let scale = m.diagonal().iter().fold(0.0_f64, |a, &b| a.max(b.abs()));
    if n == 0 || scale == 0.0 {
        return Ok(RMat::zeros(n, 0));
    }
    let mut a = (m + m.transpose()) * 0.5;
    let mut perm: Vec<usize> = (0..n).collect();
    let mut l = RMat::zeros(n, n);
    let mut rank = 0;
    for k in 0..n {
        let (mut best, mut piv) = (f64::NEG_INFINITY, k);
        for i in k..n {
            let v = a[(perm[i], perm[i])];
            if v > best {
                best = v;
                piv = i;
            }
        }
        if best < -1e-10 * scale {
            return Err(Error::NotPsd(best));
        }
        if best <= 1e-14 * scale {
            break;
        }
        perm.swap(k, piv);
        let pk = perm[k];
        let root = best.sqrt();
        l[(pk, k)] = root;
        for i in k + 1..n {
            let pi = perm[i];
            l[(pi, k)] = a[(pi, pk)] / root;
        }
        for i in k + 1..n {
            let pi = perm[i];
            for j in k + 1..=i {
                let pj = perm[j];
                let v = a[(pi, pj)] - l[(pi, k)] * l[(pj, k)];
                a[(pi, pj)] = v;
                a[(pj, pi)] = v;
            }
        }
        rank += 1;
    }
    // Residual check catches indefinite input hidden below the pivot threshold.
    let f = l.columns(0, rank).into_owned();
    let resid = (&f * f.transpose() - (m + m.transpose()) * 0.5).amax();
    if resid > 1e-8 * scale.max(1e-300) {
        let min_eig = nalgebra::SymmetricEigen::new((m + m.transpose()) * 0.5).eigenvalues.min();
        if min_eig < -1e-10 * scale {
            return Err(Error::NotPsd(min_eig));
        }
    }
    Ok(f)
}

/// Cached factorization of a real matrix M for repeated evaluation of r^M.
#[derive(Clone, Debug)]
pub struct RealPower {
    m: RMat,
    spectral: Spectral,
    real_diag: Option<Vec<f64>>,
}

impl RealPower {
    pub fn new(m: &RMat) -> Result<Self> {
        let spectral = Spectral::from_real(m)?;
        if spectral.eigenvector_condition() > DEFAULT_CONDITION_CAP {
            return Err(Error::NonDiagonalizableWithoutJordanInput(spectral.eigenvector_condition()));
        }
        let real_diag = if spectral.is_diagonal() { Some(m.diagonal().iter().copied().collect()) } else { None };
        Ok(RealPower { m: m.clone(), spectral, real_diag })
    }

    pub fn matrix(&self) -> &RMat {
        &self.m
    }

    pub fn eigenvalues(&self) -> Vec<C64> {
        self.spectral.eigenvalues()
    }

    /// Real parts of the eigenvalues, ascending.
    pub fn eig_real_parts(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.eigenvalues().iter().map(|z| z.re).collect();
        v.sort_by(f64::total_cmp);
        v
    }

    /// r^M for r > 0.
    pub fn pow(&self, r: f64) -> RMat {
        if let Some(diag) = &self.real_diag {
            return RMat::from_diagonal(&nalgebra::DVector::from_iterator(diag.len(), diag.iter().map(|&d| r.powf(d))));
        }
        real_part(&self.spectral.power(r))
    }

    /// r^M v without forming the matrix when M is diagonal.
    pub fn pow_apply(&self, r: f64, v: &nalgebra::DVector<f64>) -> nalgebra::DVector<f64> {
        if let Some(diag) = &self.real_diag {
            return nalgebra::DVector::from_iterator(v.len(), diag.iter().zip(v.iter()).map(|(&d, &x)| r.powf(d) * x));
        }
        self.pow(r) * v
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Plus,
    Minus,
}

/// exp((log c) M) for real M.
pub fn matrix_power(m: &RMat, c: f64) -> Result<RMat> {
    Ok(real_part(&matrix_power_complex(&to_complex(m), c)?))
}

/// exp((log c) M) for complex M.
pub fn matrix_power_complex(m: &CMat, c: f64) -> Result<CMat> {
    if !(c > 0.0) {
        return Err(Error::NonPositiveBase(c));
    }
    if c == 1.0 {
        return Ok(CMat::identity(m.nrows(), m.ncols()));
    }
    Ok(Spectral::new(m)?.power(c))
}

/// t_+^D (plus) or t_-^D (minus) with the 0^D = 0 convention.
pub fn truncated_matrix_power(t: f64, d: &RMat, side: Side) -> Result<RMat> {
    let p = d.nrows();
    let base = match side {
        Side::Plus if t > 0.0 => t,
        Side::Minus if t < 0.0 => -t,
        _ => return Ok(RMat::zeros(p, p)),
    };
    matrix_power(d, base)
}

/// Primary matrix function of an arbitrary complex matrix.
pub fn matrix_function(m: &CMat, f: &dyn Fn(C64) -> C64, hint: Analytic) -> Result<CMat> {
    Ok(Spectral::new(m)?.apply(f, hint))
}

fn gamma_on(spec: &Spectral) -> Result<CMat> {
    let eigs = spec.eigenvalues();
    let mut cap = f64::INFINITY;
    for &z in &eigs {
        let dist = special::gamma_pole_distance(z);
        if dist < 1e-10 {
            return Err(Error::PoleOfGamma(z));
        }
        cap = cap.min(dist);
    }
    Ok(spec.apply(&special::gamma, Analytic { scale: 1.0, radius_cap: cap }))
}

/// Primary matrix Gamma function.
pub fn matrix_gamma(m: &CMat) -> Result<CMat> {
    gamma_on(&Spectral::new(m)?)
}

/// Gamma(D + I) from a cached factorization of D.
pub fn gamma_d_plus_identity(h: &HurstSpec) -> Result<CMat> {
    gamma_on(&h.spectral_d().shifted(C64::new(1.0, 0.0)))
}

/// exp(s (-i pi / 2) D) for s = +1 or -1.
pub fn matrix_phase(d: &RMat, s: f64) -> CMat {
    let spec = Spectral::from_real(d).expect("square matrix");
    phase_on(&spec, s)
}

fn phase_on(spec: &Spectral, s: f64) -> CMat {
    let w = C64::new(0.0, -s.signum() * PI / 2.0);
    spec.apply(&|z| (w * z).exp(), Analytic::entire(PI / 2.0))
}

/// Phase factor from a cached factorization of D.
pub fn phase_of(h: &HurstSpec, s: f64) -> CMat {
    phase_on(h.spectral_d(), s)
}

/// Symmetric positive semidefinite square root via the symmetric eigendecomposition.
pub fn spd_power(m: &RMat, power: f64) -> Result<RMat> {
    let sym = (m + m.transpose()) * 0.5;
    let eig = nalgebra::SymmetricEigen::new(sym);
    let scale = eig.eigenvalues.iter().fold(0.0_f64, |a, v| a.max(v.abs())).max(1e-300);
    let mut vals = eig.eigenvalues.clone();
    for v in vals.iter_mut() {
        if *v < -1e-10 * scale {
            return Err(Error::NotPsd(*v));
        }
        if *v <= 0.0 {
            if power < 0.0 {
                return Err(Error::RankDeficientMoment);
            }
            *v = 0.0;
        } else {
            *v = v.powf(power);
        }
    }
    Ok(&eig.eigenvectors * RMat::from_diagonal(&vals) * eig.eigenvectors.transpose())
}
