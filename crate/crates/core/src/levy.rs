//! Lévy measures with finite second moment on R^q: discrete atoms, Gaussian jump
//! laws, tempered operator-stable measures in polar form, and finite sums of these.
//!
//! A measure on C^p is handled as a measure on R^{2p} through z = (Re z, Im z),
//! see [`ComplexLevyView`].

use crate::error::{Error, Result};
use crate::matfun::{self, RMat, RealPower};
use crate::quad::{self, Endpoint, QuadSpec};
use nalgebra::DVector;
use num_complex::Complex64 as C64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

pub type RVec = DVector<f64>;

/// Location tolerance (relative to max(1, |z|)) when matching atoms.
pub const LOCATION_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct Atom {
    pub z: RVec,
    pub w: f64,
}

/// Radial tempering function q(r) with q(0+) = 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Tempering {
    /// q(r) = 1{r <= r0}
    Indicator { r0: f64 },
    /// q(r) = exp(-c r)
    Exponential { c: f64 },
}

impl Tempering {
    pub fn q(&self, r: f64) -> f64 {
        match *self {
            Tempering::Indicator { r0 } => {
                if r <= r0 {
                    1.0
                } else {
                    0.0
                }
            }
            Tempering::Exponential { c } => (-c * r).exp(),
        }
    }

    /// Radius beyond which q is treated as zero.
    fn upper(&self) -> f64 {
        match *self {
            Tempering::Indicator { r0 } => r0,
            Tempering::Exponential { c } => 80.0 / c,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Tempering::Indicator { r0 } => r0 > 0.0 && r0.is_finite(),
            Tempering::Exponential { c } => c > 0.0 && c.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::ValidationError(format!("invalid tempering {self:?}")))
        }
    }
}

/// mu(A) = sum_theta lambda_theta ∫_0^inf 1_A(r^B theta) q(r) dr / r^2.
#[derive(Clone, Debug)]
pub struct TemperedOpStable {
    b: RealPower,
    atoms: Vec<Atom>,
    tempering: Tempering,
}

impl TemperedOpStable {
    pub fn b(&self) -> &RMat {
        self.b.matrix()
    }
    pub fn sphere_atoms(&self) -> &[Atom] {
        &self.atoms
    }
    pub fn tempering(&self) -> Tempering {
        self.tempering
    }
    pub fn power(&self) -> &RealPower {
        &self.b
    }

    fn b_min(&self) -> f64 {
        self.b.eig_real_parts()[0]
    }

    /// Σ_theta lambda ∫_lo^hi r^B theta theta^T r^{B^T} q(r) dr / r^2.
    fn radial_second_moment(&self, lo: f64, hi: f64) -> Result<RMat> {
        let q = self.b.matrix().nrows();
        let hi = hi.min(self.tempering.upper());
        if hi <= lo {
            return Ok(RMat::zeros(q, q));
        }
        let ea = if lo == 0.0 { Endpoint::Singular(2.0 * self.b_min() - 2.0) } else { Endpoint::Regular };
        let spec = QuadSpec::default();
        let mut total = RMat::zeros(q, q);
        for a in &self.atoms {
            let r = quad::integrate_interval(
                |r, out: &mut [f64]| {
                    let v = self.b.pow_apply(r, &a.z);
                    let m = &v * v.transpose() * (self.tempering.q(r) / (r * r));
                    out.copy_from_slice(m.as_slice());
                },
                lo,
                hi,
                ea,
                Endpoint::Regular,
                q * q,
                &spec,
            )
            .map_err(|e| Error::RadialQuadratureDiverged(e.to_string()))?;
            total += RMat::from_column_slice(q, q, &r.value) * a.w;
        }
        Ok(total)
    }

    fn radial_mean(&self, lo: f64) -> Result<RVec> {
        let q = self.b.matrix().nrows();
        let hi = self.tempering.upper();
        if lo <= 0.0 {
            return Err(Error::FirstMomentDiverged);
        }
        if hi <= lo {
            return Ok(RVec::zeros(q));
        }
        let mut total = RVec::zeros(q);
        for a in &self.atoms {
            let r = quad::integrate_interval(
                |r, out: &mut [f64]| {
                    let v = self.b.pow_apply(r, &a.z) * (self.tempering.q(r) / (r * r));
                    out.copy_from_slice(v.as_slice());
                },
                lo,
                hi,
                Endpoint::Regular,
                Endpoint::Regular,
                q,
                &QuadSpec::default(),
            )
            .map_err(|e| Error::RadialQuadratureDiverged(e.to_string()))?;
            total += RVec::from_column_slice(&r.value) * a.w;
        }
        Ok(total)
    }

    /// Mass of the radial part on [eps, inf).
    fn radial_activity(&self, eps: f64) -> Result<f64> {
        if eps <= 0.0 {
            return Err(Error::TruncationRequired);
        }
        let weight: f64 = self.atoms.iter().map(|a| a.w).sum();
        let radial = match self.tempering {
            Tempering::Indicator { r0 } => {
                if eps >= r0 {
                    0.0
                } else {
                    1.0 / eps - 1.0 / r0
                }
            }
            Tempering::Exponential { c } => quad::integrate_scalar(
                |r| (-c * r).exp() / (r * r),
                eps,
                eps + 80.0 / c,
                Endpoint::Regular,
                Endpoint::Regular,
                &QuadSpec::default(),
            )?,
        };
        Ok(weight * radial)
    }
}

#[derive(Clone, Debug)]
pub enum LevyKind {
    Discrete(Vec<Atom>),
    GaussianJumps { sigma: RMat, rate: f64 },
    TemperedOpStable(TemperedOpStable),
    /// Sum of measures on the same space.
    Mixture(Vec<LevyMeasure>),
}

/// A Lévy measure on R^q with finite second moment and no atom at the origin.
#[derive(Clone, Debug)]
pub struct LevyMeasure {
    dim: usize,
    kind: LevyKind,
}

fn check_vec(z: &RVec, dim: usize) -> Result<()> {
    if z.len() != dim {
        return Err(Error::InvalidInput(format!("expected a {dim}-vector, got length {}", z.len())));
    }
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite atom".into()));
    }
    Ok(())
}

impl LevyMeasure {
    pub fn discrete(dim: usize, atoms: Vec<(Vec<f64>, f64)>) -> Result<Self> {
        let atoms = atoms.into_iter().map(|(z, w)| Atom { z: RVec::from_vec(z), w }).collect();
        Self::discrete_atoms(dim, atoms)
    }

    pub fn discrete_atoms(dim: usize, atoms: Vec<Atom>) -> Result<Self> {
        for a in &atoms {
            check_vec(&a.z, dim)?;
            if a.z.iter().all(|v| *v == 0.0) {
                return Err(Error::ValidationError("Lévy measure may not charge the origin".into()));
            }
            if !(a.w > 0.0 && a.w.is_finite()) {
                return Err(Error::ValidationError(format!("atom weight must be positive, got {}", a.w)));
            }
        }
        Ok(LevyMeasure { dim, kind: LevyKind::Discrete(atoms) })
    }

    /// rate * N(0, sigma).
    pub fn gaussian(sigma: RMat, rate: f64) -> Result<Self> {
        let dim = sigma.nrows();
        if !sigma.is_square() || (&sigma - sigma.transpose()).amax() > 1e-12 * sigma.amax().max(1.0) {
            return Err(Error::ValidationError("Gaussian jump covariance must be symmetric".into()));
        }
        matfun::psd_factor(&sigma)?;
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::ValidationError(format!("rate must be positive, got {rate}")));
        }
        Ok(LevyMeasure { dim, kind: LevyKind::GaussianJumps { sigma, rate } })
    }

    pub fn tempered_op_stable(b: RMat, atoms: Vec<(Vec<f64>, f64)>, tempering: Tempering) -> Result<Self> {
        let dim = b.nrows();
        if !b.is_square() {
            return Err(Error::InvalidInput("B must be square".into()));
        }
        tempering.validate()?;
        let power = RealPower::new(&b)?;
        for z in power.eigenvalues() {
            if !(z.re > 0.5 && z.re < 1.0) {
                return Err(Error::ValidationError(format!(
                    "B has eigenvalue {}{:+}i; real parts must lie in (1/2, 1)",
                    z.re, z.im
                )));
            }
        }
        let atoms: Vec<Atom> = atoms.into_iter().map(|(z, w)| Atom { z: RVec::from_vec(z), w }).collect();
        for a in &atoms {
            check_vec(&a.z, dim)?;
            if a.z.norm() == 0.0 || !(a.w > 0.0) {
                return Err(Error::ValidationError("sphere atoms must be nonzero with positive weight".into()));
            }
        }
        let m = LevyMeasure { dim, kind: LevyKind::TemperedOpStable(TemperedOpStable { b: power, atoms, tempering }) };
        let second = m.second_moment()?;
        if second.iter().any(|v| !v.is_finite()) {
            return Err(Error::RadialQuadratureDiverged("non-finite second moment".into()));
        }
        Ok(m)
    }

    pub fn mixture(parts: Vec<LevyMeasure>) -> Result<Self> {
        let dim = parts.first().map(|p| p.dim).ok_or_else(|| Error::InvalidInput("empty mixture".into()))?;
        if parts.iter().any(|p| p.dim != dim) {
            return Err(Error::InvalidInput("mixture parts differ in dimension".into()));
        }
        Ok(LevyMeasure { dim, kind: LevyKind::Mixture(parts) }.normalize_mixture())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn kind(&self) -> &LevyKind {
        &self.kind
    }

    /// ∫ z z^T mu(dz).
    pub fn second_moment(&self) -> Result<RMat> {
        let q = self.dim;
        Ok(match &self.kind {
            LevyKind::Discrete(atoms) => atoms.iter().fold(RMat::zeros(q, q), |acc, a| acc + &a.z * a.z.transpose() * a.w),
            LevyKind::GaussianJumps { sigma, rate } => sigma * *rate,
            LevyKind::TemperedOpStable(t) => t.radial_second_moment(0.0, f64::INFINITY)?,
            LevyKind::Mixture(parts) => {
                let mut acc = RMat::zeros(q, q);
                for p in parts {
                    acc += p.second_moment()?;
                }
                acc
            }
        })
    }

    /// Second moment of the jumps removed by a radial truncation at `eps`
    /// (nonzero only for tempered operator-stable parts).
    pub fn truncated_second_moment(&self, eps: f64) -> Result<RMat> {
        let q = self.dim;
        Ok(match &self.kind {
            LevyKind::TemperedOpStable(t) if eps > 0.0 => t.radial_second_moment(0.0, eps)?,
            LevyKind::Mixture(parts) => {
                let mut acc = RMat::zeros(q, q);
                for p in parts {
                    acc += p.truncated_second_moment(eps)?;
                }
                acc
            }
            _ => RMat::zeros(q, q),
        })
    }

    /// ∫ z mu(dz).
    pub fn mean_jump(&self) -> Result<RVec> {
        self.kept_mean_jump(0.0)
    }

    /// ∫ z mu(dz) over the jumps kept after truncation at `eps`.
    pub fn kept_mean_jump(&self, eps: f64) -> Result<RVec> {
        let q = self.dim;
        Ok(match &self.kind {
            LevyKind::Discrete(atoms) => atoms.iter().fold(RVec::zeros(q), |acc, a| acc + &a.z * a.w),
            LevyKind::GaussianJumps { .. } => RVec::zeros(q),
            LevyKind::TemperedOpStable(t) => t.radial_mean(eps)?,
            LevyKind::Mixture(parts) => {
                let mut acc = RVec::zeros(q);
                for p in parts {
                    acc += p.kept_mean_jump(eps)?;
                }
                acc
            }
        })
    }

    /// Total mass of the jumps kept after truncation at `eps`.
    pub fn activity(&self, eps: f64) -> Result<f64> {
        Ok(match &self.kind {
            LevyKind::Discrete(atoms) => atoms.iter().map(|a| a.w).sum(),
            LevyKind::GaussianJumps { rate, .. } => *rate,
            LevyKind::TemperedOpStable(t) => t.radial_activity(eps)?,
            LevyKind::Mixture(parts) => {
                let mut acc = 0.0;
                for p in parts {
                    acc += p.activity(eps)?;
                }
                acc
            }
        })
    }

    /// Whether the measure needs a small-jump truncation to have finite activity.
    pub fn has_infinite_activity(&self) -> bool {
        match &self.kind {
            LevyKind::TemperedOpStable(_) => true,
            LevyKind::Mixture(parts) => parts.iter().any(|p| p.has_infinite_activity()),
            _ => false,
        }
    }

    /// psi(u) = ∫ (e^{i<u,z>} - 1 - i<u,z>) mu(dz).
    pub fn levy_symbol(&self, u: &RVec) -> Result<C64> {
        check_vec(u, self.dim)?;
        Ok(match &self.kind {
            LevyKind::Discrete(atoms) => atoms.iter().map(|a| compensated_exp(u.dot(&a.z)) * a.w).sum(),
            LevyKind::GaussianJumps { sigma, rate } => {
                let v = (u.transpose() * sigma * u)[(0, 0)];
                C64::from(*rate * (-0.5 * v).exp_m1())
            }
            LevyKind::TemperedOpStable(t) => {
                let mut total = C64::new(0.0, 0.0);
                for a in &t.atoms {
                    let r = quad::integrate_interval(
                        |r, out: &mut [f64]| {
                            let x = u.dot(&t.b.pow_apply(r, &a.z));
                            let v = compensated_exp(x) * (t.tempering.q(r) / (r * r));
                            out[0] = v.re;
                            out[1] = v.im;
                        },
                        0.0,
                        t.tempering.upper(),
                        Endpoint::Singular(2.0 * t.b_min() - 2.0),
                        Endpoint::Regular,
                        2,
                        &QuadSpec::default(),
                    )
                    .map_err(|e| Error::RadialQuadratureDiverged(e.to_string()))?;
                    total += C64::new(r.value[0], r.value[1]) * a.w;
                }
                total
            }
            LevyKind::Mixture(parts) => {
                let mut acc = C64::new(0.0, 0.0);
                for p in parts {
                    acc += p.levy_symbol(u)?;
                }
                acc
            }
        })
    }

    /// Image measure under z -> T z.
    pub fn pushforward(&self, t: &RMat) -> Result<Self> {
        if t.nrows() != self.dim || t.ncols() != self.dim {
            return Err(Error::InvalidInput("pushforward map has the wrong shape".into()));
        }
        let kind = match &self.kind {
            LevyKind::Discrete(atoms) => {
                LevyKind::Discrete(atoms.iter().map(|a| Atom { z: t * &a.z, w: a.w }).collect())
            }
            LevyKind::GaussianJumps { sigma, rate } => {
                let s = t * sigma * t.transpose();
                LevyKind::GaussianJumps { sigma: (&s + s.transpose()) * 0.5, rate: *rate }
            }
            LevyKind::TemperedOpStable(tos) => {
                let b = tos.b.matrix();
                let comm = (t * b - b * t).amax();
                if comm > 1e-12 * (t.amax() * b.amax()).max(1e-300) {
                    return Err(Error::UnsupportedPushforward(format!(
                        "map does not commute with B (commutator {comm:.3e})"
                    )));
                }
                // T r^B theta = r^B T theta; maps sending theta to 0 drop the atom.
                let atoms =
                    tos.atoms.iter().map(|a| Atom { z: t * &a.z, w: a.w }).filter(|a| a.z.norm() > 0.0).collect();
                LevyKind::TemperedOpStable(TemperedOpStable { b: tos.b.clone(), atoms, tempering: tos.tempering })
            }
            LevyKind::Mixture(parts) => {
                LevyKind::Mixture(parts.iter().map(|p| p.pushforward(t)).collect::<Result<_>>()?)
            }
        };
        let kind = match kind {
            LevyKind::Discrete(atoms) => LevyKind::Discrete(atoms.into_iter().filter(|a| a.z.norm() > 0.0).collect()),
            k => k,
        };
        Ok(LevyMeasure { dim: self.dim, kind })
    }

    /// (mu + mu∘T^{-1}) / 2 for an involution T, with identical atoms and
    /// identical Gaussian components merged so the operation is idempotent.
    pub fn symmetrize(&self, t: &RMat) -> Result<Self> {
        let image = self.pushforward(t)?;
        let half = |m: &LevyMeasure| m.scaled(0.5);
        let sum = LevyMeasure { dim: self.dim, kind: LevyKind::Mixture(vec![half(self), half(&image)]) };
        Ok(sum.normalize_mixture())
    }

    /// c * mu.
    pub fn scaled(&self, c: f64) -> Self {
        let kind = match &self.kind {
            LevyKind::Discrete(atoms) => LevyKind::Discrete(atoms.iter().map(|a| Atom { z: a.z.clone(), w: a.w * c }).collect()),
            LevyKind::GaussianJumps { sigma, rate } => LevyKind::GaussianJumps { sigma: sigma.clone(), rate: rate * c },
            LevyKind::TemperedOpStable(t) => LevyKind::TemperedOpStable(TemperedOpStable {
                b: t.b.clone(),
                atoms: t.atoms.iter().map(|a| Atom { z: a.z.clone(), w: a.w * c }).collect(),
                tempering: t.tempering,
            }),
            LevyKind::Mixture(parts) => LevyKind::Mixture(parts.iter().map(|p| p.scaled(c)).collect()),
        };
        LevyMeasure { dim: self.dim, kind }
    }

    /// Flattens nested mixtures, merges discrete parts and identical atoms,
    /// Gaussian parts with equal covariance, and tempered parts with equal B and
    /// tempering. A single remaining part is returned unwrapped.
    fn normalize_mixture(self) -> Self {
        let dim = self.dim;
        let mut flat = Vec::new();
        fn flatten(m: LevyMeasure, out: &mut Vec<LevyMeasure>) {
            match m.kind {
                LevyKind::Mixture(parts) => parts.into_iter().for_each(|p| flatten(p, out)),
                _ => out.push(m),
            }
        }
        flatten(self, &mut flat);
        let mut atoms: Vec<Atom> = Vec::new();
        let mut has_discrete = false;
        let mut gauss: Vec<(RMat, f64)> = Vec::new();
        let mut tos: Vec<TemperedOpStable> = Vec::new();
        for m in flat {
            match m.kind {
                LevyKind::Discrete(a) => {
                    has_discrete = true;
                    atoms.extend(a)
                }
                LevyKind::GaussianJumps { sigma, rate } => match gauss.iter_mut().find(|(s, _)| *s == sigma) {
                    Some(g) => g.1 += rate,
                    None => gauss.push((sigma, rate)),
                },
                LevyKind::TemperedOpStable(t) => {
                    match tos.iter_mut().find(|u| u.b.matrix() == t.b.matrix() && u.tempering == t.tempering) {
                        Some(u) => u.atoms.extend(t.atoms),
                        None => tos.push(t),
                    }
                }
                LevyKind::Mixture(_) => unreachable!("flattened"),
            }
        }
        for t in tos.iter_mut() {
            t.atoms = merge_atoms(std::mem::take(&mut t.atoms));
        }
        let mut parts: Vec<LevyMeasure> = Vec::new();
        if has_discrete {
            parts.push(LevyMeasure { dim, kind: LevyKind::Discrete(merge_atoms(atoms)) });
        }
        parts.extend(gauss.into_iter().map(|(sigma, rate)| LevyMeasure { dim, kind: LevyKind::GaussianJumps { sigma, rate } }));
        parts.extend(tos.into_iter().map(|t| LevyMeasure { dim, kind: LevyKind::TemperedOpStable(t) }));
        if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            LevyMeasure { dim, kind: LevyKind::Mixture(parts) }
        }
    }
}

fn lex_cmp(a: &RVec, b: &RVec) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Equal => continue,
            o => return o,
        }
    }
    std::cmp::Ordering::Equal
}

/// Sorts atoms lexicographically and sums the weights of identical locations.
fn merge_atoms(mut atoms: Vec<Atom>) -> Vec<Atom> {
    atoms.sort_by(|a, b| lex_cmp(&a.z, &b.z));
    let mut out: Vec<Atom> = Vec::with_capacity(atoms.len());
    for a in atoms {
        let tol = LOCATION_TOL * a.z.norm().max(1.0);
        match out.iter_mut().find(|b| (&b.z - &a.z).norm() <= tol) {
            Some(b) => b.w += a.w,
            None => out.push(a),
        }
    }
    out
}

/// e^{ix} - 1 - ix without cancellation for small x.
fn compensated_exp(x: f64) -> C64 {
    let half = (0.5 * x).sin();
    let re = -2.0 * half * half;
    let im = if x.abs() < 1e-3 {
        let x3 = x * x * x;
        -x3 / 6.0 + x3 * x * x / 120.0
    } else {
        x.sin() - x
    };
    C64::new(re, im)
}

/// Greedy nearest matching of two atom lists; the discrepancy is the largest
/// weight difference, with unmatched atoms counting their full weight.
fn discrete_discrepancy(a: &[Atom], b: &[Atom]) -> f64 {
    let a = merge_atoms(a.to_vec());
    let b = merge_atoms(b.to_vec());
    let mut used = vec![false; b.len()];
    let mut worst = 0.0_f64;
    for x in &a {
        let mut best: Option<(usize, f64)> = None;
        for (j, y) in b.iter().enumerate() {
            if used[j] {
                continue;
            }
            let d = (&x.z - &y.z).norm();
            if d <= LOCATION_TOL * x.z.norm().max(1.0) && best.is_none_or(|(_, bd)| d < bd) {
                best = Some((j, d));
            }
        }
        match best {
            Some((j, _)) => {
                used[j] = true;
                worst = worst.max((x.w - b[j].w).abs());
            }
            None => worst = worst.max(x.w),
        }
    }
    for (j, y) in b.iter().enumerate() {
        if !used[j] {
            worst = worst.max(y.w);
        }
    }
    worst
}

/// Fixed frequency grid for comparing measures through their Lévy symbols.
fn symbol_grid(q: usize) -> Vec<RVec> {
    let mut grid = Vec::new();
    for &scale in &[0.25, 1.0, 4.0] {
        for k in 0..q {
            let mut e = RVec::zeros(q);
            e[k] = scale;
            grid.push(e.clone());
            grid.push(-e);
            for j in 0..k {
                for sgn in [1.0, -1.0] {
                    let mut f = RVec::zeros(q);
                    f[k] = scale;
                    f[j] = sgn * scale;
                    grid.push(f);
                }
            }
        }
    }
    let mut rng = ChaCha20Rng::seed_from_u64(0x5eed_0f_1e7);
    for _ in 0..8 {
        let v = RVec::from_iterator(q, (0..q).map(|_| rng.sample::<f64, _>(StandardNormal)));
        grid.push(v);
    }
    grid
}

/// Whether two measures agree, with the discrepancy used for the verdict.
///
/// Discrete measures are compared atom by atom, Gaussian jump laws by
/// ‖Σ1 - Σ2‖_F + |rate1 - rate2|, tempered measures with the same B and
/// tempering by their sphere atoms; anything else by the sup of |psi1 - psi2|
/// over a fixed frequency grid.
pub fn measure_equal(a: &LevyMeasure, b: &LevyMeasure, tol: f64) -> Result<(bool, f64)> {
    if a.dim != b.dim {
        return Err(Error::IncomparableVariants(format!("dimensions {} and {}", a.dim, b.dim)));
    }
    let disc = match (&a.kind, &b.kind) {
        (LevyKind::Discrete(x), LevyKind::Discrete(y)) => discrete_discrepancy(x, y),
        (LevyKind::GaussianJumps { sigma: s1, rate: r1 }, LevyKind::GaussianJumps { sigma: s2, rate: r2 }) => {
            (s1 - s2).norm() + (r1 - r2).abs()
        }
        (LevyKind::TemperedOpStable(x), LevyKind::TemperedOpStable(y))
            if (x.b.matrix() - y.b.matrix()).amax() <= 1e-12 && x.tempering == y.tempering =>
        {
            let d = discrete_discrepancy(&x.atoms, &y.atoms);
            if d <= tol {
                d
            } else {
                symbol_discrepancy(a, b)?
            }
        }
        _ => symbol_discrepancy(a, b)?,
    };
    Ok((disc <= tol, disc))
}

fn symbol_discrepancy(a: &LevyMeasure, b: &LevyMeasure) -> Result<f64> {
    let mut worst = 0.0_f64;
    for u in symbol_grid(a.dim) {
        let d = (a.levy_symbol(&u)? - b.levy_symbol(&u)?).norm();
        if !d.is_finite() {
            return Err(Error::IncomparableVariants("Lévy symbol not finite on the comparison grid".into()));
        }
        worst = worst.max(d);
    }
    Ok(worst)
}

/// Real 2p x 2p matrix of z -> C z on C^p = R^{2p}.
pub fn complex_as_real(c: &matfun::CMat) -> RMat {
    let p = c.nrows();
    let mut m = RMat::zeros(2 * p, 2 * p);
    for i in 0..p {
        for j in 0..p {
            let z = c[(i, j)];
            m[(i, j)] = z.re;
            m[(i, j + p)] = -z.im;
            m[(i + p, j)] = z.im;
            m[(i + p, j + p)] = z.re;
        }
    }
    m
}

/// Real matrix of z -> conj(z).
pub fn conjugation(p: usize) -> RMat {
    let mut m = RMat::identity(2 * p, 2 * p);
    for i in p..2 * p {
        m[(i, i)] = -1.0;
    }
    m
}

/// Real matrix of z -> e^{i theta} z.
pub fn rotation(p: usize, theta: f64) -> RMat {
    let (s, c) = theta.sin_cos();
    let mut m = RMat::zeros(2 * p, 2 * p);
    for i in 0..p {
        m[(i, i)] = c;
        m[(i, i + p)] = -s;
        m[(i + p, i)] = s;
        m[(i + p, i + p)] = c;
    }
    m
}

/// A Lévy measure on C^p stored as a measure on R^{2p} with z = (Re z, Im z).
#[derive(Clone, Debug)]
pub struct ComplexLevyView {
    base: LevyMeasure,
}

impl ComplexLevyView {
    pub fn new(base: LevyMeasure) -> Result<Self> {
        if base.dim() % 2 != 0 || base.dim() == 0 {
            return Err(Error::InvalidInput("complex view needs an even-dimensional measure".into()));
        }
        Ok(ComplexLevyView { base })
    }

    /// Discrete measure from complex atoms.
    pub fn discrete(atoms: Vec<(Vec<C64>, f64)>) -> Result<Self> {
        let p = atoms.first().map(|a| a.0.len()).ok_or_else(|| Error::InvalidInput("no atoms".into()))?;
        let real = atoms
            .into_iter()
            .map(|(z, w)| (z.iter().map(|c| c.re).chain(z.iter().map(|c| c.im)).collect(), w))
            .collect();
        Self::new(LevyMeasure::discrete(2 * p, real)?)
    }

    pub fn base(&self) -> &LevyMeasure {
        &self.base
    }
    pub fn p(&self) -> usize {
        self.base.dim() / 2
    }

    /// (∫ Re z Re z^T, ∫ Im z Im z^T, ∫ Re z Im z^T).
    pub fn moment_blocks(&self) -> Result<(RMat, RMat, RMat)> {
        let m = self.base.second_moment()?;
        let p = self.p();
        Ok((
            m.view((0, 0), (p, p)).into_owned(),
            m.view((p, p), (p, p)).into_owned(),
            m.view((0, p), (p, p)).into_owned(),
        ))
    }

    /// Residual of 4∫Re z Re z^T = I = 4∫Im z Im z^T.
    pub fn normalization_residual(&self) -> Result<f64> {
        let (rr, ii, _) = self.moment_blocks()?;
        let id = RMat::identity(self.p(), self.p());
        Ok((rr * 4.0 - &id).amax().max((ii * 4.0 - id).amax()))
    }

    /// Rescales by z -> Q^{-1} z (complex-linear, Q = (4∫Re z Re z^T)^{1/2}) so
    /// that 4∫Re z Re z^T = I = 4∫Im z Im z^T. Requires ∫Re Re^T = ∫Im Im^T.
    pub fn normalized(&self) -> Result<Self> {
        let (rr, ii, _) = self.moment_blocks()?;
        if (&rr - &ii).amax() > 1e-10 * rr.amax().max(1e-300) {
            return Err(Error::ValidationError(
                "normalization needs equal real and imaginary second moments".into(),
            ));
        }
        let q_inv = matfun::spd_power(&(rr * 4.0), -0.5)?;
        let map = complex_as_real(&matfun::to_complex(&q_inv));
        Ok(ComplexLevyView { base: self.base.pushforward(&map)? })
    }

    /// (mu + mu∘conj) / 2.
    pub fn symmetrize_conjugate(&self) -> Result<Self> {
        Ok(ComplexLevyView { base: self.base.symmetrize(&conjugation(self.p()))? })
    }

    /// Image under z -> C z.
    pub fn pushforward_complex(&self, c: &matfun::CMat) -> Result<Self> {
        Ok(ComplexLevyView { base: self.base.pushforward(&complex_as_real(c))? })
    }

    /// (∫ Re z, ∫ Im z) over jumps kept after truncation at `eps`.
    pub fn kept_mean(&self, eps: f64) -> Result<(RVec, RVec)> {
        let m = self.base.kept_mean_jump(eps)?;
        let p = self.p();
        Ok((m.rows(0, p).into_owned(), m.rows(p, p).into_owned()))
    }
}

/// Max over the angles of the discrepancy between mu and its rotation by e^{i theta}.
pub fn rotation_invariance_report(mu: &ComplexLevyView, angles: &[f64]) -> Result<f64> {
    let mut worst = 0.0_f64;
    for &theta in angles {
        let rotated = mu.base.pushforward(&rotation(mu.p(), theta))?;
        worst = worst.max(measure_equal(&mu.base, &rotated, 0.0)?.1);
    }
    Ok(worst)
}

#[derive(Clone, Debug)]
enum SamplerPart {
    Discrete { atoms: Vec<RVec>, pick: WeightedIndex<f64> },
    Gaussian { factor: RMat },
    Tempered { b: RealPower, atoms: Vec<RVec>, pick: WeightedIndex<f64>, eps: f64, tempering: Tempering },
}

/// Draws from mu / mu(R^q) restricted to the jumps kept after truncation.
#[derive(Clone, Debug)]
pub struct JumpSampler {
    dim: usize,
    activity: f64,
    parts: Vec<SamplerPart>,
    pick: Option<WeightedIndex<f64>>,
}

impl JumpSampler {
    /// `eps` is the radial truncation for tempered operator-stable parts (ignored otherwise).
    pub fn new(mu: &LevyMeasure, eps: f64) -> Result<Self> {
        let mut parts = Vec::new();
        let mut masses = Vec::new();
        fn collect(m: &LevyMeasure, eps: f64, parts: &mut Vec<SamplerPart>, masses: &mut Vec<f64>) -> Result<()> {
            match &m.kind {
                LevyKind::Discrete(atoms) => {
                    if atoms.is_empty() {
                        return Ok(());
                    }
                    let pick = WeightedIndex::new(atoms.iter().map(|a| a.w)).map_err(|e| Error::InvalidInput(e.to_string()))?;
                    masses.push(atoms.iter().map(|a| a.w).sum());
                    parts.push(SamplerPart::Discrete { atoms: atoms.iter().map(|a| a.z.clone()).collect(), pick });
                }
                LevyKind::GaussianJumps { sigma, rate } => {
                    masses.push(*rate);
                    parts.push(SamplerPart::Gaussian { factor: matfun::psd_factor(sigma)? });
                }
                LevyKind::TemperedOpStable(t) => {
                    let mass = t.radial_activity(eps)?;
                    if mass > 0.0 {
                        let pick =
                            WeightedIndex::new(t.atoms.iter().map(|a| a.w)).map_err(|e| Error::InvalidInput(e.to_string()))?;
                        masses.push(mass);
                        parts.push(SamplerPart::Tempered {
                            b: t.b.clone(),
                            atoms: t.atoms.iter().map(|a| a.z.clone()).collect(),
                            pick,
                            eps,
                            tempering: t.tempering,
                        });
                    }
                }
                LevyKind::Mixture(ps) => {
                    for p in ps {
                        collect(p, eps, parts, masses)?;
                    }
                }
            }
            Ok(())
        }
        collect(mu, eps, &mut parts, &mut masses)?;
        let activity = masses.iter().sum();
        let pick = if masses.is_empty() {
            None
        } else {
            Some(WeightedIndex::new(&masses).map_err(|e| Error::InvalidInput(e.to_string()))?)
        };
        Ok(JumpSampler { dim: mu.dim(), activity, parts, pick })
    }

    /// Mass of the kept jumps per unit length.
    pub fn activity(&self) -> f64 {
        self.activity
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> RVec {
        let Some(pick) = &self.pick else {
            return RVec::zeros(self.dim);
        };
        match &self.parts[pick.sample(rng)] {
            SamplerPart::Discrete { atoms, pick } => atoms[pick.sample(rng)].clone(),
            SamplerPart::Gaussian { factor } => {
                let xi = RVec::from_iterator(factor.ncols(), (0..factor.ncols()).map(|_| rng.sample::<f64, _>(StandardNormal)));
                factor * xi
            }
            SamplerPart::Tempered { b, atoms, pick, eps, tempering } => {
                let theta = &atoms[pick.sample(rng)];
                let r = sample_radius(*eps, *tempering, rng);
                b.pow_apply(r, theta)
            }
        }
    }
}

/// Radius with density proportional to q(r) r^{-2} on [eps, inf).
fn sample_radius<R: Rng + ?Sized>(eps: f64, tempering: Tempering, rng: &mut R) -> f64 {
    match tempering {
        Tempering::Indicator { r0 } => {
            let u: f64 = rng.random();
            1.0 / (1.0 / eps - u * (1.0 / eps - 1.0 / r0))
        }
        Tempering::Exponential { c } => loop {
            // Pareto proposal r = eps / U, accepted with probability e^{-c (r - eps)}.
            let u: f64 = 1.0 - rng.random::<f64>();
            let r = eps / u;
            if rng.random::<f64>() < (-c * (r - eps)).exp() {
                break r;
            }
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn e(q: usize, k: usize) -> Vec<f64> {
        let mut v = vec![0.0; q];
        v[k] = 1.0;
        v
    }

    #[test]
    fn second_moment_examples() {
        let mu = LevyMeasure::discrete(3, (0..3).map(|k| (e(3, k), 1.0)).collect()).unwrap();
        assert_eq!(mu.second_moment().unwrap(), RMat::identity(3, 3));
        let s = RMat::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let g = LevyMeasure::gaussian(s.clone(), 2.0).unwrap();
        assert_eq!(g.second_moment().unwrap(), s * 2.0);
        let t = LevyMeasure::tempered_op_stable(RMat::from_element(1, 1, 0.75), vec![(vec![1.0], 1.0)], Tempering::Indicator { r0: 1.0 })
            .unwrap();
        assert_relative_eq!(t.second_moment().unwrap()[(0, 0)], 2.0, max_relative = 1e-10);
    }

    #[test]
    fn exponential_tempering_moment() {
        // ∫ r^{1.5} e^{-2r} r^{-2} dr = Gamma(0.5) 2^{-0.5}.
        let t = LevyMeasure::tempered_op_stable(RMat::from_element(1, 1, 0.75), vec![(vec![1.0], 1.0)], Tempering::Exponential { c: 2.0 })
            .unwrap();
        let expect = std::f64::consts::PI.sqrt() / 2f64.sqrt();
        assert_relative_eq!(t.second_moment().unwrap()[(0, 0)], expect, max_relative = 1e-9);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(LevyMeasure::discrete(2, vec![(vec![0.0, 0.0], 1.0)]).is_err());
        assert!(LevyMeasure::discrete(2, vec![(vec![1.0, 0.0], -1.0)]).is_err());
        assert!(LevyMeasure::tempered_op_stable(RMat::from_element(1, 1, 0.4), vec![(vec![1.0], 1.0)], Tempering::Indicator { r0: 1.0 }).is_err());
        assert!(LevyMeasure::gaussian(RMat::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]), 1.0).is_err());
    }

    #[test]
    fn mean_jump_examples() {
        let mu = LevyMeasure::discrete(2, vec![(vec![1.0, 2.0], 1.0), (vec![-1.0, -2.0], 1.0)]).unwrap();
        assert_eq!(mu.mean_jump().unwrap().norm(), 0.0);
        let mu = LevyMeasure::discrete(2, vec![(e(2, 0), 2.0)]).unwrap();
        assert_eq!(mu.mean_jump().unwrap(), RVec::from_vec(vec![2.0, 0.0]));
        let g = LevyMeasure::gaussian(RMat::identity(2, 2), 1.0).unwrap();
        assert_eq!(g.mean_jump().unwrap().norm(), 0.0);
        let t = LevyMeasure::tempered_op_stable(RMat::from_element(1, 1, 0.75), vec![(vec![1.0], 1.0)], Tempering::Indicator { r0: 1.0 })
            .unwrap();
        assert!(matches!(t.mean_jump(), Err(Error::FirstMomentDiverged)));
        // ∫_0.01^1 r^{0.75} r^{-2} dr = 4 (0.01^{-0.25} - 1).
        assert_relative_eq!(t.kept_mean_jump(0.01).unwrap()[0], 4.0 * (0.01f64.powf(-0.25) - 1.0), max_relative = 1e-10);
    }

    #[test]
    fn pushforward_examples() {
        let mu = LevyMeasure::discrete(2, vec![(vec![1.0, 2.0], 1.0), (vec![-1.0, -2.0], 1.0)]).unwrap();
        let same = mu.pushforward(&RMat::identity(2, 2)).unwrap();
        assert!(measure_equal(&mu, &same, 1e-12).unwrap().0);
        let flipped = mu.pushforward(&(-RMat::identity(2, 2))).unwrap();
        assert!(measure_equal(&mu, &flipped, 1e-12).unwrap().0);
        let g = LevyMeasure::gaussian(RMat::identity(2, 2), 1.5).unwrap();
        let (s, c) = 0.7f64.sin_cos();
        let rot = RMat::from_row_slice(2, 2, &[c, -s, s, c]);
        let gr = g.pushforward(&rot).unwrap();
        assert!(measure_equal(&g, &gr, 1e-12).unwrap().0);
    }

    #[test]
    fn pushforward_requires_commuting_map_for_tempered() {
        let b = RMat::from_row_slice(2, 2, &[0.7, 0.0, 0.0, 0.8]);
        let t = LevyMeasure::tempered_op_stable(b, vec![(e(2, 0), 1.0), (e(2, 1), 1.0)], Tempering::Indicator { r0: 1.0 }).unwrap();
        let swap = RMat::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert!(matches!(t.pushforward(&swap), Err(Error::UnsupportedPushforward(_))));
        assert!(t.pushforward(&(-RMat::identity(2, 2))).is_ok());
    }

    #[test]
    fn symmetrize_conjugate_examples() {
        let mu = ComplexLevyView::discrete(vec![(vec![C64::new(1.0, 1.0)], 1.0)]).unwrap();
        let s = mu.symmetrize_conjugate().unwrap();
        match s.base().kind() {
            LevyKind::Discrete(atoms) => {
                assert_eq!(atoms.len(), 2);
                assert_eq!(atoms[0], Atom { z: RVec::from_vec(vec![1.0, -1.0]), w: 0.5 });
                assert_eq!(atoms[1], Atom { z: RVec::from_vec(vec![1.0, 1.0]), w: 0.5 });
            }
            k => panic!("{k:?}"),
        }
        let ss = s.symmetrize_conjugate().unwrap();
        assert!(measure_equal(s.base(), ss.base(), 0.0).unwrap().0);
        let (_, _, cross) = s.moment_blocks().unwrap();
        assert_eq!(cross.norm(), 0.0);
        // Conjugation-invariant input is unchanged.
        let inv = ComplexLevyView::discrete(vec![(vec![C64::new(1.0, 0.0)], 1.0)]).unwrap();
        assert!(measure_equal(inv.base(), inv.symmetrize_conjugate().unwrap().base(), 0.0).unwrap().0);
    }

    #[test]
    fn symmetrized_gaussian_is_a_mixture() {
        let sigma = RMat::from_row_slice(2, 2, &[1.0, 0.4, 0.4, 1.0]);
        let mu = ComplexLevyView::new(LevyMeasure::gaussian(sigma, 1.0).unwrap()).unwrap();
        let s = mu.symmetrize_conjugate().unwrap();
        assert!(matches!(s.base().kind(), LevyKind::Mixture(_)));
        let ss = s.symmetrize_conjugate().unwrap();
        assert!(measure_equal(s.base(), ss.base(), 1e-12).unwrap().0);
    }

    #[test]
    fn measure_equal_detects_weight_change() {
        let tol = 1e-6;
        let a = LevyMeasure::discrete(1, vec![(vec![1.0], 1.0)]).unwrap();
        let b = LevyMeasure::discrete(1, vec![(vec![1.0], 1.0 + 2.0 * tol)]).unwrap();
        assert_eq!(measure_equal(&a, &a, tol).unwrap(), (true, 0.0));
        assert!(!measure_equal(&a, &b, tol).unwrap().0);
    }

    #[test]
    fn measure_equal_constructed_invariant() {
        // Symmetrize under an involution T, then T preserves the result.
        let t = RMat::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let mu = LevyMeasure::discrete(2, vec![(vec![1.0, 0.3], 1.0), (vec![-0.2, 2.0], 0.5)]).unwrap();
        let inv = mu.symmetrize(&t).unwrap();
        assert!(measure_equal(&inv, &inv.pushforward(&t).unwrap(), 1e-12).unwrap().0);
        assert!(!measure_equal(&mu, &mu.pushforward(&t).unwrap(), 1e-12).unwrap().0);
    }

    #[test]
    fn levy_symbol_examples() {
        let mu = LevyMeasure::discrete(1, vec![(vec![1.0], 1.0)]).unwrap();
        assert_eq!(mu.levy_symbol(&RVec::from_vec(vec![0.0])).unwrap(), C64::new(0.0, 0.0));
        let u = 0.8;
        let expect = C64::new(0.0, u).exp() - 1.0 - C64::new(0.0, u);
        assert!((mu.levy_symbol(&RVec::from_vec(vec![u])).unwrap() - expect).norm() < 1e-15);
    }

    #[test]
    fn tempered_symbol_matches_series() {
        // For B = 0.75, indicator(1), theta = 1: psi(u) = ∫_0^1 (e^{iur^{0.75}} - 1 - iur^{0.75}) r^{-2} dr.
        // Substituting y = r^{0.75}: (4/3) ∫_0^1 (e^{iuy} - 1 - iuy) y^{-7/3} dy; expand the exponential.
        let t = LevyMeasure::tempered_op_stable(RMat::from_element(1, 1, 0.75), vec![(vec![1.0], 1.0)], Tempering::Indicator { r0: 1.0 })
            .unwrap();
        let u = 1.3;
        let mut series = C64::new(0.0, 0.0);
        let mut term = C64::new(1.0, 0.0);
        for k in 1..40 {
            term *= C64::new(0.0, u) / k as f64;
            if k >= 2 {
                series += term / (k as f64 - 4.0 / 3.0);
            }
        }
        series *= 4.0 / 3.0;
        assert!((t.levy_symbol(&RVec::from_vec(vec![u])).unwrap() - series).norm() < 1e-9);
    }

    #[test]
    fn rotation_report_examples() {
        let g = ComplexLevyView::new(LevyMeasure::gaussian(RMat::identity(2, 2), 1.0).unwrap()).unwrap();
        assert!(rotation_invariance_report(&g, &[0.3, 1.0, 2.0]).unwrap() < 1e-12);
        let d = ComplexLevyView::discrete(vec![(vec![C64::new(1.0, 0.0)], 1.0)]).unwrap();
        assert!(rotation_invariance_report(&d, &[std::f64::consts::FRAC_PI_2]).unwrap() > 0.5);
        let orbit = ComplexLevyView::discrete(vec![
            (vec![C64::new(1.0, 0.0)], 1.0),
            (vec![C64::new(0.0, 1.0)], 1.0),
            (vec![C64::new(-1.0, 0.0)], 1.0),
            (vec![C64::new(0.0, -1.0)], 1.0),
        ])
        .unwrap();
        let h = std::f64::consts::FRAC_PI_2;
        assert!(rotation_invariance_report(&orbit, &[h, 2.0 * h, 3.0 * h]).unwrap() < 1e-12);
    }

    #[test]
    fn normalized_example_measure() {
        // sum_k delta_{(1+i) e_k} has 4∫Re Re^T = 4I; the normalized flag rescales atoms by 1/2.
        let p = 2;
        let atoms: Vec<(Vec<C64>, f64)> = (0..p)
            .map(|k| ((0..p).map(|j| if j == k { C64::new(1.0, 1.0) } else { C64::new(0.0, 0.0) }).collect(), 1.0))
            .collect();
        let mu = ComplexLevyView::discrete(atoms).unwrap();
        assert!((mu.normalization_residual().unwrap() - 3.0).abs() < 1e-14);
        let n = mu.normalized().unwrap();
        assert!(n.normalization_residual().unwrap() < 1e-14);
    }

    #[test]
    fn sampler_single_atom() {
        let mu = LevyMeasure::discrete(2, vec![(vec![0.5, -1.0], 3.0)]).unwrap();
        let s = JumpSampler::new(&mu, 0.0).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        for _ in 0..10 {
            assert_eq!(s.sample(&mut rng), RVec::from_vec(vec![0.5, -1.0]));
        }
        assert_eq!(s.activity(), 3.0);
    }

    #[test]
    fn sampler_requires_truncation() {
        let t = LevyMeasure::tempered_op_stable(RMat::from_element(1, 1, 0.75), vec![(vec![1.0], 1.0)], Tempering::Indicator { r0: 1.0 })
            .unwrap();
        assert!(matches!(JumpSampler::new(&t, 0.0), Err(Error::TruncationRequired)));
    }

    #[test]
    fn sampler_second_moment() {
        let mu = LevyMeasure::mixture(vec![
            LevyMeasure::discrete(2, vec![(vec![1.0, 0.0], 1.0), (vec![0.3, -2.0], 0.5)]).unwrap(),
            LevyMeasure::gaussian(RMat::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 2.0]), 2.0).unwrap(),
        ])
        .unwrap();
        let s = JumpSampler::new(&mu, 0.0).unwrap();
        let target = mu.second_moment().unwrap() / s.activity();
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        let n = 100_000;
        let draws: Vec<RVec> = (0..n).map(|_| s.sample(&mut rng)).collect();
        for (i, j) in [(0, 0), (0, 1), (1, 1)] {
            let vals: Vec<f64> = draws.iter().map(|z| z[i] * z[j]).collect();
            let mean = vals.iter().sum::<f64>() / n as f64;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
            let se = (var / n as f64).sqrt();
            assert!((mean - target[(i, j)]).abs() < 3.0 * se, "({i},{j}) {mean} {}", target[(i, j)]);
        }
    }

    #[test]
    fn tempered_radius_distribution() {
        // Radius CDF on [eps, 1] under r^{-2}: F(r) = (1/eps - 1/r) / (1/eps - 1).
        let eps = 0.01;
        let t = LevyMeasure::tempered_op_stable(RMat::from_element(1, 1, 0.75), vec![(vec![1.0], 1.0)], Tempering::Indicator { r0: 1.0 })
            .unwrap();
        let s = JumpSampler::new(&t, eps).unwrap();
        assert_relative_eq!(s.activity(), 99.0, max_relative = 1e-12);
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let n = 100_000;
        let mut r: Vec<f64> = (0..n).map(|_| s.sample(&mut rng)[0].powf(1.0 / 0.75)).collect();
        r.sort_by(f64::total_cmp);
        let cdf = |x: f64| (1.0 / eps - 1.0 / x) / (1.0 / eps - 1.0);
        let ks = r
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = cdf(x);
                (f - i as f64 / n as f64).abs().max(((i + 1) as f64 / n as f64 - f).abs())
            })
            .fold(0.0, f64::max);
        assert!(ks < 0.01, "KS {ks}");
    }

    #[test]
    fn exponential_tempering_sampler_mean() {
        let c = 3.0;
        let eps = 0.05;
        let t = LevyMeasure::tempered_op_stable(RMat::from_element(1, 1, 0.6), vec![(vec![1.0], 1.0)], Tempering::Exponential { c }).unwrap();
        let s = JumpSampler::new(&t, eps).unwrap();
        let target = t.kept_mean_jump(eps).unwrap()[0] / s.activity();
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let n = 100_000;
        let v: Vec<f64> = (0..n).map(|_| s.sample(&mut rng)[0]).collect();
        let mean = v.iter().sum::<f64>() / n as f64;
        let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
        assert!((mean - target).abs() < 3.0 * sd / (n as f64).sqrt());
    }

    #[test]
    fn complex_maps() {
        let c = matfun::CMat::from_element(1, 1, C64::new(0.0, 1.0));
        assert_eq!(complex_as_real(&c), rotation(1, std::f64::consts::FRAC_PI_2).map(|v| v.round()));
        assert_eq!(conjugation(1), RMat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]));
    }
}
