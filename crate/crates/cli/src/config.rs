//! Experiment configuration: JSON schema, parsing with pointer-located errors,
//! and validation into library objects.

use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use oflm::error::{Error, Result};
use oflm::kernels::{FourierKernelParams, TimeKernelParams};
use oflm::levy::{ComplexLevyView, LevyMeasure, Tempering};
use oflm::matfun::{self, CMat, HurstSpec, RMat};
use oflm::simulate::SimOptions;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const SCHEMA_VERSION: u32 = 1;

/// Row-major matrix.
pub type Rows = Vec<Vec<f64>>;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub model: ModelConfig,
    pub measure: MeasureConfig,
    /// Map the measure onto the unit normalization before use.
    #[serde(default)]
    pub normalize_measure: bool,
    #[serde(default = "default_grid")]
    pub grid: Vec<f64>,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub simulation: SimOptions,
    #[serde(default)]
    pub timerev: TimerevConfig,
    #[serde(default)]
    pub limits: Option<LimitsConfig>,
    #[serde(default)]
    pub parseval: ParsevalConfig,
}

fn default_grid() -> Vec<f64> {
    vec![1.0, 2.0]
}

fn default_replications() -> usize {
    1000
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum ModelConfig {
    /// Moving average with kernel ((t-s)_+^D - (-s)_+^D) M+ + ((t-s)_-^D - (-s)_-^D) M-.
    Ma(MaModel),
    /// Moving average with M+ = M- = m.
    WellBalanced(WellBalancedModel),
    /// Real harmonizable with A = a_re + i a_im.
    Rh(RhModel),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaModel {
    pub hurst: Rows,
    pub m_plus: Rows,
    pub m_minus: Rows,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WellBalancedModel {
    pub hurst: Rows,
    pub m: Rows,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RhModel {
    pub hurst: Rows,
    pub a_re: Rows,
    pub a_im: Rows,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomConfig {
    pub z: Vec<f64>,
    pub w: f64,
}

/// Lévy measure on R^p (moving average) or on R^{2p} with z = (Re z, Im z) (harmonizable).
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeasureConfig {
    Discrete(DiscreteMeasure),
    Gaussian(GaussianMeasure),
    TemperedOpStable(TemperedMeasure),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscreteMeasure {
    pub atoms: Vec<AtomConfig>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianMeasure {
    pub sigma: Rows,
    pub rate: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemperedMeasure {
    pub b: Rows,
    pub atoms: Vec<AtomConfig>,
    pub tempering: Tempering,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimerevConfig {
    pub tol: Option<f64>,
    /// Also compare simulated laws of X(t) and X(-t) over the grid.
    pub empirical: Option<EmpiricalConfig>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmpiricalConfig {
    pub replications: usize,
    /// One u-vector per grid time for each chf evaluation point.
    #[serde(default)]
    pub us: Vec<Vec<Vec<f64>>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RescaleKind {
    MaLarge,
    RhSmall,
    MaLocal,
    RhLarge,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitsConfig {
    pub rescale: RescaleKind,
    /// c for the large-scale limits, ε for the small-scale ones.
    #[serde(default = "default_scales")]
    pub scales: Vec<f64>,
    #[serde(default)]
    pub us: Vec<Vec<Vec<f64>>>,
}

fn default_scales() -> Vec<f64> {
    vec![1.0, 4.0, 16.0, 64.0]
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParsevalConfig {
    pub s: f64,
    pub t: f64,
}

impl Default for ParsevalConfig {
    fn default() -> Self {
        ParsevalConfig { s: 1.0, t: 2.0 }
    }
}

/// Reads and deserializes a config. Returns it with the SHA-256 digest of its
/// canonical form (keys sorted, no whitespace).
pub fn parse_config(path: &Path) -> Result<(ExperimentConfig, String)> {
    let text = std::fs::read_to_string(path)?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<(ExperimentConfig, String)> {
    let value: serde_json::Value = serde_json::from_str(text)
        .map_err(|e| Error::SchemaError { pointer: String::new(), message: e.to_string() })?;
    let canonical = serde_json::to_vec(&value).expect("a JSON value serializes");
    let digest = hex::encode(Sha256::digest(&canonical));
    let config: ExperimentConfig = serde_path_to_error::deserialize(value.clone()).map_err(|e| {
        let pointer = json_pointer(e.path());
        let (pointer, message) = refine(&value, &pointer).unwrap_or((pointer, e.inner().to_string()));
        Error::SchemaError { pointer, message }
    })?;
    Ok((config, digest))
}

/// Tagged enums buffer their content, so errors inside them stop at the enum.
/// Re-deserializing the selected variant's struct locates them precisely.
fn refine(value: &serde_json::Value, pointer: &str) -> Option<(String, String)> {
    let mut obj = value.pointer(pointer)?.as_object()?.clone();
    let located = match pointer {
        "/model" => match obj.remove("variant")?.as_str()? {
            "ma" => locate::<MaModel>(obj),
            "well_balanced" => locate::<WellBalancedModel>(obj),
            "rh" => locate::<RhModel>(obj),
            _ => None,
        },
        "/measure" => match obj.remove("kind")?.as_str()? {
            "discrete" => locate::<DiscreteMeasure>(obj),
            "gaussian" => locate::<GaussianMeasure>(obj),
            "tempered_op_stable" => locate::<TemperedMeasure>(obj),
            _ => None,
        },
        _ => None,
    }?;
    Some((format!("{pointer}{}", located.0), located.1))
}

fn locate<T: serde::de::DeserializeOwned>(obj: serde_json::Map<String, serde_json::Value>) -> Option<(String, String)> {
    serde_path_to_error::deserialize::<_, T>(serde_json::Value::Object(obj))
        .err()
        .map(|e| (json_pointer(e.path()), e.inner().to_string()))
}

fn json_pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => out.push_str(&format!("/{index}")),
            Segment::Map { key } => out.push_str(&format!("/{}", key.replace('~', "~0").replace('/', "~1"))),
            Segment::Enum { variant } => out.push_str(&format!("/{variant}")),
            Segment::Unknown => out.push_str("/?"),
        }
    }
    out
}

/// Moving-average or harmonizable model with its measure, ready for the library.
#[derive(Clone, Debug)]
pub enum Model {
    Ma { params: TimeKernelParams, mu: LevyMeasure },
    Rh { params: FourierKernelParams, mu: ComplexLevyView },
}

impl Model {
    pub fn dim(&self) -> usize {
        match self {
            Model::Ma { params, .. } => params.dim(),
            Model::Rh { params, .. } => params.dim(),
        }
    }
}

/// A validated configuration.
#[derive(Clone, Debug)]
pub struct Validated {
    pub config: ExperimentConfig,
    pub digest: String,
    pub model: Model,
    /// Residual of the unit normalization of the (possibly normalized) measure.
    pub normalization_residual: f64,
}

fn matrix(name: &str, rows: &Rows) -> Result<RMat> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::ValidationError(format!("{name} must be a non-empty square matrix")));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::ValidationError(format!("{name} has non-finite entries")));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn same_size(name: &str, m: &RMat, p: usize) -> Result<()> {
    if m.nrows() != p {
        return Err(Error::ValidationError(format!("{name} is {0}x{0}, the Hurst matrix is {p}x{p}", m.nrows())));
    }
    Ok(())
}

fn hurst(rows: &Rows) -> Result<HurstSpec> {
    HurstSpec::new(matrix("hurst", rows)?).map_err(|e| match e {
        Error::EigenvalueOutOfRange(z) => Error::ValidationError(format!(
            "Hurst matrix eigenvalue {} has real part outside (0, 1)",
            if z.im == 0.0 { format!("{}", z.re) } else { format!("{z}") }
        )),
        other => other,
    })
}

fn measure(cfg: &MeasureConfig, dim: usize) -> Result<LevyMeasure> {
    let atoms = |atoms: &[AtomConfig]| -> Result<Vec<(Vec<f64>, f64)>> {
        atoms
            .iter()
            .map(|a| {
                if a.z.len() != dim {
                    return Err(Error::ValidationError(format!("atom {:?} should have {dim} coordinates", a.z)));
                }
                Ok((a.z.clone(), a.w))
            })
            .collect()
    };
    match cfg {
        MeasureConfig::Discrete(DiscreteMeasure { atoms: a }) => LevyMeasure::discrete(dim, atoms(a)?),
        MeasureConfig::Gaussian(GaussianMeasure { sigma, rate }) => {
            let s = matrix("measure.sigma", sigma)?;
            same_size("measure.sigma", &s, dim)?;
            LevyMeasure::gaussian(s, *rate)
        }
        MeasureConfig::TemperedOpStable(TemperedMeasure { b, atoms: a, tempering }) => {
            let b = matrix("measure.b", b)?;
            same_size("measure.b", &b, dim)?;
            LevyMeasure::tempered_op_stable(b, atoms(a)?, *tempering)
        }
    }
}

impl ExperimentConfig {
    pub fn validate(self, digest: String) -> Result<Validated> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::ValidationError(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.grid.is_empty() || self.grid.iter().any(|t| !t.is_finite()) || self.grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::ValidationError("grid must be finite and strictly increasing".into()));
        }
        if self.replications == 0 {
            return Err(Error::ValidationError("replications must be positive".into()));
        }
        let (model, normalization_residual) = match &self.model {
            ModelConfig::Ma(MaModel { hurst: h, m_plus, m_minus }) => {
                let h = hurst(h)?;
                let (mp, mm) = (matrix("m_plus", m_plus)?, matrix("m_minus", m_minus)?);
                same_size("m_plus", &mp, h.dim())?;
                same_size("m_minus", &mm, h.dim())?;
                self.ma_model(TimeKernelParams::general(h, mp, mm)?)?
            }
            ModelConfig::WellBalanced(WellBalancedModel { hurst: h, m }) => {
                let h = hurst(h)?;
                let m = matrix("m", m)?;
                same_size("m", &m, h.dim())?;
                self.ma_model(TimeKernelParams::well_balanced(h, m)?)?
            }
            ModelConfig::Rh(RhModel { hurst: h, a_re, a_im }) => {
                let h = hurst(h)?;
                let (re, im) = (matrix("a_re", a_re)?, matrix("a_im", a_im)?);
                same_size("a_re", &re, h.dim())?;
                same_size("a_im", &im, h.dim())?;
                let a = CMat::from_fn(h.dim(), h.dim(), |i, j| C64::new(re[(i, j)], im[(i, j)]));
                let params = FourierKernelParams::new(h, a)?;
                let mut mu = ComplexLevyView::new(measure(&self.measure, 2 * params.dim())?)?;
                if self.normalize_measure {
                    mu = mu.normalized()?;
                }
                let residual = mu.normalization_residual()?;
                (Model::Rh { params, mu }, residual)
            }
        };
        Ok(Validated { config: self, digest, model, normalization_residual })
    }

    fn ma_model(&self, params: TimeKernelParams) -> Result<(Model, f64)> {
        let p = params.dim();
        let mut mu = measure(&self.measure, p)?;
        if self.normalize_measure {
            let root_inv = matfun::spd_power(&mu.second_moment()?, -0.5).map_err(|_| Error::RankDeficientMoment)?;
            mu = mu.pushforward(&root_inv)?;
        }
        let residual = (mu.second_moment()? - RMat::identity(p, p)).amax();
        Ok((Model::Ma { params, mu }, residual))
    }
}
