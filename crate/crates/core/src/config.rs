//! Run configuration documents (TOML).
//!
//! ```toml
//! seed = 7
//! outputs = ["field", "minima"]
//!
//! [wave]
//! preset = "exp2"
//!
//! [material]
//! rho0 = 1000.0
//! c0 = 1500.0
//! rho_p = 2100.0
//! c_p = 5300.0
//! frequency_hz = 1.0e6
//!
//! [grid]
//! half_width_wavelengths = 7.0
//! resolution = 1024
//!
//! [criteria]
//! mode = "auto"
//! ```

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::WaveConfig;
use crate::geometry::{polygon_wavevectors, DEFAULT_QMAX};
use crate::grid::GridSpec;
use crate::minima::{MinimaCriteria, AUTO_EIG_FRACTION, AUTO_GRAD_FRACTION};
use crate::potential::{arp_coefficients, ArpCoefficients, ArpMode, MaterialParams};

pub const PRESETS: [&str; 8] = [
    "pair", "square", "hexagon", "octagon", "decagon", "dodecagon", "exp1", "exp2",
];

/// A real amplitude or a `[re, im]` pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Amplitude {
    Real(f64),
    Complex([f64; 2]),
}

impl Amplitude {
    pub fn to_complex(self) -> Complex64 {
        match self {
            Amplitude::Real(r) => Complex64::new(r, 0.0),
            Amplitude::Complex([re, im]) => Complex64::new(re, im),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    /// Explicit wavevector columns; excludes `preset`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wavevectors: Option<Vec<Vec<f64>>>,
    /// Defaults to `omega / c0` of the material.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wavenumber: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Vec<Amplitude>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<Vec<Amplitude>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeSpec {
    Acoustic,
    Optical,
}

impl From<ModeSpec> for ArpMode {
    fn from(m: ModeSpec) -> Self {
        match m {
            ModeSpec::Acoustic => ArpMode::Acoustic,
            ModeSpec::Optical => ArpMode::Optical,
        }
    }
}

fn acoustic() -> ModeSpec {
    ModeSpec::Acoustic
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialSpec {
    pub rho0: f64,
    pub c0: f64,
    pub rho_p: f64,
    pub c_p: f64,
    pub frequency_hz: f64,
    #[serde(default = "acoustic")]
    pub mode: ModeSpec,
}

impl MaterialSpec {
    pub fn water_carbon() -> Self {
        MaterialSpec {
            rho0: 1000.0,
            c0: 1500.0,
            rho_p: 2100.0,
            c_p: 5300.0,
            frequency_hz: 1.0e6,
            mode: ModeSpec::Acoustic,
        }
    }

    pub fn params(&self) -> MaterialParams {
        MaterialParams {
            rho0: self.rho0,
            c0: self.c0,
            rho_p: self.rho_p,
            c_p: self.c_p,
            omega: 2.0 * std::f64::consts::PI * self.frequency_hz,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixSpec {
    Scalar(f64),
    Matrix(Vec<Vec<f64>>),
}

/// Coefficients given directly instead of through material parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientSpec {
    pub a: f64,
    pub b: MatrixSpec,
    #[serde(default = "acoustic")]
    pub mode: ModeSpec,
}

fn default_half_width() -> f64 {
    7.0
}

fn default_resolution() -> usize {
    1024
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Box is `[-w lambda, w lambda]^d`.
    #[serde(default = "default_half_width")]
    pub half_width_wavelengths: f64,
    #[serde(default = "default_resolution")]
    pub resolution: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            half_width_wavelengths: default_half_width(),
            resolution: default_resolution(),
        }
    }
}

fn default_grad_fraction() -> f64 {
    AUTO_GRAD_FRACTION
}

fn default_eig_fraction() -> f64 {
    AUTO_EIG_FRACTION
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum CriteriaSpec {
    Auto {
        #[serde(default = "default_grad_fraction")]
        grad_fraction: f64,
        #[serde(default = "default_eig_fraction")]
        eig_fraction: f64,
    },
    Absolute {
        eig_min: f64,
        grad_max: f64,
    },
}

impl Default for CriteriaSpec {
    fn default() -> Self {
        CriteriaSpec::Auto {
            grad_fraction: AUTO_GRAD_FRACTION,
            eig_fraction: AUTO_EIG_FRACTION,
        }
    }
}

impl CriteriaSpec {
    pub fn criteria(&self) -> MinimaCriteria {
        match *self {
            CriteriaSpec::Auto {
                grad_fraction,
                eig_fraction,
            } => MinimaCriteria::Auto {
                grad_fraction,
                eig_fraction,
            },
            CriteriaSpec::Absolute { eig_min, grad_max } => {
                MinimaCriteria::Absolute { eig_min, grad_max }
            }
        }
    }
}

fn default_order() -> usize {
    8
}

fn default_samples() -> usize {
    4096
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymmetrySpec {
    #[serde(default = "default_order")]
    pub order: usize,
    #[serde(default = "default_half_width")]
    pub radius_wavelengths: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

impl Default for SymmetrySpec {
    fn default() -> Self {
        SymmetrySpec {
            order: default_order(),
            radius_wavelengths: default_half_width(),
            samples: default_samples(),
        }
    }
}

fn default_qmax() -> u64 {
    DEFAULT_QMAX
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifySpec {
    #[serde(default = "default_qmax")]
    pub qmax: u64,
}

impl Default for ClassifySpec {
    fn default() -> Self {
        ClassifySpec { qmax: DEFAULT_QMAX }
    }
}

fn default_particles() -> usize {
    500
}

fn default_relax_radius() -> f64 {
    3.0
}

fn default_iters() -> usize {
    5000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelaxSpec {
    #[serde(default = "default_particles")]
    pub particles: usize,
    /// Particles start uniformly in the disk of this radius (wavelengths).
    #[serde(default = "default_relax_radius")]
    pub radius_wavelengths: f64,
    #[serde(default = "default_iters")]
    pub iterations: usize,
    /// Write every accepted position, not only the end points.
    #[serde(default)]
    pub record_paths: bool,
}

impl Default for RelaxSpec {
    fn default() -> Self {
        RelaxSpec {
            particles: default_particles(),
            radius_wavelengths: default_relax_radius(),
            iterations: default_iters(),
            record_paths: false,
        }
    }
}

fn default_maxval() -> u16 {
    65535
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldOutputSpec {
    /// 255 or 65535.
    #[serde(default = "default_maxval")]
    pub maxval: u16,
    /// `[min, max]` mapped to `[0, maxval]` instead of the per-image range.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_scale: Option<[f64; 2]>,
}

impl Default for FieldOutputSpec {
    fn default() -> Self {
        FieldOutputSpec {
            maxval: default_maxval(),
            fixed_scale: None,
        }
    }
}

fn default_sensitivity() -> f64 {
    0.45
}

fn default_polarity() -> String {
    "dark".into()
}

fn default_marker_radius() -> f64 {
    3.0
}

fn default_alphas() -> Vec<f64> {
    vec![0.5, 0.625, 0.75, 0.875, 1.0]
}

fn default_transducer_width() -> f64 {
    40.0 / 3.0
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image: Option<PathBuf>,
    /// Correspondence file, physical coordinates to pixels.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairs: Option<PathBuf>,
    #[serde(default = "default_sensitivity")]
    pub sensitivity: f64,
    #[serde(default = "default_polarity")]
    pub polarity: String,
    #[serde(default = "default_marker_radius")]
    pub marker_radius: f64,
    #[serde(default = "default_alphas")]
    pub alphas: Vec<f64>,
    /// Reference diameter `D` in wavelengths.
    #[serde(default = "default_transducer_width")]
    pub transducer_width_wavelengths: f64,
}

impl CompareSpec {
    fn with_defaults() -> Self {
        CompareSpec {
            image: None,
            pairs: None,
            sensitivity: default_sensitivity(),
            polarity: default_polarity(),
            marker_radius: default_marker_radius(),
            alphas: default_alphas(),
            transducer_width_wavelengths: default_transducer_width(),
        }
    }
}

fn default_outputs() -> Vec<String> {
    vec!["field".into(), "minima".into()]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_outputs")]
    pub outputs: Vec<String>,
    pub wave: WaveSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub material: Option<MaterialSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<CoefficientSpec>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub criteria: CriteriaSpec,
    #[serde(default)]
    pub symmetry: SymmetrySpec,
    #[serde(default)]
    pub classify: ClassifySpec,
    #[serde(default)]
    pub relax: RelaxSpec,
    #[serde(default)]
    pub field: FieldOutputSpec,
    #[serde(default = "CompareSpec::with_defaults")]
    pub compare: CompareSpec,
}

/// Everything a command needs, built from a validated [`RunConfig`].
#[derive(Clone, Debug)]
pub struct Scenario {
    pub wave: WaveConfig,
    pub coefficients: ArpCoefficients,
    pub grid: GridSpec,
    pub criteria: MinimaCriteria,
}

impl RunConfig {
    /// Configuration for a named preset with every default filled in.
    pub fn from_preset(name: &str) -> Result<Self> {
        let mut cfg = RunConfig {
            seed: 0,
            outputs: default_outputs(),
            wave: WaveSpec {
                preset: Some(name.to_string()),
                ..Default::default()
            },
            material: None,
            coefficients: None,
            grid: GridConfig::default(),
            criteria: CriteriaSpec::default(),
            symmetry: SymmetrySpec::default(),
            classify: ClassifySpec::default(),
            relax: RelaxSpec::default(),
            field: FieldOutputSpec::default(),
            compare: CompareSpec::with_defaults(),
        };
        cfg.apply_defaults();
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parses a document, fills defaults and validates it.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg = Self::parse_toml(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parses a document and fills defaults without the semantic checks.
    pub(crate) fn parse_toml(text: &str) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| {
            let (line, column) = e
                .span()
                .map(|s| line_column(text, s.start))
                .unwrap_or((0, 0));
            Error::Parse {
                line,
                column,
                message: e.message().to_string(),
            }
        })?;
        cfg.apply_defaults();
        Ok(cfg)
    }

    /// The fully defaulted configuration as TOML.
    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("run configuration serializes")
    }

    fn apply_defaults(&mut self) {
        if self.material.is_none() && self.coefficients.is_none() {
            self.material = Some(MaterialSpec::water_carbon());
        }
        if self.wave.wavenumber.is_none() && self.wave.wavevectors.is_none() {
            self.wave.wavenumber = Some(self.reference_wavenumber());
        }
    }

    fn reference_wavenumber(&self) -> f64 {
        self.material
            .as_ref()
            .map(|m| m.params().wavenumber())
            .unwrap_or_else(|| MaterialParams::water_carbon().wavenumber())
    }

    /// Checks every semantic rule and builds the scenario.
    pub fn validate(&self) -> Result<Scenario> {
        let wave = self.build_wave()?;
        let coefficients = self.build_coefficients(wave.dim())?;
        let lambda = wave.wavelength();
        if !(self.grid.half_width_wavelengths.is_finite() && self.grid.half_width_wavelengths > 0.0) {
            return Err(Error::Config("grid.half_width_wavelengths: must be positive".into()));
        }
        let hw = self.grid.half_width_wavelengths * lambda;
        let d = wave.dim();
        let grid = GridSpec::new(vec![-hw; d], vec![hw; d], vec![self.grid.resolution; d])
            .map_err(|e| Error::Config(format!("grid: {e}")))?;
        let criteria = self.criteria.criteria();
        criteria
            .validate()
            .map_err(|e| Error::Config(format!("criteria: {e}")))?;
        if !(0.0..=1.0).contains(&self.compare.sensitivity) {
            return Err(Error::Config("compare.sensitivity: must lie in [0, 1]".into()));
        }
        if !matches!(self.compare.polarity.as_str(), "dark" | "bright") {
            return Err(Error::Config("compare.polarity: expected \"dark\" or \"bright\"".into()));
        }
        if let Some([lo, hi]) = self.field.fixed_scale {
            if !(lo < hi) {
                return Err(Error::Config("field.fixed_scale: min must be below max".into()));
            }
        }
        if self.field.maxval != 255 && self.field.maxval != 65535 {
            return Err(Error::Config("field.maxval: expected 255 or 65535".into()));
        }
        Ok(Scenario {
            wave,
            coefficients,
            grid,
            criteria,
        })
    }

    fn build_wave(&self) -> Result<WaveConfig> {
        let w = &self.wave;
        let k = w.wavenumber.unwrap_or_else(|| self.reference_wavenumber());
        let amps = |v: &Option<Vec<Amplitude>>| {
            v.as_ref()
                .map(|a| a.iter().map(|x| x.to_complex()).collect::<Vec<_>>())
        };
        let (alpha, beta) = (amps(&w.alpha), amps(&w.beta));
        let prefix = |e: Error| match e {
            Error::Config(m) => Error::Config(format!("wave.{m}")),
            other => other,
        };
        match (&w.preset, &w.wavevectors) {
            (Some(_), Some(_)) => Err(Error::Config(
                "wave: preset and explicit wavevectors are mutually exclusive".into(),
            )),
            (None, None) => Err(Error::Config(
                "wave: either a preset or explicit wavevectors is required".into(),
            )),
            (Some(name), None) => {
                let (pairs, drive) = preset_layout(name)?;
                let kmat = polygon_wavevectors(pairs, k)?;
                let base = kmat.to_uniform_config().map_err(prefix)?;
                match (drive, alpha, beta) {
                    (Some(_), Some(_), _) | (Some(_), _, Some(_)) => Err(Error::Config(format!(
                        "wave: preset {name} fixes the amplitudes; remove alpha/beta"
                    ))),
                    (Some(u), None, None) => base.with_drive_vector(&u).map_err(prefix),
                    (None, a, b) => {
                        let ones = vec![Complex64::new(1.0, 0.0); pairs];
                        base.with_amplitudes(a.unwrap_or_else(|| ones.clone()), b.unwrap_or(ones))
                            .map_err(prefix)
                    }
                }
            }
            (None, Some(kv)) => {
                let n = kv.len();
                let ones = vec![Complex64::new(1.0, 0.0); n];
                WaveConfig::new(k, kv, alpha.unwrap_or_else(|| ones.clone()), beta.unwrap_or(ones))
                    .map_err(prefix)
            }
        }
    }

    fn build_coefficients(&self, dim: usize) -> Result<ArpCoefficients> {
        match (&self.material, &self.coefficients) {
            (Some(_), Some(_)) => Err(Error::Config(
                "material and coefficients are mutually exclusive".into(),
            )),
            (None, None) => Err(Error::Config("material or coefficients required".into())),
            (Some(m), None) => arp_coefficients(&m.params(), dim, m.mode.into())
                .map_err(|e| Error::Config(format!("material: {e}"))),
            (None, Some(c)) => match &c.b {
                MatrixSpec::Scalar(b) => ArpCoefficients::isotropic(dim, c.a, *b, c.mode.into()),
                MatrixSpec::Matrix(m) => {
                    if m.len() != dim {
                        return Err(Error::Config(format!(
                            "coefficients.b: expected a {dim}x{dim} matrix"
                        )));
                    }
                    ArpCoefficients::with_matrix(c.a, m, c.mode.into())
                }
            }
            .map_err(|e| Error::Config(format!("coefficients: {e}"))),
        }
    }
}

/// Number of wave pairs and, for the experiment presets, the drive vector.
pub fn preset_layout(name: &str) -> Result<(usize, Option<Vec<Complex64>>)> {
    let c = |v: f64| Complex64::new(v, 0.0);
    Ok(match name {
        "pair" => (1, None),
        "square" => (2, None),
        "hexagon" => (3, None),
        "octagon" => (4, None),
        "decagon" => (5, None),
        "dodecagon" => (6, None),
        "exp1" => (4, Some(vec![c(1.0); 8])),
        "exp2" => (
            4,
            Some([1.0, -1.0, 1.0, 1.0, 1.0, -1.0, 1.0, 1.0].map(c).to_vec()),
        ),
        other => {
            return Err(Error::Config(format!(
                "wave.preset: unknown preset {other:?}, expected one of {}",
                PRESETS.join(", ")
            )))
        }
    })
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map(|p| before.len() - p).unwrap_or(before.len() + 1);
    (line, column)
}

/// Reads and validates a configuration file.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    RunConfig::from_toml_str(&text)
}
