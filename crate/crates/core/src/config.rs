//! The JSON run configuration read by the command-line front end.
//!
//! A config is a single object with a `version` field, an optional pair of
//! map specifications and one optional block per subcommand. Unknown keys are
//! rejected everywhere. Range checks run during deserialisation, and errors
//! carry the dotted path of the offending field plus a line and column.

use std::path::{Path, PathBuf};

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize};
use sha2::{Digest, Sha256};

use crate::connectivity::ClassifyPolicy;
use crate::error::{Error, Result};
use crate::linalg::{self, Vector};
use crate::mandelbrot::{ParamWindow, SweepPolicy, TileSpec};
use crate::maps::{AffineMap, Body, ContractionMap, ContractionModulus, NamedBody, TabulatedModulus};
use crate::porosity::{scan_policy, TruncationFamily};
use crate::sets::CellSet;

pub const FORMAT_VERSION: u32 = 1;

/// A strictly positive finite real.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Positive(f64);

impl Positive {
    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Positive {
    type Error = String;
    fn try_from(v: f64) -> std::result::Result<Self, String> {
        if v > 0.0 && v.is_finite() {
            Ok(Positive(v))
        } else {
            Err(format!("expected a positive finite number, got {v}"))
        }
    }
}

impl From<Positive> for f64 {
    fn from(p: Positive) -> f64 {
        p.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct Version(u32);

impl TryFrom<u32> for Version {
    type Error = String;
    fn try_from(v: u32) -> std::result::Result<Self, String> {
        if v == FORMAT_VERSION {
            Ok(Version(v))
        } else {
            Err(format!("unsupported config version {v}, expected {FORMAT_VERSION}"))
        }
    }
}

impl From<Version> for u32 {
    fn from(v: Version) -> u32 {
        v.0
    }
}

/// Blocks whose invariants span several fields.
trait Check {
    fn check(&self) -> Result<()>;
}

fn checked<'de, D, T>(d: D) -> std::result::Result<T, D::Error>
where
    D: Deserializer<'de>,
    T: Deserialize<'de> + Check,
{
    let v = T::deserialize(d)?;
    v.check().map_err(|e| D::Error::custom(strip(e)))?;
    Ok(v)
}

fn checked_opt<'de, D, T>(d: D) -> std::result::Result<Option<T>, D::Error>
where
    D: Deserializer<'de>,
    T: Deserialize<'de> + Check,
{
    let v = Option::<T>::deserialize(d)?;
    if let Some(x) = &v {
        x.check().map_err(|e| D::Error::custom(strip(e)))?;
    }
    Ok(v)
}

fn strip(e: Error) -> String {
    match e {
        Error::InvalidArgument(m) | Error::Config(m) => m,
        other => other.to_string(),
    }
}

impl Check for ClassifyPolicy {
    fn check(&self) -> Result<()> {
        self.validate()
    }
}

impl Check for SweepPolicy {
    fn check(&self) -> Result<()> {
        self.classify.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ModulusSpec {
    Linear { rate: f64 },
    Tabulated { t: Vec<f64>, phi: Vec<f64> },
}

impl ModulusSpec {
    pub fn build(&self) -> Result<ContractionModulus> {
        match self {
            ModulusSpec::Linear { rate } => ContractionModulus::linear(*rate),
            ModulusSpec::Tabulated { t, phi } => {
                Ok(ContractionModulus::Tabulated(TabulatedModulus::new(t.clone(), phi.clone())?))
            }
        }
    }
}

fn default_verify_samples() -> usize {
    4096
}

/// One map of the pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum MapSpec {
    /// `x ↦ Mx + offset`; the offset defaults to zero.
    Affine {
        matrix: Vec<Vec<f64>>,
        #[serde(default)]
        offset: Option<Vec<f64>>,
    },
    /// `x ↦ factor·x` on `ℝ^dim`.
    Scalar { dim: usize, factor: f64 },
    Diagonal { entries: Vec<f64> },
    /// A builtin nonlinear body with a claimed modulus, checked by sampling.
    Builtin {
        name: String,
        dim: usize,
        modulus: ModulusSpec,
        #[serde(default = "default_verify_samples")]
        verify_samples: usize,
    },
}

impl MapSpec {
    pub fn build(&self, seed: u64) -> Result<ContractionMap> {
        match self {
            MapSpec::Affine { matrix, offset } => {
                let m = linalg::matrix_from_rows(matrix)?;
                let b = match offset {
                    Some(o) => Vector::from_column_slice(o),
                    None => Vector::zeros(m.nrows()),
                };
                ContractionMap::affine(AffineMap::new(m, b)?)
            }
            MapSpec::Scalar { dim, factor } => {
                if *dim == 0 {
                    return Err(Error::InvalidArgument("dim must be at least 1".into()));
                }
                ContractionMap::affine(AffineMap::scalar(*dim, *factor)?)
            }
            MapSpec::Diagonal { entries } => {
                if entries.is_empty() {
                    return Err(Error::InvalidArgument("diagonal needs at least one entry".into()));
                }
                ContractionMap::affine(AffineMap::diagonal(entries)?)
            }
            MapSpec::Builtin { name, dim, modulus, verify_samples } => {
                let body = NamedBody::builtin(name, *dim).ok_or_else(|| {
                    Error::InvalidArgument(format!(
                        "unknown builtin {name:?} or zero dimension; known: {}",
                        crate::maps::BUILTIN_NAMES.join(", ")
                    ))
                })?;
                ContractionMap::verified(Body::Named(body), modulus.build()?, *verify_samples, seed)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapsSpec {
    pub f: MapSpec,
    pub g: MapSpec,
}

impl Check for MapsSpec {
    fn check(&self) -> Result<()> {
        let f = self.f.build(0)?;
        let g = self.g.build(0)?;
        crate::error::check_dim(f.dim(), g.dim())
    }
}

impl MapsSpec {
    pub fn build(&self, seed: u64) -> Result<(ContractionMap, ContractionMap)> {
        let f = self.f.build(seed)?;
        let g = self.g.build(seed)?;
        crate::error::check_dim(f.dim(), g.dim())?;
        Ok((f, g))
    }
}

/// A parameter window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum WindowSpec {
    /// `[lo, hi]` on the real line.
    Interval { lo: f64, hi: f64, resolution: usize },
    /// Square in the first two coordinates around `center`.
    Square { center: Vec<f64>, half_width: Positive, resolution: usize },
    /// Explicit centre, axes and half-widths.
    General(ParamWindow),
}

impl WindowSpec {
    pub fn build(&self) -> Result<ParamWindow> {
        match self {
            WindowSpec::Interval { lo, hi, resolution } => ParamWindow::interval(*lo, *hi, *resolution),
            WindowSpec::Square { center, half_width, resolution } => {
                ParamWindow::square(Vector::from_column_slice(center), half_width.get(), *resolution)
            }
            WindowSpec::General(w) => {
                w.validate()?;
                Ok(w.clone())
            }
        }
    }
}

impl Check for WindowSpec {
    fn check(&self) -> Result<()> {
        self.build().map(|_| ())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttractorBlock {
    pub w: Vec<f64>,
    pub eps: Positive,
    /// Stopping tolerance; `eps/4` when absent.
    #[serde(default)]
    pub tol: Option<Positive>,
    #[serde(default)]
    pub max_iterations: Option<usize>,
    #[serde(default)]
    pub max_cells: Option<usize>,
    /// Also run the chaos game with this many points.
    #[serde(default)]
    pub chaos_points: Option<usize>,
}

impl Check for AttractorBlock {
    fn check(&self) -> Result<()> {
        if self.max_iterations == Some(0) || self.max_cells == Some(0) {
            return Err(Error::InvalidArgument("budgets must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifyBlock {
    pub w: Vec<f64>,
    #[serde(default, deserialize_with = "checked")]
    pub policy: ClassifyPolicy,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    #[serde(deserialize_with = "checked")]
    pub window: WindowSpec,
    #[serde(default, deserialize_with = "checked")]
    pub policy: SweepPolicy,
    /// Rounds of boundary refinement applied after the sweep.
    #[serde(default)]
    pub refine_depth: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TilesBlock {
    #[serde(deserialize_with = "checked")]
    pub tile: TileSpec,
    #[serde(default, deserialize_with = "checked")]
    pub policy: ClassifyPolicy,
    /// When present, the translation of the second digit map is swept over
    /// this window as well.
    #[serde(default, deserialize_with = "checked_opt")]
    pub window: Option<WindowSpec>,
}

impl Check for TileSpec {
    fn check(&self) -> Result<()> {
        self.validate()?;
        if self.digits.len() != 2 {
            return Err(Error::InvalidArgument(format!(
                "tiles needs exactly two digits for a two-map system, got {}",
                self.digits.len()
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxSpec {
    pub fn cover(&self, eps: f64) -> Result<CellSet> {
        CellSet::cover_box(&self.lo, &self.hi, eps)
    }
}

impl Check for BoxSpec {
    fn check(&self) -> Result<()> {
        if self.lo.is_empty() || self.lo.len() != self.hi.len() {
            return Err(Error::InvalidArgument("box corners must have equal, nonzero length".into()));
        }
        if self.lo.iter().zip(&self.hi).any(|(l, h)| !(l <= h)) {
            return Err(Error::InvalidArgument("box needs lo <= hi in every coordinate".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MsetMethod {
    #[default]
    ClosedForm,
    Direct,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MsetBlock {
    pub n: usize,
    #[serde(deserialize_with = "checked")]
    pub domain: BoxSpec,
    pub eps: Positive,
    #[serde(deserialize_with = "checked")]
    pub window: WindowSpec,
    #[serde(default)]
    pub method: MsetMethod,
}

impl Check for MsetBlock {
    fn check(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidArgument("n must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoveringBlock {
    /// Radius of the parameter ball the bound applies to.
    pub k: Positive,
    pub nmax: usize,
    pub eps: Positive,
    #[serde(deserialize_with = "checked")]
    pub window: WindowSpec,
}

impl Check for CoveringBlock {
    fn check(&self) -> Result<()> {
        if self.nmax == 0 {
            return Err(Error::InvalidArgument("nmax must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeBlock {
    pub radius: Positive,
    pub alpha: f64,
    pub trials: usize,
}

impl Check for ProbeBlock {
    fn check(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidArgument(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.trials == 0 {
            return Err(Error::InvalidArgument("trials must be at least 1".into()));
        }
        Ok(())
    }
}

fn default_family() -> TruncationFamily {
    TruncationFamily::default_decaying(vec![2, 4, 8])
}

fn default_radius() -> Positive {
    Positive(2.0)
}

fn default_samples() -> usize {
    400
}

impl Check for TruncationFamily {
    fn check(&self) -> Result<()> {
        self.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PorosityBlock {
    #[serde(default = "default_family", deserialize_with = "checked")]
    pub family: TruncationFamily,
    #[serde(default = "default_radius")]
    pub radius: Positive,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "scan_policy", deserialize_with = "checked")]
    pub policy: ClassifyPolicy,
    /// Strong-porosity witness search around the origin among the CONNECTED
    /// samples of each dimension.
    #[serde(default, deserialize_with = "checked_opt")]
    pub probe: Option<ProbeBlock>,
}

impl Default for PorosityBlock {
    fn default() -> Self {
        PorosityBlock {
            family: default_family(),
            radius: default_radius(),
            samples: default_samples(),
            policy: scan_policy(),
            probe: None,
        }
    }
}

impl Check for PorosityBlock {
    fn check(&self) -> Result<()> {
        if self.samples < 100 {
            return Err(Error::InvalidArgument(format!("samples must be at least 100, got {}", self.samples)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: Version,
    #[serde(default, deserialize_with = "checked_opt")]
    pub maps: Option<MapsSpec>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub output: Option<OutputSpec>,
    #[serde(default, deserialize_with = "checked_opt")]
    pub attractor: Option<AttractorBlock>,
    #[serde(default)]
    pub classify: Option<ClassifyBlock>,
    #[serde(default)]
    pub sweep: Option<SweepBlock>,
    #[serde(default)]
    pub tiles: Option<TilesBlock>,
    #[serde(default, deserialize_with = "checked_opt")]
    pub mset: Option<MsetBlock>,
    #[serde(default, deserialize_with = "checked_opt")]
    pub covering: Option<CoveringBlock>,
    #[serde(default, deserialize_with = "checked_opt")]
    pub porosity: Option<PorosityBlock>,
}

/// A parsed config together with the hash of its canonical form.
#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub config: RunConfig,
    /// Hex SHA-256 of the config re-serialised with sorted keys and no
    /// whitespace, so formatting changes do not alter it.
    pub hash: String,
}

impl LoadedConfig {
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("{origin}: {e}")))?;
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            if path == "." {
                Error::Config(format!("{origin}: {inner}"))
            } else {
                Error::Config(format!("{origin}: {path}: {inner}"))
            }
        })?;
        let canonical = serde_json::to_vec(&value).map_err(|e| Error::Config(e.to_string()))?;
        Ok(LoadedConfig { config, hash: hex::encode(Sha256::digest(&canonical)) })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: cannot read config: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }
}
