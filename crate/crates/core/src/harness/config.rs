//! Experiment configuration, read from TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dyadic::BuildOptions;
use crate::error::{Error, Result};
use crate::orlicz::YoungFunction;
use crate::space::{Metric, Space};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    /// `n` points on `[0, 1]`, endpoints included.
    Interval,
    /// `n` cell midpoints of `[0, 1)`.
    Cells,
    /// `n` equally spaced points on the unit circle.
    Circle,
    /// `n` seeded random points in the unit square.
    Cloud,
    /// `sqrt(n) x sqrt(n)` unit lattice.
    Lattice,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    #[default]
    Euclidean,
    Squared,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSpec {
    pub model: Model,
    pub n: usize,
    /// Shorthand for the circle model.
    #[serde(default)]
    pub periodic: bool,
    #[serde(default)]
    pub metric: MetricKind,
}

impl SpaceSpec {
    pub fn build(&self, seed: u64) -> Result<Space<f64>> {
        let metric = match self.metric {
            MetricKind::Euclidean => Metric::Euclidean,
            MetricKind::Squared => Metric::Squared,
        };
        let model = if self.periodic {
            Model::Circle
        } else {
            self.model
        };
        let space = match model {
            Model::Interval => Space::uniform_interval(self.n)?,
            Model::Cells => Space::uniform_cells(self.n)?,
            Model::Circle => Space::uniform_circle(self.n)?,
            Model::Cloud => return Space::random_cloud(self.n, seed, metric),
            Model::Lattice => {
                let m = (self.n as f64).sqrt().round() as usize;
                if m * m != self.n {
                    return Err(Error::Config(format!(
                        "lattice needs a square point count, got {}",
                        self.n
                    )));
                }
                return Space::lattice(m, metric);
            }
        };
        if metric == Metric::Euclidean {
            Ok(space)
        } else {
            space.with_metric(metric)
        }
    }
}

/// Weight generators. Coordinates enter through the distance to `x0`
/// (broadcast over all axes, wrapped on the circle) or through the first
/// coordinate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum WeightSpec {
    Constant {
        #[serde(default = "one")]
        c: f64,
    },
    /// `|x - x0|^a + floor`.
    Power {
        a: f64,
        #[serde(default)]
        x0: f64,
        #[serde(default)]
        floor: f64,
    },
    /// `1` on `lo <= x_1 < hi`, else `0`.
    Indicator {
        #[serde(default)]
        lo: f64,
        #[serde(default = "half")]
        hi: f64,
    },
    /// `m` on `x_1 < split`, `1` elsewhere.
    TwoValue {
        m: f64,
        #[serde(default = "half")]
        split: f64,
    },
    /// `exp(s Z)` with i.i.d. standard normal `Z`.
    LognormalRandom { s: f64 },
}

fn one() -> f64 {
    1.0
}

fn half() -> f64 {
    0.5
}

impl WeightSpec {
    /// Builds a spec from a kind name and named parameters.
    pub fn named(kind: &str, params: &[(&str, f64)]) -> Result<Self> {
        let mut map = serde_json::Map::new();
        map.insert("kind".into(), kind.into());
        for (k, v) in params {
            map.insert((*k).into(), (*v).into());
        }
        serde_json::from_value(serde_json::Value::Object(map))
            .map_err(|e| Error::Config(format!("weight {kind}: {e}")))
    }

    pub fn name(&self) -> &'static str {
        match self {
            WeightSpec::Constant { .. } => "constant",
            WeightSpec::Power { .. } => "power",
            WeightSpec::Indicator { .. } => "indicator",
            WeightSpec::TwoValue { .. } => "two-value",
            WeightSpec::LognormalRandom { .. } => "lognormal-random",
        }
    }

    /// The same power weight with exponent `a`.
    pub(crate) fn with_exponent(&self, a: f64) -> Result<Self> {
        match self {
            WeightSpec::Power { x0, floor, .. } => Ok(WeightSpec::Power {
                a,
                x0: *x0,
                floor: *floor,
            }),
            other => Err(Error::Config(format!(
                "exponent sweep needs a power weight, got {}",
                other.name()
            ))),
        }
    }
}

/// Bump data for the second theorem: power bumps `t^{p' r}`, `t^{p s}` or
/// explicit Young functions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BumpSpec {
    Powers {
        r: f64,
        s: f64,
    },
    Young {
        phi: YoungFunction<f64>,
        psi: YoungFunction<f64>,
    },
}

impl Default for BumpSpec {
    fn default() -> Self {
        BumpSpec::Powers { r: 2.0, s: 2.0 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendChoice {
    /// Shifted grids on 1-D Euclidean models, nets elsewhere.
    #[default]
    Auto,
    Nets,
    Euclidean,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DyadicSpec {
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default = "default_systems")]
    pub systems: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub backend: BackendChoice,
}

fn default_eta() -> f64 {
    0.01
}

fn default_systems() -> usize {
    3
}

impl Default for DyadicSpec {
    fn default() -> Self {
        DyadicSpec {
            eta: default_eta(),
            systems: default_systems(),
            seed: 0,
            backend: BackendChoice::Auto,
        }
    }
}

impl DyadicSpec {
    pub fn options(&self, space: &Space<f64>) -> BuildOptions<f64> {
        let line = space.dimension() == 1 && *space.metric() == Metric::Euclidean;
        let euclid = match self.backend {
            BackendChoice::Auto => line,
            BackendChoice::Nets => false,
            BackendChoice::Euclidean => true,
        };
        if euclid {
            BuildOptions::euclidean(self.systems, self.seed)
        } else {
            BuildOptions::new(self.eta, self.systems, self.seed)
        }
    }
}

/// Parameter lists; each present axis multiplies the instance count.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    /// Exponents substituted into a power `w`.
    pub a: Option<Vec<f64>>,
    /// Exponents substituted into a power `sigma`.
    pub b: Option<Vec<f64>>,
    pub p: Option<Vec<f64>>,
    /// Sets `r = s` for power bumps.
    pub r: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormSpec {
    /// Starts for the lower estimate in interval mode.
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Multiplier of the testing sum giving the upper estimate at `p = 2`;
    /// other exponents scale it by `max(p, p') / 2`.
    #[serde(default = "default_c_test")]
    pub c_test: f64,
    #[serde(default = "default_cap")]
    pub dense_cap: usize,
}

fn default_trials() -> usize {
    40
}

fn default_c_test() -> f64 {
    super::C_TEST
}

fn default_cap() -> usize {
    crate::sparse::DENSE_CAP
}

impl Default for NormSpec {
    fn default() -> Self {
        NormSpec {
            trials: default_trials(),
            c_test: default_c_test(),
            dense_cap: default_cap(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Table,
    Plotdata,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "table" => Ok(Format::Table),
            "plotdata" => Ok(Format::Plotdata),
            other => Err(Error::Config(format!("unknown format {other}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default = "default_stem")]
    pub stem: String,
    #[serde(default)]
    pub format: Format,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_stem() -> String {
    "report".into()
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            dir: default_dir(),
            stem: default_stem(),
            format: Format::Csv,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    pub space: SpaceSpec,
    pub w: WeightSpec,
    pub sigma: WeightSpec,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default)]
    pub bumps: BumpSpec,
    #[serde(default)]
    pub dyadic: DyadicSpec,
    #[serde(default)]
    pub sweep: Sweep,
    #[serde(default)]
    pub norm: NormSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

fn default_p() -> f64 {
    2.0
}

impl ExperimentConfig {
    /// Config with defaults for everything but the space and weights.
    pub fn new(space: SpaceSpec, w: WeightSpec, sigma: WeightSpec) -> Self {
        ExperimentConfig {
            seed: 0,
            space,
            w,
            sigma,
            p: default_p(),
            bumps: BumpSpec::default(),
            dyadic: DyadicSpec::default(),
            sweep: Sweep::default(),
            norm: NormSpec::default(),
            output: OutputSpec::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Serde(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.space.n == 0 {
            return bad("space needs at least one point".into());
        }
        for (axis, vals) in self.sweep.axes() {
            if vals.is_empty() {
                return bad(format!("sweep axis {axis} is empty"));
            }
            if vals.iter().any(|v| !v.is_finite()) {
                return bad(format!("sweep axis {axis} has a non-finite value"));
            }
        }
        if self.sweep.a.is_some() {
            self.w.with_exponent(0.0)?;
        }
        if self.sweep.b.is_some() {
            self.sigma.with_exponent(0.0)?;
        }
        if self.sweep.r.is_some() && !matches!(self.bumps, BumpSpec::Powers { .. }) {
            return bad("an r sweep needs power bumps".into());
        }
        for p in self.sweep.p.clone().unwrap_or_else(|| vec![self.p]) {
            if !(p > 1.0) || !p.is_finite() {
                return bad(format!("exponent p = {p} must exceed 1"));
            }
        }
        if let BumpSpec::Young { phi, psi } = &self.bumps {
            phi.clone()
                .validate()
                .map_err(|e| Error::Config(format!("phi: {e}")))?;
            psi.clone()
                .validate()
                .map_err(|e| Error::Config(format!("psi: {e}")))?;
        }
        if self.dyadic.systems == 0 {
            return bad("at least one dyadic system is required".into());
        }
        if self.norm.trials == 0 {
            return bad("norm trials must be positive".into());
        }
        for spec in [&self.w, &self.sigma] {
            spec_ok(spec)?;
        }
        Ok(())
    }
}

fn spec_ok(spec: &WeightSpec) -> Result<()> {
    let ok = match *spec {
        WeightSpec::Constant { c } => c >= 0.0 && c.is_finite(),
        WeightSpec::Power { a, x0, floor } => {
            a.is_finite() && x0.is_finite() && floor >= 0.0 && floor.is_finite()
        }
        WeightSpec::Indicator { lo, hi } => lo <= hi,
        WeightSpec::TwoValue { m, split } => m >= 0.0 && m.is_finite() && split.is_finite(),
        WeightSpec::LognormalRandom { s } => s.is_finite(),
    };
    if ok {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "bad parameters for {} weight",
            spec.name()
        )))
    }
}

impl Sweep {
    /// Present axes in the fixed order `p, a, b, r`.
    pub fn axes(&self) -> Vec<(&'static str, &[f64])> {
        [
            ("p", &self.p),
            ("a", &self.a),
            ("b", &self.b),
            ("r", &self.r),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.as_deref().map(|v| (k, v)))
        .collect()
    }
}
