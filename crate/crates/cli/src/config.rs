//! Experiment configuration: a TOML file with one table per concern.
//!
//! Every field has a default, so an empty file (or no file) describes the
//! weak-turbulence reference run: 850 nm, w = 40 mm, von Karman with
//! l0 = 1 mm and L0 = 1 m, 120 LG modes, `|Lambda_00 L| = 0.1` over 1 km.

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};
use turbmodes::turbulence::{DampingTable, SpectrumKind};
use turbmodes::{Basis, BeamGeometry, Family, ModeId, TurbulenceModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub beam: BeamConfig,
    pub turbulence: TurbulenceConfig,
    pub basis: BasisConfig,
    pub strength: StrengthConfig,
    pub channel: ChannelConfig,
    pub simulation: SimulationConfig,
    pub output: OutputConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 1,
            beam: BeamConfig::default(),
            turbulence: TurbulenceConfig::default(),
            basis: BasisConfig::default(),
            strength: StrengthConfig { lambda00l: Some(0.1), ..StrengthConfig::default() },
            channel: ChannelConfig::default(),
            simulation: SimulationConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BeamConfig {
    pub wavelength: f64,
    /// Waist radius w0.
    pub waist: f64,
    /// Channel entrance relative to the waist; when absent the channel is
    /// centred on the waist.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
}

impl Default for BeamConfig {
    fn default() -> Self {
        BeamConfig { wavelength: 850e-9, waist: 0.04, start: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TurbulenceKind {
    Kolmogorov,
    VonKarman,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TurbulenceConfig {
    pub model: TurbulenceKind,
    pub inner_scale: f64,
    pub outer_scale: f64,
    /// Two-column `f D(f)` file for `model = "custom"`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table: Option<PathBuf>,
}

impl Default for TurbulenceConfig {
    fn default() -> Self {
        TurbulenceConfig { model: TurbulenceKind::VonKarman, inner_scale: 1e-3, outer_scale: 1.0, table: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BasisConfig {
    pub family: String,
    pub n_max: u32,
}

impl Default for BasisConfig {
    fn default() -> Self {
        BasisConfig { family: "LG".into(), n_max: 14 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StrengthConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cn2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r0: Option<f64>,
    /// Target `|Lambda_00 L|` over the whole channel.
    #[serde(rename = "lambda00L", skip_serializing_if = "Option::is_none")]
    pub lambda00l: Option<f64>,
}

/// Resolved strength specification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Strength {
    Cn2(f64),
    R0(f64),
    Lambda00L(f64),
}

impl fmt::Display for Strength {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strength::Cn2(v) => write!(f, "cn2={v}"),
            Strength::R0(v) => write!(f, "r0={v}"),
            Strength::Lambda00L(v) => write!(f, "lambda00L={v}"),
        }
    }
}

impl std::str::FromStr for Strength {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        let (key, value) = s.split_once('=').context("expected KEY=VALUE with KEY one of cn2, r0, lambda00L")?;
        let v: f64 = value.trim().parse().with_context(|| format!("bad number '{value}'"))?;
        match key.trim() {
            "cn2" => Ok(Strength::Cn2(v)),
            "r0" => Ok(Strength::R0(v)),
            "lambda00L" => Ok(Strength::Lambda00L(v)),
            other => bail!("unknown strength key '{other}' (expected cn2, r0 or lambda00L)"),
        }
    }
}

impl StrengthConfig {
    pub fn from_strength(s: Strength) -> Self {
        match s {
            Strength::Cn2(v) => StrengthConfig { cn2: Some(v), ..Default::default() },
            Strength::R0(v) => StrengthConfig { r0: Some(v), ..Default::default() },
            Strength::Lambda00L(v) => StrengthConfig { lambda00l: Some(v), ..Default::default() },
        }
    }

    pub fn resolve(&self) -> Result<Strength> {
        let set: Vec<Strength> = [
            self.cn2.map(Strength::Cn2),
            self.r0.map(Strength::R0),
            self.lambda00l.map(Strength::Lambda00L),
        ]
        .into_iter()
        .flatten()
        .collect();
        ensure!(set.len() == 1, "strength: exactly one of cn2, r0, lambda00L must be set (found {})", set.len());
        let s = set[0];
        match s {
            Strength::Cn2(v) | Strength::Lambda00L(v) => {
                ensure!(v >= 0.0 && v.is_finite(), "strength: {s} must be finite and non-negative")
            }
            Strength::R0(v) => ensure!(v > 0.0 && v.is_finite(), "strength: r0 must be positive"),
        }
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentConfig {
    pub length: f64,
    /// Relative Cn2 of this segment.
    #[serde(default = "one")]
    pub weight: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelConfig {
    pub length: f64,
    /// Optional split into consecutive segments; lengths must add up to
    /// `length`.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub segments: Vec<SegmentConfig>,
    /// Evaluate every segment with the beam at the channel midpoint instead
    /// of its own midpoint.
    pub fixed_width: bool,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        ChannelConfig { length: 1000.0, segments: Vec::new(), fixed_width: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    pub realizations: usize,
    /// Screens per realization.
    pub screens: usize,
    /// Split-step propagation between screens; otherwise all screens sit at
    /// the channel midpoint.
    pub propagate: bool,
    pub points: usize,
    pub pitch: f64,
    pub lowest_frequency: f64,
    pub components: usize,
    pub subharmonic_levels: u32,
    /// Launched mode; the fundamental of the basis family when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<String>,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            realizations: 500,
            screens: 1,
            propagate: false,
            points: 512,
            pitch: 1.5625e-3,
            lowest_frequency: 0.2,
            components: 828,
            subharmonic_levels: 10,
            input: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Number of phase screens to dump as raw binaries.
    pub dump_screens: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: PathBuf::from("out"), dump_screens: 0 }
    }
}

/// One uniform stretch after resolving positions and weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentPlan {
    pub length: f64,
    pub weight: f64,
    /// Beam at the segment midpoint.
    pub geometry: BeamGeometry,
}

impl ExperimentConfig {
    /// Parses TOML; a `[run]` table (written into metadata) is ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut table: toml::Table = text.parse().context("config is not valid TOML")?;
        table.remove("run");
        let config: ExperimentConfig = table.try_into().context("invalid config")?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// Applies `--full-scale`: 1024 x 0.78125 mm grid and 10600 realizations.
    pub fn full_scale(&mut self) {
        let g = turbmodes::simulator::Grid::full_scale();
        self.simulation.points = g.points;
        self.simulation.pitch = g.pitch;
        self.simulation.realizations = 10600;
    }

    pub fn family(&self) -> Result<Family> {
        self.basis.family.parse().map_err(|e| anyhow::anyhow!("basis.family: {e}"))
    }

    pub fn basis(&self) -> Result<Basis> {
        Ok(Basis::enumerate(self.family()?, self.basis.n_max))
    }

    pub fn input_mode(&self) -> Result<ModeId> {
        let family = self.family()?;
        let mode = match &self.simulation.input {
            Some(label) => label.parse::<ModeId>().map_err(|e| anyhow::anyhow!("simulation.input: {e}"))?,
            None => ModeId::fundamental(family),
        };
        ensure!(mode.family() == family, "simulation.input {mode} is not a {family} mode");
        ensure!(
            mode.order() <= self.basis.n_max,
            "simulation.input {mode} lies outside the basis (n_max = {})",
            self.basis.n_max
        );
        Ok(mode)
    }

    pub fn start(&self) -> f64 {
        self.beam.start.unwrap_or(-self.channel.length / 2.0)
    }

    pub fn geometry_at(&self, z: f64) -> Result<BeamGeometry> {
        Ok(BeamGeometry::new(self.beam.wavelength, self.beam.waist, z)?)
    }

    /// Turbulence model with the given `Cn^2`.
    pub fn turbulence(&self, cn2: f64) -> Result<TurbulenceModel> {
        let t = &self.turbulence;
        let kind = match t.model {
            TurbulenceKind::Kolmogorov => SpectrumKind::Kolmogorov,
            TurbulenceKind::VonKarman => {
                SpectrumKind::VonKarman { inner_scale: t.inner_scale, outer_scale: t.outer_scale }
            }
            TurbulenceKind::Custom => {
                let path = t.table.as_ref().context("turbulence.table is required for model = \"custom\"")?;
                SpectrumKind::Custom { table: DampingTable::load(path)? }
            }
        };
        TurbulenceModel::new(cn2, kind).context("turbulence")
    }

    /// Segments in channel order, each with its midpoint beam.
    pub fn segments(&self) -> Result<Vec<SegmentPlan>> {
        let total = self.channel.length;
        let mut z = self.start();
        let middle = self.geometry_at(z + total / 2.0)?;
        if self.channel.segments.is_empty() {
            return Ok(vec![SegmentPlan { length: total, weight: 1.0, geometry: middle }]);
        }
        let mut out = Vec::new();
        for (i, s) in self.channel.segments.iter().enumerate() {
            ensure!(s.length > 0.0 && s.length.is_finite(), "channel.segments[{i}].length must be positive");
            ensure!(s.weight >= 0.0 && s.weight.is_finite(), "channel.segments[{i}].weight must be non-negative");
            let geometry = if self.channel.fixed_width { middle } else { self.geometry_at(z + s.length / 2.0)? };
            out.push(SegmentPlan { length: s.length, weight: s.weight, geometry });
            z += s.length;
        }
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(self.beam.wavelength > 0.0, "beam.wavelength must be positive");
        ensure!(self.beam.waist > 0.0, "beam.waist must be positive");
        ensure!(
            self.channel.length >= 0.0 && self.channel.length.is_finite(),
            "channel.length must be finite and non-negative"
        );
        if !self.channel.segments.is_empty() {
            let sum: f64 = self.channel.segments.iter().map(|s| s.length).sum();
            ensure!(
                (sum / self.channel.length - 1.0).abs() < 1e-9,
                "channel.segments lengths add up to {sum} m, not channel.length = {} m",
                self.channel.length
            );
        }
        self.strength.resolve()?;
        self.family()?;
        self.input_mode()?;
        self.turbulence(1e-15)?;
        self.segments()?;
        let s = &self.simulation;
        ensure!(s.realizations > 0, "simulation.realizations must be at least 1");
        ensure!(s.screens > 0, "simulation.screens must be at least 1");
        ensure!(s.points >= 2 && s.pitch > 0.0, "simulation.points and simulation.pitch must be positive");
        ensure!(s.lowest_frequency > 0.0, "simulation.lowest_frequency must be positive");
        ensure!(s.components > 0, "simulation.components must be positive");
        Ok(())
    }
}
