//! Scenario configuration: a TOML document describing the sweep axes and the
//! simulation geometry.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Grid;
use crate::mub::MAX_DIMENSION;
use crate::turbulence::DEFAULT_TERMS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoKeyword {
    Auto,
}

/// A value that is either given explicitly or resolved automatically (`"auto"`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AutoOr<T> {
    Auto(AutoKeyword),
    Value(T),
}

impl<T> Default for AutoOr<T> {
    fn default() -> Self {
        AutoOr::Auto(AutoKeyword::Auto)
    }
}

impl<T: Copy> AutoOr<T> {
    pub fn value(&self) -> Option<T> {
        match self {
            AutoOr::Auto(_) => None,
            AutoOr::Value(v) => Some(*v),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Prepare and measure: Alice's state crosses the channel once.
    Pm,
    /// Bob's probe crosses the channel, seeds Alice's crystal, and the idler returns.
    Stimpdc,
}

impl Scheme {
    pub fn tag(self) -> u64 {
        match self {
            Scheme::Pm => 0,
            Scheme::Stimpdc => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Pm => "pm",
            Scheme::Stimpdc => "stimpdc",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub samples: usize,
    /// Window side length in meters.
    #[serde(default)]
    pub extent: AutoOr<f64>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { samples: 512, extent: AutoOr::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScreenConfig {
    /// Diameter of the disc carrying turbulent phase, in meters.
    #[serde(default)]
    pub aperture: AutoOr<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetectionMode {
    /// Exact overlap integral.
    #[default]
    Exact,
    /// Hologram projection with on-axis collection in the lens focal plane.
    OnAxis,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionConfig {
    #[serde(default)]
    pub mode: DetectionMode,
    #[serde(default)]
    pub disc_radius: AutoOr<f64>,
    #[serde(default = "default_focal_length")]
    pub focal_length: f64,
}

fn default_focal_length() -> f64 {
    0.5
}

impl Default for DetectionConfig {
    fn default() -> Self {
        Self { mode: DetectionMode::Exact, disc_radius: AutoOr::default(), focal_length: default_focal_length() }
    }
}

fn default_terms() -> usize {
    DEFAULT_TERMS
}

/// Everything needed to reproduce a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub dimensions: Vec<usize>,
    pub schemes: Vec<Scheme>,
    /// Turbulence strengths `D_B/r0` with `D_B = 2·w_B`.
    pub d_over_r0: Vec<f64>,
    /// Channel length in meters.
    pub path_length: f64,
    pub wavelength: f64,
    /// `w_B / w_A`.
    pub gamma: f64,
    #[serde(default)]
    pub probe_waist: AutoOr<f64>,
    pub realizations: usize,
    pub master_seed: u64,
    #[serde(default = "default_terms")]
    pub zernike_terms: usize,
    #[serde(default)]
    pub segments: AutoOr<usize>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub screens: ScreenConfig,
    #[serde(default)]
    pub detection: DetectionConfig,
}

/// Named starting configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Preset {
    /// 512 samples, window sized to the beams.
    Desk,
    /// 1200 samples over a 0.24 m window.
    Full,
}

impl ScenarioConfig {
    /// Two- and five-dimensional states over 1 km at `D/r0 = 1..5`.
    pub fn preset(preset: Preset) -> Self {
        let base = Self {
            dimensions: vec![2, 5],
            schemes: vec![Scheme::Pm, Scheme::Stimpdc],
            d_over_r0: vec![1.0, 2.0, 3.0, 4.0, 5.0],
            path_length: 1000.0,
            wavelength: 810e-9,
            gamma: 2.0,
            probe_waist: AutoOr::Value(0.03),
            realizations: 50,
            master_seed: 20_240_601,
            zernike_terms: DEFAULT_TERMS,
            segments: AutoOr::Value(4),
            grid: GridConfig::default(),
            screens: ScreenConfig::default(),
            detection: DetectionConfig::default(),
        };
        match preset {
            Preset::Desk => base,
            Preset::Full => Self { grid: GridConfig { samples: 1200, extent: AutoOr::Value(0.24) }, ..base },
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.dimensions.is_empty() || self.schemes.is_empty() || self.d_over_r0.is_empty() {
            return bad("dimensions, schemes and d_over_r0 must be non-empty".into());
        }
        if let Some(&d) = self.dimensions.iter().find(|&&d| !(2..=MAX_DIMENSION).contains(&d)) {
            return bad(format!("dimension {d} outside 2..={MAX_DIMENSION}"));
        }
        if let Some(x) = self.d_over_r0.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
            return bad(format!("D/r0 must be finite and non-negative, got {x}"));
        }
        for (name, v) in [("path_length", self.path_length), ("wavelength", self.wavelength), ("gamma", self.gamma)] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        for (name, v) in [
            ("probe_waist", self.probe_waist.value()),
            ("grid.extent", self.grid.extent.value()),
            ("screens.aperture", self.screens.aperture.value()),
            ("detection.disc_radius", self.detection.disc_radius.value()),
            ("detection.focal_length", Some(self.detection.focal_length)),
        ] {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return bad(format!("{name} must be positive, got {v}"));
                }
            }
        }
        if self.realizations < 1 {
            return bad("realizations must be at least 1".into());
        }
        if self.zernike_terms < 3 {
            return bad(format!("zernike_terms must be at least 3, got {}", self.zernike_terms));
        }
        if self.segments.value() == Some(0) {
            return bad("segments must be at least 1".into());
        }
        if self.grid.samples < Grid::MIN_SAMPLES {
            return bad(format!("grid.samples must be at least {}", Grid::MIN_SAMPLES));
        }
        if self.master_seed > i64::MAX as u64 {
            return bad("master_seed must fit in a signed 64-bit integer".into());
        }
        Ok(())
    }
}
