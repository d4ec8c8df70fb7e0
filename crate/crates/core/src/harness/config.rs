//! Scenario files: TOML with a `schema_version` key and one level of sections.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reference::Splitting;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Single,
    TwoShock,
    BurgersRef,
    FvRef,
    Interaction,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Single => "single",
            Mode::TwoShock => "two_shock",
            Mode::BurgersRef => "burgers_ref",
            Mode::FvRef => "fv_ref",
            Mode::Interaction => "interaction",
        }
    }
}

/// Named analytic data or a sample file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// One tanh shock at 0: `jump`, `norm`.
    Tanh,
    /// Two tanh shoulders around [tau0, 0]: `amplitude`, `norm`, `tau0`.
    TwoTanh,
    /// Constant `states` separated by jumps at `positions`.
    PiecewiseConstant,
    /// Piecewise samples from `file`.
    File,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    pub preset: Option<Preset>,
    pub jump: f64,
    /// H² norm of the tanh profile; 1.0 for one shock and 1.6 for two when unset.
    pub norm: Option<f64>,
    pub amplitude: f64,
    pub tau0: f64,
    pub states: Vec<f64>,
    pub positions: Vec<f64>,
    pub file: Option<PathBuf>,
}

impl Default for DataSection {
    fn default() -> Self {
        Self {
            preset: None,
            jump: 1.2,
            norm: None,
            amplitude: 1.0,
            tau0: -0.05,
            states: vec![2.0, 0.0, -2.0],
            positions: vec![-1.0, 1.0],
            file: None,
        }
    }
}

/// Overrides of the solver constants; unset keys keep the derived values.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub nodes_per_side: Option<usize>,
    pub middle_nodes: Option<usize>,
    pub horizon: Option<f64>,
    pub allow_long_horizon: bool,
    pub m0: Option<f64>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub delta1: Option<f64>,
    pub delta2: Option<f64>,
    pub b: Option<f64>,
    pub hilbert_scale: Option<f64>,
    pub tol_inner: Option<f64>,
    pub tol_outer: Option<f64>,
    pub max_inner: Option<usize>,
    pub max_outer: Option<usize>,
    /// Horizon of the merged-shock stage of an interaction run.
    pub single_horizon: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FvSection {
    pub cells: usize,
    pub cfl: f64,
    pub t_end: f64,
    pub half_width: f64,
    pub splitting: Splitting,
}

impl Default for FvSection {
    fn default() -> Self {
        Self {
            cells: 2048,
            cfl: 0.9,
            t_end: 0.05,
            half_width: 8.0,
            splitting: Splitting::Strang,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReferenceSection {
    /// Sample times of the exact Burgers solution.
    pub times: Vec<f64>,
    pub samples: usize,
}

impl Default for ReferenceSection {
    fn default() -> Self {
        Self {
            times: vec![0.0, 0.25, 0.5, 0.75, 1.0, 1.5],
            samples: 401,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    pub csv: bool,
    pub json: bool,
    pub level_stride: usize,
    pub node_stride: usize,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: None,
            csv: true,
            json: true,
            level_stride: 1,
            node_stride: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub mode: Mode,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub data: DataSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub fv: FvSection,
    #[serde(default)]
    pub reference: ReferenceSection,
    #[serde(default)]
    pub output: OutputSection,
}

impl ScenarioConfig {
    /// Defaults for a mode, as the CLI uses without `--config`.
    pub fn for_mode(mode: Mode) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            mode,
            seed: 0,
            data: DataSection::default(),
            solver: SolverSection::default(),
            fv: FvSection::default(),
            reference: ReferenceSection::default(),
            output: OutputSection::default(),
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

    /// The preset in force: the configured one or the mode's default.
    pub fn preset(&self) -> Preset {
        self.data.preset.unwrap_or(match self.mode {
            Mode::Single | Mode::FvRef => Preset::Tanh,
            Mode::TwoShock | Mode::Interaction => Preset::TwoTanh,
            Mode::BurgersRef => Preset::PiecewiseConstant,
        })
    }

    pub fn norm(&self) -> f64 {
        self.data.norm.unwrap_or(if self.preset() == Preset::TwoTanh { 1.6 } else { 1.0 })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        let preset = self.preset();
        let allowed: &[Preset] = match self.mode {
            Mode::Single => &[Preset::Tanh, Preset::File],
            Mode::TwoShock | Mode::Interaction => &[Preset::TwoTanh, Preset::PiecewiseConstant, Preset::File],
            Mode::BurgersRef => &[Preset::PiecewiseConstant],
            Mode::FvRef => &[Preset::Tanh, Preset::PiecewiseConstant],
        };
        if !allowed.contains(&preset) {
            return bad(format!("preset {preset:?} is not available in mode {}", self.mode.name()));
        }
        let d = &self.data;
        match preset {
            Preset::File if d.file.is_none() => return bad("preset file needs data.file".into()),
            Preset::PiecewiseConstant => {
                let need = if self.mode == Mode::FvRef { d.states.len().clamp(2, 3) } else { 3 };
                if d.states.len() != need || d.positions.len() != need - 1 {
                    return bad(format!(
                        "piecewise_constant in mode {} needs {need} states and {} positions",
                        self.mode.name(),
                        need - 1
                    ));
                }
                if d.positions.windows(2).any(|w| w[0] >= w[1]) {
                    return bad("data.positions must increase".into());
                }
            }
            _ => {}
        }
        let positive = [
            ("data.norm", self.norm()),
            ("fv.cfl", self.fv.cfl),
            ("fv.half_width", self.fv.half_width),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} = {v} must be positive"));
            }
        }
        if self.fv.cfl > 0.9 {
            return bad(format!("fv.cfl = {} above 0.9", self.fv.cfl));
        }
        if self.fv.cells < 2 || self.reference.samples < 2 {
            return bad("resolutions must be at least 2".into());
        }
        if self.output.level_stride == 0 || self.output.node_stride == 0 {
            return bad("output strides must be positive".into());
        }
        let s = &self.solver;
        for (name, v) in [("solver.nodes_per_side", s.nodes_per_side), ("solver.middle_nodes", s.middle_nodes)] {
            if v == Some(0) {
                return bad(format!("{name} must be positive"));
            }
        }
        for (name, v) in [("solver.tol_inner", s.tol_inner), ("solver.tol_outer", s.tol_outer)] {
            if let Some(v) = v {
                if !(v > 0.0 && v < 1.0) {
                    return bad(format!("{name} = {v} outside (0, 1)"));
                }
            }
        }
        for (name, v) in [("solver.horizon", s.horizon), ("solver.single_horizon", s.single_horizon), ("solver.m0", s.m0)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return bad(format!("{name} = {v} must be positive"));
                }
            }
        }
        Ok(())
    }
}
