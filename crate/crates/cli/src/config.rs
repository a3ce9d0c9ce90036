//! JSON scenario configuration. Every field has a default in model units
//! (`c = m0 = σ = 1`); unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub units: UnitsConfig,
    pub grid: GridConfig,
    pub output: OutputConfig,
    pub trajectory: TrajectoryConfig,
    pub boost: BoostConfig,
    pub wave: WaveConfig,
    pub wigner: WignerConfig,
    pub gas: GasConfig,
    pub fit: FitConfig,
    pub hydrogen: HydrogenConfig,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UnitsConfig {
    pub c: f64,
    pub sigma: f64,
    pub m0: f64,
}

impl Default for UnitsConfig {
    fn default() -> Self {
        Self { c: 1.0, sigma: 1.0, m0: 1.0 }
    }
}

/// Space-time grid of the action-wave scenario.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub n0: usize,
    pub n1: usize,
    pub q0_min: f64,
    pub q0_max: f64,
    pub q1_min: f64,
    pub q1_max: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            n0: 128,
            n1: 128,
            q0_min: -3.2,
            q0_max: 3.2,
            q1_min: -3.2,
            q1_max: 3.2,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub format: Format,
    pub plot: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            format: Format::Csv,
            plot: false,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum PotentialConfig {
    #[default]
    None,
    Constant {
        value: f64,
    },
    Harmonic {
        k: f64,
        center: [f64; 3],
    },
}

/// Initial extended state; `p0 = None` places it on the mass shell.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StateConfig {
    pub q0: f64,
    pub q: [f64; 3],
    pub p0: Option<f64>,
    pub p: [f64; 3],
}

impl Default for StateConfig {
    fn default() -> Self {
        Self {
            q0: 0.0,
            q: [0.0; 3],
            p0: None,
            p: [1.0, 0.0, 0.0],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrajectoryConfig {
    pub state: StateConfig,
    pub du: f64,
    pub steps: usize,
    pub potential: PotentialConfig,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        Self {
            state: StateConfig::default(),
            du: 0.1,
            steps: 100,
            potential: PotentialConfig::None,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BranchConfig {
    #[default]
    Lorentz,
    So4,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoostConfig {
    pub state: StateConfig,
    pub velocity: [f64; 3],
    pub branch: BranchConfig,
    /// States sampled by the canonicity check.
    pub samples: usize,
}

impl Default for BoostConfig {
    fn default() -> Self {
        Self {
            state: StateConfig {
                p: [0.0; 3],
                ..StateConfig::default()
            },
            velocity: [0.6, 0.0, 0.0],
            branch: BranchConfig::Lorentz,
            samples: 10,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryConfig {
    #[default]
    Periodic,
    Reflecting,
}

/// Gaussian blob carrying the plane-wave action `S = -√(m0²c² + p∥²)·q0 + p∥·q∥`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WaveConfig {
    pub center: [f64; 2],
    pub width: [f64; 2],
    pub p_parallel: f64,
    /// Step in `u`; `None` uses the largest stable step.
    pub du: Option<f64>,
    pub steps: usize,
    pub record_every: usize,
    pub boundary: BoundaryConfig,
}

impl Default for WaveConfig {
    fn default() -> Self {
        Self {
            center: [-1.0, 0.0],
            width: [0.3, 0.3],
            p_parallel: 0.0,
            du: None,
            steps: 100,
            record_every: 10,
            boundary: BoundaryConfig::Periodic,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WignerConfig {
    pub n: usize,
    pub dx: f64,
    pub center: f64,
    pub width: f64,
    pub mean_p: f64,
    pub q0_center: f64,
    pub p0_mean: f64,
    pub omega: f64,
}

impl Default for WignerConfig {
    fn default() -> Self {
        Self {
            n: 256,
            dx: 0.1,
            center: 0.0,
            width: 1.0,
            mean_p: 0.0,
            q0_center: 0.0,
            p0_mean: -1.0,
            omega: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GasConfig {
    pub temperatures: Vec<f64>,
    pub mus: Vec<f64>,
    /// Energy cutoff; `None` integrates to infinity.
    pub eps_max: Option<f64>,
    pub volume: f64,
    pub h: f64,
    pub fp_points: usize,
    pub fp_half_width: f64,
    pub gamma: f64,
}

impl Default for GasConfig {
    fn default() -> Self {
        Self {
            temperatures: vec![0.25, 0.5, 1.0, 2.0],
            mus: vec![0.0],
            eps_max: None,
            volume: 1.0,
            h: 1.0,
            fp_points: 32,
            fp_half_width: 8.0,
            gamma: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    /// Resonance table; `None` uses the bundled fixture.
    pub table: Option<PathBuf>,
    pub class: Option<extphase::resonance::ResonanceClass>,
    pub hbar_mev_s: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            table: None,
            class: None,
            hbar_mev_s: extphase::resonance::HBAR_MEV_S,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HydrogenConfig {
    pub mean_p2: f64,
    pub mean_p4: f64,
    pub alpha: f64,
}

impl Default for HydrogenConfig {
    fn default() -> Self {
        Self {
            mean_p2: 1.0,
            mean_p4: 5.0,
            alpha: 7.297_352_569_3e-3,
        }
    }
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::validation(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::validation(format!("config: {e}")))
    }
}

/// Collects validation messages for one scenario.
#[derive(Default)]
pub struct Issues(pub Vec<String>);

impl Issues {
    pub fn positive(&mut self, name: &str, v: f64) {
        if !(v > 0.0 && v.is_finite()) {
            self.0.push(format!("{name} must be positive and finite, got {v}"));
        }
    }

    pub fn finite(&mut self, name: &str, v: f64) {
        if !v.is_finite() {
            self.0.push(format!("{name} must be finite, got {v}"));
        }
    }

    pub fn check(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        if !ok {
            self.0.push(msg());
        }
    }

    pub fn into_result(self) -> CliResult<()> {
        if self.0.is_empty() {
            Ok(())
        } else {
            Err(CliError::Validation(self.0))
        }
    }
}

impl UnitsConfig {
    pub fn validate(&self, out: &mut Issues) {
        out.positive("units.c", self.c);
        out.positive("units.sigma", self.sigma);
        out.positive("units.m0", self.m0);
    }
}

impl StateConfig {
    pub fn validate(&self, prefix: &str, out: &mut Issues) {
        out.finite(&format!("{prefix}.q0"), self.q0);
        for (i, v) in self.q.iter().chain(&self.p).enumerate() {
            out.finite(&format!("{prefix}.{}[{}]", if i < 3 { "q" } else { "p" }, i % 3), *v);
        }
        if let Some(p0) = self.p0 {
            out.finite(&format!("{prefix}.p0"), p0);
        }
    }
}
