//! The JSON experiment configuration and its resolution into typed,
//! fully-defaulted parameters.

use std::path::PathBuf;

use carleman_core::carleman::BumpWindow;
use carleman_core::ledger::LedgerCoefficients;
use carleman_core::multipliers::LemmaId;
use carleman_core::stability::LocalQuantOptions;
use carleman_core::wave::Recipe;
use carleman_core::{GeometryConfig, GridSpec, LabError, Level};
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Identity,
    Subelliptic,
    Carleman,
    Multipliers,
    Wave,
    Ledger,
    Stability,
    LocalQuant,
    UcProbe,
}

impl Experiment {
    pub const ALL: [Experiment; 9] = [
        Experiment::Identity,
        Experiment::Subelliptic,
        Experiment::Carleman,
        Experiment::Multipliers,
        Experiment::Wave,
        Experiment::Ledger,
        Experiment::Stability,
        Experiment::LocalQuant,
        Experiment::UcProbe,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Identity => "identity",
            Experiment::Subelliptic => "subelliptic",
            Experiment::Carleman => "carleman",
            Experiment::Multipliers => "multipliers",
            Experiment::Wave => "wave",
            Experiment::Ledger => "ledger",
            Experiment::Stability => "stability",
            Experiment::LocalQuant => "local-quant",
            Experiment::UcProbe => "uc-probe",
        }
    }

    /// Artifact prefix: the name with dashes turned into underscores.
    pub fn stem(self) -> String {
        self.name().replace('-', "_")
    }
}

/// The config as written by the user. `grid` and `parameters` may be
/// omitted; [`ExperimentConfig::resolve`] fills them in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    pub experiment: Experiment,
    #[serde(default)]
    pub parameters: Value,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

/// Typed parameters, one variant per experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Parameters {
    Identity(IdentityParams),
    Subelliptic(SubellipticParams),
    Carleman(CarlemanExpParams),
    Multipliers(MultiplierParams),
    Wave(WaveParams),
    Ledger(LedgerParams),
    Stability(StabilityParams),
    LocalQuant(LocalQuantParams),
    UcProbe(UcProbeParams),
}

/// A config with every default materialized. This is what reports embed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolvedConfig {
    pub geometry: GeometryConfig,
    /// Base grid of the experiment; `None` for the purely symbolic ledger.
    pub grid: Option<GridSpec>,
    pub experiment: Experiment,
    pub parameters: Parameters,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| e.to_string())
    }

    /// The defaults for `experiment`, as a config.
    pub fn defaults(experiment: Experiment) -> Self {
        ExperimentConfig {
            geometry: GeometryConfig::default(),
            grid: None,
            experiment,
            parameters: Value::Null,
            output_dir: default_output_dir(),
        }
    }

    pub fn resolve(&self) -> Result<ResolvedConfig, LabError> {
        self.geometry.validate()?;
        let params = match self.parameters {
            Value::Null => Value::Object(Default::default()),
            ref v => v.clone(),
        };
        let parse = |e: serde_json::Error| LabError::InvalidParameter(format!("parameters: {e}"));
        let mut parameters = match self.experiment {
            Experiment::Identity => Parameters::Identity(serde_json::from_value(params).map_err(parse)?),
            Experiment::Subelliptic => Parameters::Subelliptic(serde_json::from_value(params).map_err(parse)?),
            Experiment::Carleman => Parameters::Carleman(serde_json::from_value(params).map_err(parse)?),
            Experiment::Multipliers => Parameters::Multipliers(serde_json::from_value(params).map_err(parse)?),
            Experiment::Wave => Parameters::Wave(serde_json::from_value(params).map_err(parse)?),
            Experiment::Ledger => Parameters::Ledger(serde_json::from_value(params).map_err(parse)?),
            Experiment::Stability => Parameters::Stability(serde_json::from_value(params).map_err(parse)?),
            Experiment::LocalQuant => Parameters::LocalQuant(serde_json::from_value(params).map_err(parse)?),
            Experiment::UcProbe => Parameters::UcProbe(serde_json::from_value(params).map_err(parse)?),
        };
        if let Parameters::LocalQuant(p) = &mut parameters {
            // One geometry per config: the probe options follow the top level.
            p.options.geometry = self.geometry;
        }
        parameters.validate()?;
        let grid = match self.grid {
            Some(g) => Some(g),
            None => default_grid(self.experiment, &self.geometry, &parameters)?,
        };
        if let Some(g) = grid {
            g.validate()?;
        }
        Ok(ResolvedConfig {
            geometry: self.geometry,
            grid,
            experiment: self.experiment,
            parameters,
            output_dir: self.output_dir.clone(),
        })
    }
}

fn default_grid(exp: Experiment, geometry: &GeometryConfig, p: &Parameters) -> Result<Option<GridSpec>, LabError> {
    let g = |a, b, c, d, nt, nx| GridSpec::new(a, b, c, d, nt, nx).map(Some);
    match (exp, p) {
        (Experiment::Identity, _) => g(-0.6, 0.6, 1.2, 3.2, 129, 129),
        (Experiment::Subelliptic, _) => g(-0.7, 0.7, 2.2, 3.6, 65, 65),
        (Experiment::Carleman, _) => g(-1.0, 1.0, 0.5, 3.5, 65, 65),
        (Experiment::Multipliers, _) => g(-4.0, 4.0, 0.0, 1.0, 129, 5),
        (Experiment::Wave, Parameters::Wave(w)) => {
            carleman_core::wave::time_grid((0.0, w.t_end), (0.0, 2.0 * std::f64::consts::PI), w.nx, w.cfl).map(Some)
        }
        (Experiment::Ledger, _) => Ok(None),
        (Experiment::Stability, Parameters::Stability(s)) => {
            carleman_core::wave::diamond_grid(geometry, s.nx, s.cfl).map(Some)
        }
        (Experiment::UcProbe, Parameters::UcProbe(s)) => carleman_core::wave::diamond_grid(geometry, s.nx, s.cfl).map(Some),
        (Experiment::LocalQuant, _) => g(-2.0, 2.0, 1.2, 3.0, 401, 181),
        _ => unreachable!("parameters always match the experiment"),
    }
}

impl Parameters {
    fn validate(&self) -> Result<(), LabError> {
        let bad = |m: &str| Err(LabError::InvalidParameter(m.to_string()));
        let nonempty = |name: &str, v: &[f64]| -> Result<(), LabError> {
            if v.is_empty() {
                return Err(LabError::InvalidParameter(format!("{name} is empty")));
            }
            Ok(())
        };
        match self {
            Parameters::Identity(p) if p.count == 0 => bad("identity: count must be positive"),
            Parameters::Subelliptic(p) => {
                if p.count == 0 {
                    return bad("subelliptic: count must be positive");
                }
                nonempty("tau_sweep", &p.tau_sweep)
            }
            Parameters::Carleman(p) if p.count == 0 => bad("carleman: count must be positive"),
            Parameters::Multipliers(p) => {
                if p.lemmas.is_empty() {
                    return bad("multipliers: lemma list is empty");
                }
                if p.tone_modes.is_empty() {
                    return bad("multipliers: tone_modes is empty");
                }
                Ok(())
            }
            Parameters::Ledger(p) => {
                nonempty("deltas", &p.deltas)?;
                nonempty("slope_cs", &p.slope_cs)?;
                nonempty("slope_alphas", &p.slope_alphas)?;
                p.coefficients.validate()
            }
            Parameters::Stability(p) => {
                nonempty("deltas", &p.deltas)?;
                nonempty("strip_deltas", &p.strip_deltas)?;
                p.strip_grid.validate()?;
                if p.members.iter().all(|m| m.count == 0) {
                    return bad("stability: ensemble is empty");
                }
                Ok(())
            }
            Parameters::LocalQuant(p) => {
                if p.count == 0 {
                    return bad("local-quant: count must be positive");
                }
                nonempty("mu_sweep", &p.mu_sweep)
            }
            Parameters::UcProbe(p) if p.count == 0 => bad("uc-probe: count must be positive"),
            _ => Ok(()),
        }
    }
}

fn window(t: (f64, f64), r: (f64, f64), k: f64) -> BumpWindow {
    BumpWindow { t, r, max_wavenumber: k }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdentityParams {
    pub seed: u64,
    pub count: usize,
    pub tau: f64,
    pub epsilon: f64,
    pub gamma: f64,
    pub window: BumpWindow,
    /// Also dump the first member's coarse-grid field.
    pub dump_fields: bool,
}

impl Default for IdentityParams {
    fn default() -> Self {
        Self {
            seed: 11,
            count: 10,
            tau: 1.0,
            epsilon: 0.01,
            gamma: 0.2,
            window: window((-0.45, 0.45), (1.4, 3.0), 4.0),
            dump_fields: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SubellipticParams {
    pub seed: u64,
    pub count: usize,
    pub epsilon: f64,
    pub gamma: f64,
    pub tau_sweep: Vec<f64>,
    pub window: BumpWindow,
}

impl Default for SubellipticParams {
    fn default() -> Self {
        Self {
            seed: 7,
            count: 50,
            epsilon: 0.01,
            gamma: 0.2,
            tau_sweep: vec![5.0, 10.0, 20.0, 40.0],
            window: window((-0.5, 0.5), (2.4, 3.4), 3.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CarlemanExpParams {
    pub tau: f64,
    pub epsilon: f64,
    pub gamma: f64,
    /// Battery of radial fields for the positivity check.
    pub seed: u64,
    pub count: usize,
    /// Dimension of the radial geometry used for the positivity check.
    pub radial_n: usize,
    pub positivity_grid: GridSpec,
    pub window: BumpWindow,
}

impl Default for CarlemanExpParams {
    fn default() -> Self {
        Self {
            tau: 1.0,
            epsilon: 0.01,
            gamma: 0.2,
            seed: 9,
            count: 50,
            radial_n: 3,
            positivity_grid: GridSpec { t_min: -0.5, t_max: 0.5, x_min: 0.9, x_max: 2.5, nt: 65, nx: 65 },
            window: window((-0.4, 0.4), (1.0, 2.4), 4.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MultiplierParams {
    /// Pure-tone check: periodic samples, Gaussian weight parameters and
    /// the Fourier modes tested.
    pub tone_len: usize,
    pub tone_dt: f64,
    pub tone_epsilon: f64,
    pub tone_tau: f64,
    pub tone_modes: Vec<usize>,
    /// Conjugation residual on the base grid and its refinement.
    pub conj_epsilon: f64,
    pub conj_tau: f64,
    pub lemmas: Vec<LemmaId>,
}

impl Default for MultiplierParams {
    fn default() -> Self {
        Self {
            tone_len: 256,
            tone_dt: 0.05,
            tone_epsilon: 0.3,
            tone_tau: 2.0,
            tone_modes: vec![1, 7, 40],
            conj_epsilon: 0.5,
            conj_tau: 2.0,
            lemmas: vec![LemmaId::A2],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WaveParams {
    pub nx: usize,
    pub cfl: f64,
    pub t_end: f64,
    /// Grid size of the finite-speed and energy runs on `[-3, 3]`.
    pub bump_nx: usize,
}

impl Default for WaveParams {
    fn default() -> Self {
        // 630 points on [0, 2 pi] give dx just under 1e-2.
        Self { nx: 630, cfl: 0.9, t_end: 1.0, bump_nx: 1201 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LedgerParams {
    pub deltas: Vec<f64>,
    pub n: f64,
    pub coefficients: LedgerCoefficients,
    /// Largest iteration count in the fold check.
    pub k_max: usize,
    /// Starting level of the step-count check.
    pub steps_gamma: f64,
    pub bound_seed: u64,
    pub bound_tuples: usize,
    pub bound_samples: usize,
    pub slope_cs: Vec<f64>,
    pub slope_alphas: Vec<f64>,
}

impl Default for LedgerParams {
    fn default() -> Self {
        Self {
            deltas: vec![0.2, 0.1, 0.05, 0.025],
            n: 1.0,
            coefficients: LedgerCoefficients::default(),
            k_max: 10,
            steps_gamma: 1.0,
            bound_seed: 2024,
            bound_tuples: 100,
            bound_samples: 20_000,
            slope_cs: (0..12).map(|i| 10f64.powi(6 + 4 * i)).collect(),
            slope_alphas: vec![0.25, 0.5, 1.0],
        }
    }
}

/// One block of the stability ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleBlock {
    pub recipe: Recipe,
    pub count: usize,
    pub seed: u64,
    #[serde(default)]
    pub q_amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StabilityParams {
    pub deltas: Vec<f64>,
    pub n: f64,
    pub level: Level,
    pub nx: usize,
    pub cfl: f64,
    pub members: Vec<EnsembleBlock>,
    pub far_support: EnsembleBlock,
    pub far_support_delta: f64,
    pub strip_deltas: Vec<f64>,
    /// Grid of the strip-measure quadrature; the exact value is computed
    /// alongside.
    pub strip_grid: GridSpec,
}

impl Default for StabilityParams {
    fn default() -> Self {
        Self {
            deltas: vec![0.3, 0.2, 0.1],
            n: 1.0,
            level: Level::Sq,
            nx: 801,
            cfl: 0.9,
            members: vec![
                EnsembleBlock { recipe: Recipe::PlaneWave { k_min: 1.0, k_max: 6.0 }, count: 7, seed: 11, q_amplitude: 0.0 },
                EnsembleBlock { recipe: Recipe::FocusedBump { width: 0.25 }, count: 7, seed: 12, q_amplitude: 0.0 },
                EnsembleBlock {
                    recipe: Recipe::RandomBandLimited { modes: 4, k_max: 6.0 },
                    count: 6,
                    seed: 13,
                    q_amplitude: 1.0,
                },
            ],
            far_support: EnsembleBlock { recipe: Recipe::FarSupport { gap: 0.0 }, count: 4, seed: 3, q_amplitude: 0.0 },
            far_support_delta: 0.1,
            strip_deltas: vec![0.2, 0.1, 0.05, 0.025],
            strip_grid: GridSpec { t_min: -0.5, t_max: 0.5, x_min: -1.5, x_max: 1.5, nt: 1001, nx: 3001 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LocalQuantParams {
    pub seed: u64,
    pub count: usize,
    pub kappa: f64,
    pub alpha: f64,
    pub n: f64,
    pub mu_sweep: Vec<f64>,
    pub window: BumpWindow,
    pub options: LocalQuantOptions,
}

impl Default for LocalQuantParams {
    fn default() -> Self {
        Self {
            seed: 17,
            count: 4,
            kappa: 0.5,
            alpha: 0.5,
            n: 1.0,
            mu_sweep: vec![10.0, 20.0, 40.0, 80.0],
            window: window((-0.4, 0.4), (1.7, 2.5), 3.0),
            options: LocalQuantOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UcProbeParams {
    pub recipe: Recipe,
    pub count: usize,
    pub seed: u64,
    pub delta: f64,
    pub level: Level,
    pub nx: usize,
    pub cfl: f64,
}

impl Default for UcProbeParams {
    fn default() -> Self {
        Self { recipe: Recipe::FarSupport { gap: 0.0 }, count: 4, seed: 3, delta: 0.1, level: Level::Sq, nx: 801, cfl: 0.9 }
    }
}

/// Hand-written JSON schema of the config file.
pub fn schema() -> Value {
    let names: Vec<&str> = Experiment::ALL.iter().map(|e| e.name()).collect();
    let grid = serde_json::json!({
        "type": ["object", "null"],
        "properties": {
            "t_min": {"type": "number"}, "t_max": {"type": "number"},
            "x_min": {"type": "number"}, "x_max": {"type": "number"},
            "nt": {"type": "integer", "minimum": 5}, "nx": {"type": "integer", "minimum": 5}
        },
        "required": ["t_min", "t_max", "x_min", "x_max", "nt", "nx"]
    });
    let mut defaults = serde_json::Map::new();
    for e in Experiment::ALL {
        let p = ExperimentConfig::defaults(e).resolve().expect("defaults resolve").parameters;
        defaults.insert(e.name().to_string(), serde_json::to_value(p).expect("parameters serialize"));
    }
    serde_json::json!({
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "title": "carleman-lab experiment config",
        "type": "object",
        "additionalProperties": false,
        "required": ["experiment"],
        "properties": {
            "experiment": {"enum": names},
            "geometry": {
                "type": "object",
                "properties": {
                    "r0": {"type": "number", "exclusiveMinimum": 1},
                    "r_tilde": {"type": "number"},
                    "n": {"type": "integer", "minimum": 1},
                    "mode": {"enum": ["cartesian-1d", "radial-nd"]}
                },
                "default": GeometryConfig::default()
            },
            "grid": grid,
            "parameters": {
                "type": "object",
                "description": "Experiment-specific; unknown keys are rejected. Defaults per experiment below.",
                "default_by_experiment": defaults
            },
            "output_dir": {"type": "string", "default": "out"}
        }
    })
}
