//! Experiment configuration read from a TOML file.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use nldp_core::grid::GridOptions;
use nldp_core::regularity::PoincareVariant;
use nldp_core::SolveOptions;
use nldp_core::{Coefficient, DiscreteFunction, EnergyContext, ExponentConfig, Grid, KernelPair, OmegaSpec, Point};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Seeds the random datum, random initialization and sampled checks.
    #[serde(default)]
    pub seed: u64,
    pub problem: ProblemConfig,
    #[serde(default)]
    pub solver: SolveOptions,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub n: usize,
    /// Half side of the truncation box `[-R, R]^n`.
    pub radius: f64,
    pub spacing: f64,
    /// Required gap between `Ω` and the box boundary; one cell by default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
    pub omega: OmegaConfig,
    pub s: f64,
    pub t: f64,
    pub p: f64,
    pub q: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_star: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_star: Option<f64>,
    /// Hölder exponent used by the assumption checks; defaults to the
    /// coefficient's own.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub coefficient: CoefficientConfig,
    #[serde(default)]
    pub kernel: KernelConfig,
    pub datum: DatumConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OmegaConfig {
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CoefficientConfig {
    #[default]
    Zero,
    Constant {
        value: f64,
    },
    CosProduct,
    ClippedPower {
        alpha: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelConfig {
    #[default]
    Model,
    Scaled {
        factor_sp: f64,
        factor_tq: f64,
    },
}

/// Exterior datum `g`; its value beyond the box is `far_field`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatumConfig {
    Constant {
        value: f64,
    },
    /// `height · max(0, 1 - |x - center| / width)`, zero beyond the box.
    Tent {
        center: Vec<f64>,
        #[serde(default = "one")]
        width: f64,
        #[serde(default = "one")]
        height: f64,
    },
    /// Independent uniform values in `[lo, hi)` at every node.
    Random {
        lo: f64,
        hi: f64,
        far_field: f64,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    /// Gradient max-norm below which a function counts as a discrete
    /// solution; ten times the solver tolerance by default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solution_tol: Option<f64>,
    #[serde(default)]
    pub checks: Vec<CheckConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SignConfig {
    #[default]
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PoincareConfig {
    #[default]
    Single,
    Mixed,
}

impl From<PoincareConfig> for PoincareVariant {
    fn from(v: PoincareConfig) -> Self {
        match v {
            PoincareConfig::Single => PoincareVariant::SingleScale,
            PoincareConfig::Mixed => PoincareVariant::MixedScale,
        }
    }
}

/// One entry of `[[verify.checks]]`. Every inequality check accepts a
/// `ceiling` on its implied constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CheckConfig {
    MaximumPrinciple,
    Caccioppoli {
        center: Vec<f64>,
        radius: f64,
        /// Truncation level; the median of `u` on the ball by default.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        level: Option<f64>,
        #[serde(default)]
        sign: SignConfig,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ceiling: Option<f64>,
    },
    Levelset {
        center: Vec<f64>,
        radius: f64,
        /// Base level; half of `sup |u|` on the ball by default.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        k0: Option<f64>,
        #[serde(default = "default_imax")]
        imax: usize,
    },
    Oscillation {
        center: Vec<f64>,
        radius: f64,
        #[serde(default = "default_sigma")]
        sigma: f64,
        #[serde(default = "default_jmax")]
        jmax: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        min_count: Option<usize>,
        /// Lower bound on the fitted exponent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        min_gamma: Option<f64>,
    },
    LogEstimate {
        center: Vec<f64>,
        outer_radius: f64,
        radius: f64,
        /// Shift `d`; a tenth of the oscillation over the outer ball by default.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        d: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ceiling: Option<f64>,
    },
    LogExcess {
        center: Vec<f64>,
        outer_radius: f64,
        radius: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        d: Option<f64>,
        /// Upper level; the supremum over the outer ball by default.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        zeta: Option<f64>,
        #[serde(default = "default_xi")]
        xi: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ceiling: Option<f64>,
    },
    SobolevPoincare {
        center: Vec<f64>,
        radius: f64,
        #[serde(default)]
        variant: PoincareConfig,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ceiling: Option<f64>,
    },
    Inclusion {
        center: Vec<f64>,
        radius: f64,
        #[serde(default = "default_inclusion_ceiling")]
        ceiling: f64,
    },
    Ineq1 {
        center: Vec<f64>,
        radius: f64,
        /// Weight `L₀`; `‖a‖∞` (or 1 when `a ≡ 0`) by default.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        l0: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ceiling: Option<f64>,
    },
    Ineq2 {
        center: Vec<f64>,
        radius: f64,
        outer_radius: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ceiling: Option<f64>,
    },
    HolderConstants {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        d: Option<f64>,
        #[serde(default = "one")]
        c_star: f64,
        #[serde(default = "one")]
        c0: f64,
        /// When set, `K₀` is evaluated on this ball.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        radius: Option<f64>,
    },
}

fn default_imax() -> usize {
    12
}

fn default_sigma() -> f64 {
    0.25
}

fn default_jmax() -> usize {
    10
}

fn default_xi() -> f64 {
    2.0
}

fn default_inclusion_ceiling() -> f64 {
    1.05
}

/// Parameter lists; an absent list keeps the value from `[problem]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub s: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub t: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub p: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub q: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub alpha: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub spacing: Vec<f64>,
    /// Run the solver for every row; otherwise only the flags and constants
    /// are evaluated.
    #[serde(default)]
    pub solve: bool,
    /// Ball for the fitted oscillation exponent of solved rows.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oscillation: Option<SweepOscillation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepOscillation {
    pub center: Vec<f64>,
    pub radius: f64,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default = "default_jmax")]
    pub jmax: usize,
}

pub fn point(v: &[f64], n: usize) -> Result<Point, CliError> {
    if v.len() != n {
        return Err(CliError::Config(format!("point {v:?} must have {n} coordinates")));
    }
    let mut x = [0.0; 2];
    x[..n].copy_from_slice(v);
    Ok(x)
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Config(e.to_string()))
    }
}

impl ProblemConfig {
    pub fn exponents(&self) -> Result<ExponentConfig, CliError> {
        Ok(ExponentConfig::with_overrides(self.n, self.s, self.t, self.p, self.q, self.p_star, self.q_star)?)
    }

    pub fn omega(&self) -> Result<OmegaSpec, CliError> {
        Ok(match &self.omega {
            OmegaConfig::Box { lo, hi } => OmegaSpec::Box { lo: point(lo, self.n)?, hi: point(hi, self.n)? },
            OmegaConfig::Ball { center, radius } => OmegaSpec::Ball { center: point(center, self.n)?, radius: *radius },
        })
    }

    pub fn grid(&self) -> Result<Grid, CliError> {
        let opts = GridOptions { min_margin: self.margin };
        Ok(Grid::build_with(self.n, self.radius, self.spacing, &self.omega()?, opts)?)
    }

    pub fn coefficient(&self) -> Result<Coefficient, CliError> {
        Ok(match self.coefficient {
            CoefficientConfig::Zero => Coefficient::zero(),
            CoefficientConfig::Constant { value } => Coefficient::constant(value)?,
            CoefficientConfig::CosProduct => Coefficient::cos_product(),
            CoefficientConfig::ClippedPower { alpha } => Coefficient::clipped_power(alpha)?,
        })
    }

    /// Hölder exponent for the assumption flags.
    pub fn alpha(&self) -> Option<f64> {
        self.alpha.or_else(|| self.coefficient().ok()?.holder().map(|h| h.alpha))
    }

    pub fn context(&self, grid: Arc<Grid>) -> Result<EnergyContext, CliError> {
        let cfg = self.exponents()?;
        let kernels = match self.kernel {
            KernelConfig::Model => KernelPair::model(&cfg),
            KernelConfig::Scaled { factor_sp, factor_tq } => KernelPair::scaled_model(&cfg, factor_sp, factor_tq)?,
        };
        Ok(EnergyContext::new(grid, cfg, self.coefficient()?, kernels)?)
    }

    pub fn datum(&self, grid: &Grid, seed: u64) -> Result<DiscreteFunction, CliError> {
        let g = match &self.datum {
            DatumConfig::Constant { value } => DiscreteFunction::constant(grid, *value),
            DatumConfig::Tent { center, width, height } => {
                if !(*width > 0.0) {
                    return Err(CliError::Config(format!("tent width {width} must be > 0")));
                }
                let c = point(center, self.n)?;
                DiscreteFunction::from_fn(
                    grid,
                    |x| height * (1.0 - nldp_core::grid::dist(x, &c) / width).max(0.0),
                    Some(0.0),
                )?
            }
            DatumConfig::Random { lo, hi, far_field } => {
                if !(lo < hi) {
                    return Err(CliError::Config(format!("random datum needs lo < hi, got {lo} >= {hi}")));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let vals = (0..grid.len()).map(|_| rng.gen_range(*lo..*hi)).collect();
                DiscreteFunction::new(grid, vals, Some(*far_field))?
            }
        };
        Ok(g.frozen())
    }
}
