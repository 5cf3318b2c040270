//! The JSON experiment description.
//!
//! A config names one model family and its parameters, a list of seller
//! hazard rates to sweep, the collocation grid, the network, the training
//! schedule and where results go. Every field that has a sensible default
//! may be omitted. [`ExperimentConfig::from_json`] reports type errors and
//! semantic violations with the dotted path of the offending field.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use xva_pinn_core::geometry::{Axis, DomainBox, RegionId};
use xva_pinn_core::models::{
    BasketParams, BsParams, HestonParams, Market, ModelKind, ModelSpec, OptionType, ResidualMode, XvaParams,
};
use xva_pinn_core::network::{Activation, Architecture};
use xva_pinn_core::optim::{Decay, TrainConfig};
use xva_pinn_core::reference::FdConfig;

use crate::error::{CliError, Result};

/// Seller hazard rates outside this range are rejected.
pub const LAMBDA_B_RANGE: (f64, f64) = (0.0, 0.1);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Bs1d,
    BasketAverage,
    BasketWorstOf,
    Heston,
}

impl Kind {
    pub fn spatial_dim(self) -> usize {
        match self {
            Kind::Bs1d => 1,
            _ => 2,
        }
    }

    pub fn core(self) -> ModelKind {
        match self {
            Kind::Bs1d => ModelKind::Bs1d,
            Kind::BasketAverage => ModelKind::BasketAverage,
            Kind::BasketWorstOf => ModelKind::BasketWorstOf,
            Kind::Heston => ModelKind::Heston,
        }
    }

    pub fn from_core(kind: ModelKind) -> Self {
        match kind {
            ModelKind::Bs1d => Kind::Bs1d,
            ModelKind::BasketAverage => Kind::BasketAverage,
            ModelKind::BasketWorstOf => Kind::BasketWorstOf,
            ModelKind::Heston => Kind::Heston,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Kind::Bs1d => "bs1d",
            Kind::BasketAverage => "basket_average",
            Kind::BasketWorstOf => "basket_worst_of",
            Kind::Heston => "heston",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Kind::Bs1d, Kind::BasketAverage, Kind::BasketWorstOf, Kind::Heston].into_iter().find(|k| k.name() == s)
    }
}

/// Boundary residual construction, as spelled on the command line and in configs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
pub enum Mode {
    #[default]
    #[serde(rename = "pde-boundary")]
    #[value(name = "pde-boundary")]
    PdeBoundary,
    #[serde(rename = "classic")]
    #[value(name = "classic")]
    Classic,
}

impl From<Mode> for ResidualMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::PdeBoundary => ResidualMode::PdeBoundary,
            Mode::Classic => ResidualMode::Classic,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    pub model: ModelSection,
    pub grid: GridSection,
    pub network: NetworkSection,
    #[serde(default)]
    pub training: TrainingSection,
    #[serde(default)]
    pub reference: ReferenceSection,
    #[serde(default)]
    pub evaluation: EvaluationSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub kind: Kind,
    #[serde(default = "default_option")]
    pub option: OptionType,
    pub strike: f64,
    pub maturity: f64,
    /// Risk-free rate.
    pub r: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bs: Option<BsParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basket: Option<BasketParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heston: Option<HestonParams>,
    pub xva: XvaSection,
    #[serde(default)]
    pub mode: Mode,
    /// Heston only, see [`ModelSpec::strict_neumann`].
    #[serde(default)]
    pub strict_neumann: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XvaSection {
    /// One experiment per entry.
    #[serde(default = "default_lambda_b")]
    pub lambda_b: Vec<f64>,
    #[serde(default)]
    pub lambda_c: f64,
    #[serde(default)]
    pub recovery_b: f64,
    #[serde(default)]
    pub recovery_c: f64,
    /// Defaults to `(1 - R_B) lambda_B` for each swept `lambda_B`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub funding_spread: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    /// `[N_T, N_1, ..]`, one entry per input axis.
    pub steps: Vec<usize>,
    /// Price axes end at this multiple of the strike.
    #[serde(default = "default_s_max_multiple")]
    pub s_max_multiple: f64,
    /// Upper end of the variance axis (Heston).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu_max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSection {
    pub hidden_layers: usize,
    pub width: usize,
    #[serde(default)]
    pub activation: Activation,
    /// Map each input axis of the domain onto `[0, 1]`.
    #[serde(default = "yes")]
    pub input_scaling: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainingSection {
    pub adam_steps: usize,
    pub lbfgs_steps: usize,
    pub lr0: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decay: Option<Decay>,
    pub lbfgs_memory: usize,
    pub log_every: usize,
    /// First seed; trials use consecutive seeds from here.
    pub seed: u64,
    pub n_trials: usize,
    /// Loss multipliers by region name (`interior`, `lower1`, `upper2`, `initial`, ...).
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub region_weights: BTreeMap<String, f64>,
}

impl Default for TrainingSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        TrainingSection {
            adam_steps: t.adam_steps,
            lbfgs_steps: t.lbfgs_steps,
            lr0: t.lr0,
            decay: t.decay,
            lbfgs_memory: t.lbfgs_memory,
            log_every: t.log_every,
            seed: 0,
            n_trials: 1,
            region_weights: BTreeMap::new(),
        }
    }
}

/// Finite-difference oracle settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReferenceSection {
    /// `[N_T, N_1, ..]`; a per-model default when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<Vec<usize>>,
    pub fixed_point_tol: f64,
    pub max_iters: usize,
}

impl Default for ReferenceSection {
    fn default() -> Self {
        ReferenceSection { steps: None, fixed_point_tol: 1e-10, max_iters: 50 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluationSection {
    /// Evaluation grid steps; twice the training steps when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<Vec<usize>>,
    /// Half-width of the near-strike band as a fraction of the strike.
    pub near_strike_band: f64,
    pub clamp_threshold: f64,
    /// Spot levels, as multiples of the strike, of the near-strike table.
    pub near_strike_spots: Vec<f64>,
    /// Variance levels of the near-strike table (Heston).
    pub nu_slices: Vec<f64>,
}

impl Default for EvaluationSection {
    fn default() -> Self {
        EvaluationSection {
            steps: None,
            near_strike_band: 0.2,
            clamp_threshold: xva_pinn_core::metrics::DEFAULT_CLAMP,
            near_strike_spots: vec![0.8, 0.9, 1.0, 1.1, 1.2],
            nu_slices: vec![0.1, 0.3],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub directory: String,
    /// Keep the checkpoint of every trial, not only the best one.
    pub save_all_checkpoints: bool,
    /// Also write the collocation grid as CSV.
    pub write_grid: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { directory: "out".into(), save_all_checkpoints: true, write_grid: false }
    }
}

fn default_option() -> OptionType {
    OptionType::Put
}

fn default_lambda_b() -> Vec<f64> {
    vec![0.0]
}

fn default_s_max_multiple() -> f64 {
    4.0
}

fn yes() -> bool {
    true
}

/// Collects violations with their field paths.
#[derive(Default)]
struct Issues(Vec<String>);

impl Issues {
    fn check(&mut self, ok: bool, path: &str, msg: impl FnOnce() -> String) {
        if !ok {
            self.0.push(format!("{path}: {}", msg()));
        }
    }

    fn positive(&mut self, path: &str, v: f64) {
        self.check(v.is_finite() && v > 0.0, path, || format!("must be positive, got {v}"));
    }

    fn finite(&mut self, path: &str, v: f64) {
        self.check(v.is_finite(), path, || format!("must be finite, got {v}"));
    }

    fn within(&mut self, path: &str, v: f64, lo: f64, hi: f64) {
        self.check(v >= lo && v <= hi, path, || format!("must lie in [{lo}, {hi}], got {v}"));
    }

    fn steps(&mut self, path: &str, steps: &[usize], len: usize, min: usize) {
        self.check(steps.len() == len, path, || format!("expected {len} entries, got {}", steps.len()));
        for (i, &n) in steps.iter().enumerate() {
            self.check(n >= min, &format!("{path}[{i}]"), || format!("must be at least {min}, got {n}"));
        }
    }
}

impl ExperimentConfig {
    /// Parses and validates a config document.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            CliError::validation(format!("{path}: {}", e.inner()))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Validation(m) => CliError::Validation(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn kind(&self) -> Kind {
        self.model.kind
    }

    pub fn validate(&self) -> Result<()> {
        let mut v = Issues::default();
        let m = &self.model;
        let dim = m.kind.spatial_dim();
        v.positive("model.strike", m.strike);
        v.positive("model.maturity", m.maturity);
        v.finite("model.r", m.r);
        match m.kind {
            Kind::Bs1d => match &m.bs {
                Some(p) => {
                    v.positive("model.bs.sigma", p.sigma);
                    v.finite("model.bs.r_repo", p.r_repo);
                }
                None => v.0.push("model.bs: required for kind bs1d".into()),
            },
            Kind::BasketAverage | Kind::BasketWorstOf => match &m.basket {
                Some(p) => {
                    for i in 0..2 {
                        v.positive(&format!("model.basket.sigma[{i}]"), p.sigma[i]);
                        v.finite(&format!("model.basket.r_repo[{i}]"), p.r_repo[i]);
                    }
                    v.check(p.rho > -1.0 && p.rho < 1.0, "model.basket.rho", || {
                        format!("must lie strictly inside (-1, 1), got {}", p.rho)
                    });
                }
                None => v.0.push(format!("model.basket: required for kind {}", m.kind.name())),
            },
            Kind::Heston => match &m.heston {
                Some(p) => {
                    v.finite("model.heston.r_repo", p.r_repo);
                    v.positive("model.heston.kappa", p.kappa);
                    v.positive("model.heston.eta", p.eta);
                    v.positive("model.heston.sigma", p.sigma);
                    v.within("model.heston.rho", p.rho, -1.0, 1.0);
                }
                None => v.0.push("model.heston: required for kind heston".into()),
            },
        }
        let x = &m.xva;
        v.check(!x.lambda_b.is_empty(), "model.xva.lambda_b", || "must list at least one value".into());
        for (i, &l) in x.lambda_b.iter().enumerate() {
            v.within(&format!("model.xva.lambda_b[{i}]"), l, LAMBDA_B_RANGE.0, LAMBDA_B_RANGE.1);
        }
        v.check(x.lambda_c.is_finite() && x.lambda_c >= 0.0, "model.xva.lambda_c", || {
            format!("must be non-negative, got {}", x.lambda_c)
        });
        v.within("model.xva.recovery_b", x.recovery_b, 0.0, 1.0);
        v.within("model.xva.recovery_c", x.recovery_c, 0.0, 1.0);
        if let Some(s) = x.funding_spread {
            v.finite("model.xva.funding_spread", s);
        }
        v.check(!m.strict_neumann || m.kind == Kind::Heston, "model.strict_neumann", || {
            "only applies to kind heston".into()
        });

        v.steps("grid.steps", &self.grid.steps, dim + 1, 2);
        v.positive("grid.s_max_multiple", self.grid.s_max_multiple);
        match (m.kind, self.grid.nu_max) {
            (Kind::Heston, Some(n)) => v.positive("grid.nu_max", n),
            (Kind::Heston, None) => v.0.push("grid.nu_max: required for kind heston".into()),
            (_, Some(_)) => v.0.push("grid.nu_max: only applies to kind heston".into()),
            _ => {}
        }

        v.check(self.network.hidden_layers >= 1, "network.hidden_layers", || "must be at least 1".into());
        v.check(self.network.width >= 1, "network.width", || "must be at least 1".into());

        let t = &self.training;
        v.positive("training.lr0", t.lr0);
        if let Some(d) = &t.decay {
            v.check(d.a > 0, "training.decay.a", || "must be positive".into());
            v.check(d.delta.is_finite() && d.delta >= 0.0, "training.decay.delta", || {
                format!("must be non-negative, got {}", d.delta)
            });
        }
        v.check(t.lbfgs_memory >= 1, "training.lbfgs_memory", || "must be at least 1".into());
        v.check(t.log_every >= 1, "training.log_every", || "must be at least 1".into());
        v.check(t.n_trials >= 1, "training.n_trials", || "must be at least 1".into());
        for (name, &w) in &t.region_weights {
            let path = format!("training.region_weights.{name}");
            match RegionId::parse(name) {
                Some(id) if region_exists(id, dim) => {
                    v.check(w.is_finite() && w >= 0.0, &path, || format!("must be non-negative, got {w}"))
                }
                _ => v.0.push(format!("{path}: no such region for a {dim}-asset model")),
            }
        }

        if let Some(steps) = &self.reference.steps {
            v.steps("reference.steps", steps, dim + 1, 4);
        }
        v.positive("reference.fixed_point_tol", self.reference.fixed_point_tol);
        v.check(self.reference.max_iters >= 1, "reference.max_iters", || "must be at least 1".into());

        let e = &self.evaluation;
        if let Some(steps) = &e.steps {
            v.steps("evaluation.steps", steps, dim + 1, 1);
        }
        v.check(e.near_strike_band > 0.0 && e.near_strike_band <= 1.0, "evaluation.near_strike_band", || {
            format!("must lie in (0, 1], got {}", e.near_strike_band)
        });
        v.positive("evaluation.clamp_threshold", e.clamp_threshold);
        for (i, &s) in e.near_strike_spots.iter().enumerate() {
            v.positive(&format!("evaluation.near_strike_spots[{i}]"), s);
        }
        for (i, &nu) in e.nu_slices.iter().enumerate() {
            v.check(nu.is_finite() && nu >= 0.0, &format!("evaluation.nu_slices[{i}]"), || {
                format!("must be non-negative, got {nu}")
            });
        }
        v.check(!self.output.directory.is_empty(), "output.directory", || "must not be empty".into());

        if !v.0.is_empty() {
            return Err(CliError::Validation(v.0.join("\n")));
        }
        // anything the field checks missed surfaces from the core validation
        for &l in &m.xva.lambda_b {
            self.spec(l)?;
        }
        Ok(())
    }

    pub fn domain(&self) -> Result<DomainBox> {
        let m = &self.model;
        let s_max = self.grid.s_max_multiple * m.strike;
        let axes = match m.kind {
            Kind::Bs1d => vec![Axis::new("S", 0.0, s_max)],
            Kind::BasketAverage | Kind::BasketWorstOf => vec![Axis::new("S1", 0.0, s_max), Axis::new("S2", 0.0, s_max)],
            Kind::Heston => vec![Axis::new("S", 0.0, s_max), Axis::new("nu", 0.0, self.grid.nu_max.unwrap_or(1.0))],
        };
        Ok(DomainBox::new(m.maturity, axes)?)
    }

    pub fn xva(&self, lambda_b: f64) -> XvaParams {
        let x = &self.model.xva;
        let mut p = XvaParams::with_default_funding(lambda_b, x.lambda_c, x.recovery_b, x.recovery_c, self.model.r);
        if let Some(s) = x.funding_spread {
            p.funding_spread = s;
        }
        p
    }

    fn market(&self) -> Result<Market> {
        let m = &self.model;
        let missing = |what: &str| CliError::validation(format!("model.{what}: required for kind {}", m.kind.name()));
        Ok(match m.kind {
            Kind::Bs1d => Market::Bs1d(m.bs.ok_or_else(|| missing("bs"))?),
            Kind::BasketAverage => Market::BasketAverage(m.basket.ok_or_else(|| missing("basket"))?),
            Kind::BasketWorstOf => Market::BasketWorstOf(m.basket.ok_or_else(|| missing("basket"))?),
            Kind::Heston => Market::Heston(m.heston.ok_or_else(|| missing("heston"))?),
        })
    }

    /// The pricing problem for one swept seller hazard rate.
    pub fn spec(&self, lambda_b: f64) -> Result<ModelSpec> {
        let m = &self.model;
        let spec = ModelSpec::new(self.market()?, m.option, m.strike, self.xva(lambda_b), self.domain()?)?
            .with_mode(m.mode.into())
            .with_strict_neumann(m.strict_neumann);
        Ok(spec)
    }

    pub fn architecture(&self) -> Result<Architecture> {
        let n = &self.network;
        let arch =
            Architecture::new(self.kind().spatial_dim() + 1, n.hidden_layers, n.width)?.with_activation(n.activation);
        Ok(if n.input_scaling { arch.with_unit_box_scaling(&self.domain()?.input_bounds())? } else { arch })
    }

    pub fn seeds(&self) -> Vec<u64> {
        (0..self.training.n_trials as u64).map(|i| self.training.seed.wrapping_add(i)).collect()
    }

    pub fn train_config(&self, seed: u64) -> TrainConfig {
        let t = &self.training;
        TrainConfig {
            adam_steps: t.adam_steps,
            lbfgs_steps: t.lbfgs_steps,
            lr0: t.lr0,
            decay: t.decay,
            lbfgs_memory: t.lbfgs_memory,
            seed,
            log_every: t.log_every,
        }
    }

    pub fn region_weights(&self) -> Vec<(RegionId, f64)> {
        self.training.region_weights.iter().filter_map(|(k, &w)| RegionId::parse(k).map(|id| (id, w))).collect()
    }

    pub fn reference_config(&self) -> FdConfig {
        let steps = self.reference.steps.clone().unwrap_or_else(|| match self.kind() {
            Kind::Bs1d => vec![400, 400],
            Kind::BasketAverage | Kind::BasketWorstOf => vec![100, 160, 160],
            Kind::Heston => vec![100, 160, 120],
        });
        FdConfig {
            fixed_point_tol: self.reference.fixed_point_tol,
            max_iters: self.reference.max_iters,
            ..FdConfig::new(steps)
        }
    }

    pub fn evaluation_steps(&self) -> Vec<usize> {
        self.evaluation.steps.clone().unwrap_or_else(|| self.grid.steps.iter().map(|n| 2 * n).collect())
    }

    /// Command-line overrides.
    pub fn apply_overrides(&mut self, seed: Option<u64>, trials: Option<usize>, mode: Option<Mode>) -> Result<()> {
        if let Some(s) = seed {
            self.training.seed = s;
        }
        if let Some(n) = trials {
            self.training.n_trials = n;
        }
        if let Some(m) = mode {
            self.model.mode = m;
        }
        self.validate()
    }
}

fn region_exists(id: RegionId, dim: usize) -> bool {
    match id {
        RegionId::Interior | RegionId::Initial => true,
        RegionId::Lower(a) | RegionId::Upper(a) => a < dim,
    }
}
