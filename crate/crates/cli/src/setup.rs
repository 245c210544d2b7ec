//! Turns layered settings into typed experiment inputs.

use nalgebra::DVector;
use per_etd::algorithms::{AlgoConfig, AlgoKind, StepsizeSchedule};
use per_etd::experiments::{ExperimentConfig, Horizon, Metric, Problem, Reference, Start, Stride, Vary};
use per_etd::features::{default_radius, feature_preset, FeatureMap, ProjectionBall};
use per_etd::fixed_points::{lipschitz_constant, monotonicity_constant};
use per_etd::mdp::{FiniteMdp, Policy};

use crate::config::Settings;
use crate::error::CliError;

const DEFAULT_ETA: f64 = 0.001953125;

#[derive(Debug, Clone)]
pub struct Setup {
    pub problem: Problem,
    pub algos: Vec<AlgoKind>,
    pub bs: Vec<usize>,
    pub lambda: f64,
    pub settings: Settings,
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Invalid(msg.into())
}

fn load_problem(s: &Settings) -> Result<Problem, CliError> {
    let features = match (s.raw("features.preset"), s.raw("features.file")) {
        (_, Some(path)) => FeatureMap::load_csv(path).map_err(|e| invalid(format!("`features.file`: {e}")))?,
        (name, None) => {
            let name = name.unwrap_or("phi1");
            feature_preset(name).ok_or_else(|| {
                invalid(format!(
                    "`features.preset`: unknown preset `{name}` (expected phi1, phi2, phi3 or tabular)"
                ))
            })?
        }
    };
    match s.raw("mdp.preset").unwrap_or("baird") {
        "baird" => {
            let target = s.get_or("mdp.target_solid", 0.9)?;
            let behavior = s.get_or("mdp.behavior_solid", 1.0 / 7.0)?;
            let features = match features.n_states() {
                7 => features,
                _ if s.raw("features.preset") == Some("tabular") => FeatureMap::tabular(7),
                n => {
                    return Err(invalid(format!(
                        "`features`: Baird has 7 states, feature map has {n} rows"
                    )))
                }
            };
            Problem::baird(target, behavior, features).map_err(|e| invalid(format!("`mdp`: {e}")))
        }
        "file" => {
            let path = |key: &str| {
                s.raw(key)
                    .ok_or_else(|| invalid(format!("`{key}` is required with mdp.preset = file")))
            };
            let mdp = FiniteMdp::load(path("mdp.mdp_file")?).map_err(|e| invalid(format!("`mdp.mdp_file`: {e}")))?;
            let target =
                Policy::load(path("mdp.target_file")?).map_err(|e| invalid(format!("`mdp.target_file`: {e}")))?;
            let behavior =
                Policy::load(path("mdp.behavior_file")?).map_err(|e| invalid(format!("`mdp.behavior_file`: {e}")))?;
            let features = match (features.n_states(), s.raw("features.preset")) {
                (n, Some("tabular")) if n != mdp.n_states() => FeatureMap::tabular(mdp.n_states()),
                _ => features,
            };
            Ok(Problem::new(mdp, target, behavior, features)?)
        }
        other => Err(invalid(format!(
            "`mdp.preset`: unknown preset `{other}` (expected baird or file)"
        ))),
    }
}

impl Setup {
    pub fn new(settings: Settings) -> Result<Self, CliError> {
        let problem = load_problem(&settings)?;
        let algos = settings
            .list::<AlgoKind>("algo.algo")?
            .unwrap_or_else(|| vec![AlgoKind::PerEtd0]);
        if algos.is_empty() {
            return Err(invalid("`algo.algo` is empty"));
        }
        let bs = settings.list::<usize>("algo.b")?.unwrap_or_else(|| vec![4]);
        if bs.is_empty() || bs.contains(&0) {
            return Err(invalid("`algo.b`: period lengths must be >= 1"));
        }
        let lambda = settings.get_or("algo.lambda", 0.0)?;
        if !(0.0..=1.0).contains(&lambda) {
            return Err(invalid(format!("`algo.lambda`: {lambda} must lie in [0, 1]")));
        }
        Ok(Self {
            problem,
            algos,
            bs,
            lambda,
            settings,
        })
    }

    /// Algorithm instances: each periodic algorithm once per period length.
    pub fn algo_configs(&self) -> Vec<AlgoConfig<f64>> {
        let mut out = Vec::new();
        for &kind in &self.algos {
            let base = AlgoConfig::new(kind).with_lambda(if kind.uses_lambda() { self.lambda } else { 0.0 });
            if kind.is_periodic() {
                out.extend(self.bs.iter().map(|&b| base.with_b(b)));
            } else {
                out.push(base);
            }
        }
        out
    }

    pub fn single_b(&self) -> Result<usize, CliError> {
        match self.bs.as_slice() {
            [b] => Ok(*b),
            _ => Err(invalid("`algo.b` must be a single value for this command")),
        }
    }

    pub fn single_algo(&self) -> Result<AlgoKind, CliError> {
        match self.algos.as_slice() {
            [k] => Ok(*k),
            _ => Err(invalid("`algo.algo` must be a single algorithm for this command")),
        }
    }

    /// `(μ, L)` of the key matrix at the configured λ.
    pub fn key_constants(&self, lambda: f64) -> Result<(f64, f64), CliError> {
        let (model, _) = self.problem.etd_lambda_fixed_point(lambda)?;
        Ok((
            monotonicity_constant(&model.a_matrix)?,
            lipschitz_constant(&model.a_matrix),
        ))
    }

    fn schedule(&self, lambda: f64) -> Result<StepsizeSchedule<f64>, CliError> {
        let s = &self.settings;
        let kind = s.raw("algo.schedule").unwrap_or("constant");
        let sched = match kind {
            "constant" => StepsizeSchedule::constant(s.get_or("algo.eta", DEFAULT_ETA)?)
                .map_err(|e| invalid(format!("`algo.eta`: {e}")))?,
            "diminishing" => {
                let need = |key: &str| -> Result<f64, CliError> {
                    s.get(key)?
                        .ok_or_else(|| invalid(format!("`{key}` is required with algo.schedule = diminishing")))
                };
                StepsizeSchedule::diminishing(need("algo.mu")?, need("algo.t0")?)
                    .map_err(|e| invalid(format!("`algo.mu`/`algo.t0`: {e}")))?
            }
            "theory" => {
                let (mu, lip) = self.key_constants(lambda)?;
                StepsizeSchedule::diminishing(mu, 8.0 * lip * lip / (mu * mu))?
            }
            other => {
                return Err(invalid(format!(
                    "`algo.schedule`: unknown schedule `{other}` (expected constant, diminishing or theory)"
                )))
            }
        };
        Ok(sched)
    }

    fn ball(&self, lambda: f64) -> Result<ProjectionBall<f64>, CliError> {
        match self.settings.raw("algo.radius").unwrap_or("none") {
            "none" => Ok(ProjectionBall::Disabled),
            "theory" => {
                let (mu, _) = self.key_constants(lambda)?;
                let p = &self.problem;
                let r = default_radius(&p.features, p.mdp.r_max(), p.gamma(), mu)?;
                Ok(ProjectionBall::with_radius(r)?)
            }
            _ => {
                let r: f64 = self.settings.get_or("algo.radius", 0.0)?;
                ProjectionBall::with_radius(r).map_err(|e| invalid(format!("`algo.radius`: {e}")))
            }
        }
    }

    pub fn experiment(&self, algo: AlgoConfig<f64>) -> Result<ExperimentConfig, CliError> {
        let s = &self.settings;
        let horizon = match s.get::<u64>("experiment.budget")? {
            Some(n) => Horizon::Transitions(n),
            None => Horizon::Iterations(s.get_or("experiment.iterations", 1000)?),
        };
        let mut cfg = ExperimentConfig::new(self.problem.clone(), algo, horizon);
        cfg.stride = match (
            s.get::<u64>("experiment.stride")?,
            s.get::<u64>("experiment.stride_transitions")?,
        ) {
            (Some(k), _) => Stride::Iterations(k),
            (None, Some(n)) => Stride::Transitions(n),
            (None, None) => Stride::Iterations((cfg.iterations() / 100).max(1)),
        };
        cfg.schedule = self.schedule(algo.lambda)?;
        cfg.ball = self.ball(algo.lambda)?;
        cfg.n_seeds = s.get_or("experiment.seeds", 20)?;
        cfg.base_seed = s.get_or("experiment.base_seed", 0)?;
        cfg.metric = s.get_or("experiment.metric", Metric::ValueL2)?;
        cfg.reference = s.get_or("experiment.reference", Reference::ValuePi)?;
        cfg.jobs = s.get("experiment.jobs")?;
        cfg.start = match s.raw("mdp.start").unwrap_or("stationary") {
            "stationary" => Start::Stationary,
            _ => Start::Fixed(s.get_or("mdp.start", 0)?),
        };
        cfg.validate().map_err(|e| invalid(format!("`experiment`: {e}")))?;
        Ok(cfg)
    }

    pub fn lambda_values(&self) -> Result<Vec<f64>, CliError> {
        Ok(self
            .settings
            .list("experiment.lambda_values")?
            .unwrap_or_else(|| vec![self.lambda]))
    }

    pub fn rho_values(&self) -> Result<Vec<f64>, CliError> {
        self.settings
            .list("experiment.rho_values")?
            .ok_or_else(|| invalid("`experiment.rho_values` is required for sweep-rho"))
    }

    pub fn vary(&self) -> Result<Vary, CliError> {
        self.settings.get_or("experiment.vary", Vary::Target)
    }

    pub fn samples(&self) -> Result<usize, CliError> {
        self.settings.get_or("experiment.samples", 100_000)
    }

    pub fn theta(&self) -> Result<DVector<f64>, CliError> {
        let d = self.problem.features.dim();
        match self.settings.list::<f64>("experiment.theta")? {
            None => Ok(DVector::zeros(d)),
            Some(v) if v.len() == d => Ok(DVector::from_vec(v)),
            Some(v) => Err(invalid(format!(
                "`experiment.theta`: expected {d} entries, got {}",
                v.len()
            ))),
        }
    }
}
