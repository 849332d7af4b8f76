//! Online adaptation on the damaged robot: map-based constrained Bayesian
//! optimization and the two baselines it is compared against.
//!
//! Every strategy searches over the filled cells of the map. The objective
//! GP uses the archived speed as its prior mean, so observations model only
//! the damage-induced deviation from the map. Each constraint
//! `c(x) = threshold − force(x)` gets its own GP with the archived force as
//! the prior, which is what gives the safety-aware strategy an informed
//! estimate of the safe region before the first trial.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::Arc;

use crate::acquisition::{
    ehvi_2d, expected_constrained_improvement, expected_improvement, Incumbent, ParetoFront2, Posterior,
};
use crate::archive::{Archive, Descriptor, Elite};
use crate::error::{Error, Result};
use crate::gp::{GpModel, KernelParams};
use crate::sim::{DamageSpec, Simulator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub enum Strategy {
    /// Expected improvement on speed, blind to safety.
    #[serde(rename = "ite")]
    Ite,
    /// Expected hypervolume improvement on (speed, −force).
    #[serde(rename = "mo-ite")]
    MoIte,
    /// Expected constrained improvement.
    #[serde(rename = "site")]
    Site,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Ite, Strategy::MoIte, Strategy::Site];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Ite => "ite",
            Strategy::MoIte => "mo-ite",
            Strategy::Site => "site",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "ite" => Ok(Strategy::Ite),
            "mo-ite" => Ok(Strategy::MoIte),
            "site" => Ok(Strategy::Site),
            other => Err(Error::InvalidInput(format!("unknown strategy `{other}`"))),
        }
    }
}

/// Default output scale of the force constraint GP, N. With the shared unit
/// kernel this gives a prior standard deviation of 40 N on the force slack.
pub const DEFAULT_FORCE_SCALE: f64 = 40.0;

/// Upper bound on a raw safety measurement; feasible iff `measurement ≤ threshold`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ConstraintSpec {
    pub name: String,
    pub threshold: f64,
    /// Output scale of the constraint GP in measurement units: the shared
    /// kernel's signal and noise variances are multiplied by `scale²`.
    pub scale: f64,
}

impl ConstraintSpec {
    pub fn new(name: impl Into<String>, threshold: f64) -> Result<Self> {
        if !threshold.is_finite() {
            return Err(Error::InvalidInput(format!("threshold must be finite, got {threshold}")));
        }
        Ok(ConstraintSpec {
            name: name.into(),
            threshold,
            scale: 1.0,
        })
    }

    pub fn with_scale(mut self, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidInput(format!("constraint scale must be positive, got {scale}")));
        }
        self.scale = scale;
        Ok(self)
    }

    /// Kernel for this constraint's GP.
    pub fn kernel(&self, base: KernelParams) -> KernelParams {
        let s2 = self.scale * self.scale;
        KernelParams {
            signal_variance: base.signal_variance * s2,
            noise_variance: base.noise_variance * s2,
            ..base
        }
    }

    /// `c = threshold − measurement`, non-negative when satisfied.
    pub fn slack(&self, measurement: f64) -> f64 {
        self.threshold - measurement
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptationConfig {
    pub max_trials: usize,
    /// Stop once the best safe speed reaches this fraction of the map's best
    /// speed; `None` always runs `max_trials`.
    pub stop_ratio: Option<f64>,
    pub kernel: KernelParams,
    pub constraints: Vec<ConstraintSpec>,
    pub strategy: Strategy,
}

impl AdaptationConfig {
    pub fn new(strategy: Strategy, constraints: Vec<ConstraintSpec>) -> Self {
        AdaptationConfig {
            max_trials: 30,
            stop_ratio: Some(0.9),
            kernel: KernelParams::default(),
            constraints,
            strategy,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_trials == 0 {
            return Err(Error::Config("max_trials must be ≥ 1".into()));
        }
        if let Some(r) = self.stop_ratio {
            if !(r > 0.0 && r <= 1.0) {
                return Err(Error::Config(format!("stop_ratio must be in (0,1], got {r}")));
            }
        }
        if self.strategy == Strategy::MoIte && self.constraints.len() != 1 {
            return Err(Error::Config("mo-ite needs exactly one force constraint".into()));
        }
        self.kernel.validate()
    }
}

/// What the robot reports after running a behavior.
#[derive(Debug, Clone, PartialEq)]
pub struct Execution {
    pub performance: f64,
    /// Raw safety measurements, one per constraint.
    pub measurements: Vec<f64>,
    pub failed: bool,
}

/// Anything that can execute an archived behavior.
pub trait Robot {
    fn execute(&self, elite: &Elite) -> Execution;
}

/// The crawler simulator with a damage condition applied.
#[derive(Debug, Clone)]
pub struct DamagedRobot {
    pub sim: Simulator,
    pub damage: DamageSpec,
}

impl DamagedRobot {
    pub fn new(sim: Simulator, damage: DamageSpec) -> Self {
        DamagedRobot { sim, damage }
    }
}

impl Robot for DamagedRobot {
    fn execute(&self, elite: &Elite) -> Execution {
        match self.sim.measure(&elite.genotype, &self.damage) {
            Ok(r) if !r.failed => Execution {
                performance: r.speed,
                measurements: vec![r.force_sum],
                failed: false,
            },
            _ => Execution {
                performance: 0.0,
                measurements: vec![f64::NAN],
                failed: true,
            },
        }
    }
}

/// Runs `elite` on `robot` and converts the raw measurements into constraint
/// slacks. A failed run yields performance 0 and slack −∞ for every constraint.
pub fn execute_behavior(robot: &dyn Robot, elite: &Elite, constraints: &[ConstraintSpec]) -> (f64, Vec<f64>, bool) {
    let run = robot.execute(elite);
    if run.failed || run.measurements.len() < constraints.len() || !run.performance.is_finite() {
        return (0.0, vec![f64::NEG_INFINITY; constraints.len()], true);
    }
    let slacks = constraints
        .iter()
        .zip(&run.measurements)
        .map(|(c, &m)| if m.is_finite() { c.slack(m) } else { f64::NEG_INFINITY })
        .collect();
    (run.performance, slacks, false)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    /// 1-based.
    pub index: usize,
    pub cell: usize,
    pub descriptor: Descriptor,
    pub measured_performance: f64,
    /// Constraint slacks `c_i`.
    pub measured_constraints: Vec<f64>,
    pub feasible: bool,
    pub acquisition_value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialLog {
    pub strategy: Strategy,
    pub trials: Vec<Trial>,
    /// Best speed among feasible trials, −∞ when none.
    pub best_safe_performance: f64,
    pub unsafe_count: usize,
}

impl TrialLog {
    fn new(strategy: Strategy) -> Self {
        TrialLog {
            strategy,
            trials: Vec::new(),
            best_safe_performance: f64::NEG_INFINITY,
            unsafe_count: 0,
        }
    }

    fn push(&mut self, trial: Trial) {
        if trial.feasible {
            self.best_safe_performance = self.best_safe_performance.max(trial.measured_performance);
        } else {
            self.unsafe_count += 1;
        }
        self.trials.push(trial);
    }

    pub fn csv_header(n_constraints: usize) -> String {
        let mut h = String::from("trial,cell,strategy,performance,feasible");
        for i in 1..=n_constraints {
            h.push_str(&format!(",constraint_{i}"));
        }
        h.push_str(",acquisition");
        h
    }

    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        let n = self.trials.first().map_or(0, |t| t.measured_constraints.len());
        writeln!(out, "{}", Self::csv_header(n))?;
        for t in &self.trials {
            write!(
                out,
                "{},{},{},{},{}",
                t.index,
                t.cell,
                self.strategy,
                t.measured_performance,
                u8::from(t.feasible)
            )?;
            for c in &t.measured_constraints {
                write!(out, ",{c}")?;
            }
            writeln!(out, ",{}", t.acquisition_value)?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("csv is utf-8")
    }
}

/// Prior mean defined by cell lookup. Candidates are always archive cells, so
/// no interpolation between cells is needed.
fn lookup_prior(archive: &Archive, value: impl Fn(&Elite) -> f64) -> crate::gp::PriorMean {
    let table: HashMap<usize, f64> = archive.iter().map(|(k, e)| (k, value(e))).collect();
    let resolution = *archive.resolution();
    Arc::new(move |x: &[f64]| {
        let d = <[f64; 5]>::try_from(x)
            .ok()
            .and_then(|a| Descriptor::from_array(a).ok());
        d.and_then(|d| {
            let coords = crate::archive::discretize(&d, &resolution);
            table.get(&crate::archive::linear_index(&coords, &resolution)).copied()
        })
        .unwrap_or(0.0)
    })
}

/// Per-strategy GP state during one adaptation run.
pub struct Models {
    pub objective: GpModel,
    /// One GP per constraint slack (`mo-ite`: the single force constraint).
    pub constraints: Vec<GpModel>,
}

impl Models {
    /// GPs with archive-derived prior means: speed for the objective and
    /// `threshold − archived force` for each constraint.
    pub fn from_archive(archive: &Archive, kernel: KernelParams, constraints: &[ConstraintSpec]) -> Result<Self> {
        let objective = GpModel::new(kernel, 5, lookup_prior(archive, |e| e.performance))?;
        let constraints = constraints
            .iter()
            .enumerate()
            .map(|(i, spec)| {
                let threshold = spec.threshold;
                GpModel::new(
                    spec.kernel(kernel),
                    5,
                    lookup_prior(archive, move |e| threshold - e.safety_values.get(i).copied().unwrap_or(0.0)),
                )
            })
            .collect::<Result<_>>()?;
        Ok(Models { objective, constraints })
    }

    fn objective_at(&self, elite: &Elite) -> Posterior {
        self.objective
            .predict_with_prior(&elite.descriptor.as_array(), elite.performance)
            .into()
    }

    fn constraint_at(&self, i: usize, spec: &ConstraintSpec, elite: &Elite) -> Posterior {
        let prior = spec.threshold - elite.safety_values.get(i).copied().unwrap_or(0.0);
        self.constraints[i]
            .predict_with_prior(&elite.descriptor.as_array(), prior)
            .into()
    }
}

/// Acquisition score of one candidate; larger is better.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Score {
    pub value: f64,
    /// Posterior mean of the objective, the secondary ranking key.
    pub mean: f64,
}

/// Selection order: higher acquisition, then higher posterior mean, then lower cell index.
fn better(a: (usize, Score), b: (usize, Score)) -> bool {
    match a.1.value.total_cmp(&b.1.value) {
        std::cmp::Ordering::Greater => true,
        std::cmp::Ordering::Less => false,
        std::cmp::Ordering::Equal => match a.1.mean.total_cmp(&b.1.mean) {
            std::cmp::Ordering::Greater => true,
            std::cmp::Ordering::Less => false,
            std::cmp::Ordering::Equal => a.0 < b.0,
        },
    }
}

/// Expected constrained improvement at a cell.
pub fn site_score(models: &Models, constraints: &[ConstraintSpec], elite: &Elite, incumbent: Incumbent) -> Score {
    let obj = models.objective_at(elite);
    let cons: Vec<Posterior> = constraints
        .iter()
        .enumerate()
        .map(|(i, spec)| models.constraint_at(i, spec, elite))
        .collect();
    Score {
        value: expected_constrained_improvement(obj, &cons, incumbent),
        mean: obj.mean,
    }
}

/// Expected improvement at a cell. Before any observation the incumbent is
/// −∞, where ranking by expected improvement reduces to ranking by the mean.
pub fn ite_score(models: &Models, elite: &Elite, incumbent: Option<f64>) -> Score {
    let obj = models.objective_at(elite);
    let value = match incumbent {
        Some(best) => expected_improvement(obj, best),
        None => obj.mean,
    };
    Score { value, mean: obj.mean }
}

/// Expected hypervolume improvement of (speed, −force) at a cell.
pub fn mo_ite_score(models: &Models, spec: &ConstraintSpec, elite: &Elite, front: &ParetoFront2) -> Score {
    let obj = models.objective_at(elite);
    // The constraint GP models threshold − force; shift it to −force.
    let slack = models.constraint_at(0, spec, elite);
    let neg_force = Posterior::new(slack.mean - spec.threshold, slack.std);
    Score {
        value: ehvi_2d(obj, neg_force, front),
        mean: obj.mean,
    }
}

/// Reference point for the (speed, −force) front: the map's worst value in
/// each objective, lowered by 10% of the map's range in that objective.
pub fn mo_reference_point(archive: &Archive) -> (f64, f64) {
    let mut lo = (f64::INFINITY, f64::INFINITY);
    let mut hi = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for (_, e) in archive.iter() {
        let p = (e.performance, -e.safety_values.first().copied().unwrap_or(0.0));
        lo = (lo.0.min(p.0), lo.1.min(p.1));
        hi = (hi.0.max(p.0), hi.1.max(p.1));
    }
    let margin = |l: f64, h: f64| 0.1 * (h - l).max(l.abs().max(1e-9) * 1e-3);
    (lo.0 - margin(lo.0, hi.0), lo.1 - margin(lo.1, hi.1))
}

/// Incumbent for the constrained acquisition.
pub fn feasible_incumbent(log: &TrialLog) -> Incumbent {
    if log.best_safe_performance.is_finite() {
        Incumbent::Feasible(log.best_safe_performance)
    } else {
        Incumbent::NoneFeasible
    }
}

/// Exhaustive argmax over all untested cells.
pub fn select_next(
    archive: &Archive,
    models: &Models,
    config: &AdaptationConfig,
    log: &TrialLog,
    front: &ParetoFront2,
    tested: &BTreeSet<usize>,
) -> Option<(usize, Score)> {
    let incumbent_any = log
        .trials
        .iter()
        .map(|t| t.measured_performance)
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))));
    let site_incumbent = feasible_incumbent(log);
    let mut best: Option<(usize, Score)> = None;
    for (cell, elite) in archive.iter() {
        if tested.contains(&cell) {
            continue;
        }
        let score = match config.strategy {
            Strategy::Site => site_score(models, &config.constraints, elite, site_incumbent),
            Strategy::Ite => ite_score(models, elite, incumbent_any),
            Strategy::MoIte => mo_ite_score(models, &config.constraints[0], elite, front),
        };
        if best.is_none_or(|b| better((cell, score), b)) {
            best = Some((cell, score));
        }
    }
    best
}

/// Runs select → execute → update until `max_trials`, the stop ratio, or
/// every cell has been tried.
pub fn adapt(archive: &Archive, robot: &dyn Robot, config: &AdaptationConfig) -> Result<TrialLog> {
    config.validate()?;
    if archive.is_empty() {
        return Err(Error::Config("cannot adapt with an empty archive".into()));
    }
    let mut models = Models::from_archive(archive, config.kernel, &config.constraints)?;
    let mut log = TrialLog::new(config.strategy);
    let mut tested = BTreeSet::new();
    let mut front = ParetoFront2::new(mo_reference_point(archive));
    let stop_at = config
        .stop_ratio
        .zip(archive.best())
        .map(|(r, (_, e))| r * e.performance);

    for index in 1..=config.max_trials {
        let Some((cell, score)) = select_next(archive, &models, config, &log, &front, &tested) else {
            break;
        };
        let elite = archive.get(cell).expect("selected cell is filled");
        let (performance, slacks, failed) = execute_behavior(robot, elite, &config.constraints);
        let feasible = !failed && slacks.iter().all(|c| *c >= 0.0);
        let x = elite.descriptor.as_array();

        models.objective.update(&x, performance)?;
        // A failed run carries no usable force measurement.
        if !failed {
            for (gp, c) in models.constraints.iter_mut().zip(&slacks) {
                gp.update(&x, *c)?;
            }
            if config.strategy == Strategy::MoIte {
                front.insert((performance, slacks[0] - config.constraints[0].threshold));
            }
        }
        tested.insert(cell);
        log.push(Trial {
            index,
            cell,
            descriptor: elite.descriptor,
            measured_performance: performance,
            measured_constraints: slacks,
            feasible,
            acquisition_value: score.value,
        });
        if stop_at.is_some_and(|s| log.best_safe_performance >= s) {
            break;
        }
    }
    Ok(log)
}
