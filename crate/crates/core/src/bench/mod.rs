//! Experiment harness: every strategy on every (map, damage) pair, repeated
//! over replicates, with medians and rank tests.
//!
//! Plan files are TOML:
//!
//! ```toml
//! maps = [1, 2, 3, 4]          # archive seeds
//! map_dir = "maps"             # holds map-<seed>.archive; relative to the plan file,
//!                              # default <out-dir>/maps
//! generate_maps = true         # build missing archives before running
//! map_budget = 100000          # evaluations per generated map
//! config = "crawler.toml"      # optional run configuration, relative to the plan file
//! damages = ["d1", "d2", "d3", "d4"]
//! strategies = ["ite", "mo-ite", "site"]
//! replicates = 20
//! trials = 30
//! base_seed = 1
//! damage_jitter = 0.05         # uniform lock-angle perturbation per replicate, rad
//! constraint_scale = 40.0      # output scale of the force constraint GP, N
//! # threshold = 120.0          # force limit, N; default: each archive's own
//! # stop_ratio = 0.9           # omitted: always run every trial
//! ```

pub mod stats;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Deserialize;

use crate::adaptation::{
    adapt, AdaptationConfig, ConstraintSpec, DamagedRobot, Strategy, TrialLog, DEFAULT_FORCE_SCALE,
};
use crate::archive::Archive;
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::sim::{DamageCondition, Simulator};

pub use stats::{mann_whitney_u, median};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlanFile {
    maps: Vec<u64>,
    map_dir: Option<PathBuf>,
    #[serde(default)]
    generate_maps: bool,
    #[serde(default = "default_budget")]
    map_budget: u64,
    config: Option<PathBuf>,
    #[serde(default = "default_damages")]
    damages: Vec<String>,
    #[serde(default = "default_strategies")]
    strategies: Vec<String>,
    #[serde(default = "default_replicates")]
    replicates: usize,
    #[serde(default = "default_trials")]
    trials: usize,
    #[serde(default)]
    base_seed: u64,
    #[serde(default = "default_jitter")]
    damage_jitter: f64,
    #[serde(default = "default_scale")]
    constraint_scale: f64,
    threshold: Option<f64>,
    stop_ratio: Option<f64>,
}

fn default_budget() -> u64 {
    100_000
}
fn default_damages() -> Vec<String> {
    ["d1", "d2", "d3", "d4"].map(String::from).to_vec()
}
fn default_strategies() -> Vec<String> {
    ["ite", "mo-ite", "site"].map(String::from).to_vec()
}
fn default_replicates() -> usize {
    20
}
fn default_trials() -> usize {
    30
}
fn default_jitter() -> f64 {
    0.05
}
fn default_scale() -> f64 {
    DEFAULT_FORCE_SCALE
}

/// A validated experiment plan with paths resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub maps: Vec<u64>,
    pub map_dir: PathBuf,
    pub generate_maps: bool,
    pub map_budget: u64,
    pub run_config: RunConfig,
    pub damages: Vec<DamageCondition>,
    pub strategies: Vec<Strategy>,
    pub replicates: usize,
    pub trials: usize,
    pub base_seed: u64,
    pub damage_jitter: f64,
    pub constraint_scale: f64,
    pub threshold: Option<f64>,
    pub stop_ratio: Option<f64>,
}

impl ExperimentPlan {
    /// Parses a plan; relative paths resolve against `plan_dir`, and the map
    /// directory defaults to `<out_dir>/maps`.
    pub fn parse(text: &str, plan_dir: &Path, out_dir: &Path) -> Result<Self> {
        let raw: PlanFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let run_config = match &raw.config {
            Some(p) => RunConfig::load(plan_dir.join(p))?,
            None => RunConfig::default(),
        };
        let damages = raw.damages.iter().map(|d| d.parse()).collect::<Result<Vec<DamageCondition>>>()?;
        let strategies = raw.strategies.iter().map(|s| s.parse()).collect::<Result<Vec<Strategy>>>()?;
        let plan = ExperimentPlan {
            maps: raw.maps,
            map_dir: raw.map_dir.map_or_else(|| out_dir.join("maps"), |d| plan_dir.join(d)),
            generate_maps: raw.generate_maps,
            map_budget: raw.map_budget,
            run_config,
            damages,
            strategies,
            replicates: raw.replicates,
            trials: raw.trials,
            base_seed: raw.base_seed,
            damage_jitter: raw.damage_jitter,
            constraint_scale: raw.constraint_scale,
            threshold: raw.threshold,
            stop_ratio: raw.stop_ratio,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn load(path: &Path, out_dir: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let dir = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, dir, out_dir).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        if self.maps.is_empty() || self.damages.is_empty() || self.strategies.is_empty() {
            return fail("maps, damages and strategies must be non-empty");
        }
        if self.replicates < 2 {
            return fail("replicates must be ≥ 2");
        }
        if self.trials == 0 {
            return fail("trials must be ≥ 1");
        }
        if !(self.damage_jitter >= 0.0 && self.damage_jitter.is_finite()) {
            return fail("damage_jitter must be a non-negative number");
        }
        if !(self.constraint_scale > 0.0 && self.constraint_scale.is_finite()) {
            return fail("constraint_scale must be positive");
        }
        if self.threshold.is_some_and(|t| !t.is_finite()) {
            return fail("threshold must be finite");
        }
        Ok(())
    }

    pub fn archive_path(&self, map: u64) -> PathBuf {
        self.map_dir.join(format!("map-{map}.archive"))
    }

    /// Number of adaptation runs the plan describes.
    pub fn run_count(&self) -> usize {
        self.maps.len() * self.damages.len() * self.strategies.len() * self.replicates
    }
}

/// 64-bit FNV-1a, used wherever a seed must be a stable function of labels.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// Seed of one replicate: FNV-1a of `"<base>/<map>/<damage>/<strategy>/<replicate>"`.
/// Depends only on its own labels, so any subset of a plan reproduces the
/// same runs as the full plan.
pub fn replicate_seed(base: u64, map: u64, damage: DamageCondition, strategy: Strategy, replicate: usize) -> u64 {
    fnv1a(format!("{base}/{map}/{damage}/{strategy}/{replicate}").as_bytes())
}

/// Identifies one adaptation run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RunKey {
    pub map: u64,
    pub damage: DamageCondition,
    pub strategy: Strategy,
    pub replicate: usize,
}

impl RunKey {
    /// File name of the run's trial log.
    pub fn file_name(&self) -> String {
        format!("map{}_{}_{}_r{}.csv", self.map, self.damage, self.strategy, self.replicate)
    }

    pub fn from_file_name(name: &str) -> Option<RunKey> {
        let stem = name.strip_suffix(".csv")?;
        let mut parts = stem.split('_');
        let map = parts.next()?.strip_prefix("map")?.parse().ok()?;
        let damage = parts.next()?.parse().ok()?;
        let strategy = parts.next()?.parse().ok()?;
        let replicate = parts.next()?.strip_prefix('r')?.parse().ok()?;
        parts.next().is_none().then_some(RunKey {
            map,
            damage,
            strategy,
            replicate,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub key: RunKey,
    pub seed: u64,
    pub log: TrialLog,
}

/// The two headline metrics of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOutcome {
    pub best_safe: f64,
    pub unsafe_count: usize,
}

impl From<&TrialLog> for RunOutcome {
    fn from(log: &TrialLog) -> Self {
        RunOutcome {
            best_safe: log.best_safe_performance,
            unsafe_count: log.unsafe_count,
        }
    }
}

/// Loads every archive of the plan, generating missing ones when allowed.
/// All archives are checked before any adaptation starts.
pub fn prepare_maps(plan: &ExperimentPlan) -> Result<Vec<(u64, Archive)>> {
    let sim = plan.run_config.simulator()?;
    let fingerprint = sim.fingerprint();
    let mut out = Vec::with_capacity(plan.maps.len());
    for &map in &plan.maps {
        let path = plan.archive_path(map);
        let archive = if path.exists() {
            Archive::load(&path)?
        } else if plan.generate_maps {
            let (archive, _) = plan.run_config.generate_map(map, plan.map_budget)?;
            fs::create_dir_all(&plan.map_dir).map_err(|e| Error::io(&plan.map_dir, e))?;
            archive.save(&path)?;
            archive
        } else {
            return Err(Error::Config(format!("missing archive {}", path.display())));
        };
        if archive.meta.sim_version != fingerprint {
            return Err(Error::Config(format!(
                "{} was generated with simulator {} but the plan uses {fingerprint}",
                path.display(),
                archive.meta.sim_version
            )));
        }
        if archive.is_empty() {
            return Err(Error::Config(format!("{} is empty", path.display())));
        }
        out.push((map, archive));
    }
    Ok(out)
}

/// Force constraint for adapting on `archive`; without an explicit threshold
/// the archive's recorded one is used.
pub fn force_constraint(archive: &Archive, threshold: Option<f64>, scale: f64) -> Result<ConstraintSpec> {
    let threshold = threshold
        .or(archive.meta.safety_threshold)
        .ok_or_else(|| Error::Config("archive has no safety threshold and none was given".into()))?;
    ConstraintSpec::new("force_sum", threshold)?.with_scale(scale)
}

/// Runs every (map, damage, strategy, replicate) combination in parallel.
/// Records come back in key order whatever the thread count.
pub fn run_experiment(plan: &ExperimentPlan, maps: &[(u64, Archive)], sim: &Simulator) -> Result<Vec<RunRecord>> {
    let mut keys = Vec::with_capacity(plan.run_count());
    for (mi, &(map, _)) in maps.iter().enumerate() {
        for &damage in &plan.damages {
            for &strategy in &plan.strategies {
                for replicate in 0..plan.replicates {
                    keys.push((
                        mi,
                        RunKey {
                            map,
                            damage,
                            strategy,
                            replicate,
                        },
                    ));
                }
            }
        }
    }
    let mut records = keys
        .into_par_iter()
        .map(|(mi, key)| {
            let archive = &maps[mi].1;
            let seed = replicate_seed(plan.base_seed, key.map, key.damage, key.strategy, key.replicate);
            let damage = key.damage.spec().jittered(seed, plan.damage_jitter);
            let robot = DamagedRobot::new(sim.clone(), damage);
            let mut cfg = AdaptationConfig::new(
                key.strategy,
                vec![force_constraint(archive, plan.threshold, plan.constraint_scale)?],
            );
            cfg.max_trials = plan.trials;
            cfg.stop_ratio = plan.stop_ratio;
            let log = adapt(archive, &robot, &cfg)?;
            Ok(RunRecord { key, seed, log })
        })
        .collect::<Result<Vec<_>>>()?;
    records.sort_by_key(|r| r.key);
    Ok(records)
}

/// Writes one trial-log CSV per run under `dir`.
pub fn write_logs(records: &[RunRecord], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for r in records {
        let path = dir.join(r.key.file_name());
        fs::write(&path, r.log.to_csv()).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

/// Reads the run outcomes back from a directory of trial-log CSVs.
pub fn read_logs(dir: &Path) -> Result<BTreeMap<RunKey, RunOutcome>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut out = BTreeMap::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        let Some(key) = RunKey::from_file_name(&name) else {
            continue;
        };
        let path = entry.path();
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        out.insert(key, parse_log_outcome(&text, &path)?);
    }
    if out.is_empty() {
        return Err(Error::format(dir, 0, "no trial logs found"));
    }
    Ok(out)
}

/// Recomputes best-safe performance and unsafe count from trial-log CSV text.
pub fn parse_log_outcome(text: &str, origin: &Path) -> Result<RunOutcome> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::format(origin, 1, "empty trial log"))?;
    let cols: Vec<&str> = header.split(',').collect();
    let find = |name: &str| {
        cols.iter()
            .position(|c| *c == name)
            .ok_or_else(|| Error::format(origin, 1, format!("missing column `{name}`")))
    };
    let (perf_col, feas_col) = (find("performance")?, find("feasible")?);
    let mut outcome = RunOutcome {
        best_safe: f64::NEG_INFINITY,
        unsafe_count: 0,
    };
    for (i, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols.len() {
            return Err(Error::format(origin, i + 2, "wrong number of fields"));
        }
        let perf: f64 = fields[perf_col]
            .parse()
            .map_err(|_| Error::format(origin, i + 2, "bad performance"))?;
        match fields[feas_col] {
            "1" => outcome.best_safe = outcome.best_safe.max(perf),
            "0" => outcome.unsafe_count += 1,
            _ => return Err(Error::format(origin, i + 2, "feasible must be 0 or 1")),
        }
    }
    Ok(outcome)
}

/// Medians for one (scope, damage, strategy) group.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    /// `None` pools every map.
    pub map: Option<u64>,
    pub damage: DamageCondition,
    pub strategy: Strategy,
    pub median_best_safe: f64,
    pub median_unsafe: f64,
    pub best_safe_values: Vec<f64>,
    pub unsafe_values: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Metric {
    BestSafe,
    Unsafe,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::BestSafe => "best_safe",
            Metric::Unsafe => "unsafe_trials",
        }
    }
}

/// Pooled rank test between two strategies on one damage.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub damage: DamageCondition,
    pub metric: Metric,
    pub a: Strategy,
    pub b: Strategy,
    pub u: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub rows: Vec<SummaryRow>,
    pub comparisons: Vec<Comparison>,
}

impl Summary {
    pub fn pooled(&self, damage: DamageCondition, strategy: Strategy) -> Option<&SummaryRow> {
        self.rows
            .iter()
            .find(|r| r.map.is_none() && r.damage == damage && r.strategy == strategy)
    }

    pub fn comparison(&self, damage: DamageCondition, metric: Metric, b: Strategy) -> Option<&Comparison> {
        self.comparisons
            .iter()
            .find(|c| c.damage == damage && c.metric == metric && c.b == b)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "scope,damage,strategy,n,median_best_safe,median_unsafe,best_safe_values,unsafe_values\n",
        );
        for r in &self.rows {
            let scope = r.map.map_or_else(|| "all".to_string(), |m| format!("map{m}"));
            let best: Vec<String> = r.best_safe_values.iter().map(f64::to_string).collect();
            let unsafe_: Vec<String> = r.unsafe_values.iter().map(usize::to_string).collect();
            let _ = writeln!(
                s,
                "{scope},{},{},{},{},{},{},{}",
                r.damage,
                r.strategy,
                r.unsafe_values.len(),
                r.median_best_safe,
                r.median_unsafe,
                best.join(";"),
                unsafe_.join(";")
            );
        }
        s
    }

    /// Plain-text report: pooled medians followed by every p-value.
    pub fn report(&self) -> String {
        let mut s = String::from("Pooled medians over maps and replicates\n\n");
        let _ = writeln!(s, "{:<6} {:<8} {:>5} {:>16} {:>14}", "damage", "strategy", "n", "best_safe(m/s)", "unsafe_trials");
        for r in self.rows.iter().filter(|r| r.map.is_none()) {
            let _ = writeln!(
                s,
                "{:<6} {:<8} {:>5} {:>16.4} {:>14.1}",
                r.damage.to_string(),
                r.strategy.to_string(),
                r.unsafe_values.len(),
                r.median_best_safe,
                r.median_unsafe
            );
        }
        s.push_str("\nMann-Whitney U, two-sided\n\n");
        let _ = writeln!(s, "{:<6} {:<14} {:<16} {:>10} {:>12}", "damage", "metric", "comparison", "U", "p");
        for c in &self.comparisons {
            let _ = writeln!(
                s,
                "{:<6} {:<14} {:<16} {:>10.1} {:>12.4e}",
                c.damage.to_string(),
                c.metric.as_str(),
                format!("{} vs {}", c.a, c.b),
                c.u,
                c.p
            );
        }
        s
    }
}

/// Medians pooled over maps and per map, plus SITE-vs-baseline rank tests.
pub fn summarize(outcomes: &BTreeMap<RunKey, RunOutcome>) -> Result<Summary> {
    type Group = (Option<u64>, DamageCondition, Strategy);
    let mut groups: BTreeMap<Group, Vec<RunOutcome>> = BTreeMap::new();
    for (k, o) in outcomes {
        groups.entry((None, k.damage, k.strategy)).or_default().push(*o);
        groups.entry((Some(k.map), k.damage, k.strategy)).or_default().push(*o);
    }
    let rows: Vec<SummaryRow> = groups
        .iter()
        .map(|(&(map, damage, strategy), runs)| {
            let best: Vec<f64> = runs.iter().map(|o| o.best_safe).collect();
            let unsafe_: Vec<usize> = runs.iter().map(|o| o.unsafe_count).collect();
            let unsafe_f: Vec<f64> = unsafe_.iter().map(|&u| u as f64).collect();
            SummaryRow {
                map,
                damage,
                strategy,
                median_best_safe: median(&best).unwrap_or(f64::NAN),
                median_unsafe: median(&unsafe_f).unwrap_or(f64::NAN),
                best_safe_values: best,
                unsafe_values: unsafe_,
            }
        })
        .collect();

    let mut comparisons = Vec::new();
    let damages: Vec<DamageCondition> = {
        let mut d: Vec<_> = outcomes.keys().map(|k| k.damage).collect();
        d.dedup();
        d.sort();
        d.dedup();
        d
    };
    for damage in damages {
        let Some(site) = groups.get(&(None, damage, Strategy::Site)) else {
            continue;
        };
        for other in [Strategy::Ite, Strategy::MoIte] {
            let Some(base) = groups.get(&(None, damage, other)) else {
                continue;
            };
            for metric in [Metric::Unsafe, Metric::BestSafe] {
                let pick = |o: &RunOutcome| match metric {
                    Metric::Unsafe => o.unsafe_count as f64,
                    Metric::BestSafe => o.best_safe,
                };
                let a: Vec<f64> = site.iter().map(pick).collect();
                let b: Vec<f64> = base.iter().map(pick).collect();
                let (u, p) = mann_whitney_u(&a, &b)?;
                comparisons.push(Comparison {
                    damage,
                    metric,
                    a: Strategy::Site,
                    b: other,
                    u,
                    p,
                });
            }
        }
    }
    Ok(Summary { rows, comparisons })
}

/// Full bench: maps, runs, logs, `summary.csv` and `report.txt` under `out_dir`.
pub fn run_bench(plan: &ExperimentPlan, out_dir: &Path) -> Result<Summary> {
    let maps = prepare_maps(plan)?;
    let sim = plan.run_config.simulator()?;
    let records = run_experiment(plan, &maps, &sim)?;
    let logs = out_dir.join("logs");
    write_logs(&records, &logs)?;
    let outcomes: BTreeMap<RunKey, RunOutcome> = records.iter().map(|r| (r.key, RunOutcome::from(&r.log))).collect();
    let summary = summarize(&outcomes)?;
    write_summary(&summary, &out_dir.join("summary.csv"))?;
    Ok(summary)
}

/// Writes the summary CSV at `path` and the text report beside it.
pub fn write_summary(summary: &Summary, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, summary.to_csv()).map_err(|e| Error::io(path, e))?;
    let report = path.with_file_name("report.txt");
    fs::write(&report, summary.report()).map_err(|e| Error::io(&report, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn run_key_file_name_round_trips() {
        let k = RunKey {
            map: 3,
            damage: DamageCondition::D4,
            strategy: Strategy::MoIte,
            replicate: 17,
        };
        assert_eq!(k.file_name(), "map3_d4_mo-ite_r17.csv");
        assert_eq!(RunKey::from_file_name(&k.file_name()), Some(k));
        assert_eq!(RunKey::from_file_name("summary.csv"), None);
    }

    #[test]
    fn fnv_reference_values() {
        assert_eq!(fnv1a(b""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(fnv1a(b"a"), 0xaf63_dc4c_8601_ec8c);
    }

    #[test]
    fn replicate_seeds_differ_by_label() {
        let s = |r| replicate_seed(1, 1, DamageCondition::D1, Strategy::Site, r);
        assert_ne!(s(0), s(1));
        assert_eq!(s(5), s(5));
        assert_ne!(
            replicate_seed(1, 1, DamageCondition::D1, Strategy::Site, 0),
            replicate_seed(1, 1, DamageCondition::D1, Strategy::Ite, 0)
        );
    }

    #[test]
    fn plan_defaults_and_validation() {
        let p = ExperimentPlan::parse("maps = [1, 2]", Path::new("/p"), Path::new("/o")).unwrap();
        assert_eq!(p.replicates, 20);
        assert_eq!(p.trials, 30);
        assert_eq!(p.run_count(), 2 * 4 * 3 * 20);
        assert_eq!(p.archive_path(2), Path::new("/o/maps/map-2.archive"));
        assert!(p.stop_ratio.is_none());
        assert!(ExperimentPlan::parse("maps = [1]\nreplicates = 1", Path::new("."), Path::new(".")).is_err());
        assert!(ExperimentPlan::parse("maps = [1]\nbogus = 1", Path::new("."), Path::new(".")).is_err());
        assert!(ExperimentPlan::parse("maps = [1]\ndamages = [\"d9\"]", Path::new("."), Path::new(".")).is_err());
    }

    #[test]
    fn log_outcome_from_csv() {
        let csv = "trial,cell,strategy,performance,feasible,constraint_1,acquisition\n\
                   1,4,site,0.5,1,3,0.1\n2,5,site,0.9,0,-2,0.1\n3,6,site,0.7,1,1,0.1\n";
        let o = parse_log_outcome(csv, Path::new("x")).unwrap();
        assert_eq!(o.best_safe, 0.7);
        assert_eq!(o.unsafe_count, 1);
        assert!(parse_log_outcome("trial,cell\n", Path::new("x")).is_err());
    }

    #[test]
    fn summary_counts_sixteen_p_values() {
        let mut outcomes = BTreeMap::new();
        for damage in DamageCondition::BENCH {
            for strategy in Strategy::ALL {
                for replicate in 0..3 {
                    outcomes.insert(
                        RunKey {
                            map: 1,
                            damage,
                            strategy,
                            replicate,
                        },
                        RunOutcome {
                            best_safe: replicate as f64,
                            unsafe_count: replicate,
                        },
                    );
                }
            }
        }
        let s = summarize(&outcomes).unwrap();
        assert_eq!(s.comparisons.len(), 16);
        assert!(s.comparisons.iter().all(|c| (0.0..=1.0).contains(&c.p)));
        // Pooled plus one map.
        assert_eq!(s.rows.len(), 2 * 4 * 3);
        assert_eq!(s.pooled(DamageCondition::D2, Strategy::Ite).unwrap().median_unsafe, 1.0);
    }
}
