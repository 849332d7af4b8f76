//! MAP-Elites with Gaussian mutation.
//!
//! Candidates are generated in batches from the archive state at the start
//! of each batch, evaluated in parallel, and inserted in generation order.
//! The result therefore depends only on the seed, never on thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::archive::{Archive, ArchiveMeta, Descriptor, Elite, Genotype, DEFAULT_RESOLUTION, DESCRIPTOR_DIMS};
use crate::error::{Error, Result};

/// Outcome of evaluating one genotype.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub performance: f64,
    pub duty: [f64; 4],
    /// Raw safety measurements; the first one drives the safety descriptor dimension.
    pub safety_values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MapElitesConfig {
    pub resolution: [usize; DESCRIPTOR_DIMS],
    pub init_count: usize,
    /// Per-gene standard deviation of the mutation.
    pub mutation_sigma: f64,
    pub seed: u64,
    pub batch_size: usize,
    /// Quantile of the initial batch's force sums used to normalize the safety dimension.
    pub norm_quantile: f64,
    /// Quantile of the initial batch's force sums recorded as the default safety threshold.
    pub threshold_quantile: f64,
}

impl Default for MapElitesConfig {
    fn default() -> Self {
        MapElitesConfig {
            resolution: DEFAULT_RESOLUTION,
            init_count: 2_000,
            mutation_sigma: 0.05,
            seed: 0,
            batch_size: 256,
            norm_quantile: 0.99,
            threshold_quantile: 0.80,
        }
    }
}

/// Counters reported by a run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunStats {
    pub evaluations: u64,
    pub failures: u64,
    pub accepted: u64,
}

/// Linear-interpolation quantile of an unsorted sample (`q` in `[0,1]`).
pub fn quantile(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    Some(v[lo] + (pos - lo as f64) * (v[hi] - v[lo]))
}

pub fn run_map_elites<F>(evaluate: F, genotype_len: usize, budget: u64, config: &MapElitesConfig) -> Result<(Archive, RunStats)>
where
    F: Fn(&Genotype) -> Option<Evaluation> + Sync,
{
    run_map_elites_observed(evaluate, genotype_len, budget, config, |_, _| {})
}

/// As [`run_map_elites`], calling `observer` with the archive after every batch
/// together with the number of evaluations spent so far.
pub fn run_map_elites_observed<F, O>(
    evaluate: F,
    genotype_len: usize,
    budget: u64,
    config: &MapElitesConfig,
    mut observer: O,
) -> Result<(Archive, RunStats)>
where
    F: Fn(&Genotype) -> Option<Evaluation> + Sync,
    O: FnMut(&Archive, u64),
{
    if config.init_count == 0 || (config.init_count as u64) > budget {
        return Err(Error::Config(format!(
            "need budget ≥ init_count ≥ 1 (budget {budget}, init_count {})",
            config.init_count
        )));
    }
    if !(config.mutation_sigma >= 0.0 && config.mutation_sigma.is_finite()) {
        return Err(Error::Config("mutation_sigma must be non-negative".into()));
    }
    let batch_size = config.batch_size.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut stats = RunStats::default();

    let random_genotype = |rng: &mut ChaCha8Rng| -> Genotype {
        Genotype::new((0..genotype_len).map(|_| rng.random::<f64>()).collect()).unwrap()
    };

    // Initial batch: uniform genotypes, evaluated before any insertion so the
    // force normalization can be derived from them.
    let init: Vec<Genotype> = (0..config.init_count).map(|_| random_genotype(&mut rng)).collect();
    let init_evals: Vec<Option<Evaluation>> = init.par_iter().map(&evaluate).collect();
    let forces: Vec<f64> = init_evals
        .iter()
        .flatten()
        .filter_map(|e| e.safety_values.first().copied())
        .collect();
    let force_norm_max = quantile(&forces, config.norm_quantile)
        .filter(|v| *v > 0.0)
        .unwrap_or(1.0);
    let meta = ArchiveMeta {
        genotype_len,
        force_norm_max,
        seed: config.seed,
        budget,
        safety_threshold: quantile(&forces, config.threshold_quantile),
        ..ArchiveMeta::default()
    };
    let mut archive = Archive::new(config.resolution, meta)?;

    let insert_all = |archive: &mut Archive, batch: Vec<Genotype>, evals: Vec<Option<Evaluation>>, stats: &mut RunStats| -> Result<()> {
        for (genotype, eval) in batch.into_iter().zip(evals) {
            stats.evaluations += 1;
            let Some(eval) = eval else {
                stats.failures += 1;
                continue;
            };
            let force = eval.safety_values.first().copied().unwrap_or(0.0);
            let elite = Descriptor::from_measurements(eval.duty, force, force_norm_max).map(|descriptor| Elite {
                genotype,
                descriptor,
                performance: eval.performance,
                safety_values: eval.safety_values,
            });
            match elite {
                Ok(e) if e.validate().is_ok() => {
                    if archive.insert_if_better(e)? {
                        stats.accepted += 1;
                    }
                }
                _ => stats.failures += 1,
            }
        }
        Ok(())
    };

    for (chunk, evals) in init.chunks(batch_size).zip(init_evals.chunks(batch_size)) {
        insert_all(&mut archive, chunk.to_vec(), evals.to_vec(), &mut stats)?;
        observer(&archive, stats.evaluations);
    }

    let mutation = Normal::new(0.0, config.mutation_sigma.max(f64::MIN_POSITIVE)).unwrap();
    while stats.evaluations < budget {
        let n = (budget - stats.evaluations).min(batch_size as u64) as usize;
        let parents: Vec<&Elite> = archive.iter().map(|(_, e)| e).collect();
        let batch: Vec<Genotype> = (0..n)
            .map(|_| {
                if parents.is_empty() {
                    return random_genotype(&mut rng);
                }
                let parent = parents[rng.random_range(0..parents.len())];
                let genes = parent
                    .genotype
                    .as_slice()
                    .iter()
                    .map(|g| {
                        let step = if config.mutation_sigma > 0.0 { mutation.sample(&mut rng) } else { 0.0 };
                        (g + step).clamp(0.0, 1.0)
                    })
                    .collect();
                Genotype::new(genes).unwrap()
            })
            .collect();
        let evals: Vec<Option<Evaluation>> = batch.par_iter().map(&evaluate).collect();
        insert_all(&mut archive, batch, evals, &mut stats)?;
        observer(&archive, stats.evaluations);
    }
    Ok((archive, stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear_eval(g: &Genotype) -> Option<Evaluation> {
        let x = g.as_slice();
        Some(Evaluation {
            performance: x.iter().sum(),
            duty: [x[0], x[1], x[2], x[3]],
            safety_values: vec![x[4]],
        })
    }

    #[test]
    fn quantile_interpolates() {
        assert_eq!(quantile(&[3.0, 1.0, 2.0], 0.5), Some(2.0));
        assert_eq!(quantile(&[0.0, 10.0], 0.8), Some(8.0));
        assert_eq!(quantile(&[], 0.5), None);
    }

    #[test]
    fn single_evaluation_gives_single_elite() {
        let cfg = MapElitesConfig {
            init_count: 1,
            ..Default::default()
        };
        let (a, s) = run_map_elites(linear_eval, 24, 1, &cfg).unwrap();
        assert_eq!(a.len(), 1);
        assert_eq!(s.evaluations, 1);
    }

    #[test]
    fn constant_objective_fills_one_cell() {
        let cfg = MapElitesConfig {
            init_count: 50,
            ..Default::default()
        };
        let constant = |_: &Genotype| {
            Some(Evaluation {
                performance: 1.0,
                duty: [0.3; 4],
                safety_values: vec![2.0],
            })
        };
        let (a, _) = run_map_elites(constant, 24, 700, &cfg).unwrap();
        assert_eq!(a.len(), 1);
    }

    #[test]
    fn failures_consume_budget() {
        let cfg = MapElitesConfig {
            init_count: 10,
            ..Default::default()
        };
        let flaky = |g: &Genotype| if g.as_slice()[0] < 0.5 { None } else { linear_eval(g) };
        let (_, s) = run_map_elites(flaky, 24, 300, &cfg).unwrap();
        assert_eq!(s.evaluations, 300);
        assert!(s.failures > 0);
    }

    #[test]
    fn rejects_bad_budget() {
        let cfg = MapElitesConfig {
            init_count: 10,
            ..Default::default()
        };
        assert!(run_map_elites(linear_eval, 24, 5, &cfg).is_err());
        let cfg = MapElitesConfig {
            init_count: 0,
            ..Default::default()
        };
        assert!(run_map_elites(linear_eval, 24, 5, &cfg).is_err());
    }

    #[test]
    fn records_threshold_and_norm() {
        let cfg = MapElitesConfig {
            init_count: 101,
            ..Default::default()
        };
        let (a, _) = run_map_elites(linear_eval, 24, 101, &cfg).unwrap();
        assert!(a.meta.force_norm_max > 0.9 && a.meta.force_norm_max <= 1.0);
        let t = a.meta.safety_threshold.unwrap();
        assert!(t > 0.6 && t < 0.95);
    }
}
