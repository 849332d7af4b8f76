//! Independent oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use sitemap::acquisition::Posterior;
use sitemap::archive::{Archive, ArchiveMeta, Descriptor, Elite, Genotype, DEFAULT_RESOLUTION};
use sitemap::gp::KernelParams;
use sitemap::map_elites::Evaluation;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn se_kernel(a: &[f64], b: &[f64], k: &KernelParams) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    k.signal_variance * (-d2 / (2.0 * k.length_scale * k.length_scale)).exp()
}

/// Gauss-Jordan inverse with partial pivoting.
pub fn invert(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        let p = a[col][col];
        for v in a[col].iter_mut() {
            *v /= p;
        }
        for r in 0..n {
            if r != col {
                let f = a[r][col];
                if f != 0.0 {
                    let pivot_row = a[col].clone();
                    for (v, p) in a[r].iter_mut().zip(&pivot_row) {
                        *v -= f * p;
                    }
                }
            }
        }
    }
    a.into_iter().map(|r| r[n..].to_vec()).collect()
}

/// Posterior mean and variance by explicit inversion of `K + σ_n² I`.
pub fn dense_posterior(
    k: &KernelParams,
    xs: &[Vec<f64>],
    ys: &[f64],
    prior: &dyn Fn(&[f64]) -> f64,
    x: &[f64],
) -> (f64, f64) {
    let t = xs.len();
    if t == 0 {
        return (prior(x), k.signal_variance);
    }
    let gram: Vec<Vec<f64>> = (0..t)
        .map(|i| {
            (0..t)
                .map(|j| se_kernel(&xs[i], &xs[j], k) + if i == j { k.noise_variance } else { 0.0 })
                .collect()
        })
        .collect();
    let inv = invert(&gram);
    let kv: Vec<f64> = xs.iter().map(|xi| se_kernel(xi, x, k)).collect();
    let resid: Vec<f64> = xs.iter().zip(ys).map(|(xi, y)| y - prior(xi)).collect();
    let mut mean = prior(x);
    let mut quad = 0.0;
    for i in 0..t {
        for j in 0..t {
            mean += kv[i] * inv[i][j] * resid[j];
            quad += kv[i] * inv[i][j] * kv[j];
        }
    }
    (mean, (k.signal_variance - quad).max(0.0))
}

/// Random GP regression problem: inputs, targets, probe points.
pub struct GpInstance {
    pub dim: usize,
    pub kernel: KernelParams,
    pub xs: Vec<Vec<f64>>,
    pub ys: Vec<f64>,
    pub probes: Vec<Vec<f64>>,
    /// Coefficients of a linear prior mean; all zero for a zero prior.
    pub prior: Vec<f64>,
    pub prior_offset: f64,
}

impl GpInstance {
    pub fn random(r: &mut ChaCha8Rng, with_prior: bool) -> Self {
        let dim = r.random_range(1..=6);
        let t = r.random_range(0..=30);
        let kernel = KernelParams::new(
            r.random_range(0.1..0.6),
            r.random_range(0.5..2.0),
            r.random_range(0.005..0.1),
        )
        .unwrap();
        let point = |r: &mut ChaCha8Rng| (0..dim).map(|_| r.random::<f64>()).collect::<Vec<_>>();
        let xs: Vec<Vec<f64>> = (0..t).map(|_| point(r)).collect();
        let ys = (0..t).map(|_| r.random_range(-2.0..2.0)).collect();
        let probes = (0..10).map(|_| point(r)).collect();
        let (prior, prior_offset) = if with_prior {
            ((0..dim).map(|_| r.random_range(-1.0..1.0)).collect(), r.random_range(-1.0..1.0))
        } else {
            (vec![0.0; dim], 0.0)
        };
        GpInstance {
            dim,
            kernel,
            xs,
            ys,
            probes,
            prior,
            prior_offset,
        }
    }

    pub fn prior_fn(&self) -> impl Fn(&[f64]) -> f64 + Send + Sync + 'static {
        let w = self.prior.clone();
        let c = self.prior_offset;
        move |x: &[f64]| c + w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
    }
}

pub fn normal_draw(r: &mut ChaCha8Rng, p: Posterior) -> f64 {
    let z: f64 = StandardNormal.sample(r);
    p.mean + p.std * z
}

pub fn mc_expected_improvement(p: Posterior, incumbent: f64, draws: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut acc = 0.0;
    for _ in 0..draws {
        acc += (normal_draw(&mut r, p) - incumbent).max(0.0);
    }
    acc / draws as f64
}

/// Area dominated by `points` above `reference`, by sweeping the distinct
/// coordinates of every point (an independent exact oracle).
pub fn hypervolume_oracle(points: &[(f64, f64)], reference: (f64, f64)) -> f64 {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|p| p.0 > reference.0 && p.1 > reference.1)
        .collect();
    let mut xs: Vec<f64> = pts.iter().map(|p| p.0).chain([reference.0]).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let mut area = 0.0;
    for w in xs.windows(2) {
        // Over (w0, w1] the dominated height is the best y among points with x ≥ w1.
        let h = pts
            .iter()
            .filter(|p| p.0 >= w[1])
            .map(|p| p.1)
            .fold(reference.1, f64::max);
        area += (w[1] - w[0]) * (h - reference.1);
    }
    area
}

/// Hypervolume gained by adding `y` to a valid front, strip by strip.
pub fn improvement_of(front_ascending: &[(f64, f64)], reference: (f64, f64), y: (f64, f64)) -> f64 {
    let mut acc = 0.0;
    let mut prev = reference.0;
    for &(px, py) in front_ascending {
        acc += (px.min(y.0) - prev).max(0.0) * (y.1 - py).max(0.0);
        prev = px;
    }
    acc + (y.0 - prev).max(0.0) * (y.1 - reference.1).max(0.0)
}

pub fn mc_ehvi(o1: Posterior, o2: Posterior, front: &[(f64, f64)], reference: (f64, f64), draws: usize, seed: u64) -> f64 {
    let mut asc = front.to_vec();
    asc.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut r = rng(seed);
    let mut acc = 0.0;
    for _ in 0..draws {
        let y = (normal_draw(&mut r, o1), normal_draw(&mut r, o2));
        acc += improvement_of(&asc, reference, y);
    }
    acc / draws as f64
}

/// Brute-force Pareto filter (maximization): points not weakly dominated by a
/// different point, duplicates collapsed.
pub fn pareto_filter(points: &[(f64, f64)], reference: (f64, f64)) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, &p) in points.iter().enumerate() {
        if !(p.0 > reference.0 && p.1 > reference.1) {
            continue;
        }
        let dominated = points
            .iter()
            .enumerate()
            .any(|(j, &q)| j != i && q.0 >= p.0 && q.1 >= p.1 && q != p);
        if !dominated && !out.contains(&p) {
            out.push(p);
        }
    }
    out.sort_by(|a, b| b.0.total_cmp(&a.0));
    out
}

pub fn elite(duty: [f64; 4], safety_dim: f64, performance: f64, force: f64) -> Elite {
    Elite {
        genotype: Genotype::new(vec![0.5; 24]).unwrap(),
        descriptor: Descriptor::new(duty, safety_dim).unwrap(),
        performance,
        safety_values: vec![force],
    }
}

/// Archive with `n` elites at distinct random cells.
pub fn random_archive(r: &mut ChaCha8Rng, n: usize) -> Archive {
    let mut a = Archive::new(DEFAULT_RESOLUTION, ArchiveMeta::default()).unwrap();
    while a.len() < n {
        let d: [f64; 5] = std::array::from_fn(|_| r.random::<f64>());
        let e = elite([d[0], d[1], d[2], d[3]], d[4], r.random_range(0.0..1.0), r.random_range(10.0..100.0));
        if a.get(a.cell_of(&e.descriptor)).is_none() {
            a.insert_if_better(e).unwrap();
        }
    }
    a
}

/// Separable quadratic benchmark for MAP-Elites on a full-length genotype.
/// Genes 0..4 become the duty factors and gene 4 scaled by `FORCE_SCALE` is
/// the safety measurement. Performance is `Σ q(g_i)` over every gene with
/// `q(g) = 1 − 4(g − ½)²`, which maps `[0, 1]` onto `[0, 1]`.
pub const SYNTH_GENES: usize = sitemap::archive::GENOTYPE_LEN;
pub const FORCE_SCALE: f64 = 100.0;

fn q(g: f64) -> f64 {
    1.0 - 4.0 * (g - 0.5) * (g - 0.5)
}

pub fn synthetic_eval(g: &Genotype) -> Option<Evaluation> {
    let x = g.as_slice();
    Some(Evaluation {
        performance: x.iter().map(|&v| q(v)).sum(),
        duty: [x[0], x[1], x[2], x[3]],
        safety_values: vec![x[4] * FORCE_SCALE],
    })
}

/// Supremum of [`synthetic_eval`] over genotypes landing in `cell`: free genes
/// at ½, each descriptor gene at the point of its bin closest to ½.
pub fn synthetic_cell_optimum(cell: usize, force_norm_max: f64) -> f64 {
    let coords = sitemap::archive::coords_of(cell, &DEFAULT_RESOLUTION);
    let mut total = (SYNTH_GENES - coords.len()) as f64;
    for (k, &c) in coords.iter().enumerate() {
        let res = DEFAULT_RESOLUTION[k] as f64;
        let mut lo = c as f64 / res;
        let mut hi = if c + 1 == DEFAULT_RESOLUTION[k] { f64::INFINITY } else { (c + 1) as f64 / res };
        if k == 4 {
            // Gene range whose normalized force falls in this bin.
            lo *= force_norm_max / FORCE_SCALE;
            hi *= force_norm_max / FORCE_SCALE;
        }
        total += q(0.5f64.clamp(lo, hi.min(1.0)));
    }
    total
}

/// Spearman rank correlation.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    let (ra, _) = sitemap::bench::stats::midranks(a);
    let (rb, _) = sitemap::bench::stats::midranks(b);
    let n = a.len() as f64;
    let ma = ra.iter().sum::<f64>() / n;
    let mb = rb.iter().sum::<f64>() / n;
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

/// Two-sided permutation p-value of the rank-sum statistic by random relabelling.
pub fn permutation_p(a: &[f64], b: &[f64], rounds: usize, seed: u64) -> f64 {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, _) = sitemap::bench::stats::midranks(&pooled);
    let na = a.len();
    let nb = b.len();
    let mean = (na * nb) as f64 / 2.0;
    let u_of = |idx: &[usize]| idx[..na].iter().map(|&i| ranks[i]).sum::<f64>() - (na * (na + 1)) as f64 / 2.0;
    let mut idx: Vec<usize> = (0..pooled.len()).collect();
    let observed = (u_of(&idx) - mean).abs();
    let mut r = rng(seed);
    let mut hits = 0usize;
    for _ in 0..rounds {
        for i in (1..idx.len()).rev() {
            let j = r.random_range(0..=i);
            idx.swap(i, j);
        }
        if (u_of(&idx) - mean).abs() >= observed - 1e-9 {
            hits += 1;
        }
    }
    hits as f64 / rounds as f64
}
