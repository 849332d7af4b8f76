mod common;

use proptest::prelude::*;
use rand::Rng;
use sitemap::archive::Genotype;
use sitemap::sim::{DamageCondition, DamageSpec, SimConfig, Simulator, TraceRow, JOINTS};

fn random_genotype(r: &mut rand_chacha::ChaCha8Rng) -> Genotype {
    Genotype::new((0..24).map(|_| r.random::<f64>()).collect()).unwrap()
}

/// Random offsets and phases, every oscillation amplitude zero.
fn still_genotype(r: &mut rand_chacha::ChaCha8Rng) -> Genotype {
    let mut g: Vec<f64> = (0..24).map(|_| r.random::<f64>()).collect();
    for j in 0..JOINTS {
        g[3 * j] = 0.0;
    }
    Genotype::new(g).unwrap()
}

#[test]
fn resting_force_equals_weight() {
    let sim = Simulator::default();
    let w = sim.model.weight();
    let mut r = common::rng(41);
    for _ in 0..10 {
        let res = sim.measure(&still_genotype(&mut r), &DamageSpec::none()).unwrap();
        assert!(!res.failed);
        assert!((res.force_sum / w - 1.0).abs() < 0.02, "force {} vs weight {w}", res.force_sum);
        assert!(res.speed.abs() < 0.02, "a still posture crawled at {}", res.speed);
    }
}

#[test]
fn halving_the_step_barely_moves_speed() {
    let sim = Simulator::default();
    let fine = Simulator {
        config: SimConfig {
            dt: 5e-4,
            ..SimConfig::default()
        },
        ..Simulator::default()
    };
    let mut r = common::rng(42);
    let mut rel = Vec::new();
    while rel.len() < 200 {
        let g = random_genotype(&mut r);
        let (a, b) = (
            sim.measure(&g, &DamageSpec::none()).unwrap(),
            fine.measure(&g, &DamageSpec::none()).unwrap(),
        );
        if !(a.failed || b.failed) {
            rel.push((a.speed - b.speed).abs() / a.speed.abs().max(b.speed.abs()));
        }
    }
    rel.sort_by(f64::total_cmp);
    // A few contact-sensitive gaits do not converge at any step; the bulk does.
    assert!(rel[100] < 0.01, "median relative change {}", rel[100]);
    assert!(rel[189] < 0.05, "95th percentile {}", rel[189]);
}

#[test]
fn faster_gaits_load_the_contacts_more() {
    let sim = Simulator::default();
    let mut r = common::rng(43);
    let (mut speed, mut force) = (Vec::new(), Vec::new());
    for _ in 0..500 {
        let res = sim.measure(&random_genotype(&mut r), &DamageSpec::none()).unwrap();
        if !res.failed {
            speed.push(res.speed);
            force.push(res.force_sum);
        }
    }
    assert!(speed.len() > 450);
    let rho = common::spearman(&speed, &force);
    assert!(rho > 0.0, "Spearman {rho}");
}

#[test]
fn simulation_is_deterministic() {
    let sim = Simulator::default();
    let mut r = common::rng(44);
    let g = random_genotype(&mut r);
    for d in [DamageCondition::None, DamageCondition::D4] {
        assert_eq!(sim.measure(&g, &d.spec()).unwrap(), sim.measure(&g, &d.spec()).unwrap());
    }
}

#[test]
fn trajectory_dump_has_one_row_per_step() {
    let sim = Simulator::default();
    let mut r = common::rng(45);
    let g = random_genotype(&mut r);
    let mut out = Vec::new();
    let res = sim.dump_trajectory(&g, &DamageCondition::D1.spec(), &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), TraceRow::CSV_HEADER);
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), sim.config.steps());
    assert!(rows.iter().all(|r| r.len() == 20));
    // The locked shoulder (theta_1) holds its angle.
    assert!(rows.iter().all(|r| r[4].abs() < 1e-9), "locked joint moved");
    // Contact flags are 0/1 and normal forces non-negative.
    assert!(rows.iter().all(|r| r[12..16].iter().all(|c| *c == 0.0 || *c == 1.0)));
    assert!(rows.iter().all(|r| r[16..20].iter().all(|f| *f >= 0.0)));
    assert_eq!(res, sim.measure(&g, &DamageCondition::D1.spec()).unwrap());
}

#[test]
fn fingerprint_tracks_settings() {
    let a = Simulator::default();
    let mut b = Simulator::default();
    assert_eq!(a.fingerprint(), b.fingerprint());
    b.model.body_mass *= 1.1;
    assert_ne!(a.fingerprint(), b.fingerprint());
    assert!(a.fingerprint().starts_with("crawler-"));
}

#[test]
fn damage_changes_behavior() {
    let sim = Simulator::default();
    let mut r = common::rng(46);
    let g = random_genotype(&mut r);
    let intact = sim.measure(&g, &DamageSpec::none()).unwrap();
    let damaged = sim.measure(&g, &DamageCondition::D3.spec()).unwrap();
    assert_ne!(intact, damaged);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn outputs_stay_in_range(genes in prop::collection::vec(0.0..=1.0f64, 24), damage in 0usize..5) {
        let sim = Simulator::default();
        let d = [DamageCondition::None, DamageCondition::D1, DamageCondition::D2, DamageCondition::D3, DamageCondition::D4][damage];
        let res = sim.measure(&Genotype::new(genes).unwrap(), &d.spec()).unwrap();
        prop_assert!(res.duty.iter().all(|v| (0.0..=1.0).contains(v)));
        prop_assert!(res.force_sum >= 0.0);
        if !res.failed {
            prop_assert!(res.speed.is_finite());
            prop_assert!(res.force_sum.is_finite());
        }
    }
}
