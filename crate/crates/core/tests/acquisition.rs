mod common;

use proptest::prelude::*;
use rand::Rng;
use sitemap::acquisition::{
    ehvi_2d, expected_constrained_improvement, expected_improvement, feasibility_probability, pareto_insert, Incumbent,
    ParetoFront2, Posterior,
};

use common::{hypervolume_oracle, improvement_of, mc_ehvi, mc_expected_improvement, pareto_filter};

#[test]
fn ei_matches_monte_carlo() {
    let p = Posterior::new(1.0, 0.5);
    let mc = mc_expected_improvement(p, 0.8, 10_000_000, 1);
    assert!((expected_improvement(p, 0.8) - mc).abs() < 1e-3);
}

#[test]
fn ei_matches_monte_carlo_on_random_posteriors() {
    let mut r = common::rng(21);
    for i in 0..20 {
        let p = Posterior::new(r.random_range(-1.0..1.0), r.random_range(0.05..1.0));
        let inc = r.random_range(-1.0..1.0);
        let mc = mc_expected_improvement(p, inc, 1_000_000, 100 + i);
        assert!((expected_improvement(p, inc) - mc).abs() < 4e-3, "{p:?} {inc}");
    }
}

#[test]
fn feasibility_at_table_value() {
    assert!((feasibility_probability(Posterior::new(1.96, 1.0)) - 0.9750).abs() < 1e-4);
}

#[test]
fn eci_is_ei_times_feasibility_bit_for_bit() {
    let mut r = common::rng(22);
    for _ in 0..500 {
        let obj = Posterior::new(r.random_range(-1.0..1.0), r.random_range(0.0..1.0));
        let n = r.random_range(0..4);
        let cons: Vec<Posterior> = (0..n)
            .map(|_| Posterior::new(r.random_range(-2.0..2.0), r.random_range(0.0..1.0)))
            .collect();
        let inc = r.random_range(-1.0..1.0);
        let mut want = expected_improvement(obj, inc);
        for c in &cons {
            want *= feasibility_probability(*c);
        }
        let got = expected_constrained_improvement(obj, &cons, Incumbent::Feasible(inc));
        assert_eq!(got.to_bits(), want.to_bits());
        if cons.is_empty() {
            assert_eq!(got.to_bits(), expected_improvement(obj, inc).to_bits());
        }
    }
}

#[test]
fn eci_without_feasible_incumbent_is_feasibility() {
    let c = [Posterior::new(0.3, 0.2), Posterior::new(-0.1, 0.5)];
    let want = feasibility_probability(c[0]) * feasibility_probability(c[1]);
    let got = expected_constrained_improvement(Posterior::new(0.0, 1.0), &c, Incumbent::NoneFeasible);
    assert_eq!(got, want);
}

#[test]
fn ehvi_single_point_front_matches_monte_carlo() {
    let front = ParetoFront2::from_points((0.0, 0.0), [(1.0, 1.0)]);
    let (o1, o2) = (Posterior::new(1.2, 0.3), Posterior::new(1.2, 0.3));
    let mc = mc_ehvi(o1, o2, front.points(), front.reference(), 10_000_000, 2);
    assert!((ehvi_2d(o1, o2, &front) - mc).abs() < 2e-3);
}

fn random_front(r: &mut rand_chacha::ChaCha8Rng, reference: (f64, f64)) -> ParetoFront2 {
    let n = r.random_range(0..8);
    let pts: Vec<(f64, f64)> = (0..n).map(|_| (r.random_range(0.0..2.0), r.random_range(0.0..2.0))).collect();
    ParetoFront2::from_points(reference, pts)
}

#[test]
fn ehvi_matches_monte_carlo_on_random_fronts() {
    let mut r = common::rng(23);
    for i in 0..10 {
        let reference = (-0.2, -0.3);
        let front = random_front(&mut r, reference);
        let o1 = Posterior::new(r.random_range(0.0..2.0), r.random_range(0.05..0.6));
        let o2 = Posterior::new(r.random_range(0.0..2.0), r.random_range(0.05..0.6));
        let mc = mc_ehvi(o1, o2, front.points(), reference, 1_000_000, 200 + i);
        assert!((ehvi_2d(o1, o2, &front) - mc).abs() < 4e-3, "{front:?}");
    }
}

#[test]
fn improvement_oracle_agrees_with_hypervolume_oracle() {
    let mut r = common::rng(24);
    for _ in 0..200 {
        let reference = (0.0, 0.0);
        let front = random_front(&mut r, reference);
        let y = (r.random_range(-0.5..2.5), r.random_range(-0.5..2.5));
        let mut asc = front.points().to_vec();
        asc.reverse();
        let mut all = front.points().to_vec();
        all.push(y);
        let want = hypervolume_oracle(&all, reference) - hypervolume_oracle(front.points(), reference);
        assert!((improvement_of(&asc, reference, y) - want).abs() < 1e-12);
    }
}

#[test]
fn deterministic_ehvi_is_the_exact_increment() {
    let front = ParetoFront2::from_points((0.0, 0.0), [(3.0, 1.0), (2.0, 2.0), (1.0, 3.0)]);
    let dominated = ehvi_2d(Posterior::new(1.5, 0.0), Posterior::new(1.5, 0.0), &front);
    assert_eq!(dominated, 0.0);
    let y = (4.0, 4.0);
    let want = hypervolume_oracle(&[y], (0.0, 0.0)) - hypervolume_oracle(front.points(), (0.0, 0.0));
    let got = ehvi_2d(Posterior::new(y.0, 0.0), Posterior::new(y.1, 0.0), &front);
    assert!((got - want).abs() < 1e-12);
}

#[test]
fn stream_of_points_matches_brute_force_filter() {
    let mut r = common::rng(25);
    for _ in 0..50 {
        let reference = (0.0, 0.0);
        let pts: Vec<(f64, f64)> = (0..50)
            .map(|_| ((r.random_range(-0.2..1.0f64) * 20.0).round() / 20.0, (r.random_range(-0.2..1.0f64) * 20.0).round() / 20.0))
            .collect();
        let mut front = ParetoFront2::new(reference);
        for &p in &pts {
            front = pareto_insert(&front, p);
        }
        assert_eq!(front.points(), pareto_filter(&pts, reference).as_slice());
        assert!((front.hypervolume() - hypervolume_oracle(&pts, reference)).abs() < 1e-12);
    }
}

proptest! {
    #[test]
    fn eci_never_exceeds_ei(
        m in -2.0..2.0f64, s in 0.0..2.0f64, inc in -2.0..2.0f64,
        cons in prop::collection::vec((-2.0..2.0f64, 0.0..2.0f64), 0..5),
    ) {
        let obj = Posterior::new(m, s);
        let cs: Vec<Posterior> = cons.iter().map(|&(a, b)| Posterior::new(a, b)).collect();
        let eci = expected_constrained_improvement(obj, &cs, Incumbent::Feasible(inc));
        prop_assert!(eci <= expected_improvement(obj, inc));
        prop_assert!(eci >= 0.0);
    }

    #[test]
    fn ei_is_monotone(m in -2.0..2.0f64, dm in 0.0..1.0f64, s in 0.0..2.0f64, ds in 0.0..1.0f64, inc in -2.0..2.0f64) {
        let lo = expected_improvement(Posterior::new(m, s), inc);
        prop_assert!(expected_improvement(Posterior::new(m + dm, s), inc) >= lo - 1e-15);
        if m <= inc {
            prop_assert!(expected_improvement(Posterior::new(m, s + ds), inc) >= lo - 1e-15);
        }
    }

    #[test]
    fn growing_the_front_never_raises_ehvi(
        pts in prop::collection::vec((0.0..2.0f64, 0.0..2.0f64), 0..6),
        extra in (0.0..2.0f64, 0.0..2.0f64),
        m1 in 0.0..2.0f64, s1 in 0.0..1.0f64, m2 in 0.0..2.0f64, s2 in 0.0..1.0f64,
    ) {
        let (o1, o2) = (Posterior::new(m1, s1), Posterior::new(m2, s2));
        let front = ParetoFront2::from_points((-0.1, -0.1), pts);
        let grown = pareto_insert(&front, extra);
        prop_assert!(ehvi_2d(o1, o2, &grown) <= ehvi_2d(o1, o2, &front) + 1e-9);
        prop_assert!(ehvi_2d(o1, o2, &front) >= 0.0);
    }

    #[test]
    fn front_stays_valid(pts in prop::collection::vec((-1.0..2.0f64, -1.0..2.0f64), 0..30)) {
        let front = ParetoFront2::from_points((0.0, 0.0), pts.clone());
        let f = front.points();
        for (i, p) in f.iter().enumerate() {
            prop_assert!(p.0 > 0.0 && p.1 > 0.0);
            for q in &f[i + 1..] {
                prop_assert!(p.0 > q.0 && p.1 < q.1);
            }
        }
        let want = pareto_filter(&pts, (0.0, 0.0));
        prop_assert_eq!(f, want.as_slice());
    }
}
