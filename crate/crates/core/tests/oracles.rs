//! Independent numerical oracles for the kernels and rate engines.

use approx::assert_relative_eq;
use csl_core::model::{pair_kernel, smearing_g, CollapseParams, Configuration, Species, Superposition};
use csl_core::rate::{
    gamma_accelerated, gamma_exact, gamma_field, mass_cluster_rate, ClusterGroup, ClusterSpec, FieldGrid,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const R_C: f64 = 1e-5;

/// Midpoint rule over the box `[lo, hi]^3` with `n` cells per axis.
fn midpoint_3d(lo: f64, hi: f64, n: usize, f: impl Fn([f64; 3]) -> f64) -> f64 {
    let h = (hi - lo) / n as f64;
    let mut acc = 0.0;
    for i in 0..n {
        let x = lo + (i as f64 + 0.5) * h;
        for j in 0..n {
            let y = lo + (j as f64 + 0.5) * h;
            for k in 0..n {
                let z = lo + (k as f64 + 0.5) * h;
                acc += f([x, y, z]);
            }
        }
    }
    acc * h * h * h
}

#[test]
fn smearing_function_is_normalized_over_a_12_rc_cube() {
    let total = midpoint_3d(-6.0 * R_C, 6.0 * R_C, 96, |x| smearing_g(&x, R_C).unwrap());
    // The cube misses the tails beyond 6 sigma: 1 - erf(6/sqrt 2)^3 ~ 6e-9.
    assert_relative_eq!(total, 1.0, max_relative = 1e-7);
}

#[test]
fn pair_kernel_is_self_convolution_of_smearing() {
    let x = [0.7 * R_C, 0.0, 0.0];
    let conv = midpoint_3d(-8.0 * R_C, 8.0 * R_C, 120, |y| {
        let d = [x[0] - y[0], x[1] - y[1], x[2] - y[2]];
        smearing_g(&y, R_C).unwrap() * smearing_g(&d, R_C).unwrap()
    });
    assert_relative_eq!(conv, pair_kernel(&x, R_C).unwrap(), max_relative = 1e-6);
}

/// The defining double sum written with the physical kernel, no shared code
/// with the engines beyond `pair_kernel`.
fn direct_gamma(sup: &Superposition<f64>, p: &CollapseParams<f64>) -> f64 {
    let a: Vec<_> = sup.comp_a.iter().map(|(s, x)| (s.mass, *x)).collect();
    let b: Vec<_> = sup.comp_b.iter().map(|(s, x)| (s.mass, *x)).collect();
    let g = |u: &[f64; 3], v: &[f64; 3]| {
        pair_kernel(&[u[0] - v[0], u[1] - v[1], u[2] - v[2]], p.r_c()).unwrap()
    };
    let mut s = 0.0;
    for (mi, ai) in &a {
        for (mj, aj) in &a {
            s += mi * mj * g(ai, aj);
        }
    }
    for (mi, bi) in &b {
        for (mj, bj) in &b {
            s += mi * mj * g(bi, bj);
        }
    }
    for (mi, ai) in &a {
        for (mj, bj) in &b {
            s -= 2.0 * mi * mj * g(ai, bj);
        }
    }
    0.5 * p.gamma() * s
}

fn random_pair(rng: &mut ChaCha8Rng, n: usize, spread: f64, species: &[Species<f64>]) -> Superposition<f64> {
    let mut a = Configuration::new();
    let mut b = Configuration::new();
    for _ in 0..n {
        let s = &species[rng.random_range(0..species.len())];
        let mut draw = || [0, 1, 2].map(|_| rng.random_range(-spread..spread) * R_C);
        let xa = draw();
        let xb = draw();
        a.push(s, xa).unwrap();
        b.push(s, xb).unwrap();
    }
    Superposition::balanced(a, b)
}

#[test]
fn exact_engine_matches_direct_double_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let p = CollapseParams::from_lambda(2.2e-8, R_C).unwrap();
    let species = [
        Species::nucleon(),
        Species::new("Na", 23.0).unwrap(),
        Species::new("alpha", 3.9e4).unwrap(),
    ];
    for n in [1, 2, 5, 17, 40] {
        let s = random_pair(&mut rng, n, 3.0, &species);
        let e = gamma_exact(&s, &p).unwrap();
        let d = direct_gamma(&s, &p);
        assert_relative_eq!(e.rate, d, max_relative = 1e-10);
    }
}

#[test]
fn single_nucleon_closed_form() {
    for d in [0.0, 0.3, 1.0, 2.0, 10.0] {
        let p = CollapseParams::from_lambda(1.0, R_C).unwrap();
        let n = Species::nucleon();
        let a = Configuration::new().with(&n, [0.0; 3]).unwrap();
        let b = Configuration::new().with(&n, [0.0, d * R_C, 0.0]).unwrap();
        let g = gamma_exact(&Superposition::balanced(a, b), &p).unwrap();
        assert_relative_eq!(g.rate, 1.0 - (-d * d / 4.0f64).exp(), max_relative = 1e-12, epsilon = 1e-15);
    }
}

#[test]
fn field_engine_converges_to_pairwise() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let p = CollapseParams::from_lambda(1.0, R_C).unwrap();
    let species = [Species::nucleon(), Species::new("Na", 23.0).unwrap()];
    for n in [3, 12, 30] {
        let s = random_pair(&mut rng, n, 2.0, &species);
        let e = gamma_exact(&s, &p).unwrap().rate;
        let quarter = gamma_field(&s, &p, &FieldGrid::default()).unwrap().rate;
        let half = gamma_field(&s, &p, &FieldGrid::with_cell(0.5)).unwrap().rate;
        assert!(((quarter - e) / e).abs() < 1e-6, "h = r_C/4: {quarter} vs {e}");
        assert!(((half - e) / e).abs() < 1e-3, "h = r_C/2: {half} vs {e}");
    }
}

#[test]
fn cluster_limit_from_point_clusters() {
    // Three clusters of 10/20/30 nucleons, each inside 0.001 r_C, clusters
    // 12 r_C apart, branch B displaced by 20 r_C.
    let p = CollapseParams::from_lambda(1.0, R_C).unwrap();
    let n = Species::nucleon();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut a = Configuration::new();
    let mut b = Configuration::new();
    for (c, size) in [10usize, 20, 30].into_iter().enumerate() {
        for _ in 0..size {
            let off = [0, 1, 2].map(|_| rng.random_range(-5e-4..5e-4));
            let xa = [(12.0 * c as f64 + off[0]) * R_C, off[1] * R_C, off[2] * R_C];
            a.push(&n, xa).unwrap();
            b.push(&n, [xa[0], xa[1] + 20.0 * R_C, xa[2]]).unwrap();
        }
    }
    let s = Superposition::balanced(a, b);
    let e = gamma_exact(&s, &p).unwrap().rate;
    let spec = ClusterSpec::new(
        [10.0, 20.0, 30.0]
            .map(|k| ClusterGroup::nucleons(k, 1).unwrap())
            .to_vec(),
    );
    let c = mass_cluster_rate(&spec, &p).unwrap().rate;
    assert_relative_eq!(e, c, max_relative = 1e-3);
    let acc = gamma_accelerated(&s, &p, 6.0).unwrap();
    assert!((acc.rate - e).abs() <= acc.error_bound.unwrap());
}
