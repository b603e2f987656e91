use std::f64::consts::PI;
use std::sync::Arc;

use proptest::prelude::*;
use tancone::blowup::RateMode;
use tancone::jholo::*;

fn ladder() -> Ladder {
    Ladder::geometric(1.0, 12).unwrap()
}

fn family(f: MapFamily) -> SampledMap {
    f.sampled(FD_STEP, ladder()).unwrap()
}

fn unit(v: &[f64]) -> Vec<f64> {
    let n = v.iter().map(|c| c * c).sum::<f64>().sqrt();
    v.iter().map(|c| c / n).collect()
}

#[test]
fn energy_splits_evenly_on_complex_lines() {
    let lines = [[1.0, 0.0, 0.0, 0.0], [0.3, -0.5, 0.2, 0.7], [0.0, 0.4, -0.8, 0.1]];
    for f in [MapFamily::Z1, MapFamily::Z1Z2, MapFamily::Cubic, MapFamily::Hopf] {
        let u = family(f);
        let x0 = if f == MapFamily::Hopf { [0.0; 4] } else { [0.1, -0.05, 0.2, 0.0] };
        for p in &lines {
            let (a, b) = energy_split(&u, &x0, &unit(p), 0.5);
            if a.max(b) < 1e-12 {
                continue;
            }
            assert!((a / b - 1.0).abs() < 0.02, "{}: {a} vs {b}", f.name());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn dilation_change_of_variables(
        coef in prop::collection::vec(-1.0f64..1.0, 8),
        x0 in prop::collection::vec(-0.1f64..0.1, 4),
        j in 1usize..4,
    ) {
        let c = coef.clone();
        let f: MapFn = Arc::new(move |x: &[f64], out: &mut [f64]| {
            out[0] = c[0] * x[0] + c[1] * x[1] * x[2] + c[2] * x[3] * x[3] + c[3] * x[0] * x[1] * x[3];
            out[1] = c[4] * x[1] + c[5] * x[0] * x[0] + c[6] * x[2] * x[3] + c[7] * x[2];
        });
        let u = SampledMap::new("poly", 2, Target::Flat(1), f, FD_STEP, ladder()).unwrap();
        let rho = LADDER_RATIO.powi(j as i32);
        let ud = u.dilated(&x0, rho).unwrap();
        let p = EnergyProfile::compute(&u, &x0).unwrap();
        let pd = EnergyProfile::compute(&ud, &[0.0; 4]).unwrap();
        for k in j..p.len() {
            let (a, b) = (pd.scaled_at(k), p.scaled_at(k - j));
            prop_assert!((a - b).abs() <= 1e-8 * b.abs().max(1e-12), "k = {}: {} vs {}", k, a, b);
            // the radial term is dilation invariant in dimension 4
            let (ra, rb) = (pd.radial[k], p.radial[k - j]);
            prop_assert!((ra - rb).abs() <= 1e-8 * rb.abs().max(1e-12));
        }
    }
}

#[test]
fn finite_differences_converge_at_second_order() {
    for h in [0.02, 0.01] {
        let (_, _, ratio) = fd_convergence(h).unwrap();
        assert!((3.5..=4.5).contains(&ratio), "h = {h}: {ratio}");
    }
}

#[test]
fn inner_variation_vanishes_for_holomorphic_maps() {
    let j = AlmostComplexField::Standard { n: 2 };
    let battery = TestField::battery(4, 0.8, 10, 7);
    for f in [MapFamily::Z1Z2, MapFamily::Cubic, MapFamily::Hopf] {
        let u = family(f);
        for xi in &battery {
            let iv = inner_variation_residual(&u, xi, &j).unwrap();
            assert!(iv.residual.abs() <= 1e-3 * iv.energy, "{}: {iv:?}", f.name());
        }
    }
}

#[test]
fn perturbed_structure_keeps_monotonicity() {
    let f = MapFamily::PerturbedZ1 { c: 0.03 };
    let j = f.structure();
    let rep = check_structure(&j, 1.0, 200, 3);
    assert!(rep.square_defect < 1e-10);
    assert!(rep.slope <= 0.1, "{rep:?}");
    let u = family(f);
    assert!(holomorphy_defect(&u, &j, 0.9, 50, 11) < 1e-6);
    let p = EnergyProfile::compute(&u, &[0.0; 4]).unwrap();
    let mono = map_monotonicity_check(&p, MONOTONICITY_SLACK).unwrap();
    assert!(mono.pass && mono.c <= 1.0, "{mono:?}");
    // first variation is O(c E) for the perturbed structure
    for xi in TestField::battery(4, 0.8, 4, 5) {
        let iv = inner_variation_residual(&u, &xi, &j).unwrap();
        assert!(iv.lhs.abs() <= 0.5 * 0.03 * iv.energy, "{iv:?}");
    }
}

#[test]
fn monotone_scaled_energy_and_rates() {
    let z1 = family(MapFamily::Z1);
    let p = EnergyProfile::compute(&z1, &[0.0; 4]).unwrap();
    let mono = map_monotonicity_check(&p, MONOTONICITY_SLACK).unwrap();
    assert!(mono.pass && mono.c == 0.0);
    let fit = map_rate_fit(&p, RateMode::Known(0.0)).unwrap();
    assert!((fit.gamma - 2.0).abs() < 0.1, "{fit:?}");
    assert!((fit.c1 / (PI * PI) - 1.0).abs() < 1e-3);

    let z1z2 = family(MapFamily::Z1Z2);
    let p = EnergyProfile::compute(&z1z2, &[0.0; 4]).unwrap();
    assert!(map_monotonicity_check(&p, MONOTONICITY_SLACK).unwrap().pass);
    let fit = map_rate_fit(&p, RateMode::Known(0.0)).unwrap();
    assert!((fit.gamma - 4.0).abs() < 0.1, "{fit:?}");
    assert!((fit.c1 / (2.0 * PI * PI / 3.0) - 1.0).abs() < 1e-3, "{fit:?}");
}

#[test]
fn hopf_map_is_its_own_tangent_map() {
    let u = family(MapFamily::Hopf);
    let p = EnergyProfile::compute(&u, &[0.0; 4]).unwrap();
    let w = p.scaled();
    for v in &w {
        assert!((v / (8.0 * PI * PI) - 1.0).abs() < 0.02, "{v}");
    }
    assert!(p.radial.iter().all(|r| r.abs() < 1e-12));
    assert!(map_monotonicity_check(&p, MONOTONICITY_SLACK).unwrap().pass);
    let fit = map_rate_fit(&p, RateMode::Free).unwrap();
    assert!(fit.exact_cone || fit.c1.abs() < 1e-6, "{fit:?}");
    let gaps = gap_trace(&u, &[0.0; 4], 0.5, 6).unwrap();
    assert!(gaps.gaps.iter().all(|g| *g < 1e-10));
    let hd = holomorphy_defect(&u, &AlmostComplexField::Standard { n: 2 }, 0.9, 50, 1);
    assert!(hd < 1e-6, "{hd}");
}

#[test]
fn z1_tangent_gaps_shrink_linearly() {
    let u = family(MapFamily::Z1);
    let tr = gap_trace(&u, &[0.0; 4], 0.5, 8).unwrap();
    assert!(tr.gaps.windows(2).all(|w| w[1] < w[0]));
    assert!((tr.slope.unwrap() - 1.0).abs() < 0.05);
}

#[test]
fn coarea_reassembles_ball_energy() {
    let u = family(MapFamily::Z1Z2);
    let x0 = [0.1, 0.0, -0.1, 0.05];
    let e = coarea_slice_check(&u, &x0, 0.5, LineDensity::Energy, 1024, 42).unwrap();
    assert!(e.rel_error < 0.03, "{e:?}");
    assert!((e.jacobian_ratio - 1.0).abs() < 1e-9);
    let r = coarea_slice_check(&u, &x0, 0.5, LineDensity::Radial, 1024, 42).unwrap();
    assert!(r.rel_error < 0.03, "{r:?}");
    assert_eq!(e.seed, 42);
}

#[test]
fn constant_map_is_trivial() {
    let u = family(MapFamily::Constant);
    let p = EnergyProfile::compute(&u, &[0.0; 4]).unwrap();
    assert!(p.energy.iter().all(|e| *e == 0.0));
    assert!(tangent_map_gap(&u, &[0.0; 4], 0.2, 0.5).unwrap() == 0.0);
}
