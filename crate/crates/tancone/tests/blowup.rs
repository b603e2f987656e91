use std::f64::consts::{FRAC_PI_2, PI};

use tancone::blowup::*;
use tancone::calibrations::fs_distance;
use tancone::examples;

const ORIGIN: [f64; 4] = [0.0; 4];

#[test]
fn sandwich_identity_on_z2_graph() {
    let g = examples::holomorphic_graph(2, 1.0, 0.01).unwrap();
    for (s, r) in [(0.2, 0.4), (0.3, 0.6), (0.4, 0.8)] {
        let tr = g.mass(&tancone::currents::Region::ball(&ORIGIN, r)).unwrap() / (r * r);
        let ts = g.mass(&tancone::currents::Region::ball(&ORIGIN, s)).unwrap() / (s * s);
        let def = conical_defect(&g, &ORIGIN, s, r).unwrap();
        assert!(((tr - ts) / def.value - 1.0).abs() < 0.01, "({s}, {r}): {} vs {}", tr - ts, def.value);
    }
}

#[test]
fn z2_trace_matches_exact_area_and_rate() {
    let g = examples::holomorphic_graph(2, 1.0, 0.01).unwrap();
    let tr = density_trace(&g, &ORIGIN, 0.8, 12, 0.75).unwrap();
    for (r, t) in tr.radii.iter().zip(&tr.theta) {
        let exact = examples::z2_ball_mass(*r) / (r * r);
        assert!((t / exact - 1.0).abs() < 5e-3, "r = {r}");
    }
    let mono = monotonicity_check(&tr, 1e-6).unwrap();
    assert!(mono.pass && mono.c1 == 0.0);
    let free = rate_fit(&tr, RateMode::Free).unwrap();
    assert!((free.theta_hat / PI - 1.0).abs() < 0.02, "{free:?}");
}

#[test]
fn z2_rate_fit_agrees_with_exact_area_fit() {
    let g = examples::holomorphic_graph(2, 1.0, 0.01).unwrap();
    let tr = density_trace(&g, &ORIGIN, 0.2, 8, 0.82).unwrap();
    let exact: Vec<f64> = tr.radii.iter().map(|r| examples::z2_ball_mass(*r) / (r * r)).collect();
    let oracle = rate_fit_values(&tr.radii, &exact, RateMode::Known(PI)).unwrap();
    let fit = rate_fit(&tr, RateMode::Known(PI)).unwrap();
    assert!((1.9..=2.1).contains(&fit.gamma), "{fit:?}");
    assert!((fit.gamma - oracle.gamma).abs() < 0.05);
    assert!((fit.c1 / oracle.c1 - 1.0).abs() < 0.1, "{fit:?} vs {oracle:?}");
}

#[test]
fn cone_densities_are_scale_invariant() {
    let two = examples::two_lines(1.0, 0.05).unwrap();
    let tr = density_trace(&two, &ORIGIN, 0.9, 8, 0.7).unwrap();
    for v in tr.normalized() {
        assert!((v - 2.0).abs() < 1e-6, "{v}");
    }
    let three = examples::complex_lines(
        &[vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0], vec![0.0, 0.0, 1.0, 0.0, 0.0, 0.0], vec![0.3, 0.1, 0.5, -0.2, 0.7, 0.0]],
        1.0,
        0.05,
    )
    .unwrap();
    let tr = density_trace(&three, &[0.0; 6], 0.9, 8, 0.7).unwrap();
    for v in tr.normalized() {
        assert!((v - 3.0).abs() < 1e-6, "{v}");
    }
    let fit = rate_fit(&tr, RateMode::Free).unwrap();
    assert!(fit.exact_cone && (fit.theta_hat / PI - 3.0).abs() < 1e-6);
    for (s, r) in [(0.1, 0.3), (0.4, 0.9)] {
        assert!(conical_defect(&three, &[0.0; 6], s, r).unwrap().value < 1e-10);
        assert!(hopf_projection_mass(&three, &[0.0; 6], s, r).unwrap() < 1e-8);
    }
}

#[test]
fn two_lines_give_orthogonal_clusters() {
    let two = examples::two_lines(1.0, 0.02).unwrap();
    for r in [0.8, 0.4, 0.2] {
        let d = tangent_directions(&two, &ORIGIN, r).unwrap();
        assert_eq!(d.clusters.len(), 2);
        assert!(d.stable());
        let sep = fs_distance(&d.clusters[0].center, &d.clusters[1].center);
        assert!((sep - FRAC_PI_2).abs() < 0.02);
        for c in &d.clusters {
            assert!((c.weight - 1.0).abs() < 0.02);
        }
    }
    assert!(uniqueness_gap(&two, &ORIGIN, 0.6).unwrap() < 1e-6);
}

#[test]
fn mass_estimate_and_compare_rate_on_calibrated_examples() {
    let g = examples::holomorphic_graph(2, 1.0, 0.02).unwrap();
    let cusp = examples::cusp(0.04).unwrap();
    for (c, r_max) in [(&g, 0.8), (&cusp, 0.4)] {
        let tr = density_trace(c, &ORIGIN, r_max, 8, 0.7).unwrap();
        let mono = monotonicity_check(&tr, 1e-6).unwrap();
        assert!(mono.pass);
        for w in tr.radii.windows(2) {
            let (r, s) = (w[0], w[1]);
            let est = mass_estimate(c, &ORIGIN, s, r).unwrap();
            assert!(est.holds(0.0), "{est:?}");
            let cmp = compare_rate(c, &ORIGIN, s, r, mono.c1.max(1.0)).unwrap();
            assert!(cmp.holds(0.01), "{cmp:?}");
        }
    }
}

#[test]
fn cusp_density_and_single_direction() {
    let cusp = examples::cusp(0.02).unwrap();
    let tr = density_trace(&cusp, &ORIGIN, 0.4, 8, 0.6).unwrap();
    for (r, t) in tr.radii.iter().zip(&tr.theta) {
        let exact = examples::cusp_ball_mass(*r) / (r * r);
        assert!((t / exact - 1.0).abs() < 0.01, "r = {r}: {t} vs {exact}");
    }
    // density 2, approached from above
    let norm = tr.normalized();
    assert!(norm.windows(2).all(|w| w[1] <= w[0] + 1e-9));
    assert!(norm[norm.len() - 1] > 2.0 && norm[norm.len() - 1] < 2.1);
    let mut gaps = Vec::new();
    for r in [0.4, 0.2, 0.1] {
        let d = tangent_directions(&cusp, &ORIGIN, r).unwrap();
        assert_eq!(d.clusters.len(), 1, "r = {r}");
        // slice length over 2 pi r tends to the density 2 from above
        assert!(d.total_weight() > 2.0 && d.total_weight() < 2.35);
        gaps.push(uniqueness_gap(&cusp, &ORIGIN, r).unwrap());
    }
    assert!(gaps.windows(2).all(|w| w[1] <= w[0] + 1e-6), "{gaps:?}");
}

#[test]
fn goodslices_and_dirichlet_decay_on_z2_graph() {
    let g = examples::holomorphic_graph(2, 1.0, 0.01).unwrap();
    let tr = density_trace(&g, &ORIGIN, 0.4, 6, 0.7).unwrap();
    let c1 = goodslice_constant(&tr);
    for &r in &tr.radii {
        let row = goodslice_search(&g, &ORIGIN, r, c1).unwrap();
        assert!(row.qualifies());
        for rep in slice_poincare(&g, &ORIGIN, row.rho).unwrap() {
            assert!(rep.holds(0.05), "{rep:?}");
        }
    }
    let dir = dirichlet_iteration(&g, &ORIGIN, &tr.radii).unwrap();
    let kappa = dir.max_factor().unwrap();
    assert!(kappa < 1.0);
    // |grad pi|^2 tends to a constant at 0, so E(r) ~ r^2, the density rate
    let rate = dir.implied_rate().unwrap();
    assert!((rate - 2.0).abs() < 0.3, "{rate}");
}
