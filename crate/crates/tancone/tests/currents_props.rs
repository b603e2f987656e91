use std::f64::consts::PI;

use proptest::prelude::*;
use tancone::calibrations::standard_symplectic;
use tancone::currents::{loop_poincare, Polyline1Current, Region, Segment, TriCurrent};
use tancone::examples::{self, uniform_rings};
use tancone::exterior::{comass2, MultiForm};

/// Graph of a random quadratic map over the disk of radius 1.
fn quadratic_graph(c: &[f64], h: f64, mult: i64) -> TriCurrent {
    let rings = uniform_rings(1.0, h).unwrap();
    examples::ring_mesh(4, &rings, mult, |x, y| {
        vec![x, y, c[0] * x * x + c[1] * x * y + c[2] * y * y, c[3] * x * x + c[4] * x * y + c[5] * y * y]
    })
    .unwrap()
}

fn coeffs() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-0.6f64..0.6, 6)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn boundary_of_boundary_vanishes(c in coeffs(), mult in prop::sample::select(vec![-2i64, 1, 3])) {
        let s = quadratic_graph(&c, 0.2, mult);
        let b = s.boundary();
        prop_assert!(b.degrees().iter().all(|d| *d == 0));
        // the lifted boundary circle is at least as long as its shadow
        prop_assert!(b.mass() >= 0.99 * 2.0 * PI * mult.abs() as f64);
    }

    #[test]
    fn mass_is_additive(c in coeffs(), x0 in prop::collection::vec(-0.3f64..0.3, 4), s in 0.1f64..0.5, dr in 0.05f64..0.4) {
        let cur = quadratic_graph(&c, 0.1, 1);
        let r = s + dr;
        let mr = cur.mass(&Region::ball(&x0, r)).unwrap();
        let ms = cur.mass(&Region::ball(&x0, s)).unwrap();
        let ma = cur.mass(&Region::annulus(&x0, s, r)).unwrap();
        prop_assert!((mr - ms - ma).abs() <= 1e-10 * cur.total_mass());
    }

    #[test]
    fn pairing_bounded_by_mass(c in coeffs(), w in prop::collection::vec(-1.0f64..1.0, 6), r in 0.2f64..1.2) {
        let cur = quadratic_graph(&c, 0.1, 1);
        let raw = MultiForm::from_coef(4, 2, w).unwrap();
        let k = comass2(&raw);
        prop_assume!(k > 1e-6);
        let form = raw.scale(1.0 / k).with_bound(1.0);
        let reg = Region::ball(&[0.0; 4], r);
        let p = cur.pair(&form, &reg).unwrap();
        prop_assert!(p.abs() <= (1.0 + 1e-6) * cur.mass(&reg).unwrap());
    }

    #[test]
    fn dilation_scales_mass(c in coeffs(), x0 in prop::collection::vec(-0.2f64..0.2, 2), r in 0.1f64..0.8) {
        let cur = quadratic_graph(&c, 0.1, 1);
        // centre on the surface
        let (x, y) = (x0[0], x0[1]);
        let p = vec![x, y, c[0] * x * x + c[1] * x * y + c[2] * y * y, c[3] * x * x + c[4] * x * y + c[5] * y * y];
        let d = cur.dilate(&p, r).unwrap();
        let lhs = d.mass(&Region::Full).unwrap() * r * r;
        let rhs = cur.mass(&Region::ball(&p, r)).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-8 * rhs.max(1e-12), "{lhs} {rhs}");
    }

    #[test]
    fn slices_of_cycles_are_cycles(x0 in prop::collection::vec(-0.3f64..0.3, 4), rho in 0.3f64..1.2) {
        let torus = examples::clifford_torus(24).unwrap();
        let sl = torus.slice_sphere(&x0, rho).unwrap();
        prop_assert!(sl.curve.is_cycle());
        if !sl.curve.is_empty() {
            let loops = sl.curve.decompose_cycle().unwrap();
            let total: f64 = loops.iter().map(|l| l.mass()).sum();
            prop_assert!((total - sl.curve.mass()).abs() <= 1e-10 * sl.curve.mass());
        }
    }

    #[test]
    fn poincare_on_random_loops(k in 3usize..40, amp in prop::collection::vec(-1.0f64..1.0, 6)) {
        // star-shaped random loop in R^2 and a smooth function of position
        let n = 4 * k;
        let pts: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / n as f64;
                let r = 1.0 + 0.3 * (amp[0] * (2.0 * t).sin() + amp[1] * (3.0 * t).cos());
                vec![r * t.cos(), r * t.sin()]
            })
            .collect();
        let segs = (0..n).map(|i| Segment { a: i, b: (i + 1) % n, mult: 1, tri: None }).collect();
        let lp = Polyline1Current::new(2, pts, segs);
        let rep = loop_poincare(&lp, |x| vec![amp[2] * x[0] + amp[3] * x[1] * x[1], amp[4] * (x[0] * amp[5]).sin()]).unwrap();
        prop_assert!(rep.holds(0.05), "{:?}", rep);
    }
}

#[test]
fn flat_disk_masses_and_pairings() {
    let d = examples::flat_disk(4, 1.0, 0.01, 1).unwrap();
    let d3 = examples::flat_disk(4, 1.0, 0.01, 3).unwrap();
    let w0 = standard_symplectic(4).unwrap();
    let dx12 = MultiForm::basis(4, &[0, 1]);
    let dx34 = MultiForm::basis(4, &[2, 3]);
    for r in [0.25, 0.5, 0.9] {
        let ball = Region::ball(&[0.0; 4], r);
        let m = d.mass(&ball).unwrap();
        assert!((m / (PI * r * r) - 1.0).abs() < 1e-6, "r = {r}: {m}");
        assert!((d3.mass(&ball).unwrap() - 3.0 * m).abs() < 1e-12 * m);
        assert!((d.pair(&dx12, &ball).unwrap() / m - 1.0).abs() < 1e-12);
        assert!(d.pair(&dx34, &ball).unwrap().abs() < 1e-14);
        assert!((d.pair(&w0, &ball).unwrap() / m - 1.0).abs() < 1e-12);
    }
    let perim = d.boundary().mass();
    assert!((perim / (2.0 * PI) - 1.0).abs() < 5e-3);
    let flat = d.dilate(&[0.0; 4], 0.5).unwrap();
    assert!((flat.mass(&Region::Full).unwrap() / PI - 1.0).abs() < 1e-6);
}

#[test]
fn z2_graph_mass_and_calibration() {
    let g = examples::holomorphic_graph(2, 1.0, 0.01).unwrap();
    // full mesh over the parameter disk of radius r
    let param_mass = |r: f64| PI * r * r + 2.0 * PI * r.powi(4);
    assert!((g.total_mass() / param_mass(1.0) - 1.0).abs() < 5e-3);
    let w0 = standard_symplectic(4).unwrap();
    for r in [0.3, 0.6] {
        let ball = Region::ball(&[0.0; 4], r);
        let m = g.mass(&ball).unwrap();
        assert!((m / examples::z2_ball_mass(r) - 1.0).abs() < 5e-3);
        // flat chords of a curved complex curve: defect is O(h^2)
        assert!((g.pair(&w0, &ball).unwrap() / m - 1.0).abs() < 2e-4);
    }
}

#[test]
fn two_lines_slice_into_two_circles() {
    let c = examples::two_lines(1.0, 0.02).unwrap();
    for rho in [0.3, 0.7] {
        let sl = c.slice_sphere(&[0.0; 4], rho).unwrap();
        let loops = sl.curve.decompose_cycle().unwrap();
        assert_eq!(loops.len(), 2);
        for l in &loops {
            assert!((l.mass() / (2.0 * PI * rho) - 1.0).abs() < 0.01);
        }
    }
}

#[test]
fn slice_mass_bounded_by_mass_derivative() {
    let g = examples::holomorphic_graph(2, 1.0, 0.01).unwrap();
    let x0 = [0.0; 4];
    for rho in [0.2, 0.4, 0.7] {
        let dr = 1e-3;
        let dm = (g.mass(&Region::ball(&x0, rho + dr)).unwrap() - g.mass(&Region::ball(&x0, rho - dr)).unwrap()) / (2.0 * dr);
        let sl = g.slice_sphere(&x0, rho).unwrap().curve.mass();
        assert!(dm >= sl * (1.0 - 0.02), "rho {rho}: {dm} < {sl}");
    }
}

#[test]
fn multiplicity_two_circle_splits_in_two() {
    let d = examples::flat_disk(4, 1.0, 0.05, 2).unwrap();
    let sl = d.slice_sphere(&[0.0; 4], 0.5).unwrap();
    let loops = sl.curve.decompose_cycle().unwrap();
    assert_eq!(loops.len(), 2);
    let total: f64 = loops.iter().map(|l| l.mass()).sum();
    assert!((total / (2.0 * 2.0 * PI * 0.5) - 1.0).abs() < 0.01);
}

#[test]
fn mesh_refinement_is_second_order() {
    let mass = |h: f64| examples::holomorphic_graph(2, 1.0, h).unwrap().total_mass();
    let m: Vec<f64> = [0.04, 0.02, 0.01].iter().map(|h| mass(*h)).collect();
    let ratio = (m[0] - m[1]) / (m[1] - m[2]);
    assert!((3.5..=4.5).contains(&ratio), "{m:?} ratio {ratio}");
}
