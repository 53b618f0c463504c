use std::f64::consts::PI;
use std::sync::Arc;

use willmore_core::harmonics::{sh_count, sh_index};
use willmore_core::metric::{conformal_factor, Flat, SchwarzschildParams};
use willmore_core::oracle::{mean_curvature_schwarzschild, quad_sphere};
use willmore_core::spectral::QuadratureGrid;
use willmore_core::surface::*;

#[test]
fn unit_sphere_in_flat_space() {
    let g = build_graph([0.0; 3], &Shape::Sphere(1.0), 8).unwrap();
    let s = geometry(&g, &Flat).unwrap();
    for n in &s.nodes {
        assert!((n.h - 2.0).abs() < 1e-12);
        assert!(n.a0_norm2 < 1e-24);
        assert!((n.scalar_sigma - 2.0).abs() < 1e-10);
    }
    assert!((s.area() - 4.0 * PI).abs() < 1e-12);
}

#[test]
fn centered_schwarzschild_sphere() {
    let m = 1.0;
    let r = 10.0;
    let g = build_graph([0.0; 3], &Shape::Sphere(r), 8).unwrap();
    let s = geometry(&g, &SchwarzschildParams::new(m).unwrap()).unwrap();
    let h = mean_curvature_schwarzschild(m, r);
    // area radius ρ = φ² r, H = 2 ρ'(r) / (φ² ρ) with ρ' = φ² + 2 r φ φ'
    let phi = 1.0 + m / (2.0 * r);
    let dphi = -m / (2.0 * r * r);
    let rho = phi * phi * r;
    let h_warped = 2.0 * (phi * phi + 2.0 * r * phi * dphi) / (phi * phi * rho);
    assert!((h - h_warped).abs() < 1e-15);
    assert!((h - 0.164129143721).abs() < 1e-11, "{h}");
    for n in &s.nodes {
        assert!((n.h - h).abs() < 1e-12);
        assert!(n.a0_norm2 < 1e-24);
    }
    let want = 4.0 * PI * (phi * phi * r).powi(2);
    assert!((s.area() / want - 1.0).abs() < 1e-13);
}

#[test]
fn laplace_beltrami_spectrum_on_round_sphere() {
    let l = 8;
    let g = build_graph([0.0; 3], &Shape::Sphere(2.0), l).unwrap();
    let s = geometry(&g, &Flat).unwrap();
    for deg in 0..=l {
        for m in -(deg as i32)..=(deg as i32) {
            let mut c = vec![0.0; sh_count(l)];
            c[sh_index(deg, m)] = 1.0;
            let y = g.grid.synthesize(&c);
            let ly = s.laplace_beltrami(&y);
            let want = -((deg * (deg + 1)) as f64) / 4.0;
            for (a, b) in ly.iter().zip(&y) {
                assert!((a - want * b).abs() < 1e-10, "l={deg} m={m}");
            }
        }
    }
}

fn wobbly(l: usize, center: [f64; 3]) -> RadialGraph {
    let mut c = vec![0.0; sh_count(l)];
    c[0] = 3.0 * (4.0 * PI).sqrt();
    c[sh_index(1, 1)] = 0.2;
    c[sh_index(2, 0)] = 0.25;
    c[sh_index(2, -1)] = -0.1;
    c[sh_index(3, 2)] = 0.08;
    build_graph(center, &Shape::Coefficients(c), l).unwrap()
}

#[test]
fn laplacian_integrates_to_zero_and_is_self_adjoint() {
    let g = wobbly(12, [0.5, 0.0, 0.2]);
    let s = geometry(&g, &SchwarzschildParams::new(1.0).unwrap()).unwrap();
    let f: Vec<f64> = s.nodes.iter().map(|n| (0.3 * n.position[0]).sin() + n.position[2]).collect();
    let h: Vec<f64> = s.nodes.iter().map(|n| n.position[1] * n.position[2]).collect();
    let lf = s.laplace_beltrami(&f);
    let lh = s.laplace_beltrami(&h);
    let scale = s.integrate(&lf.iter().map(|x| x.abs()).collect::<Vec<_>>());
    assert!(s.integrate(&lf).abs() < 1e-9 * scale);
    let a = s.inner(&lf, &h);
    let b = s.inner(&f, &lh);
    assert!((a - b).abs() < 1e-8 * a.abs().max(1.0), "{a} {b}");
}

#[test]
fn gauss_bonnet() {
    let g = wobbly(16, [0.4, -0.3, 0.1]);
    for provider in [&Flat as &dyn willmore_core::metric::MetricProvider, &SchwarzschildParams::new(1.0).unwrap()] {
        let s = geometry(&g, provider).unwrap();
        let sc: Vec<f64> = s.nodes.iter().map(|n| n.scalar_sigma).collect();
        assert!((s.integrate(&sc) - 8.0 * PI).abs() < 1e-8);
    }
}

#[test]
fn ellipsoid_area_matches_independent_quadrature() {
    let ax = [1.0, 1.3, 0.8];
    let g = build_graph([0.0; 3], &Shape::Ellipsoid(ax), 40).unwrap();
    let s = geometry(&g, &Flat).unwrap();
    // the ellipsoid as an image of the unit sphere under a linear map
    let want = quad_sphere(
        |_, n: [f64; 3]| {
            let c = [n[0] * ax[1] * ax[2], n[1] * ax[0] * ax[2], n[2] * ax[0] * ax[1]];
            (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt()
        },
        1.0,
        0.0,
        64,
    )
    .unwrap();
    assert!((s.area() / want - 1.0).abs() < 1e-8, "{} {}", s.area(), want);
}

#[test]
fn approximating_sphere_of_shifted_sphere() {
    let g = build_graph([0.3, -0.2, 0.1], &Shape::Sphere(2.5), 8).unwrap();
    let a = approximating_sphere(&g);
    assert!((a.r_e - 2.5).abs() < 1e-12);
    for (x, y) in a.a_e.iter().zip([0.3, -0.2, 0.1]) {
        assert!((x - y).abs() < 1e-12);
    }
    assert!((a.tau - (0.14f64).sqrt() / 2.5).abs() < 1e-12);
}

#[test]
fn round_sphere_in_flat_space_centered_elsewhere_is_umbilic() {
    // a shifted round sphere re-parametrised as a graph about the origin
    let l = 30;
    let grid = Arc::new(QuadratureGrid::new(l));
    let c = [0.3, 0.1, -0.2];
    let r = 2.0;
    let u: Vec<f64> = grid
        .directions
        .iter()
        .map(|w| {
            let b = w[0] * c[0] + w[1] * c[1] + w[2] * c[2];
            b + (b * b - (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]) + r * r).sqrt()
        })
        .collect();
    let coeffs = grid.analyze(&u, l);
    let g = build_graph_on(grid, [0.0; 3], &Shape::Coefficients(coeffs)).unwrap();
    let s = geometry(&g, &Flat).unwrap();
    for n in &s.nodes {
        assert!((n.h - 1.0).abs() < 1e-9);
        assert!(n.a0_norm2.sqrt() < 1e-9);
    }
    let a = approximating_sphere(&g);
    assert!((a.r_e - r).abs() < 1e-10);
}

#[test]
fn identities_hold_in_flat_and_schwarzschild() {
    let g = wobbly(20, [0.6, -0.2, 0.3]);
    let s = geometry(&g, &Flat).unwrap();
    let r = identity_residuals(&s, None).unwrap().relative_sup();
    assert!(r[0] < 1e-8 && r[1] < 1e-8 && r[2] < 1e-7, "{r:?}");
    let s = geometry(&g, &SchwarzschildParams::new(1.0).unwrap()).unwrap();
    let r = identity_residuals(&s, Some(1.0)).unwrap().relative_sup();
    assert!(r[0] < 1e-8 && r[1] < 1e-8 && r[2] < 1e-7 && r[3] < 1e-12, "{r:?}");
}

#[test]
fn identities_hold_for_perturbed_metric() {
    use willmore_core::metric::{Multipole, PerturbationSpec, PerturbedMetric, TensorProfile};
    let g = wobbly(20, [0.6, -0.2, 0.3]);
    let tensor = PerturbationSpec::tensor(
        0.05,
        TensorProfile {
            amplitude: [[1.0, 0.3, -0.2], [0.3, -0.5, 0.1], [-0.2, 0.1, 0.8]],
            center: [0.5, -0.2, 0.3],
            width: 3.0,
        },
    );
    let conformal = PerturbationSpec::conformal_harmonic(
        0.3,
        vec![Multipole { degree: 1, order: 1, coeff: 0.7 }, Multipole { degree: 3, order: 2, coeff: 2.0 }],
    );
    for spec in [tensor, conformal] {
        let p = PerturbedMetric::new(1.0, spec).unwrap();
        let s = geometry(&g, &p).unwrap();
        let r = identity_residuals(&s, None).unwrap().relative_sup();
        assert!(r[0] < 1e-8 && r[1] < 1e-8 && r[2] < 1e-7, "{r:?}");
    }
}

#[test]
fn traceless_energy_is_conformally_invariant() {
    let g = wobbly(20, [0.6, -0.2, 0.3]);
    let e = geometry(&g, &Flat).unwrap();
    let s = geometry(&g, &SchwarzschildParams::new(1.0).unwrap()).unwrap();
    let fe: Vec<f64> = e.nodes.iter().map(|n| n.a0_norm2).collect();
    let fs: Vec<f64> = s.nodes.iter().map(|n| n.a0_norm2).collect();
    let (ie, is) = (e.integrate(&fe), s.integrate(&fs));
    assert!((ie - is).abs() < 1e-10 * ie, "{ie} {is}");
    // pointwise: |Å|² dμ is invariant, so Å^S = φ² Å^e as covariant tensors
    for (n, (a, b)) in e.nodes.iter().zip(&s.nodes).enumerate() {
        let (phi, _) = conformal_factor(1.0, a.position).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((b.a0[i][j] - phi * phi * a.a0[i][j]).abs() < 1e-10 * (1.0 + a.a0[i][j].abs()), "{n}");
            }
        }
    }
}

#[test]
fn area_first_variation_matches_mean_curvature() {
    let g = wobbly(16, [0.6, -0.2, 0.3]);
    let p = SchwarzschildParams::new(1.0).unwrap();
    let s = geometry(&g, &p).unwrap();
    let f: Vec<f64> = s.nodes.iter().map(|n| 1.0 + 0.3 * n.position[2] / 3.0).collect();
    let nu: Vec<[f64; 3]> = s.nodes.iter().map(|n| n.normal).collect();
    let h = 1e-4;
    let ap = willmore_core::surface::SurfaceGeometry::new(s.embedding.displaced(&f, &nu, h), &p).unwrap().area();
    let am = willmore_core::surface::SurfaceGeometry::new(s.embedding.displaced(&f, &nu, -h), &p).unwrap().area();
    let fd = (ap - am) / (2.0 * h);
    let hf: Vec<f64> = s.nodes.iter().zip(&f).map(|(n, f)| n.h * f).collect();
    let want = s.integrate(&hf);
    assert!((fd / want - 1.0).abs() < 1e-7, "{fd} {want}");
}

#[test]
fn invalid_graphs_are_rejected() {
    assert!(build_graph([0.0; 3], &Shape::Sphere(1.0), 4).is_err());
    assert!(build_graph([0.0; 3], &Shape::Sphere(-1.0), 8).is_err());
    assert!(build_graph([0.0; 3], &Shape::Ellipsoid([1.0, 0.0, 1.0]), 8).is_err());
    assert!(build_graph([0.0; 3], &Shape::Coefficients(vec![1.0; 3]), 8).is_err());
    let mut c = vec![0.0; sh_count(8)];
    c[sh_index(1, 0)] = 1.0;
    assert!(build_graph([0.0; 3], &Shape::Coefficients(c), 8).is_err());
}

fn ellipsoid_area_oracle(ax: [f64; 3]) -> f64 {
    quad_sphere(
        |_, n: [f64; 3]| {
            let c = [n[0] * ax[1] * ax[2], n[1] * ax[0] * ax[2], n[2] * ax[0] * ax[1]];
            (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt()
        },
        1.0,
        0.0,
        64,
    )
    .unwrap()
}

#[test]
fn unit_ellipsoid_is_the_unit_sphere() {
    let e = build_graph([0.0; 3], &Shape::Ellipsoid([1.0; 3]), 8).unwrap();
    let s = build_graph([0.0; 3], &Shape::Sphere(1.0), 8).unwrap();
    for (a, b) in e.coeffs.iter().zip(&s.coeffs) {
        assert!((a - b).abs() < 1e-14);
    }
}

#[test]
fn prolate_ellipsoid_area_and_center() {
    let ax = [1.0, 1.0, 1.2];
    let want = ellipsoid_area_oracle(ax);
    let g = build_graph([0.0; 3], &Shape::Ellipsoid(ax), 40).unwrap();
    assert!((geometry(&g, &Flat).unwrap().area() / want - 1.0).abs() < 1e-8);

    let g = build_graph([0.3, 0.0, 0.0], &Shape::Ellipsoid(ax), 40).unwrap();
    let a = approximating_sphere(&g);
    assert!((a.a_e[0] - 0.3).abs() < 1e-10 && a.a_e[1].abs() < 1e-10 && a.a_e[2].abs() < 1e-10, "{a:?}");
    assert!((a.r_e / (want / (4.0 * PI)).sqrt() - 1.0).abs() < 1e-8);
}

#[test]
fn translation_flux_vanishes() {
    let g = wobbly(16, [0.4, -0.3, 0.1]);
    for provider in [&Flat as &dyn willmore_core::metric::MetricProvider, &SchwarzschildParams::new(1.0).unwrap()] {
        let s = geometry(&g, provider).unwrap();
        for b in [[1.0, 0.0, 0.0], [0.2, -0.7, 0.4]] {
            assert!(translation_flux(&s, b).unwrap().abs() < 1e-10);
        }
    }
}

#[test]
fn identity_suite_converges_under_refinement() {
    use willmore_core::metric::{PerturbationSpec, PerturbedMetric, TensorProfile};
    let metric = PerturbedMetric::new(
        1.0,
        PerturbationSpec::tensor(
            0.05,
            TensorProfile { amplitude: [[1.0, 0.3, -0.2], [0.3, -0.5, 0.1], [-0.2, 0.1, 0.8]], center: [0.5, -0.2, 0.3], width: 3.0 },
        ),
    )
    .unwrap();
    let suite = |l| {
        let g = build_graph([0.5, -0.3, 0.2], &Shape::Ellipsoid([5.0, 6.0, 8.0]), l).unwrap();
        willmore_core::willmore::identity_suite(&geometry(&g, &metric).unwrap()).unwrap()
    };
    let (coarse, fine) = (suite(12), suite(24));
    assert!(fine.max() <= 1e-6, "{fine:?}");
    for (c, f) in coarse.values().iter().zip(fine.values()) {
        assert!(f <= c / 10.0 || f <= 1e-12, "{coarse:?} {fine:?}");
    }
}
