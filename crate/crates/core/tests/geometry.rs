use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

use barriers_core::exterior::{is_simple, pinner, plucker, wedge, Frame};
use barriers_core::grassmann::{
    bg_contains, exp_map, geodesic_distance, kozlov_canonical, principal_angles, t_max, BallMembership, GrassmannPoint,
    GrassmannTangent, MainRegion,
};
use barriers_core::quadric::{fs_distance, grassmann_to_quadric, join_s2xs2, split_s2xs2, ProjectivePoint};
use barriers_core::sampling::{gaussian_matrix, gaussian_vector, seeded, special_orthogonal, unit_vector, SeededRng};
use barriers_core::sphere::{
    sphere_distance, subsphere_distance, tube_region_contains, GreatCircle, SpherePoint, SphereTubeRegion,
    SubsphereFlag,
};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use proptest::prelude::*;

fn random_plane(rng: &mut SeededRng, n: usize, p: usize) -> GrassmannPoint {
    let q = special_orthogonal(rng, n);
    GrassmannPoint::new(Frame::from_matrix(q.columns(0, p).into_owned()).unwrap())
}

fn e(n: usize, i: usize) -> DVector<f64> {
    let mut v = DVector::zeros(n);
    v[i] = 1.0;
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn plucker_vectors_are_unit_and_gauge_invariant(seed in any::<u64>(), n in 3usize..8, p in 1usize..3) {
        let mut rng = seeded(seed);
        let w = random_plane(&mut rng, n, p);
        prop_assert!((w.plucker().norm() - 1.0).abs() < 1e-12);
        let q = special_orthogonal(&mut rng, p);
        let w2 = w.regauge(&q).unwrap();
        prop_assert!(w.plucker().max_abs_diff(w2.plucker()) < 1e-12);
        prop_assert!((w.plucker().max_abs_diff(&plucker(w.frame()))) < 1e-15);
    }

    #[test]
    fn wedges_of_two_vectors_are_simple(seed in any::<u64>(), n in 4usize..8) {
        let mut rng = seeded(seed);
        let a = wedge(&[gaussian_vector(&mut rng, n), gaussian_vector(&mut rng, n)]).unwrap();
        prop_assert!(is_simple(&a, 1e-10).unwrap());
        let b = wedge(&[gaussian_vector(&mut rng, n), gaussian_vector(&mut rng, n)]).unwrap();
        let sum = a.add(&b).unwrap();
        // a generic sum of two planes in R⁴ or more is not decomposable
        prop_assert!(!is_simple(&sum, 1e-6).unwrap() || pinner(&sum, &sum).unwrap() < 1e-12);
    }

    #[test]
    fn sphere_distance_is_a_metric(seed in any::<u64>(), n in 2usize..7) {
        let mut rng = seeded(seed);
        let mut pick = || SpherePoint::new(unit_vector(&mut rng, n)).unwrap();
        let (x, y, z) = (pick(), pick(), pick());
        let dxy = sphere_distance(&x, &y).unwrap();
        prop_assert!((dxy - sphere_distance(&y, &x).unwrap()).abs() < 1e-15);
        prop_assert!(dxy <= sphere_distance(&x, &z).unwrap() + sphere_distance(&z, &y).unwrap() + 1e-12);
        prop_assert!((sphere_distance(&x, &x.antipode()).unwrap() - PI).abs() < 1e-12);
    }

    #[test]
    fn principal_angles_are_gauge_invariant(seed in any::<u64>(), n in 4usize..7) {
        let mut rng = seeded(seed);
        let (a, b) = (random_plane(&mut rng, n, 2), random_plane(&mut rng, n, 2));
        let d = geodesic_distance(&a, &b).unwrap();
        let q = special_orthogonal(&mut rng, 2);
        let d2 = geodesic_distance(&a.regauge(&q).unwrap(), &b).unwrap();
        prop_assert!((d - d2).abs() < 1e-10);
        prop_assert!((d - geodesic_distance(&b, &a).unwrap()).abs() < 1e-10);
        let angles = principal_angles(&a, &b).unwrap();
        prop_assert!(angles.angles.iter().all(|t| (0.0..=PI).contains(t)));
    }

    #[test]
    fn geodesics_stay_inside_their_convex_ball(seed in any::<u64>(), n in 4usize..7, f in 0.05f64..0.95) {
        let mut rng = seeded(seed);
        let w = random_plane(&mut rng, n, 2);
        let x = GrassmannTangent::from_coeffs(&w, gaussian_matrix(&mut rng, 2, n - 2)).unwrap().unit();
        let tx = t_max(&x);
        prop_assert_eq!(bg_contains(&w, &exp_map(&x, f * tx), 0.0).unwrap(), BallMembership::Inside);
        prop_assert_eq!(bg_contains(&w, &exp_map(&x, tx), 0.0).unwrap(), BallMembership::Boundary);
    }

    #[test]
    fn hodge_split_round_trips(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let w = random_plane(&mut rng, 4, 2);
        let (a, b) = split_s2xs2(&w).unwrap();
        prop_assert!((a.norm() - 1.0).abs() < 1e-12 && (b.norm() - 1.0).abs() < 1e-12);
        let back = join_s2xs2(&a, &b).unwrap();
        prop_assert!(back.plucker().max_abs_diff(w.plucker()) < 1e-10);
    }
}

/// `ds² = 2 Σ_{j<l} |z_j dz_l − z_l dz_j|² / |z|⁴`, integrated by Simpson's rule
/// along the Fubini-Study geodesic from `a` to `b`.
fn fs_length_by_quadrature(a: &[Complex64], b: &[Complex64]) -> f64 {
    let norm = |z: &[Complex64]| z.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let ua: Vec<Complex64> = a.iter().map(|c| c / norm(a)).collect();
    let ub: Vec<Complex64> = b.iter().map(|c| c / norm(b)).collect();
    let h: Complex64 = ua.iter().zip(&ub).map(|(x, y)| x.conj() * y).sum();
    let phase = if h.norm() > 0.0 {
        h.conj() / h.norm()
    } else {
        Complex64::new(1.0, 0.0)
    };
    let ub: Vec<Complex64> = ub.iter().map(|c| c * phase).collect();
    let c = h.norm();
    let perp: Vec<Complex64> = ub.iter().zip(&ua).map(|(y, x)| y - x * c).collect();
    let pn = norm(&perp);
    let dir: Vec<Complex64> = perp.iter().map(|v| v / pn).collect();
    let total = pn.atan2(c);
    let speed = |s: f64| {
        let z: Vec<Complex64> = ua.iter().zip(&dir).map(|(x, d)| x * s.cos() + d * s.sin()).collect();
        let dz: Vec<Complex64> = ua.iter().zip(&dir).map(|(x, d)| -x * s.sin() + d * s.cos()).collect();
        let mut acc = 0.0;
        for j in 0..z.len() {
            for l in j + 1..z.len() {
                acc += (z[j] * dz[l] - z[l] * dz[j]).norm_sqr();
            }
        }
        (2.0 * acc).sqrt() / norm(&z).powi(2)
    };
    let m = 200;
    let step = total / m as f64;
    let mut sum = speed(0.0) + speed(total);
    for k in 1..m {
        sum += speed(k as f64 * step) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    sum * step / 3.0
}

#[test]
fn fs_distance_matches_quadrature() {
    let mut rng = seeded(21);
    for i in 0..50 {
        let n = 4 + i % 3;
        let qa = grassmann_to_quadric(&random_plane(&mut rng, n, 2)).unwrap();
        let qb = grassmann_to_quadric(&random_plane(&mut rng, n, 2)).unwrap();
        let d = fs_distance(qa.projective(), qb.projective()).unwrap();
        let l = fs_length_by_quadrature(qa.coords(), qb.coords());
        assert!((d - l).abs() <= 1e-4 * d, "closed form {d}, quadrature {l}");
    }
    let z = ProjectivePoint::new(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)]).unwrap();
    assert!(fs_distance(&z, &z.scaled(Complex64::new(0.0, 3.0)).unwrap()).unwrap() < 1e-15);
}

#[test]
fn lines_reduce_main_region_to_the_tube() {
    // on G⁺_{1,n} = S^{n−1} the swept region is the complement of the thickened barrier
    let mut rng = seeded(22);
    let n = 4;
    let base = GrassmannPoint::from_vectors(&[e(n, 0)]).unwrap();
    let x1 = GrassmannTangent::from_coeffs(&base, DMatrix::from_row_slice(1, 3, &[1.0, 0.0, 0.0])).unwrap();
    let eps = 0.3;
    let region = MainRegion::new(&x1, eps).unwrap();
    let tube = SphereTubeRegion::new(
        GreatCircle::new(SpherePoint::basis(n, 0), x1.frame_velocity().column(0).into_owned()).unwrap(),
        eps,
    )
    .unwrap();
    let mut checked = 0;
    for _ in 0..400 {
        let x = SpherePoint::new(unit_vector(&mut rng, n)).unwrap();
        if tube.signed_margin(&x).abs() < 1e-6 {
            continue;
        }
        let w = GrassmannPoint::from_vectors(&[x.coords().clone()]).unwrap();
        assert_eq!(region.contains(&w).unwrap(), tube_region_contains(&tube, &x));
        checked += 1;
    }
    assert!(checked > 350);
}

#[test]
fn shared_normal_two_angle_point_lies_in_region() {
    // X₂ rotating e₁ toward the same normal as X₁ reaches a plane the sweep covers
    let w = GrassmannPoint::standard(4, 2).unwrap();
    let normals = Frame::new(&[e(4, 2), e(4, 3)]).unwrap();
    let x1 = kozlov_canonical(&w, &normals, DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0])).unwrap();
    let x2 = kozlov_canonical(
        &w,
        &normals,
        DMatrix::from_row_slice(2, 2, &[FRAC_1_SQRT_2, 0.0, 0.0, FRAC_1_SQRT_2]),
    )
    .unwrap();
    for eps in [0.1, 0.3] {
        let region = MainRegion::new(&x1, eps).unwrap();
        let tx = t_max(&x2);
        for t in [tx, -tx] {
            let r = region.sweep_range(&exp_map(&x2, t)).unwrap();
            assert!(r.s_min <= FRAC_PI_2 / 2.0 + 1e-9);
            assert!(r.s_max >= PI - 1e-9);
            assert!(region.contains(&exp_map(&x2, t)).unwrap());
        }
    }
    // the admissible choice e₁ → n₂, e₂ → n₁ stays outside
    let x2 = kozlov_canonical(
        &w,
        &normals,
        DMatrix::from_row_slice(2, 2, &[0.0, FRAC_1_SQRT_2, FRAC_1_SQRT_2, 0.0]),
    )
    .unwrap();
    let region = MainRegion::new(&x1, 0.3).unwrap();
    assert!(!region.contains(&exp_map(&x2, t_max(&x2))).unwrap());
}

#[test]
fn subsphere_distance_grows_as_the_flag_shrinks() {
    let mut rng = seeded(23);
    let n = 6;
    for _ in 0..100 {
        let x = SpherePoint::new(unit_vector(&mut rng, n)).unwrap();
        let one = SubsphereFlag::new(n, vec![e(n, 0)]).unwrap();
        let two = SubsphereFlag::new(n, vec![e(n, 0), e(n, 1)]).unwrap();
        assert!(subsphere_distance(&x, &one).unwrap() <= subsphere_distance(&x, &two).unwrap() + 1e-15);
    }
}
