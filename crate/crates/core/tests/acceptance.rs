//! Acceptance suite: one line per criterion, nonzero exit if any criterion fails.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};
use std::time::Instant;

use barriers_core::exterior::Frame;
use barriers_core::gauss::{
    gauss_image_audit, gauss_map_on_torus, AuditRegion, ImmersionKind, ParametricImmersion, VERDICT_MET,
};
use barriers_core::grassmann::{
    exp_map, geodesic_distance, grassmann_geodesic, kozlov_canonical, t_max, GrassmannPoint, GrassmannTangent,
    MainRegion,
};
use barriers_core::harmonic::{
    dirichlet_energy, icosphere, max_tension, run_flow, torus_grid, DiscreteMap, FlowConfig, FlowMode, FlowStatus,
    TargetManifold,
};
use barriers_core::quadric::{
    fs_distance, grassmann_to_quadric, ho_chart, ho_chart_inv, quadric_residual, quadric_to_grassmann,
};
use barriers_core::sampling::{gaussian_matrix, seeded, special_orthogonal, unit_vector, SeededRng};
use barriers_core::sphere::{
    region_disconnection_check, sweepout_leaf_find, tube_region_contains, DisconnectionParams, GreatCircle,
    SpherePoint, SphereTubeRegion,
};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

type Criterion = (&'static str, fn() -> Outcome);

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn e(n: usize, i: usize) -> DVector<f64> {
    let mut v = DVector::zeros(n);
    v[i] = 1.0;
    v
}

fn random_plane(rng: &mut SeededRng, n: usize, p: usize) -> GrassmannPoint {
    let q = special_orthogonal(rng, n);
    GrassmannPoint::new(Frame::from_matrix(q.columns(0, p).into_owned()).unwrap())
}

fn random_tangent(rng: &mut SeededRng, n: usize, p: usize) -> GrassmannTangent {
    let w = random_plane(rng, n, p);
    GrassmannTangent::from_coeffs(&w, gaussian_matrix(rng, p, n - p)).unwrap()
}

fn kozlov_form() -> Outcome {
    let start = Instant::now();
    let mut rng = seeded(1);
    let (mut recon, mut gauge) = (0.0f64, 0.0f64);
    for (n, p) in [(4, 2), (5, 2), (6, 3)] {
        for _ in 0..1000 {
            let x = random_tangent(&mut rng, n, p);
            recon = recon.max((x.rebuild_coeffs() - x.coeffs()).abs().max());
            let q = special_orthogonal(&mut rng, p);
            let s = special_orthogonal(&mut rng, n - p);
            let y = x.regauge(&q, &s).unwrap();
            for (a, b) in x.lambda().iter().zip(y.lambda()) {
                gauge = gauge.max((a - b).abs());
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        recon < 1e-12 && gauge < 1e-10 && secs < 10.0,
        format!("reconstruction {recon:.2e}, lambda gauge {gauge:.2e}, {secs:.2} s"),
    )
}

fn t_max_values() -> Outcome {
    let w = GrassmannPoint::standard(4, 2).unwrap();
    let mut a = DMatrix::zeros(2, 2);
    a[(0, 0)] = 1.0;
    let rank1 = t_max(&GrassmannTangent::from_coeffs(&w, a).unwrap());
    let mut b = DMatrix::zeros(2, 2);
    b[(0, 1)] = FRAC_1_SQRT_2;
    b[(1, 0)] = FRAC_1_SQRT_2;
    let x2 = GrassmannTangent::from_coeffs(&w, b).unwrap();
    let two = t_max(&x2);
    let expect = PI / (2.0 * 2f64.sqrt());
    outcome(
        (rank1 - FRAC_PI_2).abs() < 1e-12 && (two - expect).abs() < 1e-12,
        format!("rank one {rank1:.15}, two-angle {two:.15} (lambda {:?})", x2.lambda()),
    )
}

fn unit_speed() -> Outcome {
    let mut rng = seeded(3);
    let mut worst = 0.0f64;
    let shapes = [(4, 2), (5, 2), (6, 3), (7, 2)];
    for i in 0..100 {
        let (n, p) = shapes[i % shapes.len()];
        let x = random_tangent(&mut rng, n, p).unit();
        let tx = t_max(&x);
        for f in [0.1, 0.5, 0.9] {
            let t = f * tx;
            let (w, _) = grassmann_geodesic(&x, t);
            worst = worst.max((geodesic_distance(x.base(), &w).unwrap() - t).abs());
        }
    }
    outcome(worst < 1e-8, format!("max |d - t| {worst:.2e}"))
}

fn quadric_model() -> Outcome {
    let mut rng = seeded(4);
    let (mut res, mut chart, mut back) = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..1000 {
        let n = 4 + i % 4;
        let w = random_plane(&mut rng, n, 2);
        let q = grassmann_to_quadric(&w).unwrap();
        res = res.max(quadric_residual(q.coords()));
        let w2 = quadric_to_grassmann(&q).unwrap();
        back = back.max(w.plucker().max_abs_diff(w2.plucker()));
        let q2 = ho_chart_inv(&ho_chart(&q).unwrap()).unwrap();
        chart = chart.max(fs_distance(q.projective(), q2.projective()).unwrap());
    }
    let mut speed_err = 0.0f64;
    let h = 1e-5;
    for i in 0..100 {
        let x = random_tangent(&mut rng, 4 + i % 3, 2);
        let a = grassmann_to_quadric(&exp_map(&x, -h)).unwrap();
        let b = grassmann_to_quadric(&exp_map(&x, h)).unwrap();
        let speed = fs_distance(a.projective(), b.projective()).unwrap() / (2.0 * h);
        speed_err = speed_err.max((speed / x.norm() - 1.0).abs());
    }
    outcome(
        res < 1e-10 && chart < 1e-10 && back < 1e-10 && speed_err < 1e-4,
        format!(
            "residual {res:.2e}, chart round trip {chart:.2e}, frame round trip {back:.2e}, metric {speed_err:.2e}"
        ),
    )
}

fn s3_region(eps: f64) -> SphereTubeRegion {
    let c = GreatCircle::new(SpherePoint::basis(4, 0), e(4, 1)).unwrap();
    SphereTubeRegion::new(c, eps).unwrap()
}

fn region_equivalence() -> Outcome {
    let r = s3_region(0.3);
    let mut rng = seeded(5);
    let (mut tested, mut disagree) = (0, 0);
    for _ in 0..10_000 {
        let x = SpherePoint::new(unit_vector(&mut rng, 4)).unwrap();
        if r.signed_margin(&x).abs() < 1e-6 {
            continue;
        }
        tested += 1;
        if tube_region_contains(&r, &x) != !sweepout_leaf_find(&r, &x).is_empty() {
            disagree += 1;
        }
    }
    outcome(disagree == 0, format!("{disagree} disagreements on {tested} samples"))
}

fn disconnection() -> Outcome {
    let r = s3_region(0.3);
    let params = DisconnectionParams::default();
    let intact = region_disconnection_check(&r, None, 10_000, 60, &params).unwrap();
    let mut cut = Vec::new();
    for k in 0..8 {
        let t0 = 0.1 + k as f64 * PI / 4.0;
        cut.push(
            region_disconnection_check(&r, Some(t0), 10_000, 61 + k, &params)
                .unwrap()
                .components,
        );
    }
    outcome(
        intact.components == 1 && cut.iter().all(|&c| c == 2),
        format!("intact {} component(s), with leaf removed {cut:?}", intact.components),
    )
}

fn main_region_exclusion() -> Outcome {
    let mut rng = seeded(7);
    let (mut outside, mut total, mut worst) = (0, 0, f64::NEG_INFINITY);
    for n in [4, 5] {
        let q = n - 2;
        let pairs: Vec<(usize, usize)> = if q == 2 {
            vec![(1, 0)]
        } else {
            vec![(1, 0), (1, 2), (2, 0), (2, 1)]
        };
        for i in 0..100 {
            let rot = special_orthogonal(&mut rng, n);
            let w = GrassmannPoint::new(Frame::from_matrix(rot.columns(0, 2).into_owned()).unwrap());
            let normals = Frame::from_matrix(rot.columns(2, q).into_owned()).unwrap();
            let mut a1 = DMatrix::zeros(2, q);
            a1[(0, 0)] = 1.0;
            let x1 = kozlov_canonical(&w, &normals, a1).unwrap();
            let (b1, b2) = pairs[rng.random_range(0..pairs.len())];
            let mut a2 = DMatrix::zeros(2, q);
            a2[(0, b1)] = FRAC_1_SQRT_2;
            a2[(1, b2)] = FRAC_1_SQRT_2;
            let x2 = kozlov_canonical(&w, &normals, a2).unwrap();
            let eps = if i % 2 == 0 { 0.1 } else { 0.3 };
            let region = MainRegion::new(&x1, eps).unwrap();
            let tx = t_max(&x2);
            for t in [tx, -tx] {
                let m = region.margin(&exp_map(&x2, t)).unwrap();
                total += 1;
                worst = worst.max(m);
                if m < 0.0 {
                    outside += 1;
                }
            }
        }
    }
    outcome(
        outside == total,
        format!("{outside}/{total} outside, largest margin {worst:.3e}"),
    )
}

fn energy_calibration() -> Outcome {
    let ico = icosphere(4).unwrap();
    let e_id = dirichlet_energy(
        &ico,
        &DiscreteMap::identity(&ico).unwrap(),
        &TargetManifold::Sphere { m: 2 },
    )
    .unwrap();
    let torus = torus_grid(128, 128).unwrap();
    let e_gc = dirichlet_energy(
        &torus,
        &DiscreteMap::great_circle(&torus).unwrap(),
        &TargetManifold::Sphere { m: 2 },
    )
    .unwrap();
    let r1 = e_id / (4.0 * PI) - 1.0;
    let r2 = e_gc / (2.0 * PI * PI) - 1.0;
    outcome(
        r1.abs() < 0.02 && r2.abs() < 0.02,
        format!(
            "identity {e_id:.6} ({:+.3}%), great circle {e_gc:.6} ({:+.3}%)",
            100.0 * r1,
            100.0 * r2
        ),
    )
}

fn ruh_vilms() -> Outcome {
    let mut tensions = Vec::new();
    for n in [32, 64, 128] {
        let mesh = torus_grid(n, n).unwrap();
        let (map, target) = gauss_map_on_torus(&ImmersionKind::CliffordTorus, &mesh).unwrap();
        tensions.push(max_tension(&mesh, &map, &target).unwrap());
    }
    let ratios = [tensions[0] / tensions[1], tensions[1] / tensions[2]];
    let pass = ratios.iter().all(|r| (3.0..=5.0).contains(r)) && tensions[2] < 1e-3;
    let shown: Vec<String> = tensions.iter().map(|t| format!("{t:.3e}")).collect();
    outcome(pass, format!("max tension [{}], ratios {ratios:.3?}", shown.join(", ")))
}

fn barrier_collapse() -> Outcome {
    let mesh = torus_grid(32, 32).unwrap();
    let target = TargetManifold::Sphere { m: 2 };
    let c = GreatCircle::new(SpherePoint::basis(3, 0), e(3, 1)).unwrap();
    let region = SphereTubeRegion::new(c, 0.3).unwrap();
    let mut failures = Vec::new();
    let mut max_iters = 0;
    for seed in 0..20u64 {
        let mut rng = seeded(1000 + seed);
        let t: f64 = rng.random_range(0.0..2.0 * PI);
        let radius: f64 = rng.random_range(0.3..1.0);
        let init = DiscreteMap::random_cap(&mesh, &[t.cos(), t.sin(), 0.0], radius, &mut rng).unwrap();
        let mut cfg = FlowConfig::for_mesh(&mesh);
        cfg.seed = seed;
        cfg.mode = FlowMode::Constrained { region: region.clone() };
        let trace = run_flow(&mesh, init, &target, &cfg).unwrap();
        max_iters = max_iters.max(trace.iters);
        let ok = trace.status == FlowStatus::ConvergedConstant
            && trace.final_energy() < 1e-4 * trace.initial_energy()
            && trace.final_oscillation() < 1e-2
            && trace.iters <= 50_000;
        if !ok {
            failures.push(seed);
        }
    }
    let ico = icosphere(3).unwrap();
    let cfg = FlowConfig::for_mesh(&ico);
    let control = run_flow(&ico, DiscreteMap::identity(&ico).unwrap(), &target, &cfg).unwrap();
    let rel = control.final_energy() / (4.0 * PI) - 1.0;
    let control_ok =
        control.status == FlowStatus::ConvergedNonconstant && rel.abs() < 0.05 && control.final_oscillation() > 1.0;
    outcome(
        failures.is_empty() && control_ok,
        format!(
            "collapse failures {failures:?} (max {max_iters} iterations); control {} energy {:+.3}% oscillation {:.3}",
            control.status.as_str(),
            100.0 * rel,
            control.final_oscillation()
        ),
    )
}

fn gauss_audit() -> Outcome {
    let eps = 0.3;
    let mut notes = Vec::new();
    let mut pass = true;

    let circle = GreatCircle::new(SpherePoint::basis(4, 3), e(4, 0)).unwrap();
    let sphere_region = AuditRegion::Sphere(SphereTubeRegion::new(circle, eps).unwrap());
    let eq = ParametricImmersion::new(ImmersionKind::Equator { k: 2, m: 3 }, 16).unwrap();
    let a = gauss_image_audit(&eq, &sphere_region, true).unwrap();
    pass &= (a.min_margin - (FRAC_PI_2 - eps)).abs() < 1e-9 && a.verdict == VERDICT_MET;
    notes.push(format!("equator S2 in S3 margin {:.12}", a.min_margin));

    let eq2 = ParametricImmersion::new(ImmersionKind::Equator { k: 2, m: 4 }, 16).unwrap();
    let plane = barriers_core::gauss::normal_plane_gauss(&eq2.kind, &eq2.grid()[0]).unwrap();
    let x1 = GrassmannTangent::from_coeffs(&plane, {
        let mut a = DMatrix::zeros(2, 3);
        a[(0, 0)] = 1.0;
        a
    })
    .unwrap();
    let grass_region = AuditRegion::Grassmann(MainRegion::new(&x1, eps).unwrap());
    let a = gauss_image_audit(&eq2, &grass_region, true).unwrap();
    pass &= (a.min_margin - (FRAC_PI_2 - eps)).abs() < 1e-9 && a.verdict == VERDICT_MET;
    notes.push(format!("equator S2 in S4 margin {:.12}", a.min_margin));

    let circle = GreatCircle::new(SpherePoint::basis(4, 0), e(4, 2)).unwrap();
    let meets = AuditRegion::Sphere(SphereTubeRegion::new(circle, eps).unwrap());
    let cl = ParametricImmersion::new(ImmersionKind::CliffordTorus, 32).unwrap();
    let a = gauss_image_audit(&cl, &meets, false).unwrap();
    pass &= a.min_margin <= 0.0 && a.verdict.starts_with("hypotheses-failed");
    notes.push(format!("clifford margin {:.6}", a.min_margin));

    outcome(pass, notes.join(", "))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("kozlov canonical form", kozlov_form),
        ("t_X values", t_max_values),
        ("geodesic unit speed", unit_speed),
        ("quadric model", quadric_model),
        ("region equivalence on S3", region_equivalence),
        ("disconnection by a leaf", disconnection),
        ("main-region exclusion", main_region_exclusion),
        ("energy calibration", energy_calibration),
        ("gauss map tension order", ruh_vilms),
        ("barrier collapse", barrier_collapse),
        ("gauss audit consistency", gauss_audit),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let id = format!("criterion-{}", i + 1);
        if !filter.is_empty() && !filter.iter().any(|f| id == *f || name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let o = run();
        let status = if o.pass { "PASS" } else { "FAIL" };
        println!(
            "{id} {status} [{name}] {} ({:.1} s)",
            o.detail,
            start.elapsed().as_secs_f64()
        );
        if !o.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("acceptance: {failed} criterion/criteria failed");
        std::process::exit(1);
    }
    println!("acceptance: all criteria passed");
}
