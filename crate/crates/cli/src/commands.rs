use std::f64::consts::FRAC_1_SQRT_2;
use std::path::{Path, PathBuf};

use barriers_core::gauss::{gauss_image_audit, normal_plane_gauss, AuditRegion, ImmersionKind, ParametricImmersion};
use barriers_core::grassmann::{
    exp_map, geodesic_distance, grassmann_geodesic, kozlov_canonical, principal_angles, t_max,
};
use barriers_core::harmonic::{
    icosphere, run_flow, torus_grid, DiscreteMap, DomainMesh, FlowConfig, FlowMode, FlowSummary, FlowTrace,
    TargetManifold,
};
use barriers_core::quadric::{
    fs_distance, grassmann_to_quadric, ho_chart, ho_chart_inv, hyperplane_margins, quadric_residual,
    quadric_to_grassmann,
};
use barriers_core::sampling::{seeded, special_orthogonal, unit_vector};
use barriers_core::sphere::{
    region_disconnection_check, sweepout_leaf_find, tube_region_contains, Connectivity, DisconnectionParams,
};
use barriers_core::{Frame, GrassmannPoint, GrassmannTangent, GreatCircle, MainRegion, SpherePoint, SphereTubeRegion};
use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::{AuditKind, Domain, ExperimentConfig, GaussKind, Init, RegionMode, Target};
use crate::error::CliError;
use crate::report::{write_csv, write_json, Cell, Table};

/// Numerical tolerance for geodesic and round-trip checks.
const CHECK_TOL: f64 = 1e-8;
const ROUND_TRIP_TOL: f64 = 1e-10;

pub const THREADS_ENV: &str = "BARRIERS_THREADS";

pub struct Context {
    pub cfg: ExperimentConfig,
    pub out: PathBuf,
    pub runs: usize,
}

type Res = Result<(), CliError>;

/// `println!` that tolerates a closed stdout.
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

pub fn dispatch(module: &str, verb: &str, ctx: &Context) -> Res {
    if ctx.runs != 1 && (module, verb) != ("flow", "run") {
        return Err(CliError::usage("--runs only applies to `flow run`"));
    }
    match (module, verb) {
        ("grassmann", "geodesic") => grassmann_geodesic_cmd(ctx),
        ("grassmann", "tmax") => grassmann_tmax(ctx),
        ("grassmann", "region") => grassmann_region(ctx),
        ("sphere", "region") => sphere_region(ctx),
        ("sphere", "disconnect") => sphere_disconnect(ctx),
        ("quadric", "roundtrip") => quadric_roundtrip(ctx),
        ("quadric", "chart") => quadric_chart(ctx),
        ("flow", "run") => flow_run(ctx),
        ("gauss", "audit") => gauss_audit(ctx),
        ("grassmann" | "sphere" | "quadric" | "flow" | "gauss", _) => {
            Err(CliError::usage(format!("unknown verb `{verb}` for module `{module}`")))
        }
        _ => Err(CliError::usage(format!("unknown module `{module}`"))),
    }
}

fn basis(n: usize, i: usize) -> SpherePoint {
    SpherePoint::basis(n, i)
}

/// Tube region about the circle through `e_a` with velocity `e_b`.
fn tube(ambient: usize, a: usize, b: usize, eps: f64) -> Result<SphereTubeRegion, CliError> {
    let c = GreatCircle::new(basis(ambient, a), basis(ambient, b).into_inner())?;
    Ok(SphereTubeRegion::new(c, eps)?)
}

fn canonical_tangent(ctx: &Context) -> Result<GrassmannTangent, CliError> {
    let g = &ctx.cfg.grassmann;
    let w = GrassmannPoint::standard(g.n, g.p)?;
    let mut a = DMatrix::zeros(g.p, g.n - g.p);
    for (i, l) in g.lambda.iter().enumerate() {
        a[(i, i)] = *l;
    }
    Ok(GrassmannTangent::from_coeffs(&w, a)?)
}

fn announce(line: String, paths: &[PathBuf]) {
    let shown: Vec<String> = paths.iter().map(|p| p.display().to_string()).collect();
    say!("{line} -> {}", shown.join(", "));
}

fn grassmann_geodesic_cmd(ctx: &Context) -> Res {
    let x = canonical_tangent(ctx)?.unit();
    let tx = t_max(&x);
    let samples = ctx.cfg.grassmann.samples;
    let mut table = Table::new(&["t", "distance", "error", "theta_sum"]);
    let mut worst = 0.0f64;
    for k in 1..=samples {
        let t = tx * k as f64 / samples as f64;
        let (w, _) = grassmann_geodesic(&x, t);
        let d = geodesic_distance(x.base(), &w)?;
        let angles = principal_angles(x.base(), &w)?;
        let err = (d - t).abs();
        worst = worst.max(err);
        table.push(vec![t.into(), d.into(), err.into(), angles.top_two_sum().into()]);
    }
    let csv = write_csv(&ctx.out, "geodesic.csv", &table)?;
    let js = write_json(
        &ctx.out,
        "geodesic.json",
        &json!({
            "command": "grassmann geodesic",
            "n": ctx.cfg.grassmann.n,
            "p": ctx.cfg.grassmann.p,
            "lambda": x.lambda(),
            "t_max": tx,
            "max_error": worst,
            "rows": table.to_json(),
        }),
    )?;
    announce(
        format!("grassmann geodesic: t_max {tx:.6} max_error {worst:.3e}"),
        &[csv, js],
    );
    if worst > CHECK_TOL {
        return Err(CliError::numeric(format!(
            "geodesic speed error {worst:.3e} exceeds {CHECK_TOL:e}"
        )));
    }
    Ok(())
}

fn grassmann_tmax(ctx: &Context) -> Res {
    let x = canonical_tangent(ctx)?;
    let tx = t_max(&x);
    let js = write_json(
        &ctx.out,
        "tmax.json",
        &json!({
            "command": "grassmann tmax",
            "n": ctx.cfg.grassmann.n,
            "p": ctx.cfg.grassmann.p,
            "lambda": ctx.cfg.grassmann.lambda,
            "lambda_unit": x.unit().lambda(),
            "t_max": tx,
        }),
    )?;
    say!("t_max {tx:.6}");
    announce("grassmann tmax".into(), &[js]);
    Ok(())
}

fn grassmann_region(ctx: &Context) -> Res {
    let g = &ctx.cfg.grassmann;
    if g.p != 2 || g.n < 4 {
        return Err(CliError::usage("grassmann region needs p = 2 and n >= 4"));
    }
    let (n, q, eps) = (g.n, g.n - 2, ctx.cfg.epsilon);
    let pairs: Vec<(usize, usize)> = (1..q)
        .flat_map(|b1| (0..q).filter(move |&b2| b2 != b1).map(move |b2| (b1, b2)))
        .collect();
    let mut rng = seeded(ctx.cfg.seed);
    let mut table = Table::new(&["config", "b1", "b2", "t", "margin", "s_min", "s_max"]);
    let mut inside = Vec::new();
    let mut worst = f64::NEG_INFINITY;
    for i in 0..g.configs {
        let rot = special_orthogonal(&mut rng, n);
        let w = GrassmannPoint::new(Frame::from_matrix(rot.columns(0, 2).into_owned())?);
        let normals = Frame::from_matrix(rot.columns(2, q).into_owned())?;
        let mut a1 = DMatrix::zeros(2, q);
        a1[(0, 0)] = 1.0;
        let x1 = kozlov_canonical(&w, &normals, a1)?;
        let (b1, b2) = pairs[rng.random_range(0..pairs.len())];
        let mut a2 = DMatrix::zeros(2, q);
        a2[(0, b1)] = FRAC_1_SQRT_2;
        a2[(1, b2)] = FRAC_1_SQRT_2;
        let x2 = kozlov_canonical(&w, &normals, a2)?;
        let region = MainRegion::new(&x1, eps)?;
        let tx = t_max(&x2);
        for t in [tx, -tx] {
            let w2 = exp_map(&x2, t);
            let r = region.sweep_range(&w2)?;
            let m = region.margin(&w2)?;
            worst = worst.max(m);
            if m >= 0.0 {
                inside.push(json!({ "config": i, "t": t, "margin": m }));
            }
            table.push(vec![
                i.into(),
                (b1 + 1).into(),
                (b2 + 1).into(),
                t.into(),
                m.into(),
                r.s_min.into(),
                r.s_max.into(),
            ]);
        }
    }
    let csv = write_csv(&ctx.out, "region.csv", &table)?;
    let js = write_json(
        &ctx.out,
        "region.json",
        &json!({
            "command": "grassmann region",
            "n": n,
            "epsilon": eps,
            "configs": g.configs,
            "checked": table.rows.len(),
            "largest_margin": if table.rows.is_empty() { None } else { Some(worst) },
            "inside": inside,
        }),
    )?;
    announce(
        format!(
            "grassmann region: {}/{} endpoints outside",
            table.rows.len() - inside.len(),
            table.rows.len()
        ),
        &[csv, js],
    );
    if !inside.is_empty() {
        return Err(CliError::numeric(format!(
            "{} endpoint(s) inside the region",
            inside.len()
        )));
    }
    Ok(())
}

fn sphere_tube(ctx: &Context) -> Result<SphereTubeRegion, CliError> {
    tube(ctx.cfg.sphere.m + 1, 0, 1, ctx.cfg.epsilon)
}

fn sphere_region(ctx: &Context) -> Res {
    let r = sphere_tube(ctx)?;
    let ambient = r.ambient_dim();
    let mut rng = seeded(ctx.cfg.seed);
    let points: Vec<SpherePoint> = (0..ctx.cfg.sphere.samples)
        .map(|_| SpherePoint::new(unit_vector(&mut rng, ambient)))
        .collect::<Result<_, _>>()?;
    let rows: Vec<(f64, bool, usize)> = points
        .par_iter()
        .map(|x| {
            (
                r.signed_margin(x),
                tube_region_contains(&r, x),
                sweepout_leaf_find(&r, x).len(),
            )
        })
        .collect();
    let mut table = Table::new(&["index", "margin", "closed_form", "leaves"]);
    let mut disagreements = Vec::new();
    let mut banded = 0;
    for (i, &(m, closed, leaves)) in rows.iter().enumerate() {
        table.push(vec![i.into(), m.into(), usize::from(closed).into(), leaves.into()]);
        if m.abs() < 1e-6 {
            banded += 1;
        } else if closed != (leaves > 0) {
            disagreements.push(i);
        }
    }
    let csv = write_csv(&ctx.out, "sphere_region.csv", &table)?;
    let js = write_json(
        &ctx.out,
        "sphere_region.json",
        &json!({
            "command": "sphere region",
            "m": ctx.cfg.sphere.m,
            "epsilon": ctx.cfg.epsilon,
            "samples": rows.len(),
            "near_boundary": banded,
            "disagreements": disagreements,
        }),
    )?;
    announce(
        format!(
            "sphere region: {} disagreement(s) on {} samples",
            disagreements.len(),
            rows.len() - banded
        ),
        &[csv, js],
    );
    if !disagreements.is_empty() {
        return Err(CliError::numeric(format!(
            "{} closed-form/leaf disagreement(s)",
            disagreements.len()
        )));
    }
    Ok(())
}

fn connectivity_json(c: &Connectivity) -> serde_json::Value {
    json!({
        "components": c.components,
        "component_sizes": c.component_sizes,
        "fragments": c.fragments,
        "kept": c.kept,
        "draws": c.draws,
        "cutoff": c.cutoff,
    })
}

fn sphere_disconnect(ctx: &Context) -> Res {
    let r = sphere_tube(ctx)?;
    let s = &ctx.cfg.sphere;
    let params = DisconnectionParams::default();
    let intact = region_disconnection_check(&r, None, s.samples, ctx.cfg.seed, &params)?;
    let cut = region_disconnection_check(&r, Some(s.leaf), s.samples, ctx.cfg.seed.wrapping_add(1), &params)?;
    let js = write_json(
        &ctx.out,
        "disconnect.json",
        &json!({
            "command": "sphere disconnect",
            "m": s.m,
            "epsilon": ctx.cfg.epsilon,
            "leaf": s.leaf,
            "samples": s.samples,
            "intact": connectivity_json(&intact),
            "cut": connectivity_json(&cut),
        }),
    )?;
    say!("components {} (intact {})", cut.components, intact.components);
    announce("sphere disconnect".into(), &[js]);
    if intact.components != 1 || cut.components != 2 {
        return Err(CliError::numeric(format!(
            "expected 1 intact and 2 cut components, found {} and {}",
            intact.components, cut.components
        )));
    }
    Ok(())
}

fn random_plane(rng: &mut barriers_core::sampling::SeededRng, n: usize) -> Result<GrassmannPoint, CliError> {
    let q = special_orthogonal(rng, n);
    Ok(GrassmannPoint::new(Frame::from_matrix(q.columns(0, 2).into_owned())?))
}

fn quadric_roundtrip(ctx: &Context) -> Res {
    let n = ctx.cfg.quadric.n;
    let mut rng = seeded(ctx.cfg.seed);
    let mut table = Table::new(&[
        "index",
        "residual",
        "frame_error",
        "chart_error",
        "margin_h",
        "margin_h_bar",
    ]);
    let mut failures = Vec::new();
    let (mut res, mut frame, mut chart) = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..ctx.cfg.quadric.samples {
        let w = random_plane(&mut rng, n)?;
        let q = grassmann_to_quadric(&w)?;
        let r = quadric_residual(q.coords());
        let f = w.plucker().max_abs_diff(quadric_to_grassmann(&q)?.plucker());
        let c = fs_distance(q.projective(), ho_chart_inv(&ho_chart(&q)?)?.projective())?;
        let (mh, mhb) = hyperplane_margins(&q);
        res = res.max(r);
        frame = frame.max(f);
        chart = chart.max(c);
        if r.max(f).max(c) > ROUND_TRIP_TOL {
            failures.push(i);
        }
        table.push(vec![i.into(), r.into(), f.into(), c.into(), mh.into(), mhb.into()]);
    }
    let csv = write_csv(&ctx.out, "roundtrip.csv", &table)?;
    let js = write_json(
        &ctx.out,
        "roundtrip.json",
        &json!({
            "command": "quadric roundtrip",
            "n": n,
            "samples": table.rows.len(),
            "max_residual": res,
            "max_frame_error": frame,
            "max_chart_error": chart,
            "failures": failures,
        }),
    )?;
    announce(
        format!("quadric roundtrip: residual {res:.2e} frame {frame:.2e} chart {chart:.2e}"),
        &[csv, js],
    );
    if !failures.is_empty() {
        return Err(CliError::numeric(format!(
            "{} round trip(s) above {ROUND_TRIP_TOL:e}",
            failures.len()
        )));
    }
    Ok(())
}

fn quadric_chart(ctx: &Context) -> Res {
    let n = ctx.cfg.quadric.n;
    let mut rng = seeded(ctx.cfg.seed);
    let mut header = vec!["index".to_string(), "margin_h".to_string()];
    for j in 1..=n - 2 {
        header.push(format!("xi{j}_re"));
        header.push(format!("xi{j}_im"));
    }
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut table = Table::new(&header_refs);
    for i in 0..ctx.cfg.quadric.samples {
        let q = grassmann_to_quadric(&random_plane(&mut rng, n)?)?;
        let xi = ho_chart(&q)?;
        let mut row: Vec<Cell> = vec![i.into(), hyperplane_margins(&q).0.into()];
        for c in &xi.xi {
            row.push(c.re.into());
            row.push(c.im.into());
        }
        table.push(row);
    }
    let csv = write_csv(&ctx.out, "chart.csv", &table)?;
    let js = write_json(
        &ctx.out,
        "chart.json",
        &json!({ "command": "quadric chart", "n": n, "rows": table.to_json() }),
    )?;
    announce(format!("quadric chart: {} point(s)", table.rows.len()), &[csv, js]);
    Ok(())
}

#[derive(Serialize)]
struct RunSummary {
    seed: u64,
    #[serde(flatten)]
    summary: FlowSummary,
}

fn flow_setup(ctx: &Context) -> Result<(DomainMesh, TargetManifold, FlowMode), CliError> {
    let f = &ctx.cfg.flow;
    let mesh = match f.domain {
        Domain::TorusGrid => torus_grid(f.nu, f.nv)?,
        Domain::Icosphere => icosphere(f.level)?,
    };
    let target = match f.target {
        Target::Sphere => TargetManifold::Sphere { m: f.m },
        Target::SphereProduct => TargetManifold::SphereProduct {
            m1: f.m1,
            m2: f.m2,
            scale: f.scale,
        },
        Target::Grassmann24 => TargetManifold::Grassmann24,
    };
    target.validate()?;
    let mode = match f.region {
        RegionMode::None => FlowMode::Free { watch: None },
        RegionMode::Watch => FlowMode::Free {
            watch: Some(tube(f.m + 1, 0, 1, ctx.cfg.epsilon)?),
        },
        RegionMode::Constrained => FlowMode::Constrained {
            region: tube(f.m + 1, 0, 1, ctx.cfg.epsilon)?,
        },
    };
    Ok((mesh, target, mode))
}

fn flow_once(
    ctx: &Context,
    mesh: &DomainMesh,
    target: &TargetManifold,
    mode: &FlowMode,
    seed: u64,
) -> Result<FlowTrace, CliError> {
    let f = &ctx.cfg.flow;
    let mut rng = seeded(seed);
    let init = match f.init {
        Init::Cap => {
            let TargetManifold::Sphere { m } = *target else {
                return Err(CliError::usage("flow.init = \"cap\" needs target = \"sphere\""));
            };
            DiscreteMap::random_cap(mesh, basis(m + 1, 0).coords().as_slice(), f.cap_radius, &mut rng)?
        }
        Init::Identity => DiscreteMap::identity(mesh)?,
        Init::GreatCircle => DiscreteMap::great_circle(mesh)?,
        Init::Random => {
            let values = (0..mesh.len()).map(|_| target.random_point(&mut rng)).collect();
            DiscreteMap::new(target, values)?
        }
    };
    let cfg = FlowConfig {
        step: f.step(),
        max_iters: f.max_iters,
        tension_tol: f.tension_tol,
        oscillation_tol: f.oscillation_tol,
        mode: mode.clone(),
        seed,
        trace_every: f.trace_every,
    };
    Ok(run_flow(mesh, init, target, &cfg)?)
}

fn thread_cap() -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(CliError::usage(format!(
                "{THREADS_ENV} must be a positive integer, got `{v}`"
            ))),
        },
    }
}

fn write_run(dir: &Path, seed: u64, trace: &FlowTrace) -> Result<Vec<PathBuf>, CliError> {
    let mut table = Table::new(&["iter", "energy", "max_tension", "oscillation", "step"]);
    for r in &trace.rows {
        table.push(vec![
            r.iter.into(),
            r.energy.into(),
            r.max_tension.into(),
            r.oscillation.into(),
            r.step.into(),
        ]);
    }
    let mut events = Table::new(&["vertex", "iter", "depth"]);
    for e in &trace.barrier_events {
        events.push(vec![e.vertex.into(), e.iter.into(), e.depth.into()]);
    }
    Ok(vec![
        write_csv(dir, "trace.csv", &table)?,
        write_csv(dir, "events.csv", &events)?,
        write_json(
            dir,
            "summary.json",
            &RunSummary {
                seed,
                summary: trace.summary(),
            },
        )?,
    ])
}

fn flow_run(ctx: &Context) -> Res {
    let (mesh, target, mode) = flow_setup(ctx)?;
    let runs = ctx.runs;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_cap()? {
        builder = builder.num_threads(n.min(runs));
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::numeric(format!("thread pool: {e}")))?;
    let seeds: Vec<u64> = (0..runs as u64).map(|i| ctx.cfg.seed.wrapping_add(i)).collect();
    let traces: Vec<Result<FlowTrace, CliError>> = pool.install(|| {
        seeds
            .par_iter()
            .map(|&s| flow_once(ctx, &mesh, &target, &mode, s))
            .collect()
    });
    let mut written = Vec::new();
    for (i, (seed, trace)) in seeds.iter().zip(traces).enumerate() {
        let trace = trace?;
        let dir = if runs == 1 {
            ctx.out.clone()
        } else {
            ctx.out.join(format!("run-{i:03}"))
        };
        written.extend(write_run(&dir, *seed, &trace)?);
        say!(
            "flow run seed {seed}: {} after {} iterations, energy {:.6e} -> {:.6e}, {} barrier event(s)",
            trace.status.as_str(),
            trace.iters,
            trace.initial_energy(),
            trace.final_energy(),
            trace.barrier_events.len()
        );
    }
    announce(format!("flow run: {runs} run(s)"), &written);
    Ok(())
}

fn immersion(ctx: &Context) -> ImmersionKind {
    let g = &ctx.cfg.gauss;
    let base = match g.kind {
        GaussKind::Equator => ImmersionKind::Equator { k: g.k, m: g.m },
        GaussKind::CliffordTorus => ImmersionKind::CliffordTorus,
        GaussKind::GeneralizedClifford => ImmersionKind::GeneralizedClifford { p: g.p, q: g.q },
        GaussKind::LatitudeSphere => ImmersionKind::LatitudeSphere {
            k: g.k,
            radius: g.radius,
        },
    };
    if g.extra > 0 {
        ImmersionKind::Included {
            inner: Box::new(base),
            extra: g.extra,
        }
    } else {
        base
    }
}

fn gauss_audit(ctx: &Context) -> Res {
    let g = &ctx.cfg.gauss;
    let imm = ParametricImmersion::new(immersion(ctx), g.resolution)?;
    let ambient = imm.kind.ambient_dim();
    let region = match g.region {
        AuditKind::Sphere => {
            let [a, b] = g.axes;
            if a > ambient || b > ambient {
                return Err(CliError::usage(format!("gauss.axes must lie in 1..={ambient}")));
            }
            AuditRegion::Sphere(tube(ambient, a - 1, b - 1, ctx.cfg.epsilon)?)
        }
        AuditKind::Grassmann => {
            let plane = normal_plane_gauss(&imm.kind, &imm.grid()[0])?;
            let mut a = DMatrix::zeros(plane.p(), plane.n() - plane.p());
            a[(0, 0)] = 1.0;
            let x1 = GrassmannTangent::from_coeffs(&plane, a)?;
            AuditRegion::Grassmann(MainRegion::new(&x1, ctx.cfg.epsilon)?)
        }
    };
    let audit = gauss_image_audit(&imm, &region, g.h1_zero)?;
    let js = write_json(&ctx.out, "audit.json", &audit)?;
    announce(
        format!(
            "gauss audit: min_margin {:.6e} verdict {}",
            audit.min_margin, audit.verdict
        ),
        &[js],
    );
    Ok(())
}
