//! Dirichlet energy, tension field and the projected gradient flow.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::sampling::seeded;
use crate::sphere::{SpherePoint, SphereTubeRegion};

use super::mesh::{DomainMesh, MeshSpec};
use super::target::{DiscreteMap, TargetManifold};

/// Smallest step before a flow is declared stalled.
pub const MIN_STEP: f64 = 1e-8;

/// Above this many vertices the oscillation is estimated from random pairs.
pub const ALL_PAIRS_LIMIT: usize = 2000;

/// Number of random pairs used for large maps.
pub const SAMPLED_PAIRS: usize = 1_000_000;

fn check(mesh: &DomainMesh, map: &DiscreteMap, target: &TargetManifold) -> Result<()> {
    if map.len() != mesh.len() {
        return invalid(format!("map has {} values for {} vertices", map.len(), mesh.len()));
    }
    if map.dim() != target.ambient_dim() {
        return invalid("map values do not match the target dimension");
    }
    Ok(())
}

/// Chordal energy `½ Σ_e w_e |φ(a) − φ(b)|²`.
pub fn dirichlet_energy(mesh: &DomainMesh, map: &DiscreteMap, target: &TargetManifold) -> Result<f64> {
    check(mesh, map, target)?;
    Ok(energy(mesh, map))
}

fn energy(mesh: &DomainMesh, map: &DiscreteMap) -> f64 {
    0.5 * mesh
        .edges()
        .iter()
        .map(|&(a, b, w)| {
            let d2: f64 = map
                .value(a)
                .iter()
                .zip(map.value(b))
                .map(|(x, y)| (x - y) * (x - y))
                .sum();
            w * d2
        })
        .sum::<f64>()
}

/// Exact change of the chordal energy between two maps, summed edgewise so
/// that tiny updates are not lost to cancellation.
fn energy_change(mesh: &DomainMesh, old: &DiscreteMap, new: &DiscreteMap) -> f64 {
    0.5 * mesh
        .edges()
        .iter()
        .map(|&(a, b, w)| {
            let (oa, ob, na, nb) = (old.value(a), old.value(b), new.value(a), new.value(b));
            let mut acc = 0.0;
            for k in 0..oa.len() {
                let d_old = oa[k] - ob[k];
                let d_new = na[k] - nb[k];
                acc += (d_new - d_old) * (d_new + d_old);
            }
            w * acc
        })
        .sum::<f64>()
}

fn laplacian_at(mesh: &DomainMesh, map: &DiscreteMap, v: usize, out: &mut [f64]) {
    out.iter_mut().for_each(|c| *c = 0.0);
    let x = map.value(v);
    for &(u, w) in mesh.neighbors(v) {
        for (o, (y, xv)) in out.iter_mut().zip(map.value(u).iter().zip(x)) {
            *o += w * (y - xv);
        }
    }
    let m = mesh.masses()[v];
    out.iter_mut().for_each(|c| *c /= m);
}

/// Mass-normalised Laplacian at `vertex`, projected to the tangent space at `φ(vertex)`.
pub fn discrete_tension(
    mesh: &DomainMesh,
    map: &DiscreteMap,
    target: &TargetManifold,
    vertex: usize,
) -> Result<Vec<f64>> {
    check(mesh, map, target)?;
    if vertex >= mesh.len() {
        return invalid(format!("vertex {vertex} out of range"));
    }
    let mut out = vec![0.0; map.dim()];
    laplacian_at(mesh, map, vertex, &mut out);
    target.tangent_project(map.value(vertex), &mut out);
    Ok(out)
}

/// Tension at every vertex, flattened.
fn tension_field(mesh: &DomainMesh, map: &DiscreteMap, target: &TargetManifold) -> Vec<f64> {
    let dim = map.dim();
    let mut out = vec![0.0; map.data().len()];
    out.par_chunks_mut(dim).enumerate().for_each(|(v, t)| {
        laplacian_at(mesh, map, v, t);
        target.tangent_project(map.value(v), t);
    });
    out
}

fn max_norm(field: &[f64], dim: usize) -> f64 {
    field
        .chunks_exact(dim)
        .map(|t| t.iter().map(|c| c * c).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
}

/// Largest tension norm over all vertices.
pub fn max_tension(mesh: &DomainMesh, map: &DiscreteMap, target: &TargetManifold) -> Result<f64> {
    check(mesh, map, target)?;
    Ok(max_norm(&tension_field(mesh, map, target), map.dim()))
}

/// Largest pairwise target distance; all pairs below [`ALL_PAIRS_LIMIT`]
/// vertices, otherwise [`SAMPLED_PAIRS`] seeded random pairs.
pub fn oscillation(map: &DiscreteMap, target: &TargetManifold, seed: u64) -> f64 {
    let n = map.len();
    if n < 2 {
        return 0.0;
    }
    if n <= ALL_PAIRS_LIMIT {
        return (0..n)
            .into_par_iter()
            .map(|i| {
                (i + 1..n)
                    .map(|j| target.distance(map.value(i), map.value(j)))
                    .fold(0.0, f64::max)
            })
            .reduce(|| 0.0, f64::max);
    }
    let mut rng = seeded(seed);
    let pairs: Vec<(usize, usize)> = (0..SAMPLED_PAIRS)
        .map(|_| (rng.random_range(0..n), rng.random_range(0..n)))
        .collect();
    pairs
        .par_iter()
        .map(|&(i, j)| target.distance(map.value(i), map.value(j)))
        .reduce(|| 0.0, f64::max)
}

/// Pushes `x` out of the `ε`-thickening of the barrier onto its boundary.
///
/// A point on the barrier itself has no preferred direction; the seed picks one
/// in the plane of the circle.
pub fn retract_into_region(x: &SpherePoint, r: &SphereTubeRegion, seed: u64) -> SpherePoint {
    let mut v: Vec<f64> = x.coords().iter().copied().collect();
    retract_slice(&mut v, r, seed);
    SpherePoint::new(nalgebra::DVector::from_vec(v)).expect("retraction keeps unit norm")
}

/// In-place retraction; returns the penetration depth `ε − d` when it moved the point.
fn retract_slice(x: &mut [f64], r: &SphereTubeRegion, seed: u64) -> Option<f64> {
    let z0 = r.circle().base().coords();
    let z1 = r.circle().direction();
    let (c0, c1) = (dot(x, z0.as_slice()), dot(x, z1.as_slice()));
    let p_norm = c0.hypot(c1);
    let mut q: Vec<f64> = x
        .iter()
        .enumerate()
        .map(|(k, xk)| xk - c0 * z0[k] - c1 * z1[k])
        .collect();
    let q_norm = q.iter().map(|c| c * c).sum::<f64>().sqrt();
    let eps = r.epsilon();
    let d = p_norm.atan2(q_norm);
    if d >= eps - 1e-12 {
        return None;
    }
    let (a0, a1) = if p_norm < 1e-12 {
        let theta = seeded(seed).random_range(0.0..std::f64::consts::TAU);
        (theta.cos(), theta.sin())
    } else {
        (c0 / p_norm, c1 / p_norm)
    };
    q.iter_mut().for_each(|c| *c /= q_norm);
    let (s, c) = eps.sin_cos();
    for k in 0..x.len() {
        x[k] = s * (a0 * z0[k] + a1 * z1[k]) + c * q[k];
    }
    Some(eps - d)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// How the flow treats a barrier region.
#[derive(Debug, Clone, PartialEq)]
pub enum FlowMode {
    /// Unconstrained; vertices entering the thickening of `watch` are logged.
    Free { watch: Option<SphereTubeRegion> },
    /// Every accepted iterate is retracted into the region.
    Constrained { region: SphereTubeRegion },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowConfig {
    pub step: f64,
    pub max_iters: usize,
    pub tension_tol: f64,
    pub oscillation_tol: f64,
    pub mode: FlowMode,
    pub seed: u64,
    /// A trace row is written every `trace_every` iterations, and at the end.
    pub trace_every: usize,
}

impl FlowConfig {
    /// Defaults for a mesh: step 0.2 on torus grids, 0.1 on icospheres.
    pub fn for_mesh(mesh: &DomainMesh) -> Self {
        let step = match mesh.spec() {
            MeshSpec::TorusGrid { .. } => 0.2,
            MeshSpec::Icosphere { .. } => 0.1,
        };
        Self {
            step,
            max_iters: 50_000,
            tension_tol: 1e-6,
            oscillation_tol: 1e-2,
            mode: FlowMode::Free { watch: None },
            seed: 42,
            trace_every: 100,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return invalid(format!("step {} must be positive", self.step));
        }
        if !(self.tension_tol > 0.0) || !(self.oscillation_tol > 0.0) {
            return invalid("tolerances must be positive");
        }
        if self.trace_every == 0 {
            return invalid("trace_every must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FlowStatus {
    ConvergedConstant,
    ConvergedNonconstant,
    MaxIters,
    Stalled,
}

impl FlowStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            FlowStatus::ConvergedConstant => "converged-constant",
            FlowStatus::ConvergedNonconstant => "converged-nonconstant",
            FlowStatus::MaxIters => "max-iters",
            FlowStatus::Stalled => "stalled",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    pub energy: f64,
    pub max_tension: f64,
    pub oscillation: f64,
    pub step: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarrierEvent {
    pub vertex: usize,
    pub iter: usize,
    pub depth: f64,
}

/// Result of [`run_flow`].
#[derive(Debug, Clone, PartialEq)]
pub struct FlowTrace {
    pub rows: Vec<TraceRow>,
    /// Energy after every accepted step, starting with the initial energy.
    pub energies: Vec<f64>,
    pub barrier_events: Vec<BarrierEvent>,
    pub status: FlowStatus,
    pub iters: usize,
    pub final_map: DiscreteMap,
}

impl FlowTrace {
    pub fn initial_energy(&self) -> f64 {
        self.energies[0]
    }

    pub fn final_energy(&self) -> f64 {
        *self.energies.last().expect("non-empty")
    }

    pub fn final_oscillation(&self) -> f64 {
        self.rows.last().expect("non-empty").oscillation
    }

    pub fn summary(&self) -> FlowSummary {
        FlowSummary {
            status: self.status,
            iters: self.iters,
            final_energy: self.final_energy(),
            initial_energy: self.initial_energy(),
            final_oscillation: self.final_oscillation(),
            barrier_events: self.barrier_events.len(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowSummary {
    pub status: FlowStatus,
    pub iters: usize,
    pub final_energy: f64,
    pub initial_energy: f64,
    pub final_oscillation: f64,
    pub barrier_events: usize,
}

/// Mutable state of a running flow.
#[derive(Debug, Clone)]
pub struct FlowState {
    pub map: DiscreteMap,
    pub energy: f64,
    pub step: f64,
    pub iter: usize,
}

impl FlowState {
    pub fn new(mesh: &DomainMesh, map: DiscreteMap, target: &TargetManifold, step: f64) -> Result<Self> {
        let energy = dirichlet_energy(mesh, &map, target)?;
        Ok(Self {
            map,
            energy,
            step,
            iter: 0,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepOutcome {
    Accepted,
    Stalled,
}

fn region_for(mode: &FlowMode) -> Option<&SphereTubeRegion> {
    match mode {
        FlowMode::Free { watch } => watch.as_ref(),
        FlowMode::Constrained { region } => Some(region),
    }
}

/// One Jacobi step `φ_i ← π(φ_i + s·(m_i/d_i)·τ_i)` with `d_i` the weighted degree,
/// then retraction in constrained mode. Steps that raise the energy are
/// rejected and the step size halved.
pub fn flow_step(
    mesh: &DomainMesh,
    target: &TargetManifold,
    state: &mut FlowState,
    config: &FlowConfig,
    events: &mut Vec<BarrierEvent>,
) -> Result<StepOutcome> {
    let dim = state.map.dim();
    let tension = tension_field(mesh, &state.map, target);
    let scale: Vec<f64> = (0..mesh.len()).map(|v| mesh.masses()[v] / mesh.degree(v)).collect();
    let iter = state.iter + 1;
    loop {
        let s = state.step;
        let mut next = state.map.data().to_vec();
        let moved: Vec<Option<f64>> = next
            .par_chunks_mut(dim)
            .enumerate()
            .map(|(v, x)| {
                let t = &tension[v * dim..(v + 1) * dim];
                x.iter_mut().zip(t).for_each(|(xk, tk)| *xk += s * scale[v] * tk);
                target.project(x).expect("a tangent step cannot reach the origin");
                match &config.mode {
                    FlowMode::Constrained { region } => retract_slice(x, region, config.seed.wrapping_add(v as u64)),
                    FlowMode::Free { watch: Some(region) } => {
                        let m = region.signed_margin(
                            &SpherePoint::new(nalgebra::DVector::from_column_slice(x)).expect("projected"),
                        );
                        (m < -1e-12).then_some(-m)
                    }
                    FlowMode::Free { watch: None } => None,
                }
            })
            .collect();
        let next = DiscreteMap::from_flat(dim, next);
        let delta = energy_change(mesh, &state.map, &next);
        if delta <= 0.0 {
            state.map = next;
            state.energy += delta;
            state.iter = iter;
            events.extend(
                moved
                    .into_iter()
                    .enumerate()
                    .filter_map(|(vertex, d)| d.map(|depth| BarrierEvent { vertex, iter, depth })),
            );
            return Ok(StepOutcome::Accepted);
        }
        state.step *= 0.5;
        if state.step < MIN_STEP {
            return Ok(StepOutcome::Stalled);
        }
    }
}

/// Runs the flow until the tension drops below `tension_tol`, the step stalls
/// or `max_iters` is reached. The terminal status is converged-constant
/// whenever the final oscillation is below `oscillation_tol`.
pub fn run_flow(
    mesh: &DomainMesh,
    init: DiscreteMap,
    target: &TargetManifold,
    config: &FlowConfig,
) -> Result<FlowTrace> {
    config.validate()?;
    target.validate()?;
    if let Some(region) = region_for(&config.mode) {
        let TargetManifold::Sphere { m } = *target else {
            return invalid("barrier regions need a sphere target");
        };
        if region.ambient_dim() != m + 1 {
            return invalid("region and target dimensions differ");
        }
        if let FlowMode::Constrained { region } = &config.mode {
            for (v, x) in init.values().enumerate() {
                let p = SpherePoint::new(nalgebra::DVector::from_column_slice(x))?;
                if region.signed_margin(&p) < -1e-12 {
                    return invalid(format!("initial value at vertex {v} lies outside the region"));
                }
            }
        }
    }
    let mut state = FlowState::new(mesh, init, target, config.step)?;
    let mut energies = vec![state.energy];
    let mut rows = Vec::new();
    let mut events = Vec::new();
    let row = |state: &FlowState, max_t: f64| TraceRow {
        iter: state.iter,
        energy: state.energy,
        max_tension: max_t,
        oscillation: oscillation(&state.map, target, config.seed),
        step: state.step,
    };

    let status = loop {
        let max_t = max_tension(mesh, &state.map, target)?;
        let done = max_t < config.tension_tol;
        let at_limit = state.iter >= config.max_iters;
        if done || at_limit {
            let r = row(&state, max_t);
            rows.push(r);
            break if r.oscillation < config.oscillation_tol {
                FlowStatus::ConvergedConstant
            } else if done {
                FlowStatus::ConvergedNonconstant
            } else {
                FlowStatus::MaxIters
            };
        }
        if state.iter % config.trace_every == 0 {
            rows.push(row(&state, max_t));
        }
        match flow_step(mesh, target, &mut state, config, &mut events)? {
            StepOutcome::Accepted => energies.push(state.energy),
            StepOutcome::Stalled => {
                let r = row(&state, max_t);
                rows.push(r);
                break if r.oscillation < config.oscillation_tol {
                    FlowStatus::ConvergedConstant
                } else {
                    FlowStatus::Stalled
                };
            }
        }
    };
    Ok(FlowTrace {
        rows,
        energies,
        barrier_events: events,
        status,
        iters: state.iter,
        final_map: state.map,
    })
}
