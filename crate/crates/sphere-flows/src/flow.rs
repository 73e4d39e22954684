//! Integration of the flow on the sphere.
//!
//! Real time uses the regularized field, reparametrized so that the speed
//! equals a smooth distance `D(x)` to the singular points of the active
//! chart. Orbits then approach hyperbolic equilibria at unit exponential
//! rate regardless of how small the local scale is. The original time of
//! the complex ODE is carried along as `dτ/ds = D/|f|`.
//!
//! Complex-ray time `t e^{iθ}` integrates the holomorphic field itself.

use crate::field::{Chart, EquilibriumKind, EquilibriumRecord, RationalField, SpherePoint};
use crate::field::{CHART_ENTER, CHART_EXIT};
use crate::poly::C64;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("start point lies on the equilibrium {0}")]
    StartAtEquilibrium(usize),
    #[error("step size underflow at {0:?}")]
    StepUnderflow(SpherePoint),
    #[error("orbit leaves the existence domain near pole {0}")]
    ExistenceDomain(usize),
    #[error("subset J must be a nonempty proper subset of the zeros")]
    BadSubset,
    #[error(transparent)]
    Field(#[from] crate::field::FieldError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    /// Local error per step relative to the distance `D(x)`.
    pub rel_tol: f64,
    pub max_steps: usize,
    /// Convergence radius relative to the local scale of the target.
    pub conv_radius: f64,
    /// Accepted steps of monotone contraction required for convergence.
    pub contraction_steps: usize,
    /// Poincaré closure tolerance relative to the local scale at the seed.
    pub closure_tol: f64,
    /// Relative distance at which a passing orbit is reported at a saddle.
    pub saddle_clearance: f64,
    /// Relative distance to a pole that stops original-time integration.
    pub pole_clearance: f64,
    pub h_init: f64,
    pub h_max: f64,
    pub detect_periodic: bool,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            rel_tol: 1e-10,
            max_steps: 200_000,
            conv_radius: 1e-6,
            contraction_steps: 10,
            closure_tol: 1e-6,
            saddle_clearance: 1e-4,
            pole_clearance: 1e-2,
            h_init: 1e-2,
            h_max: 0.5,
            detect_periodic: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    ConvergedTo { equilibrium: usize },
    ReachedSaddle { pole: usize },
    Periodic { period: f64 },
    /// Original-time integration came within clearance of a pole.
    PoleApproach { pole: usize },
    /// The requested time span was covered.
    Completed,
    BudgetExhausted,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sample {
    /// Integration parameter: rescaled time for the regularized flow,
    /// original time along the ray otherwise.
    pub t: f64,
    pub point: SpherePoint,
    /// Accumulated original real time.
    pub tau: f64,
}

impl Serialize for Sample {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let chart = match self.point.chart {
            Chart::W => "w",
            Chart::Z => "z",
        };
        (self.t, [self.point.value.re, self.point.value.im], chart).serialize(s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub time_direction: C64,
    #[serde(flatten)]
    pub verdict: Verdict,
    /// Original time elapsed along the traced piece.
    pub original_time: f64,
}

impl Trajectory {
    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trajectories are never empty")
    }
}

/// Which vector field is integrated.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TimeMode {
    /// Regularized real-time flow, forward or backward.
    Regularized { backward: bool },
    /// Holomorphic flow `x' = e^{iθ} f(x)` in original time.
    Original { theta: f64 },
}

#[derive(Clone, Debug)]
struct ChartPoint {
    coord: C64,
    id: usize,
    scale: f64,
}

/// Integrator bound to one field and one time mode.
pub struct Integrator<'a> {
    field: &'a RationalField,
    records: Vec<EquilibriumRecord>,
    points: [Vec<ChartPoint>; 2],
    mode: TimeMode,
    pub cfg: IntegratorConfig,
}

fn chart_index(c: Chart) -> usize {
    match c {
        Chart::W => 0,
        Chart::Z => 1,
    }
}

// Dormand–Prince 5(4) tableau.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Result of one embedded step.
#[derive(Clone, Copy, Debug)]
pub struct StepResult {
    pub x: C64,
    pub dtau: f64,
    pub err: f64,
}

impl<'a> Integrator<'a> {
    pub fn new(field: &'a RationalField, mode: TimeMode, cfg: IntegratorConfig) -> Self {
        let records = field.classify();
        let mut points: [Vec<ChartPoint>; 2] = [Vec::new(), Vec::new()];
        for chart in [Chart::W, Chart::Z] {
            let coords: Vec<(C64, usize)> = records
                .iter()
                .filter_map(|r| r.location.coord(chart).map(|c| (c, r.id)))
                .collect();
            for &(coord, id) in &coords {
                let scale = coords
                    .iter()
                    .filter(|(_, j)| *j != id)
                    .map(|(c, _)| (c - coord).norm())
                    .fold(f64::INFINITY, f64::min);
                let scale = if scale.is_finite() { scale } else { 1.0 };
                points[chart_index(chart)].push(ChartPoint { coord, id, scale });
            }
        }
        Integrator {
            field,
            records,
            points,
            mode,
            cfg,
        }
    }

    pub fn records(&self) -> &[EquilibriumRecord] {
        &self.records
    }

    pub fn field(&self) -> &RationalField {
        self.field
    }

    pub fn mode(&self) -> TimeMode {
        self.mode
    }

    /// Distance to a singular point relative to that point's local scale,
    /// for the nearest one.
    fn nearest(&self, chart: Chart, x: C64) -> Option<(usize, f64, f64)> {
        self.points[chart_index(chart)]
            .iter()
            .map(|p| (p.id, (x - p.coord).norm(), p.scale))
            .min_by(|a, b| (a.1 / a.2).total_cmp(&(b.1 / b.2)))
    }

    /// Smooth distance `(Σ |x - p|^-2)^(-1/2)` to the singular points.
    pub fn local_distance(&self, chart: Chart, x: C64) -> f64 {
        let s: f64 = self.points[chart_index(chart)]
            .iter()
            .map(|p| (x - p.coord).norm_sqr().recip())
            .sum();
        if s > 0.0 {
            s.sqrt().recip().min(1e6)
        } else {
            1.0
        }
    }

    /// Local scale of an equilibrium: distance to its nearest neighbour in
    /// the given chart.
    pub fn equilibrium_scale(&self, id: usize, chart: Chart) -> Option<f64> {
        self.points[chart_index(chart)]
            .iter()
            .find(|p| p.id == id)
            .map(|p| p.scale)
    }

    /// Holomorphic chart field as (unit direction, modulus).
    fn field_dir(&self, chart: Chart, x: C64) -> (C64, f64) {
        let (num, den, xk) = match chart {
            Chart::W => {
                let (n, d) = self.field.eval_pq(x);
                (n, d, C64::new(1.0, 0.0))
            }
            Chart::Z => {
                let (n, d, k) = self.field.eval_pq_z(x);
                (n, d, x.powi(k as i32))
            }
        };
        let v = num * den.conj() * xk;
        let vn = v.norm();
        let modulus = num.norm() * xk.norm() / den.norm();
        if vn == 0.0 || !vn.is_finite() {
            (C64::new(0.0, 0.0), modulus)
        } else {
            (v / vn, modulus)
        }
    }

    /// Right-hand side `(x', τ')` in the current mode.
    pub fn rhs(&self, chart: Chart, x: C64) -> (C64, f64) {
        match self.mode {
            TimeMode::Regularized { backward } => {
                let dir = if backward { -1.0 } else { 1.0 };
                let d = self.local_distance(chart, x);
                let (u, modulus) = self.field_dir(chart, x);
                let dtau = if modulus > 0.0 { dir * d / modulus } else { 0.0 };
                (u * (dir * d), dtau)
            }
            TimeMode::Original { theta } => {
                let v = self.field.eval_chart(SpherePoint { chart, value: x });
                (C64::from_polar(1.0, theta) * v, 1.0)
            }
        }
    }

    /// One Dormand–Prince step of size `h` from `x` in `chart`.
    pub fn step(&self, chart: Chart, x: C64, h: f64) -> StepResult {
        let f = |y: C64| self.rhs(chart, y);
        let (k1, t1) = f(x);
        let (k2, _) = f(x + k1 * (h * A21));
        let (k3, t3) = f(x + (k1 * A31 + k2 * A32) * h);
        let (k4, t4) = f(x + (k1 * A41 + k2 * A42 + k3 * A43) * h);
        let (k5, t5) = f(x + (k1 * A51 + k2 * A52 + k3 * A53 + k4 * A54) * h);
        let (k6, t6) = f(x + (k1 * A61 + k2 * A62 + k3 * A63 + k4 * A64 + k5 * A65) * h);
        let x5 = x + (k1 * B1 + k3 * B3 + k4 * B4 + k5 * B5 + k6 * B6) * h;
        let dtau = (t1 * B1 + t3 * B3 + t4 * B4 + t5 * B5 + t6 * B6) * h;
        let (k7, _) = f(x5);
        let err = ((k1 * E1 + k3 * E3 + k4 * E4 + k5 * E5 + k6 * E6 + k7 * E7) * h).norm();
        StepResult { x: x5, dtau, err }
    }

    /// Single step from a sample, in the sample's chart.
    pub fn step_from(&self, p: SpherePoint, h: f64) -> (SpherePoint, f64) {
        let r = self.step(p.chart, p.value, h);
        (
            SpherePoint {
                chart: p.chart,
                value: r.x,
            },
            r.dtau,
        )
    }

    fn tolerance(&self, chart: Chart, x: C64) -> f64 {
        self.cfg.rel_tol * self.local_distance(chart, x).max(1e-300)
    }

    /// Integrates from `start` until an event or until `|t| = t_span`.
    pub fn run(&self, start: SpherePoint, t_span: f64) -> Result<Trajectory, FlowError> {
        let mut chart = start.canonical().chart;
        let mut x = start.coord(chart).expect("canonical point has a coordinate");
        if let Some((id, dist, scale)) = self.nearest(chart, x) {
            if dist <= 1e-3 * self.cfg.conv_radius * scale {
                return Err(FlowError::StartAtEquilibrium(id));
            }
        }
        let sign = if t_span < 0.0 { -1.0 } else { 1.0 };
        let t_end = t_span.abs();
        let time_direction = match self.mode {
            TimeMode::Regularized { backward } => C64::new(if backward { -1.0 } else { 1.0 }, 0.0),
            TimeMode::Original { theta } => C64::from_polar(sign, theta),
        };
        let original = matches!(self.mode, TimeMode::Original { .. });

        let mut t = 0.0;
        let mut tau = 0.0;
        let mut h = self.cfg.h_init;
        let mut samples = vec![Sample {
            t: 0.0,
            point: SpherePoint { chart, value: x },
            tau: 0.0,
        }];

        let n_rec = self.records.len();
        let mut armed = vec![false; n_rec];
        for (id, flag) in armed.iter_mut().enumerate() {
            *flag = self.relative_distance(id, chart, x).is_none_or(|r| r > 10.0 * self.cfg.saddle_clearance);
        }
        let mut recent: VecDeque<(usize, f64)> = VecDeque::new();

        // Poincaré section through the seed
        let seed = SpherePoint { chart, value: x };
        let seed_scale = self.local_distance(chart, x);
        let (v0, _) = self.rhs(chart, x);
        let normal = v0 / v0.norm().max(1e-300);
        let mut left_seed = false;

        for _ in 0..self.cfg.max_steps {
            if t >= t_end {
                return Ok(self.finish(samples, time_direction, Verdict::Completed, tau));
            }
            let h_try = h.min(t_end - t).min(self.cfg.h_max);
            let r = self.step(chart, x, sign * h_try);
            let tol = self.tolerance(chart, x);
            let ok = r.err.is_finite() && r.x.re.is_finite() && r.x.im.is_finite();
            if !ok || r.err > tol {
                let fac = if ok {
                    (0.9 * (tol / r.err).powf(0.2)).clamp(0.1, 0.9)
                } else {
                    0.1
                };
                h = h_try * fac;
                if h < 1e-14 {
                    return Err(FlowError::StepUnderflow(SpherePoint { chart, value: x }));
                }
                continue;
            }
            let prev = SpherePoint { chart, value: x };
            let prev_tau = tau;
            let prev_t = t;
            x = r.x;
            t += h_try;
            tau += r.dtau;
            let fac = if r.err > 0.0 {
                (0.9 * (tol / r.err).powf(0.2)).clamp(0.2, 5.0)
            } else {
                5.0
            };
            h = (h_try * fac).min(self.cfg.h_max);

            // Poincaré return
            if self.cfg.detect_periodic {
                let cur = seed.coord(chart).map(|s0| x - s0);
                if let Some(offset) = cur {
                    if offset.norm() > 100.0 * self.cfg.closure_tol * seed_scale {
                        left_seed = true;
                    }
                }
                if left_seed && prev.chart == seed.chart && chart == seed.chart {
                    let g = |y: C64| ((y - seed.value) * normal.conj()).re;
                    if g(prev.value) < 0.0 && g(x) >= 0.0 {
                        let (hit, dtau_hit) =
                            self.refine_event(prev, sign * h_try, |p: SpherePoint| {
                                g(p.value)
                            });
                        let closure = (hit.value - seed.value).norm();
                        if closure <= self.cfg.closure_tol * seed_scale {
                            samples.push(Sample {
                                t: prev_t,
                                point: prev,
                                tau: prev_tau,
                            });
                            let period = prev_tau + dtau_hit;
                            samples.push(Sample {
                                t,
                                point: hit,
                                tau: period,
                            });
                            samples.dedup_by(|a, b| a.t == b.t && a.point == b.point);
                            return Ok(self.finish(
                                samples,
                                time_direction,
                                Verdict::Periodic { period },
                                period,
                            ));
                        }
                    }
                }
            }

            samples.push(Sample {
                t,
                point: SpherePoint { chart, value: x },
                tau,
            });

            // events
            for id in 0..n_rec {
                let rel = match self.relative_distance(id, chart, x) {
                    Some(r) => r,
                    None => continue,
                };
                if rel > 10.0 * self.cfg.saddle_clearance {
                    armed[id] = true;
                }
                let kind = self.records[id].kind;
                let is_saddle = matches!(
                    kind,
                    EquilibriumKind::PoleSaddle | EquilibriumKind::DegeneratePole
                );
                if original && is_saddle && rel < self.cfg.pole_clearance {
                    return Ok(self.finish(
                        samples,
                        time_direction,
                        Verdict::PoleApproach { pole: id },
                        tau,
                    ));
                }
                if !original && is_saddle && armed[id] && rel < self.cfg.saddle_clearance {
                    return Ok(self.finish(
                        samples,
                        time_direction,
                        Verdict::ReachedSaddle { pole: id },
                        tau,
                    ));
                }
            }
            if !original {
                if let Some((id, dist, scale)) = self.nearest(chart, x) {
                    if self.records[id].kind.is_zero() {
                        recent.push_back((id, dist));
                        while recent.len() > self.cfg.contraction_steps + 1 {
                            recent.pop_front();
                        }
                        let contracting = recent.len() == self.cfg.contraction_steps + 1
                            && recent.iter().all(|(j, _)| *j == id)
                            && recent.iter().zip(recent.iter().skip(1)).all(|(a, b)| b.1 < a.1);
                        if dist < self.cfg.conv_radius * scale && contracting {
                            return Ok(self.finish(
                                samples,
                                time_direction,
                                Verdict::ConvergedTo { equilibrium: id },
                                tau,
                            ));
                        }
                    } else {
                        recent.clear();
                    }
                }
            }

            // chart switch with hysteresis
            if x.norm() > CHART_EXIT {
                let nx = x.inv();
                if nx.norm() < CHART_ENTER || x.norm() > 1.0 {
                    chart = chart.other();
                    x = nx;
                    recent.clear();
                }
            }
        }
        Ok(self.finish(samples, time_direction, Verdict::BudgetExhausted, tau))
    }

    fn relative_distance(&self, id: usize, chart: Chart, x: C64) -> Option<f64> {
        self.points[chart_index(chart)]
            .iter()
            .find(|p| p.id == id)
            .map(|p| (x - p.coord).norm() / p.scale)
    }

    fn finish(&self, samples: Vec<Sample>, dir: C64, verdict: Verdict, tau: f64) -> Trajectory {
        Trajectory {
            samples,
            time_direction: dir,
            verdict,
            original_time: tau,
        }
    }

    /// Locates a sign change of `g` within one step of size `h` from
    /// `prev` by the Illinois variant of regula falsi on the step size.
    /// Returns the event point and the original time gained.
    pub fn refine_event<G: Fn(SpherePoint) -> f64>(
        &self,
        prev: SpherePoint,
        h: f64,
        g: G,
    ) -> (SpherePoint, f64) {
        let mut lo = 0.0;
        let mut glo = g(prev);
        let mut hi = h;
        let first = self.step_from(prev, hi);
        let mut ghi = g(first.0);
        let mut best = first;
        let mut side = 0;
        for _ in 0..100 {
            let denom = ghi - glo;
            let mid = if denom != 0.0 {
                hi - ghi * (hi - lo) / denom
            } else {
                0.5 * (lo + hi)
            };
            let mid = if (mid - lo) * (mid - hi) < 0.0 { mid } else { 0.5 * (lo + hi) };
            let (p, tm) = self.step_from(prev, mid);
            let gm = g(p);
            best = (p, tm);
            if gm == 0.0 || (hi - lo).abs() < 1e-15 * h.abs().max(1e-300) {
                break;
            }
            if (gm > 0.0) == (ghi > 0.0) {
                hi = mid;
                ghi = gm;
                if side == 1 {
                    glo *= 0.5;
                }
                side = 1;
            } else {
                lo = mid;
                glo = gm;
                if side == -1 {
                    ghi *= 0.5;
                }
                side = -1;
            }
            if gm.abs() < 1e-15 {
                break;
            }
        }
        best
    }
}

/// Real-time regularized integration when `theta == 0`, otherwise the
/// holomorphic flow along the ray `e^{iθ}`. A negative `t_max` runs
/// backward.
pub fn integrate(
    field: &RationalField,
    start: SpherePoint,
    theta: f64,
    t_max: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory, FlowError> {
    if theta == 0.0 {
        let integ = Integrator::new(
            field,
            TimeMode::Regularized {
                backward: t_max < 0.0,
            },
            cfg.clone(),
        );
        integ.run(start, t_max.abs())
    } else {
        integrate_original(field, start, theta, t_max, cfg)
    }
}

/// Holomorphic flow `x' = e^{iθ} f(x)` in original time `t ∈ [0, t_max]`.
pub fn integrate_original(
    field: &RationalField,
    start: SpherePoint,
    theta: f64,
    t_max: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory, FlowError> {
    Integrator::new(field, TimeMode::Original { theta }, cfg.clone()).run(start, t_max)
}

/// `T = 2πi Σ_{j∈J} η_j` for zero indices `J`.
pub fn cycle_period(field: &RationalField, subset: &[usize]) -> Result<C64, FlowError> {
    let d = field.d();
    if subset.is_empty() || subset.len() >= d || subset.iter().any(|&j| j >= d) {
        return Err(FlowError::BadSubset);
    }
    let eta = field.residues()?;
    Ok(C64::new(0.0, 2.0 * PI) * subset.iter().map(|&j| eta[j]).sum::<C64>())
}

/// Winding number of a closed polygon around `p`.
fn winding(poly: &[C64], p: C64) -> i64 {
    let mut total = 0.0;
    for i in 0..poly.len() {
        let a = poly[i] - p;
        let b = poly[(i + 1) % poly.len()] - p;
        total += (b / a).arg();
    }
    (total / (2.0 * PI)).round() as i64
}

/// Counts zeros and poles inside a closed curve given by finite points and
/// checks `d'_J = d_J - 1`.
pub fn check_brouwer(field: &RationalField, cycle: &[C64]) -> (usize, usize, bool) {
    let dz = field.zeros().iter().filter(|&&e| winding(cycle, e) != 0).count();
    let dp = field.poles().iter().filter(|&&e| winding(cycle, e) != 0).count();
    (dz, dp, dp + 1 == dz)
}

/// Chordal distance between `Φ^{i t2} Φ^{t1} w0` and `Φ^{t1} Φ^{i t2} w0`.
pub fn commutation_defect(
    field: &RationalField,
    w0: SpherePoint,
    t1: f64,
    t2: f64,
    cfg: &IntegratorConfig,
) -> Result<f64, FlowError> {
    let mut c = cfg.clone();
    c.detect_periodic = false;
    let flow = |p: SpherePoint, theta: f64, t: f64| -> Result<SpherePoint, FlowError> {
        if t == 0.0 {
            return Ok(p);
        }
        let (theta, t) = if t < 0.0 { (theta + PI, -t) } else { (theta, t) };
        let tr = integrate_original(field, p, theta, t, &c)?;
        match tr.verdict {
            Verdict::Completed => Ok(tr.last().point),
            Verdict::PoleApproach { pole } => Err(FlowError::ExistenceDomain(pole)),
            _ => Ok(tr.last().point),
        }
    };
    let a = flow(flow(w0, 0.0, t1)?, PI / 2.0, t2)?;
    let b = flow(flow(w0, PI / 2.0, t2)?, 0.0, t1)?;
    Ok(a.chordal_distance(&b))
}
