//! Separatrices of pole saddles and of the boundary equilibria at infinity.

use crate::field::{Chart, EquilibriumKind, EquilibriumRecord, Mode, RationalField, SpherePoint};
use crate::flow::{FlowError, Integrator, IntegratorConfig, TimeMode, Trajectory, Verdict};
use crate::nondeg::{integrate_omega, NondegError, OmegaPath};
use crate::poly::C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeparatrixError {
    #[error("equilibrium {0} is not a simple pole")]
    NotSimplePole(usize),
    #[error("operation needs polynomial or anti-polynomial mode, field is {0:?}")]
    WrongMode(Mode),
    #[error("circle of radius {radius} is not transverse to the field near angle {angle}")]
    NonTransverse { radius: f64, angle: f64 },
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Nondeg(#[from] NondegError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparatrixConfig {
    pub integrator: IntegratorConfig,
    /// Seed distance from a pole relative to its local scale.
    pub seed_offset: f64,
    /// Seed radius near `z = 0` for boundary separatrices, before scaling
    /// by the scene radius.
    pub boundary_seed: f64,
    /// Rescaled-time budget per separatrix.
    pub t_max: f64,
}

impl Default for SeparatrixConfig {
    fn default() -> Self {
        SeparatrixConfig {
            integrator: IntegratorConfig {
                detect_periodic: false,
                ..IntegratorConfig::default()
            },
            seed_offset: 1e-6,
            boundary_seed: 1e-4,
            t_max: 1e5,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Color {
    /// Stable separatrix: blow-up in forward time.
    Red,
    /// Unstable separatrix: blow-down.
    Blue,
}

impl Color {
    pub fn swap(self) -> Color {
        match self {
            Color::Red => Color::Blue,
            Color::Blue => Color::Red,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Plus,
    Minus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Owner {
    /// A simple pole, by equilibrium id.
    Pole { equilibrium: usize },
    /// A boundary saddle of the Poincaré circle, by label `k`.
    Boundary { label: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Terminal {
    Equilibrium { id: usize },
    /// Boundary source or sink at infinity, by slot index and the measured
    /// asymptotic angle in the `w` plane.
    BoundarySlot { slot: usize, angle: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Separatrix {
    pub owner: Owner,
    pub color: Color,
    pub branch: Branch,
    #[serde(flatten)]
    pub trajectory: Trajectory,
    pub terminal: Option<Terminal>,
    /// Original time between the owner and the reference sample.
    pub blowup_time: Option<f64>,
    /// Sample index used as the reference point of `blowup_time`.
    pub reference: usize,
    /// `∫ ω` from the seed to the owner.
    #[serde(skip)]
    pub seed_integral: C64,
    #[serde(skip)]
    pub owner_location: SpherePoint,
}

impl Separatrix {
    /// Time mode used for tracing.
    pub fn time_mode(&self) -> TimeMode {
        TimeMode::Regularized {
            backward: self.color == Color::Red,
        }
    }

    /// Position of the branch in the counterclockwise order of the four
    /// separatrices at a pole: blue plus, red plus, blue minus, red minus.
    pub fn position(&self) -> usize {
        match (self.color, self.branch) {
            (Color::Blue, Branch::Plus) => 0,
            (Color::Red, Branch::Plus) => 1,
            (Color::Blue, Branch::Minus) => 2,
            (Color::Red, Branch::Minus) => 3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryKind {
    /// Boundary saddle whose interior separatrix is stable.
    RedSaddle,
    BlueSaddle,
    Source,
    Sink,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundarySaddleSet {
    pub mode: Mode,
    /// Angles in the `w` plane, increasing from `[0, π/n)`.
    pub angles: Vec<f64>,
    pub kinds: Vec<BoundaryKind>,
}

fn wrap_pi(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y <= -PI {
        y + 2.0 * PI
    } else {
        y
    }
}

/// Boundary equilibria at infinity.
///
/// Polynomial mode with leading coefficient `A = |A| e^{iγ}` and degree
/// `D`: `2(D-1)` saddles at `(jπ - γ)/(D-1)`, red for even `j`. Labels
/// start at the first angle in `[0, π/(D-1))`, so `ẇ = w^D` has label 0
/// red at angle 0 and `ẇ = -w^D` has label 0 blue at angle 0.
///
/// Anti-polynomial mode with `Q_full` of degree `d'` and leading
/// coefficient `c`: `2(d'+1)` slots at `(nπ - arg c)/(d'+1)`, sinks at
/// even `n`, sources at odd `n`.
pub fn boundary_saddles(field: &RationalField) -> Result<BoundarySaddleSet, SeparatrixError> {
    match field.mode() {
        Mode::Polynomial => {
            let dd = field.d();
            let n = dd - 1;
            let step = PI / n as f64;
            let gamma = field.a().arg();
            let raw = -gamma / n as f64;
            let shift = (-raw / step - 1e-12).ceil() as i64;
            let mut angles = Vec::new();
            let mut kinds = Vec::new();
            for k in 0..2 * n as i64 {
                let j = k + shift;
                angles.push(raw + j as f64 * step);
                kinds.push(if j.rem_euclid(2) == 0 {
                    BoundaryKind::RedSaddle
                } else {
                    BoundaryKind::BlueSaddle
                });
            }
            Ok(BoundarySaddleSet {
                mode: Mode::Polynomial,
                angles,
                kinds,
            })
        }
        Mode::AntiPolynomial => {
            let n = field.d_prime() + 1;
            let c = field.a().inv();
            let angles = (0..2 * n)
                .map(|s| ((s as f64) * PI - c.arg()) / n as f64)
                .collect();
            let kinds = (0..2 * n)
                .map(|s| {
                    if s % 2 == 0 {
                        BoundaryKind::Sink
                    } else {
                        BoundaryKind::Source
                    }
                })
                .collect();
            Ok(BoundarySaddleSet {
                mode: Mode::AntiPolynomial,
                angles,
                kinds,
            })
        }
        m => Err(SeparatrixError::WrongMode(m)),
    }
}

/// `Re ∫ ω` from the reference sample to the owner and the reference
/// index: the first sample at relative distance ≥ 0.1 from the owner.
fn blowup_from(
    tr: &Trajectory,
    owner_chart_coord: C64,
    owner_chart: Chart,
    scale: f64,
    seed_integral: C64,
    color: Color,
) -> (Option<f64>, usize) {
    let reference = tr
        .samples
        .iter()
        .position(|s| {
            s.point
                .coord(owner_chart)
                .is_none_or(|x| (x - owner_chart_coord).norm() >= 0.1 * scale)
        })
        .unwrap_or(tr.samples.len() - 1);
    let tau_ref = tr.samples[reference].tau;
    // seed_integral = ∫_{seed}^{owner} ω: forward time from seed to owner
    let t = match color {
        Color::Red => seed_integral.re - tau_ref,
        Color::Blue => tau_ref - seed_integral.re,
    };
    (Some(t), reference)
}

fn terminal_of(
    records: &[EquilibriumRecord],
    tr: &Trajectory,
    slots: Option<&BoundarySaddleSet>,
    color: Color,
) -> Option<Terminal> {
    match tr.verdict {
        Verdict::ConvergedTo { equilibrium } => {
            let rec = &records[equilibrium];
            if let (Some(set), true) = (slots, rec.location.is_infinity()) {
                let z = tr.last().point.coord(Chart::Z)?;
                let angle = -z.arg();
                let want = match color {
                    Color::Red => BoundaryKind::Source,
                    Color::Blue => BoundaryKind::Sink,
                };
                let n = set.angles.len();
                let (slot, dev) = (0..n)
                    .filter(|&s| set.kinds[s] == want)
                    .map(|s| (s, wrap_pi(angle - set.angles[s]).abs()))
                    .min_by(|a, b| a.1.total_cmp(&b.1))?;
                if dev < PI / n as f64 {
                    Some(Terminal::BoundarySlot { slot, angle })
                } else {
                    None
                }
            } else {
                Some(Terminal::Equilibrium { id: equilibrium })
            }
        }
        _ => None,
    }
}

/// The four separatrices of the simple pole with equilibrium id `pole`,
/// ordered blue plus, red plus, blue minus, red minus.
pub fn trace_pole_separatrices(
    field: &RationalField,
    pole: usize,
    cfg: &SeparatrixConfig,
) -> Result<Vec<Separatrix>, SeparatrixError> {
    let fwd = Integrator::new(
        field,
        TimeMode::Regularized { backward: false },
        cfg.integrator.clone(),
    );
    let bwd = Integrator::new(
        field,
        TimeMode::Regularized { backward: true },
        cfg.integrator.clone(),
    );
    trace_pole_with(field, &fwd, &bwd, pole, cfg)
}

fn trace_pole_with(
    field: &RationalField,
    fwd: &Integrator,
    bwd: &Integrator,
    pole: usize,
    cfg: &SeparatrixConfig,
) -> Result<Vec<Separatrix>, SeparatrixError> {
    let records = fwd.records();
    let rec = records.get(pole).ok_or(SeparatrixError::NotSimplePole(pole))?;
    if rec.kind != EquilibriumKind::PoleSaddle {
        return Err(SeparatrixError::NotSimplePole(pole));
    }
    let loc = rec.location.canonical();
    let chart = loc.chart;
    let e = loc.value;
    let frame = field
        .saddle_frame(rec.location)
        .map_err(|_| SeparatrixError::NotSimplePole(pole))?;
    let scale = fwd.equilibrium_scale(pole, chart).unwrap_or(1.0);
    let s = cfg.seed_offset * scale;
    let slots = if field.mode() == Mode::AntiPolynomial {
        Some(boundary_saddles(field)?)
    } else {
        None
    };
    let mut out = Vec::with_capacity(4);
    for (color, branch) in [
        (Color::Blue, Branch::Plus),
        (Color::Red, Branch::Plus),
        (Color::Blue, Branch::Minus),
        (Color::Red, Branch::Minus),
    ] {
        let dir = match color {
            Color::Blue => frame.unstable,
            Color::Red => frame.stable,
        };
        let sign = if branch == Branch::Plus { 1.0 } else { -1.0 };
        let seed_val = e + dir * (sign * s);
        let seed = SpherePoint {
            chart,
            value: seed_val,
        };
        let integ = if color == Color::Red { bwd } else { fwd };
        let tr = integ.run(seed, cfg.t_max)?;
        let seed_integral = integrate_omega(
            field,
            &OmegaPath {
                segments: vec![crate::nondeg::PathSegment::Line {
                    chart,
                    from: seed_val,
                    to: e,
                }],
            },
            0.0,
        )?;
        let terminal = terminal_of(records, &tr, slots.as_ref(), color);
        let (blowup_time, reference) = blowup_from(&tr, e, chart, scale, seed_integral, color);
        out.push(Separatrix {
            owner: Owner::Pole { equilibrium: pole },
            color,
            branch,
            trajectory: tr,
            terminal,
            blowup_time,
            reference,
            seed_integral,
            owner_location: loc,
        });
    }
    Ok(out)
}

/// Separatrices of a polynomial field seeded at the boundary saddles, or
/// of an anti-polynomial field at its finite saddles.
pub fn trace_boundary_separatrices(
    field: &RationalField,
    cfg: &SeparatrixConfig,
) -> Result<Vec<Separatrix>, SeparatrixError> {
    match field.mode() {
        Mode::Polynomial => {
            let set = boundary_saddles(field)?;
            let fwd = Integrator::new(
                field,
                TimeMode::Regularized { backward: false },
                cfg.integrator.clone(),
            );
            let bwd = Integrator::new(
                field,
                TimeMode::Regularized { backward: true },
                cfg.integrator.clone(),
            );
            let r = cfg.boundary_seed * (1.0 / field.scene_radius()).min(1.0);
            let inf = SpherePoint::infinity();
            let mut out = Vec::new();
            for (k, (&alpha, &kind)) in set.angles.iter().zip(&set.kinds).enumerate() {
                let color = if kind == BoundaryKind::RedSaddle {
                    Color::Red
                } else {
                    Color::Blue
                };
                let zs = C64::from_polar(r, -alpha);
                let seed = SpherePoint::z(zs);
                let integ = if color == Color::Red { &bwd } else { &fwd };
                let tr = integ.run(seed, cfg.t_max)?;
                let seed_integral = integrate_omega(
                    field,
                    &OmegaPath {
                        segments: vec![crate::nondeg::PathSegment::Line {
                            chart: Chart::Z,
                            from: zs,
                            to: C64::new(0.0, 0.0),
                        }],
                    },
                    0.0,
                )?;
                let terminal = terminal_of(fwd.records(), &tr, None, color);
                let (blowup_time, reference) =
                    blowup_from(&tr, C64::new(0.0, 0.0), Chart::Z, 1.0, seed_integral, color);
                out.push(Separatrix {
                    owner: Owner::Boundary { label: k },
                    color,
                    branch: Branch::Plus,
                    trajectory: tr,
                    terminal,
                    blowup_time,
                    reference,
                    seed_integral,
                    owner_location: inf,
                });
            }
            Ok(out)
        }
        Mode::AntiPolynomial => trace_all(field, cfg),
        m => Err(SeparatrixError::WrongMode(m)),
    }
}

/// All pole-saddle separatrices, in pole id order, four per pole.
pub fn trace_all(
    field: &RationalField,
    cfg: &SeparatrixConfig,
) -> Result<Vec<Separatrix>, SeparatrixError> {
    let fwd = Integrator::new(
        field,
        TimeMode::Regularized { backward: false },
        cfg.integrator.clone(),
    );
    let bwd = Integrator::new(
        field,
        TimeMode::Regularized { backward: true },
        cfg.integrator.clone(),
    );
    let poles: Vec<usize> = fwd
        .records()
        .iter()
        .filter(|r| r.kind == EquilibriumKind::PoleSaddle)
        .map(|r| r.id)
        .collect();
    let mut out = Vec::new();
    for p in poles {
        out.extend(trace_pole_with(field, &fwd, &bwd, p, cfg)?);
    }
    Ok(out)
}

/// Quadrature of `ω` along the traced path from the reference sample to
/// the owner: returns `∫ ω` oriented in forward time (from the reference
/// to the owner for red, from the owner to the reference for blue).
pub fn blowup_quadrature(field: &RationalField, sep: &Separatrix) -> Result<C64, NondegError> {
    let samples = &sep.trajectory.samples[..=sep.reference];
    let mut pts: Vec<SpherePoint> = samples.iter().rev().map(|s| s.point).collect();
    let owner = sep.owner_location;
    let first = samples[0].point;
    let owner_pt = SpherePoint {
        chart: first.chart,
        value: owner.coord(first.chart).unwrap_or(owner.value),
    };
    pts.push(owner_pt);
    let integral = integrate_omega(field, &OmegaPath::polyline(&pts), 0.0)?;
    Ok(match sep.color {
        Color::Red => integral,
        Color::Blue => -integral,
    })
}

/// Checks that `Re(conj(w - c) f(w))` has constant sign on `|w - c| = ρ`.
pub fn check_transverse(
    field: &RationalField,
    center: C64,
    radius: f64,
    n: usize,
) -> Result<f64, SeparatrixError> {
    let mut sign = 0.0;
    for i in 0..n {
        let psi = 2.0 * PI * i as f64 / n as f64;
        let v = radial_component(field, center, radius, psi);
        if sign == 0.0 {
            sign = v.signum();
        } else if v.signum() != sign {
            return Err(SeparatrixError::NonTransverse { radius, angle: psi });
        }
    }
    Ok(sign)
}

fn radial_component(field: &RationalField, center: C64, radius: f64, psi: f64) -> f64 {
    let e = C64::from_polar(1.0, psi);
    let w = center + e * radius;
    let (p, q) = field.eval_pq(w);
    (e.conj() * p * q.conj()).re
}

/// Angles `ψ` on `|w - c| = ρ` at which the field is tangent to the circle.
pub fn circle_tangencies(field: &RationalField, center: C64, radius: f64, n: usize) -> Vec<f64> {
    let g = |psi: f64| radial_component(field, center, radius, psi);
    let mut out = Vec::new();
    let h = 2.0 * PI / n as f64;
    for i in 0..n {
        let (mut a, mut b) = (i as f64 * h, (i + 1) as f64 * h);
        let (mut ga, gb) = (g(a), g(b));
        if ga == 0.0 {
            out.push(a);
            continue;
        }
        if ga.signum() == gb.signum() {
            continue;
        }
        for _ in 0..60 {
            let m = 0.5 * (a + b);
            let gm = g(m);
            if gm.signum() == ga.signum() {
                a = m;
                ga = gm;
            } else {
                b = m;
            }
        }
        out.push(0.5 * (a + b));
    }
    out
}

/// For each separatrix crossing `|w| = ρ`, its first crossing angle in
/// `(-π, π]`. Separatrix indices refer to the input slice.
pub fn crossing_angles(
    field: &RationalField,
    radius: f64,
    separatrices: &[Separatrix],
    cfg: &SeparatrixConfig,
    require_transverse: bool,
) -> Result<Vec<(usize, f64)>, SeparatrixError> {
    if require_transverse {
        check_transverse(field, C64::new(0.0, 0.0), radius, 720)?;
    }
    let log_r = radius.ln();
    let level = |p: SpherePoint| -> f64 {
        let m = match p.chart {
            Chart::W => p.value.norm().ln(),
            Chart::Z => -p.value.norm().ln(),
        };
        m - log_r
    };
    let mut out = Vec::new();
    for (idx, sep) in separatrices.iter().enumerate() {
        let integ = Integrator::new(field, sep.time_mode(), cfg.integrator.clone());
        let s = &sep.trajectory.samples;
        for i in 1..s.len() {
            let (a, b) = (level(s[i - 1].point), level(s[i].point));
            if a == 0.0 || a.signum() != b.signum() {
                let h = s[i].t - s[i - 1].t;
                let (hit, _) = integ.refine_event(s[i - 1].point, h, level);
                let w = match hit.chart {
                    Chart::W => hit.value,
                    Chart::Z => hit.value.inv(),
                };
                out.push((idx, w.arg()));
                break;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::build_field;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn cubic(q: f64, theta: f64) -> RationalField {
        let e1 = C64::from_polar(1.0, theta);
        build_field(&[e1, -e1 * q], &[c(0.0, 0.0)], c(-1.0, 0.0)).unwrap()
    }

    fn terminal_id(s: &Separatrix) -> usize {
        match s.terminal {
            Some(Terminal::Equilibrium { id }) => id,
            t => panic!("{t:?} {:?}", s.trajectory.verdict),
        }
    }

    #[test]
    fn cubic_example_terminals() {
        let f = cubic(2.0, 0.0);
        let seps = trace_pole_separatrices(&f, 2, &SeparatrixConfig::default()).unwrap();
        let mut blue: Vec<usize> = seps.iter().filter(|s| s.color == Color::Blue).map(terminal_id).collect();
        blue.sort();
        assert_eq!(blue, vec![0, 1]);
        for s in seps.iter().filter(|s| s.color == Color::Red) {
            assert_eq!(terminal_id(s), 3);
        }
    }

    #[test]
    fn blowup_time_matches_quadrature_and_is_positive() {
        let f = cubic(2.0, 0.3);
        let seps = trace_pole_separatrices(&f, 2, &SeparatrixConfig::default()).unwrap();
        for s in &seps {
            let t = s.blowup_time.unwrap();
            assert!(t > 0.0, "{t}");
            let q = blowup_quadrature(&f, s).unwrap();
            assert!((q.re - t).abs() < 1e-5, "{} vs {t}", q.re);
            assert!(q.im.abs() < 1e-6, "{}", q.im);
        }
    }

    #[test]
    fn local_model_blowdown_time() {
        // w' = r/(w - e') exactly, i.e. P = r, Q = w - e': time from the
        // pole to distance s along the unstable direction is s^2/(2|r|)
        let r = c(0.6, -0.8);
        let f = RationalField::with_multiplicities(vec![], vec![c(0.0, 0.0)], r).unwrap();
        let seps = trace_pole_separatrices(&f, 0, &SeparatrixConfig::default()).unwrap();
        let s0 = seps[0].seed_integral;
        let seed = seps[0].trajectory.samples[0].point.value;
        assert_abs_diff_eq!(-s0.re, seed.norm_sqr() / (2.0 * r.norm()), epsilon = 1e-20);
    }

    #[test]
    fn crossing_angle_difference_follows_q() {
        let cfg = SeparatrixConfig::default();
        for q in [0.5, 1.0, 2.0] {
            let f = cubic(q, 0.0);
            let seps = trace_pole_separatrices(&f, 2, &cfg).unwrap();
            let reds: Vec<Separatrix> = seps.into_iter().filter(|s| s.color == Color::Red).collect();
            let ang = crossing_angles(&f, 1e3, &reds, &cfg, true).unwrap();
            assert_eq!(ang.len(), 2);
            let diff = (ang[0].1 - ang[1].1).abs();
            assert!((diff - 2.0 * PI / (1.0 + q)).abs() < 1e-2, "q={q} diff={diff}");
            if q == 1.0 {
                assert!((ang[0].1.abs() - PI / 2.0).abs() < 1e-2);
            }
        }
    }

    #[test]
    fn crossing_angles_rotate_with_theta() {
        let cfg = SeparatrixConfig::default();
        let angles = |theta: f64| {
            let f = cubic(2.0, theta);
            let seps = trace_pole_separatrices(&f, 2, &cfg).unwrap();
            let reds: Vec<Separatrix> = seps.into_iter().filter(|s| s.color == Color::Red).collect();
            crossing_angles(&f, 1e3, &reds, &cfg, true).unwrap()
        };
        let a0 = angles(0.0);
        let a1 = angles(0.7);
        for (x, y) in a0.iter().zip(&a1) {
            assert!(wrap_pi(y.1 - x.1 - 0.7).abs() < 1e-3);
        }
    }

    #[test]
    fn boundary_saddle_angles() {
        let cubic_poly = build_field(&[c(1.0, 0.0), C64::from_polar(1.0, 2.0 * PI / 3.0), C64::from_polar(1.0, -2.0 * PI / 3.0)], &[], c(1.0, 0.0)).unwrap();
        let set = boundary_saddles(&cubic_poly).unwrap();
        assert_eq!(set.angles.len(), 4);
        for (k, a) in set.angles.iter().enumerate() {
            assert_abs_diff_eq!(*a, k as f64 * PI / 2.0, epsilon = 1e-12);
        }
        assert_eq!(set.kinds[0], BoundaryKind::RedSaddle);
        let quart = build_field(&[c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0), c(4.0, 0.0)], &[], c(1.0, 0.0)).unwrap();
        let set = boundary_saddles(&quart).unwrap();
        assert_eq!(set.angles.len(), 6);
        assert_abs_diff_eq!(set.angles[1], PI / 3.0, epsilon = 1e-12);
        // anti-polynomial d' = 4: 5 sinks and 5 sources at multiples of π/5
        let q = crate::poly::ComplexPoly::from_roots(&[c(0.1, 0.0), c(0.0, 0.3), c(-0.2, 0.0), c(0.0, -0.4)], c(1.0, 0.0)).unwrap();
        let anti = RationalField::from_antipolynomial(&q, 1e-12).unwrap();
        let set = boundary_saddles(&anti).unwrap();
        assert_eq!(set.angles.len(), 10);
        assert_eq!(set.kinds.iter().filter(|k| **k == BoundaryKind::Sink).count(), 5);
        assert_abs_diff_eq!(set.angles[3], 3.0 * PI / 5.0, epsilon = 1e-12);
        assert!(boundary_saddles(&cubic(1.0, 0.0)).is_err());
    }

    #[test]
    fn cubic_polynomial_boundary_connectivity() {
        // w' = w^3 - 1: label 0 red from the source 1, labels 1 and 3 blue into the sinks
        let roots = [c(1.0, 0.0), C64::from_polar(1.0, 2.0 * PI / 3.0), C64::from_polar(1.0, -2.0 * PI / 3.0)];
        let f = build_field(&roots, &[], c(1.0, 0.0)).unwrap();
        let recs = f.classify();
        let seps = trace_boundary_separatrices(&f, &SeparatrixConfig::default()).unwrap();
        assert_eq!(seps.len(), 4);
        for s in &seps {
            let id = terminal_id(s);
            let want = if s.color == Color::Red { EquilibriumKind::Source } else { EquilibriumKind::Sink };
            assert_eq!(recs[id].kind, want);
            assert!(s.blowup_time.unwrap() > 0.0);
            let q = blowup_quadrature(&f, s).unwrap();
            assert!((q.re - s.blowup_time.unwrap()).abs() < 1e-6);
        }
        assert_eq!(terminal_id(&seps[0]), 0);
        let mut blue: Vec<usize> = [1, 3].iter().map(|&k| terminal_id(&seps[k])).collect();
        blue.sort();
        assert_eq!(blue, vec![1, 2]);
    }

    #[test]
    fn degenerate_polynomial_example() {
        // w' = w^4 (1 - w)
        let f = RationalField::with_multiplicities(vec![c(0.0, 0.0); 4].into_iter().chain([c(1.0, 0.0)]).collect(), vec![], c(-1.0, 0.0)).unwrap();
        let set = boundary_saddles(&f).unwrap();
        assert_eq!(set.angles.len(), 8);
        assert_abs_diff_eq!(set.angles[0], 0.0, epsilon = 1e-12);
        assert_eq!(set.kinds[0], BoundaryKind::BlueSaddle);
        let cfg = SeparatrixConfig::default();
        let seps = trace_boundary_separatrices(&f, &cfg).unwrap();
        // label 0 ends at w = 1 (id 1); all others at the degenerate zero 0
        assert_eq!(terminal_id(&seps[0]), 1);
        for s in &seps[1..] {
            assert_eq!(terminal_id(s), 0);
        }
        let pair = vec![seps[1].clone(), seps[7].clone()];
        let ang = crossing_angles(&f, 0.01, &pair, &cfg, false).unwrap();
        assert_eq!(ang.len(), 2);
        for (_, a) in &ang {
            assert!(a.abs() < 0.05, "{a}");
        }
        assert!(ang[0].1 > 0.0 && ang[1].1 < 0.0);
        assert_eq!(circle_tangencies(&f, c(0.0, 0.0), 0.01, 3600).len(), 6);
    }

    #[test]
    fn antipolynomial_terminals_are_boundary_slots() {
        // Q = w^2 - i: two saddles, each with two red and two blue branches to the circle
        let q = crate::poly::ComplexPoly::new(vec![c(0.0, -1.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let f = RationalField::from_antipolynomial(&q, 1e-12).unwrap();
        let seps = trace_boundary_separatrices(&f, &SeparatrixConfig::default()).unwrap();
        assert_eq!(seps.len(), 8);
        for s in &seps {
            match s.terminal {
                Some(Terminal::BoundarySlot { slot, angle }) => {
                    let set = boundary_saddles(&f).unwrap();
                    assert!(wrap_pi(angle - set.angles[slot]).abs() < 1e-3);
                    let want = if s.color == Color::Red { 1 } else { 0 };
                    assert_eq!(slot % 2, want);
                }
                t => panic!("{t:?}"),
            }
        }
    }

    #[test]
    fn stable_and_unstable_directions_are_orthogonal() {
        let f = cubic(0.7, 1.1);
        let fr = f.saddle_frame(SpherePoint::w(c(0.0, 0.0))).unwrap();
        assert_abs_diff_eq!((fr.stable * fr.unstable.conj()).re, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn halving_seed_offset_keeps_terminals_and_angles() {
        let f = cubic(1.5, 0.4);
        let a = SeparatrixConfig::default();
        let b = SeparatrixConfig { seed_offset: 5e-7, ..SeparatrixConfig::default() };
        let sa = trace_pole_separatrices(&f, 2, &a).unwrap();
        let sb = trace_pole_separatrices(&f, 2, &b).unwrap();
        for (x, y) in sa.iter().zip(&sb) {
            assert_eq!(x.terminal.map(|_| terminal_id(x)), y.terminal.map(|_| terminal_id(y)));
        }
        let ra: Vec<Separatrix> = sa.into_iter().filter(|s| s.color == Color::Red).collect();
        let rb: Vec<Separatrix> = sb.into_iter().filter(|s| s.color == Color::Red).collect();
        let xa = crossing_angles(&f, 10.0, &ra, &a, false).unwrap();
        let xb = crossing_angles(&f, 10.0, &rb, &b, false).unwrap();
        for (x, y) in xa.iter().zip(&xb) {
            assert!((x.1 - y.1).abs() < 1e-6, "{} {}", x.1, y.1);
        }
    }
}
