//! Inductive construction of fields with prescribed portraits.
//!
//! Each construction peels one element off the target (a leaf, an edge,
//! a short leaf of an nc-tree), realizes the smaller target, and glues a
//! small rescaled copy of it to one new zero or pole. Every intermediate
//! field is verified by a full analysis round trip before the next step.

use crate::combinat::{CombinatError, NcTree};
use crate::field::{EquilibriumKind, FieldError, Mode, Origin, RationalField};
use crate::poly::{ComplexPoly, C64};
use crate::portrait::{
    build_portraits, check_duality, antipolynomial_trees, reduced_connection_graph, CanonicalCode,
    PlaneMultigraph, Policies, PortraitError, VertexColor,
};
use crate::separatrix::{
    crossing_angles, trace_all, trace_boundary_separatrices, trace_pole_separatrices, Color,
    SeparatrixConfig, SeparatrixError, Terminal,
};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

pub const MAX_POLYNOMIAL_VERTICES: usize = 9;
pub const MAX_RATIONAL_EDGES: usize = 4;
pub const MAX_ANTIPOLYNOMIAL_EDGES: usize = 6;

#[derive(Debug, Error)]
pub enum RealizeError {
    #[error("target outside the supported range: {0}")]
    Budget(String),
    #[error("invalid target: {0}")]
    InvalidTarget(String),
    #[error("no short leaf in {0}")]
    NoShortLeaf(String),
    #[error("step {step}: no candidate verified down to scale {floor:e} ({attempts} attempts); target {target}")]
    VerificationFailed {
        step: usize,
        target: String,
        attempts: usize,
        floor: f64,
    },
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Separatrix(#[from] SeparatrixError),
    #[error(transparent)]
    Portrait(#[from] PortraitError),
    #[error(transparent)]
    Combinat(#[from] CombinatError),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RealizeConfig {
    pub epsilon: f64,
    pub rho: f64,
    /// Neither scale is halved below this.
    pub scale_floor: f64,
    /// Coefficient dynamic range above which a warning is recorded.
    pub max_dynamic_range: f64,
    pub separatrix: SeparatrixConfig,
}

impl Default for RealizeConfig {
    fn default() -> Self {
        RealizeConfig {
            epsilon: 0.1,
            rho: 0.1,
            scale_floor: 1e-5,
            max_dynamic_range: 1e12,
            separatrix: SeparatrixConfig::default(),
        }
    }
}

impl RealizeConfig {
    /// `(ε, ρ)` pairs, halving `ε` and `ρ` alternately.
    fn schedule(&self) -> Vec<(f64, f64)> {
        let (mut e, mut r) = (self.epsilon, self.rho);
        let mut out = vec![(e, r)];
        let mut turn = 0;
        loop {
            let (ne, nr) = if turn % 2 == 0 { (e / 2.0, r) } else { (e, r / 2.0) };
            turn += 1;
            if ne < self.scale_floor || nr < self.scale_floor {
                if e / 2.0 < self.scale_floor && r / 2.0 < self.scale_floor {
                    break;
                }
                continue;
            }
            e = ne;
            r = nr;
            out.push((e, r));
        }
        out
    }
}

/// A pair of mutually dual portraits: sources with red edges and sinks
/// with blue edges.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DualPair {
    pub c_plus: PlaneMultigraph,
    pub c_minus: PlaneMultigraph,
}

impl DualPair {
    /// Pair determined by its blow-up portrait; vertices are recolored as
    /// sources and the blow-down portrait is the dual map.
    pub fn from_c_plus(g: &PlaneMultigraph) -> Result<DualPair, RealizeError> {
        if !g.is_consistent() || !g.is_connected() || g.euler_characteristic() != 2 {
            return Err(RealizeError::InvalidTarget(
                "portrait must be a connected map on the sphere".into(),
            ));
        }
        let mut c_plus = g.clone();
        for v in &mut c_plus.vertices {
            v.color = VertexColor::RedSource;
            v.index = 2;
        }
        let c_minus = c_plus.dual();
        Ok(DualPair { c_plus, c_minus })
    }

    pub fn d_prime(&self) -> usize {
        self.c_plus.num_edges()
    }

    pub fn codes(&self) -> [CanonicalCode; 2] {
        [
            self.c_plus.canonical_code(Policies::STRICT),
            self.c_minus.canonical_code(Policies::STRICT),
        ]
    }

    /// The pair seen in reversed time.
    pub fn reversed(&self) -> DualPair {
        DualPair {
            c_plus: self.c_minus.color_swapped(),
            c_minus: self.c_plus.color_swapped(),
        }
    }

    fn label(&self) -> String {
        let [a, b] = self.codes();
        format!("{a} | {b}")
    }
}

/// Connected dual pairs with at most `max_edges` edges, listed by hand up
/// to two edges and deduplicated by canonical code.
pub fn dual_pair_catalog(max_edges: usize) -> Vec<DualPair> {
    let r = VertexColor::RedSource;
    let raw: Vec<(usize, PlaneMultigraph)> = vec![
        (0, PlaneMultigraph::single_vertex(r)),
        // one loop
        (1, PlaneMultigraph::from_rotation(&[r], &[vec![0, 1]], &[1, 0], &[Some(0), Some(0)])),
        // one edge
        (1, PlaneMultigraph::from_rotation(&[r, r], &[vec![0], vec![1]], &[1, 0], &[Some(0), Some(0)])),
        // path on three vertices
        (
            2,
            PlaneMultigraph::from_rotation(&[r, r, r], &[vec![0], vec![1, 2], vec![3]], &[1, 0, 3, 2], &saddle_labels(4)),
        ),
        // digon
        (
            2,
            PlaneMultigraph::from_rotation(&[r, r], &[vec![0, 2], vec![1, 3]], &[1, 0, 3, 2], &saddle_labels(4)),
        ),
        // loop with a pendant edge
        (
            2,
            PlaneMultigraph::from_rotation(&[r, r], &[vec![0, 1, 2], vec![3]], &[1, 0, 3, 2], &saddle_labels(4)),
        ),
        // two loops side by side
        (
            2,
            PlaneMultigraph::from_rotation(&[r], &[vec![0, 1, 2, 3]], &[1, 0, 3, 2], &saddle_labels(4)),
        ),
    ];
    let mut seen = std::collections::BTreeSet::new();
    raw.into_iter()
        .filter(|(e, _)| *e <= max_edges)
        .filter_map(|(_, g)| DualPair::from_c_plus(&g).ok())
        .filter(|p| seen.insert(p.codes()))
        .collect()
}

fn saddle_labels(darts: usize) -> Vec<Option<usize>> {
    (0..darts).map(|d| Some(d / 2)).collect()
}

/// Realization target.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Target {
    /// Reduced connection graph of a polynomial; colors are ignored.
    PlanarTree { tree: PlaneMultigraph },
    DualPair { pair: DualPair },
    /// Blow-up nc-tree of an anti-polynomial field.
    NcTree { tree: NcTree },
}

impl Target {
    pub fn mode(&self) -> Mode {
        match self {
            Target::PlanarTree { .. } => Mode::Polynomial,
            Target::DualPair { .. } => Mode::Normalized,
            Target::NcTree { .. } => Mode::AntiPolynomial,
        }
    }

    /// Codes compared by [`verify_realization`], under the
    /// orientation-preserving policy.
    pub fn codes(&self) -> Vec<String> {
        match self {
            Target::PlanarTree { tree } => {
                vec![tree.uncolored().canonical_code(Policies::STRICT).code]
            }
            Target::DualPair { pair } => pair.codes().into_iter().map(|c| c.code).collect(),
            Target::NcTree { tree } => vec![tree.canonical(false), tree.dual().canonical(false)],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verification {
    pub passed: bool,
    pub expected: Vec<String>,
    pub found: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duality: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hamiltonian_distinct: Option<bool>,
}

/// Analyzes `field` and compares the result with `target`.
pub fn verify_realization(
    field: &RationalField,
    target: &Target,
    cfg: &SeparatrixConfig,
) -> Result<Verification, RealizeError> {
    let expected = target.codes();
    let mut duality = None;
    let mut hamiltonian_distinct = None;
    let found = match target {
        Target::PlanarTree { .. } => {
            let seps = trace_boundary_separatrices(field, cfg)?;
            let t = reduced_connection_graph(field, &seps)?;
            vec![t.uncolored().canonical_code(Policies::STRICT).code]
        }
        Target::DualPair { .. } => {
            let seps = trace_all(field, cfg)?;
            let p = build_portraits(field, &seps)?;
            duality = Some(check_duality(&p.c_plus, &p.c_minus).passed());
            vec![
                p.c_plus.canonical_code(Policies::STRICT).code,
                p.c_minus.canonical_code(Policies::STRICT).code,
            ]
        }
        Target::NcTree { .. } => {
            hamiltonian_distinct = Some(field.hamiltonian_data()?.distinct);
            let seps = trace_all(field, cfg)?;
            let (red, blue) = antipolynomial_trees(field, &seps)?;
            vec![red.canonical(false), blue.canonical(false)]
        }
    };
    let passed = found == expected && duality != Some(false) && hamiltonian_distinct != Some(false);
    Ok(Verification {
        passed,
        expected,
        found,
        duality,
        hamiltonian_distinct,
    })
}

fn passes(field: &RationalField, target: &Target, cfg: &SeparatrixConfig) -> bool {
    matches!(verify_realization(field, target, cfg), Ok(v) if v.passed)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepKind {
    Base,
    PluckLeaf { vertex: usize },
    /// Blue edge contracted, i.e. the red edge with this index deleted.
    ContractEdge { red_edge: usize },
    TimeReversal,
    AttachShortLeaf { vertex: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RealizationStep {
    #[serde(flatten)]
    pub kind: StepKind,
    /// Codes of the intermediate target.
    pub target: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ell: Option<usize>,
    /// Direction of the inserted zero or pole, or the rotation applied.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub angle: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    /// Equilibrium id of the split sink in the previous field.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sink: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    pub secant_refined: bool,
    pub attempts: usize,
    pub verified: bool,
}

impl RealizationStep {
    fn new(kind: StepKind, target: &Target) -> Self {
        RealizationStep {
            kind,
            target: target.codes(),
            ell: None,
            angle: None,
            q: None,
            theta: None,
            sink: None,
            epsilon: None,
            rho: None,
            delta: None,
            secant_refined: false,
            attempts: 0,
            verified: false,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RealizationPlan {
    pub mode: Mode,
    pub target: Vec<String>,
    pub steps: Vec<RealizationStep>,
    pub field: RationalField,
    /// Coefficients of `P` (polynomial mode) or `Q` (anti-polynomial mode).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub polynomial: Option<ComplexPoly>,
    pub coefficient_range: Option<f64>,
    pub warnings: Vec<String>,
    pub verification: Verification,
}

fn dynamic_range(p: &ComplexPoly) -> f64 {
    let mags: Vec<f64> = p.coeffs().iter().map(|c| c.norm()).filter(|&m| m > 0.0).collect();
    let hi = mags.iter().cloned().fold(0.0, f64::max);
    let lo = mags.iter().cloned().fold(f64::INFINITY, f64::min);
    hi / lo
}

fn finish(
    target: Target,
    steps: Vec<RealizationStep>,
    field: RationalField,
    polynomial: Option<ComplexPoly>,
    cfg: &RealizeConfig,
) -> Result<RealizationPlan, RealizeError> {
    let verification = verify_realization(&field, &target, &cfg.separatrix)?;
    let coefficient_range = polynomial.as_ref().map(dynamic_range);
    let mut warnings = Vec::new();
    if let Some(r) = coefficient_range {
        if r > cfg.max_dynamic_range {
            warnings.push(format!("coefficient dynamic range {r:.3e}; evaluate in product form"));
        }
    }
    Ok(RealizationPlan {
        mode: target.mode(),
        target: target.codes(),
        steps,
        field,
        polynomial,
        coefficient_range,
        warnings,
        verification,
    })
}

// ---------------------------------------------------------------------------
// polynomial

/// Polynomial whose reduced connection graph is the planar tree `target`.
pub fn realize_polynomial(
    target: &PlaneMultigraph,
    cfg: &RealizeConfig,
) -> Result<RealizationPlan, RealizeError> {
    let d = target.num_vertices();
    if !(2..=MAX_POLYNOMIAL_VERTICES).contains(&d) {
        return Err(RealizeError::Budget(format!("planar tree with {d} vertices")));
    }
    if !target.is_tree() || !target.is_consistent() {
        return Err(RealizeError::InvalidTarget("not a planar tree".into()));
    }
    let mut steps = Vec::new();
    let (roots, a) = polynomial_rec(target, cfg, &mut steps)?;
    // monic by the rotation and scaling u = α w, α^(d-1) = a
    let alpha = a.powf(1.0 / (d as f64 - 1.0));
    let roots: Vec<C64> = roots.iter().map(|r| r * alpha).collect();
    let one = C64::new(1.0, 0.0);
    let field = RationalField::with_multiplicities(roots.clone(), vec![], one)?;
    let p = ComplexPoly::from_roots(&roots, one).map_err(FieldError::from)?;
    finish(Target::PlanarTree { tree: target.clone() }, steps, field, Some(p), cfg)
}

fn polynomial_rec(
    target: &PlaneMultigraph,
    cfg: &RealizeConfig,
    steps: &mut Vec<RealizationStep>,
) -> Result<(Vec<C64>, C64), RealizeError> {
    let t = Target::PlanarTree { tree: target.clone() };
    let one = C64::new(1.0, 0.0);
    if target.num_vertices() == 2 {
        let roots = vec![one, -one];
        let field = RationalField::with_multiplicities(roots.clone(), vec![], one)?;
        let mut step = RealizationStep::new(StepKind::Base, &t);
        step.attempts = 1;
        step.verified = passes(&field, &t, &cfg.separatrix);
        let ok = step.verified;
        steps.push(step);
        if !ok {
            return Err(failed(steps.len(), &t, 1, cfg));
        }
        return Ok((roots, one));
    }
    let leaf = (0..target.num_vertices())
        .find(|&v| target.degree(v) == 1)
        .ok_or_else(|| RealizeError::InvalidTarget("tree without leaves".into()))?;
    let smaller = target.without_leaf(leaf).expect("leaf");
    let (roots, a) = polynomial_rec(&smaller, cfg, steps)?;
    let d = roots.len();
    let mut step = RealizationStep::new(StepKind::PluckLeaf { vertex: leaf }, &t);
    for (eps, rho) in cfg.schedule() {
        let delta = eps * rho;
        for ell in 0..2 * (d - 1) {
            step.attempts += 1;
            // far field a w^d has radial separatrices at these angles
            let psi = (ell as f64 * PI - a.arg()) / (d as f64 - 1.0);
            let e_new = C64::from_polar(1.0, psi);
            let mut new_roots: Vec<C64> = roots.iter().map(|r| r * delta).collect();
            new_roots.push(e_new);
            let new_a = -a / e_new;
            let Ok(field) = RationalField::with_multiplicities(new_roots.clone(), vec![], new_a) else {
                continue;
            };
            if passes(&field, &t, &cfg.separatrix) {
                step.ell = Some(ell);
                step.angle = Some(psi);
                step.epsilon = Some(eps);
                step.rho = Some(rho);
                step.delta = Some(delta);
                step.verified = true;
                steps.push(step);
                return Ok((new_roots, new_a));
            }
        }
    }
    let attempts = step.attempts;
    steps.push(step);
    Err(failed(steps.len(), &t, attempts, cfg))
}

fn failed(step: usize, t: &Target, attempts: usize, cfg: &RealizeConfig) -> RealizeError {
    RealizeError::VerificationFailed {
        step,
        target: t.codes().join(" | "),
        attempts,
        floor: cfg.scale_floor,
    }
}

// ---------------------------------------------------------------------------
// rational

/// Normalized rational field whose portraits are the dual pair `target`.
pub fn realize_rational(target: &DualPair, cfg: &RealizeConfig) -> Result<RealizationPlan, RealizeError> {
    let dp = target.d_prime();
    if dp > MAX_RATIONAL_EDGES {
        return Err(RealizeError::Budget(format!("dual pair with {dp} edges")));
    }
    let derived = DualPair::from_c_plus(&target.c_plus)?;
    if derived.codes() != target.codes() {
        return Err(RealizeError::InvalidTarget(format!(
            "not a dual pair: {}",
            target.label()
        )));
    }
    let mut steps = Vec::new();
    let field = rational_rec(target, cfg, &mut steps)?;
    finish(Target::DualPair { pair: target.clone() }, steps, field, None, cfg)
}

fn rational_rec(
    target: &DualPair,
    cfg: &RealizeConfig,
    steps: &mut Vec<RealizationStep>,
) -> Result<RationalField, RealizeError> {
    let t = Target::DualPair { pair: target.clone() };
    let one = C64::new(1.0, 0.0);
    if target.d_prime() == 0 {
        let field = RationalField::with_multiplicities(vec![one, -one], vec![], one)?;
        let mut step = RealizationStep::new(StepKind::Base, &t);
        step.attempts = 1;
        step.verified = passes(&field, &t, &cfg.separatrix);
        let ok = step.verified;
        steps.push(step);
        if !ok {
            return Err(failed(steps.len(), &t, 1, cfg));
        }
        return Ok(field);
    }
    let (_, face) = target.c_plus.faces();
    let red_edge = target.c_plus.edges.iter().position(|e| {
        let d = e.dart;
        face[d] != face[target.c_plus.darts[d].twin]
    });
    let Some(red_edge) = red_edge else {
        // one sink only: realize the time reversal
        let rev = rational_rec(&target.reversed(), cfg, steps)?.reversed();
        let mut step = RealizationStep::new(StepKind::TimeReversal, &t);
        step.attempts = 1;
        step.verified = passes(&rev, &t, &cfg.separatrix);
        let ok = step.verified;
        steps.push(step);
        if !ok {
            return Err(failed(steps.len(), &t, 1, cfg));
        }
        return Ok(rev);
    };
    let smaller = DualPair::from_c_plus(&target.c_plus.without_edge(red_edge))?;
    let f = rational_rec(&smaller, cfg, steps)?;
    let mut step = RealizationStep::new(StepKind::ContractEdge { red_edge }, &t);
    match split_sink(&f, &t, cfg, &mut step)? {
        Some(g) => {
            step.verified = true;
            steps.push(step);
            Ok(g)
        }
        None => {
            let attempts = step.attempts;
            steps.push(step);
            Err(failed(steps.len(), &t, attempts, cfg))
        }
    }
}

fn wrap(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y <= -PI {
        y + 2.0 * PI
    } else {
        y
    }
}

/// Field moved so that sink `s` sits at 0 and the nearest other zero or
/// pole at distance 1; returns the field and the index of the zero at 0.
fn centered_at(f: &RationalField, s: C64) -> Result<(RationalField, usize), RealizeError> {
    let k = f
        .zeros()
        .iter()
        .position(|&z| z == s)
        .ok_or_else(|| RealizeError::InvalidTarget("sink is not a finite zero".into()))?;
    let r = f
        .zeros()
        .iter()
        .chain(f.poles())
        .filter(|&&z| z != s)
        .map(|z| (z - s).norm())
        .fold(f64::INFINITY, f64::min);
    let mut zeros: Vec<C64> = f.zeros().iter().map(|z| (z - s) / r).collect();
    zeros[k] = C64::new(0.0, 0.0);
    let poles: Vec<C64> = f.poles().iter().map(|z| (z - s) / r).collect();
    // d - d' = 2, so w -> w/r rescales a by r
    let a = f.a() * r.powi(f.d() as i32 - f.d_prime() as i32 - 1);
    Ok((RationalField::with_multiplicities(zeros, poles, a)?, k))
}

/// Splits a sink of `f` into two sinks and a pole, searching sinks and
/// red wedge placements until `t` verifies.
fn split_sink(
    f: &RationalField,
    t: &Target,
    cfg: &RealizeConfig,
    step: &mut RealizationStep,
) -> Result<Option<RationalField>, RealizeError> {
    let records = f.classify();
    let sinks: Vec<(usize, C64)> = records
        .iter()
        .filter(|r| r.kind == EquilibriumKind::Sink)
        .filter_map(|r| r.location.as_w().map(|w| (r.id, w)))
        .collect();
    let sc = &cfg.separatrix;
    for (eps, rho) in cfg.schedule() {
        let delta = eps * rho;
        for &(sink_id, s) in &sinks {
            let (g, k) = centered_at(f, s)?;
            let lambda = g.derivative(C64::new(0.0, 0.0));
            let zero_id = g
                .classify()
                .iter()
                .find(|r| r.origin == Origin::Zero(k))
                .map(|r| r.id)
                .expect("zero at origin");
            let seps = trace_all(&g, sc)?;
            let blue: Vec<_> = seps
                .into_iter()
                .filter(|s| s.color == Color::Blue && s.terminal == Some(Terminal::Equilibrium { id: zero_id }))
                .collect();
            let mut angles: Vec<f64> = crossing_angles(&g, rho, &blue, sc, false)?
                .into_iter()
                .map(|(_, a)| a)
                .collect();
            angles.sort_by(f64::total_cmp);
            let twist = lambda.im / lambda.re * (rho / delta).ln();
            for (l, center) in wedge_candidates(&angles) {
                step.attempts += 1;
                let theta = center - twist;
                let Ok(h) = split_field(&g, k, delta, l, theta) else {
                    continue;
                };
                if passes(&h, t, sc) {
                    record_split(step, sink_id, eps, rho, l, theta, false);
                    return Ok(Some(h));
                }
                // one secant correction from the measured red crossings
                let Some((l2, theta2)) = secant(&h, rho, l, center, theta, sc) else {
                    continue;
                };
                step.attempts += 1;
                let Ok(h2) = split_field(&g, k, delta, l2, theta2) else {
                    continue;
                };
                if passes(&h2, t, sc) {
                    record_split(step, sink_id, eps, rho, l2, theta2, true);
                    return Ok(Some(h2));
                }
            }
        }
    }
    Ok(None)
}

fn record_split(step: &mut RealizationStep, sink: usize, eps: f64, rho: f64, l: f64, theta: f64, refined: bool) {
    step.sink = Some(sink);
    step.epsilon = Some(eps);
    step.rho = Some(rho);
    step.delta = Some(eps * rho);
    step.q = Some(2.0 * PI / l - 1.0);
    step.theta = Some(theta);
    step.secant_refined = refined;
}

/// Wedge widths `L` and centers at which the two red separatrices of the
/// new pole should cross the measuring circle: the midpoints of two gaps
/// between blue crossings, or two points inside one gap.
fn wedge_candidates(angles: &[f64]) -> Vec<(f64, f64)> {
    let k = angles.len();
    if k == 0 {
        return vec![(PI, 0.0)];
    }
    let gap = |i: usize| -> (f64, f64) {
        let a = angles[i];
        let b = if i + 1 < k { angles[i + 1] } else { angles[0] + 2.0 * PI };
        (a, b - a)
    };
    let mut out = Vec::new();
    let mids: Vec<f64> = (0..k).map(|i| gap(i).0 + gap(i).1 / 2.0).collect();
    for i in 0..k {
        for j in 0..k {
            if i != j {
                let l = (mids[j] - mids[i]).rem_euclid(2.0 * PI);
                out.push((l, mids[i] + l / 2.0));
            }
        }
    }
    for i in 0..k {
        let (a, g) = gap(i);
        let (p1, p2) = (a + g / 3.0, a + 2.0 * g / 3.0);
        let l = g / 3.0;
        out.push((l, p1 + l / 2.0));
        out.push((2.0 * PI - l, p2 + (2.0 * PI - l) / 2.0));
    }
    out
}

/// Replaces the zero `k` at the origin by `δe₁, -qδe₁` and a pole at 0,
/// `e₁ = e^{iθ}`, `q = 2π/L - 1`.
fn split_field(g: &RationalField, k: usize, delta: f64, l: f64, theta: f64) -> Result<RationalField, FieldError> {
    let q = 2.0 * PI / l - 1.0;
    let e1 = C64::from_polar(1.0, theta);
    let mut zeros: Vec<C64> = g.zeros().to_vec();
    zeros[k] = e1 * delta;
    zeros.push(-e1 * (q * delta));
    let mut poles = g.poles().to_vec();
    poles.push(C64::new(0.0, 0.0));
    RationalField::with_multiplicities(zeros, poles, g.a())
}

fn secant(
    h: &RationalField,
    rho: f64,
    l: f64,
    center: f64,
    theta: f64,
    sc: &SeparatrixConfig,
) -> Option<(f64, f64)> {
    let pole = h.poles().len() - 1;
    let id = h.classify().iter().find(|r| r.origin == Origin::Pole(pole))?.id;
    let seps = trace_pole_separatrices(h, id, sc).ok()?;
    let red: Vec<_> = seps.into_iter().filter(|s| s.color == Color::Red).collect();
    let m = crossing_angles(h, rho, &red, sc, false).ok()?;
    if m.len() != 2 {
        return None;
    }
    let (ta, tb) = (center - l / 2.0, center + l / 2.0);
    let (m0, m1) = (m[0].1, m[1].1);
    let cost = |x: f64, y: f64| wrap(ta - x).abs() + wrap(tb - y).abs();
    let (ma, mb) = if cost(m0, m1) <= cost(m1, m0) { (m0, m1) } else { (m1, m0) };
    let shift = 0.5 * (wrap(ta - ma) + wrap(tb - mb));
    let measured = (mb - ma).rem_euclid(2.0 * PI);
    let l2 = (l + (l - measured)).clamp(0.05, 2.0 * PI - 0.05);
    Some((l2, theta + shift))
}

// ---------------------------------------------------------------------------
// anti-polynomial

/// `Q` such that `w' = conj(Q)` has blow-up nc-tree `target`.
pub fn realize_antipolynomial(target: &NcTree, cfg: &RealizeConfig) -> Result<RealizationPlan, RealizeError> {
    let dp = target.d_prime();
    if !(1..=MAX_ANTIPOLYNOMIAL_EDGES).contains(&dp) {
        return Err(RealizeError::Budget(format!("nc-tree with {dp} edges")));
    }
    let mut steps = Vec::new();
    let (roots, c) = antipolynomial_rec(target, cfg, &mut steps)?;
    let field = RationalField::with_multiplicities(vec![], roots.clone(), c.inv())?;
    let q = ComplexPoly::from_roots(&roots, c).map_err(FieldError::from)?;
    finish(Target::NcTree { tree: target.clone() }, steps, field, Some(q), cfg)
}

/// A leaf whose only chord joins it to a neighbor on the circle.
fn short_leaf(t: &NcTree) -> Option<usize> {
    let n = t.n();
    (0..n).find(|&v| {
        t.degree(v) == 1
            && t
                .edges()
                .iter()
                .any(|&(a, b)| (a == v || b == v) && ((b - a) == 1 || (b - a) == n - 1))
    })
}

fn without_vertex(t: &NcTree, v: usize) -> Result<NcTree, CombinatError> {
    let lower = |x: usize| if x > v { x - 1 } else { x };
    let edges = t
        .edges()
        .iter()
        .filter(|&&(a, b)| a != v && b != v)
        .map(|&(a, b)| (lower(a), lower(b)))
        .collect();
    NcTree::new(t.n() - 1, edges)
}

fn antipolynomial_rec(
    target: &NcTree,
    cfg: &RealizeConfig,
    steps: &mut Vec<RealizationStep>,
) -> Result<(Vec<C64>, C64), RealizeError> {
    let t = Target::NcTree { tree: target.clone() };
    let one = C64::new(1.0, 0.0);
    if target.d_prime() == 1 {
        let roots = vec![C64::new(0.0, 0.0)];
        let field = RationalField::with_multiplicities(vec![], roots.clone(), one)?;
        let mut step = RealizationStep::new(StepKind::Base, &t);
        step.attempts = 1;
        step.verified = passes(&field, &t, &cfg.separatrix);
        let ok = step.verified;
        steps.push(step);
        if !ok {
            return Err(failed(steps.len(), &t, 1, cfg));
        }
        return Ok((roots, one));
    }
    let leaf = short_leaf(target).ok_or_else(|| RealizeError::NoShortLeaf(target.canonical(false)))?;
    let smaller = without_vertex(target, leaf)?;
    let (roots, c) = antipolynomial_rec(&smaller, cfg, steps)?;
    let m = roots.len() as f64;
    let mut step = RealizationStep::new(StepKind::AttachShortLeaf { vertex: leaf }, &t);
    // slot directions first, then the midpoints between them
    let order: Vec<usize> = (0..4 * roots.len() + 4).filter(|k| k % 2 == 0).chain((0..4 * roots.len() + 4).filter(|k| k % 2 == 1)).collect();
    for (eps, rho) in cfg.schedule() {
        let delta = eps * rho;
        for &k in &order {
            step.attempts += 1;
            let beta = -(k as f64 * PI / 2.0 - c.arg()) / (m + 1.0);
            let rot = C64::from_polar(1.0, beta);
            // rotating the picture by β: roots turn by β, leading factor by e^{-iβ(m+1)}
            let c_rot = c * C64::from_polar(1.0, -beta * (m + 1.0));
            let mut new_roots: Vec<C64> = roots.iter().map(|r| r * rot * delta).collect();
            new_roots.push(one);
            let new_c = -c_rot;
            let Ok(field) = RationalField::with_multiplicities(vec![], new_roots.clone(), new_c.inv()) else {
                continue;
            };
            if passes(&field, &t, &cfg.separatrix) {
                step.angle = Some(beta);
                step.ell = Some(k);
                step.epsilon = Some(eps);
                step.rho = Some(rho);
                step.delta = Some(delta);
                step.verified = true;
                steps.push(step);
                return Ok((new_roots, new_c));
            }
        }
    }
    let attempts = step.attempts;
    steps.push(step);
    Err(failed(steps.len(), &t, attempts, cfg))
}
