//! Contour integrals of `ω = dw/f`, the period module, and the four
//! nondegeneracy conditions for normalized fields.

use crate::field::{Chart, Mode, RationalField, SpherePoint};
use crate::poly::C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NondegError {
    #[error("path passes within {distance:e} of the zero {zero:?}")]
    TooCloseToZero { zero: SpherePoint, distance: f64 },
    #[error("quadrature did not converge on a segment")]
    Quadrature,
}

/// One piece of an integration path, in a fixed chart.
#[derive(Clone, Debug, PartialEq)]
pub enum PathSegment {
    Line {
        chart: Chart,
        from: C64,
        to: C64,
    },
    /// `center + radius * e^{i s}` for `s` from `start` to `end`.
    Arc {
        chart: Chart,
        center: C64,
        radius: f64,
        start: f64,
        end: f64,
    },
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct OmegaPath {
    pub segments: Vec<PathSegment>,
}

impl OmegaPath {
    pub fn empty() -> Self {
        OmegaPath::default()
    }

    pub fn line(from: C64, to: C64) -> Self {
        OmegaPath {
            segments: vec![PathSegment::Line {
                chart: Chart::W,
                from,
                to,
            }],
        }
    }

    pub fn arc(center: C64, radius: f64, start: f64, end: f64) -> Self {
        OmegaPath {
            segments: vec![PathSegment::Arc {
                chart: Chart::W,
                center,
                radius,
                start,
                end,
            }],
        }
    }

    /// Polyline through chart-tagged points. A step that changes chart is
    /// integrated in the chart of its first point.
    pub fn polyline(points: &[SpherePoint]) -> Self {
        let mut segments = Vec::new();
        for pair in points.windows(2) {
            let chart = pair[0].chart;
            let to = match pair[1].coord(chart) {
                Some(v) => v,
                None => continue,
            };
            segments.push(PathSegment::Line {
                chart,
                from: pair[0].value,
                to,
            });
        }
        OmegaPath { segments }
    }

    pub fn then(mut self, other: OmegaPath) -> Self {
        self.segments.extend(other.segments);
        self
    }
}

// Gauss–Kronrod 7/15 nodes and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> C64>(f: &F, a: f64, b: f64) -> (C64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        k += s * WGK[j];
        if j % 2 == 1 {
            g += s * WG[j / 2];
        }
    }
    (k * h, ((k - g) * h).norm())
}

/// Adaptive Gauss–Kronrod integral of a complex function of a real
/// parameter on `[a, b]`.
pub(crate) fn adaptive_gk<F: Fn(f64) -> C64>(
    f: &F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<C64, NondegError> {
    let (first, err) = gk15(f, a, b);
    let mut total = first;
    let mut total_err = err;
    let mut pieces = vec![(a, b, first, err)];
    // near a zero of the integrand, rounding in Q caps the attainable
    // relative accuracy; a piece with a small relative error whose halves
    // do not improve the estimate is at that floor and is not split again
    for _ in 0..2000 {
        if total_err <= abs_tol.max(rel_tol * total.norm()) {
            return Ok(total);
        }
        let Some((idx, _)) = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
        else {
            break;
        };
        let (pa, pb, pv, pe) = pieces.swap_remove(idx);
        let mid = 0.5 * (pa + pb);
        if mid <= pa || mid >= pb {
            return Err(NondegError::Quadrature);
        }
        let (l, le) = gk15(f, pa, mid);
        let (r, re) = gk15(f, mid, pb);
        total += l + r - pv;
        total_err += le + re - pe;
        let at_floor = le + re >= 0.9 * pe && pe <= 1e-8 * pv.norm();
        if !at_floor {
            pieces.push((pa, mid, l, le));
            pieces.push((mid, pb, r, re));
        }
    }
    if total.re.is_finite() && total.im.is_finite() && total_err <= 1e-6 * total.norm().max(1.0) {
        Ok(total)
    } else {
        Err(NondegError::Quadrature)
    }
}

fn dist_to_segment(p: C64, a: C64, b: C64) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a) * ab.conj()).re / len2;
    (p - (a + ab * t.clamp(0.0, 1.0))).norm()
}

/// Zeros of `f` as seen in `chart` (including infinity when it is a zero).
fn zeros_in_chart(field: &RationalField, chart: Chart) -> Vec<SpherePoint> {
    let mut out: Vec<SpherePoint> = field
        .zeros()
        .iter()
        .filter_map(|&e| SpherePoint::w(e).in_chart(chart))
        .collect();
    if field.order_at_infinity() > 0 && chart == Chart::Z {
        out.push(SpherePoint::infinity());
    }
    out
}

fn omega_integrand(field: &RationalField, chart: Chart, x: C64) -> C64 {
    match chart {
        Chart::W => {
            let (p, q) = field.eval_pq(x);
            q / p
        }
        Chart::Z => {
            let (num, den, k) = field.eval_pq_z(x);
            den / (num * x.powi(k as i32))
        }
    }
}

/// `∫ ω` along `path`. Every point of the path must stay at least
/// `clearance` away from the zeros of `f`; poles are allowed anywhere.
pub fn integrate_omega(
    field: &RationalField,
    path: &OmegaPath,
    clearance: f64,
) -> Result<C64, NondegError> {
    let mut total = C64::new(0.0, 0.0);
    for seg in &path.segments {
        match *seg {
            PathSegment::Line { chart, from, to } => {
                if from == to {
                    continue;
                }
                for z in zeros_in_chart(field, chart) {
                    let distance = dist_to_segment(z.value, from, to);
                    if distance < clearance {
                        return Err(NondegError::TooCloseToZero { zero: z, distance });
                    }
                }
                let dir = to - from;
                let g = |s: f64| omega_integrand(field, chart, from + dir * s) * dir;
                let scale = (g(0.0).norm() + g(0.5).norm() + g(1.0).norm()).max(1e-300);
                total += adaptive_gk(&g, 0.0, 1.0, 1e-14 * scale, 1e-13)?;
            }
            PathSegment::Arc {
                chart,
                center,
                radius,
                start,
                end,
            } => {
                if start == end {
                    continue;
                }
                for z in zeros_in_chart(field, chart) {
                    // conservative: distance to the full circle
                    let distance = ((z.value - center).norm() - radius).abs();
                    if distance < clearance {
                        let ang = (z.value - center).arg();
                        let on_arc = {
                            let (lo, hi) = if start < end { (start, end) } else { (end, start) };
                            let mut a = ang;
                            while a < lo {
                                a += 2.0 * PI;
                            }
                            a <= hi
                        };
                        if on_arc {
                            return Err(NondegError::TooCloseToZero { zero: z, distance });
                        }
                    }
                }
                let g = |s: f64| {
                    let e = C64::from_polar(radius, s);
                    omega_integrand(field, chart, center + e) * C64::new(0.0, 1.0) * e
                };
                let scale = (g(start).norm() + g(end).norm()).max(1e-300);
                total += adaptive_gk(&g, start, end, 1e-14 * scale, 1e-13)?;
            }
        }
    }
    Ok(total)
}

/// The Z-module generated by `2πi η_j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodModule {
    pub generators: Vec<C64>,
    /// Search bound on each integer coefficient.
    pub bound: i64,
    pub tol: f64,
}

impl PeriodModule {
    pub fn new(generators: Vec<C64>, bound: i64, tol: f64) -> Self {
        PeriodModule {
            generators,
            bound,
            tol,
        }
    }

    /// Module of a field with simple zeros; `None` if a zero is multiple.
    pub fn of_field(field: &RationalField, bound: i64, tol: f64) -> Option<Self> {
        let eta = field.residues().ok()?;
        Some(PeriodModule::new(
            eta.iter().map(|e| C64::new(0.0, 2.0 * PI) * e).collect(),
            bound,
            tol,
        ))
    }

    /// Generators with the last one dropped when they sum to zero.
    pub fn reduced_generators(&self) -> Vec<C64> {
        let sum: C64 = self.generators.iter().sum();
        let mag: f64 = self.generators.iter().map(|g| g.norm()).sum();
        if self.generators.len() > 1 && sum.norm() <= 1e-9 * mag.max(1e-300) {
            self.generators[..self.generators.len() - 1].to_vec()
        } else {
            self.generators.clone()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodDistance {
    pub distance: f64,
    /// Coefficients of the nearest combination over the reduced generators.
    pub coefficients: Vec<i64>,
    /// Coefficient bound actually searched.
    pub bound: i64,
    /// The minimizer has some `|m_j|` equal to the bound.
    pub at_boundary: bool,
}

/// Coefficient bound such that `(2M+1)^n` stays below `budget`.
fn effective_bound(bound: i64, n: usize, budget: f64) -> i64 {
    let mut m = bound.max(0);
    while m > 0 && ((2 * m + 1) as f64).powi(n as i32) > budget {
        m -= 1;
    }
    m
}

fn decode(mut idx: usize, n: usize, m: i64) -> Vec<i64> {
    let base = (2 * m + 1) as usize;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        out.push((idx % base) as i64 - m);
        idx /= base;
    }
    out
}

/// Element `i` is the combination `decode(i, x.len(), m)`.
fn all_sums_ordered(x: &[f64], m: i64) -> Vec<f64> {
    let base = (2 * m + 1) as usize;
    let total = base.pow(x.len() as u32);
    (0..total)
        .map(|i| {
            decode(i, x.len(), m)
                .iter()
                .zip(x)
                .map(|(k, xi)| *k as f64 * xi)
                .sum()
        })
        .collect()
}

/// Distance from `value` to the truncated period lattice, or from its
/// imaginary part to the imaginary parts of the lattice (`mod_reals`),
/// which is the distance of `value` to `R + P`.
pub fn period_distance(value: C64, pm: &PeriodModule, mod_reals: bool) -> PeriodDistance {
    let gens = pm.reduced_generators();
    let n = gens.len();
    if n == 0 {
        let distance = if mod_reals { value.im.abs() } else { value.norm() };
        return PeriodDistance {
            distance,
            coefficients: Vec::new(),
            bound: pm.bound,
            at_boundary: false,
        };
    }
    if mod_reals {
        let x: Vec<f64> = gens.iter().map(|g| g.im).collect();
        let t = value.im;
        let half = n.div_ceil(2);
        let m = effective_bound(pm.bound, half, 3e5);
        let (xa, xb) = x.split_at(half);
        let sa = all_sums_ordered(xa, m);
        let mut sb: Vec<(f64, usize)> = all_sums_ordered(xb, m)
            .into_iter()
            .enumerate()
            .map(|(i, s)| (s, i))
            .collect();
        sb.sort_by(|p, q| p.0.total_cmp(&q.0));
        let mut best = (f64::INFINITY, 0usize, 0usize);
        for (ia, a) in sa.iter().enumerate() {
            let want = t - a;
            let pos = sb.partition_point(|p| p.0 < want);
            for cand in [pos.wrapping_sub(1), pos] {
                if let Some(&(b, ib)) = sb.get(cand) {
                    let dist = (want - b).abs();
                    if dist < best.0 {
                        best = (dist, ia, ib);
                    }
                }
            }
        }
        let mut coefficients = decode(best.1, xa.len(), m);
        coefficients.extend(decode(best.2, xb.len(), m));
        let at_boundary = m > 0 && coefficients.iter().any(|k| k.abs() == m);
        PeriodDistance {
            distance: best.0,
            coefficients,
            bound: m,
            at_boundary,
        }
    } else {
        let m = effective_bound(pm.bound, n, 2e6);
        let base = (2 * m + 1) as usize;
        let total = base.pow(n as u32);
        let mut best = (f64::INFINITY, 0usize);
        for i in 0..total {
            let coeffs = decode(i, n, m);
            let s: C64 = coeffs.iter().zip(&gens).map(|(k, g)| g * *k as f64).sum();
            let dist = (value - s).norm();
            if dist < best.0 {
                best = (dist, i);
            }
        }
        let coefficients = decode(best.1, n, m);
        let at_boundary = m > 0 && coefficients.iter().any(|k| k.abs() == m);
        PeriodDistance {
            distance: best.0,
            coefficients,
            bound: m,
            at_boundary,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NondegConfig {
    /// Lattice search bound `M`.
    pub lattice_bound: i64,
    pub res_tol: f64,
    pub period_tol: f64,
    /// Relative to the scene radius.
    pub line_clearance: f64,
    pub max_subset_degree: usize,
    pub witness_cap: usize,
    /// Minimum expected gap of the projected lattice, in units of
    /// `period_tol`; caps the search bound for condition (iv).
    pub resolution_factor: f64,
}

impl Default for NondegConfig {
    fn default() -> Self {
        NondegConfig {
            lattice_bound: 20,
            res_tol: 1e-7,
            period_tol: 1e-6,
            line_clearance: 1e-6,
            max_subset_degree: 20,
            witness_cap: 64,
            resolution_factor: 1e3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Witness {
    Structure {
        reason: String,
    },
    Line {
        poles: [usize; 2],
        zero: usize,
        distance: f64,
    },
    Subset {
        subset: Vec<usize>,
        re_sum: f64,
    },
    Period {
        poles: [usize; 2],
        integral: C64,
        coefficients: Vec<i64>,
        distance: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail { witnesses: Vec<Witness> },
    Inconclusive { reason: String },
}

impl Verdict {
    pub fn passed(&self) -> bool {
        matches!(self, Verdict::Pass)
    }

    pub fn witnesses(&self) -> &[Witness] {
        match self {
            Verdict::Fail { witnesses } => witnesses,
            _ => &[],
        }
    }

    fn from_witnesses(w: Vec<Witness>) -> Self {
        if w.is_empty() {
            Verdict::Pass
        } else {
            Verdict::Fail { witnesses: w }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NondegReport {
    pub cond_i: Verdict,
    pub cond_ii: Verdict,
    pub cond_iii: Verdict,
    pub cond_iv: Verdict,
    pub overall: bool,
    /// Coefficient bound used for condition (iv).
    pub lattice_bound_used: i64,
    /// Pole pairs whose lattice minimizer sat on the search boundary.
    pub boundary_hits: Vec<[usize; 2]>,
}

/// Largest bound `M <= cfg.lattice_bound` at which the imaginary parts of
/// the truncated lattice are still spread at least `resolution_factor *
/// period_tol` apart on average. Beyond it the truncated lattice is dense
/// at the tolerance scale and near-hits carry no information.
pub fn resolvable_bound(pm: &PeriodModule, cfg: &NondegConfig) -> i64 {
    let gens = pm.reduced_generators();
    let n = gens.len() as i32;
    let spread: f64 = gens.iter().map(|g| g.im.abs()).sum();
    let mut m = cfg.lattice_bound.max(1);
    while m > 1 {
        let count = ((2 * m + 1) as f64).powi(n) - 1.0;
        let gap = 2.0 * m as f64 * spread / count.max(1.0);
        if gap >= cfg.resolution_factor * cfg.period_tol {
            break;
        }
        m -= 1;
    }
    m
}

fn dist_to_line(p: C64, a: C64, b: C64) -> f64 {
    let ab = b - a;
    ((p - a) * ab.conj()).im.abs() / ab.norm()
}

fn pole_pairs(field: &RationalField) -> Vec<[usize; 2]> {
    let poles = field.poles();
    let mut out = Vec::new();
    for j in 0..poles.len() {
        for i in 0..j {
            if poles[i] != poles[j] {
                out.push([i, j]);
            }
        }
    }
    out
}

fn check_i(field: &RationalField) -> Verdict {
    let mut w = Vec::new();
    for (kind, set) in [("zero", field.zeros()), ("pole", field.poles())] {
        for i in 0..set.len() {
            if set[..i].contains(&set[i]) {
                w.push(Witness::Structure {
                    reason: format!("{kind} {} repeated at index {i}", set[i]),
                });
            }
        }
    }
    if field.d() < 2 || field.d_prime() + 2 != field.d() {
        w.push(Witness::Structure {
            reason: format!(
                "degrees d={} d'={} violate d' = d - 2",
                field.d(),
                field.d_prime()
            ),
        });
    }
    if field.mode() != Mode::Normalized && field.d() != 2 {
        w.push(Witness::Structure {
            reason: format!("mode {:?} is not normalized", field.mode()),
        });
    }
    Verdict::from_witnesses(w)
}

fn check_ii(field: &RationalField, cfg: &NondegConfig) -> Verdict {
    let clearance = cfg.line_clearance * field.scene_radius();
    let poles = field.poles();
    let mut w = Vec::new();
    for [i, j] in pole_pairs(field) {
        for (k, &e) in field.zeros().iter().enumerate() {
            let distance = dist_to_line(e, poles[i], poles[j]);
            if distance <= clearance {
                w.push(Witness::Line {
                    poles: [i, j],
                    zero: k,
                    distance,
                });
            }
        }
    }
    Verdict::from_witnesses(w)
}

/// Subsets `J` with `|Re Σ_J η| <= res_tol`, by size then lexicographic.
pub fn failing_subsets(eta: &[C64], res_tol: f64) -> Vec<(Vec<usize>, f64)> {
    let d = eta.len();
    let mut out = Vec::new();
    for mask in 1u32..((1u32 << d) - 1) {
        let s: f64 = (0..d).filter(|j| mask & (1 << j) != 0).map(|j| eta[j].re).sum();
        if s.abs() <= res_tol {
            let subset: Vec<usize> = (0..d).filter(|j| mask & (1 << j) != 0).collect();
            out.push((subset, s));
        }
    }
    out.sort_by(|a, b| a.0.len().cmp(&b.0.len()).then_with(|| a.0.cmp(&b.0)));
    out
}

fn check_iii(field: &RationalField, cfg: &NondegConfig) -> Verdict {
    let d = field.d();
    if d > cfg.max_subset_degree {
        return Verdict::Inconclusive {
            reason: format!("subset enumeration capped at d <= {}", cfg.max_subset_degree),
        };
    }
    if d < 2 {
        return Verdict::Pass;
    }
    let eta = match field.residues() {
        Ok(e) => e,
        Err(e) => {
            return Verdict::Inconclusive {
                reason: e.to_string(),
            }
        }
    };
    let w = failing_subsets(&eta, cfg.res_tol)
        .into_iter()
        .take(cfg.witness_cap)
        .map(|(subset, re_sum)| Witness::Subset { subset, re_sum })
        .collect();
    Verdict::from_witnesses(w)
}

fn check_iv(
    field: &RationalField,
    cfg: &NondegConfig,
    hits: &mut Vec<[usize; 2]>,
    bound_used: &mut i64,
) -> Verdict {
    let mut pm = match PeriodModule::of_field(field, cfg.lattice_bound, cfg.period_tol) {
        Some(pm) => pm,
        None => {
            return Verdict::Inconclusive {
                reason: "residues undefined at a multiple zero".into(),
            }
        }
    };
    pm.bound = resolvable_bound(&pm, cfg);
    *bound_used = pm.bound;
    let poles = field.poles();
    let mut w = Vec::new();
    let mut skipped = Vec::new();
    for [i, j] in pole_pairs(field) {
        let path = OmegaPath::line(poles[i], poles[j]);
        let clearance = cfg.line_clearance * field.scene_radius();
        let integral = match integrate_omega(field, &path, clearance) {
            Ok(v) => v,
            Err(_) => {
                skipped.push([i, j]);
                continue;
            }
        };
        let pd = period_distance(integral, &pm, true);
        if pd.at_boundary {
            hits.push([i, j]);
        }
        if pd.distance <= cfg.period_tol {
            w.push(Witness::Period {
                poles: [i, j],
                integral,
                coefficients: pd.coefficients,
                distance: pd.distance,
            });
        }
    }
    if !w.is_empty() {
        Verdict::Fail { witnesses: w }
    } else if !skipped.is_empty() {
        Verdict::Inconclusive {
            reason: format!("segments {skipped:?} pass through zeros"),
        }
    } else {
        Verdict::Pass
    }
}

pub fn check_nondegeneracy(field: &RationalField, cfg: &NondegConfig) -> NondegReport {
    let cond_i = check_i(field);
    let cond_ii = check_ii(field, cfg);
    let cond_iii = check_iii(field, cfg);
    let mut boundary_hits = Vec::new();
    let mut lattice_bound_used = 0;
    let cond_iv = check_iv(field, cfg, &mut boundary_hits, &mut lattice_bound_used);
    let overall = cond_i.passed() && cond_ii.passed() && cond_iii.passed() && cond_iv.passed();
    NondegReport {
        cond_i,
        cond_ii,
        cond_iii,
        cond_iv,
        overall,
        lattice_bound_used,
        boundary_hits,
    }
}
