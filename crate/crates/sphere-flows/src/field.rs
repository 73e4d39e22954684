//! Rational vector fields `f = a prod(w - e_j) / prod(w - e'_j)` on the
//! Riemann sphere, their two charts, regularization and classification.
//!
//! Values of `f` are always computed from the factored form, never from
//! expanded coefficients, so fields whose equilibria live on several
//! widely separated scales stay accurate.

use crate::poly::{ComplexPoly, PolyError, C64};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default relative threshold for the sign test on `Re f'(e)`.
pub const TOL_CLASS: f64 = 1e-9;
/// Points with `|value|` above this leave the current chart.
pub const CHART_EXIT: f64 = 1.25;
/// Points are (re)entered into a chart only below this radius.
pub const CHART_ENTER: f64 = 0.8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("prefactor must be nonzero")]
    ZeroPrefactor,
    #[error("zero and pole coincide at {0}")]
    NotCoprime(C64),
    #[error("duplicate {kind} at {at}")]
    Duplicate { kind: &'static str, at: C64 },
    #[error("field has neither zeros nor poles")]
    Empty,
    #[error("singular Möbius matrix")]
    SingularMobius,
    #[error("point {0:?} is not a simple pole")]
    NotSimplePole(SpherePoint),
    #[error("multiple zero at {0}")]
    MultipleZero(C64),
    #[error("operation needs anti-polynomial mode")]
    NotAntiPolynomial,
    #[error("non-finite input")]
    NonFinite,
    #[error(transparent)]
    Poly(#[from] PolyError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Chart {
    W,
    Z,
}

impl Chart {
    pub fn other(self) -> Chart {
        match self {
            Chart::W => Chart::Z,
            Chart::Z => Chart::W,
        }
    }
}

/// A point of the sphere in one of the two charts, `z = 1/w`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpherePoint {
    pub chart: Chart,
    pub value: C64,
}

impl SpherePoint {
    pub fn w(value: C64) -> Self {
        SpherePoint {
            chart: Chart::W,
            value,
        }
    }

    pub fn z(value: C64) -> Self {
        SpherePoint {
            chart: Chart::Z,
            value,
        }
    }

    pub fn infinity() -> Self {
        SpherePoint::z(C64::new(0.0, 0.0))
    }

    pub fn is_infinity(&self) -> bool {
        self.chart == Chart::Z && self.value == C64::new(0.0, 0.0)
    }

    /// The coordinate in `chart`, or `None` when the point is that chart's
    /// missing point.
    pub fn coord(&self, chart: Chart) -> Option<C64> {
        if chart == self.chart {
            Some(self.value)
        } else if self.value == C64::new(0.0, 0.0) {
            None
        } else {
            Some(self.value.inv())
        }
    }

    /// Finite `w` coordinate, if any.
    pub fn as_w(&self) -> Option<C64> {
        self.coord(Chart::W)
    }

    pub fn in_chart(&self, chart: Chart) -> Option<SpherePoint> {
        self.coord(chart).map(|value| SpherePoint { chart, value })
    }

    /// Re-expresses the point in the chart where `|value| <= 1`.
    pub fn canonical(&self) -> SpherePoint {
        if self.value.norm() > 1.0 {
            SpherePoint {
                chart: self.chart.other(),
                value: self.value.inv(),
            }
        } else {
            *self
        }
    }

    /// Position on the unit sphere; `w = 0` is the south pole and `w = ∞` the
    /// north pole.
    pub fn to_unit_sphere(&self) -> [f64; 3] {
        let (x, s) = match self.chart {
            Chart::W => (self.value, 1.0),
            Chart::Z => (self.value.conj(), -1.0),
        };
        let n2 = x.norm_sqr();
        let den = 1.0 + n2;
        [2.0 * x.re / den, 2.0 * x.im / den, s * (n2 - 1.0) / den]
    }

    /// Chordal distance on the unit sphere.
    pub fn chordal_distance(&self, other: &SpherePoint) -> f64 {
        let a = self.to_unit_sphere();
        let b = other.to_unit_sphere();
        ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Zeros and poles, with `d' = d - 2`: nothing hidden at infinity.
    Normalized,
    /// Zeros and poles with a zero or pole at infinity.
    Rational,
    /// `Q = 1`.
    Polynomial,
    /// `P` constant; the flow is `w' = conj(Q)`.
    #[serde(rename = "antipolynomial")]
    AntiPolynomial,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RationalField {
    a: C64,
    zeros: Vec<C64>,
    poles: Vec<C64>,
    mode: Mode,
    p: ComplexPoly,
    q: ComplexPoly,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EquilibriumKind {
    Source,
    Sink,
    Center,
    PoleSaddle,
    DegenerateZero,
    DegeneratePole,
}

impl EquilibriumKind {
    pub fn is_zero(self) -> bool {
        matches!(
            self,
            EquilibriumKind::Source
                | EquilibriumKind::Sink
                | EquilibriumKind::Center
                | EquilibriumKind::DegenerateZero
        )
    }
}

/// Where an equilibrium comes from in the field data.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    /// Index of the first occurrence in `zeros()`.
    Zero(usize),
    /// Index of the first occurrence in `poles()`.
    Pole(usize),
    Infinity,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Linearization {
    /// `f'(e)` at a simple zero, computed in the chart of the location.
    Zero { lambda: C64 },
    /// Regularized saddle matrix `[[alpha, beta], [beta, -alpha]]`.
    Pole { alpha: f64, beta: f64 },
    /// Order of a multiple zero (positive) or pole (negative).
    Degenerate { order: i64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumRecord {
    pub id: usize,
    pub location: SpherePoint,
    pub kind: EquilibriumKind,
    pub origin: Origin,
    /// `1/f'(e)` at simple zeros; the residue of `f` at simple poles.
    pub residue: Option<C64>,
    pub linearization: Linearization,
    pub multiplicity: usize,
}

/// Saddle frame of a simple pole; directions are unit complex numbers in
/// the chart of the pole.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SaddleFrame {
    pub alpha: f64,
    pub beta: f64,
    pub stable: C64,
    pub unstable: C64,
}

impl SaddleFrame {
    pub fn from_alpha_beta(alpha: f64, beta: f64) -> Self {
        let phi = 0.5 * beta.atan2(alpha);
        let unstable = C64::from_polar(1.0, phi);
        SaddleFrame {
            alpha,
            beta,
            stable: unstable * C64::new(0.0, 1.0),
            unstable,
        }
    }

    pub fn eigenvalue(&self) -> f64 {
        self.alpha.hypot(self.beta)
    }
}

/// A Möbius map `w -> (a w + b)/(c w + d)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mobius {
    pub a: C64,
    pub b: C64,
    pub c: C64,
    pub d: C64,
}

impl Mobius {
    pub fn new(a: C64, b: C64, c: C64, d: C64) -> Self {
        Mobius { a, b, c, d }
    }

    pub fn identity() -> Self {
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        Mobius::new(one, zero, zero, one)
    }

    pub fn inversion() -> Self {
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        Mobius::new(zero, one, one, zero)
    }

    pub fn translation(b: C64) -> Self {
        let one = C64::new(1.0, 0.0);
        Mobius::new(one, b, C64::new(0.0, 0.0), one)
    }

    pub fn scaling(s: C64) -> Self {
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        Mobius::new(s, zero, zero, one)
    }

    pub fn det(&self) -> C64 {
        self.a * self.d - self.b * self.c
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Mobius) -> Mobius {
        Mobius::new(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )
    }

    pub fn inverse(&self) -> Mobius {
        Mobius::new(self.d, -self.b, -self.c, self.a)
    }

    pub fn apply(&self, p: SpherePoint) -> SpherePoint {
        // homogeneous coordinates [x : y] with w = x/y
        let (x, y) = match p.chart {
            Chart::W => (p.value, C64::new(1.0, 0.0)),
            Chart::Z => (C64::new(1.0, 0.0), p.value),
        };
        let nx = self.a * x + self.b * y;
        let ny = self.c * x + self.d * y;
        if ny.norm() >= nx.norm() {
            SpherePoint::w(nx / ny)
        } else {
            SpherePoint::z(ny / nx)
        }
    }

    /// Image of a finite point, `None` if it goes to infinity.
    pub fn apply_finite(&self, w: C64) -> Option<C64> {
        let den = self.c * w + self.d;
        if den == C64::new(0.0, 0.0) {
            None
        } else {
            Some((self.a * w + self.b) / den)
        }
    }

    pub fn derivative(&self, w: C64) -> C64 {
        let den = self.c * w + self.d;
        self.det() / (den * den)
    }
}

/// Potential data of an anti-polynomial field `w' = conj(Q)`, `F' = -Q`.
#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianData {
    /// `F` with `F(0) = 0`.
    pub potential: ComplexPoly,
    pub saddles: Vec<C64>,
    pub saddle_values: Vec<f64>,
    pub distinct: bool,
}

impl HamiltonianData {
    pub fn f(&self, w: C64) -> C64 {
        self.potential.evaluate(w, 0)
    }

    /// Gradient potential `G = Re F`.
    pub fn g(&self, w: C64) -> f64 {
        self.f(w).re
    }

    /// Hamiltonian `H = Im F`.
    pub fn h(&self, w: C64) -> f64 {
        self.f(w).im
    }
}

#[derive(Serialize, Deserialize)]
struct FieldJson {
    a: C64,
    zeros: Vec<C64>,
    poles: Vec<C64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mode: Option<Mode>,
}

impl Serialize for RationalField {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        FieldJson {
            a: self.a,
            zeros: self.zeros.clone(),
            poles: self.poles.clone(),
            mode: Some(self.mode),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for RationalField {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let j = FieldJson::deserialize(d)?;
        let field = RationalField::with_multiplicities(j.zeros, j.poles, j.a)
            .map_err(serde::de::Error::custom)?;
        if let Some(m) = j.mode {
            if m != field.mode {
                return Err(serde::de::Error::custom(format!(
                    "declared mode {m:?} does not match data ({:?})",
                    field.mode
                )));
            }
        }
        Ok(field)
    }
}

fn check_finite(v: &[C64]) -> Result<(), FieldError> {
    if v.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(FieldError::NonFinite)
    }
}

/// Strict constructor: zeros and poles pairwise distinct and disjoint.
pub fn build_field(zeros: &[C64], poles: &[C64], a: C64) -> Result<RationalField, FieldError> {
    for (kind, set) in [("zero", zeros), ("pole", poles)] {
        for i in 0..set.len() {
            if set[..i].contains(&set[i]) {
                return Err(FieldError::Duplicate { kind, at: set[i] });
            }
        }
    }
    RationalField::with_multiplicities(zeros.to_vec(), poles.to_vec(), a)
}

impl RationalField {
    /// Like [`build_field`] but repeated zeros or poles are allowed; they
    /// are reported as degenerate by [`RationalField::classify`].
    pub fn with_multiplicities(
        zeros: Vec<C64>,
        poles: Vec<C64>,
        a: C64,
    ) -> Result<Self, FieldError> {
        if a == C64::new(0.0, 0.0) {
            return Err(FieldError::ZeroPrefactor);
        }
        check_finite(&zeros)?;
        check_finite(&poles)?;
        check_finite(&[a])?;
        if let Some(z) = zeros.iter().find(|z| poles.contains(z)) {
            return Err(FieldError::NotCoprime(*z));
        }
        if zeros.is_empty() && poles.is_empty() {
            return Err(FieldError::Empty);
        }
        let mode = if poles.is_empty() {
            Mode::Polynomial
        } else if zeros.is_empty() {
            Mode::AntiPolynomial
        } else if poles.len() + 2 == zeros.len() {
            Mode::Normalized
        } else {
            Mode::Rational
        };
        let p = ComplexPoly::from_roots(&zeros, a)?;
        let q = ComplexPoly::from_roots(&poles, C64::new(1.0, 0.0))?;
        Ok(RationalField {
            a,
            zeros,
            poles,
            mode,
            p,
            q,
        })
    }

    /// Polynomial field from coefficients (ascending degree).
    pub fn from_polynomial(p: &ComplexPoly, tol: f64) -> Result<Self, FieldError> {
        let roots = p.find_roots(tol)?.flattened();
        RationalField::with_multiplicities(roots, Vec::new(), p.leading())
    }

    /// Anti-polynomial field `w' = conj(Q)` for the given `Q`.
    pub fn from_antipolynomial(q: &ComplexPoly, tol: f64) -> Result<Self, FieldError> {
        let roots = q.find_roots(tol)?.flattened();
        RationalField::with_multiplicities(Vec::new(), roots, q.leading().inv())
    }

    pub fn a(&self) -> C64 {
        self.a
    }

    pub fn zeros(&self) -> &[C64] {
        &self.zeros
    }

    pub fn poles(&self) -> &[C64] {
        &self.poles
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// `P = a prod(w - e_j)` in expanded form.
    pub fn p(&self) -> &ComplexPoly {
        &self.p
    }

    /// Monic `Q = prod(w - e'_j)` in expanded form.
    pub fn q(&self) -> &ComplexPoly {
        &self.q
    }

    pub fn d(&self) -> usize {
        self.zeros.len()
    }

    pub fn d_prime(&self) -> usize {
        self.poles.len()
    }

    /// Order of `f` at infinity in the `z` chart: positive for a zero,
    /// negative for a pole.
    pub fn order_at_infinity(&self) -> i64 {
        self.poles.len() as i64 - self.zeros.len() as i64 + 2
    }

    /// Same field with prefactor `a` replaced.
    pub fn with_prefactor(&self, a: C64) -> Result<Self, FieldError> {
        RationalField::with_multiplicities(self.zeros.clone(), self.poles.clone(), a)
    }

    /// Time reversal `a -> -a`.
    pub fn reversed(&self) -> Self {
        self.with_prefactor(-self.a).expect("nonzero prefactor")
    }

    /// Largest modulus of a finite zero or pole, at least 1.
    pub fn scene_radius(&self) -> f64 {
        self.zeros
            .iter()
            .chain(self.poles.iter())
            .map(|z| z.norm())
            .fold(1.0, f64::max)
    }

    /// `f(w)` from the factored form.
    pub fn eval(&self, w: C64) -> C64 {
        let mut num = self.a;
        for e in &self.zeros {
            num *= w - e;
        }
        let mut den = C64::new(1.0, 0.0);
        for e in &self.poles {
            den *= w - e;
        }
        num / den
    }

    /// `P(w)` and `Q(w)` from the factored form.
    pub fn eval_pq(&self, w: C64) -> (C64, C64) {
        let mut num = self.a;
        for e in &self.zeros {
            num *= w - e;
        }
        let mut den = C64::new(1.0, 0.0);
        for e in &self.poles {
            den *= w - e;
        }
        (num, den)
    }

    /// `z^k P~(z)` and `Q~(z)` of the `z` chart, so that `z' = z^k P~/Q~`.
    pub fn eval_pq_z(&self, z: C64) -> (C64, C64, i64) {
        let one = C64::new(1.0, 0.0);
        let mut num = -self.a;
        for e in &self.zeros {
            num *= one - e * z;
        }
        let mut den = one;
        for e in &self.poles {
            den *= one - e * z;
        }
        (num, den, self.order_at_infinity())
    }

    /// The holomorphic field in the chart of `p`: `f(w)` or `-z^2 f(1/z)`.
    /// Infinite at poles.
    pub fn eval_chart(&self, p: SpherePoint) -> C64 {
        match p.chart {
            Chart::W => self.eval(p.value),
            Chart::Z => {
                let (num, den, k) = self.eval_pq_z(p.value);
                num / den * p.value.powi(k as i32)
            }
        }
    }

    /// Regularized vector field in the chart of `p`; smooth on the sphere.
    pub fn eval_regularized(&self, p: SpherePoint) -> C64 {
        if self.mode == Mode::AntiPolynomial {
            // w' = conj(Q_full) with Q_full = Q / a
            return match p.chart {
                Chart::W => {
                    let (_, q) = self.eval_pq(p.value);
                    (q / self.a).conj()
                }
                Chart::Z => {
                    // -z^2 conj(Q_full(1/z)) times the positive factor |z|^(2d')
                    let z = p.value;
                    let (_, den, k) = self.eval_pq_z(z);
                    -z.powi(k as i32) * (den / self.a).conj()
                }
            };
        }
        let euler = |x: C64| (1.0 + x.norm_sqr()).powi(-(self.d() as i32 - 2));
        match p.chart {
            Chart::W => {
                let (num, den) = self.eval_pq(p.value);
                euler(p.value) * num * den.conj()
            }
            Chart::Z => {
                let z = p.value;
                let (num, den, k) = self.eval_pq_z(z);
                let zk = if k >= 0 {
                    z.powi(k as i32)
                } else {
                    z.conj().powi(-k as i32)
                };
                euler(z) * zk * num * den.conj()
            }
        }
    }

    /// `f'(w)` at a finite point that is not a pole.
    pub fn derivative(&self, w: C64) -> C64 {
        let f = self.eval(w);
        let mut log_der = C64::new(0.0, 0.0);
        for e in &self.zeros {
            log_der += (w - e).inv();
        }
        for e in &self.poles {
            log_der -= (w - e).inv();
        }
        if f == C64::new(0.0, 0.0) {
            // at a zero: product over the remaining factors
            let mut num = self.a;
            let mut skipped = false;
            for e in &self.zeros {
                if !skipped && *e == w {
                    skipped = true;
                } else {
                    num *= w - e;
                }
            }
            let mut den = C64::new(1.0, 0.0);
            for e in &self.poles {
                den *= w - e;
            }
            return num / den;
        }
        f * log_der
    }

    /// Residues `eta_j = 1/f'(e_j)` in the order of `zeros()`.
    pub fn residues(&self) -> Result<Vec<C64>, FieldError> {
        (0..self.zeros.len()).map(|j| self.residue_at_zero(j)).collect()
    }

    pub fn residue_at_zero(&self, j: usize) -> Result<C64, FieldError> {
        let e = self.zeros[j];
        let mut num = self.a;
        for (i, x) in self.zeros.iter().enumerate() {
            if i != j {
                if *x == e {
                    return Err(FieldError::MultipleZero(e));
                }
                num *= e - x;
            }
        }
        let mut den = C64::new(1.0, 0.0);
        for x in &self.poles {
            den *= e - x;
        }
        Ok(den / num)
    }

    /// Residue `r` of `f` at the simple pole `poles()[j]`, `f ~ r/(w - e')`.
    pub fn pole_residue(&self, j: usize) -> Result<C64, FieldError> {
        let e = self.poles[j];
        let (num, _) = self.eval_pq(e);
        let mut den = C64::new(1.0, 0.0);
        for (i, x) in self.poles.iter().enumerate() {
            if i != j {
                if *x == e {
                    return Err(FieldError::NotSimplePole(SpherePoint::w(e)));
                }
                den *= e - x;
            }
        }
        Ok(num / den)
    }

    /// Classifies all equilibria: distinct finite zeros, distinct finite
    /// poles, then infinity when it is a zero or pole. Ids are positions
    /// in the returned list.
    pub fn classify(&self) -> Vec<EquilibriumRecord> {
        self.classify_with(TOL_CLASS)
    }

    pub fn classify_with(&self, tol_class: f64) -> Vec<EquilibriumRecord> {
        let mut out = Vec::new();
        let kind_of = |lambda: C64| {
            let scale = lambda.norm();
            if lambda.re > tol_class * scale {
                EquilibriumKind::Source
            } else if lambda.re < -tol_class * scale {
                EquilibriumKind::Sink
            } else {
                EquilibriumKind::Center
            }
        };
        for (j, &e) in self.zeros.iter().enumerate() {
            if self.zeros[..j].contains(&e) {
                continue;
            }
            let mult = self.zeros.iter().filter(|x| **x == e).count();
            let (kind, residue, lin) = if mult == 1 {
                let eta = self.residue_at_zero(j).expect("simple zero");
                let lambda = eta.inv();
                (kind_of(lambda), Some(eta), Linearization::Zero { lambda })
            } else {
                (
                    EquilibriumKind::DegenerateZero,
                    None,
                    Linearization::Degenerate {
                        order: mult as i64,
                    },
                )
            };
            out.push(EquilibriumRecord {
                id: out.len(),
                location: SpherePoint::w(e),
                kind,
                origin: Origin::Zero(j),
                residue,
                linearization: lin,
                multiplicity: mult,
            });
        }
        for (j, &e) in self.poles.iter().enumerate() {
            if self.poles[..j].contains(&e) {
                continue;
            }
            let mult = self.poles.iter().filter(|x| **x == e).count();
            let rec = if mult == 1 {
                let r = self.pole_residue(j).expect("simple pole");
                let frame = self.pole_frame_w(j);
                EquilibriumRecord {
                    id: out.len(),
                    location: SpherePoint::w(e),
                    kind: EquilibriumKind::PoleSaddle,
                    origin: Origin::Pole(j),
                    residue: Some(r),
                    linearization: Linearization::Pole {
                        alpha: frame.alpha,
                        beta: frame.beta,
                    },
                    multiplicity: 1,
                }
            } else {
                EquilibriumRecord {
                    id: out.len(),
                    location: SpherePoint::w(e),
                    kind: EquilibriumKind::DegeneratePole,
                    origin: Origin::Pole(j),
                    residue: None,
                    linearization: Linearization::Degenerate {
                        order: -(mult as i64),
                    },
                    multiplicity: mult,
                }
            };
            out.push(rec);
        }
        let k = self.order_at_infinity();
        if k != 0 {
            let id = out.len();
            let rec = match k {
                1 => {
                    // z' = -a + O(z) divided by z^0 ... simple zero with g'(0) = -a
                    let lambda = -self.a;
                    EquilibriumRecord {
                        id,
                        location: SpherePoint::infinity(),
                        kind: kind_of(lambda),
                        origin: Origin::Infinity,
                        residue: Some(lambda.inv()),
                        linearization: Linearization::Zero { lambda },
                        multiplicity: 1,
                    }
                }
                -1 => {
                    let r = -self.a;
                    EquilibriumRecord {
                        id,
                        location: SpherePoint::infinity(),
                        kind: EquilibriumKind::PoleSaddle,
                        origin: Origin::Infinity,
                        residue: Some(r),
                        linearization: Linearization::Pole {
                            alpha: r.re,
                            beta: r.im,
                        },
                        multiplicity: 1,
                    }
                }
                k if k > 1 => EquilibriumRecord {
                    id,
                    location: SpherePoint::infinity(),
                    kind: EquilibriumKind::DegenerateZero,
                    origin: Origin::Infinity,
                    residue: None,
                    linearization: Linearization::Degenerate { order: k },
                    multiplicity: k as usize,
                },
                k => EquilibriumRecord {
                    id,
                    location: SpherePoint::infinity(),
                    kind: EquilibriumKind::DegeneratePole,
                    origin: Origin::Infinity,
                    residue: None,
                    linearization: Linearization::Degenerate { order: k },
                    multiplicity: (-k) as usize,
                },
            };
            out.push(rec);
        }
        out
    }

    fn pole_frame_w(&self, j: usize) -> SaddleFrame {
        let e = self.poles[j];
        let mut qd = C64::new(1.0, 0.0);
        for (i, x) in self.poles.iter().enumerate() {
            if i != j {
                qd *= e - x;
            }
        }
        let r = if self.mode == Mode::AntiPolynomial {
            (qd / self.a).conj()
        } else {
            let (num, _) = self.eval_pq(e);
            (1.0 + e.norm_sqr()).powi(-(self.d() as i32 - 2)) * num * qd.conj()
        };
        SaddleFrame::from_alpha_beta(r.re, r.im)
    }

    /// Saddle frame of the simple pole at `location` (finite pole in the
    /// `w` chart, or infinity in the `z` chart).
    pub fn saddle_frame(&self, location: SpherePoint) -> Result<SaddleFrame, FieldError> {
        if location.is_infinity() || (location.chart == Chart::Z && location.value.norm() == 0.0) {
            if self.order_at_infinity() == -1 {
                let r = -self.a;
                return Ok(SaddleFrame::from_alpha_beta(r.re, r.im));
            }
            return Err(FieldError::NotSimplePole(location));
        }
        let w = location.as_w().ok_or(FieldError::NotSimplePole(location))?;
        let j = self
            .poles
            .iter()
            .position(|x| *x == w)
            .ok_or(FieldError::NotSimplePole(location))?;
        if self.poles.iter().filter(|x| **x == w).count() != 1 {
            return Err(FieldError::NotSimplePole(location));
        }
        Ok(self.pole_frame_w(j))
    }

    /// Potential and Hamiltonian of `w' = conj(Q_full)`, `Q_full = Q/a`.
    pub fn hamiltonian_data(&self) -> Result<HamiltonianData, FieldError> {
        if self.mode != Mode::AntiPolynomial {
            return Err(FieldError::NotAntiPolynomial);
        }
        let q_full = self.q.scale(self.a.inv());
        let potential = q_full.antiderivative().scale(C64::new(-1.0, 0.0));
        let saddles = self.poles.clone();
        let saddle_values: Vec<f64> = saddles.iter().map(|&s| potential.evaluate(s, 0).im).collect();
        // two saddles share a level of H iff F(s_i) - F(s_j) is real; the
        // difference comes from the Taylor expansion of Q at s_j so that
        // nested clusters of saddles keep their relative accuracy
        let deg = q_full.degree().unwrap_or(0);
        let delta_f = |from: C64, to: C64| -> C64 {
            let h = to - from;
            let (mut hk, mut fact, mut sum) = (h, 1.0, C64::new(0.0, 0.0));
            for k in 0..=deg {
                fact *= (k + 1) as f64;
                sum += q_full.evaluate(from, k) * hk / fact;
                hk *= h;
            }
            -sum
        };
        let mut distinct = true;
        for i in 0..saddles.len() {
            for j in 0..i {
                let df = delta_f(saddles[j], saddles[i]);
                if df.im.abs() <= 1e-9 * df.norm() {
                    distinct = false;
                }
            }
        }
        Ok(HamiltonianData {
            potential,
            saddles,
            saddle_values,
            distinct,
        })
    }

    /// Push-forward under `m`: the field `m'(w) f(w)` at `m(w)`.
    pub fn apply_mobius(&self, m: &Mobius) -> Result<RationalField, FieldError> {
        let det = m.det();
        if det.norm() <= 1e-300 {
            return Err(FieldError::SingularMobius);
        }
        let mut zeros = Vec::new();
        let mut poles = Vec::new();
        for &e in &self.zeros {
            if let Some(x) = m.apply_finite(e) {
                zeros.push(x);
            }
        }
        for &e in &self.poles {
            if let Some(x) = m.apply_finite(e) {
                poles.push(x);
            }
        }
        let k = self.order_at_infinity();
        if let Some(inf_image) = m.apply(SpherePoint::infinity()).as_w() {
            if m.c != C64::new(0.0, 0.0) {
                let target = if k > 0 { &mut zeros } else { &mut poles };
                for _ in 0..k.unsigned_abs() {
                    target.push(inf_image);
                }
            }
        }
        // prefactor from sample evaluations; pick the best-conditioned sample
        let inv = m.inverse();
        let scale = self.scene_radius();
        let mut best: Option<(f64, C64)> = None;
        for s in 0..12 {
            let ang = 0.7 + 2.0 * std::f64::consts::PI * s as f64 / 12.0;
            for rad in [0.37, 1.13, 2.9] {
                let z = C64::from_polar(rad * scale, ang);
                let w = match inv.apply_finite(z) {
                    Some(w) => w,
                    None => continue,
                };
                let fz = m.derivative(w) * self.eval(w);
                let mut num = C64::new(1.0, 0.0);
                for e in &zeros {
                    num *= z - e;
                }
                let mut den = C64::new(1.0, 0.0);
                for e in &poles {
                    den *= z - e;
                }
                let a = fz * den / num;
                let quality = zeros
                    .iter()
                    .chain(poles.iter())
                    .map(|e| (z - e).norm())
                    .chain(
                        self.zeros
                            .iter()
                            .chain(self.poles.iter())
                            .map(|e| (w - e).norm()),
                    )
                    .fold(f64::INFINITY, f64::min);
                if a.re.is_finite() && a.im.is_finite() && a.norm() > 0.0 {
                    match best {
                        Some((q, _)) if q >= quality => {}
                        _ => best = Some((quality, a)),
                    }
                }
            }
        }
        let a = best.map(|(_, a)| a).ok_or(FieldError::NonFinite)?;
        RationalField::with_multiplicities(zeros, poles, a)
    }
}
