//! Dense complex polynomials in one variable.
//!
//! Coefficients are stored in ascending degree. Root finding uses a
//! simultaneous Aberth–Ehrlich iteration followed by Newton polishing.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Shorthand used throughout the crate.
pub type C64 = Complex64;

/// Default residual tolerance for [`ComplexPoly::find_roots`].
pub const DEFAULT_ROOT_TOL: f64 = 1e-11;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolyError {
    #[error("prefactor must be nonzero")]
    ZeroPrefactor,
    #[error("root finding needs degree >= 1, got {0:?}")]
    DegreeTooLow(Option<usize>),
    #[error("root iteration did not converge after {0} sweeps")]
    NoConvergence(usize),
}

/// A polynomial `c0 + c1 w + ... + cn w^n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct ComplexPoly {
    coeffs: Vec<C64>,
}

impl From<Vec<[f64; 2]>> for ComplexPoly {
    fn from(v: Vec<[f64; 2]>) -> Self {
        ComplexPoly::new(v.into_iter().map(|[re, im]| C64::new(re, im)).collect())
    }
}

impl From<ComplexPoly> for Vec<[f64; 2]> {
    fn from(p: ComplexPoly) -> Self {
        p.coeffs.iter().map(|c| [c.re, c.im]).collect()
    }
}

/// One root with its detected multiplicity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Root {
    pub value: C64,
    pub multiplicity: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RootSet {
    pub roots: Vec<Root>,
}

impl RootSet {
    /// Roots repeated according to multiplicity.
    pub fn flattened(&self) -> Vec<C64> {
        self.roots
            .iter()
            .flat_map(|r| std::iter::repeat_n(r.value, r.multiplicity))
            .collect()
    }

    pub fn total_multiplicity(&self) -> usize {
        self.roots.iter().map(|r| r.multiplicity).sum()
    }
}

impl ComplexPoly {
    /// Builds a polynomial, dropping exactly-zero leading coefficients.
    pub fn new(mut coeffs: Vec<C64>) -> Self {
        while coeffs.last().is_some_and(|c| *c == C64::new(0.0, 0.0)) {
            coeffs.pop();
        }
        ComplexPoly { coeffs }
    }

    pub fn zero() -> Self {
        ComplexPoly { coeffs: Vec::new() }
    }

    pub fn constant(c: C64) -> Self {
        ComplexPoly::new(vec![c])
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> C64 {
        self.coeffs.last().copied().unwrap_or_default()
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// `a * prod (w - r)`.
    pub fn from_roots(roots: &[C64], a: C64) -> Result<Self, PolyError> {
        if a == C64::new(0.0, 0.0) {
            return Err(PolyError::ZeroPrefactor);
        }
        let mut c = vec![a];
        for &r in roots {
            let mut next = vec![C64::default(); c.len() + 1];
            for (k, &ck) in c.iter().enumerate() {
                next[k + 1] += ck;
                next[k] -= ck * r;
            }
            c = next;
        }
        Ok(ComplexPoly::new(c))
    }

    /// Value of the `order`-th derivative at `w`.
    pub fn evaluate(&self, w: C64, order: usize) -> C64 {
        let n = self.coeffs.len();
        if order >= n {
            return C64::default();
        }
        let mut acc = C64::default();
        for k in (order..n).rev() {
            let mut falling = 1.0;
            for j in 0..order {
                falling *= (k - j) as f64;
            }
            acc = acc * w + self.coeffs[k] * falling;
        }
        acc
    }

    /// Value and first derivative in one Horner pass.
    pub fn eval_with_derivative(&self, w: C64) -> (C64, C64) {
        let mut p = C64::default();
        let mut dp = C64::default();
        for &c in self.coeffs.iter().rev() {
            dp = dp * w + p;
            p = p * w + c;
        }
        (p, dp)
    }

    pub fn derivative(&self) -> Self {
        ComplexPoly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| c * k as f64)
                .collect(),
        )
    }

    /// Antiderivative with zero constant term.
    pub fn antiderivative(&self) -> Self {
        let mut c = vec![C64::default()];
        c.extend(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(k, &ck)| ck / (k as f64 + 1.0)),
        );
        ComplexPoly::new(c)
    }

    pub fn scale(&self, s: C64) -> Self {
        ComplexPoly::new(self.coeffs.iter().map(|&c| c * s).collect())
    }

    pub fn mul(&self, other: &ComplexPoly) -> Self {
        if self.is_zero() || other.is_zero() {
            return ComplexPoly::zero();
        }
        let mut c = vec![C64::default(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        ComplexPoly::new(c)
    }

    pub fn add(&self, other: &ComplexPoly) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let get = |v: &[C64], k: usize| v.get(k).copied().unwrap_or_default();
        ComplexPoly::new(
            (0..n)
                .map(|k| get(&self.coeffs, k) + get(&other.coeffs, k))
                .collect(),
        )
    }

    /// `w -> p(s w)`.
    pub fn compose_scale(&self, s: C64) -> Self {
        let mut pow = C64::new(1.0, 0.0);
        let mut c = Vec::with_capacity(self.coeffs.len());
        for &ck in &self.coeffs {
            c.push(ck * pow);
            pow *= s;
        }
        ComplexPoly::new(c)
    }

    /// All roots with multiplicities.
    ///
    /// Multiplicity is flagged when `|p'(r)| < sqrt(tol) * max|coeff|`;
    /// flagged approximations that lie close together are merged.
    pub fn find_roots(&self, tol: f64) -> Result<RootSet, PolyError> {
        let n = match self.degree() {
            Some(n) if n >= 1 => n,
            other => return Err(PolyError::DegreeTooLow(other)),
        };
        // exact zero roots are split off first
        let zero_mult = self.coeffs.iter().take_while(|c| c.norm() == 0.0).count();
        let reduced = ComplexPoly::new(self.coeffs[zero_mult..].to_vec());
        let mut approx = if n > zero_mult {
            reduced.aberth(1000)?
        } else {
            Vec::new()
        };
        for z in approx.iter_mut() {
            *z = reduced.newton_polish(*z, 8);
        }

        let scale = self.max_abs_coeff();
        let thresh = tol.sqrt() * scale;
        let dpoly = reduced.derivative();
        let flagged: Vec<bool> = approx
            .iter()
            .map(|&z| dpoly.evaluate(z, 0).norm() < thresh * (1.0 + z.norm()).powi(n as i32 - 1))
            .collect();

        let mut used = vec![false; approx.len()];
        let mut roots = Vec::new();
        if zero_mult > 0 {
            roots.push(Root {
                value: C64::default(),
                multiplicity: zero_mult,
            });
        }
        for i in 0..approx.len() {
            if used[i] {
                continue;
            }
            used[i] = true;
            if !flagged[i] {
                roots.push(Root {
                    value: approx[i],
                    multiplicity: 1,
                });
                continue;
            }
            let radius = 1e-4 * (1.0 + approx[i].norm());
            let mut cluster = vec![approx[i]];
            for j in (i + 1)..approx.len() {
                if !used[j] && flagged[j] && (approx[j] - approx[i]).norm() < radius {
                    used[j] = true;
                    cluster.push(approx[j]);
                }
            }
            let mean = cluster.iter().sum::<C64>() / cluster.len() as f64;
            roots.push(Root {
                value: mean,
                multiplicity: cluster.len(),
            });
        }
        Ok(RootSet { roots })
    }

    fn newton_polish(&self, mut z: C64, steps: usize) -> C64 {
        for _ in 0..steps {
            let (p, dp) = self.eval_with_derivative(z);
            if dp.norm() == 0.0 {
                break;
            }
            let step = p / dp;
            let candidate = z - step;
            if self.evaluate(candidate, 0).norm() > p.norm() {
                break;
            }
            z = candidate;
            if step.norm() <= 1e-16 * z.norm().max(1e-300) {
                break;
            }
        }
        z
    }

    fn aberth(&self, max_sweeps: usize) -> Result<Vec<C64>, PolyError> {
        let n = self.degree().unwrap_or(0);
        let c = &self.coeffs;
        let lead = c[n].norm();
        // Fujiwara-type bound for the initial circle
        let radius = (0..n)
            .map(|k| (c[k].norm() / lead).powf(1.0 / (n - k) as f64))
            .fold(0.0, f64::max)
            .max(1e-300);
        let mean = -c[n - 1] / (c[n] * n as f64);
        let mut z: Vec<C64> = (0..n)
            .map(|k| {
                let ang = 2.0 * std::f64::consts::PI * k as f64 / n as f64 + 0.4;
                mean + C64::from_polar(0.5 * radius + 1e-3, ang)
            })
            .collect();
        let mut done = vec![false; n];
        for _ in 0..max_sweeps {
            let mut all_done = true;
            for k in 0..n {
                if done[k] {
                    continue;
                }
                let (p, dp) = self.eval_with_derivative(z[k]);
                if p.norm() == 0.0 {
                    done[k] = true;
                    continue;
                }
                let ratio = p / dp;
                let sum: C64 = (0..n)
                    .filter(|&j| j != k)
                    .map(|j| C64::new(1.0, 0.0) / (z[k] - z[j]))
                    .sum();
                let step = ratio / (C64::new(1.0, 0.0) - ratio * sum);
                if !step.re.is_finite() || !step.im.is_finite() {
                    let bump = C64::new(1e-8, 1e-8) * (1.0 + z[k].norm());
                    z[k] += bump;
                    all_done = false;
                    continue;
                }
                z[k] -= step;
                if step.norm() <= 1e-15 * (1.0 + z[k].norm()) {
                    done[k] = true;
                } else {
                    all_done = false;
                }
            }
            if all_done {
                return Ok(z);
            }
        }
        // multiple roots converge only linearly; accept if residuals are small
        let tol = 1e-9 * self.max_abs_coeff();
        if z.iter().all(|&zk| {
            let mag: f64 = c
                .iter()
                .enumerate()
                .map(|(k, ck)| ck.norm() * zk.norm().powi(k as i32))
                .sum();
            self.evaluate(zk, 0).norm() <= tol.max(1e-9 * mag)
        }) {
            Ok(z)
        } else {
            Err(PolyError::NoConvergence(max_sweeps))
        }
    }
}
