// SPDX-License-Identifier: Apache-2.0

//! Weak-drive analysis in the six-state sector
//! `{|0,0⟩, |2,0⟩, |0,1⟩, |4,0⟩, |2,1⟩, |0,2⟩}` (pump photons, magnons).
//!
//! The closed forms are the dissipation-free limit: they follow from the
//! amplitude equations at `κ = γ = 0`, solved order by order in the drive with
//! `c00 = 1`.

use std::f64::consts::SQRT_2;

use faer::c64;
use serde::Serialize;

use crate::error::{Error, Result, SingularFactor};
use crate::model::{EffectiveParams, MAGNON};
use crate::steadystate::MAX_STEPS;

const SQRT_12: f64 = 3.464_101_615_137_754_6;
const I: c64 = c64 { re: 0.0, im: 1.0 };

/// Relative size below which a denominator counts as zero.
const SINGULAR_REL: f64 = 1e-12;

/// Serialized with each amplitude as `{"re": …, "im": …}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AmplitudeSet {
    #[serde(serialize_with = "complex")]
    pub c00: c64,
    #[serde(serialize_with = "complex")]
    pub c20: c64,
    #[serde(serialize_with = "complex")]
    pub c01: c64,
    #[serde(serialize_with = "complex")]
    pub c40: c64,
    #[serde(serialize_with = "complex")]
    pub c21: c64,
    #[serde(serialize_with = "complex")]
    pub c02: c64,
}

fn complex<S: serde::Serializer>(c: &c64, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeStruct;
    let mut st = s.serialize_struct("Complex", 2)?;
    st.serialize_field("re", &c.re)?;
    st.serialize_field("im", &c.im)?;
    st.end()
}

impl AmplitudeSet {
    pub fn vacuum() -> Self {
        Self::from_array([c64::new(1.0, 0.0), c64::ZERO, c64::ZERO, c64::ZERO, c64::ZERO, c64::ZERO])
    }

    /// Order `c00, c20, c01, c40, c21, c02`.
    pub fn to_array(&self) -> [c64; 6] {
        [self.c00, self.c20, self.c01, self.c40, self.c21, self.c02]
    }

    pub fn from_array(a: [c64; 6]) -> Self {
        AmplitudeSet { c00: a[0], c20: a[1], c01: a[2], c40: a[3], c21: a[4], c02: a[5] }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.to_array().iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Every amplitude divided by `c00`.
    pub fn relative_to_vacuum(&self) -> Self {
        let c = self.c00;
        Self::from_array(self.to_array().map(|x| x / c))
    }
}

/// `X = 6χ + 2Δp + 3Δm`, `Y = g² − (χ + Δp)Δm`,
/// `Z = −Δm(3χ + Δp)(2χ + 2Δp + Δm)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Factors {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Factors {
    pub fn new(p: &EffectiveParams) -> Self {
        let EffectiveParams { delta_p, delta_m, chi, g, .. } = *p;
        Factors {
            x: 6.0 * chi + 2.0 * delta_p + 3.0 * delta_m,
            y: g * g - (chi + delta_p) * delta_m,
            z: -delta_m * (3.0 * chi + delta_p) * (2.0 * chi + 2.0 * delta_p + delta_m),
        }
    }

    /// `Z + g²X`.
    pub fn pole(&self, g: f64) -> f64 {
        self.z + g * g * self.x
    }

    fn y_vanishes(&self, p: &EffectiveParams) -> bool {
        self.y.abs() <= SINGULAR_REL * (p.g * p.g + ((p.chi + p.delta_p) * p.delta_m).abs())
    }

    fn pole_vanishes(&self, g: f64) -> bool {
        self.pole(g).abs() <= SINGULAR_REL * (self.z.abs() + (g * g * self.x).abs())
    }
}

/// Detunings `Δp` at which one of the blockade conditions holds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditionRoots {
    /// Root of `X = 0`; independent of `g`.
    pub umb_delta_p: f64,
    /// Root of `Y = 0`; `None` when `Δm = 0`.
    pub cmb_delta_p: Option<f64>,
}

impl ConditionRoots {
    pub fn cmb(&self) -> Result<f64> {
        self.cmb_delta_p.ok_or(Error::YRootUndefined)
    }

    /// Roots that exist, in ascending order.
    pub fn all(&self) -> Vec<f64> {
        let mut v: Vec<f64> = std::iter::once(self.umb_delta_p).chain(self.cmb_delta_p).collect();
        v.sort_by(f64::total_cmp);
        v
    }
}

/// Pump detunings solving `X = 0` and `Y = 0`, the other parameters fixed.
pub fn optimal_deltas(p: &EffectiveParams) -> ConditionRoots {
    ConditionRoots {
        umb_delta_p: -(6.0 * p.chi + 3.0 * p.delta_m) / 2.0,
        cmb_delta_p: (p.delta_m != 0.0).then(|| p.g * p.g / p.delta_m - p.chi),
    }
}

/// Pump detunings at which `Z + g²X = 0`, where the closed form diverges.
///
/// `Z + g²X` is a quadratic in `Δp`; only real roots are returned, ascending.
pub fn analytic_poles(p: &EffectiveParams) -> Vec<f64> {
    // Z + g²X = −Δm(Δp + 3χ)(2Δp + 2χ + Δm) + g²(2Δp + 6χ + 3Δm)
    let (dm, chi, g2) = (p.delta_m, p.chi, p.g * p.g);
    let a = -2.0 * dm;
    let b = -dm * (2.0 * chi + dm) - 6.0 * chi * dm + 2.0 * g2;
    let c = -3.0 * chi * dm * (2.0 * chi + dm) + g2 * (6.0 * chi + 3.0 * dm);
    let mut roots = Vec::new();
    if a == 0.0 {
        if b != 0.0 {
            roots.push(-c / b);
        }
        return roots;
    }
    let disc = b * b - 4.0 * a * c;
    if disc >= 0.0 {
        let q = -0.5 * (b + b.signum() * disc.sqrt());
        roots.push(q / a);
        if q != 0.0 {
            roots.push(c / q);
        }
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup();
    roots
}

/// `dC/dt` under the non-Hermitian effective Hamiltonian.
pub fn amplitude_derivative(s: &AmplitudeSet, p: &EffectiveParams) -> AmplitudeSet {
    let EffectiveParams { delta_p, delta_m, chi, g, f, kappa, gamma } = *p;
    let r = |x: f64| c64::new(x, 0.0);
    let e20 = c64::new(2.0 * delta_p + 2.0 * chi, -kappa);
    let e01 = c64::new(delta_m, -gamma / 2.0);
    let e40 = c64::new(4.0 * delta_p + 12.0 * chi, -2.0 * kappa);
    let e21 = c64::new(2.0 * delta_p + 2.0 * chi + delta_m, -(kappa + gamma / 2.0));
    let e02 = c64::new(2.0 * delta_m, -gamma);

    // i·dC/dt
    let h = [
        r(SQRT_2 * f) * s.c20,
        e20 * s.c20 + r(SQRT_2 * f) * s.c00 + r(SQRT_2 * g) * s.c01 + r(SQRT_12 * f) * s.c40,
        e01 * s.c01 + r(SQRT_2 * g) * s.c20 + r(SQRT_2 * f) * s.c21,
        e40 * s.c40 + r(SQRT_12 * g) * s.c21 + r(SQRT_12 * f) * s.c20,
        e21 * s.c21 + r(SQRT_12 * g) * s.c40 + r(2.0 * g) * s.c02 + r(SQRT_2 * f) * s.c01,
        e02 * s.c02 + r(2.0 * g) * s.c21,
    ];
    AmplitudeSet::from_array(h.map(|x| -I * x))
}

/// Fixed-step RK4 integration of [`amplitude_derivative`].
pub fn evolve_amplitudes(
    initial: &AmplitudeSet,
    p: &EffectiveParams,
    t_final: f64,
    dt: f64,
) -> Result<AmplitudeSet> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(crate::error::invalid(format!("time step {dt} must be positive")));
    }
    if !(t_final >= 0.0) || !t_final.is_finite() {
        return Err(crate::error::invalid(format!("final time {t_final} must be non-negative")));
    }
    let steps = (t_final / dt).ceil();
    if steps > MAX_STEPS as f64 {
        return Err(Error::StepOverflow(steps as u64));
    }
    let steps = steps as u64;
    if steps == 0 {
        return Ok(*initial);
    }
    let h = t_final / steps as f64;
    let axpy = |x: &[c64; 6], k: &AmplitudeSet, a: f64| -> AmplitudeSet {
        let k = k.to_array();
        AmplitudeSet::from_array(std::array::from_fn(|i| x[i] + k[i] * a))
    };

    let mut x = initial.to_array();
    let mut norm = initial.norm_sqr();
    for step in 0..steps {
        let k1 = amplitude_derivative(&AmplitudeSet::from_array(x), p);
        let k2 = amplitude_derivative(&axpy(&x, &k1, h / 2.0), p);
        let k3 = amplitude_derivative(&axpy(&x, &k2, h / 2.0), p);
        let k4 = amplitude_derivative(&axpy(&x, &k3, h), p);
        let (k1, k2, k3, k4) = (k1.to_array(), k2.to_array(), k3.to_array(), k4.to_array());
        for i in 0..6 {
            x[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
        }
        let next = AmplitudeSet::from_array(x).norm_sqr();
        if !(next <= norm * (1.0 + 1e-12)) {
            return Err(Error::InvariantViolation(format!(
                "amplitude norm grew from {norm:e} to {next:e} at step {}",
                step + 1
            )));
        }
        norm = next;
    }
    Ok(AmplitudeSet::from_array(x))
}

/// Steady-state amplitudes of the dissipation-free hierarchy with `c00 = 1`.
pub fn steady_amplitudes(p: &EffectiveParams) -> Result<AmplitudeSet> {
    let EffectiveParams { delta_p, delta_m, chi, g, f, .. } = *p;
    let fac = Factors::new(p);
    if fac.y_vanishes(p) {
        return Err(Error::SingularCondition(SingularFactor::Y));
    }
    if fac.pole_vanishes(g) {
        return Err(Error::SingularCondition(SingularFactor::ZPlusG2X));
    }
    let back = 4.0 * delta_p + 12.0 * chi;
    if back == 0.0 {
        return Err(Error::SingularCondition(SingularFactor::BackSubstitution));
    }
    let (x, y) = (fac.x, fac.y);
    let pole = fac.pole(g);
    let c01 = -g * f / y;
    // −Δm·c01/(√2 g) for g ≠ 0, written so that it stays continuous at g = 0
    let c20 = delta_m * f / (SQRT_2 * y);
    let c21 = -g * f * f * delta_m * x / (SQRT_2 * y * pole);
    let c02 = g * g * f * f * x / (SQRT_2 * y * pole);
    let c40 = -SQRT_12 * (g * c21 + f * c20) / back;
    let r = |v: f64| c64::new(v, 0.0);
    Ok(AmplitudeSet::from_array([r(1.0), r(c20), r(c01), r(c40), r(c21), r(c02)]))
}

/// `X²Y² / (Z + g²X)²`.
pub fn g2_analytic(p: &EffectiveParams) -> Result<f64> {
    let fac = Factors::new(p);
    if fac.pole_vanishes(p.g) {
        return Err(Error::DivergingCorrelation);
    }
    let ratio = fac.x * fac.y / fac.pole(p.g);
    Ok(ratio * ratio)
}

/// `2|c02|² / |c01|⁴`, the weak-drive estimate of the magnon g²(0).
pub fn g2_from_amplitudes(a: &AmplitudeSet) -> Result<f64> {
    let n = a.c01.norm_sqr();
    if !(n > 0.0) {
        return Err(Error::UndefinedCorrelation { mode: MAGNON.to_string(), occupation: n });
    }
    Ok(2.0 * a.c02.norm_sqr() / (n * n))
}
