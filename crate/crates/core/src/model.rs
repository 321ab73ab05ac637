// SPDX-License-Identifier: Apache-2.0

//! Model parameters and Hamiltonian builders.
//!
//! Everything is expressed in units of the pump decay rate κ. The full model
//! has three modes (pump `p`, signal `s`, magnon `m`) in the frame rotating at
//! the drive; eliminating the far-detuned signal cavity leaves the two-mode
//! effective model with a pump Kerr term and a pair-exchange coupling.

use faer::c64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fock::{mode_ops, HilbertSpec, Operator};

pub const PUMP: &str = "p";
pub const SIGNAL: &str = "s";
pub const MAGNON: &str = "m";

/// Below this ratio `|Δ_s| / max(|g_ms|, |J|)` the dispersive reduction is
/// flagged as questionable.
pub const REDUCTION_VALIDITY_RATIO: f64 = 10.0;

/// Parameters of the effective pump–magnon model, in units of κ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EffectiveParams {
    pub delta_p: f64,
    pub delta_m: f64,
    pub chi: f64,
    pub g: f64,
    #[serde(rename = "F")]
    pub f: f64,
    #[serde(default = "one")]
    pub kappa: f64,
    pub gamma: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for EffectiveParams {
    /// Weak-coupling operating point: κ = 1, γ = 0.5, Δ_m = 10, F = 0.05,
    /// χ = g = 0.5, Δ_p = 0.
    fn default() -> Self {
        EffectiveParams {
            delta_p: 0.0,
            delta_m: 10.0,
            chi: 0.5,
            g: 0.5,
            f: 0.05,
            kappa: 1.0,
            gamma: 0.5,
        }
    }
}

impl EffectiveParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("delta_p", self.delta_p),
            ("delta_m", self.delta_m),
            ("chi", self.chi),
            ("g", self.g),
            ("F", self.f),
            ("kappa", self.kappa),
            ("gamma", self.gamma),
        ];
        if let Some((name, _)) = fields.iter().find(|(_, v)| !v.is_finite()) {
            return Err(invalid(format!("parameter `{name}` is not finite")));
        }
        if self.kappa <= 0.0 {
            return Err(invalid("kappa must be positive"));
        }
        if self.gamma <= 0.0 {
            return Err(invalid("gamma must be positive"));
        }
        if self.f < 0.0 {
            return Err(invalid("drive amplitude F must be non-negative"));
        }
        Ok(())
    }

    /// The opposite propagation direction: the Kerr coefficient and the
    /// coupling both change sign with the signal detuning.
    pub fn reversed(&self) -> Self {
        EffectiveParams { chi: -self.chi, g: -self.g, ..*self }
    }
}

/// Lab-frame angular frequencies from which the rotating-frame detunings
/// follow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabFrame {
    pub omega_p: f64,
    pub omega_s: f64,
    pub omega_m: f64,
    pub omega_d: f64,
}

impl LabFrame {
    /// `(Δ_p, Δ_s, Δ̃_m)`; the pump is driven by a two-photon process, hence
    /// the half drive frequency.
    pub fn detunings(&self) -> (f64, f64, f64) {
        (
            self.omega_p - self.omega_d / 2.0,
            self.omega_s - self.omega_d,
            self.omega_m - self.omega_d,
        )
    }
}

/// Parameters of the three-mode model in the drive frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FullModelParams {
    pub delta_p: f64,
    pub delta_s: f64,
    pub delta_m_tilde: f64,
    pub g_ms: f64,
    #[serde(rename = "J")]
    pub j: f64,
    #[serde(rename = "F")]
    pub f: f64,
    #[serde(default = "one")]
    pub kappa: f64,
    pub gamma: f64,
    #[serde(default)]
    pub kappa_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lab_frame: Option<LabFrame>,
}

impl FullModelParams {
    /// Builds the parameter set with detunings derived from lab-frame
    /// frequencies.
    #[allow(clippy::too_many_arguments)]
    pub fn from_lab_frame(
        lab: LabFrame,
        g_ms: f64,
        j: f64,
        f: f64,
        kappa: f64,
        gamma: f64,
        kappa_s: f64,
    ) -> Self {
        let (delta_p, delta_s, delta_m_tilde) = lab.detunings();
        FullModelParams {
            delta_p,
            delta_s,
            delta_m_tilde,
            g_ms,
            j,
            f,
            kappa,
            gamma,
            kappa_s,
            lab_frame: Some(lab),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("delta_p", self.delta_p),
            ("delta_s", self.delta_s),
            ("delta_m_tilde", self.delta_m_tilde),
            ("g_ms", self.g_ms),
            ("J", self.j),
            ("F", self.f),
            ("kappa", self.kappa),
            ("gamma", self.gamma),
            ("kappa_s", self.kappa_s),
        ];
        if let Some((name, _)) = fields.iter().find(|(_, v)| !v.is_finite()) {
            return Err(invalid(format!("parameter `{name}` is not finite")));
        }
        if self.kappa <= 0.0 || self.gamma <= 0.0 {
            return Err(invalid("kappa and gamma must be positive"));
        }
        if self.kappa_s < 0.0 {
            return Err(invalid("kappa_s must be non-negative"));
        }
        if self.f < 0.0 {
            return Err(invalid("drive amplitude F must be non-negative"));
        }
        if let Some(lab) = self.lab_frame {
            if lab.detunings() != (self.delta_p, self.delta_s, self.delta_m_tilde) {
                return Err(invalid("detunings disagree with the lab-frame frequencies"));
            }
        }
        Ok(())
    }

    /// `|Δ_s| / max(|g_ms|, |J|)`; infinite when both couplings vanish.
    pub fn validity_ratio(&self) -> f64 {
        let coupling = self.g_ms.abs().max(self.j.abs());
        if coupling == 0.0 {
            f64::INFINITY
        } else {
            self.delta_s.abs() / coupling
        }
    }
}

/// Adiabatically eliminates the signal cavity.
///
/// Logs a warning when `|Δ_s|` is less than ten times the larger coupling.
pub fn reduce(full: &FullModelParams) -> Result<EffectiveParams> {
    if full.delta_s == 0.0 {
        return Err(Error::DivisionByZero("signal detuning delta_s is zero"));
    }
    let ratio = full.validity_ratio();
    if ratio < REDUCTION_VALIDITY_RATIO {
        log::warn!(
            "|delta_s| / max(|g_ms|, |J|) = {ratio:.3} < {REDUCTION_VALIDITY_RATIO}; \
             the dispersive reduction may be inaccurate"
        );
    }
    let ds = full.delta_s;
    Ok(EffectiveParams {
        delta_p: full.delta_p,
        delta_m: full.delta_m_tilde - full.g_ms * full.g_ms / ds,
        chi: -full.j * full.j / ds,
        g: -full.g_ms * full.j / ds,
        f: full.f,
        kappa: full.kappa,
        gamma: full.gamma,
    })
}

pub fn effective_space(cutoff_p: usize, cutoff_m: usize) -> Result<HilbertSpec> {
    HilbertSpec::new([(PUMP, cutoff_p), (MAGNON, cutoff_m)])
}

pub fn full_space(cutoff_p: usize, cutoff_s: usize, cutoff_m: usize) -> Result<HilbertSpec> {
    HilbertSpec::new([(PUMP, cutoff_p), (SIGNAL, cutoff_s), (MAGNON, cutoff_m)])
}

fn require_modes(space: &HilbertSpec, labels: &[&str]) -> Result<()> {
    if space.has_exactly(labels) {
        Ok(())
    } else {
        let found: Vec<&str> = space.modes().iter().map(|m| m.label.as_str()).collect();
        Err(invalid(format!("expected modes {labels:?}, found {found:?}")))
    }
}

/// `Δ_p n_p + Δ_m n_m + χ a†²a² + g(a†²m + a²m†) + F(a² + a†²)`.
pub fn build_h_eff(params: &EffectiveParams, space: &HilbertSpec) -> Result<Operator> {
    require_modes(space, &[PUMP, MAGNON])?;
    let p = mode_ops(space, PUMP)?;
    let m = mode_ops(space, MAGNON)?;
    let a2 = &p.annihilation * &p.annihilation;
    let ad2 = &p.creation * &p.creation;

    let mut h = &p.number * params.delta_p;
    h = &h + &(&m.number * params.delta_m);
    h = &h + &(&(&ad2 * &a2) * params.chi);
    let exchange = &(&ad2 * &m.annihilation) + &(&a2 * &m.creation);
    h = &h + &(&exchange * params.g);
    h = &h + &(&(&a2 + &ad2) * params.f);
    Ok(h)
}

/// Effective Hamiltonian with the no-jump decay terms
/// `−i(κ/2) n_p − i(γ/2) n_m`.
pub fn build_h_nonhermitian(params: &EffectiveParams, space: &HilbertSpec) -> Result<Operator> {
    let h = build_h_eff(params, space)?;
    let p = mode_ops(space, PUMP)?;
    let m = mode_ops(space, MAGNON)?;
    let decay = &(&p.number * params.kappa) + &(&m.number * params.gamma);
    Ok(&h - &decay.scale(c64::new(0.0, 0.5)))
}

/// Three-mode drive-frame Hamiltonian
/// `Δ_p n_p + Δ_s n_s + Δ̃_m n_m + J(a_p²a_s† + a_p†²a_s) + g_ms(a_s m† + a_s† m) + F(a_p² + a_p†²)`.
pub fn build_h_full(full: &FullModelParams, space: &HilbertSpec) -> Result<Operator> {
    require_modes(space, &[PUMP, SIGNAL, MAGNON])?;
    let p = mode_ops(space, PUMP)?;
    let s = mode_ops(space, SIGNAL)?;
    let m = mode_ops(space, MAGNON)?;
    let a2 = &p.annihilation * &p.annihilation;
    let ad2 = &p.creation * &p.creation;

    let mut h = &p.number * full.delta_p;
    h = &h + &(&s.number * full.delta_s);
    h = &h + &(&m.number * full.delta_m_tilde);
    let conversion = &(&a2 * &s.creation) + &(&ad2 * &s.annihilation);
    h = &h + &(&conversion * full.j);
    let beam_splitter = &(&s.annihilation * &m.creation) + &(&s.creation * &m.annihilation);
    h = &h + &(&beam_splitter * full.g_ms);
    h = &h + &(&(&a2 + &ad2) * full.f);
    Ok(h)
}

/// A jump operator `σ` with rate `r`, contributing
/// `(r/2)(2σρσ† − σ†σρ − ρσ†σ)` to the master equation.
#[derive(Debug, Clone)]
pub struct CollapseChannel {
    pub operator: Operator,
    pub rate: f64,
}

impl CollapseChannel {
    pub fn new(operator: Operator, rate: f64) -> Result<Self> {
        if !(rate >= 0.0) || !rate.is_finite() {
            return Err(invalid(format!("collapse rate {rate} must be finite and non-negative")));
        }
        Ok(CollapseChannel { operator, rate })
    }
}

/// A dissipative model that can be turned into a master equation.
pub trait OpenSystem {
    fn hamiltonian(&self, space: &HilbertSpec) -> Result<Operator>;
    fn collapse_channels(&self, space: &HilbertSpec) -> Result<Vec<CollapseChannel>>;
}

impl OpenSystem for EffectiveParams {
    fn hamiltonian(&self, space: &HilbertSpec) -> Result<Operator> {
        build_h_eff(self, space)
    }

    fn collapse_channels(&self, space: &HilbertSpec) -> Result<Vec<CollapseChannel>> {
        require_modes(space, &[PUMP, MAGNON])?;
        Ok(vec![
            CollapseChannel::new(mode_ops(space, PUMP)?.annihilation, self.kappa)?,
            CollapseChannel::new(mode_ops(space, MAGNON)?.annihilation, self.gamma)?,
        ])
    }
}

impl OpenSystem for FullModelParams {
    fn hamiltonian(&self, space: &HilbertSpec) -> Result<Operator> {
        build_h_full(self, space)
    }

    fn collapse_channels(&self, space: &HilbertSpec) -> Result<Vec<CollapseChannel>> {
        require_modes(space, &[PUMP, SIGNAL, MAGNON])?;
        let mut channels =
            vec![CollapseChannel::new(mode_ops(space, PUMP)?.annihilation, self.kappa)?];
        if self.kappa_s != 0.0 {
            channels.push(CollapseChannel::new(
                mode_ops(space, SIGNAL)?.annihilation,
                self.kappa_s,
            )?);
        }
        channels.push(CollapseChannel::new(mode_ops(space, MAGNON)?.annihilation, self.gamma)?);
        Ok(channels)
    }
}

pub fn collapse_channels(
    params: &impl OpenSystem,
    space: &HilbertSpec,
) -> Result<Vec<CollapseChannel>> {
    params.collapse_channels(space)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn full(g_ms: f64, j: f64, delta_s: f64, delta_m_tilde: f64) -> FullModelParams {
        FullModelParams {
            delta_p: -3.0,
            delta_s,
            delta_m_tilde,
            g_ms,
            j,
            f: 0.05,
            kappa: 1.0,
            gamma: 0.5,
            kappa_s: 0.0,
            lab_frame: None,
        }
    }

    fn parity(space: &HilbertSpec) -> Operator {
        let pos = space.position(PUMP).unwrap();
        Operator::from_fn(space.clone(), |i, j| {
            if i != j {
                c64::new(0.0, 0.0)
            } else if space.occupations(i)[pos] % 2 == 0 {
                c64::new(1.0, 0.0)
            } else {
                c64::new(-1.0, 0.0)
            }
        })
    }

    #[test]
    fn reduce_examples() {
        let e = reduce(&full(10.0, 10.0, 100.0, 11.0)).unwrap();
        assert_eq!((e.g, e.chi, e.delta_m), (-1.0, -1.0, 10.0));

        let e = reduce(&full(10.0, 10.0, -100.0, 11.0)).unwrap();
        assert_eq!((e.g, e.chi, e.delta_m), (1.0, 1.0, 12.0));

        let e = reduce(&full(7.0, 0.0, 50.0, 10.0)).unwrap();
        assert_eq!(e.g, 0.0);
        assert_eq!(e.chi, 0.0);
        assert_eq!(e.delta_m, 10.0 - 49.0 / 50.0);
        assert_eq!(e.delta_p, -3.0);
        assert_eq!(e.f, 0.05);
    }

    #[test]
    fn reduce_rejects_zero_signal_detuning() {
        assert!(matches!(reduce(&full(1.0, 1.0, 0.0, 1.0)), Err(Error::DivisionByZero(_))));
    }

    #[test]
    fn lab_frame_detunings() {
        let lab = LabFrame { omega_p: 7.0, omega_s: 130.0, omega_m: 12.0, omega_d: 4.0 };
        let p = FullModelParams::from_lab_frame(lab, 1.0, 1.0, 0.05, 1.0, 0.5, 0.0);
        assert_eq!((p.delta_p, p.delta_s, p.delta_m_tilde), (5.0, 126.0, 8.0));
        p.validate().unwrap();
        let bad = FullModelParams { delta_p: 4.0, ..p };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn free_hamiltonian_is_diagonal() {
        let space = effective_space(5, 3).unwrap();
        let params =
            EffectiveParams { g: 0.0, f: 0.0, chi: 0.0, delta_p: 1.5, delta_m: -2.0, ..Default::default() };
        let h = build_h_eff(&params, &space).unwrap();
        for i in 0..space.dim() {
            for j in 0..space.dim() {
                let occ = space.occupations(i);
                let expected = if i == j { 1.5 * occ[0] as f64 - 2.0 * occ[1] as f64 } else { 0.0 };
                assert_eq!(h.get(i, j), c64::new(expected, 0.0));
            }
        }

        let fspace = full_space(4, 3, 3).unwrap();
        let fp = FullModelParams { j: 0.0, g_ms: 0.0, f: 0.0, ..full(0.0, 0.0, 40.0, 2.0) };
        let h = build_h_full(&fp, &fspace).unwrap();
        for i in 0..fspace.dim() {
            for j in 0..fspace.dim() {
                let occ = fspace.occupations(i);
                let expected = if i == j {
                    -3.0 * occ[0] as f64 + 40.0 * occ[1] as f64 + 2.0 * occ[2] as f64
                } else {
                    0.0
                };
                assert_eq!(h.get(i, j), c64::new(expected, 0.0));
            }
        }
    }

    #[test]
    fn effective_matrix_elements() {
        let space = effective_space(4, 3).unwrap();
        let params = EffectiveParams { g: 0.7, f: 0.3, ..Default::default() };
        let h = build_h_eff(&params, &space).unwrap();
        let i20 = space.index_of(&[2, 0]).unwrap();
        let i01 = space.index_of(&[0, 1]).unwrap();
        let i00 = space.index_of(&[0, 0]).unwrap();
        assert!((h.get(i20, i01) - c64::new(2f64.sqrt() * 0.7, 0.0)).norm() < 1e-14);
        assert!((h.get(i20, i00) - c64::new(2f64.sqrt() * 0.3, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn nonhermitian_part_and_diagonal() {
        let space = effective_space(4, 3).unwrap();
        let params = EffectiveParams { delta_p: -1.3, delta_m: 4.0, chi: 0.8, ..Default::default() };
        let h = build_h_eff(&params, &space).unwrap();
        let hp = build_h_nonhermitian(&params, &space).unwrap();
        let anti = &hp - &h;
        for i in 0..space.dim() {
            for j in 0..space.dim() {
                let occ = space.occupations(i);
                let expected = if i == j {
                    c64::new(0.0, -0.5 * occ[0] as f64 - 0.25 * occ[1] as f64)
                } else {
                    c64::new(0.0, 0.0)
                };
                assert_eq!(anti.get(i, j), expected);
            }
        }
        let i21 = space.index_of(&[2, 1]).unwrap();
        let expected = c64::new(2.0 * -1.3 + 4.0 + 2.0 * 0.8, -(1.0 + 0.25));
        assert!((hp.get(i21, i21) - expected).norm() < 1e-14);

        let lossless =
            build_h_nonhermitian(&EffectiveParams { kappa: 0.0, gamma: 0.0, ..params }, &space)
                .unwrap();
        assert_eq!((&lossless - &h).norm_max(), 0.0);
    }

    #[test]
    fn full_model_conversion_element() {
        let space = full_space(4, 3, 2).unwrap();
        let p = full(0.4, 1.7, 30.0, 5.0);
        let h = build_h_full(&p, &space).unwrap();
        let row = space.index_of(&[0, 1, 0]).unwrap();
        let col = space.index_of(&[2, 0, 0]).unwrap();
        assert!((h.get(row, col) - c64::new(2f64.sqrt() * 1.7, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn wrong_mode_sets_rejected() {
        let three = full_space(3, 2, 2).unwrap();
        let two = effective_space(3, 2).unwrap();
        assert!(build_h_eff(&EffectiveParams::default(), &three).is_err());
        assert!(build_h_full(&full(1.0, 1.0, 10.0, 1.0), &two).is_err());
        let odd = HilbertSpec::new([("p", 3), ("x", 2)]).unwrap();
        assert!(build_h_nonhermitian(&EffectiveParams::default(), &odd).is_err());
    }

    #[test]
    fn collapse_channel_lists() {
        let space = effective_space(4, 3).unwrap();
        let params = EffectiveParams { kappa: 1.0, gamma: 0.5, ..Default::default() };
        let ch = collapse_channels(&params, &space).unwrap();
        assert_eq!(ch.iter().map(|c| c.rate).collect::<Vec<_>>(), vec![1.0, 0.5]);
        for c in &ch {
            for i in 0..space.dim() {
                assert_eq!(c.operator.get(i, i), c64::new(0.0, 0.0));
            }
        }

        let fspace = full_space(3, 2, 2).unwrap();
        let fp = full(1.0, 1.0, 10.0, 1.0);
        assert_eq!(collapse_channels(&fp, &fspace).unwrap().len(), 2);
        let lossy = FullModelParams { kappa_s: 0.2, ..fp };
        let rates: Vec<f64> =
            collapse_channels(&lossy, &fspace).unwrap().iter().map(|c| c.rate).collect();
        assert_eq!(rates, vec![1.0, 0.2, 0.5]);
    }

    fn arb_effective() -> impl Strategy<Value = EffectiveParams> {
        (-20.0f64..20.0, -20.0f64..20.0, -3.0f64..3.0, -6.0f64..6.0, 0.0f64..0.5, 0.1f64..2.0)
            .prop_map(|(delta_p, delta_m, chi, g, f, gamma)| EffectiveParams {
                delta_p,
                delta_m,
                chi,
                g,
                f,
                kappa: 1.0,
                gamma,
            })
    }

    proptest! {
        #[test]
        fn effective_hamiltonian_hermitian_and_parity_conserving(params in arb_effective()) {
            let space = effective_space(6, 3).unwrap();
            let h = build_h_eff(&params, &space).unwrap();
            prop_assert!(h.hermiticity_error() <= 1e-12);
            prop_assert!(h.commutator(&parity(&space)).norm_max() <= 1e-12);
        }

        #[test]
        fn full_hamiltonian_hermitian(
            dp in -10.0f64..10.0, ds in 10.0f64..100.0, dm in -10.0f64..10.0,
            g_ms in -5.0f64..5.0, j in -5.0f64..5.0, f in 0.0f64..0.5,
        ) {
            let space = full_space(4, 3, 3).unwrap();
            let p = FullModelParams { delta_p: dp, delta_s: ds, delta_m_tilde: dm, g_ms, j, f, ..full(0.0, 0.0, 1.0, 0.0) };
            let h = build_h_full(&p, &space).unwrap();
            prop_assert!(h.hermiticity_error() <= 1e-12);

            // without drive, n_p/2 + n_s + n_m is conserved
            let undriven = build_h_full(&FullModelParams { f: 0.0, ..p }, &space).unwrap();
            let n = Operator::from_fn(space.clone(), |a, b| {
                if a != b { return c64::new(0.0, 0.0); }
                let o = space.occupations(a);
                c64::new(o[0] as f64 / 2.0 + o[1] as f64 + o[2] as f64, 0.0)
            });
            prop_assert!(undriven.commutator(&n).norm_max() <= 1e-12);
        }

        #[test]
        fn reduce_is_odd_in_signal_detuning(
            g_ms in -20.0f64..20.0, j in -20.0f64..20.0, ds in 1.0f64..500.0, dmt in -20.0f64..20.0,
        ) {
            let fwd = reduce(&full(g_ms, j, ds, dmt)).unwrap();
            let bwd = reduce(&full(g_ms, j, -ds, dmt)).unwrap();
            prop_assert_eq!(fwd.g, -bwd.g);
            prop_assert_eq!(fwd.chi, -bwd.chi);
            let shift = (fwd.delta_m - dmt) + (bwd.delta_m - dmt);
            prop_assert!(shift.abs() <= 1e-12 * (1.0 + dmt.abs()));
        }
    }
}
