// SPDX-License-Identifier: Apache-2.0

//! Self-checks run by `magblock validate`: oracle equivalences, solver
//! cross-checks, truncation convergence and the full-vs-effective comparison.

use faer::{c64, Mat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::analytic::{
    amplitude_derivative, g2_analytic, g2_from_amplitudes, steady_amplitudes, AmplitudeSet, Factors,
};
use crate::error::{invalid, Result};
use crate::model::{effective_space, full_space, reduce, EffectiveParams, FullModelParams, MAGNON};
use crate::steadystate::{
    evolve, evolve_observed, liouvillian_for, occupation, solve_steady, trace_distance, DensityMatrix,
    Superoperator,
};
use crate::sweep::{numeric_point, G2Cell, Method, SolverSpec};

/// Outcome of one check.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    /// The measured figure of merit; `null` when the check crashed.
    pub measured: Option<f64>,
    pub threshold: f64,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct ValidateOptions {
    pub seed: u64,
    pub oracle_points: usize,
    pub cutoff_p: usize,
    pub cutoff_m: usize,
    /// Mutation hook: evaluates the amplitude side of the identity check
    /// with the Kerr coefficient's sign flipped.
    pub flip_kerr_sign: bool,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        ValidateOptions { seed: 0, oracle_points: 100, cutoff_p: 12, cutoff_m: 6, flip_kerr_sign: false }
    }
}

/// Draws a parameter point well away from every singular denominator.
pub fn random_nonsingular(rng: &mut impl Rng) -> EffectiveParams {
    loop {
        let p = EffectiveParams {
            delta_p: rng.random_range(-25.0..10.0),
            delta_m: rng.random_range(-15.0..15.0),
            chi: rng.random_range(-3.0..3.0),
            g: rng.random_range(-6.0..6.0),
            f: rng.random_range(0.005..0.1),
            kappa: 1.0,
            gamma: 0.5,
        };
        let fac = Factors::new(&p);
        let scale = 1.0 + p.delta_p.abs() + p.delta_m.abs();
        if fac.y.abs() > 1e-2 * scale
            && fac.pole(p.g).abs() > 1e-2 * scale.powi(3)
            && (4.0 * p.delta_p + 12.0 * p.chi).abs() > 1e-2
            && p.delta_m.abs() > 0.1
            && fac.x.abs() > 1e-3
        {
            return p;
        }
    }
}

/// Drive order of each amplitude in `c00, c20, c01, c40, c21, c02`.
const ORDER: [u8; 6] = [0, 1, 1, 2, 2, 2];

/// Steady amplitudes from the amplitude equations themselves: the generator
/// is read off [`amplitude_derivative`] at `κ = γ = 0`, couplings from
/// higher to lower drive order are dropped, `c00 = 1`, and the remaining
/// 5×5 system is solved by LU.
pub fn hierarchy_amplitudes(p: &EffectiveParams) -> Result<AmplitudeSet> {
    let lossless = EffectiveParams { kappa: 0.0, gamma: 0.0, ..*p };
    // i·dC/dt = M·C, so column j of M is i·derivative(e_j)
    let mut m = [[c64::ZERO; 6]; 6];
    for j in 0..6 {
        let mut e = [c64::ZERO; 6];
        e[j] = c64::new(1.0, 0.0);
        let d = amplitude_derivative(&AmplitudeSet::from_array(e), &lossless).to_array();
        for i in 0..6 {
            m[i][j] = c64::new(0.0, 1.0) * d[i];
        }
    }
    let a = Mat::<c64>::from_fn(5, 5, |i, j| {
        if ORDER[j + 1] > ORDER[i + 1] {
            c64::ZERO
        } else {
            m[i + 1][j + 1]
        }
    });
    let b = Mat::<c64>::from_fn(5, 1, |i, _| -m[i + 1][0]);
    use faer::linalg::solvers::Solve;
    let x = a.partial_piv_lu().solve(&b);
    let mut out = [c64::new(1.0, 0.0); 6];
    for i in 0..5 {
        out[i + 1] = x[(i, 0)];
    }
    let set = AmplitudeSet::from_array(out);
    if !set.is_finite() {
        return Err(invalid("hierarchy system is singular"));
    }
    Ok(set)
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

fn rel_c(a: c64, b: c64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).norm() / a.norm().max(b.norm())
    }
}

fn check(name: &'static str, threshold: f64, run: impl FnOnce() -> Result<(f64, String)>) -> Check {
    match run() {
        Ok((measured, detail)) => Check {
            name,
            passed: measured <= threshold,
            measured: Some(measured),
            threshold,
            detail,
        },
        Err(e) => Check { name, passed: false, measured: None, threshold, detail: format!("error: {e}") },
    }
}

/// (a) closed-form amplitudes against the elimination of the amplitude
/// equations; worst relative deviation over all components and points.
pub fn check_linear_oracle(opts: &ValidateOptions) -> Check {
    check("linear-system oracle vs closed-form amplitudes", 1e-9, || {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let mut worst = 0.0f64;
        for _ in 0..opts.oracle_points {
            let p = random_nonsingular(&mut rng);
            let closed = steady_amplitudes(&p)?.to_array();
            let brute = hierarchy_amplitudes(&p)?.to_array();
            for (c, b) in closed.iter().zip(&brute) {
                worst = worst.max(rel_c(*c, *b));
            }
        }
        Ok((worst, format!("{} random points, seed {}", opts.oracle_points, opts.seed)))
    })
}

/// (b) `2|c02|²/|c01|⁴` against `X²Y²/(Z+g²X)²`.
pub fn check_g2_identity(opts: &ValidateOptions) -> Check {
    check("amplitude g2 vs closed-form g2", 1e-9, || {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(1));
        let mut worst = 0.0f64;
        for _ in 0..opts.oracle_points {
            let p = random_nonsingular(&mut rng);
            let amp_params = if opts.flip_kerr_sign { EffectiveParams { chi: -p.chi, ..p } } else { p };
            let from_amps = g2_from_amplitudes(&steady_amplitudes(&amp_params)?)?;
            worst = worst.max(rel(from_amps, g2_analytic(&p)?));
        }
        let note = if opts.flip_kerr_sign { " (Kerr sign flipped on the amplitude side)" } else { "" };
        Ok((worst, format!("{} random points, seed {}{note}", opts.oracle_points, opts.seed + 1)))
    })
}

/// Time step used for RK4 relaxation runs: half the inverse spectral scale.
pub fn relaxation_dt(l: &Superoperator) -> f64 {
    0.5 / l.max_abs_diagonal().max(1.0)
}

/// Trace distance between the linear-solve steady state and RK4 evolution
/// from vacuum to `t_final`.
pub fn steady_vs_evolution(params: &EffectiveParams, cutoff_p: usize, cutoff_m: usize, t_final: f64) -> Result<f64> {
    let space = effective_space(cutoff_p, cutoff_m)?;
    let l = liouvillian_for(params, &space)?;
    let ss = solve_steady(&l)?;
    let rho = evolve(&DensityMatrix::vacuum(&space), &l, t_final, relaxation_dt(&l))?;
    trace_distance(&ss.rho, &rho)
}

/// Operating points of the solver cross-checks: the unconventional dip, a
/// generic detuning, and the nonreciprocity point.
pub fn spot_points() -> Vec<EffectiveParams> {
    let base = EffectiveParams::default();
    vec![
        EffectiveParams { delta_p: -16.5, ..base },
        EffectiveParams { delta_p: -5.0, ..base },
        EffectiveParams { delta_p: 2.0, g: 5.0, ..base },
        EffectiveParams { delta_p: -12.0, chi: -1.0, g: 1.0, ..base },
        EffectiveParams { delta_p: -9.0, chi: -2.0, g: 1.0, ..base },
    ]
}

/// (c) steady solve against time evolution at t = 50.
pub fn check_steady_vs_evolution(opts: &ValidateOptions) -> Check {
    check("steady solve vs time evolution", 1e-4, || {
        let pts = [spot_points()[0], spot_points()[1]];
        let mut worst = 0.0f64;
        for p in &pts {
            worst = worst.max(steady_vs_evolution(p, opts.cutoff_p, opts.cutoff_m, 50.0)?);
        }
        Ok((worst, format!("max trace distance at {} points, cutoffs ({}, {})", pts.len(), opts.cutoff_p, opts.cutoff_m)))
    })
}

/// Relative change of the numeric g² when the cutoffs grow by (4, 2).
pub fn truncation_change(params: &EffectiveParams, cutoff_p: usize, cutoff_m: usize) -> Result<f64> {
    let g2 = |cp, cm| -> Result<f64> {
        let solver = SolverSpec { cutoff_p: cp, cutoff_m: cm, method: Method::SteadyLinear, dt: None, t_final: None };
        match numeric_point(params, &solver)?.g2 {
            G2Cell::Value(v) => Ok(v),
            _ => Err(invalid("g2 undefined at the convergence point")),
        }
    };
    let lo = g2(cutoff_p, cutoff_m)?;
    let hi = g2(cutoff_p + 4, cutoff_m + 2)?;
    Ok((lo - hi).abs() / hi.abs())
}

/// (d) truncation convergence at the dip and a generic point.
pub fn check_truncation(opts: &ValidateOptions) -> Check {
    check("truncation convergence", 1e-2, || {
        let pts = [spot_points()[0], spot_points()[1]];
        let mut worst = 0.0f64;
        for p in &pts {
            worst = worst.max(truncation_change(p, opts.cutoff_p, opts.cutoff_m)?);
        }
        Ok((
            worst,
            format!(
                "max relative g2 change from ({}, {}) to ({}, {})",
                opts.cutoff_p,
                opts.cutoff_m,
                opts.cutoff_p + 4,
                opts.cutoff_m + 2
            ),
        ))
    })
}

/// Magnon occupation of the full and the reduced model along a common time
/// grid.
#[derive(Debug, Clone, Serialize)]
pub struct ReductionTrace {
    pub times: Vec<f64>,
    pub n_m_full: Vec<f64>,
    pub n_m_effective: Vec<f64>,
}

impl ReductionTrace {
    /// `max_t |n_full − n_eff| / max(n_eff, floor·max_t n_eff)`; the floor
    /// keeps the start from vacuum, where both vanish, from dominating.
    pub fn max_relative_deviation(&self, floor: f64) -> f64 {
        let peak = self.n_m_effective.iter().copied().fold(0.0, f64::max);
        self.n_m_full
            .iter()
            .zip(&self.n_m_effective)
            .map(|(f, e)| (f - e).abs() / e.max(floor * peak))
            .fold(0.0, f64::max)
    }
}

/// Cutoffs `(pump, signal, magnon)` for the three-mode comparison.
pub const FULL_CUTOFFS: (usize, usize, usize) = (6, 3, 3);
pub const DEVIATION_FLOOR: f64 = 0.05;

/// Evolves both models from vacuum and samples `⟨n_m⟩` every `sample`.
pub fn reduction_trace(full: &FullModelParams, t_final: f64, sample: f64) -> Result<ReductionTrace> {
    let eff = reduce(full)?;
    let (cp, cs, cm) = FULL_CUTOFFS;
    let fspace = full_space(cp, cs, cm)?;
    let espace = effective_space(cp, cm)?;
    let lf = liouvillian_for(full, &fspace)?;
    let le = liouvillian_for(&eff, &espace)?;
    // one step size for both so the samples coincide
    let per_sample = (sample * lf.max_abs_diagonal().max(1.0) / 0.5).ceil().max(1.0);
    let dt = sample / per_sample;
    let stride = per_sample as u64;

    let mut times = Vec::new();
    let mut n_full = Vec::new();
    let mut err = None;
    evolve_observed(&DensityMatrix::vacuum(&fspace), &lf, t_final, dt, stride, |t, rho| {
        times.push(t);
        match occupation(rho, MAGNON) {
            Ok(n) => n_full.push(n),
            Err(e) => err = Some(e),
        }
    })?;
    let mut n_eff = Vec::new();
    evolve_observed(&DensityMatrix::vacuum(&espace), &le, t_final, dt, stride, |_, rho| {
        match occupation(rho, MAGNON) {
            Ok(n) => n_eff.push(n),
            Err(e) => err = Some(e),
        }
    })?;
    if let Some(e) = err {
        return Err(e);
    }
    Ok(ReductionTrace { times, n_m_full: n_full, n_m_effective: n_eff })
}

/// Three-mode operating point for the reduction check: `g_ms = J`,
/// `Δs = 50·g_ms`, no signal loss, effective detunings of the generic point.
pub fn reduction_params(coupling: f64) -> FullModelParams {
    let delta_s = 50.0 * coupling;
    let target = EffectiveParams { delta_p: -5.0, ..Default::default() };
    FullModelParams {
        delta_p: target.delta_p,
        delta_s,
        delta_m_tilde: target.delta_m + coupling * coupling / delta_s,
        g_ms: coupling,
        j: coupling,
        f: 0.05,
        kappa: 1.0,
        gamma: target.gamma,
        kappa_s: 0.0,
        lab_frame: None,
    }
}

/// (e) full three-mode dynamics against the reduced model up to t = 10.
pub fn check_reduction(_opts: &ValidateOptions) -> Check {
    check("full vs effective magnon dynamics", 0.10, || {
        let full = reduction_params(10.0);
        let trace = reduction_trace(&full, 10.0, 0.1)?;
        Ok((
            trace.max_relative_deviation(DEVIATION_FLOOR),
            format!(
                "g_ms = J = {}, delta_s = {}, {} samples to t = 10",
                full.g_ms,
                full.delta_s,
                trace.times.len()
            ),
        ))
    })
}

pub fn run_all(opts: &ValidateOptions) -> Vec<Check> {
    vec![
        check_linear_oracle(opts),
        check_g2_identity(opts),
        check_steady_vs_evolution(opts),
        check_truncation(opts),
        check_reduction(opts),
    ]
}
