// SPDX-License-Identifier: Apache-2.0

//! Lindblad master equation: Liouvillian construction, steady state, time
//! evolution and the equal-time observables of the steady state.
//!
//! Density matrices are vectorized by stacking columns, so the element
//! `ρ[i, j]` sits at `j·D + i` and the map `ρ ↦ AρB` becomes `Bᵀ ⊗ A`.

use faer::sparse::{SparseColMat, Triplet};
use faer::{c64, Mat, Side};

use crate::error::{invalid, Error, Result};
use crate::fock::{expectation, mode_ops, Ket, HilbertSpec, Operator};
use crate::model::{CollapseChannel, OpenSystem};

const ZERO: c64 = c64 { re: 0.0, im: 0.0 };
const ONE: c64 = c64 { re: 1.0, im: 0.0 };

pub const HERMITICITY_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
pub const NEGATIVITY_TOL: f64 = 1e-8;
/// Steady-state residual bound, relative to the largest Liouvillian entry.
pub const RESIDUAL_TOL: f64 = 1e-8;
/// Occupations at or below this make g²(0) undefined.
pub const OCCUPATION_GUARD: f64 = 1e-14;
pub const MAX_STEPS: u64 = 100_000_000;
/// Above this 1-norm condition estimate the steady state is not unique.
pub const CONDITION_LIMIT: f64 = 1e14;

/// Quantities checked against the density-matrix invariants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityDiagnostics {
    pub trace_error: f64,
    pub hermiticity_error: f64,
    pub min_eigenvalue: f64,
}

impl DensityDiagnostics {
    pub fn is_valid(&self) -> bool {
        self.trace_error <= TRACE_TOL
            && self.hermiticity_error <= HERMITICITY_TOL
            && self.min_eigenvalue >= -NEGATIVITY_TOL
    }
}

#[derive(Debug, Clone)]
pub struct DensityMatrix {
    space: HilbertSpec,
    matrix: Mat<c64>,
}

impl DensityMatrix {
    /// Checks Hermiticity, unit trace and positivity.
    pub fn new(space: HilbertSpec, matrix: Mat<c64>) -> Result<Self> {
        let op = Operator::from_matrix(space, matrix)?;
        Self::from_operator(&op)
    }

    pub fn from_operator(op: &Operator) -> Result<Self> {
        let rho = DensityMatrix { space: op.space().clone(), matrix: op.matrix().clone() };
        let diag = rho.diagnostics()?;
        if !diag.is_valid() {
            return Err(invalid(format!("not a density matrix: {diag:?}")));
        }
        Ok(rho)
    }

    pub(crate) fn from_raw(space: HilbertSpec, matrix: Mat<c64>) -> Self {
        DensityMatrix { space, matrix }
    }

    pub fn pure(ket: &Ket) -> Result<Self> {
        let ket = ket.normalized()?;
        let amps = ket.amplitudes();
        let d = amps.len();
        let matrix = Mat::from_fn(d, d, |i, j| amps[i] * amps[j].conj());
        Ok(DensityMatrix { space: ket.space().clone(), matrix })
    }

    pub fn basis(space: &HilbertSpec, occupations: &[usize]) -> Result<Self> {
        Self::pure(&Ket::basis(space, occupations)?)
    }

    pub fn vacuum(space: &HilbertSpec) -> Self {
        let d = space.dim();
        let matrix = Mat::from_fn(d, d, |i, j| if i == 0 && j == 0 { ONE } else { ZERO });
        DensityMatrix { space: space.clone(), matrix }
    }

    pub fn maximally_mixed(space: &HilbertSpec) -> Self {
        let d = space.dim();
        let w = c64::new(1.0 / d as f64, 0.0);
        let matrix = Mat::from_fn(d, d, |i, j| if i == j { w } else { ZERO });
        DensityMatrix { space: space.clone(), matrix }
    }

    pub fn space(&self) -> &HilbertSpec {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &Mat<c64> {
        &self.matrix
    }

    pub fn trace(&self) -> c64 {
        (0..self.dim()).map(|i| self.matrix[(i, i)]).sum()
    }

    pub fn diagnostics(&self) -> Result<DensityDiagnostics> {
        let d = self.dim();
        let mut herm = 0.0f64;
        for j in 0..d {
            for i in 0..=j {
                herm = herm.max((self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm());
            }
        }
        let eig = self
            .matrix
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| invalid(format!("eigenvalue solver failed: {e:?}")))?;
        Ok(DensityDiagnostics {
            trace_error: (self.trace() - ONE).norm(),
            hermiticity_error: herm,
            min_eigenvalue: eig.first().copied().unwrap_or(0.0),
        })
    }

    /// `(ρ + ρ†)/2`, rescaled to unit trace.
    pub(crate) fn hermitized(mut self) -> Self {
        let d = self.dim();
        for j in 0..d {
            for i in 0..j {
                let avg = (self.matrix[(i, j)] + self.matrix[(j, i)].conj()) * 0.5;
                self.matrix[(i, j)] = avg;
                self.matrix[(j, i)] = avg.conj();
            }
            self.matrix[(j, j)] = c64::new(self.matrix[(j, j)].re, 0.0);
        }
        let tr = self.trace().re;
        if tr != 0.0 && tr.is_finite() {
            for j in 0..d {
                for i in 0..d {
                    self.matrix[(i, j)] /= tr;
                }
            }
        }
        self
    }

    fn to_vec(&self) -> Vec<c64> {
        let d = self.dim();
        let mut v = Vec::with_capacity(d * d);
        for j in 0..d {
            for i in 0..d {
                v.push(self.matrix[(i, j)]);
            }
        }
        v
    }

    fn from_vec(space: &HilbertSpec, v: &[c64]) -> Self {
        let d = space.dim();
        DensityMatrix { space: space.clone(), matrix: Mat::from_fn(d, d, |i, j| v[j * d + i]) }
    }
}

/// `½‖ρ − σ‖₁`.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.space != sigma.space {
        return Err(invalid("density matrices live on different spaces"));
    }
    let diff = &rho.matrix - &sigma.matrix;
    let eig = diff
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| invalid(format!("eigenvalue solver failed: {e:?}")))?;
    Ok(0.5 * eig.iter().map(|x| x.abs()).sum::<f64>())
}

/// Vectorization convention of a [`Superoperator`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Vectorization {
    ColumnStacking,
}

/// Compressed sparse row storage; rows are the output index of `L·vec(ρ)`.
#[derive(Debug, Clone)]
struct Csr {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<c64>,
}

impl Csr {
    fn from_entries(n: usize, mut entries: Vec<(usize, usize, c64)>) -> Self {
        entries.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0; n + 1];
        let mut col_idx = Vec::with_capacity(entries.len());
        let mut vals: Vec<c64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in entries {
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                vals.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..n {
            row_ptr[r + 1] += row_ptr[r];
        }
        Csr { n, row_ptr, col_idx, vals }
    }

    fn matvec(&self, x: &[c64], y: &mut [c64]) {
        for (r, out) in y.iter_mut().enumerate() {
            let mut acc = ZERO;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k] * x[self.col_idx[k]];
            }
            *out = acc;
        }
    }

    fn row(&self, r: usize) -> impl Iterator<Item = (usize, c64)> + '_ {
        (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (self.col_idx[k], self.vals[k]))
    }
}

/// Lindblad generator acting on column-stacked density matrices.
///
/// Stored sparse: the generator couples each element of ρ to only a handful
/// of others, and dense storage would be `D⁴` entries.
#[derive(Debug, Clone)]
pub struct Superoperator {
    space: HilbertSpec,
    csr: Csr,
}

impl Superoperator {
    pub const CONVENTION: Vectorization = Vectorization::ColumnStacking;

    pub fn space(&self) -> &HilbertSpec {
        &self.space
    }

    /// Side of the superoperator matrix, `D²`.
    pub fn dim(&self) -> usize {
        self.csr.n
    }

    pub fn nnz(&self) -> usize {
        self.csr.vals.len()
    }

    pub fn get(&self, row: usize, col: usize) -> c64 {
        self.csr.row(row).find(|&(c, _)| c == col).map(|(_, v)| v).unwrap_or(ZERO)
    }

    pub fn norm_max(&self) -> f64 {
        self.csr.vals.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Largest modulus on the diagonal; the spectral scale used for step sizes.
    pub fn max_abs_diagonal(&self) -> f64 {
        (0..self.dim()).map(|r| self.get(r, r).norm()).fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> Mat<c64> {
        let n = self.dim();
        let mut m = Mat::zeros(n, n);
        for r in 0..n {
            for (c, v) in self.csr.row(r) {
                m[(r, c)] = v;
            }
        }
        m
    }

    /// `unvec(L · vec(ρ))`.
    pub fn apply(&self, rho: &DensityMatrix) -> Result<Operator> {
        if rho.space != self.space {
            return Err(invalid("density matrix and superoperator live on different spaces"));
        }
        let x = rho.to_vec();
        let mut y = vec![ZERO; x.len()];
        self.csr.matvec(&x, &mut y);
        let d = self.space.dim();
        Ok(Operator::from_fn(self.space.clone(), |i, j| y[j * d + i]))
    }
}

/// Collects the entries of `ρ ↦ coeff · AρB` in column-stacked form.
fn push_sandwich(
    entries: &mut Vec<(usize, usize, c64)>,
    d: usize,
    a: &[(usize, usize, c64)],
    b: &[(usize, usize, c64)],
    coeff: c64,
) {
    // (AρB)[i, j] = Σ A[i, k] ρ[k, l] B[l, j]
    for &(l, j, bv) in b {
        for &(i, k, av) in a {
            entries.push((j * d + i, l * d + k, coeff * av * bv));
        }
    }
}

fn identity_entries(d: usize) -> Vec<(usize, usize, c64)> {
    (0..d).map(|i| (i, i, ONE)).collect()
}

/// Builds `L` with
/// `L·vec(ρ) = vec(−i[H, ρ] + Σ_k (r_k/2)(2σ_kρσ_k† − σ_k†σ_kρ − ρσ_k†σ_k))`.
pub fn build_liouvillian(h: &Operator, channels: &[CollapseChannel]) -> Result<Superoperator> {
    let herm = h.hermiticity_error();
    if herm > HERMITICITY_TOL {
        return Err(invalid(format!("Hamiltonian is not Hermitian (max |H - H†| = {herm:e})")));
    }
    let space = h.space().clone();
    for ch in channels {
        if ch.operator.space() != &space {
            return Err(invalid("collapse operator lives on a different space"));
        }
    }
    let d = space.dim();
    let id = identity_entries(d);
    let hz = h.nonzeros();
    let mut entries = Vec::new();
    push_sandwich(&mut entries, d, &hz, &id, c64::new(0.0, -1.0));
    push_sandwich(&mut entries, d, &id, &hz, c64::new(0.0, 1.0));
    for ch in channels {
        if ch.rate == 0.0 {
            continue;
        }
        let sigma = &ch.operator;
        let sigma_dag = sigma.adjoint();
        let number = &sigma_dag * sigma;
        let (sz, sdz, nz) = (sigma.nonzeros(), sigma_dag.nonzeros(), number.nonzeros());
        let r = ch.rate;
        push_sandwich(&mut entries, d, &sz, &sdz, c64::new(r, 0.0));
        push_sandwich(&mut entries, d, &nz, &id, c64::new(-r / 2.0, 0.0));
        push_sandwich(&mut entries, d, &id, &nz, c64::new(-r / 2.0, 0.0));
    }
    Ok(Superoperator { space, csr: Csr::from_entries(d * d, entries) })
}

/// Liouvillian of a model on a given space.
pub fn liouvillian_for(model: &impl OpenSystem, space: &HilbertSpec) -> Result<Superoperator> {
    let h = model.hamiltonian(space)?;
    let channels = model.collapse_channels(space)?;
    build_liouvillian(&h, &channels)
}

/// Steady state together with the quality of the solve.
#[derive(Debug, Clone)]
pub struct SteadyState {
    pub rho: DensityMatrix,
    /// `‖L·vec(ρ)‖_max / ‖L‖_max`.
    pub residual: f64,
    pub condition_estimate: f64,
}

fn max_abs(v: &[c64]) -> f64 {
    v.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

/// Steady state from the linear system in which the vacuum-population
/// equation is replaced by the trace constraint `Tr ρ = 1`.
///
/// The solution is polished by iterative refinement: steady states of weakly
/// driven systems carry elements twenty orders of magnitude below the vacuum
/// population, and a single factorization leaves rounding noise at the
/// `1e-16` level in exactly those elements.
pub fn solve_steady(l: &Superoperator) -> Result<SteadyState> {
    let n = l.dim();
    let d = l.space.dim();
    const REPLACED: usize = 0;

    let mut triplets = Vec::with_capacity(l.nnz() + d);
    for r in 0..n {
        if r == REPLACED {
            continue;
        }
        for (c, v) in l.csr.row(r) {
            triplets.push(Triplet::new(r, c, v));
        }
    }
    for k in 0..d {
        triplets.push(Triplet::new(REPLACED, k * d + k, ONE));
    }
    let a = SparseColMat::<usize, c64>::try_new_from_triplets(n, n, &triplets)
        .map_err(|e| invalid(format!("sparse assembly failed: {e:?}")))?;
    let a_csr = Csr::from_entries(n, triplets.iter().map(|t| (t.row, t.col, t.val)).collect());

    let lu = a
        .sp_lu()
        .map_err(|e| Error::NoUniqueSteadyState(format!("factorization failed: {e:?}")))?;
    let solve = |rhs: &[c64]| -> Vec<c64> {
        let mut b = Mat::<c64>::from_fn(n, 1, |i, _| rhs[i]);
        faer::linalg::solvers::SolveCore::solve_in_place_with_conj(
            &lu,
            faer::Conj::No,
            b.as_mut(),
        );
        (0..n).map(|i| b[(i, 0)]).collect()
    };

    let mut rhs = vec![ZERO; n];
    rhs[REPLACED] = ONE;
    let mut x = solve(&rhs);
    let mut resid = vec![ZERO; n];
    for _ in 0..4 {
        a_csr.matvec(&x, &mut resid);
        for (r, b) in resid.iter_mut().zip(&rhs) {
            *r = *b - *r;
        }
        let dx = solve(&resid);
        let step = max_abs(&dx);
        for (xi, di) in x.iter_mut().zip(&dx) {
            *xi += *di;
        }
        if !(step > 1e-17 * max_abs(&x)) {
            break;
        }
    }
    if x.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::NoUniqueSteadyState("solution is not finite".into()));
    }

    // 1-norm condition estimate from one extra solve with a fixed probe.
    let probe: Vec<c64> =
        (0..n).map(|i| c64::new((0.37 * i as f64 + 0.11).sin(), (0.71 * i as f64).cos())).collect();
    let y = solve(&probe);
    let norm1 = |v: &[c64]| v.iter().map(|z| z.norm()).sum::<f64>();
    let mut col_sums = vec![0.0f64; n];
    for r in 0..n {
        for (c, v) in a_csr.row(r) {
            col_sums[c] += v.norm();
        }
    }
    let a_norm1 = col_sums.into_iter().fold(0.0, f64::max);
    let condition_estimate = a_norm1 * norm1(&y) / norm1(&probe);
    if !(condition_estimate < CONDITION_LIMIT) {
        return Err(Error::NoUniqueSteadyState(format!(
            "condition estimate {condition_estimate:e} exceeds {CONDITION_LIMIT:e}"
        )));
    }

    let rho = DensityMatrix::from_vec(&l.space, &x).hermitized();
    let mut lr = vec![ZERO; n];
    l.csr.matvec(&rho.to_vec(), &mut lr);
    let residual = max_abs(&lr) / l.norm_max();
    if !(residual <= RESIDUAL_TOL) {
        return Err(Error::NoUniqueSteadyState(format!(
            "relative residual {residual:e} above {RESIDUAL_TOL:e}"
        )));
    }
    Ok(SteadyState { rho, residual, condition_estimate })
}

/// Steady state as the right singular vector of the smallest singular value.
///
/// Dense `D² × D²` SVD; intended as an independent check of
/// [`solve_steady`] on small truncations.
pub fn steady_state_svd(l: &Superoperator) -> Result<DensityMatrix> {
    const MAX_DIM: usize = 1024;
    if l.dim() > MAX_DIM {
        return Err(invalid(format!(
            "dense SVD limited to superoperators of side {MAX_DIM}, got {}",
            l.dim()
        )));
    }
    let svd = l
        .to_dense()
        .svd()
        .map_err(|e| invalid(format!("SVD failed: {e:?}")))?;
    let v = svd.V();
    let last = v.ncols() - 1;
    let x: Vec<c64> = (0..v.nrows()).map(|i| v[(i, last)]).collect();
    let rho = DensityMatrix::from_vec(&l.space, &x);
    let tr = rho.trace();
    let d = rho.dim();
    let scaled = Mat::from_fn(d, d, |i, j| rho.matrix[(i, j)] / tr);
    Ok(DensityMatrix::from_raw(l.space.clone(), scaled).hermitized())
}

/// `10⁻² / max(1, max|diag L|)`.
pub fn default_dt(l: &Superoperator) -> f64 {
    1e-2 / l.max_abs_diagonal().max(1.0)
}

fn step_count(t_final: f64, dt: f64) -> Result<u64> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(invalid(format!("time step {dt} must be positive")));
    }
    if !(t_final >= 0.0) || !t_final.is_finite() {
        return Err(invalid(format!("final time {t_final} must be non-negative")));
    }
    let steps = (t_final / dt).ceil();
    if steps > MAX_STEPS as f64 {
        return Err(Error::StepOverflow(steps as u64));
    }
    Ok(steps as u64)
}

/// Fixed-step classical RK4 integration of `dρ/dt = L ρ`.
pub fn evolve(rho0: &DensityMatrix, l: &Superoperator, t_final: f64, dt: f64) -> Result<DensityMatrix> {
    evolve_observed(rho0, l, t_final, dt, 0, |_, _| {})
}

/// [`evolve`] that also hands the state to `observer` at `t = 0` and after
/// every `stride` steps (never when `stride` is 0). The step is shrunk so the
/// run lands exactly on `t_final`.
pub fn evolve_observed(
    rho0: &DensityMatrix,
    l: &Superoperator,
    t_final: f64,
    dt: f64,
    stride: u64,
    mut observer: impl FnMut(f64, &DensityMatrix),
) -> Result<DensityMatrix> {
    if rho0.space != l.space {
        return Err(invalid("initial state and superoperator live on different spaces"));
    }
    let steps = step_count(t_final, dt)?;
    if steps == 0 {
        return Ok(rho0.clone());
    }
    let h = t_final / steps as f64;
    let n = l.dim();
    let d = l.space.dim();
    let trace_of = |v: &[c64]| -> c64 { (0..d).map(|k| v[k * d + k]).sum() };
    let initial_trace = trace_of(&rho0.to_vec());

    let mut x = rho0.to_vec();
    let (mut k1, mut k2, mut k3, mut k4) =
        (vec![ZERO; n], vec![ZERO; n], vec![ZERO; n], vec![ZERO; n]);
    let mut tmp = vec![ZERO; n];
    if stride > 0 {
        observer(0.0, rho0);
    }
    for step in 1..=steps {
        l.csr.matvec(&x, &mut k1);
        for i in 0..n {
            tmp[i] = x[i] + k1[i] * (0.5 * h);
        }
        l.csr.matvec(&tmp, &mut k2);
        for i in 0..n {
            tmp[i] = x[i] + k2[i] * (0.5 * h);
        }
        l.csr.matvec(&tmp, &mut k3);
        for i in 0..n {
            tmp[i] = x[i] + k3[i] * h;
        }
        l.csr.matvec(&tmp, &mut k4);
        for i in 0..n {
            x[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
        }
        if step % 1024 == 0 || step == steps {
            let drift = (trace_of(&x) - initial_trace).norm();
            if !(drift <= 1e-8) {
                return Err(Error::InvariantViolation(format!(
                    "trace drifted by {drift:e} at t = {}",
                    step as f64 * h
                )));
            }
        }
        if stride > 0 && step % stride == 0 {
            observer(step as f64 * h, &DensityMatrix::from_vec(&l.space, &x));
        }
    }
    Ok(DensityMatrix::from_vec(&l.space, &x).hermitized())
}

/// `Tr(n ρ)` for one mode.
pub fn occupation(rho: &DensityMatrix, mode_label: &str) -> Result<f64> {
    let ops = mode_ops(rho.space(), mode_label)?;
    Ok(expectation(&ops.number, rho)?.re)
}

/// `⟨m†²m²⟩ / ⟨m†m⟩²` for one mode.
pub fn g2_zero(rho: &DensityMatrix, mode_label: &str) -> Result<f64> {
    let ops = mode_ops(rho.space(), mode_label)?;
    let n = expectation(&ops.number, rho)?.re;
    if !(n > OCCUPATION_GUARD) {
        return Err(Error::UndefinedCorrelation { mode: mode_label.to_string(), occupation: n });
    }
    let pair = &(&ops.creation * &ops.creation) * &(&ops.annihilation * &ops.annihilation);
    let num = expectation(&pair, rho)?.re;
    Ok(num.max(0.0) / (n * n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::ladder_ops;
    use crate::model::{effective_space, EffectiveParams, MAGNON, PUMP};

    fn single(cutoff: usize) -> HilbertSpec {
        HilbertSpec::single("a", cutoff).unwrap()
    }

    fn decay_only(cutoff: usize, rate: f64) -> Superoperator {
        let space = single(cutoff);
        let a = ladder_ops(cutoff).unwrap().annihilation;
        let a = Operator::from_matrix(space.clone(), a.matrix().clone()).unwrap();
        build_liouvillian(&Operator::zeros(&space), &[CollapseChannel::new(a, rate).unwrap()])
            .unwrap()
    }

    fn random_matrix(space: &HilbertSpec, seed: u64) -> Operator {
        let mut s = seed;
        let mut next = move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        Operator::from_fn(space.clone(), |_, _| c64::new(next(), next()))
    }

    fn random_rho(space: &HilbertSpec, seed: u64) -> DensityMatrix {
        let x = random_matrix(space, seed);
        let m = &x * &x.adjoint();
        let t = m.trace();
        DensityMatrix::from_operator(&m.scale(ONE / t)).unwrap()
    }

    #[test]
    fn single_decay_rate_equation() {
        let l = decay_only(2, 1.0);
        let space = single(2);
        let excited = DensityMatrix::basis(&space, &[1]).unwrap();
        let out = l.apply(&excited).unwrap();
        assert!((out.get(0, 0) - ONE).norm() < 1e-15);
        assert!((out.get(1, 1) + ONE).norm() < 1e-15);
        assert!(out.get(0, 1).norm() < 1e-15 && out.get(1, 0).norm() < 1e-15);
    }

    #[test]
    fn liouvillian_annihilates_trace() {
        let space = effective_space(4, 3).unwrap();
        let params = EffectiveParams { delta_p: -2.0, g: 1.3, f: 0.4, ..Default::default() };
        let l = liouvillian_for(&params, &space).unwrap();
        for seed in 0..5 {
            let x = random_matrix(&space, seed);
            let rho = DensityMatrix::from_raw(space.clone(), x.matrix().clone());
            assert!(l.apply(&rho).unwrap().trace().norm() < 1e-10);
        }
    }

    #[test]
    fn unitary_part_matches_commutator() {
        let space = effective_space(3, 2).unwrap();
        let h = crate::model::build_h_eff(&EffectiveParams::default(), &space).unwrap();
        let l = build_liouvillian(&h, &[]).unwrap();
        let rho = random_rho(&space, 7);
        let direct = h.commutator(&Operator::from_matrix(space.clone(), rho.matrix().clone()).unwrap());
        let expected = direct.scale(c64::new(0.0, -1.0));
        assert!((&l.apply(&rho).unwrap() - &expected).norm_max() < 1e-12);

        // −i(I⊗H − Hᵀ⊗I), entry by entry
        let d = space.dim();
        for r in 0..d * d {
            for c in 0..d * d {
                let (i, j) = (r % d, r / d);
                let (k, l_) = (c % d, c / d);
                let mut v = ZERO;
                if j == l_ {
                    v += h.get(i, k);
                }
                if i == k {
                    v -= h.get(l_, j);
                }
                assert!((l.get(r, c) - v * c64::new(0.0, -1.0)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn non_hermitian_hamiltonian_rejected() {
        let space = effective_space(3, 2).unwrap();
        let hp = crate::model::build_h_nonhermitian(&EffectiveParams::default(), &space).unwrap();
        assert!(matches!(build_liouvillian(&hp, &[]), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn undriven_system_relaxes_to_vacuum() {
        let space = effective_space(6, 3).unwrap();
        let params = EffectiveParams { f: 0.0, delta_p: 3.0, g: 2.0, ..Default::default() };
        let ss = solve_steady(&liouvillian_for(&params, &space).unwrap()).unwrap();
        assert!(occupation(&ss.rho, PUMP).unwrap().abs() <= 1e-12);
        assert!(occupation(&ss.rho, MAGNON).unwrap().abs() <= 1e-12);
        assert!(matches!(g2_zero(&ss.rho, MAGNON), Err(Error::UndefinedCorrelation { .. })));
    }

    #[test]
    fn pure_decay_steady_state_is_vacuum() {
        let ss = solve_steady(&decay_only(3, 1.0)).unwrap();
        let vac = DensityMatrix::vacuum(&single(3));
        assert!((&ss.rho.matrix - &vac.matrix).norm_max() < 1e-14);
    }

    #[test]
    fn degenerate_steady_manifold_is_an_error() {
        let space = effective_space(3, 2).unwrap();
        // no dissipation: every eigenprojector of H is stationary
        let h = crate::model::build_h_eff(&EffectiveParams::default(), &space).unwrap();
        let l = build_liouvillian(&h, &[]).unwrap();
        assert!(matches!(solve_steady(&l), Err(Error::NoUniqueSteadyState(_))));

        // a decoupled, undamped mode
        let pump = mode_ops(&space, PUMP).unwrap().annihilation;
        let l = build_liouvillian(
            &Operator::zeros(&space),
            &[CollapseChannel::new(pump, 1.0).unwrap()],
        )
        .unwrap();
        assert!(matches!(solve_steady(&l), Err(Error::NoUniqueSteadyState(_))));
    }

    #[test]
    fn linear_solve_matches_singular_vector() {
        let space = effective_space(6, 3).unwrap();
        let params = EffectiveParams { delta_p: -4.0, delta_m: 3.0, g: 1.0, f: 0.3, ..Default::default() };
        let l = liouvillian_for(&params, &space).unwrap();
        let ss = solve_steady(&l).unwrap();
        let svd = steady_state_svd(&l).unwrap();
        assert!(trace_distance(&ss.rho, &svd).unwrap() < 1e-10);
        assert!(ss.rho.diagnostics().unwrap().is_valid());
    }

    #[test]
    fn evolve_zero_time_is_identity() {
        let l = decay_only(3, 1.0);
        let rho = DensityMatrix::basis(&single(3), &[2]).unwrap();
        let out = evolve(&rho, &l, 0.0, 0.01).unwrap();
        assert_eq!(out.matrix, rho.matrix);
    }

    #[test]
    fn evolve_reproduces_exponential_decay() {
        let l = decay_only(2, 1.0);
        let rho = DensityMatrix::basis(&single(2), &[1]).unwrap();
        for t in [0.5, 1.0, 3.0] {
            let out = evolve(&rho, &l, t, 1e-3).unwrap();
            assert!((out.matrix[(1, 1)].re - (-t).exp()).abs() < 1e-6);
            assert!((out.trace() - ONE).norm() < 1e-12);
        }
    }

    #[test]
    fn evolve_rejects_bad_steps() {
        let l = decay_only(2, 1.0);
        let rho = DensityMatrix::vacuum(&single(2));
        assert!(matches!(evolve(&rho, &l, 1.0, 0.0), Err(Error::InvalidArgument(_))));
        assert!(matches!(evolve(&rho, &l, 1e3, 1e-6), Err(Error::StepOverflow(_))));
    }

    #[test]
    fn evolution_converges_to_linear_solution() {
        let space = effective_space(6, 3).unwrap();
        let params = EffectiveParams { delta_p: -2.0, delta_m: 2.0, g: 1.0, f: 0.1, ..Default::default() };
        let l = liouvillian_for(&params, &space).unwrap();
        let ss = solve_steady(&l).unwrap();
        let dt = 0.5 / l.max_abs_diagonal();
        let out = evolve(&DensityMatrix::vacuum(&space), &l, 50.0, dt).unwrap();
        assert!(trace_distance(&out, &ss.rho).unwrap() <= 1e-4);
        let diag = out.diagnostics().unwrap();
        assert!(diag.hermiticity_error <= 1e-12);
        assert!(diag.trace_error <= 1e-8);
    }

    #[test]
    fn correlation_examples() {
        let space = single(4);
        let one = DensityMatrix::basis(&space, &[1]).unwrap();
        assert_eq!(g2_zero(&one, "a").unwrap(), 0.0);
        let two = DensityMatrix::basis(&space, &[2]).unwrap();
        assert!((g2_zero(&two, "a").unwrap() - 0.5).abs() < 1e-14);
        let vac = DensityMatrix::vacuum(&space);
        assert!(matches!(g2_zero(&vac, "a"), Err(Error::UndefinedCorrelation { .. })));
    }

    #[test]
    fn occupation_examples() {
        let space = single(3);
        assert_eq!(occupation(&DensityMatrix::vacuum(&space), "a").unwrap(), 0.0);
        let two = DensityMatrix::basis(&space, &[2]).unwrap();
        assert!((occupation(&two, "a").unwrap() - 2.0).abs() < 1e-14);
        let mixed = DensityMatrix::maximally_mixed(&single(2));
        assert!((occupation(&mixed, "a").unwrap() - 0.5).abs() < 1e-15);
        assert!(occupation(&mixed, "b").is_err());
    }

    #[test]
    fn density_matrix_validation() {
        let space = single(2);
        let bad = Mat::from_fn(2, 2, |i, j| if i == j { c64::new(0.7, 0.0) } else { ZERO });
        assert!(DensityMatrix::new(space.clone(), bad).is_err());
        let neg = Mat::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) => c64::new(1.1, 0.0),
            (1, 1) => c64::new(-0.1, 0.0),
            _ => ZERO,
        });
        assert!(DensityMatrix::new(space, neg).is_err());
    }
}
