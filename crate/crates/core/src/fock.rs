// SPDX-License-Identifier: Apache-2.0

//! Truncated bosonic Fock spaces and dense operators on them.
//!
//! A [`HilbertSpec`] is an ordered list of modes, each truncated to
//! `|0⟩ … |cutoff−1⟩`. Product basis states are enumerated row-major over the
//! mode list, so the last listed mode varies fastest: for modes `(p, m)` the
//! basis index of `|n_p, n_m⟩` is `n_p · cutoff_m + n_m`.

use std::ops::{Add, Mul, Sub};

use faer::{c64, Col, Mat};

use crate::error::{invalid, Result};
use crate::steadystate::DensityMatrix;

const ZERO: c64 = c64 { re: 0.0, im: 0.0 };
const ONE: c64 = c64 { re: 1.0, im: 0.0 };

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mode {
    pub label: String,
    pub cutoff: usize,
}

/// Composite truncated Fock space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HilbertSpec {
    modes: Vec<Mode>,
}

impl HilbertSpec {
    pub fn new<S: Into<String>>(modes: impl IntoIterator<Item = (S, usize)>) -> Result<Self> {
        let modes: Vec<Mode> = modes
            .into_iter()
            .map(|(label, cutoff)| Mode { label: label.into(), cutoff })
            .collect();
        if modes.is_empty() {
            return Err(invalid("a Hilbert space needs at least one mode"));
        }
        for (i, mode) in modes.iter().enumerate() {
            if mode.cutoff < 2 {
                return Err(invalid(format!(
                    "mode `{}` has cutoff {}; cutoffs must be at least 2",
                    mode.label, mode.cutoff
                )));
            }
            if modes[..i].iter().any(|m| m.label == mode.label) {
                return Err(invalid(format!("duplicate mode label `{}`", mode.label)));
            }
        }
        Ok(HilbertSpec { modes })
    }

    pub fn single(label: impl Into<String>, cutoff: usize) -> Result<Self> {
        Self::new([(label.into(), cutoff)])
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn dim(&self) -> usize {
        self.modes.iter().map(|m| m.cutoff).product()
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.modes.iter().position(|m| m.label == label)
    }

    pub fn cutoff(&self, label: &str) -> Option<usize> {
        self.position(label).map(|i| self.modes[i].cutoff)
    }

    /// True when the space holds exactly these labels, in any order.
    pub fn has_exactly(&self, labels: &[&str]) -> bool {
        self.modes.len() == labels.len() && labels.iter().all(|l| self.position(l).is_some())
    }

    fn stride(&self, pos: usize) -> usize {
        self.modes[pos + 1..].iter().map(|m| m.cutoff).product()
    }

    /// Basis index of the product state with the given occupation numbers.
    pub fn index_of(&self, occupations: &[usize]) -> Result<usize> {
        if occupations.len() != self.modes.len() {
            return Err(invalid(format!(
                "expected {} occupation numbers, got {}",
                self.modes.len(),
                occupations.len()
            )));
        }
        let mut index = 0;
        for (mode, &n) in self.modes.iter().zip(occupations) {
            if n >= mode.cutoff {
                return Err(invalid(format!(
                    "occupation {n} outside the truncation of mode `{}` (cutoff {})",
                    mode.label, mode.cutoff
                )));
            }
            index = index * mode.cutoff + n;
        }
        Ok(index)
    }

    /// Occupation numbers of a basis index; inverse of [`HilbertSpec::index_of`].
    pub fn occupations(&self, mut index: usize) -> Vec<usize> {
        let mut occ = vec![0; self.modes.len()];
        for (slot, mode) in occ.iter_mut().zip(&self.modes).rev() {
            *slot = index % mode.cutoff;
            index /= mode.cutoff;
        }
        occ
    }
}

/// Dense complex operator on a [`HilbertSpec`].
#[derive(Debug, Clone)]
pub struct Operator {
    space: HilbertSpec,
    matrix: Mat<c64>,
}

impl Operator {
    pub fn from_matrix(space: HilbertSpec, matrix: Mat<c64>) -> Result<Self> {
        let d = space.dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(invalid(format!(
                "matrix is {}x{}, space dimension is {d}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Operator { space, matrix })
    }

    pub fn from_fn(space: HilbertSpec, f: impl FnMut(usize, usize) -> c64) -> Self {
        let d = space.dim();
        Operator { matrix: Mat::from_fn(d, d, f), space }
    }

    pub fn zeros(space: &HilbertSpec) -> Self {
        Self::from_fn(space.clone(), |_, _| ZERO)
    }

    pub fn identity(space: &HilbertSpec) -> Self {
        Self::from_fn(space.clone(), |i, j| if i == j { ONE } else { ZERO })
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

    pub fn get(&self, row: usize, col: usize) -> c64 {
        self.matrix[(row, col)]
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.space.clone(), |i, j| self.matrix[(j, i)].conj())
    }

    pub fn scale(&self, factor: c64) -> Self {
        Self::from_fn(self.space.clone(), |i, j| self.matrix[(i, j)] * factor)
    }

    /// Largest entry modulus of `self − self†`.
    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for j in 0..d {
            for i in 0..=j {
                worst = worst.max((self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn norm_max(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for j in 0..d {
            for i in 0..d {
                worst = worst.max(self.matrix[(i, j)].norm());
            }
        }
        worst
    }

    pub fn commutator(&self, other: &Operator) -> Operator {
        &(self * other) - &(other * self)
    }

    pub fn trace(&self) -> c64 {
        (0..self.dim()).map(|i| self.matrix[(i, i)]).sum()
    }

    pub fn apply(&self, ket: &Ket) -> Result<Ket> {
        if ket.space != self.space {
            return Err(invalid("operator and ket live on different spaces"));
        }
        let d = self.dim();
        let amplitudes = Col::from_fn(d, |i| {
            (0..d).map(|k| self.matrix[(i, k)] * ket.amplitudes[k]).sum()
        });
        Ok(Ket { space: self.space.clone(), amplitudes })
    }

    /// Nonzero entries as `(row, col, value)`, column-major.
    pub(crate) fn nonzeros(&self) -> Vec<(usize, usize, c64)> {
        let d = self.dim();
        let mut out = Vec::new();
        for j in 0..d {
            for i in 0..d {
                let v = self.matrix[(i, j)];
                if v != ZERO {
                    out.push((i, j, v));
                }
            }
        }
        out
    }
}

fn same_space(a: &Operator, b: &Operator) {
    assert!(a.space == b.space, "operators live on different Hilbert spaces");
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        same_space(self, rhs);
        Operator { space: self.space.clone(), matrix: &self.matrix * &rhs.matrix }
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        same_space(self, rhs);
        Operator { space: self.space.clone(), matrix: &self.matrix + &rhs.matrix }
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        same_space(self, rhs);
        Operator { space: self.space.clone(), matrix: &self.matrix - &rhs.matrix }
    }
}

impl Mul<f64> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: f64) -> Operator {
        self.scale(c64::new(rhs, 0.0))
    }
}

impl Mul<c64> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: c64) -> Operator {
        self.scale(rhs)
    }
}

/// State vector; not necessarily normalized.
#[derive(Debug, Clone)]
pub struct Ket {
    space: HilbertSpec,
    amplitudes: Col<c64>,
}

impl Ket {
    pub fn from_amplitudes(space: HilbertSpec, amplitudes: Vec<c64>) -> Result<Self> {
        if amplitudes.len() != space.dim() {
            return Err(invalid(format!(
                "{} amplitudes for a space of dimension {}",
                amplitudes.len(),
                space.dim()
            )));
        }
        Ok(Ket { amplitudes: Col::from_fn(amplitudes.len(), |i| amplitudes[i]), space })
    }

    /// Product basis state `|n_1, n_2, …⟩`.
    pub fn basis(space: &HilbertSpec, occupations: &[usize]) -> Result<Self> {
        let index = space.index_of(occupations)?;
        let d = space.dim();
        Ok(Ket {
            space: space.clone(),
            amplitudes: Col::from_fn(d, |i| if i == index { ONE } else { ZERO }),
        })
    }

    pub fn space(&self) -> &HilbertSpec {
        &self.space
    }

    pub fn amplitude(&self, index: usize) -> c64 {
        self.amplitudes[index]
    }

    pub fn amplitudes(&self) -> Vec<c64> {
        (0..self.amplitudes.nrows()).map(|i| self.amplitudes[i]).collect()
    }

    pub fn norm(&self) -> f64 {
        (0..self.amplitudes.nrows())
            .map(|i| self.amplitudes[i].norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 {
            return Err(invalid("cannot normalize the zero vector"));
        }
        let d = self.amplitudes.nrows();
        Ok(Ket {
            space: self.space.clone(),
            amplitudes: Col::from_fn(d, |i| self.amplitudes[i] / n),
        })
    }
}

/// Annihilation, creation and number operators of a single truncated mode.
#[derive(Debug, Clone)]
pub struct LadderOps {
    pub annihilation: Operator,
    pub creation: Operator,
    pub number: Operator,
}

pub fn ladder_ops(cutoff: usize) -> Result<LadderOps> {
    let space = HilbertSpec::single("mode", cutoff)?;
    let annihilation = Operator::from_fn(space.clone(), |i, j| {
        if j == i + 1 {
            c64::new((j as f64).sqrt(), 0.0)
        } else {
            ZERO
        }
    });
    let creation = annihilation.adjoint();
    let number =
        Operator::from_fn(space, |i, j| if i == j { c64::new(i as f64, 0.0) } else { ZERO });
    Ok(LadderOps { annihilation, creation, number })
}

/// Lifts a single-mode operator into `space`, acting as identity on every
/// other mode.
pub fn embed(op: &Operator, mode_label: &str, space: &HilbertSpec) -> Result<Operator> {
    let pos = space
        .position(mode_label)
        .ok_or_else(|| invalid(format!("no mode `{mode_label}` in the space")))?;
    let cutoff = space.modes()[pos].cutoff;
    if op.dim() != cutoff {
        return Err(invalid(format!(
            "operator dimension {} does not match cutoff {cutoff} of mode `{mode_label}`",
            op.dim()
        )));
    }
    let stride = space.stride(pos);
    let d = space.dim();
    let mut matrix = Mat::<c64>::zeros(d, d);
    // (I_outer ⊗ op ⊗ I_inner)[r, c] is nonzero only when r and c agree on
    // every other mode's digit.
    for col in 0..d {
        let n_col = (col / stride) % cutoff;
        let base = col - n_col * stride;
        for n_row in 0..cutoff {
            let v = op.get(n_row, n_col);
            if v != ZERO {
                matrix[(base + n_row * stride, col)] = v;
            }
        }
    }
    Operator::from_matrix(space.clone(), matrix)
}

/// Ladder operators of one mode already lifted into the composite space.
pub fn mode_ops(space: &HilbertSpec, mode_label: &str) -> Result<LadderOps> {
    let cutoff = space
        .cutoff(mode_label)
        .ok_or_else(|| invalid(format!("no mode `{mode_label}` in the space")))?;
    let single = ladder_ops(cutoff)?;
    Ok(LadderOps {
        annihilation: embed(&single.annihilation, mode_label, space)?,
        creation: embed(&single.creation, mode_label, space)?,
        number: embed(&single.number, mode_label, space)?,
    })
}

/// `Tr(op · ρ)`.
pub fn expectation(op: &Operator, rho: &DensityMatrix) -> Result<c64> {
    if op.space() != rho.space() {
        return Err(invalid("operator and density matrix live on different spaces"));
    }
    let d = op.dim();
    let r = rho.matrix();
    let mut acc = ZERO;
    for i in 0..d {
        for k in 0..d {
            acc += op.get(i, k) * r[(k, i)];
        }
    }
    Ok(acc)
}
