//! Subspace-protocol operation: dimension detection, guess-space refinement
//! and the generalized eigenvalue solve.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{gep_whiten_solve, herm_eig, CMatrix, GepSolution, HermitianMatrix};

/// Hermitian pencil `(A_M, B_M)`.
#[derive(Debug, Clone)]
pub struct Gep {
    pub a: HermitianMatrix,
    pub b: HermitianMatrix,
}

impl Gep {
    pub fn new(a: HermitianMatrix, b: HermitianMatrix) -> Result<Self> {
        if a.dim() != b.dim() {
            return Err(Error::InvalidInput(format!("pencil dimensions differ: {} vs {}", a.dim(), b.dim())));
        }
        Ok(Self { a, b })
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    /// Leading `m × m` principal submatrices.
    pub fn leading(&self, m: usize) -> Result<Self> {
        if m == 0 || m > self.dim() {
            return Err(Error::InvalidInput(format!("leading dimension {m} outside 1..={}", self.dim())));
        }
        let cut = |h: &HermitianMatrix| HermitianMatrix::new(CMatrix::from_fn(m, m, |i, j| h[(i, j)]));
        Ok(Self { a: cut(&self.a)?, b: cut(&self.b)? })
    }
}

/// Pencil projected onto the leading `m` eigenvectors of `B`.
#[derive(Debug, Clone)]
pub struct RefinedGep {
    pub a_mm: HermitianMatrix,
    pub b_mm: HermitianMatrix,
    /// `M × m`, orthonormal columns.
    pub u_m: CMatrix,
    pub m: usize,
    /// `λ_m(B_M^m)`.
    pub lambda_min_b: f64,
    /// Spectrum of `B_M`, descending.
    pub b_spectrum: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Detection {
    /// `0 < m < M`.
    Detected(usize),
    /// Every eigenvalue of `B` exceeds the threshold.
    IncreaseM(usize),
    /// No eigenvalue exceeds the threshold.
    Zero,
}

impl Detection {
    pub fn m(&self) -> usize {
        match *self {
            Detection::Detected(m) | Detection::IncreaseM(m) => m,
            Detection::Zero => 0,
        }
    }
}

/// Counts the eigenvalues of `B` above `eps_th`.
pub fn detect_dimension(b: &HermitianMatrix, eps_th: f64) -> Result<Detection> {
    if !(eps_th >= 0.0) {
        return Err(Error::InvalidInput(format!("threshold must be nonnegative, got {eps_th}")));
    }
    let values = herm_eig(b)?.values;
    Ok(classify(&values, eps_th))
}

fn classify(values: &[f64], eps_th: f64) -> Detection {
    let m = values.iter().filter(|v| **v > eps_th).count();
    if m == 0 {
        Detection::Zero
    } else if m == values.len() {
        Detection::IncreaseM(m)
    } else {
        Detection::Detected(m)
    }
}

/// Projects the pencil onto the leading `m` eigenvectors of `B`.
pub fn refine(gep: &Gep, m: usize) -> Result<RefinedGep> {
    if m == 0 || m > gep.dim() {
        return Err(Error::InvalidInput(format!("refinement dimension {m} outside 1..={}", gep.dim())));
    }
    let eig = herm_eig(&gep.b)?;
    Ok(refine_with(gep, m, &eig.vectors, eig.values))
}

fn refine_with(gep: &Gep, m: usize, vectors: &CMatrix, values: Vec<f64>) -> RefinedGep {
    let u_m = vectors.leading_columns(m);
    let a_mm = gep.a.congruence(&u_m);
    let b_mm = gep.b.congruence(&u_m);
    let lambda_min_b = values[m - 1];
    RefinedGep { a_mm, b_mm, u_m, m, lambda_min_b, b_spectrum: values }
}

#[derive(Debug, Clone)]
pub struct ProtocolOutput {
    pub detection: Detection,
    /// Ascending; empty when nothing was detected.
    pub eigenvalues: Vec<f64>,
    pub refined: Option<RefinedGep>,
    pub solution: Option<GepSolution>,
}

/// Detection, refinement and solve at threshold `eps_th`.
pub fn run_protocol(gep: &Gep, eps_th: f64) -> Result<ProtocolOutput> {
    if !(eps_th >= 0.0) {
        return Err(Error::InvalidInput(format!("threshold must be nonnegative, got {eps_th}")));
    }
    let eig = herm_eig(&gep.b)?;
    let detection = classify(&eig.values, eps_th);
    let m = detection.m();
    if m == 0 {
        return Ok(ProtocolOutput { detection, eigenvalues: Vec::new(), refined: None, solution: None });
    }
    let refined = refine_with(gep, m, &eig.vectors, eig.values);
    let solution = gep_whiten_solve(&refined.a_mm, &refined.b_mm)?;
    Ok(ProtocolOutput { detection, eigenvalues: solution.values.clone(), refined: Some(refined), solution: Some(solution) })
}

/// Refinement and solve at a prescribed dimension `m`.
pub fn run_known_m(gep: &Gep, m: usize) -> Result<(Vec<f64>, RefinedGep, GepSolution)> {
    let refined = refine(gep, m)?;
    if !(refined.lambda_min_b > 0.0) {
        return Err(Error::IllConditioned { lambda_min: refined.lambda_min_b });
    }
    let solution = gep_whiten_solve(&refined.a_mm, &refined.b_mm)?;
    Ok((solution.values.clone(), refined, solution))
}
