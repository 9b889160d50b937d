//! Complex-valued LASSO
//!
//! Minimizes `½‖Y − H U‖² + λ Σ|u_i|` over `U ∈ ℂ^d` by cyclic coordinate
//! descent. The penalty acts on complex moduli, so each coordinate update is
//! a complex soft-threshold that shrinks the modulus and keeps the phase.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Proximal map of `λ|u|` on ℂ: zero inside the disc of radius `λ`, otherwise
/// `(1 − λ/|ρ|) ρ`.
pub fn soft_threshold(rho: Complex64, lambda: f64) -> Complex64 {
    let r = rho.norm();
    if r <= lambda {
        Complex64::new(0.0, 0.0)
    } else {
        rho * (1.0 - lambda / r)
    }
}

/// `max_i |h_i^H Y|`, the smallest `λ` with an all-zero solution.
pub fn lambda_max(design: &DMatrix<Complex64>, observations: &DVector<Complex64>) -> f64 {
    design
        .column_iter()
        .map(|h| h.dotc(observations).norm())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassoProblem {
    design: DMatrix<Complex64>,
    observations: DVector<Complex64>,
    lambda: f64,
    col_norms_sq: Vec<f64>,
}

impl ClassoProblem {
    /// Rejects mismatched shapes, non-finite data, `λ < 0` and all-zero
    /// design columns (their coefficients are unidentifiable).
    pub fn new(
        design: DMatrix<Complex64>,
        observations: DVector<Complex64>,
        lambda: f64,
    ) -> Result<Self> {
        if design.nrows() != observations.len() {
            return Err(Error::config(format!(
                "design has {} rows but observations have length {}",
                design.nrows(),
                observations.len()
            )));
        }
        if design.is_empty() {
            return Err(Error::config("design matrix is empty"));
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::config(format!("lambda must be finite and >= 0, got {lambda}")));
        }
        if design.iter().chain(observations.iter()).any(|v| !(v.re.is_finite() && v.im.is_finite()))
        {
            return Err(Error::config("problem data contains non-finite values"));
        }
        let col_norms_sq: Vec<f64> = design.column_iter().map(|h| h.norm_squared()).collect();
        if let Some(j) = col_norms_sq.iter().position(|&s| s == 0.0) {
            return Err(Error::config(format!("design column {j} is identically zero")));
        }
        Ok(Self { design, observations, lambda, col_norms_sq })
    }

    pub fn design(&self) -> &DMatrix<Complex64> {
        &self.design
    }

    pub fn observations(&self) -> &DVector<Complex64> {
        &self.observations
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn dim(&self) -> usize {
        self.design.ncols()
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::config(format!("lambda must be finite and >= 0, got {lambda}")));
        }
        Ok(Self { lambda, ..self.clone() })
    }

    pub fn lambda_max(&self) -> f64 {
        lambda_max(&self.design, &self.observations)
    }

    /// `½‖Y − H U‖² + λ‖U‖₁`.
    pub fn objective(&self, u: &DVector<Complex64>) -> f64 {
        let r = &self.observations - &self.design * u;
        0.5 * r.norm_squared() + self.lambda * u.iter().map(|v| v.norm()).sum::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// Stop once the largest coordinate change of a sweep is below this.
    pub tol: f64,
    pub max_sweeps: usize,
    pub warm_start: Option<DVector<Complex64>>,
    /// Keep a per-sweep [`SweepRecord`] in the solution.
    pub record_trace: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_sweeps: 10_000, warm_start: None, record_trace: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    MaxIterations,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRecord {
    pub sweep: usize,
    pub lambda: f64,
    pub objective: f64,
    pub nonzeros: usize,
    pub max_delta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassoSolution {
    pub coefficients: DVector<Complex64>,
    pub sweeps: usize,
    /// Largest coordinate modulus change during the last sweep.
    pub final_delta: f64,
    pub objective: f64,
    pub status: SolveStatus,
    pub trace: Vec<SweepRecord>,
}

impl ClassoSolution {
    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }

    pub fn nonzeros(&self) -> usize {
        self.coefficients.iter().filter(|v| v.norm() > 0.0).count()
    }
}

/// Cyclic coordinate descent in natural coordinate order.
///
/// For coordinate `i`, `ρ_i = h_i^H r + ‖h_i‖² u_i` with the running residual
/// `r = Y − H U`, and `u_i ← S(ρ_i, λ) / ‖h_i‖²`. The residual is updated in
/// place after every coordinate.
pub fn solve(problem: &ClassoProblem, opts: &SolverOptions) -> Result<ClassoSolution> {
    if !(opts.tol > 0.0) {
        return Err(Error::config(format!("tol must be > 0, got {}", opts.tol)));
    }
    let d = problem.dim();
    let h = &problem.design;
    let lambda = problem.lambda;

    let mut u = match &opts.warm_start {
        Some(w) if w.len() != d => {
            return Err(Error::config(format!(
                "warm start has length {}, problem has {d} coefficients",
                w.len()
            )))
        }
        Some(w) => w.clone(),
        None => DVector::zeros(d),
    };
    let mut residual = &problem.observations - h * &u;
    let mut trace = Vec::new();
    let mut sweeps = 0;
    let mut max_delta = f64::INFINITY;

    while sweeps < opts.max_sweeps {
        sweeps += 1;
        max_delta = 0.0;
        for i in 0..d {
            let col = h.column(i);
            let norm_sq = problem.col_norms_sq[i];
            let old = u[i];
            let rho = col.dotc(&residual) + old * norm_sq;
            let new = soft_threshold(rho, lambda) / norm_sq;
            let step = old - new;
            if step != Complex64::new(0.0, 0.0) {
                residual.axpy(step, &col, Complex64::new(1.0, 0.0));
                u[i] = new;
                max_delta = max_delta.max(step.norm());
            }
        }
        if !max_delta.is_finite() || u.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::NonFinite { sweeps, iterate: u.iter().copied().collect() });
        }
        if opts.record_trace {
            trace.push(SweepRecord {
                sweep: sweeps,
                lambda,
                objective: problem.objective(&u),
                nonzeros: u.iter().filter(|v| v.norm() > 0.0).count(),
                max_delta,
            });
        }
        if max_delta < opts.tol {
            break;
        }
    }

    let status = if max_delta < opts.tol { SolveStatus::Converged } else { SolveStatus::MaxIterations };
    let objective = problem.objective(&u);
    Ok(ClassoSolution { coefficients: u, sweeps, final_delta: max_delta, objective, status, trace })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktReport {
    pub ok: bool,
    pub worst_violation: f64,
}

/// Checks first-order optimality with `g = H^H (Y − H U)`: `|g_i| ≤ λ` where
/// `u_i = 0`, and `g_i = λ u_i/|u_i|` elsewhere, each up to `tol`.
pub fn kkt_certificate(problem: &ClassoProblem, u: &DVector<Complex64>, tol: f64) -> KktReport {
    let residual = &problem.observations - &problem.design * u;
    let g = problem.design.ad_mul(&residual);
    let lambda = problem.lambda;
    let worst_violation = g
        .iter()
        .zip(u.iter())
        .map(|(gi, ui)| {
            let modulus = ui.norm();
            if modulus == 0.0 {
                (gi.norm() - lambda).max(0.0)
            } else {
                (gi - ui * (lambda / modulus)).norm()
            }
        })
        .fold(0.0, f64::max);
    KktReport { ok: worst_violation <= tol, worst_violation }
}

/// Appends a CSV dump (`sweep,lambda,objective,nonzeros,max_delta`) of a trace.
pub fn write_trace_csv<W: std::io::Write>(mut out: W, trace: &[SweepRecord]) -> std::io::Result<()> {
    writeln!(out, "sweep,lambda,objective,nonzeros,max_delta")?;
    for r in trace {
        writeln!(out, "{},{:e},{:e},{},{:e}", r.sweep, r.lambda, r.objective, r.nonzeros, r.max_delta)?;
    }
    Ok(())
}
