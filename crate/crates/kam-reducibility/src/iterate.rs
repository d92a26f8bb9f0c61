//! Driving the step to convergence and reporting the trace.

use fourier_core::{CMat, FourierMap, FrequencyVector};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{KamError, Result};
use crate::schedule::{KamParams, KamSchedule};
use crate::step::{conjugacy_residual, kam_step, KamState, StepDiagnostics};

/// Serializable snapshot of one iteration state.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepRecord {
    pub j: usize,
    /// Measured perturbation norm on the strip h.
    pub eps: f64,
    pub h: f64,
    pub n_cutoff: f64,
    /// Tracked eigenvalue phases as (re, im) pairs.
    pub phases: Vec<(f64, f64)>,
    pub diagnostics: StepDiagnostics,
}

/// Full history of an iteration run.
#[derive(Debug, Clone)]
pub struct KamTrace {
    /// State after each step, starting with the initial state.
    pub states: Vec<KamState>,
    /// True once the measured norm fell below the stopping tolerance.
    pub converged: bool,
    /// Why the iteration stopped early, when it did.
    pub failure: Option<String>,
    /// Sum over steps of the largest imaginary phase movement.
    pub drift_im_total: f64,
}

impl KamTrace {
    pub fn final_state(&self) -> &KamState {
        self.states.last().expect("a trace holds at least the initial state")
    }

    pub fn records(&self) -> Vec<StepRecord> {
        self.states
            .iter()
            .map(|s| StepRecord {
                j: s.j,
                eps: s.eps,
                h: s.h,
                n_cutoff: s.n_cutoff,
                phases: s.phases.iter().map(|p| (p.rho.re, p.rho.im)).collect(),
                diagnostics: s.diagnostics.clone(),
            })
            .collect()
    }
}

/// Iterate the step until the perturbation falls below the stopping
/// tolerance, a step fails, or the budget runs out.
///
/// Each produced state is verified against the original cocycle: the
/// pointwise conjugacy residual must stay within 1e-8 (1 + |B|_0^2), and a
/// violating step ends the run with a failure marker. Failures never panic;
/// the partial trace is always returned.
pub fn kam_iterate(
    a0: &CMat,
    f0: &FourierMap,
    alpha: &FrequencyVector,
    schedule: &KamSchedule,
    params: &KamParams,
    max_steps: usize,
) -> Result<KamTrace> {
    let initial = KamState::initial(a0.clone(), f0.clone(), schedule)?;
    let mut trace = KamTrace {
        states: vec![initial],
        converged: false,
        failure: None,
        drift_im_total: 0.0,
    };
    for _ in 0..max_steps {
        let current = trace.states.last().expect("trace is nonempty");
        if current.eps <= params.stop_tol {
            trace.converged = true;
            return Ok(trace);
        }
        match kam_step(current, alpha, schedule, params) {
            Ok(mut next) => {
                let residual = conjugacy_residual(&next, a0, f0, alpha);
                let allowance = 1e-8 * (1.0 + next.diagnostics.b_norm.powi(2));
                next.diagnostics.conjugacy_residual = residual;
                next.diagnostics.residual_allowance = allowance;
                trace.drift_im_total += next.diagnostics.phase_drift_im;
                let violated = !(residual <= allowance);
                trace.states.push(next);
                if violated {
                    trace.failure = Some(format!(
                        "conjugacy residual {residual:.3e} exceeds the allowance {allowance:.3e}"
                    ));
                    return Ok(trace);
                }
            }
            Err(e) => {
                trace.failure = Some(e.to_string());
                return Ok(trace);
            }
        }
    }
    if trace.final_state().eps <= params.stop_tol {
        trace.converged = true;
    }
    Ok(trace)
}

/// Lyapunov exponents of the limiting constant cocycle, 2 pi Im(rho) in
/// decreasing order. Only meaningful once the iteration has converged.
pub fn lyapunov_from_phases(state: &KamState, tol: f64) -> Result<Vec<f64>> {
    if !(state.eps <= tol) {
        return Err(KamError::NotConverged {
            norm: state.eps,
            tol,
        });
    }
    let mut exponents: Vec<f64> = state.phases.iter().map(|p| TAU * p.rho.im).collect();
    exponents.sort_by(|a, b| b.partial_cmp(a).expect("phases are finite"));
    Ok(exponents)
}
