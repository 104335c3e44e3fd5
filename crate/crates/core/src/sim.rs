//! Deterministic port-scheduling simulator, used as an independent check of
//! the analytical bottleneck.
//!
//! Each micro-op group carries a cursor that walks its eligible slots in
//! model order across dynamic instances, so a group over {P2,P3} alternates
//! P2, P3, P2, ... and over many iterations realizes the same equal split the
//! analysis assumes, without any randomness.

use num_rational::Ratio;
use num_traits::Zero;
use thiserror::Error;

use crate::analyze::{analyze_kernel, KernelAnalysis};
use crate::asm::MarkedKernel;
use crate::cycles::Cy;
use crate::model::ModelDatabase;

#[derive(Debug, Clone)]
pub struct SimState {
    /// Accumulated occupation per slot; non-decreasing over the run.
    pub slot_busy_until: Vec<Cy>,
    pub issued_uops: u64,
    pub iterations: u64,
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("iterations must be >= 1")]
    NoIterations,
    #[error("no database entry for {0}; the simulator needs every form matched")]
    UnmatchedForm(String),
}

/// Unroll the kernel `iterations` times and return the maximum per-slot
/// occupation divided by the iteration count. Hidden load groups (Zen) are
/// skipped, exactly as in the analysis.
pub fn simulate(
    kernel: &MarkedKernel,
    db: &ModelDatabase,
    iterations: u64,
) -> Result<Cy, SimError> {
    simulate_with_state(kernel, db, iterations).map(|(cy, _)| cy)
}

pub fn simulate_with_state(
    kernel: &MarkedKernel,
    db: &ModelDatabase,
    iterations: u64,
) -> Result<(Cy, SimState), SimError> {
    if iterations < 1 {
        return Err(SimError::NoIterations);
    }
    let analysis: KernelAnalysis = analyze_kernel(kernel, db);
    if let Some(form) = analysis.unmatched_forms.iter().next() {
        return Err(SimError::UnmatchedForm(form.key()));
    }
    let n_slots = db.port_model.slots.len();
    let mut state = SimState {
        slot_busy_until: vec![Cy::zero(); n_slots],
        issued_uops: 0,
        iterations: 0,
    };
    // one cursor per static micro-op group
    let mut cursors: Vec<Vec<usize>> = analysis
        .rows
        .iter()
        .map(|r| vec![0usize; r.groups.len()])
        .collect();
    for _ in 0..iterations {
        for (row_idx, row) in analysis.rows.iter().enumerate() {
            for (group_idx, group) in row.groups.iter().enumerate() {
                if row.hidden_groups.contains(&group_idx) {
                    continue;
                }
                let cursor = &mut cursors[row_idx][group_idx];
                let slot = group.slots[*cursor % group.slots.len()];
                *cursor += 1;
                state.slot_busy_until[slot] += group.cycles;
                state.issued_uops += 1;
            }
        }
        state.iterations += 1;
    }
    let max = state
        .slot_busy_until
        .iter()
        .copied()
        .max()
        .unwrap_or_else(Cy::zero);
    Ok((max / Ratio::from_integer(iterations as i64), state))
}
