//! Independent schedule re-pricing plus the ILP cross-check.

use crate::chain::{ChainCosts, TrainingOptions};
use crate::error::{Error, Result};
use crate::instance::ProblemInstance;
use crate::scenario::ScenarioSpec;
use crate::schedule::{breakdown_for, CostBreakdown, Schedule};
use crate::solver::IlpModel;
use crate::types::Mode;

/// Recomputes the schedule's cost from the profiled tables, then verifies
/// the exported ILP agrees: the schedule's binaries must satisfy every
/// constraint row and reproduce the objective within 1e-6 relative.
pub fn evaluate_schedule(
    instance: &ProblemInstance,
    schedule: &Schedule,
    scenario: &ScenarioSpec,
) -> Result<CostBreakdown> {
    scenario.validate()?;
    if schedule.mode != scenario.mode {
        return Err(Error::validation(format!(
            "schedule is a {} schedule but the scenario is {}",
            schedule.mode, scenario.mode
        )));
    }
    let instance = match &scenario.compression {
        Some(cfg) => instance.apply_compression(cfg)?,
        None => instance.clone(),
    };
    let costs = match scenario.mode {
        Mode::Inference => ChainCosts::inference(&instance)?,
        Mode::Training => ChainCosts::training(
            &instance,
            &TrainingOptions::with_update_fraction(scenario.update_fraction),
        )?,
    };
    schedule.validate_tiling(costs.n)?;
    let blocks = match scenario.mode {
        Mode::Inference => instance.residual_blocks(),
        Mode::Training => &[],
    };
    let breakdown = breakdown_for(&costs, scenario.objective, &schedule.segments, blocks);

    let model = IlpModel::build(&instance, scenario)?;
    model.check(schedule, breakdown.total())?;
    Ok(breakdown)
}
