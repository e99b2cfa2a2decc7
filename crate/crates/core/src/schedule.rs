//! Progressive size schedule for the generator's five resize stages.

use crate::error::{Error, Result};

/// Number of resize stages in the generator.
pub const STAGES: usize = 5;

/// Per-stage `(height, width)` targets from a base size up to the requested size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SizeSchedule {
    pub base: (usize, usize),
    pub target: (usize, usize),
    pub stages: [(usize, usize); STAGES],
}

fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor() as usize
}

fn geometric(base: usize, target: usize, k: usize) -> usize {
    let ratio = target as f64 / base as f64;
    round_half_up(base as f64 * ratio.powf(k as f64 / STAGES as f64))
}

impl SizeSchedule {
    /// Stage `k` gets `round(base * (target / base)^(k / 5))` per dimension,
    /// clamped so the sequence never shrinks, with the last stage forced to
    /// the target.
    pub fn compute(base: (usize, usize), target: (usize, usize)) -> Result<Self> {
        if base.0 == 0 || base.1 == 0 {
            return Err(Error::InvalidArgument("schedule base must be positive".into()));
        }
        if target.0 < base.0 || target.1 < base.1 {
            return Err(Error::InvalidArgument(format!(
                "target {}x{} is below the generator minimum {}x{}",
                target.0, target.1, base.0, base.1
            )));
        }
        let mut stages = [(0, 0); STAGES];
        let mut prev = base;
        for (i, stage) in stages.iter_mut().enumerate() {
            let k = i + 1;
            let next = if k == STAGES {
                target
            } else {
                (
                    geometric(base.0, target.0, k).max(prev.0).max(1),
                    geometric(base.1, target.1, k).max(prev.1).max(1),
                )
            };
            *stage = next;
            prev = next;
        }
        Ok(SizeSchedule { base, target, stages })
    }
}

pub fn compute_schedule(base: (usize, usize), target: (usize, usize)) -> Result<SizeSchedule> {
    SizeSchedule::compute(base, target)
}
