//! Budgeted interaction with an environment, recording every pull.

use alloc::sync::Arc;

use crate::environments::{ActionRef, EnvHandle};
use crate::error::Error;
use crate::norms::dot;
use crate::types::{ActionRecord, Phase, RunTrace, TraceMeta};

/// Why a policy stopped early.
#[derive(Debug, Clone, PartialEq)]
pub enum Halt {
    /// The horizon was reached; a normal end of run.
    Horizon,
    Failed(Error),
}

impl From<Error> for Halt {
    fn from(e: Error) -> Self {
        Self::Failed(e)
    }
}

pub type Step<T> = core::result::Result<T, Halt>;

/// Converts a policy body's outcome into the run result: reaching the horizon
/// is success, anything else an error.
pub fn finish(r: Step<()>) -> crate::Result<()> {
    match r {
        Ok(()) | Err(Halt::Horizon) => Ok(()),
        Err(Halt::Failed(e)) => Err(e),
    }
}

pub struct Session<'e> {
    env: &'e mut EnvHandle,
    horizon: u64,
    trace: RunTrace,
}

impl<'e> Session<'e> {
    pub fn new(env: &'e mut EnvHandle, horizon: u64, meta: TraceMeta) -> Self {
        Self {
            env,
            horizon,
            trace: RunTrace::new(meta),
        }
    }

    pub fn env(&self) -> &EnvHandle {
        self.env
    }

    pub fn elapsed(&self) -> u64 {
        self.trace.len() as u64
    }

    pub fn remaining(&self) -> u64 {
        self.horizon - self.elapsed()
    }

    fn check_budget(&self) -> Step<()> {
        if self.elapsed() >= self.horizon {
            Err(Halt::Horizon)
        } else {
            Ok(())
        }
    }

    pub fn pull_index(&mut self, i: usize, phase: Phase) -> Step<f64> {
        self.check_budget()?;
        let r = self.env.pull(ActionRef::Index(i))?;
        let gap = self.env.gap(ActionRef::Index(i))?;
        self.trace.push(ActionRecord::Index(i), r, gap, phase);
        Ok(r)
    }

    pub fn pull_vector(&mut self, a: &Arc<[f64]>, phase: Phase) -> Step<f64> {
        self.check_budget()?;
        let r = self.env.pull(ActionRef::Vector(a))?;
        let gap = self.env.best_value() - dot(a, self.env.model().theta_star());
        self.trace.push(ActionRecord::Vector(a.clone()), r, gap, phase);
        Ok(r)
    }

    pub fn into_trace(self) -> RunTrace {
        self.trace
    }
}
