//! Step-size schedules.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSchedule {
    /// `eta_k = eta0`.
    Constant { eta0: f64 },
    /// `eta_k = eta0 / (1 + k / tau)^power`, with `power` in (0.5, 1] so the
    /// steps sum to infinity while their squares stay summable.
    Polynomial { eta0: f64, tau: f64, power: f64 },
}

impl StepSchedule {
    pub fn constant(eta0: f64) -> Result<Self> {
        check_positive("eta0", eta0)?;
        Ok(StepSchedule::Constant { eta0 })
    }

    pub fn polynomial(eta0: f64, tau: f64, power: f64) -> Result<Self> {
        check_positive("eta0", eta0)?;
        check_positive("tau", tau)?;
        if !(power > 0.5 && power <= 1.0) {
            return Err(Error::param(
                "power",
                format!("{power} is outside (0.5, 1]; the step sizes would not be square-summable yet non-summable"),
            ));
        }
        Ok(StepSchedule::Polynomial { eta0, tau, power })
    }

    pub fn step_size(&self, k: usize) -> f64 {
        match *self {
            StepSchedule::Constant { eta0 } => eta0,
            StepSchedule::Polynomial { eta0, tau, power } => {
                eta0 / (1.0 + k as f64 / tau).powf(power)
            }
        }
    }
}

fn check_positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::param(name, format!("{v} must be positive and finite")))
    }
}
