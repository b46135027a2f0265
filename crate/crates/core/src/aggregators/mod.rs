//! Gradient aggregation rules.
//!
//! | rule           | needs q | cost        |
//! |----------------|---------|-------------|
//! | `mean`         | no      | O(m d)      |
//! | `coormed`      | no      | O(m d)      |
//! | `trimmed_mean` | yes     | O(m log m d)|
//! | `krum`         | yes     | O(m^2 d)    |
//! | `bulyan`       | yes     | O(m^2 d)    |
//! | `licm`         | no      | O(m d)      |
//!
//! Every rule sums in worker-id order, so results are independent of the
//! order in which gradients arrive.

mod krum;
mod licm;
mod mean;
mod median;

use std::fmt;

pub use krum::{bulyan, krum};
pub use licm::{licm_aggregate, licm_select, LicmState, DEFAULT_DELTA};
pub use mean::{mean, trimmed_mean};
pub use median::{coormed, median_1d};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::vector::{GradientBatch, Vector};

/// Output of one aggregation.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregationResult<T> {
    pub aggregate: Vector<T>,
    /// Ascending worker ids whose gradients formed the aggregate: the screened
    /// set for LICM, the winner for Krum, Bulyan's Krum picks, everyone otherwise.
    /// Empty only when LICM's screen rejected every gradient.
    pub selected_ids: Vec<usize>,
    /// Coordinate-wise median, for rules that compute one.
    pub median: Option<Vector<T>>,
    /// LICM rejected every gradient and returned the median instead.
    pub fallback: bool,
}

impl<T: Scalar> AggregationResult<T> {
    fn everyone(batch: &GradientBatch<T>, aggregate: Vector<T>, median: Option<Vector<T>>) -> Self {
        let mut ids = batch.ids().to_vec();
        ids.sort_unstable();
        AggregationResult {
            aggregate,
            selected_ids: ids,
            median,
            fallback: false,
        }
    }
}

/// Which rule the parameter server applies. Only the q-dependent baselines carry q.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rule {
    Mean,
    CoorMed,
    TrimmedMean { trim: usize },
    Krum { q: usize },
    Bulyan { q: usize },
    Licm { gamma: f64, delta: f64 },
}

impl Rule {
    /// Checks the rule's own parameters and its requirement on the worker count.
    pub fn validate(&self, m: usize) -> Result<()> {
        match *self {
            Rule::Mean | Rule::CoorMed => Ok(()),
            Rule::TrimmedMean { trim } if 2 * trim >= m => Err(Error::Precondition {
                rule: "trimmed mean",
                requirement: "2q < m",
                m,
                q: trim,
            }),
            Rule::Krum { q } if m < q + 3 => Err(Error::Precondition {
                rule: "Krum",
                requirement: "m >= q + 3",
                m,
                q,
            }),
            Rule::Bulyan { q } if m < 4 * q + 3 => Err(Error::Precondition {
                rule: "Bulyan",
                requirement: "m >= 4q + 3",
                m,
                q,
            }),
            Rule::Licm { gamma, delta } => LicmState::new(gamma, delta).map(|_| ()),
            _ => Ok(()),
        }
    }

    /// Short name used in run labels and CSV file names.
    pub fn name(&self) -> &'static str {
        match self {
            Rule::Mean => "mean",
            Rule::CoorMed => "coormed",
            Rule::TrimmedMean { .. } => "trimmed_mean",
            Rule::Krum { .. } => "krum",
            Rule::Bulyan { .. } => "bulyan",
            Rule::Licm { .. } => "licm",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Rule::Mean | Rule::CoorMed => f.write_str(self.name()),
            Rule::TrimmedMean { trim } => write!(f, "trimmed_mean({trim})"),
            Rule::Krum { q } => write!(f, "krum({q})"),
            Rule::Bulyan { q } => write!(f, "bulyan({q})"),
            Rule::Licm { gamma, delta } => write!(f, "licm({gamma}, {delta:e})"),
        }
    }
}

/// A rule together with whatever it carries between iterations.
#[derive(Debug, Clone)]
pub enum Aggregator<T> {
    Stateless(Rule),
    Licm(LicmState<T>),
}

impl<T: Scalar> Aggregator<T> {
    pub fn new(rule: Rule) -> Result<Self> {
        Ok(match rule {
            Rule::Licm { gamma, delta } => Aggregator::Licm(LicmState::new(T::of(gamma), T::of(delta))?),
            other => Aggregator::Stateless(other),
        })
    }

    pub fn aggregate(&mut self, batch: &GradientBatch<T>) -> Result<AggregationResult<T>> {
        let rule = match self {
            Aggregator::Licm(state) => return state.step(batch),
            Aggregator::Stateless(rule) => *rule,
        };
        Ok(match rule {
            Rule::Mean => AggregationResult::everyone(batch, mean(batch), None),
            Rule::CoorMed => {
                let median = coormed(batch);
                AggregationResult::everyone(batch, median.clone(), Some(median))
            }
            Rule::TrimmedMean { trim } => AggregationResult::everyone(batch, trimmed_mean(batch, trim)?, None),
            Rule::Krum { q } => krum(batch, q)?,
            Rule::Bulyan { q } => {
                let (aggregate, selected_ids) = krum::bulyan_with_selection(batch, q)?;
                AggregationResult {
                    aggregate,
                    selected_ids,
                    median: None,
                    fallback: false,
                }
            }
            Rule::Licm { .. } => unreachable!("LICM always carries state"),
        })
    }
}
