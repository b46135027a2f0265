//! Byzantine worker behaviors.
//!
//! * Gaussian: send i.i.d. Normal(0, std^2) noise instead of a gradient.
//! * Label flip: train honestly on data whose labels are mapped `l -> 9 - l`.
//! * Omniscient: all attackers see every benign gradient and send the same
//!   vector, the negated benign mean scaled by a large factor.

use crate::error::{DataError, Error, Result};
use crate::rng::RngStream;
use crate::scalar::Scalar;
use crate::tasks::Dataset;
use crate::vector::{mean_of, Vector};

pub const DEFAULT_GAUSSIAN_STD: f64 = 200.0;
pub const DEFAULT_OMNISCIENT_FACTOR: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Attack {
    Gaussian { std: f64 },
    LabelFlip,
    Omniscient { factor: f64 },
}

impl Attack {
    pub fn gaussian(std: f64) -> Result<Self> {
        positive("gaussian_std", std)?;
        Ok(Attack::Gaussian { std })
    }

    pub fn omniscient(factor: f64) -> Result<Self> {
        positive("omniscient_factor", factor)?;
        Ok(Attack::Omniscient { factor })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Attack::Gaussian { std } => positive("gaussian_std", std),
            Attack::Omniscient { factor } => positive("omniscient_factor", factor),
            Attack::LabelFlip => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Attack::Gaussian { .. } => "gaussian",
            Attack::LabelFlip => "label_flip",
            Attack::Omniscient { .. } => "omniscient",
        }
    }
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::param(name, format!("{v} must be positive and finite")))
    }
}

/// Which workers are Byzantine and how they behave. The attack is fixed for
/// the whole run.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkerRoster {
    m: usize,
    byzantine: Vec<bool>,
    attack: Option<Attack>,
}

impl WorkerRoster {
    pub fn honest(m: usize) -> Result<Self> {
        Self::new(m, &[], None)
    }

    /// `byzantine_ids` must be distinct ids below `m`, leaving at least one
    /// honest worker. A nonempty set needs an attack.
    pub fn new(m: usize, byzantine_ids: &[usize], attack: Option<Attack>) -> Result<Self> {
        if m == 0 {
            return Err(Error::param("workers", "need at least one worker"));
        }
        let mut byzantine = vec![false; m];
        for &id in byzantine_ids {
            if id >= m || byzantine[id] {
                return Err(Error::param(
                    "byzantine_ids",
                    format!("{id} is out of range for {m} workers or listed twice"),
                ));
            }
            byzantine[id] = true;
        }
        if byzantine_ids.len() >= m {
            return Err(Error::param("byzantine_ids", "at least one worker must be honest"));
        }
        if let Some(a) = &attack {
            a.validate()?;
        } else if !byzantine_ids.is_empty() {
            return Err(Error::param("attack", "Byzantine workers need an attack model"));
        }
        Ok(WorkerRoster { m, byzantine, attack })
    }

    /// The last `q` workers are Byzantine.
    pub fn last_q(m: usize, q: usize, attack: Option<Attack>) -> Result<Self> {
        let ids: Vec<usize> = (m.saturating_sub(q)..m).collect();
        if q > m {
            return Err(Error::param("byzantine", format!("{q} attackers exceed {m} workers")));
        }
        Self::new(m, &ids, if q == 0 { None } else { attack })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn q(&self) -> usize {
        self.byzantine.iter().filter(|&&b| b).count()
    }

    pub fn is_byzantine(&self, id: usize) -> bool {
        self.byzantine[id]
    }

    pub fn byzantine_ids(&self) -> Vec<usize> {
        (0..self.m).filter(|&i| self.byzantine[i]).collect()
    }

    pub fn attack(&self) -> Option<Attack> {
        if self.q() == 0 {
            None
        } else {
            self.attack
        }
    }
}

pub fn gaussian_attack<T: Scalar>(dim: usize, std: f64, rng: &mut RngStream) -> Result<Vector<T>> {
    positive("gaussian_std", std)?;
    Ok(Vector::new(rng.normal_vec(dim, std)))
}

/// Maps every label `l` to `9 - l`. Only defined for 10-class data.
pub fn flip_labels<T: Scalar>(ds: &Dataset<T>) -> Result<Dataset<T>> {
    if ds.classes() != 10 {
        return Err(Error::Data(DataError::Invalid(format!(
            "label flipping maps l to 9 - l and needs 10 classes, found {}",
            ds.classes()
        ))));
    }
    let flipped = ds.labels().iter().map(|&l| 9 - l).collect();
    Ok(ds.with_labels(flipped)?)
}

/// `-factor * mean(benign)`; every omniscient attacker sends this vector.
pub fn omniscient_attack<T: Scalar>(benign: &[Vector<T>], factor: T) -> Result<Vector<T>> {
    if benign.is_empty() {
        return Err(Error::Empty("omniscient attack needs at least one benign gradient"));
    }
    Ok(mean_of(benign)?.scaled(-factor))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vector::dot;

    #[test]
    fn omniscient_examples() {
        let benign = [Vector::new(vec![1.0, 0.0]), Vector::new(vec![3.0, 0.0])];
        assert_eq!(omniscient_attack(&benign, 100.0).unwrap(), Vector::new(vec![-200.0, 0.0]));
        let g = Vector::new(vec![0.25, -4.0, 7.0]);
        assert_eq!(omniscient_attack(std::slice::from_ref(&g), 1.0).unwrap(), g.scaled(-1.0));
        let canceling = [Vector::new(vec![1.0, -2.0]), Vector::new(vec![-1.0, 2.0])];
        assert_eq!(omniscient_attack(&canceling, 1e4).unwrap(), Vector::new(vec![0.0, 0.0]));
        assert!(omniscient_attack::<f64>(&[], 1.0).is_err());
    }

    #[test]
    fn omniscient_is_antiparallel() {
        let benign = [Vector::new(vec![0.3, -1.7, 2.2]), Vector::new(vec![0.9, 0.4, -0.6])];
        let mean = mean_of(&benign).unwrap();
        let out = omniscient_attack(&benign, 64.0).unwrap();
        let sq = dot(&mean, &mean).unwrap();
        assert_eq!(dot(&out, &mean).unwrap(), -64.0 * sq);
    }

    #[test]
    fn flip_maps_to_complement() {
        let ds = Dataset::new(vec![0.0; 3], vec![2, 9, 0], 1, 10).unwrap();
        let flipped = flip_labels(&ds).unwrap();
        assert_eq!(flipped.labels(), &[7, 0, 9]);
        assert_eq!(flipped.features(), ds.features());
        assert_eq!(flip_labels(&flipped).unwrap(), ds);
    }

    #[test]
    fn flip_needs_ten_classes() {
        let ds = Dataset::new(vec![0.0; 2], vec![0, 1], 1, 2).unwrap();
        assert!(flip_labels(&ds).is_err());
    }

    #[test]
    fn gaussian_is_seeded() {
        let a: Vector<f64> = gaussian_attack(16, 200.0, &mut RngStream::new(5, 9)).unwrap();
        let b: Vector<f64> = gaussian_attack(16, 200.0, &mut RngStream::new(5, 9)).unwrap();
        assert_eq!(a, b);
        assert!(a.is_finite());
        assert!(gaussian_attack::<f64>(4, 0.0, &mut RngStream::new(0, 0)).is_err());
        assert!(Attack::gaussian(-1.0).is_err());
        assert!(Attack::omniscient(0.0).is_err());
    }

    #[test]
    fn roster_validation() {
        let r = WorkerRoster::last_q(16, 7, Some(Attack::LabelFlip)).unwrap();
        assert_eq!(r.q(), 7);
        assert_eq!(r.byzantine_ids(), (9..16).collect::<Vec<_>>());
        assert!(WorkerRoster::new(4, &[1, 1], Some(Attack::LabelFlip)).is_err());
        assert!(WorkerRoster::new(4, &[4], Some(Attack::LabelFlip)).is_err());
        assert!(WorkerRoster::new(2, &[0, 1], Some(Attack::LabelFlip)).is_err());
        assert!(WorkerRoster::new(4, &[0], None).is_err());
        assert_eq!(WorkerRoster::honest(3).unwrap().attack(), None);
    }
}
