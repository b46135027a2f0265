//! Distance-based baselines: Krum and Bulyan. Both need the number of
//! Byzantine workers `q` up front and cost Theta(m^2 d) for the pairwise
//! distances.

use crate::aggregators::median::{cmp, median_in_place};
use crate::aggregators::AggregationResult;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::vector::{squared_distance, GradientBatch, Vector};

struct Distances<T> {
    m: usize,
    sq: Vec<T>,
}

impl<T: Scalar> Distances<T> {
    fn new(gradients: &[Vector<T>]) -> Self {
        let m = gradients.len();
        let mut sq = vec![T::zero(); m * m];
        for a in 0..m {
            for b in a + 1..m {
                let d = squared_distance(gradients[a].as_slice(), gradients[b].as_slice());
                sq[a * m + b] = d;
                sq[b * m + a] = d;
            }
        }
        Distances { m, sq }
    }

    fn get(&self, a: usize, b: usize) -> T {
        self.sq[a * self.m + b]
    }
}

/// Krum selection restricted to `pool` (batch positions). Each candidate is
/// scored by the sum of squared distances to its `pool.len() - q - 2` nearest
/// pool members; the lowest score wins, ties going to the lowest worker id.
/// Returns the index into `pool`.
fn select<T: Scalar>(pool: &[usize], ids: &[usize], dist: &Distances<T>, q: usize) -> usize {
    let neighbors = pool.len().saturating_sub(q + 2);
    let mut row = Vec::with_capacity(pool.len());
    let mut best: Option<(usize, T)> = None;
    for (slot, &a) in pool.iter().enumerate() {
        row.clear();
        row.extend(pool.iter().filter(|&&b| b != a).map(|&b| dist.get(a, b)));
        row.sort_unstable_by(cmp);
        let score: T = row[..neighbors].iter().copied().sum();
        let better = match best {
            None => true,
            Some((held, held_score)) => {
                score < held_score || (score == held_score && ids[a] < ids[pool[held]])
            }
        };
        if better {
            best = Some((slot, score));
        }
    }
    best.expect("pool is nonempty").0
}

pub fn krum<T: Scalar>(batch: &GradientBatch<T>, q: usize) -> Result<AggregationResult<T>> {
    let m = batch.m();
    if m < q + 3 {
        return Err(Error::Precondition {
            rule: "Krum",
            requirement: "m >= q + 3",
            m,
            q,
        });
    }
    let gradients = batch.gradients();
    let dist = Distances::new(gradients);
    let pool: Vec<usize> = (0..m).collect();
    let chosen = pool[select(&pool, batch.ids(), &dist, q)];
    Ok(AggregationResult {
        aggregate: gradients[chosen].clone(),
        selected_ids: vec![batch.ids()[chosen]],
        median: None,
        fallback: false,
    })
}

/// Bulyan: `m - 2q` rounds of Krum, each removing its pick from the pool, then
/// per coordinate the mean of the `m - 4q` selected values closest to their
/// median (closeness ties broken by value, then worker id).
pub fn bulyan<T: Scalar>(batch: &GradientBatch<T>, q: usize) -> Result<Vector<T>> {
    Ok(bulyan_with_selection(batch, q)?.0)
}

pub(crate) fn bulyan_with_selection<T: Scalar>(
    batch: &GradientBatch<T>,
    q: usize,
) -> Result<(Vector<T>, Vec<usize>)> {
    let m = batch.m();
    if m < 4 * q + 3 {
        return Err(Error::Precondition {
            rule: "Bulyan",
            requirement: "m >= 4q + 3",
            m,
            q,
        });
    }
    let gradients = batch.gradients();
    let ids = batch.ids();
    let dist = Distances::new(gradients);

    let rounds = m - 2 * q;
    let mut pool: Vec<usize> = (0..m).collect();
    let mut chosen = Vec::with_capacity(rounds);
    for _ in 0..rounds {
        let slot = select(&pool, ids, &dist, q);
        chosen.push(pool.remove(slot));
    }

    let keep = m - 4 * q;
    let kept = T::of_usize(keep);
    let mut values = vec![T::zero(); rounds];
    let mut ranked: Vec<(T, T, usize)> = Vec::with_capacity(rounds);
    let aggregate = (0..batch.dim())
        .map(|j| {
            for (slot, &p) in values.iter_mut().zip(&chosen) {
                *slot = gradients[p][j];
            }
            let med = median_in_place(&mut values);
            ranked.clear();
            ranked.extend(chosen.iter().map(|&p| {
                let v = gradients[p][j];
                ((v - med).abs(), v, ids[p])
            }));
            ranked.sort_unstable_by(|a, b| cmp(&a.0, &b.0).then(cmp(&a.1, &b.1)).then(a.2.cmp(&b.2)));
            ranked[..keep].iter().map(|r| r.1).sum::<T>() / kept
        })
        .collect();
    let mut selected: Vec<usize> = chosen.iter().map(|&p| ids[p]).collect();
    selected.sort_unstable();
    Ok((aggregate, selected))
}
