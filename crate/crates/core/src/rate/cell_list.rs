//! Cell-list evaluation of the pair sum with a spherical cutoff at `c * r_C`.
//!
//! Pairs farther apart than the cutoff are dropped. Each dropped term is at most
//! `|q_p q_q| exp(-c^2 / 4)`, so the absolute error on `Gamma` is bounded by
//! `(lambda / 2) * (2 W)^2 * exp(-c^2 / 4)` with `W = sum_i m_i / m_N`; for unit
//! masses that is the `N^2 exp(-c^2/4)` bound relative to `lambda`.

use std::collections::HashMap;

use rayon::prelude::*;

use super::{kernel, Charges, DecayRate, Method};
use crate::error::{CslError, Result};
use crate::geom;
use crate::model::{CollapseParams, Superposition};
use crate::Real;

/// Smallest accepted cutoff multiplier.
pub const MIN_CUTOFF: f64 = 3.0;
/// Default cutoff multiplier: the pruned kernel factor is `exp(-9) ~ 1.2e-4`.
pub const DEFAULT_CUTOFF: f64 = 6.0;

/// Forward half of the 26-cell neighbourhood; every unordered cell pair is
/// visited exactly once.
const FORWARD: [[i64; 3]; 13] = [
    [1, 0, 0],
    [1, 1, 0],
    [1, -1, 0],
    [0, 1, 0],
    [1, 0, 1],
    [1, 1, 1],
    [1, -1, 1],
    [0, 1, 1],
    [1, 0, -1],
    [1, 1, -1],
    [1, -1, -1],
    [0, 1, -1],
    [0, 0, 1],
];

/// Absolute error bound in s^-1 for a given cutoff and total branch weight.
pub fn accelerated_error_bound<T: Real>(params: &CollapseParams<T>, total_weight: T, cutoff: T) -> T {
    let two_w = T::of(2.0) * total_weight;
    params.lambda() * T::of(0.5) * two_w * two_w * kernel(cutoff * cutoff)
}

pub fn gamma_accelerated<T: Real>(
    sup: &Superposition<T>,
    params: &CollapseParams<T>,
    cutoff: T,
) -> Result<DecayRate<T>> {
    if !(cutoff >= T::of(MIN_CUTOFF)) {
        return Err(CslError::CutoffTooSmall {
            multiplier: cutoff.to_f64_lossy(),
        });
    }
    let c = Charges::new(sup, params)?;
    let sum = pair_sum_cells(&c, cutoff);
    let raw = params.lambda() * sum * T::of(0.5);
    let mut rate = DecayRate::finalize(raw, c.scale(params), Method::Accelerated)?;
    rate.error_bound = Some(accelerated_error_bound(params, c.total_weight, cutoff));
    Ok(rate)
}

struct Cells {
    keys: Vec<[i64; 3]>,
    /// `order[ranges[k].0..ranges[k].1]` are the charges in cell `k`.
    ranges: Vec<(usize, usize)>,
    order: Vec<usize>,
    lookup: HashMap<[i64; 3], usize>,
}

impl Cells {
    fn build<T: Real>(pos: &[[T; 3]], size: T) -> Self {
        let inv = T::one() / size;
        let key_of = |x: &[T; 3]| -> [i64; 3] {
            let k = |v: T| (v * inv).floor().to_i64().expect("finite coordinate");
            [k(x[0]), k(x[1]), k(x[2])]
        };
        let point_keys: Vec<[i64; 3]> = pos.iter().map(key_of).collect();
        let mut order: Vec<usize> = (0..pos.len()).collect();
        order.sort_by_key(|&i| (point_keys[i], i));

        let mut keys = Vec::new();
        let mut ranges = Vec::new();
        let mut start = 0;
        while start < order.len() {
            let key = point_keys[order[start]];
            let mut end = start + 1;
            while end < order.len() && point_keys[order[end]] == key {
                end += 1;
            }
            keys.push(key);
            ranges.push((start, end));
            start = end;
        }
        let lookup = keys.iter().enumerate().map(|(i, k)| (*k, i)).collect();
        Self {
            keys,
            ranges,
            order,
            lookup,
        }
    }

    fn members(&self, cell: usize) -> &[usize] {
        let (s, e) = self.ranges[cell];
        &self.order[s..e]
    }
}

/// Same quantity as the naive pair sum, restricted to pairs closer than `cutoff`.
/// Per-cell partial sums are reduced in sorted cell order.
pub(crate) fn pair_sum_cells<T: Real>(c: &Charges<T>, cutoff: T) -> T {
    if c.len() == 0 {
        return T::zero();
    }
    let cells = Cells::build(&c.pos, cutoff);
    let cut2 = cutoff * cutoff;
    let two = T::of(2.0);

    let partials: Vec<T> = (0..cells.keys.len())
        .into_par_iter()
        .map(|k| {
            let own = cells.members(k);
            let mut diag = T::zero();
            let mut off = T::zero();
            for (a, &p) in own.iter().enumerate() {
                diag += c.q[p] * c.q[p];
                for &q in &own[a + 1..] {
                    let d2 = geom::dist2(&c.pos[p], &c.pos[q]);
                    if d2 < cut2 {
                        off += c.q[p] * c.q[q] * kernel(d2);
                    }
                }
            }
            let key = cells.keys[k];
            for dk in &FORWARD {
                let nk = [key[0] + dk[0], key[1] + dk[1], key[2] + dk[2]];
                let Some(&n) = cells.lookup.get(&nk) else {
                    continue;
                };
                for &p in own {
                    for &q in cells.members(n) {
                        let d2 = geom::dist2(&c.pos[p], &c.pos[q]);
                        if d2 < cut2 {
                            off += c.q[p] * c.q[q] * kernel(d2);
                        }
                    }
                }
            }
            diag + two * off
        })
        .collect();
    partials.into_iter().sum()
}
