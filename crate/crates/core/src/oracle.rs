//! Brute-force exact distributions over configuration keys.
//!
//! A configuration on a universe of `n_bits` slots is encoded as a `u64`
//! key (bit `i` = slot `i`). Tables are sparse, sorted by key, and hold only
//! strictly positive entries.

use std::fmt::Debug;
use std::io::Write;

use num_rational::BigRational;
use num_traits::{Num, Signed, ToPrimitive};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gf2::BitVec;
use crate::graph::{Graph, PercolationConfig};

/// Largest universe the enumerators will walk.
pub const ENUMERATION_CAP: usize = 22;

/// Weights: `f64` for speed, `BigRational` for exact identities.
pub trait Scalar: Num + Signed + Clone + PartialOrd + Debug + Send + Sync {
    /// Exact conversion of a finite float (every finite `f64` is dyadic).
    fn from_f64(x: f64) -> Self;
    fn to_f64(&self) -> f64;
}

impl Scalar for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Scalar for BigRational {
    fn from_f64(x: f64) -> Self {
        BigRational::from_float(x).expect("finite parameter")
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

pub fn check_cap(bits: usize) -> Result<()> {
    if bits > ENUMERATION_CAP {
        Err(Error::StateSpaceTooLarge {
            bits,
            cap: ENUMERATION_CAP,
        })
    } else {
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExactDistribution<W = f64> {
    n_bits: usize,
    entries: Vec<(u64, W)>,
}

impl<W: Scalar> ExactDistribution<W> {
    /// Normalizes nonnegative weights; zero weights are dropped and
    /// duplicate keys are merged.
    pub fn from_weights(n_bits: usize, mut weights: Vec<(u64, W)>) -> Result<Self> {
        weights.retain(|(_, w)| !w.is_zero());
        weights.sort_by_key(|(k, _)| *k);
        let mut merged: Vec<(u64, W)> = Vec::with_capacity(weights.len());
        for (k, w) in weights {
            debug_assert!(!w.is_negative(), "negative weight");
            match merged.last_mut() {
                Some((lk, lw)) if *lk == k => *lw = lw.clone() + w,
                _ => merged.push((k, w)),
            }
        }
        let total = merged.iter().fold(W::zero(), |a, (_, w)| a + w.clone());
        if total.is_zero() {
            return Err(Error::ZeroPartition);
        }
        for (_, w) in merged.iter_mut() {
            *w = w.clone() / total.clone();
        }
        Ok(ExactDistribution {
            n_bits,
            entries: merged,
        })
    }

    pub fn point_mass(n_bits: usize, key: u64) -> Self {
        ExactDistribution {
            n_bits,
            entries: vec![(key, W::one())],
        }
    }

    pub fn uniform<I: IntoIterator<Item = u64>>(n_bits: usize, keys: I) -> Result<Self> {
        Self::from_weights(n_bits, keys.into_iter().map(|k| (k, W::one())).collect())
    }

    pub fn n_bits(&self) -> usize {
        self.n_bits
    }

    pub fn entries(&self) -> &[(u64, W)] {
        &self.entries
    }

    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    pub fn prob(&self, key: u64) -> W {
        match self.entries.binary_search_by_key(&key, |(k, _)| *k) {
            Ok(i) => self.entries[i].1.clone(),
            Err(_) => W::zero(),
        }
    }

    pub fn total(&self) -> W {
        self.entries.iter().fold(W::zero(), |a, (_, w)| a + w.clone())
    }

    /// Image under a deterministic map into a universe of `n_out` bits.
    pub fn pushforward<F: Fn(u64) -> u64>(&self, n_out: usize, f: F) -> Self {
        let mapped = self.entries.iter().map(|(k, w)| (f(*k), w.clone())).collect();
        Self::from_weights(n_out, mapped).expect("mass is preserved")
    }

    /// Image under a Markov kernel `key -> [(key', prob)]`.
    pub fn pushforward_kernel<F: Fn(u64) -> Vec<(u64, W)>>(&self, n_out: usize, f: F) -> Self {
        let mut out = Vec::new();
        for (k, w) in &self.entries {
            for (k2, p) in f(*k) {
                out.push((k2, w.clone() * p));
            }
        }
        Self::from_weights(n_out, out).expect("mass is preserved")
    }

    /// Law of `key | X` where `X` has independent bits, bit `t` set with
    /// probability `probs[t]`.
    pub fn bernoulli_or(&self, probs: &[W]) -> Result<Self> {
        if probs.len() != self.n_bits {
            return Err(Error::DimensionMismatch {
                expected: self.n_bits,
                got: probs.len(),
            });
        }
        check_cap(self.n_bits)?;
        let mut table = vec![W::zero(); 1usize << self.n_bits];
        for (k, w) in &self.entries {
            table[*k as usize] = w.clone();
        }
        for (t, x) in probs.iter().enumerate() {
            let bit = 1usize << t;
            let stay = W::one() - x.clone();
            for k in 0..table.len() {
                if k & bit == 0 {
                    let f0 = table[k].clone();
                    if f0.is_zero() {
                        continue;
                    }
                    table[k | bit] = table[k | bit].clone() + f0.clone() * x.clone();
                    table[k] = f0 * stay.clone();
                }
            }
        }
        let entries = table
            .into_iter()
            .enumerate()
            .filter(|(_, w)| !w.is_zero())
            .map(|(k, w)| (k as u64, w))
            .collect();
        Ok(ExactDistribution {
            n_bits: self.n_bits,
            entries,
        })
    }

    pub fn marginal(&self, bit: usize) -> W {
        self.entries
            .iter()
            .filter(|(k, _)| (k >> bit) & 1 == 1)
            .fold(W::zero(), |a, (_, w)| a + w.clone())
    }

    pub fn marginals(&self) -> Vec<W> {
        (0..self.n_bits).map(|b| self.marginal(b)).collect()
    }

    /// Law of the listed bits, re-indexed `0..window.len()`.
    pub fn project(&self, window: &[usize]) -> Self {
        self.pushforward(window.len(), |k| project_key(k, window))
    }

    /// Conditional law given `pred`.
    pub fn condition<F: Fn(u64) -> bool>(&self, pred: F) -> Result<Self> {
        let kept = self.entries.iter().filter(|(k, _)| pred(*k)).cloned().collect();
        Self::from_weights(self.n_bits, kept)
    }

    pub fn to_f64(&self) -> ExactDistribution<f64> {
        ExactDistribution {
            n_bits: self.n_bits,
            entries: self.entries.iter().map(|(k, w)| (*k, w.to_f64())).collect(),
        }
    }

    /// `(1/2) Σ |p − q|` in the table's own arithmetic.
    pub fn tv_exact(&self, other: &Self) -> Result<W> {
        if self.n_bits != other.n_bits {
            return Err(Error::UniverseMismatch(self.n_bits, other.n_bits));
        }
        let mut acc = W::zero();
        merge_walk(&self.entries, &other.entries, |p, q| {
            acc = acc.clone() + (p - q).abs();
        });
        Ok(acc / (W::one() + W::one()))
    }

    /// CSV rows `config,probability`; the config is the bit string of the key.
    pub fn write_csv<Wr: Write>(&self, mut out: Wr) -> std::io::Result<()> {
        writeln!(out, "config,probability")?;
        for (k, w) in &self.entries {
            writeln!(
                out,
                "{},{:.17e}",
                BitVec::from_key(self.n_bits, *k).to_bit_string(),
                w.to_f64()
            )?;
        }
        Ok(())
    }
}

fn merge_walk<W: Scalar, F: FnMut(W, W)>(a: &[(u64, W)], b: &[(u64, W)], mut f: F) {
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let ka = a.get(i).map(|e| e.0).unwrap_or(u64::MAX);
        let kb = b.get(j).map(|e| e.0).unwrap_or(u64::MAX);
        if i < a.len() && (j >= b.len() || ka < kb) {
            f(a[i].1.clone(), W::zero());
            i += 1;
        } else if j < b.len() && (i >= a.len() || kb < ka) {
            f(W::zero(), b[j].1.clone());
            j += 1;
        } else {
            f(a[i].1.clone(), b[j].1.clone());
            i += 1;
            j += 1;
        }
    }
}

pub fn project_key(k: u64, window: &[usize]) -> u64 {
    window
        .iter()
        .enumerate()
        .fold(0, |acc, (j, &i)| acc | (((k >> i) & 1) << j))
}

/// Total-variation distance, computed in floating point.
pub fn tv_distance<A: Scalar, B: Scalar>(d1: &ExactDistribution<A>, d2: &ExactDistribution<B>) -> Result<f64> {
    d1.to_f64().tv_exact(&d2.to_f64())
}

/// Frequencies of the observed keys.
pub fn empirical_distribution<I: IntoIterator<Item = u64>>(n_bits: usize, samples: I) -> Result<ExactDistribution<f64>> {
    let mut keys: Vec<u64> = samples.into_iter().collect();
    keys.sort_unstable();
    let mut weights: Vec<(u64, f64)> = Vec::new();
    for k in keys {
        match weights.last_mut() {
            Some((lk, w)) if *lk == k => *w += 1.0,
            _ => weights.push((k, 1.0)),
        }
    }
    ExactDistribution::from_weights(n_bits, weights)
}

/// Every configuration of `g` in key order.
pub fn enumerate_configs(g: &Graph) -> Result<impl Iterator<Item = PercolationConfig> + '_> {
    check_cap(g.num_slots())?;
    Ok((0..1u64 << g.num_slots()).map(move |k| PercolationConfig::from_key(g, k)))
}

/// Normalized table of `weight(key)` over all `2^n_bits` keys.
pub fn exact_distribution<W: Scalar, F>(n_bits: usize, weight: F) -> Result<ExactDistribution<W>>
where
    F: Fn(u64) -> W + Sync,
{
    check_cap(n_bits)?;
    let weights: Vec<(u64, W)> = (0..1u64 << n_bits)
        .into_par_iter()
        .filter_map(|k| {
            let w = weight(k);
            (!w.is_zero()).then_some((k, w))
        })
        .collect();
    ExactDistribution::from_weights(n_bits, weights)
}

/// As [`exact_distribution`], with the weight taking a configuration of `g`.
pub fn exact_distribution_on<W: Scalar, F>(g: &Graph, weight: F) -> Result<ExactDistribution<W>>
where
    F: Fn(&PercolationConfig) -> W + Sync,
{
    exact_distribution(g.num_slots(), |k| weight(&PercolationConfig::from_key(g, k)))
}
