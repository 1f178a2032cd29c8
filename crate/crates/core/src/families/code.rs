use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary code of fixed length with a guaranteed minimum pairwise Hamming distance.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct BinaryCode {
    pub k: usize,
    pub words: Vec<Vec<bool>>,
    pub min_distance: usize,
}

impl BinaryCode {
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Exhaustive pairwise check of word length and distance.
    pub fn verify(&self) -> bool {
        if self.words.iter().any(|w| w.len() != self.k) {
            return false;
        }
        for i in 0..self.words.len() {
            for j in i + 1..self.words.len() {
                if hamming(&self.words[i], &self.words[j]) < self.min_distance {
                    return false;
                }
            }
        }
        true
    }

    /// Smallest distance actually realised between two words.
    pub fn realised_distance(&self) -> Option<usize> {
        let mut best = None;
        for i in 0..self.words.len() {
            for j in i + 1..self.words.len() {
                let h = hamming(&self.words[i], &self.words[j]);
                best = Some(best.map_or(h, |b: usize| b.min(h)));
            }
        }
        best
    }
}

pub fn hamming(a: &[bool], b: &[bool]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

/// Size a code of length `k` and distance `⌈k/4⌉` is guaranteed to reach.
pub fn gv_target_size(k: usize) -> usize {
    (k as f64 / 8.0).exp().ceil() as usize
}

pub fn gv_min_distance(k: usize) -> usize {
    k.div_ceil(4)
}

/// Greedy lexicographic code of length `k` with distance `⌈k/4⌉`.
///
/// Words are scanned in increasing binary order and kept when far enough from every kept word;
/// the scan stops once `⌈e^{k/8}⌉` words are collected.
pub fn gilbert_varshamov_subset(k: usize) -> Result<BinaryCode> {
    if k < 8 {
        return Err(Error::param(format!("code length must be at least 8, got {k}")));
    }
    if k > 63 {
        return Err(Error::param(format!("greedy enumeration supports lengths up to 63, got {k}")));
    }
    let dmin = gv_min_distance(k) as u32;
    let target = gv_target_size(k);
    let mut kept: Vec<u64> = Vec::with_capacity(target);
    let end: u64 = 1u64 << k;
    let mut w: u64 = 0;
    while kept.len() < target && w < end {
        if kept.iter().all(|&c| (c ^ w).count_ones() >= dmin) {
            kept.push(w);
        }
        w += 1;
    }
    if kept.len() < target {
        return Err(Error::numeric(format!(
            "greedy code reached only {} of {target} words",
            kept.len()
        )));
    }
    // bit i of the integer is coordinate i
    let words = kept.iter().map(|&c| (0..k).map(|i| (c >> i) & 1 == 1).collect()).collect();
    Ok(BinaryCode { k, words, min_distance: dmin as usize })
}

/// Uniformly random pair of words at Hamming distance at least `min_distance`.
pub fn sample_separated_pair<R: Rng + ?Sized>(
    k: usize,
    min_distance: usize,
    rng: &mut R,
) -> Result<(Vec<bool>, Vec<bool>)> {
    if k == 0 || min_distance > k {
        return Err(Error::param(format!("no pair of length {k} at distance {min_distance}")));
    }
    let a: Vec<bool> = (0..k).map(|_| rng.gen()).collect();
    loop {
        let b: Vec<bool> = (0..k).map(|_| rng.gen()).collect();
        if hamming(&a, &b) >= min_distance {
            return Ok((a, b));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn small_lengths() {
        let c = gilbert_varshamov_subset(8).unwrap();
        assert!(c.len() >= 3 && c.min_distance >= 2 && c.verify());
        let c = gilbert_varshamov_subset(16).unwrap();
        assert!(c.len() >= 8 && c.min_distance >= 4 && c.verify());
    }

    #[test]
    fn length_24() {
        let c = gilbert_varshamov_subset(24).unwrap();
        assert!(c.len() >= 21 && c.min_distance >= 6 && c.verify());
        assert!(c.realised_distance().unwrap() >= 6);
    }

    #[test]
    fn rejects_short_lengths() {
        assert!(gilbert_varshamov_subset(7).is_err());
    }

    #[test]
    fn separated_pairs() {
        let mut rng = seeded(4);
        for _ in 0..50 {
            let (a, b) = sample_separated_pair(40, 10, &mut rng).unwrap();
            assert!(hamming(&a, &b) >= 10);
        }
        assert!(sample_separated_pair(4, 5, &mut rng).is_err());
    }
}
