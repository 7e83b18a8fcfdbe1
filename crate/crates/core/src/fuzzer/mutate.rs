//! Havoc-style mutation over symbol sequences.
//!
//! Every value written by a mutation comes from the [`ValuePool`], which only
//! holds alphabet symbols, so candidates never leave the alphabet.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::frontend::Alphabet;

/// Weighted sampler over alphabet symbols.
#[derive(Debug, Clone)]
pub struct ValuePool {
    symbols: Vec<i64>,
    weights: Vec<u32>,
    dist: WeightedIndex<u32>,
}

impl ValuePool {
    /// `entries` must be non-empty with at least one positive weight.
    pub fn new(entries: &[(i64, u32)]) -> Self {
        let symbols: Vec<i64> = entries.iter().map(|e| e.0).collect();
        let weights: Vec<u32> = entries.iter().map(|e| e.1).collect();
        let dist = WeightedIndex::new(&weights).expect("pool needs a positive weight");
        ValuePool { symbols, weights, dist }
    }

    pub fn uniform(alphabet: Alphabet) -> Self {
        let entries: Vec<(i64, u32)> = alphabet.symbols().map(|s| (s, 1)).collect();
        Self::new(&entries)
    }

    pub fn sample(&self, rng: &mut impl Rng) -> i64 {
        self.symbols[self.dist.sample(rng)]
    }

    pub fn entries(&self) -> impl Iterator<Item = (i64, u32)> + '_ {
        self.symbols.iter().copied().zip(self.weights.iter().copied())
    }
}

pub fn replace(seq: &mut [i64], pos: usize, v: i64) {
    seq[pos] = v;
}

pub fn delete(seq: &mut Vec<i64>, pos: usize) {
    seq.remove(pos);
}

pub fn insert(seq: &mut Vec<i64>, pos: usize, v: i64) {
    seq.insert(pos, v);
}

/// Copies `seq[start..start + len]` and inserts the copy at `at`.
pub fn duplicate_block(seq: &mut Vec<i64>, start: usize, len: usize, at: usize) {
    let block: Vec<i64> = seq[start..start + len].to_vec();
    seq.splice(at..at, block);
}

/// `a[..cut_a] ++ b[cut_b..]`.
pub fn splice(a: &[i64], b: &[i64], cut_a: usize, cut_b: usize) -> Vec<i64> {
    let mut out = a[..cut_a].to_vec();
    out.extend_from_slice(&b[cut_b..]);
    out
}

const DUP_MAX: usize = 32;

/// Applies `2^k` primitives, `k` uniform in `1..=6`, each drawn uniformly
/// from replace, delete, insert, duplicate and splice-with-`donor`. The
/// result is non-empty and at most `max_len` long.
pub fn havoc(input: &[i64], donor: &[i64], pool: &ValuePool, max_len: usize, rng: &mut impl Rng) -> Vec<i64> {
    assert!(!input.is_empty() && max_len > 0);
    let mut seq = input.to_vec();
    seq.truncate(max_len);
    let rounds = 1usize << rng.random_range(1..=6);
    for _ in 0..rounds {
        match rng.random_range(0..5) {
            0 => {
                let pos = rng.random_range(0..seq.len());
                replace(&mut seq, pos, pool.sample(rng));
            }
            1 => {
                let pos = rng.random_range(0..seq.len());
                if seq.len() > 1 {
                    delete(&mut seq, pos);
                } else {
                    replace(&mut seq, pos, pool.sample(rng));
                }
            }
            2 => {
                let pos = rng.random_range(0..=seq.len());
                insert(&mut seq, pos, pool.sample(rng));
            }
            3 => {
                let len = rng.random_range(1..=seq.len().min(DUP_MAX));
                let start = rng.random_range(0..=seq.len() - len);
                let at = rng.random_range(0..=seq.len());
                duplicate_block(&mut seq, start, len, at);
            }
            _ if !donor.is_empty() => {
                // A non-empty donor suffix keeps the result non-empty.
                let cut_a = rng.random_range(0..=seq.len());
                let cut_b = rng.random_range(0..donor.len());
                seq = splice(&seq, donor, cut_a, cut_b);
            }
            _ => {}
        }
        seq.truncate(max_len);
    }
    seq
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn primitive_examples() {
        let mut s = vec![1, 2, 3];
        replace(&mut s, 1, 5);
        assert_eq!(s, [1, 5, 3]);

        let mut s = vec![1, 2, 3];
        delete(&mut s, 0);
        assert_eq!(s, [2, 3]);

        let mut s = vec![1, 3];
        insert(&mut s, 1, 2);
        assert_eq!(s, [1, 2, 3]);

        let mut s = vec![1, 2, 3];
        duplicate_block(&mut s, 0, 2, 3);
        assert_eq!(s, [1, 2, 3, 1, 2]);

        assert_eq!(splice(&[1, 2, 3], &[7, 8, 9], 1, 2), [1, 9]);
    }

    #[test]
    fn pool_respects_weights() {
        let pool = ValuePool::new(&[(1, 1), (2, 0), (3, 3)]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut counts = [0usize; 4];
        for _ in 0..4000 {
            counts[pool.sample(&mut rng) as usize] += 1;
        }
        assert_eq!(counts[2], 0);
        // Expected 1000 vs 3000.
        assert!((800..1200).contains(&counts[1]), "{counts:?}");
        assert!((2800..3200).contains(&counts[3]), "{counts:?}");
    }

    #[test]
    fn havoc_stays_in_bounds() {
        let pool = ValuePool::uniform(Alphabet::new(3, 6));
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut input = vec![3];
        for _ in 0..2000 {
            let out = havoc(&input, &[4, 5, 6], &pool, 50, &mut rng);
            assert!(!out.is_empty() && out.len() <= 50);
            assert!(out.iter().all(|s| (3..=6).contains(s)));
            input = out;
        }
    }

    #[test]
    fn havoc_on_single_symbol_never_empties() {
        let pool = ValuePool::uniform(Alphabet::new(1, 2));
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..500 {
            assert!(!havoc(&[1], &[], &pool, 1, &mut rng).is_empty());
        }
    }
}
