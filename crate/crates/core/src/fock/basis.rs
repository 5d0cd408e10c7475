//! Occupation-number basis with a total-quanta cutoff.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// States `|n_1 … n_K⟩` with `Σ n_k ≤ N_max`, ordered by total quanta and
/// then lexicographically (larger leading occupations first).
#[derive(Debug, Clone)]
pub struct FockBasis {
    modes: usize,
    n_max: u32,
    frequencies: Vec<f64>,
    states: Vec<Vec<u32>>,
    index: HashMap<Vec<u32>, usize>,
}

impl FockBasis {
    pub fn new(frequencies: &[f64], n_max: u32, max_states: usize) -> Result<Self> {
        let modes = frequencies.len();
        if modes == 0 {
            return Err(Error::invalid("K", "need at least one mode"));
        }
        let count = state_count(modes, n_max);
        if count.map_or(true, |c| c > max_states) {
            return Err(Error::Budget(format!(
                "Fock basis with K = {modes}, N_max = {n_max} exceeds {max_states} states"
            )));
        }
        let mut states = Vec::with_capacity(count.unwrap_or(0));
        for total in 0..=n_max {
            let mut current = vec![0u32; modes];
            compositions(total, 0, &mut current, &mut states);
        }
        let index = states.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        Ok(FockBasis {
            modes,
            n_max,
            frequencies: frequencies.to_vec(),
            states,
            index,
        })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn state(&self, i: usize) -> &[u32] {
        &self.states[i]
    }

    pub fn states(&self) -> &[Vec<u32>] {
        &self.states
    }

    pub fn index_of(&self, occupation: &[u32]) -> Option<usize> {
        self.index.get(occupation).copied()
    }

    pub fn total(&self, i: usize) -> u32 {
        self.states[i].iter().sum()
    }

    /// Eigenvalue `±1` of `φ ↦ −φ`, i.e. `(−1)^{Σ n_k}`.
    pub fn parity(&self, i: usize) -> i8 {
        if self.total(i) % 2 == 0 {
            1
        } else {
            -1
        }
    }

    /// `Σ n_k ω_k`.
    pub fn free_energy(&self, i: usize) -> f64 {
        self.states[i]
            .iter()
            .zip(&self.frequencies)
            .map(|(&n, w)| n as f64 * w)
            .sum()
    }
}

fn state_count(modes: usize, n_max: u32) -> Option<usize> {
    // C(n_max + K, K)
    let mut c: u128 = 1;
    for i in 1..=modes as u128 {
        c = c.checked_mul(n_max as u128 + i)? / i;
    }
    usize::try_from(c).ok()
}

fn compositions(remaining: u32, pos: usize, current: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if pos == current.len() - 1 {
        current[pos] = remaining;
        out.push(current.clone());
        return;
    }
    for n in (0..=remaining).rev() {
        current[pos] = n;
        compositions(remaining - n, pos + 1, current, out);
    }
    current[pos] = 0;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumeration_is_a_bijection() {
        let b = FockBasis::new(&[1.0, 1.5, 2.0], 5, 10_000).unwrap();
        assert_eq!(b.len(), 56);
        for i in 0..b.len() {
            assert!(b.total(i) <= 5);
            assert_eq!(b.index_of(b.state(i)), Some(i));
        }
        assert_eq!(b.state(0), &[0, 0, 0]);
        assert_eq!(b.state(1), &[1, 0, 0]);
        assert!((1..b.len()).all(|i| b.total(i) >= b.total(i - 1)));
    }

    #[test]
    fn budget_guard() {
        assert!(matches!(FockBasis::new(&[1.0; 8], 40, 1000), Err(Error::Budget(_))));
    }
}
