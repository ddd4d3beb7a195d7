//! BB84 states with X/Z measurements.
//!
//! A state is kept symbolically as `(bit, basis)`. Measuring in the preparation
//! basis returns the bit; measuring in the conjugate basis returns a fair coin.
//! For these four states and two bases that is exactly the Born rule.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Basis {
    Z,
    X,
}

impl Basis {
    pub fn from_bit(b: u64) -> Basis {
        if b & 1 == 0 {
            Basis::Z
        } else {
            Basis::X
        }
    }

    pub fn bit(self) -> u64 {
        match self {
            Basis::Z => 0,
            Basis::X => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Bb84State {
    pub bit: u8,
    pub basis: Basis,
    pub consumed: bool,
}

impl fmt::Display for Bb84State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ket = match (self.basis, self.bit) {
            (Basis::Z, 0) => "|0>",
            (Basis::Z, _) => "|1>",
            (Basis::X, 0) => "|+>",
            (Basis::X, _) => "|->",
        };
        f.write_str(ket)
    }
}

pub fn prepare(bit: u8, basis: Basis) -> Bb84State {
    Bb84State { bit: bit & 1, basis, consumed: false }
}

/// Measures with an explicit coin for the conjugate-basis case.
pub fn measure_with(state: &mut Bb84State, basis: Basis, coin: impl FnOnce() -> u8) -> Result<u8> {
    if state.consumed {
        return Err(Error::Usage(format!("state {state} was already measured")));
    }
    state.consumed = true;
    Ok(if basis == state.basis { state.bit } else { coin() & 1 })
}

pub fn measure<R: Rng + ?Sized>(state: &mut Bb84State, basis: Basis, rng: &mut R) -> Result<u8> {
    measure_with(state, basis, || rng.gen_range(0..2u8))
}

/// Per-run store of qubits. Wires carry indices into it, so a message copy
/// never duplicates a state.
#[derive(Debug, Clone, Default)]
pub struct QubitTable {
    states: Vec<Bb84State>,
    measured_in: Vec<Option<Basis>>,
}

impl QubitTable {
    pub fn insert(&mut self, s: Bb84State) -> u32 {
        self.states.push(s);
        self.measured_in.push(None);
        (self.states.len() - 1) as u32
    }

    pub fn get(&self, h: u32) -> Option<&Bb84State> {
        self.states.get(h as usize)
    }

    /// Basis of the measurement already applied to `h`, if any.
    pub fn measured_in(&self, h: u32) -> Option<Basis> {
        self.measured_in.get(h as usize).copied().flatten()
    }

    pub fn measure_with(&mut self, h: u32, basis: Basis, coin: impl FnOnce() -> u8) -> Result<u8> {
        let s = self
            .states
            .get_mut(h as usize)
            .ok_or_else(|| Error::Usage(format!("unknown qubit handle {h}")))?;
        let out = measure_with(s, basis, coin)?;
        self.measured_in[h as usize] = Some(basis);
        Ok(out)
    }

    pub fn clear(&mut self) {
        self.states.clear();
        self.measured_in.clear();
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn naming() {
        assert_eq!(prepare(0, Basis::Z).to_string(), "|0>");
        assert_eq!(prepare(1, Basis::X).to_string(), "|->");
        assert_eq!(prepare(1, Basis::Z).to_string(), "|1>");
    }

    #[test]
    fn same_basis_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for bit in 0..2 {
            for basis in [Basis::Z, Basis::X] {
                let mut s = prepare(bit, basis);
                assert_eq!(measure(&mut s, basis, &mut rng).unwrap(), bit);
            }
        }
    }

    #[test]
    fn double_measurement_is_usage_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut s = prepare(0, Basis::Z);
        measure(&mut s, Basis::X, &mut rng).unwrap();
        assert!(matches!(measure(&mut s, Basis::Z, &mut rng), Err(Error::Usage(_))));
    }

    #[test]
    fn conjugate_basis_is_fair() {
        const N: u32 = 100_000;
        let mut zeros = 0u32;
        for seed in 0..N {
            let mut rng = ChaCha8Rng::seed_from_u64(seed as u64);
            let mut s = prepare(0, Basis::Z);
            if measure(&mut s, Basis::X, &mut rng).unwrap() == 0 {
                zeros += 1;
            }
        }
        let f = zeros as f64 / N as f64;
        let tol = 3.0 * (0.25 / N as f64).sqrt();
        assert!((f - 0.5).abs() <= tol, "frequency {f}");
    }

    #[test]
    fn deferred_measurement_has_same_statistics() {
        // measuring right away or after the table has been shuffled through
        // other operations gives the same outcome for the same coin
        const N: u64 = 20_000;
        let mut now = [0u32; 2];
        let mut later = [0u32; 2];
        for seed in 0..N {
            let mut a = ChaCha8Rng::seed_from_u64(seed);
            let mut s = prepare((seed % 2) as u8, Basis::from_bit(seed / 2));
            now[measure(&mut s, Basis::X, &mut a).unwrap() as usize] += 1;

            let mut b = ChaCha8Rng::seed_from_u64(seed);
            let mut table = QubitTable::default();
            let h = table.insert(prepare((seed % 2) as u8, Basis::from_bit(seed / 2)));
            for i in 0..5 {
                table.insert(prepare(i % 2, Basis::Z));
            }
            later[table.measure_with(h, Basis::X, || b.gen_range(0..2u8)).unwrap() as usize] += 1;
        }
        assert_eq!(now, later);
    }
}
