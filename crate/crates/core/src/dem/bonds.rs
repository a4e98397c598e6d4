//! Registry of cemented particle pairs.
//!
//! Bonds are created once, at cementation, and break irreversibly: a pair that
//! has broken can never re-bond, so the bond count is monotonically
//! non-increasing after cementation.

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// Unordered particle-id pair, stored normalized (small id first).
pub type BondPair = (u32, u32);

pub fn pair_key(i: u32, j: u32) -> BondPair {
    if i <= j {
        (i, j)
    } else {
        (j, i)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BondRegistry {
    bonds: BTreeSet<BondPair>,
    /// Tombstones: pairs that broke (or lost a member) and can never re-bond.
    broken: BTreeSet<BondPair>,
}

impl BondRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Create a bond. Refused (returns false) for broken pairs and self-pairs.
    pub fn bond(&mut self, i: u32, j: u32) -> bool {
        if i == j {
            return false;
        }
        let key = pair_key(i, j);
        if self.broken.contains(&key) {
            return false;
        }
        self.bonds.insert(key)
    }

    /// Break an existing bond, moving it to the tombstone set.
    pub fn break_bond(&mut self, i: u32, j: u32) -> bool {
        let key = pair_key(i, j);
        if self.bonds.remove(&key) {
            self.broken.insert(key);
            true
        } else {
            false
        }
    }

    /// Retire every bond attached to a removed particle.
    pub fn remove_particle(&mut self, id: u32) -> usize {
        let attached: Vec<BondPair> = self
            .bonds
            .iter()
            .filter(|&&(a, b)| a == id || b == id)
            .copied()
            .collect();
        for key in &attached {
            self.bonds.remove(key);
            self.broken.insert(*key);
        }
        attached.len()
    }

    pub fn is_bonded(&self, i: u32, j: u32) -> bool {
        self.bonds.contains(&pair_key(i, j))
    }

    pub fn bond_count(&self) -> usize {
        self.bonds.len()
    }

    pub fn broken_count(&self) -> usize {
        self.broken.len()
    }

    /// Iterate bonds in deterministic (sorted) order.
    pub fn iter(&self) -> impl Iterator<Item = &BondPair> {
        self.bonds.iter()
    }

    pub fn is_empty(&self) -> bool {
        self.bonds.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn broken_pairs_never_rebond() {
        let mut reg = BondRegistry::new();
        assert!(reg.bond(3, 1));
        assert!(reg.is_bonded(1, 3));
        assert!(reg.break_bond(1, 3));
        assert!(!reg.is_bonded(1, 3));
        assert!(!reg.bond(1, 3));
        assert!(!reg.bond(3, 1));
        assert_eq!(reg.bond_count(), 0);
        assert_eq!(reg.broken_count(), 1);
    }

    #[test]
    fn self_pairs_rejected() {
        let mut reg = BondRegistry::new();
        assert!(!reg.bond(2, 2));
    }

    #[test]
    fn particle_removal_retires_bonds() {
        let mut reg = BondRegistry::new();
        reg.bond(0, 1);
        reg.bond(0, 2);
        reg.bond(1, 2);
        assert_eq!(reg.remove_particle(0), 2);
        assert_eq!(reg.bond_count(), 1);
        assert_eq!(reg.broken_count(), 2);
        assert!(!reg.bond(0, 1));
    }
}
