//! Operation counters backing the main-operations metric.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

/// Operation classes tracked per run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpCategory {
    Branches,
    FxpMul,
    FxpMac,
    FpMul,
    FpMac,
    LoadsStores,
}

impl OpCategory {
    pub const ALL: [OpCategory; 6] =
        [OpCategory::Branches, OpCategory::FxpMul, OpCategory::FxpMac, OpCategory::FpMul, OpCategory::FpMac, OpCategory::LoadsStores];

    pub fn name(self) -> &'static str {
        match self {
            OpCategory::Branches => "branches",
            OpCategory::FxpMul => "fxp-mul",
            OpCategory::FxpMac => "fxp-MAC",
            OpCategory::FpMul => "fp-mul",
            OpCategory::FpMac => "fp-MAC",
            OpCategory::LoadsStores => "loads/stores",
        }
    }
}

impl fmt::Display for OpCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Counts of executed operations, one field per [`OpCategory`].
///
/// Multiplies and MACs are routed by the scalar type they were performed
/// in, so the same generic kernel charges `fxp_*` when instantiated over a
/// fixed-point type and `fp_*` over a float.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OpCounters {
    pub branches: u64,
    pub fxp_mul: u64,
    pub fxp_mac: u64,
    pub fp_mul: u64,
    pub fp_mac: u64,
    pub loads_stores: u64,
}

impl OpCounters {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn mul<S: Scalar>(&mut self, n: u64) {
        if S::ARITH.is_fixed() {
            self.fxp_mul += n;
        } else {
            self.fp_mul += n;
        }
    }

    #[inline]
    pub fn mac<S: Scalar>(&mut self, n: u64) {
        if S::ARITH.is_fixed() {
            self.fxp_mac += n;
        } else {
            self.fp_mac += n;
        }
    }

    #[inline]
    pub fn branch(&mut self, n: u64) {
        self.branches += n;
    }

    #[inline]
    pub fn mem(&mut self, n: u64) {
        self.loads_stores += n;
    }

    pub fn get(&self, cat: OpCategory) -> u64 {
        match cat {
            OpCategory::Branches => self.branches,
            OpCategory::FxpMul => self.fxp_mul,
            OpCategory::FxpMac => self.fxp_mac,
            OpCategory::FpMul => self.fp_mul,
            OpCategory::FpMac => self.fp_mac,
            OpCategory::LoadsStores => self.loads_stores,
        }
    }

    pub fn total(&self) -> u64 {
        OpCategory::ALL.iter().map(|&c| self.get(c)).sum()
    }

    /// Total without loads/stores.
    pub fn compute_total(&self) -> u64 {
        self.total() - self.loads_stores
    }

    /// Compute category with the largest count; earlier categories win
    /// ties. Loads/stores accompany every kernel and are not candidates.
    /// `None` when nothing was counted.
    pub fn dominant(&self) -> Option<OpCategory> {
        let mut best: Option<(OpCategory, u64)> = None;
        for c in OpCategory::ALL.into_iter().filter(|&c| c != OpCategory::LoadsStores) {
            let n = self.get(c);
            if n > 0 && best.is_none_or(|(_, m)| n > m) {
                best = Some((c, n));
            }
        }
        best.map(|(c, _)| c)
    }

    pub fn merge(&mut self, other: &OpCounters) {
        self.branches += other.branches;
        self.fxp_mul += other.fxp_mul;
        self.fxp_mac += other.fxp_mac;
        self.fp_mul += other.fp_mul;
        self.fp_mac += other.fp_mac;
        self.loads_stores += other.loads_stores;
    }

    pub fn reset(&mut self) {
        *self = Self::default();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fxp::Fx16;

    #[test]
    fn routes_by_scalar_type() {
        let mut c = OpCounters::new();
        c.mul::<f32>(3);
        c.mac::<Fx16<15>>(5);
        c.branch(2);
        assert_eq!(c.fp_mul, 3);
        assert_eq!(c.fxp_mac, 5);
        assert_eq!(c.total(), 10);
        assert_eq!(c.dominant(), Some(OpCategory::FxpMac));
        c.reset();
        assert_eq!(c.dominant(), None);
    }

    #[test]
    fn ties_prefer_earlier_category() {
        let mut c = OpCounters::new();
        c.mem(4);
        c.branch(4);
        assert_eq!(c.dominant(), Some(OpCategory::Branches));
    }

    #[test]
    fn memory_traffic_never_dominates() {
        let mut c = OpCounters::new();
        c.mem(100);
        assert_eq!(c.dominant(), None);
        c.mul::<f64>(1);
        assert_eq!(c.dominant(), Some(OpCategory::FpMul));
    }
}
