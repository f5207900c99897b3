//! APFD-style coverage objectives over segments, siblings, object types and
//! objects.

use thiserror::Error;

use crate::bitset::BitSet;
use crate::coverage::{CoverageIndex, EntityKind};
use crate::metrics::apfd_formula;
use crate::ordering::Ordering;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FitnessError {
    #[error("no {0} entities are covered by the suite")]
    EmptyUniverse(EntityKind),
    #[error("order has {order} tests but the coverage index has {index}")]
    LengthMismatch { order: usize, index: usize },
}

/// Objective values in the fixed order (segment, sibling, object type, object).
/// Larger is better for every component.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FitnessVector<T>(pub [T; 4]);

impl<T: Scalar> FitnessVector<T> {
    pub fn seg(&self) -> T {
        self.0[0]
    }

    pub fn sib(&self) -> T {
        self.0[1]
    }

    pub fn obj_type(&self) -> T {
        self.0[2]
    }

    pub fn obj(&self) -> T {
        self.0[3]
    }

    pub fn get(&self, kind: EntityKind) -> T {
        self.0[kind.index()]
    }

    pub fn to_f64(&self) -> [f64; 4] {
        self.0.map(|v| v.to_f64().expect("finite"))
    }

    /// `self` is at least as good everywhere and strictly better somewhere.
    pub fn dominates(&self, other: &Self) -> bool {
        let mut strictly = false;
        for (a, b) in self.0.iter().zip(&other.0) {
            if a < b {
                return false;
            }
            if a > b {
                strictly = true;
            }
        }
        strictly
    }
}

fn check(order: &Ordering, index: &CoverageIndex) -> Result<(), FitnessError> {
    if order.len() != index.n_tests() {
        return Err(FitnessError::LengthMismatch {
            order: order.len(),
            index: index.n_tests(),
        });
    }
    Ok(())
}

/// APFD-style fitness of `order` for one entity kind: `TS_i` is the 1-based slot
/// of the first test covering entity `i`.
pub fn coverage_fitness<T: Scalar>(
    order: &Ordering,
    index: &CoverageIndex,
    kind: EntityKind,
) -> Result<T, FitnessError> {
    check(order, index)?;
    let m = index.universe(kind).len();
    if m == 0 {
        return Err(FitnessError::EmptyUniverse(kind));
    }
    let mut covered = BitSet::new(m);
    let mut sum = 0usize;
    let mut remaining = m;
    for (slot, &t) in order.as_slice().iter().enumerate() {
        let row = index.row(kind, t);
        let fresh = row.count_difference(&covered);
        if fresh > 0 {
            sum += (slot + 1) * fresh;
            covered.union_with(row);
            remaining -= fresh;
            if remaining == 0 {
                break;
            }
        }
    }
    Ok(apfd_formula(sum, order.len(), m))
}

/// All four objectives in one pass over the permutation.
pub fn evaluate<T: Scalar>(order: &Ordering, index: &CoverageIndex) -> Result<FitnessVector<T>, FitnessError> {
    check(order, index)?;
    let sizes = EntityKind::ALL.map(|k| index.universe(k).len());
    if let Some(k) = EntityKind::ALL.into_iter().find(|k| sizes[k.index()] == 0) {
        return Err(FitnessError::EmptyUniverse(k));
    }
    let mut covered = sizes.map(BitSet::new);
    let mut remaining = sizes;
    let mut sums = [0usize; 4];
    let mut open = 4;
    for (slot, &t) in order.as_slice().iter().enumerate() {
        for kind in EntityKind::ALL {
            let k = kind.index();
            if remaining[k] == 0 {
                continue;
            }
            let row = index.row(kind, t);
            let fresh = row.count_difference(&covered[k]);
            if fresh > 0 {
                sums[k] += (slot + 1) * fresh;
                covered[k].union_with(row);
                remaining[k] -= fresh;
                if remaining[k] == 0 {
                    open -= 1;
                }
            }
        }
        if open == 0 {
            break;
        }
    }
    let n = order.len();
    Ok(FitnessVector(std::array::from_fn(|k| apfd_formula(sums[k], n, sizes[k]))))
}

/// 1-based slot at which each entity of `kind` is first covered.
pub fn first_cover_positions(order: &Ordering, index: &CoverageIndex, kind: EntityKind) -> Vec<usize> {
    let m = index.universe(kind).len();
    let mut first = vec![0usize; m];
    for (slot, &t) in order.as_slice().iter().enumerate() {
        for e in index.row(kind, t).iter() {
            if first[e] == 0 {
                first[e] = slot + 1;
            }
        }
    }
    first
}
