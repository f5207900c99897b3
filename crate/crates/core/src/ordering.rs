//! Permutation of test-case indices; position 0 runs first.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OrderingError {
    #[error("index {index} out of range for {n} test cases")]
    OutOfRange { index: usize, n: usize },
    #[error("index {0} appears more than once")]
    Repeated(usize),
    #[error("ordering is empty")]
    Empty,
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Ordering(Vec<usize>);

impl Ordering {
    /// Validates that `perm` is a bijection on `0..perm.len()`.
    pub fn new(perm: Vec<usize>) -> Result<Self, OrderingError> {
        if perm.is_empty() {
            return Err(OrderingError::Empty);
        }
        check_permutation(&perm)?;
        Ok(Self(perm))
    }

    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    /// Wraps a vector known to be a permutation (checked in debug builds).
    pub(crate) fn from_vec_unchecked(perm: Vec<usize>) -> Self {
        debug_assert!(is_permutation(&perm));
        Self(perm)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.0
    }

    /// `positions()[t]` is the 0-based slot at which test `t` runs.
    pub fn positions(&self) -> Vec<usize> {
        let mut pos = vec![0; self.0.len()];
        for (slot, &t) in self.0.iter().enumerate() {
            pos[t] = slot;
        }
        pos
    }

    pub fn reversed(&self) -> Self {
        Self(self.0.iter().rev().copied().collect())
    }
}

impl fmt::Debug for Ordering {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl AsRef<[usize]> for Ordering {
    fn as_ref(&self) -> &[usize] {
        &self.0
    }
}

fn check_permutation(perm: &[usize]) -> Result<(), OrderingError> {
    let n = perm.len();
    let mut seen = vec![false; n];
    for &i in perm {
        if i >= n {
            return Err(OrderingError::OutOfRange { index: i, n });
        }
        if std::mem::replace(&mut seen[i], true) {
            return Err(OrderingError::Repeated(i));
        }
    }
    Ok(())
}

pub fn is_permutation(perm: &[usize]) -> bool {
    check_permutation(perm).is_ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(Ordering::new(vec![2, 0, 1]).is_ok());
        assert_eq!(Ordering::new(vec![0, 0]), Err(OrderingError::Repeated(0)));
        assert_eq!(
            Ordering::new(vec![0, 2]),
            Err(OrderingError::OutOfRange { index: 2, n: 2 })
        );
        assert_eq!(Ordering::new(vec![]), Err(OrderingError::Empty));
    }

    #[test]
    fn positions_invert() {
        let o = Ordering::new(vec![2, 0, 1]).unwrap();
        assert_eq!(o.positions(), vec![1, 2, 0]);
    }
}
