use crate::error::{Error, Result};

use super::matrix::{c64, diag, CMatrix};

/// Non-increasing integer diagonal, grouped into blocks of equal weight.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WeightDiagonal {
    entries: Vec<i64>,
}

/// One block `value * I_size` of a [`WeightDiagonal`], starting at `start`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WeightBlock {
    pub value: i64,
    pub start: usize,
    pub size: usize,
}

impl WeightBlock {
    pub fn range(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.size
    }
}

impl WeightDiagonal {
    pub fn new(entries: Vec<i64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Invalid("weight diagonal must be non-empty".into()));
        }
        if entries.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::Invalid(format!("weights {entries:?} are not non-increasing")));
        }
        Ok(Self { entries })
    }

    /// Sorts the given weights into non-increasing order.
    pub fn sorted(mut entries: Vec<i64>) -> Result<Self> {
        entries.sort_unstable_by(|a, b| b.cmp(a));
        Self::new(entries)
    }

    pub fn zero(r: usize) -> Self {
        Self { entries: vec![0; r] }
    }

    pub fn entries(&self) -> &[i64] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn trace(&self) -> i64 {
        self.entries.iter().sum()
    }

    pub fn max_gap(&self) -> i64 {
        self.entries[0] - self.entries[self.entries.len() - 1]
    }

    pub fn negated_reversed(&self) -> Self {
        Self {
            entries: self.entries.iter().rev().map(|w| -w).collect(),
        }
    }

    pub fn shifted(&self, by: i64) -> Self {
        Self {
            entries: self.entries.iter().map(|w| w + by).collect(),
        }
    }

    pub fn blocks(&self) -> Vec<WeightBlock> {
        let mut out: Vec<WeightBlock> = Vec::new();
        for (i, &w) in self.entries.iter().enumerate() {
            match out.last_mut() {
                Some(b) if b.value == w => b.size += 1,
                _ => out.push(WeightBlock {
                    value: w,
                    start: i,
                    size: 1,
                }),
            }
        }
        out
    }

    /// Index of the block containing diagonal position `i`.
    pub fn block_of(&self, i: usize) -> usize {
        self.blocks()
            .iter()
            .position(|b| b.range().contains(&i))
            .expect("index within diagonal")
    }

    pub fn to_matrix(&self) -> CMatrix {
        let d: Vec<_> = self.entries.iter().map(|&w| c64(w as f64, 0.0)).collect();
        diag(&d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blocks_group_equal_values() {
        let w = WeightDiagonal::new(vec![3, 3, 1, 0, 0, 0]).unwrap();
        let b = w.blocks();
        assert_eq!(b.len(), 3);
        assert_eq!((b[0].value, b[0].size), (3, 2));
        assert_eq!((b[2].start, b[2].size), (3, 3));
        assert_eq!(w.block_of(2), 1);
        assert_eq!(w.max_gap(), 3);
        assert_eq!(w.trace(), 7);
    }

    #[test]
    fn rejects_increasing() {
        assert!(WeightDiagonal::new(vec![0, 1]).is_err());
        assert_eq!(WeightDiagonal::sorted(vec![0, 2, 1]).unwrap().entries(), &[2, 1, 0]);
    }
}
