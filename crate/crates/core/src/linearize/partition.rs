use serde::Serialize;

use crate::error::{Error, Result};

/// Largest order for which partitions are enumerated.
pub const MAX_PARTITION_ORDER: usize = 8;

/// A set partition of the positions `0..n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Partition {
    blocks: Vec<Vec<usize>>,
}

impl Partition {
    /// Builds a partition from a restricted growth string.
    fn from_rgs(rgs: &[usize]) -> Self {
        let count = rgs.iter().max().map_or(0, |m| m + 1);
        let mut blocks = vec![Vec::new(); count];
        for (pos, &b) in rgs.iter().enumerate() {
            blocks[b].push(pos);
        }
        Partition { blocks }
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn is_single_block(&self) -> bool {
        self.blocks.len() == 1
    }

    /// Number of positions covered.
    pub fn order(&self) -> usize {
        self.blocks.iter().map(Vec::len).sum()
    }
}

/// All set partitions of `0..n`, in lexicographic order of their restricted growth strings.
pub fn enumerate_partitions(n: usize) -> Result<Vec<Partition>> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "partition order must be at least 1".into(),
        ));
    }
    if n > MAX_PARTITION_ORDER {
        return Err(Error::OrderTooLarge(n));
    }
    let mut out = Vec::new();
    let mut rgs = vec![0usize; n];
    loop {
        out.push(Partition::from_rgs(&rgs));
        // advance to the next restricted growth string
        let mut i = n - 1;
        loop {
            if i == 0 {
                return Ok(out);
            }
            let bound = rgs[..i].iter().max().copied().unwrap_or(0) + 1;
            if rgs[i] < bound {
                rgs[i] += 1;
                for r in &mut rgs[i + 1..] {
                    *r = 0;
                }
                break;
            }
            i -= 1;
        }
    }
}

/// Partitions with at least two blocks.
pub fn proper_partitions(n: usize) -> Result<Vec<Partition>> {
    Ok(enumerate_partitions(n)?
        .into_iter()
        .filter(|p| !p.is_single_block())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bell(n: usize) -> usize {
        // Bell triangle
        let mut row = vec![1usize];
        for _ in 1..n {
            let mut next = vec![*row.last().unwrap()];
            for &x in &row {
                next.push(next.last().unwrap() + x);
            }
            row = next;
        }
        *row.last().unwrap()
    }

    #[test]
    fn counts_are_bell_numbers() {
        for n in 1..=MAX_PARTITION_ORDER {
            assert_eq!(enumerate_partitions(n).unwrap().len(), bell(n), "{n}");
        }
        assert_eq!(enumerate_partitions(3).unwrap().len(), 5);
        assert_eq!(proper_partitions(3).unwrap().len(), 4);
        assert_eq!(enumerate_partitions(4).unwrap().len(), 15);
        assert_eq!(enumerate_partitions(1).unwrap().len(), 1);
    }

    #[test]
    fn blocks_cover_disjointly() {
        for p in enumerate_partitions(5).unwrap() {
            let mut seen: Vec<usize> = p.blocks().iter().flatten().copied().collect();
            seen.sort_unstable();
            assert_eq!(seen, (0..5).collect::<Vec<_>>());
            assert!(p.blocks().iter().all(|b| !b.is_empty()));
        }
    }

    #[test]
    fn order_limits() {
        assert!(matches!(
            enumerate_partitions(9),
            Err(Error::OrderTooLarge(9))
        ));
        assert!(enumerate_partitions(0).is_err());
    }
}
