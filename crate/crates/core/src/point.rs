//! Points of a sample space and cluster partitions by bitwise identity.

use alloc::vec::Vec;
use core::cmp::Ordering;

/// A point of a discrete (state index) or continuous (real vector) space.
#[derive(Clone, Debug, PartialEq)]
pub enum Point {
    State(usize),
    Vector(Vec<f64>),
}

impl Point {
    pub fn scalar(x: f64) -> Self {
        Point::Vector(alloc::vec![x])
    }

    pub fn as_state(&self) -> Option<usize> {
        match self {
            Point::State(s) => Some(*s),
            Point::Vector(_) => None,
        }
    }

    pub fn as_slice(&self) -> Option<&[f64]> {
        match self {
            Point::Vector(v) => Some(v),
            Point::State(_) => None,
        }
    }

    /// Bitwise identity. `0.0` and `-0.0` differ; NaNs with equal payloads agree.
    pub fn same_bits(&self, other: &Point) -> bool {
        bit_cmp(self, other) == Ordering::Equal
    }
}

/// Total order on points by their bit patterns; only used to group equal values.
pub fn bit_cmp(a: &Point, b: &Point) -> Ordering {
    match (a, b) {
        (Point::State(x), Point::State(y)) => x.cmp(y),
        (Point::State(_), Point::Vector(_)) => Ordering::Less,
        (Point::Vector(_), Point::State(_)) => Ordering::Greater,
        (Point::Vector(x), Point::Vector(y)) => slice_bit_cmp(x, y),
    }
}

pub fn slice_bit_cmp(x: &[f64], y: &[f64]) -> Ordering {
    x.len().cmp(&y.len()).then_with(|| {
        x.iter()
            .zip(y)
            .map(|(a, b)| a.to_bits().cmp(&b.to_bits()))
            .find(|o| *o != Ordering::Equal)
            .unwrap_or(Ordering::Equal)
    })
}

/// Labels items so that two share a label iff `cmp` says they are equal.
/// Labels are numbered by first occurrence, so the result is canonical.
pub fn partition_by<T>(items: &[T], cmp: impl Fn(&T, &T) -> Ordering) -> (Vec<usize>, usize) {
    let n = items.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| cmp(&items[a], &items[b]).then(a.cmp(&b)));
    // group representative = smallest index in each run
    let mut rep = alloc::vec![0usize; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && cmp(&items[order[start]], &items[order[end]]) == Ordering::Equal {
            end += 1;
        }
        let r = order[start];
        for &i in &order[start..end] {
            rep[i] = r;
        }
        start = end;
    }
    let mut labels = alloc::vec![usize::MAX; n];
    let mut next = 0;
    for i in 0..n {
        let r = rep[i];
        if labels[r] == usize::MAX {
            labels[r] = next;
            next += 1;
        }
        labels[i] = labels[r];
    }
    (labels, next)
}

/// One realized tuple of coupled draws with its cluster structure.
#[derive(Clone, Debug)]
pub struct CouplingDraw {
    pub values: Vec<Point>,
    /// Cluster label per coordinate, numbered by first occurrence.
    pub partition: Vec<usize>,
    /// Number of distinct values.
    pub g: usize,
}

impl CouplingDraw {
    pub fn from_values(values: Vec<Point>) -> Self {
        let (partition, g) = partition_by(&values, bit_cmp);
        Self {
            values,
            partition,
            g,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn partition_is_canonical() {
        let pts = vec![
            Point::scalar(1.0),
            Point::scalar(2.0),
            Point::scalar(1.0),
            Point::State(3),
        ];
        let d = CouplingDraw::from_values(pts);
        assert_eq!(d.partition, vec![0, 1, 0, 2]);
        assert_eq!(d.g, 3);
    }

    #[test]
    fn signed_zero_is_distinct() {
        assert!(!Point::scalar(0.0).same_bits(&Point::scalar(-0.0)));
    }

    #[test]
    fn single_item() {
        let d = CouplingDraw::from_values(vec![Point::State(0)]);
        assert_eq!(d.g, 1);
    }
}
