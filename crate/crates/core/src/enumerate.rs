//! Deterministic enumeration helpers used by the search routines.
//!
//! Every search in the workbench iterates these in a fixed order so verdicts
//! and witnesses are reproducible run to run.

/// All length-`len` tuples over `0..base`, in lexicographic order.
/// `len == 0` yields exactly one empty tuple; `base == 0` with `len > 0`
/// yields nothing.
pub fn tuples(base: usize, len: usize) -> Tuples {
    Tuples {
        base,
        current: vec![0; len],
        done: base == 0 && len > 0,
        fresh: true,
    }
}

pub struct Tuples {
    base: usize,
    current: Vec<usize>,
    done: bool,
    fresh: bool,
}

impl Iterator for Tuples {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        if self.fresh {
            self.fresh = false;
            return Some(self.current.clone());
        }
        // ripple-carry increment, most significant digit first
        let mut i = self.current.len();
        loop {
            if i == 0 {
                self.done = true;
                return None;
            }
            i -= 1;
            self.current[i] += 1;
            if self.current[i] < self.base {
                break;
            }
            self.current[i] = 0;
        }
        Some(self.current.clone())
    }
}

/// Number of length-`len` tuples over `0..base`, or `None` on overflow.
pub fn tuple_count(base: usize, len: usize) -> Option<u64> {
    let mut n: u64 = 1;
    for _ in 0..len {
        n = n.checked_mul(base as u64)?;
    }
    Some(n)
}

/// The subset of `items` selected by the bits of `mask` (bit i = items[i]).
pub fn masked_subset<T: Clone>(items: &[T], mask: u64) -> Vec<T> {
    items
        .iter()
        .enumerate()
        .filter(|(i, _)| mask >> i & 1 == 1)
        .map(|(_, x)| x.clone())
        .collect()
}

/// All nonempty subsets of `0..n`, ordered by (size, lexicographic members).
/// This is the image-candidate order for supplement searches: singletons
/// first, so small witnesses are found early.
pub fn nonempty_subsets_by_size(n: usize) -> Vec<Vec<usize>> {
    assert!(n <= 16, "subset pool too large");
    let mut subsets: Vec<Vec<usize>> = (1u32..1 << n)
        .map(|mask| (0..n).filter(|i| mask >> i & 1 == 1).collect())
        .collect();
    subsets.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    subsets
}

/// Odometer over per-position option lists: yields one index vector per
/// combination, positions advancing last-to-first (so position 0 varies
/// slowest). Yields nothing if any option list is empty.
pub struct Odometer {
    sizes: Vec<usize>,
    current: Vec<usize>,
    done: bool,
    fresh: bool,
}

impl Odometer {
    pub fn new(sizes: Vec<usize>) -> Self {
        let done = sizes.iter().any(|&s| s == 0);
        let current = vec![0; sizes.len()];
        Odometer {
            sizes,
            current,
            done,
            fresh: true,
        }
    }
}

impl Iterator for Odometer {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        if self.fresh {
            self.fresh = false;
            return Some(self.current.clone());
        }
        let mut i = self.current.len();
        loop {
            if i == 0 {
                self.done = true;
                return None;
            }
            i -= 1;
            self.current[i] += 1;
            if self.current[i] < self.sizes[i] {
                break;
            }
            self.current[i] = 0;
        }
        Some(self.current.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tuples_lex_order() {
        let ts: Vec<_> = tuples(2, 2).collect();
        assert_eq!(
            ts,
            vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]
        );
    }

    #[test]
    fn tuples_degenerate() {
        assert_eq!(tuples(3, 0).collect::<Vec<_>>(), vec![Vec::<usize>::new()]);
        assert_eq!(tuples(0, 2).count(), 0);
        assert_eq!(tuples(3, 3).count(), 27);
    }

    #[test]
    fn tuple_count_overflow() {
        assert_eq!(tuple_count(3, 2), Some(9));
        assert_eq!(tuple_count(2, 70), None);
    }

    #[test]
    fn subsets_size_order() {
        let ss = nonempty_subsets_by_size(3);
        assert_eq!(
            ss,
            vec![
                vec![0],
                vec![1],
                vec![2],
                vec![0, 1],
                vec![0, 2],
                vec![1, 2],
                vec![0, 1, 2],
            ]
        );
    }

    #[test]
    fn odometer_order() {
        let combos: Vec<_> = Odometer::new(vec![2, 3]).collect();
        assert_eq!(combos.len(), 6);
        assert_eq!(combos[0], vec![0, 0]);
        assert_eq!(combos[1], vec![0, 1]);
        assert_eq!(combos[5], vec![1, 2]);
        assert_eq!(Odometer::new(vec![2, 0]).count(), 0);
        // empty position list = one empty combination
        assert_eq!(Odometer::new(vec![]).count(), 1);
    }
}
