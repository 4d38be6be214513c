//! Index bookkeeping for alternating forms on a six-dimensional space.

use std::sync::OnceLock;

use crate::jet::DIM;

/// Strictly increasing index tuples of each length, in lexicographic order.
pub struct Subsets {
    by_degree: Vec<Vec<Vec<usize>>>,
    /// index of each subset, keyed by bitmask
    index: [usize; 1 << DIM],
    /// `wedge[k1][k2]` = (i1, i2, target, sign) for every disjoint pair.
    wedge: Vec<Vec<Vec<(usize, usize, usize, i8)>>>,
}

fn mask(s: &[usize]) -> usize {
    s.iter().fold(0, |m, &i| m | (1 << i))
}

fn inversions(seq: &[usize]) -> usize {
    let mut n = 0;
    for a in 0..seq.len() {
        for b in a + 1..seq.len() {
            if seq[a] > seq[b] {
                n += 1;
            }
        }
    }
    n
}

/// Sign of the permutation sorting `seq`, or 0 when an index repeats.
pub fn sort_sign(seq: &[usize]) -> i8 {
    if mask(seq).count_ones() as usize != seq.len() {
        return 0;
    }
    if inversions(seq) % 2 == 0 {
        1
    } else {
        -1
    }
}

pub fn subsets() -> &'static Subsets {
    static S: OnceLock<Subsets> = OnceLock::new();
    S.get_or_init(|| {
        let mut by_degree: Vec<Vec<Vec<usize>>> = vec![Vec::new(); DIM + 1];
        for m in 0usize..(1 << DIM) {
            let s: Vec<usize> = (0..DIM).filter(|i| m & (1 << i) != 0).collect();
            by_degree[s.len()].push(s);
        }
        for list in by_degree.iter_mut() {
            list.sort();
        }
        let mut index = [0usize; 1 << DIM];
        for list in &by_degree {
            for (i, s) in list.iter().enumerate() {
                index[mask(s)] = i;
            }
        }
        let mut wedge = vec![vec![Vec::new(); DIM + 1]; DIM + 1];
        for k1 in 0..=DIM {
            for k2 in 0..=(DIM - k1) {
                let mut entries = Vec::new();
                for (i1, a) in by_degree[k1].iter().enumerate() {
                    for (i2, b) in by_degree[k2].iter().enumerate() {
                        if mask(a) & mask(b) != 0 {
                            continue;
                        }
                        let cat: Vec<usize> = a.iter().chain(b.iter()).copied().collect();
                        let sign = sort_sign(&cat);
                        entries.push((i1, i2, index[mask(&cat)], sign));
                    }
                }
                wedge[k1][k2] = entries;
            }
        }
        Subsets { by_degree, index, wedge }
    })
}

impl Subsets {
    pub fn list(&self, k: usize) -> &[Vec<usize>] {
        &self.by_degree[k]
    }

    pub fn count(&self, k: usize) -> usize {
        self.by_degree[k].len()
    }

    /// Index of a strictly increasing tuple.
    pub fn index_of(&self, s: &[usize]) -> usize {
        self.index[mask(s)]
    }

    pub fn wedge_table(&self, k1: usize, k2: usize) -> &[(usize, usize, usize, i8)] {
        &self.wedge[k1][k2]
    }
}

/// Index of the pair `(a, b)`, `a < b`, among the fifteen 2-subsets.
pub fn pair_index(a: usize, b: usize) -> usize {
    debug_assert!(a < b);
    subsets().index_of(&[a, b])
}
