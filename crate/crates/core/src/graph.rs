//! Union-find over point indices and a connectivity count for sampled sets.

/// A disjoint-set forest with path halving and union by size.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
    sets: usize,
}

impl UnionFind {
    pub fn new(len: usize) -> Self {
        Self {
            parent: (0..len).collect(),
            size: vec![1; len],
            sets: len,
        }
    }

    pub fn find(&mut self, mut id: usize) -> usize {
        while self.parent[id] != id {
            self.parent[id] = self.parent[self.parent[id]];
            id = self.parent[id];
        }
        id
    }

    /// Returns `true` when two distinct sets were merged.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        self.sets -= 1;
        true
    }

    /// Number of disjoint sets.
    pub fn count(&self) -> usize {
        self.sets
    }

    /// Sizes of all sets, largest first.
    pub fn set_sizes(&mut self) -> Vec<usize> {
        let roots: Vec<usize> = (0..self.parent.len()).filter(|&i| self.find(i) == i).collect();
        let mut sizes: Vec<usize> = roots.into_iter().map(|i| self.size[i]).collect();
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        sizes
    }
}
