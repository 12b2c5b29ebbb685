"""Disjoint sets over fiber members."""

from collections import defaultdict
from typing import Dict, List

import numpy as np

__all__ = [
    "UnionFind",
]


class UnionFind:
    """Union by size with path compression over ``n`` integer nodes."""

    def __init__(self, n: int):
        self.parents = np.arange(n)
        self.sizes = np.ones(n, dtype=np.int64)
        self.n_sets = n

    def find(self, i: int) -> int:
        """Get the root of the tree holding ``i``, compressing the path."""
        root = i
        while self.parents[root] != root:
            root = self.parents[root]
        while self.parents[i] != root:
            self.parents[i], i = root, self.parents[i]
        return int(root)

    def union(self, i: int, j: int) -> int:
        """Join the sets holding ``i`` and ``j`` and return the new root."""
        root_i, root_j = self.find(i), self.find(j)
        if root_i == root_j:
            return root_i
        large, small = root_i, root_j
        if self.sizes[root_i] < self.sizes[root_j]:
            large, small = small, large
        self.sizes[large] += self.sizes[small]
        self.sizes[small] = 0
        self.parents[small] = large
        self.n_sets -= 1
        return large

    def roots(self) -> np.ndarray:
        """Get the root of every node."""
        return np.array([self.find(i) for i in range(len(self.parents))], dtype=np.int64)

    def groups(self) -> List[List[int]]:
        """Get the sets, largest first and by smallest member on ties."""
        groups: Dict[int, List[int]] = defaultdict(list)
        for i, root in enumerate(self.roots().tolist()):
            groups[root].append(i)
        return sorted(groups.values(), key=lambda g: (-len(g), g[0]))
