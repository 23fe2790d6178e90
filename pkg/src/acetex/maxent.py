"""Exact maximum-entropy estimates on small enumerable discrete spaces.

Two routes to the same answer live here.  ``tree_mem`` evaluates the closed
form directly: for a binary tree of deterministic child-pair transformations,
the maximum-entropy joint consistent with every sibling-pair marginal is the
product, over internal nodes, of pair-over-marginal ratios, times the leaf
marginals.  ``ipf_oracle`` reaches the same distribution numerically by
iterative proportional fitting from a uniform start, and exists so the closed
form can be cross-checked rather than trusted.

Everything operates on explicit probability tables, so joint spaces are
capped at 2**20 states.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "MAX_JOINT_STATES",
    "InfeasibleConstraintError",
    "DiscreteDist",
    "NodeMap",
    "TreeSpec",
    "IpfResult",
    "RamDiscriminator",
    "entropy",
    "kl_divergence",
    "single_constraint_mem",
    "tree_mem",
    "ipf_oracle",
    "ram_train",
    "ram_score",
]

MAX_JOINT_STATES = 1 << 20


class InfeasibleConstraintError(ValueError):
    """A constraint puts probability on labels the prior cannot reach."""


@dataclass(frozen=True)
class DiscreteDist:
    """Probability table over a finite product space.

    ``probs`` is stored with shape ``shape``; entries are non-negative and
    sum to 1 within 1e-12.  Instances are treated as immutable values.
    """

    shape: tuple[int, ...]
    probs: np.ndarray

    def __post_init__(self):
        shape = tuple(int(s) for s in self.shape)
        if not shape or any(s < 1 for s in shape):
            raise ValueError("shape must list positive alphabet sizes")
        size = math.prod(shape)
        if size > MAX_JOINT_STATES:
            raise ValueError(f"joint space of {size} states exceeds the {MAX_JOINT_STATES} cap")
        probs = np.asarray(self.probs, dtype=float)
        if probs.size != size:
            raise ValueError("shape product must equal the table length")
        probs = probs.reshape(shape)
        if np.any(probs < 0) or not np.all(np.isfinite(probs)):
            raise ValueError("probabilities must be finite and non-negative")
        if abs(float(probs.sum()) - 1.0) > 1e-12:
            raise ValueError("probabilities must sum to 1 within 1e-12")
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "probs", probs)

    @classmethod
    def uniform(cls, shape) -> "DiscreteDist":
        shape = tuple(int(s) for s in shape)
        size = math.prod(shape)
        return cls(shape, np.full(shape, 1.0 / size))

    @property
    def size(self) -> int:
        return int(self.probs.size)


@dataclass(frozen=True)
class NodeMap:
    """Deterministic table: (left child value, right child value) -> parent value."""

    table: np.ndarray
    out_size: int

    def __post_init__(self):
        table = np.asarray(self.table, dtype=np.int64)
        if table.ndim != 2:
            raise ValueError("node map table must be 2-D")
        if self.out_size < 1:
            raise ValueError("parent alphabet must be non-empty")
        if table.size and (table.min() < 0 or table.max() >= self.out_size):
            raise ValueError("node map values must lie in the declared parent alphabet")
        object.__setattr__(self, "table", table)


@dataclass(frozen=True)
class TreeSpec:
    """Complete binary tree of node maps over ``2**depth`` leaves.

    ``node_maps[k][j]`` is the map at the internal node of depth ``k`` and
    position ``j`` (root is ``node_maps[0][0]``); its children sit at depth
    ``k + 1``, positions ``2j`` and ``2j + 1``, and are leaves when
    ``k + 1 == depth``.
    """

    depth: int
    leaf_alphabets: tuple[int, ...]
    node_maps: tuple[tuple[NodeMap, ...], ...]

    def __post_init__(self):
        if self.depth < 1:
            raise ValueError("tree depth must be at least 1")
        leaves = tuple(int(a) for a in self.leaf_alphabets)
        if len(leaves) != 1 << self.depth:
            raise ValueError(f"a depth-{self.depth} tree has {1 << self.depth} leaves")
        if any(a < 1 for a in leaves):
            raise ValueError("leaf alphabets must be non-empty")
        maps = tuple(tuple(level) for level in self.node_maps)
        if len(maps) != self.depth:
            raise ValueError(f"expected {self.depth} levels of node maps")
        for k, level in enumerate(maps):
            if len(level) != 1 << k:
                raise ValueError(f"depth {k} must hold {1 << k} node maps")
        object.__setattr__(self, "leaf_alphabets", leaves)
        object.__setattr__(self, "node_maps", maps)
        for k, level in enumerate(maps):
            for j, nm in enumerate(level):
                want = (self._alphabet(k + 1, 2 * j), self._alphabet(k + 1, 2 * j + 1))
                if nm.table.shape != want:
                    raise ValueError(
                        f"node ({k}, {j}) table shape {nm.table.shape} does not cover "
                        f"its children's alphabets {want}"
                    )

    def _alphabet(self, k: int, j: int) -> int:
        if k == self.depth:
            return self.leaf_alphabets[j]
        return self.node_maps[k][j].out_size


@dataclass(frozen=True)
class IpfResult:
    """Outcome of an iterative proportional fitting run."""

    dist: DiscreteDist
    converged: bool
    cycles: int
    max_error: float


def entropy(dist: DiscreteDist, prior: DiscreteDist) -> float:
    """Relative entropy ``-sum dist * log(dist / prior)``; zero terms drop out."""
    if dist.shape != prior.shape:
        raise ValueError("distribution shapes differ")
    p = dist.probs
    q = prior.probs
    mask = p > 0
    if np.any(q[mask] <= 0):
        raise ValueError("distribution has support where the prior is zero")
    return -float(np.sum(p[mask] * np.log(p[mask] / q[mask])))


def kl_divergence(p: DiscreteDist, q: DiscreteDist) -> float:
    """``sum p * log(p / q)``; infinite support mismatch is an error."""
    if p.shape != q.shape:
        raise ValueError("distribution shapes differ")
    pp = p.probs
    qq = q.probs
    mask = pp > 0
    if np.any(qq[mask] <= 0):
        raise ValueError("q is zero on the support of p")
    return float(np.sum(pp[mask] * np.log(pp[mask] / qq[mask])))


def single_constraint_mem(prior: DiscreteDist, y_map, target) -> DiscreteDist:
    """Maximum-entropy update of ``prior`` to match one pushforward marginal.

    ``y_map`` assigns a label to every state of the prior (flat, state order);
    ``target`` is the required label distribution.  The closed form scales the
    prior within each label class:

        Q(x) = prior(x) * target(y(x)) / sum_{x': y(x') = y(x)} prior(x')
    """
    y = np.asarray(y_map, dtype=np.int64).ravel()
    if y.size != prior.size:
        raise ValueError("y_map must assign a label to every prior state")
    t = np.asarray(target, dtype=float).ravel()
    n_labels = t.size
    if n_labels < 1:
        raise ValueError("target must cover at least one label")
    if y.min() < 0 or y.max() >= n_labels:
        raise ValueError("y_map labels must index the target distribution")
    if np.any(t < 0) or abs(float(t.sum()) - 1.0) > 1e-12:
        raise ValueError("target must be a probability vector")

    flat_prior = prior.probs.ravel()
    push = np.bincount(y, weights=flat_prior, minlength=n_labels)
    unreachable = (t > 0) & (push <= 0)
    if np.any(unreachable):
        bad = int(np.nonzero(unreachable)[0][0])
        raise InfeasibleConstraintError(
            f"target label {bad} has probability {t[bad]} but no prior mass maps to it"
        )
    scale = np.divide(t, push, out=np.zeros_like(t), where=push > 0)
    return DiscreteDist(prior.shape, flat_prior * scale[y])


def _check_tree_dist(tree: TreeSpec, empirical: DiscreteDist) -> None:
    if empirical.shape != tree.leaf_alphabets:
        raise ValueError("empirical shape must match the tree leaf alphabets")


def _node_values(tree: TreeSpec, shape: tuple[int, ...]) -> dict:
    """Value of every non-root node as an array over the joint state space."""
    values: dict[tuple[int, int], np.ndarray] = {}
    n = tree.depth
    for j, alpha in enumerate(tree.leaf_alphabets):
        idx = np.arange(alpha, dtype=np.int64).reshape(
            tuple(alpha if i == j else 1 for i in range(len(shape)))
        )
        values[(n, j)] = np.broadcast_to(idx, shape)
    for k in range(n - 1, 0, -1):
        for j in range(1 << k):
            nm = tree.node_maps[k][j]
            values[(k, j)] = nm.table[values[(k + 1, 2 * j)], values[(k + 1, 2 * j + 1)]]
    return values


def _pair_pushforward(probs: np.ndarray, vl: np.ndarray, vr: np.ndarray,
                      al: int, ar: int) -> np.ndarray:
    joint = np.zeros((al, ar))
    np.add.at(joint, (vl, vr), probs)
    return joint


def _internal_postorder(depth: int) -> list[tuple[int, int]]:
    order: list[tuple[int, int]] = []

    def rec(k: int, j: int) -> None:
        if k + 1 < depth:
            rec(k + 1, 2 * j)
            rec(k + 1, 2 * j + 1)
        order.append((k, j))

    rec(0, 0)
    return order


def tree_mem(tree: TreeSpec, empirical: DiscreteDist) -> DiscreteDist:
    """Closed-form maximum-entropy joint under all sibling-pair constraints.

    Every probability entering the product is an exact pushforward of
    ``empirical`` through the node maps.  States whose transformed sibling
    pair never occurs empirically get probability 0 (the 0/0 ratio is read
    as 0).
    """
    _check_tree_dist(tree, empirical)
    shape = empirical.shape
    values = _node_values(tree, shape)

    q = np.ones(shape)
    axes = tuple(range(len(shape)))
    for j in range(len(shape)):
        marg = empirical.probs.sum(axis=tuple(a for a in axes if a != j))
        q = q * marg.reshape(tuple(shape[j] if i == j else 1 for i in range(len(shape))))

    for k, j in _internal_postorder(tree.depth):
        vl = values[(k + 1, 2 * j)]
        vr = values[(k + 1, 2 * j + 1)]
        al = tree._alphabet(k + 1, 2 * j)
        ar = tree._alphabet(k + 1, 2 * j + 1)
        joint = _pair_pushforward(empirical.probs, vl, vr, al, ar)
        ml = joint.sum(axis=1)
        mr = joint.sum(axis=0)
        num = joint[vl, vr]
        den = ml[vl] * mr[vr]
        q = q * np.where(num > 0, num / np.where(den > 0, den, 1.0), 0.0)

    return DiscreteDist(shape, q)


def ipf_oracle(tree: TreeSpec, empirical: DiscreteDist,
               max_iter: int = 200, tol: float = 1e-9) -> IpfResult:
    """Iterative proportional fitting onto the sibling-pair marginals.

    Starts from the uniform table and cyclically rescales one constraint at a
    time, children before parents, until the worst absolute marginal
    discrepancy drops to ``tol`` or ``max_iter`` cycles elapse.  With a
    uniform start this converges to the same distribution ``tree_mem``
    writes down in closed form, which is exactly why it is kept around.
    """
    _check_tree_dist(tree, empirical)
    if max_iter < 0:
        raise ValueError("max_iter must be non-negative")
    shape = empirical.shape
    values = _node_values(tree, shape)

    constraints = []
    for k, j in _internal_postorder(tree.depth):
        vl = values[(k + 1, 2 * j)]
        vr = values[(k + 1, 2 * j + 1)]
        al = tree._alphabet(k + 1, 2 * j)
        ar = tree._alphabet(k + 1, 2 * j + 1)
        target = _pair_pushforward(empirical.probs, vl, vr, al, ar)
        constraints.append((vl, vr, al, ar, target))

    q = np.full(shape, 1.0 / empirical.size)

    def worst_error(table: np.ndarray) -> float:
        err = 0.0
        for vl, vr, al, ar, target in constraints:
            push = _pair_pushforward(table, vl, vr, al, ar)
            err = max(err, float(np.abs(push - target).max()))
        return err

    err = worst_error(q)
    cycles = 0
    while err > tol and cycles < max_iter:
        for vl, vr, al, ar, target in constraints:
            push = _pair_pushforward(q, vl, vr, al, ar)
            ratio = np.where(target > 0, target / np.where(push > 0, push, 1.0), 0.0)
            q = q * ratio[vl, vr]
        cycles += 1
        err = worst_error(q)

    return IpfResult(DiscreteDist(shape, q), err <= tol, cycles, err)


@dataclass(frozen=True)
class RamDiscriminator:
    """Bank of lookup tables, one per group of a partition of the input components.

    ``groups`` must cover every component index exactly once.  Each group's
    table is addressed by the mixed-radix index of that group's component
    values (row-major in group order) and holds either real scores or 1-bit
    flags depending on ``one_bit``.
    """

    groups: tuple[tuple[int, ...], ...]
    alphabets: tuple[int, ...]
    tables: tuple[np.ndarray, ...]
    one_bit: bool

    def __post_init__(self):
        groups = tuple(tuple(int(i) for i in g) for g in self.groups)
        alphabets = tuple(int(a) for a in self.alphabets)
        if any(a < 1 for a in alphabets):
            raise ValueError("component alphabets must be non-empty")
        seen = sorted(i for g in groups for i in g)
        if seen != list(range(len(alphabets))):
            raise ValueError("groups must partition the component indices exactly")
        tables = tuple(np.asarray(t) for t in self.tables)
        if len(tables) != len(groups):
            raise ValueError("one table per group")
        for g, t in zip(groups, tables):
            want = math.prod(alphabets[i] for i in g)
            if t.size != want:
                raise ValueError(f"table for group {g} must have {want} entries")
        object.__setattr__(self, "groups", groups)
        object.__setattr__(self, "alphabets", alphabets)
        object.__setattr__(self, "tables", tables)


def _group_address(group: tuple[int, ...], alphabets: tuple[int, ...], x: np.ndarray) -> int:
    addr = 0
    for i in group:
        v = int(x[i])
        if v < 0 or v >= alphabets[i]:
            raise ValueError(f"component {i} value {v} is outside its alphabet")
        addr = addr * alphabets[i] + v
    return addr


def ram_train(groups, samples, one_bit: bool = False, alphabets=None) -> RamDiscriminator:
    """Fill one lookup table per group from the per-group sample frequencies.

    Real mode stores the log of the regularized address frequencies, so a
    never-seen address still scores the regularization floor rather than
    minus infinity.  One-bit mode thresholds the raw counts at the same
    ceiling-of-the-mean bound and stores 1 where the count reaches it.
    """
    data = np.asarray(samples, dtype=np.int64)
    if data.ndim != 2 or data.shape[0] < 1:
        raise ValueError("samples must be a non-empty (M, components) array")
    n_comp = data.shape[1]
    if alphabets is None:
        alphabets = tuple(int(data[:, i].max()) + 1 for i in range(n_comp))
    else:
        alphabets = tuple(int(a) for a in alphabets)

    groups = tuple(tuple(int(i) for i in g) for g in groups)
    tables = []
    for g in groups:
        size = math.prod(alphabets[i] for i in g)
        counts = np.zeros(size, dtype=np.int64)
        for row in data:
            counts[_group_address(g, alphabets, row)] += 1
        m = -(-int(counts.sum()) // size)
        if one_bit:
            tables.append((counts >= m).astype(np.uint8))
        else:
            reg = np.maximum(counts, m)
            tables.append(np.log(reg / reg.sum()))
    return RamDiscriminator(groups, alphabets, tuple(tables), one_bit)


def ram_score(disc: RamDiscriminator, x, one_bit: bool | None = None):
    """Sum of the addressed table entries (real) or count of addressed 1s (one-bit)."""
    mode = disc.one_bit if one_bit is None else one_bit
    vec = np.asarray(x, dtype=np.int64).ravel()
    if vec.size != len(disc.alphabets):
        raise ValueError("input must provide every component")
    total = 0.0
    hits = 0
    for g, t in zip(disc.groups, disc.tables):
        entry = t.ravel()[_group_address(g, disc.alphabets, vec)]
        if mode:
            hits += int(entry != 0)
        else:
            total += float(entry)
    return hits if mode else total
