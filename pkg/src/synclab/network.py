"""Directed weighted interaction graphs.

Connectivity is stored presynaptically: row ``i`` lists ``Pre(i)``, the
oscillators that send pulses to ``i``, together with the coupling strengths
``eps_ij``. Every row must sum to the same total coupling ``eps_total``;
otherwise no synchronous periodic orbit exists.
"""

from __future__ import annotations

import json
import re
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

ROW_SUM_TOL = 1e-12


class NetworkError(ValueError):
    """Invalid network structure or network file."""


@dataclass(frozen=True, eq=False)
class DirectedNetwork:
    """Pulse-coupled network in compressed presynaptic form.

    ``pre_idx[pre_ptr[i]:pre_ptr[i + 1]]`` are the presynaptic indices of
    ``i`` in ascending order and ``pre_w`` the matching strengths.
    """

    n: int
    pre_ptr: np.ndarray
    pre_idx: np.ndarray
    pre_w: np.ndarray
    eps_total: float
    _post: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        ptr = np.ascontiguousarray(self.pre_ptr, dtype=np.int64)
        idx = np.ascontiguousarray(self.pre_idx, dtype=np.int64)
        w = np.ascontiguousarray(self.pre_w, dtype=np.float64)
        for name, arr in (("pre_ptr", ptr), ("pre_idx", idx), ("pre_w", w)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "eps_total", float(self.eps_total))
        self._validate()
        object.__setattr__(self, "_post", _transpose(self.n, ptr, idx, w))

    def _validate(self):
        n, ptr, idx, w = self.n, self.pre_ptr, self.pre_idx, self.pre_w
        if n < 1 or ptr.shape != (n + 1,) or ptr[0] != 0 or ptr[-1] != idx.size:
            raise NetworkError("malformed presynaptic index pointer")
        if idx.shape != w.shape:
            raise NetworkError("presynaptic indices and weights differ in length")
        if idx.size and (idx.min() < 0 or idx.max() >= n):
            raise NetworkError("presynaptic index out of range")
        for i in range(n):
            row = idx[ptr[i]:ptr[i + 1]]
            if row.size == 0:
                raise NetworkError(f"oscillator {i} has no presynaptic oscillator")
            if np.any(row == i):
                raise NetworkError(f"self-loop at oscillator {i}")
            if np.any(np.diff(row) <= 0):
                raise NetworkError(f"presynaptic list of {i} not strictly ascending")
            rw = w[ptr[i]:ptr[i + 1]]
            if np.any(rw == 0.0):
                raise NetworkError(f"zero-strength edge into {i}; absent edges must be omitted")
            if abs(rw.sum() - self.eps_total) > ROW_SUM_TOL:
                raise NetworkError(
                    f"row {i} sums to {rw.sum()!r}, expected eps_total={self.eps_total!r}"
                )

    # -- construction -------------------------------------------------------

    @classmethod
    def from_edges(cls, n: int, edges, eps_total: float | None = None) -> "DirectedNetwork":
        """Build from ``(i, j, w)`` triples meaning ``j in Pre(i)`` with weight ``w``."""
        edges = sorted((int(i), int(j), float(w)) for i, j, w in edges)
        seen = set()
        for i, j, _ in edges:
            if (i, j) in seen:
                raise NetworkError(f"duplicate edge {j}->{i}")
            seen.add((i, j))
        rows = np.array([e[0] for e in edges], dtype=np.int64)
        ptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(ptr, rows + 1, 1)
        ptr = np.cumsum(ptr)
        idx = np.array([e[1] for e in edges], dtype=np.int64)
        w = np.array([e[2] for e in edges], dtype=np.float64)
        if eps_total is None:
            eps_total = float(w[ptr[0]:ptr[1]].sum()) if n else 0.0
        return cls(n, ptr, idx, w, eps_total)

    @classmethod
    def from_adjacency(cls, adj, eps_total: float) -> "DirectedNetwork":
        """Build from a boolean matrix ``adj[i, j] = (j in Pre(i))`` with weights ``eps/k_i``."""
        adj = np.asarray(adj, dtype=bool)
        n = adj.shape[0]
        k = adj.sum(axis=1)
        ptr = np.concatenate([[0], np.cumsum(k)])
        rows, cols = np.nonzero(adj)
        w = eps_total / k[rows]
        return cls(n, ptr, cols, w, eps_total)

    @classmethod
    def from_weights(cls, W, eps_total: float | None = None) -> "DirectedNetwork":
        """Build from a dense matrix ``W[i, j] = eps_ij``."""
        W = np.asarray(W, dtype=float)
        rows, cols = np.nonzero(W)
        edges = zip(rows, cols, W[rows, cols])
        return cls.from_edges(W.shape[0], edges, eps_total)

    # -- views --------------------------------------------------------------

    @property
    def in_degree(self) -> np.ndarray:
        return np.diff(self.pre_ptr)

    def pre(self, i: int) -> np.ndarray:
        return self.pre_idx[self.pre_ptr[i]:self.pre_ptr[i + 1]]

    def weights(self, i: int) -> np.ndarray:
        return self.pre_w[self.pre_ptr[i]:self.pre_ptr[i + 1]]

    @property
    def post_ptr(self) -> np.ndarray:
        return self._post[0]

    @property
    def post_idx(self) -> np.ndarray:
        return self._post[1]

    @property
    def post_w(self) -> np.ndarray:
        return self._post[2]

    def post(self, j: int) -> np.ndarray:
        return self.post_idx[self.post_ptr[j]:self.post_ptr[j + 1]]

    def weight_matrix(self) -> np.ndarray:
        W = np.zeros((self.n, self.n))
        rows = np.repeat(np.arange(self.n), self.in_degree)
        W[rows, self.pre_idx] = self.pre_w
        return W

    def adjacency(self) -> np.ndarray:
        """Boolean matrix with ``adj[i, j]`` true iff ``j in Pre(i)``."""
        return self.weight_matrix() != 0.0

    def padded(self):
        """Rectangular ``(n, k_max)`` presynaptic index/weight arrays.

        Padding slots carry index ``n`` and weight 0. Computed once per network.
        """
        cached = self.__dict__.get("_padded")
        if cached is not None:
            return cached
        k = self.in_degree
        kmax = int(k.max())
        idx = np.full((self.n, kmax), self.n, dtype=np.int64)
        w = np.zeros((self.n, kmax))
        cols = np.arange(self.pre_idx.size) - np.repeat(self.pre_ptr[:-1], k)
        rows = np.repeat(np.arange(self.n), k)
        idx[rows, cols] = self.pre_idx
        w[rows, cols] = self.pre_w
        idx.flags.writeable = False
        w.flags.writeable = False
        object.__setattr__(self, "_padded", (idx, w))
        return idx, w

    @property
    def coupling_sign(self) -> int:
        """+1 all excitatory, -1 all inhibitory, 0 mixed."""
        if np.all(self.pre_w < 0):
            return -1
        if np.all(self.pre_w > 0):
            return 1
        return 0

    def edges(self):
        rows = np.repeat(np.arange(self.n), self.in_degree)
        return [(int(i), int(j), float(w)) for i, j, w in zip(rows, self.pre_idx, self.pre_w)]

    def __eq__(self, other):
        if not isinstance(other, DirectedNetwork):
            return NotImplemented
        return (self.n == other.n and self.eps_total == other.eps_total
                and np.array_equal(self.pre_ptr, other.pre_ptr)
                and np.array_equal(self.pre_idx, other.pre_idx)
                and np.array_equal(self.pre_w, other.pre_w))

    __hash__ = None


def _transpose(n, ptr, idx, w):
    rows = np.repeat(np.arange(n), np.diff(ptr))
    order = np.lexsort((rows, idx))
    post_idx = rows[order]
    post_w = w[order]
    counts = np.bincount(idx, minlength=n)
    post_ptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
    for arr in (post_ptr, post_idx, post_w):
        arr.setflags(write=False)
    return post_ptr, np.ascontiguousarray(post_idx), np.ascontiguousarray(post_w)


# -- generators ---------------------------------------------------------------

def generate_random(n: int, p: float, eps: float, seed: int) -> DirectedNetwork:
    """Directed Erdos-Renyi network with weights ``eps / k_i``.

    Each ordered pair ``(i, j)``, ``i != j``, carries an edge ``j -> i`` with
    probability ``p``. The random stream is numpy's PCG64 seeded with the
    64-bit ``seed``: one ``n x n`` block of uniforms in row-major order
    decides the edges, then one integer per empty row picks a repair edge.
    """
    if n < 2:
        raise ValueError("need at least two oscillators")
    if not 0.0 < p <= 1.0:
        raise ValueError("edge probability must lie in (0, 1]")
    rng = np.random.Generator(np.random.PCG64(int(seed) & 0xFFFFFFFFFFFFFFFF))
    adj = rng.random((n, n)) < p
    np.fill_diagonal(adj, False)
    for i in np.flatnonzero(~adj.any(axis=1)):
        j = int(rng.integers(n - 1))
        adj[i, j + (j >= i)] = True
    return DirectedNetwork.from_adjacency(adj, eps)


def ring(n: int, eps: float) -> DirectedNetwork:
    """Directed ring ``0 -> 1 -> ... -> n-1 -> 0``, i.e. ``Pre(i) = {i - 1}``."""
    adj = np.zeros((n, n), dtype=bool)
    adj[np.arange(n), (np.arange(n) - 1) % n] = True
    return DirectedNetwork.from_adjacency(adj, eps)


def all_to_all(n: int, eps: float) -> DirectedNetwork:
    adj = ~np.eye(n, dtype=bool)
    return DirectedNetwork.from_adjacency(adj, eps)


# -- graph properties ---------------------------------------------------------

def strongly_connected_components(net: DirectedNetwork) -> np.ndarray:
    """Component label for every oscillator."""
    rows = np.repeat(np.arange(net.n), net.in_degree)
    graph = csr_matrix((np.ones(rows.size), (net.pre_idx, rows)), shape=(net.n, net.n))
    _, labels = connected_components(graph, directed=True, connection="strong")
    return labels


def is_strongly_connected(net: DirectedNetwork) -> bool:
    return bool(np.all(strongly_connected_components(net) == 0))


def pre_expansion_depth(net: DirectedNetwork, i: int) -> int:
    """Smallest ``l`` with ``{i} u Pre(i) u ... u Pre^(l)(i)`` covering reachable nodes."""
    seen = np.zeros(net.n, dtype=bool)
    seen[i] = True
    frontier = deque([i])
    depth = 0
    while frontier:
        nxt = deque()
        for v in frontier:
            for u in net.pre(v):
                if not seen[u]:
                    seen[u] = True
                    nxt.append(u)
        if not nxt:
            break
        depth += 1
        frontier = nxt
    if not seen.all():
        raise NetworkError(f"oscillator {i} cannot be reached from every other oscillator")
    return depth


def diameter(net: DirectedNetwork) -> int:
    """Largest number of presynaptic expansions needed to cover the network.

    Requires strong connectivity. For a directed ring this is ``n - 1``, for
    all-to-all coupling 1.
    """
    if not is_strongly_connected(net):
        raise NetworkError("diameter is undefined for a network that is not strongly connected")
    return max(pre_expansion_depth(net, i) for i in range(net.n))


# -- file format --------------------------------------------------------------

def save_network(net: DirectedNetwork, path) -> None:
    """Write the JSON network format, one edge per line."""
    lines = ["{", f'  "n": {net.n},', f'  "eps_total": {json.dumps(net.eps_total)},', '  "edges": [']
    edges = net.edges()
    for k, (i, j, w) in enumerate(edges):
        sep = "," if k < len(edges) - 1 else ""
        lines.append(f"    [{i}, {j}, {json.dumps(w)}]{sep}")
    lines += ["  ]", "}", ""]
    Path(path).write_text("\n".join(lines))


def _edge_positions(text: str):
    """Offsets of each element of the top-level ``edges`` array."""
    m = re.search(r'"edges"\s*:\s*\[', text)
    if m is None:
        return []
    dec = json.JSONDecoder()
    pos = m.end()
    out = []
    ws = re.compile(r"[\s,]*")
    while True:
        pos = ws.match(text, pos).end()
        if pos >= len(text) or text[pos] == "]":
            return out
        out.append(pos)
        _, pos = dec.raw_decode(text, pos)


def loads_network(text: str, source: str = "<string>") -> DirectedNetwork:
    """Parse the JSON network format and enforce all network invariants.

    Errors name the offending line.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise NetworkError(f"{source}:{exc.lineno}: invalid JSON: {exc.msg}") from exc

    def fail(msg, offset=None):
        line = text.count("\n", 0, offset) + 1 if offset is not None else 1
        raise NetworkError(f"{source}:{line}: {msg}")

    if not isinstance(doc, dict):
        fail("top level must be an object")
    for key in ("n", "eps_total", "edges"):
        if key not in doc:
            fail(f"missing key {key!r}")
    n = doc["n"]
    if not isinstance(n, int) or n < 2:
        fail("n must be an integer >= 2")
    eps_total = float(doc["eps_total"])
    positions = _edge_positions(text)
    rows: dict[int, float] = {}
    seen: dict[tuple, int] = {}
    edges = []
    for k, e in enumerate(doc["edges"]):
        off = positions[k] if k < len(positions) else None
        if not (isinstance(e, list) and len(e) == 3):
            fail("edge must be [i, j, eps_ij]", off)
        i, j, w = e
        if not (isinstance(i, int) and isinstance(j, int)) or not (0 <= i < n and 0 <= j < n):
            fail(f"edge indices {i}, {j} out of range 0..{n - 1}", off)
        if i == j:
            fail(f"self-loop at oscillator {i}", off)
        if not isinstance(w, (int, float)) or w == 0:
            fail(f"edge {j}->{i} must carry a non-zero strength", off)
        if (i, j) in seen:
            fail(f"duplicate edge {j}->{i}", off)
        seen[(i, j)] = off
        rows[i] = rows.get(i, 0.0) + float(w)
        edges.append((i, j, float(w)))
    for i in range(n):
        if i not in rows:
            fail(f"oscillator {i} has no presynaptic oscillator")
    last = {}
    for (i, j), off in seen.items():
        last[i] = off
    for i, row_sum in rows.items():
        if abs(row_sum - eps_total) > ROW_SUM_TOL:
            fail(f"row {i} sums to {row_sum!r}, expected eps_total={eps_total!r}", last[i])
    return DirectedNetwork.from_edges(n, edges, eps_total)


def load_network(path) -> DirectedNetwork:
    path = Path(path)
    return loads_network(path.read_text(), str(path))
