"""Stability of the synchronous orbit: exact period map and first-order operators.

A perturbation ``delta`` of the synchronous phases changes the order in which
each oscillator receives the volley of its presynaptic partners. For every
such rank order the linearised period map is a different matrix ``A``; all of
them have unit row sums and the common diagonal ``A_0``.
"""

from __future__ import annotations

import itertools
import math
import threading
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .network import DirectedNetwork, diameter, is_strongly_connected
from .potential import PotentialFunction, sync_alpha


class StabilityError(ValueError):
    """Perturbation or network outside the regime covered by the analysis."""


class RegimeError(StabilityError):
    """An intermediate potential crossed threshold; use the event simulator instead."""


# -- perturbations and rank orders -------------------------------------------

@dataclass(frozen=True)
class Perturbation:
    delta: np.ndarray

    @property
    def spread(self) -> float:
        return float(np.max(self.delta) - np.min(self.delta))

    def admissible(self, tau: float) -> bool:
        return self.spread < tau


@dataclass(frozen=True)
class RankOrder:
    """Arrival order of presynaptic pulses for every oscillator.

    ``rows[i]`` lists ``Pre(i)`` sorted by descending perturbation, ties by
    ascending index.
    """

    rows: tuple

    @classmethod
    def from_delta(cls, net: DirectedNetwork, delta) -> "RankOrder":
        delta = np.asarray(delta, dtype=float)
        rows = []
        for i in range(net.n):
            pre = net.pre(i)
            order = np.lexsort((pre, -delta[pre]))
            rows.append(tuple(int(j) for j in pre[order]))
        return cls(tuple(rows))

    @property
    def signature(self) -> tuple:
        return self.rows

    def deltas(self, delta, i: int) -> np.ndarray:
        """``Delta_{i,0..k_i}``: own perturbation followed by the sorted presynaptic ones."""
        delta = np.asarray(delta, dtype=float)
        return np.concatenate([[delta[i]], delta[list(self.rows[i])]])


def _sorted_weights(net: DirectedNetwork, rank: RankOrder, i: int) -> np.ndarray:
    pre = net.pre(i)
    w = net.weights(i)
    lookup = dict(zip(pre.tolist(), w.tolist()))
    return np.array([lookup[j] for j in rank.rows[i]])


def _check_subthreshold(U, tau, eps):
    try:
        return sync_alpha(U, tau, eps)
    except ValueError as exc:
        raise StabilityError(str(exc)) from exc


# -- exact map ----------------------------------------------------------------

def exact_map(net: DirectedNetwork, U: PotentialFunction, tau: float, delta,
              backend: str = "auto") -> np.ndarray:
    """Exact stroboscopic period-``T`` map of a small perturbation.

    Each oscillator starts at ``tau + D_{i,1}`` when its first pulse arrives
    and is mapped through the successive pulses in rank order; the result is
    ``beta_{i,k_i} - alpha + Delta_{i,k_i}``.
    """
    delta = np.asarray(delta, dtype=float)
    if not Perturbation(delta).admissible(tau):
        raise StabilityError(f"perturbation spread {np.ptp(delta)} is not below tau={tau}")
    alpha = _check_subthreshold(U, tau, net.eps_total)
    out, bad = _kernels.exact_map(delta, net, tau, U, alpha, backend=backend)
    if bad >= 0:
        raise RegimeError(f"oscillator {bad} is driven above threshold within the period")
    return out


def p_coefficients(net: DirectedNetwork, U: PotentialFunction, tau: float,
                   rank: RankOrder, i: int) -> np.ndarray:
    """``p_{i,n}`` for ``n = 0..k_i``: ``U'(a_n) / U'(alpha)`` with cumulative inputs ``a_n``."""
    alpha = _check_subthreshold(U, tau, net.eps_total)
    w = _sorted_weights(net, rank, i)
    csum = np.concatenate([[0.0], np.cumsum(w)])
    a = U.inv(float(U.eval(tau)) + csum)
    p = U.deriv(a) / U.deriv(alpha)
    # the last partial sum equals eps only up to rounding
    p[-1] = 1.0
    return p


def operator_diagonal(U: PotentialFunction, tau: float, eps: float) -> float:
    """Common diagonal ``A_0 = U'(tau) / U'(alpha)``."""
    alpha = _check_subthreshold(U, tau, eps)
    return float(U.deriv(tau) / U.deriv(alpha))


@dataclass(frozen=True, eq=False)
class StabilityOperator:
    A: np.ndarray
    rank_order: RankOrder
    A0: float

    @property
    def n(self) -> int:
        return self.A.shape[0]

    def __matmul__(self, x):
        return self.A @ x


def build_operator(net: DirectedNetwork, U: PotentialFunction, tau: float,
                   rank: RankOrder) -> StabilityOperator:
    """First-order operator for one rank order.

    ``A_ii = p_{i,0}`` and ``A_{i,j_n} = p_{i,n} - p_{i,n-1}``; all other
    entries vanish.
    """
    A = np.zeros((net.n, net.n))
    A0 = None
    for i in range(net.n):
        p = p_coefficients(net, U, tau, rank, i)
        A[i, i] = p[0]
        A[i, list(rank.rows[i])] = np.diff(p)
        A0 = p[0]
    return StabilityOperator(A, rank, float(A0))


class OperatorCache:
    """Operators keyed by rank-order signature; safe for concurrent insertion."""

    def __init__(self, net, U, tau):
        self.net, self.U, self.tau = net, U, tau
        self._store: dict = {}
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def __len__(self):
        return len(self._store)

    def get(self, rank: RankOrder) -> StabilityOperator:
        key = rank.signature
        with self._lock:
            op = self._store.get(key)
            if op is not None:
                self.hits += 1
                return op
        op = build_operator(self.net, self.U, self.tau, rank)
        with self._lock:
            self.misses += 1
            return self._store.setdefault(key, op)

    def for_delta(self, delta) -> StabilityOperator:
        return self.get(RankOrder.from_delta(self.net, delta))


def linear_map(net: DirectedNetwork, U: PotentialFunction, tau: float, delta,
               backend: str = "auto") -> np.ndarray:
    """``A(rank(delta)) @ delta`` without forming the matrix."""
    alpha = _check_subthreshold(U, tau, net.eps_total)
    return _kernels.linear_map(delta, net, tau, U, alpha, backend=backend)


def linearization_residual(net: DirectedNetwork, U: PotentialFunction, tau: float,
                           delta, scale: float) -> float:
    """``|| exact(s delta) - A(rank(s delta)) s delta ||_inf``; shrinks like ``s**2``."""
    d = scale * np.asarray(delta, dtype=float)
    op = build_operator(net, U, tau, RankOrder.from_delta(net, d))
    return float(np.max(np.abs(exact_map(net, U, tau, d) - op.A @ d)))


# -- intermediate expansion ----------------------------------------------------

def appendix_expansion_check(net: DirectedNetwork, U: PotentialFunction, tau: float,
                             rank: RankOrder, i: int, m: int, delta) -> tuple[float, float]:
    """Exact ``beta_{i,m}`` and its first-order expansion.

    The expansion is ``alpha_{i,m} + sum_{n<=m} p_{i,n-1,m} D_{i,n}`` with
    ``p_{i,n,m} = U'(alpha_{i,n}) / U'(alpha_{i,m})``.
    """
    k = len(rank.rows[i])
    if not 1 <= m <= k:
        raise IndexError(f"m must lie in 1..{k}, got {m}")
    w = _sorted_weights(net, rank, i)
    Delta = rank.deltas(delta, i)
    D = Delta[:-1] - Delta[1:]
    beta = float(tau)
    for n in range(m):
        u = float(U.eval(beta + D[n])) + w[n]
        if u >= 1.0:
            raise RegimeError(f"pulse {n + 1} drives oscillator {i} above threshold")
        beta = float(U.inv(u))
    a = alpha_table(U, tau, w)
    dU = U.deriv(a)
    first = a[m] + float(np.sum(dU[:m] / dU[m] * D[:m]))
    return beta, float(first)


def alpha_table(U: PotentialFunction, tau: float, w_sorted) -> np.ndarray:
    """``alpha_{i,m}`` for ``m = 0..k``: phase after the first ``m`` unperturbed pulses."""
    csum = np.concatenate([[0.0], np.cumsum(w_sorted)])
    return U.inv(float(U.eval(tau)) + csum)


def p_transition(U: PotentialFunction, tau: float, w_sorted, n: int, m: int) -> float:
    """``p_{i,n,m} = U'(alpha_{i,n}) / U'(alpha_{i,m})``."""
    a = alpha_table(U, tau, w_sorted)
    return float(U.deriv(a[n]) / U.deriv(a[m]))


# -- spectra and bounds ---------------------------------------------------------

class EigenSolverError(RuntimeError):
    pass


def spectrum(op) -> np.ndarray:
    """All eigenvalues of the dense non-symmetric operator (LAPACK ``geev``)."""
    A = op.A if isinstance(op, StabilityOperator) else np.asarray(op)
    if not np.all(np.isfinite(A)):
        raise EigenSolverError("operator has non-finite entries")
    try:
        return np.linalg.eigvals(A)
    except np.linalg.LinAlgError as exc:
        raise EigenSolverError(f"eigenvalue iteration did not converge: {exc}") from exc


def unit_eigenpair_residual(op: StabilityOperator) -> float:
    """``|| A 1 - 1 ||_inf`` for the time-translation eigenvector."""
    one = np.ones(op.n)
    return float(np.max(np.abs(op.A @ one - one)))


@dataclass(frozen=True)
class GershgorinResult:
    center: float
    radius: float
    all_contained: bool
    unit_tangency: bool
    max_excess: float


def gershgorin_check(op: StabilityOperator, sign: int, eigenvalues=None,
                     tol: float = 1e-8) -> GershgorinResult:
    """Common Gershgorin disk of a pure-sign operator and containment of its spectrum.

    ``sign`` is -1 for inhibitory and +1 for excitatory coupling. The disk is
    centred at ``A_0`` with radius ``|1 - A_0|``; it touches the unit circle at
    ``z = 1`` from inside (inhibitory) or from outside (excitatory).
    """
    if sign not in (-1, 1):
        raise StabilityError("Gershgorin bounds are only derived for pure-sign coupling")
    off = op.A - np.diag(np.diag(op.A))
    if sign < 0 and np.any(off < 0) or sign > 0 and np.any(off > 0):
        raise StabilityError("operator sign pattern does not match the coupling sign")
    center = op.A0
    radius = 1.0 - center if sign < 0 else center - 1.0
    ev = spectrum(op) if eigenvalues is None else np.asarray(eigenvalues)
    excess = float(np.max(np.abs(ev - center)) - radius)
    touch = center + radius if sign < 0 else center - radius
    return GershgorinResult(center, radius, excess <= tol, abs(touch - 1.0) <= 1e-12, excess)


@dataclass(frozen=True)
class PerronResult:
    simple: bool
    gap: float
    n_unit: int


def perron_simplicity_check(op: StabilityOperator, eigenvalues=None, tol: float = 1e-8) -> PerronResult:
    """Is ``lambda = 1`` the only eigenvalue on the unit circle?

    Needs an entrywise non-negative operator (inhibitory coupling). The gap is
    ``1 - max |lambda|`` over the remaining eigenvalues.
    """
    if np.any(op.A < 0):
        raise StabilityError("Perron-Frobenius check needs a non-negative operator")
    ev = spectrum(op) if eigenvalues is None else np.asarray(eigenvalues)
    mod = np.abs(ev)
    on_unit = np.abs(mod - 1.0) <= tol
    n_unit = int(on_unit.sum())
    rest = mod[~on_unit]
    gap = float(1.0 - rest.max()) if rest.size else 1.0
    simple = n_unit == 1 and bool(np.all(rest < 1.0))
    return PerronResult(simple, gap, n_unit)


# -- contraction ----------------------------------------------------------------

@dataclass
class ContractionTrace:
    norms: np.ndarray
    spreads: np.ndarray
    final: np.ndarray
    diameter: int | None

    def windows_strict(self, window: int, spread_floor: float = 1e-10) -> bool:
        """Strict decrease over every ``window`` periods while the spread exceeds the floor."""
        norms, spreads = self.norms, self.spreads
        for l in range(norms.size - window):
            if spreads[l] < spread_floor:
                break
            if not norms[l + window] < norms[l]:
                return False
        return True

    def non_increasing(self, rtol: float = 1e-14) -> bool:
        return bool(np.all(self.norms[1:] <= self.norms[:-1] * (1.0 + rtol) + 1e-300))


def contraction_trace(net: DirectedNetwork, U: PotentialFunction, tau: float, delta,
                      periods: int, mode: str = "linear", until_spread: float | None = None,
                      backend: str = "auto") -> ContractionTrace:
    """Iterate the period map and record ``max_i delta_i`` and the spread.

    The perturbation is shifted so that its smallest component is 0. ``mode``
    selects the first-order operators chosen by the evolving rank order
    (``"linear"``) or the exact nonlinear map (``"exact"``). Iteration stops
    early once the spread drops below ``until_spread``.
    """
    if net.coupling_sign != -1:
        raise StabilityError("contraction analysis covers inhibitory networks only")
    if mode not in ("linear", "exact"):
        raise ValueError(f"unknown mode {mode!r}")
    d = np.asarray(delta, dtype=float)
    d = d - d.min()
    alpha = _check_subthreshold(U, tau, net.eps_total)
    norms = [float(d.max())]
    spreads = [float(np.ptp(d))]
    for _ in range(periods):
        if until_spread is not None and spreads[-1] < until_spread:
            break
        if mode == "linear":
            d = _kernels.linear_map(d, net, tau, U, alpha, backend=backend)
        else:
            d, bad = _kernels.exact_map(d, net, tau, U, alpha, backend=backend)
            if bad >= 0:
                raise RegimeError(f"oscillator {bad} driven above threshold")
        norms.append(float(d.max()))
        spreads.append(float(np.ptp(d)))
    lc = diameter(net) if is_strongly_connected(net) else None
    return ContractionTrace(np.array(norms), np.array(spreads), d, lc)


# -- operator enumeration ---------------------------------------------------------

MAX_ENUMERATION_N = 8
MAX_CLASS_N = 6
DEDUP_ATOL = 1e-12


@dataclass
class EnumerationReport:
    n: int
    orderings: int
    distinct: int
    operators: list
    row_distinct: list
    row_bound: list
    lower_bound: int
    upper_bound: int
    classes: int | None

    @property
    def within_bounds(self) -> bool:
        return self.lower_bound <= self.distinct <= self.upper_bound


def canonical_form(A: np.ndarray) -> bytes:
    """Lexicographically smallest ``P A P^T`` over all permutations ``P``."""
    n = A.shape[0]
    perms = np.array(list(itertools.permutations(range(n))))
    stack = A[perms[:, :, None], perms[:, None, :]].reshape(len(perms), -1)
    best = np.lexsort(stack.T[::-1])[0]
    return stack[best].tobytes()


def _row_class(reps: list, row: np.ndarray, atol: float) -> int:
    """Id of the tolerance class of ``row`` among representatives ``reps``."""
    if reps:
        stack = np.asarray(reps)
        hit = np.flatnonzero(np.max(np.abs(stack - row), axis=1) <= atol)
        if hit.size:
            return int(hit[0])
    reps.append(row.copy())
    return len(reps) - 1


def enumerate_operators(net: DirectedNetwork, U: PotentialFunction, tau: float,
                        atol: float = DEDUP_ATOL) -> EnumerationReport:
    """Build the operator of every strict global ordering of the perturbation.

    Rows equal within ``atol`` are merged, so operators differing only by
    roundoff count once. For ``n <= 6`` the distinct operators are also
    grouped into classes of permutation-similar matrices.
    """
    n = net.n
    if n > MAX_ENUMERATION_N:
        raise StabilityError(f"enumeration is limited to n <= {MAX_ENUMERATION_N}")
    cache = OperatorCache(net, U, tau)
    distinct: dict[tuple, StabilityOperator] = {}
    row_ids: list[dict] = [{} for _ in range(n)]
    reps: list[list] = [[] for _ in range(n)]
    count = 0
    for ranks in itertools.permutations(range(n)):
        op = cache.for_delta(np.array(ranks, dtype=float))
        count += 1
        key = []
        for i, order in enumerate(op.rank_order.rows):
            if order not in row_ids[i]:
                row_ids[i][order] = _row_class(reps[i], op.A[i], atol)
            key.append(row_ids[i][order])
        distinct.setdefault(tuple(key), op)
    rows = reps
    k = net.in_degree
    classes = None
    if n <= MAX_CLASS_N:
        digits = max(0, -int(math.floor(math.log10(atol))) - 2)
        classes = len({canonical_form(np.round(op.A, digits) + 0.0) for op in distinct.values()})
    return EnumerationReport(
        n=n,
        orderings=count,
        distinct=len(distinct),
        operators=list(distinct.values()),
        row_distinct=[len(r) for r in rows],
        row_bound=[math.factorial(int(x)) for x in k],
        lower_bound=math.factorial(int(k.max())),
        upper_bound=math.factorial(n - 1),
        classes=classes,
    )
