"""Potential functions of pulse-coupled oscillators and the pulse transfer map.

A potential function ``U`` maps the phase of an oscillator onto a
membrane-potential-like variable. It must be increasing, concave and satisfy
``U(0) = 0``, ``U(1) = 1``. An incoming pulse of strength ``eps`` moves the
potential by ``eps``; the phase after the pulse is ``U^-1(U(phi) + eps)``.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from typing import Callable

import numpy as np
from scipy.optimize import brentq


class PotentialDomainError(ValueError):
    """Raised when a phase or potential lies outside the invertible domain."""


class PotentialFunction(ABC):
    """Abstract rise function ``U`` with derivative and inverse.

    Subclasses implement vectorised ``eval``, ``deriv`` and ``inv``. Each
    potential declares the phase domain ``[phi_min, 1]`` on which it is valid;
    inhibition can push phases far below zero, so ``phi_min`` is usually
    negative.
    """

    phi_min: float = -math.inf

    @abstractmethod
    def eval(self, phi):
        ...

    @abstractmethod
    def deriv(self, phi):
        ...

    @abstractmethod
    def inv(self, u):
        ...

    def __call__(self, phi):
        return self.eval(phi)

    @property
    def u_min(self) -> float:
        if math.isinf(self.phi_min):
            return -math.inf
        return float(self.eval(self.phi_min))

    def H(self, phi, eps):
        """Sub-threshold transfer ``U^-1(U(phi) + eps)`` without the reset."""
        return self.inv(self.eval(phi) + eps)


class IFPotential(PotentialFunction):
    """Leaky integrate-and-fire potential ``U(phi) = I (1 - exp(-phi T_IF))``.

    ``I`` is the dimensionless drive (``I > 1``) and ``T_IF = ln(I / (I - 1))``
    the free period, so that ``U(1) = 1``. The closed form is valid for every
    real phase; only ``u < I`` is invertible.
    """

    def __init__(self, drive: float):
        if not drive > 1.0:
            raise ValueError(f"drive must exceed 1 for a periodic free solution, got {drive}")
        self.drive = float(drive)
        self.period = if_free_period(self.drive)

    def __repr__(self):
        return f"IFPotential(drive={self.drive!r})"

    def __eq__(self, other):
        return isinstance(other, IFPotential) and other.drive == self.drive

    def __hash__(self):
        return hash(("IF", self.drive))

    def eval(self, phi):
        # above phi = 1/2 use the form anchored at threshold so that U(1) == 1 exactly
        phi = np.asarray(phi, dtype=float)
        out = -self.drive * np.expm1(-phi * self.period)
        hi = phi > 0.5
        if np.any(hi):
            out = np.array(out, copy=True)
            out[hi] = 1.0 - (self.drive - 1.0) * np.expm1((1.0 - phi[hi]) * self.period)
        return out if out.ndim else out[()]

    def deriv(self, phi):
        return self.drive * self.period * np.exp(-np.asarray(phi, dtype=float) * self.period)

    def inv(self, u):
        u = np.asarray(u, dtype=float)
        if np.any(u >= self.drive):
            raise PotentialDomainError(
                f"potential {np.max(u)} is not below the drive {self.drive}; U is not invertible there"
            )
        return -np.log1p(-u / self.drive) / self.period


class CallablePotential(PotentialFunction):
    """Potential built from user supplied callables.

    When no inverse is given, ``inv`` falls back to a bracketing root finder
    (Brent) on ``[phi_min, phi_max]`` with absolute tolerance ``1e-12``.
    ``phi_max`` may exceed 1 so that supra-threshold potentials near 1 can
    still be inverted during validation.
    """

    def __init__(
        self,
        func: Callable,
        deriv: Callable,
        inverse: Callable | None = None,
        phi_min: float = -2.0,
        phi_max: float = 1.0,
        xtol: float = 1e-12,
    ):
        self._func = func
        self._deriv = deriv
        self._inverse = inverse
        self.phi_min = float(phi_min)
        self.phi_max = float(phi_max)
        self.xtol = xtol

    def _check_phase(self, phi):
        if np.any(phi < self.phi_min) or np.any(phi > self.phi_max):
            raise PotentialDomainError(
                f"phase outside declared domain [{self.phi_min}, {self.phi_max}]"
            )

    def eval(self, phi):
        phi = np.asarray(phi, dtype=float)
        self._check_phase(phi)
        return np.asarray(self._func(phi), dtype=float)

    def deriv(self, phi):
        phi = np.asarray(phi, dtype=float)
        self._check_phase(phi)
        return np.asarray(self._deriv(phi), dtype=float)

    def inv(self, u):
        u = np.asarray(u, dtype=float)
        lo = float(self._func(self.phi_min))
        hi = float(self._func(self.phi_max))
        if np.any(u < lo) or np.any(u > hi):
            raise PotentialDomainError(f"potential outside invertible range [{lo}, {hi}]")
        if self._inverse is not None:
            return np.asarray(self._inverse(u), dtype=float)
        flat = [
            brentq(lambda x, target=target: float(self._func(x)) - target,
                   self.phi_min, self.phi_max, xtol=self.xtol)
            for target in u.ravel()
        ]
        out = np.array(flat, dtype=float).reshape(u.shape)
        return out if out.ndim else float(out)


def log_potential(b: float) -> CallablePotential:
    """Concave ``U(phi) = ln(1 + (e^b - 1) phi) / b`` with analytic inverse.

    Unlike the IF case, ``U'`` is not affine in ``U``, so the stability
    operator genuinely depends on the rank order of a perturbation.
    """
    if not b > 0:
        raise ValueError("curvature b must be positive")
    c = np.expm1(b)
    return CallablePotential(
        lambda phi: np.log1p(c * phi) / b,
        lambda phi: c / (b * (1.0 + c * phi)),
        lambda u: np.expm1(b * u) / c,
        phi_min=-(1.0 - 1e-9) / c,
        phi_max=1.0,
    )


def if_free_period(drive: float) -> float:
    """Free period ``ln(I / (I - 1))`` of an integrate-and-fire neuron with drive ``I``."""
    if not drive > 1.0:
        raise ValueError(f"drive must exceed 1, got {drive}")
    return math.log(drive / (drive - 1.0))


def transfer(U: PotentialFunction, phi: float, eps: float) -> tuple[float, bool]:
    """Phase after receiving a pulse of strength ``eps`` at phase ``phi``.

    Returns ``(new_phase, fired)``. A supra-threshold input (``U(phi) + eps >= 1``)
    resets the phase to zero and the caller has to emit a pulse.
    """
    if phi > 1.0:
        raise PotentialDomainError(f"phase {phi} above threshold")
    u = float(U.eval(phi)) + eps
    if not math.isfinite(u):
        raise PotentialDomainError(f"non-finite potential at phase {phi}")
    if u >= 1.0:
        return 0.0, True
    return float(U.inv(u)), False


def validate_potential(U: PotentialFunction, phi_min: float = -2.0, n: int = 1000,
                       tol: float = 1e-12) -> dict:
    """Sampled check of normalisation, monotonicity, concavity and invertibility.

    Returns a dict of booleans plus the worst inverse round-trip error.
    """
    lo = max(phi_min, U.phi_min)
    grid = np.linspace(lo, 1.0, n)
    u = U.eval(grid)
    d = U.deriv(grid)
    roundtrip = np.abs(U.inv(u) - grid)
    return {
        "normalized": abs(float(U.eval(0.0))) <= tol and abs(float(U.eval(1.0)) - 1.0) <= tol,
        "increasing": bool(np.all(d > 0)),
        "concave": bool(np.all(np.diff(d) < 0)),
        "max_inverse_error": float(np.max(roundtrip)),
    }


def sync_alpha(U: PotentialFunction, tau: float, eps: float) -> float:
    """Phase right after the synchronous volley arrives, ``U^-1(U(tau) + eps)``."""
    u = float(U.eval(tau)) + eps
    if u >= 1.0:
        raise PotentialDomainError(
            f"total input is supra-threshold at the synchronous orbit (U(tau)+eps={u})"
        )
    return float(U.inv(u))


def sync_period(U: PotentialFunction, tau: float, eps: float) -> float:
    """Period ``tau + 1 - alpha`` of the synchronous orbit."""
    return tau + 1.0 - sync_alpha(U, tau, eps)
