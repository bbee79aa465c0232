"""Gauss-Legendre rules on intervals, the unit sphere and balls."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .core import ConfigError


@lru_cache(maxsize=64)
def _leggauss(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


def gauss_legendre(n: int, a: float = -1.0, b: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the ``n``-point rule on ``[a, b]``."""
    if n < 1:
        raise ConfigError(f"quadrature order must be positive, got {n}")
    x, w = _leggauss(n)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


@dataclass(frozen=True)
class SphereRule:
    """Product rule: Gauss-Legendre in cos(theta), trapezoid in phi.

    Arrays are flattened over (theta, phi) pairs.
    """

    theta: np.ndarray
    phi: np.ndarray
    weights: np.ndarray

    @property
    def directions(self) -> np.ndarray:
        st = np.sin(self.theta)
        return np.stack([st * np.cos(self.phi), st * np.sin(self.phi), np.cos(self.theta)])


def sphere_rule(n_theta: int = 64, n_phi: int = 128) -> SphereRule:
    if n_phi < 1:
        raise ConfigError(f"n_phi must be positive, got {n_phi}")
    u, wu = gauss_legendre(n_theta)
    phi = -np.pi + 2.0 * np.pi * np.arange(n_phi) / n_phi
    wphi = np.full(n_phi, 2.0 * np.pi / n_phi)
    th, ph = np.meshgrid(np.arccos(u), phi, indexing="ij")
    w = np.outer(wu, wphi)
    return SphereRule(th.ravel(), ph.ravel(), w.ravel())


@dataclass(frozen=True)
class BallRule:
    """Product rule over a ball of radius ``r0`` centred at the origin.

    ``r``, ``theta``, ``phi`` and ``weights`` are flat arrays over all nodes;
    the weights include the ``r^2`` Jacobian.
    """

    r0: float
    r: np.ndarray
    theta: np.ndarray
    phi: np.ndarray
    weights: np.ndarray

    @property
    def points(self) -> np.ndarray:
        """Cartesian nodes, shape ``(N, 3)``."""
        st = np.sin(self.theta)
        return np.stack([self.r * st * np.cos(self.phi), self.r * st * np.sin(self.phi),
                         self.r * np.cos(self.theta)], axis=1)

    def integrate(self, values: np.ndarray) -> np.ndarray:
        """Integrate samples whose last axis runs over the nodes."""
        return values @ self.weights


def ball_rule(r0: float, n_r: int = 64, n_theta: int = 64, n_phi: int = 128) -> BallRule:
    r, wr = gauss_legendre(n_r, 0.0, r0)
    s = sphere_rule(n_theta, n_phi)
    rr = np.repeat(r, s.theta.size)
    w = np.outer(wr * r * r, s.weights).ravel()
    return BallRule(float(r0), rr, np.tile(s.theta, r.size), np.tile(s.phi, r.size), w)
