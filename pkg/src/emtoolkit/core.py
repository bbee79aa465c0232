"""Physical constants, spacetime grids and sampled field containers.

Every field in the toolkit is a complex array sampled on a uniform Cartesian
grid that repeats over ``nt`` equally spaced time levels.  Scalar fields have
shape ``(nt, nx, ny, nz)``; vector fields carry a leading component axis,
``(3, nt, nx, ny, nz)``.  Arrays are frozen (read-only) after construction.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np


class ToolkitError(Exception):
    """Base class for errors raised by this package."""


class PreconditionError(ToolkitError, ValueError):
    """An input violates a documented precondition."""


class DomainError(PreconditionError):
    """An argument lies outside the mathematical domain of a function."""


class ShapeError(PreconditionError):
    """Grids or arrays do not conform."""


class CoverageError(PreconditionError):
    """A requested time lies outside a recorded source history."""


class ConvergenceError(ToolkitError, ArithmeticError):
    """An iterative numerical method failed to converge."""


class ConfigError(ToolkitError, ValueError):
    """A configuration document or option is invalid."""


# ---------------------------------------------------------------------------
# constants

@dataclass(frozen=True)
class PhysicalConstants:
    """Vacuum permittivity, permeability and light speed.

    The three values must be positive and satisfy ``c * sqrt(mu0 * epsilon0) == 1``
    to 1e-12 relative accuracy.
    """

    epsilon0: float
    mu0: float
    c: float

    def __post_init__(self) -> None:
        for name in ("epsilon0", "mu0", "c"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise PreconditionError(f"{name} must be finite and positive, got {value!r}")
        mismatch = abs(self.c * math.sqrt(self.mu0 * self.epsilon0) - 1.0)
        if mismatch > 1e-12:
            raise PreconditionError(
                f"inconsistent constants: c*sqrt(mu0*epsilon0) - 1 = {mismatch:.3e}"
            )

    @property
    def mu0_eps0(self) -> float:
        return self.mu0 * self.epsilon0


def natural_units() -> PhysicalConstants:
    return PhysicalConstants(epsilon0=1.0, mu0=1.0, c=1.0)


def si_units() -> PhysicalConstants:
    """SI constants: exact c, CODATA 2018 mu0, epsilon0 derived from both."""
    c = 299792458.0
    mu0 = 1.25663706212e-6
    return PhysicalConstants(epsilon0=1.0 / (mu0 * c * c), mu0=mu0, c=c)


def units_by_name(name: str) -> PhysicalConstants:
    if name == "natural":
        return natural_units()
    if name == "si":
        return si_units()
    raise ConfigError(f"unknown unit system {name!r} (expected 'natural' or 'si')")


# ---------------------------------------------------------------------------
# grid

@dataclass(frozen=True)
class SpacetimeGrid:
    """Uniform Cartesian grid repeated over equally spaced times.

    Parameters
    ----------
    origin : position of node (0, 0, 0).
    n : nodes per axis, each at least 3.
    h : spatial spacing, shared by all axes.
    dt : time step.
    nt : number of time levels.
    t0 : time of the first level.
    """

    origin: tuple[float, float, float]
    n: tuple[int, int, int]
    h: float
    dt: float = 1.0
    nt: int = 1
    t0: float = 0.0

    def __post_init__(self) -> None:
        origin = tuple(float(v) for v in self.origin)
        n = tuple(int(v) for v in self.n)
        if len(origin) != 3 or len(n) != 3:
            raise ShapeError("origin and n must have three entries")
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "n", n)
        if not self.h > 0:
            raise PreconditionError(f"h must be positive, got {self.h!r}")
        if not self.dt > 0:
            raise PreconditionError(f"dt must be positive, got {self.dt!r}")
        if min(n) < 3:
            raise ShapeError(f"every axis needs at least 3 nodes, got n={n}")
        if self.nt < 1:
            raise ShapeError(f"nt must be at least 1, got {self.nt}")

    @classmethod
    def centered(cls, half_width: float, n: int, dt: float = 1.0, nt: int = 1,
                 t0: float = 0.0) -> "SpacetimeGrid":
        """Cube ``[-half_width, half_width]^3`` with ``n`` nodes per axis."""
        h = 2.0 * half_width / (n - 1)
        return cls((-half_width,) * 3, (n, n, n), h, dt, nt, t0)

    @property
    def extent(self) -> tuple[float, float, float]:
        return tuple((k - 1) * self.h for k in self.n)

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return (self.nt, *self.n)

    @property
    def spatial_shape(self) -> tuple[int, int, int]:
        return self.n

    def axes(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return tuple(o + self.h * np.arange(k) for o, k in zip(self.origin, self.n))

    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.nt)

    def mesh(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Spatial coordinate arrays of shape ``n`` (ij indexing)."""
        return tuple(np.meshgrid(*self.axes(), indexing="ij"))

    def points(self) -> np.ndarray:
        """Spatial nodes flattened to shape ``(N, 3)`` in C order."""
        return np.stack([a.ravel() for a in self.mesh()], axis=1)

    def with_time(self, dt: float, nt: int, t0: float = 0.0) -> "SpacetimeGrid":
        return SpacetimeGrid(self.origin, self.n, self.h, dt, nt, t0)

    def to_dict(self) -> dict:
        return {"origin": list(self.origin), "n": list(self.n), "h": self.h,
                "dt": self.dt, "nt": self.nt, "t0": self.t0}

    @classmethod
    def from_dict(cls, d: dict) -> "SpacetimeGrid":
        return cls(tuple(d["origin"]), tuple(d["n"]), d["h"], d.get("dt", 1.0),
                   d.get("nt", 1), d.get("t0", 0.0))


# ---------------------------------------------------------------------------
# fields

def _frozen(values: np.ndarray) -> np.ndarray:
    arr = np.array(values, dtype=np.complex128, copy=True)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class ScalarField:
    grid: SpacetimeGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        arr = _frozen(self.values)
        if arr.shape != self.grid.shape:
            raise ShapeError(f"scalar values have shape {arr.shape}, grid needs {self.grid.shape}")
        object.__setattr__(self, "values", arr)

    @classmethod
    def zeros(cls, grid: SpacetimeGrid) -> "ScalarField":
        return cls(grid, np.zeros(grid.shape))

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))

    def is_real(self, tol: float = 1e-10) -> bool:
        return is_real(self, tol)

    def __add__(self, other: "ScalarField") -> "ScalarField":
        check_same_grid(self, other)
        return ScalarField(self.grid, self.values + other.values)

    def __sub__(self, other: "ScalarField") -> "ScalarField":
        check_same_grid(self, other)
        return ScalarField(self.grid, self.values - other.values)

    def __mul__(self, scale: complex) -> "ScalarField":
        return ScalarField(self.grid, self.values * scale)

    __rmul__ = __mul__


@dataclass(frozen=True)
class VectorField3:
    grid: SpacetimeGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        arr = _frozen(self.values)
        if arr.shape != (3, *self.grid.shape):
            raise ShapeError(
                f"vector values have shape {arr.shape}, grid needs {(3, *self.grid.shape)}"
            )
        object.__setattr__(self, "values", arr)

    @classmethod
    def zeros(cls, grid: SpacetimeGrid) -> "VectorField3":
        return cls(grid, np.zeros((3, *grid.shape)))

    @classmethod
    def from_components(cls, components: Sequence[ScalarField]) -> "VectorField3":
        grid = components[0].grid
        for comp in components[1:]:
            check_same_grid(components[0], comp)
        return cls(grid, np.stack([comp.values for comp in components]))

    def component(self, i: int) -> ScalarField:
        return ScalarField(self.grid, self.values[i])

    def magnitude(self) -> np.ndarray:
        return np.sqrt(np.sum(np.abs(self.values) ** 2, axis=0))

    def max_abs(self) -> float:
        return float(np.max(self.magnitude()))

    def is_real(self, tol: float = 1e-10) -> bool:
        return is_real(self, tol)

    def __add__(self, other: "VectorField3") -> "VectorField3":
        check_same_grid(self, other)
        return VectorField3(self.grid, self.values + other.values)

    def __sub__(self, other: "VectorField3") -> "VectorField3":
        check_same_grid(self, other)
        return VectorField3(self.grid, self.values - other.values)

    def __mul__(self, scale: complex) -> "VectorField3":
        return VectorField3(self.grid, self.values * scale)

    __rmul__ = __mul__


def check_same_grid(*fields) -> SpacetimeGrid:
    grid = fields[0].grid
    for f in fields[1:]:
        if f.grid != grid:
            raise ShapeError(f"grid mismatch: {f.grid} differs from {grid}")
    return grid


def is_real(f, tol: float = 1e-10) -> bool:
    """True when the imaginary part is below ``tol`` relative to the field scale."""
    scale = max(float(np.max(np.abs(f.values))), 1.0)
    return float(np.max(np.abs(f.values.imag))) <= tol * scale


def _check_finite(values: np.ndarray, grid: SpacetimeGrid, what: str) -> None:
    bad = ~np.isfinite(values)
    if bad.any():
        idx = tuple(int(i) for i in np.argwhere(bad)[0])
        raise PreconditionError(f"non-finite {what} sample at index {idx}")


def sample_scalar(grid: SpacetimeGrid, f: Callable) -> ScalarField:
    """Sample ``f(t, x, y, z)`` at every node.

    ``f`` receives broadcastable arrays and returns complex values; scalar
    returns are broadcast.  The error for a non-finite sample names its
    ``(t, i, j, k)`` index.
    """
    t = grid.times()[:, None, None, None]
    x, y, z = (a[None] for a in grid.mesh())
    values = np.broadcast_to(np.asarray(f(t, x, y, z), dtype=np.complex128), grid.shape)
    _check_finite(values, grid, "scalar")
    return ScalarField(grid, values)


def sample_vector(grid: SpacetimeGrid, f: Callable) -> VectorField3:
    """Sample a vector function returning three components ``(fx, fy, fz)``."""
    t = grid.times()[:, None, None, None]
    x, y, z = (a[None] for a in grid.mesh())
    comps = f(t, x, y, z)
    values = np.stack([np.broadcast_to(np.asarray(c, dtype=np.complex128), grid.shape)
                       for c in comps])
    _check_finite(values, grid, "vector")
    return VectorField3(grid, values)


# ---------------------------------------------------------------------------
# serialisation

FIELD_FORMAT = "emtoolkit-field"
FIELD_VERSION = 1


def save_field(path: str | Path, f: ScalarField | VectorField3, units: str = "natural",
               name: str = "") -> None:
    """Write a field as one JSON header line followed by raw samples.

    The samples are little-endian complex128 in C order over
    ``(component, t, x, y, z)``; scalars have a single component.
    """
    components = 3 if isinstance(f, VectorField3) else 1
    header = {
        "format": FIELD_FORMAT,
        "version": FIELD_VERSION,
        "kind": "vector" if components == 3 else "scalar",
        "components": components,
        "name": name,
        "units": units,
        "dtype": "<c16",
        "order": "component,t,x,y,z",
        "grid": f.grid.to_dict(),
    }
    data = np.ascontiguousarray(f.values.reshape(components, *f.grid.shape), dtype="<c16")
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8") + b"\n")
        fh.write(data.tobytes())


def load_field(path: str | Path) -> tuple[ScalarField | VectorField3, dict]:
    """Read a field written by :func:`save_field`; returns ``(field, header)``."""
    with open(path, "rb") as fh:
        line = fh.readline()
        try:
            header = json.loads(line.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ConfigError(f"{path}: unreadable field header") from exc
        if header.get("format") != FIELD_FORMAT:
            raise ConfigError(f"{path}: not an {FIELD_FORMAT} file")
        grid = SpacetimeGrid.from_dict(header["grid"])
        comps = int(header["components"])
        raw = np.frombuffer(fh.read(), dtype="<c16")
    expected = comps * int(np.prod(grid.shape))
    if raw.size != expected:
        raise ShapeError(f"{path}: found {raw.size} samples, header implies {expected}")
    values = raw.reshape(comps, *grid.shape)
    if comps == 1:
        return ScalarField(grid, values[0]), header
    return VectorField3(grid, values), header
