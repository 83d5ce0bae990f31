"""Numerical and exact iteration of the Farey transfer operator.

With respect to the invariant density 1/x the operator acts as

    (Tf)(x) = [f(x/(x+1)) + x * f(1/(x+1))] / (x+1),

and with respect to Lebesgue measure the Perron-Frobenius operator is
(Pg)(x) = [g(x/(1+x)) + g(1/(1+x))] / (1+x)^2.  Grid iteration uses a graded
mesh (geometric toward the indifferent fixed point at 0) with
piecewise-linear interpolation, which preserves monotonicity and concavity
exactly, so cone diagnostics reflect the operator rather than the
interpolant.  A 2^n branch-sum expansion provides the exact oracle for small
iteration counts.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import log
from typing import Callable, Iterable, Optional, Sequence, Union

import numpy as np

MESH_SIZE = 4096
HEAD_NODE = 1e-9
DEFAULT_PROBES = (0.6, 0.75, 0.9)


class ClosedFormDensity:
    """Analytic density on [0, 1] with exact pointwise evaluation."""

    def __init__(self, name: str, fn: Callable[[np.ndarray], np.ndarray]):
        self.name = name
        self.fn = fn

    def __call__(self, x):
        return self.fn(np.asarray(x, dtype=np.float64))

    @classmethod
    def one(cls) -> "ClosedFormDensity":
        return cls("one", lambda x: np.ones_like(x))

    @classmethod
    def identity(cls) -> "ClosedFormDensity":
        return cls("id", lambda x: x)

    @classmethod
    def power(cls, theta: float) -> "ClosedFormDensity":
        """f(x) = theta * x^theta, normalized so the 1/x-weighted integral is 1."""
        if not 0 < theta <= 1:
            raise ValueError("theta must lie in (0, 1]")
        return cls(f"power:{theta:g}", lambda x: theta * np.power(x, theta))


Density = Union[ClosedFormDensity, "GridFunction", Callable[[np.ndarray], np.ndarray]]


@dataclass
class GridFunction:
    """Node values on a fixed mesh with piecewise-linear interpolation."""

    mesh: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if self.mesh.shape != self.values.shape:
            raise ValueError("mesh and values must have the same shape")

    def __call__(self, x):
        return np.interp(x, self.mesh, self.values)

    @classmethod
    def from_callable(cls, fn: Density, mesh: np.ndarray) -> "GridFunction":
        return cls(mesh, np.asarray(fn(mesh), dtype=np.float64).copy())


def farey_mesh(
    size: int = MESH_SIZE,
    head: float = HEAD_NODE,
    probes: Sequence[float] = DEFAULT_PROBES,
) -> np.ndarray:
    """Graded mesh on [0, 1] with exactly ``size`` nodes.

    Geometric spacing from ``head`` up to a crossover, uniform from there to
    1/2, uniform again on [1/2, 1], with the probe points inserted as exact
    nodes.  The geometric zone count is adjusted so deduplication lands on
    the requested size.
    """
    n_right = size // 4  # [1/2, 1]
    n_mid = size // 4  # [crossover, 1/2]
    crossover = 0.02
    right = np.linspace(0.5, 1.0, n_right + 1)
    mid = np.linspace(crossover, 0.5, n_mid + 1)
    fixed = np.concatenate(([0.0], mid, right, np.asarray(probes, dtype=np.float64)))
    n_geo = size - n_right - n_mid - 2
    for _ in range(4):
        geo = np.geomspace(head, crossover, n_geo + 1)
        mesh = np.unique(np.concatenate((fixed, geo)))
        if len(mesh) == size:
            return mesh
        n_geo -= len(mesh) - size
    raise RuntimeError(f"could not assemble a {size}-node mesh")


def apply_transfer_mu(f: Density, mesh: Optional[np.ndarray] = None) -> GridFunction:
    """One application of the transfer operator taken with respect to 1/x dx."""
    if mesh is None:
        mesh = f.mesh if isinstance(f, GridFunction) else farey_mesh()
    x = mesh
    vals = (_eval(f, x / (1.0 + x)) + x * _eval(f, 1.0 / (1.0 + x))) / (1.0 + x)
    return GridFunction(mesh, vals)


def apply_pf_lambda(g: Density, mesh: Optional[np.ndarray] = None) -> GridFunction:
    """One application of the Perron-Frobenius operator with respect to dx."""
    if mesh is None:
        mesh = g.mesh if isinstance(g, GridFunction) else farey_mesh()
    x = mesh
    w = 1.0 / (1.0 + x) ** 2
    vals = (_eval(g, x / (1.0 + x)) + _eval(g, 1.0 / (1.0 + x))) * w
    return GridFunction(mesh, vals)


def _eval(f: Density, x: np.ndarray) -> np.ndarray:
    return np.asarray(f(x), dtype=np.float64)


def conjugation_check(f: ClosedFormDensity, sample_points: Iterable[float]) -> float:
    """max |Tf - (1/h) P(h f)| over the samples, h(x) = 1/x."""
    pts = np.asarray(list(sample_points), dtype=np.float64)
    if np.any(pts <= 0) or np.any(pts >= 1):
        raise ValueError("sample points must lie in (0, 1)")
    u0 = pts / (1.0 + pts)
    u1 = 1.0 / (1.0 + pts)
    lhs = (f(u0) + pts * f(u1)) / (1.0 + pts)

    def hf(y):
        return f(y) / y

    rhs = pts * (hf(u0) + hf(u1)) / (1.0 + pts) ** 2
    return float(np.max(np.abs(lhs - rhs)))


def exact_iterate(f: Density, n: int, x: float) -> float:
    """T^n f(x) by expanding the full 2^n inverse-branch sum (oracle path).

    Each expansion step replaces a term w * g(y) of the sum by
    w/(1+y) * g(y/(1+y)) + w*y/(1+y) * g(1/(1+y)), so after n steps the value
    is an exact weighted sum of f over 2^n branch images of x.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    if n > 24:
        raise ValueError("branch-sum expansion limited to n <= 24")
    args = np.asarray([x], dtype=np.float64)
    weights = np.asarray([1.0], dtype=np.float64)
    for _ in range(n):
        denom = 1.0 + args
        new_args = np.concatenate((args / denom, 1.0 / denom))
        new_weights = np.concatenate((weights / denom, weights * args / denom))
        args, weights = new_args, new_weights
    return float(np.dot(weights, _eval(f, args)))


class TransferPlan:
    """Precomputed interpolation plan for fast repeated transfer applications.

    For a fixed mesh, f(x/(1+x)) and f(1/(1+x)) are gathers with constant
    indices and weights, so one application reduces to four gathers and a
    handful of vector operations.
    """

    def __init__(self, mesh: np.ndarray):
        self.mesh = mesh
        x = mesh
        self._i0, self._w0 = self._locate(x / (1.0 + x))
        self._i1, self._w1 = self._locate(1.0 / (1.0 + x))
        self._front = 1.0 / (1.0 + x)
        self._xfront = x / (1.0 + x)

    def _locate(self, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        mesh = self.mesh
        idx = np.searchsorted(mesh, pts, side="right") - 1
        idx = np.clip(idx, 0, len(mesh) - 2)
        span = mesh[idx + 1] - mesh[idx]
        w = (pts - mesh[idx]) / span
        return idx, w

    def apply(self, values: np.ndarray) -> np.ndarray:
        v0 = values[self._i0] * (1.0 - self._w0) + values[self._i0 + 1] * self._w0
        v1 = values[self._i1] * (1.0 - self._w1) + values[self._i1 + 1] * self._w1
        return self._front * v0 + self._xfront * v1

    def iterate(self, values: np.ndarray, count: int) -> np.ndarray:
        v = values
        for _ in range(count):
            v = self.apply(v)
        return v


@dataclass(frozen=True)
class ConeReport:
    min_slope: float
    max_second_difference: float

    @property
    def in_cone(self) -> bool:
        return self.min_slope >= -1e-9 and self.max_second_difference <= 1e-9


def cone_check(f: GridFunction) -> ConeReport:
    """Finite-difference monotonicity and concavity diagnostics.

    ``max_second_difference`` is the largest increase between consecutive
    chord slopes; non-positive values certify node-level concavity.
    """
    if len(f.mesh) < 3:
        raise ValueError("need at least 3 nodes")
    slopes = np.diff(f.values) / np.diff(f.mesh)
    return ConeReport(
        min_slope=float(np.min(slopes)),
        max_second_difference=float(np.max(np.diff(slopes))),
    )


def decreasing_on_A1_check(
    f: ClosedFormDensity,
    n_max: int,
    mesh: Optional[np.ndarray] = None,
    tol: float = 1e-9,
) -> tuple[bool, float]:
    """Verify T^{n+1} f <= T^n f + tol on the A1 nodes for all n < n_max.

    Returns (all_ok, worst_violation) where the violation is the largest
    observed increase (negative when the sequence strictly decreases).
    """
    if mesh is None:
        mesh = farey_mesh()
    plan = TransferPlan(mesh)
    a1 = mesh > 0.5
    values = _eval(f, mesh)
    worst = -np.inf
    ok = True
    for _ in range(n_max):
        nxt = plan.apply(values)
        jump = float(np.max(nxt[a1] - values[a1]))
        worst = max(worst, jump)
        if jump > tol:
            ok = False
        values = nxt
    return ok, worst


def wandering_rate(n: int) -> float:
    """W_n = log(n + 2), the measure of the first n preimages of A1 under 1/x dx."""
    if n < 0:
        raise ValueError("n must be >= 0")
    return log(n + 2)


def bn_sequence(n: int) -> float:
    """Return-sequence normalization n / log(n + 2) (exponent-one instance)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return n / log(n + 2)


def return_tail_measure(n: int) -> float:
    """1/x-measure of {x in A1 : first return time > n}, from first principles.

    The return time from x in (1/2, 1] is the first digit of 1/x - 1, so the
    set is [(n+1)/(n+2), 1] and its measure log((n+2)/(n+1)).  Summing over
    n telescopes to the wandering rate log(n+2), which pins the endpoint.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    return log(n + 2) - log(n + 1)


@dataclass(frozen=True)
class OperatorTrace:
    """One row of a uniformly-returning diagnostic run."""

    n: int
    W_n: float
    probes: tuple[float, ...]
    values: tuple[float, ...]
    products: tuple[float, ...]
    min_slope: float
    max_second_difference: float


def uniform_returning_trace(
    f: Density,
    schedule: Sequence[int],
    probes: Sequence[float] = DEFAULT_PROBES,
    mesh: Optional[np.ndarray] = None,
) -> list[OperatorTrace]:
    """Record W_n * T^n f at the probe nodes along an increasing schedule."""
    schedule = list(schedule)
    if schedule != sorted(schedule) or len(set(schedule)) != len(schedule):
        raise ValueError("schedule must be strictly increasing")
    if mesh is None:
        mesh = farey_mesh(probes=tuple(probes))
    probes_arr = np.asarray(probes, dtype=np.float64)
    if np.any(probes_arr <= 0.5) or np.any(probes_arr > 1.0):
        raise ValueError("probes must lie in (1/2, 1]")
    plan = TransferPlan(mesh)
    values = _eval(f, mesh)
    traces = []
    current = 0
    for n in schedule:
        values = plan.iterate(values, n - current)
        current = n
        gf = GridFunction(mesh, values)
        at_probes = tuple(float(v) for v in gf(probes_arr))
        w = wandering_rate(n)
        cone = cone_check(gf)
        traces.append(
            OperatorTrace(
                n=n,
                W_n=w,
                probes=tuple(float(p) for p in probes_arr),
                values=at_probes,
                products=tuple(w * v for v in at_probes),
                min_slope=cone.min_slope,
                max_second_difference=cone.max_second_difference,
            )
        )
    return traces


def mu_integral(f: GridFunction) -> float:
    """Integral of f against 1/x dx: trapezoid on the graded mesh plus a head
    term that treats f(x)/x as constant on [0, x_1] (exact for linear f)."""
    x = f.mesh
    v = f.values
    if x[0] != 0.0:
        raise ValueError("mesh must start at 0")
    integrand = v[1:] / x[1:]
    body = float(np.trapezoid(integrand, x[1:]))
    head = float(v[1])  # x_1 * (f(x_1)/x_1)
    return body + head
