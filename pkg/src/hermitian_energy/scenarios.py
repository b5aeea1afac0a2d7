"""Test geometries on the flat torus: metrics, admissible potentials, paths, quadrature."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from .spectral import (
    Form,
    GridSpec,
    ScalarField,
    constant_field,
    ddbar,
    del_,
    flat_form,
    form_from_hermitian,
    is_positive,
    make_field,
)

__all__ = [
    "PositivityUnreachable",
    "MetricScenario",
    "Potential",
    "PotentialPath",
    "QuadratureRule",
    "minimal_resolution",
    "default_grid",
    "random_real_field",
    "random_complex_field",
    "random_form",
    "flat_metric",
    "nonkaehler_metric",
    "kaehler_perturbed_metric",
    "make_metric",
    "omega_phi",
    "admissible_potential",
    "make_path",
    "sample",
    "gauss_legendre",
]

MAX_HALVINGS = 40


class PositivityUnreachable(RuntimeError):
    """Geometric halving did not produce a positive form."""


def minimal_resolution(n: int, bandwidth: int = 1) -> int:
    """Per-axis resolution making every product in the built-in suites alias-free.

    The widest integrands multiply at most n + 2 bandwidth-limited factors, so
    the resolution has to exceed 2 (n + 2) b; two extra points give slack.
    """
    return 2 * (n + 2) * bandwidth + 3


def default_grid(n: int, active: Optional[Sequence[int]] = None, bandwidth: int = 1) -> GridSpec:
    """Grid with the minimal alias-free resolution on the active axes, 1 elsewhere.

    By default the axes x_1, y_1 and x_2 are active: the first complex
    direction varies in both real directions and a second one varies too, so
    holomorphic and antiholomorphic derivatives differ and more than one
    index of every form is populated.
    """
    if active is None:
        active = (0, 1, 2) if n >= 2 else (0, 1)
    m = minimal_resolution(n, bandwidth)
    res = [1] * (2 * n)
    for a in active:
        res[a] = m
    return GridSpec(n, tuple(res))


def _rng(seed: int, stream: int = 0) -> np.random.Generator:
    # counter-based generator: seed fixes the key, stream offsets the counter
    return np.random.Generator(np.random.Philox(key=[int(seed) & (2**64 - 1), int(stream)]))


def _mode_set(grid: GridSpec, bandwidth: int):
    axes = [a for a, m in enumerate(grid.resolutions) if m > 1]
    ranges = [range(-bandwidth, bandwidth + 1)] * len(axes)
    for combo in itertools.product(*ranges):
        k = [0] * (2 * grid.n)
        for a, v in zip(axes, combo):
            k[a] = v
        yield tuple(k)


def random_real_field(grid: GridSpec, rng: np.random.Generator, bandwidth: int = 1,
                      include_constant: bool = True) -> ScalarField:
    """Real trigonometric polynomial built from conjugate mode pairs."""
    modes: Dict[Tuple[int, ...], complex] = {}
    for k in _mode_set(grid, bandwidth):
        neg = tuple(-v for v in k)
        if k in modes or neg in modes:
            continue
        if k == neg:
            if include_constant:
                modes[k] = complex(rng.standard_normal())
            continue
        c = complex(rng.standard_normal(), rng.standard_normal()) / 2
        modes[k] = c
        modes[neg] = c.conjugate()
    f = make_field(grid, modes)
    return ScalarField(grid, f.values.real.astype(np.complex128), f.bandwidth)


def random_complex_field(grid: GridSpec, rng: np.random.Generator, bandwidth: int = 1) -> ScalarField:
    modes = {k: complex(rng.standard_normal(), rng.standard_normal()) / 2
             for k in _mode_set(grid, bandwidth)}
    return make_field(grid, modes)


def random_form(grid: GridSpec, p: int, q: int, rng: np.random.Generator, bandwidth: int = 1) -> Form:
    """(p,q)-form with independent random complex coefficients on every index pair."""
    comps = {}
    for I in itertools.combinations(range(1, grid.n + 1), p):
        for J in itertools.combinations(range(1, grid.n + 1), q):
            comps[(I, J)] = random_complex_field(grid, rng, bandwidth)
    return Form(grid, p, q, comps)


def _normalize(f: ScalarField, target: float = 1.0) -> ScalarField:
    m = f.max_abs()
    return f if m == 0 else f.scale(target / m)


@dataclass
class MetricScenario:
    grid: GridSpec
    omega: Form
    kind: str
    epsilon: float
    seed: int
    min_pivot: float = 1.0

    @property
    def n(self) -> int:
        return self.grid.n


def flat_metric(n: int, grid: GridSpec) -> MetricScenario:
    if grid.n != n:
        raise ValueError("grid dimension mismatch")
    return MetricScenario(grid, flat_form(grid), "flat", 0.0, 0, 1.0)


def _shrink_until_positive(base: Form, pert: Form, epsilon: float) -> Tuple[Form, float, float]:
    eps = float(epsilon)
    for _ in range(MAX_HALVINGS + 1):
        om = base + pert.scale(eps)
        rep = is_positive(om)
        if rep.positive:
            return om, eps, rep.min_pivot
        eps *= 0.5
    raise PositivityUnreachable(f"no positive metric after {MAX_HALVINGS} halvings")


def nonkaehler_metric(n: int, grid: GridSpec, epsilon: float, seed: int) -> MetricScenario:
    """Flat metric plus a random non-closed real (1,1) perturbation."""
    if grid.n != n:
        raise ValueError("grid dimension mismatch")
    if epsilon == 0:
        raise ValueError("epsilon = 0 gives a closed metric; a non-Kähler scenario needs epsilon != 0")
    if not grid.active_axes():
        raise ValueError("a non-closed metric needs at least one active axis")
    rng = _rng(seed, 1)
    h = [[None] * n for _ in range(n)]
    for j in range(n):
        h[j][j] = random_real_field(grid, rng)
        for k in range(j + 1, n):
            h[j][k] = random_complex_field(grid, rng)
            h[k][j] = h[j][k].conj()
    scale = max(f.max_abs() for row in h for f in row)
    rho = form_from_hermitian([[f.scale(1.0 / scale) for f in row] for row in h])
    omega, eps, piv = _shrink_until_positive(flat_form(grid), rho, epsilon)
    d_omega = del_(omega)
    if d_omega.max_abs() < abs(eps) / 10:
        raise ValueError("perturbation is too close to closed; pick another seed")
    return MetricScenario(grid, omega, "nonkaehler_perturbed", eps, seed, piv)


def kaehler_perturbed_metric(n: int, grid: GridSpec, epsilon: float, seed: int) -> MetricScenario:
    """Flat metric plus eps * i∂∂̄rho; closed by construction."""
    if grid.n != n:
        raise ValueError("grid dimension mismatch")
    rng = _rng(seed, 2)
    rho = random_real_field(grid, rng)
    pert = ddbar(rho).scale(1j)
    m = pert.max_abs()
    if m > 0:
        pert = pert.scale(1.0 / m)
    omega, eps, piv = _shrink_until_positive(flat_form(grid), pert, epsilon)
    return MetricScenario(grid, omega, "kaehler_perturbed", eps, seed, piv)


def make_metric(kind: str, n: int, grid: GridSpec, epsilon: float = 0.3, seed: int = 0) -> MetricScenario:
    if kind == "flat":
        return flat_metric(n, grid)
    if kind == "nonkaehler_perturbed":
        return nonkaehler_metric(n, grid, epsilon, seed)
    if kind == "kaehler_perturbed":
        return kaehler_perturbed_metric(n, grid, epsilon, seed)
    raise ValueError(f"unknown metric kind {kind!r}")


def omega_phi(omega: Form, phi: ScalarField) -> Form:
    """ω + i∂∂̄φ."""
    return omega + ddbar(phi).scale(1j)


@dataclass
class Potential:
    phi: ScalarField
    scenario: MetricScenario
    scale: float = 1.0
    min_pivot: float = 1.0


def admissible_potential(scenario: MetricScenario, seed: Optional[int] = None,
                         field: Optional[ScalarField] = None, amplitude: float = 0.6) -> Potential:
    """Scale a candidate by halving until ω_φ is positive.

    With ``seed`` the candidate is a random bandwidth-1 real field whose
    complex Hessian has max entry ``amplitude``; with ``field`` it is taken
    as given.
    """
    if (seed is None) == (field is None):
        raise ValueError("pass exactly one of seed or field")
    if field is None:
        cand = random_real_field(scenario.grid, _rng(seed, 3))
        hess = ddbar(cand).max_abs()
        if hess > 0:
            cand = cand.scale(amplitude / hess)
    else:
        cand = field
    if not cand.is_real():
        raise ValueError("potential must be real-valued")
    s = 1.0
    for _ in range(MAX_HALVINGS + 1):
        phi = cand.scale(s)
        rep = is_positive(omega_phi(scenario.omega, phi))
        if rep.positive:
            return Potential(phi, scenario, s, rep.min_pivot)
        s *= 0.5
    raise PositivityUnreachable(f"no admissible scaling after {MAX_HALVINGS} halvings")


@dataclass(frozen=True)
class QuadratureRule:
    kind: str
    order: int
    nodes: np.ndarray
    weights: np.ndarray


def gauss_legendre(q: int) -> QuadratureRule:
    """Gauss-Legendre rule on [0, 1]; exact through degree 2q - 1."""
    if q < 1:
        raise ValueError("order must be >= 1")
    x, w = np.polynomial.legendre.leggauss(q)
    return QuadratureRule("gauss_legendre", q, (x + 1) / 2, w / 2)


@dataclass
class PotentialPath:
    """φ_t = (1-t)φ' + tφ'' + t(1-t)ψ; ψ = 0 for linear paths, constant for shifted ones."""

    kind: str
    start: ScalarField
    end: ScalarField
    midpoint: Optional[ScalarField] = None

    def __post_init__(self):
        if self.kind not in ("linear", "bridge", "shifted"):
            raise ValueError(f"unknown path kind {self.kind!r}")
        if self.kind == "linear" and self.midpoint is not None:
            raise ValueError("linear paths carry no midpoint term")
        if self.kind != "linear" and self.midpoint is None:
            raise ValueError(f"{self.kind} path needs a midpoint term")
        if self.kind == "shifted" and max(self.midpoint.bandwidth) != 0:
            raise ValueError("shifted paths bend by a constant only")


def sample(path: PotentialPath, t: float) -> Tuple[ScalarField, ScalarField]:
    a, b = path.start, path.end
    phi = a.scale(1 - t) + b.scale(t)
    dphi = b - a
    if path.midpoint is not None:
        phi = phi + path.midpoint.scale(t * (1 - t))
        dphi = dphi + path.midpoint.scale(1 - 2 * t)
    return phi, dphi


def _path_positive(omega: Form, path: PotentialPath, ts: Sequence[float]) -> bool:
    return all(is_positive(omega_phi(omega, sample(path, t)[0])).positive for t in ts)


def make_path(kind: str, omega: Form, start: ScalarField, end: ScalarField,
              rule: QuadratureRule, midpoint: Optional[ScalarField] = None,
              seed: Optional[int] = None, amplitude: float = 0.3) -> PotentialPath:
    """Build a path and check ω_{φ_t} > 0 at the quadrature nodes.

    For bridge paths the bend ψ (given, or random from ``seed``) is halved
    until every node is admissible. Shifted paths bend by a constant.
    """
    ts = list(rule.nodes) + [0.0, 1.0]
    if kind == "linear":
        path = PotentialPath("linear", start, end)
        if not _path_positive(omega, path, ts):
            raise PositivityUnreachable("linear path leaves the admissible set")
        return path
    if kind == "shifted":
        c = midpoint if midpoint is not None else constant_field(start.grid, 1.0 if seed is None else
                                                                   float(_rng(seed, 4).standard_normal()))
        path = PotentialPath("shifted", start, end, c)
        if not _path_positive(omega, path, ts):
            raise PositivityUnreachable("shifted path leaves the admissible set")
        return path
    if kind != "bridge":
        raise ValueError(f"unknown path kind {kind!r}")
    if midpoint is None:
        if seed is None:
            raise ValueError("bridge path needs a midpoint field or a seed")
        psi = random_real_field(start.grid, _rng(seed, 5))
        hess = ddbar(psi).max_abs()
        if hess > 0:
            psi = psi.scale(amplitude / hess)
    else:
        psi = midpoint
    for _ in range(MAX_HALVINGS + 1):
        path = PotentialPath("bridge", start, end, psi)
        if _path_positive(omega, path, ts):
            return path
        psi = psi.scale(0.5)
    raise PositivityUnreachable("bridge path could not be made admissible")
