"""Band-limited fields on the real 2n-torus and the (p,q)-form algebra on them.

Real axes are ordered (x_1, y_1, ..., x_n, y_n), each of period 1. A field is
stored by its grid values together with a per-axis bandwidth; products add
bandwidths and refuse to run when the result could no longer be represented
without aliasing. Because every field in play is a trigonometric polynomial
that the grid resolves exactly, spectral derivatives and grid means (which
pick out the zero Fourier mode) are exact up to roundoff.

Forms use the generator order dz^{i_1}..dz^{i_p} dz̄^{j_1}..dz̄^{j_q} with
strictly increasing I and J; every sign below is derived from that order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

__all__ = [
    "AliasRisk",
    "NonRealForm",
    "GridSpec",
    "ScalarField",
    "make_field",
    "field_from_values",
    "constant_field",
    "zero_field",
    "wirtinger_d",
    "wirtinger_dbar",
    "multiply",
    "Form",
    "wedge",
    "wedge_all",
    "wedge_power",
    "del_",
    "delbar",
    "ddbar",
    "conjugate",
    "integrate_top",
    "hermitian_entries",
    "form_from_hermitian",
    "flat_form",
    "PositivityReport",
    "is_positive",
    "form_to_json",
]

Key = Tuple[Tuple[int, ...], Tuple[int, ...]]


class AliasRisk(ValueError):
    """A product or mode does not fit the grid without aliasing."""


class NonRealForm(ValueError):
    """A (1,1)-form expected to be real is not conjugate-invariant."""


@dataclass(frozen=True)
class GridSpec:
    n: int
    resolutions: Tuple[int, ...]

    def __post_init__(self):
        res = tuple(int(m) for m in self.resolutions)
        object.__setattr__(self, "resolutions", res)
        if self.n < 1:
            raise ValueError("complex dimension must be positive")
        if len(res) != 2 * self.n:
            raise ValueError(f"need {2 * self.n} resolutions, got {len(res)}")
        if any(m < 1 for m in res):
            raise ValueError("resolutions must be >= 1")

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.resolutions

    @property
    def size(self) -> int:
        return int(np.prod(self.resolutions))

    def max_bandwidth(self) -> Tuple[int, ...]:
        """Largest per-axis bandwidth representable without aliasing."""
        return tuple((m - 1) // 2 for m in self.resolutions)

    def active_axes(self) -> Tuple[int, ...]:
        return tuple(a for a, m in enumerate(self.resolutions) if m > 1)

    def wavenumbers(self, axis: int) -> np.ndarray:
        m = self.resolutions[axis]
        k = np.fft.fftfreq(m, d=1.0 / m)
        shape = [1] * (2 * self.n)
        shape[axis] = m
        return k.reshape(shape)

    def coordinates(self, axis: int) -> np.ndarray:
        m = self.resolutions[axis]
        x = np.arange(m) / m
        shape = [1] * (2 * self.n)
        shape[axis] = m
        return x.reshape(shape)


def _check_bandwidth(grid: GridSpec, bw: Sequence[int], what: str):
    for a, (b, m) in enumerate(zip(bw, grid.resolutions)):
        if 2 * b >= m:
            raise AliasRisk(
                f"{what}: bandwidth {b} on axis {a} needs resolution >= {2 * b + 1}, grid has {m}")


class ScalarField:
    """Band-limited complex field sampled on a GridSpec."""

    __slots__ = ("grid", "values", "bandwidth")

    def __init__(self, grid: GridSpec, values: np.ndarray, bandwidth: Sequence[int]):
        values = np.asarray(values, dtype=np.complex128)
        if values.shape != grid.shape:
            raise ValueError(f"values shape {values.shape} != grid shape {grid.shape}")
        bw = tuple(int(b) for b in bandwidth)
        if len(bw) != 2 * grid.n:
            raise ValueError("bandwidth needs one entry per real axis")
        _check_bandwidth(grid, bw, "field")
        values.flags.writeable = False
        self.grid = grid
        self.values = values
        self.bandwidth = bw

    def __add__(self, other: "ScalarField") -> "ScalarField":
        _same_grid(self.grid, other.grid)
        return ScalarField(self.grid, self.values + other.values,
                           tuple(map(max, self.bandwidth, other.bandwidth)))

    def __sub__(self, other: "ScalarField") -> "ScalarField":
        _same_grid(self.grid, other.grid)
        return ScalarField(self.grid, self.values - other.values,
                           tuple(map(max, self.bandwidth, other.bandwidth)))

    def __neg__(self) -> "ScalarField":
        return ScalarField(self.grid, -self.values, self.bandwidth)

    def scale(self, c: complex) -> "ScalarField":
        return ScalarField(self.grid, self.values * c, self.bandwidth)

    def conj(self) -> "ScalarField":
        return ScalarField(self.grid, self.values.conj(), self.bandwidth)

    def mean(self) -> complex:
        return complex(self.values.mean())

    def max_abs(self) -> float:
        return float(np.abs(self.values).max()) if self.values.size else 0.0

    def is_real(self, tol: float = 1e-12) -> bool:
        scale = max(1.0, self.max_abs())
        return float(np.abs(self.values.imag).max()) <= tol * scale

    def modes(self, tol: float = 1e-14) -> Dict[Tuple[int, ...], complex]:
        """Fourier amplitudes above ``tol`` (relative to the largest)."""
        spec = np.fft.fftn(self.values) / self.grid.size
        mx = np.abs(spec).max()
        out = {}
        if mx == 0:
            return out
        for idx in zip(*np.nonzero(np.abs(spec) > tol * mx)):
            k = tuple(int(i) if i <= m // 2 else int(i) - m
                      for i, m in zip(idx, self.grid.resolutions))
            out[k] = complex(spec[idx])
        return out

    def __repr__(self):
        return f"ScalarField(shape={self.grid.shape}, bandwidth={self.bandwidth})"


def _same_grid(a: GridSpec, b: GridSpec):
    if a != b:
        raise ValueError("grid mismatch")


def field_from_values(grid: GridSpec, values: np.ndarray, bandwidth: Sequence[int]) -> ScalarField:
    return ScalarField(grid, values, bandwidth)


def zero_field(grid: GridSpec) -> ScalarField:
    return ScalarField(grid, np.zeros(grid.shape, dtype=np.complex128), (0,) * (2 * grid.n))


def constant_field(grid: GridSpec, c: complex) -> ScalarField:
    return ScalarField(grid, np.full(grid.shape, c, dtype=np.complex128), (0,) * (2 * grid.n))


def make_field(grid: GridSpec, modes: Mapping[Sequence[int], complex]) -> ScalarField:
    """Trigonometric polynomial sum_k amp_k exp(2 pi i k.x) sampled on the grid."""
    spec = np.zeros(grid.shape, dtype=np.complex128)
    bw = [0] * (2 * grid.n)
    for k, amp in modes.items():
        k = tuple(int(v) for v in k)
        if len(k) != 2 * grid.n:
            raise ValueError(f"mode {k} needs {2 * grid.n} entries")
        for a, (ka, m) in enumerate(zip(k, grid.resolutions)):
            if 2 * abs(ka) > m - 1:
                raise AliasRisk(f"mode {k} aliases on axis {a} (resolution {m})")
            bw[a] = max(bw[a], abs(ka))
        idx = tuple(ka % m for ka, m in zip(k, grid.resolutions))
        spec[idx] += amp
    values = np.fft.ifftn(spec) * grid.size if modes else spec
    return ScalarField(grid, values, bw)


def _wirtinger(f: ScalarField, j: int, sign: int) -> ScalarField:
    # sign=+1: d/dz_j = (d/dx - i d/dy)/2 ; sign=-1: d/dzbar_j = (d/dx + i d/dy)/2
    grid = f.grid
    if not 1 <= j <= grid.n:
        raise ValueError(f"index {j} outside 1..{grid.n}")
    ax, ay = 2 * (j - 1), 2 * (j - 1) + 1
    mx, my = grid.resolutions[ax], grid.resolutions[ay]
    if (mx == 1 or f.bandwidth[ax] == 0) and (my == 1 or f.bandwidth[ay] == 0):
        return ScalarField(grid, np.zeros(grid.shape, dtype=np.complex128), f.bandwidth)
    axes = [a for a in (ax, ay) if grid.resolutions[a] > 1]
    spec = np.fft.fftn(f.values, axes=axes)
    mult = np.pi * 1j * grid.wavenumbers(ax) + sign * np.pi * grid.wavenumbers(ay)
    return ScalarField(grid, np.fft.ifftn(spec * mult, axes=axes), f.bandwidth)


def wirtinger_d(f: ScalarField, j: int) -> ScalarField:
    return _wirtinger(f, j, +1)


def wirtinger_dbar(f: ScalarField, j: int) -> ScalarField:
    return _wirtinger(f, j, -1)


def _sum_bw(grid: GridSpec, a: Sequence[int], b: Sequence[int], what: str) -> Tuple[int, ...]:
    bw = tuple(x + y for x, y in zip(a, b))
    _check_bandwidth(grid, bw, what)
    return bw


def multiply(f: ScalarField, g: ScalarField) -> ScalarField:
    _same_grid(f.grid, g.grid)
    bw = _sum_bw(f.grid, f.bandwidth, g.bandwidth, "product")
    return ScalarField(f.grid, f.values * g.values, bw)


# -- sign helpers ----------------------------------------------------------

def _merge_sign(a: Tuple[int, ...], b: Tuple[int, ...]) -> Tuple[int, Optional[Tuple[int, ...]]]:
    """Sign of sorting the concatenation a+b, or (0, None) if they overlap."""
    if set(a) & set(b):
        return 0, None
    inversions = sum(1 for x in a for y in b if x > y)
    return (-1) ** inversions, tuple(sorted(a + b))


# -- forms -----------------------------------------------------------------

class Form:
    """(p,q)-form: sparse map from (I, J) to coefficient fields."""

    __slots__ = ("grid", "p", "q", "components")

    def __init__(self, grid: GridSpec, p: int, q: int,
                 components: Optional[Mapping[Key, ScalarField]] = None):
        if not (0 <= p <= grid.n and 0 <= q <= grid.n):
            raise ValueError(f"degree ({p},{q}) outside 0..{grid.n}")
        comps = {}
        for (I, J), f in (components or {}).items():
            I, J = tuple(I), tuple(J)
            if len(I) != p or len(J) != q:
                raise ValueError(f"key {(I, J)} inconsistent with degree ({p},{q})")
            if list(I) != sorted(set(I)) or list(J) != sorted(set(J)):
                raise ValueError(f"key {(I, J)} must be strictly increasing")
            if any(not 1 <= i <= grid.n for i in I + J):
                raise ValueError(f"key {(I, J)} out of range")
            _same_grid(grid, f.grid)
            comps[(I, J)] = f
        self.grid = grid
        self.p = p
        self.q = q
        self.components: Dict[Key, ScalarField] = dict(sorted(comps.items()))

    @property
    def degree(self) -> Tuple[int, int]:
        return (self.p, self.q)

    @property
    def total_degree(self) -> int:
        return self.p + self.q

    @classmethod
    def zero(cls, grid: GridSpec, p: int, q: int) -> "Form":
        return cls(grid, min(p, grid.n), min(q, grid.n), {})

    @classmethod
    def function(cls, f: ScalarField) -> "Form":
        return cls(f.grid, 0, 0, {((), ()): f})

    def component(self, I: Sequence[int], J: Sequence[int]) -> ScalarField:
        f = self.components.get((tuple(I), tuple(J)))
        return f if f is not None else zero_field(self.grid)

    def _combine(self, other: "Form", sign: int) -> "Form":
        _same_grid(self.grid, other.grid)
        if self.degree != other.degree:
            raise ValueError(f"degree mismatch {self.degree} vs {other.degree}")
        out = dict(self.components)
        for k, f in other.components.items():
            g = f if sign > 0 else -f
            out[k] = out[k] + g if k in out else g
        return Form(self.grid, self.p, self.q, out)

    def __add__(self, other: "Form") -> "Form":
        return self._combine(other, +1)

    def __sub__(self, other: "Form") -> "Form":
        return self._combine(other, -1)

    def __neg__(self) -> "Form":
        return self.scale(-1)

    def scale(self, c: complex) -> "Form":
        return Form(self.grid, self.p, self.q, {k: f.scale(c) for k, f in self.components.items()})

    def times(self, f: ScalarField) -> "Form":
        """Multiply every coefficient by the scalar field ``f``."""
        return Form(self.grid, self.p, self.q,
                    {k: multiply(f, g) for k, g in self.components.items()})

    def max_abs(self) -> float:
        return max((f.max_abs() for f in self.components.values()), default=0.0)

    def is_zero(self, tol: float = 0.0) -> bool:
        return self.max_abs() <= tol

    def __repr__(self):
        return f"Form(({self.p},{self.q}), {len(self.components)} components)"


def wedge(a: Form, b: Form) -> Form:
    _same_grid(a.grid, b.grid)
    grid = a.grid
    p, q = a.p + b.p, a.q + b.q
    if p > grid.n or q > grid.n:
        return Form.zero(grid, p, q)
    base = (-1) ** (a.q * b.p)
    acc: Dict[Key, np.ndarray] = {}
    bws: Dict[Key, Tuple[int, ...]] = {}
    for (I, J), f in a.components.items():
        for (K, L), g in b.components.items():
            s1, IK = _merge_sign(I, K)
            if not s1:
                continue
            s2, JL = _merge_sign(J, L)
            if not s2:
                continue
            key = (IK, JL)
            bw = _sum_bw(grid, f.bandwidth, g.bandwidth, "wedge")
            term = f.values * g.values
            if base * s1 * s2 < 0:
                term = -term
            if key in acc:
                acc[key] = acc[key] + term
                bws[key] = tuple(map(max, bws[key], bw))
            else:
                acc[key] = term
                bws[key] = bw
    return Form(grid, p, q, {k: ScalarField(grid, v, bws[k]) for k, v in acc.items()})


def wedge_all(forms: Iterable[Form]) -> Form:
    forms = list(forms)
    if not forms:
        raise ValueError("empty wedge")
    out = forms[0]
    for f in forms[1:]:
        out = wedge(out, f)
    return out


def wedge_power(a: Form, k: int) -> Form:
    """k-th wedge power; the zeroth power is the constant 1."""
    if k < 0:
        raise ValueError("negative power")
    if k == 0:
        return Form.function(constant_field(a.grid, 1.0))
    out = a
    for _ in range(k - 1):
        out = wedge(out, a)
    return out


def del_(a: Form) -> Form:
    grid = a.grid
    if a.p >= grid.n:
        return Form.zero(grid, a.p + 1, a.q)
    acc: Dict[Key, ScalarField] = {}
    for (I, J), f in a.components.items():
        for j in range(1, grid.n + 1):
            if j in I:
                continue
            s, IJ = _merge_sign((j,), I)
            df = wirtinger_d(f, j)
            key = (IJ, J)
            df = df if s > 0 else -df
            acc[key] = acc[key] + df if key in acc else df
    return Form(grid, a.p + 1, a.q, acc)


def delbar(a: Form) -> Form:
    grid = a.grid
    if a.q >= grid.n:
        return Form.zero(grid, a.p, a.q + 1)
    acc: Dict[Key, ScalarField] = {}
    for (I, J), f in a.components.items():
        for j in range(1, grid.n + 1):
            if j in J:
                continue
            # dz̄^j moves past the p holomorphic generators, then sorts into J
            s, JJ = _merge_sign((j,), J)
            s *= (-1) ** a.p
            df = wirtinger_dbar(f, j)
            key = (I, JJ)
            df = df if s > 0 else -df
            acc[key] = acc[key] + df if key in acc else df
    return Form(grid, a.p, a.q + 1, acc)


def ddbar(f: ScalarField) -> Form:
    """The (1,1)-form ∂∂̄f of a scalar field."""
    return del_(delbar(Form.function(f)))


def conjugate(a: Form) -> Form:
    s = (-1) ** (a.p * a.q)
    comps = {(J, I): (f.conj() if s > 0 else -f.conj()) for (I, J), f in a.components.items()}
    return Form(a.grid, a.q, a.p, comps)


def integrate_top(a: Form) -> complex:
    n = a.grid.n
    if a.degree != (n, n):
        raise ValueError(f"integrate_top needs degree ({n},{n}), got {a.degree}")
    full = tuple(range(1, n + 1))
    f = a.components.get((full, full))
    if f is None:
        return 0j
    return f.mean() * (-1) ** (n * (n - 1) // 2) * (-2j) ** n


def hermitian_entries(a: Form) -> List[List[ScalarField]]:
    if a.degree != (1, 1):
        raise ValueError("hermitian_entries needs a (1,1)-form")
    n = a.grid.n
    return [[a.component((j,), (k,)).scale(-1j) for k in range(1, n + 1)] for j in range(1, n + 1)]


def form_from_hermitian(h: Sequence[Sequence[ScalarField]]) -> Form:
    """The (1,1)-form i sum h_{jk} dz^j ∧ dz̄^k."""
    n = len(h)
    grid = h[0][0].grid
    comps = {}
    for j in range(n):
        for k in range(n):
            f = h[j][k]
            if f.max_abs() > 0:
                comps[((j + 1,), (k + 1,))] = f.scale(1j)
    return Form(grid, 1, 1, comps)


def flat_form(grid: GridSpec) -> Form:
    one = constant_field(grid, 1.0)
    return Form(grid, 1, 1, {((j,), (j,)): one.scale(1j) for j in range(1, grid.n + 1)})


@dataclass
class PositivityReport:
    positive: bool
    min_pivot: float

    def __bool__(self):
        return self.positive


def _hermitian_array(a: Form) -> np.ndarray:
    n = a.grid.n
    H = np.empty((a.grid.size, n, n), dtype=np.complex128)
    for j in range(n):
        for k in range(n):
            H[:, j, k] = -1j * a.component((j + 1,), (k + 1,)).values.reshape(-1)
    return H


def is_positive(a: Form, tol: float = 1e-12) -> PositivityReport:
    """Pointwise LDL* pivots of h; positive iff all pivots are > 0."""
    if a.degree != (1, 1):
        raise ValueError("is_positive needs a (1,1)-form")
    H = _hermitian_array(a)
    herm_err = float(np.abs(H - np.conj(np.swapaxes(H, 1, 2))).max())
    scale = max(1.0, float(np.abs(H).max()))
    if herm_err > tol * scale:
        raise NonRealForm(f"form is not real: Hermitian defect {herm_err:.3e}")
    n = a.grid.n
    M = H.copy()
    min_piv = np.inf
    for k in range(n):
        piv = M[:, k, k].real
        min_piv = min(min_piv, float(piv.min()))
        if not np.all(piv > 0):
            return PositivityReport(False, float(min_piv))
        if k + 1 < n:
            col = M[:, k + 1:, k]
            M[:, k + 1:, k + 1:] -= col[:, :, None] * np.conj(col)[:, None, :] / piv[:, None, None]
    return PositivityReport(True, float(min_piv))


def form_to_json(a: Form, tol: float = 1e-14) -> str:
    """Debug dump: degree, component keys and Fourier mode tables."""
    doc = {
        "degree": [a.p, a.q],
        "resolutions": list(a.grid.resolutions),
        "components": [
            {
                "I": list(I),
                "J": list(J),
                "bandwidth": list(f.bandwidth),
                "modes": [
                    {"k": list(k), "re": v.real, "im": v.imag}
                    for k, v in sorted(f.modes(tol).items())
                ],
            }
            for (I, J), f in a.components.items()
        ],
    }
    return json.dumps(doc, indent=2)
