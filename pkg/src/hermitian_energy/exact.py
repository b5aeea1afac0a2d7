"""Exact rational and Gaussian-rational coefficient algebra.

Everything here runs on ``fractions.Fraction`` and Python integers, so
factorial ratios, recursion expansions and the 16-unknown linear system
for the Aubin-Yau constants carry no rounding error at all.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import comb, factorial, gcd
from typing import Callable, Dict, List, Mapping, Optional, Sequence

Rational = Fraction

__all__ = [
    "Rational",
    "GaussianRational",
    "CoefficientVector",
    "binomial",
    "mabuchi_weights",
    "mabuchi_weights_sign_corrected",
    "recursion_expand",
    "closed_form",
    "c2_solution",
    "substitute_c2",
    "AY_NAMES",
    "ay_system",
    "solve_exact",
    "ay_constants",
    "ay_closed_forms",
    "ay_residuals",
    "beta_moment",
    "scalar_identity_suite",
    "ScalarIdentityReport",
]


def _q(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


@dataclass(frozen=True)
class GaussianRational:
    """Complex number re + i*im with exact rational parts."""

    re: Fraction = Fraction(0)
    im: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "re", _q(self.re))
        object.__setattr__(self, "im", _q(self.im))

    @staticmethod
    def coerce(x) -> "GaussianRational":
        if isinstance(x, GaussianRational):
            return x
        if isinstance(x, complex):
            raise TypeError("floating complex values are not exact")
        return GaussianRational(_q(x), Fraction(0))

    def conjugate(self) -> "GaussianRational":
        return GaussianRational(self.re, -self.im)

    def __add__(self, other):
        o = GaussianRational.coerce(other)
        return GaussianRational(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __neg__(self):
        return GaussianRational(-self.re, -self.im)

    def __sub__(self, other):
        return self + (-GaussianRational.coerce(other))

    def __rsub__(self, other):
        return GaussianRational.coerce(other) - self

    def __mul__(self, other):
        o = GaussianRational.coerce(other)
        return GaussianRational(self.re * o.re - self.im * o.im,
                                self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = GaussianRational.coerce(other)
        den = o.re * o.re + o.im * o.im
        if den == 0:
            raise ZeroDivisionError("division by zero Gaussian rational")
        num = self * o.conjugate()
        return GaussianRational(num.re / den, num.im / den)

    def __rtruediv__(self, other):
        return GaussianRational.coerce(other) / self

    def __eq__(self, other):
        try:
            o = GaussianRational.coerce(other)
        except TypeError:
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        return hash((self.re, self.im))

    def is_real(self) -> bool:
        return self.im == 0

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __str__(self):
        # "-6i", "3/2", "1/2+3i"
        if self.im == 0:
            return str(self.re)
        im = "" if abs(self.im) == 1 else str(abs(self.im))
        if self.re == 0:
            return ("-" if self.im < 0 else "") + im + "i"
        sign = "-" if self.im < 0 else "+"
        return f"{self.re}{sign}{im}i"

    __repr__ = __str__


I_UNIT = GaussianRational(0, 1)


@dataclass
class CoefficientVector:
    """Formal combination c2_coeff*c_2 + sum_k j_coeffs[k]*J_k."""

    c2_coeff: Fraction = Fraction(0)
    j_coeffs: Dict[int, Fraction] = field(default_factory=dict)

    def normalized(self) -> "CoefficientVector":
        return CoefficientVector(_q(self.c2_coeff),
                                 {k: _q(v) for k, v in sorted(self.j_coeffs.items()) if v != 0})

    def __eq__(self, other):
        if not isinstance(other, CoefficientVector):
            return NotImplemented
        a, b = self.normalized(), other.normalized()
        return a.c2_coeff == b.c2_coeff and a.j_coeffs == b.j_coeffs

    def __add__(self, other: "CoefficientVector") -> "CoefficientVector":
        js = dict(self.j_coeffs)
        for k, v in other.j_coeffs.items():
            js[k] = js.get(k, Fraction(0)) + v
        return CoefficientVector(self.c2_coeff + other.c2_coeff, js).normalized()

    def scale(self, s) -> "CoefficientVector":
        s = _q(s)
        return CoefficientVector(self.c2_coeff * s,
                                 {k: v * s for k, v in self.j_coeffs.items()}).normalized()

    def is_zero(self) -> bool:
        n = self.normalized()
        return n.c2_coeff == 0 and not n.j_coeffs

    def to_json(self) -> dict:
        n = self.normalized()
        return {"c2": str(n.c2_coeff), "J": {str(k): str(v) for k, v in n.j_coeffs.items()}}


def binomial(n: int, k: int) -> int:
    if n < 0:
        raise ValueError("n must be nonnegative")
    if k < 0 or k > n:
        return 0
    return comb(n, k)


def mabuchi_weights(n: int) -> List[GaussianRational]:
    """Weights a_1..a_{2n-2} of the correction terms of the path functional."""
    if n < 3:
        raise ValueError("mabuchi_weights needs n >= 3")
    a1 = GaussianRational(0, Fraction(-n * (n - 1), 2))
    out = [a1, a1.conjugate()]
    for k in range(1, n - 1):
        w = GaussianRational((-1) ** k * binomial(n, k + 2))
        out += [w, w]
    return out


def mabuchi_weights_sign_corrected(n: int) -> List[GaussianRational]:
    """Weights with the real pairs negated: a_{2k+1} = a_{2k+2} = (-1)^{k+1} C(n, k+2).

    Diagnostic only. Redoing the first reduction step by hand gives
    2 I^0 / (n(n-1)i) = I^1/a_1 - I^2/a_2 - c_1, which makes I^0 + I^1 + I^2
    equal +a_1 c_1; the higher pairs then have to contribute -a_1 c_1, which
    flips every real weight. With these weights the path functional is
    numerically path independent for n >= 3; with ``mabuchi_weights`` it is not.
    """
    out = mabuchi_weights(n)
    return out[:2] + [-w for w in out[2:]]


def _check_range(n: int, i: int):
    if n < 4:
        raise ValueError("recursion needs n >= 4")
    if not 2 <= i <= n - 1:
        raise ValueError(f"index i={i} outside 2..{n - 1}")


def recursion_expand(n: int, i: int) -> CoefficientVector:
    """Iterate c_{k+1} = -(k+2)/(n-k-1) c_k + J_k starting from the symbol c_2."""
    _check_range(n, i)
    c = CoefficientVector(Fraction(1), {})
    for k in range(2, i):
        c = c.scale(Fraction(-(k + 2), n - (k + 1))) + CoefficientVector(Fraction(0), {k: Fraction(1)})
    return c


def closed_form(n: int, i: int) -> CoefficientVector:
    """Factorial closed form of the recursion, evaluated independently."""
    _check_range(n, i)
    top = factorial(i + 1) * factorial(n - i - 1)
    c2 = Fraction((-1) ** (i - 2) * top, factorial(3) * factorial(n - 3))
    js = {}
    for k in range(2, i):
        js[k] = Fraction((-1) ** (i - 1 - k) * top, factorial(k + 2) * factorial(n - k - 2))
    return CoefficientVector(c2, js).normalized()


def c2_solution(n: int) -> CoefficientVector:
    """c_2 in terms of J_2..J_{n-2}, forced by c_{n-1} = 0."""
    if n < 3:
        raise ValueError("c2_solution needs n >= 3")
    js = {}
    for k in range(2, n - 1):
        js[k] = Fraction((-1) ** k * factorial(3) * factorial(n - 3),
                         factorial(k + 2) * factorial(n - k - 2))
    return CoefficientVector(Fraction(0), js).normalized()


def substitute_c2(vec: CoefficientVector, c2: CoefficientVector) -> CoefficientVector:
    """Replace the c_2 symbol in ``vec`` by the expansion ``c2`` (itself c_2-free)."""
    rest = CoefficientVector(Fraction(0), dict(vec.j_coeffs))
    return rest + c2.scale(vec.c2_coeff)


# -- Aubin-Yau constants ---------------------------------------------------

AY_NAMES = ("a11", "a21", "b11", "b21", "a12", "a22", "b12", "b22",
            "c1", "c2", "d1", "d2", "e1", "e2", "f1", "f2")


def ay_system(n: int):
    """Augmented rows [coeffs..., rhs] of the 16 constraint equations.

    Unknowns follow AY_NAMES. Each row carries a label naming the constraint.
    """
    if n < 3:
        raise ValueError("ay_system needs n >= 3")
    idx = {name: j for j, name in enumerate(AY_NAMES)}
    r = Fraction(n, n + 1)
    rows, labels = [], []

    def row(terms: Mapping[str, Fraction], rhs: Fraction, label: str):
        v = [Fraction(0)] * 16
        for name, c in terms.items():
            v[idx[name]] += _q(c)
        rows.append(v + [_q(rhs)])
        labels.append(label)

    # n/(n+1) x_1 - (x_2 - 1) = 1/(n+1), rewritten as n/(n+1) x_1 - x_2 = 1/(n+1) - 1
    for lo, hi, tag in (("a11", "a12", "a1"), ("a21", "a22", "a2"),
                        ("b11", "b12", "b1"), ("b21", "b22", "b2")):
        row({lo: r, hi: -1}, Fraction(1, n + 1) - 1, f"ratio_{tag}")
    for lo, hi, rhs in (("c1", "c2", Fraction(-1, 2)), ("d1", "d2", Fraction(-1, 2)),
                        ("e1", "e2", Fraction(0)), ("f1", "f2", Fraction(0))):
        row({lo: r, hi: -1}, rhs, f"ratio_{lo[0]}")
    # (n+1)(x_2 - 1) - x_1 = rhs  ->  (n+1) x_2 - x_1 = rhs + (n+1)
    for lo, hi, rhs, tag in (("a11", "a12", -(n + 1), "a1"),
                             ("a21", "a22", Fraction(1, n - 1), "a2"),
                             ("b11", "b12", -(n + 1), "b1"),
                             ("b21", "b22", Fraction(1, n - 1), "b2")):
        row({hi: n + 1, lo: -1}, _q(rhs) + (n + 1), f"upper_{tag}")
    for lo, hi, rhs in (("c1", "c2", Fraction(0)), ("d1", "d2", Fraction(0)),
                        ("e1", "e2", Fraction(-1, 2)), ("f1", "f2", Fraction(-1, 2))):
        row({hi: n + 1, lo: -1}, rhs, f"upper_{lo[0]}")
    return rows, labels


def solve_exact(aug: Sequence[Sequence[Fraction]]) -> List[Fraction]:
    """Fraction-free (Bareiss) elimination; pivot = first nonzero in column."""
    m = len(aug)
    # clear denominators row by row so the elimination runs on integers
    M = []
    for r in aug:
        den = 1
        for x in r:
            den = den * x.denominator // gcd(den, x.denominator)
        M.append([int(x * den) for x in r])
    prev = 1
    for k in range(m):
        p = next((r for r in range(k, m) if M[r][k] != 0), None)
        if p is None:
            raise ValueError("singular system")
        if p != k:
            M[k], M[p] = M[p], M[k]
        for r in range(k + 1, m):
            for c in range(k + 1, m + 1):
                M[r][c] = (M[r][c] * M[k][k] - M[r][k] * M[k][c]) // prev
            M[r][k] = 0
        prev = M[k][k]
    x = [Fraction(0)] * m
    for k in range(m - 1, -1, -1):
        s = Fraction(M[k][m]) - sum(Fraction(M[k][c]) * x[c] for c in range(k + 1, m))
        x[k] = s / M[k][k]
    return x


def ay_constants(n: int) -> Dict[str, Fraction]:
    rows, _ = ay_system(n)
    sol = solve_exact(rows)
    return dict(zip(AY_NAMES, sol))


def ay_closed_forms(n: int) -> Dict[str, Fraction]:
    """Closed-form values of the sixteen constants."""
    if n < 3:
        raise ValueError("needs n >= 3")
    F = Fraction
    x11 = F(-n, n - 1)
    x12 = F(-n, n * n - 1)
    x21 = F(n, (n - 1) ** 2)
    x22 = F(n, n + 1) * (1 + F(n, (n - 1) ** 2))
    c1 = F(-(n + 1), 2 * (n - 1))
    e2 = F(-n, 2 * (n * n - 1))
    small = F(-1, 2 * (n - 1))
    return {"a11": x11, "b11": x11, "a12": x12, "b12": x12,
            "a21": x21, "b21": x21, "a22": x22, "b22": x22,
            "c1": c1, "d1": c1, "e2": e2, "f2": e2,
            "c2": small, "d2": small, "e1": small, "f1": small}


def ay_residuals(n: int, values: Mapping[str, Fraction]) -> Dict[str, Fraction]:
    """Exact residual of every constraint row for the given constants."""
    rows, labels = ay_system(n)
    out = {}
    for r, lab in zip(rows, labels):
        lhs = sum(r[j] * _q(values[name]) for j, name in enumerate(AY_NAMES))
        out[lab] = lhs - r[16]
    return out


def beta_moment(i: int, n: int) -> Fraction:
    """Exact value of the integral of t^i (1-t)^(n-i) over [0, 1]."""
    if i < 0 or i > n:
        raise ValueError("need 0 <= i <= n")
    return Fraction(factorial(i) * factorial(n - i), factorial(n + 1))


@dataclass
class ScalarIdentityReport:
    n: int
    passed: bool
    first_failure: Optional[int] = None
    failing_identity: Optional[str] = None


def _lin_identity(i: int, n: int):
    return i * (n - 1 - i) + (i + 1) ** 2, (i + 1) + i * n


def _sq_identity(i: int, n: int):
    return (n - 1 - i) ** 2 + (i + 1) * (n - i - 2), n * n - (n + 1) * (i + 1)


def scalar_identity_suite(n: int, perturb: Optional[Callable[[int, int], int]] = None
                          ) -> ScalarIdentityReport:
    """Check both index identities for i = 0..n-1.

    ``perturb(i, n)`` is added to the left side of the first identity; it is
    a negative-control hook.
    """
    for i in range(n):
        lhs, rhs = _lin_identity(i, n)
        if perturb is not None:
            lhs += perturb(i, n)
        if lhs != rhs:
            return ScalarIdentityReport(n, False, i, "linear")
        lhs, rhs = _sq_identity(i, n)
        if lhs != rhs:
            return ScalarIdentityReport(n, False, i, "quadratic")
    return ScalarIdentityReport(n, True)
