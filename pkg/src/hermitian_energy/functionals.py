"""Energy functionals on Hermitian tori and the identity suites that tie them together.

Notation used throughout (all integrals over the torus, i = sqrt(-1)):

    X_k = ∫ φ ω_φ^k ∧ ω^{n-2-k} ∧ i∂ω ∧ ∂̄φ
    Y_k = ∫ φ ω_φ^k ∧ ω^{n-2-k} ∧ i∂̄ω ∧ ∂φ
    G_k = ∫ i∂φ ∧ ∂̄φ ∧ ω_φ^k ∧ ω^{n-1-k}

X and Y are the torsion corrections that vanish for closed ω; G is the
manifestly nonnegative gradient energy.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .exact import ay_constants, binomial, mabuchi_weights, mabuchi_weights_sign_corrected
from .scenarios import (
    MetricScenario,
    _rng,
    random_form,
    random_real_field,
    PotentialPath,
    QuadratureRule,
    gauss_legendre,
    omega_phi,
    sample,
)
from .spectral import (
    Form,
    ScalarField,
    constant_field,
    ddbar,
    del_,
    delbar,
    integrate_top,
    is_positive,
    flat_form,
    wedge,
    wedge_all,
    wedge_power,
)

__all__ = [
    "ImaginaryResidue",
    "MARGIN_KEYS",
    "InadmissiblePath",
    "residual",
    "Geometry",
    "volume",
    "path_weights",
    "mabuchi_path",
    "mabuchi_explicit",
    "mabuchi_two_point",
    "mabuchi_kaehler",
    "i_ay",
    "j_ay",
    "err_term",
    "err_term_expanded",
    "torsion_terms",
    "IntermediateReport",
    "intermediates",
    "identity_suite_s3",
    "ProofIdentityReport",
    "proof_identity_suite_s2",
    "inequality_report",
    "cocycle_check",
    "shift_laws",
    "substrate_residuals",
    "FunctionalReport",
    "functional_report",
]

IMAG_TOL = 1e-10


class ImaginaryResidue(ArithmeticError):
    """A functional that must be real came out with a sizeable imaginary part."""


class InadmissiblePath(ValueError):
    """ω_{φ_t} fails to be positive at a quadrature node."""


def residual(lhs: complex, rhs: complex) -> float:
    return float(abs(lhs - rhs) / (1 + abs(lhs) + abs(rhs)))


def _real(z: complex, scale: float = 0.0, what: str = "value") -> float:
    ref = max(1.0, abs(z), scale)
    if abs(z.imag) > IMAG_TOL * ref:
        raise ImaginaryResidue(f"{what}: imaginary part {z.imag:.3e} (scale {ref:.3e})")
    return float(z.real)


class Geometry:
    """A metric ω together with cached ∂ω, ∂̄ω, powers of ω and the volume."""

    def __init__(self, omega: Union[Form, MetricScenario]):
        if isinstance(omega, MetricScenario):
            omega = omega.omega
        if omega.degree != (1, 1):
            raise ValueError("metric must be a (1,1)-form")
        self.omega = omega
        self.grid = omega.grid
        self.n = omega.grid.n
        self.d_omega = del_(omega)
        self.dbar_omega = delbar(omega)
        self.i_d_omega = self.d_omega.scale(1j)
        self.i_dbar_omega = self.dbar_omega.scale(1j)
        self._pow: Dict[int, Form] = {0: Form.function(constant_field(self.grid, 1.0)), 1: omega}
        self.V = _real(integrate_top(self.power(self.n)), what="volume")

    def power(self, k: int) -> Form:
        if k not in self._pow:
            self._pow[k] = wedge(self.power(k - 1), self.omega)
        return self._pow[k]

    def at(self, phi: ScalarField) -> "PotentialTerms":
        return PotentialTerms(self, phi)


_GEOM_CACHE: List[Tuple[Form, Geometry]] = []


def _geom(omega) -> Geometry:
    if isinstance(omega, Geometry):
        return omega
    if isinstance(omega, MetricScenario):
        omega = omega.omega
    for f, g in _GEOM_CACHE:
        if f is omega:
            return g
    g = Geometry(omega)
    _GEOM_CACHE.append((omega, g))
    del _GEOM_CACHE[:-8]
    return g


class PotentialTerms:
    """Per-potential building blocks: ω_φ, its powers, ∂φ, ∂̄φ, i∂∂̄φ."""

    def __init__(self, geom: Geometry, phi: ScalarField):
        self.g = geom
        self.phi = phi
        self.f = Form.function(phi)
        self.dphi = del_(self.f)
        self.dbarphi = delbar(self.f)
        self.hess = ddbar(phi).scale(1j)
        self.omega_phi = geom.omega + self.hess
        self._pow: Dict[int, Form] = {0: geom.power(0), 1: self.omega_phi}
        self._hpow: Dict[int, Form] = {0: geom.power(0), 1: self.hess}
        self._mixed: Dict[Tuple[int, int], Form] = {}

    def power(self, k: int) -> Form:
        if k not in self._pow:
            self._pow[k] = wedge(self.power(k - 1), self.omega_phi)
        return self._pow[k]

    def hess_power(self, k: int) -> Form:
        if k not in self._hpow:
            self._hpow[k] = wedge(self.hess_power(k - 1), self.hess)
        return self._hpow[k]

    def mixed(self, i: int, j: int) -> Form:
        """ω_φ^i ∧ ω^j."""
        if (i, j) not in self._mixed:
            self._mixed[(i, j)] = wedge(self.power(i), self.g.power(j))
        return self._mixed[(i, j)]

    # torsion and gradient integrals
    def X(self, k: int) -> complex:
        n = self.g.n
        return integrate_top(wedge_all([self.mixed(k, n - 2 - k), self.g.i_d_omega,
                                        self.dbarphi.times(self.phi)]))

    def Y(self, k: int) -> complex:
        n = self.g.n
        return integrate_top(wedge_all([self.mixed(k, n - 2 - k), self.g.i_dbar_omega,
                                        self.dphi.times(self.phi)]))

    def G(self, k: int) -> complex:
        n = self.g.n
        grad = wedge(self.dphi, self.dbarphi).scale(1j)
        return integrate_top(wedge(grad, self.mixed(k, n - 1 - k)))

    def phi_mixed(self, i: int, j: int) -> complex:
        """∫ φ ω_φ^i ∧ ω^j with i + j = n."""
        return integrate_top(self.mixed(i, j).times(self.phi))


def volume(omega) -> float:
    return _geom(omega).V


# -- Mabuchi functional ----------------------------------------------------

def path_weights(n: int, sign_corrected: bool = False) -> List[complex]:
    """Correction weights a_1..a_{2n-2} as complex numbers; for n = 2 only a_1 = -i, a_2 = i."""
    if n == 2:
        return [-1j, 1j]
    w = mabuchi_weights_sign_corrected(n) if sign_corrected else mabuchi_weights(n)
    return [complex(a) for a in w]


def _mabuchi_integrand(g: Geometry, phi: ScalarField, dphi: ScalarField,
                       weights: Sequence[complex]) -> Tuple[complex, float]:
    """Inner torus integral of the path functional at one time, plus a magnitude scale."""
    n = g.n
    pt = g.at(phi)
    vel = Form.function(dphi)
    d_vel, dbar_vel = del_(vel), delbar(vel)
    terms = [integrate_top(pt.power(n).times(dphi))]
    # a_1 ∫ ∂ω∧ω_φ^{n-2}∧(∂̄φ̇·φ) + a_2 ∫ ∂̄ω∧ω_φ^{n-2}∧(∂φ̇·φ)
    terms.append(weights[0] * integrate_top(wedge_all([g.d_omega, pt.power(n - 2), dbar_vel.times(phi)])))
    terms.append(weights[1] * integrate_top(wedge_all([g.dbar_omega, pt.power(n - 2), d_vel.times(phi)])))
    for i in range(1, n - 1):
        tail = wedge(pt.power(n - i - 2), pt.hess_power(i - 1))
        t3 = wedge_all([pt.dphi, g.d_omega, dbar_vel, pt.dbarphi, tail])
        t4 = wedge_all([pt.dbarphi, g.dbar_omega, d_vel, pt.dphi, tail])
        terms.append(weights[2 * i] * integrate_top(t3))
        terms.append(weights[2 * i + 1] * integrate_top(t4))
    return sum(terms), float(sum(abs(t) for t in terms))


def _check_node(g: Geometry, phi: ScalarField, t: float):
    rep = is_positive(omega_phi(g.omega, phi))
    if not rep.positive:
        raise InadmissiblePath(f"ω_φ not positive at t={t:.6f} (min pivot {rep.min_pivot:.3e})")


def mabuchi_path(omega, path: PotentialPath, rule: Optional[QuadratureRule] = None,
                 weights: Optional[Sequence[complex]] = None) -> float:
    """Time quadrature of the path functional along ``path``."""
    g = _geom(omega)
    rule = rule or gauss_legendre(g.n + 3)
    weights = list(weights) if weights is not None else path_weights(g.n)
    total, scale = 0j, 0.0
    for t, w in zip(rule.nodes, rule.weights):
        phi, dphi = sample(path, float(t))
        _check_node(g, phi, float(t))
        val, sc = _mabuchi_integrand(g, phi, dphi, weights)
        total += w * val
        scale += w * sc
    return _real(total / g.V, scale / g.V, "mabuchi_path")


def mabuchi_two_point(omega, phi1: ScalarField, phi2: ScalarField,
                      rule: Optional[QuadratureRule] = None,
                      weights: Optional[Sequence[complex]] = None) -> float:
    return mabuchi_path(omega, PotentialPath("linear", phi1, phi2), rule, weights)


def torsion_terms(omega, phi: ScalarField) -> Tuple[List[complex], List[complex]]:
    """The lists (X_0..X_{n-2}) and (Y_0..Y_{n-2})."""
    g = _geom(omega)
    pt = g.at(phi)
    return [pt.X(k) for k in range(g.n - 1)], [pt.Y(k) for k in range(g.n - 1)]


def _explicit_parts(g: Geometry, pt: PotentialTerms):
    n = g.n
    base = sum(Fraction(1, n + 1) * pt.phi_mixed(i, n - i) for i in range(n + 1))
    X = [pt.X(k) for k in range(n - 1)]
    Y = [pt.Y(k) for k in range(n - 1)]
    return base, X, Y


def mabuchi_explicit(omega, phi: ScalarField) -> float:
    """Closed form of the functional from 0 to φ (straight path tφ integrated in t)."""
    g = _geom(omega)
    pt = g.at(phi)
    base, X, Y = _explicit_parts(g, pt)
    corr = sum((k + 1) / 2 * (-X[k] + Y[k]) for k in range(g.n - 1))
    scale = abs(base) + sum((k + 1) / 2 * (abs(X[k]) + abs(Y[k])) for k in range(g.n - 1))
    return _real((base + corr) / g.V, scale / g.V, "mabuchi_explicit")


def mabuchi_kaehler(omega, phi: ScalarField, rule: Optional[QuadratureRule] = None) -> float:
    """(1/V) ∫_0^1 ∫ φ ω_{tφ}^n dt, the functional without torsion corrections."""
    g = _geom(omega)
    rule = rule or gauss_legendre(g.n + 3)
    total = 0j
    for t, w in zip(rule.nodes, rule.weights):
        pt = g.at(phi.scale(float(t)))
        total += w * integrate_top(pt.power(g.n).times(phi))
    return _real(total / g.V, what="mabuchi_kaehler")


# -- Aubin-Yau functionals -------------------------------------------------

def _gradient_sum(g: Geometry, pt: PotentialTerms, weights: Sequence[float]) -> Tuple[complex, float]:
    vals = [w * pt.G(k) for k, w in enumerate(weights) if w != 0]
    return sum(vals, 0j), float(sum(abs(v) for v in vals))


def i_ay(omega, phi: ScalarField, mode: str = "gradient") -> float:
    g = _geom(omega)
    n = g.n
    pt = g.at(phi)
    if mode == "gradient":
        val, sc = _gradient_sum(g, pt, [1.0] * n)
        return _real(val / g.V, sc / g.V, "i_ay gradient")
    if mode != "direct":
        raise ValueError(f"unknown mode {mode!r}")
    main = pt.phi_mixed(0, n) - pt.phi_mixed(n, 0)
    X = [pt.X(k) for k in range(n - 1)]
    Y = [pt.Y(k) for k in range(n - 1)]
    corr = n / 2 * (-sum(X) + sum(Y))
    sc = abs(main) + n / 2 * sum(abs(x) + abs(y) for x, y in zip(X, Y))
    return _real((main + corr) / g.V, sc / g.V, "i_ay direct")


def j_ay(omega, phi: ScalarField, mode: str = "gradient") -> float:
    g = _geom(omega)
    n = g.n
    pt = g.at(phi)
    if mode == "gradient":
        val, sc = _gradient_sum(g, pt, [(n - k) / (n + 1) for k in range(n)])
        return _real(val / g.V, sc / g.V, "j_ay gradient")
    if mode != "direct":
        raise ValueError(f"unknown mode {mode!r}")
    L = mabuchi_explicit(g, phi)
    first = pt.phi_mixed(0, n) / g.V
    X = [pt.X(k) for k in range(n - 1)]
    Y = [pt.Y(k) for k in range(n - 1)]
    corr = n / (2 * g.V) * (-sum(X) + sum(Y))
    sc = abs(L) + abs(first) + n / (2 * g.V) * sum(abs(x) + abs(y) for x, y in zip(X, Y))
    return _real(-L + first + corr, sc, "j_ay direct")


def err_term(omega, phi: ScalarField) -> float:
    """∫ω^n − ∫ω_φ^n."""
    g = _geom(omega)
    pt = g.at(phi)
    return _real(integrate_top(g.power(g.n)) - integrate_top(pt.power(g.n)), g.V, "err_term")


def err_term_expanded(omega, phi: ScalarField) -> float:
    """Binomial expansion −Σ_{k≥1} C(n,k) ∫ ω^{n-k} ∧ (i∂∂̄φ)^k, an independent route to err_term."""
    g = _geom(omega)
    pt = g.at(phi)
    n = g.n
    tot = -sum(binomial(n, k) * integrate_top(wedge(g.power(n - k), pt.hess_power(k)))
               for k in range(1, n + 1))
    return _real(tot, g.V, "err_term_expanded")


# -- intermediate functionals and their identities ------------------------

@dataclass
class IntermediateReport:
    I_bullet: float
    J_bullet: float
    A: float
    B: float
    C: float
    D: float
    E: float
    F: float
    A1: float
    A2: float
    B1: float
    B2: float

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)


def _intermediate_values(g: Geometry, pt: PotentialTerms, rule: QuadratureRule):
    n = g.n
    V = g.V
    X = [pt.X(k) for k in range(n - 1)]
    Y = [pt.Y(k) for k in range(n - 1)]
    I_b = (pt.phi_mixed(0, n) - pt.phi_mixed(n, 0)) / V
    J_b = 0j
    for s, w in zip(rule.nodes, rule.weights):
        ps = g.at(pt.phi.scale(float(s)))
        J_b += w * integrate_top((g.power(n) - ps.power(n)).times(pt.phi))
    J_b /= V
    vals = {
        "I_bullet": I_b,
        "J_bullet": J_b,
        "A": sum((k + 1) / (2 * V) * -X[k] for k in range(n - 1)),
        "B": sum((k + 1) / (2 * V) * Y[k] for k in range(n - 1)),
        "C": sum(k * n / (n + 1) * X[k] for k in range(1, n - 1)) / V,
        "D": sum(k * n / (n + 1) * -Y[k] for k in range(1, n - 1)) / V,
        "E": sum(n * n / V * X[k] for k in range(n - 2)),
        "F": sum(n * n / V * -Y[k] for k in range(n - 2)),
        "A1": sum((k + 1) / (2 * V) * -X[k] for k in range(n - 2)),
        "A2": (n - 1) / (2 * V) * -X[n - 2],
        "B1": sum((k + 1) / (2 * V) * Y[k] for k in range(n - 2)),
        "B2": (n - 1) / (2 * V) * Y[n - 2],
    }
    return vals


def intermediates(omega, phi: ScalarField, rule: Optional[QuadratureRule] = None) -> IntermediateReport:
    g = _geom(omega)
    if g.n < 3:
        raise ValueError("intermediate functionals need n >= 3")
    rule = rule or gauss_legendre(g.n + 3)
    vals = _intermediate_values(g, g.at(phi), rule)
    scale = sum(abs(v) for v in vals.values())
    return IntermediateReport(**{k: _real(complex(v), scale, k) for k, v in vals.items()})


def identity_suite_s3(omega, phi: ScalarField, rule: Optional[QuadratureRule] = None,
                      constants: Optional[Dict[str, Fraction]] = None) -> Dict[str, float]:
    """Residuals of the intermediate-functional identities and of the assembled I, J."""
    g = _geom(omega)
    n = g.n
    if n < 3:
        raise ValueError("identity suite needs n >= 3")
    rule = rule or gauss_legendre(n + 3)
    pt = g.at(phi)
    r = intermediates(g, phi, rule)
    V = g.V
    Gs = [_real(pt.G(k), what="gradient term") for k in range(n)]
    g1 = sum(k / (n + 1) * Gs[k] for k in range(1, n)) / V
    g2 = sum((n - 1 - k) * Gs[k] for k in range(n)) / V
    lhs1 = n / (n + 1) * r.I_bullet - r.J_bullet
    lhs2 = (n + 1) * r.J_bullet - r.I_bullet
    out = {
        "eq_3_14": residual(lhs1, g1 - 2 * r.A / (n + 1) + r.C),
        "eq_3_15": residual(lhs1, g1 - 2 * r.B / (n + 1) + r.D),
        "eq_3_17": residual(lhs1, g1 - (r.A + r.B) / (n + 1) + (r.C + r.D) / 2),
        "eq_3_21": residual(lhs2, g2 + r.E + 2 * (n + 1) * r.A1 - 2 * r.A2 / (n - 1)),
        "eq_3_25": residual(lhs2, g2 + r.F + 2 * (n + 1) * r.B1 - 2 * r.B2 / (n - 1)),
        "eq_3_26": residual(lhs2, g2 + (r.E + r.F) / 2 + (n + 1) * (r.A1 + r.B1)
                            - (r.A2 + r.B2) / (n - 1)),
        "split_A": residual(r.A1 + r.A2, r.A),
        "split_B": residual(r.B1 + r.B2, r.B),
    }
    L = mabuchi_explicit(g, phi)
    out["J_bullet_vs_L"] = residual(r.J_bullet, pt_phi_omega_n(g, pt) / V - L + r.A + r.B)
    c = {k: float(v) for k, v in (constants or ay_constants(n)).items()}
    I_asm = (r.I_bullet + c["a11"] * r.A1 + c["a21"] * r.A2 + c["b11"] * r.B1 + c["b21"] * r.B2
             + c["c1"] * r.C + c["d1"] * r.D + c["e1"] * r.E + c["f1"] * r.F)
    J_asm = (r.J_bullet + (c["a12"] - 1) * r.A1 + (c["a22"] - 1) * r.A2 + (c["b12"] - 1) * r.B1
             + (c["b22"] - 1) * r.B2 + c["c2"] * r.C + c["d2"] * r.D + c["e2"] * r.E + c["f2"] * r.F)
    I_closed = i_ay(g, phi, "gradient")
    J_closed = j_ay(g, phi, "gradient")
    out["eq_3_27_vs_3_43"] = residual(I_asm, I_closed)
    out["eq_3_28_vs_3_44"] = residual(J_asm, J_closed)
    out["eq_3_27_vs_3_43_direct"] = residual(I_asm, i_ay(g, phi, "direct"))
    out["eq_3_28_vs_3_44_direct"] = residual(J_asm, j_ay(g, phi, "direct"))
    return out


def pt_phi_omega_n(g: Geometry, pt: PotentialTerms) -> float:
    return _real(pt.phi_mixed(0, g.n), what="∫φω^n")


# -- identities for the two-parameter family (ψ, u = ∂ψ/∂s, v = ∂ψ/∂t) --------

@dataclass
class ProofIdentityReport:
    n: int
    residuals: Dict[str, float]
    A: Dict[int, complex]
    B: Dict[int, complex]
    H: Dict[int, complex]
    I: Dict[int, complex]
    master_sum: complex
    master_scale: float
    reduced: Dict[int, complex] = field(default_factory=dict)

    def master_residual(self, weights: Sequence[complex]) -> float:
        """Master cancellation recomputed with other weights (reduced terms I^k / a_k are reused)."""
        terms = [self.reduced[0]] + [w * self.reduced[k + 1] for k, w in enumerate(weights)]
        return float(abs(sum(terms)) / (1 + sum(abs(t) for t in terms)))

    def to_dict(self) -> dict:
        cz = lambda z: [z.real, z.imag]
        return {
            "n": self.n,
            "residuals": self.residuals,
            "A": {str(k): cz(v) for k, v in self.A.items()},
            "B": {str(k): cz(v) for k, v in self.B.items()},
            "H": {str(k): cz(v) for k, v in self.H.items()},
            "I": {str(k): cz(v) for k, v in self.I.items()},
            "master_sum": cz(self.master_sum),
            "master_scale": self.master_scale,
            "reduced": {str(k): cz(v) for k, v in self.reduced.items()},
        }


def proof_identity_suite_s2(omega, psi: ScalarField, u: ScalarField, v: ScalarField,
                            weights: Optional[Sequence[complex]] = None) -> ProofIdentityReport:
    g = _geom(omega)
    n = g.n
    if n < 3:
        raise ValueError("the identity web needs n >= 3")
    P = g.at(psi)
    rep = is_positive(P.omega_phi)
    if not rep.positive:
        raise ValueError(f"ω_ψ is not positive (min pivot {rep.min_pivot:.3e})")
    a = list(weights) if weights is not None else path_weights(n)
    fu, fv = Form.function(u), Form.function(v)
    du, dbu, dv, dbv = del_(fu), delbar(fu), del_(fv), delbar(fv)
    iddu = ddbar(u).scale(1j)
    iddv = ddbar(v).scale(1j)
    dpsi, dbpsi = P.dphi, P.dbarphi
    dw, dbw = g.d_omega, g.dbar_omega
    I1 = 1j
    top = integrate_top

    def Ppow(k):
        return P.power(k)

    def Q(k):
        return P.hess_power(k)

    A: Dict[int, complex] = {}
    B: Dict[int, complex] = {}
    H: Dict[int, complex] = {}
    res: Dict[str, float] = {}

    # i = 1
    A[1] = (n - 2) * top(wedge_all([dbu.times(psi), Ppow(n - 3), dw, iddv.scale(-1)]))
    B[1] = (n - 2) * top(wedge_all([dbv.times(psi), Ppow(n - 3), dw, iddu]))
    S1 = -(n - 2) * I1 * top(wedge_all([dpsi, dw, dbu, dbv, Ppow(n - 3)]))
    res["eq_2_31"] = residual(A[1] + B[1], S1)
    H[1] = (-top(wedge_all([dv, dbu, dw, dbpsi, Ppow(n - 3)]))
            + top(wedge_all([du, dbv, dw, dbpsi, Ppow(n - 3)])))
    AB1 = A[1] + B[1]
    res["eq_2_46"] = residual(H[1] + np.conj(H[1]),
                              AB1 / (-(n - 2) * I1) + np.conj(AB1) / ((n - 2) * I1))

    # 2 <= i <= n-2
    for i in range(2, n - 1):
        c = n - i - 1
        tail = wedge(Ppow(n - i - 2), Q(i - 2))
        A[i] = c * top(wedge_all([dpsi, dbpsi, dw, dbu, tail, iddv]))
        B[i] = c * top(wedge_all([dpsi, dbpsi, dw, dbv, tail, iddu.scale(-1)]))
        tail1 = wedge(Ppow(n - i - 2), Q(i - 1))
        S = c * top(wedge_all([dpsi, dw, dbu, dbv, tail1]))
        res[f"eq_2_87_i{i}"] = residual(A[i] + B[i], S)
        H[i] = (-top(wedge_all([dv, dbu, dw, dbpsi, tail1]))
                + top(wedge_all([du, dbv, dw, dbpsi, tail1])))
        ABi = A[i] + B[i]
        res[f"eq_2_98_i{i}"] = residual(H[i] + np.conj(H[i]), (ABi + np.conj(ABi)) / c)
    # the factor n - i - 1 vanishes at i = n - 1
    A[n - 1] = 0j
    B[n - 1] = 0j

    # reduced expressions for I^0, I^1, ..., I^{2n-2}
    I: Dict[int, complex] = {}
    nn = n * (n - 1)
    I[0] = (-nn * I1 * top(wedge_all([Ppow(n - 2), dw, dbv.times(u)]))
            - nn * I1 * top(wedge_all([Ppow(n - 2), dbw, du.times(v)])))
    I0_raw = (n * top(wedge(Ppow(n - 1), iddv).times(u)) - n * top(wedge(Ppow(n - 1), iddu).times(v)))
    res["I0_reduced_vs_raw"] = residual(I[0], I0_raw)

    q1 = (-top(wedge_all([dbu.times(v), Ppow(n - 2), dw]))
          + top(wedge_all([dbv.times(u), Ppow(n - 2), dw])) + A[1] + B[1])
    q2 = (-top(wedge_all([du.times(v), Ppow(n - 2), dbw]))
          + top(wedge_all([dv.times(u), Ppow(n - 2), dbw])) + np.conj(A[1] + B[1]))
    I[1] = a[0] * q1
    I[2] = a[1] * q2
    c1 = AB1 - np.conj(AB1)
    res["eq_2_30"] = residual(2 * I[0] / (nn * I1), q1 - q2 + c1)
    res["eq_2_30_sign_corrected"] = residual(2 * I[0] / (nn * I1), q1 - q2 - c1)
    red: Dict[int, complex] = {0: I[0], 1: q1, 2: q2}

    def ab(i):
        return A.get(i, 0j) + B.get(i, 0j)

    for i in range(1, n - 1):
        if i == 1:
            q_odd = H[1] + 2 / (-(n - 2) * I1) * ab(1) + ab(2)
            q_even = np.conj(H[1]) + 2 / ((n - 2) * I1) * np.conj(ab(1)) + np.conj(ab(2))
        else:
            f = (i + 1) / (n - (i + 1))
            q_odd = H[i] + f * ab(i) + ab(i + 1)
            q_even = np.conj(H[i]) + f * np.conj(ab(i)) + np.conj(ab(i + 1))
        I[2 * i + 1] = a[2 * i] * q_odd
        I[2 * i + 2] = a[2 * i + 1] * q_even
        red[2 * i + 1], red[2 * i + 2] = q_odd, q_even
    total = sum(I.values())
    scale = float(sum(abs(x) for x in I.values()))
    res["eq_2_114"] = float(abs(total) / (1 + scale))
    rep = ProofIdentityReport(n, res, A, B, H, I, complex(total), scale, red)
    res["eq_2_114_sign_corrected"] = rep.master_residual(path_weights(n, sign_corrected=True))
    return rep


# -- inequalities, cocycle, shift laws --------------------------------------

def inequality_report(omega, phi: ScalarField) -> Dict[str, float]:
    """I, J and the six comparison margins between them (each should be >= 0).

    The chain with I - J in the middle is checked through its lower link
    J/(n+1) <= I - J and its upper link n I/(n+1) <= n J; the outer comparison
    J/n <= J/(n+1) would force J <= 0 and is not one of the margins.
    """
    g = _geom(omega)
    n = g.n
    I = i_ay(g, phi, "gradient")
    J = j_ay(g, phi, "gradient")
    return {
        "I": I,
        "J": J,
        "eq_1_22": n / (n + 1) * I - J,
        "eq_1_23": (n + 1) * J - I,
        "eq_1_24_lower": J - I / (n + 1),
        "eq_1_25_lower": I - (n + 1) / n * J,
        "eq_1_26_lower": (I - J) - J / (n + 1),
        "eq_1_26_upper": n * J - n / (n + 1) * I,
    }


MARGIN_KEYS = ("eq_1_22", "eq_1_23", "eq_1_24_lower",
               "eq_1_25_lower", "eq_1_26_lower", "eq_1_26_upper")


def cocycle_check(omega, phi1: ScalarField, phi2: ScalarField, phi3: ScalarField,
                  rule: Optional[QuadratureRule] = None,
                  weights: Optional[Sequence[complex]] = None) -> Dict[str, float]:
    g = _geom(omega)
    l12 = mabuchi_two_point(g, phi1, phi2, rule, weights)
    l21 = mabuchi_two_point(g, phi2, phi1, rule, weights)
    l23 = mabuchi_two_point(g, phi2, phi3, rule, weights)
    l31 = mabuchi_two_point(g, phi3, phi1, rule, weights)
    scale = abs(l12) + abs(l23) + abs(l31)
    return {
        "antisymmetry": abs(l12 + l21) / (1 + abs(l12) + abs(l21)),
        "three_cycle": abs(l12 + l23 + l31) / (1 + scale),
    }


def shift_laws(omega, phi1: ScalarField, phi2: ScalarField, C: float,
               rule: Optional[QuadratureRule] = None) -> Dict[str, float]:
    g = _geom(omega)
    const = constant_field(g.grid, C)
    shifted = mabuchi_two_point(g, phi1, phi1 + const, rule)
    vol_phi = _real(integrate_top(g.at(phi1).power(g.n)), g.V, "∫ω_φ^n")
    oracle = C * vol_phi / g.V
    diff = mabuchi_two_point(g, phi1, phi2 + const, rule) - mabuchi_two_point(g, phi1, phi2, rule)
    oracle2 = C * (1 - err_term(g, phi2) / g.V)
    return {
        "shift": residual(shifted, oracle),
        "shift_two_point": residual(diff, oracle2),
        "shift_value": shifted,
        "shift_oracle": oracle,
        "shift_printed_plus_sign": C * (1 + err_term(g, phi1) / g.V),
    }


def substrate_residuals(grid, seed: int = 0) -> Dict[str, float]:
    """Checks of the discrete calculus: ∂² = ∂̄² = ∂∂̄ + ∂̄∂ = 0, Stokes, flat volume.

    Each value is a magnitude divided by 1 + the size of the inputs it came from.
    """
    n = grid.n
    rng = _rng(seed, 6)
    f = Form.function(random_real_field(grid, rng))
    a = random_form(grid, 1, 1, rng)
    out = {}
    for name, x in (("function", f), ("form_1_1", a)):
        da, dba = del_(x), delbar(x)
        sc = 1 + da.max_abs() + dba.max_abs()
        out[f"dd_{name}"] = del_(da).max_abs() / sc
        out[f"dbardbar_{name}"] = delbar(dba).max_abs() / sc
        out[f"anticommutator_{name}"] = (del_(dba) + delbar(da)).max_abs() / sc
    b = random_form(grid, n - 1, n, rng)
    c = random_form(grid, n, n - 1, rng)
    db, dbc = del_(b), delbar(c)
    out["stokes_del"] = abs(integrate_top(db)) / (1 + db.max_abs())
    out["stokes_delbar"] = abs(integrate_top(dbc)) / (1 + dbc.max_abs())
    exact = 2 ** n * float(np.prod(np.arange(1, n + 1)))
    out["flat_volume"] = residual(integrate_top(wedge_power(flat_form(grid), n)), exact)
    return out


@dataclass
class FunctionalReport:
    V_omega: float
    L_path: float
    L_explicit: float
    I_direct: float
    I_gradient: float
    J_direct: float
    J_gradient: float
    Err: float
    margins: Dict[str, float]
    residuals: Dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def functional_report(omega, phi: ScalarField, rule: Optional[QuadratureRule] = None) -> FunctionalReport:
    g = _geom(omega)
    rule = rule or gauss_legendre(g.n + 3)
    zero = constant_field(g.grid, 0.0)
    L_path = mabuchi_two_point(g, zero, phi, rule)
    L_exp = mabuchi_explicit(g, phi)
    Id, Ig = i_ay(g, phi, "direct"), i_ay(g, phi, "gradient")
    Jd, Jg = j_ay(g, phi, "direct"), j_ay(g, phi, "gradient")
    rep = FunctionalReport(g.V, L_path, L_exp, Id, Ig, Jd, Jg, err_term(g, phi),
                           inequality_report(g, phi))
    rep.residuals = {
        "explicit_vs_path": residual(L_exp, L_path),
        "I_direct_vs_gradient": residual(Id, Ig),
        "J_direct_vs_gradient": residual(Jd, Jg),
    }
    return rep
