"""Dolbeault operators on forms.

Coordinate backends (Fourier, polynomial) differentiate coefficients with
Wirtinger derivatives.  The coframe backend has constant coefficients, so
``d`` acts on basis monomials by the Leibniz rule using the stored
structure constants ``d phi_m``.

With these conventions ``i_ddbar(|z_1|^2) = i dz_1 ^ dzbar_1``.
"""
from __future__ import annotations

from .errors import CapabilityError
from .exterior import Form, conjugate, wedge
from .fields import CoframeBackend


class StructureConstants:
    """Exterior derivatives of an invariant (1,0)-coframe ``phi_1..phi_n``.

    ``table[m]`` maps ``(I, J)`` to the constant coefficient of
    ``phi_I ^ phibar_J`` in ``d phi_m`` (total degree 2).  Construction fails
    unless ``d^2 = 0`` on every ``phi_m`` and ``phibar_m``.
    """

    def __init__(self, n: int, table: dict, name: str = "custom"):
        self.n = n
        self.name = name
        self.backend = CoframeBackend(n, self)
        self._cache: dict = {}
        self.d_phi = []
        for m in range(1, n + 1):
            terms = {}
            for (I, J), c in dict(table.get(m, {})).items():
                if len(I) + len(J) != 2:
                    raise ValueError(f"d phi_{m} term {(I, J)} is not of degree 2")
                terms[(tuple(I), tuple(J))] = c
            self.d_phi.append(_normalized(self.backend, terms))
        self.d_phibar = [conjugate(f) for f in self.d_phi]
        for m in range(n):
            for f in (self.d_phi[m], self.d_phibar[m]):
                if not _coframe_d(f).is_zero():
                    raise ValueError(f"structure constants violate d^2 = 0 at phi_{m + 1}")

    def __repr__(self) -> str:
        return f"StructureConstants({self.name!r}, n={self.n})"

    @property
    def integrable(self) -> bool:
        """True when no ``d phi_m`` has a (0,2) component."""
        return all(f.component(0, 2).is_zero() for f in self.d_phi)

    def to_json(self) -> dict:
        return {"name": self.name, "n": self.n,
                "table": {str(m + 1): [[list(I), list(J), [c.value.real, c.value.imag]]
                                       for (I, J), c in f.terms.items()]
                          for m, f in enumerate(self.d_phi)}}

    @classmethod
    def from_json(cls, data: dict) -> "StructureConstants":
        table = {int(m): {(tuple(I), tuple(J)): complex(c[0], c[1]) for I, J, c in rows}
                 for m, rows in data["table"].items()}
        return cls(int(data["n"]), table, name=data.get("name", "custom"))


def _normalized(backend, terms) -> Form:
    out = Form.zero(backend)
    for (I, J), c in terms.items():
        out = out + Form.basis(backend, I, J, c)
    return out


def iwasawa() -> StructureConstants:
    """Iwasawa manifold: ``d phi_1 = d phi_2 = 0``, ``d phi_3 = -phi_1 ^ phi_2``."""
    return StructureConstants(3, {3: {((1, 2), ()): -1}}, name="iwasawa")


STRUCTURE_PRESETS = {"iwasawa": iwasawa}


def _coframe_d(a: Form) -> Form:
    sc = a.backend.structure
    if sc is None:
        raise CapabilityError("coframe form has no structure constants attached")
    out = Form.zero(a.backend)
    for (I, J), c in a.terms.items():
        out = out + _monomial_d(sc, I, J) * c
    return out


def _monomial_d(sc: StructureConstants, I, J) -> Form:
    key = (I, J)
    if key in sc._cache:
        return sc._cache[key]
    b = sc.backend
    factors = [(Form.basis(b, (i,), ()), sc.d_phi[i - 1]) for i in I]
    factors += [(Form.basis(b, (), (j,)), sc.d_phibar[j - 1]) for j in J]
    out = Form.zero(b)
    for s in range(len(factors)):
        pieces = [f for f, _ in factors[:s]] + [factors[s][1]] + [f for f, _ in factors[s + 1:]]
        term = wedge(*pieces)
        out = out + (term * -1 if s % 2 else term)
    sc._cache[key] = out
    return out


def _coordinate_part(a: Form, bar: bool) -> Form:
    b = a.backend
    out = Form.zero(b)
    for j in range(1, a.n + 1):
        da = a.map_coefficients(lambda c: c.deriv(j, bar))
        if da.is_zero():
            continue
        one = Form.dzbar(b, j) if bar else Form.dz(b, j)
        out = out + wedge(one, da)
    return out


def _shift(a: Form, dp: int, dq: int) -> Form:
    parts = [a.component(p, q) for p, q in a.bidegrees]
    if not parts:
        return a
    out = Form.zero(a.backend)
    for part in parts:
        (p, q), = part.bidegrees
        out = out + _coframe_d(part).component(p + dp, q + dq)
    return out


def del_(a: Form) -> Form:
    """The operator ``d-prime``, raising the holomorphic degree."""
    if a.backend.name == "coframe":
        return _shift(a, 1, 0)
    return _coordinate_part(a, bar=False)


def delbar(a: Form) -> Form:
    """The operator ``d-bar``, raising the antiholomorphic degree."""
    if a.backend.name == "coframe":
        return _shift(a, 0, 1)
    return _coordinate_part(a, bar=True)


def exterior_d(a: Form) -> Form:
    """Full exterior derivative.

    Equal to ``del_(a) + delbar(a)`` on coordinate backends and on integrable
    coframes.
    """
    if a.backend.name == "coframe":
        return _coframe_d(a)
    return del_(a) + delbar(a)


def _as_zero_form(u) -> Form:
    if isinstance(u, Form):
        if u.degrees - {0}:
            raise ValueError("i_ddbar expects a function (0-form)")
        return u
    return Form.scalar(u)


def _real_flag(u: Form) -> bool:
    return all(c.real for c in u.terms.values())


def i_ddbar(u, require_real: bool = True) -> Form:
    """``i d-prime d-bar u`` for a scalar field ``u``.

    ``u`` must be real unless ``require_real`` is false (complex test
    functions such as ``z_l zbar_m`` are allowed that way).
    """
    u = _as_zero_form(u)
    if require_real and not _real_flag(u):
        raise ValueError("i_ddbar needs a real-valued field")
    return del_(delbar(u)) * 1j


def i_ddbar_form(a: Form) -> Form:
    """``i d-prime d-bar`` applied to a form of any degree."""
    return del_(delbar(a)) * 1j


def i_del_wedge_delbar(a: Form) -> Form:
    """``i d-prime a ^ d-bar a``, e.g. ``i dg ^ dbar g`` for a metric form ``g``."""
    return wedge(del_(a), delbar(a)) * 1j
