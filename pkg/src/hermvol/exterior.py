"""Sparse (p,q)-forms in ``n`` complex dimensions.

A form is stored as a map ``(I, J) -> coefficient`` meaning
``sum a_{I,J} dz_I ^ dzbar_J``, where ``I`` and ``J`` are strictly increasing
tuples of axis labels in ``1..n``.  Within each basis monomial every ``dz``
factor precedes every ``dzbar`` factor.  Factors of ``i`` live inside the
(complex) coefficients.
"""
from __future__ import annotations

import numbers
from itertools import combinations
from typing import Iterator

from .errors import BackendMismatch
from .fields import Backend, as_field

Index = tuple[int, ...]
Key = tuple[Index, Index]

# Fourier coefficients below this fraction of the largest term are dropped.
FOURIER_PRUNE = 1e-14


def permutation_sign(seq) -> int:
    """Signature of the permutation sorting ``seq``; 0 if it has repeats."""
    seq = list(seq)
    if len(set(seq)) != len(seq):
        return 0
    inversions = sum(1 for a, b in combinations(range(len(seq)), 2) if seq[a] > seq[b])
    return -1 if inversions % 2 else 1


def merge_sign(a: Index, b: Index) -> tuple[int, Index]:
    """Sign and sorted union for ``dz_a ^ dz_b`` with ``a``, ``b`` increasing."""
    if set(a) & set(b):
        return 0, ()
    swaps = sum(1 for x in a for y in b if x > y)
    return (-1 if swaps % 2 else 1), tuple(sorted(a + b))


def _check_index(n: int, idx) -> Index:
    idx = tuple(int(i) for i in idx)
    if any(not 1 <= i <= n for i in idx) or any(x >= y for x, y in zip(idx, idx[1:])):
        raise ValueError(f"multi-index {idx} must be strictly increasing within 1..{n}")
    return idx


class Form:
    """An exterior form with coefficients in a single backend.

    Forms are immutable.  Zero coefficients are pruned at construction so that
    equality is a key-by-key comparison of coefficients.
    """

    __slots__ = ("n", "backend", "terms")
    __hash__ = None  # type: ignore[assignment]

    def __init__(self, n: int, backend: Backend, terms: dict | None = None):
        if backend.n != n:
            raise BackendMismatch(f"backend dimension {backend.n} != form dimension {n}")
        self.n = n
        self.backend = backend
        clean: dict[Key, object] = {}
        for (I, J), c in (terms or {}).items():
            c = as_field(c, backend)
            if not c.is_zero():
                clean[(_check_index(n, I), _check_index(n, J))] = c
        if clean and backend.name == "fourier":
            norms = {k: c.norm() for k, c in clean.items()}
            cut = FOURIER_PRUNE * max(norms.values())
            clean = {k: c for k, c in clean.items() if norms[k] > cut}
        self.terms = dict(sorted(clean.items(), key=lambda kv: (len(kv[0][0]) + len(kv[0][1]), kv[0])))

    # constructors -------------------------------------------------------------

    @classmethod
    def zero(cls, backend: Backend) -> "Form":
        return cls(backend.n, backend)

    @classmethod
    def scalar(cls, f, backend: Backend | None = None) -> "Form":
        backend = backend if backend is not None else f.backend
        return cls(backend.n, backend, {((), ()): f})

    @classmethod
    def basis(cls, backend: Backend, I=(), J=(), coeff=1) -> "Form":
        """``coeff * dz_I ^ dzbar_J`` with ``I``, ``J`` in any order (sign applied)."""
        s = permutation_sign(I) * permutation_sign(J)
        if s == 0:
            return cls.zero(backend)
        return cls(backend.n, backend, {(tuple(sorted(I)), tuple(sorted(J))): as_field(coeff, backend) * s})

    @classmethod
    def dz(cls, backend: Backend, j: int) -> "Form":
        return cls.basis(backend, (j,), ())

    @classmethod
    def dzbar(cls, backend: Backend, j: int) -> "Form":
        return cls.basis(backend, (), (j,))

    # structure -------------------------------------------------------------------

    def __repr__(self) -> str:
        return f"Form(n={self.n}, backend={self.backend.name}, terms={len(self.terms)}, bidegrees={sorted(self.bidegrees)})"

    def __len__(self) -> int:
        return len(self.terms)

    def __iter__(self) -> Iterator[tuple[Key, object]]:
        return iter(self.terms.items())

    @property
    def bidegrees(self) -> set[tuple[int, int]]:
        return {(len(I), len(J)) for I, J in self.terms}

    @property
    def bidegree(self) -> tuple[int, int] | None:
        """The bidegree of a homogeneous form; ``None`` for the zero form."""
        b = self.bidegrees
        if not b:
            return None
        if len(b) > 1:
            raise ValueError(f"form is not homogeneous: bidegrees {sorted(b)}")
        return next(iter(b))

    @property
    def degrees(self) -> set[int]:
        return {p + q for p, q in self.bidegrees}

    @property
    def degree(self) -> int | None:
        d = self.degrees
        if not d:
            return None
        if len(d) > 1:
            raise ValueError(f"form has mixed total degree {sorted(d)}")
        return next(iter(d))

    def is_zero(self) -> bool:
        return not self.terms

    def norm(self) -> float:
        """Largest coefficient norm (see the backend's ``norm``)."""
        return max((c.norm() for c in self.terms.values()), default=0.0)

    def component(self, p: int, q: int) -> "Form":
        return Form(self.n, self.backend, {k: c for k, c in self.terms.items() if (len(k[0]), len(k[1])) == (p, q)})

    def coefficient(self, I, J):
        """Coefficient of ``dz_I ^ dzbar_J`` for index tuples in any order."""
        s = permutation_sign(I) * permutation_sign(J)
        zero = self.backend.const(0)
        if s == 0:
            return zero
        c = self.terms.get((tuple(sorted(I)), tuple(sorted(J))))
        if c is None:
            return zero
        return c * s if s < 0 else c

    def table(self) -> "FormCoefficientTable":
        return FormCoefficientTable(self)

    def map_coefficients(self, fn) -> "Form":
        return Form(self.n, self.backend, {k: fn(c) for k, c in self.terms.items()})

    # arithmetic ------------------------------------------------------------------

    def _check(self, other: "Form") -> None:
        if not isinstance(other, Form):
            raise TypeError(f"expected Form, got {type(other).__name__}")
        if other.n != self.n or other.backend != self.backend:
            raise BackendMismatch(f"{self!r} and {other!r} live in different backends")

    def __add__(self, other: "Form") -> "Form":
        self._check(other)
        return _sum_terms(self.backend, [self.terms.items(), other.terms.items()])

    def __neg__(self) -> "Form":
        return self.map_coefficients(lambda c: -c)

    def __sub__(self, other: "Form") -> "Form":
        return self + (-other)

    def __mul__(self, c) -> "Form":
        """Multiply every coefficient by a scalar or a 0-form coefficient field."""
        if isinstance(c, Form):
            return wedge(self, c)
        if not isinstance(c, numbers.Number):
            c = as_field(c, self.backend)
        return self.map_coefficients(lambda a: a * c)

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if not isinstance(other, Form):
            return NotImplemented
        return (self.n == other.n and self.backend == other.backend
                and self.terms.keys() == other.terms.keys()
                and all(self.terms[k] == other.terms[k] for k in self.terms))

    def allclose(self, other: "Form", atol: float = 0.0) -> bool:
        return (self - other).norm() <= atol

    def wedge(self, *others: "Form") -> "Form":
        return wedge(self, *others)


class FormCoefficientTable:
    """The ``(I, J) -> coefficient`` view of a form with sign-adjusted lookup."""

    def __init__(self, form: Form):
        self.form = form

    def __getitem__(self, key):
        I, J = key
        return self.form.coefficient(I, J)

    def __iter__(self):
        return iter(self.form.terms)

    def __len__(self) -> int:
        return len(self.form.terms)

    def items(self):
        return self.form.terms.items()

    def keys(self):
        return self.form.terms.keys()


def _sum_terms(backend: Backend, groups) -> Form:
    acc: dict[Key, list] = {}
    for items in groups:
        for k, c in items:
            acc.setdefault(k, []).append(c)
    return Form(backend.n, backend, {k: backend.sum(v) for k, v in acc.items()})


def _wedge2(a: Form, b: Form) -> Form:
    a._check(b)
    acc: dict[Key, list] = {}
    for (I, J), c1 in a.terms.items():
        for (K, L), c2 in b.terms.items():
            s1, IK = merge_sign(I, K)
            if not s1:
                continue
            s2, JL = merge_sign(J, L)
            if not s2:
                continue
            # move dz_K past dzbar_J
            s = s1 * s2 * (-1 if (len(J) * len(K)) % 2 else 1)
            prod = c1 * c2
            acc.setdefault((IK, JL), []).append(prod if s > 0 else -prod)
    return Form(a.n, a.backend, {k: a.backend.sum(v) for k, v in acc.items()})


def wedge(a: Form, *others: Form) -> Form:
    """Wedge product of one or more forms, evaluated left to right."""
    out = a
    for b in others:
        out = _wedge2(out, b)
    return out


def conjugate(a: Form) -> Form:
    """Complex conjugate: ``c dz_I ^ dzbar_J -> conj(c) (-1)^{|I||J|} dz_J ^ dzbar_I``."""
    terms = {}
    for (I, J), c in a.terms.items():
        cc = c.conj()
        terms[(J, I)] = -cc if (len(I) * len(J)) % 2 else cc
    return Form(a.n, a.backend, terms)


def is_real(a: Form, rtol: float | None = None) -> bool:
    """Whether ``conjugate(a) == a``.

    Exact for exact backends.  Fourier coefficients are compared up to ``rtol``
    (default ``1e-13``) relative to the largest coefficient norm, because
    Wirtinger derivatives are applied in different orders on the two sides.
    """
    for p, q in a.bidegrees:
        if p != q:
            raise ValueError(f"is_real needs a (p,p) form, got bidegree {(p, q)}")
    conj = conjugate(a)
    if a.backend.exact and rtol is None:
        return conj == a
    tol = (1e-13 if rtol is None else rtol) * a.norm()
    return (conj - a).norm() <= tol


def unit(backend: Backend) -> Form:
    return Form.scalar(backend.const(1), backend)


def power(a: Form, k: int) -> Form:
    """``k``-fold wedge power; ``power(a, 0)`` is the unit 0-form."""
    if k < 0:
        raise ValueError("power needs k >= 0")
    if k >= 2 and any(d % 2 for d in a.degrees):
        raise ValueError("power of an odd-degree form with k >= 2 is ambiguous; use wedge")
    if k == 0:
        return unit(a.backend)
    out = a
    for _ in range(k - 1):
        out = wedge(out, a)
    return out


def top_key(n: int) -> Key:
    full = tuple(range(1, n + 1))
    return full, full


def omega_std(backend: Backend) -> Form:
    """The standard volume form ``prod_j (i dz_j ^ dzbar_j)``."""
    out = unit(backend)
    for j in range(1, backend.n + 1):
        out = wedge(out, Form.basis(backend, (j,), (j,), 1j))
    return out


def omega_std_coefficient(n: int) -> complex:
    """Coefficient of ``dz_1..dz_n ^ dzbar_1..dzbar_n`` in ``omega_std``."""
    return (1j ** n) * (-1 if (n * (n - 1) // 2) % 2 else 1)
