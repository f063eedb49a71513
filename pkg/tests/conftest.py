"""Shared generators and independent oracles for the test suite."""
from __future__ import annotations

from itertools import combinations, permutations
from math import factorial

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from hermvol.calculus import iwasawa
from hermvol.exterior import Form
from hermvol.fields import FourierField, PolyBackend, PolyField

settings.register_profile("hermvol", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("hermvol")

GAUSSIAN = st.builds(complex, st.integers(-3, 3), st.integers(-3, 3))


@st.composite
def poly_fields(draw, n, max_terms=3, max_deg=2):
    terms = {}
    for _ in range(draw(st.integers(1, max_terms))):
        e = tuple(draw(st.lists(st.integers(0, max_deg), min_size=2 * n, max_size=2 * n)))
        terms[e] = draw(GAUSSIAN)
    return PolyField(n, terms)


@st.composite
def index_sets(draw, n, size=None):
    k = draw(st.integers(0, n)) if size is None else size
    return tuple(sorted(draw(st.permutations(range(1, n + 1)))[:k]))


@st.composite
def poly_forms(draw, n, p=None, q=None, max_terms=3, constant=False):
    b = PolyBackend(n)
    out = Form.zero(b)
    for _ in range(draw(st.integers(1, max_terms))):
        I = draw(index_sets(n, p))
        J = draw(index_sets(n, q))
        c = b.const(draw(GAUSSIAN)) if constant else draw(poly_fields(n))
        out = out + Form.basis(b, I, J, c)
    return out


IWASAWA = iwasawa()


@st.composite
def coframe_forms(draw, p=None, q=None, max_terms=4):
    b = IWASAWA.backend
    out = Form.zero(b)
    for _ in range(draw(st.integers(1, max_terms))):
        out = out + Form.basis(b, draw(index_sets(3, p)), draw(index_sets(3, q)), draw(GAUSSIAN))
    return out


def random_fourier(n, rng, band=2, modes=3, cap=64):
    ks = rng.integers(-band, band + 1, size=(modes, 2 * n))
    # dyadic amplitudes keep sums and products exact in floating point
    amps = rng.integers(-4, 5, size=modes) / 4 + 1j * rng.integers(-4, 5, size=modes) / 4
    return FourierField(n, ks, amps, cap=cap, bandwidth=band)


def random_fourier_form(n, rng, degree=None, terms=3, band=2):
    b = FourierField.constant(n, 0).backend
    out = Form.zero(b)
    for _ in range(terms):
        d = rng.integers(0, 2 * n + 1) if degree is None else degree
        letters = rng.choice(2 * n, size=d, replace=False)
        I = tuple(sorted(int(x) + 1 for x in letters if x < n))
        J = tuple(sorted(int(x) - n + 1 for x in letters if x >= n))
        out = out + Form.basis(b, I, J, random_fourier(n, rng, band))
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


# ---------------------------------------------------------------------------
# Alternating-tensor oracle for the wedge product
# ---------------------------------------------------------------------------

def _word(n, I, J):
    return tuple(I) + tuple(n + j for j in J)


def _perm_sign(p):
    s = 1
    p = list(p)
    for i in range(len(p)):
        for j in range(i + 1, len(p)):
            if p[i] > p[j]:
                s = -s
    return s


def as_tensor(form: Form) -> dict:
    """Constant-coefficient form as an alternating function on tuples of basis letters."""
    n = form.n
    out = {}
    for (I, J), c in form.terms.items():
        w = _word(n, I, J)
        val = complex(c.value) if hasattr(c, "value") else complex(c.terms.get((0,) * 2 * n, 0))
        for p in permutations(range(len(w))):
            t = tuple(w[i] for i in p)
            out[t] = out.get(t, 0) + _perm_sign(p) * val
    return out


def tensor_wedge(a: dict, b: dict, k: int, l: int) -> dict:
    """``(a ^ b)(v) = 1/(k! l!) sum_sigma sgn(sigma) a(v_sigma[:k]) b(v_sigma[k:])``."""
    letters = sorted({x for t in list(a) + list(b) for x in t})
    out = {}
    for combo in combinations(letters, k + l):
        total = 0
        for p in permutations(range(k + l)):
            v = tuple(combo[i] for i in p)
            total += _perm_sign(p) * a.get(v[:k], 0) * b.get(v[k:], 0)
        if total:
            out[combo] = total / (factorial(k) * factorial(l))
    return out


def tensor_coefficients(t: dict, n: int) -> dict:
    """Read back ``(I, J) -> coefficient`` from sorted letter tuples."""
    out = {}
    for w, c in t.items():
        if list(w) == sorted(w) and abs(c) > 0:
            I = tuple(x for x in w if x <= n)
            J = tuple(x - n for x in w if x > n)
            out[(I, J)] = c
    return out
