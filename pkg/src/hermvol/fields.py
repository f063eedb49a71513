"""Coefficient backends for differential forms.

Three kinds of scalar fields are supported:

* :class:`FourierField` -- a finite Fourier series on the unit torus
  ``[0, 1)^{2n}``.  Integration is exact: the mean of a field is its zero mode.
* :class:`CoframeConstant` -- a constant attached to an invariant coframe on a
  nilmanifold.  All calculus goes through structure constants.
* :class:`PolyField` -- a polynomial in ``z_1..z_n, zbar_1..zbar_n`` on a chart.

Real coordinates on the torus are ordered ``(x_1, .., x_n, y_1, .., y_n)`` with
``z_j = x_j + i y_j``; frequency vectors use the same ordering.
"""
from __future__ import annotations

import numbers
from dataclasses import dataclass
from functools import lru_cache
from typing import Any, ClassVar, Iterable, Sequence

import numpy as np

from .errors import BackendMismatch, BandwidthOverflow, CapabilityError

DEFAULT_CAP = 64


def _is_scalar(x: Any) -> bool:
    return isinstance(x, numbers.Number)


def _check_axis(n: int, j: int) -> None:
    if not 1 <= j <= n:
        raise ValueError(f"axis {j} out of range 1..{n}")


# ---------------------------------------------------------------------------
# Backends
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FourierBackend:
    n: int
    cap: int = DEFAULT_CAP
    name: ClassVar[str] = "fourier"
    exact: ClassVar[bool] = False

    def const(self, c: complex) -> "FourierField":
        return FourierField.constant(self.n, c, cap=self.cap)

    def sum(self, fields: Sequence["FourierField"]) -> "FourierField":
        return FourierField.sum_of(self, fields)


@dataclass(frozen=True)
class PolyBackend:
    n: int
    name: ClassVar[str] = "poly"
    exact: ClassVar[bool] = True

    def const(self, c: complex) -> "PolyField":
        return PolyField(self.n, {(0,) * (2 * self.n): complex(c)})

    def sum(self, fields: Sequence["PolyField"]) -> "PolyField":
        out: dict = {}
        for f in fields:
            for e, c in f.terms.items():
                out[e] = out.get(e, 0) + c
        return PolyField(self.n, out)


@dataclass(frozen=True)
class CoframeBackend:
    """Constant coefficients in an invariant coframe.

    ``structure`` is the :class:`hermvol.calculus.StructureConstants` that
    gives the exterior derivative of the coframe, or ``None`` for pure algebra.
    """

    n: int
    structure: Any = None
    name: ClassVar[str] = "coframe"
    exact: ClassVar[bool] = True

    def const(self, c: complex) -> "CoframeConstant":
        return CoframeConstant(c, self)

    def sum(self, fields: Sequence["CoframeConstant"]) -> "CoframeConstant":
        total = 0j
        for f in fields:
            total += f.value
        return CoframeConstant(total, self)


Backend = FourierBackend | PolyBackend | CoframeBackend


def as_field(c: Any, backend: Backend):
    """Coerce a number or field into ``backend``."""
    if _is_scalar(c):
        return backend.const(c)
    if c.backend != backend:
        raise BackendMismatch(f"coefficient backend {c.backend} != {backend}")
    return c


# ---------------------------------------------------------------------------
# Fourier fields
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _codec(n: int, cap: int):
    base = 2 * cap + 1
    if float(base) ** (2 * n) >= 2.0 ** 61:
        raise BandwidthOverflow(f"cap {cap} too large to encode {2 * n} frequency axes")
    weights = base ** np.arange(2 * n, dtype=np.int64)
    offset = int(cap * weights.sum())
    return base, weights, offset


def _merge(keys: np.ndarray, amps: np.ndarray):
    if keys.size == 0:
        return keys.astype(np.int64), amps.astype(complex)
    uk, inv = np.unique(keys, return_inverse=True)
    if uk.size == keys.size:
        out = np.empty(uk.size, dtype=complex)
        out[inv] = amps
    else:
        re = np.bincount(inv, weights=amps.real, minlength=uk.size)
        im = np.bincount(inv, weights=amps.imag, minlength=uk.size)
        out = re + 1j * im
    nz = out != 0
    return uk[nz], out[nz]


class FourierField:
    """Bandlimited complex function on the unit torus of complex dimension ``n``.

    ``value(x) = sum_k amp_k exp(2 pi i k.x)`` over a sparse set of integer
    frequency vectors ``k`` with ``|k_i| <= bandwidth <= cap``.
    The bandwidth is bookkept, not measured: products add bandwidths and an
    overflow of ``cap`` raises :class:`BandwidthOverflow`.
    """

    backend_name = "fourier"
    __slots__ = ("n", "cap", "keys", "amps", "bandwidth", "real")
    __hash__ = None  # type: ignore[assignment]

    def __init__(
        self,
        n: int,
        modes: Iterable[Sequence[int]] = (),
        amps: Iterable[complex] = (),
        *,
        cap: int = DEFAULT_CAP,
        bandwidth: int | None = None,
        real: bool = False,
    ):
        modes = np.asarray(list(modes) if not isinstance(modes, np.ndarray) else modes, dtype=np.int64)
        modes = modes.reshape(-1, 2 * n)
        amps = np.asarray(list(amps) if not isinstance(amps, np.ndarray) else amps, dtype=complex).reshape(-1)
        if len(modes) != len(amps):
            raise ValueError("modes and amplitudes differ in length")
        kmax = int(np.abs(modes).max()) if modes.size else 0
        bw = kmax if bandwidth is None else int(bandwidth)
        if bw < kmax:
            raise ValueError(f"declared bandwidth {bw} below largest frequency {kmax}")
        if bw > cap:
            raise BandwidthOverflow(f"bandwidth {bw} exceeds cap {cap}")
        _, weights, offset = _codec(n, cap)
        keys, amps = _merge(modes @ weights + offset, amps)
        self.n, self.cap, self.keys, self.amps = n, cap, keys, amps
        self.bandwidth, self.real = bw, False
        if real:
            conj = self.conj()
            scale = np.abs(amps).max() if amps.size else 0.0
            if not (np.array_equal(conj.keys, keys) and np.allclose(conj.amps, amps, rtol=0, atol=1e-13 * scale)):
                raise ValueError("reality flag set but amp(-k) != conj(amp(k))")
            self.real = True

    @classmethod
    def _new(cls, n, cap, keys, amps, bandwidth, real) -> "FourierField":
        f = object.__new__(cls)
        f.n, f.cap, f.keys, f.amps, f.bandwidth, f.real = n, cap, keys, amps, bandwidth, real
        return f

    @classmethod
    def constant(cls, n: int, c: complex, *, cap: int = DEFAULT_CAP) -> "FourierField":
        c = complex(c)
        _codec(n, cap)
        return cls(n, [[0] * (2 * n)], [c], cap=cap, real=c.imag == 0)

    @classmethod
    def sum_of(cls, backend: FourierBackend, fields: Sequence["FourierField"]) -> "FourierField":
        fields = list(fields)
        if not fields:
            return cls.constant(backend.n, 0, cap=backend.cap)
        for f in fields:
            if f.backend != backend:
                raise BackendMismatch(f"{f.backend} != {backend}")
        if len(fields) == 1:
            return fields[0]
        keys, amps = _merge(np.concatenate([f.keys for f in fields]), np.concatenate([f.amps for f in fields]))
        return cls._new(backend.n, backend.cap, keys, amps,
                        max(f.bandwidth for f in fields), all(f.real for f in fields))

    @property
    def backend(self) -> FourierBackend:
        return FourierBackend(self.n, self.cap)

    @property
    def modes(self) -> np.ndarray:
        base, _, _ = _codec(self.n, self.cap)
        digits = (self.keys[:, None] // (base ** np.arange(2 * self.n, dtype=np.int64))) % base
        return digits - self.cap

    def __len__(self) -> int:
        return self.keys.size

    def __repr__(self) -> str:
        return f"FourierField(n={self.n}, modes={len(self)}, bandwidth={self.bandwidth}, real={self.real})"

    # arithmetic -----------------------------------------------------------

    def _coerce(self, other) -> "FourierField":
        if _is_scalar(other):
            return FourierField.constant(self.n, other, cap=self.cap)
        if not isinstance(other, FourierField) or other.n != self.n or other.cap != self.cap:
            raise BackendMismatch(f"cannot combine {self!r} with {other!r}")
        return other

    def __add__(self, other):
        return FourierField.sum_of(self.backend, [self, self._coerce(other)])

    __radd__ = __add__

    def __neg__(self):
        return FourierField._new(self.n, self.cap, self.keys, -self.amps, self.bandwidth, self.real)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if _is_scalar(other):
            c = complex(other)
            if c == 0:
                return FourierField.constant(self.n, 0, cap=self.cap)
            return FourierField._new(self.n, self.cap, self.keys, self.amps * c,
                                     self.bandwidth, self.real and c.imag == 0)
        other = self._coerce(other)
        bw = self.bandwidth + other.bandwidth
        if bw > self.cap:
            raise BandwidthOverflow(f"product bandwidth {bw} exceeds cap {self.cap}")
        _, _, offset = _codec(self.n, self.cap)
        keys = (self.keys[:, None] + other.keys[None, :] - offset).ravel()
        amps = np.multiply.outer(self.amps, other.amps).ravel()
        keys, amps = _merge(keys, amps)
        return FourierField._new(self.n, self.cap, keys, amps, bw, self.real and other.real)

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if _is_scalar(other):
            other = FourierField.constant(self.n, other, cap=self.cap)
        if not isinstance(other, FourierField):
            return NotImplemented
        return (self.n == other.n and self.cap == other.cap
                and np.array_equal(self.keys, other.keys) and np.array_equal(self.amps, other.amps))

    # calculus ---------------------------------------------------------------

    def conj(self) -> "FourierField":
        _, _, offset = _codec(self.n, self.cap)
        keys = 2 * offset - self.keys
        order = np.argsort(keys)
        return FourierField._new(self.n, self.cap, keys[order], np.conj(self.amps[order]),
                                 self.bandwidth, self.real)

    def real_part(self) -> "FourierField":
        f = (self + self.conj()) * 0.5
        f.real = True
        return f

    def deriv(self, j: int, bar: bool = False) -> "FourierField":
        """Wirtinger derivative d/dz_j (or d/dzbar_j when ``bar``)."""
        _check_axis(self.n, j)
        m = self.modes
        kx, ky = m[:, j - 1], m[:, self.n + j - 1]
        factor = np.pi * (1j * kx - ky) if bar else np.pi * (1j * kx + ky)
        amps = self.amps * factor
        nz = amps != 0
        return FourierField._new(self.n, self.cap, self.keys[nz], amps[nz], self.bandwidth, False)

    def mean(self) -> complex:
        _, _, offset = _codec(self.n, self.cap)
        i = np.searchsorted(self.keys, offset)
        if i < self.keys.size and self.keys[i] == offset:
            return complex(self.amps[i])
        return 0j

    def norm(self) -> float:
        """Sum of absolute amplitudes, an upper bound for the sup norm."""
        return float(np.abs(self.amps).sum())

    def is_zero(self) -> bool:
        return self.keys.size == 0

    def prune(self, threshold: float) -> "FourierField":
        keep = np.abs(self.amps) > threshold
        return FourierField._new(self.n, self.cap, self.keys[keep], self.amps[keep], self.bandwidth, self.real)

    # evaluation -------------------------------------------------------------

    def evaluate(self, points: np.ndarray, chunk: int = 4096) -> np.ndarray:
        """Values at real points of shape ``(P, 2n)``."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.zeros(len(points), dtype=complex)
        if self.is_zero():
            return out
        m = self.modes.astype(float)
        for s in range(0, len(points), chunk):
            phase = 2 * np.pi * (points[s:s + chunk] @ m.T)
            out[s:s + chunk] = np.exp(1j * phase) @ self.amps
        return out

    def grid_slab(self, N: int, i0: int, shift: float = 0.5) -> np.ndarray:
        """Values on the grid ``x = (i + shift)/N`` with the first axis fixed to index ``i0``.

        Returns an array of shape ``(N,) * (2n - 1)``.  Evaluation at grid points is
        exact for any ``N`` because frequencies alias consistently modulo ``N``.
        """
        d = 2 * self.n
        out = np.zeros((N,) * (d - 1), dtype=complex)
        if self.is_zero():
            return out
        m = self.modes
        phase = m[:, 0] * (i0 + shift) + m[:, 1:].sum(axis=1) * shift
        w = self.amps * np.exp(2j * np.pi * phase / N)
        idx = tuple((m[:, a] % N) for a in range(1, d))
        np.add.at(out, idx, w)
        return np.fft.ifftn(out) * N ** (d - 1)

    def grid_values(self, N: int, shift: float = 0.5) -> np.ndarray:
        return np.stack([self.grid_slab(N, i, shift) for i in range(N)])

    # bookkeeping --------------------------------------------------------------

    def translate(self, shift: Sequence[float]) -> "FourierField":
        """The field ``x -> f(x + shift)``."""
        amps = self.amps * np.exp(2j * np.pi * (self.modes @ np.asarray(shift, dtype=float)))
        return FourierField._new(self.n, self.cap, self.keys, amps, self.bandwidth, self.real)

    def embed(self, n_total: int, offset: int) -> "FourierField":
        """Pull back along the projection of ``T^{n_total}`` onto axes ``offset+1..offset+n``."""
        m = self.modes
        full = np.zeros((len(m), 2 * n_total), dtype=np.int64)
        full[:, offset:offset + self.n] = m[:, :self.n]
        full[:, n_total + offset:n_total + offset + self.n] = m[:, self.n:]
        f = FourierField(n_total, full, self.amps, cap=self.cap, bandwidth=self.bandwidth)
        f.real = self.real
        return f

    def to_json(self) -> dict:
        return {
            "backend": "fourier", "n": self.n, "cap": self.cap, "bandwidth": self.bandwidth,
            "real": self.real,
            "modes": self.modes.tolist(),
            "amps": [[float(a.real), float(a.imag)] for a in self.amps],
        }

    @classmethod
    def from_json(cls, data: dict) -> "FourierField":
        n = int(data["n"])
        amps = [complex(a[0], a[1]) for a in data["amps"]]
        return cls(n, data["modes"], amps, cap=int(data.get("cap", DEFAULT_CAP)),
                   bandwidth=data.get("bandwidth"), real=bool(data.get("real", False)))


# ---------------------------------------------------------------------------
# Chart polynomials
# ---------------------------------------------------------------------------

class PolyField:
    """Polynomial in the commuting symbols ``z_1..z_n, zbar_1..zbar_n``.

    Terms map an exponent tuple ``(a_1..a_n, b_1..b_n)`` to a complex coefficient.
    Arithmetic is exact whenever coefficients are Gaussian integers.
    """

    backend_name = "poly"
    __slots__ = ("n", "terms")
    __hash__ = None  # type: ignore[assignment]

    def __init__(self, n: int, terms: dict | None = None):
        self.n = n
        self.terms = {}
        for e, c in (terms or {}).items():
            e = tuple(int(v) for v in e)
            if len(e) != 2 * n or min(e, default=0) < 0:
                raise ValueError(f"bad exponent {e} for n={n}")
            if c != 0:
                self.terms[e] = complex(c)

    @classmethod
    def variable(cls, n: int, j: int, bar: bool = False) -> "PolyField":
        _check_axis(n, j)
        e = [0] * (2 * n)
        e[(n if bar else 0) + j - 1] = 1
        return cls(n, {tuple(e): 1})

    @property
    def backend(self) -> PolyBackend:
        return PolyBackend(self.n)

    @property
    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=0)

    def __repr__(self) -> str:
        return f"PolyField(n={self.n}, terms={self.terms})"

    def _coerce(self, other) -> "PolyField":
        if _is_scalar(other):
            return PolyBackend(self.n).const(other)
        if not isinstance(other, PolyField) or other.n != self.n:
            raise BackendMismatch(f"cannot combine {self!r} with {other!r}")
        return other

    def __add__(self, other):
        return PolyBackend(self.n).sum([self, self._coerce(other)])

    __radd__ = __add__

    def __neg__(self):
        return PolyField(self.n, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        other = self._coerce(other)
        out: dict = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, 0) + c1 * c2
        return PolyField(self.n, out)

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if _is_scalar(other):
            other = PolyBackend(self.n).const(other)
        if not isinstance(other, PolyField):
            return NotImplemented
        return self.n == other.n and self.terms == other.terms

    def conj(self) -> "PolyField":
        n = self.n
        return PolyField(n, {e[n:] + e[:n]: c.conjugate() for e, c in self.terms.items()})

    @property
    def real(self) -> bool:
        return self == self.conj()

    def deriv(self, j: int, bar: bool = False) -> "PolyField":
        _check_axis(self.n, j)
        a = (self.n if bar else 0) + j - 1
        out = {}
        for e, c in self.terms.items():
            if e[a]:
                e2 = list(e)
                e2[a] -= 1
                out[tuple(e2)] = c * e[a]
        return PolyField(self.n, out)

    def mean(self) -> complex:
        raise CapabilityError("chart-local field not integrable")

    def norm(self) -> float:
        return float(sum(abs(c) for c in self.terms.values()))

    def is_zero(self) -> bool:
        return not self.terms

    def evaluate(self, z: np.ndarray) -> np.ndarray:
        """Values at complex chart points of shape ``(P, n)``."""
        z = np.atleast_2d(np.asarray(z, dtype=complex))
        w = np.concatenate([z, np.conj(z)], axis=1)
        out = np.zeros(len(z), dtype=complex)
        for e, c in self.terms.items():
            out += c * np.prod(w ** np.asarray(e), axis=1)
        return out

    def to_json(self) -> dict:
        return {"backend": "poly", "n": self.n,
                "terms": [[list(e), [c.real, c.imag]] for e, c in sorted(self.terms.items())]}

    @classmethod
    def from_json(cls, data: dict) -> "PolyField":
        return cls(int(data["n"]), {tuple(e): complex(c[0], c[1]) for e, c in data["terms"]})


# ---------------------------------------------------------------------------
# Coframe constants
# ---------------------------------------------------------------------------

class CoframeConstant:
    """A constant coefficient with respect to an invariant coframe."""

    backend_name = "coframe"
    __slots__ = ("value", "backend")
    __hash__ = None  # type: ignore[assignment]

    def __init__(self, value: complex, backend: CoframeBackend):
        self.value = complex(value)
        self.backend = backend

    @property
    def n(self) -> int:
        return self.backend.n

    @property
    def real(self) -> bool:
        return self.value.imag == 0

    def __repr__(self) -> str:
        return f"CoframeConstant({self.value})"

    def _coerce(self, other) -> "CoframeConstant":
        if _is_scalar(other):
            return CoframeConstant(other, self.backend)
        if not isinstance(other, CoframeConstant) or other.backend != self.backend:
            raise BackendMismatch(f"cannot combine {self!r} with {other!r}")
        return other

    def __add__(self, other):
        return CoframeConstant(self.value + self._coerce(other).value, self.backend)

    __radd__ = __add__

    def __neg__(self):
        return CoframeConstant(-self.value, self.backend)

    def __sub__(self, other):
        return CoframeConstant(self.value - self._coerce(other).value, self.backend)

    def __rsub__(self, other):
        return CoframeConstant(self._coerce(other).value - self.value, self.backend)

    def __mul__(self, other):
        return CoframeConstant(self.value * self._coerce(other).value, self.backend)

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if _is_scalar(other):
            return self.value == other
        if not isinstance(other, CoframeConstant):
            return NotImplemented
        return self.backend == other.backend and self.value == other.value

    def conj(self) -> "CoframeConstant":
        return CoframeConstant(self.value.conjugate(), self.backend)

    def deriv(self, j: int, bar: bool = False) -> "CoframeConstant":
        _check_axis(self.n, j)
        return CoframeConstant(0, self.backend)

    def mean(self) -> complex:
        return self.value

    def norm(self) -> float:
        return abs(self.value)

    def is_zero(self) -> bool:
        return self.value == 0

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        return np.full(len(np.atleast_2d(points)), self.value, dtype=complex)

    def to_json(self) -> dict:
        return {"backend": "coframe", "n": self.n, "value": [self.value.real, self.value.imag]}


# ---------------------------------------------------------------------------
# Module-level operations
# ---------------------------------------------------------------------------

def field_mul(f, g):
    if type(f) is not type(g) or f.backend != g.backend:
        raise BackendMismatch(f"cannot multiply {f!r} by {g!r}")
    return f * g


def field_deriv(f, j: int, bar: bool = False):
    return f.deriv(j, bar)


def mean(f) -> complex:
    return f.mean()


def field_from_json(data: dict, backend: CoframeBackend | None = None):
    kind = data.get("backend")
    if kind == "fourier":
        return FourierField.from_json(data)
    if kind == "poly":
        return PolyField.from_json(data)
    if kind == "coframe":
        b = backend if backend is not None else CoframeBackend(int(data["n"]))
        return CoframeConstant(complex(*data["value"]), b)
    raise ValueError(f"unknown field backend {kind!r}")
