"""Truncated multivariate Taylor jets.

A :class:`Jet` stores the Taylor coefficients of a scalar field about a base
point, one coefficient per monomial of total degree at most ``order``.
Coefficients are kept densely in graded lexicographic order.  Jets of
order 1 serve as the first-order smooth scalars used to differentiate the
invariant pipeline once more; plain floats are the other instance.

Module level elementary functions (:func:`sin`, :func:`log`, ...) accept both
jets and real numbers.
"""
from __future__ import annotations

import itertools
import math
from functools import lru_cache

import numpy as np
from numpy.polynomial import Polynomial

from .errors import ArgumentError, DomainError, SingularPointError

MAX_ORDER = 4
MAX_DIM = 12


def multi_indices(dim, order):
    """All exponent tuples of degree <= order, graded then lexicographically descending."""
    out = []
    for d in range(order + 1):
        level = [a for a in itertools.product(range(d, -1, -1), repeat=dim) if sum(a) == d]
        out.extend(level)
    return out


class _Space:
    """Index bookkeeping shared by all jets of a given (dim, order)."""

    def __init__(self, dim, order):
        self.dim = dim
        self.order = order
        self.monos = multi_indices(dim, order)
        self.size = len(self.monos)
        self.index = {a: i for i, a in enumerate(self.monos)}
        self.degree = np.array([sum(a) for a in self.monos], dtype=int)
        self.factorial = np.array(
            [math.prod(math.factorial(e) for e in a) for a in self.monos], dtype=float
        )
        ii, jj, kk = [], [], []
        for i, a in enumerate(self.monos):
            for j, b in enumerate(self.monos):
                if self.degree[i] + self.degree[j] <= order:
                    ii.append(i)
                    jj.append(j)
                    kk.append(self.index[tuple(x + y for x, y in zip(a, b))])
        self.mul_i = np.array(ii, dtype=int)
        self.mul_j = np.array(jj, dtype=int)
        self.mul_k = np.array(kk, dtype=int)
        self._tensor_maps = {}

    def tensor_map(self, k):
        """Flat map from index tuples of length k to monomial slots."""
        if k not in self._tensor_maps:
            idx = []
            for t in itertools.product(range(self.dim), repeat=k):
                a = [0] * self.dim
                for i in t:
                    a[i] += 1
                idx.append(self.index[tuple(a)])
            self._tensor_maps[k] = np.array(idx, dtype=int)
        return self._tensor_maps[k]


@lru_cache(maxsize=None)
def space(dim, order):
    if not 1 <= dim <= MAX_DIM:
        raise ArgumentError(f"jet dimension must be in 1..{MAX_DIM}, got {dim}")
    if not 0 <= order <= MAX_ORDER:
        raise ArgumentError(f"jet order must be in 0..{MAX_ORDER}, got {order}")
    return _Space(dim, order)


def _elementwise(method):
    """Let jet operators act entrywise when the other operand is an ndarray."""

    def wrapper(self, other):
        if isinstance(other, np.ndarray):
            out = np.empty(other.shape, dtype=object)
            for idx in np.ndindex(other.shape):
                out[idx] = method(self, other[idx])
            return out
        return method(self, other)

    wrapper.__name__ = method.__name__
    return wrapper


class Jet:
    """Immutable truncated Taylor expansion of a scalar field."""

    __slots__ = ("space", "c")
    __array_ufunc__ = None

    def __init__(self, sp, coeffs):
        self.space = sp
        self.c = coeffs

    # construction
    @classmethod
    def constant(cls, dim, order, value):
        sp = space(dim, order)
        c = np.zeros(sp.size)
        c[0] = value
        return cls(sp, c)

    @property
    def dim(self):
        return self.space.dim

    @property
    def order(self):
        return self.space.order

    @property
    def value(self):
        return float(self.c[0])

    def coefficient(self, alpha):
        return float(self.c[self.space.index[tuple(alpha)]])

    def coeffs(self):
        """Mapping multi-index -> Taylor coefficient."""
        return {a: float(v) for a, v in zip(self.space.monos, self.c)}

    def derivative_tensor(self, k):
        """Symmetric array of all k-th partial derivatives at the base point."""
        if k > self.order:
            raise ArgumentError(f"order-{self.order} jet has no derivatives of order {k}")
        if k == 0:
            return np.array(self.value)
        sp = self.space
        flat = (self.c * sp.factorial)[sp.tensor_map(k)]
        return flat.reshape((sp.dim,) * k)

    def gradient(self):
        return self.derivative_tensor(1)

    def hessian(self):
        return self.derivative_tensor(2)

    def partial(self, i):
        """Jet of the partial derivative in variable i, one order lower."""
        sp = self.space
        if self.order == 0:
            raise ArgumentError("cannot differentiate an order-0 jet")
        low = space(sp.dim, sp.order - 1)
        out = np.empty(low.size)
        for j, a in enumerate(low.monos):
            b = list(a)
            b[i] += 1
            out[j] = (a[i] + 1) * self.c[sp.index[tuple(b)]]
        return Jet(low, out)

    def truncate(self, order):
        if order > self.order:
            raise ArgumentError("cannot raise the order of a jet by truncation")
        low = space(self.dim, order)
        return Jet(low, self.c[: low.size].copy())

    # arithmetic
    def _coerce(self, other):
        if isinstance(other, Jet):
            if other.space is not self.space:
                raise ArgumentError(
                    f"jet mismatch: (dim {self.dim}, order {self.order}) vs "
                    f"(dim {other.dim}, order {other.order})"
                )
            return other
        return None

    @_elementwise
    def __add__(self, other):
        o = self._coerce(other)
        if o is not None:
            return Jet(self.space, self.c + o.c)
        c = self.c.copy()
        c[0] += other
        return Jet(self.space, c)

    __radd__ = __add__

    @_elementwise
    def __sub__(self, other):
        o = self._coerce(other)
        if o is not None:
            return Jet(self.space, self.c - o.c)
        c = self.c.copy()
        c[0] -= other
        return Jet(self.space, c)

    @_elementwise
    def __rsub__(self, other):
        c = -self.c
        c[0] += other
        return Jet(self.space, c)

    def __neg__(self):
        return Jet(self.space, -self.c)

    def __pos__(self):
        return self

    @_elementwise
    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return Jet(self.space, self.c * other)
        sp = self.space
        if sp.order == 1:
            a0, b0 = self.c[0], o.c[0]
            c = a0 * o.c + b0 * self.c
            c[0] = a0 * b0
            return Jet(sp, c)
        prod = self.c[sp.mul_i] * o.c[sp.mul_j]
        return Jet(sp, np.bincount(sp.mul_k, weights=prod, minlength=sp.size))

    __rmul__ = __mul__

    def reciprocal(self):
        x0 = self.c[0]
        if x0 == 0:
            raise SingularPointError("division by a jet with zero constant term", value=0.0)
        k = self.order
        return self.compose([(-1) ** j / x0 ** (j + 1) for j in range(k + 1)])

    @_elementwise
    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            if other == 0:
                raise SingularPointError("division by zero", value=0.0)
            return Jet(self.space, self.c / other)
        return self * o.reciprocal()

    @_elementwise
    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, p):
        if isinstance(p, Jet):
            raise ArgumentError("jet exponents must be real numbers")
        if float(p).is_integer():
            return pow_int(self, int(p))
        return pow_real(self, float(p))

    def __abs__(self):
        return abs_(self)

    def compose(self, series):
        """f(self) given the Taylor coefficients ``series`` of f at the constant term."""
        h = Jet(self.space, self.c.copy())
        h.c[0] = 0.0
        k = min(self.order, len(series) - 1)
        out = Jet.constant(self.dim, self.order, series[k])
        for j in range(k - 1, -1, -1):
            out = out * h + series[j]
        return out

    def __repr__(self):
        return f"Jet(dim={self.dim}, order={self.order}, value={self.value!r})"


def seed(point, var_index, order):
    """Jet of the coordinate function x_{var_index} at ``point``."""
    point = np.asarray(point, dtype=float).ravel()
    dim = point.size
    if not 0 <= var_index < dim:
        raise ArgumentError(f"variable index {var_index} out of range for dimension {dim}")
    sp = space(dim, order)
    c = np.zeros(sp.size)
    c[0] = point[var_index]
    if order >= 1:
        e = [0] * dim
        e[var_index] = 1
        c[sp.index[tuple(e)]] = 1.0
    return Jet(sp, c)


def seed_all(point, order):
    point = np.asarray(point, dtype=float).ravel()
    return [seed(point, i, order) for i in range(point.size)]


def extract(jet, alpha):
    """Partial derivative d^alpha F at the base point (alpha! times the coefficient)."""
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != jet.dim or min(alpha) < 0:
        raise ArgumentError(f"multi-index {alpha} does not match dimension {jet.dim}")
    if sum(alpha) > jet.order:
        raise ArgumentError(f"multi-index degree {sum(alpha)} exceeds jet order {jet.order}")
    return math.prod(math.factorial(a) for a in alpha) * jet.coefficient(alpha)


def lift(values, derivs):
    """Object array of order-1 jets with constant terms ``values`` and gradients ``derivs``.

    ``derivs`` has one more trailing axis (of length dim) than ``values``.
    """
    values = np.asarray(values, dtype=float)
    derivs = np.asarray(derivs, dtype=float)
    dim = derivs.shape[-1]
    sp = space(dim, 1)
    out = np.empty(values.shape, dtype=object)
    for idx in np.ndindex(values.shape):
        c = np.empty(dim + 1)
        c[0] = values[idx]
        c[1:] = derivs[idx]
        out[idx] = Jet(sp, c)
    return out


def constant_part(x):
    """Real value of a smooth scalar (jet or number)."""
    return x.value if isinstance(x, Jet) else float(x)


def constant_parts(arr):
    arr = np.asarray(arr, dtype=object)
    return np.vectorize(constant_part, otypes=[float])(arr) if arr.size else arr.astype(float)


def gradients(arr):
    """Gradients of an array of order-1 jets, new trailing axis."""
    arr = np.asarray(arr, dtype=object)
    dim = next(x.dim for x in arr.flat if isinstance(x, Jet))
    out = np.zeros(arr.shape + (dim,))
    for idx in np.ndindex(arr.shape):
        x = arr[idx]
        if isinstance(x, Jet):
            out[idx] = x.c[1 : dim + 1]
    return out


# univariate Taylor series of the elementary functions

def _poly_chain(p0, factor, k):
    """Polynomials P_j with P_{j+1} = P_j' * factor (derivatives of tanh-like functions)."""
    out = [p0]
    for _ in range(k):
        out.append(out[-1].deriv() * factor)
    return out


_X = Polynomial([0.0, 1.0])
_TANH_POLYS = _poly_chain(_X, 1 - _X**2, MAX_ORDER)
_TAN_POLYS = _poly_chain(_X, 1 + _X**2, MAX_ORDER)


def _sech_polys(k):
    out = [Polynomial([1.0])]
    for _ in range(k):
        r = out[-1]
        out.append(-_X * r + (1 - _X**2) * r.deriv())
    return out


_SECH_POLYS = _sech_polys(MAX_ORDER)


def _series(name, x0, k, p=None):
    fact = [math.factorial(j) for j in range(k + 1)]
    if name == "sin":
        d = [math.sin(x0), math.cos(x0), -math.sin(x0), -math.cos(x0)]
        return [d[j % 4] / fact[j] for j in range(k + 1)]
    if name == "cos":
        d = [math.cos(x0), -math.sin(x0), -math.cos(x0), math.sin(x0)]
        return [d[j % 4] / fact[j] for j in range(k + 1)]
    if name == "sinh":
        d = [math.sinh(x0), math.cosh(x0)]
        return [d[j % 2] / fact[j] for j in range(k + 1)]
    if name == "cosh":
        d = [math.cosh(x0), math.sinh(x0)]
        return [d[j % 2] / fact[j] for j in range(k + 1)]
    if name == "exp":
        e = math.exp(x0)
        return [e / fact[j] for j in range(k + 1)]
    if name == "tanh":
        t = math.tanh(x0)
        return [_TANH_POLYS[j](t) / fact[j] for j in range(k + 1)]
    if name == "tan":
        t = math.tan(x0)
        return [_TAN_POLYS[j](t) / fact[j] for j in range(k + 1)]
    if name == "sech":
        s, t = 1.0 / math.cosh(x0), math.tanh(x0)
        return [s * _SECH_POLYS[j](t) / fact[j] for j in range(k + 1)]
    if name == "log":
        return [math.log(x0)] + [(-1) ** (j + 1) / (j * x0**j) for j in range(1, k + 1)]
    if name == "pow":
        out, binom = [], 1.0
        for j in range(k + 1):
            out.append(binom * x0 ** (p - j))
            binom *= (p - j) / (j + 1)
        return out
    raise ArgumentError(f"unknown elementary function {name!r}")


def _check_domain(name, x0):
    if name in ("log", "sqrt") and not x0 > 0:
        raise DomainError(f"{name} requires a positive argument, got {x0!r}", value=x0)
    if name in ("abs", "sign") and x0 == 0:
        raise DomainError(f"{name} is not smooth at 0", value=x0)
    if name == "tan" and math.cos(x0) == 0:
        raise DomainError("tan is singular here", value=x0)


def _elem(name):
    def fn(x):
        x0 = x.value if isinstance(x, Jet) else float(x)
        _check_domain(name, x0)
        if not isinstance(x, Jet):
            if name == "sech":
                return 1.0 / math.cosh(x0)
            return getattr(math, name)(x0)
        return x.compose(_series(name, x0, x.order))

    fn.__name__ = name
    return fn


sin = _elem("sin")
cos = _elem("cos")
tan = _elem("tan")
sinh = _elem("sinh")
cosh = _elem("cosh")
tanh = _elem("tanh")
sech = _elem("sech")
exp = _elem("exp")
log = _elem("log")


def pow_real(x, p):
    """x**p for a real exponent; the base must be positive."""
    x0 = x.value if isinstance(x, Jet) else float(x)
    if not x0 > 0:
        raise DomainError(f"real power requires a positive base, got {x0!r}", value=x0)
    if not isinstance(x, Jet):
        return x0**p
    return x.compose(_series("pow", x0, x.order, p))


def pow_int(x, n):
    """x**n for an integer exponent by repeated squaring."""
    if not isinstance(x, Jet):
        x0 = float(x)
        if n < 0 and x0 == 0:
            raise SingularPointError("negative power of zero", value=x0)
        return x0**n
    if n < 0:
        return pow_int(x.reciprocal(), -n)
    result = Jet.constant(x.dim, x.order, 1.0)
    base = x
    while n:
        if n & 1:
            result = result * base
        n >>= 1
        if n:
            base = base * base
    return result


def sqrt(x):
    x0 = x.value if isinstance(x, Jet) else float(x)
    _check_domain("sqrt", x0)
    return pow_real(x, 0.5)


def sign(x):
    x0 = x.value if isinstance(x, Jet) else float(x)
    _check_domain("sign", x0)
    s = 1.0 if x0 > 0 else -1.0
    if isinstance(x, Jet):
        return Jet.constant(x.dim, x.order, s)
    return s


def abs_(x):
    x0 = x.value if isinstance(x, Jet) else float(x)
    _check_domain("abs", x0)
    if isinstance(x, Jet):
        return x if x0 > 0 else -x
    return abs(x0)


ELEMENTARY = {
    "sin": sin,
    "cos": cos,
    "tan": tan,
    "sinh": sinh,
    "cosh": cosh,
    "tanh": tanh,
    "sech": sech,
    "exp": exp,
    "log": log,
    "sqrt": sqrt,
    "abs": abs_,
    "sign": sign,
}


def jet_elem(fn, arg):
    try:
        return ELEMENTARY[fn](arg)
    except KeyError:
        raise ArgumentError(f"unknown elementary function {fn!r}") from None


def jet_arith(op, lhs, rhs):
    if op == "add":
        return lhs + rhs
    if op == "sub":
        return lhs - rhs
    if op == "mul":
        return lhs * rhs
    if op == "div":
        return lhs / rhs
    if op == "pow_int":
        return pow_int(lhs, int(rhs))
    if op == "pow_real":
        return pow_real(lhs, float(rhs))
    raise ArgumentError(f"unknown jet operation {op!r}")
