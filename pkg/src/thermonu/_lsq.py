"""Well-conditioned least-squares polynomial fits returning power-basis coefficients.

Raw Vandermonde matrices in degrees Celsius (or high tensor degrees on the
[-0.5, 0.5] ramps) are badly conditioned, so every fit here solves in a
Legendre basis on the data's own domain mapped to [-1, 1] and converts the
solution back to plain monomial coefficients afterwards.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from numpy.polynomial import Legendre, Polynomial
from numpy.polynomial import legendre as L

from .errors import SingularFitError


@lru_cache(maxsize=256)
def legendre_to_power(deg: int, domain: tuple[float, float]) -> np.ndarray:
    """Matrix K with K[:, k] = power coefficients (in x) of P_k mapped from `domain`."""
    K = np.zeros((deg + 1, deg + 1))
    for k in range(deg + 1):
        c = Legendre.basis(k, domain=list(domain)).convert(kind=Polynomial).coef
        K[: c.size, k] = c
    K.flags.writeable = False
    return K


def _scaled(x: np.ndarray, domain: tuple[float, float]) -> np.ndarray:
    lo, hi = domain
    return (2.0 * x - (hi + lo)) / (hi - lo)


def _solve(V: np.ndarray, Y: np.ndarray, what: str) -> np.ndarray:
    coef, _, rank, sv = np.linalg.lstsq(V, Y, rcond=None)
    if rank < V.shape[1]:
        raise SingularFitError(
            f"{what}: design matrix {V.shape} has rank {rank} < {V.shape[1]}"
        )
    return coef


def power_fit(x, Y, deg: int, what: str = "polynomial fit") -> np.ndarray:
    """Least-squares fit of each column of ``Y`` onto powers ``x**0 .. x**deg``.

    ``x`` has shape (n,), ``Y`` shape (n,) or (n, k). Returns coefficients of
    shape (deg+1,) or (deg+1, k), row ``j`` multiplying ``x**j``.
    """
    x = np.asarray(x, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if deg < 0:
        raise ValueError("degree must be >= 0")
    n_distinct = np.unique(x).size
    if n_distinct < deg + 1:
        raise SingularFitError(
            f"{what}: {n_distinct} distinct abscissae cannot determine degree {deg}"
        )
    domain = (float(x.min()), float(x.max()))
    if domain[0] == domain[1]:
        domain = (domain[0] - 1.0, domain[1] + 1.0)
    V = L.legvander(_scaled(x, domain), deg)
    c = _solve(V, Y, what)
    return legendre_to_power(deg, domain) @ c


def axis_pinv(coords: np.ndarray, deg: int, domain: tuple[float, float], what: str):
    """(Legendre pseudoinverse, Legendre->power matrix) for one axis of a tensor fit."""
    coords = np.asarray(coords, dtype=float)
    if coords.size < deg + 1:
        raise SingularFitError(
            f"{what}: {coords.size} samples along an axis cannot determine degree {deg}"
        )
    V = L.legvander(_scaled(coords, domain), deg)
    if np.linalg.matrix_rank(V) < deg + 1:
        raise SingularFitError(f"{what}: axis design is rank deficient")
    return np.linalg.pinv(V), legendre_to_power(deg, tuple(map(float, domain)))


def tensor_fit(u, v, Z, deg: int, domain=(-0.5, 0.5), what: str = "tensor fit"):
    """Fit Z[i, j] ~ sum_{q,z} C[q, z] * u[i]**q * v[j]**z over a full grid.

    The basis is a Kronecker product, so the least-squares solution factors
    into one pseudoinverse per axis: C = pinv(Vu) Z pinv(Vv)^T.
    """
    Z = np.asarray(Z, dtype=float)
    Pu, Ku = axis_pinv(u, deg, domain, what)
    Pv, Kv = axis_pinv(v, deg, domain, what)
    D = Pu @ Z @ Pv.T
    return Ku @ D @ Kv.T


def polyval_power(coef: np.ndarray, x) -> np.ndarray:
    """Evaluate power-basis coefficients (first axis = exponent) by Horner's rule."""
    x = np.asarray(x, dtype=float)
    out = np.zeros(np.broadcast_shapes(x.shape, coef.shape[1:]))
    for c in coef[::-1]:
        out = out * x + c
    return out
