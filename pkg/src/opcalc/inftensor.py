"""Restricted tensor products at finite truncation.

A restricted product holds finitely many factors, each a square-integrable
family with a distinguished base point where the family is the identity and a
distinguished unit vector.  The measure sequence indexed by the truncation
level N integrates over the first N factor spaces while the remaining factors
sit at their base points; square integrability holds exactly for vectors
embedded at level M <= N and only in the limit for generic vectors, which is
what the defect curves report.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import MeasureSpace, Symbol, _require, as_vector, product_space, vec_norm
from .family import OperatorFamily, verify_sq

DEFAULT_DIM_CAP = 4096
DEFAULT_FACTOR_CAP = 12


@dataclass(frozen=True)
class Factor:
    fam: OperatorFamily
    base_index: int
    w: np.ndarray


class RestrictedProduct:
    """Finitely many pointed factors with their materialized tensor data."""

    def __init__(self, factors: list[Factor]):
        self.factors = factors
        self.J = len(factors)
        self.dims = [f.fam.hdim for f in factors]
        self.full_dim = int(np.prod(self.dims))
        self._level_spaces: dict[int, MeasureSpace] = {}
        self._level_stacks: dict[int, np.ndarray] = {}

    def tail_vector(self, M: int) -> np.ndarray:
        """Kronecker product of the distinguished vectors beyond level M."""
        v = np.ones(1, dtype=complex)
        for f in self.factors[M:]:
            v = np.kron(v, f.w)
        return v

    def level_embedding(self, M: int) -> np.ndarray:
        """Isometry from the level-M tensor space into the full space."""
        _require(0 <= M <= self.J, "level out of range")
        dM = int(np.prod(self.dims[:M])) if M else 1
        return np.kron(np.eye(dM, dtype=complex), self.tail_vector(M)[:, None])

    def embed(self, x, M: int) -> np.ndarray:
        """Embed a level-M vector: append the distinguished tail."""
        x = as_vector(x, int(np.prod(self.dims[:M])) if M else 1)
        return np.kron(x, self.tail_vector(M))

    def level_space(self, N: int) -> MeasureSpace:
        """Product of the first N factor spaces (the support of mu^(N))."""
        _require(1 <= N <= self.J, "truncation level out of range")
        if N not in self._level_spaces:
            space = self.factors[0].fam.space
            for f in self.factors[1:N]:
                space = product_space(space, f.fam.space)
            self._level_spaces[N] = space
        return self._level_spaces[N]

    def level_stack(self, N: int) -> np.ndarray:
        """Full-space operators over the level-N points (tail factors are 1)."""
        _require(1 <= N <= self.J, "truncation level out of range")
        if N not in self._level_stacks:
            stack = self.factors[0].fam.stack
            for f in self.factors[1:N]:
                other = f.fam.stack
                ma, da = stack.shape[0], stack.shape[1]
                mb, db = other.shape[0], other.shape[1]
                stack = np.einsum("sij,tkl->stikjl", stack, other)
                stack = stack.reshape(ma * mb, da * db, da * db)
            tail_dim = int(np.prod(self.dims[N:])) if N < self.J else 1
            if tail_dim > 1:
                eye = np.eye(tail_dim, dtype=complex)
                m, d = stack.shape[0], stack.shape[1]
                stack = np.einsum("sij,kl->sikjl", stack, eye)
                stack = stack.reshape(m, d * tail_dim, d * tail_dim)
            self._level_stacks[N] = stack
        return self._level_stacks[N]


def build_restricted(factors, dim_cap: int = DEFAULT_DIM_CAP,
                     factor_cap: int = DEFAULT_FACTOR_CAP,
                     tol: float | None = None) -> RestrictedProduct:
    """Validate and assemble a restricted product.

    ``factors`` is a sequence of (family, base point index, unit vector).
    Every family must pass the square-integrability test, act as the
    identity at its base point, and come with a unit distinguished vector.
    """
    built = []
    for j, (fam, base_index, w) in enumerate(factors):
        t = (fam.working_tol() if tol is None else tol)
        w = as_vector(w, fam.hdim)
        _require(abs(vec_norm(w) - 1.0) <= t, f"factor {j}: vector must be unit")
        base_index = int(base_index)
        _require(0 <= base_index < fam.npoints, f"factor {j}: bad base point")
        gap = np.abs(fam.op(base_index) - np.eye(fam.hdim)).max()
        if gap > t:
            raise ValueError(
                f"factor {j} lacks an identity at its base point (gap {gap:.3e})")
        if not verify_sq(fam, tol=t).passed:
            raise ValueError(f"factor {j} fails square-integrability")
        built.append(Factor(fam, base_index, w))
    _require(1 <= len(built) <= factor_cap,
             f"factor count must be between 1 and {factor_cap}")
    rp = RestrictedProduct(built)
    _require(rp.full_dim <= dim_cap,
             f"total dimension {rp.full_dim} exceeds the cap {dim_cap}")
    return rp


def sq_defect(rp: RestrictedProduct, N: int, u, v) -> float:
    """Distance of the level-N orthogonality integral from its limit value.

    Zero (to tolerance) whenever u and v are embedded at a level M <= N;
    non-increasing to zero in N for arbitrary vectors of the full space.
    """
    u = as_vector(u, rp.full_dim)
    v = as_vector(v, rp.full_dim)
    stack = rp.level_stack(N)
    phi = (stack @ u) @ np.conj(v)
    integral = float(np.dot(rp.level_space(N).weights, np.abs(phi) ** 2))
    return abs(integral - vec_norm(u) ** 2 * vec_norm(v) ** 2)


def projected_overlap(rp: RestrictedProduct, N: int, M: int,
                      u1, v1, u2, v2) -> tuple[float, float]:
    """Level-N overlap integral against level-M projections, with its bound.

    Returns (integral of |<pi u1, P v1> <P v2, pi u2>| dmu^(N),
    ||u1|| ||P v1|| ||u2|| ||P v2||) where P projects onto the level-M range.
    """
    iota = rp.level_embedding(M)
    P = iota @ iota.conj().T
    pv1 = P @ as_vector(v1, rp.full_dim)
    pv2 = P @ as_vector(v2, rp.full_dim)
    u1 = as_vector(u1, rp.full_dim)
    u2 = as_vector(u2, rp.full_dim)
    stack = rp.level_stack(N)
    f1 = (stack @ u1) @ np.conj(pv1)
    f2 = (stack @ u2) @ np.conj(pv2)
    integral = float(np.dot(rp.level_space(N).weights, np.abs(f1) * np.abs(f2)))
    bound = vec_norm(u1) * vec_norm(pv1) * vec_norm(u2) * vec_norm(pv2)
    return integral, bound


def berezin_truncated(rp: RestrictedProduct, N: int, u,
                      f: Symbol) -> np.ndarray:
    """Truncated Berezin operator built on the non-adjoint frame pi(.)u.

    Full-space operator integrating f(s) |pi(s)u><pi(s)u| over the level-N
    measure; norm-bounded by ||u||^2 sup|f| and positive for positive f.
    """
    _require(f.space == rp.level_space(N),
             "symbol must live on the level-N product space")
    u = as_vector(u, rp.full_dim)
    stack = rp.level_stack(N)
    X = stack @ u                                     # pi(s) u per point
    wf = rp.level_space(N).weights * f.values
    return (X.T * wf) @ X.conj()


def frame_kernel_inf(rp: RestrictedProduct, wfactors=None):
    """On-demand reproducing kernel of the restricted-product frame.

    Points are given sparsely as {factor index: point index} (missing factors
    sit at their base points); the kernel value is the finite product of
    per-factor pairings <w_j(t_j), w_j(s_j)> with w_j(s) = pi_j(s)* w_j,
    base-base factors contributing exactly 1.
    """
    factors = rp.factors
    if wfactors is None:
        wvecs = [f.w for f in factors]
    else:
        wvecs = [as_vector(w, f.fam.hdim) for w, f in zip(wfactors, factors)]
        _require(len(wvecs) == len(factors), "one fiducial vector per factor")

    def normalize(point) -> dict:
        if isinstance(point, dict):
            items = point.items()
        else:
            items = enumerate(point)
        out = {}
        for j, idx in items:
            j, idx = int(j), int(idx)
            _require(0 <= j < rp.J, f"no factor {j} in this product")
            _require(0 <= idx < factors[j].fam.npoints,
                     f"factor {j} has no point {idx}")
            if idx != factors[j].base_index:
                out[j] = idx
        return out

    def kernel(s, t) -> complex:
        s = normalize(s)
        t = normalize(t)
        value = 1.0 + 0.0j
        for j in sorted(set(s) | set(t)):
            fac = factors[j]
            ws = fac.fam.op(s.get(j, fac.base_index)).conj().T @ wvecs[j]
            wt = fac.fam.op(t.get(j, fac.base_index)).conj().T @ wvecs[j]
            value *= complex(np.sum(wt * np.conj(ws)))
        return value

    return kernel
