"""Quantization, dequantization, and the transported symbol algebra.

``quantize`` integrates a symbol against the adjoint family and lands in the
Hilbert-Schmidt operators; ``dequantize`` recovers a symbol from traces
against the family.  On the closed span of coefficient symbols the two maps
are mutually inverse isometries, which turns that span into an H*-algebra
under the transported star product and involution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (DEFAULT_TOL, RANK_DROP_TOL, MeasureSpace, Symbol, _readonly,
                   _require, as_operator, hs_norm, l2_inner, op_norm, trace_norm)
from .family import OperatorFamily, SqReport, verify_sq

#: Guard for materializing the three-point kernel of the explicit star product.
_KERNEL_ENTRY_CAP = 20_000_000


@dataclass(frozen=True, eq=False)
class Quantizer:
    """An operator family together with an orthonormal basis of its symbol range.

    ``b2_basis`` rows are symbol value vectors, orthonormal in the weighted
    inner product; their span is the image of the coefficient map inside
    L2 of the space (all of it for discrete Weyl systems, a proper subspace
    for compact-group backends).
    """

    fam: OperatorFamily
    b2_basis: np.ndarray
    b2_rank: int
    sq_report: SqReport

    @property
    def space(self) -> MeasureSpace:
        return self.fam.space

    def _pistar(self) -> np.ndarray:
        return np.conj(np.swapaxes(self.fam.stack, 1, 2))


def build_quantizer(fam: OperatorFamily, tol: float | None = None,
                    rng: np.random.Generator | None = None) -> Quantizer:
    """Orthonormalize the coefficient symbols of all elementary tensors.

    Raises if the family fails the square-integrability test.  The rank
    decision uses a relative singular-value drop tolerance.
    """
    report = verify_sq(fam, tol=tol, rng=rng)
    if not report.passed:
        raise ValueError(
            f"family fails square-integrability (deviation {report.max_deviation:.3e} "
            f"> tol {report.tol:.1e}); cannot quantize")
    d = fam.hdim
    coeff = np.swapaxes(fam.stack, 1, 2)          # C[s, i, j] = <pi(s)e_i, e_j>
    X = coeff.reshape(fam.npoints, d * d).T       # one coefficient symbol per row
    sqrt_w = np.sqrt(fam.space.weights)
    _, svals, Vh = np.linalg.svd(X * sqrt_w, full_matrices=False)
    rank = int(np.sum(svals > RANK_DROP_TOL * svals[0]))
    basis = Vh[:rank] / sqrt_w                    # orthonormal in the weighted metric
    return Quantizer(fam, _readonly(basis), rank, report)


def quantize(q: Quantizer, f: Symbol) -> np.ndarray:
    """Weighted sum of f(s) pi(s)*; kills the orthocomplement of the range."""
    _require(f.space == q.space, "symbol lives on a different space")
    wf = q.fam.space.weights * f.values
    return np.einsum("s,sij->ij", wf, q._pistar())


def dequantize(q: Quantizer, T) -> Symbol:
    """Symbol of an operator: s -> Tr[T pi(s)]."""
    T = as_operator(T, q.fam.hdim)
    values = np.einsum("ij,sji->s", T, q.fam.stack)
    return Symbol(q.space, values)


def project_b2(q: Quantizer, f: Symbol) -> Symbol:
    """Orthogonal projection onto the span of the coefficient symbols."""
    _require(f.space == q.space, "symbol lives on a different space")
    coeffs = q.b2_basis.conj() @ (q.space.weights * f.values)
    return Symbol(q.space, coeffs @ q.b2_basis)


def star(q: Quantizer, f: Symbol, g: Symbol) -> Symbol:
    """Transported product: dequantize the operator product.

    Inputs outside the symbol range are first projected (quantize does this
    implicitly), so the product is closed on the range.
    """
    return dequantize(q, quantize(q, f) @ quantize(q, g))


def involution(q: Quantizer, f: Symbol) -> Symbol:
    """Transported involution: dequantize the operator adjoint."""
    return dequantize(q, quantize(q, f).conj().T)


def _three_point_kernel(q: Quantizer) -> np.ndarray:
    """K[s, t, r] = Tr[pi(s)* pi(t)* pi(r)] for the explicit composition law."""
    m, d = q.fam.npoints, q.fam.hdim
    _require(m * m * m <= _KERNEL_ENTRY_CAP,
             "space too large to materialize the three-point kernel")
    pistar = q._pistar()
    ts = np.einsum("sab,tbc->stac", pistar, pistar)    # pi(s)* pi(t)*
    return np.einsum("stac,rca->str", ts, q.fam.stack)


def star_explicit(q: Quantizer, f: Symbol, g: Symbol) -> Symbol:
    """Composition law as a double integral against the three-point kernel.

    In finite dimensions the identity is a (right) approximate unit, so the
    limit in the abstract formula collapses to a single evaluation.  Agrees
    with the transported star on range symbols; this is the independent
    route used to cross-check it.
    """
    _require(f.space == q.space and g.space == q.space,
             "symbols live on a different space")
    K = _three_point_kernel(q)
    wf = q.space.weights * f.values
    wg = q.space.weights * g.values
    values = np.einsum("s,t,str->r", wf, wg, K)
    return Symbol(q.space, values)


def involution_explicit(q: Quantizer, f: Symbol) -> Symbol:
    """Explicit involution: r -> integral of Tr[pi(r) pi(s)] conj(f(s))."""
    _require(f.space == q.space, "symbol lives on a different space")
    two_point = np.einsum("rab,sba->rs", q.fam.stack, q.fam.stack)
    values = two_point @ (q.space.weights * np.conj(f.values))
    return Symbol(q.space, values)


def e_symbol(q: Quantizer, s: int) -> Symbol:
    """Point symbol: the symbol quantizing to pi(s)*."""
    return dequantize(q, q._pistar()[s])


def pairing_with_e(q: Quantizer, f: Symbol, s: int) -> complex:
    """Trace pairing Tr[quantize(f) pi(s)]; reproduces f(s) on range symbols."""
    T = quantize(q, f)
    return complex(np.einsum("ij,ji->", T, q.fam.stack[s]))


def quantize_measure(q: Quantizer, atoms, tol: float | None = None) -> np.ndarray:
    """Quantize a finite complex measure given as (point index, mass) atoms.

    A single unit atom at t returns pi(t)*; a density against the base
    measure reproduces plain quantization.  The operator-norm bound
    ||result|| <= total variation x sup ||pi(s)|| is asserted.
    """
    tol = q.fam.working_tol() if tol is None else tol
    pistar = q._pistar()
    T = np.zeros((q.fam.hdim, q.fam.hdim), dtype=complex)
    total_variation = 0.0
    for idx, mass in atoms:
        T += complex(mass) * pistar[int(idx)]
        total_variation += abs(complex(mass))
    sup_norm = max(op_norm(P) for P in q.fam.stack)
    if op_norm(T) > total_variation * sup_norm + tol:
        raise ArithmeticError("quantized measure violates the norm bound")
    return T


def symbol_norms(q: Quantizer, f: Symbol) -> tuple[float, float, float]:
    """Trace, Hilbert-Schmidt, and operator norm of the quantized symbol.

    Returns (b1, b2, binf); the chain binf <= b2 <= b1 is asserted.
    """
    T = quantize(q, f)
    b1, b2, binf = trace_norm(T), hs_norm(T), op_norm(T)
    slack = 1e-9 * max(1.0, b1)
    if not (binf <= b2 + slack and b2 <= b1 + slack):
        raise ArithmeticError("norm chain binf <= b2 <= b1 violated")
    return b1, b2, binf


def trace_pairing(q: Quantizer, f: Symbol, g: Symbol) -> complex:
    """Tr[quantize(f) quantize(g)*], the transported inner product."""
    Tf = quantize(q, f)
    Tg = quantize(q, g)
    return complex(np.vdot(Tg, Tf))


def mixed_trace(q: Quantizer, f: Symbol, S, tol: float | None = None) -> complex:
    """Tr[quantize(f) S], asserted equal to its integral form.

    The integral form pairs f against the dequantized operator:
    integral of f(s) Tr[pi(s)* S] dmu(s).
    """
    tol = q.fam.working_tol() if tol is None else tol
    S = as_operator(S, q.fam.hdim)
    left = complex(np.trace(quantize(q, f) @ S))
    traces = np.einsum("sji,ji->s", np.conj(q.fam.stack), S)  # Tr[pi(s)* S]
    right = complex(np.dot(q.space.weights, f.values * traces))
    scale = max(1.0, abs(left))
    if abs(left - right) > max(tol, 1e-9 * scale):
        raise ArithmeticError(
            f"mixed trace mismatch: {left} vs integral form {right}")
    return left
