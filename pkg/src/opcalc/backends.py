"""Concrete square-integrable families: trivial, discrete Weyl, finite-group
irreducibles, and the finite abelian metaplectic systems.

Measure normalization is decided here, never in core: discrete Weyl carries
1/N per phase-space point, group backends carry (irrep dim)/|G| per element
(the renormalized Haar measure that makes Schur orthogonality come out with
constant one), and the metaplectic k=2 system carries a numerically
calibrated constant on the dual factor.
"""

from __future__ import annotations

import itertools

import numpy as np

from .core import DEFAULT_TOL, MeasureSpace, _require, vec_norm
from .family import OperatorFamily


def trivial_backend() -> OperatorFamily:
    """One point of mass one, represented by the identity on dimension one."""
    space = MeasureSpace(("0",), np.array([1.0]))
    return OperatorFamily(space, np.ones((1, 1, 1), dtype=complex))


def discrete_weyl(N: int) -> OperatorFamily:
    """Finite Weyl system on Z_N x Z_N with weight 1/N per point.

    pi(a, b) = U^a V^b with U the cyclic shift and V the modulation by the
    N-th root of unity; the N^2 operators are an orthogonal basis of the
    Hilbert-Schmidt space with common norm sqrt(N), which is exactly the
    square-integrability normalization.
    """
    _require(N >= 2, "discrete Weyl system needs N >= 2")
    omega = np.exp(2j * np.pi / N)
    points, ops = [], []
    cols = np.arange(N)
    for a in range(N):
        for b in range(N):
            M = np.zeros((N, N), dtype=complex)
            M[(cols + a) % N, cols] = omega ** (b * cols)   # U^a V^b
            points.append(f"({a},{b})")
            ops.append(M)
    space = MeasureSpace(tuple(points), np.full(N * N, 1.0 / N))
    return OperatorFamily(space, np.array(ops))


# ---------------------------------------------------------------------------
# finite groups
# ---------------------------------------------------------------------------

def cyclic_table(n: int) -> np.ndarray:
    """Multiplication table of Z_n (index arithmetic mod n)."""
    _require(n >= 1, "group order must be positive")
    i = np.arange(n)
    return (i[:, None] + i[None, :]) % n


def cyclic_character(n: int, k: int) -> np.ndarray:
    """One-dimensional irrep j -> exp(2 pi i k j / n) as 1x1 matrices."""
    chars = np.exp(2j * np.pi * k * np.arange(n) / n)
    return chars.reshape(n, 1, 1)


def s3_table() -> tuple[np.ndarray, list[tuple[int, ...]]]:
    """Multiplication table of the permutations of three letters.

    Elements are ordered lexicographically as permutation tuples; entry
    (i, j) is the index of g_i composed with g_j (g_j applied first).
    """
    perms = sorted(itertools.permutations(range(3)))
    index = {p: i for i, p in enumerate(perms)}
    n = len(perms)
    table = np.zeros((n, n), dtype=int)
    for i, g in enumerate(perms):
        for j, h in enumerate(perms):
            table[i, j] = index[tuple(g[h[m]] for m in range(3))]
    return table, perms


def s3_standard_irrep() -> np.ndarray:
    """The two-dimensional irrep of S3 on the sum-zero plane in C^3."""
    _, perms = s3_table()
    B = np.array([[1 / np.sqrt(2), 1 / np.sqrt(6)],
                  [-1 / np.sqrt(2), 1 / np.sqrt(6)],
                  [0.0, -2 / np.sqrt(6)]])
    mats = []
    for g in perms:
        P = np.zeros((3, 3))
        for j in range(3):
            P[g[j], j] = 1.0
        mats.append(B.T @ P @ B)
    return np.array(mats, dtype=complex)


def s3_sign_irrep() -> np.ndarray:
    """The sign character of S3 as 1x1 matrices."""
    _, perms = s3_table()
    signs = []
    for g in perms:
        inversions = sum(1 for a in range(3) for b in range(a + 1, 3)
                         if g[a] > g[b])
        signs.append((-1.0) ** inversions)
    return np.array(signs, dtype=complex).reshape(-1, 1, 1)


def _check_group_table(table: np.ndarray) -> int:
    n = table.shape[0]
    _require(table.shape == (n, n), "group table must be square")
    _require(bool(np.all((0 <= table) & (table < n))),
             "group table entries must be element indices")
    identity = None
    for e in range(n):
        if np.array_equal(table[e], np.arange(n)) and \
                np.array_equal(table[:, e], np.arange(n)):
            identity = e
            break
    _require(identity is not None, "group table has no identity element")
    # associativity on all triples; cubic in |G| but these are desk-scale groups
    _require(bool(np.all(table[table, :] == table[:, table])),
             "group table is not associative")
    return identity


def finite_group_backend(table, irrep, measure_scale: float = 1.0,
                         tol: float = DEFAULT_TOL) -> OperatorFamily:
    """Family over a finite group from a unitary irreducible representation.

    Weights are measure_scale * d / |G| per element; the default scale 1 is
    the renormalized Haar measure under which Schur orthogonality makes the
    family square integrable.  Passing measure_scale = 1/d reproduces the
    plain normalized Haar measure, which genuinely fails the test.
    """
    table = np.asarray(table, dtype=int)
    _check_group_table(table)
    n = table.shape[0]
    mats = np.asarray(irrep, dtype=complex)
    _require(mats.ndim == 3 and mats.shape[0] == n,
             "need one representation matrix per group element")
    d = mats.shape[1]
    _require(mats.shape[2] == d, "representation matrices must be square")
    eye = np.eye(d)
    for g in range(n):
        if np.abs(mats[g].conj().T @ mats[g] - eye).max() > tol:
            raise ValueError(f"representation matrix {g} is not unitary")
    for g in range(n):
        for h in range(n):
            if np.abs(mats[g] @ mats[h] - mats[table[g, h]]).max() > tol:
                raise ValueError(
                    f"matrices do not form a homomorphism at pair ({g}, {h})")
    _require(measure_scale > 0, "measure scale must be positive")
    weights = np.full(n, measure_scale * d / n)
    space = MeasureSpace(tuple(str(g) for g in range(n)), weights)
    return OperatorFamily(space, mats)


# ---------------------------------------------------------------------------
# finite abelian metaplectic systems
# ---------------------------------------------------------------------------

def _abelian_elements(orders: tuple[int, ...]) -> list[tuple[int, ...]]:
    return list(itertools.product(*(range(n) for n in orders)))


def abelian_metaplectic(orders, k: int, tol: float = DEFAULT_TOL) -> OperatorFamily:
    """Phase-space translation system of a finite abelian group.

    G is the direct sum of cyclic groups of the given orders; the Hilbert
    space is functions on G with the counting norm and the phase space is
    G x dual(G).  The variant k = 1 shifts then modulates; k = 2 is the
    symmetric variant and requires doubling to be an automorphism, i.e. odd
    group order.  The dual measure is counting/|G| (which makes the Fourier
    transform unitary, checked here); for k = 2 an additional calibration
    constant is computed numerically and validated on all basis pairs.
    """
    orders = tuple(int(n) for n in orders)
    _require(len(orders) >= 1 and all(n >= 1 for n in orders),
             "orders must be positive integers")
    _require(k in (1, 2), "variant k must be 1 or 2")
    size = int(np.prod(orders))
    if k == 2 and size % 2 == 0:
        raise ValueError(
            "k=2 requires the map x -> 2x to be an automorphism of G; "
            f"group order {size} is even so doubling is not invertible")

    elements = _abelian_elements(orders)
    index = {x: i for i, x in enumerate(elements)}

    # character <xi, x> = exp(2 pi i sum_l xi_l x_l / n_l)
    phase = np.zeros((size, size))
    for a, xi in enumerate(elements):
        for b, x in enumerate(elements):
            phase[a, b] = sum(xi[l] * x[l] / orders[l] for l in range(len(orders)))
    characters = np.exp(2j * np.pi * phase)   # characters[xi, x]

    # Fourier transform L2(G, counting) -> L2(dual, counting/|G|) must be unitary
    F = characters.conj()
    gram = (F.conj().T @ F) / size
    _require(bool(np.abs(gram - np.eye(size)).max() <= max(tol, 1e-12 * size)),
             "dual measure normalization does not make the Fourier transform unitary")

    shifted = np.zeros((size, size), dtype=int)   # index of z + x
    for b, x in enumerate(elements):
        for c, z in enumerate(elements):
            shifted[b, c] = index[tuple((z[l] + x[l]) % orders[l]
                                        for l in range(len(orders)))]

    points, ops = [], []
    rows = np.arange(size)
    for x_i, x in enumerate(elements):
        for xi_i, xi in enumerate(elements):
            M = np.zeros((size, size), dtype=complex)
            for z_i in range(size):
                # (pi_k(x, xi) u)(z) = <xi, k z + (k-1) x> u(z + x)
                arg = tuple((k * elements[z_i][l] + (k - 1) * x[l]) % orders[l]
                            for l in range(len(orders)))
                M[z_i, shifted[x_i, z_i]] = characters[xi_i, index[arg]]
            points.append(f"({','.join(map(str, x))};{','.join(map(str, xi))})")
            ops.append(M)
    ops = np.array(ops)

    base_weight = 1.0 / size          # counting x counting/|G|
    if k == 1:
        weights = np.full(size * size, base_weight)
    else:
        # calibrate: c = ||u||^2 ||v||^2 / uncalibrated integral, per basis pair
        c_values = np.empty((size, size))
        for i in range(size):
            for j in range(size):
                phi = ops[:, j, i]            # <pi(s) e_i, e_j> over all points
                uncal = base_weight * float(np.sum(np.abs(phi) ** 2))
                _require(uncal > 0, "degenerate calibration integral")
                c_values[i, j] = 1.0 / uncal
        spread = float(c_values.max() - c_values.min())
        _require(spread <= tol * c_values.max(),
                 "calibration constant is not basis-independent")
        weights = np.full(size * size, base_weight * float(c_values.mean()))
    space = MeasureSpace(tuple(points), weights)
    return OperatorFamily(space, ops)


def metaplectic_calibration(orders, tol: float = DEFAULT_TOL) -> float:
    """The calibration constant of the k=2 system relative to counting/|G|."""
    fam = abelian_metaplectic(orders, k=2, tol=tol)
    size = int(np.prod(tuple(int(n) for n in orders)))
    return float(fam.space.weights[0] * size)


# ---------------------------------------------------------------------------
# declarative backend specs (the CLI's input format)
# ---------------------------------------------------------------------------

_GROUP_PRESETS = {
    "s3_standard": lambda: (s3_table()[0], s3_standard_irrep()),
    "s3_sign": lambda: (s3_table()[0], s3_sign_irrep()),
}


def backend_from_spec(spec: dict):
    """Build a backend from its JSON description.

    Returns an OperatorFamily for exact kinds and a MagneticBackend for
    "magnetic_weyl".  Raises ValueError on invalid parameters.
    """
    from . import magnetic  # local import: magnetic pulls in grid machinery

    _require(isinstance(spec, dict) and "kind" in spec,
             "backend spec must be an object with a 'kind'")
    kind = spec["kind"]
    if kind == "trivial":
        return trivial_backend()
    if kind == "discrete_weyl":
        return discrete_weyl(int(spec["N"]))
    if kind == "finite_group":
        if "preset" in spec:
            preset = spec["preset"]
            if preset == "cyclic_character":
                n = int(spec["order"])
                table, irrep = cyclic_table(n), cyclic_character(n, int(spec.get("k", 1)))
            else:
                _require(preset in _GROUP_PRESETS, f"unknown group preset {preset!r}")
                table, irrep = _GROUP_PRESETS[preset]()
        else:
            table = np.asarray(spec["table"], dtype=int)
            raw = spec["irrep"]
            irrep = np.asarray(raw["re"], dtype=float) + \
                1j * np.asarray(raw.get("im", np.zeros_like(raw["re"])), dtype=float)
        return finite_group_backend(table, irrep,
                                    measure_scale=float(spec.get("measure_scale", 1.0)))
    if kind == "abelian_metaplectic":
        return abelian_metaplectic(spec["orders"], int(spec["k"]))
    if kind == "magnetic_weyl":
        n = int(spec["n"])
        A = spec.get("A")
        B = spec.get("B")
        return magnetic.magnetic_weyl_grid(
            n, float(spec["L"]),
            A=None if A is None else np.asarray(A, dtype=float),
            B=None if B is None else np.asarray(B, dtype=float),
            tol=float(spec.get("tol", 1e-6)))
    raise ValueError(f"unknown backend kind {kind!r}")
