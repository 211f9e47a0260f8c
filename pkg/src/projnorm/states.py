"""Benchmark quantum states, as vector tensors and as density matrices.

Conventions: computational basis, |i> is the standard basis vector e_i;
operator-shaped tensors put the m ket indices first and the m bra indices
last. All vector states have unit Frobenius norm; all density constructors
yield Hermitian trace-1 operators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .optimize import FitResult
from .tensor import (COMPLEX, REAL, Tensor, frobenius_norm, operator_matrix,
                     split_operator_dims)

DEFAULT_VERDICT_TOL = 0.02

SEPARABLE = "separable"
ENTANGLED = "entangled"
INCONCLUSIVE = "inconclusive"


@dataclass
class StateSpec:
    """A named benchmark state with its parameters and requested form."""

    name: str
    params: dict = dataclass_field(default_factory=dict)
    field: str = COMPLEX
    form: str = "vector"


# ---------------------------------------------------------------------------
# Pure states
# ---------------------------------------------------------------------------

def bell(field: str = COMPLEX) -> Tensor:
    """(|00> + |11>) / sqrt(2) as a 2x2 tensor."""
    data = np.zeros((2, 2))
    data[0, 0] = data[1, 1] = 1.0 / math.sqrt(2.0)
    return Tensor(data, field)


def ghz(n: int = 3, field: str = COMPLEX) -> Tensor:
    """(|0...0> + |1...1>) / sqrt(2) on n qubits."""
    if n < 2:
        raise ValueError("ghz needs n >= 2")
    data = np.zeros((2,) * n)
    data[(0,) * n] = data[(1,) * n] = 1.0 / math.sqrt(2.0)
    return Tensor(data, field)


def w(n: int = 3, field: str = COMPLEX) -> Tensor:
    """Uniform superposition of the n weight-1 basis states."""
    if n < 2:
        raise ValueError("w needs n >= 2")
    data = np.zeros((2,) * n)
    for k in range(n):
        idx = [0] * n
        idx[k] = 1
        data[tuple(idx)] = 1.0 / math.sqrt(n)
    return Tensor(data, field)


def psi_b(field: str = COMPLEX) -> Tensor:
    """(|001> + |010> + |100> - |111>) / 2, a symmetric 3-qubit state."""
    data = np.zeros((2, 2, 2))
    data[0, 0, 1] = data[0, 1, 0] = data[1, 0, 0] = 0.5
    data[1, 1, 1] = -0.5
    return Tensor(data, field)


def product_state(factors, field: str | None = None) -> Tensor:
    """Product of the given factors, normalized to unit Frobenius norm."""
    from .tensor import outer_product
    t = outer_product(factors)
    norm = frobenius_norm(t)
    if norm == 0.0:
        raise ValueError("product of zero factors")
    out = Tensor(t.data / norm, t.field)
    return out if field is None else out.with_field(field)


def random_product_state(n: int = 2, d: int = 2, field: str = COMPLEX,
                         seed: int = 0) -> Tensor:
    """Seeded random product of n unit vectors of dimension d."""
    if n < 2 or d < 1:
        raise ValueError("need n >= 2 parties and d >= 1")
    rng = np.random.default_rng(seed)
    factors = []
    for _ in range(n):
        v = rng.standard_normal(d)
        if field == COMPLEX:
            v = v + 1j * rng.standard_normal(d)
        factors.append(v / np.linalg.norm(v))
    return product_state(factors, field)


def random_state(dims, field: str = COMPLEX, seed: int = 0) -> Tensor:
    """Seeded Gaussian tensor normalized to unit Frobenius norm."""
    dims = tuple(int(d) for d in dims)
    rng = np.random.default_rng(seed)
    data = rng.standard_normal(dims)
    if field == COMPLEX:
        data = data + 1j * rng.standard_normal(dims)
    return Tensor(data / np.linalg.norm(data.ravel()), field)


def random_symmetric_state(d: int, m: int, field: str = COMPLEX,
                           seed: int = 0) -> Tensor:
    """Seeded random symmetric tensor (permutation average, renormalized)."""
    from .tensor import symmetrize
    raw = random_state((d,) * m, field, seed)
    sym = symmetrize(raw)
    norm = frobenius_norm(sym)
    if norm < 1e-12:
        raise ValueError("symmetrized draw vanished; use another seed")
    return Tensor(sym.data / norm, field)


# ---------------------------------------------------------------------------
# Density matrices
# ---------------------------------------------------------------------------

def density_from_pure(psi: Tensor) -> Tensor:
    """psi psi* as an operator tensor of shape dims + dims; trace 1 for a
    unit-norm input."""
    flat = psi.data.ravel()
    op = np.multiply.outer(flat, flat.conj()).reshape(psi.shape + psi.shape)
    field = psi.field if np.all(op.imag == 0.0) else COMPLEX
    return Tensor(op, field)


def _ket_qudit(d: int, i: int, j: int) -> np.ndarray:
    """|ij> on C^d (x) C^d as a flat d^2 vector."""
    v = np.zeros(d * d)
    v[i * d + j] = 1.0
    return v


def _proj(vec: np.ndarray) -> np.ndarray:
    return np.multiply.outer(vec, vec.conj())


def dps_3x3(alpha: float, field: str = COMPLEX) -> Tensor:
    """Two-qutrit family (2/7)|psi+><psi+| + (alpha/7) sigma+
    + ((5-alpha)/7) V sigma+ V for 0 <= alpha <= 5, with
    |psi+> = (1/sqrt(3)) sum_i |ii>, sigma+ the cyclic classical mixture and
    V the swap of the two systems."""
    if not (0.0 <= alpha <= 5.0):
        raise ValueError("dps_3x3 needs 0 <= alpha <= 5")
    d = 3
    psi_plus = sum(_ket_qudit(d, i, i) for i in range(d)) / math.sqrt(d)
    sigma_plus = (_proj(_ket_qudit(d, 0, 1)) + _proj(_ket_qudit(d, 1, 2))
                  + _proj(_ket_qudit(d, 2, 0))) / 3.0
    swap = np.zeros((d * d, d * d))
    for i in range(d):
        for j in range(d):
            swap[j * d + i, i * d + j] = 1.0
    rho = (2.0 / 7.0) * _proj(psi_plus) \
        + (alpha / 7.0) * sigma_plus \
        + ((5.0 - alpha) / 7.0) * (swap @ sigma_plus @ swap)
    return Tensor(rho.reshape(d, d, d, d), field)


def dps_4x4(alpha: float, field: str = COMPLEX) -> Tensor:
    """Two-ququart family (1/(2+alpha)) (|psi1><psi1| + |psi2><psi2|
    + alpha sigma) for alpha >= 0."""
    if alpha < 0.0:
        raise ValueError("dps_4x4 needs alpha >= 0")
    d = 4
    psi1 = 0.5 * (_ket_qudit(d, 0, 0) + _ket_qudit(d, 1, 1)
                  + math.sqrt(2.0) * _ket_qudit(d, 2, 2))
    psi2 = 0.5 * (_ket_qudit(d, 0, 1) + _ket_qudit(d, 1, 0)
                  + math.sqrt(2.0) * _ket_qudit(d, 3, 3))
    sigma = sum(_proj(_ket_qudit(d, i, j))
                for i, j in [(0, 2), (0, 3), (1, 2), (1, 3),
                             (2, 0), (2, 1), (3, 0), (3, 1)]) / 8.0
    rho = (_proj(psi1) + _proj(psi2) + alpha * sigma) / (2.0 + alpha)
    return Tensor(rho.reshape(d, d, d, d), field)


def zzzg(a: float, field: str = COMPLEX) -> Tensor:
    """Two-qutrit bound-entanglement family with prefactor 1/(8a+1),
    0 < a < 1. PSD status is checked, not assumed, at each requested a."""
    if not (0.0 < a < 1.0):
        raise ValueError("zzzg needs 0 < a < 1")
    mat = np.zeros((9, 9))
    for i in range(9):
        mat[i, i] = a
    mat[6, 6] = mat[8, 8] = (1.0 + a) / 2.0
    for i in (0, 4, 8):
        for j in (0, 4, 8):
            if i != j:
                mat[i, j] = a
    mat[6, 8] = mat[8, 6] = math.sqrt(1.0 - a * a) / 2.0
    mat /= 8.0 * a + 1.0
    min_eig = float(np.linalg.eigvalsh(mat)[0])
    if min_eig < -1e-10:
        raise ValueError(f"zzzg({a}) is not PSD (min eigenvalue {min_eig:.3e})")
    return Tensor(mat.reshape(3, 3, 3, 3), field)


def mix_white_noise(rho: Tensor, p: float) -> Tensor:
    """p * rho + (1 - p) * I/D with D the total dimension; trace preserved."""
    if not (0.0 <= p <= 1.0):
        raise ValueError("mixing parameter p must be in [0, 1]")
    dims = split_operator_dims(rho.shape)
    total = math.prod(dims)
    mixed = p * rho.data.reshape(total, total) + (1.0 - p) * np.eye(total) / total
    field = rho.field if np.all(mixed.imag == 0.0) else COMPLEX
    return Tensor(mixed.reshape(rho.shape), field)


# ---------------------------------------------------------------------------
# Separability verdict
# ---------------------------------------------------------------------------

def separability_verdict(result: FitResult, tol: float = DEFAULT_VERDICT_TOL,
                         target: Tensor | None = None) -> str:
    """Classify a density fit: norm 1 means separable, norm above 1 means
    entangled.

    The norm estimate is an upper bound only up to the residual
    reconstruction error, so the entangled verdict additionally requires
    norm - 1 > tol + recon_error / ||rho||_F (the margin falls back to the
    raw recon_error when the target is not supplied; ||rho||_F <= 1 for
    trace-1 states, so the fallback is the more conservative of the two).
    Unconverged fits are inconclusive.
    """
    if not result.converged:
        return INCONCLUSIVE
    if result.norm_estimate <= 1.0 + tol:
        return SEPARABLE
    margin = result.recon_error
    if target is not None:
        margin = result.recon_error / frobenius_norm(target)
    if result.norm_estimate - 1.0 > tol + margin:
        return ENTANGLED
    return INCONCLUSIVE


# ---------------------------------------------------------------------------
# Named-state registry (CLI surface)
# ---------------------------------------------------------------------------

def _int_param(params, key, default):
    value = params.get(key, default)
    out = int(value)
    if out != value:
        raise ValueError(f"parameter {key} must be an integer, got {value}")
    return out


def _build_bell(params, field):
    return bell(field)


def _build_ghz(params, field):
    return ghz(_int_param(params, "n", 3), field)


def _build_w(params, field):
    return w(_int_param(params, "n", 3), field)


def _build_psi_b(params, field):
    return psi_b(field)


def _build_product(params, field):
    return random_product_state(_int_param(params, "n", 2),
                                _int_param(params, "d", 2), field,
                                _int_param(params, "seed", 0))


def _build_random(params, field):
    n = _int_param(params, "n", 3)
    d = _int_param(params, "d", 2)
    return random_state((d,) * n, field, _int_param(params, "seed", 0))


def _build_random_symmetric(params, field):
    return random_symmetric_state(_int_param(params, "d", 2),
                                  _int_param(params, "n", 3), field,
                                  _int_param(params, "seed", 0))


def _build_dps3(params, field):
    return dps_3x3(float(params.get("alpha", 2.5)), field)


def _build_dps4(params, field):
    return dps_4x4(float(params.get("alpha", 1.0)), field)


def _build_zzzg(params, field):
    rho = zzzg(float(params.get("a", 0.5)), field)
    p = float(params.get("p", 1.0))
    return mix_white_noise(rho, p) if p != 1.0 else rho


STATE_REGISTRY = {
    "bell": ("vector", _build_bell),
    "ghz": ("vector", _build_ghz),
    "w": ("vector", _build_w),
    "psi_b": ("vector", _build_psi_b),
    "product": ("vector", _build_product),
    "random": ("vector", _build_random),
    "random_symmetric": ("vector", _build_random_symmetric),
    "dps3": ("density", _build_dps3),
    "dps4": ("density", _build_dps4),
    "zzzg": ("density", _build_zzzg),
}


def state_form(name: str) -> str:
    if name not in STATE_REGISTRY:
        raise ValueError(f"unknown state {name!r}; available: "
                         f"{', '.join(sorted(STATE_REGISTRY))}")
    return STATE_REGISTRY[name][0]


def build_state(spec: StateSpec) -> Tensor:
    """Construct a named benchmark state from its spec."""
    form, builder = STATE_REGISTRY.get(spec.name, (None, None))
    if builder is None:
        raise ValueError(f"unknown state {spec.name!r}; available: "
                         f"{', '.join(sorted(STATE_REGISTRY))}")
    tensor = builder(dict(spec.params), spec.field)
    if spec.form == "density" and form == "vector":
        tensor = density_from_pure(tensor)
    return tensor


def make_state(name: str, field: str = COMPLEX, form: str | None = None,
               **params) -> Tensor:
    """Convenience wrapper over build_state."""
    natural = state_form(name)
    return build_state(StateSpec(name=name, params=params, field=field,
                                 form=form or natural))
