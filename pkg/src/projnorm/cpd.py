"""Adaptive-rank canonical polyadic models, losses, and analytic gradients.

A model approximates a target tensor as T' = sum_j C_j * phi_j, where each
phi_j is a unit-Frobenius rank-one tensor built from per-mode core vectors
(one shared core per term in symmetric mode). The density-matrix variant
uses rank-one product operators Phi_j = (x)_i |a_j^i><b_j^i| normalized to
unit trace norm; since the trace norm of a rank-one product operator equals
the product of its ket and bra Euclidean norms, a density model is exactly
a 2m-mode CP model whose last m cores are the conjugated bras, and one
engine serves all three variants.

The total loss combines three costs:

    k1 * ||T - T'||_F  +  k2 * sum_j 1{|C_j| > eps}  +  k3 * sum_j |C_j|

Gradients are descent gradients of the differentiable part (k1 and k3
terms). Complex parameters use the conjugate-coordinate (Wirtinger)
convention, i.e. grad = dL/d(Re z) + i * dL/d(Im z), whose negative is the
steepest-descent direction; the indicator term is piecewise constant and
contributes no gradient, and d|C|/dC at C = 0 is taken to be 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .tensor import COMPLEX, REAL, Tensor, _FIELDS

DEGENERACY_FLOOR = 1e-12
EXACT_FIT_GUARD = 1e-14


class DegenerateTermError(ValueError):
    """A core vector fell below the degeneracy floor; the fitting loop
    responds by re-randomizing that core."""

    def __init__(self, term: int, mode: int, norm: float):
        super().__init__(f"core (term={term}, mode={mode}) has norm {norm:.3e} "
                         f"below the degeneracy floor {DEGENERACY_FLOOR:.0e}")
        self.term = term
        self.mode = mode


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------

@dataclass
class LossWeights:
    """Loss weights k1 (reconstruction), k2 (rank count), k3 (norm cost) and
    the indicator threshold epsilon."""

    k1: float = 100.0
    k2: float = 1.0
    k3: float = 1.0
    epsilon: float = 1e-3

    def __post_init__(self):
        if self.k1 <= 0:
            raise ValueError("k1 must be positive")
        if self.k2 < 0 or self.k3 < 0:
            raise ValueError("k2 and k3 must be nonnegative")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")


@dataclass
class LossBreakdown:
    """Loss split into its raw parts plus the weighted total."""

    recon: float
    rank_count: int
    norm_sum: float
    total: float


def _check_field_arrays(field_tag, arrays):
    if field_tag not in _FIELDS:
        raise ValueError(f"field must be 'real' or 'complex', got {field_tag!r}")
    if field_tag == REAL:
        for a in arrays:
            if np.any(a.imag != 0.0):
                raise ValueError("real-field model has nonzero imaginary parts")


@dataclass
class CpModel:
    """R candidate rank-one terms: per-mode cores a_j^i plus coefficients C_j.

    `cores` holds one (R, d_i) array per mode; in symmetric mode it holds a
    single (R, d) array reused across all m slots.
    """

    dims: tuple[int, ...]
    R: int
    field: str
    cores: list[np.ndarray]
    coeffs: np.ndarray
    symmetric: bool = False

    def __post_init__(self):
        self.dims = tuple(int(d) for d in self.dims)
        if self.R < 1:
            raise ValueError("candidate rank R must be >= 1")
        if len(self.dims) < 1 or any(d < 1 for d in self.dims):
            raise ValueError(f"invalid dims {self.dims}")
        self.cores = [np.array(c, dtype=np.complex128) for c in self.cores]
        self.coeffs = np.array(self.coeffs, dtype=np.complex128).reshape(self.R)
        if self.symmetric:
            if len(set(self.dims)) != 1:
                raise ValueError("symmetric mode requires equal dims")
            if len(self.cores) != 1:
                raise ValueError("symmetric mode stores a single core array")
            if self.cores[0].shape != (self.R, self.dims[0]):
                raise ValueError("core array must have shape (R, d)")
        else:
            if len(self.cores) != len(self.dims):
                raise ValueError("need one core array per mode")
            for i, (c, d) in enumerate(zip(self.cores, self.dims)):
                if c.shape != (self.R, d):
                    raise ValueError(f"core array {i} has shape {c.shape}, "
                                     f"expected {(self.R, d)}")
        _check_field_arrays(self.field, self.cores + [self.coeffs])

    @property
    def order(self) -> int:
        return len(self.dims)

    def mode_cores(self) -> list[np.ndarray]:
        """Per-mode core arrays; the symmetric core repeats across all slots."""
        if self.symmetric:
            return [self.cores[0]] * len(self.dims)
        return self.cores


@dataclass
class DensityCpModel:
    """R candidate rank-one operator terms: ket cores a_j^i, bra cores b_j^i,
    coefficients C_j, over m parties with dims d_1..d_m."""

    dims: tuple[int, ...]
    R: int
    field: str
    kets: list[np.ndarray]
    bras: list[np.ndarray]
    coeffs: np.ndarray

    def __post_init__(self):
        self.dims = tuple(int(d) for d in self.dims)
        if self.R < 1:
            raise ValueError("candidate rank R must be >= 1")
        if len(self.dims) < 1 or any(d < 1 for d in self.dims):
            raise ValueError(f"invalid dims {self.dims}")
        self.kets = [np.array(c, dtype=np.complex128) for c in self.kets]
        self.bras = [np.array(c, dtype=np.complex128) for c in self.bras]
        self.coeffs = np.array(self.coeffs, dtype=np.complex128).reshape(self.R)
        if len(self.kets) != len(self.dims) or len(self.bras) != len(self.dims):
            raise ValueError("need one ket and one bra array per party")
        for i, d in enumerate(self.dims):
            if self.kets[i].shape != (self.R, d) or self.bras[i].shape != (self.R, d):
                raise ValueError(f"party {i} cores must have shape {(self.R, d)}")
        _check_field_arrays(self.field, self.kets + self.bras + [self.coeffs])

    @property
    def order(self) -> int:
        return len(self.dims)

    @property
    def operator_shape(self) -> tuple[int, ...]:
        return self.dims + self.dims

    def mode_cores(self) -> list[np.ndarray]:
        """Effective 2m-mode cores: kets, then conjugated bras. This turns
        |a><b| entries a_r * conj(b_s) into a plain outer product."""
        return list(self.kets) + [b.conj() for b in self.bras]


@dataclass
class CpGradients:
    """Descent gradients mirroring a CpModel's parameter grid."""

    cores: list[np.ndarray]
    coeffs: np.ndarray


@dataclass
class DensityGradients:
    """Descent gradients mirroring a DensityCpModel's parameter grid."""

    kets: list[np.ndarray]
    bras: list[np.ndarray]
    coeffs: np.ndarray


# ---------------------------------------------------------------------------
# Array-level engine (shared by the public ops and the fitting loop)
# ---------------------------------------------------------------------------

def _row_norms(core: np.ndarray) -> np.ndarray:
    return np.sqrt((core.real * core.real + core.imag * core.imag).sum(axis=1))


def _normalize_cores(cores):
    """Per-row normalized cores and their norms; degenerate rows raise."""
    norms = []
    normalized = []
    for mode, core in enumerate(cores):
        n = _row_norms(core)
        bad = np.flatnonzero(n < DEGENERACY_FLOOR)
        if bad.size:
            raise DegenerateTermError(int(bad[0]), mode, float(n[bad[0]]))
        norms.append(n)
        normalized.append(core / n[:, None])
    return normalized, norms


def _rowwise_kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # row j of the result is kron(a[j], b[j]); earlier factors vary slower,
    # matching the row-major mode order.
    r = a.shape[0]
    return (a[:, :, None] * b[:, None, :]).reshape(r, -1)


def _reconstruct_array(normalized, coeffs, dims) -> np.ndarray:
    acc = coeffs[:, None]
    for nc in normalized:
        acc = _rowwise_kron(acc, nc)
    return acc.sum(axis=0).reshape(dims)


def _coeff_sign(coeffs: np.ndarray) -> np.ndarray:
    mag = np.abs(coeffs)
    safe = np.where(mag > 0.0, mag, 1.0)
    return np.where(mag > 0.0, coeffs / safe, 0.0 + 0.0j)


def _descent_gradients(err, delta, normalized, norms, coeffs, k1, k3):
    """Gradients of k1*||T'-T||_F + k3*sum|C| for coefficients and all cores.

    `err` is T' - T. Near exact reconstruction (delta below the guard) the
    norm is nondifferentiable and its gradient is defined as zero.
    """
    m = len(normalized)
    dims = tuple(nc.shape[1] for nc in normalized)
    coeff_grad = k3 * _coeff_sign(coeffs)
    core_grads = [np.zeros_like(nc) for nc in normalized]
    if delta < EXACT_FIT_GUARD or k1 == 0.0:
        return coeff_grad, core_grads

    conj_cores = [nc.conj() for nc in normalized]
    r = coeffs.shape[0]
    ones = np.ones((r, 1), dtype=np.complex128)
    prefixes = [ones]
    for b in conj_cores[:-1]:
        prefixes.append(_rowwise_kron(prefixes[-1], b))
    suffixes = [ones] * m
    for i in range(m - 2, -1, -1):
        suffixes[i] = _rowwise_kron(conj_cores[i + 1], suffixes[i + 1])

    full = _rowwise_kron(prefixes[-1], conj_cores[-1])
    overlaps = full @ err.reshape(-1)                     # <phi_j, T'-T>
    radial = np.real(coeffs.conj() * overlaps)
    scale = k1 / delta
    coeff_grad = coeff_grad + scale * overlaps

    for i in range(m):
        before = prefixes[i].shape[1]
        after = suffixes[i].shape[1]
        partial = prefixes[i] @ err.reshape(before, dims[i] * after)
        contraction = (partial.reshape(r, dims[i], after)
                       * suffixes[i][:, None, :]).sum(axis=2)
        core_grads[i] = scale * (coeffs.conj()[:, None] * contraction
                                 - normalized[i] * radial[:, None]) / norms[i][:, None]
    return coeff_grad, core_grads


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------

def build_phi(model: CpModel, j: int) -> Tensor:
    """Unit-Frobenius rank-one tensor of term `j`, normalized by the product
    of core norms rather than by materializing and renormalizing."""
    cores = model.mode_cores()
    rows = [c[j] for c in cores]
    norms = [float(np.linalg.norm(v)) for v in rows]
    for mode, n in enumerate(norms):
        if n < DEGENERACY_FLOOR:
            raise DegenerateTermError(j, mode, n)
    out = rows[0] / norms[0]
    for v, n in zip(rows[1:], norms[1:]):
        out = np.multiply.outer(out, v / n)
    return Tensor(out, model.field)


def reconstruct(model: CpModel) -> Tensor:
    """T' = sum_j C_j * phi_j."""
    normalized, _ = _normalize_cores(model.mode_cores())
    return Tensor(_reconstruct_array(normalized, model.coeffs, model.dims),
                  model.field)


def build_phi_density(model: DensityCpModel, j: int) -> Tensor:
    """Rank-one product operator of term `j` with unit trace norm.

    The trace norm of (x)_i |a^i><b^i| is prod_i ||a^i|| * ||b^i|| (a
    rank-one matrix |a><b| has the single singular value ||a|| ||b||, and
    the trace norm multiplies over tensor factors of simple operators).
    """
    cores = model.mode_cores()
    rows = [c[j] for c in cores]
    norms = [float(np.linalg.norm(v)) for v in rows]
    for mode, n in enumerate(norms):
        if n < DEGENERACY_FLOOR:
            raise DegenerateTermError(j, mode % model.order, n)
    out = rows[0] / norms[0]
    for v, n in zip(rows[1:], norms[1:]):
        out = np.multiply.outer(out, v / n)
    return Tensor(out, model.field)


def reconstruct_density(model: DensityCpModel) -> Tensor:
    """rho' = sum_j C_j * Phi_j as an operator-shaped tensor."""
    normalized, _ = _normalize_cores(model.mode_cores())
    return Tensor(_reconstruct_array(normalized, model.coeffs, model.operator_shape),
                  model.field)


def _loss(target: Tensor, model, w: LossWeights, k3: float) -> LossBreakdown:
    if isinstance(model, DensityCpModel):
        expected = model.operator_shape
        recon_t = reconstruct_density(model)
    else:
        expected = model.dims
        recon_t = reconstruct(model)
    if target.shape != expected:
        raise ValueError(f"target shape {target.shape} does not match model "
                         f"shape {expected}")
    recon = float(np.linalg.norm((target.data - recon_t.data).ravel()))
    mags = np.abs(model.coeffs)
    rank_count = int(np.count_nonzero(mags > w.epsilon))
    norm_sum = float(mags.sum())
    total = w.k1 * recon + w.k2 * rank_count + k3 * norm_sum
    return LossBreakdown(recon, rank_count, norm_sum, total)


def loss_arcpd(target: Tensor, model: CpModel, w: LossWeights) -> LossBreakdown:
    """Adaptive-rank objective: k1*recon + k2*rank_count (norm cost unweighted)."""
    return _loss(target, model, w, k3=0.0)


def loss_nrcpd(target: Tensor, model: CpModel, w: LossWeights) -> LossBreakdown:
    """Nuclear-rank objective: k1*recon + k2*rank_count + k3*sum|C_j|."""
    return _loss(target, model, w, k3=w.k3)


def loss_density(target: Tensor, model: DensityCpModel, w: LossWeights) -> LossBreakdown:
    """Density-matrix objective: as loss_nrcpd with rho' from Phi_j terms."""
    return _loss(target, model, w, k3=w.k3)


def gradients(target: Tensor, model, w: LossWeights):
    """Descent gradients of the differentiable loss part (k1 and k3 terms).

    The k2 indicator contributes zero gradient everywhere. Pass w.k3 = 0 for
    the adaptive-rank objective. Returns CpGradients or DensityGradients
    mirroring the model's parameter grid.
    """
    density = isinstance(model, DensityCpModel)
    cores = model.mode_cores()
    normalized, norms = _normalize_cores(cores)
    expected = model.operator_shape if density else model.dims
    if target.shape != expected:
        raise ValueError(f"target shape {target.shape} does not match model "
                         f"shape {expected}")
    err = _reconstruct_array(normalized, model.coeffs, expected) - target.data
    delta = float(np.linalg.norm(err.ravel()))
    coeff_grad, core_grads = _descent_gradients(
        err, delta, normalized, norms, model.coeffs, w.k1, w.k3)
    if density:
        m = model.order
        # bras enter as conjugated cores, so grad_b = conj(grad over conj(b))
        return DensityGradients(kets=core_grads[:m],
                                bras=[g.conj() for g in core_grads[m:]],
                                coeffs=coeff_grad)
    if model.symmetric:
        total = core_grads[0]
        for g in core_grads[1:]:
            total = total + g
        return CpGradients(cores=[total], coeffs=coeff_grad)
    return CpGradients(cores=core_grads, coeffs=coeff_grad)


def effective_rank(coeffs, tolerance: float) -> int:
    """Number of coefficients with magnitude strictly above `tolerance`."""
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    return int(np.count_nonzero(np.abs(np.asarray(coeffs)) > tolerance))


def norm_estimate(coeffs) -> float:
    """sum_j |C_j| over all candidate slots."""
    return float(np.abs(np.asarray(coeffs)).sum())


def model_to_json_dict(model) -> dict:
    """Debugging snapshot of a model's coefficients and cores."""
    if isinstance(model, DensityCpModel):
        blocks = list(model.kets) + list(model.bras)
    else:
        blocks = list(model.cores)
    return {
        "coeffs_re": [float(x) for x in model.coeffs.real],
        "coeffs_im": [float(x) for x in model.coeffs.imag],
        "cores": [[[float(v.real), float(v.imag)] for v in row]
                  for block in blocks for row in block],
    }
