"""Dense tensors over the real or complex field.

Entries always live in one flat, row-major complex buffer (last index
fastest); a real-field tensor keeps every imaginary part exactly zero, so
all downstream numeric code has a single path. Tensors are immutable after
construction and safe to share between concurrent fits.
"""

from __future__ import annotations

import itertools
import json
import math
from pathlib import Path

import numpy as np

REAL = "real"
COMPLEX = "complex"
_FIELDS = (REAL, COMPLEX)


class FieldMismatchError(ValueError):
    """Real and complex operands were mixed, or entries violate the field tag."""


class SvdConvergenceError(RuntimeError):
    """The singular value iteration did not converge; the input is surfaced,
    never silently truncated."""


def _as_field(data: np.ndarray) -> str:
    return COMPLEX if np.iscomplexobj(data) else REAL


class Tensor:
    """Dense multi-index array with an explicit field tag.

    Parameters
    ----------
    data : array_like
        Entries, any shape with order >= 1 and all dimensions >= 1.
    field : {"real", "complex"}, optional
        Field tag. Defaults to the dtype of `data`. A real-field tensor
        must have every imaginary part exactly zero.
    """

    __slots__ = ("data", "field")

    def __init__(self, data, field: str | None = None):
        arr = np.array(data, dtype=np.complex128, order="C")
        if arr.ndim < 1:
            raise ValueError("tensor order must be at least 1")
        if any(d < 1 for d in arr.shape):
            raise ValueError(f"all mode dimensions must be >= 1, got shape {arr.shape}")
        if field is None:
            field = _as_field(np.asarray(data))
        if field not in _FIELDS:
            raise ValueError(f"field must be 'real' or 'complex', got {field!r}")
        if field == REAL and np.any(arr.imag != 0.0):
            raise FieldMismatchError("real-field tensor has nonzero imaginary parts")
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "field", field)

    def __setattr__(self, name, value):
        raise AttributeError("Tensor is immutable")

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def order(self) -> int:
        return self.data.ndim

    def __repr__(self):
        return f"Tensor(shape={self.shape}, field={self.field!r})"

    def with_field(self, field: str) -> "Tensor":
        """Same entries under a different field tag."""
        return Tensor(self.data, field)


# ---------------------------------------------------------------------------
# Elementary operations
# ---------------------------------------------------------------------------

def outer_product(factors) -> Tensor:
    """Rank-one tensor with entry (i_1..i_m) = prod_k factors[k][i_k].

    All factors must live over the same field (a complex-dtype factor mixed
    with real-dtype factors raises FieldMismatchError).
    """
    if len(factors) == 0:
        raise ValueError("factor list must be nonempty")
    arrays = [np.asarray(f) for f in factors]
    fields = {_as_field(a) for a in arrays}
    if len(fields) > 1:
        raise FieldMismatchError("factors mix real and complex fields")
    for a in arrays:
        if a.ndim != 1 or a.shape[0] < 1:
            raise ValueError("factors must be nonempty 1-d vectors")
    out = arrays[0].astype(np.complex128)
    for a in arrays[1:]:
        out = np.multiply.outer(out, a.astype(np.complex128))
    return Tensor(out, fields.pop())


def frobenius_norm(t: Tensor | np.ndarray) -> float:
    """sqrt of the sum of squared entry magnitudes."""
    data = t.data if isinstance(t, Tensor) else np.asarray(t)
    return float(np.linalg.norm(data.ravel()))


def rank_one_frobenius(factors) -> float:
    """Frobenius norm of the outer product, as the product of factor norms.

    Never materializes the outer product; the cross-norm factorization
    ||x_1 (x) ... (x) x_m|| = prod ||x_i|| makes the two routes agree.
    """
    if len(factors) == 0:
        raise ValueError("factor list must be nonempty")
    prod = 1.0
    for f in factors:
        prod *= float(np.linalg.norm(np.asarray(f)))
    return prod


def matricize(t: Tensor, row_modes) -> np.ndarray:
    """Reshape to a matrix whose rows enumerate `row_modes` (row-major in the
    given order) and whose columns enumerate the remaining modes in ascending
    order. Mode indices are 0-based; `row_modes` must be a nonempty strict
    subset without duplicates.
    """
    m = t.order
    modes = list(row_modes)
    if len(modes) == 0 or len(modes) >= m:
        raise ValueError("row_modes must be a nonempty strict subset of the modes")
    if len(set(modes)) != len(modes):
        raise ValueError("row_modes contains duplicates")
    if any(not (0 <= i < m) for i in modes):
        raise ValueError(f"mode index out of range for order-{m} tensor")
    col_modes = [i for i in range(m) if i not in modes]
    perm = modes + col_modes
    rows = math.prod(t.shape[i] for i in modes)
    cols = math.prod(t.shape[i] for i in col_modes)
    return np.array(t.data.transpose(perm).reshape(rows, cols))


def svd_nuclear_norm(mat: np.ndarray) -> float:
    """Sum of all singular values (exact projective norm for order 2).

    Deterministic for a fixed input. Non-convergence of the underlying
    iteration is surfaced as SvdConvergenceError.
    """
    arr = np.asarray(mat)
    if arr.ndim != 2:
        raise ValueError("svd_nuclear_norm expects a 2-d matrix")
    try:
        singular = np.linalg.svd(arr, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise SvdConvergenceError(str(exc)) from exc
    return float(singular.sum())


def symmetrize(t: Tensor) -> Tensor:
    """Average of `t` over all m! permutations of its modes.

    Requires all mode dimensions equal; the output is permutation invariant.
    """
    dims = t.shape
    if len(set(dims)) != 1:
        raise ValueError(f"symmetrize requires equal mode dimensions, got {dims}")
    m = t.order
    acc = np.zeros(dims, dtype=np.complex128)
    count = 0
    for perm in itertools.permutations(range(m)):
        acc += t.data.transpose(perm)
        count += 1
    return Tensor(acc / count, t.field)


# ---------------------------------------------------------------------------
# Operator-form helpers
# ---------------------------------------------------------------------------

def split_operator_dims(shape) -> tuple[int, ...]:
    """Party dimensions (d_1..d_m) of an operator-shaped tensor [d_1..d_m, d_1..d_m],
    with the first m modes as ket indices and the last m as bra indices.
    """
    shape = tuple(shape)
    if len(shape) % 2 != 0:
        raise ValueError(f"operator form needs an even tensor order, got shape {shape}")
    m = len(shape) // 2
    if shape[:m] != shape[m:]:
        raise ValueError(f"ket dims {shape[:m]} do not match bra dims {shape[m:]}")
    return shape[:m]


def operator_matrix(t: Tensor) -> np.ndarray:
    """Flatten an operator-shaped tensor to its (D, D) matrix."""
    dims = split_operator_dims(t.shape)
    total = math.prod(dims)
    return np.array(t.data.reshape(total, total))


# ---------------------------------------------------------------------------
# Canonical JSON file format
# ---------------------------------------------------------------------------

def tensor_to_json_dict(t: Tensor) -> dict:
    """Canonical serialization: flat row-major `re`/`im` arrays; `im` is
    omitted for the real field."""
    out = {
        "shape": list(t.shape),
        "field": t.field,
        "re": [float(x) for x in t.data.real.ravel()],
    }
    if t.field == COMPLEX:
        out["im"] = [float(x) for x in t.data.imag.ravel()]
    return out


def tensor_from_json_dict(doc: dict) -> Tensor:
    if not isinstance(doc, dict):
        raise ValueError("tensor document must be a JSON object")
    try:
        shape = [int(d) for d in doc["shape"]]
        field = doc["field"]
        re = doc["re"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed tensor document: {exc}") from exc
    if field not in _FIELDS:
        raise ValueError(f"unknown field tag {field!r}")
    if len(shape) < 1 or any(d < 1 for d in shape):
        raise ValueError(f"invalid shape {shape}")
    size = math.prod(shape)
    if len(re) != size:
        raise ValueError(f"'re' has {len(re)} entries, expected {size}")
    im = doc.get("im")
    if im is None:
        im = [0.0] * size
    elif len(im) != size:
        raise ValueError(f"'im' has {len(im)} entries, expected {size}")
    data = np.array(re, dtype=np.float64) + 1j * np.array(im, dtype=np.float64)
    try:
        return Tensor(data.reshape(shape), field)
    except FieldMismatchError as exc:
        raise ValueError(str(exc)) from exc


def save_tensor(t: Tensor, path) -> None:
    Path(path).write_text(json.dumps(tensor_to_json_dict(t)) + "\n")


def load_tensor(path) -> Tensor:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f"not valid JSON: {exc}") from exc
    return tensor_from_json_dict(doc)
