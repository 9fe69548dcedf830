"""Hot compute kernels with two interchangeable backends.

The ``numba`` backend fuses sampling, dense forward passes, softmax, and
entropy into one JIT-compiled loop per chunk of samples; the ``numpy``
backend expresses the same chunk as vectorized BLAS calls.  Both consume
bitwise-identical uniforms (see :mod:`zonnscan.rng`), so they agree to
floating-point roundoff, and each backend is individually deterministic.

Backend selection: the ``ZONNSCAN_BACKEND`` environment variable (``numba``
or ``numpy``) wins; otherwise numba is used when importable and numpy is the
fallback.  Library calls can also pass ``backend=`` explicitly.

Work is split into fixed-size chunks of ``CHUNK`` samples.  Chunk boundaries
never depend on the worker count and every chunk writes a disjoint slice of
the output buffers, so results are byte-identical for any number of workers.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .errors import NumericError, ValidationError
from .rng import GOLDEN, UNIT_SCALE, unit_doubles

CHUNK = 4096

ENV_BACKEND = "ZONNSCAN_BACKEND"

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAS_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        return wrap


def available_backends() -> tuple:
    return ("numba", "numpy") if HAS_NUMBA else ("numpy",)


def active_backend(override: str | None = None) -> str:
    """Resolve the backend name: explicit override > env flag > default."""
    name = override if override is not None else os.environ.get(ENV_BACKEND)
    if name is None:
        return "numba" if HAS_NUMBA else "numpy"
    name = name.lower()
    if name not in ("numba", "numpy"):
        raise ValidationError(f"unknown backend {name!r}; expected 'numba' or 'numpy'")
    if name == "numba" and not HAS_NUMBA:
        raise ValidationError("numba backend requested but numba is not importable")
    return name


# ---------------------------------------------------------------------------
# numpy backend
# ---------------------------------------------------------------------------


def _apply_activation_np(z: np.ndarray, code: int) -> np.ndarray:
    if code == 0:  # relu
        return np.maximum(z, 0.0)
    if code == 1:  # sigmoid, split by sign to avoid exp overflow
        out = np.empty_like(z)
        pos = z >= 0.0
        out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
        ez = np.exp(z[~pos])
        out[~pos] = ez / (1.0 + ez)
        return out
    if code == 2:  # tanh
        return np.tanh(z)
    return z  # identity


def _forward_np(packed, X: np.ndarray) -> np.ndarray:
    h = X
    # overflow surfaces as non-finite logits, which callers check and raise on
    with np.errstate(over="ignore", invalid="ignore"):
        for w, b, code in zip(packed.layer_weights, packed.layer_biases, packed.act_codes):
            h = _apply_activation_np(h @ w.T + b, int(code))
    return h


def _softmax_rows_np(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    np.exp(z, out=z)
    z /= z.sum(axis=1, keepdims=True)
    return z


def entropy_rows(probs: np.ndarray) -> np.ndarray:
    """Base-C Shannon entropy per row, with the 0*log(0) = 0 convention.

    Clamped into [0, 1]: summation roundoff can overshoot the uniform
    maximum by one ulp, and the range is a hard contract.
    """
    probs = np.asarray(probs, dtype=np.float64)
    c = probs.shape[-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        plogp = np.where(probs > 0.0, probs * np.log(probs), 0.0)
    ent = -plogp.sum(axis=-1) / math.log(c)
    return np.clip(ent, 0.0, 1.0)


def _scan_chunk_np(packed, lower, upper, key, start, ent_out, probs_out) -> None:
    n = ent_out.shape[0]
    d = lower.shape[0]
    u = unit_doubles(key, start * d, n * d).reshape(n, d)
    pts = lower + u * (upper - lower)
    np.clip(pts, lower, upper, out=pts)
    logits = _forward_np(packed, pts)
    if not np.isfinite(logits).all():
        raise NumericError("non-finite logits encountered during scan")
    probs = _softmax_rows_np(logits)
    probs_out[:] = probs
    ent_out[:] = entropy_rows(probs)


# ---------------------------------------------------------------------------
# numba backend
# ---------------------------------------------------------------------------

_U_GOLDEN = np.uint64(GOLDEN)
_U_MIX_A = np.uint64(0xBF58476D1CE4E5B9)
_U_MIX_B = np.uint64(0x94D049BB133111EB)


@njit(cache=True, nogil=True, inline="always")
def _unit_nb(key, idx):
    # splitmix64 draw `idx` of stream `key`; must match rng.unit_doubles exactly
    z = key + (idx + np.uint64(1)) * _U_GOLDEN
    z = (z ^ (z >> np.uint64(30))) * _U_MIX_A
    z = (z ^ (z >> np.uint64(27))) * _U_MIX_B
    z ^= z >> np.uint64(31)
    return np.float64(z >> np.uint64(11)) * UNIT_SCALE


@njit(cache=True, nogil=True, inline="always")
def _act_nb(z, code):
    if code == 0:
        return z if z > 0.0 else 0.0
    if code == 1:
        if z >= 0.0:
            return 1.0 / (1.0 + math.exp(-z))
        ez = math.exp(z)
        return ez / (1.0 + ez)
    if code == 2:
        return math.tanh(z)
    return z


@njit(cache=True, nogil=True)
def _forward_rows_nb(w_flat, b_flat, w_off, b_off, in_dims, out_dims, acts, X, logits_out):
    n_layers = in_dims.shape[0]
    maxdim = X.shape[1]
    for l in range(n_layers):
        if out_dims[l] > maxdim:
            maxdim = out_dims[l]
    buf_a = np.empty(maxdim)
    buf_b = np.empty(maxdim)
    n_classes = out_dims[n_layers - 1]
    for s in range(X.shape[0]):
        cur = buf_a
        nxt = buf_b
        for j in range(X.shape[1]):
            cur[j] = X[s, j]
        for l in range(n_layers):
            idim = in_dims[l]
            odim = out_dims[l]
            wo = w_off[l]
            bo = b_off[l]
            code = acts[l]
            for u in range(odim):
                acc = b_flat[bo + u]
                row = wo + u * idim
                for j in range(idim):
                    acc += w_flat[row + j] * cur[j]
                nxt[u] = _act_nb(acc, code)
            cur, nxt = nxt, cur
        for c in range(n_classes):
            logits_out[s, c] = cur[c]


@njit(cache=True, nogil=True)
def _scan_chunk_nb(
    w_flat, b_flat, w_off, b_off, in_dims, out_dims, acts,
    lower, upper, key, start, ent_out, probs_out, err_flag,
):
    n = ent_out.shape[0]
    d = lower.shape[0]
    n_layers = in_dims.shape[0]
    n_classes = out_dims[n_layers - 1]
    inv_log_c = 1.0 / math.log(n_classes)
    maxdim = d
    for l in range(n_layers):
        if out_dims[l] > maxdim:
            maxdim = out_dims[l]
    buf_a = np.empty(maxdim)
    buf_b = np.empty(maxdim)
    for s in range(n):
        base = np.uint64((start + s) * d)
        cur = buf_a
        nxt = buf_b
        for j in range(d):
            u = _unit_nb(key, base + np.uint64(j))
            x = lower[j] + u * (upper[j] - lower[j])
            if x > upper[j]:
                x = upper[j]
            elif x < lower[j]:
                x = lower[j]
            cur[j] = x
        for l in range(n_layers):
            idim = in_dims[l]
            odim = out_dims[l]
            wo = w_off[l]
            bo = b_off[l]
            code = acts[l]
            for u2 in range(odim):
                acc = b_flat[bo + u2]
                row = wo + u2 * idim
                for j in range(idim):
                    acc += w_flat[row + j] * cur[j]
                nxt[u2] = _act_nb(acc, code)
            cur, nxt = nxt, cur
        # softmax with max subtraction, then base-C entropy
        zmax = cur[0]
        for c in range(1, n_classes):
            if cur[c] > zmax:
                zmax = cur[c]
        if not math.isfinite(zmax):
            err_flag[0] = 1
            return
        total = 0.0
        for c in range(n_classes):
            if not math.isfinite(cur[c]):
                err_flag[0] = 1
                return
            e = math.exp(cur[c] - zmax)
            nxt[c] = e
            total += e
        ent = 0.0
        for c in range(n_classes):
            p = nxt[c] / total
            probs_out[s, c] = p
            if p > 0.0:
                ent -= p * math.log(p)
        ent *= inv_log_c
        if ent > 1.0:
            ent = 1.0
        elif ent < 0.0:
            ent = 0.0
        ent_out[s] = ent


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------


def forward_logits_batch(packed, X: np.ndarray, backend: str | None = None) -> np.ndarray:
    """Logits for a batch of input rows; raises on non-finite results."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    name = active_backend(backend)
    if name == "numba":
        logits = np.empty((X.shape[0], packed.num_classes))
        _forward_rows_nb(
            packed.w_flat, packed.b_flat, packed.w_off, packed.b_off,
            packed.in_dims, packed.out_dims, packed.act_codes, X, logits,
        )
    else:
        logits = _forward_np(packed, X)
    if not np.isfinite(logits).all():
        raise NumericError("non-finite logits encountered during inference")
    return logits


def _chunk_bounds(k: int):
    return [(i, min(i + CHUNK, k)) for i in range(0, k, CHUNK)]


def scan_region(
    packed,
    lower: np.ndarray,
    upper: np.ndarray,
    key: int,
    k: int,
    workers: int = 1,
    backend: str | None = None,
):
    """Per-sample entropies and probabilities over ``k`` stream-indexed samples.

    Returns ``(entropies, probs)`` with shapes ``(k,)`` and ``(k, C)``.
    Sample ``i`` is always generated from stream draws ``i*d .. (i+1)*d-1``,
    so the buffers do not depend on chunking or worker count.
    """
    if k < 1:
        raise ValidationError(f"sample count must be >= 1, got {k}")
    if workers < 1:
        raise ValidationError(f"workers must be >= 1, got {workers}")
    name = active_backend(backend)
    ent = np.empty(k)
    probs = np.empty((k, packed.num_classes))
    key_u = np.uint64(key)

    if name == "numba":
        def run_chunk(bounds):
            i0, i1 = bounds
            err = np.zeros(1, dtype=np.int64)
            _scan_chunk_nb(
                packed.w_flat, packed.b_flat, packed.w_off, packed.b_off,
                packed.in_dims, packed.out_dims, packed.act_codes,
                lower, upper, key_u, i0, ent[i0:i1], probs[i0:i1], err,
            )
            if err[0]:
                raise NumericError("non-finite logits encountered during scan")
    else:
        def run_chunk(bounds):
            i0, i1 = bounds
            _scan_chunk_np(packed, lower, upper, key, i0, ent[i0:i1], probs[i0:i1])

    bounds = _chunk_bounds(k)
    if workers == 1 or len(bounds) == 1:
        for b in bounds:
            run_chunk(b)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for future in [pool.submit(run_chunk, b) for b in bounds]:
                future.result()
    return ent, probs


def warmup(backend: str | None = None) -> None:
    """Force JIT compilation of the kernels so timed runs measure steady state."""
    from .model import init_mlp
    from .sampler import make_region

    name = active_backend(backend)
    m = init_mlp([2, 3, 2], "relu", seed=0)
    region = make_region(np.array([0.5, 0.5]), 0.1)
    scan_region(m.packed(), region.lower, region.upper, 1, 8, backend=name)
    forward_logits_batch(m.packed(), np.full((1, 2), 0.5), backend=name)
