"""
Joint primary/secondary symbol detection at a multi-antenna receiver.

The ``*_batch`` functions work on arrays with arbitrary leading trial
axes and return constellation *indices*:

    y  : (..., K, M_r) received samples
    h1 : (..., M_r)    direct channel
    h2 : (..., M_r)    composite backscatter channel

The ``detect_*`` functions wrap them for a single :class:`ReceivedBlock`
and return a :class:`DetectionResult`.
"""

import itertools
from dataclasses import dataclass

import numpy as np

from .channel import ReceivedBlock
from .core import ClusterCollapse, DegenerateChannelError, SingularError
from .modem import build_constellation

ZF_CONDITION_LIMIT = 1e12
LINEAR_VARIANTS = ("mrc", "zf", "mmse")


@dataclass(frozen=True)
class DetectionResult:
    s_hat: np.ndarray
    c_hat: complex
    metric: float
    s_idx: np.ndarray
    c_idx: int


def _as_arrays(y, h1, h2):
    y = np.asarray(y, dtype=complex)
    h1 = np.asarray(h1, dtype=complex)
    h2 = np.asarray(h2, dtype=complex)
    return y, h1, h2


def _samples(block):
    if isinstance(block, ReceivedBlock):
        return block.samples
    return np.atleast_2d(np.asarray(block, dtype=complex))


def _conditional_costs(y, heff, A_s):
    """
    Per-k best symbol and its residual for each effective channel.

    ``heff`` has shape (..., J, M). Minimizing ``||y_k - heff s||^2`` over
    s is the same as slicing the MRC output ``heff^H y_k / ||heff||^2``
    to the nearest point, so this is the spatial-MRC step.

    Returns indices (..., J, K) and residuals (..., J, K).
    """
    pts = A_s.points
    corr = np.einsum("...jm,...km->...jk", heff.conj(), y)
    energy = np.sum(np.abs(heff) ** 2, axis=-1)
    # cost without the ||y_k||^2 term, one entry per candidate s
    cost = (np.abs(pts) ** 2) * energy[..., None, None] - 2 * np.real(pts.conj() * corr[..., None])
    idx = np.argmin(cost, axis=-1)
    best = np.take_along_axis(cost, idx[..., None], axis=-1)[..., 0]
    ynorm = np.sum(np.abs(y) ** 2, axis=-1)[..., None, :]
    return idx, np.maximum(best + ynorm, 0.0)


def ml_detect_batch(y, h1, h2, p, A_s, A_c):
    """
    Joint ML detection with the reduced ``K |A_c| |A_s|`` search.

    For every candidate c the primary symbols are decided one by one
    against ``sqrt(p) (h1 + h2 c)``; the candidate with the smallest total
    residual wins.

    Returns
    -------
    s_idx : (..., K) int
    c_idx : (...) int
    metric : (...) float
        The minimized sum of squared residuals.
    """
    y, h1, h2 = _as_arrays(y, h1, h2)
    A_s, A_c = build_constellation(A_s), build_constellation(A_c)
    heff = np.sqrt(p) * (h1[..., None, :] + h2[..., None, :] * A_c.points[:, None])
    if np.any(np.all(heff == 0, axis=-1)):
        raise DegenerateChannelError("h1 + h2 c vanishes for a candidate c; decision undefined")
    s_idx, res = _conditional_costs(y, heff, A_s)
    total = res.sum(axis=-1)
    c_idx = np.argmin(total, axis=-1)
    s_idx = np.take_along_axis(s_idx, c_idx[..., None, None], axis=-2)[..., 0, :]
    metric = np.take_along_axis(total, c_idx[..., None], axis=-1)[..., 0]
    return s_idx, c_idx, metric


def ml_exhaustive(y, h1, h2, p, A_s, A_c):
    """
    Brute-force ML over all ``|A_s|^K |A_c|`` tuples of one block.

    Independent reference for :func:`ml_detect_batch`; enumeration order
    is c-major then lexicographic in s, so ties resolve the same way.
    """
    y, h1, h2 = _as_arrays(y, h1, h2)
    A_s, A_c = build_constellation(A_s), build_constellation(A_c)
    y = np.atleast_2d(y)
    K = y.shape[0]
    best = (np.inf, None, None)
    for ci, c in enumerate(A_c.points):
        for combo in itertools.product(range(A_s.size), repeat=K):
            s = A_s.points[list(combo)]
            resid = y - np.sqrt(p) * np.outer(s, h1) - np.sqrt(p) * np.outer(s * c, h2)
            cost = float(np.sum(np.abs(resid) ** 2))
            if cost < best[0]:
                best = (cost, np.array(combo), ci)
    return best[1], best[2], best[0]


def linear_filter(h1, h2, p, sigma2, variant):
    """
    Per-symbol linear front end ``T`` of shape (..., 2, M_r).

    MRC rows are ``h1^H/||h1||^2`` and ``h2^H/||h2||^2``; ZF is the
    pseudo-inverse of ``H = [h1, h2]``; MMSE regularizes with
    ``sigma2/p I_2``.
    """
    variant = variant.lower()
    h1 = np.asarray(h1, dtype=complex)
    h2 = np.asarray(h2, dtype=complex)
    H = np.stack([h1, h2], axis=-1)
    HH = np.conj(np.swapaxes(H, -1, -2))
    if variant == "mrc":
        norms = np.sum(np.abs(H) ** 2, axis=-2)
        if np.any(norms == 0):
            raise DegenerateChannelError("MRC needs non-zero h1 and h2")
        return HH / norms[..., :, None]
    gram = HH @ H
    if variant == "zf":
        if H.shape[-2] < 2 or np.any(np.linalg.cond(gram) > ZF_CONDITION_LIMIT):
            raise SingularError("H^H H is singular; ZF needs M_r >= 2 and independent h1, h2")
        return np.linalg.solve(gram, HH)
    if variant == "mmse":
        return np.linalg.solve(gram + (sigma2 / p) * np.eye(2), HH)
    raise ValueError(f"unknown linear detector {variant!r}; expected one of {LINEAR_VARIANTS}")


def linear_estimates(y, h1, h2, p, sigma2, variant):
    """Filtered streams ``T y_k / sqrt(p)``, shape (..., K, 2)."""
    y, h1, h2 = _as_arrays(y, h1, h2)
    T = linear_filter(h1, h2, p, sigma2, variant)
    return np.einsum("...im,...km->...ki", T, y) / np.sqrt(p)


def linear_detect_batch(y, h1, h2, p, sigma2, variant, A_s, A_c, squared=False):
    """
    Linear detection followed by per-stream slicing.

    ``s_k`` is the point nearest the first filtered stream; ``c`` minimizes
    ``sum_k |c - xbar_k / s_k|`` (squared moduli when `squared`).
    """
    A_s, A_c = build_constellation(A_s), build_constellation(A_c)
    xbar = linear_estimates(y, h1, h2, p, sigma2, variant)
    s_idx = A_s.nearest(xbar[..., 0])
    s_hat = A_s.points[s_idx]
    if np.any(s_hat == 0):
        raise ZeroDivisionError("a primary decision is the zero symbol")
    ratio = xbar[..., 1] / s_hat
    dist = np.abs(A_c.points - ratio[..., None])
    if squared:
        dist = dist**2
    total = dist.sum(axis=-2)
    c_idx = np.argmin(total, axis=-1)
    metric = np.take_along_axis(total, c_idx[..., None], axis=-1)[..., 0]
    return s_idx, c_idx, metric


def sic_detect_batch(y, h1, h2, p, sigma2, A_s, A_c, first_stage="zf"):
    """
    Three-stage successive interference cancellation.

    1. linear (ZF or MMSE) estimate of every s_k;
    2. strip ``sqrt(p) h1 s_k`` and decide c by MRC over the residual;
    3. re-decide s_k against ``sqrt(p) (h1 + h2 c)``.
    """
    if first_stage.lower() not in ("zf", "mmse"):
        raise ValueError("SIC first stage must be 'zf' or 'mmse'")
    y, h1, h2 = _as_arrays(y, h1, h2)
    A_s, A_c = build_constellation(A_s), build_constellation(A_c)
    xbar = linear_estimates(y, h1, h2, p, sigma2, first_stage)
    s1 = A_s.points[A_s.nearest(xbar[..., 0])]

    sp = np.sqrt(p)
    resid = y - sp * s1[..., None] * h1[..., None, :]
    # ||r_k - sqrt(p) h2 s_k c||^2 summed over k, up to a c-independent term
    corr = np.sum(np.einsum("...m,...km->...k", h2.conj(), resid) * s1.conj(), axis=-1)
    energy = p * np.sum(np.abs(h2) ** 2, axis=-1) * np.sum(np.abs(s1) ** 2, axis=-1)
    cost = (np.abs(A_c.points) ** 2) * energy[..., None] - 2 * sp * np.real(A_c.points.conj() * corr[..., None])
    c_idx = np.argmin(cost, axis=-1)

    heff = sp * (h1 + h2 * A_c.points[c_idx][..., None])
    s_idx, res = _conditional_costs(y, heff[..., None, :], A_s)
    return s_idx[..., 0, :], c_idx, res[..., 0, :].sum(axis=-1)


# Single-block wrappers
def _result(s_idx, c_idx, metric, A_s, A_c):
    A_s, A_c = build_constellation(A_s), build_constellation(A_c)
    return DetectionResult(A_s.points[s_idx], complex(A_c.points[int(c_idx)]), float(metric),
                           np.asarray(s_idx), int(c_idx))


def detect_ml(block, h1, h2, p, A_s, A_c):
    return _result(*ml_detect_batch(_samples(block), h1, h2, p, A_s, A_c), A_s, A_c)


def detect_linear(block, h1, h2, p, sigma2, variant, A_s, A_c, squared=False):
    out = linear_detect_batch(_samples(block), h1, h2, p, sigma2, variant, A_s, A_c, squared)
    return _result(*out, A_s, A_c)


def detect_sic(block, h1, h2, p, sigma2, A_s, A_c, first_stage="zf"):
    out = sic_detect_batch(_samples(block), h1, h2, p, sigma2, A_s, A_c, first_stage)
    return _result(*out, A_s, A_c)


# Semi-blind constellation learning
MIN_TRAINING_BLOCKS = 64


def _kmeans(X, k, rng, n_init=4, max_iter=200):
    """Lloyd iterations with k-means++ seeding; best of `n_init` runs."""
    best = None
    for _ in range(n_init):
        centers = [X[rng.integers(len(X))]]
        for _ in range(1, k):
            d2 = np.min(((X[:, None, :] - np.array(centers)[None]) ** 2).sum(-1), axis=1)
            total = d2.sum()
            if total == 0:
                break
            centers.append(X[rng.choice(len(X), p=d2 / total)])
        if len(centers) < k:
            continue
        C = np.array(centers)
        labels = None
        for _ in range(max_iter):
            new = np.argmin(((X[:, None, :] - C[None]) ** 2).sum(-1), axis=1)
            if labels is not None and np.array_equal(new, labels):
                break
            labels = new
            if np.bincount(labels, minlength=k).min() == 0:
                break
            C = np.array([X[labels == j].mean(axis=0) for j in range(k)])
        if np.bincount(labels, minlength=k).min() == 0:
            continue
        inertia = ((X - C[labels]) ** 2).sum()
        if best is None or inertia < best[0]:
            best = (inertia, C, labels)
    if best is None:
        raise ClusterCollapse(f"k-means could not find {k} non-empty clusters")
    return best[1], best[2]


def detect_clustering(blocks, pilots, pilot_labels, A_s, rng, A_c="bpsk"):
    """
    Semi-blind recovery of a binary secondary stream (K = 1).

    The received samples form ``2 |A_s|`` clusters centred on
    ``sqrt(p) (h1 + h2 c) s``. Centroids are learned by k-means without
    channel knowledge; the two labeled pilot samples anchor one centroid
    per secondary symbol, and the rest of each group follows by rotating
    the anchor through the primary alphabet.

    Parameters
    ----------
    blocks : sequence of ReceivedBlock, or array (N, M_r) / (N, 1, M_r)
    pilots : sequence of two ReceivedBlock, or array (2, M_r)
    pilot_labels : the two secondary symbols carried by the pilots
    A_s : constant-modulus primary alphabet
    rng : numpy Generator used for centroid seeding

    Returns
    -------
    ndarray of complex
        Decided secondary symbol of every block, in input order.
    """
    A_s, A_c = build_constellation(A_s), build_constellation(A_c)
    if A_c.size != 2:
        raise ValueError("clustering detection needs a binary secondary alphabet")
    if not A_s.constant_modulus:
        raise ValueError("clustering detection needs a constant-modulus primary alphabet")
    X = _stack_single(blocks)
    P = _stack_single(pilots)
    labels = np.asarray(pilot_labels, dtype=complex)
    if len(X) < MIN_TRAINING_BLOCKS:
        raise ValueError(f"at least {MIN_TRAINING_BLOCKS} blocks are needed to learn centroids")
    if P.shape[0] != 2 or len(labels) != 2 or np.isclose(labels[0], labels[1]):
        raise ValueError("exactly two pilots with distinct labels are required")

    # canonical ordering makes the result independent of block order
    order = np.lexsort(np.concatenate([X.imag, X.real], axis=1).T[::-1])
    feats = np.concatenate([X.real, X.imag], axis=1)[order]
    k = 2 * A_s.size
    C, lab_sorted = _kmeans(feats, k, rng)
    centroids = C[:, : X.shape[1]] + 1j * C[:, X.shape[1]:]
    if len(np.unique(np.round(C, 12), axis=0)) < k:
        raise ClusterCollapse("k-means returned duplicate centroids")

    ratios = A_s.points / A_s.points[0]
    dist = []
    for pilot in P:
        anchor = centroids[np.argmin(np.sum(np.abs(centroids - pilot) ** 2, axis=1))]
        group = anchor[None, :] * ratios[:, None]
        d = np.sum(np.abs(centroids[:, None, :] - group[None]) ** 2, axis=-1).min(axis=1)
        dist.append(d)
    # the |A_s| centroids relatively closest to pilot 0's group join it
    first = np.argsort(dist[0] - dist[1], kind="stable")[: A_s.size]
    centroid_c = np.full(k, labels[1])
    centroid_c[first] = labels[0]

    decisions = np.empty(len(X), dtype=complex)
    decisions[order] = centroid_c[lab_sorted]
    return decisions


def _stack_single(blocks):
    if isinstance(blocks, ReceivedBlock):
        blocks = [blocks]
    if isinstance(blocks, (list, tuple)) and blocks and isinstance(blocks[0], ReceivedBlock):
        if any(b.K != 1 for b in blocks):
            raise ValueError("clustering detection assumes K = 1")
        return np.array([b.samples[0] for b in blocks])
    X = np.asarray(blocks, dtype=complex)
    if X.ndim == 3:
        if X.shape[1] != 1:
            raise ValueError("clustering detection assumes K = 1")
        X = X[:, 0, :]
    return np.atleast_2d(X)
