"""Score-function gradients for the discrepancy objectives.

Every expectation in the objectives has the form ``E[w(Y) something]``
with ``Y`` drawn from the model, so its parameter gradient can be
written with the score ``d log p / d theta`` inside the expectation.
Discrete families evaluate these sums over the support ("exact" mode);
the rest use Monte Carlo draws.

The quadratic objective has one pair loss per ordered covariate pair.
Rather than touching all of them every step, the full-gradient estimator
keeps a deterministic set of the heaviest pairs (by covariate kernel
weight) and reweights a without-replacement sample of the rest, which
stays unbiased for the complete sum.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError
from .kernels import elementwise, gram
from .objective import _dataset_for, _require_product, _resolve_mode, _y_kernel


@dataclass(frozen=True)
class GradValue:
    """A gradient evaluation in raw coordinates."""

    vector: np.ndarray
    mode: str


def _resolve_rng(rng, seed):
    if rng is not None:
        return rng
    if seed is not None:
        return np.random.default_rng(np.random.SeedSequence(seed))
    return np.random.default_rng()


def _single_row(x):
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise DomainError("expected a single covariate row")
    return x


def _tile_obs(family, y, count):
    if family.kind == "censored":
        return np.repeat(np.asarray(y, dtype=float).reshape(1, 2), count, axis=0)
    return np.full(count, float(np.asarray(y)))


def _ky(spec, a, b):
    return elementwise(spec, np.asarray(a, dtype=float), np.asarray(b, dtype=float))


def grad_tilde(family, theta, x, y, kernel, *, mode=None, budget=100, rng=None, seed=None):
    """Gradient of the diagonal loss at one observation.

    ``2 E[(k_y(Y, Y') - k_y(Y, y)) s(Y)]`` with ``Y, Y'`` independent
    model draws at ``x`` and ``s`` the raw-parameter score there.
    """
    mode = _resolve_mode(family, mode)
    ky = _y_kernel(kernel)
    x = _single_row(x)
    xrow = x.reshape(1, -1)
    theta = np.asarray(theta, dtype=float)
    if mode == "exact":
        values, probs = family.support(theta, xrow)
        p = probs[0]
        k = values.shape[0]
        scores = family.grad_log_density(theta, np.repeat(xrow, k, axis=0), values)
        kyy = gram(ky, values, values)
        kdata = gram(ky, values, np.asarray([y], dtype=float))[:, 0]
        w = kyy @ p - kdata
        return GradValue(2.0 * ((p * w) @ scores), "exact")
    rng = _resolve_rng(rng, seed)
    ya = family.sample(theta, xrow, rng, n=budget)
    yb = family.sample(theta, xrow, rng, n=budget)
    scores = family.grad_log_density(theta, np.repeat(xrow, budget, axis=0), ya)
    w = _ky(ky, ya, yb) - _ky(ky, ya, _tile_obs(family, y, budget))
    return GradValue(2.0 * (w @ scores) / budget, "mc")


def grad_hat_one_sided(family, theta, x, x_other, y_other, kernel, *, mode=None, budget=100, rng=None, seed=None):
    """Partial gradient of a cross loss, through the law at ``x`` only.

    ``2 k_x(x, x') E[(k_y(Y, Y') - k_y(Y, y')) s_x(Y)]`` with ``Y`` drawn
    at ``x`` and ``Y'`` at ``x'``.  Summing the two orientations of an
    unordered pair gives the derivative of its total contribution to the
    quadratic objective.
    """
    mode = _resolve_mode(family, mode)
    kernel = _require_product(kernel)
    ky = kernel.y_kernel
    x = _single_row(x)
    x_other = _single_row(x_other)
    theta = np.asarray(theta, dtype=float)
    kx = float(gram(kernel.x_kernel, x.reshape(1, -1), x_other.reshape(1, -1))[0, 0])
    if mode == "exact":
        values, probs = family.support(theta, np.vstack([x, x_other]))
        p, q = probs[0], probs[1]
        k = values.shape[0]
        scores = family.grad_log_density(theta, np.repeat(x.reshape(1, -1), k, axis=0), values)
        kyy = gram(ky, values, values)
        kdata = gram(ky, values, np.asarray([y_other], dtype=float))[:, 0]
        w = kyy @ q - kdata
        return GradValue(2.0 * kx * ((p * w) @ scores), "exact")
    rng = _resolve_rng(rng, seed)
    ya = family.sample(theta, x.reshape(1, -1), rng, n=budget)
    yb = family.sample(theta, x_other.reshape(1, -1), rng, n=budget)
    scores = family.grad_log_density(theta, np.repeat(x.reshape(1, -1), budget, axis=0), ya)
    w = _ky(ky, ya, yb) - _ky(ky, ya, _tile_obs(family, y_other, budget))
    return GradValue(2.0 * kx * (w @ scores) / budget, "mc")


def grad_hat_pair(family, theta, x_a, y_a, x_b, y_b, kernel, *, mode=None, budget=100, rng=None, seed=None):
    """Symmetrized pair gradient: the average of both one-sided parts.

    Twice this vector is the derivative of the unordered pair's total
    contribution to the quadratic objective.  With ``x_a == x_b`` and
    ``y_a == y_b`` it coincides with :func:`grad_tilde`.  In Monte Carlo
    mode the two orientations share one set of draws.
    """
    mode = _resolve_mode(family, mode)
    kernel = _require_product(kernel)
    if mode == "exact":
        ab = grad_hat_one_sided(family, theta, x_a, x_b, y_b, kernel, mode="exact")
        ba = grad_hat_one_sided(family, theta, x_b, x_a, y_a, kernel, mode="exact")
        return GradValue(0.5 * (ab.vector + ba.vector), "exact")
    ky = kernel.y_kernel
    x_a = _single_row(x_a)
    x_b = _single_row(x_b)
    theta = np.asarray(theta, dtype=float)
    kx = float(gram(kernel.x_kernel, x_a.reshape(1, -1), x_b.reshape(1, -1))[0, 0])
    rng = _resolve_rng(rng, seed)
    ya = family.sample(theta, x_a.reshape(1, -1), rng, n=budget)
    yb = family.sample(theta, x_b.reshape(1, -1), rng, n=budget)
    s_a = family.grad_log_density(theta, np.repeat(x_a.reshape(1, -1), budget, axis=0), ya)
    s_b = family.grad_log_density(theta, np.repeat(x_b.reshape(1, -1), budget, axis=0), yb)
    w_ab = _ky(ky, ya, yb) - _ky(ky, ya, _tile_obs(family, y_b, budget))
    w_ba = _ky(ky, yb, ya) - _ky(ky, yb, _tile_obs(family, y_a, budget))
    one = 2.0 * kx * (w_ab @ s_a) / budget
    two = 2.0 * kx * (w_ba @ s_b) / budget
    return GradValue(0.5 * (one + two), "mc")


def _linear_from_pair(i, j, n):
    # row-major enumeration of unordered pairs i < j
    i = np.asarray(i, dtype=np.int64)
    j = np.asarray(j, dtype=np.int64)
    return i * n - i * (i + 1) // 2 + (j - i - 1)


def _pair_from_linear(t, n):
    t = np.asarray(t, dtype=np.int64)
    b = 2 * n - 1
    i = ((b - np.sqrt(b * b - 8.0 * t)) // 2).astype(np.int64)
    i = np.clip(i, 0, n - 2)
    # one-step corrections for sqrt rounding
    start = i * n - i * (i + 1) // 2
    i = i - (start > t)
    nxt = (i + 1) * n - (i + 1) * (i + 2) // 2
    i = i + (nxt <= t)
    start = i * n - i * (i + 1) // 2
    j = t - start + i + 1
    return i, j


def top_pairs(kx, m):
    """Indices of the ``m`` unordered pairs with the largest kernel weight.

    Ties break toward the lexicographically smallest ``(i, j)``.

    Args:
        kx: symmetric covariate kernel matrix, shape ``(n, n)``.
        m: number of pairs to keep (capped at the pair count).

    Returns:
        Pair of int arrays ``(i, j)`` with ``i < j``.
    """
    kx = np.asarray(kx)
    n = kx.shape[0]
    if kx.shape != (n, n):
        raise DomainError(f"kx must be square, got {kx.shape}")
    iu, ju = np.triu_indices(n, k=1)
    order = np.lexsort((ju, iu, -kx[iu, ju]))
    keep = order[: max(0, int(m))]
    return iu[keep], ju[keep]


def sample_pair_indices(total, m, rng):
    """Simple random sample without replacement of ``m`` ints from ``range(total)``.

    Floyd's algorithm: one uniform draw per kept element, no ``total``-sized
    allocation.  Order is insertion order, not sorted.
    """
    if not (0 <= m <= total):
        raise DomainError(f"cannot sample {m} from {total}")
    if m == 0:
        return np.empty(0, dtype=np.int64)
    js = np.arange(total - m, total, dtype=np.int64)
    ts = rng.integers(0, js + 1)
    seen = set()
    out = []
    for j, t in zip(js, ts):
        pick = int(t) if int(t) not in seen else int(j)
        seen.add(pick)
        out.append(pick)
    return np.asarray(out, dtype=np.int64)


@dataclass(frozen=True)
class PairCache:
    """Precomputed pair structure for repeated quadratic-gradient steps.

    Holds the covariate kernel matrix, the deterministic heavy-pair set,
    and the bookkeeping needed to sample uniformly from the remaining
    unordered pairs.
    """

    n: int
    kx: np.ndarray
    det_i: np.ndarray
    det_j: np.ndarray
    det_kx: np.ndarray
    det_linear: np.ndarray
    comp_base: np.ndarray
    total_pairs: int

    @property
    def remaining(self):
        return self.total_pairs - self.det_linear.size

    def sample_remaining(self, m, rng):
        """Uniform SRSWOR of ``m`` non-deterministic pairs, as index arrays."""
        ranks = sample_pair_indices(self.remaining, m, rng)
        shift = np.searchsorted(self.comp_base, ranks, side="right")
        return _pair_from_linear(ranks + shift, self.n)


def build_pair_cache(x_kernel, x, m_det):
    """Rank covariate pairs by kernel weight and freeze the top ``m_det``."""
    x = np.asarray(x, dtype=float)
    kx = gram(x_kernel, x, x)
    n = x.shape[0]
    total = n * (n - 1) // 2
    det_i, det_j = top_pairs(kx, min(int(m_det), total))
    det_linear = np.sort(_linear_from_pair(det_i, det_j, n))
    comp_base = det_linear - np.arange(det_linear.size)
    return PairCache(
        n=n,
        kx=kx,
        det_i=det_i,
        det_j=det_j,
        det_kx=kx[det_i, det_j],
        det_linear=det_linear,
        comp_base=comp_base,
        total_pairs=total,
    )


def grad_objective_estimate(
    family,
    theta,
    dataset,
    kernel,
    estimator="tilde",
    *,
    cache=None,
    m_det=None,
    m_samp=None,
    pairs=1,
    rng_draws=None,
    rng_pairs=None,
    seed=None,
):
    """Unbiased Monte Carlo gradient of an empirical objective.

    For ``estimator="tilde"`` this is the sum of diagonal-loss gradients.
    For ``"hat"`` it adds the off-diagonal pair derivatives: every pair in
    the deterministic set contributes exactly, and a without-replacement
    sample of ``m_samp`` remaining pairs is reweighted to cover the rest.
    One set of model draws per replicate is shared by the diagonal and
    both orientations of every pair, which leaves the estimator unbiased.

    Args:
        family: response family.
        theta: raw parameter vector.
        dataset: observations.
        kernel: response kernel; a product kernel is required for ``"hat"``.
        cache: optional prebuilt :class:`PairCache` (``"hat"`` only).
        m_det: deterministic pair count when building a cache here;
            defaults to ``n``.
        m_samp: sampled pair count per replicate; defaults to ``n``.
        pairs: number of independent draw replicates to average.
        rng_draws: stream for model draws.
        rng_pairs: stream for pair subsampling.
        seed: convenience; derives both streams when neither is given.

    Returns:
        GradValue with the summed gradient, shape ``(raw_dim,)``.
    """
    dataset = _dataset_for(family, dataset)
    theta = np.asarray(theta, dtype=float)
    if not (isinstance(pairs, (int, np.integer)) and pairs >= 1):
        raise ConfigError("pairs must be a positive integer")
    if estimator not in ("tilde", "hat"):
        raise ConfigError(f"estimator must be 'tilde' or 'hat', got {estimator!r}")
    if rng_draws is None and rng_pairs is None and seed is not None:
        ss = np.random.SeedSequence(seed)
        kids = ss.spawn(2)
        rng_draws = np.random.default_rng(kids[0])
        rng_pairs = np.random.default_rng(kids[1])
    rng_draws = _resolve_rng(rng_draws, None)
    rng_pairs = _resolve_rng(rng_pairs, None)
    ky = _y_kernel(kernel)
    x = dataset.x
    n = dataset.n
    yobs = np.asarray(dataset.y, dtype=float)
    if estimator == "hat":
        kernel = _require_product(kernel)
        if cache is None:
            cache = build_pair_cache(kernel.x_kernel, x, n if m_det is None else m_det)
        if m_samp is None:
            m_samp = n
        m_samp = min(int(m_samp), cache.remaining)
    grad = np.zeros(family.raw_dim)
    for _ in range(int(pairs)):
        ya = family.sample(theta, x, rng_draws)
        yb = family.sample(theta, x, rng_draws)
        scores = family.grad_log_density(theta, x, ya)
        w = _ky(ky, ya, yb) - _ky(ky, ya, yobs)
        grad += 2.0 * (w @ scores)
        if estimator != "hat":
            continue
        for idx_i, idx_j, weight, factor in _pair_batches(cache, m_samp, rng_pairs):
            w_ij = _ky(ky, ya[idx_i], yb[idx_j]) - _ky(ky, ya[idx_i], yobs[idx_j])
            w_ji = _ky(ky, ya[idx_j], yb[idx_i]) - _ky(ky, ya[idx_j], yobs[idx_i])
            contrib = (2.0 * factor * weight * w_ij) @ scores[idx_i]
            contrib += (2.0 * factor * weight * w_ji) @ scores[idx_j]
            grad += contrib
    return GradValue(grad / pairs, "mc")


def _pair_batches(cache, m_samp, rng_pairs):
    if cache.det_i.size:
        yield cache.det_i, cache.det_j, cache.det_kx, 1.0
    if m_samp > 0 and cache.remaining > 0:
        si, sj = cache.sample_remaining(m_samp, rng_pairs)
        yield si, sj, cache.kx[si, sj], cache.remaining / m_samp
