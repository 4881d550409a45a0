"""Kernels on covariates, responses, and joint covariate-response points.

Two scalar building blocks are exposed directly: the bounded
reparameterization ``psi`` of the real line and the half-integer Matern
family ``matern_halfint``.  Everything else is described declaratively by
:class:`KernelSpec` and evaluated with :func:`gram`, :func:`elementwise`,
or :func:`kernel_eval`, so a kernel read from a config file and a kernel
built in code go through the same path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError

_RADIAL_FAMILIES = ("exponential", "gaussian", "matern", "psi_matern")
_FAMILIES = _RADIAL_FAMILIES + ("affine_shift", "product")
_MATERN_ORDERS = (1, 3, 5)

_SQRT3 = math.sqrt(3.0)
_SQRT5 = math.sqrt(5.0)


def psi(v):
    """Strictly increasing map of the real line onto (0, 1).

    ``psi(v) = 1/2 + (sqrt(v^2 + 4) - 2) / (2 v)`` extended by continuity
    to ``psi(0) = 1/2``.  The implementation uses the conjugate form
    ``1/2 + v / (2 (sqrt(v^2 + 4) + 2))``, which is algebraically
    identical and stable near zero.  Satisfies ``psi(-v) = 1 - psi(v)``.

    Args:
        v: scalar or array of finite reals.

    Returns:
        Scalar float or float array with the shape of ``v``.
    """
    v = np.asarray(v, dtype=float)
    if not np.all(np.isfinite(v)):
        raise DomainError("psi requires finite input")
    out = 0.5 + v / (2.0 * (np.sqrt(v * v + 4.0) + 2.0))
    return float(out) if out.ndim == 0 else out


def psi_inverse(u):
    """Inverse of :func:`psi` on (0, 1).

    Isolating the radical in ``u = psi(v)`` and squaring leaves an
    equation linear in ``v``; in terms of ``u`` the unique solution is
    ``v = (2 u - 1) / (u (1 - u))``.
    """
    u = np.asarray(u, dtype=float)
    if not np.all(np.isfinite(u)):
        raise DomainError("psi_inverse requires finite input")
    if np.any(u <= 0.0) or np.any(u >= 1.0):
        raise DomainError("psi_inverse requires u in the open interval (0, 1)")
    out = (2.0 * u - 1.0) / (u * (1.0 - u))
    return float(out) if out.ndim == 0 else out


def matern_halfint(r, gamma, m):
    """Matern kernel of half-integer order ``m/2`` as a function of distance.

    Supported orders and their closed forms, with ``s = sqrt(m) r / gamma``:

    * ``m = 1``: ``exp(-s)``
    * ``m = 3``: ``(1 + s) exp(-s)``
    * ``m = 5``: ``(1 + s + s^2 / 3) exp(-s)``

    Args:
        r: nonnegative distance, scalar or array.
        gamma: positive length scale.
        m: order numerator, one of 1, 3, 5.

    Returns:
        Kernel value(s) in (0, 1], equal to 1 exactly at ``r = 0``.
    """
    if m not in _MATERN_ORDERS:
        raise ConfigError(f"matern_halfint supports m in {_MATERN_ORDERS}, got {m!r}")
    if not (np.isfinite(gamma) and gamma > 0.0):
        raise DomainError("matern_halfint requires a positive finite gamma")
    r = np.asarray(r, dtype=float)
    if not np.all(np.isfinite(r)) or np.any(r < 0.0):
        raise DomainError("matern_halfint requires finite nonnegative distances")
    s = (math.sqrt(float(m)) / gamma) * r
    if m == 1:
        out = np.exp(-s)
    elif m == 3:
        out = (1.0 + s) * np.exp(-s)
    else:
        out = (1.0 + s + s * s / 3.0) * np.exp(-s)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class KernelSpec:
    """Declarative description of a kernel.

    Fields are interpreted per ``family``:

    * ``"exponential"``: ``c * exp(-||z - z'|| / gamma)``
    * ``"gaussian"``: ``c * exp(-||z - z'||^2 / (2 gamma^2))``
    * ``"matern"``: ``c *`` :func:`matern_halfint` at ``||z - z'||``
    * ``"psi_matern"``: Matern evaluated on coordinate-wise psi-mapped
      points, ``c * matern_halfint(||psi(z) - psi(z')||, gamma, m)``
    * ``"affine_shift"``: ``beta * child(z, z') + (1 - beta)``
    * ``"product"``: ``x_kernel(x, x') * y_kernel(y, y')`` on joint
      points ``z = (x, y)``

    Radial kernels with ``c = 1`` satisfy ``k(z, z) = 1`` exactly; all
    combinations stay bounded by 1 in absolute value.
    """

    family: str
    gamma: float = 1.0
    m: int = 1
    beta: float = 1.0
    c: float = 1.0
    child: "KernelSpec | None" = None
    x_kernel: "KernelSpec | None" = None
    y_kernel: "KernelSpec | None" = None

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ConfigError(f"unknown kernel family {self.family!r}")
        if self.family in _RADIAL_FAMILIES:
            if not (np.isfinite(self.gamma) and self.gamma > 0.0):
                raise ConfigError(f"kernel family {self.family!r} requires gamma > 0")
            if not (0.0 < self.c <= 1.0):
                raise ConfigError("kernel scale c must lie in (0, 1]")
        if self.family in ("matern", "psi_matern") and self.m not in _MATERN_ORDERS:
            raise ConfigError(f"kernel order m must be one of {_MATERN_ORDERS}")
        if self.family == "affine_shift":
            if self.child is None:
                raise ConfigError("affine_shift requires a child kernel")
            if not (0.0 <= self.beta <= 1.0):
                raise ConfigError("affine_shift weight beta must lie in [0, 1]")
        if self.family == "product" and (self.x_kernel is None or self.y_kernel is None):
            raise ConfigError("product requires both x_kernel and y_kernel")


def exponential_kernel(gamma=1.0, c=1.0):
    return KernelSpec(family="exponential", gamma=gamma, c=c)


def gaussian_kernel(gamma=1.0, c=1.0):
    return KernelSpec(family="gaussian", gamma=gamma, c=c)


def matern_kernel(gamma, m=1, c=1.0):
    return KernelSpec(family="matern", gamma=gamma, m=m, c=c)


def psi_matern_kernel(gamma=0.01, m=1, c=1.0):
    return KernelSpec(family="psi_matern", gamma=gamma, m=m, c=c)


def affine_shift_kernel(child, beta):
    return KernelSpec(family="affine_shift", beta=beta, child=child)


def product_kernel(x_kernel, y_kernel):
    return KernelSpec(family="product", x_kernel=x_kernel, y_kernel=y_kernel)


def default_covariate_kernel():
    """Covariate kernel used throughout the benchmarks."""
    return psi_matern_kernel(gamma=0.01, m=1)


def default_response_kernel():
    """Response kernel used throughout the benchmarks."""
    return exponential_kernel(gamma=1.0)


def _as_points(z):
    """Coerce to a 2-D float array of points, one row per point."""
    z = np.asarray(z, dtype=float)
    if z.ndim == 0:
        z = z.reshape(1, 1)
    elif z.ndim == 1:
        z = z.reshape(-1, 1)
    elif z.ndim != 2:
        raise DomainError(f"points must be at most 2-D, got shape {z.shape}")
    if not np.all(np.isfinite(z)):
        raise DomainError("kernel evaluation requires finite points")
    return z


def _cross_dists(a, b):
    # Direct differencing, chunked over rows of `a` to bound the size of
    # the (rows, m, p) temporary.  The norm-expansion shortcut is avoided
    # on purpose: its rounding error near zero is O(sqrt(eps)), which a
    # narrow kernel amplifies into visible diagonal noise.
    na, nb = a.shape[0], b.shape[0]
    p = a.shape[1]
    out = np.empty((na, nb))
    step = max(1, 4_000_000 // max(nb * p, 1))
    for start in range(0, na, step):
        stop = min(start + step, na)
        diff = a[start:stop, None, :] - b[None, :, :]
        np.einsum("ijk,ijk->ij", diff, diff, out=out[start:stop])
    np.maximum(out, 0.0, out=out)
    return np.sqrt(out, out=out)


def _radial(spec, r):
    if spec.family == "exponential":
        out = np.exp(-r / spec.gamma)
    elif spec.family == "gaussian":
        out = np.exp(-(r * r) / (2.0 * spec.gamma * spec.gamma))
    else:
        out = matern_halfint(r, spec.gamma, spec.m)
    if spec.c != 1.0:
        out = spec.c * out
    return out


def gram(spec, a, b):
    """Full kernel matrix between two point sets.

    Args:
        spec: the kernel to evaluate.
        a: points, shape ``(n, p)`` (1-D input is treated as ``(n, 1)``).
            For product kernels, a pair ``(x_points, y_points)``.
        b: points, shape ``(m, p)``, same convention.

    Returns:
        Array of shape ``(n, m)``.
    """
    if spec.family == "product":
        ax, ay = a
        bx, by = b
        return gram(spec.x_kernel, ax, bx) * gram(spec.y_kernel, ay, by)
    if spec.family == "affine_shift":
        return spec.beta * gram(spec.child, a, b) + (1.0 - spec.beta)
    a = _as_points(a)
    b = _as_points(b)
    if a.shape[1] != b.shape[1]:
        raise DomainError(f"point dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    if spec.family == "psi_matern":
        a = psi(a)
        b = psi(b)
    return _radial(spec, _cross_dists(a, b))


def elementwise(spec, a, b):
    """Kernel values between aligned rows of two point sets, shape ``(n,)``."""
    if spec.family == "product":
        ax, ay = a
        bx, by = b
        return elementwise(spec.x_kernel, ax, bx) * elementwise(spec.y_kernel, ay, by)
    if spec.family == "affine_shift":
        return spec.beta * elementwise(spec.child, a, b) + (1.0 - spec.beta)
    a = _as_points(a)
    b = _as_points(b)
    if a.shape != b.shape:
        raise DomainError(f"aligned evaluation needs equal shapes, got {a.shape} vs {b.shape}")
    if spec.family == "psi_matern":
        a = psi(a)
        b = psi(b)
    d = a - b
    r = np.sqrt(np.sum(d * d, axis=1))
    return _radial(spec, r)


def kernel_eval(spec, z, zp):
    """Scalar kernel value between two single points."""
    if spec.family == "product":
        x, y = z
        xp, yp = zp
        return kernel_eval(spec.x_kernel, x, xp) * kernel_eval(spec.y_kernel, y, yp)
    if spec.family == "affine_shift":
        return spec.beta * kernel_eval(spec.child, z, zp) + (1.0 - spec.beta)
    a = _as_points(z)
    b = _as_points(zp)
    if a.shape[0] != 1 or b.shape[0] != 1:
        raise DomainError("kernel_eval takes single points; use gram for sets")
    return float(elementwise(spec, a, b)[0])


_SPEC_KEYS = {"family", "gamma", "m", "beta", "c", "child", "x_kernel", "y_kernel"}


def spec_from_dict(d):
    """Build a :class:`KernelSpec` from a plain dict (parsed config)."""
    if not isinstance(d, dict):
        raise ConfigError(f"kernel config must be a mapping, got {type(d).__name__}")
    unknown = set(d) - _SPEC_KEYS
    if unknown:
        raise ConfigError(f"unknown kernel config keys: {sorted(unknown)}")
    if "family" not in d:
        raise ConfigError("kernel config requires a 'family' key")
    kwargs = {}
    for key in ("gamma", "beta", "c"):
        if key in d:
            kwargs[key] = float(d[key])
    if "m" in d:
        kwargs["m"] = int(d["m"])
    for key in ("child", "x_kernel", "y_kernel"):
        if key in d:
            kwargs[key] = spec_from_dict(d[key])
    return KernelSpec(family=d["family"], **kwargs)


def spec_to_dict(spec):
    """Inverse of :func:`spec_from_dict`, emitting only the relevant keys."""
    d = {"family": spec.family}
    if spec.family in _RADIAL_FAMILIES:
        d["gamma"] = spec.gamma
        if spec.c != 1.0:
            d["c"] = spec.c
        if spec.family in ("matern", "psi_matern"):
            d["m"] = spec.m
    elif spec.family == "affine_shift":
        d["beta"] = spec.beta
        d["child"] = spec_to_dict(spec.child)
    else:
        d["x_kernel"] = spec_to_dict(spec.x_kernel)
        d["y_kernel"] = spec_to_dict(spec.y_kernel)
    return d
