"""Deterministic quadrature helpers shared by the lattice and analytics code.

Two flavours are provided.  ``simpson_refined`` is a vectorised composite
Simpson rule whose panel count doubles until two successive estimates agree;
it suits long oscillatory windows where the work is dominated by evaluating
numpy ufuncs.  ``adaptive_simpson`` is the classic recursive rule with
Richardson correction for scalar integrands with localised features; callers
can seed it with breakpoints so narrow peaks are never missed by the first
coarse panels.
"""

from __future__ import annotations

from typing import Callable, Iterable

import numpy as np

from .errors import QuadratureError


def simpson_refined(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    *,
    conv_tol: float = 1e-8,
    n0: int = 256,
    max_doublings: int = 12,
) -> float:
    """Composite Simpson estimate of ``integral of f over [a, b]``.

    ``f`` must accept an array of abscissae.  The panel count doubles until
    two successive estimates differ by less than ``conv_tol`` (absolute);
    raises QuadratureError if that never happens.
    """
    if b <= a:
        raise ValueError("integration interval is empty")
    n = max(4, int(n0))
    n += n % 2
    prev = None
    for _ in range(max_doublings + 1):
        x = np.linspace(a, b, n + 1)
        y = np.asarray(f(x))
        h = (b - a) / n
        est = (h / 3.0) * (y[0] + y[-1] + 4.0 * y[1:-1:2].sum() + 2.0 * y[2:-1:2].sum())
        est = complex(est) if np.iscomplexobj(y) else float(est)
        if prev is not None and abs(est - prev) < conv_tol:
            return est
        prev = est
        n *= 2
    raise QuadratureError(
        f"composite Simpson did not converge to {conv_tol:g} after "
        f"{max_doublings} refinements on [{a:g}, {b:g}]"
    )


def adaptive_simpson(
    f: Callable[[float], float],
    a: float,
    b: float,
    tol: float,
    *,
    points: Iterable[float] = (),
    max_depth: int = 48,
    noise_floor: float = 0.0,
) -> float:
    """Recursive adaptive Simpson with Richardson extrapolation.

    ``points`` lists abscissae at which the integrand has known structure;
    the domain is pre-split there so coarse initial panels cannot step over
    a narrow feature.  ``noise_floor`` is the per-unit-length error already
    present in ``f`` (for nested integrals); panels stop refining once their
    tolerance share falls below it.
    """
    if b <= a:
        return 0.0
    cuts = [a] + sorted(p for p in set(points) if a < p < b) + [b]
    total = 0.0
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        seg_tol = tol * (hi - lo) / (b - a)
        flo, fhi = f(lo), f(hi)
        m = 0.5 * (lo + hi)
        fm = f(m)
        whole = (hi - lo) / 6.0 * (flo + 4.0 * fm + fhi)
        total += _adapt(f, lo, hi, flo, fm, fhi, whole, seg_tol, max_depth, noise_floor)
    return total


def _adapt(f, lo, hi, flo, fm, fhi, whole, tol, depth, noise_floor):
    m = 0.5 * (lo + hi)
    lm = 0.5 * (lo + m)
    rm = 0.5 * (m + hi)
    flm, frm = f(lm), f(rm)
    left = (m - lo) / 6.0 * (flo + 4.0 * flm + fm)
    right = (hi - m) / 6.0 * (fm + 4.0 * frm + fhi)
    delta = left + right - whole
    if abs(delta) <= 15.0 * max(tol, noise_floor * (hi - lo)):
        return left + right + delta / 15.0
    if depth <= 0:
        raise QuadratureError(
            f"adaptive Simpson exhausted recursion depth on [{lo:g}, {hi:g}]"
        )
    half_tol = 0.5 * tol
    return _adapt(f, lo, m, flo, flm, fm, left, half_tol, depth - 1, noise_floor) + _adapt(
        f, m, hi, fm, frm, fhi, right, half_tol, depth - 1, noise_floor
    )
