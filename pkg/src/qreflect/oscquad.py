"""Panel quadrature for oscillatory integrals with decaying envelopes.

The reflected-norm kernels all reduce to integrals of the form

    I = int_0^U  env(s) * cos(omega s) ds

where env is smooth, nonnegative and decays on a known scale while the cosine
oscillates on the scale pi/|omega|; the two scales can differ by orders of
magnitude.  Panels are sized to resolve whichever scale is shorter and each
panel uses fixed-order Gauss-Legendre nodes, so the only truncation error is
the explicit envelope tail cutoff.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

_GL_ORDER = 24
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(_GL_ORDER)

# envelope values below exp(-_TAIL_LOG) of the peak are dropped
_TAIL_LOG = 41.0


class QuadratureError(RuntimeError):
    """Raised when an oscillatory integral cannot be resolved as requested."""


def panel_nodes(a: float, b: float, n_panels: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes/weights tiling [a, b] with n_panels panels."""
    edges = np.linspace(a, b, n_panels + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    weights = half[:, None] * np.broadcast_to(_GL_WEIGHTS, nodes.shape)
    return nodes.ravel(), weights.ravel()


def integrate_oscillatory(
    envelope: Callable[[np.ndarray], np.ndarray],
    omega: float,
    upper: float,
    scale: float,
    max_panels: int = 400_000,
) -> float:
    """Integrate envelope(s) * cos(omega * s) over [0, min(upper, tail cutoff)].

    ``scale`` is the caller-supplied s-scale on which the envelope varies
    (decay scale or domain length); panels never exceed half an oscillation
    period or half that scale, so the fixed-order nodes fully resolve the
    integrand and the result is accurate to roundoff relative to the
    truncated-tail value.
    """
    if upper <= 0.0:
        return 0.0
    if not math.isfinite(upper):
        raise QuadratureError("upper limit must be finite (apply a tail cutoff first)")
    h_osc = math.pi / abs(omega) if omega != 0.0 else math.inf
    h = min(h_osc, 0.125 * scale, upper)
    n_panels = int(math.ceil(upper / h))
    if n_panels > max_panels:
        raise QuadratureError(
            f"oscillatory integral needs {n_panels} panels (> {max_panels}); "
            "omega and the envelope scale are too disparate"
        )
    total = 0.0
    # chunk the panels so very long integrals do not allocate huge arrays
    chunk = max(1, min(n_panels, 4096))
    edges = np.linspace(0.0, upper, n_panels + 1)
    for start in range(0, n_panels, chunk):
        stop = min(start + chunk, n_panels)
        a = edges[start:stop]
        b = edges[start + 1 : stop + 1]
        half = 0.5 * (b - a)
        mid = 0.5 * (b + a)
        s = mid[:, None] + half[:, None] * _GL_NODES[None, :]
        w = half[:, None] * _GL_WEIGHTS[None, :]
        f = envelope(s)
        if omega != 0.0:
            f = f * np.cos(omega * s)
        total += float(np.sum(f * w))
    return total


def decay_cutoff(*inverse_scales: tuple[float, float]) -> float:
    """Upper limit where a product of exp(-c s^k) factors reaches exp(-41).

    Each argument is a (c, k) pair for a factor exp(-c s^k); the cutoff is the
    smallest single-factor cutoff, a safe overestimate of where the product
    becomes negligible.
    """
    cut = math.inf
    for c, k in inverse_scales:
        if c > 0.0:
            cut = min(cut, (_TAIL_LOG / c) ** (1.0 / k))
    return cut
