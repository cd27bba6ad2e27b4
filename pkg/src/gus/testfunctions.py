"""Compactly supported polynomial bumps used as test functions."""
from __future__ import annotations

from dataclasses import dataclass
from math import gamma, pi, sqrt

import numpy as np


def bump(s, order: int = 4) -> np.ndarray:
    """(1 - s^2)^order on |s| < 1, zero outside."""
    s = np.asarray(s, dtype=float)
    return np.where(np.abs(s) < 1, (1 - s * s) ** order, 0.0)


def bump_derivative(s, order: int = 4) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    val = -2 * order * s * (1 - s * s) ** (order - 1)
    return np.where(np.abs(s) < 1, val, 0.0)


def bump_integral(order: int = 4) -> float:
    """Integral of (1 - s^2)^order over [-1, 1]."""
    return sqrt(pi) * gamma(order + 1) / gamma(order + 1.5)


@dataclass(frozen=True)
class TestFunction:
    """Product bump phi(t, x) = b((x - center)/width) * b((t - t_center)/t_width).

    ``width`` and ``t_width`` are half-widths of the support.  Without a
    time factor the function is purely spatial and ``phi(t, x) = b(...)``.
    """

    __test__ = False  # not a pytest class

    center: float
    width: float
    t_center: float | None = None
    t_width: float | None = None
    order: int = 4

    def __post_init__(self):
        if not self.width > 0:
            raise ValueError(f"test function width must be positive, got {self.width}")
        if (self.t_center is None) != (self.t_width is None):
            raise ValueError("t_center and t_width must be given together")
        if self.t_width is not None and not self.t_width > 0:
            raise ValueError(f"test function t_width must be positive, got {self.t_width}")
        if self.order < 1:
            raise ValueError("bump order must be at least 1")

    @property
    def has_time(self) -> bool:
        return self.t_width is not None

    @property
    def x_support(self) -> tuple[float, float]:
        return self.center - self.width, self.center + self.width

    @property
    def t_support(self) -> tuple[float, float] | None:
        if not self.has_time:
            return None
        return self.t_center - self.t_width, self.t_center + self.t_width

    def spatial(self, x):
        return bump((np.asarray(x, dtype=float) - self.center) / self.width, self.order)

    def spatial_dx(self, x):
        s = (np.asarray(x, dtype=float) - self.center) / self.width
        return bump_derivative(s, self.order) / self.width

    def temporal(self, t):
        if not self.has_time:
            return np.ones_like(np.asarray(t, dtype=float))
        return bump((np.asarray(t, dtype=float) - self.t_center) / self.t_width, self.order)

    def temporal_dt(self, t):
        if not self.has_time:
            return np.zeros_like(np.asarray(t, dtype=float))
        s = (np.asarray(t, dtype=float) - self.t_center) / self.t_width
        return bump_derivative(s, self.order) / self.t_width

    def __call__(self, t, x):
        return self.temporal(t) * self.spatial(x)

    def spatial_integral(self) -> float:
        """Closed-form integral of the spatial factor."""
        return self.width * bump_integral(self.order)

    def fits(self, x_range, t_range=None) -> bool:
        """Whether the support lies inside the open rectangle."""
        lo, hi = self.x_support
        ok = x_range[0] < lo and hi < x_range[1]
        if t_range is not None and self.has_time:
            a, b = self.t_support
            ok = ok and t_range[0] < a and b < t_range[1]
        return bool(ok)


def test_function_suite(n: int = 20, seed: int = 0, x_range=(-1.0, 1.0),
                        t_range=(0.0, 1.0), order: int = 4) -> list[TestFunction]:
    """``n`` space-time bumps with pseudo-random supports inside the open rectangle.

    Half-widths are drawn between 5% and 40% of each side; the margin of
    one percent keeps supports strictly interior.
    """
    rng = np.random.default_rng(seed)
    (xa, xb), (ta, tb) = x_range, t_range
    Lx, Lt = xb - xa, tb - ta
    out = []
    for _ in range(n):
        hx = rng.uniform(0.05, 0.4) * Lx / 2
        ht = rng.uniform(0.05, 0.4) * Lt / 2
        cx = rng.uniform(xa + hx + 0.01 * Lx, xb - hx - 0.01 * Lx)
        ct = rng.uniform(ta + ht + 0.01 * Lt, tb - ht - 0.01 * Lt)
        out.append(TestFunction(float(cx), float(hx), float(ct), float(ht), order))
    return out


test_function_suite.__test__ = False
