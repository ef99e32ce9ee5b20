"""Scalar curves with first and second derivatives.

Acceptance curves, radial profiles and moment-map scalings all enter the
model as smooth maps ``R -> R``. Three constructions are supported:

* tabulated points: monotone cubic (PCHIP) inside the table, linear
  extrapolation outside, continuous first derivative at the joints;
* polynomial coefficients (ascending order);
* explicit callables for value and derivatives.

Monotone interpolation is deliberate: tabulated acceptance curves must keep
``G' > 0`` wherever the table is increasing.
"""

from __future__ import annotations

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import ConfigurationError


class ScalarCurve:
    """A ``R -> R`` map with ``deriv1`` and ``deriv2``; vectorized over x."""

    def __init__(self, f, d1, d2, label="curve"):
        self._f = f
        self._d1 = d1
        self._d2 = d2
        self.label = label

    def __call__(self, x):
        return self._f(np.asarray(x, dtype=np.float64))

    def deriv1(self, x):
        return self._d1(np.asarray(x, dtype=np.float64))

    def deriv2(self, x):
        return self._d2(np.asarray(x, dtype=np.float64))

    def __repr__(self):
        return f"ScalarCurve({self.label})"

    # -- constructors -------------------------------------------------------

    @staticmethod
    def from_callables(f, d1, d2, label="callable"):
        return ScalarCurve(f, d1, d2, label)

    @staticmethod
    def from_poly(coeffs, label=None):
        """Polynomial with ``coeffs`` in ascending order: c0 + c1 x + ..."""
        p = np.polynomial.Polynomial(np.asarray(coeffs, dtype=np.float64))
        p1 = p.deriv()
        p2 = p1.deriv()
        return ScalarCurve(p, p1, p2, label or f"poly{len(coeffs) - 1}")

    @staticmethod
    def identity():
        return ScalarCurve.from_poly([0.0, 1.0], label="identity")

    @staticmethod
    def constant(c):
        return ScalarCurve.from_poly([float(c)], label=f"const({c})")

    @staticmethod
    def from_table(x, y, label="table"):
        """Monotone cubic through ``(x, y)``; linear beyond the table ends."""
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        if x.ndim != 1 or x.shape != y.shape or x.size < 2:
            raise ConfigurationError("curve table needs two equal 1-D columns")
        if not np.all(np.diff(x) > 0):
            raise ConfigurationError("curve table x values must strictly increase")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ConfigurationError("curve table contains non-finite values")
        interp = PchipInterpolator(x, y, extrapolate=False)
        dinterp = interp.derivative()
        d2interp = dinterp.derivative()
        x_lo, x_hi = x[0], x[-1]
        y_lo, y_hi = y[0], y[-1]
        s_lo = float(dinterp(x_lo))
        s_hi = float(dinterp(x_hi))

        def f(t):
            t = np.atleast_1d(np.asarray(t, dtype=np.float64))
            out = interp(t)
            lo = t < x_lo
            hi = t > x_hi
            out[lo] = y_lo + s_lo * (t[lo] - x_lo)
            out[hi] = y_hi + s_hi * (t[hi] - x_hi)
            return out if out.shape else float(out)

        def d1(t):
            t = np.atleast_1d(np.asarray(t, dtype=np.float64))
            out = dinterp(t)
            out[t < x_lo] = s_lo
            out[t > x_hi] = s_hi
            # PCHIP evaluates NaN exactly at the ends with extrapolate=False
            out[t == x_lo] = s_lo
            out[t == x_hi] = s_hi
            return out

        def d2(t):
            t = np.atleast_1d(np.asarray(t, dtype=np.float64))
            out = d2interp(t)
            outside = (t < x_lo) | (t > x_hi)
            out[outside] = 0.0
            out[t == x_lo] = float(d2interp(np.nextafter(x_lo, x_hi)))
            out[t == x_hi] = float(d2interp(np.nextafter(x_hi, x_lo)))
            return out

        curve = ScalarCurve(f, d1, d2, label)
        curve.table_x = x
        curve.table_y = y
        return curve

    @staticmethod
    def from_csv(path, label=None):
        """Two-column CSV ``x,value`` with strictly increasing x."""
        data = np.loadtxt(path, delimiter=",", dtype=np.float64, comments="#")
        if data.ndim != 2 or data.shape[1] != 2:
            raise ConfigurationError(f"{path}: expected two columns (x, value)")
        return ScalarCurve.from_table(data[:, 0], data[:, 1], label or str(path))
