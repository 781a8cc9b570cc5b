"""Graph-bounded quadrilaterals and their comparison configurations.

A shape is the region between two continuous graphs f < g over [a, b],
marked at the four endpoint vertices.  Horizontal stretching by H > 1
elongates it; a piecewise-linear shear built on the midline polyline
straightens it into a domain symmetric about the real axis at the two
ends, with quasiconformal distortion that tends to 1 as H grows.  The
straightened end half-heights feed the analytic slit-frame solver, and
the comparison configurations (rectangle hulls and slit frames) feed the
grid modulus engine.

Conventions.  Shapes are centered so b = -a = alpha.  Interior marks run
(upper-left, lower-left, lower-right, upper-right); the two vertical end
segments are the edges the measured curve family connects.  Exterior
marks are the same four points in reversed (clockwise) order, starting at
the upper-right vertex.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable

import numpy as np

from .modulus import MarkedPolygon

DEFAULT_RESOLUTION = 4096
MAX_BREAKPOINTS = 2 ** 14
SEPARATION_OVERSAMPLE = 16


class SeparationError(RuntimeError):
    """Midline polyline refinement exceeded the breakpoint budget."""


def _preset_strip():
    return -1.0, 1.0, lambda x: np.full_like(x, -1.0), \
        lambda x: np.full_like(x, 1.0)


def _preset_trapezoid():
    # gap g - f = 2 + x, so the width-averaged reciprocal gap is log 3
    return -1.0, 1.0, lambda x: np.full_like(x, -1.0), lambda x: 1.0 + x


def _preset_sinusoidal():
    return -1.0, 1.0, lambda x: -1.0 + 0.3 * np.sin(math.pi * x), \
        lambda x: 1.0 + 0.3 * np.sin(2 * math.pi * x)


def _preset_cubic():
    return -1.0, 1.0, lambda x: -1.0 + 0.25 * x ** 3 - 0.15 * x, \
        lambda x: 1.0 + 0.3 * x ** 3 + 0.1 * x ** 2


PRESETS: dict[str, Callable] = {
    "strip": _preset_strip,
    "trapezoid": _preset_trapezoid,
    "sinusoidal": _preset_sinusoidal,
    "cubic": _preset_cubic,
}


@dataclass(frozen=True)
class ShapedQuadrilateral:
    """Region between graphs f < g over [a, b], sampled uniformly.

    Instances are centered: b = -a = alpha.  Callables, when present, are
    exact; the sampled view is the uniform fallback all numerical
    consumers share.
    """

    a: float
    b: float
    x: np.ndarray
    f_samples: np.ndarray
    g_samples: np.ndarray
    name: str = "custom"
    f_fn: Callable | None = None
    g_fn: Callable | None = None

    def __post_init__(self):
        if not self.a < self.b:
            raise ValueError("need a < b")
        if abs(self.a + self.b) > 1e-12 * (self.b - self.a):
            raise ValueError("shape not centered; use the constructors")
        gap = self.g_samples - self.f_samples
        if not (gap > 0).all():
            raise ValueError("need f < g on all of [a, b]")
        max_jump = 0.5 * gap.min()
        for s in (self.f_samples, self.g_samples):
            if len(s) > 1 and np.abs(np.diff(s)).max() > max_jump:
                raise ValueError(
                    "adjacent-sample jump exceeds the continuity bound; "
                    "supply a finer sample table")

    @classmethod
    def from_callables(cls, a, b, f, g, name="custom",
                       resolution=DEFAULT_RESOLUTION):
        shift = 0.5 * (a + b)
        alpha = 0.5 * (b - a)
        fs = lambda x: np.asarray(f(np.asarray(x) + shift), dtype=float)
        gs = lambda x: np.asarray(g(np.asarray(x) + shift), dtype=float)
        x = np.linspace(-alpha, alpha, resolution)
        return cls(a=-alpha, b=alpha, x=x, f_samples=fs(x), g_samples=gs(x),
                   name=name, f_fn=fs, g_fn=gs)

    @classmethod
    def from_preset(cls, name, resolution=DEFAULT_RESOLUTION):
        if name not in PRESETS:
            raise KeyError(f"unknown preset {name!r}; have {sorted(PRESETS)}")
        a, b, f, g = PRESETS[name]()
        return cls.from_callables(a, b, f, g, name=name,
                                  resolution=resolution)

    @classmethod
    def from_samples(cls, x, f_samples, g_samples, name="table"):
        x = np.asarray(x, dtype=float)
        if len(x) < 2 or (np.diff(x) <= 0).any():
            raise ValueError("sample abscissae must be strictly increasing")
        shift = 0.5 * (x[0] + x[-1])
        return cls(a=x[0] - shift, b=x[-1] - shift, x=x - shift,
                   f_samples=np.asarray(f_samples, dtype=float),
                   g_samples=np.asarray(g_samples, dtype=float), name=name)

    @property
    def alpha(self) -> float:
        return self.b

    def f(self, x):
        if self.f_fn is not None:
            return self.f_fn(x)
        return np.interp(x, self.x, self.f_samples)

    def g(self, x):
        if self.g_fn is not None:
            return self.g_fn(x)
        return np.interp(x, self.x, self.g_samples)

    @property
    def vertices(self):
        """(A, B, C, D) = (a+if(a), b+if(b), b+ig(b), a+ig(a))."""
        fa = float(self.f(self.a))
        fb = float(self.f(self.b))
        ga = float(self.g(self.a))
        gb = float(self.g(self.b))
        return (complex(self.a, fa), complex(self.b, fb),
                complex(self.b, gb), complex(self.a, ga))

    @property
    def right_half_height(self) -> float:
        """(g(b) - f(b))/2, the straightened end half-height at +alpha."""
        return 0.5 * float(self.g(self.b) - self.f(self.b))

    @property
    def left_half_height(self) -> float:
        """(g(a) - f(a))/2, the straightened end half-height at -alpha."""
        return 0.5 * float(self.g(self.a) - self.f(self.a))

    def mirrored(self) -> "ShapedQuadrilateral":
        """Reflection x -> -x (used to put the taller end on the right)."""
        f2 = (lambda x, f=self.f_fn: f(-np.asarray(x))) if self.f_fn else None
        g2 = (lambda x, g=self.g_fn: g(-np.asarray(x))) if self.g_fn else None
        return ShapedQuadrilateral(
            a=self.a, b=self.b, x=self.x,
            f_samples=self.f_samples[::-1].copy(),
            g_samples=self.g_samples[::-1].copy(),
            name=self.name + "|mirrored", f_fn=f2, g_fn=g2)


@dataclass(frozen=True)
class StretchedQuadrilateral:
    """Image of a shape under x + iy -> Hx + iy."""

    base: ShapedQuadrilateral
    H: float

    @property
    def vertices(self):
        return tuple(complex(v.real * self.H, v.imag)
                     for v in self.base.vertices)

    def f(self, x):
        return self.base.f(np.asarray(x) / self.H)

    def g(self, x):
        return self.base.g(np.asarray(x) / self.H)


def stretch(q: ShapedQuadrilateral, H: float) -> StretchedQuadrilateral:
    """Horizontal stretching; H <= 1 is rejected."""
    if not H > 1.0:
        raise ValueError(f"stretch factor must exceed 1, got {H}")
    return StretchedQuadrilateral(base=q, H=float(H))


@dataclass(frozen=True)
class PolylineStraightening:
    """Midline polyline and the shear that flattens it.

    Breakpoints live in base coordinates; the same breakpoints serve every
    stretch factor (the shear slope scales as 1/H).
    """

    x_nodes: np.ndarray
    y_nodes: np.ndarray
    H: float = 1.0

    @property
    def slopes(self) -> np.ndarray:
        return np.diff(self.y_nodes) / np.diff(self.x_nodes)

    @property
    def intercepts(self) -> np.ndarray:
        x, y = self.x_nodes, self.y_nodes
        return (x[1:] * y[:-1] - x[:-1] * y[1:]) / (x[1:] - x[:-1])

    @property
    def slope_bound(self) -> float:
        return float(np.abs(self.slopes).max())

    @property
    def kappa(self) -> float:
        a = self.slope_bound
        return a / math.sqrt(a * a + 4.0 * self.H * self.H)

    @property
    def distortion(self) -> float:
        """Quasiconformal coefficient (1 + kappa)/(1 - kappa) >= 1."""
        k = self.kappa
        return (1.0 + k) / (1.0 - k)

    def with_stretch(self, H: float) -> "PolylineStraightening":
        if not H > 0:
            raise ValueError("H must be positive")
        return replace(self, H=float(H))

    def midline(self, x_base):
        """Polyline height at base abscissae (constant beyond the ends)."""
        return np.interp(x_base, self.x_nodes, self.y_nodes)

    def left_midpoint(self) -> complex:
        return complex(self.x_nodes[0] * self.H, self.y_nodes[0])

    def right_midpoint(self) -> complex:
        return complex(self.x_nodes[-1] * self.H, self.y_nodes[-1])


def qc_coefficient(p: PolylineStraightening):
    """(kappa_H, K_H) of the straightening shear at stretch p.H."""
    return p.kappa, p.distortion


def midcurve_polyline(q: ShapedQuadrilateral, n: int) -> PolylineStraightening:
    """Midline polyline on n initial segments, refined until it separates.

    Breakpoint heights are (f+g)/2; segments whose chord leaves the open
    strip between the graphs are bisected, up to a hard budget.
    """
    if n < 1:
        raise ValueError("need at least one segment")
    xs = list(np.linspace(q.a, q.b, n + 1))
    while True:
        x = np.array(xs)
        y = 0.5 * (np.asarray(q.f(x)) + np.asarray(q.g(x)))
        bad = None
        for j in range(len(x) - 1):
            t = np.linspace(x[j], x[j + 1], SEPARATION_OVERSAMPLE + 2)[1:-1]
            mid = y[j] + (y[j + 1] - y[j]) * (t - x[j]) / (x[j + 1] - x[j])
            if not ((q.f(t) < mid) & (mid < q.g(t))).all():
                bad = j
                break
        if bad is None:
            return PolylineStraightening(x_nodes=x, y_nodes=y)
        if len(xs) >= MAX_BREAKPOINTS:
            raise SeparationError(
                f"separation not reached within {MAX_BREAKPOINTS} breakpoints")
        xs.insert(bad + 1, 0.5 * (x[bad] + x[bad + 1]))


def straightening_apply(p: PolylineStraightening, z):
    """The shear x + iy -> x + i(y - midline(x/H)); plane homeomorphism."""
    z = np.asarray(z, dtype=complex)
    return z.real + 1j * (z.imag - p.midline(z.real / p.H))


def straightened_shape(q: ShapedQuadrilateral,
                       p: PolylineStraightening) -> ShapedQuadrilateral:
    """The shape with boundary graphs f - midline, g - midline."""
    f1 = lambda x: np.asarray(q.f(x)) - p.midline(np.asarray(x))
    g1 = lambda x: np.asarray(q.g(x)) - p.midline(np.asarray(x))
    return ShapedQuadrilateral(
        a=q.a, b=q.b, x=q.x, f_samples=f1(q.x), g_samples=g1(q.x),
        name=q.name + "|straightened", f_fn=f1, g_fn=g1)


class ConfigKind(Enum):
    """Comparison configurations around the straightened quadrilateral."""

    RECTANGLE = "rectangle"                    # hull complement, end marks
    RECTANGLE_NARROWED = "rectangle_narrowed"  # marks projected to height sigma
    FRAME = "frame"                            # two slits + crossbar, tip marks
    FRAME_NARROWED = "frame_narrowed"          # right marks at height sigma
    FRAME_SYMMETRIC = "frame_symmetric"        # both slits extended to beta


@dataclass(frozen=True)
class MarkedSlitConfiguration:
    """A comparison configuration with four marked boundary points.

    half_width is alpha*H; beta and sigma are the right/left marked
    half-heights (sigma <= beta); M is the rectangle half-height where
    applicable.  Marks carry the outward side offset direction for points
    on slit faces (0 for tips and rectangle sides).
    """

    kind: ConfigKind
    half_width: float
    beta: float
    sigma: float
    H: float
    M: float | None = None

    def __post_init__(self):
        if not (0.0 < self.sigma <= self.beta):
            raise ValueError(f"need 0 < sigma <= beta, got "
                             f"({self.sigma}, {self.beta})")
        if self.kind in (ConfigKind.RECTANGLE, ConfigKind.RECTANGLE_NARROWED):
            if self.M is None or self.M <= max(self.beta, self.sigma):
                raise ValueError("rectangle kinds need M > max(beta, sigma)")
        if self.half_width <= 0 or self.H <= 0:
            raise ValueError("half_width and H must be positive")

    def marks(self):
        """Four (point, side) pairs in exterior-positive (clockwise) order.

        side is the outward normal direction (as a complex unit) for marks
        on slit faces, 0 elsewhere.
        """
        W, b, s = self.half_width, self.beta, self.sigma
        if self.kind is ConfigKind.RECTANGLE:
            return ((complex(W, b), 0), (complex(W, -b), 0),
                    (complex(-W, -s), 0), (complex(-W, s), 0))
        if self.kind is ConfigKind.RECTANGLE_NARROWED:
            return ((complex(W, s), 0), (complex(W, -s), 0),
                    (complex(-W, -s), 0), (complex(-W, s), 0))
        if self.kind is ConfigKind.FRAME:
            return ((complex(W, b), 0), (complex(W, -b), 0),
                    (complex(-W, -s), 0), (complex(-W, s), 0))
        if self.kind is ConfigKind.FRAME_NARROWED:
            return ((complex(W, s), -1), (complex(W, -s), -1),
                    (complex(-W, -s), 0), (complex(-W, s), 0))
        # FRAME_SYMMETRIC: inner faces of both slits at height sigma
        return ((complex(W, s), -1), (complex(W, -s), -1),
                (complex(-W, -s), 1), (complex(-W, s), 1))

    def slits(self):
        """Zero-width segments (frames only): left, right, crossbar."""
        W, b, s = self.half_width, self.beta, self.sigma
        left_h = b if self.kind is ConfigKind.FRAME_SYMMETRIC else s
        return ((complex(-W, -left_h), complex(-W, left_h)),
                (complex(W, -b), complex(W, b)),
                (complex(-W, 0), complex(W, 0)))

    def to_marked_polygon(self) -> MarkedPolygon:
        """Solver-ready polygon: concrete for hulls, slit-backed for frames."""
        W = self.half_width
        if self.kind in (ConfigKind.RECTANGLE, ConfigKind.RECTANGLE_NARROWED):
            M = self.M
            marks = [m for m, _ in self.marks()]
            # clockwise walk: down the right side, along the bottom, up the
            # left side, back over the top; marks sit on the vertical sides
            arcs = [
                np.array([marks[0], marks[1]]),
                np.array([marks[1], complex(W, -M), complex(-W, -M),
                          marks[2]]),
                np.array([marks[2], marks[3]]),
                np.array([marks[3], complex(-W, M), complex(W, M),
                          marks[0]]),
            ]
            return MarkedPolygon.from_arcs(
                arcs, orientation="exterior",
                cut_hint=(complex(-W, 0), complex(W, 0)))
        side_marks = tuple((m, s) for m, s in self.marks())
        return MarkedPolygon(slits=self.slits(), slit_marks=side_marks,
                             orientation="exterior",
                             cut_hint=(complex(-W, 0), complex(W, 0)))


def build_configuration(kind: ConfigKind, alpha: float, beta: float,
                        sigma: float, H: float,
                        M: float | None = None) -> MarkedSlitConfiguration:
    """Comparison configuration for a straightened shape at stretch H."""
    if sigma > beta:
        raise ValueError(
            f"projected half-height sigma = {sigma} exceeds beta = {beta}; "
            "mirror the shape first")
    return MarkedSlitConfiguration(kind=kind, half_width=alpha * H, beta=beta,
                                   sigma=sigma, H=H, M=M)


def default_hull_half_height(q1: ShapedQuadrilateral) -> float:
    """Rectangle half-height: 1.25 max(|f1|, |g1|) + 0.5 on the samples."""
    return 1.25 * float(np.max(np.abs(
        np.concatenate([q1.f_samples, q1.g_samples])))) + 0.5


def quadrilateral_polygon(q, interior: bool,
                          samples: int = 2048) -> MarkedPolygon:
    """MarkedPolygon of a (possibly stretched) shape.

    Interior marks: (upper-left, lower-left, lower-right, upper-right);
    exterior marks: reversed, starting upper-right.  The curve family
    being measured joins the two vertical end segments either way.
    """
    if isinstance(q, StretchedQuadrilateral):
        base, H = q.base, q.H
    else:
        base, H = q, 1.0
    a, b = base.a * H, base.b * H
    xs = np.linspace(base.a, base.b, samples)
    f_pts = xs * H + 1j * np.asarray(base.f(xs))
    g_pts = xs * H + 1j * np.asarray(base.g(xs))
    A = f_pts[0]
    B = f_pts[-1]
    C = g_pts[-1]
    D = g_pts[0]
    if interior:
        # walk D -> A -> B -> C -> D counterclockwise
        arcs = [np.array([D, A]), f_pts, np.array([B, C]), g_pts[::-1]]
        return MarkedPolygon.from_arcs(arcs, orientation="interior")
    # exterior: walk C -> B -> A -> D -> C clockwise around the hole
    mid_l = complex(a, 0.5 * float(base.f(base.a) + base.g(base.a)))
    mid_r = complex(b, 0.5 * float(base.f(base.b) + base.g(base.b)))
    arcs = [np.array([C, B]), f_pts[::-1], np.array([A, D]), g_pts]
    return MarkedPolygon.from_arcs(arcs, orientation="exterior",
                                   cut_hint=(mid_l, mid_r))
