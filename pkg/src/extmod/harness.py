"""Sweep orchestration, invariant suites, and file outputs.

A sweep reproduces the bounds chain at each stretch factor H: the analytic
slit-frame modulus from below, the grid modulus of the narrowed rectangle
hull from above, and the straightened and direct exterior grid moduli in
between, all against the target (1/pi) log H.  The interior contrast law
checks Mod of the stretched interior against H times the width integral
of the reciprocal gap.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy.integrate import quad

from . import canonical
from . import elliptic
from . import geometry
from . import modulus as modgrid

SWEEP_SCHEMA = "extmod-sweep-v1"
# image scale produced by the exterior premaps; grids cover about this span
IMAGE_SPAN = 2.6


class ConfigError(ValueError):
    """Malformed run configuration or shape file."""


@dataclass(frozen=True)
class RunConfig:
    """Inputs for a sweep or verification run."""

    shape: str = "strip"
    H_list: tuple = (10.0, 100.0, 1000.0)
    grid_n: int = 256             # coarsest exterior image grid; 3 levels
    levels: int = 3
    interior_h: float = 1.0 / 24  # coarsest interior spacing
    eps_divisors: tuple = (8.0, 16.0, 32.0)
    polyline_segments: int = 32
    contrast_H: float = 100.0
    out_csv: str | None = None
    out_json: str | None = None
    seed: int = 20240901

    def __post_init__(self):
        H = tuple(float(v) for v in self.H_list)
        if any(h2 <= h1 for h1, h2 in zip(H, H[1:])) or any(v <= 1 for v in H):
            raise ConfigError("H list must be strictly increasing and > 1")
        object.__setattr__(self, "H_list", H)

    @classmethod
    def from_json(cls, path: str) -> "RunConfig":
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        known = {f for f in cls.__dataclass_fields__}
        bad = set(raw) - known
        if bad:
            raise ConfigError(f"unknown config fields: {sorted(bad)}")
        for key in ("H_list", "eps_divisors"):
            if key in raw:
                raw[key] = tuple(raw[key])
        return cls(**raw)


@dataclass(frozen=True)
class SweepRow:
    """One H of the bounds chain with ratios against (1/pi) log H."""

    shape: str
    H: float
    target: float
    lower_analytic: float
    upper_numeric: float
    upper_err: float
    extmod_straightened: float
    straightened_err: float
    extmod_direct: float
    direct_err: float
    distortion: float
    sandwich_ok: bool
    quasi_ok: bool

    @property
    def ratio_lower(self):
        return self.lower_analytic / self.target

    @property
    def ratio_upper(self):
        return self.upper_numeric / self.target

    @property
    def ratio_straightened(self):
        return self.extmod_straightened / self.target

    @property
    def ratio_direct(self):
        return self.extmod_direct / self.target

    def as_dict(self):
        out = asdict(self)
        for name in ("ratio_lower", "ratio_upper", "ratio_straightened",
                     "ratio_direct"):
            out[name] = getattr(self, name)
        return out


CSV_COLUMNS = (
    "shape", "H", "target", "lower_analytic", "upper_numeric", "upper_err",
    "extmod_straightened", "straightened_err", "extmod_direct", "direct_err",
    "ratio_lower", "ratio_upper", "ratio_straightened", "ratio_direct",
    "distortion", "sandwich_ok", "quasi_ok",
)


def load_shape(ref) -> geometry.ShapedQuadrilateral:
    """Shape from a preset name, a JSON file path, or a parsed dict."""
    if isinstance(ref, geometry.ShapedQuadrilateral):
        return ref
    if isinstance(ref, str) and ref in geometry.PRESETS:
        return geometry.ShapedQuadrilateral.from_preset(ref)
    if isinstance(ref, str):
        try:
            with open(ref) as fh:
                ref = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read shape {ref!r}: {exc}") from exc
    if not isinstance(ref, dict):
        raise ConfigError("shape must be a preset name, path, or object")
    if "preset" in ref:
        try:
            return geometry.ShapedQuadrilateral.from_preset(ref["preset"])
        except KeyError as exc:
            raise ConfigError(str(exc)) from exc
    if "samples" in ref:
        s = ref["samples"]
        try:
            return geometry.ShapedQuadrilateral.from_samples(
                np.asarray(s["x"], dtype=float),
                np.asarray(s["f"], dtype=float),
                np.asarray(s["g"], dtype=float),
                name=ref.get("name", "table"))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad sample table: {exc}") from exc
    raise ConfigError("shape object needs 'preset' or 'samples'")


def _thread_count() -> int:
    raw = os.environ.get("EXTMOD_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _oriented(q: geometry.ShapedQuadrilateral):
    """Mirror so the taller straightened end sits at +alpha."""
    if q.left_half_height > q.right_half_height:
        return q.mirrored(), True
    return q, False


def sweep_one(q: geometry.ShapedQuadrilateral, H: float,
              config: RunConfig) -> SweepRow:
    """All bounds-chain entries at a single stretch factor."""
    q, _ = _oriented(q)
    pl = geometry.midcurve_polyline(q, config.polyline_segments)
    q1 = geometry.straightened_shape(q, pl)
    alpha = q.alpha
    beta = q.right_half_height
    sigma = q.left_half_height
    target = math.log(H) / math.pi

    params = canonical.solve_mu_for_sigma(
        canonical.solve_modulus_for_aspect(H, alpha, beta), sigma)
    lower = canonical.modulus_symmetric_frame(params)

    h0 = IMAGE_SPAN / config.grid_n
    est_q = modgrid.exterior_modulus(
        geometry.quadrilateral_polygon(geometry.stretch(q, H), False),
        h=h0, levels=config.levels)
    est_q1 = modgrid.exterior_modulus(
        geometry.quadrilateral_polygon(geometry.stretch(q1, H), False),
        h=h0, levels=config.levels)
    M = geometry.default_hull_half_height(q1)
    cfg = geometry.build_configuration(
        geometry.ConfigKind.RECTANGLE_NARROWED, alpha, beta, sigma, H, M=M)
    est_up = modgrid.exterior_modulus(cfg.to_marked_polygon(), h=h0,
                                      levels=config.levels)

    KH = pl.with_stretch(H).distortion
    slack_low = est_q.error
    slack_up = est_q.error + est_up.error
    sandwich_ok = (lower <= est_q.value + slack_low
                   and est_q.value <= est_up.value + slack_up)
    qtol = (est_q.error / est_q.value + est_q1.error / est_q1.value)
    ratio = est_q1.value / est_q.value
    quasi_ok = 1.0 / KH - qtol <= ratio <= KH + qtol
    return SweepRow(
        shape=q.name.split("|")[0], H=H, target=target, lower_analytic=lower,
        upper_numeric=est_up.value, upper_err=est_up.error,
        extmod_straightened=est_q1.value, straightened_err=est_q1.error,
        extmod_direct=est_q.value, direct_err=est_q.error,
        distortion=KH, sandwich_ok=sandwich_ok, quasi_ok=quasi_ok)


def sweep(config: RunConfig):
    """Rows for every H in the config, computed independently."""
    q = load_shape(config.shape)
    workers = min(_thread_count(), len(config.H_list))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda H: sweep_one(q, H, config),
                                 config.H_list))
    else:
        rows = [sweep_one(q, H, config) for H in config.H_list]
    rows.sort(key=lambda r: r.H)
    if config.out_csv:
        write_csv(rows, config.out_csv)
    if config.out_json:
        write_json(rows, config.out_json)
    return rows


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def write_csv(rows, path: str):
    with open(path, "w") as fh:
        fh.write(f"# schema={SWEEP_SCHEMA}\n")
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for r in rows:
            d = r.as_dict()
            fh.write(",".join(_fmt(d[c]) for c in CSV_COLUMNS) + "\n")


def write_json(rows, path: str):
    payload = {"schema": SWEEP_SCHEMA, "rows": [r.as_dict() for r in rows]}
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, default=_fmt)
        fh.write("\n")


def reciprocal_gap_integral(q: geometry.ShapedQuadrilateral) -> float:
    """c = integral of dx/(g(x) - f(x)) by adaptive quadrature."""
    val, _ = quad(lambda x: 1.0 / float(q.g(x) - q.f(x)), q.a, q.b,
                  epsabs=1e-12, epsrel=1e-12, limit=200)
    return val


def interior_contrast(config: RunConfig):
    """Interior modulus against the linear growth law c*H."""
    q = load_shape(config.shape)
    H = config.contrast_H
    c = reciprocal_gap_integral(q)
    poly = geometry.quadrilateral_polygon(geometry.stretch(q, H), True)
    est = modgrid.interior_modulus(poly, h=config.interior_h,
                                   levels=config.levels)
    return {
        "shape": q.name, "H": H, "c": c, "modulus": est.value,
        "error": est.error, "cH": c * H, "ratio": est.value / (c * H),
    }


def _elliptic_checks():
    out = {}
    worst = 0.0
    for k in [i / 10 for i in range(1, 10)]:
        r = abs(elliptic.complete_E(k) * elliptic.complete_K_prime(k)
                + elliptic.complete_E_prime(k) * elliptic.complete_K(k)
                - elliptic.complete_K(k) * elliptic.complete_K_prime(k)
                - math.pi / 2)
        worst = max(worst, r)
    out["legendre_max_residual"] = worst
    out["legendre_ok"] = worst < 1e-10

    worst = 0.0
    for x in np.linspace(0.05, 0.95, 10):
        r = abs(elliptic.i2n(0, x) - 2 * elliptic.i2n(1, x)
                - x * math.sqrt(1 - x * x))
        worst = max(worst, r)
    out["i2n_difference_max_residual"] = worst
    out["i2n_difference_ok"] = worst < 1e-14

    ipi_ok = True
    for n in range(11):
        for x in np.linspace(0.05, 0.999, 8):
            v = elliptic.i2n(n, x)
            ipi_ok &= 0.0 < v <= math.pi / 2 + 1e-15
    out["i2n_range_ok"] = bool(ipi_ok)

    worst = 0.0
    tr = elliptic.SeriesTruncation(max_terms=64, tail_tolerance=1e-15)
    for k in (0.1, 0.3, 0.5):
        for x in (0.2, 0.6, 1.0):
            worst = max(worst, abs(elliptic.series_F(x, k, tr)
                                   - elliptic.quadrature_F(x, k)))
            worst = max(worst, abs(elliptic.series_E(x, k, tr)
                                   - elliptic.quadrature_E(x, k)))
    out["series_vs_quadrature_max"] = worst
    out["series_vs_quadrature_ok"] = worst < 1e-10

    resid = []
    for k in (1e-2, 1e-4, 1e-6):
        resid.append(abs(elliptic.complete_K(k) - math.pi / 2)
                     + abs(elliptic.complete_K_prime(k) - math.log(4 / k)))
    out["limit_residuals"] = resid
    out["limits_ok"] = resid[0] > resid[1] > resid[2]
    return out


def _monotonicity_checks(config: RunConfig):
    out = {}
    h = IMAGE_SPAN / max(config.grid_n // 2, 96)
    q = load_shape(config.shape)
    q, _ = _oriented(q)
    pl = geometry.midcurve_polyline(q, config.polyline_segments)
    q1 = geometry.straightened_shape(q, pl)
    alpha, beta, sigma = q.alpha, q.right_half_height, q.left_half_height
    H = 10.0
    M = geometry.default_hull_half_height(q1)
    mk = geometry.ConfigKind
    rect = geometry.build_configuration(
        mk.RECTANGLE, alpha, beta, sigma, H, M=M).to_marked_polygon()
    rect_n = geometry.build_configuration(
        mk.RECTANGLE_NARROWED, alpha, beta, sigma, H, M=M).to_marked_polygon()
    frame = geometry.build_configuration(
        mk.FRAME, alpha, beta, sigma, H).to_marked_polygon()
    hull_q1 = geometry.quadrilateral_polygon(geometry.stretch(q1, H), False)

    out["narrowing_rectangle_ok"] = modgrid.check_monotonicity_narrowing(
        rect, rect_n, h)
    out["domain_rectangle_vs_shape_ok"] = modgrid.check_monotonicity_domain(
        hull_q1, rect, h)
    out["domain_frame_vs_shape_ok"] = modgrid.check_monotonicity_domain(
        frame, hull_q1, h)
    return out


def _engine_checks(config: RunConfig):
    out = {}
    arcs = [np.array([0, 1]), np.array([1, 1 + 0.5j]),
            np.array([1 + 0.5j, 0.5j]), np.array([0.5j, 0])]
    p = modgrid.MarkedPolygon.from_arcs(arcs, orientation="interior")
    est = modgrid.interior_modulus(p, h=1 / 128, levels=2)
    out["rectangle_half"] = est.value
    out["rectangle_ok"] = abs(est.value - 0.5) < 0.005
    sq = [0 + 0j, 1j, 1 + 1j, 1 + 0j]
    arcs = [np.array([sq[i], sq[(i + 1) % 4]]) for i in range(4)]
    pext = modgrid.MarkedPolygon.from_arcs(arcs, orientation="exterior")
    est = modgrid.exterior_modulus(pext, h=IMAGE_SPAN / 128,
                                   levels=config.levels)
    out["exterior_square"] = est.value
    out["exterior_square_ok"] = abs(est.value - 1.0) < 0.02
    return out


def verify_all(config: RunConfig):
    """Run every invariant suite; report is machine-readable."""
    report = {"config_shape": str(config.shape), "sections": {}}
    report["sections"]["elliptic"] = _elliptic_checks()
    report["sections"]["engine"] = _engine_checks(config)
    report["sections"]["monotonicity"] = _monotonicity_checks(config)
    ok = all(v for sec in report["sections"].values()
             for k, v in sec.items() if k.endswith("_ok"))
    report["all_ok"] = bool(ok)
    return report
