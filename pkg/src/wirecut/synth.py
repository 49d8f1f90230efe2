"""Synthetic wire-cut scans with known ground truth.

Every degradation the pipeline undoes is applied here in the forward
direction: a 1D signature replicated across rows, per-row warp shifts,
striation tilt, a quadratic dome trend, Gaussian noise, an elliptical
footprint mask, clustered dropout blobs, and spikes injected next to
missing cells. Randomness comes from the counter-based Philox generator,
so a given seed produces bit-identical scans on any platform.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict

import numpy as np

from .despike import missing_neighbor_counts
from .surface import SurfaceMatrix


@dataclass
class SynthSpec:
    seed: int = 0
    h: int = 600
    w: int = 400
    res: float = 0.645            # um / px
    n_bumps: tuple = (20, 60)     # K drawn uniformly from this range
    depth_range: tuple = (0.5, 5.0)    # um
    width_range: tuple = (3.0, 40.0)   # px, FWHM
    angle_deg: float = 0.0        # striation tilt from vertical
    warp_amplitude: float = 0.0   # max per-row shift, px (quadratic in row)
    trend_quad: tuple = (0.0, 0.0, 0.0)   # um at the grid corner: x^2, y^2, xy
    trend_lin: tuple = (0.0, 0.0)         # um across the grid: x, y
    noise_sd: float = 0.2         # um
    dropout_frac: float = 0.02    # target fraction of interior cells lost
    spike_amplitude: float = 0.0  # um, sd of spikes next to missing cells
    mask_ellipse: float = 0.96    # footprint semi-axes as a fraction of the grid

    def __post_init__(self):
        if not 0 <= self.dropout_frac < 0.5:
            raise ValueError("dropout_frac must lie in [0, 0.5)")
        if abs(self.angle_deg) > 45:
            raise ValueError("|angle_deg| must be <= 45")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        known = {k: v for k, v in d.items() if k in cls.__dataclass_fields__}
        for key in ("n_bumps", "depth_range", "width_range", "trend_quad", "trend_lin"):
            if key in known:
                known[key] = tuple(known[key])
        return cls(**known)


@dataclass
class GroundTruth:
    signature: np.ndarray     # signature sampled on the pixel grid, um
    angle_deg: float
    warp: np.ndarray          # per-row shift actually applied, px
    seed: int

    def to_json(self, path=None, **kw):
        data = {"signature": self.signature.tolist(),
                "angle_deg": self.angle_deg,
                "warp": self.warp.tolist(), "seed": self.seed}
        text = json.dumps(data, **kw)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def _rng(seed, stream):
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(stream),))
    return np.random.Generator(np.random.Philox(ss))


def _draw_signature(spec, rng):
    """Sum of K random Gaussian valleys; returns (centers, depths, sigmas)."""
    k_lo, k_hi = spec.n_bumps
    k = int(rng.integers(k_lo, k_hi + 1))
    centers = rng.uniform(-0.2 * spec.w, 1.2 * spec.w, size=k)
    depths = rng.uniform(*spec.depth_range, size=k)
    fwhm = rng.uniform(*spec.width_range, size=k)
    sigmas = fwhm / 2.3548200450309493   # FWHM -> sigma
    return centers, depths, sigmas


def _signature_at(u, params):
    centers, depths, sigmas = params
    out = np.zeros_like(u, dtype=np.float64)
    for c, d, s in zip(centers, depths, sigmas):
        out -= d * np.exp(-0.5 * ((u - c) / s) ** 2)
    return out


def _generate(spec, sig_params, nuis_rng):
    h, w = spec.h, spec.w
    Y, X = np.mgrid[0:h, 0:w].astype(np.float64)

    # per-row warp: quadratic in row index, peak amplitude warp_amplitude
    yy = np.arange(h, dtype=np.float64)
    t = 2.0 * yy / max(h - 1, 1) - 1.0
    sign = 1.0 if nuis_rng.uniform() < 0.5 else -1.0
    scale = nuis_rng.uniform(0.6, 1.0)
    warp = sign * scale * spec.warp_amplitude * t ** 2

    alpha = np.radians(spec.angle_deg)
    u = (X + warp[:, None]) * np.cos(alpha) + Y * np.sin(alpha)
    F = _signature_at(u, sig_params)

    xn = X / max(w - 1, 1)
    yn = Y / max(h - 1, 1)
    qx, qy, qxy = spec.trend_quad
    lx, ly = spec.trend_lin
    F += qx * xn ** 2 + qy * yn ** 2 + qxy * xn * yn + lx * xn + ly * yn

    if spec.noise_sd > 0:
        F += nuis_rng.normal(0.0, spec.noise_sd, size=F.shape)

    # elliptical footprint
    ex = spec.mask_ellipse * (w - 1) / 2.0
    ey = spec.mask_ellipse * (h - 1) / 2.0
    cx, cy = (w - 1) / 2.0, (h - 1) / 2.0
    outside = ((X - cx) / ex) ** 2 + ((Y - cy) / ey) ** 2 > 1.0
    F[outside] = np.nan

    # clustered dropout blobs (random ellipses)
    if spec.dropout_frac > 0:
        mean_area = np.pi * 5.0 * 5.0
        n_blobs = max(1, int(round(spec.dropout_frac * h * w / mean_area)))
        for _ in range(n_blobs):
            bx = nuis_rng.uniform(0.1 * w, 0.9 * w)
            by = nuis_rng.uniform(0.1 * h, 0.9 * h)
            ax = nuis_rng.uniform(2.0, 8.0)
            ay = nuis_rng.uniform(2.0, 8.0)
            phi = nuis_rng.uniform(0.0, np.pi)
            dx, dy = X - bx, Y - by
            rx = dx * np.cos(phi) + dy * np.sin(phi)
            ry = -dx * np.sin(phi) + dy * np.cos(phi)
            F[(rx / ax) ** 2 + (ry / ay) ** 2 <= 1.0] = np.nan

    # spikes next to missing cells (scan-edge vibration artifacts)
    if spec.spike_amplitude > 0:
        tmp = SurfaceMatrix(F, res_x=spec.res, res_y=spec.res)
        near = (missing_neighbor_counts(tmp) > 0) & ~np.isnan(F)
        F[near] += nuis_rng.normal(0.0, spec.spike_amplitude,
                                   size=int(near.sum()))

    surface = SurfaceMatrix(F, res_x=spec.res, res_y=spec.res)
    truth = GroundTruth(
        signature=_signature_at(np.arange(w, dtype=np.float64), sig_params),
        angle_deg=spec.angle_deg, warp=warp, seed=spec.seed)
    return surface, truth


def generate(spec):
    """Deterministic synthetic scan plus its ground truth."""
    sig_params = _draw_signature(spec, _rng(spec.seed, 0))
    return _generate(spec, sig_params, _rng(spec.seed, 1))


def make_pair(spec, same_source=True):
    """Two scans: shared signature when same_source, independent otherwise.

    Nuisance effects (warp, noise, dropouts, spikes) are always drawn
    independently for the two scans.
    """
    sig_a = _draw_signature(spec, _rng(spec.seed, 0))
    if same_source:
        sig_b = sig_a
    else:
        sig_b = _draw_signature(spec, _rng(spec.seed, 10))
    a = _generate(spec, sig_a, _rng(spec.seed, 1))
    b = _generate(spec, sig_b, _rng(spec.seed, 2))
    return a, b
