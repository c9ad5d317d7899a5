#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Created on Tue Mar  5 09:14:52 2024

@author: ddasr

Synthetic constant-disparity light fields and the geometric oracles used to
check them.

A scene point seen at (h0, w0) in the center view (u_c, v_c) appears in view
(u, v) at (h0 + d * (u_c - u), w0 + d * (v_c - v)), where d is the disparity
in pixels per view step. Textures are periodic so that fractional shifts
never read outside the texture.
"""

from dataclasses import dataclass

import numpy as np
from scipy import ndimage, stats

from ddasrlib.exceptions import (IndexOutOfRangeError, LightFieldError,
                                 LightFieldShapeError)
from ddasrlib.lightfield.lightfield import LightField

__all__ = ['PeriodicTexture', 'make_texture', 'SyntheticSceneSpec',
           'generate_constant_disparity_lf', 'parallax_residual',
           'macpi_correspondence', 'epi_feature_track', 'epi_slope',
           'TEXTURE_KINDS']

TEXTURE_KINDS = ('noise', 'blob', 'edge', 'checker')


class PeriodicTexture(object):
    """A deterministic function (row, col) -> [0, 1] built from a periodic
    grid of values, sampled bilinearly.

    Attributes
    ----------
    grid : `numpy.ndarray`
        The 2D array of texture values on the integer lattice. The texture
        repeats with the grid's shape as period.

    """

    def __init__(self, grid):
        grid = np.asarray(grid, dtype=np.float64)
        if grid.ndim != 2:
            raise LightFieldShapeError('A texture grid must be 2D.')
        self.grid = np.clip(grid, 0, 1)

    @property
    def period(self):
        return self.grid.shape

    def __call__(self, rows, cols):
        """Sample the texture at (possibly fractional) coordinates.

        Integer coordinates return grid values exactly.

        """

        rows, cols = np.broadcast_arrays(np.asarray(rows, dtype=np.float64),
                                         np.asarray(cols, dtype=np.float64))
        # map_coordinates rejects 0-d coordinate arrays
        samples = ndimage.map_coordinates(self.grid,
                                          [rows.ravel(), cols.ravel()],
                                          order=1, mode='grid-wrap',
                                          prefilter=False)
        return np.clip(samples.reshape(rows.shape), 0, 1)


def make_texture(kind, H, W, seed=0, **kwargs):
    """Return a procedural periodic texture with period (H, W).

    Parameters
    ----------
    kind : str
        One of 'noise' (seeded uniform values on the integer grid), 'blob'
        (a periodic Gaussian spot; `sigma` and `center` keywords), 'edge'
        (0 left of column `column`, 1 from it on) or 'checker' (squares of
        side `size`).
    H, W : int
        The period of the texture.
    seed : int
        Seed for the 'noise' kind.

    Returns
    -------
    `PeriodicTexture`

    """

    rows, cols = np.mgrid[0:H, 0:W]

    if kind == 'noise':
        rng = np.random.default_rng(seed)
        grid = rng.random((H, W))
    elif kind == 'blob':
        sigma = kwargs.get('sigma', 2.0)
        h0, w0 = kwargs.get('center', (H / 2, W / 2))
        # Distance on the torus.
        dh = np.minimum(abs(rows - h0), H - abs(rows - h0))
        dw = np.minimum(abs(cols - w0), W - abs(cols - w0))
        grid = np.exp(-(dh ** 2 + dw ** 2) / (2 * sigma ** 2))
    elif kind == 'edge':
        column = kwargs.get('column', W // 2)
        grid = (cols >= column).astype(np.float64)
    elif kind == 'checker':
        size = kwargs.get('size', 4)
        grid = ((rows // size + cols // size) % 2).astype(np.float64)
    else:
        raise LightFieldError(f'Unknown texture kind "{kind}"; use one of '
                              f'{TEXTURE_KINDS}.')

    return PeriodicTexture(grid)


@dataclass(frozen=True)
class SyntheticSceneSpec(object):
    """Parameters of a constant-disparity scene.

    Attributes
    ----------
    texture : `PeriodicTexture`
        The scene texture as seen from the center view.
    disparity : float
        Pixels of shift per view step; may be fractional or negative.
    A : int
        Angular size (A x A views).
    H, W : int
        Spatial size of each view.

    """

    texture: PeriodicTexture
    disparity: float
    A: int
    H: int
    W: int

    def __post_init__(self):
        if min(self.A, self.H, self.W) < 1:
            raise LightFieldShapeError('A, H and W must be positive.')
        if abs(self.disparity) * (self.A - 1) >= min(self.H, self.W) / 2:
            raise LightFieldError(f'Disparity {self.disparity} moves content'
                                  f' too far for {self.A} views of '
                                  f'{self.H}x{self.W}.')

    @classmethod
    def fromKind(cls, kind, disparity, A, H, W, seed=0, **kwargs):
        """Build a spec whose texture has the same period as the views."""

        return cls(make_texture(kind, H, W, seed=seed, **kwargs),
                   disparity, A, H, W)


def generate_constant_disparity_lf(spec):
    """Render a constant-disparity light field.

    lf[u, v, h, w] = texture(h + d * (u - u_c), w + d * (v - v_c)) with
    u_c = v_c = (A - 1) / 2.

    Parameters
    ----------
    spec : `SyntheticSceneSpec`

    Returns
    -------
    `LightField`

    """

    center = (spec.A - 1) / 2
    rows, cols = np.mgrid[0:spec.H, 0:spec.W].astype(np.float64)
    views = np.empty((spec.A, spec.A, spec.H, spec.W))

    for u in range(spec.A):
        for v in range(spec.A):
            views[u, v] = spec.texture(rows + spec.disparity * (u - center),
                                       cols + spec.disparity * (v - center))

    return LightField(views)


def _integer_disparity(d):
    if float(d) != int(d):
        raise LightFieldError(f'The shift oracle needs an integer disparity,'
                              f' got {d}.')
    return int(d)


def parallax_residual(lf, disparity):
    """Return the largest deviation of a light field from the parallax law.

    Every view (u, v) is compared with the center view rolled by
    -d * (u - u_c, v - v_c). The result is 0 for fields rendered from a
    texture whose period equals the view size.

    Parameters
    ----------
    lf : `LightField`
        A square light field with odd angular size.
    disparity : int

    Returns
    -------
    float

    """

    d = _integer_disparity(disparity)
    A = lf.A
    if A % 2 == 0:
        raise LightFieldShapeError('The parallax oracle needs an odd angular'
                                   ' size so the center view exists.')
    c = (A - 1) // 2
    center = lf.views[c, c]

    residual = 0.
    for u in range(A):
        for v in range(A):
            expected = np.roll(center, (-d * (u - c), -d * (v - c)),
                               axis=(0, 1))
            residual = max(residual,
                           float(np.max(np.abs(lf.views[u, v] - expected))))
    return residual


def macpi_correspondence(m, disparity, h0, w0, wrap=True):
    """Gather the samples of one object point from a macro-pixel image.

    The object point at (h0, w0) in the center view is looked up in the
    macro-pixel displaced by d * (u_c - u, v_c - v) from the anchor
    macro-pixel (h0, w0), at sub-position (u, v).

    Parameters
    ----------
    m : `MacPI`
        A macro-pixel image with odd A.
    disparity : int
    h0, w0 : int
        The anchor macro-pixel.
    wrap : bool, Default : True
        Wrap displaced positions periodically; if *False* positions outside
        the frame raise an error.

    Returns
    -------
    `numpy.ndarray`
        An A x A array; entry (u, v) is the sample from view (u, v). For a
        field obeying the parallax law every entry equals the anchor sample.

    """

    d = _integer_disparity(disparity)
    A = m.A
    if A % 2 == 0:
        raise LightFieldShapeError('The correspondence oracle needs an odd'
                                   ' angular size.')
    c = (A - 1) // 2
    samples = np.empty((A, A))

    for u in range(A):
        for v in range(A):
            h = h0 + d * (c - u)
            w = w0 + d * (c - v)
            if wrap:
                h, w = h % m.H, w % m.W
            elif not (0 <= h < m.H and 0 <= w < m.W):
                raise IndexOutOfRangeError(f'Object point ({h0}, {w0}) leaves'
                                           f' the frame in view ({u}, {v}).')
            samples[u, v] = m.pixels[h * A + u, w * A + v]

    return samples


def epi_feature_track(epi):
    """Return the intensity-centroid position of the feature in each EPI row.

    Each row has its minimum subtracted before the centroid is taken, so a
    single bright feature on a flat background is tracked.

    """

    strip = np.asarray(epi.strip, dtype=np.float64)
    weights = strip - strip.min(axis=1, keepdims=True)
    positions = np.arange(strip.shape[1])
    totals = weights.sum(axis=1)
    if np.any(totals <= 0):
        raise LightFieldError('EPI row without a feature to track.')
    return (weights * positions).sum(axis=1) / totals


def epi_slope(epi):
    """Estimate the disparity from the slope of the feature line in an EPI.

    A feature moves by -d pixels per view step, so the negated slope of a
    linear fit of position against view index is returned.

    Parameters
    ----------
    epi : `EPI`

    Returns
    -------
    float
        The estimated disparity in pixels per view.

    """

    track = epi_feature_track(epi)
    if len(track) < 2:
        raise LightFieldShapeError('Need at least two views to fit a slope.')
    fit = stats.linregress(np.arange(len(track)), track)
    return -fit.slope
