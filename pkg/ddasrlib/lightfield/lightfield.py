#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Created on Mon Mar  4 13:41:09 2024

@author: ddasr

Classes and functions for the canonical light field data model: the
sub-aperture image (SAI) representation `LightField`, the macro-pixel image
`MacPI`, epipolar-plane images `EPI`, the lossless transforms between them,
and angular sampling and cropping.

Index convention: u is the angular row, v the angular column, h the spatial
row and w the spatial column. A MacPI stores lf[u, v, h, w] at
MacPI[h * A + u, w * A + v].
"""

from dataclasses import dataclass

from bidict import bidict
from einops import rearrange
import numpy as np

from ddasrlib.exceptions import (IndexOutOfRangeError, LightFieldError,
                                 LightFieldRangeError, LightFieldShapeError)

__all__ = ['LightField', 'MacPI', 'EPI', 'HORIZONTAL', 'VERTICAL',
           'macpi_from_sai', 'sai_from_macpi', 'extract_epi',
           'sample_indices', 'sparse_sample_corners', 'center_crop_angular',
           'view_index_map']

HORIZONTAL = 'horizontal'
VERTICAL = 'vertical'


def _frozen_samples(array, ndim, name):
    """Return a read-only floating-point copy of `array`, checking its number
    of dimensions and that every sample lies in [0, 1].

    """

    array = np.array(array, copy=True)
    if not np.issubdtype(array.dtype, np.floating):
        array = array.astype(np.float64)
    if array.ndim != ndim:
        raise LightFieldShapeError(f'{name} needs a {ndim}D array, got shape'
                                   f' {array.shape}.')
    if array.size == 0 or 0 in array.shape:
        raise LightFieldShapeError(f'{name} needs positive sizes, got shape'
                                   f' {array.shape}.')
    # NaNs fail both comparisons, so they are caught here as well.
    if not np.all((array >= 0) & (array <= 1)):
        raise LightFieldRangeError(f'{name} samples must lie in [0, 1].')
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class LightField(object):
    """A 4D light field of luminance samples in [0, 1].

    Attributes
    ----------
    views : `numpy.ndarray`
        A read-only array of shape (U, V, H, W).

    """

    views: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'views',
                           _frozen_samples(self.views, 4, 'LightField'))

    @property
    def U(self):
        return self.views.shape[0]

    @property
    def V(self):
        return self.views.shape[1]

    @property
    def H(self):
        return self.views.shape[2]

    @property
    def W(self):
        return self.views.shape[3]

    @property
    def shape(self):
        return self.views.shape

    @property
    def isSquare(self):
        return self.U == self.V

    @property
    def A(self):
        """The angular size of a square light field."""

        if not self.isSquare:
            raise LightFieldShapeError('Angular grid is not square: '
                                       f'{self.U}x{self.V}.')
        return self.U

    def view(self, u, v):
        """Return the sub-aperture image at angular position (u, v)."""

        if not (0 <= u < self.U and 0 <= v < self.V):
            raise IndexOutOfRangeError(f'View ({u}, {v}) is outside the '
                                       f'{self.U}x{self.V} angular grid.')
        return self.views[u, v]

    def __eq__(self, other):
        if not isinstance(other, LightField):
            return NotImplemented
        return self.shape == other.shape and\
            np.array_equal(self.views, other.views)

    def __repr__(self):
        return f'LightField(U={self.U}, V={self.V}, H={self.H}, W={self.W})'


@dataclass(frozen=True, eq=False)
class MacPI(object):
    """A 2D macro-pixel image of shape (A * H, A * W).

    Attributes
    ----------
    pixels : `numpy.ndarray`
        A read-only 2D array of luminance samples.
    A : int
        The angular size.

    """

    pixels: np.ndarray
    A: int

    def __post_init__(self):
        pixels = _frozen_samples(self.pixels, 2, 'MacPI')
        if int(self.A) < 1:
            raise LightFieldShapeError(f'Angular size must be positive, got'
                                       f' {self.A}.')
        if pixels.shape[0] % self.A or pixels.shape[1] % self.A:
            raise LightFieldShapeError(f'MacPI shape {pixels.shape} is not'
                                       f' divisible by A={self.A}.')
        object.__setattr__(self, 'pixels', pixels)
        object.__setattr__(self, 'A', int(self.A))

    @property
    def H(self):
        return self.pixels.shape[0] // self.A

    @property
    def W(self):
        return self.pixels.shape[1] // self.A

    def __eq__(self, other):
        if not isinstance(other, MacPI):
            return NotImplemented
        return self.A == other.A and\
            np.array_equal(self.pixels, other.pixels)


@dataclass(frozen=True, eq=False)
class EPI(object):
    """An epipolar-plane image.

    A horizontal EPI has shape (V, W) and fixes (u, h); a vertical EPI has
    shape (U, H) and fixes (v, w). Rows index views in both cases.

    """

    strip: np.ndarray
    orientation: str
    angular_index: int
    spatial_index: int


def macpi_from_sai(lf):
    """Return the macro-pixel image of a square light field.

    Parameters
    ----------
    lf : `LightField`
        A light field with U = V = A.

    Returns
    -------
    `MacPI`
        An image with MacPI[h * A + u, w * A + v] = lf[u, v, h, w].

    """

    A = lf.A
    return MacPI(rearrange(lf.views, 'u v h w -> (h u) (w v)'), A)


def sai_from_macpi(m):
    """Return the light field held in a macro-pixel image.

    This is the exact inverse of `macpi_from_sai`.

    """

    return LightField(rearrange(m.pixels, '(h u) (w v) -> u v h w',
                                u=m.A, v=m.A))


def extract_epi(lf, orientation, fixed_angular_index, fixed_spatial_index):
    """Extract an epipolar-plane image from a light field.

    Parameters
    ----------
    lf : `LightField`
        The light field to slice.
    orientation : str
        'horizontal' gives strip[v, w] = lf[u, v, h, w] for fixed (u, h);
        'vertical' gives strip[u, h] = lf[u, v, h, w] for fixed (v, w).
    fixed_angular_index : int
        u for horizontal EPIs, v for vertical ones.
    fixed_spatial_index : int
        h for horizontal EPIs, w for vertical ones.

    Returns
    -------
    `EPI`

    """

    if orientation == HORIZONTAL:
        limits = (lf.U, lf.H)
    elif orientation == VERTICAL:
        limits = (lf.V, lf.W)
    else:
        raise LightFieldError(f'Unknown EPI orientation "{orientation}".')

    if not (0 <= fixed_angular_index < limits[0] and
            0 <= fixed_spatial_index < limits[1]):
        raise IndexOutOfRangeError(f'EPI indices ({fixed_angular_index}, '
                                   f'{fixed_spatial_index}) out of range for'
                                   f' {lf!r}.')

    if orientation == HORIZONTAL:
        strip = lf.views[fixed_angular_index, :, fixed_spatial_index, :]
    else:
        strip = lf.views[:, fixed_angular_index, :, fixed_spatial_index]

    return EPI(np.array(strip), orientation, fixed_angular_index,
               fixed_spatial_index)


def sample_indices(size, n):
    """Return `n` evenly spaced indices in range(size), including both
    endpoints.

    For n = 2 these are the two corners {0, size - 1}; a single index is the
    central one.

    """

    if not 1 <= n <= size:
        raise IndexOutOfRangeError(f'Cannot sample {n} indices from an axis'
                                   f' of size {size}.')
    if n == 1:
        return np.array([(size - 1) // 2])
    return np.round(np.linspace(0, size - 1, n)).astype(int)


def sparse_sample_corners(lf, n=2):
    """Return the n x n sparsely sampled views of a light field.

    For n = 2 the four corner views are returned; larger n uses evenly spaced
    angular indices including both ends.

    """

    rows = sample_indices(lf.U, n)
    cols = sample_indices(lf.V, n)
    return LightField(lf.views[np.ix_(rows, cols)])


def center_crop_angular(lf, target):
    """Return the central `target` x `target` block of views.

    When the angular size minus the target is odd the offset is rounded down.

    """

    if not 1 <= target <= min(lf.U, lf.V):
        raise IndexOutOfRangeError(f'Cannot crop {target}x{target} views '
                                   f'from {lf!r}.')
    u0 = (lf.U - target) // 2
    v0 = (lf.V - target) // 2
    return LightField(lf.views[u0:u0 + target, v0:v0 + target])


def view_index_map(U, V=None):
    """Return a bidict between ordinal view numbers and (u, v) positions,
    in row-major order.

    """

    V = U if V is None else V
    return bidict({u * V + v: (u, v) for u in range(U) for v in range(V)})
