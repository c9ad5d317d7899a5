#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Created on Tue Mar  5 15:02:37 2024

@author: ddasr

Reading and writing scene directories.

A scene directory holds one `view_{u:02d}_{v:02d}.png` per view (8-bit
grayscale or RGB) and a `scene.meta` plain-text file of key=value lines with
U, V, H, W and optionally disparity_min and disparity_max. A MacPI is stored
as a single PNG with `A` recorded in its metadata file.
"""

from dataclasses import dataclass, field
from glob import glob
from pathlib import Path
import re

import numpy as np
from PIL import Image

from ddasrlib.exceptions import ConfigurationError, SceneFormatError
from ddasrlib.lightfield.lightfield import LightField, MacPI
from ddasrlib.miscellaneous import (read_key_value_file,
                                    write_key_value_file)

__all__ = ['Scene', 'read_scene', 'write_scene', 'write_views',
           'read_macpi', 'write_macpi', 'to_uint8', 'from_uint8',
           'META_FILE', 'view_file_name']

META_FILE = 'scene.meta'

_META_KEYS = ('U', 'V', 'H', 'W', 'A', 'disparity', 'disparity_min',
              'disparity_max', 'source')
_INTEGER_KEYS = ('U', 'V', 'H', 'W', 'A')
_VIEW_PATTERN = re.compile(r'view_(\d+)_(\d+)\.png$')


def view_file_name(u, v):
    return f'view_{u:02d}_{v:02d}.png'


def to_uint8(array):
    """Quantize samples in [0, 1] to 8-bit integers."""

    return np.round(np.clip(array, 0, 1) * 255).astype(np.uint8)


def from_uint8(array):
    """Scale 8-bit samples to [0, 1]."""

    return np.asarray(array, dtype=np.float64) / 255.


@dataclass
class Scene(object):
    """A scene as stored on disk.

    Attributes
    ----------
    name : str
        The scene directory's name.
    pixels : `numpy.ndarray`
        Samples in [0, 1] of shape (U, V, H, W) for grayscale scenes or
        (U, V, H, W, 3) for RGB scenes.
    meta : dict
        The parsed metadata. Integer keys are stored as ints.

    """

    name: str
    pixels: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def isColor(self):
        return self.pixels.ndim == 5

    def lightfield(self):
        """Return the scene as a `LightField` (grayscale scenes only)."""

        if self.isColor:
            raise SceneFormatError(f'Scene "{self.name}" is RGB; convert it '
                                   'to luminance first.')
        return LightField(self.pixels)


def _normalize_meta(raw):
    """Restore the case of known keys and convert integer values."""

    canonical = {key.lower(): key for key in _META_KEYS}
    meta = {}
    for key, value in raw.items():
        name = canonical[key]
        if name in _INTEGER_KEYS:
            try:
                meta[name] = int(value)
            except ValueError:
                raise SceneFormatError(f'Metadata key {name} must be an '
                                       f'integer, got "{value}".')
        elif name in ('disparity', 'disparity_min', 'disparity_max'):
            meta[name] = float(value)
        else:
            meta[name] = value
    return meta


def _read_meta(directory):
    meta_path = Path(directory) / META_FILE
    if not meta_path.exists():
        raise SceneFormatError(f'No {META_FILE} found in "{directory}".')
    try:
        raw = read_key_value_file(meta_path, allowed_keys=_META_KEYS)
    except ConfigurationError as err:
        raise SceneFormatError(str(err))
    return _normalize_meta(raw)


def read_scene(directory):
    """Read a scene directory.

    Parameters
    ----------
    directory : `pathlib.Path` or str
        The scene directory.

    Returns
    -------
    `Scene`

    """

    directory = Path(directory)
    if not directory.is_dir():
        raise SceneFormatError(f'The scene directory "{directory}" could not '
                               'be found.')
    meta = _read_meta(directory)
    for key in ('U', 'V', 'H', 'W'):
        if key not in meta:
            raise SceneFormatError(f'{META_FILE} in "{directory}" lacks {key}.')

    U, V, H, W = meta['U'], meta['V'], meta['H'], meta['W']
    found = {}
    for path in sorted(glob(str(directory / 'view_*.png'))):
        match = _VIEW_PATTERN.search(path)
        if match:
            found[(int(match.group(1)), int(match.group(2)))] = Path(path)

    missing = [(u, v) for u in range(U) for v in range(V)
               if (u, v) not in found]
    if missing:
        raise SceneFormatError(f'Scene "{directory.name}" is missing views '
                               f'{missing[:4]}{"..." if len(missing) > 4 else ""}.')

    images = {}
    for (u, v), path in found.items():
        if u >= U or v >= V:
            continue
        with Image.open(path) as image:
            if image.mode not in ('L', 'RGB'):
                image = image.convert('RGB')
            images[(u, v)] = np.asarray(image)

    first = images[(0, 0)]
    if first.shape[:2] != (H, W):
        raise SceneFormatError(f'Views of "{directory.name}" are '
                               f'{first.shape[:2]}, metadata says {(H, W)}.')
    pixels = np.empty((U, V) + first.shape, dtype=np.float64)
    for (u, v), image in images.items():
        if image.shape != first.shape:
            raise SceneFormatError(f'View ({u}, {v}) of "{directory.name}" '
                                   'does not match the other views.')
        pixels[u, v] = from_uint8(image)

    return Scene(directory.name, pixels, meta)


def write_views(directory, pixels, meta=None):
    """Write an array of views in [0, 1] as a scene directory.

    Parameters
    ----------
    directory : `pathlib.Path` or str
        The directory to create or overwrite.
    pixels : `numpy.ndarray`
        Samples of shape (U, V, H, W) or (U, V, H, W, 3).
    meta : dict, optional
        Extra metadata; U, V, H and W are always written from the array.

    """

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    pixels = np.asarray(pixels)
    U, V, H, W = pixels.shape[:4]

    for u in range(U):
        for v in range(V):
            Image.fromarray(to_uint8(pixels[u, v])).save(
                directory / view_file_name(u, v))

    values = dict(meta or {})
    values.update({'U': U, 'V': V, 'H': H, 'W': W})
    write_key_value_file(directory / META_FILE, values)
    return directory


def write_scene(directory, lf, meta=None):
    """Write a `LightField` as a grayscale scene directory."""

    return write_views(directory, lf.views, meta)


def write_macpi(directory, m, name='macpi.png'):
    """Write a `MacPI` as a single PNG with `A` recorded in scene.meta."""

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    Image.fromarray(to_uint8(m.pixels)).save(directory / name)
    write_key_value_file(directory / META_FILE,
                         {'A': m.A, 'H': m.H, 'W': m.W, 'source': name})
    return directory / name


def read_macpi(directory, name=None):
    """Read a MacPI written by `write_macpi`."""

    directory = Path(directory)
    meta = _read_meta(directory)
    if 'A' not in meta:
        raise SceneFormatError(f'{META_FILE} in "{directory}" lacks A.')
    path = directory / (name or meta.get('source', 'macpi.png'))
    if not path.exists():
        raise SceneFormatError(f'MacPI image "{path}" could not be found.')
    with Image.open(path) as image:
        pixels = from_uint8(np.asarray(image.convert('L')))
    return MacPI(pixels, meta['A'])
