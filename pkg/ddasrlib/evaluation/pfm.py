#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Created on Mon Mar 25 14:47:02 2024

@author: ddasr

Reading and writing Portable Float Map (PFM) files, the format disparity
estimators and the synthetic benchmarks store disparity maps in.

A PFM file is a three-line text header ('Pf' for one channel or 'PF' for
three, then width and height, then a scale whose sign gives the byte order)
followed by 32-bit floats stored bottom row first.
"""

from pathlib import Path

import numpy as np

from ddasrlib.exceptions import SceneFormatError

__all__ = ['read_pfm', 'write_pfm']


def _header_line(f, file_path):
    line = f.readline()
    if not line:
        raise SceneFormatError(f'"{file_path}" ends inside the PFM header.')
    return line.decode('ascii', errors='replace').strip()


def read_pfm(file_path):
    """Read a PFM file.

    Parameters
    ----------
    file_path : `pathlib.Path` or str

    Returns
    -------
    `numpy.ndarray`
        Float64 samples of shape (H, W) or (H, W, 3), top row first.

    """

    file_path = Path(file_path)
    if not file_path.exists():
        raise FileNotFoundError(f'The file "{file_path}" could not be found.')

    with open(file_path, 'rb') as f:
        kind = _header_line(f, file_path)
        if kind not in ('Pf', 'PF'):
            raise SceneFormatError(f'"{file_path}" is not a PFM file '
                                   f'(header "{kind}").')
        try:
            width, height = (int(value) for value in
                             _header_line(f, file_path).split())
            scale = float(_header_line(f, file_path))
        except ValueError:
            raise SceneFormatError(f'Malformed PFM header in "{file_path}".')
        data = f.read()

    channels = 3 if kind == 'PF' else 1
    dtype = '<f4' if scale < 0 else '>f4'
    count = width * height * channels
    if len(data) < 4 * count:
        raise SceneFormatError(f'"{file_path}" holds {len(data) // 4} '
                               f'samples, the header promises {count}.')
    samples = np.frombuffer(data, dtype=dtype, count=count)
    shape = (height, width, 3) if channels == 3 else (height, width)
    return np.flipud(samples.reshape(shape)).astype(np.float64)


def write_pfm(file_path, array):
    """Write a (H, W) or (H, W, 3) array as a little-endian PFM file."""

    array = np.asarray(array, dtype='<f4')
    if array.ndim == 3 and array.shape[2] == 3:
        kind = 'PF'
    elif array.ndim == 2:
        kind = 'Pf'
    else:
        raise SceneFormatError('PFM holds (H, W) or (H, W, 3) arrays, got '
                               f'shape {array.shape}.')
    height, width = array.shape[:2]
    with open(file_path, 'wb') as f:
        f.write(f'{kind}\n{width} {height}\n-1.0\n'.encode('ascii'))
        f.write(np.ascontiguousarray(np.flipud(array)).tobytes())
    return Path(file_path)
