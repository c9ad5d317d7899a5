#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Created on Tue Mar 26 11:05:53 2024

@author: ddasr

Diagnostic images for a reconstructed light field: the center view, an
error map against the ground truth and a pair of EPI strips.
"""

from dataclasses import dataclass
import logging
from pathlib import Path

import cmasher as cmr
import matplotlib.pyplot as plt
import numpy as np
from PIL import Image

from ddasrlib.exceptions import ShapeMismatchError
from ddasrlib.lightfield import HORIZONTAL, VERTICAL, extract_epi, to_uint8

__all__ = ['Visuals', 'emit_visuals', 'VISUAL_FILES']

logger = logging.getLogger(__name__)

VISUAL_FILES = {'center': 'csai.png', 'error': 'errmap.png',
                'epi_h': 'epi_h.png', 'epi_v': 'epi_v.png'}


@dataclass(eq=False)
class Visuals(object):
    """The arrays written by `emit_visuals` and where they went."""

    center: np.ndarray
    error_map: np.ndarray
    epi_h: np.ndarray
    epi_v: np.ndarray
    paths: dict


def _save_gray(path, array):
    try:
        Image.fromarray(to_uint8(array)).save(path)
    except OSError as err:
        raise OSError(f'Could not write "{path}": {err}') from err


def emit_visuals(pred, gt, out_dir, scanline=None, error_scale=0.1,
                 cmap=None):
    """Write diagnostic images of a reconstruction.

    Parameters
    ----------
    pred, gt : `ddasrlib.lightfield.LightField`
        Reconstruction and ground truth of the same shape.
    out_dir : `pathlib.Path` or str
        Created if needed.
    scanline : tuple of int, optional
        (h, w) row and column the EPI strips are cut along; the center of
        the view by default. The horizontal strip fixes the central u and
        row h, the vertical strip the central v and column w.
    error_scale : float, Default : 0.1
        The absolute error mapped to the top of the colour map.
    cmap : str or `matplotlib.colors.Colormap`, optional
        The error map colours; `cmasher.ember` by default.

    Returns
    -------
    `Visuals`

    """

    if pred.shape != gt.shape:
        raise ShapeMismatchError(f'Prediction {pred.shape} and ground truth '
                                 f'{gt.shape} differ.')
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    h, w = (pred.H // 2, pred.W // 2) if scanline is None else scanline
    uc, vc = pred.U // 2, pred.V // 2

    center = np.asarray(pred.views[uc, vc])
    error_map = np.abs(center - gt.views[uc, vc])
    epi_h = extract_epi(pred, HORIZONTAL, uc, h).strip
    epi_v = extract_epi(pred, VERTICAL, vc, w).strip

    paths = {key: out_dir / name for key, name in VISUAL_FILES.items()}
    _save_gray(paths['center'], center)
    try:
        plt.imsave(paths['error'], error_map, cmap=cmap or cmr.ember,
                   vmin=0, vmax=error_scale)
    except OSError as err:
        raise OSError(f'Could not write "{paths["error"]}": {err}') from err
    _save_gray(paths['epi_h'], epi_h)
    _save_gray(paths['epi_v'], epi_v)
    logger.info(f'Wrote visuals to "{out_dir}".')

    return Visuals(center, error_map, np.asarray(epi_h), np.asarray(epi_v),
                   paths)
