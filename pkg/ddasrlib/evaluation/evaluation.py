#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Created on Mon Mar 25 10:31:16 2024

@author: ddasr

Quantitative evaluation of reconstructed light fields and disparity maps.

Image quality is measured on the luminance (Y) channel only, and only on
the novel views of a task: positions already supplied as inputs are never
scored.
"""

from dataclasses import dataclass, field
from functools import partial
import logging

import numpy as np
import pandas as pd
from p_tqdm import p_map
from skimage.metrics import mean_squared_error, structural_similarity
from tabulate import tabulate
from tqdm import tqdm

from ddasrlib.exceptions import (EmptyMaskError, MetricError,
                                 ShapeMismatchError)
from ddasrlib.lightfield import sample_indices, view_index_map

__all__ = ['rgb_to_y', 'rgb_to_ycbcr', 'ycbcr_to_rgb', 'nearest_chroma',
           'psnr', 'ssim', 'SSIM_WINDOW', 'DisparityMap', 'badpix', 'mse100',
           'evaluate_disparity', 'BP1_THRESHOLD', 'BP7_THRESHOLD', 'Task',
           'TASK_2TO3', 'TASK_2TO7', 'TASK_5TO9', 'MetricReport',
           'evaluate_scene', 'evaluate_scenes']

logger = logging.getLogger(__name__)

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5

BP1_THRESHOLD = 0.1
BP7_THRESHOLD = 0.07

# ITU-R BT.601, full range.
_Y = np.array([0.299, 0.587, 0.114])
_CB = np.array([-0.168736, -0.331264, 0.5])
_CR = np.array([0.5, -0.418688, -0.081312])


def _unit_rgb(image):
    image = np.asarray(image)
    if image.ndim < 1 or image.shape[-1] != 3:
        raise ShapeMismatchError('Expected RGB samples with 3 channels on '
                                 f'the last axis, got shape {image.shape}.')
    if image.dtype == np.uint8:
        return image.astype(np.float64) / 255.
    return image.astype(np.float64)


def rgb_to_y(image):
    """Return the BT.601 luminance of RGB samples.

    Parameters
    ----------
    image : array_like
        8-bit or unit-range RGB with channels on the last axis.

    Returns
    -------
    `numpy.ndarray`
        Y in [0, 1], with the channel axis removed.

    """

    return np.clip(_unit_rgb(image) @ _Y, 0, 1)


def rgb_to_ycbcr(image):
    """Return full-range YCbCr in [0, 1] (chroma centred on 0.5)."""

    rgb = _unit_rgb(image)
    return np.stack([rgb @ _Y, rgb @ _CB + 0.5, rgb @ _CR + 0.5], axis=-1)


def ycbcr_to_rgb(image):
    """Invert `rgb_to_ycbcr`, clamping to [0, 1]."""

    image = np.asarray(image, dtype=np.float64)
    if image.shape[-1] != 3:
        raise ShapeMismatchError('Expected YCbCr samples with 3 channels on '
                                 f'the last axis, got shape {image.shape}.')
    y, cb, cr = image[..., 0], image[..., 1] - 0.5, image[..., 2] - 0.5
    rgb = np.stack([y + 1.402 * cr,
                    y - 0.344136 * cb - 0.714136 * cr,
                    y + 1.772 * cb], axis=-1)
    return np.clip(rgb, 0, 1)


def nearest_chroma(lf_y, rgb_sparse):
    """Colour a dense luminance light field.

    Cb and Cr of each output view are taken from the angularly nearest
    input view.

    Parameters
    ----------
    lf_y : `ddasrlib.lightfield.LightField`
        The reconstructed (A, A, H, W) luminance.
    rgb_sparse : array_like
        The (n, n, H, W, 3) input views in RGB.

    Returns
    -------
    `numpy.ndarray`
        (A, A, H, W, 3) RGB samples in [0, 1].

    """

    chroma = rgb_to_ycbcr(rgb_sparse)[..., 1:]
    n = chroma.shape[0]
    if chroma.shape[2:4] != (lf_y.H, lf_y.W):
        raise ShapeMismatchError(f'Input views are {chroma.shape[2:4]}, the '
                                 f'light field is {(lf_y.H, lf_y.W)}.')
    positions = sample_indices(lf_y.U, n)
    nearest = [int(np.argmin(np.abs(positions - a))) for a in range(lf_y.U)]
    chroma = chroma[np.ix_(nearest, nearest)]
    return ycbcr_to_rgb(np.concatenate([lf_y.views[..., None], chroma],
                                       axis=-1))


def _check_pair(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeMismatchError(f'Cannot compare shapes {a.shape} and '
                                 f'{b.shape}.')
    return a, b


def psnr(a, b):
    """Return the peak signal-to-noise ratio of two unit-range images in dB.

    Identical images give *inf*.

    """

    a, b = _check_pair(a, b)
    mse = mean_squared_error(a, b)
    if mse == 0:
        return np.inf
    return float(10 * np.log10(1 / mse))


def ssim(a, b):
    """Return the mean structural similarity of two unit-range images.

    The statistics use an 11x11 Gaussian window with sigma 1.5 and the
    population covariance, with K1 = 0.01 and K2 = 0.03.

    """

    a, b = _check_pair(a, b)
    if a.ndim != 2 or min(a.shape) < SSIM_WINDOW:
        raise ShapeMismatchError(f'SSIM needs 2D images of at least '
                                 f'{SSIM_WINDOW}x{SSIM_WINDOW}, got '
                                 f'{a.shape}.')
    return float(structural_similarity(a, b, data_range=1.,
                                       win_size=SSIM_WINDOW,
                                       gaussian_weights=True,
                                       sigma=SSIM_SIGMA,
                                       use_sample_covariance=False,
                                       K1=0.01, K2=0.03))


@dataclass(frozen=True, eq=False)
class DisparityMap(object):
    """The disparity of a scene's center view in pixels per view step.

    Attributes
    ----------
    values : `numpy.ndarray`
        A 2D array.
    mask : `numpy.ndarray`
        Boolean validity mask; by default every finite value is valid.

    """

    values: np.ndarray
    mask: np.ndarray = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ShapeMismatchError('A disparity map must be 2D, got shape '
                                     f'{values.shape}.')
        if self.mask is None:
            mask = np.isfinite(values)
        else:
            mask = np.asarray(self.mask, dtype=bool)
            if mask.shape != values.shape:
                raise ShapeMismatchError(f'Mask shape {mask.shape} does not '
                                         f'match {values.shape}.')
            if not np.all(np.isfinite(values[mask])):
                raise MetricError('Disparity values inside the mask must be '
                                  'finite.')
        object.__setattr__(self, 'values', values)
        object.__setattr__(self, 'mask', mask)

    @property
    def shape(self):
        return self.values.shape


def _as_disparity(d):
    return d if isinstance(d, DisparityMap) else DisparityMap(d)


def _errors(d, gt):
    d, gt = _as_disparity(d), _as_disparity(gt)
    if d.shape != gt.shape:
        raise ShapeMismatchError(f'Disparity shapes {d.shape} and {gt.shape}'
                                 ' differ.')
    mask = d.mask & gt.mask
    if not mask.any():
        raise EmptyMaskError('No valid pixels to evaluate.')
    return (d.values - gt.values)[mask]


def badpix(d, gt, tau):
    """Return the percentage of valid pixels with |d - gt| > tau."""

    return float(100 * np.mean(np.abs(_errors(d, gt)) > tau))


def mse100(d, gt):
    """Return 100 times the mean squared disparity error over valid
    pixels.

    """

    return float(100 * np.mean(_errors(d, gt) ** 2))


def evaluate_disparity(d, gt, tau_bp1=BP1_THRESHOLD, tau_bp7=BP7_THRESHOLD):
    """Return {'BP1', 'BP7', 'MSEx100'} for one disparity map."""

    return {'BP1': badpix(d, gt, tau_bp1),
            'BP7': badpix(d, gt, tau_bp7),
            'MSEx100': mse100(d, gt)}


@dataclass(frozen=True)
class Task(object):
    """An angular super-resolution task, A_in x A_in -> A_out x A_out.

    The input views sit at the evenly spaced positions (the corners for
    A_in = 2) of the output grid.

    """

    A_in: int
    A_out: int
    name: str = ''

    def __post_init__(self):
        if not 1 <= self.A_in <= self.A_out:
            raise MetricError(f'Invalid task {self.A_in}x{self.A_in} -> '
                              f'{self.A_out}x{self.A_out}.')
        if not self.name:
            object.__setattr__(self, 'name', f'{self.A_in}x{self.A_in}->'
                               f'{self.A_out}x{self.A_out}')

    def inputPositions(self):
        indices = sample_indices(self.A_out, self.A_in)
        return [(int(u), int(v)) for u in indices for v in indices]

    def novelPositions(self):
        """Return the output positions that are not inputs, row-major."""

        inputs = set(self.inputPositions())
        return [(u, v) for u in range(self.A_out) for v in range(self.A_out)
                if (u, v) not in inputs]


TASK_2TO7 = Task(2, 7)
TASK_5TO9 = Task(5, 9)
TASK_2TO3 = Task(2, 3)


@dataclass
class MetricReport(object):
    """Per-view PSNR and SSIM of a set of scenes.

    Scene means are arithmetic means over the scene's novel views; the
    dataset mean is the mean of the scene means.

    """

    task: Task
    model_id: str = ''
    records: list = field(default_factory=list)

    columns = ['scene', 'view', 'u', 'v', 'psnr', 'ssim']

    def addScene(self, scene, views):
        """Add the (u, v, psnr, ssim) values of one scene.

        Each record also carries the row-major ordinal of its view.

        """

        ordinals = view_index_map(self.task.A_out).inverse
        for u, v, psnr_value, ssim_value in views:
            self.records.append({'scene': scene,
                                 'view': ordinals[(int(u), int(v))],
                                 'u': int(u), 'v': int(v),
                                 'psnr': float(psnr_value),
                                 'ssim': float(ssim_value)})

    @property
    def scenes(self):
        return list(dict.fromkeys(record['scene'] for record in
                                  self.records))

    def toFrame(self):
        return pd.DataFrame(self.records, columns=self.columns)

    def sceneMeans(self):
        """Return a DataFrame of mean PSNR and SSIM indexed by scene."""

        frame = self.toFrame()
        return frame.groupby('scene', sort=False)[['psnr', 'ssim']].mean()

    def datasetMean(self):
        means = self.sceneMeans()
        if means.empty:
            raise MetricError('The report holds no scenes.')
        return {'psnr': float(means['psnr'].mean()),
                'ssim': float(means['ssim'].mean())}

    def toText(self):
        """Return the report as a table: one row per scene and a summary."""

        means = self.sceneMeans()
        rows = [[scene, f'{row.psnr:.2f}', f'{row.ssim:.4f}']
                for scene, row in means.iterrows()]
        if rows:
            overall = self.datasetMean()
            rows.append(['mean', f'{overall["psnr"]:.2f}',
                         f'{overall["ssim"]:.4f}'])
        header = f'task: {self.task.name}'
        if self.model_id:
            header += f'\nmodel: {self.model_id}'
        return header + '\n' + tabulate(rows, headers=['scene', 'PSNR',
                                                       'SSIM']) + '\n'


def _view_metrics(pred, gt, task):
    if pred.shape != gt.shape:
        raise ShapeMismatchError(f'Prediction {pred.shape} and ground truth'
                                 f' {gt.shape} differ.')
    if (pred.U, pred.V) != (task.A_out, task.A_out):
        raise ShapeMismatchError(f'Task {task.name} expects '
                                 f'{task.A_out}x{task.A_out} views, got '
                                 f'{pred.U}x{pred.V}.')
    return [(u, v, psnr(pred.views[u, v], gt.views[u, v]),
             ssim(pred.views[u, v], gt.views[u, v]))
            for u, v in task.novelPositions()]


def evaluate_scene(pred, gt, task, scene='scene', report=None):
    """Score the novel views of one reconstructed scene.

    Parameters
    ----------
    pred, gt : `ddasrlib.lightfield.LightField`
        Luminance light fields of the same shape.
    task : `Task`
    scene : str
        The name recorded in the report.
    report : `MetricReport`, optional
        The report to add to; a new one is created otherwise.

    Returns
    -------
    `MetricReport`

    """

    report = MetricReport(task) if report is None else report
    report.addScene(scene, _view_metrics(pred, gt, task))
    return report


def _scene_metrics(task, item):
    name, pred, gt = item
    return name, _view_metrics(pred, gt, task)


def evaluate_scenes(items, task, model_id='', workers=0):
    """Evaluate several scenes, in parallel when `workers` > 1.

    Parameters
    ----------
    items : iterable of (str, `LightField`, `LightField`)
        Scene name, prediction and ground truth.

    Returns
    -------
    `MetricReport`
        Scenes appear in the order given.

    """

    items = list(items)
    run = partial(_scene_metrics, task)
    if workers > 1:
        results = p_map(run, items, num_cpus=workers)
    else:
        results = [run(item) for item in tqdm(items, desc='Scenes')]
    report = MetricReport(task, model_id)
    for name, views in results:
        report.addScene(name, views)
    logger.info(f'Evaluated {len(items)} scenes for task {task.name}.')
    return report

