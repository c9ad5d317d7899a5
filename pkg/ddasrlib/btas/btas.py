#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Created on Mon Mar 18 13:22:07 2024

@author: ddasr

Block traversal angular super-resolution.

A dense T x T view grid is assembled from overlapping m x m blocks, each
produced by a local view network (LVN) from the n x n corner views of the
block. Blocks are visited from the top left with an output stride of m - 1,
so neighbouring blocks share one row or column of views; the shared views
are averaged over every block that covers them.
"""

from dataclasses import dataclass
from functools import partial
import logging

import numpy as np
from p_tqdm import p_map
import torch
from tqdm import tqdm

from ddasrlib.exceptions import BlockOutputError, ScheduleError
from ddasrlib.lightfield import LightField

__all__ = ['BlockSchedule', 'make_schedule', 'block_origins',
           'coverage_map', 'run_btas', 'ShiftOracleLVN', 'NetworkLVN',
           'peak_activation_estimate', 'btas_peak_estimate',
           'measure_peak_memory', 'format_coverage']

logger = logging.getLogger(__name__)


def block_origins(T, m, stride=None):
    """Return the block origins along one axis of a T-view grid."""

    stride = m - 1 if stride is None else stride
    return list(range(0, T - m + 1, stride))


@dataclass(frozen=True)
class BlockSchedule(object):
    """The ordered blocks of a traversal.

    Attributes
    ----------
    M : int
        Input grid size.
    n, m : int
        LVN input and output angular sizes.
    T : int
        Output grid size.
    blocks : tuple
        ((i, j), (p, q)) pairs: the input-view origin and output-view
        origin of each block, in traversal order.

    """

    M: int
    n: int
    m: int
    T: int
    blocks: tuple

    @property
    def stride(self):
        return self.m - 1

    def __len__(self):
        return len(self.blocks)


def make_schedule(M, n=2, m=3, T=None):
    """Build the traversal for an M x M -> T x T task with an n -> m LVN.

    Only n = 2, m = 3 and T = 2M - 1 are supported: the input views sit on
    the even output positions and each block's corners are consecutive
    input views.

    Returns
    -------
    `BlockSchedule`

    """

    T = 2 * M - 1 if T is None else T
    if n != 2 or m != 3:
        raise ScheduleError(f'Only 2x2 -> 3x3 local view networks are '
                            f'supported, got {n}x{n} -> {m}x{m}.')
    if M < 2 or T != 2 * M - 1:
        raise ScheduleError(f'Inconsistent grids: {M}x{M} input needs a '
                            f'{2 * M - 1}x{2 * M - 1} output, got {T}x{T}.')

    origins = block_origins(T, m)
    blocks = tuple(((p // 2, q // 2), (p, q))
                   for p in origins for q in origins)
    return BlockSchedule(M, n, m, T, blocks)


def coverage_map(schedule):
    """Return the T x T grid counting the blocks that cover each view."""

    grid = np.zeros((schedule.T, schedule.T), dtype=int)
    for _, (p, q) in schedule.blocks:
        grid[p:p + schedule.m, q:q + schedule.m] += 1
    return grid


def format_coverage(grid):
    """Return a coverage grid as text, one row of views per line."""

    return ''.join(' '.join(str(value) for value in row) + '\n'
                   for row in np.asarray(grid))


def _run_block(lvn, views, schedule, block):
    (i, j), _ = block
    n, m = schedule.n, schedule.m
    out = np.asarray(lvn(LightField(views[i:i + n, j:j + n])))
    expected = (m, m) + views.shape[2:]
    if out.shape != expected:
        raise BlockOutputError(f'LVN returned {out.shape} for block {block},'
                               f' expected {expected}.')
    return out


def run_btas(lf_in, lvn, schedule, workers=0):
    """Assemble a dense light field block by block.

    Parameters
    ----------
    lf_in : `ddasrlib.lightfield.LightField`
        The M x M input views.
    lvn : callable
        Maps an n x n `LightField` block to an (m, m, H, W) array. The
        output is not expected to be clamped.
    schedule : `BlockSchedule`
    workers : int, Default : 0
        Blocks run serially for 0 or 1, otherwise in that many processes.
        The blend is reduced in schedule order either way, so both give
        identical results.

    Returns
    -------
    `ddasrlib.lightfield.LightField`
        The T x T light field, clamped to [0, 1] after blending.

    """

    if not lf_in.isSquare or lf_in.A != schedule.M:
        raise ScheduleError(f'Input has {lf_in.U}x{lf_in.V} views, the '
                            f'schedule expects {schedule.M}x{schedule.M}.')

    views = np.asarray(lf_in.views)
    run = partial(_run_block, lvn, views, schedule)
    if workers > 1:
        outputs = p_map(run, list(schedule.blocks), num_cpus=workers)
    else:
        outputs = [run(block) for block in
                   tqdm(schedule.blocks, desc='Blocks', leave=False)]

    m = schedule.m
    total = np.zeros((schedule.T, schedule.T) + views.shape[2:])
    for (_, (p, q)), out in zip(schedule.blocks, outputs):
        total[p:p + m, q:q + m] += out

    coverage = coverage_map(schedule)
    if coverage.min() < 1:
        raise ScheduleError('Schedule leaves output views uncovered.')
    blended = total / coverage[:, :, None, None]
    logger.info(f'Blended {len(schedule)} blocks into a {schedule.T}x'
                f'{schedule.T} grid.')
    return LightField(np.clip(blended, 0, 1))


class ShiftOracleLVN(object):
    """An exact local view network for constant integer disparity on
    periodic scenes.

    Each output view is the nearest corner view rolled by the disparity
    times the angular offset (ties go to the lower corner).

    """

    def __init__(self, disparity, m=3):
        if float(disparity) != int(disparity):
            raise ScheduleError('The shift oracle needs an integer '
                                f'disparity, got {disparity}.')
        self.disparity = int(disparity)
        self.m = m

    def __call__(self, block):
        n = block.U
        corners = np.round(np.linspace(0, self.m - 1, n)).astype(int)
        out = np.empty((self.m, self.m, block.H, block.W))
        for a in range(self.m):
            ci = int(np.argmin(np.abs(corners - a)))
            for b in range(self.m):
                cj = int(np.argmin(np.abs(corners - b)))
                shift = (-self.disparity * (a - corners[ci]),
                         -self.disparity * (b - corners[cj]))
                out[a, b] = np.roll(block.views[ci, cj], shift, axis=(0, 1))
        return out


class NetworkLVN(object):
    """Wrap a trained small network as a local view network."""

    def __init__(self, state):
        self.state = state

    def __call__(self, block):
        model = self.state.model
        model.eval()
        with torch.no_grad():
            views = torch.as_tensor(np.array(block.views),
                                    dtype=torch.float32,
                                    device=self.state.device)
            return model(views[None])[0].cpu().numpy()


def peak_activation_estimate(config, H, W, A=None, batch=1, dtype_bytes=4):
    """Estimate the peak live activation memory of one forward pass.

    The widest point of the network is inside the largest block group: the
    group's stashed unit outputs, the top level's stashed group outputs and
    initial features, and the tensors live inside one DDB (input, three
    AFEB stages, two EPI paths, their concatenation, the fused map and three
    SFEB stages), all at the MacPI size, plus the output MacPI.

    Parameters
    ----------
    config : `ddasrlib.network.NetworkConfig`
    H, W : int
        Spatial size of the views.
    A : int, optional
        Input angular size; `config.A_in` by default.
    batch : int, Default : 1
    dtype_bytes : int, Default : 4

    Returns
    -------
    int
        The estimate in bytes.

    """

    A = config.A_in if A is None else A
    C = config.channels
    ddb_live = (1 + config.afeb_layers + 2 + 3 + 1 + config.sfeb_layers) * C
    stash = (max(config.stage_counts) + len(config.stage_counts) + 1) * C
    features = A * A * H * W * (ddb_live + stash)
    head = config.A_out * config.A_out * H * W
    return int(batch * dtype_bytes * (features + head))


def btas_peak_estimate(config, schedule, H, W, batch=1, dtype_bytes=4):
    """Estimate the peak activation memory of a whole traversal.

    Blocks run one at a time, so the peak is that of one block forward pass
    at the schedule's input size; the input grid size only changes how many
    blocks there are.

    Parameters
    ----------
    config : `ddasrlib.network.NetworkConfig`
        The LVN configuration; its angular sizes must match the schedule.
    schedule : `BlockSchedule`
    H, W : int
        Spatial size of the views.

    Returns
    -------
    int
        The estimate in bytes.

    """

    if (config.A_in, config.A_out) != (schedule.n, schedule.m):
        raise ScheduleError(f'A {config.A_in}x{config.A_in} -> '
                            f'{config.A_out}x{config.A_out} network cannot '
                            f'run a {schedule.n}x{schedule.n} -> '
                            f'{schedule.m}x{schedule.m} schedule.')
    return peak_activation_estimate(config, H, W, A=schedule.n, batch=batch,
                                    dtype_bytes=dtype_bytes)


def measure_peak_memory(fn, device=None):
    """Run `fn()` and return (result, peak bytes allocated on CUDA).

    The peak is *None* when CUDA is not available.

    """

    if not torch.cuda.is_available():
        return fn(), None
    torch.cuda.reset_peak_memory_stats(device)
    result = fn()
    torch.cuda.synchronize(device)
    return result, torch.cuda.max_memory_allocated(device)
