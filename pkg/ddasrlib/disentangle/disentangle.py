#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Created on Wed Mar  6 10:27:45 2024

@author: ddasr

The disentangling feature extractors acting on macro-pixel image (MacPI)
feature maps:

* SFE, the spatial extractor: 3x3 kernel, stride 1, dilation A. It only mixes
  samples of the same view.
* AFE, the angular extractor: A x A kernel, stride A. It only mixes samples
  of the same macro-pixel, and reduces (A*H, A*W) to (H, W).
* EFE, the epipolar extractor: a 1 x A^2 kernel along MacPI rows, followed by
  a channel expansion and a one-axis pixel shuffle which restore the MacPI
  shape. The vertical variant runs the same weights on the transposed map.

Each extractor is described by a `ConvSpec`, from which both the torch module
and the exact receptive field are derived.
"""

from dataclasses import dataclass
import math

from einops import rearrange
import torch
from torch import nn

from ddasrlib.exceptions import ExtractorError, LayoutError

__all__ = ['ConvSpec', 'EpiSpec', 'FeatureMap', 'MACPI_FULL',
           'ANGULAR_REDUCED', 'sfe_spec', 'afe_spec', 'efe_spec',
           'receptive_field_mask', 'build_conv', 'init_weights',
           'PixelShuffle1D', 'EpiExtractor', 'check_macpi_layout',
           'LEAKY_SLOPE']

MACPI_FULL = 'macpi-full'
ANGULAR_REDUCED = 'angular-reduced'

# Negative slope of every leaky rectifier in the network.
LEAKY_SLOPE = 0.1


def _pair(value):
    if isinstance(value, int):
        return (value, value)
    return tuple(int(x) for x in value)


@dataclass(frozen=True)
class ConvSpec(object):
    """Hyperparameters of one 2D convolution.

    Attributes
    ----------
    kernel, stride, dilation, padding : tuple of int
        (rows, cols) values.
    in_channels, out_channels : int
    bias : bool, Default : True

    """

    kernel: tuple
    stride: tuple
    dilation: tuple
    padding: tuple
    in_channels: int
    out_channels: int
    bias: bool = True

    def __post_init__(self):
        for name in ('kernel', 'stride', 'dilation', 'padding'):
            object.__setattr__(self, name, _pair(getattr(self, name)))
        if min(self.kernel + self.stride + self.dilation) < 1 or\
           min(self.padding) < 0:
            raise ExtractorError(f'Invalid convolution spec {self}.')
        if self.in_channels < 1 or self.out_channels < 1:
            raise ExtractorError('Channel counts must be positive.')

    def outputSize(self, size, axis):
        """Return floor((in + 2p - d(k - 1) - 1) / s) + 1 along one axis."""

        return (size + 2 * self.padding[axis] -
                self.dilation[axis] * (self.kernel[axis] - 1) - 1) //\
            self.stride[axis] + 1

    def outputShape(self, in_shape):
        return (self.outputSize(in_shape[0], 0),
                self.outputSize(in_shape[1], 1))

    def transposed(self):
        """Return the same convolution with rows and columns swapped."""

        return ConvSpec(self.kernel[::-1], self.stride[::-1],
                        self.dilation[::-1], self.padding[::-1],
                        self.in_channels, self.out_channels, self.bias)


@dataclass(frozen=True)
class EpiSpec(object):
    """The epipolar extractor: its convolution and its restore stage.

    Attributes
    ----------
    conv : `ConvSpec`
        The 1 x A^2 (horizontal) or A^2 x 1 (vertical) convolution.
    restore_factor : int
        The one-axis pixel-shuffle factor that restores the MacPI size.
    orientation : str

    """

    conv: ConvSpec
    restore_factor: int
    orientation: str


@dataclass
class FeatureMap(object):
    """A feature tensor tagged with its layout.

    Attributes
    ----------
    data : `torch.Tensor`
        Shape (C, rows, cols) or (B, C, rows, cols).
    ang_size : int
        The angular size A.
    layout : str
        'macpi-full' for (A*H, A*W) maps, 'angular-reduced' for (H, W).

    """

    data: torch.Tensor
    ang_size: int
    layout: str = MACPI_FULL

    def __post_init__(self):
        if self.layout not in (MACPI_FULL, ANGULAR_REDUCED):
            raise LayoutError(f'Unknown layout "{self.layout}".')
        if self.data.dim() not in (3, 4):
            raise LayoutError('Feature maps are (C, rows, cols) or '
                              '(B, C, rows, cols).')
        if self.layout == MACPI_FULL:
            check_macpi_layout(self.data, self.ang_size)

    @property
    def channels(self):
        return self.data.shape[-3]

    @property
    def spatialShape(self):
        rows, cols = self.data.shape[-2:]
        if self.layout == MACPI_FULL:
            return rows // self.ang_size, cols // self.ang_size
        return rows, cols


def check_macpi_layout(x, A):
    """Raise `LayoutError` unless the last two dimensions of `x` are
    multiples of A.

    """

    rows, cols = x.shape[-2:]
    if rows % A or cols % A:
        raise LayoutError(f'Feature map {tuple(x.shape)} is not a MacPI of '
                          f'angular size {A}.')


def sfe_spec(A, C_in, C_out):
    """Return the spatial extractor: 3x3, stride 1, dilation A, padding A."""

    if A < 1:
        raise ExtractorError(f'Angular size must be positive, got {A}.')
    return ConvSpec(3, 1, A, A, C_in, C_out)


def afe_spec(A, C_in, C_out, kernel=None):
    """Return the angular extractor: kernel A x A, stride A, padding 0.

    A different (ablation) kernel size keeps stride A and is padded so that
    the output is still (H, W).

    """

    if A < 2:
        raise ExtractorError(f'The angular extractor needs A >= 2, got {A}.')
    kernel = A if kernel is None else int(kernel)
    padding = max(0, math.ceil((kernel - A) / 2))
    return ConvSpec(kernel, A, 1, padding, C_in, C_out)


def efe_spec(A, C_in, C_out, orientation='horizontal', stride_mode='view'):
    """Return the epipolar extractor.

    Parameters
    ----------
    A : int
        Angular size, at least 2.
    C_in, C_out : int
    orientation : str, Default : 'horizontal'
        'vertical' returns the transposed convolution.
    stride_mode : str, Default : 'view'
        'view' uses stride A with padding A(A-1)/2 and a restore factor of A;
        'macro' uses the literal stride A^2, no padding and a restore factor
        of A^2 (widths must then be multiples of A^2).

    Returns
    -------
    `EpiSpec`

    """

    if A < 2:
        raise ExtractorError(f'The epipolar extractor needs A >= 2, got {A}.')
    if stride_mode == 'view':
        conv = ConvSpec((1, A * A), (1, A), 1, (0, A * (A - 1) // 2),
                        C_in, C_out)
        factor = A
    elif stride_mode == 'macro':
        conv = ConvSpec((1, A * A), (1, A * A), 1, 0, C_in, C_out)
        factor = A * A
    else:
        raise ExtractorError(f'Unknown stride mode "{stride_mode}".')

    if orientation == 'vertical':
        conv = conv.transposed()
    elif orientation != 'horizontal':
        raise ExtractorError(f'Unknown orientation "{orientation}".')

    return EpiSpec(conv, factor, orientation)


def receptive_field_mask(spec, out_pos, in_shape):
    """Return the set of input positions an output position depends on.

    Computed from kernel, stride, dilation and padding arithmetic; positions
    falling in the zero padding are not part of the set.

    Parameters
    ----------
    spec : `ConvSpec`
    out_pos : tuple of int
        (row, col) of the output position.
    in_shape : tuple of int
        (rows, cols) of the input.

    Returns
    -------
    set of tuple
        The (row, col) input positions.

    """

    out_shape = spec.outputShape(in_shape)
    if not (0 <= out_pos[0] < out_shape[0] and
            0 <= out_pos[1] < out_shape[1]):
        raise ExtractorError(f'Output position {out_pos} outside output '
                             f'shape {out_shape}.')

    axes = []
    for axis in (0, 1):
        start = out_pos[axis] * spec.stride[axis] - spec.padding[axis]
        axes.append([start + i * spec.dilation[axis]
                     for i in range(spec.kernel[axis])
                     if 0 <= start + i * spec.dilation[axis] <
                     in_shape[axis]])

    return {(row, col) for row in axes[0] for col in axes[1]}


def init_weights(conv):
    """Kaiming fan-in initialization for a convolution, zero bias."""

    nn.init.kaiming_normal_(conv.weight, a=LEAKY_SLOPE, mode='fan_in',
                            nonlinearity='leaky_relu')
    if conv.bias is not None:
        nn.init.zeros_(conv.bias)
    return conv


def build_conv(spec):
    """Return an initialized `torch.nn.Conv2d` for a `ConvSpec`."""

    conv = nn.Conv2d(spec.in_channels, spec.out_channels,
                     kernel_size=spec.kernel, stride=spec.stride,
                     dilation=spec.dilation, padding=spec.padding,
                     bias=spec.bias)
    return init_weights(conv)


class PixelShuffle1D(nn.Module):
    """Rearrange (B, r*C, H, W) into (B, C, H, W*r)."""

    def __init__(self, factor):
        super().__init__()
        self.factor = factor

    def forward(self, x):
        return rearrange(x, 'b (r c) h w -> b c h (w r)', r=self.factor)


class EpiExtractor(nn.Module):
    """The epipolar extractor and its restore stage, with weights shared
    between the horizontal and vertical orientations.

    """

    def __init__(self, A, C_in, C_out, stride_mode='view'):
        super().__init__()
        self.A = A
        self.spec = efe_spec(A, C_in, C_out, 'horizontal', stride_mode)
        self.conv = build_conv(self.spec.conv)
        self.expand = init_weights(nn.Conv2d(
            C_out, C_out * self.spec.restore_factor, kernel_size=1))
        self.act = nn.LeakyReLU(LEAKY_SLOPE)
        self.shuffle = PixelShuffle1D(self.spec.restore_factor)

    def _check(self, x):
        check_macpi_layout(x, self.A)
        if x.shape[-1] % self.spec.conv.stride[1]:
            raise LayoutError(f'Width {x.shape[-1]} is not a multiple of the'
                              f' epipolar stride {self.spec.conv.stride[1]}.')

    def preRestore(self, x):
        """Return the horizontal convolution output before restoring."""

        self._check(x)
        return self.conv(x)

    def forward(self, x, orientation='horizontal'):
        if orientation == 'vertical':
            return self.forward(x.transpose(-1, -2)).transpose(-1, -2)
        elif orientation != 'horizontal':
            raise ExtractorError(f'Unknown orientation "{orientation}".')
        buffer = self.act(self.preRestore(x))
        return self.shuffle(self.act(self.expand(buffer)))
