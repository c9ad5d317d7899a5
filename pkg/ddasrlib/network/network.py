#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Created on Mon Mar 11 10:02:51 2024

@author: ddasr

The deep disentangling angular super-resolution network.

The network works on macro-pixel images (MacPIs). An initial spatial
convolution lifts the single-channel input MacPI to C channels; four block
groups (DDBGs) of deep disentangling blocks (DDBs) follow, joined by
layer-by-layer concatenation and channel attention; a long skip connection
adds the initial features back; and an angular up-sampling head turns the
A_in x A_in MacPI into an A_out x A_out one, which is converted back to
sub-aperture images.
"""

from dataclasses import asdict, dataclass, field, fields, replace
from fractions import Fraction
import logging

from einops import rearrange
import numpy as np
import sympy
import torch
from torch import nn

from ddasrlib.disentangle import (LEAKY_SLOPE, EpiExtractor, afe_spec,
                                  build_conv, check_macpi_layout,
                                  init_weights, sfe_spec)
from ddasrlib.exceptions import ConfigurationError, NetworkConfigError
from ddasrlib.lightfield import LightField
from ddasrlib.miscellaneous import (format_key_value_text,
                                    parse_key_value_text, seed_everything)

__all__ = ['NetworkConfig', 'AFEB', 'SFEB', 'ChannelAttention', 'DDB',
           'SerialFusion', 'AngularUpsample', 'DDASR', 'ModelState',
           'ddasr_forward', 'param_count', 'param_count_expression',
           'count_module_parameters', 'CONNECTIONS']

logger = logging.getLogger(__name__)

CONNECTIONS = ('layer', 'dense')


@dataclass(frozen=True)
class NetworkConfig(object):
    """The hyperparameters of a DDASR network.

    Attributes
    ----------
    A_in, A_out : int
        Input and output angular sizes.
    channels : int
        The feature width C.
    stage_counts : tuple of int
        Number of DDBs in each block group.
    attention_reduction : int
        Hidden width divisor of the channel-attention MLP.
    afeb_layers, sfeb_layers : int
        Serial stages inside the AFEB and SFEB.
    use_attention : bool
        If *False* every concatenation is fused by a 1x1 convolution only.
    afeb_kernel : int
        Kernel size of the convolution between AFE and pixel shuffle in the
        AFEB (3, or 1 for the ablation).
    connection : str
        'layer' concatenates the unit outputs; 'dense' feeds every unit the
        concatenation of the block input and all previous outputs.
    top_skip : bool
        Whether to add the initial features to the fused group output.
    efe_stride_mode : str
        'view' or 'macro', see `ddasrlib.disentangle.efe_spec`.
    afe_kernel : int or None
        Kernel of every angular extractor; *None* means A_in.

    """

    A_in: int = 2
    A_out: int = 7
    channels: int = 128
    stage_counts: tuple = (2, 2, 6, 2)
    attention_reduction: int = 4
    afeb_layers: int = 3
    sfeb_layers: int = 3
    use_attention: bool = True
    afeb_kernel: int = 3
    connection: str = 'layer'
    top_skip: bool = True
    efe_stride_mode: str = 'view'
    afe_kernel: int = None

    def __post_init__(self):
        object.__setattr__(self, 'stage_counts',
                           tuple(int(n) for n in self.stage_counts))
        if self.A_in < 2 or self.A_out < 1:
            raise NetworkConfigError(f'Invalid angular sizes {self.A_in} -> '
                                     f'{self.A_out}.')
        if not self.stage_counts or min(self.stage_counts) < 1:
            raise NetworkConfigError('stage_counts must be a nonempty list '
                                     'of positive integers, got '
                                     f'{list(self.stage_counts)}.')
        if self.channels < 1 or self.attention_reduction < 1:
            raise NetworkConfigError('channels and attention_reduction must '
                                     'be positive.')
        if self.channels % self.attention_reduction:
            raise NetworkConfigError(f'channels={self.channels} is not '
                                     'divisible by attention_reduction='
                                     f'{self.attention_reduction}.')
        if self.afeb_layers < 1 or self.sfeb_layers < 1:
            raise NetworkConfigError('AFEB and SFEB need at least one layer.')
        if self.afeb_kernel not in (1, 3):
            raise NetworkConfigError('afeb_kernel must be 3 or 1, got '
                                     f'{self.afeb_kernel}.')
        if self.connection not in CONNECTIONS:
            raise NetworkConfigError(f'Unknown connection "{self.connection}"'
                                     f'; use one of {CONNECTIONS}.')
        if self.efe_stride_mode not in ('view', 'macro'):
            raise NetworkConfigError('Unknown EFE stride mode '
                                     f'"{self.efe_stride_mode}".')

    @property
    def C(self):
        return self.channels

    @property
    def alpha(self):
        """The angular up-sampling factor A_out / A_in."""

        return Fraction(self.A_out, self.A_in)

    @property
    def totalBlocks(self):
        return sum(self.stage_counts)

    @classmethod
    def fromAlpha(cls, A_in, alpha, **kwargs):
        """Build a config from an input size and an up-sampling factor.

        alpha * A_in must be an integer.

        """

        A_out = Fraction(alpha) * A_in
        if A_out.denominator != 1:
            raise NetworkConfigError(f'alpha * A_in = {A_out} is not an '
                                     'integer.')
        return cls(A_in=A_in, A_out=int(A_out), **kwargs)

    @classmethod
    def ddasr(cls, **kwargs):
        """The full 2x2 -> 7x7 network."""

        values = dict(A_in=2, A_out=7, stage_counts=(2, 2, 6, 2))
        values.update(kwargs)
        return cls(**values)

    @classmethod
    def baseWidth(cls, **kwargs):
        """The full network at the C = 64 feature width."""

        return cls.ddasr(**{'channels': 64, **kwargs})

    @classmethod
    def ddasr_s(cls, **kwargs):
        """The small 2x2 -> 3x3 network used as local view network."""

        values = dict(A_in=2, A_out=3, stage_counts=(1, 1, 3, 1))
        values.update(kwargs)
        return cls(**values)

    @classmethod
    def gvn(cls, A_in=2, A_out=7, **kwargs):
        """A global view network with two DDBs in total."""

        values = dict(A_in=A_in, A_out=A_out, stage_counts=(1, 1))
        values.update(kwargs)
        return cls(**values)

    def toText(self):
        """Return the config as canonical key=value text."""

        values = asdict(self)
        values['stage_counts'] = ','.join(str(n) for n in self.stage_counts)
        values['afe_kernel'] = 'none' if self.afe_kernel is None\
            else self.afe_kernel
        return format_key_value_text(values)

    @classmethod
    def fromText(cls, text, source='<config>'):
        """Parse text written by `toText`. Unknown keys raise an error."""

        names = {f.name: f for f in fields(cls)}
        try:
            raw = parse_key_value_text(text, allowed_keys=names,
                                       source=source)
        except ConfigurationError as err:
            raise NetworkConfigError(err.message)
        canonical = {name.lower(): name for name in names}
        values = {}
        try:
            for key, value in raw.items():
                name = canonical[key]
                default = names[name].default
                if name == 'stage_counts':
                    values[name] = tuple(int(n) for n in value.split(','))
                elif name == 'afe_kernel':
                    values[name] = None if value.lower() == 'none'\
                        else int(value)
                elif isinstance(default, bool):
                    values[name] = value.strip().lower() in ('true', '1',
                                                             'yes')
                elif isinstance(default, int):
                    values[name] = int(value)
                else:
                    values[name] = value.strip()
        except ValueError as err:
            raise NetworkConfigError(f'Bad value in {source}: {err}')
        return cls(**values)

    def withChanges(self, **kwargs):
        return replace(self, **kwargs)


def _act():
    return nn.LeakyReLU(LEAKY_SLOPE)


def _conv1x1(C_in, C_out):
    return init_weights(nn.Conv2d(C_in, C_out, kernel_size=1))


class AFEB(nn.Module):
    """The angular feature extraction block.

    Each serial stage runs AFE -> 3x3 convolution to C * A^2 channels ->
    pixel shuffle of factor A, going back to the MacPI size. The stage
    outputs are concatenated and fused by a 1x1 convolution.

    """

    def __init__(self, A, C, layers=3, kernel=3, afe_kernel=None):
        super().__init__()
        self.A = A
        self.afe = nn.ModuleList([build_conv(afe_spec(A, C, C, afe_kernel))
                                  for _ in range(layers)])
        self.expand = nn.ModuleList([
            init_weights(nn.Conv2d(C, C * A * A, kernel_size=kernel,
                                   padding=kernel // 2))
            for _ in range(layers)])
        self.act = _act()
        self.shuffle = nn.PixelShuffle(A)
        self.fuse = _conv1x1(layers * C, C)

    def stages(self, x):
        """Return the list of stage outputs."""

        check_macpi_layout(x, self.A)
        outputs = []
        for afe, expand in zip(self.afe, self.expand):
            x = self.shuffle(self.act(expand(self.act(afe(x)))))
            outputs.append(x)
        return outputs

    def forward(self, x):
        return self.fuse(torch.cat(self.stages(x), dim=1))


class SFEB(nn.Module):
    """The spatial feature extraction block: serial SFE convolutions whose
    outputs are concatenated and fused by a 1x1 convolution.

    """

    def __init__(self, A, C, layers=3):
        super().__init__()
        self.A = A
        self.sfe = nn.ModuleList([build_conv(sfe_spec(A, C, C))
                                  for _ in range(layers)])
        self.act = _act()
        self.fuse = _conv1x1(layers * C, C)

    def forward(self, x):
        check_macpi_layout(x, self.A)
        outputs = []
        for sfe in self.sfe:
            x = self.act(sfe(x))
            outputs.append(x)
        return self.fuse(torch.cat(outputs, dim=1))


class ChannelAttention(nn.Module):
    """Channel attention over a concatenation followed by a 1x1 fusion.

    Global average pooling, two linear layers with a rectifier between them
    and a sigmoid give one gate in (0, 1) per channel; the gated features
    are fused from C' to C channels.

    """

    def __init__(self, C_in, C_out, reduction=4):
        super().__init__()
        if C_in % reduction:
            raise NetworkConfigError(f'{C_in} channels are not divisible by '
                                     f'the reduction {reduction}.')
        hidden = C_in // reduction
        self.mlp = nn.Sequential(nn.Linear(C_in, hidden), nn.ReLU(),
                                 nn.Linear(hidden, C_in))
        self.fuse = _conv1x1(C_in, C_out)

    def gates(self, x):
        """Return the (B, C') per-channel gates."""

        return torch.sigmoid(self.mlp(x.mean(dim=(-2, -1))))

    def forward(self, x):
        return self.fuse(x * self.gates(x)[..., None, None])


class DDB(nn.Module):
    """The deep disentangling block.

    AFEB and the horizontal and vertical EFE paths run in parallel on the
    input; their concatenation is fused to C channels, passed through an
    SFEB, and added back to the fused features.

    """

    def __init__(self, config):
        super().__init__()
        A, C = config.A_in, config.channels
        self.afeb = AFEB(A, C, config.afeb_layers, config.afeb_kernel,
                         config.afe_kernel)
        self.efe = EpiExtractor(A, C, C, config.efe_stride_mode)
        self.fuse = _conv1x1(3 * C, C)
        self.sfeb = SFEB(A, C, config.sfeb_layers)

    def fusion(self, x):
        """Return the fused inter-feature map before the SFEB."""

        return self.fuse(torch.cat([self.afeb(x),
                                    self.efe(x, 'horizontal'),
                                    self.efe(x, 'vertical')], dim=1))

    def forward(self, x):
        fused = self.fusion(x)
        return self.sfeb(fused) + fused


class SerialFusion(nn.Module):
    """Serial units whose outputs are concatenated and fused.

    With layer-by-layer connection the fusion sees the n unit outputs. With
    dense connection unit i > 0 sees the block input and all previous
    outputs (projected back to C channels by a 1x1 convolution) and the
    fusion sees the block input plus all n outputs.

    Used both for a block group (units are DDBs) and for the top level
    (units are block groups).

    """

    def __init__(self, units, config):
        super().__init__()
        C = config.channels
        n = len(units)
        self.dense = config.connection == 'dense'
        self.units = nn.ModuleList(units)
        if self.dense:
            self.project = nn.ModuleList([_conv1x1((i + 1) * C, C)
                                          for i in range(1, n)])
            width = (n + 1) * C
        else:
            self.project = nn.ModuleList()
            width = n * C
        if config.use_attention:
            self.fuse = ChannelAttention(width, C,
                                         config.attention_reduction)
        else:
            self.fuse = _conv1x1(width, C)

    def forward(self, x):
        if self.dense:
            features = [x]
            for i, unit in enumerate(self.units):
                unit_in = x if i == 0 else self.project[i - 1](
                    torch.cat(features, dim=1))
                features.append(unit(unit_in))
        else:
            features = []
            for unit in self.units:
                x = unit(x)
                features.append(x)
        return self.fuse(torch.cat(features, dim=1))


class AngularUpsample(nn.Module):
    """Turn an A_in MacPI of C channels into a single-channel A_out MacPI.

    An angular extractor reduces the map to (H, W); a 1x1 convolution
    expands it to A_out^2 channels and a pixel shuffle of factor A_out
    builds the output MacPI.

    """

    def __init__(self, A_in, A_out, C, afe_kernel=None):
        super().__init__()
        self.A_in = A_in
        self.afe = build_conv(afe_spec(A_in, C, C, afe_kernel))
        self.act = _act()
        self.expand = _conv1x1(C, A_out * A_out)
        self.shuffle = nn.PixelShuffle(A_out)

    def forward(self, x):
        check_macpi_layout(x, self.A_in)
        return self.shuffle(self.expand(self.act(self.afe(x))))


class DDASR(nn.Module):
    """The full network.

    `forward` maps a batch of sparse light fields (B, A_in, A_in, H, W) to
    (B, A_out, A_out, H, W). Outputs are not clamped.

    """

    def __init__(self, config):
        super().__init__()
        self.config = config
        A, C = config.A_in, config.channels
        self.initial = build_conv(sfe_spec(A, 1, C))
        groups = [SerialFusion([DDB(config) for _ in range(n)], config)
                  for n in config.stage_counts]
        self.body = SerialFusion(groups, config)
        self.upsample = AngularUpsample(A, config.A_out, C,
                                        config.afe_kernel)

    def forwardMacPI(self, x):
        """Map (B, 1, A_in*H, A_in*W) MacPIs to (B, 1, A_out*H, A_out*W)."""

        features = self.initial(x)
        body = self.body(features)
        if self.config.top_skip:
            body = body + features
        return self.upsample(body)

    def forward(self, views):
        A = self.config.A_in
        if views.dim() != 5 or tuple(views.shape[1:3]) != (A, A):
            raise NetworkConfigError(f'Expected (B, {A}, {A}, H, W) input, '
                                     f'got {tuple(views.shape)}.')
        macpi = rearrange(views, 'b u v h w -> b 1 (h u) (w v)')
        out = self.forwardMacPI(macpi)
        return rearrange(out, 'b 1 (h u) (w v) -> b u v h w',
                         u=self.config.A_out, v=self.config.A_out)


@dataclass
class ModelState(object):
    """A network with its config, training step and history.

    Attributes
    ----------
    config : `NetworkConfig`
    model : `DDASR`
    step : int
    history : dict

    """

    config: NetworkConfig
    model: DDASR
    step: int = 0
    history: dict = field(default_factory=dict)

    @classmethod
    def create(cls, config, seed=None, device=None):
        """Build a freshly initialized model."""

        if seed is not None:
            seed_everything(seed)
        model = DDASR(config)
        if device is not None:
            model = model.to(device)
        logger.info(f'Created DDASR {config.A_in}->{config.A_out} with '
                    f'{count_module_parameters(model)} parameters.')
        return cls(config, model)

    @property
    def device(self):
        return next(self.model.parameters()).device

    def weights(self):
        """Return the weights keyed by hierarchical path."""

        return self.model.state_dict()


def ddasr_forward(lf_sparse, state):
    """Run the network on a sparse light field.

    Parameters
    ----------
    lf_sparse : `ddasrlib.lightfield.LightField`
        A light field with angular size A_in.
    state : `ModelState`

    Returns
    -------
    `ddasrlib.lightfield.LightField`
        The dense light field, clamped to [0, 1].

    """

    A_in = state.config.A_in
    if not lf_sparse.isSquare or lf_sparse.A != A_in:
        raise NetworkConfigError(f'The network expects {A_in}x{A_in} input '
                                 f'views, got {lf_sparse.U}x{lf_sparse.V}.')
    model = state.model
    was_training = model.training
    model.eval()
    try:
        with torch.no_grad():
            views = torch.as_tensor(np.array(lf_sparse.views),
                                    dtype=torch.float32, device=state.device)
            out = model(views[None]).clamp(0, 1)[0]
    finally:
        model.train(was_training)
    return LightField(out.cpu().numpy())


def _conv_count(C_in, C_out, k_rows, k_cols=None):
    k_cols = k_rows if k_cols is None else k_cols
    return C_in * C_out * k_rows * k_cols + C_out


def _fusion_count(config, n, C):
    """Count for the fusion (and projections) of `n` serial units."""

    width = (n + 1) * C if config.connection == 'dense' else n * C
    total = 0
    if config.connection == 'dense':
        total += sum(_conv_count((i + 1) * C, C, 1) for i in range(1, n))
    if config.use_attention:
        hidden = width / config.attention_reduction
        total += width * hidden + hidden + hidden * width + width
    return total + _conv_count(width, C, 1)


def param_count_expression(config):
    """Return the parameter count as a sympy expression in A (input angular
    size), A_out and C, with the remaining hyperparameters taken from
    `config`.

    """

    A, A_out, C = sympy.symbols('A A_out C', positive=True, integer=True)
    afe_k = A if config.afe_kernel is None else config.afe_kernel
    restore = A if config.efe_stride_mode == 'view' else A ** 2
    k = config.afeb_kernel

    afeb = config.afeb_layers * (_conv_count(C, C, afe_k) +
                                 _conv_count(C, C * A ** 2, k)) +\
        _conv_count(config.afeb_layers * C, C, 1)
    efe = _conv_count(C, C, 1, A ** 2) + _conv_count(C, C * restore, 1)
    sfeb = config.sfeb_layers * _conv_count(C, C, 3) +\
        _conv_count(config.sfeb_layers * C, C, 1)
    ddb = afeb + efe + _conv_count(3 * C, C, 1) + sfeb

    groups = sum(n * ddb + _fusion_count(config, n, C)
                 for n in config.stage_counts)
    body = groups + _fusion_count(config, len(config.stage_counts), C)
    initial = _conv_count(1, C, 3)
    head = _conv_count(C, C, afe_k) + _conv_count(C, A_out ** 2, 1)

    return sympy.expand(initial + body + head)


def param_count(config):
    """Return the exact number of learnable scalars of a network."""

    A, A_out, C = sympy.symbols('A A_out C', positive=True, integer=True)
    value = param_count_expression(config).subs(
        {A: config.A_in, A_out: config.A_out, C: config.channels})
    return int(value)


def count_module_parameters(model):
    """Return the number of learnable scalars of a torch module."""

    return sum(p.numel() for p in model.parameters() if p.requires_grad)
