#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Created on Wed Mar 20 09:12:48 2024

@author: ddasr

Training data and the training loop.

Two tasks are supported:

* 'gvn', the global view network task: the target is the central 7x7 views
  of a scene and the input its four corner views.
* 'lvn', the local view network task: the targets are the overlapping 3x3
  blocks of the central 9x9 views, visited in the block traversal order, and
  each input is the four corners of its block.

Every scene is cut into square spatial patches. Augmentation flips and
rotates the spatial and angular axes together so that the parallax law of
the light field is preserved.
"""

from dataclasses import asdict, dataclass, fields, replace
import logging
from pathlib import Path

import numpy as np
import pandas as pd
import torch
from torch import nn
from torch.utils.data import DataLoader, Dataset
from tqdm import tqdm, trange

from ddasrlib.btas import block_origins
from ddasrlib.exceptions import (ConfigurationError, DatasetError,
                                 NonFiniteLossError)
from ddasrlib.lightfield import (LightField, center_crop_angular,
                                 read_scene, sample_indices,
                                 sparse_sample_corners)
from ddasrlib.miscellaneous import (parse_key_value_text,
                                    read_key_value_file, seed_everything)
from ddasrlib.network import save_checkpoint

__all__ = ['TASKS', 'TrainConfig', 'read_train_config', 'SampleRecord',
           'task_geometry', 'build_patches', 'count_patches',
           'apply_transform', 'augment', 'SampleDataset', 'learning_rate',
           'TrainLog', 'train', 'nearest_view_baseline', 'load_scenes']

logger = logging.getLogger(__name__)

TASKS = ('gvn', 'lvn')

# (angular crop of the scene, angular size of one target, sparse input size)
_GEOMETRY = {'gvn': (7, 7, 2), 'lvn': (9, 3, 2)}


@dataclass(frozen=True)
class TrainConfig(object):
    """Hyperparameters of a training run.

    The loss is always the mean absolute error and the optimizer Adam.

    """

    task: str = 'gvn'
    epochs: int = 75
    batch_size: int = 8
    lr: float = 2e-4
    lr_step: int = 15
    lr_gamma: float = 0.5
    beta1: float = 0.9
    beta2: float = 0.999
    patch: int = 64
    patch_stride: int = 64
    flip: bool = True
    rotate: bool = True
    seed: int = 0
    workers: int = 0
    max_steps: int = 0

    def __post_init__(self):
        if self.task not in TASKS:
            raise ConfigurationError(f'Unknown task "{self.task}"; use one '
                                     f'of {TASKS}.')
        for name in ('epochs', 'batch_size', 'lr', 'lr_step', 'lr_gamma',
                     'patch', 'patch_stride'):
            if getattr(self, name) <= 0:
                raise ConfigurationError(f'{name} must be positive, got '
                                         f'{getattr(self, name)}.')
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ConfigurationError('Adam betas must lie in (0, 1).')
        if self.workers < 0 or self.max_steps < 0:
            raise ConfigurationError('workers and max_steps must not be '
                                     'negative.')

    @classmethod
    def forTask(cls, task, **kwargs):
        """Return the default config of a task (batch 12 for 'lvn')."""

        values = {'task': task, 'batch_size': 12 if task == 'lvn' else 8}
        values.update(kwargs)
        return cls(**values)

    def withChanges(self, **kwargs):
        return replace(self, **kwargs)

    def toDict(self):
        return asdict(self)


def _coerce(name, value, default):
    value = value.strip()
    if isinstance(default, bool):
        if value.lower() not in ('true', 'false', '1', '0', 'yes', 'no'):
            raise ValueError(f'{name}: "{value}" is not a boolean')
        return value.lower() in ('true', '1', 'yes')
    if isinstance(default, int):
        return int(value)
    if isinstance(default, float):
        return float(value)
    return value


def read_train_config(file_path=None, text=None, **overrides):
    """Read a `TrainConfig` from a key=value file or text.

    Missing keys take the defaults of the task named in the file;
    `overrides` are applied last.

    """

    if file_path is not None:
        raw = read_key_value_file(file_path,
                                  allowed_keys=[f.name for f in
                                                fields(TrainConfig)])
    else:
        raw = parse_key_value_text(text or '',
                                   allowed_keys=[f.name for f in
                                                 fields(TrainConfig)])
    defaults = {f.name: f.default for f in fields(TrainConfig)}
    try:
        values = {key: _coerce(key, value, defaults[key])
                  for key, value in raw.items()}
    except ValueError as err:
        raise ConfigurationError(f'Bad training config value: {err}')
    values.update(overrides)
    return TrainConfig.forTask(values.pop('task', 'gvn'), **values)


@dataclass(frozen=True, eq=False)
class SampleRecord(object):
    """One training sample.

    Attributes
    ----------
    input : `ddasrlib.lightfield.LightField`
        The sparse views.
    target : `ddasrlib.lightfield.LightField`
        The dense views; `input` is its corner views.
    scene : str
    origin : tuple of int
        Spatial (row, col) origin of the patch in the scene.
    block : tuple of int or None
        Angular origin of the target block in the central grid ('lvn').

    """

    input: LightField
    target: LightField
    scene: str
    origin: tuple
    block: tuple = None

    @property
    def provenance(self):
        text = f'{self.scene}@{self.origin}'
        return text if self.block is None else f'{text}/block{self.block}'


def task_geometry(task):
    """Return (scene crop, target size, input size) for a task."""

    try:
        return _GEOMETRY[task]
    except KeyError:
        raise ConfigurationError(f'Unknown task "{task}"; use one of '
                                 f'{TASKS}.')


def _spatial_origins(size, patch, stride):
    return range(0, size - patch + 1, stride)


def _check_scene(name, shape, task, patch):
    crop = task_geometry(task)[0]
    U, V, H, W = shape
    if min(U, V) < crop:
        raise DatasetError(f'Scene "{name}" has {U}x{V} views; the {task} '
                           f'task needs at least {crop}x{crop}.')
    if min(H, W) < patch:
        raise DatasetError(f'Scene "{name}" is {H}x{W}, smaller than the '
                           f'{patch}x{patch} patch.')


def count_patches(shapes, task, patch=64, stride=64):
    """Count the samples `build_patches` would produce.

    Parameters
    ----------
    shapes : iterable of tuple
        (U, V, H, W) of each scene.
    task : str
    patch, stride : int

    Returns
    -------
    int

    """

    crop, size, _ = task_geometry(task)
    blocks = len(block_origins(crop, size)) ** 2 if task == 'lvn' else 1
    total = 0
    for shape in shapes:
        _check_scene('<shape>', shape, task, patch)
        total += len(_spatial_origins(shape[2], patch, stride)) *\
            len(_spatial_origins(shape[3], patch, stride)) * blocks
    return total


def build_patches(scenes, task, patch=64, stride=64):
    """Enumerate the training samples of a set of scenes.

    Parameters
    ----------
    scenes : iterable of (str, `LightField`)
        Named scenes.
    task : str
        'gvn' or 'lvn'.
    patch, stride : int
        Spatial patch size and step.

    Yields
    ------
    `SampleRecord`
        In a fixed order: scene, patch row, patch column, then block.

    """

    crop, size, n = task_geometry(task)
    for name, lf in scenes:
        _check_scene(name, lf.shape, task, patch)
        grid = center_crop_angular(lf, crop).views
        if task == 'lvn':
            blocks = [(p, q) for p in block_origins(crop, size)
                      for q in block_origins(crop, size)]
        else:
            blocks = [None]
        for h0 in _spatial_origins(lf.H, patch, stride):
            for w0 in _spatial_origins(lf.W, patch, stride):
                window = grid[:, :, h0:h0 + patch, w0:w0 + patch]
                for block in blocks:
                    if block is None:
                        target = LightField(window)
                    else:
                        p, q = block
                        target = LightField(window[p:p + size, q:q + size])
                    yield SampleRecord(sparse_sample_corners(target, n),
                                       target, name, (h0, w0), block)


def apply_transform(views, hflip=False, vflip=False, rotations=0):
    """Flip and rotate a (U, V, H, W) array jointly in both planes.

    A horizontal flip reverses v and w, a vertical flip reverses u and h,
    and each quarter turn rotates (h, w) and (u, v) together.

    """

    if hflip:
        views = views[:, ::-1, :, ::-1]
    if vflip:
        views = views[::-1, :, ::-1, :]
    if rotations % 4:
        views = np.rot90(views, rotations, axes=(2, 3))
        views = np.rot90(views, rotations, axes=(0, 1))
    return np.ascontiguousarray(views)


def augment(record, rng, flip=True, rotate=True):
    """Return a randomly flipped and rotated copy of a sample.

    Input and target get the same transform.

    Parameters
    ----------
    record : `SampleRecord`
    rng : `numpy.random.Generator`
    flip, rotate : bool
        Which transforms may be drawn.

    """

    hflip = bool(rng.random() < 0.5) if flip else False
    vflip = bool(rng.random() < 0.5) if flip else False
    rotations = int(rng.integers(4)) if rotate else 0
    if not (hflip or vflip or rotations):
        return record

    def transform(lf):
        return LightField(apply_transform(lf.views, hflip, vflip, rotations))

    return SampleRecord(transform(record.input), transform(record.target),
                        record.scene, record.origin, record.block)


class SampleDataset(Dataset):
    """A torch dataset over a list of `SampleRecord`s.

    The augmentation of item i in epoch e is drawn from a generator seeded
    with (seed, e, i), so results do not depend on the number of loader
    workers.

    """

    def __init__(self, records, seed=0, flip=True, rotate=True):
        self.records = list(records)
        if not self.records:
            raise DatasetError('No training samples.')
        self.seed = seed
        self.flip = flip
        self.rotate = rotate
        self.epoch = 0

    def setEpoch(self, epoch):
        self.epoch = epoch

    def __len__(self):
        return len(self.records)

    def __getitem__(self, index):
        record = self.records[index]
        if self.flip or self.rotate:
            rng = np.random.default_rng([self.seed, self.epoch, index])
            record = augment(record, rng, self.flip, self.rotate)
        return (torch.from_numpy(np.array(record.input.views, np.float32)),
                torch.from_numpy(np.array(record.target.views, np.float32)),
                index)


def learning_rate(epoch, config):
    """Return lr0 * gamma ** floor(epoch / step) for a 0-based epoch."""

    return config.lr * config.lr_gamma ** (epoch // config.lr_step)


class TrainLog(object):
    """Per-step training records with step, epoch, lr and loss."""

    columns = ['step', 'epoch', 'lr', 'loss']

    def __init__(self, records=None):
        self.records = list(records or [])

    def add(self, step, epoch, lr, loss):
        self.records.append({'step': int(step), 'epoch': int(epoch),
                             'lr': float(lr), 'loss': float(loss)})

    def __len__(self):
        return len(self.records)

    @property
    def losses(self):
        return np.array([record['loss'] for record in self.records])

    def toFrame(self):
        return pd.DataFrame(self.records, columns=self.columns)

    def toJsonl(self, file_path):
        """Write one JSON object per line."""

        self.toFrame().to_json(file_path, orient='records', lines=True)

    @classmethod
    def fromJsonl(cls, file_path):
        frame = pd.read_json(file_path, orient='records', lines=True)
        return cls(frame.to_dict(orient='records'))

    def movingAverage(self, window=50):
        """Return the trailing moving average of the loss."""

        return self.toFrame()['loss'].rolling(window).mean().to_numpy()

    def epochLrs(self):
        """Return {epoch: lr} as recorded."""

        return {record['epoch']: record['lr'] for record in self.records}


def _provenance(dataset, indices):
    if isinstance(dataset, SampleDataset):
        return [dataset.records[int(i)].provenance for i in indices]
    return [int(i) for i in indices]


def train(state, data, config, out_dir=None, device=None):
    """Train a network.

    Parameters
    ----------
    state : `ddasrlib.network.ModelState`
        Modified in place: its weights, `step` and `history` change.
    data : `SampleDataset` or iterable of `SampleRecord`
    config : `TrainConfig`
    out_dir : `pathlib.Path` or str, optional
        If given, a checkpoint `epoch_{e:03d}.h5` and `trainlog.jsonl` are
        written there after every epoch.
    device : `torch.device`, optional

    Returns
    -------
    tuple
        The `ModelState` and the `TrainLog`.

    Raises
    ------
    NonFiniteLossError
        If a loss is NaN or infinite; the message names the step, lr and
        samples of the batch.

    """

    dataset = data if isinstance(data, Dataset) else\
        SampleDataset(data, config.seed, config.flip, config.rotate)
    if device is not None:
        state.model.to(device)
    device = state.device
    out_dir = Path(out_dir) if out_dir is not None else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)

    seed_everything(config.seed)
    generator = torch.Generator().manual_seed(config.seed)
    loader = DataLoader(dataset, batch_size=config.batch_size, shuffle=True,
                        num_workers=config.workers, generator=generator)
    model = state.model
    optimizer = torch.optim.Adam(model.parameters(), lr=config.lr,
                                 betas=(config.beta1, config.beta2))
    scheduler = torch.optim.lr_scheduler.StepLR(optimizer,
                                                step_size=config.lr_step,
                                                gamma=config.lr_gamma)
    criterion = nn.L1Loss()
    log = TrainLog()
    logger.info(f'Training on {len(dataset)} samples for {config.epochs} '
                f'epochs, batch size {config.batch_size}.')

    model.train()
    done = False
    for epoch in trange(config.epochs, desc='Epochs'):
        if hasattr(dataset, 'setEpoch'):
            dataset.setEpoch(epoch)
        lr = optimizer.param_groups[0]['lr']
        for inputs, targets, indices in tqdm(loader, desc=f'Epoch {epoch}',
                                             leave=False):
            inputs = inputs.to(device)
            targets = targets.to(device)
            loss = criterion(model(inputs), targets)
            if not torch.isfinite(loss):
                raise NonFiniteLossError(
                    f'Loss {loss.item()} at step {state.step} (epoch {epoch}'
                    f', lr {lr:g}) on samples '
                    f'{_provenance(dataset, indices)}.')
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            state.step += 1
            log.add(state.step, epoch, lr, loss.item())
            if config.max_steps and state.step >= config.max_steps:
                done = True
                break

        scheduler.step()
        logger.info(f'Epoch {epoch}: lr {lr:g}, last loss '
                    f'{log.records[-1]["loss"]:.6f}.')
        state.history = {'epochs_completed': epoch + 1,
                         'final_loss': log.records[-1]['loss'],
                         'train_config': config.toDict()}
        if out_dir is not None:
            save_checkpoint(out_dir / f'epoch_{epoch + 1:03d}.h5', state)
            log.toJsonl(out_dir / 'trainlog.jsonl')
        if done:
            break

    return state, log


def nearest_view_baseline(lf_sparse, A_out):
    """Return a dense light field whose every view copies the angularly
    nearest input view (ties go to the lower index).

    """

    positions = sample_indices(A_out, lf_sparse.U)
    columns = sample_indices(A_out, lf_sparse.V)
    rows = [int(np.argmin(np.abs(positions - u))) for u in range(A_out)]
    cols = [int(np.argmin(np.abs(columns - v))) for v in range(A_out)]
    return LightField(lf_sparse.views[np.ix_(rows, cols)])


def load_scenes(directory, to_luminance=None):
    """Read every scene directory under `directory` as luminance.

    Parameters
    ----------
    directory : `pathlib.Path` or str
    to_luminance : callable, optional
        Converts an RGB (..., 3) array to luminance; required for colour
        scenes.

    Returns
    -------
    list of (str, `LightField`)

    """

    directory = Path(directory)
    scene_dirs = sorted(path for path in directory.iterdir()
                        if path.is_dir())
    if not scene_dirs:
        raise DatasetError(f'No scene directories found in "{directory}".')
    scenes = []
    for scene_dir in scene_dirs:
        scene = read_scene(scene_dir)
        if scene.isColor:
            if to_luminance is None:
                raise DatasetError(f'Scene "{scene.name}" is RGB and no '
                                   'luminance conversion was given.')
            scenes.append((scene.name, LightField(to_luminance(
                scene.pixels))))
        else:
            scenes.append((scene.name, scene.lightfield()))
    return scenes
