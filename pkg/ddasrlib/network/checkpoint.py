#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Created on Tue Mar 12 14:40:19 2024

@author: ddasr

Saving and loading `ModelState` checkpoints as HDF5 files.

Layout of a checkpoint file:

    attrs['format_version']   'ddasr-ckpt/1'
    attrs['config']           canonical key=value text of the NetworkConfig
    attrs['step']             the training step counter
    attrs['digest']           SHA-256 over the sorted weight paths and bytes
    /weights/<path>           one little-endian float32 dataset per weight,
                              dots in the path replaced by '/'
    /history                  the training history dictionary (hickle)
"""

import hashlib
import logging
import os
from pathlib import Path

import h5py
import hickle
import numpy as np
import torch

from ddasrlib.exceptions import (CheckpointError, CheckpointIntegrityError,
                                 CheckpointKeyError, CheckpointShapeError,
                                 CheckpointVersionError, NetworkConfigError)
from ddasrlib.network.network import DDASR, ModelState, NetworkConfig

__all__ = ['FORMAT_VERSION', 'save_checkpoint', 'load_checkpoint',
           'weights_digest']

logger = logging.getLogger(__name__)

FORMAT_VERSION = 'ddasr-ckpt/1'

WEIGHT_DTYPE = '<f4'


def _as_array(value):
    if isinstance(value, torch.Tensor):
        value = value.detach().cpu().numpy()
    return np.ascontiguousarray(value, dtype=WEIGHT_DTYPE)


def weights_digest(weights):
    """Return the hex SHA-256 digest of a dictionary of weights.

    The digest covers every path and the little-endian float32 bytes of its
    array, in sorted path order.

    """

    digest = hashlib.sha256()
    for key in sorted(weights):
        digest.update(key.encode('utf-8'))
        digest.update(_as_array(weights[key]).tobytes())
    return digest.hexdigest()


def save_checkpoint(file_path, state):
    """Write a `ModelState` to an HDF5 checkpoint.

    An existing file at `file_path` is replaced only once the new file has
    been completely written.

    Parameters
    ----------
    file_path : `pathlib.Path` or str
    state : `ddasrlib.network.ModelState`

    Returns
    -------
    `pathlib.Path`
        The path written.

    """

    file_path = Path(file_path)
    file_path.parent.mkdir(parents=True, exist_ok=True)
    weights = {key: _as_array(value)
               for key, value in state.model.state_dict().items()}
    tmp_path = file_path.with_suffix(file_path.suffix + '.tmp')

    with h5py.File(tmp_path, mode='w') as f:
        f.attrs['format_version'] = FORMAT_VERSION
        f.attrs['config'] = state.config.toText()
        f.attrs['step'] = int(state.step)
        f.attrs['digest'] = weights_digest(weights)
        group = f.create_group('weights')
        for key, array in weights.items():
            group.create_dataset(key.replace('.', '/'), data=array,
                                 dtype=WEIGHT_DTYPE)
        hickle.dump(dict(state.history), f, path='/history')

    os.replace(tmp_path, file_path)
    logger.info(f'Saved checkpoint at step {state.step} to {file_path}.')
    return file_path


def _read_weights(f):
    weights = {}

    def visit(name, obj):
        if isinstance(obj, h5py.Dataset):
            weights[name.replace('/', '.')] = np.array(obj, dtype=np.float32)

    f['weights'].visititems(visit)
    return weights


def _attr_text(value):
    return value.decode('utf-8') if isinstance(value, bytes) else str(value)


def load_checkpoint(file_path, config=None, device=None):
    """Read a checkpoint and rebuild its `ModelState`.

    Parameters
    ----------
    file_path : `pathlib.Path` or str
    config : `ddasrlib.network.NetworkConfig`, optional
        The config the weights must fit. By default the config stored in
        the checkpoint is used.
    device : `torch.device` or str, optional
        Where to put the model; CPU by default.

    Returns
    -------
    `ddasrlib.network.ModelState`

    Raises
    ------
    CheckpointVersionError
        If the format version is not the one written by this module.
    CheckpointIntegrityError
        If the digest does not match the stored weights, or the stored
        config cannot be parsed.
    CheckpointKeyError
        If a weight is missing or unknown to the config, naming the first
        such key.
    CheckpointShapeError
        If a weight's shape disagrees with the config, naming the first
        such key.

    """

    file_path = Path(file_path)
    if not file_path.exists():
        raise CheckpointError(f'The checkpoint "{file_path}" could not be '
                              'found.')
    try:
        f = h5py.File(file_path, mode='r')
    except OSError as err:
        raise CheckpointIntegrityError(f'"{file_path}" is not a readable '
                                       f'checkpoint: {err}')

    with f:
        version = _attr_text(f.attrs.get('format_version', ''))
        if version != FORMAT_VERSION:
            raise CheckpointVersionError(f'"{file_path}" has format version '
                                         f'"{version}", expected '
                                         f'"{FORMAT_VERSION}".')
        try:
            stored = NetworkConfig.fromText(_attr_text(f.attrs['config']),
                                             source=str(file_path))
        except (KeyError, NetworkConfigError) as err:
            raise CheckpointIntegrityError(f'Bad config in "{file_path}": '
                                           f'{err}')
        if 'weights' not in f:
            raise CheckpointIntegrityError(f'"{file_path}" holds no weights.')
        weights = _read_weights(f)
        if weights_digest(weights) != _attr_text(f.attrs.get('digest', '')):
            raise CheckpointIntegrityError(f'Digest mismatch in '
                                           f'"{file_path}".')
        step = int(f.attrs.get('step', 0))
        history = hickle.load(f, path='/history') if 'history' in f else {}

    config = stored if config is None else config
    model = DDASR(config)
    expected = model.state_dict()

    for key, tensor in expected.items():
        if key in weights and\
           tuple(weights[key].shape) != tuple(tensor.shape):
            raise CheckpointShapeError(f'Weight "{key}" has shape '
                                       f'{weights[key].shape}, expected '
                                       f'{tuple(tensor.shape)}.')
    missing = [key for key in expected if key not in weights]
    if missing:
        raise CheckpointKeyError(f'Missing weight "{missing[0]}" in '
                                 f'"{file_path}".')
    unknown = [key for key in sorted(weights) if key not in expected]
    if unknown:
        raise CheckpointKeyError(f'Unknown weight "{unknown[0]}" in '
                                 f'"{file_path}".')

    model.load_state_dict({key: torch.from_numpy(array)
                           for key, array in weights.items()})
    if device is not None:
        model = model.to(device)
    logger.info(f'Loaded checkpoint "{file_path}" at step {step}.')
    return ModelState(config, model, step, dict(history))
