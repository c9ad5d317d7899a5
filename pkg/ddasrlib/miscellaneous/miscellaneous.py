#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Created on Mon Mar  4 11:20:17 2024

@author: ddasr

A module meant as a catch-all for functions used across multiple
subpackages and scripts which don't really have any commonality: parsing of
plain key=value files, and global determinism and seeding switches.
"""

import configparser
import os
from pathlib import Path
import random

import numpy as np
import torch

import ddasrlib as dl
from ddasrlib.exceptions import ConfigurationError

__all__ = ['parse_key_value_text', 'read_key_value_file',
           'format_key_value_text', 'write_key_value_file',
           'set_deterministic', 'is_deterministic', 'seed_everything',
           'get_device']

# Name of the section injected in front of bare key=value text.
_SECTION = 'values'

_deterministic = False


def parse_key_value_text(text, allowed_keys=None, source='<text>'):
    """Parse plain `key=value` lines into a dictionary of strings.

    Blank lines and lines starting with '#' or ';' are ignored. Keys are
    lower-cased by configparser.

    Parameters
    ----------
    text : str
        The text to parse.
    allowed_keys : iterable of str, optional
        If given, any key not in this collection causes an error.
    source : str
        A name for the text used in error messages.

    Returns
    -------
    dict
        A dictionary of key: value strings.

    """

    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(f'[{_SECTION}]\n' + text, source=source)
    except configparser.Error as err:
        raise ConfigurationError(f'Could not parse {source}: {err}')

    values = dict(parser[_SECTION])

    if allowed_keys is not None:
        allowed = {key.lower() for key in allowed_keys}
        unknown = sorted(set(values) - allowed)
        if unknown:
            raise ConfigurationError(f'Unknown key(s) in {source}: '
                                     f'{", ".join(unknown)}')

    return values


def read_key_value_file(file_path, allowed_keys=None):
    """Read a plain `key=value` file.

    Parameters
    ----------
    file_path : `pathlib.Path` or str
        The file to read.
    allowed_keys : iterable of str, optional
        If given, any key not in this collection causes an error.

    Returns
    -------
    dict
        A dictionary of key: value strings.

    """

    file_path = Path(file_path)
    if not file_path.exists():
        raise FileNotFoundError(f'The file "{file_path}" could not be found.')

    return parse_key_value_text(file_path.read_text(),
                                allowed_keys=allowed_keys,
                                source=str(file_path))


def format_key_value_text(values):
    """Return canonical `key=value` text for a dictionary.

    Keys are written in sorted order, one per line, so equal dictionaries
    always produce identical text.

    """

    return ''.join(f'{key}={values[key]}\n' for key in sorted(values))


def write_key_value_file(file_path, values):
    """Write a dictionary as a canonical `key=value` file."""

    Path(file_path).write_text(format_key_value_text(values))


def set_deterministic(enabled=True, seed=None):
    """Switch global deterministic mode on or off.

    In deterministic mode torch uses deterministic algorithms only, cuDNN
    autotuning is off, and (if given) all random generators are seeded.

    Parameters
    ----------
    enabled : bool, Default : True
        Whether to enable deterministic mode.
    seed : int, optional
        A seed passed to `seed_everything`.

    """

    global _deterministic
    _deterministic = bool(enabled)

    if enabled:
        # Needed by cuBLAS for deterministic matrix products.
        os.environ.setdefault('CUBLAS_WORKSPACE_CONFIG', ':4096:8')
    torch.use_deterministic_algorithms(_deterministic, warn_only=False)
    torch.backends.cudnn.deterministic = _deterministic
    torch.backends.cudnn.benchmark = not _deterministic

    if seed is not None:
        seed_everything(seed)


def is_deterministic():
    """Return *True* if deterministic mode is switched on."""

    return _deterministic


def seed_everything(seed):
    """Seed the Python, numpy and torch random number generators."""

    random.seed(seed)
    np.random.seed(seed % 2**32)
    torch.manual_seed(seed)


def get_device(name=None):
    """Return a `torch.device`, falling back to the CPU if CUDA is asked for
    but not available.

    """

    name = name or dl.default_device
    if name.startswith('cuda') and not torch.cuda.is_available():
        return torch.device('cpu')
    return torch.device(name)


if dl.deterministic_default:
    set_deterministic(True)
