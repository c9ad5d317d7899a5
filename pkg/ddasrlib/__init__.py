#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Created on Mon Mar  4 09:58:02 2024

@author: ddasr

DDASRLib -- light field angular super-resolution by deep disentangling.

"""

import configparser
import os
from pathlib import Path

from tqdm import tqdm

__all__ = ['base_dir', 'data_dir', 'output_dir', 'checkpoint_dir',
           'config', 'deterministic_default', 'default_workers',
           'default_device', 'verbose_print']

# Define some important paths to be available globally relative to the
# absolute path of the parent directory.

base_dir = Path(__file__).parent

# Read the config file to get values from it.
config_file = base_dir / 'config/variables.cfg'
config = configparser.ConfigParser(interpolation=configparser.
                                   ExtendedInterpolation())
config.read(config_file)

# Directory holding scene directories for training and evaluation.
data_dir = Path(config.get('PATHS', 'data_dir',
                           fallback=str(base_dir / 'data'))).expanduser()

# Directory where run outputs (logs, visuals, reports) go.
output_dir = Path(config.get('PATHS', 'output_dir',
                             fallback='ddasr_output')).expanduser()

# Directory where checkpoints are written by default.
checkpoint_dir = Path(config.get('PATHS', 'checkpoint_dir',
                                 fallback=str(output_dir / 'checkpoints'))
                      ).expanduser()

# The environment variable takes precedence over the config file.
deterministic_default = config.getboolean('RUNTIME', 'deterministic',
                                          fallback=False)
if os.environ.get('DDASR_DETERMINISTIC', '').strip() == '1':
    deterministic_default = True

default_workers = config.getint('RUNTIME', 'workers', fallback=0)

default_device = config.get('RUNTIME', 'device', fallback='cpu')


def verbose_print(verbosity):
    """Return a function depending on the value of `verbosity`.

    If `verbosity` is *True* the returned function writes its (stringified)
    input with tqdm.write(), so it does not break progress bars; otherwise it
    does nothing at all.

    Sample usage:
        vprint = ddasrlib.verbose_print(args.verbose)

    Parameters
    ----------
    verbosity : bool
        Whether the returned function should print.

    Returns
    -------
    function
        A function of one argument.

    """

    if verbosity:
        return lambda x: tqdm.write(str(x))
    else:
        return lambda x: None
