#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Created on Mon Mar  4 10:02:44 2024

@author: ddasr

Script to create a config file for use with ddasrlib.
"""

import configparser
from pathlib import Path

config_path = Path(__file__).parent / 'variables.cfg'

config = configparser.ConfigParser()

config['PATHS'] = {'data_dir': str(Path.home() / 'lightfields'),
                   'output_dir': str(Path.home() / 'ddasr_output'),
                   'checkpoint_dir': '${output_dir}/checkpoints'}

config['RUNTIME'] = {'deterministic': 'false',
                     'workers': '0',
                     'device': 'cpu'}

with open(config_path, 'w') as configfile:
    config.write(configfile)
    print('Created config file at path:')
    print(str(config_path))
