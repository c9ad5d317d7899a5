#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Created on Mon Mar  4 09:51:13 2024

@author: ddasr

setup.py file.
"""

from setuptools import setup, find_packages

setup(name='ddasrlib',
      author='DDASR developers',
      maintainer='ddasr',
      description='Light field angular super-resolution by deep '
                  'disentangling',
      packages=find_packages(),
      package_dir={'ddasrlib': "ddasrlib"},
      package_data={'ddasrlib': ['config/variables.cfg']},
      python_requires='>=3.8',
      entry_points={'console_scripts':
                    ['ddasr=ddasrlib.scripts.ddasr:main']})
