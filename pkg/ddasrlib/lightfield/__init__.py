#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Created on Mon Mar  4 13:41:09 2024

@author: ddasr
"""

from .lightfield import *
from .synthetic import *
from .scene_io import *
