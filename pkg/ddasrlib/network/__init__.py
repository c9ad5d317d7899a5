#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Created on Mon Mar 11 10:02:51 2024

@author: ddasr
"""

from .network import *
from .checkpoint import *
