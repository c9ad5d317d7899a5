#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Created on Mon Mar 25 10:31:16 2024

@author: ddasr
"""

from .evaluation import *
from .pfm import *
from .visuals import *
