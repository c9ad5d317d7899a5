#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Created on Wed Mar  6 10:27:45 2024

@author: ddasr
"""

from .disentangle import *
