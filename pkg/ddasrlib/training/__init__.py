#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Created on Wed Mar 20 09:12:48 2024

@author: ddasr
"""

from .training import *
