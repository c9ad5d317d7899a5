#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Created on Mon Mar  4 11:20:17 2024

@author: ddasr
"""

from .miscellaneous import *
