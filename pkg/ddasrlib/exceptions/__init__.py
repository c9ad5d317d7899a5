#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Created on Mon Mar  4 10:12:31 2024

@author: ddasr
"""

from .exceptions import *
