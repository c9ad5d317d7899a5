#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Created on Mon Mar 18 13:22:07 2024

@author: ddasr
"""

from .btas import *
