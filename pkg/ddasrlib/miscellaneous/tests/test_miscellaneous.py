#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Created on Thu Mar  7 10:05:44 2024

@author: ddasr

Test script for functions in ddasrlib.miscellaneous

"""

from hypothesis import given
import hypothesis.strategies as st
import numpy as np
import pytest
import torch

import ddasrlib.miscellaneous as dlm
from ddasrlib.exceptions import ConfigurationError


key_names = st.text(alphabet='abcdefghijklmnopqrstuvwxyz_', min_size=1,
                    max_size=12)
plain_values = st.text(alphabet='abcdefghijklmnopqrstuvwxyz0123456789.-',
                       min_size=1, max_size=12)


class TestParseKeyValueText(object):

    def testSimpleText(self):
        values = dlm.parse_key_value_text('A_in=2\nA_out = 7\n')
        assert values == {'a_in': '2', 'a_out': '7'}

    def testCommentsAndBlankLines(self):
        text = '# a comment\n\nchannels=64\n; another\n'
        assert dlm.parse_key_value_text(text) == {'channels': '64'}

    def testUnknownKey(self):
        with pytest.raises(ConfigurationError):
            dlm.parse_key_value_text('channels=64\nwidth=3\n',
                                     allowed_keys=('channels',))

    def testMalformedLine(self):
        with pytest.raises(ConfigurationError):
            dlm.parse_key_value_text('channels\n')

    def testDuplicateKey(self):
        with pytest.raises(ConfigurationError):
            dlm.parse_key_value_text('seed=1\nseed=2\n')

    @given(values=st.dictionaries(key_names, plain_values, max_size=8))
    def testFormatThenParse(self, values):
        text = dlm.format_key_value_text(values)
        assert dlm.parse_key_value_text(text) == values

    def testFormatIsCanonical(self):
        first = dlm.format_key_value_text({'b': 1, 'a': 2})
        second = dlm.format_key_value_text({'a': 2, 'b': 1})
        assert first == second == 'a=2\nb=1\n'


class TestKeyValueFiles(object):

    def testMissingFile(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            dlm.read_key_value_file(tmp_path / 'missing.cfg')

    def testWriteAndRead(self, tmp_path):
        path = tmp_path / 'values.cfg'
        dlm.write_key_value_file(path, {'epochs': 75, 'lr': 0.0002})
        assert dlm.read_key_value_file(path) == {'epochs': '75',
                                                 'lr': '0.0002'}


class TestDeterminism(object):

    @pytest.fixture
    def restore_mode(self):
        previous = dlm.is_deterministic()
        yield
        dlm.set_deterministic(previous)

    def testSwitch(self, restore_mode):
        dlm.set_deterministic(True)
        assert dlm.is_deterministic()
        assert torch.are_deterministic_algorithms_enabled()
        dlm.set_deterministic(False)
        assert not dlm.is_deterministic()
        assert not torch.are_deterministic_algorithms_enabled()

    def testSeedEverything(self):
        dlm.seed_everything(12)
        first = (np.random.random(), torch.rand(3))
        dlm.seed_everything(12)
        second = (np.random.random(), torch.rand(3))
        assert first[0] == second[0]
        assert torch.equal(first[1], second[1])

    def testCPUDevice(self):
        assert dlm.get_device('cpu') == torch.device('cpu')
