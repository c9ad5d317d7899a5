#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Created on Tue Mar 19 10:54:41 2024

@author: ddasr

Tests for the block traversal strategy.

"""

import numpy as np
import pytest
import torch

from ddasrlib.btas import (NetworkLVN, ShiftOracleLVN, btas_peak_estimate,
                           coverage_map, format_coverage, make_schedule,
                           measure_peak_memory, peak_activation_estimate,
                           run_btas)
from ddasrlib.exceptions import BlockOutputError, ScheduleError
from ddasrlib.lightfield import (LightField, SyntheticSceneSpec,
                                 generate_constant_disparity_lf)
from ddasrlib.network import ModelState, NetworkConfig


@pytest.fixture(scope='module')
def schedule():
    return make_schedule(5)


def dense_scene(disparity, T=9, size=32, seed=2):
    spec = SyntheticSceneSpec.fromKind('noise', disparity, T, size, size,
                                        seed=seed)
    return generate_constant_disparity_lf(spec)


class ConstantLVN(object):
    """Returns the same block for every input."""

    def __init__(self, value):
        self.value = value

    def __call__(self, block):
        return np.full((3, 3, block.H, block.W), self.value)


class TestSchedule(object):

    def testBlocks(self, schedule):
        assert (schedule.T, schedule.stride) == (9, 2)
        assert len(schedule) == 16
        origins = {origin for (_, origin) in schedule.blocks}
        assert origins == {(p, q) for p in (0, 2, 4, 6) for q in (0, 2, 4, 6)}

    def testTraversalOrder(self, schedule):
        assert schedule.blocks[0] == ((0, 0), (0, 0))
        assert schedule.blocks[1] == ((0, 1), (0, 2))
        assert schedule.blocks[-1] == ((3, 3), (6, 6))

    def testInputOrigins(self, schedule):
        for (i, j), (p, q) in schedule.blocks:
            assert (2 * i, 2 * j) == (p, q)

    def testSingleBlock(self):
        single = make_schedule(2)
        assert single.T == 3
        assert single.blocks == (((0, 0), (0, 0)),)
        assert np.all(coverage_map(single) == 1)

    @pytest.mark.parametrize('kwargs', [{'M': 5, 'T': 8},
                                        {'M': 5, 'n': 3},
                                        {'M': 5, 'm': 5},
                                        {'M': 1}])
    def testInconsistent(self, kwargs):
        with pytest.raises(ScheduleError):
            make_schedule(**kwargs)


class TestCoverage(object):

    def testValues(self, schedule):
        grid = coverage_map(schedule)
        assert set(np.unique(grid)) == {1, 2, 4}
        assert grid.sum() == 16 * 9
        assert grid[1, 1] == 1
        assert grid[2, 1] == 2
        assert grid[1, 2] == 2
        assert grid[2, 2] == 4
        assert grid[0, 0] == 1
        assert grid[8, 8] == 1

    def testAdjacentBlocksShareOneColumn(self, schedule):
        m = schedule.m
        first = {(a, b) for a in range(m) for b in range(m)}
        second = {(a, b + schedule.stride) for a in range(m)
                  for b in range(m)}
        assert len(first & second) == m

    def testFormat(self):
        text = format_coverage(coverage_map(make_schedule(3)))
        assert text.splitlines() == ['1 1 2 1 1', '1 1 2 1 1',
                                     '2 2 4 2 2', '1 1 2 1 1',
                                     '1 1 2 1 1']


class TestRunBTAS(object):

    @pytest.mark.parametrize('disparity', [0, 1, -1])
    def testOracleEquivalence(self, schedule, disparity):
        truth = dense_scene(disparity)
        sparse = LightField(truth.views[::2, ::2])
        result = run_btas(sparse, ShiftOracleLVN(disparity), schedule)
        assert result.shape == (9, 9, 32, 32)
        np.testing.assert_allclose(result.views, truth.views, atol=1e-6)

    def testInputViewsKept(self, schedule):
        truth = dense_scene(1)
        sparse = LightField(truth.views[::2, ::2])
        result = run_btas(sparse, ShiftOracleLVN(1), schedule)
        np.testing.assert_allclose(result.views[::2, ::2], sparse.views,
                                   atol=1e-12)

    def testZeroInput(self, schedule):
        result = run_btas(LightField(np.zeros((5, 5, 8, 8))),
                          ShiftOracleLVN(1), schedule)
        assert np.all(result.views == 0)

    def testIdenticalBlocks(self, schedule):
        result = run_btas(LightField(np.zeros((5, 5, 4, 4))),
                          ConstantLVN(0.3), schedule)
        np.testing.assert_allclose(result.views, 0.3, atol=1e-12)

    def testClampAfterBlend(self, schedule):
        result = run_btas(LightField(np.zeros((5, 5, 4, 4))),
                          ConstantLVN(1.4), schedule)
        assert np.all(result.views == 1)

    def testOrderIndependent(self, schedule):
        truth = dense_scene(1, seed=5)
        sparse = LightField(truth.views[::2, ::2])
        forward = run_btas(sparse, ShiftOracleLVN(1), schedule)
        reversed_schedule = type(schedule)(schedule.M, schedule.n,
                                           schedule.m, schedule.T,
                                           schedule.blocks[::-1])
        backward = run_btas(sparse, ShiftOracleLVN(1), reversed_schedule)
        np.testing.assert_allclose(forward.views, backward.views,
                                   atol=1e-12)

    def testParallelMatchesSerial(self, schedule):
        truth = dense_scene(1, size=32, seed=6)
        sparse = LightField(truth.views[::2, ::2])
        serial = run_btas(sparse, ShiftOracleLVN(1), schedule)
        parallel = run_btas(sparse, ShiftOracleLVN(1), schedule, workers=2)
        assert np.array_equal(serial.views, parallel.views)

    def testWrongInputGrid(self, schedule):
        with pytest.raises(ScheduleError):
            run_btas(LightField(np.zeros((4, 4, 8, 8))), ShiftOracleLVN(0),
                     schedule)

    def testBadBlockOutput(self, schedule):
        def bad_lvn(block):
            return np.zeros((2, 2, block.H, block.W))

        with pytest.raises(BlockOutputError):
            run_btas(LightField(np.zeros((5, 5, 4, 4))), bad_lvn, schedule)

    def testNetworkLVN(self):
        config = NetworkConfig.ddasr_s(channels=4, stage_counts=(1,))
        lvn = NetworkLVN(ModelState.create(config, seed=0))
        result = run_btas(LightField(np.full((3, 3, 8, 8), 0.5)), lvn,
                          make_schedule(3))
        assert result.shape == (5, 5, 8, 8)
        assert np.all(np.isfinite(result.views))


class TestMemoryEstimates(object):

    @pytest.mark.parametrize('M', [3, 5, 9])
    def testTraversalPeakConstantInGridSize(self, M):
        lvn = NetworkConfig.ddasr_s()
        assert btas_peak_estimate(lvn, make_schedule(M), 64, 64) ==\
            btas_peak_estimate(lvn, make_schedule(3), 64, 64)

    def testFullGridPeakGrowsWithGridSize(self):
        lvn = NetworkConfig.ddasr_s()
        full = [peak_activation_estimate(NetworkConfig(A_in=M,
                                                       A_out=2 * M - 1),
                                         64, 64)
                for M in (3, 5, 9)]
        traversal = [btas_peak_estimate(lvn, make_schedule(M), 64, 64)
                     for M in (3, 5, 9)]
        assert full[0] < full[1] < full[2]
        assert len(set(traversal)) == 1
        assert traversal[0] < full[1] / 4

    def testMismatchedNetwork(self):
        with pytest.raises(ScheduleError):
            btas_peak_estimate(NetworkConfig(), make_schedule(5), 64, 64)

    def testFullGridRatio(self):
        config = NetworkConfig()
        small = peak_activation_estimate(config, 64, 64, A=2)
        large = peak_activation_estimate(config, 64, 64, A=5)
        assert large / small == pytest.approx(6, rel=0.2)

    def testLinearInViews(self):
        config = NetworkConfig()
        estimates = [peak_activation_estimate(config, 32, 32, A=A)
                     for A in (2, 3, 4, 5)]
        per_view = [e / A**2 for e, A in zip(estimates, (2, 3, 4, 5))]
        assert max(per_view) / min(per_view) < 1.05


class TestMeasurePeakMemory(object):

    def testWithoutCUDA(self, monkeypatch):
        monkeypatch.setattr(torch.cuda, 'is_available', lambda: False)
        result, peak = measure_peak_memory(lambda: 42)
        assert result == 42
        assert peak is None

    @pytest.mark.skipif(not torch.cuda.is_available(),
                        reason='needs a CUDA device')
    def testTraversalPeakConstantInGridSize(self):
        config = NetworkConfig.ddasr_s(channels=8, stage_counts=(1,))
        lvn = NetworkLVN(ModelState.create(config, seed=0, device='cuda'))
        peaks = []
        for M in (3, 5):
            sparse = LightField(np.full((M, M, 32, 32), 0.5))
            result, peak = measure_peak_memory(
                lambda: run_btas(sparse, lvn, make_schedule(M)))
            assert result.shape == (2 * M - 1, 2 * M - 1, 32, 32)
            peaks.append(peak)
        assert peaks[1] == pytest.approx(peaks[0], rel=0.1)
