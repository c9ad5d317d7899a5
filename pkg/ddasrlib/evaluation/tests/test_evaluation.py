#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Created on Tue Mar 26 16:20:41 2024

@author: ddasr

Tests for image and disparity metrics, reports, PFM files and visuals.

"""

from hypothesis import given, settings
import hypothesis.strategies as st
import numpy as np
from PIL import Image
import pytest

from ddasrlib.evaluation import (BP1_THRESHOLD, BP7_THRESHOLD, TASK_2TO3,
                                 TASK_2TO7, TASK_5TO9, DisparityMap,
                                 MetricReport, Task, VISUAL_FILES, badpix,
                                 emit_visuals, evaluate_disparity,
                                 evaluate_scene, evaluate_scenes, mse100,
                                 nearest_chroma, psnr, read_pfm, rgb_to_y,
                                 rgb_to_ycbcr, ssim, write_pfm,
                                 ycbcr_to_rgb)
from ddasrlib.exceptions import (EmptyMaskError, MetricError,
                                 SceneFormatError, ShapeMismatchError)
from ddasrlib.lightfield import LightField


@pytest.fixture(scope='module')
def rng():
    return np.random.default_rng(42)


@pytest.fixture(scope='module')
def dense_pair():
    rng = np.random.default_rng(8)
    gt = rng.random((7, 7, 16, 16))
    pred = np.clip(gt + rng.normal(0, 0.05, gt.shape), 0, 1)
    return LightField(pred), LightField(gt)


class TestColour(object):

    def testWhite(self):
        assert rgb_to_y(np.ones(3)) == pytest.approx(1.0)
        assert rgb_to_y(np.array([255, 255, 255], dtype=np.uint8)) ==\
            pytest.approx(1.0)

    def testGreen(self):
        assert rgb_to_y(np.array([0., 1., 0.])) == pytest.approx(0.587)

    @given(st.floats(min_value=0, max_value=1))
    def testGray(self, x):
        assert rgb_to_y(np.full(3, x)) == pytest.approx(x, abs=1e-12)

    def testChannelMismatch(self):
        with pytest.raises(ShapeMismatchError):
            rgb_to_y(np.ones((4, 4, 4)))

    def testYCbCrInverse(self, rng):
        rgb = rng.random((6, 6, 3))
        np.testing.assert_allclose(ycbcr_to_rgb(rgb_to_ycbcr(rgb)), rgb,
                                   atol=1e-5)

    def testGrayHasNeutralChroma(self):
        ycbcr = rgb_to_ycbcr(np.full((2, 2, 3), 0.3))
        np.testing.assert_allclose(ycbcr[..., 1:], 0.5, atol=1e-6)

    def testNearestChroma(self):
        sparse = np.zeros((2, 2, 4, 4, 3))
        sparse[0, 0, ..., 0] = 1.
        sparse[1, 1, ..., 2] = 1.
        y = LightField(np.full((3, 3, 4, 4), 0.4))
        rgb = nearest_chroma(y, sparse)
        assert rgb.shape == (3, 3, 4, 4, 3)
        # The centre view takes the chroma of the (0, 0) input.
        assert rgb[1, 1, 0, 0, 0] > rgb[1, 1, 0, 0, 2]
        assert rgb[2, 2, 0, 0, 2] > rgb[2, 2, 0, 0, 0]


class TestPSNR(object):

    def testIdentical(self, rng):
        a = rng.random((8, 8))
        assert psnr(a, a) == np.inf

    def testUniformError(self):
        a = np.full((8, 8), 0.5)
        assert psnr(a, a + 0.1) == pytest.approx(20.0)
        assert psnr(a + 0.1, a) == pytest.approx(20.0)

    def testDecreasingInError(self):
        a = np.full((8, 8), 0.2)
        values = [psnr(a, a + e) for e in (0.01, 0.05, 0.1, 0.3)]
        assert values == sorted(values, reverse=True)

    def testShapeMismatch(self):
        with pytest.raises(ShapeMismatchError):
            psnr(np.zeros((4, 4)), np.zeros((4, 5)))


class TestSSIM(object):

    def testIdentical(self, rng):
        a = rng.random((16, 16))
        assert ssim(a, a) == pytest.approx(1.0)

    def testInverted(self, rng):
        a = rng.random((16, 16))
        assert ssim(a, 1 - a) < 1

    def testSymmetric(self, rng):
        a = rng.random((16, 16))
        b = rng.random((16, 16))
        assert ssim(a, b) == pytest.approx(ssim(b, a))

    @pytest.mark.parametrize('mu_a,mu_b', [(0.2, 0.6), (0.5, 0.55),
                                           (0.9, 0.1)])
    def testConstantImages(self, mu_a, mu_b):
        C1 = (0.01 * 1) ** 2
        expected = (2 * mu_a * mu_b + C1) / (mu_a ** 2 + mu_b ** 2 + C1)
        value = ssim(np.full((16, 16), mu_a), np.full((16, 16), mu_b))
        assert value == pytest.approx(expected, rel=1e-6)

    def testTooSmall(self):
        with pytest.raises(ShapeMismatchError):
            ssim(np.zeros((8, 8)), np.zeros((8, 8)))


class TestDisparityMetrics(object):

    def testExact(self, rng):
        d = rng.normal(size=(10, 10))
        assert badpix(d, d, 0.1) == 0
        assert badpix(d, d, 0.0) == 0
        assert mse100(d, d) == 0

    def testThresholds(self):
        gt = np.zeros((10, 10))
        d = np.full((10, 10), 0.09)
        assert badpix(d, gt, BP1_THRESHOLD) == 0
        assert badpix(d, gt, BP7_THRESHOLD) == 100

    def testHalfOff(self):
        gt = np.zeros((10, 10))
        d = gt.copy()
        d[:5] = 1.0
        result = evaluate_disparity(d, gt)
        assert result['BP1'] == 50
        assert result['BP7'] == 50

    def testMSE(self):
        gt = np.zeros((10, 10))
        assert mse100(np.full((10, 10), 0.1), gt) == pytest.approx(1.0)
        d = gt.copy()
        d[3, 4] = 0.5
        assert mse100(d, gt) == pytest.approx(100 * 0.25 / 100)

    @settings(max_examples=30)
    @given(st.floats(min_value=0, max_value=1),
           st.floats(min_value=0, max_value=1))
    def testMonotoneInThreshold(self, t1, t2):
        rng = np.random.default_rng(3)
        d = rng.normal(0, 0.3, (12, 12))
        gt = np.zeros((12, 12))
        low, high = sorted((t1, t2))
        assert badpix(d, gt, high) <= badpix(d, gt, low)

    def testMask(self):
        gt = np.zeros((4, 4))
        d = np.zeros((4, 4))
        d[0, 0] = 5.
        mask = np.ones((4, 4), dtype=bool)
        mask[0, 0] = False
        assert badpix(DisparityMap(d, mask), gt, 0.1) == 0
        d[1, 1] = np.nan
        assert badpix(d, gt, 0.1) == pytest.approx(100 / 15)

    def testEmptyMask(self):
        gt = DisparityMap(np.zeros((3, 3)), np.zeros((3, 3), dtype=bool))
        with pytest.raises(EmptyMaskError):
            badpix(np.zeros((3, 3)), gt, 0.1)
        with pytest.raises(EmptyMaskError):
            mse100(np.zeros((3, 3)), gt)

    def testShapeMismatch(self):
        with pytest.raises(ShapeMismatchError):
            mse100(np.zeros((3, 3)), np.zeros((3, 4)))


class TestTasks(object):

    def testNovelCounts(self):
        assert len(TASK_2TO7.novelPositions()) == 45
        assert len(TASK_5TO9.novelPositions()) == 56
        assert len(TASK_2TO3.novelPositions()) == 5

    def testInputsExcluded(self):
        assert (0, 0) not in TASK_2TO7.novelPositions()
        assert (6, 6) not in TASK_2TO7.novelPositions()
        assert (2, 4) not in TASK_5TO9.novelPositions()
        assert (1, 1) in TASK_5TO9.novelPositions()

    def testName(self):
        assert Task(2, 7).name == '2x2->7x7'


class TestEvaluateScene(object):

    def testPerfect(self):
        gt = LightField(np.random.default_rng(1).random((7, 7, 16, 16)))
        report = evaluate_scene(gt, gt, TASK_2TO7)
        frame = report.toFrame()
        assert len(frame) == 45
        assert np.all(np.isinf(frame['psnr']))
        np.testing.assert_allclose(frame['ssim'], 1.0)

    def testViewOrdinals(self):
        gt = LightField(np.random.default_rng(2).random((7, 7, 16, 16)))
        frame = evaluate_scene(gt, gt, TASK_2TO7).toFrame()
        assert list(frame['view']) == list(frame['u'] * 7 + frame['v'])
        assert 0 not in set(frame['view'])
        assert 48 not in set(frame['view'])
        assert frame['view'].is_monotonic_increasing

    def testInputViewsIgnored(self, dense_pair):
        pred, gt = dense_pair
        corrupted = np.array(pred.views)
        for u, v in TASK_2TO7.inputPositions():
            corrupted[u, v] = 1 - corrupted[u, v]
        first = evaluate_scene(pred, gt, TASK_2TO7).toFrame()
        second = evaluate_scene(LightField(corrupted), gt,
                                TASK_2TO7).toFrame()
        assert first.equals(second)

    def testAggregation(self, dense_pair):
        pred, gt = dense_pair
        report = evaluate_scene(pred, gt, TASK_2TO7, scene='a')
        evaluate_scene(gt, LightField(np.clip(gt.views + 0.05, 0, 1)),
                       TASK_2TO7, scene='b', report=report)
        frame = report.toFrame()
        means = report.sceneMeans()
        for scene in ('a', 'b'):
            rows = frame[frame['scene'] == scene]
            assert means.loc[scene, 'psnr'] ==\
                pytest.approx(rows['psnr'].mean())
        assert report.datasetMean()['ssim'] ==\
            pytest.approx((means.loc['a', 'ssim'] +
                           means.loc['b', 'ssim']) / 2)
        text = report.toText()
        assert text.startswith('task: 2x2->7x7')
        assert 'mean' in text

    def testTaskMismatch(self, dense_pair):
        pred, gt = dense_pair
        with pytest.raises(ShapeMismatchError):
            evaluate_scene(pred, gt, TASK_5TO9)

    def testShapeMismatch(self, dense_pair):
        pred, _ = dense_pair
        with pytest.raises(ShapeMismatchError):
            evaluate_scene(pred, LightField(np.zeros((7, 7, 16, 12))),
                           TASK_2TO7)

    def testSeveralScenes(self, dense_pair):
        pred, gt = dense_pair
        report = evaluate_scenes([('x', pred, gt), ('y', gt, gt)],
                                 TASK_2TO7, model_id='ckpt')
        assert report.scenes == ['x', 'y']
        assert report.model_id == 'ckpt'
        single = evaluate_scene(pred, gt, TASK_2TO7, scene='x').toFrame()
        assert report.toFrame().iloc[:45].reset_index(drop=True).equals(
            single)

    def testEmptyReport(self):
        with pytest.raises(MetricError):
            MetricReport(TASK_2TO7).datasetMean()


class TestPFM(object):

    def testRoundTrip(self, tmp_path, rng):
        array = rng.normal(size=(5, 7)).astype(np.float32)
        write_pfm(tmp_path / 'disp.pfm', array)
        np.testing.assert_array_equal(read_pfm(tmp_path / 'disp.pfm'), array)

    def testColour(self, tmp_path, rng):
        array = rng.random((3, 4, 3)).astype(np.float32)
        write_pfm(tmp_path / 'c.pfm', array)
        assert read_pfm(tmp_path / 'c.pfm').shape == (3, 4, 3)

    def testBigEndianTopRowLast(self, tmp_path):
        path = tmp_path / 'be.pfm'
        rows = np.array([[1., 2.], [3., 4.]], dtype='>f4')
        with open(path, 'wb') as f:
            f.write(b'Pf\n2 2\n1.0\n')
            f.write(rows.tobytes())
        np.testing.assert_array_equal(read_pfm(path), [[3., 4.], [1., 2.]])

    def testBadHeader(self, tmp_path):
        path = tmp_path / 'bad.pfm'
        path.write_bytes(b'P6\n2 2\n255\n')
        with pytest.raises(SceneFormatError):
            read_pfm(path)

    def testTruncated(self, tmp_path):
        path = tmp_path / 'short.pfm'
        path.write_bytes(b'Pf\n4 4\n-1.0\n' + bytes(8))
        with pytest.raises(SceneFormatError):
            read_pfm(path)

    def testMissing(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            read_pfm(tmp_path / 'nothing.pfm')


class TestVisuals(object):

    def testPerfectReconstruction(self, tmp_path, dense_pair):
        _, gt = dense_pair
        visuals = emit_visuals(gt, gt, tmp_path / 'vis')
        assert np.all(visuals.error_map == 0)
        for name in VISUAL_FILES.values():
            assert (tmp_path / 'vis' / name).exists()

    def testEPIHeights(self, tmp_path):
        lf = LightField(np.random.default_rng(2).random((5, 3, 12, 10)))
        visuals = emit_visuals(lf, lf, tmp_path, scanline=(4, 6))
        assert visuals.epi_h.shape == (3, 10)
        assert visuals.epi_v.shape == (5, 12)
        image = np.array(Image.open(tmp_path / 'epi_h.png'))
        assert image.shape == (3, 10)

    def testShapeMismatch(self, tmp_path, dense_pair):
        pred, _ = dense_pair
        with pytest.raises(ShapeMismatchError):
            emit_visuals(pred, LightField(np.zeros((7, 7, 8, 8))), tmp_path)
