#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Created on Thu Mar 28 13:37:09 2024

@author: ddasr

Smoke tests for the ddasr command line.

"""

import numpy as np
import pytest

from ddasrlib.evaluation import write_pfm
from ddasrlib.exceptions import ConfigurationError
from ddasrlib.lightfield import read_scene
from ddasrlib.network import ModelState, NetworkConfig, save_checkpoint
from ddasrlib.scripts.ddasr import main, parse_grid


@pytest.fixture(scope='module')
def scene_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp('scenes') / 'noise'
    assert main(['synth', '--out', str(out), '--views', '9', '--size', '32',
                 '32', '--disparity', '1']) == 0
    return out


def checkpoint(path, config):
    save_checkpoint(path, ModelState.create(config, seed=0))
    return path


class TestParseGrid(object):

    def testSquare(self):
        assert parse_grid('5x5') == 5

    @pytest.mark.parametrize('text', ['5x4', 'five', '5'])
    def testInvalid(self, text):
        with pytest.raises(ConfigurationError):
            parse_grid(text)


class TestCommands(object):

    def testSynth(self, scene_dir):
        scene = read_scene(scene_dir)
        assert scene.pixels.shape == (9, 9, 32, 32)
        assert scene.meta['disparity'] == 1.0

    def testConvertRoundTrip(self, scene_dir, tmp_path):
        assert main(['convert', '--in', str(scene_dir), '--out',
                     str(tmp_path / 'macpi')]) == 0
        assert (tmp_path / 'macpi' / 'macpi.png').exists()
        assert main(['convert', '--to', 'sai', '--in', str(tmp_path /
                                                            'macpi'),
                     '--out', str(tmp_path / 'views')]) == 0
        again = read_scene(tmp_path / 'views')
        np.testing.assert_array_equal(again.pixels,
                                      read_scene(scene_dir).pixels)

    def testEvalPerfect(self, scene_dir, tmp_path):
        report = tmp_path / 'report.txt'
        assert main(['eval', '--pred', str(scene_dir), '--gt',
                     str(scene_dir), '--task', '5to9', '--out',
                     str(report)]) == 0
        text = report.read_text()
        assert 'noise' in text
        assert 'inf' in text

    def testInfer(self, scene_dir, tmp_path):
        config = NetworkConfig(A_in=2, A_out=3, channels=4,
                               stage_counts=(1,))
        ckpt = checkpoint(tmp_path / 'net.h5', config)
        assert main(['infer', '--in', str(scene_dir), '--ckpt', str(ckpt),
                     '--out', str(tmp_path / 'out')]) == 0
        assert read_scene(tmp_path / 'out').pixels.shape == (3, 3, 32, 32)

    def testBTAS(self, scene_dir, tmp_path):
        config = NetworkConfig.ddasr_s(channels=4, stage_counts=(1,))
        ckpt = checkpoint(tmp_path / 'lvn.h5', config)
        out = tmp_path / 'btas'
        assert main(['btas', '--in', str(scene_dir), '--ckpt', str(ckpt),
                     '--grid', '5x5', '--target', '9x9', '--out',
                     str(out)]) == 0
        assert read_scene(out).pixels.shape == (9, 9, 32, 32)
        rows = (out / 'coverage.txt').read_text().splitlines()
        assert len(rows) == 9
        assert rows[2] == '2 2 4 2 4 2 4 2 2'
        assert (out / 'btas.log').exists()

    def testTrain(self, scene_dir, tmp_path):
        network = tmp_path / 'network.conf'
        network.write_text(NetworkConfig(A_in=2, A_out=3, channels=4,
                                         stage_counts=(1,)).toText())
        settings = tmp_path / 'train.conf'
        settings.write_text('task = lvn\npatch = 16\npatch_stride = 16\n'
                            'epochs = 1\nbatch_size = 4\n')
        out = tmp_path / 'run'
        assert main(['train', '--data', str(scene_dir.parent), '--config',
                     str(settings), '--network', str(network), '--out',
                     str(out), '--max-steps', '2']) == 0
        assert (out / 'epoch_001.h5').exists()
        assert len((out / 'trainlog.jsonl').read_text().splitlines()) == 2
        assert (out / 'train.log').exists()

    def testDepthEval(self, tmp_path, capsys):
        gt = np.zeros((8, 8), dtype=np.float32)
        pred = gt.copy()
        pred[:4] = 0.09
        write_pfm(tmp_path / 'gt.pfm', gt)
        write_pfm(tmp_path / 'pred.pfm', pred)
        assert main(['depth-eval', '--pred', str(tmp_path / 'pred.pfm'),
                     '--gt', str(tmp_path / 'gt.pfm')]) == 0
        output = capsys.readouterr().out
        assert '50.000' in output
        assert '0.000' in output

    def testVisuals(self, scene_dir, tmp_path):
        assert main(['visuals', '--pred', str(scene_dir), '--gt',
                     str(scene_dir), '--out', str(tmp_path)]) == 0
        for name in ('csai.png', 'errmap.png', 'epi_h.png', 'epi_v.png'):
            assert (tmp_path / name).exists()


class TestFailures(object):

    def testMissingScene(self, tmp_path):
        assert main(['eval', '--pred', str(tmp_path / 'nothing'), '--gt',
                     str(tmp_path / 'nothing')]) == 1

    def testBadGrid(self, scene_dir, tmp_path):
        assert main(['btas', '--in', str(scene_dir), '--ckpt',
                     str(tmp_path / 'none.h5'), '--grid', '5x4', '--out',
                     str(tmp_path / 'out')]) == 1

    def testBadCheckpoint(self, scene_dir, tmp_path):
        bad = tmp_path / 'bad.h5'
        bad.write_bytes(b'not a checkpoint')
        assert main(['infer', '--in', str(scene_dir), '--ckpt', str(bad),
                     '--out', str(tmp_path / 'out')]) == 1
