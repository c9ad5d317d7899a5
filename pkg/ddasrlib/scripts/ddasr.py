#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Created on Wed Mar 27 09:48:20 2024

@author: ddasr

The `ddasr` command line: convert, synthesize, super-resolve, train and
evaluate light fields.

Every subcommand exits with status 1 after printing the message of any
ddasrlib error (or missing file) it runs into.
"""

import argparse
import logging
from pathlib import Path
import sys

import numpy as np
from tabulate import tabulate
from tqdm import tqdm

import ddasrlib
from ddasrlib.btas import (NetworkLVN, coverage_map, format_coverage,
                           make_schedule, run_btas)
from ddasrlib.evaluation import (TASK_2TO3, TASK_2TO7, TASK_5TO9,
                                 BP1_THRESHOLD, BP7_THRESHOLD,
                                 emit_visuals, evaluate_disparity,
                                 evaluate_scenes, nearest_chroma, read_pfm,
                                 rgb_to_y)
from ddasrlib.exceptions import ConfigurationError, Error, SceneFormatError
from ddasrlib.lightfield import (LightField, META_FILE, SyntheticSceneSpec,
                                 TEXTURE_KINDS, center_crop_angular,
                                 generate_constant_disparity_lf,
                                 macpi_from_sai, read_macpi, read_scene,
                                 sai_from_macpi, sparse_sample_corners,
                                 write_macpi, write_scene, write_views)
from ddasrlib.miscellaneous import get_device, set_deterministic
from ddasrlib.network import (ModelState, NetworkConfig, ddasr_forward,
                              load_checkpoint)
from ddasrlib.training import (SampleDataset, build_patches, load_scenes,
                               read_train_config, train)

logger = logging.getLogger('ddasr')

TASKS = {'2to7': TASK_2TO7, '5to9': TASK_5TO9, '2to3': TASK_2TO3}


def setup_logging(out_dir, name):
    """Send ddasr and ddasrlib log records to `out_dir`/`name`."""

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    file_handler = logging.FileHandler(out_dir / name, mode='w', delay=False)
    file_handler.setLevel(logging.INFO)
    file_handler.setFormatter(logging.Formatter(
        '%(asctime)s %(name)s %(levelname)s: %(message)s'))
    for log in (logger, logging.getLogger('ddasrlib')):
        log.setLevel(logging.INFO)
        log.addHandler(file_handler)
    return file_handler


def parse_grid(text):
    """Parse an 'AxA' angular grid size."""

    try:
        rows, cols = (int(part) for part in text.lower().split('x'))
    except ValueError:
        raise ConfigurationError(f'Grid size "{text}" is not of the form '
                                 'AxA.')
    if rows != cols:
        raise ConfigurationError(f'Only square grids are supported, got '
                                 f'{text}.')
    return rows


def read_luminance(directory):
    """Read a scene directory, converting RGB scenes to luminance.

    Returns
    -------
    tuple
        The luminance `LightField` and the `Scene`.

    """

    scene = read_scene(directory)
    if scene.isColor:
        return LightField(rgb_to_y(scene.pixels)), scene
    return scene.lightfield(), scene


def sparse_input(lf, config):
    """Return the network input for a scene.

    A scene with exactly `A_in` views is used as is; a denser one is
    cropped to the central `A_out` views and corner-sampled.

    """

    if lf.U == config.A_in and lf.V == config.A_in:
        return lf
    if min(lf.U, lf.V) >= config.A_out:
        return sparse_sample_corners(center_crop_angular(lf, config.A_out),
                                     config.A_in)
    raise SceneFormatError(f'A scene with {lf.U}x{lf.V} views can not feed a'
                           f' {config.A_in}x{config.A_in} -> {config.A_out}x'
                           f'{config.A_out} network.')


def scene_dirs(path):
    """Return the scene directories at `path`: itself, or its children."""

    path = Path(path)
    if (path / META_FILE).exists():
        return [path]
    dirs = sorted(child for child in path.iterdir()
                  if (child / META_FILE).exists())
    if not dirs:
        raise SceneFormatError(f'No scene directories found at "{path}".')
    return dirs


def cmd_convert(args):
    if args.to == 'macpi':
        lf, _ = read_luminance(args.input)
        path = write_macpi(args.out, macpi_from_sai(lf))
        tqdm.write(f'Wrote {lf.A}x{lf.A} MacPI to {path}.')
    else:
        lf = sai_from_macpi(read_macpi(args.input))
        write_scene(args.out, lf)
        tqdm.write(f'Wrote {lf.U}x{lf.V} views to {args.out}.')


def cmd_synth(args):
    H, W = args.size
    spec = SyntheticSceneSpec.fromKind(args.kind, args.disparity, args.views,
                                        H, W, seed=args.seed)
    lf = generate_constant_disparity_lf(spec)
    write_scene(args.out, lf, meta={'disparity': args.disparity,
                                    'source': f'synthetic-{args.kind}'})
    tqdm.write(f'Wrote synthetic scene {lf!r} to {args.out}.')


def cmd_infer(args):
    device = get_device(args.device)
    state = load_checkpoint(args.ckpt, device=device)
    lf, scene = read_luminance(args.input)
    sparse = sparse_input(lf, state.config)
    result = ddasr_forward(sparse, state)
    if args.color and scene.isColor:
        if scene.pixels.shape[:2] != (state.config.A_in, state.config.A_in):
            raise SceneFormatError('Colour output needs a scene holding only '
                                   'the input views.')
        write_views(args.out, nearest_chroma(result, scene.pixels))
    else:
        write_scene(args.out, result)
    tqdm.write(f'Wrote {result.U}x{result.V} views to {args.out}.')


def cmd_btas(args):
    out_dir = Path(args.out)
    setup_logging(out_dir, 'btas.log')
    M, T = parse_grid(args.grid), parse_grid(args.target)
    schedule = make_schedule(M, T=T)
    state = load_checkpoint(args.ckpt, device=get_device(args.device))
    lf, _ = read_luminance(args.input)
    if lf.U != M:
        lf = sparse_sample_corners(lf, M)
    result = run_btas(lf, NetworkLVN(state), schedule, workers=args.workers)
    write_scene(out_dir, result)
    (out_dir / 'coverage.txt').write_text(
        format_coverage(coverage_map(schedule)))
    logger.info(f'Assembled {T}x{T} views from {len(schedule)} blocks.')
    tqdm.write(f'Wrote {T}x{T} views and coverage.txt to {out_dir}.')


def cmd_train(args):
    out_dir = Path(args.out)
    setup_logging(out_dir, 'train.log')
    overrides = {}
    for name in ('task', 'seed', 'epochs', 'workers', 'max_steps'):
        if getattr(args, name) is not None:
            overrides[name] = getattr(args, name)
    config = read_train_config(args.config, **overrides) if args.config\
        else read_train_config(text='', **overrides)
    if args.deterministic or ddasrlib.deterministic_default:
        set_deterministic(True, seed=config.seed)

    if args.network:
        network = NetworkConfig.fromText(Path(args.network).read_text(),
                                          source=args.network)
    elif config.task == 'gvn':
        network = NetworkConfig.ddasr()
    else:
        network = NetworkConfig.ddasr_s()
    if args.channels:
        network = network.withChanges(channels=args.channels)

    scenes = load_scenes(args.data, to_luminance=rgb_to_y)
    records = list(tqdm(build_patches(scenes, config.task, config.patch,
                                      config.patch_stride),
                        desc='Patches'))
    logger.info(f'{len(records)} samples from {len(scenes)} scenes; '
                f'network {network.toText()!r}; training {config}.')
    dataset = SampleDataset(records, config.seed, config.flip,
                            config.rotate)
    state = ModelState.create(network, seed=config.seed,
                              device=get_device(args.device))
    state, log = train(state, dataset, config, out_dir=out_dir)
    tqdm.write(f'Finished {state.step} steps, final loss '
               f'{log.records[-1]["loss"]:.5f}.')


def _prediction_pairs(pred_path, gt_path):
    gt_dirs = {path.name: path for path in scene_dirs(gt_path)}
    pairs = []
    for pred_dir in scene_dirs(pred_path):
        gt_dir = gt_dirs.get(pred_dir.name)
        if gt_dir is None and len(gt_dirs) == 1:
            gt_dir = next(iter(gt_dirs.values()))
        if gt_dir is None:
            raise SceneFormatError(f'No ground truth for scene '
                                   f'"{pred_dir.name}".')
        pairs.append((pred_dir, gt_dir))
    return pairs


def cmd_eval(args):
    task = TASKS[args.task]
    items = []
    for pred_dir, gt_dir in _prediction_pairs(args.pred, args.gt):
        pred, _ = read_luminance(pred_dir)
        gt, _ = read_luminance(gt_dir)
        if gt.U > task.A_out:
            gt = center_crop_angular(gt, task.A_out)
        items.append((pred_dir.name, pred, gt))
    report = evaluate_scenes(items, task, model_id=args.model_id,
                             workers=args.workers)
    text = report.toText()
    tqdm.write(text)
    if args.out:
        Path(args.out).write_text(text)


def _pfm_pairs(pred_path, gt_path):
    pred_path, gt_path = Path(pred_path), Path(gt_path)
    if pred_path.is_file():
        return [(pred_path.stem, pred_path, gt_path)]
    return [(path.stem, path, gt_path / path.name)
            for path in sorted(pred_path.glob('*.pfm'))]


def cmd_depth_eval(args):
    rows = []
    for name, pred_file, gt_file in _pfm_pairs(args.pred, args.gt):
        result = evaluate_disparity(read_pfm(pred_file), read_pfm(gt_file),
                                    args.tau_bp1, args.tau_bp7)
        rows.append([name, result['BP1'], result['BP7'], result['MSEx100']])
    if not rows:
        raise SceneFormatError(f'No PFM files found at "{args.pred}".')
    if len(rows) > 1:
        rows.append(['mean'] + list(np.mean([row[1:] for row in rows],
                                            axis=0)))
    tqdm.write(tabulate(rows, headers=['scene', 'BP1', 'BP7', 'MSEx100'],
                        floatfmt='.3f'))


def cmd_visuals(args):
    pred, _ = read_luminance(args.pred)
    gt, _ = read_luminance(args.gt)
    if gt.U > pred.U:
        gt = center_crop_angular(gt, pred.U)
    visuals = emit_visuals(pred, gt, args.out, scanline=args.scanline)
    tqdm.write(f'Wrote {", ".join(str(p) for p in visuals.paths.values())}.')


def build_parser():
    parser = argparse.ArgumentParser(
        prog='ddasr', description='Light field angular super-resolution.',
        formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument('--device', action='store', default=None,
                        help='Torch device (default from variables.cfg).')
    sub = parser.add_subparsers(dest='command', required=True)

    convert = sub.add_parser('convert', help='Convert between view and '
                             'MacPI layouts.')
    convert.add_argument('--in', dest='input', required=True)
    convert.add_argument('--out', required=True)
    convert.add_argument('--to', choices=('macpi', 'sai'), default='macpi')
    convert.set_defaults(func=cmd_convert)

    synth = sub.add_parser('synth', help='Write a constant-disparity scene.')
    synth.add_argument('--out', required=True)
    synth.add_argument('--kind', choices=TEXTURE_KINDS, default='noise')
    synth.add_argument('--disparity', type=float, default=1.0)
    synth.add_argument('--views', type=int, default=9)
    synth.add_argument('--size', type=int, nargs=2, default=(64, 64),
                       metavar=('H', 'W'))
    synth.add_argument('--seed', type=int, default=0)
    synth.set_defaults(func=cmd_synth)

    infer = sub.add_parser('infer', help='Super-resolve one scene.')
    infer.add_argument('--in', dest='input', required=True)
    infer.add_argument('--ckpt', required=True)
    infer.add_argument('--out', required=True)
    infer.add_argument('--color', action='store_true',
                       help='Write RGB views with nearest-view chroma.')
    infer.set_defaults(func=cmd_infer)

    btas = sub.add_parser('btas', help='Block traversal super-resolution.')
    btas.add_argument('--in', dest='input', required=True)
    btas.add_argument('--ckpt', required=True)
    btas.add_argument('--grid', default='5x5')
    btas.add_argument('--target', default='9x9')
    btas.add_argument('--out', required=True)
    btas.add_argument('--workers', type=int,
                      default=ddasrlib.default_workers)
    btas.set_defaults(func=cmd_btas)

    training = sub.add_parser('train', help='Train a network.')
    training.add_argument('--task', choices=('gvn', 'lvn'), default=None)
    training.add_argument('--data', default=str(ddasrlib.data_dir),
                          help='Directory of scene directories.')
    training.add_argument('--config', default=None,
                          help='key=value file of training settings.')
    training.add_argument('--network', default=None,
                          help='key=value file of network settings.')
    training.add_argument('--out', default=str(ddasrlib.checkpoint_dir))
    training.add_argument('--deterministic', action='store_true')
    training.add_argument('--seed', type=int, default=None)
    training.add_argument('--epochs', type=int, default=None)
    training.add_argument('--workers', type=int, default=None)
    training.add_argument('--max-steps', dest='max_steps', type=int,
                          default=None)
    training.add_argument('--channels', type=int, default=None)
    training.set_defaults(func=cmd_train)

    evaluate = sub.add_parser('eval', help='PSNR and SSIM of novel views.')
    evaluate.add_argument('--pred', required=True)
    evaluate.add_argument('--gt', required=True)
    evaluate.add_argument('--task', choices=sorted(TASKS), default='2to7')
    evaluate.add_argument('--model-id', dest='model_id', default='')
    evaluate.add_argument('--out', default=None)
    evaluate.add_argument('--workers', type=int,
                          default=ddasrlib.default_workers)
    evaluate.set_defaults(func=cmd_eval)

    depth = sub.add_parser('depth-eval', help='BP1, BP7 and MSEx100 of '
                           'PFM disparity maps.')
    depth.add_argument('--pred', required=True)
    depth.add_argument('--gt', required=True)
    depth.add_argument('--tau-bp1', dest='tau_bp1', type=float,
                       default=BP1_THRESHOLD)
    depth.add_argument('--tau-bp7', dest='tau_bp7', type=float,
                       default=BP7_THRESHOLD)
    depth.set_defaults(func=cmd_depth_eval)

    visuals = sub.add_parser('visuals', help='Center view, error map and '
                             'EPI images.')
    visuals.add_argument('--pred', required=True)
    visuals.add_argument('--gt', required=True)
    visuals.add_argument('--out', default=str(ddasrlib.output_dir / 'visuals'))
    visuals.add_argument('--scanline', type=int, nargs=2, default=None,
                         metavar=('H', 'W'))
    visuals.set_defaults(func=cmd_visuals)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (Error, FileNotFoundError) as err:
        message = err.message if isinstance(err, Error) else str(err)
        logger.error(message)
        tqdm.write(f'ddasr {args.command}: {message}', file=sys.stderr)
        return 1
    finally:
        for log in (logger, logging.getLogger('ddasrlib')):
            for handler in list(log.handlers):
                if isinstance(handler, logging.FileHandler):
                    log.removeHandler(handler)
                    handler.close()
    return 0


if __name__ == '__main__':
    sys.exit(main())
