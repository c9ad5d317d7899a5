#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Created on Mon Mar  4 10:12:31 2024

@author: ddasr

Module to contain custom exceptions.
"""


class Error(Exception):
    """Base class for exceptions for this module."""

    def __init__(self, message=None):
        super().__init__(message)
        self.message = message


class ConfigurationError(Error):
    """Error to raise when a configuration or key=value file is malformed or
    contains keys that are not understood.

    """

    pass


# Errors relating to lightfield.LightField, MacPI and EPI objects.
class LightFieldError(Error):
    """Errors relating to light field data and its layouts."""

    pass


class LightFieldShapeError(LightFieldError):
    """Error to raise when an array does not have the shape a layout
    requires, e.g. a non-square angular grid given to a MacPI transform, or
    MacPI dimensions not divisible by the angular size.

    """

    pass


class LightFieldRangeError(LightFieldError):
    """Error to raise when luminance samples fall outside [0, 1]."""

    pass


class IndexOutOfRangeError(LightFieldError):
    """Error to raise when an angular or spatial index (or a requested
    sampling/cropping size) lies outside the light field.

    """

    pass


class SceneFormatError(LightFieldError):
    """Error to raise when a scene directory does not follow the
    `view_{u:02d}_{v:02d}.png` + `scene.meta` format.

    """

    pass


# Errors relating to the disentangling feature extractors.
class ExtractorError(Error):
    """Errors relating to convolution specifications and extractors."""

    pass


class LayoutError(ExtractorError):
    """Error to raise when a feature map does not match the layout an
    extractor expects (rows or columns not divisible by A, etc.).

    """

    pass


# Errors relating to network.NetworkConfig and DDASR models.
class NetworkConfigError(Error):
    """Error to raise when a network configuration is inconsistent, or an
    input does not match it.

    """

    pass


# Errors relating to checkpoint files.
class CheckpointError(Error):
    """Errors relating to reading or writing checkpoint files."""

    pass


class CheckpointVersionError(CheckpointError):
    """Error to raise when a checkpoint has an unknown format version."""

    pass


class CheckpointIntegrityError(CheckpointError):
    """Error to raise when a checkpoint archive is unreadable or its stored
    digest does not match its contents.

    """

    pass


class CheckpointShapeError(CheckpointError):
    """Error to raise when a stored tensor does not have the shape the
    configuration requires.

    """

    pass


class CheckpointKeyError(CheckpointError):
    """Error to raise when a checkpoint holds unknown keys, or lacks keys the
    configuration requires.

    """

    pass


# Errors relating to training.
class TrainingError(Error):
    """Errors relating to the training harness."""

    pass


class DatasetError(TrainingError):
    """Error to raise when scenes are too small for the requested patches or
    have too few views for the requested task.

    """

    pass


class NonFiniteLossError(TrainingError):
    """Error to raise when the training loss stops being finite.

    The message carries the step, learning rate and batch provenance.

    """

    pass


# Errors relating to the block traversal strategy.
class ScheduleError(Error):
    """Error to raise when a block schedule is requested for an unsupported
    or inconsistent combination of grid sizes.

    """

    pass


class BlockOutputError(ScheduleError):
    """Error to raise when a local view network returns a block of the wrong
    shape.

    """

    pass


# Errors relating to evaluation.
class MetricError(Error):
    """Errors relating to quality and disparity metrics."""

    pass


class ShapeMismatchError(MetricError):
    """Error to raise when two compared arrays do not share a shape, or an
    image is too small for the metric window.

    """

    pass


class EmptyMaskError(MetricError):
    """Error to raise when a disparity validity mask selects no pixels."""

    pass
