# SPDX-License-Identifier: Apache-2.0
# Copyright 2026 The CacheShield Authors
"""Cache side-channel attack detection from per-process LLC miss counts."""

from ._cacheshield import (
    CacheShieldError,
    Detector,
    DetectorConfig,
    counter_dataset,
    counter_names,
    evaluate_corpus,
    far_curve,
    first_alarm,
    info_gain,
    min_expected_detection_time,
    monitor_trace,
    rank,
    read_dataset,
    read_trace,
    relief,
    simulate,
    sweep,
    threshold_for,
    write_trace,
)

__all__ = [
    "CacheShieldError",
    "Detector",
    "DetectorConfig",
    "counter_dataset",
    "counter_names",
    "evaluate_corpus",
    "far_curve",
    "first_alarm",
    "info_gain",
    "min_expected_detection_time",
    "monitor_trace",
    "rank",
    "read_dataset",
    "read_trace",
    "relief",
    "simulate",
    "sweep",
    "threshold_for",
    "write_trace",
]
