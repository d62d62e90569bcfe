"""Experiments: Brunn-Minkowski deficits, concavity index, level sets."""

from .brunn_minkowski import bm_equality_probe, bm_sweep
from .concavity import Region, body_concavity_experiment, concavity_index
from .level_sets import (homothetic_levels_experiment, level_scaling_experiment,
                         level_set_extract, radiality_test, three_levels_experiment)

__all__ = ["bm_sweep", "bm_equality_probe", "Region", "concavity_index",
           "body_concavity_experiment", "level_set_extract", "level_scaling_experiment",
           "homothetic_levels_experiment", "three_levels_experiment", "radiality_test"]
