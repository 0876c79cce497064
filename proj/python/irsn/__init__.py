# Copyright 2026 The IRSN Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Item region-based style classification on synthetic outfits.

Thin re-export of the compiled core. Config dictionaries use the same dotted
keys as the ``irsn`` command-line tool (see ``config_keys()``).
"""

from ._core import (
    ITEMS,
    CheckpointError,
    ConfigError,
    DatasetSpec,
    EpochMetrics,
    IoError,
    Model,
    NumericalError,
    Sample,
    ShapeError,
    adaptive_avg_pool2d,
    config_keys,
    cross_entropy_label_smooth,
    default_config,
    downsample_mask,
    evaluate,
    generate_dataset,
    generate_split,
    grad_cam,
    grad_cam_diff,
    item_region_pool,
    load_split,
    read_dataset_spec,
    train,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
