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
import math

import numpy as np
import pytest

import irsn

TINY = {
    "model.input": "32x32",
    "model.dfe.channels": [8, 8, 8],
    "model.dfe.strides": [2, 2, 2],
    "model.gfe.dim": 16,
    "model.head_hidden": 32,
    "model.num_classes": 3,
    "train.epochs": 2,
    "train.batch_size": 8,
}


@pytest.fixture(scope="module")
def spec():
    s = irsn.DatasetSpec()
    s.num_classes = 3
    s.train_per_class = 8
    s.val_per_class = 2
    s.test_per_class = 4
    s.height = 32
    s.width = 32
    return s


@pytest.fixture(scope="module")
def splits(spec):
    return {name: irsn.generate_split(spec, name) for name in ("train", "val", "test")}


def test_generated_samples(spec, splits):
    train = splits["train"]
    assert len(train) == 24
    s = train[0]
    assert s.image.shape == (3, 32, 32)
    assert s.image.dtype == np.float32
    assert set(s.masks) == set(irsn.ITEMS)
    assert all(m.shape == (32, 32) and set(np.unique(m)) <= {0, 1} for m in s.masks.values())
    again = irsn.generate_split(spec, "train")
    assert np.array_equal(again[5].image, train[5].image)
    assert len(spec.class_names()) == 3


def test_dataset_on_disk(spec, splits, tmp_path):
    n = irsn.generate_dataset(spec, tmp_path)
    assert n == 42
    loaded = irsn.load_split(tmp_path, "test")
    assert [s.id for s in loaded] == [s.id for s in splits["test"]]
    assert np.array_equal(loaded[0].image, splits["test"][0].image)
    assert irsn.read_dataset_spec(tmp_path).test_per_class == 4
    with pytest.raises(irsn.IoError):
        irsn.load_split(tmp_path / "missing", "test")


def test_ops():
    d = np.random.default_rng(0).normal(size=(2, 4, 3, 3)).astype(np.float32)
    assert np.array_equal(irsn.item_region_pool(d, np.ones((2, 1, 3, 3), np.float32)), d)
    assert not irsn.item_region_pool(d, np.zeros((2, 1, 3, 3), np.float32)).any()
    pooled = irsn.adaptive_avg_pool2d(d, 1, 1)
    assert pooled.shape == (2, 4, 1, 1)
    assert np.allclose(pooled[..., 0, 0], d.mean(axis=(2, 3)), atol=1e-6)
    assert irsn.cross_entropy_label_smooth(np.zeros((1, 2), np.float32), [0], 0.1) == pytest.approx(0.693147, abs=1e-6)
    assert irsn.cross_entropy_label_smooth(np.zeros((1, 5), np.float32), [3], 0.1) == pytest.approx(math.log(5), abs=1e-6)
    mask = np.zeros((4, 4), np.uint8)
    mask[:2, :2] = 1
    assert np.array_equal(irsn.downsample_mask(mask, 2, 2), [[1, 0], [0, 0]])
    with pytest.raises(irsn.ShapeError):
        irsn.item_region_pool(d, np.ones((2, 1, 2, 2), np.float32))


def test_config_errors():
    with pytest.raises(irsn.ConfigError):
        irsn.Model({"model.colour": 3})
    with pytest.raises(ValueError):
        irsn.Model({"model.num_classes": 0})
    assert "train.epochs" in irsn.config_keys()
    assert irsn.default_config()["train.epochs"] == "20"


def test_train_evaluate_and_checkpoint(splits, tmp_path):
    seen = []
    result = irsn.train(TINY, splits["train"], splits["val"], on_epoch=seen.append)
    assert [e.epoch for e in seen] == [1, 2]
    assert result["metrics_csv"].startswith("epoch,train_loss,val_accuracy")
    model = result["model"]
    assert model.num_classes == 3

    report = irsn.evaluate(model, splits["test"])
    assert report["total"] == 12
    assert report["confusion"].sum() == 12
    assert report["accuracy"] == pytest.approx(report["correct"] / 12)
    logits = model.logits(splits["test"])
    assert logits.shape == (12, 3)
    assert list(logits.argmax(axis=1)) == report["predictions"] == model.predict(splits["test"])

    again = irsn.train(TINY, splits["train"], splits["val"])["model"]
    assert again.to_bytes() == model.to_bytes()

    path = tmp_path / "model.ckpt"
    model.save(path)
    loaded = irsn.Model.load(path)
    assert np.array_equal(loaded.logits(splits["test"]), logits)
    with pytest.raises(irsn.CheckpointError):
        irsn.Model.from_bytes(b"not a checkpoint")

    cam = irsn.grad_cam(model, splits["test"][0], 0)
    assert cam.shape == (32, 32)
    assert cam.min() >= 0.0 and cam.max() <= 1.0
    baseline = irsn.train({**TINY, "model.use_irp": False}, splits["train"], splits["val"])["model"]
    diff = irsn.grad_cam_diff(model, baseline, splits["test"][0], 0)
    assert diff.shape == (32, 32)
    assert not irsn.grad_cam_diff(model, model, splits["test"][0], 0).any()


def test_numerical_error(splits):
    with pytest.raises(irsn.NumericalError):
        irsn.train({**TINY, "train.learning_rate": 1e6, "train.epochs": 3}, splits["train"], splits["val"])
