/* Copyright 2026 The IRSN Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <doctest.h>

#include "irsn/config.hpp"
#include "irsn/train.hpp"

using namespace irsn;

TEST_CASE("key = value parsing with comments and blanks") {
  const KeyValueConfig c = KeyValueConfig::parse("# header\n\nmodel.aap = 5x3  # tail\n train.epochs=7\r\n");
  CHECK(c.get("model.aap", "") == "5x3");
  CHECK(c.get_int("train.epochs", 0) == 7);
  CHECK(c.get_int("missing", 3) == 3);
  CHECK(c.serialize() == "model.aap = 5x3\ntrain.epochs = 7\n");
  CHECK(KeyValueConfig::parse(c.serialize()).entries() == c.entries());
}

TEST_CASE("malformed lines and values raise ConfigError") {
  CHECK_THROWS_AS(KeyValueConfig::parse("just words\n"), ConfigError);
  CHECK_THROWS_AS(KeyValueConfig::parse(" = 3\n"), ConfigError);
  KeyValueConfig c = KeyValueConfig::parse("a = x\nb = 1.5\nc = maybe\n");
  CHECK_THROWS_AS(c.get_int("a", 0), ConfigError);
  CHECK_THROWS_AS(c.get_int("b", 0), ConfigError);
  CHECK(c.get_double("b", 0) == 1.5);
  CHECK_THROWS_AS(c.get_bool("c", false), ConfigError);
  CHECK_THROWS_AS(c.apply_override("novalue"), ConfigError);
}

TEST_CASE("overrides win and unknown keys are rejected") {
  KeyValueConfig c = KeyValueConfig::parse("train.epochs = 3\n");
  c.apply_override("train.epochs=9");
  c.apply_override(" model.use_gfe = false ");
  CHECK(c.get_int("train.epochs", 0) == 9);
  CHECK_FALSE(c.get_bool("model.use_gfe", true));
  CHECK_NOTHROW(c.require_known(known_config_keys()));
  c.set("train.epoch", "1");
  CHECK_THROWS_WITH_AS(c.require_known(known_config_keys()), "unknown config key: train.epoch", ConfigError);
}

TEST_CASE("model and training configs round trip through text") {
  TrainConfig t;
  t.epochs = 4;
  t.learning_rate = 0.03f;
  t.seed = 12345678901ull;
  t.model.aap_h = 5;
  t.model.aap_w = 1;
  t.model.fusion = FusionMode::kPlainConcat;
  t.model.use_gfe = false;
  t.model.mask_downsample = MaskDownsample::kNearest;
  t.model.dfe.stages = {{8, 2}, {16, 4}};
  KeyValueConfig kv = train_config_to_kv(t);
  kv.merge(model_config_to_kv(t.model));
  const KeyValueConfig reparsed = KeyValueConfig::parse(kv.serialize());
  const TrainConfig back = train_config_from_kv(reparsed);
  const IrsnConfig m = model_config_from_kv(reparsed);
  CHECK(back.epochs == 4);
  CHECK(back.learning_rate == 0.03f);
  CHECK(back.seed == 12345678901ull);
  CHECK(m.aap_h == 5);
  CHECK(m.aap_w == 1);
  CHECK(m.fusion == FusionMode::kPlainConcat);
  CHECK_FALSE(m.use_gfe);
  CHECK(m.mask_downsample == MaskDownsample::kNearest);
  REQUIRE(m.dfe.stages.size() == 2);
  CHECK(m.dfe.stages[1].out_channels == 16);
  CHECK(m.dfe.stages[1].stride == 4);
  CHECK(model_config_to_kv(m).serialize() == model_config_to_kv(t.model).serialize());
}

TEST_CASE("bad model values are config errors") {
  CHECK_THROWS_AS(model_config_from_kv(KeyValueConfig::parse("model.aap = 5by3\n")), std::invalid_argument);
  CHECK_THROWS_AS(model_config_from_kv(KeyValueConfig::parse("model.fusion = sum\n")), std::invalid_argument);
  CHECK_THROWS_AS(train_config_from_kv(KeyValueConfig::parse("train.batch_size = 0\n")), std::invalid_argument);
}

TEST_CASE("float formatting round trips") {
  for (float v : {0.1f, 1e-5f, 3.0f, 0.0f, -2.5e7f}) CHECK(std::stof(format_float(v)) == v);
  CHECK(format_float(0.5f) == "0.5");
}
