/* Copyright 2026 The SparsestMax Authors. All Rights Reserved.

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

#include <cmath>
#include <sstream>

#include "doctest.h"
#include "sparsestmax/error.hpp"
#include "sparsestmax/toy_trainer.hpp"
#include "test_util.hpp"

using namespace ssn;

namespace {

const TrainResult& default_run() {
  static const TrainResult result = [] {
    const ToyConfig cfg;
    return train(cfg.model, cfg.optimizer, make_dataset(cfg));
  }();
  return result;
}

std::string csv_of(const TrajectoryLog& log) {
  std::ostringstream out;
  write_trajectory_csv(out, log);
  return out.str();
}

ToyConfig small_config() {
  ToyConfig cfg;
  cfg.model.layer_widths = {4, 4};
  cfg.model.ssn_layer_count = 2;
  cfg.model.batch_size = 16;
  cfg.data.n_samples = 64;
  cfg.optimizer.epochs = 5;
  return cfg;
}

std::vector<double> sample(const Dataset& d, std::size_t i) {
  const std::size_t per = d.images.size() / d.labels.size();
  auto all = d.images.data();
  return {all.begin() + static_cast<long>(i * per), all.begin() + static_cast<long>((i + 1) * per)};
}

}  // namespace

TEST_CASE("synthetic dataset is reproducible") {
  const Dataset a = make_synthetic_dataset(3, 40, {1, 1, 4, 4}, 4, 1.0);
  const Dataset b = make_synthetic_dataset(3, 40, {1, 1, 4, 4}, 4, 1.0);
  const Dataset c = make_synthetic_dataset(4, 40, {1, 1, 4, 4}, 4, 1.0);
  CHECK(std::equal(a.images.data().begin(), a.images.data().end(), b.images.data().begin()));
  CHECK(a.labels == b.labels);
  CHECK_FALSE(std::equal(a.images.data().begin(), a.images.data().end(), c.images.data().begin()));
  CHECK_THROWS_AS(make_synthetic_dataset(3, 40, {1, 1, 4, 4}, 1, 1.0), InvalidInput);
}

TEST_CASE("zero-variance clusters identify their labels") {
  const Dataset d = make_synthetic_dataset(5, 30, {1, 2, 3, 3}, 3, 0.0);
  for (std::size_t i = 0; i < 30; ++i)
    for (std::size_t j = 0; j < 30; ++j) {
      CHECK((sample(d, i) == sample(d, j)) == (d.labels[i] == d.labels[j]));
    }
}

TEST_CASE("well separated clusters are linearly separable") {
  // Nearest-centroid is a linear rule for two classes.
  const Dataset d = make_synthetic_dataset(6, 200, {1, 1, 8, 8}, 2, 0.5);
  const std::size_t per = 64;
  std::vector<double> centroid(2 * per, 0.0);
  std::vector<double> count(2, 0.0);
  for (std::size_t i = 0; i < 200; ++i) {
    const auto s = sample(d, i);
    for (std::size_t j = 0; j < per; ++j) centroid[d.labels[i] * per + j] += s[j];
    count[d.labels[i]] += 1.0;
  }
  for (std::size_t j = 0; j < 2 * per; ++j) centroid[j] /= count[j / per];
  std::size_t correct = 0;
  for (std::size_t i = 0; i < 200; ++i) {
    const auto s = sample(d, i);
    double d0 = 0.0, d1 = 0.0;
    for (std::size_t j = 0; j < per; ++j) {
      d0 += (s[j] - centroid[j]) * (s[j] - centroid[j]);
      d1 += (s[j] - centroid[per + j]) * (s[j] - centroid[per + j]);
    }
    correct += (d1 < d0 ? 1u : 0u) == d.labels[i] ? 1 : 0;
  }
  CHECK(static_cast<double>(correct) / 200.0 >= 0.99);
}

TEST_CASE("default run converges to one-hot gates") {
  const TrainResult& res = default_run();
  const ToyConfig cfg;
  const std::size_t total = total_training_steps(cfg.model, cfg.optimizer, make_dataset(cfg));
  CHECK(total == 100);
  REQUIRE(res.log.rows.size() == total + 1);
  const TrajectoryRow& last = res.log.rows.back();
  CHECK_FALSE(last.updated);
  CHECK(last.layers.size() >= 4);
  for (const GateRecord& g : last.layers) {
    CHECK(is_one_hot(g.p));
    CHECK(is_one_hot(g.pp));
    CHECK(g.frozen_mean);
    CHECK(g.frozen_var);
  }
  CHECK(last.loss < res.log.rows.front().loss);
  CHECK(res.final_accuracy > 0.9);
  CHECK(res.final_radius == SimplexGeometry::of(3).r_circum);
}

TEST_CASE("training log invariants") {
  const TrajectoryLog& log = default_run().log;
  const double rc = SimplexGeometry::of(3).r_circum;
  const std::size_t layers = log.rows.front().layers.size();
  for (std::size_t t = 0; t < log.rows.size(); ++t) {
    const TrajectoryRow& row = log.rows[t];
    CHECK(row.step == t);
    CHECK(row.r == std::min(rc, static_cast<double>(t) / 100.0));
    if (t > 0) CHECK(row.r >= log.rows[t - 1].r);
    for (std::size_t l = 0; l < layers; ++l) {
      const GateRecord& g = row.layers[l];
      if (t > 0) {
        const GateRecord& prev = log.rows[t - 1].layers[l];
        if (prev.frozen_mean) {
          CHECK(g.frozen_mean);
          CHECK(argmax_index(g.p) == argmax_index(prev.p));
        }
        if (prev.frozen_var) {
          CHECK(g.frozen_var);
          CHECK(argmax_index(g.pp) == argmax_index(prev.pp));
        }
        for (std::size_t k = 0; k < g.p.size(); ++k) {
          if (prev.p[k] == 0.0 && !prev.frozen_mean) CHECK(g.p[k] == 0.0);
          if (prev.pp[k] == 0.0 && !prev.frozen_var) CHECK(g.pp[k] == 0.0);
        }
      }
      if (g.frozen_mean && row.updated) CHECK(testutil::max_abs(g.dz_mean) == 0.0);
      if (g.frozen_var && row.updated) CHECK(testutil::max_abs(g.dz_var) == 0.0);
      for (std::size_t k = 0; k < g.p.size(); ++k) {
        if (g.p[k] == 0.0 && row.updated) CHECK(g.raw_dz_mean[k] == 0.0);
        if (g.pp[k] == 0.0 && row.updated) CHECK(g.raw_dz_var[k] == 0.0);
      }
      if (g.stage_mean == Stage::Circle && row.updated) CHECK(std::abs(g.radial_mean) < 1e-8);
      if (g.stage_var == Stage::Circle && row.updated) CHECK(std::abs(g.radial_var) < 1e-8);
    }
  }
}

TEST_CASE("identical seeds give identical logs") {
  const ToyConfig cfg = small_config();
  const Dataset data = make_dataset(cfg);
  const TrainResult a = train(cfg.model, cfg.optimizer, data);
  const TrainResult b = train(cfg.model, cfg.optimizer, data);
  CHECK(csv_of(a.log) == csv_of(b.log));
  for (std::size_t t = 0; t < a.log.rows.size(); ++t) CHECK(a.log.rows[t].loss == b.log.rows[t].loss);

  ToyConfig other = cfg;
  other.model.seed = 99;
  CHECK(csv_of(train(other.model, other.optimizer, make_dataset(other)).log) != csv_of(a.log));
}

TEST_CASE("trajectory csv layout") {
  const std::string csv = csv_of(default_run().log);
  const std::string header = csv.substr(0, csv.find('\n'));
  CHECK(header.rfind("step,r,loss,L0_p_IN,L0_p_BN,L0_p_LN,L0_pp_IN,L0_pp_BN,L0_pp_LN,L0_frozen_mean,L0_frozen_var,L0_stage,L1_p_IN", 0) == 0);
  std::size_t lines = 0;
  for (char c : csv) lines += c == '\n' ? 1 : 0;
  CHECK(lines == 102);
}

TEST_CASE("selection histogram") {
  const SelectionHistogram h = selection_histogram(default_run().log);
  std::size_t mean_total = 0, var_total = 0;
  for (const auto& [n, c] : h.mean) mean_total += c;
  for (const auto& [n, c] : h.var) var_total += c;
  CHECK(mean_total == 4);
  CHECK(var_total == 4);
  CHECK(h.mean.size() == 3);
  CHECK(h.var.size() == 3);

  TrajectoryLog single;
  single.omega = {Normalizer::IN, Normalizer::BN, Normalizer::LN};
  TrajectoryRow row;
  GateRecord g;
  g.p = {0, 1, 0};
  g.pp = {0, 0, 1};
  row.layers.push_back(g);
  single.rows.push_back(row);
  const SelectionHistogram s = selection_histogram(single);
  CHECK(s.mean.at(Normalizer::BN) == 1);
  CHECK(s.var.at(Normalizer::LN) == 1);
  CHECK(s.mean.at(Normalizer::LN) == 0);

  single.rows.back().layers.back().p = {0.5, 0.5, 0};
  CHECK_THROWS_AS(selection_histogram(single), NotConverged);
}

TEST_CASE("schedule experiment runs match direct training") {
  const ToyConfig cfg = small_config();
  const Dataset data = make_dataset(cfg);
  const std::size_t total = total_training_steps(cfg.model, cfg.optimizer, data);
  const auto acc = schedule_insensitivity_experiment(cfg.model, cfg.optimizer, data, {total / 2});
  REQUIRE(acc.size() == 1);
  OptimizerConfig opt = cfg.optimizer;
  const SimplexGeometry g = SimplexGeometry::of(3);
  opt.schedule = RadiusSchedule::through(total, g, total / 2, g.r_inscribed);
  CHECK(acc[0] == train(cfg.model, opt, data).final_accuracy);
  CHECK_THROWS_AS(schedule_insensitivity_experiment(cfg.model, cfg.optimizer, data, {total}),
                  InvalidInput);
}

TEST_CASE("divergence reports the failing step") {
  ToyConfig cfg = small_config();
  cfg.optimizer.lr = 1e12;
  bool thrown = false;
  try {
    train(cfg.model, cfg.optimizer, make_dataset(cfg));
  } catch (const TrainingFailed& e) {
    thrown = true;
    CHECK(e.step() > 0);
  }
  CHECK(thrown);
}

TEST_CASE("config validation and json") {
  ToyConfig cfg;
  cfg.optimizer.lr = 0.02;
  cfg.model.omega = {Normalizer::IN, Normalizer::BN, Normalizer::LN, Normalizer::GN};
  const ToyConfig back = toy_config_from_json(toy_config_to_json(cfg));
  CHECK(back.optimizer.lr == 0.02);
  CHECK(back.model.omega == cfg.model.omega);
  CHECK(back.data.cluster_std == cfg.data.cluster_std);
  CHECK_THROWS_AS(toy_config_from_json(R"({"optimizer": {"lr": -1}})"), InvalidInput);
  CHECK_THROWS_AS(toy_config_from_json(R"({"optimizer": {"momentum": 1.0}})"), InvalidInput);
  CHECK_THROWS_AS(toy_config_from_json(R"({"model": {"layer_widths": []}})"), InvalidInput);
  CHECK_THROWS_AS(toy_config_from_json("{"), InvalidInput);
}

TEST_CASE("four-normalizer set with group normalization trains") {
  ToyConfig cfg = small_config();
  cfg.model.omega = {Normalizer::IN, Normalizer::BN, Normalizer::LN, Normalizer::GN};
  const TrainResult res = train(cfg.model, cfg.optimizer, make_dataset(cfg));
  for (const GateRecord& g : res.log.rows.back().layers) {
    CHECK(is_one_hot(g.p));
    CHECK(is_one_hot(g.pp));
  }
}
