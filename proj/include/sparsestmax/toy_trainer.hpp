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

// Desk-scale training harness: a conv -> SSN -> ReLU stack with a linear head
// over the flattened features, trained on
// synthetic Gaussian-cluster images while the SparsestMax radius grows.

#ifndef SPARSESTMAX_TOY_TRAINER_HPP_
#define SPARSESTMAX_TOY_TRAINER_HPP_

#include <cstddef>
#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "sparsestmax/conv.hpp"
#include "sparsestmax/simplex.hpp"
#include "sparsestmax/ssn_layer.hpp"
#include "sparsestmax/tensor.hpp"

namespace ssn {

struct ToyModelConfig {
  std::vector<std::size_t> layer_widths{8, 8, 8, 8};
  std::size_t ssn_layer_count = 4;
  Omega omega{Normalizer::IN, Normalizer::BN, Normalizer::LN};
  std::size_t batch_size = 32;
  std::size_t channels = 1;
  std::size_t height = 8;
  std::size_t width = 8;
  std::uint64_t seed = 7;
  std::size_t gn_groups = 2;
  double eps = 1e-5;
  double bn_momentum = 0.1;

  void validate() const;
  LayerConfig layer_config() const;
};

struct OptimizerConfig {
  double lr = 0.05;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  double z_lr_ratio = 0.1;
  double z_init = 1.0;
  std::size_t epochs = 10;
  // total_steps == 0 means "epochs x batches per epoch"; clamp_at is always
  // reset to the circumradius of the normalizer simplex.
  RadiusSchedule schedule{0.0, 1.0, 0, 1.0, 0, 0.0};

  void validate() const;
};

struct DataConfig {
  std::size_t n_samples = 320;
  std::size_t n_classes = 4;
  double cluster_std = 2.0;
};

struct Dataset {
  Tensor4 images;
  std::vector<std::size_t> labels;
  std::size_t n_classes = 0;
};

// Class k draws a mean image from N(0, 1); samples are mean + cluster_std *
// N(0, 1) noise. Sample i belongs to class i mod n_classes.
Dataset make_synthetic_dataset(std::uint64_t seed, std::size_t n_samples, Shape4 dims,
                               std::size_t n_classes, double cluster_std = 1.0);

struct GateRecord {
  Vector p;
  Vector pp;
  bool frozen_mean = false;
  bool frozen_var = false;
  Stage stage_mean = Stage::Sparsemax;
  Stage stage_var = Stage::Sparsemax;
  // Control-parameter gradients as applied (zero once frozen) and as produced
  // by the projection before the freeze mask.
  Vector dz_mean;
  Vector dz_var;
  Vector raw_dz_mean;
  Vector raw_dz_var;
  // Component of the raw gradient along the unit sparse direction; only
  // meaningful while the gate sits on the sphere (Circle stage).
  double radial_mean = 0.0;
  double radial_var = 0.0;
};

struct TrajectoryRow {
  std::size_t step = 0;
  double r = 0.0;
  double loss = 0.0;
  bool updated = true;  // false for the final evaluation-only row
  std::vector<GateRecord> layers;
};

struct TrajectoryLog {
  Omega omega;
  std::vector<TrajectoryRow> rows;
};

struct ToyNetwork {
  std::vector<ConvWeights> convs;
  std::vector<SsnParams> norms;
  std::vector<double> fc_weight;  // [classes][C*H*W] over the flattened last layer
  std::vector<double> fc_bias;
};

struct TrainResult {
  TrajectoryLog log;
  ToyNetwork network;
  double final_accuracy = 0.0;
  double final_radius = 0.0;
};

// Rows 0..T-1 are training steps; row T is a forward-only evaluation at the
// final radius. Throws TrainingFailed on a non-finite loss.
TrainResult train(const ToyModelConfig& model, const OptimizerConfig& opt,
                  const Dataset& data);

// Eval-mode classification accuracy of `network` on `data` at radius r.
double evaluate_accuracy(const ToyNetwork& network, const ToyModelConfig& model,
                         const Dataset& data, double r);

struct SelectionHistogram {
  std::map<Normalizer, std::size_t> mean;
  std::map<Normalizer, std::size_t> var;
};

// Counts of layers selecting each normalizer in the final row. Throws
// NotConverged if any ratio there is not one-hot.
SelectionHistogram selection_histogram(const TrajectoryLog& log);

// One training run per entry of ri_steps; each schedule reaches the inscribed
// radius at that step and the circumradius at the last step. Returns the final
// train accuracy of each run.
std::vector<double> schedule_insensitivity_experiment(const ToyModelConfig& model,
                                                      const OptimizerConfig& opt,
                                                      const Dataset& data,
                                                      const std::vector<std::size_t>& ri_steps);

std::size_t total_training_steps(const ToyModelConfig& model, const OptimizerConfig& opt,
                                 const Dataset& data);

void write_trajectory_csv(std::ostream& out, const TrajectoryLog& log);

struct ToyConfig {
  ToyModelConfig model;
  OptimizerConfig optimizer;
  DataConfig data;
};

ToyConfig toy_config_from_json(const std::string& text);
std::string toy_config_to_json(const ToyConfig& config);

// Synthetic dataset for `config`, seeded with the model seed.
Dataset make_dataset(const ToyConfig& config);

}  // namespace ssn

#endif  // SPARSESTMAX_TOY_TRAINER_HPP_
