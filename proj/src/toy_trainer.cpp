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

#include "sparsestmax/toy_trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <json.hpp>

#include "sparsestmax/error.hpp"
#include "sparsestmax/format.hpp"

namespace ssn {

void ToyModelConfig::validate() const {
  if (ssn_layer_count < 1) throw InvalidInput("ssn_layer_count must be >= 1");
  if (layer_widths.size() != ssn_layer_count) {
    throw InvalidInput("layer_widths must list one width per SSN layer");
  }
  for (std::size_t w : layer_widths) {
    if (w == 0) throw InvalidInput("layer widths must be positive");
  }
  if (batch_size == 0 || channels == 0 || height == 0 || width == 0) {
    throw InvalidInput("batch and image dims must be positive");
  }
  validate_omega(omega);
  if (std::find(omega.begin(), omega.end(), Normalizer::GN) != omega.end()) {
    for (std::size_t w : layer_widths) {
      if (gn_groups == 0 || w % gn_groups != 0) {
        throw InvalidInput("layer width " + std::to_string(w) +
                           " is not divisible by gn_groups");
      }
    }
  }
  layer_config().validate();
}

LayerConfig ToyModelConfig::layer_config() const {
  LayerConfig c;
  c.omega = omega;
  c.eps = eps;
  c.gn_groups = gn_groups;
  c.momentum = bn_momentum;
  return c;
}

void OptimizerConfig::validate() const {
  if (!(lr > 0.0)) throw InvalidInput("lr must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw InvalidInput("momentum must lie in [0, 1)");
  if (!(weight_decay >= 0.0)) throw InvalidInput("weight_decay must be >= 0");
  if (!(z_lr_ratio >= 0.0)) throw InvalidInput("z_lr_ratio must be >= 0");
  if (!std::isfinite(z_init)) throw InvalidInput("z_init must be finite");
  if (epochs == 0) throw InvalidInput("epochs must be positive");
  if (schedule.r_start < 0.0 || schedule.r_end < schedule.r_start) {
    throw InvalidInput("radius schedule must be non-decreasing from r_start >= 0");
  }
}

Dataset make_synthetic_dataset(std::uint64_t seed, std::size_t n_samples, Shape4 dims,
                               std::size_t n_classes, double cluster_std) {
  if (n_classes < 2) throw InvalidInput("synthetic dataset needs at least 2 classes");
  if (n_samples == 0) throw InvalidInput("synthetic dataset needs at least one sample");
  if (!(cluster_std >= 0.0)) throw InvalidInput("cluster_std must be >= 0");
  dims.n = n_samples;
  Dataset data;
  data.images = Tensor4(dims);
  data.n_classes = n_classes;
  data.labels.resize(n_samples);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t per_sample = dims.c * dims.plane();
  std::vector<double> means(n_classes * per_sample);
  for (double& v : means) v = normal(rng);

  auto out = data.images.data();
  for (std::size_t i = 0; i < n_samples; ++i) {
    const std::size_t label = i % n_classes;
    data.labels[i] = label;
    for (std::size_t j = 0; j < per_sample; ++j) {
      out[i * per_sample + j] = means[label * per_sample + j] + cluster_std * normal(rng);
    }
  }
  return data;
}

namespace {

void sgd_step(std::vector<double>& value, std::vector<double>& velocity,
              const std::vector<double>& grad, double lr, double momentum,
              double weight_decay) {
  if (velocity.size() != value.size()) velocity.assign(value.size(), 0.0);
  for (std::size_t i = 0; i < value.size(); ++i) {
    velocity[i] = momentum * velocity[i] + grad[i] + weight_decay * value[i];
    value[i] -= lr * velocity[i];
  }
}

ToyNetwork init_network(const ToyModelConfig& model, const OptimizerConfig& opt,
                        std::size_t n_classes) {
  std::mt19937_64 rng(model.seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  ToyNetwork net;
  std::size_t in = model.channels;
  for (std::size_t width : model.layer_widths) {
    ConvWeights w(width, in, 3, 3, /*with_bias=*/false);
    const double scale = std::sqrt(2.0 / static_cast<double>(in * 9));
    for (double& v : w.weight) v = scale * normal(rng);
    net.convs.push_back(std::move(w));
    net.norms.push_back(SsnParams::init(width, model.omega.size(), opt.z_init, model.eps));
    in = width;
  }
  const std::size_t features = in * model.height * model.width;
  net.fc_weight.resize(n_classes * features);
  const double scale = std::sqrt(1.0 / static_cast<double>(features));
  for (double& v : net.fc_weight) v = scale * normal(rng);
  net.fc_bias.assign(n_classes, 0.0);
  return net;
}

Tensor4 gather_batch(const Dataset& data, const std::vector<std::size_t>& order,
                     std::size_t begin, std::size_t count, std::vector<std::size_t>& labels) {
  Shape4 s = data.images.shape();
  s.n = count;
  Tensor4 batch(s);
  const std::size_t per_sample = s.c * s.plane();
  labels.resize(count);
  auto src = data.images.data();
  auto dst = batch.data();
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t idx = order[begin + i];
    labels[i] = data.labels[idx];
    std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(idx * per_sample), per_sample,
                dst.begin() + static_cast<std::ptrdiff_t>(i * per_sample));
  }
  return batch;
}

struct ForwardTrace {
  std::vector<Tensor4> inputs;  // conv inputs per layer
  std::vector<SsnForward> norm;  // SSN forward per layer (y before ReLU)
  std::vector<double> pooled;    // N x (C*H*W), flattened last activation
  std::vector<double> probs;     // N x classes
  double loss = 0.0;
  std::size_t correct = 0;
};

ForwardTrace network_forward(const ToyNetwork& net, const ToyModelConfig& model,
                             const Tensor4& batch, const std::vector<std::size_t>& labels,
                             double r, std::size_t n_classes) {
  const LayerConfig layer = model.layer_config();
  ForwardTrace t;
  Tensor4 h = batch;
  for (std::size_t l = 0; l < net.convs.size(); ++l) {
    t.inputs.push_back(h);
    const Tensor4 a = conv2d(h, net.convs[l], 1);
    t.norm.push_back(ssn_forward(a, net.norms[l], r, layer));
    h = t.norm.back().y;
    for (double& v : h.data()) v = std::max(v, 0.0);
  }
  const Shape4& s = h.shape();
  const std::size_t features = s.c * s.plane();
  t.pooled.assign(h.data().begin(), h.data().end());
  t.probs.assign(s.n * n_classes, 0.0);
  for (std::size_t n = 0; n < s.n; ++n) {
    double* logits = &t.probs[n * n_classes];
    for (std::size_t k = 0; k < n_classes; ++k) {
      double acc = net.fc_bias[k];
      for (std::size_t f = 0; f < features; ++f) {
        acc += net.fc_weight[k * features + f] * t.pooled[n * features + f];
      }
      logits[k] = acc;
    }
    const double m = *std::max_element(logits, logits + n_classes);
    double z = 0.0;
    for (std::size_t k = 0; k < n_classes; ++k) z += std::exp(logits[k] - m);
    const std::size_t best =
        static_cast<std::size_t>(std::max_element(logits, logits + n_classes) - logits);
    if (best == labels[n]) ++t.correct;
    t.loss += -(logits[labels[n]] - m - std::log(z));
    for (std::size_t k = 0; k < n_classes; ++k) logits[k] = std::exp(logits[k] - m) / z;
  }
  t.loss /= static_cast<double>(s.n);
  return t;
}

struct NetworkGradients {
  std::vector<std::vector<double>> conv;
  std::vector<SsnGradients> norm;
  std::vector<double> fc_weight;
  std::vector<double> fc_bias;
};

NetworkGradients network_backward(const ToyNetwork& net, const ForwardTrace& t,
                                  const std::vector<std::size_t>& labels,
                                  std::size_t n_classes) {
  const std::size_t layers = net.convs.size();
  const Shape4 s = t.norm.back().y.shape();
  const double inv_n = 1.0 / static_cast<double>(s.n);
  NetworkGradients g;
  g.conv.resize(layers);
  g.norm.resize(layers);
  g.fc_weight.assign(net.fc_weight.size(), 0.0);
  g.fc_bias.assign(n_classes, 0.0);

  const std::size_t features = s.c * s.plane();
  Tensor4 dh(s);
  auto d_flat = dh.data();
  for (std::size_t n = 0; n < s.n; ++n) {
    for (std::size_t k = 0; k < n_classes; ++k) {
      const double d = (t.probs[n * n_classes + k] - (labels[n] == k ? 1.0 : 0.0)) * inv_n;
      g.fc_bias[k] += d;
      for (std::size_t f = 0; f < features; ++f) {
        g.fc_weight[k * features + f] += d * t.pooled[n * features + f];
        d_flat[n * features + f] += d * net.fc_weight[k * features + f];
      }
    }
  }

  for (std::size_t l = layers; l-- > 0;) {
    const Tensor4& pre_relu = t.norm[l].y;
    auto dv = dh.data();
    auto yv = pre_relu.data();
    for (std::size_t i = 0; i < dv.size(); ++i) {
      if (yv[i] <= 0.0) dv[i] = 0.0;
    }
    g.norm[l] = ssn_backward(t.norm[l].cache, dh);
    ConvGradients cg = conv2d_backward(t.inputs[l], net.convs[l], 1, g.norm[l].dx, l > 0);
    g.conv[l] = std::move(cg.dweight);
    if (l > 0) dh = std::move(cg.dx);
  }
  return g;
}

double radial_component(const ProjectionResult& gate, const Vector& raw_dz) {
  if (gate.stage != Stage::Circle) return 0.0;
  const ProjectionLevel& level = gate.levels.front();
  double dot = 0.0;
  for (std::size_t i = 0; i < raw_dz.size(); ++i) dot += raw_dz[i] * level.direction[i];
  return dot / level.distance;
}

RadiusSchedule resolve_schedule(const OptimizerConfig& opt, std::size_t total,
                                std::size_t k) {
  RadiusSchedule s = opt.schedule;
  if (s.total_steps == 0) s.total_steps = total;
  if (s.total_steps != total) {
    throw InvalidInput("radius schedule spans " + std::to_string(s.total_steps) +
                       " steps but training runs " + std::to_string(total));
  }
  s.clamp_at = SimplexGeometry::of(k).r_circum;
  return s;
}

}  // namespace

std::size_t total_training_steps(const ToyModelConfig& model, const OptimizerConfig& opt,
                                 const Dataset& data) {
  const std::size_t samples = data.images.shape().n;
  const std::size_t per_epoch = samples / model.batch_size;
  if (per_epoch == 0) throw InvalidInput("dataset is smaller than one batch");
  return per_epoch * opt.epochs;
}

double evaluate_accuracy(const ToyNetwork& network, const ToyModelConfig& model,
                         const Dataset& data, double r) {
  ToyNetwork eval = network;
  for (auto& p : eval.norms) p.mode = Mode::Eval;
  const std::size_t samples = data.images.shape().n;
  std::vector<std::size_t> order(samples);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t correct = 0;
  std::vector<std::size_t> labels;
  for (std::size_t begin = 0; begin < samples; begin += model.batch_size) {
    const std::size_t count = std::min(model.batch_size, samples - begin);
    const Tensor4 batch = gather_batch(data, order, begin, count, labels);
    correct += network_forward(eval, model, batch, labels, r, data.n_classes).correct;
  }
  return static_cast<double>(correct) / static_cast<double>(samples);
}

TrainResult train(const ToyModelConfig& model, const OptimizerConfig& opt,
                  const Dataset& data) {
  model.validate();
  opt.validate();
  const Shape4& ds = data.images.shape();
  if (ds.c != model.channels || ds.h != model.height || ds.w != model.width) {
    throw InvalidInput("dataset images are " + ds.str() + ", model expects Nx" +
                       std::to_string(model.channels) + "x" + std::to_string(model.height) +
                       "x" + std::to_string(model.width));
  }
  const std::size_t k = model.omega.size();
  const std::size_t per_epoch = ds.n / model.batch_size;
  const std::size_t total = total_training_steps(model, opt, data);
  const RadiusSchedule schedule = resolve_schedule(opt, total, k);
  const double z_lr = opt.lr * opt.z_lr_ratio;

  TrainResult result;
  result.log.omega = model.omega;
  ToyNetwork& net = result.network;
  net = init_network(model, opt, data.n_classes);
  const std::size_t layers = net.convs.size();

  // Momentum buffers.
  std::vector<std::vector<double>> v_conv(layers), v_gamma(layers), v_beta(layers),
      v_zm(layers), v_zv(layers);
  std::vector<double> v_fcw, v_fcb;

  std::mt19937_64 shuffle_rng(model.seed);
  std::vector<std::size_t> order(ds.n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<std::size_t> labels;

  for (std::size_t step = 0; step <= total; ++step) {
    const std::size_t pos = step % per_epoch;
    if (pos == 0) std::shuffle(order.begin(), order.end(), shuffle_rng);
    const Tensor4 batch =
        gather_batch(data, order, pos * model.batch_size, model.batch_size, labels);
    const double r = schedule_radius(schedule, step);
    const bool update = step < total;

    ForwardTrace trace = network_forward(net, model, batch, labels, r, data.n_classes);
    if (!std::isfinite(trace.loss)) throw TrainingFailed(step, "loss is not finite");

    // Freeze gates whose ratios are one-hot after this forward pass.
    for (std::size_t l = 0; l < layers; ++l) {
      SsnCache& cache = trace.norm[l].cache;
      GateParams& gate = net.norms[l].gate;
      if (is_one_hot(cache.p)) gate.frozen_mean = true;
      if (is_one_hot(cache.pp)) gate.frozen_var = true;
      cache.frozen_mean = gate.frozen_mean;
      cache.frozen_var = gate.frozen_var;
    }

    NetworkGradients grads = network_backward(net, trace, labels, data.n_classes);

    TrajectoryRow row;
    row.step = step;
    row.r = r;
    row.loss = trace.loss;
    row.updated = update;
    for (std::size_t l = 0; l < layers; ++l) {
      const SsnCache& cache = trace.norm[l].cache;
      GateRecord rec;
      rec.p = cache.p;
      rec.pp = cache.pp;
      rec.frozen_mean = net.norms[l].gate.frozen_mean;
      rec.frozen_var = net.norms[l].gate.frozen_var;
      rec.stage_mean = cache.gate_mean->stage;
      rec.stage_var = cache.gate_var->stage;
      rec.dz_mean = grads.norm[l].dz_mean;
      rec.dz_var = grads.norm[l].dz_var;
      rec.raw_dz_mean = sparsestmax_vjp(*cache.gate_mean, grads.norm[l].dp);
      rec.raw_dz_var = sparsestmax_vjp(*cache.gate_var, grads.norm[l].dpp);
      rec.radial_mean = radial_component(*cache.gate_mean, rec.raw_dz_mean);
      rec.radial_var = radial_component(*cache.gate_var, rec.raw_dz_var);
      row.layers.push_back(std::move(rec));
    }
    result.log.rows.push_back(std::move(row));
    if (!update) break;

    for (std::size_t l = 0; l < layers; ++l) {
      SsnParams& norm = net.norms[l];
      if (const Moments* bn = trace.norm[l].cache.find(Normalizer::BN)) {
        norm = update_running_stats(std::move(norm), *bn, model.bn_momentum);
      }
      sgd_step(net.convs[l].weight, v_conv[l], grads.conv[l], opt.lr, opt.momentum,
               opt.weight_decay);
      sgd_step(norm.gamma, v_gamma[l], grads.norm[l].dgamma, opt.lr, opt.momentum,
               opt.weight_decay);
      sgd_step(norm.beta, v_beta[l], grads.norm[l].dbeta, opt.lr, opt.momentum,
               opt.weight_decay);
      if (!norm.gate.frozen_mean) {
        sgd_step(norm.gate.z_mean, v_zm[l], grads.norm[l].dz_mean, z_lr, opt.momentum, 0.0);
      }
      if (!norm.gate.frozen_var) {
        sgd_step(norm.gate.z_var, v_zv[l], grads.norm[l].dz_var, z_lr, opt.momentum, 0.0);
      }
    }
    sgd_step(net.fc_weight, v_fcw, grads.fc_weight, opt.lr, opt.momentum, opt.weight_decay);
    sgd_step(net.fc_bias, v_fcb, grads.fc_bias, opt.lr, opt.momentum, opt.weight_decay);
  }

  result.final_radius = schedule_radius(schedule, total);
  result.final_accuracy = evaluate_accuracy(net, model, data, result.final_radius);
  return result;
}

SelectionHistogram selection_histogram(const TrajectoryLog& log) {
  if (log.rows.empty()) throw NotConverged("trajectory log is empty");
  SelectionHistogram h;
  for (Normalizer n : log.omega) {
    h.mean[n] = 0;
    h.var[n] = 0;
  }
  const TrajectoryRow& last = log.rows.back();
  for (std::size_t l = 0; l < last.layers.size(); ++l) {
    const GateRecord& g = last.layers[l];
    if (!is_one_hot(g.p) || !is_one_hot(g.pp)) {
      throw NotConverged("layer " + std::to_string(l) +
                         " has importance ratios that are not one-hot");
    }
    ++h.mean[log.omega[argmax_index(g.p)]];
    ++h.var[log.omega[argmax_index(g.pp)]];
  }
  return h;
}

std::vector<double> schedule_insensitivity_experiment(const ToyModelConfig& model,
                                                      const OptimizerConfig& opt,
                                                      const Dataset& data,
                                                      const std::vector<std::size_t>& ri_steps) {
  const std::size_t total = total_training_steps(model, opt, data);
  const SimplexGeometry geometry = SimplexGeometry::of(model.omega.size());
  std::vector<double> accuracies;
  for (std::size_t step : ri_steps) {
    if (step == 0 || step >= total) {
      throw InvalidInput("r_i crossing step " + std::to_string(step) +
                         " must lie strictly inside the " + std::to_string(total) +
                         "-step run");
    }
    OptimizerConfig run = opt;
    run.schedule = RadiusSchedule::through(total, geometry, step, geometry.r_inscribed);
    accuracies.push_back(train(model, run, data).final_accuracy);
  }
  return accuracies;
}

void write_trajectory_csv(std::ostream& out, const TrajectoryLog& log) {
  const std::size_t layers = log.rows.empty() ? 0 : log.rows.front().layers.size();
  out << "step,r,loss";
  for (std::size_t l = 0; l < layers; ++l) {
    const std::string prefix = "L" + std::to_string(l) + "_";
    for (Normalizer n : log.omega) out << ',' << prefix << "p_" << normalizer_name(n);
    for (Normalizer n : log.omega) out << ',' << prefix << "pp_" << normalizer_name(n);
    out << ',' << prefix << "frozen_mean," << prefix << "frozen_var," << prefix << "stage";
  }
  out << '\n';
  for (const TrajectoryRow& row : log.rows) {
    out << row.step << ',' << format_number(row.r) << ',' << format_number(row.loss);
    for (const GateRecord& g : row.layers) {
      for (double v : g.p) out << ',' << format_number(v);
      for (double v : g.pp) out << ',' << format_number(v);
      out << ',' << (g.frozen_mean ? 1 : 0) << ',' << (g.frozen_var ? 1 : 0) << ','
          << stage_name(g.stage_mean) << '/' << stage_name(g.stage_var);
    }
    out << '\n';
  }
}

namespace {

using nlohmann::json;

template <typename T>
void read_field(const json& j, const char* name, T& field) {
  if (j.contains(name)) field = j.at(name).get<T>();
}

}  // namespace

ToyConfig toy_config_from_json(const std::string& text) {
  ToyConfig cfg;
  try {
    const json j = json::parse(text);
    if (j.contains("model")) {
      const json& m = j.at("model");
      read_field(m, "layer_widths", cfg.model.layer_widths);
      cfg.model.ssn_layer_count = cfg.model.layer_widths.size();
      read_field(m, "ssn_layer_count", cfg.model.ssn_layer_count);
      if (m.contains("omega")) {
        cfg.model.omega.clear();
        for (const auto& n : m.at("omega")) {
          cfg.model.omega.push_back(parse_normalizer(n.get<std::string>()));
        }
      }
      read_field(m, "batch_size", cfg.model.batch_size);
      read_field(m, "channels", cfg.model.channels);
      read_field(m, "height", cfg.model.height);
      read_field(m, "width", cfg.model.width);
      read_field(m, "seed", cfg.model.seed);
      read_field(m, "gn_groups", cfg.model.gn_groups);
      read_field(m, "eps", cfg.model.eps);
      read_field(m, "bn_momentum", cfg.model.bn_momentum);
    }
    if (j.contains("optimizer")) {
      const json& o = j.at("optimizer");
      read_field(o, "lr", cfg.optimizer.lr);
      read_field(o, "momentum", cfg.optimizer.momentum);
      read_field(o, "weight_decay", cfg.optimizer.weight_decay);
      read_field(o, "z_lr_ratio", cfg.optimizer.z_lr_ratio);
      read_field(o, "z_init", cfg.optimizer.z_init);
      read_field(o, "epochs", cfg.optimizer.epochs);
      if (o.contains("schedule")) {
        const json& s = o.at("schedule");
        read_field(s, "r_start", cfg.optimizer.schedule.r_start);
        read_field(s, "r_end", cfg.optimizer.schedule.r_end);
        read_field(s, "total_steps", cfg.optimizer.schedule.total_steps);
      }
    }
    if (j.contains("data")) {
      const json& d = j.at("data");
      read_field(d, "n_samples", cfg.data.n_samples);
      read_field(d, "n_classes", cfg.data.n_classes);
      read_field(d, "cluster_std", cfg.data.cluster_std);
    }
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("toy config: ") + e.what());
  }
  cfg.model.validate();
  cfg.optimizer.validate();
  return cfg;
}

Dataset make_dataset(const ToyConfig& config) {
  config.model.validate();
  const Shape4 dims{config.data.n_samples, config.model.channels, config.model.height,
                    config.model.width};
  return make_synthetic_dataset(config.model.seed, config.data.n_samples, dims,
                                config.data.n_classes, config.data.cluster_std);
}

std::string toy_config_to_json(const ToyConfig& cfg) {
  json j;
  json& m = j["model"];
  m["layer_widths"] = cfg.model.layer_widths;
  m["ssn_layer_count"] = cfg.model.ssn_layer_count;
  m["omega"] = json::array();
  for (Normalizer n : cfg.model.omega) m["omega"].push_back(std::string(normalizer_name(n)));
  m["batch_size"] = cfg.model.batch_size;
  m["channels"] = cfg.model.channels;
  m["height"] = cfg.model.height;
  m["width"] = cfg.model.width;
  m["seed"] = cfg.model.seed;
  m["gn_groups"] = cfg.model.gn_groups;
  m["eps"] = cfg.model.eps;
  m["bn_momentum"] = cfg.model.bn_momentum;
  json& o = j["optimizer"];
  o["lr"] = cfg.optimizer.lr;
  o["momentum"] = cfg.optimizer.momentum;
  o["weight_decay"] = cfg.optimizer.weight_decay;
  o["z_lr_ratio"] = cfg.optimizer.z_lr_ratio;
  o["z_init"] = cfg.optimizer.z_init;
  o["epochs"] = cfg.optimizer.epochs;
  o["schedule"] = {{"r_start", cfg.optimizer.schedule.r_start},
                   {"r_end", cfg.optimizer.schedule.r_end},
                   {"total_steps", cfg.optimizer.schedule.total_steps}};
  j["data"] = {{"n_samples", cfg.data.n_samples},
               {"n_classes", cfg.data.n_classes},
               {"cluster_std", cfg.data.cluster_std}};
  return j.dump(2);
}

}  // namespace ssn
