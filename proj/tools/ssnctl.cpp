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

// ssnctl: command-line front end for the SparsestMax library.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "sparsestmax/bench.hpp"
#include "sparsestmax/error.hpp"
#include "sparsestmax/format.hpp"
#include "sparsestmax/simplex.hpp"
#include "sparsestmax/toy_trainer.hpp"
#include "sparsestmax/trajectory.hpp"
#include "sparsestmax/verify.hpp"

namespace {

using nlohmann::json;

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

json rounded(const std::vector<double>& v) {
  json out = json::array();
  for (double x : v) out.push_back(ssn::round_significant(x));
  return out;
}

void emit(const json& j) { std::cout << j.dump() << '\n'; }

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("--out: cannot open " + path);
  return out;
}

ssn::Shape4 parse_dims(const std::string& text) {
  std::vector<std::size_t> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, 'x')) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(item, &used);
    } catch (const std::exception&) {
      throw UsageError("--dims: expected NxCxHxW, got " + text);
    }
    if (used != item.size() || item.empty() || item[0] == '-') {
      throw UsageError("--dims: expected NxCxHxW, got " + text);
    }
    parts.push_back(static_cast<std::size_t>(v));
  }
  if (parts.size() != 4) throw UsageError("--dims: expected NxCxHxW, got " + text);
  for (std::size_t v : parts) {
    if (v == 0) throw UsageError("--dims: every dimension must be positive");
  }
  return {parts[0], parts[1], parts[2], parts[3]};
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("--config: cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct ProjectArgs {
  std::string fn = "sparsestmax";
  std::vector<double> z;
  double r = 0.0;
  std::size_t k = 0;
};

int cmd_project(const ProjectArgs& a) {
  if (a.k != 0 && a.k != a.z.size()) {
    throw UsageError("--k: " + std::to_string(a.k) + " does not match " +
                     std::to_string(a.z.size()) + " values in --z");
  }
  if (a.z.size() < 2) throw UsageError("--z: need at least 2 values");
  json out;
  if (a.fn == "softmax") {
    const ssn::Vector p = ssn::softmax(a.z);
    out = {{"p", rounded(p)}, {"stage", "Softmax"}, {"support", ssn::support_of(p)}};
  } else if (a.fn == "sparsemax") {
    const ssn::Vector p = ssn::sparsemax(a.z);
    out = {{"p", rounded(p)}, {"stage", "Sparsemax"}, {"support", ssn::support_of(p)}};
  } else {
    const ssn::ProjectionResult res = ssn::sparsestmax(a.z, a.r);
    out = {{"p", rounded(res.p)},
           {"stage", std::string(ssn::stage_name(res.stage))},
           {"support", res.support}};
  }
  emit(out);
  return kOk;
}

int cmd_gradcheck(std::uint64_t seed, std::size_t trials, std::size_t k) {
  if (trials == 0) throw UsageError("--trials: must be positive");
  if (k < 2) throw UsageError("--k: must be at least 2");
  const ssn::verify::GradcheckReport rep = ssn::verify::gradcheck(seed, trials, k);
  emit({{"seed", rep.seed},
        {"trials", rep.trials},
        {"k", rep.k},
        {"tolerance", rep.tolerance},
        {"max_relative_error", ssn::round_significant(rep.max_relative_error)},
        {"failures", rep.failures},
        {"passed", rep.passed()}});
  return rep.passed() ? kOk : kFailure;
}

int cmd_trajectory(const std::vector<double>& z, std::size_t steps, std::uint64_t seed,
                   const std::string& out_path) {
  if (z.size() < 2) throw UsageError("--z: need at least 2 values");
  if (steps == 0) throw UsageError("--steps: must be positive");
  const auto points = ssn::simulate_trajectory(z, steps, seed);
  if (out_path.empty()) {
    ssn::write_trajectory_points_csv(std::cout, points);
  } else {
    std::ofstream out = open_out(out_path);
    ssn::write_trajectory_points_csv(out, points);
  }
  return ssn::is_one_hot(points.back().p) ? kOk : kFailure;
}

json histogram_json(const std::map<ssn::Normalizer, std::size_t>& h) {
  json out = json::object();
  for (const auto& [n, count] : h) out[std::string(ssn::normalizer_name(n))] = count;
  return out;
}

int cmd_train(const std::string& config_path, std::optional<std::uint64_t> seed,
              const std::string& out_path) {
  ssn::ToyConfig cfg;
  if (!config_path.empty()) {
    if (!std::filesystem::exists(config_path)) {
      throw UsageError("--config: no such file " + config_path);
    }
    cfg = ssn::toy_config_from_json(read_file(config_path));
  }
  if (seed) cfg.model.seed = *seed;
  const ssn::Dataset data = ssn::make_dataset(cfg);

  const auto start = std::chrono::steady_clock::now();
  const ssn::TrainResult result = ssn::train(cfg.model, cfg.optimizer, data);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  if (!out_path.empty()) {
    std::ofstream out = open_out(out_path);
    ssn::write_trajectory_csv(out, result.log);
  }
  const ssn::TrajectoryRow& last = result.log.rows.back();
  bool one_hot = true;
  for (const ssn::GateRecord& g : last.layers) {
    one_hot = one_hot && ssn::is_one_hot(g.p) && ssn::is_one_hot(g.pp);
  }
  json summary = {{"seed", cfg.model.seed},
                  {"steps", last.step},
                  {"final_radius", ssn::round_significant(result.final_radius)},
                  {"initial_loss", ssn::round_significant(result.log.rows.front().loss)},
                  {"final_loss", ssn::round_significant(last.loss)},
                  {"final_accuracy", ssn::round_significant(result.final_accuracy)},
                  {"all_one_hot", one_hot},
                  {"seconds", ssn::round_significant(seconds)}};
  if (one_hot) {
    const ssn::SelectionHistogram h = ssn::selection_histogram(result.log);
    summary["selection"] = {{"mean", histogram_json(h.mean)}, {"var", histogram_json(h.var)}};
  }
  emit(summary);
  return one_hot ? kOk : kFailure;
}

int cmd_bench(const std::string& dims_text, std::size_t reps, std::uint64_t seed) {
  if (reps == 0) throw UsageError("--reps: must be positive");
  const ssn::Shape4 dims = parse_dims(dims_text);
  const ssn::BenchReport rep = ssn::run_bench(dims, reps, seed);
  emit({{"dims", {dims.n, dims.c, dims.h, dims.w}},
        {"reps", rep.reps},
        {"combined_ms", ssn::round_significant(rep.combined_ms)},
        {"sparse_ms", ssn::round_significant(rep.sparse_ms)},
        {"ratio", ssn::round_significant(rep.ratio)},
        {"combined_cv", ssn::round_significant(rep.combined_cv)},
        {"sparse_cv", ssn::round_significant(rep.sparse_cv)},
        {"preempted", rep.preempted}});
  return kOk;
}

int cmd_verify(std::uint64_t seed, bool as_json, bool inject_fault) {
  const auto checks = ssn::verify::run_invariant_suite(seed, inject_fault);
  bool all = true;
  json rows = json::array();
  for (const auto& c : checks) {
    all = all && c.passed;
    rows.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  }
  if (as_json) {
    emit({{"seed", seed}, {"passed", all}, {"checks", rows}});
  } else {
    for (const auto& c : checks) {
      std::cout << (c.passed ? "PASS  " : "FAIL  ") << c.name << "  " << c.detail << '\n';
    }
    std::cout << (all ? "all checks passed" : "some checks failed") << '\n';
  }
  return all ? kOk : kFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SparsestMax projections, gradient checks and SSN toy training"};
  app.require_subcommand(1);

  ProjectArgs pa;
  auto* project = app.add_subcommand("project", "Evaluate softmax, sparsemax or SparsestMax");
  project->add_option("--fn", pa.fn)->check(CLI::IsMember({"softmax", "sparsemax", "sparsestmax"}));
  project->add_option("--z", pa.z)->required()->delimiter(',');
  project->add_option("--r", pa.r)->check(CLI::NonNegativeNumber);
  project->add_option("--k", pa.k);

  std::uint64_t gc_seed = 0;
  std::size_t gc_trials = 200, gc_k = 3;
  auto* gradcheck = app.add_subcommand("gradcheck", "Compare the VJP with finite differences");
  gradcheck->add_option("--seed", gc_seed);
  gradcheck->add_option("--trials", gc_trials);
  gradcheck->add_option("--k", gc_k);

  std::vector<double> tr_z;
  std::size_t tr_steps = 100;
  std::uint64_t tr_seed = 0;
  std::string tr_out;
  auto* trajectory = app.add_subcommand("trajectory", "Simulate ratio convergence under the schedule");
  trajectory->add_option("--z", tr_z)->required()->delimiter(',');
  trajectory->add_option("--steps", tr_steps);
  trajectory->add_option("--seed", tr_seed);
  trajectory->add_option("--out", tr_out);

  std::string cfg_path, train_out;
  std::optional<std::uint64_t> train_seed;
  auto* train = app.add_subcommand("train", "Train the toy SSN network");
  train->add_option("--config", cfg_path);
  train->add_option("--seed", train_seed);
  train->add_option("--out", train_out);

  std::string dims = "32x64x56x56";
  std::size_t reps = 50;
  std::uint64_t bench_seed = 0;
  auto* bench = app.add_subcommand("bench", "Time mixed versus selected normalization");
  bench->add_option("--dims", dims);
  bench->add_option("--reps", reps);
  bench->add_option("--seed", bench_seed);

  std::uint64_t verify_seed = 0;
  bool verify_json = false, inject_fault = false;
  auto* verify = app.add_subcommand("verify", "Run the invariant suite");
  verify->add_option("--seed", verify_seed);
  verify->add_flag("--json", verify_json);
  verify->add_flag("--inject-fault", inject_fault);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*project) return cmd_project(pa);
    if (*gradcheck) return cmd_gradcheck(gc_seed, gc_trials, gc_k);
    if (*trajectory) return cmd_trajectory(tr_z, tr_steps, tr_seed, tr_out);
    if (*train) return cmd_train(cfg_path, train_seed, train_out);
    if (*bench) return cmd_bench(dims, reps, bench_seed);
    if (*verify) return cmd_verify(verify_seed, verify_json, inject_fault);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const ssn::InvalidInput& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kUsage;
}
