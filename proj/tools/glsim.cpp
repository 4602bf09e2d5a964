// Copyright 2026 The glsim Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// glsim <experiment> --config <path> [--set key=value ...] --out <dir>
// glsim gen-data --dim D --classes C --count N --seed S --out file.glds

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "glsim/glsim.hpp"

namespace {

int run_experiment(const std::string& name, const std::string& config,
                   std::vector<std::string> sets, const std::string& out) {
  if (const char* env = std::getenv("GLSIM_SEED")) sets.push_back(std::string("seed=") + env);
  glsim::ExperimentConfig cfg = glsim::parse_config(name, config, sets);
  glsim::RunSummary s = glsim::run(cfg, out);
  for (const auto& [k, v] : s) std::cout << k << " = " << glsim::cell(v) << "\n";
  std::cout << "artifacts written to " << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gradient leakage simulator for federated learning with secure aggregation"};
  app.require_subcommand(1);

  std::string config, out;
  std::vector<std::string> sets;
  for (const auto& name : glsim::experiment_names()) {
    auto* sub = app.add_subcommand(name, "run the '" + name + "' experiment");
    sub->add_option("--config", config, "key = value config file")->check(CLI::ExistingFile);
    sub->add_option("--set", sets, "override one field, key=value (repeatable)");
    sub->add_option("--out", out, "output directory")->required();
  }

  std::size_t dim = 3072, count = 1000;
  std::uint32_t classes = 10;
  std::uint64_t seed = 0;
  std::string data_out;
  auto* gen = app.add_subcommand("gen-data", "write a synthetic GLDS dataset");
  gen->add_option("--dim", dim, "features per example");
  gen->add_option("--classes", classes, "number of classes");
  gen->add_option("--count", count, "number of examples");
  gen->add_option("--seed", seed, "generator seed");
  gen->add_option("--out", data_out, "output .glds file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (gen->parsed()) {
      glsim::write_glds(glsim::generate_synthetic(dim, classes, count, seed), data_out);
      std::cout << "wrote " << count << " examples to " << data_out << "\n";
      return 0;
    }
    for (auto* sub : app.get_subcommands())
      return run_experiment(sub->get_name(), config, sets, out);
  } catch (const glsim::UsageError& e) {
    std::cerr << "glsim: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "glsim: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
