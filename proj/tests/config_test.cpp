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

#include <gtest/gtest.h>

#include "glsim/config.hpp"

namespace glsim {
namespace {

TEST(Config, EmptyConfigGivesDefaults) {
  auto c = parse_config("round", "", {});
  EXPECT_EQ(to_map(c), to_map(experiment_defaults("round")));
  EXPECT_EQ(c.clip, 1.0);
  EXPECT_EQ(c.sigma, 0.1);
  EXPECT_EQ(c.participants, 100u);
  EXPECT_EQ(c.batch, 20u);
}

TEST(Config, SweepScheduleDefault) {
  auto c = parse_config("sweep", "", {});
  EXPECT_EQ(c.benign, (std::vector<std::size_t>{1, 2, 3, 4, 5, 10, 15, 20, 30, 40, 50}));
  EXPECT_EQ(c.participants, 50u);
}

TEST(Config, RejectsMalformedValuesWithFieldName) {
  for (const char* bad : {"dp.sigma=-1", "dp.sigma=abc", "round.batch=2.5", "dp.mode=foo",
                          "nosuch.key=1", "missing-equals"}) {
    try {
      parse_config("round", "", {bad});
      FAIL() << bad;
    } catch (const UsageError& e) {
      std::string b = bad;
      if (b.find('=') != std::string::npos) {
        EXPECT_NE(std::string(e.what()).find(b.substr(0, b.find('='))), std::string::npos)
            << e.what();
      }
    }
  }
}

TEST(Config, TextRoundTrip) {
  auto c = parse_config("census", "", {"dp.sigma=0.25", "model.hidden=64,32", "seeds=3,4"});
  ExperimentConfig d = experiment_defaults("census");
  apply_config_text(d, "# comment\n" + to_config_text(c) + "\n");
  EXPECT_EQ(to_map(d), to_map(c));
  EXPECT_EQ(d.hidden, (std::vector<std::size_t>{64, 32}));
  EXPECT_EQ(d.sigma, 0.25);
}

TEST(Config, ExperimentMismatchAndUnknownExperiment) {
  EXPECT_THROW(parse_config("round", "", {"experiment=census"}), UsageError);
  EXPECT_THROW(experiment_defaults("nope"), UsageError);
}

TEST(Config, MissingFileIsIoError) {
  EXPECT_THROW(parse_config("round", "/nonexistent/glsim.cfg", {}), IoError);
}

TEST(Config, DoubleFormattingRoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 12345.678}) {
    EXPECT_EQ(config_detail::parse_double("k", config_detail::fmt_double(v)), v);
  }
}

}  // namespace
}  // namespace glsim
