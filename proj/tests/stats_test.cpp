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

#include "glsim/stats.hpp"

namespace glsim {
namespace {

TEST(Stats, MeanMedian) {
  std::vector<double> v{3.0, 1.0, 2.0, 10.0};
  EXPECT_DOUBLE_EQ(mean(v), 4.0);
  EXPECT_DOUBLE_EQ(median(v), 2.5);
  EXPECT_DOUBLE_EQ(median({5.0, 1.0, 3.0}), 3.0);
}

TEST(Stats, RanksAverageTies) {
  std::vector<double> v{10.0, 20.0, 10.0, 30.0};
  EXPECT_EQ(ranks(v), (std::vector<double>{1.5, 3.0, 1.5, 4.0}));
}

TEST(Stats, Spearman) {
  std::vector<double> a{1, 2, 3, 4, 5}, b{1, 4, 9, 16, 25}, c{5, 4, 3, 2, 1};
  EXPECT_NEAR(spearman(a, b), 1.0, 1e-15);
  EXPECT_NEAR(spearman(a, c), -1.0, 1e-15);
  // Textbook case: d^2 sum = 2 for n = 5 gives 1 - 6*2/120 = 0.9.
  std::vector<double> x{1, 2, 3, 4, 5}, y{2, 1, 3, 4, 5};
  EXPECT_NEAR(spearman(x, y), 0.9, 1e-12);
}

TEST(Stats, Monotonicity) {
  std::vector<double> up{1, 1, 2}, down{3, 2, 2};
  EXPECT_TRUE(non_decreasing(up));
  EXPECT_FALSE(non_increasing(up));
  EXPECT_TRUE(non_increasing(down));
  EXPECT_TRUE(non_increasing(std::vector<double>{1.0, 1.05}, 0.1));
}

}  // namespace
}  // namespace glsim
