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

// Umbrella header.

#pragma once

#include "glsim/attack.hpp"
#include "glsim/checksum.hpp"
#include "glsim/config.hpp"
#include "glsim/dataset.hpp"
#include "glsim/dp.hpp"
#include "glsim/error.hpp"
#include "glsim/experiments.hpp"
#include "glsim/fl.hpp"
#include "glsim/matrix.hpp"
#include "glsim/nn.hpp"
#include "glsim/reconstruction.hpp"
#include "glsim/report.hpp"
#include "glsim/rng.hpp"
#include "glsim/runner.hpp"
#include "glsim/secure_aggregation.hpp"
#include "glsim/stats.hpp"
