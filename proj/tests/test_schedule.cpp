// Copyright 2026 The knowdiff Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <cmath>
#include <random>

#include "knowdiff/schedule.hpp"
#include "test_util.hpp"

using namespace knowdiff;

namespace {

// Composite Simpson integral of the linear beta(t).
double SimpsonBeta(const NoiseSchedule& s, double t) {
  const int n = 1000;
  const double h = t / n;
  auto beta = [&](double u) { return s.beta_min + u * (s.beta_max - s.beta_min); };
  double acc = beta(0.0) + beta(t);
  for (int i = 1; i < n; ++i) acc += (i % 2 ? 4.0 : 2.0) * beta(i * h);
  return acc * h / 3.0;
}

}  // namespace

TEST_CASE("integrated beta matches quadrature") {
  const NoiseSchedule s;
  for (double t : {0.001, 0.05, 0.1, 0.37, 0.8, 1.0}) {
    CHECK(s.IntegratedBeta(t) == doctest::Approx(SimpsonBeta(s, t)).epsilon(1e-12));
    CHECK(s.AlphaBar(t) == doctest::Approx(std::exp(-SimpsonBeta(s, t))));
  }
}

TEST_CASE("sigma at the default truncation points") {
  const NoiseSchedule s;
  CHECK(s.Sigma(0.05) == doctest::Approx(0.171562).epsilon(1e-5));
  CHECK(s.Sigma(0.10) == doctest::Approx(0.322058).epsilon(1e-5));
  CHECK(s.Sigma(1.0) == doctest::Approx(0.99998).epsilon(1e-5));
}

TEST_CASE("sigma is strictly increasing and variance preserving") {
  const NoiseSchedule s;
  double prev = 0.0;
  for (int i = 1; i <= 1000; ++i) {
    const double t = i / 1000.0;
    const double sigma = s.Sigma(t);
    CHECK(sigma > prev);
    CHECK(s.AlphaBar(t) + sigma * sigma == doctest::Approx(1.0).epsilon(1e-12));
    prev = sigma;
  }
  kdtest::ExpectCode([&] { s.Sigma(0.0); }, ErrorCode::kDomain);
  kdtest::ExpectCode([&] { s.Sigma(1.5); }, ErrorCode::kDomain);
}

TEST_CASE("forward noise moments") {
  const NoiseSchedule s;
  const double t = 0.3;
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  const int rows = 20000;
  PoseMatrix x0 = PoseMatrix::Constant(rows, 4, 2.0);
  PoseMatrix noise(rows, 4);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < 4; ++c) noise(r, c) = n(rng);
  const PoseMatrix xt = ForwardNoise(s, x0, t, noise);
  const double mean = xt.mean();
  const double var = (xt.array() - mean).square().mean();
  CHECK(mean == doctest::Approx(2.0 * std::sqrt(s.AlphaBar(t))).epsilon(0.01));
  CHECK(var == doctest::Approx(s.Sigma(t) * s.Sigma(t)).epsilon(0.02));
  kdtest::ExpectCode([&] { ForwardNoise(s, x0, 1e-4, noise); }, ErrorCode::kDomain);
  kdtest::ExpectCode([&] { ForwardNoise(s, x0, t, PoseMatrix::Zero(3, 4)); }, ErrorCode::kShape);
}

TEST_CASE("schedule validation") {
  NoiseSchedule s;
  s.beta_max = 0.05;
  kdtest::ExpectCode([&] { s.Validate(); }, ErrorCode::kConfig);
}
