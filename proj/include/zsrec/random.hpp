// Copyright 2026 The zsrec Authors.
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

#pragma once

#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <string_view>

namespace zsrec {

// Seeded generator. Draws are built from raw 64-bit engine output instead of
// the std:: distributions, whose algorithms vary between standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  bool bernoulli(double p) { return uniform() < p; }
  // Uniform integer on [0, n).
  std::uint64_t below(std::uint64_t n);
  double normal();
  // Poisson by inversion; intended for small means.
  std::uint64_t poisson(double mean);

  // Engine state as text, for checkpoints.
  std::string state() const {
    std::ostringstream out;
    out << engine_;
    return out.str();
  }
  // False (and the engine untouched) when the text is not a valid state.
  bool set_state(const std::string& text) {
    std::istringstream in(text);
    std::mt19937_64 parsed;
    if (!(in >> parsed)) return false;
    engine_ = parsed;
    return true;
  }

 private:
  std::mt19937_64 engine_;
};

// Independent stream seed for a named purpose, e.g. derive_seed(seed, "init").
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream);

}  // namespace zsrec
