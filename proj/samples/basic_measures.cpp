// Copyright 2026 The eaudit Authors
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

// Prints E_R, R_G and the separable overlap for a few Werner states.

#include <cstdio>

#include "eaudit/eaudit.hpp"

int main() {
  using namespace eaudit;
  std::printf("%-6s %-14s %-14s %-10s %-10s\n", "p", "E_R (ppt)", "E_R (hull)", "R_G", "LR_G");
  for (double p : {0.2, 0.5, 0.8, 1.0}) {
    DensityOperator rho = make_werner(p);
    MeasureReport lower = compute_er(rho, SeparableSet::ppt);
    MeasureReport upper = compute_er(rho, SeparableSet::hull);
    RobustnessWitness w = compute_rg(rho);
    std::printf("%-6.2f %-14.8f %-14.8f %-10.6f %-10.6f\n", p, lower.value, upper.value, w.s,
                std::log2(1.0 + w.s));
  }

  OverlapBounds b = max_separable_overlap(make_max_entangled(2));
  std::printf("max separable overlap with (phi+)^2: [%.6f, %.6f]\n", *b.lower, *b.upper);
  return 0;
}
