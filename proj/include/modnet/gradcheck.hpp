#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace modnet {

struct GradCheckEntry {
  std::string name;
  int configs = 0;
  int coords = 0;
  double max_rel_err = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double worst = 0.0;
  std::string worst_name;
  double tolerance = 1e-4;
  bool ok() const { return worst < tolerance; }
};

// Central finite differences (step 1e-5) against tape gradients, for every
// primitive op and for the composed pieces: the four parameterized modules,
// a full three-deep layout, the candidate scorer, the fusion head and the
// LSTM encoder. Configurations whose relu inputs or max gaps sit too close
// to a kink are redrawn so the comparison stays meaningful.
GradCheckReport run_gradient_suite(std::uint64_t seed, int configs_per_case);

}  // namespace modnet
