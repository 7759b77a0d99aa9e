#pragma once

#include <string>
#include <vector>

#include "dprom/types.hpp"

namespace dprom {

// Column-labeled numeric table, written as a versioned CSV with full double
// precision so reruns are bit-identical.
struct ResultTable {
  std::vector<std::string> columns;
  MatX data;
};

void write_table(const std::string& path, const ResultTable& t);
ResultTable read_table(const std::string& path);

// Aligns the result files of two run directories pairwise (every model of A
// against every model of B at each shared grid point) and summarizes peak
// amplitude/frequency deltas, plus the frequency offset along matched
// amplitudes for backbone branches. Writes JSON to out_path when non-empty;
// returns the JSON text.
std::string compare_runs(const std::string& dir_a, const std::string& dir_b,
                         const std::string& out_path);

}  // namespace dprom
