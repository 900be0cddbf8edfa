#pragma once

#include <string>
#include <vector>

#include "plprep/num/linalg.hpp"

namespace plprep {

// n x q panel, one row per independent unit. Binary panels carry one q x p
// design matrix per unit.
struct DataMatrix {
  Matrix y;
  std::vector<Matrix> designs;
  bool binary = false;

  std::size_t n() const { return static_cast<std::size_t>(y.rows()); }
  std::size_t q() const { return static_cast<std::size_t>(y.cols()); }

  // Throws DomainError if the invariants (n >= 2, 0/1 entries, one design per
  // unit with q rows) do not hold.
  void validate() const;
};

// Unit-per-row CSV with a header line y1,...,yq. Binary designs live in a
// companion CSV with columns unit,occasion,x1,...,xp (one row per unit and
// occasion, 1-based indices).
void save_csv(const DataMatrix& data, const std::string& path, const std::string& design_path = {});
DataMatrix load_csv(const std::string& path, const std::string& design_path = {});

}  // namespace plprep
