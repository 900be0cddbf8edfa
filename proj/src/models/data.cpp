#include "plprep/models/data.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "plprep/error.hpp"

namespace plprep {
namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    std::size_t b = cell.find_first_not_of(' ');
    out.push_back(b == std::string::npos ? std::string{} : cell.substr(b));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& s, const std::string& path, std::size_t line_no) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    std::ostringstream os;
    os << path << ":" << line_no << ": cannot parse '" << s << "' as a finite number";
    throw ParseError(os.str());
  }
  return v;
}

std::vector<std::vector<double>> read_numeric_csv(const std::string& path, std::size_t* header_cols) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError(path + ": empty file");
  ++line_no;
  const auto header = split_line(line);
  *header_cols = header.size();
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_line(line);
    if (cells.size() != header.size()) {
      std::ostringstream os;
      os << path << ":" << line_no << ": expected " << header.size() << " fields, found " << cells.size();
      throw ParseError(os.str());
    }
    std::vector<double> row;
    for (const auto& c : cells) row.push_back(parse_number(c, path, line_no));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

void DataMatrix::validate() const {
  if (y.rows() < 2) throw DomainError("DataMatrix: need at least 2 units");
  if (y.cols() < 2) throw DomainError("DataMatrix: need at least 2 components per unit");
  if (!y.allFinite()) throw DomainError("DataMatrix: non-finite observation");
  if (binary) {
    if ((y.array() != 0.0 && y.array() != 1.0).any()) throw DomainError("DataMatrix: binary entries must be 0 or 1");
    if (designs.size() != n()) throw DomainError("DataMatrix: need one design matrix per unit");
    for (const auto& x : designs)
      if (static_cast<std::size_t>(x.rows()) != q() || x.cols() != designs.front().cols())
        throw DomainError("DataMatrix: design matrices must be q x p with a common p");
  }
}

void save_csv(const DataMatrix& data, const std::string& path, const std::string& design_path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << std::setprecision(17);
  for (std::size_t j = 0; j < data.q(); ++j) out << (j ? "," : "") << "y" << (j + 1);
  out << "\n";
  for (std::size_t i = 0; i < data.n(); ++i) {
    for (std::size_t j = 0; j < data.q(); ++j) out << (j ? "," : "") << data.y(i, j);
    out << "\n";
  }
  if (data.binary) {
    if (design_path.empty()) throw DomainError("save_csv: binary data needs a design path");
    std::ofstream d(design_path);
    if (!d) throw IoError("cannot write " + design_path);
    d << std::setprecision(17) << "unit,occasion";
    const auto p = data.designs.front().cols();
    for (Eigen::Index k = 0; k < p; ++k) d << ",x" << (k + 1);
    d << "\n";
    for (std::size_t i = 0; i < data.n(); ++i)
      for (std::size_t j = 0; j < data.q(); ++j) {
        d << (i + 1) << "," << (j + 1);
        for (Eigen::Index k = 0; k < p; ++k) d << "," << data.designs[i](j, k);
        d << "\n";
      }
  }
}

DataMatrix load_csv(const std::string& path, const std::string& design_path) {
  std::size_t cols = 0;
  const auto rows = read_numeric_csv(path, &cols);
  DataMatrix data;
  data.y.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols; ++j) data.y(i, j) = rows[i][j];

  if (!design_path.empty()) {
    data.binary = true;
    std::size_t dcols = 0;
    const auto drows = read_numeric_csv(design_path, &dcols);
    if (dcols < 3) throw ParseError(design_path + ": need unit,occasion and at least one covariate");
    const std::size_t p = dcols - 2;
    data.designs.assign(data.n(), Matrix::Constant(static_cast<Eigen::Index>(data.q()), static_cast<Eigen::Index>(p), NAN));
    for (const auto& r : drows) {
      const double u = r[0], o = r[1];
      if (u < 1 || o < 1 || u > static_cast<double>(data.n()) || o > static_cast<double>(data.q()) ||
          u != std::floor(u) || o != std::floor(o))
        throw ParseError(design_path + ": unit/occasion index out of range");
      for (std::size_t k = 0; k < p; ++k)
        data.designs[static_cast<std::size_t>(u) - 1](static_cast<Eigen::Index>(o) - 1, static_cast<Eigen::Index>(k)) = r[k + 2];
    }
    for (const auto& x : data.designs)
      if (!x.allFinite()) throw ParseError(design_path + ": missing design rows");
  }
  try {
    data.validate();
  } catch (const DomainError& e) {
    throw ParseError(path + ": " + e.what());
  }
  return data;
}

}  // namespace plprep
