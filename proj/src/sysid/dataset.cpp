#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include "obetc/sysid.hpp"

namespace obetc::era {
namespace {

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
  return cells;
}

double parse_number(const std::string& cell, const std::filesystem::path& path, int line_no) {
  double value = 0.0;
  const char* begin = cell.data();
  const char* end = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) {
    std::ostringstream os;
    os << path.string() << ":" << line_no << ": cannot parse '" << cell << "' as a number";
    throw Error(ErrorCode::kConfig, os.str());
  }
  return value;
}

}  // namespace

void EraDataset::validate() const {
  if (u.size() != y.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "u and y differ in length");
  }
  if (!impulse.empty() && impulse.size() > u.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "impulse longer than the record");
  }
  if (!(sample_rate > 0.0)) throw Error(ErrorCode::kBadSpec, "sample rate must be positive");
}

EraDataset read_dataset_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfig, "cannot open dataset " + path.string());

  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) break;
  }
  const auto header = split(line);
  if (header != std::vector<std::string>{"t", "u", "y"}) {
    throw Error(ErrorCode::kConfig,
                path.string() + ":" + std::to_string(line_no) + ": expected header 't,u,y'");
  }

  EraDataset data;
  std::vector<double> t;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split(line);
    if (cells.size() != 3) {
      std::ostringstream os;
      os << path.string() << ":" << line_no << ": expected 3 columns, found " << cells.size();
      throw Error(ErrorCode::kConfig, os.str());
    }
    t.push_back(parse_number(cells[0], path, line_no));
    data.u.push_back(parse_number(cells[1], path, line_no));
    data.y.push_back(parse_number(cells[2], path, line_no));
  }
  if (t.size() < 2) throw Error(ErrorCode::kConfig, path.string() + ": fewer than 2 samples");
  const double span = t.back() - t.front();
  if (!(span > 0.0)) {
    throw Error(ErrorCode::kConfig, path.string() + ": time column is not increasing");
  }
  data.sample_rate = static_cast<double>(t.size() - 1) / span;
  return data;
}

void write_dataset_csv(const EraDataset& data, const std::filesystem::path& path) {
  data.validate();
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kConfig, "cannot write " + path.string());
  out << "t,u,y\n" << std::setprecision(17);
  for (std::size_t k = 0; k < data.u.size(); ++k) {
    out << static_cast<double>(k) / data.sample_rate << ',' << data.u[k] << ',' << data.y[k]
        << '\n';
  }
}

}  // namespace obetc::era
