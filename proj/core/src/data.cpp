#include "multimarker/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <vector>

#include "multimarker/errors.hpp"

namespace multimarker {

Eigen::Index Dataset::level_index(Eigen::Index i) const {
  if (!dose) throw UsageError("level_index requires a dataset with doses");
  const double x = (*dose)(i);
  for (Eigen::Index d = 0; d < levels.size(); ++d) {
    if (levels(d) == x) return d;
  }
  std::ostringstream os;
  os << "dose " << x << " of row " << (i + 1) << " not among the food-quantity levels";
  throw DataError(os.str());
}

Dataset validate_dataset(Dataset raw) {
  const Eigen::Index n = raw.Y.rows();
  const Eigen::Index P = raw.Y.cols();
  if (n == 0 || P == 0) throw DataError("dataset must have at least one row and one column");
  if (raw.levels.size() < 2) throw DataError("at least two food-quantity levels are required");
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index p = 0; p < P; ++p) {
      const double v = raw.Y(i, p);
      if (!std::isfinite(v)) {
        std::ostringstream os;
        os << "non-finite biomarker value at row " << (i + 1) << ", column " << (p + 1);
        throw DataError(os.str());
      }
      if (v < 0.0) {
        std::ostringstream os;
        os << "negative biomarker value " << v << " at row " << (i + 1) << ", column " << (p + 1);
        throw DataError(os.str());
      }
    }
  }
  for (Eigen::Index d = 0; d + 1 < raw.levels.size(); ++d) {
    if (!(raw.levels(d) < raw.levels(d + 1))) {
      std::ostringstream os;
      os << "food-quantity levels must be strictly increasing: levels[" << (d + 1)
         << "]=" << raw.levels(d) << " >= levels[" << (d + 2) << "]=" << raw.levels(d + 1);
      throw DataError(os.str());
    }
  }
  if (raw.dose) {
    if (raw.dose->size() != n) throw DataError("dose vector length does not match Y rows");
    for (Eigen::Index i = 0; i < n; ++i) {
      raw.level_index(i);  // throws when dose[i] is not a level
    }
  }
  return raw;
}

Eigen::MatrixXd ScalingTransform::apply(const Eigen::MatrixXd& Y) const {
  if (Y.cols() != mean.size()) {
    throw DataError("scaling transform fitted on a different number of biomarkers");
  }
  Eigen::MatrixXd out = Y;
  for (Eigen::Index p = 0; p < Y.cols(); ++p) {
    out.col(p) = (Y.col(p).array() - mean(p)) / sd(p) + shift(p);
  }
  return out;
}

ScalingTransform fit_biomarker_scaling(const Eigen::MatrixXd& Y) {
  const Eigen::Index n = Y.rows();
  const Eigen::Index P = Y.cols();
  if (n < 2) throw DataError("scaling requires at least two observations");
  ScalingTransform t;
  t.mean.resize(P);
  t.sd.resize(P);
  t.shift.resize(P);
  for (Eigen::Index p = 0; p < P; ++p) {
    const double m = Y.col(p).mean();
    const double ss = (Y.col(p).array() - m).square().sum();
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    if (!(sd > 0.0)) {
      std::ostringstream os;
      os << "biomarker column " << (p + 1) << " is constant and cannot be scaled";
      throw DataError(os.str());
    }
    const double min_std = ((Y.col(p).array() - m) / sd).minCoeff();
    t.mean(p) = m;
    t.sd(p) = sd;
    t.shift(p) = 2.0 * std::fabs(min_std);
  }
  return t;
}

Eigen::MatrixXd scale_biomarkers(const Eigen::MatrixXd& Y) {
  return fit_biomarker_scaling(Y).apply(Y);
}

std::string format_double(double x) {
  char buf[40];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  (void)ec;
  return std::string(buf, ptr);
}

namespace {

std::uint64_t fnv1a(const std::string& s, std::uint64_t h) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

std::string dataset_fingerprint(const Dataset& data) {
  std::vector<std::string> rows;
  rows.reserve(static_cast<std::size_t>(data.n()));
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    std::string row;
    for (Eigen::Index p = 0; p < data.P(); ++p) {
      row += format_double(data.Y(i, p));
      row += ',';
    }
    if (data.dose) {
      row += format_double((*data.dose)(i));
    }
    rows.push_back(std::move(row));
  }
  std::sort(rows.begin(), rows.end());
  std::uint64_t h = 14695981039346656037ULL;
  for (const auto& r : rows) h = fnv1a(r, h);
  std::string lv;
  for (Eigen::Index d = 0; d < data.D(); ++d) {
    lv += format_double(data.levels(d));
    lv += ',';
  }
  h = fnv1a(lv, h);
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

double parse_double(const std::string& s, const std::string& path, std::size_t line_no) {
  double v = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  while (begin < end && *begin == ' ') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end) {
    std::ostringstream os;
    os << path << ": cannot parse numeric field '" << s << "' at line " << line_no;
    throw IoError(os.str());
  }
  return v;
}

}  // namespace

Dataset read_dataset_csv(const std::string& path, std::optional<Eigen::VectorXd> levels) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw IoError(path + ": empty file");
  const auto header = split_csv_line(line);
  bool has_dose = !header.empty() && header.back() == "dose";
  const std::size_t P = header.size() - (has_dose ? 1 : 0);
  if (P == 0) throw IoError(path + ": no biomarker columns in header");

  std::vector<std::vector<double>> rows;
  std::vector<double> doses;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      std::ostringstream os;
      os << path << ": expected " << header.size() << " fields at line " << line_no << ", found "
         << fields.size();
      throw IoError(os.str());
    }
    std::vector<double> row(P);
    for (std::size_t p = 0; p < P; ++p) row[p] = parse_double(fields[p], path, line_no);
    rows.push_back(std::move(row));
    if (has_dose) doses.push_back(parse_double(fields[P], path, line_no));
  }
  if (rows.empty()) throw IoError(path + ": no data rows");

  Dataset data;
  data.Y.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(P));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t p = 0; p < P; ++p) data.Y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(p)) = rows[i][p];
  }
  if (has_dose) {
    Eigen::VectorXd d(static_cast<Eigen::Index>(doses.size()));
    for (std::size_t i = 0; i < doses.size(); ++i) d(static_cast<Eigen::Index>(i)) = doses[i];
    data.dose = d;
  }
  if (levels) {
    data.levels = *levels;
  } else if (has_dose) {
    // Infer levels as the sorted distinct doses.
    std::vector<double> distinct(doses);
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    data.levels = Eigen::Map<Eigen::VectorXd>(distinct.data(), static_cast<Eigen::Index>(distinct.size()));
  } else {
    throw UsageError(path + ": food-quantity levels must be supplied when the dose column is absent");
  }
  return data;
}

void write_dataset_csv(const std::string& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write dataset file: " + path);
  for (Eigen::Index p = 0; p < data.P(); ++p) {
    out << 'y' << (p + 1);
    if (p + 1 < data.P() || data.dose) out << ',';
  }
  if (data.dose) out << "dose";
  out << '\n';
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    for (Eigen::Index p = 0; p < data.P(); ++p) {
      out << format_double(data.Y(i, p));
      if (p + 1 < data.P() || data.dose) out << ',';
    }
    if (data.dose) out << format_double((*data.dose)(i));
    out << '\n';
  }
}

}  // namespace multimarker
