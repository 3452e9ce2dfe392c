#include "pacb/datagen.hpp"

#include "pacb/errors.hpp"
#include "pacb/spectral.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace pacb {
namespace {

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

// Locale-independent strict parse of one CSV cell.
bool parse_cell(std::string_view cell, double& out) {
  while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
  while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t')) cell.remove_suffix(1);
  if (cell.empty()) return false;
  if (cell.front() == '+') cell.remove_prefix(1);
  const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), out);
  return res.ec == std::errc() && res.ptr == cell.data() + cell.size() && std::isfinite(out);
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      cells.push_back(line.substr(start));
      return cells;
    }
    cells.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace

Dataset sample_iid(const IIDIsotropic& model, Index n, SeedSpec seed) {
  validate(DataModel{model});
  if (n < 1) throw InvalidArgument("n must be positive");
  const Index d = model.w_star.size();
  Dataset s{Matrix(n, d), Vector(n)};
  Engine eng = seed.engine();
  std::normal_distribution<double> normal;
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < d; ++j) s.x(i, j) = model.sigma_x * normal(eng);
    s.y(i) = s.x.row(i).dot(model.w_star) + model.sigma_eps * normal(eng);
  }
  return s;
}

Dataset sample_correlated(const CorrelatedGaussian& model, Index n, SeedSpec seed) {
  validate(DataModel{model});
  if (n < 1) throw InvalidArgument("n must be positive");
  const Index d = model.w_star.size();
  const Matrix q = joint_covariance(*model.joint_cov_source, n);
  Eigen::LLT<Matrix> llt(q);
  if (llt.info() != Eigen::Success) throw InvalidArgument("joint covariance Q_{X,n} is not positive definite");
  Engine eng = seed.engine();
  std::normal_distribution<double> normal;
  Vector g(n * d);
  for (Index i = 0; i < g.size(); ++i) g(i) = normal(eng);
  const Vector stacked = llt.matrixL() * g;
  Dataset s{Matrix(n, d), Vector(n)};
  for (Index i = 0; i < n; ++i) {
    s.x.row(i) = stacked.segment(i * d, d).transpose();
    s.y(i) = s.x.row(i).dot(model.w_star) + model.sigma_eps * normal(eng);
  }
  return s;
}

Index arx_burn_in(const Arx& model) {
  const Index k = model.order();
  const double r = arx_spectral_radius(model);
  Index steps = 2 * k;
  if (r > 0.0) {
    const double raw = std::ceil(std::log(1e-8) / std::log(r));
    if (std::isfinite(raw)) steps = std::max(steps, static_cast<Index>(raw));
  }
  return steps;
}

TimeSeriesPair simulate_arx(const Arx& model, Index length, SeedSpec seed) {
  validate(DataModel{model});
  if (length < 1) throw InvalidArgument("series length must be positive");
  const Index k = model.order();
  const Index burn = arx_burn_in(model);
  const Index total = burn + length;
  std::vector<double> y(static_cast<std::size_t>(total), 0.0);
  std::vector<double> u(static_cast<std::size_t>(total), 0.0);
  std::vector<double> e(static_cast<std::size_t>(total), 0.0);
  Engine eng = seed.engine();
  std::normal_distribution<double> normal;
  for (Index t = 0; t < total; ++t) {
    const auto ts = static_cast<std::size_t>(t);
    u[ts] = model.sigma_u * normal(eng);
    e[ts] = model.sigma_e * normal(eng);
    double acc = 0.0;
    for (Index i = 1; i <= k && i <= t; ++i) {
      const auto lag = static_cast<std::size_t>(t - i);
      acc += model.a(i - 1) * y[lag];
    }
    for (Index i = 1; i <= k && i <= t; ++i) {
      const auto lag = static_cast<std::size_t>(t - i);
      acc += model.b(i - 1) * u[lag];
    }
    y[ts] = acc + e[ts];
  }
  TimeSeriesPair out;
  out.burn_in_used = burn;
  out.y = Eigen::Map<const Vector>(y.data() + burn, length);
  out.u = Eigen::Map<const Vector>(u.data() + burn, length);
  out.e = Eigen::Map<const Vector>(e.data() + burn, length);
  return out;
}

Dataset recast_arx(const TimeSeriesPair& series, Index k) {
  if (k < 1) throw InvalidArgument("k must be positive");
  const Index len = series.y.size();
  if (series.u.size() != len) throw DimensionMismatch("y and u must have equal length");
  if (len <= 2 * k) throw InvalidArgument("recasting needs T > 2k samples");
  const Index n = len - k;
  Dataset s{Matrix(n, 2 * k), Vector(n)};
  for (Index r = 0; r < n; ++r) {
    s.y(r) = series.y(r + k);
    for (Index j = 0; j < k; ++j) {
      s.x(r, j) = series.y(r + k - 1 - j);
      s.x(r, k + j) = series.u(r + k - 1 - j);
    }
  }
  return s;
}

Dataset sample_dataset(const DataModel& model, Index n, SeedSpec seed) {
  if (const auto* m = std::get_if<IIDIsotropic>(&model)) return sample_iid(*m, n, seed);
  if (const auto* m = std::get_if<CorrelatedGaussian>(&model)) return sample_correlated(*m, n, seed);
  const auto& arx = std::get<Arx>(model);
  if (n < 1) throw InvalidArgument("n must be positive");
  const Index k = arx.order();
  // recast needs T > 2k
  const Index length = std::max(n + k, 2 * k + 1);
  Dataset full = recast_arx(simulate_arx(arx, length, seed), k);
  if (full.n() == n) return full;
  return Dataset{full.x.topRows(n), full.y.head(n)};
}

void write_dataset_csv(const Dataset& data, std::ostream& out) {
  validate(data);
  for (Index j = 0; j < data.d(); ++j) out << 'x' << (j + 1) << ',';
  out << "y\n";
  for (Index i = 0; i < data.n(); ++i) {
    for (Index j = 0; j < data.d(); ++j) out << format_double(data.x(i, j)) << ',';
    out << format_double(data.y(i)) << '\n';
  }
}

void write_dataset_csv(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open " + path.string() + " for writing");
  write_dataset_csv(data, out);
  if (!out) throw Error("failed writing " + path.string());
}

Dataset read_dataset_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("line 1: missing header");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_commas(line);
  if (header.size() < 2) throw ParseError("line 1: header must be x1,...,xd,y");
  const std::size_t d = header.size() - 1;
  for (std::size_t j = 0; j < d; ++j) {
    if (header[j] != "x" + std::to_string(j + 1)) {
      throw ParseError("line 1: expected column 'x" + std::to_string(j + 1) + "'");
    }
  }
  if (header.back() != "y") throw ParseError("line 1: last column must be 'y'");

  std::vector<double> values;
  std::size_t line_no = 1;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_commas(line);
    if (cells.size() != d + 1) {
      throw ParseError("line " + std::to_string(line_no) + ": expected " + std::to_string(d + 1) +
                       " columns, found " + std::to_string(cells.size()));
    }
    for (const auto cell : cells) {
      double v = 0.0;
      if (!parse_cell(cell, v)) {
        throw ParseError("line " + std::to_string(line_no) + ": invalid value '" + std::string(cell) + "'");
      }
      values.push_back(v);
    }
    ++rows;
  }
  if (rows == 0) throw ParseError("dataset has no rows");
  const auto n = static_cast<Index>(rows);
  const auto dd = static_cast<Index>(d);
  Dataset s{Matrix(n, dd), Vector(n)};
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < dd; ++j) s.x(i, j) = values[static_cast<std::size_t>(i * (dd + 1) + j)];
    s.y(i) = values[static_cast<std::size_t>(i * (dd + 1) + dd)];
  }
  return s;
}

Dataset load_dataset_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open dataset " + path.string());
  return read_dataset_csv(in);
}

}  // namespace pacb
