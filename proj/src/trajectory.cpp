#include "stlrrt/trajectory.hpp"

#include "stlrrt/error.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace stlrrt {

using Eigen::VectorXd;

void SampledSignal::push_back(double t, const Eigen::Ref<const VectorXd>& x) {
  if (x.size() != dim_) throw DimensionMismatch("signal state has the wrong dimension");
  if (!times_.empty() && !(t > times_.back())) throw InvalidArgument("signal times must be strictly increasing");
  times_.push_back(t);
  values_.insert(values_.end(), x.data(), x.data() + dim_);
}

void SampledSignal::reserve(std::size_t n) {
  times_.reserve(n);
  values_.reserve(n * static_cast<std::size_t>(dim_));
}

VectorXd SampledSignal::at(double t) const {
  if (times_.empty()) throw CoverageError("empty signal");
  if (t <= times_.front()) return state(0);
  if (t >= times_.back()) return state(times_.size() - 1);
  const auto it = std::upper_bound(times_.begin(), times_.end(), t);
  const std::size_t k = static_cast<std::size_t>(it - times_.begin()) - 1;
  if (times_[k] == t) return state(k);
  const double s = (t - times_[k]) / (times_[k + 1] - times_[k]);
  return state(k) + s * (state(k + 1) - state(k));
}

void Trajectory::push_back(double t, const Eigen::Ref<const VectorXd>& x) { states.push_back(t, x); }

void Trajectory::push_input(const Eigen::Ref<const VectorXd>& u) {
  if (u.size() != input_dim) throw DimensionMismatch("input has the wrong dimension");
  inputs.insert(inputs.end(), u.data(), u.data() + input_dim);
}

void Trajectory::append(const Trajectory& next) {
  if (next.size() == 0) return;
  if (size() == 0) {
    *this = next;
    return;
  }
  if (next.states.dim() != states.dim() || next.input_dim != input_dim)
    throw DimensionMismatch("appended trajectory has different dimensions");
  if (next.times().front() != times().back()) throw InvalidArgument("appended trajectory does not start at the last knot");
  for (std::size_t k = 1; k < next.size(); ++k) states.push_back(next.times()[k], next.state(k));
  inputs.insert(inputs.end(), next.inputs.begin(), next.inputs.end());
}

double Trajectory::path_length() const {
  double len = 0.0;
  for (std::size_t k = 1; k < size(); ++k) len += (state(k) - state(k - 1)).norm();
  return len;
}

void write_csv(const Trajectory& traj, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw InvalidArgument("cannot open '" + path + "' for writing");
  const int n = traj.states.dim();
  const int m = traj.input_dim;
  std::fputs("t", f);
  for (int i = 0; i < n; ++i) std::fprintf(f, ",x%d", i + 1);
  for (int i = 0; i < m; ++i) std::fprintf(f, ",u%d", i + 1);
  std::fputc('\n', f);
  const std::size_t nin = m > 0 ? traj.inputs.size() / static_cast<std::size_t>(m) : 0;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    std::fprintf(f, "%.17g", traj.times()[k]);
    const auto x = traj.state(k);
    for (int i = 0; i < n; ++i) std::fprintf(f, ",%.17g", x[i]);
    if (m > 0) {
      const std::size_t j = nin == 0 ? 0 : std::min(k, nin - 1);
      for (int i = 0; i < m; ++i) std::fprintf(f, ",%.17g", nin == 0 ? 0.0 : traj.inputs[j * m + i]);
    }
    std::fputc('\n', f);
  }
  std::fclose(f);
}

Trajectory read_csv(const std::string& path, int state_dim) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("empty trajectory file");
  const int cols = static_cast<int>(std::count(line.begin(), line.end(), ',')) + 1;
  if (cols < 2) throw SchemaError("trajectory needs a time column and at least one state column");
  const int n = state_dim < 0 ? cols - 1 : state_dim;
  const int m = cols - 1 - n;
  if (n < 1 || m < 0) throw SchemaError("state dimension does not match the column count");
  Trajectory traj(n, m);
  std::vector<VectorXd> us;
  VectorXd row(cols);
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    int c = 0;
    while (std::getline(ss, cell, ',')) {
      if (c >= cols) throw SchemaError("too many columns on line " + std::to_string(lineno));
      row[c++] = std::stod(cell);
    }
    if (c != cols) throw SchemaError("too few columns on line " + std::to_string(lineno));
    traj.push_back(row[0], row.segment(1, n));
    if (m > 0) us.push_back(row.tail(m));
  }
  for (std::size_t k = 0; k + 1 < us.size(); ++k) traj.push_input(us[k]);
  return traj;
}

}  // namespace stlrrt
