#include "gmf/state_space.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

#include "gmf/errors.hpp"
#include "gmf/rng.hpp"

namespace gmf {

Eigen::MatrixXd StateSpaceModel::transition_jacobian(const Eigen::VectorXd& x, int k) const {
  const int n = state_dim();
  Eigen::MatrixXd jac(n, n);
  for (int j = 0; j < n; ++j) {
    const double h = 1e-6 * std::max(1.0, std::abs(x(j)));
    Eigen::VectorXd xp = x, xm = x;
    xp(j) += h;
    xm(j) -= h;
    jac.col(j) = (transition(xp, k) - transition(xm, k)) / (2.0 * h);
  }
  return jac;
}

Eigen::VectorXd StateSpaceModel::transition_shift(int, int) const {
  throw UnsupportedModelError(
      "this model does not expose a time-shift structure for its transition");
}

double transition_logpdf(const StateSpaceModel& m, const Eigen::VectorXd& from, int k,
                         const Eigen::VectorXd& to) {
  const Eigen::VectorXd mean = m.transition(from, k);
  if (m.state_dim() == 1) return normal_logpdf1(to(0), mean(0), m.process_noise_cov()(0, 0));
  return gaussian_logpdf(Gaussian(mean, m.process_noise_cov()), to);
}

double observation_logpdf(const StateSpaceModel& m, const Eigen::VectorXd& x,
                          const Eigen::VectorXd& z) {
  const Eigen::VectorXd mean = m.observation(x);
  if (m.obs_dim() == 1) return normal_logpdf1(z(0), mean(0), m.observation_noise_cov()(0, 0));
  return gaussian_logpdf(Gaussian(mean, m.observation_noise_cov()), z);
}

Trajectory simulate(const StateSpaceModel& m, int horizon, std::uint64_t seed) {
  if (horizon < 0) throw DimensionError("horizon must be non-negative");
  const int n = m.state_dim();
  const int nz = m.obs_dim();
  auto rng = seeded_engine(seed, 0, 0);
  const Gaussian process_noise(Eigen::VectorXd::Zero(n), m.process_noise_cov());
  const Gaussian obs_noise(Eigen::VectorXd::Zero(nz), m.observation_noise_cov());
  Trajectory t;
  t.states.resize(n, horizon + 1);
  t.observations.resize(nz, horizon);
  t.states.col(0) = sample_gaussian(m.prior(), rng);
  for (int k = 0; k < horizon; ++k) {
    t.states.col(k + 1) = m.transition(t.states.col(k), k) + sample_gaussian(process_noise, rng);
    t.observations.col(k) = m.observation(t.states.col(k + 1)) + sample_gaussian(obs_noise, rng);
  }
  return t;
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

double parse_field(const std::string& s, int line_no) {
  if (s.empty())
    throw ParseError("empty numeric field at line " + std::to_string(line_no));
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size())
    throw ParseError("invalid number '" + s + "' at line " + std::to_string(line_no));
  return v;
}

}  // namespace

void save_trajectory(const Trajectory& t, const std::string& path) {
  const int n = static_cast<int>(t.states.rows());
  const int nz = static_cast<int>(t.observations.rows());
  const int horizon = static_cast<int>(t.observations.cols());
  if (t.states.cols() != horizon + 1)
    throw DimensionError("trajectory has inconsistent state/observation lengths");
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open '" + path + "' for writing");
  out << "k";
  for (int i = 0; i < n; ++i) out << ",x" << i;
  for (int i = 0; i < nz; ++i) out << ",z" << i;
  out << "\n";
  char buf[32];
  for (int k = 0; k <= horizon; ++k) {
    out << k;
    for (int i = 0; i < n; ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g", t.states(i, k));
      out << ',' << buf;
    }
    for (int i = 0; i < nz; ++i) {
      out << ',';
      if (k > 0) {
        std::snprintf(buf, sizeof(buf), "%.17g", t.observations(i, k - 1));
        out << buf;
      }
    }
    out << "\n";
  }
  if (!out) throw ParseError("failed while writing '" + path + "'");
}

Trajectory load_trajectory(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw ParseError("'" + path + "' is empty");
  const auto header = split_csv(line);
  if (header.empty() || header[0] != "k")
    throw ParseError("'" + path + "': expected header starting with 'k' at line 1");
  int n = 0, nz = 0;
  for (std::size_t i = 1; i < header.size(); ++i) {
    if (!header[i].empty() && header[i][0] == 'x')
      ++n;
    else if (!header[i].empty() && header[i][0] == 'z')
      ++nz;
    else
      throw ParseError("'" + path + "': unrecognised column '" + header[i] + "' at line 1");
  }
  if (n == 0) throw ParseError("'" + path + "': no state columns");

  std::vector<std::vector<std::string>> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto fields = split_csv(line);
    if (static_cast<int>(fields.size()) != 1 + n + nz)
      throw ParseError("'" + path + "': expected " + std::to_string(1 + n + nz) +
                       " fields at line " + std::to_string(line_no));
    rows.push_back(std::move(fields));
  }
  if (rows.empty()) throw ParseError("'" + path + "': no data rows");

  const int horizon = static_cast<int>(rows.size()) - 1;
  Trajectory t;
  t.states.resize(n, horizon + 1);
  t.observations.resize(nz, horizon);
  for (int k = 0; k <= horizon; ++k) {
    const int ln = k + 2;
    const auto& f = rows[static_cast<std::size_t>(k)];
    if (static_cast<int>(parse_field(f[0], ln)) != k)
      throw ParseError("'" + path + "': expected step " + std::to_string(k) + " at line " +
                       std::to_string(ln));
    for (int i = 0; i < n; ++i) t.states(i, k) = parse_field(f[1 + i], ln);
    for (int i = 0; i < nz; ++i) {
      if (k == 0) {
        if (!f[1 + n + i].empty())
          throw ParseError("'" + path + "': unexpected observation in the first row (line 2)");
      } else {
        t.observations(i, k - 1) = parse_field(f[1 + n + i], ln);
      }
    }
  }
  return t;
}

}  // namespace gmf
