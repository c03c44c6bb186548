#include "gmf/decomp_cache.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <array>
#include <map>
#include <sstream>
#include <vector>

#include "gmf/errors.hpp"

namespace gmf {

namespace {

constexpr int kFormatVersion = 1;
constexpr const char* kMagic = "gmf-decomp";

/// Shortest representation that parses back to the identical double.
std::string full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

[[noreturn]] void fail(int line_no, const std::string& what) {
  throw ParseError("decomposition cache line " + std::to_string(line_no) + ": " + what);
}

double parse_double(const std::string& token, int line_no) {
  const char* begin = token.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0') fail(line_no, "expected a number, got '" + token + "'");
  return v;
}

std::vector<std::string> split(const std::string& line) {
  std::istringstream stream(line);
  std::vector<std::string> tokens;
  std::string token;
  while (stream >> token) tokens.push_back(token);
  return tokens;
}

struct Header {
  std::string kind;
  int n_x = 0;
  int m = 0;
  int k = 0;
  double region_lo = 0.0, region_hi = 0.0;
  double spacing = 0.0;
  double sigma_bar = 1.0, omega_bar = 1.0;
  std::string weight_rule;
  bool scaled = false;
  double base_q = 0.0, bump_coeff = 0.0;
  std::map<std::string, bool> seen;
};

void write_file(const std::string& path, const std::string& body) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << body;
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw Error("cannot write decomposition cache to '" + path + "'");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error("cannot move decomposition cache into place at '" + path + "'");
  }
}

std::string header_text(const std::string& kind, int m, int k, double region_lo, double region_hi,
                        double spacing, double sigma_bar, double omega_bar) {
  std::ostringstream out;
  out << kMagic << ' ' << kFormatVersion << '\n';
  out << "kind " << kind << '\n';
  out << "n_x 1\n";
  out << "M " << m << '\n';
  out << "k " << k << '\n';
  out << "region " << full(region_lo) << ' ' << full(region_hi) << '\n';
  out << "spacing " << full(spacing) << '\n';
  out << "sigma_bar " << full(sigma_bar) << '\n';
  out << "omega_bar " << full(omega_bar) << '\n';
  return out.str();
}

void record_line(std::ostringstream& out, double omega, double m_g, double var_g, double m_p,
                 double var_p) {
  out << full(omega) << ' ' << full(m_g) << ' ' << full(var_g) << ' ' << full(m_p) << ' '
      << full(var_p) << '\n';
}

}  // namespace

void save_decomposition(const std::string& path, const FsgDecomposition& decomp) {
  std::ostringstream out;
  out << header_text("FSG", static_cast<int>(decomp.terms.size()), decomp.k, decomp.region_lo,
                     decomp.region_hi, decomp.spacing, decomp.sigma_bar, decomp.omega_bar);
  out << "weight_rule "
      << (decomp.rule == FsgWeightRule::kConstant ? "constant" : "per_term") << '\n';
  out << "scaled " << (decomp.scaled ? 1 : 0) << '\n';
  out << "terms\n";
  for (const FsgTerm& t : decomp.terms)
    record_line(out, t.omega, t.g_mean, t.g_var, t.gamma_mean, t.gamma_var);
  write_file(path, out.str());
}

void save_decomposition(const std::string& path, const PsgDecomposition& decomp) {
  std::ostringstream out;
  out << header_text("PSG", decomp.rank(), 0, decomp.region_lo, decomp.region_hi, decomp.step,
                     1.0, 1.0);
  out << "base_q " << full(decomp.base_q) << '\n';
  out << "bump_coeff " << full(decomp.bump_coeff) << '\n';
  out << "terms\n";
  for (int j = 0; j < decomp.rank(); ++j)
    record_line(out, decomp.weights(j), decomp.locations(j), decomp.shared_var,
                decomp.locations(j), decomp.shared_var);
  write_file(path, out.str());
}

DecompCache load_decomposition(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open decomposition cache '" + path + "'");

  std::string line;
  int line_no = 0;

  // Magic and version.
  if (!std::getline(in, line)) fail(1, "empty file");
  ++line_no;
  {
    const auto tokens = split(line);
    if (tokens.size() != 2 || tokens[0] != kMagic)
      fail(line_no, std::string("not a decomposition cache (expected '") + kMagic + " <version>')");
    const int version = static_cast<int>(parse_double(tokens[1], line_no));
    if (version != kFormatVersion)
      fail(line_no, "unsupported format version " + std::to_string(version) +
                        " (this build reads version " + std::to_string(kFormatVersion) + ")");
  }

  // Header keys until the "terms" marker.
  Header h;
  bool saw_terms = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto tokens = split(line);
    if (tokens.empty()) fail(line_no, "blank line inside header");
    const std::string& key = tokens[0];
    if (key == "terms") {
      if (tokens.size() != 1) fail(line_no, "unexpected tokens after 'terms'");
      saw_terms = true;
      break;
    }
    if (h.seen[key]) fail(line_no, "duplicate header key '" + key + "'");
    h.seen[key] = true;
    const auto need = [&](std::size_t n) {
      if (tokens.size() != n + 1)
        fail(line_no, "header key '" + key + "' expects " + std::to_string(n) + " value(s)");
    };
    if (key == "kind") {
      need(1);
      h.kind = tokens[1];
      if (h.kind != "FSG" && h.kind != "PSG") fail(line_no, "unknown kind '" + h.kind + "'");
    } else if (key == "n_x") {
      need(1);
      h.n_x = static_cast<int>(parse_double(tokens[1], line_no));
      if (h.n_x != 1) fail(line_no, "n_x " + std::to_string(h.n_x) +
                                        " unsupported (scalar decompositions only)");
    } else if (key == "M") {
      need(1);
      h.m = static_cast<int>(parse_double(tokens[1], line_no));
      if (h.m < 1) fail(line_no, "M must be at least 1");
    } else if (key == "k") {
      need(1);
      h.k = static_cast<int>(parse_double(tokens[1], line_no));
    } else if (key == "region") {
      need(2);
      h.region_lo = parse_double(tokens[1], line_no);
      h.region_hi = parse_double(tokens[2], line_no);
    } else if (key == "spacing") {
      need(1);
      h.spacing = parse_double(tokens[1], line_no);
    } else if (key == "sigma_bar") {
      need(1);
      h.sigma_bar = parse_double(tokens[1], line_no);
    } else if (key == "omega_bar") {
      need(1);
      h.omega_bar = parse_double(tokens[1], line_no);
    } else if (key == "weight_rule") {
      need(1);
      h.weight_rule = tokens[1];
      if (h.weight_rule != "constant" && h.weight_rule != "per_term")
        fail(line_no, "unknown weight_rule '" + h.weight_rule + "'");
    } else if (key == "scaled") {
      need(1);
      h.scaled = parse_double(tokens[1], line_no) != 0.0;
    } else if (key == "base_q") {
      need(1);
      h.base_q = parse_double(tokens[1], line_no);
    } else if (key == "bump_coeff") {
      need(1);
      h.bump_coeff = parse_double(tokens[1], line_no);
    } else {
      fail(line_no, "unknown header key '" + key + "'");
    }
  }
  if (!saw_terms) fail(line_no + 1, "missing 'terms' marker");

  const auto require_key = [&](const char* key) {
    if (!h.seen[key])
      throw ParseError("decomposition cache '" + path + "': missing required header key '" +
                       std::string(key) + "'");
  };
  for (const char* key : {"kind", "n_x", "M", "k", "region", "spacing", "sigma_bar", "omega_bar"})
    require_key(key);
  const bool is_fsg = h.kind == "FSG";
  if (is_fsg) {
    require_key("weight_rule");
    require_key("scaled");
  } else {
    require_key("base_q");
    require_key("bump_coeff");
  }

  // Exactly M records of five numbers each.
  std::vector<std::array<double, 5>> records;
  records.reserve(h.m);
  while (static_cast<int>(records.size()) < h.m) {
    if (!std::getline(in, line))
      fail(line_no + 1, "expected " + std::to_string(h.m) + " term records, found " +
                            std::to_string(records.size()));
    ++line_no;
    const auto tokens = split(line);
    if (tokens.size() != 5)
      fail(line_no, "expected 5 numeric fields in term record, got " +
                        std::to_string(tokens.size()));
    std::array<double, 5> rec;
    for (int i = 0; i < 5; ++i) rec[i] = parse_double(tokens[i], line_no);
    records.push_back(rec);
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (!split(line).empty()) fail(line_no, "unexpected content after final record");
  }

  DecompCache cache;
  if (is_fsg) {
    cache.kind = DecompKind::kFsg;
    FsgDecomposition& d = cache.fsg;
    d.k = h.k;
    d.region_lo = h.region_lo;
    d.region_hi = h.region_hi;
    d.spacing = h.spacing;
    d.sigma_bar = h.sigma_bar;
    d.omega_bar = h.omega_bar;
    d.rule = h.weight_rule == "constant" ? FsgWeightRule::kConstant
                                         : FsgWeightRule::kPerTermNormalization;
    d.scaled = h.scaled;
    d.terms.reserve(h.m);
    for (const auto& r : records) d.terms.push_back({r[0], r[1], r[2], r[3], r[4]});
  } else {
    cache.kind = DecompKind::kPsg;
    PsgDecomposition& d = cache.psg;
    d.weights.resize(h.m);
    d.locations.resize(h.m);
    d.shared_var = records[0][2];
    for (int j = 0; j < h.m; ++j) {
      const auto& r = records[j];
      if (r[1] != r[3] || r[2] != r[4] || r[2] != d.shared_var)
        throw ParseError("decomposition cache '" + path +
                         "': paired-coordinate invariant violated in record " +
                         std::to_string(j + 1));
      d.weights(j) = r[0];
      d.locations(j) = r[1];
    }
    d.step = h.spacing;
    d.region_lo = h.region_lo;
    d.region_hi = h.region_hi;
    d.base_q = h.base_q;
    d.bump_coeff = h.bump_coeff;
  }
  return cache;
}

}  // namespace gmf
