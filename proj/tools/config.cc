#include "config.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "degctrl/errors.h"

namespace degctrl::cli {
namespace {

using nlohmann::json;

template <class T>
void read_key(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& item : j.items()) {
    if (!known.count(item.key())) throw ConfigError("unknown config key '" + item.key() + "' in " + where);
  }
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

bool finite(double v) { return std::isfinite(v); }

void check_alpha(double a) {
  require(finite(a) && a >= 0.0 && a < 2.0, "alpha values must lie in [0, 2)");
}

void check_rect(const std::vector<std::vector<double>>& m, const std::string& name) {
  require(!m.empty() && !m.front().empty(), name + " must be a nonempty nested array");
  for (const auto& row : m) {
    require(row.size() == m.front().size(), name + " rows must have equal length");
    for (double v : row) require(finite(v), name + " entries must be finite");
  }
}

void check_system(const ExperimentConfig& c) {
  check_rect(c.A, "A");
  check_rect(c.B, "B");
  require(c.A.size() == c.A.front().size(), "A must be square");
  require(c.B.size() == c.A.size(), "B must have as many rows as A");
  require(finite(c.mu_shift), "mu_shift must be finite");
}

void check_initial(const ExperimentConfig& c, int columns) {
  static const std::set<std::string> kinds{"zero", "ones", "harmonic", "random", "explicit"};
  require(kinds.count(c.initial.kind) > 0,
          "initial.kind must be one of zero, ones, harmonic, random, explicit");
  require(finite(c.initial.scale), "initial.scale must be finite");
  if (c.initial.kind == "explicit") {
    check_rect(c.initial.coeffs, "initial.coeffs");
    require(c.initial.coeffs.size() == c.A.size(), "initial.coeffs must have n rows");
    require(static_cast<int>(c.initial.coeffs.front().size()) == columns,
            "initial.coeffs has the wrong number of columns");
  }
}

void check_synthesis(const ExperimentConfig& c) {
  require(c.tolerance > 0.0 && c.tolerance < 1.0, "tolerance must lie in (0, 1)");
  require(c.cond_cap > 1.0, "cond_cap must exceed 1");
  require(c.theta > 0.0 && c.theta <= 1.0, "theta must lie in (0, 1]");
  require(c.weight_power >= 0 && c.weight_power <= 8, "weight_power must lie in [0, 8]");
}

void check_omega(const ExperimentConfig& c) {
  require(c.omega.size() == 2, "omega must be [a, b]");
  require(c.omega[0] >= 0.0 && c.omega[0] < c.omega[1] && c.omega[1] <= 1.0,
          "omega must satisfy 0 <= a < b <= 1");
}

}  // namespace

void to_json(json& j, const InitialState& s) {
  j = json{{"kind", s.kind}, {"scale", s.scale}, {"coeffs", s.coeffs}};
}

void from_json(const json& j, InitialState& s) {
  reject_unknown(j, {"kind", "scale", "coeffs"}, "initial");
  read_key(j, "kind", s.kind);
  read_key(j, "scale", s.scale);
  read_key(j, "coeffs", s.coeffs);
}

void to_json(json& j, const ExperimentConfig& c) {
  j = json{{"alpha", c.alpha},       {"K", c.K},
           {"J", c.J},               {"M", c.M},
           {"T", c.T},               {"T_list", c.T_list},
           {"rho", c.rho},           {"beta", c.beta},
           {"K_stop", c.K_stop},     {"omega", c.omega},
           {"J_list", c.J_list},     {"A", c.A},
           {"B", c.B},               {"mu_shift", c.mu_shift},
           {"initial", c.initial},   {"tolerance", c.tolerance},
           {"cond_cap", c.cond_cap}, {"theta", c.theta},
           {"weight_power", c.weight_power}, {"field_nt", c.field_nt},
           {"field_ny", c.field_ny}};
}

void from_json(const json& j, ExperimentConfig& c) {
  reject_unknown(j,
                 {"alpha", "K", "J", "M", "T", "T_list", "rho", "beta", "K_stop", "omega", "J_list",
                  "A", "B", "mu_shift", "initial", "tolerance", "cond_cap", "theta", "weight_power",
                  "field_nt", "field_ny"},
                 "config");
  // A bare number is accepted for a single exponent.
  if (j.contains("alpha") && j.at("alpha").is_number()) {
    c.alpha = {j.at("alpha").get<double>()};
  } else {
    read_key(j, "alpha", c.alpha);
  }
  read_key(j, "K", c.K);
  read_key(j, "J", c.J);
  read_key(j, "M", c.M);
  read_key(j, "T", c.T);
  read_key(j, "T_list", c.T_list);
  read_key(j, "rho", c.rho);
  read_key(j, "beta", c.beta);
  read_key(j, "K_stop", c.K_stop);
  read_key(j, "omega", c.omega);
  read_key(j, "J_list", c.J_list);
  read_key(j, "A", c.A);
  read_key(j, "B", c.B);
  read_key(j, "mu_shift", c.mu_shift);
  if (j.contains("initial")) c.initial = j.at("initial").get<InitialState>();
  read_key(j, "tolerance", c.tolerance);
  read_key(j, "cond_cap", c.cond_cap);
  read_key(j, "theta", c.theta);
  read_key(j, "weight_power", c.weight_power);
  read_key(j, "field_nt", c.field_nt);
  read_key(j, "field_ny", c.field_ny);
}

ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return j.get<ExperimentConfig>();
}

std::string serialize_config(const ExperimentConfig& c) {
  return json(c).dump(2) + "\n";
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"spectrum",  "gap",          "kalman",   "control1d",
                                              "costcurve", "spectralineq", "control2d"};
  return names;
}

void validate(const ExperimentConfig& c, const std::string& sub) {
  const auto& names = subcommands();
  require(std::find(names.begin(), names.end(), sub) != names.end(), "unknown subcommand " + sub);
  require(!c.alpha.empty(), "alpha must not be empty");
  for (double a : c.alpha) check_alpha(a);

  if (sub == "spectrum") {
    require(c.K >= 1 && c.K <= 5000, "K must lie in [1, 5000]");
    require(c.M >= 200, "M must be >= 200");
    require(c.K < c.M, "K must be smaller than M");
  } else if (sub == "gap") {
    require(c.K >= 2 && c.K <= 5000, "K must lie in [2, 5000]");
  } else if (sub == "kalman") {
    require(c.alpha.size() == 1, "kalman takes a single alpha");
    require(c.K >= 1 && c.K <= 512, "K must lie in [1, 512]");
    check_system(c);
  } else if (sub == "control1d" || sub == "costcurve") {
    require(c.alpha.size() == 1, sub + " takes a single alpha");
    require(c.K >= 1 && c.K <= 200, "K must lie in [1, 200]");
    check_system(c);
    check_initial(c, c.K);
    check_synthesis(c);
    if (sub == "control1d") {
      require(finite(c.T) && c.T > 0.0, "T must be positive");
    } else {
      require(!c.T_list.empty(), "T_list must not be empty");
      for (double t : c.T_list) require(finite(t) && t > 0.0, "T_list entries must be positive");
    }
  } else if (sub == "spectralineq") {
    check_omega(c);
    require(!c.J_list.empty(), "J_list must not be empty");
    for (size_t i = 0; i < c.J_list.size(); ++i) {
      require(c.J_list[i] >= 1 && c.J_list[i] <= 200, "J_list entries must lie in [1, 200]");
      require(i == 0 || c.J_list[i] > c.J_list[i - 1], "J_list must increase");
    }
  } else if (sub == "control2d") {
    require(c.alpha.size() == 2, "control2d takes alpha = [alpha_x, alpha_y]");
    require(c.K >= 1 && c.K <= 200 && c.J >= 1 && c.J <= 100, "need 1 <= K <= 200, 1 <= J <= 100");
    require(finite(c.T) && c.T > 0.0, "T must be positive");
    require(c.rho > 0.0 && c.rho < 1.0, "rho must lie in (0, 1)");
    require(c.beta >= 0, "beta must be >= 0 (0 selects the default)");
    require(c.K_stop >= 1 && c.K_stop <= 30, "K_stop must lie in [1, 30]");
    check_omega(c);
    check_system(c);
    check_initial(c, c.K * c.J);
    check_synthesis(c);
    require(c.field_nt >= 2 && c.field_ny >= 2, "field_nt and field_ny must be >= 2");
  }
}

CoupledSystem system_from(const ExperimentConfig& c) {
  const int n = static_cast<int>(c.A.size());
  const int m = static_cast<int>(c.B.front().size());
  Mat A(n, n), B(n, m);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) A(i, j) = c.A[i][j];
    for (int j = 0; j < m; ++j) B(i, j) = c.B[i][j];
  }
  return make_system(A, B, c.mu_shift);
}

}  // namespace degctrl::cli
