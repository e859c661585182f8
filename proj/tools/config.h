#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "degctrl/kalman.h"

namespace degctrl::cli {

/// Initial coefficients. kind: zero | ones | harmonic | random | explicit.
///   ones      c = scale
///   harmonic  c = scale / k (1-d) or scale / (k j) (2-d)
///   random    harmonic times a uniform draw in [-1, 1] (seeded by --seed)
///   explicit  coeffs given as an n x K (1-d) or n x (K J) array, column
///             (k-1) J + (j-1) in 2-d
struct InitialState {
  std::string kind = "harmonic";
  double scale = 1.0;
  std::vector<std::vector<double>> coeffs;

  bool operator==(const InitialState&) const = default;
};

/// One flat parameter set shared by all subcommands; each reads the keys it
/// needs. alpha holds a list for spectrum, gap and spectralineq, the single
/// exponent for kalman, control1d and costcurve, and (alpha_x, alpha_y) for
/// control2d.
struct ExperimentConfig {
  std::vector<double> alpha{0.5};
  int K = 12;
  int J = 16;
  int M = 4000;  // oracle mesh size (spectrum)
  double T = 1.0;
  std::vector<double> T_list{1.0, 0.5, 0.33, 0.25};
  double rho = 0.5;
  int beta = 0;  // 0: ceil(2 / T)
  int K_stop = 6;
  std::vector<double> omega{0.3, 0.7};
  std::vector<int> J_list{1, 2, 5, 10, 20, 30, 40};
  std::vector<std::vector<double>> A{{0.0}};
  std::vector<std::vector<double>> B{{1.0}};
  double mu_shift = 0.0;
  InitialState initial;
  double tolerance = 1e-6;
  double cond_cap = 1e24;
  double theta = 0.75;
  int weight_power = 2;
  int field_nt = 33;  // control2d field dump: times per active interval
  int field_ny = 41;  // and points on [0, 1]

  bool operator==(const ExperimentConfig&) const = default;
};

void to_json(nlohmann::json& j, const InitialState& s);
void from_json(const nlohmann::json& j, InitialState& s);
void to_json(nlohmann::json& j, const ExperimentConfig& c);
/// Missing keys keep their defaults; unknown keys and type mismatches throw
/// ConfigError.
void from_json(const nlohmann::json& j, ExperimentConfig& c);

ExperimentConfig parse_config(const std::string& text);
std::string serialize_config(const ExperimentConfig& c);
ExperimentConfig load_config(const std::string& path);

const std::vector<std::string>& subcommands();

/// Checks the keys used by a subcommand against the module preconditions.
/// Throws ConfigError.
void validate(const ExperimentConfig& c, const std::string& subcommand);

CoupledSystem system_from(const ExperimentConfig& c);

}  // namespace degctrl::cli
