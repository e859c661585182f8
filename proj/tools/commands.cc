#include "commands.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numbers>
#include <random>
#include <variant>

#include <CLI11.hpp>

#include "degctrl/errors.h"
#include "degctrl/lr_controller.h"
#include "degctrl/moment_control.h"
#include "degctrl/parallel.h"
#include "degctrl/spectrum.h"

namespace degctrl::cli {
namespace {

namespace fs = std::filesystem;

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Cell {
  std::string text;
  Cell(double v) : text(format_double(v)) {}
  Cell(int v) : text(std::to_string(v)) {}
  Cell(bool v) : text(v ? "1" : "0") {}
  Cell(const char* s) : text(s) {}
  Cell(std::string s) : text(std::move(s)) {}
};

class CsvFile {
 public:
  CsvFile(const fs::path& path, const std::vector<std::string>& header) : path_(path), out_(path) {
    if (!out_) throw ConfigError("cannot write " + path.string());
    std::vector<Cell> cells(header.begin(), header.end());
    row(cells);
  }
  void row(const std::vector<Cell>& cells) {
    for (size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i].text;
    out_ << '\n';
  }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
  std::ofstream out_;
};

// Uniform in [-1, 1) from the top 53 bits; independent of the standard
// library's distribution implementation.
double uniform_pm1(std::mt19937_64& rng) {
  return 2.0 * static_cast<double>(rng() >> 11) * 0x1.0p-53 - 1.0;
}

// Fills coeffs (n x cols) from the initial-state description; weight(col) is
// the harmonic profile.
template <class Weight>
void fill_initial(Mat& coeffs, const InitialState& s, std::uint64_t seed, Weight weight) {
  std::mt19937_64 rng(seed);
  for (Eigen::Index c = 0; c < coeffs.cols(); ++c) {
    for (Eigen::Index i = 0; i < coeffs.rows(); ++i) {
      double v = 0.0;
      if (s.kind == "ones") v = s.scale;
      else if (s.kind == "harmonic") v = s.scale * weight(static_cast<int>(c));
      else if (s.kind == "random") v = s.scale * weight(static_cast<int>(c)) * uniform_pm1(rng);
      else if (s.kind == "explicit") v = s.coeffs[i][c];
      coeffs(i, c) = v;
    }
  }
}

ModalState1D initial_1d(const ExperimentConfig& c, std::uint64_t seed) {
  ModalState1D w0 = make_state_1d(system_from(c), make_exponent(c.alpha[0]), c.K);
  fill_initial(w0.coeffs, c.initial, seed, [](int col) { return 1.0 / (col + 1); });
  return w0;
}

SynthesisOptions synthesis_options(const ExperimentConfig& c) {
  SynthesisOptions opt;
  opt.theta = c.theta;
  opt.weight_power = c.weight_power;
  opt.cond_cap = c.cond_cap;
  opt.tolerance = c.tolerance;
  return opt;
}

std::vector<fs::path> cmd_spectrum(const ExperimentConfig& c, const fs::path& out) {
  CsvFile csv(out / "spectrum.csv",
              {"alpha", "k", "zero", "eigenvalue", "obs_trace", "oracle_eigenvalue", "rel_err"});
  for (double alpha : c.alpha) {
    const DegeneracyExponent e = make_exponent(alpha);
    const std::vector<SpectralMode> ms = modes(e, c.K);
    const std::vector<double> oracle = sturm_liouville_fd_oracle(e, c.K, c.M);
    for (int k = 1; k <= c.K; ++k) {
      const SpectralMode& m = ms[k - 1];
      const double rel = std::abs(oracle[k - 1] - m.eigenvalue) / m.eigenvalue;
      csv.row({alpha, k, m.zero, m.eigenvalue, m.obs_trace, oracle[k - 1], rel});
    }
  }
  return {csv.path()};
}

std::vector<fs::path> cmd_gap(const ExperimentConfig& c, const fs::path& out) {
  CsvFile csv(out / "gap.csv", {"alpha", "k", "m", "gap", "lower_bound", "upper_bound", "ok"});
  for (double alpha : c.alpha) {
    const DegeneracyExponent e = make_exponent(alpha);
    const std::vector<SpectralMode> ms = modes(e, c.K);
    const double pk2 = std::numbers::pi * std::numbers::pi * e.kappa * e.kappa;
    const double rho1 = pk2 / 4.0, rho2 = 2.0 * pk2;
    for (int k = 2; k <= c.K; ++k) {
      for (int m = 1; m < k; ++m) {
        const double d = static_cast<double>(k) * k - static_cast<double>(m) * m;
        const double gap = ms[k - 1].eigenvalue - ms[m - 1].eigenvalue;
        const double lo = rho1 * d, hi = rho2 * d;
        csv.row({alpha, k, m, gap, lo, hi, lo <= gap && gap <= hi});
      }
    }
  }
  return {csv.path()};
}

std::vector<fs::path> cmd_kalman(const ExperimentConfig& c, const fs::path& out) {
  const ControllabilityVerdict v =
      check_controllability(system_from(c), make_exponent(c.alpha[0]), c.K);
  CsvFile csv(out / "kalman.csv", {"k", "rank", "expected", "controllable"});
  for (int k = 1; k <= v.K_max; ++k) {
    csv.row({k, v.rank[k - 1], v.expected[k - 1], static_cast<bool>(v.per_k[k - 1])});
  }
  return {csv.path()};
}

std::vector<fs::path> cmd_control1d(const ExperimentConfig& c, const fs::path& out,
                                    std::uint64_t seed) {
  const ModalState1D w0 = initial_1d(c, seed);
  const SynthesisResult res = synthesize_control(w0, c.T, synthesis_options(c));
  const int m = res.h.m();
  const bool complex_values = res.h.values.imag().cwiseAbs().maxCoeff() > 0.0;
  std::vector<std::string> header{"t"};
  for (int q = 1; q <= m; ++q) {
    if (complex_values) {
      header.push_back("h" + std::to_string(q) + "_re");
      header.push_back("h" + std::to_string(q) + "_im");
    } else {
      header.push_back("h" + std::to_string(q));
    }
  }
  CsvFile csv(out / "control1d.csv", header);
  for (int i = 0; i < res.h.samples(); ++i) {
    std::vector<Cell> row{res.h.grid[i]};
    for (int q = 0; q < m; ++q) {
      row.emplace_back(res.h.values(q, i).real());
      if (complex_values) row.emplace_back(res.h.values(q, i).imag());
    }
    csv.row(row);
  }
  CsvFile sum(out / "control1d_summary.csv",
              {"initial_norm", "final_ratio", "exact_ratio", "control_norm", "cond",
               "moment_residual", "tail_bound", "samples"});
  sum.row({norm_hm1_1d(w0), res.sampled_ratio, res.exact_ratio, res.l2_norm, res.cond,
           res.moment_residual, res.tail_bound, res.samples});
  return {csv.path(), sum.path()};
}

std::vector<fs::path> cmd_costcurve(const ExperimentConfig& c, const fs::path& out,
                                    std::uint64_t seed) {
  const ModalState1D w0 = initial_1d(c, seed);
  const std::vector<CostPoint> pts = cost_curve(w0, c.T_list, synthesis_options(c));
  CsvFile csv(out / "costcurve.csv", {"T", "control_norm", "T_times_log_norm", "ok"});
  for (const CostPoint& p : pts) {
    const double tl = p.ok ? p.T * std::log(p.norm) : std::nan("");
    csv.row({p.T, p.norm, tl, p.ok});
  }
  return {csv.path()};
}

std::vector<fs::path> cmd_spectralineq(const ExperimentConfig& c, const fs::path& out) {
  CsvFile csv(out / "spectralineq.csv", {"alpha", "J", "lambda_J", "sigma_min",
                                         "minus_log_sigma_min", "fitted_C", "fit_residual"});
  for (double alpha : c.alpha) {
    const SpectralFit fit =
        spectral_inequality_fit(make_exponent(alpha), c.omega[0], c.omega[1], c.J_list);
    for (size_t i = 0; i < fit.J.size(); ++i) {
      csv.row({alpha, fit.J[i], fit.lambda[i], fit.sigma_min[i], fit.m[i], fit.C,
               fit.residual[i]});
    }
  }
  return {csv.path()};
}

std::vector<fs::path> cmd_control2d(const ExperimentConfig& c, const fs::path& out,
                                    std::uint64_t seed) {
  const DegeneracyExponent ex = make_exponent(c.alpha[0]), ey = make_exponent(c.alpha[1]);
  ModalState2D u0 = make_state_2d(system_from(c), ex, ey, c.K, c.J);
  const int J = c.J;
  fill_initial(u0.coeffs, c.initial, seed, [J](int col) {
    return 1.0 / (static_cast<double>(col / J + 1) * (col % J + 1));
  });
  const RestrictionGram gram = restriction_gram(ey, c.omega[0], c.omega[1], c.J);
  const int beta = c.beta > 0 ? c.beta : default_beta(c.T);
  const LRSchedule schedule = make_schedule(c.T, c.rho, beta, c.K_stop);
  LROptions opt;
  opt.step.synth = synthesis_options(c);
  opt.step.tolerance = c.tolerance;
  const LRReport rep = run_lr(u0, schedule, gram, opt);

  CsvFile steps(out / "control2d.csv",
                {"a_k", "gamma_k", "norm_hm1_before", "norm_after_control",
                 "norm_after_dissipation", "step_control_norm"});
  for (const LRStepRecord& r : rep.records) {
    steps.row({r.a, r.gamma, r.norm_before, r.norm_after_control, r.norm_after_dissipation,
               r.control_norm});
  }

  const int m = u0.sys.m;
  std::vector<std::string> header{"step", "t", "y"};
  for (int q = 1; q <= m; ++q) header.push_back("q" + std::to_string(q));
  CsvFile field(out / "control2d_field.csv", header);
  std::vector<double> y(c.field_ny);
  for (int l = 0; l < c.field_ny; ++l) y[l] = static_cast<double>(l) / (c.field_ny - 1);
  for (size_t s = 0; s < rep.steps.size(); ++s) {
    const StepResult& st = rep.steps[s];
    for (int i = 0; i < c.field_nt; ++i) {
      const double t = st.T * i / (c.field_nt - 1);
      const Mat q = st.control_at(t, y, ey, u0.ymodes, gram);
      for (int l = 0; l < c.field_ny; ++l) {
        std::vector<Cell> row{static_cast<int>(s), st.a + t, y[l]};
        for (int k = 0; k < m; ++k) row.emplace_back(q(k, l).real());
        field.row(row);
      }
    }
  }

  CsvFile sum(out / "control2d_summary.csv",
              {"initial_norm", "final_norm", "final_ratio", "total_control_norm", "tail_time",
               "beta", "identity_error", "completed"});
  sum.row({rep.initial_norm, rep.final_norm, rep.final_ratio, rep.total_control_norm,
           rep.tail_time, beta, schedule.identity_error, rep.completed});
  if (!rep.completed) throw RefusalError("control2d: " + rep.error);
  return {steps.path(), field.path(), sum.path()};
}

}  // namespace

std::vector<fs::path> run_command(const std::string& sub, const ExperimentConfig& c,
                                  const fs::path& out, std::uint64_t seed) {
  validate(c, sub);
  fs::create_directories(out);
  if (sub == "spectrum") return cmd_spectrum(c, out);
  if (sub == "gap") return cmd_gap(c, out);
  if (sub == "kalman") return cmd_kalman(c, out);
  if (sub == "control1d") return cmd_control1d(c, out, seed);
  if (sub == "costcurve") return cmd_costcurve(c, out, seed);
  if (sub == "spectralineq") return cmd_spectralineq(c, out);
  return cmd_control2d(c, out, seed);
}

int cli_main(int argc, char** argv) {
  CLI::App app{"Boundary null-control workbench for degenerate parabolic equations"};
  std::string sub, config_path, out_dir = ".";
  int threads = 0;
  std::uint64_t seed = 0;
  app.add_option("subcommand", sub, "spectrum | gap | kalman | control1d | costcurve | "
                                    "spectralineq | control2d")
      ->required()
      ->check(CLI::IsMember(subcommands()));
  app.add_option("--config", config_path, "JSON experiment config")->required();
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--threads", threads, "worker threads (0: hardware concurrency)")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--seed", seed, "seed for random initial states");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (threads > 0) set_num_threads(threads);
    const ExperimentConfig config = load_config(config_path);
    for (const fs::path& p : run_command(sub, config, out_dir, seed)) std::cout << p.string() << '\n';
    return 0;
  } catch (const std::invalid_argument& e) {  // ConfigError, DomainError
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {  // NumericalError and its refinements, RefusalError
    std::cerr << "refused: " << e.what() << '\n';
    return 3;
  }
}

}  // namespace degctrl::cli
