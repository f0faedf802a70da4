#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "qfb/dynamics.hpp"
#include "qfb/estimation.hpp"
#include "qfb/fisher.hpp"
#include "qfb/trajectories.hpp"
#include "qfb/util.hpp"

namespace {

using nlohmann::json;
using namespace qfb;

constexpr double kHalfPi = 1.5707963267948966;
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

struct Options {
  double eta = 0.5;
  double lambda = 1.0;
  double theta = kHalfPi;
  double omega = 0.0;
  double t_final = 1.0;
  double dt = 1e-3;
  double n_probes = 1.0;
  int n_traj = 200;
  int dump_limit = 8;
  std::uint64_t seed = 12345;
  std::string kind = "dephasing";
  std::string grid_eta;
  std::string out;
  std::string config_path;
};

// Per-subcommand flag table; config keys resolve through the same names,
// and a flag given on the command line wins over the config file.
struct FlagTable {
  std::map<std::string, CLI::Option*> opt;
  std::map<std::string, std::function<void(const json&)>> set;
};

template <typename T>
void add_flag(FlagTable& table, CLI::App* cmd, const std::string& name, T& var,
              const std::string& desc) {
  table.opt[name] = cmd->add_option("--" + name, var, desc);
  table.set[name] = [&var](const json& v) { var = v.get<T>(); };
}

void apply_config(const std::string& path, FlagTable& table) {
  if (path.empty()) return;
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw std::invalid_argument("config parse failure: " + std::string(e.what()));
  }
  if (!doc.is_object()) {
    throw std::invalid_argument("config root must be a JSON object");
  }
  for (const auto& [key, value] : doc.items()) {
    const auto it = table.set.find(key);
    if (it == table.set.end()) {
      throw std::invalid_argument("unknown config key: " + key);
    }
    if (table.opt.at(key)->count() > 0) continue;
    try {
      it->second(value);
    } catch (const json::exception& e) {
      throw std::invalid_argument("config key '" + key + "': " + e.what());
    }
  }
}

struct GridSpec {
  double start;
  double stop;
  int count;
};

GridSpec parse_grid(const std::string& text) {
  GridSpec g{};
  std::size_t a = text.find(':');
  std::size_t b = a == std::string::npos ? a : text.find(':', a + 1);
  try {
    if (b == std::string::npos) throw std::invalid_argument("");
    std::size_t used = 0;
    g.start = std::stod(text.substr(0, a), &used);
    if (used != a) throw std::invalid_argument("");
    g.stop = std::stod(text.substr(a + 1, b - a - 1), &used);
    if (used != b - a - 1) throw std::invalid_argument("");
    g.count = std::stoi(text.substr(b + 1), &used);
    if (used != text.size() - b - 1) throw std::invalid_argument("");
  } catch (const std::exception&) {
    throw std::invalid_argument("grid spec must be start:stop:count, got '" +
                                text + "'");
  }
  if (g.count < 1 || !std::isfinite(g.start) || !std::isfinite(g.stop) ||
      g.start > g.stop) {
    throw std::invalid_argument("grid spec out of order or empty: '" + text + "'");
  }
  return g;
}

std::vector<double> eta_grid(const Options& o, bool allow_one) {
  const GridSpec g = parse_grid(o.grid_eta);
  if (g.start <= 0.0 || g.stop > 1.0 || (!allow_one && g.stop >= 1.0)) {
    std::ostringstream msg;
    msg << "eta grid [" << g.start << ", " << g.stop << "] must lie in (0, 1"
        << (allow_one ? "]" : ")");
    throw std::invalid_argument(msg.str());
  }
  return linspace(g.start, g.stop, static_cast<std::size_t>(g.count));
}

FeedbackChannel make_channel(const Options& o) {
  FeedbackChannel ch;
  if (o.kind == "dephasing") {
    ch.kind = ChannelKind::Dephasing;
  } else if (o.kind == "dissipative") {
    ch.kind = ChannelKind::Dissipative;
  } else {
    throw std::invalid_argument("kind must be dephasing or dissipative, got '" +
                                o.kind + "'");
  }
  ch.eta = o.eta;
  ch.lambda = o.lambda;
  ch.theta = o.theta;
  ch.omega = o.omega;
  ch.validate();
  return ch;
}

std::ofstream open_csv(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot open output file: " + path);
  return out;
}

void check_probes(double n_probes) {
  if (!(n_probes > 0.0)) {
    throw std::invalid_argument("n-probes must be > 0");
  }
}

int cmd_evolve(const Options& o) {
  const FeedbackChannel ch = make_channel(o);
  EvolutionSpec spec;
  spec.channel = ch;
  spec.t_final = o.t_final;
  spec.dt = o.dt;
  spec.validate();
  const EvolutionSeries series = evolve_numeric(spec);

  const bool dephasing = ch.kind == ChannelKind::Dephasing;
  std::ofstream out = open_csv(o.out);
  out << "t,rx,ry,rz,abs_rho01" << (dephasing ? ",analytic_abs_rho01" : "")
      << "\n";
  for (std::size_t k = 0; k < series.times.size(); ++k) {
    const BlochVector r = series.states[k].bloch();
    out << format_double(series.times[k]) << ',' << format_double(r.x) << ','
        << format_double(r.y) << ',' << format_double(r.z) << ','
        << format_double(std::abs(series.states[k].mat()(0, 1)));
    if (dephasing) {
      const DensityMatrix ref = evolve_analytic_dephasing(ch, series.times[k]);
      out << ',' << format_double(std::abs(ref.mat()(0, 1)));
    }
    out << "\n";
  }
  std::cout << "evolve: " << series.times.size() << " rows -> " << o.out << "\n";
  return 0;
}

int cmd_trajectories(const Options& o) {
  if (o.n_traj < 1) throw std::invalid_argument("n-traj must be >= 1");
  if (o.dump_limit < 0) throw std::invalid_argument("dump-limit must be >= 0");
  const FeedbackChannel ch = make_channel(o);
  const DensityMatrix init = DensityMatrix::plus_state();

  const int dumps = std::min(o.n_traj, o.dump_limit);
  for (int i = 0; i < dumps; ++i) {
    const TrajectoryRecord rec = simulate_trajectory(
        ch, init, o.t_final, o.dt, o.seed + static_cast<std::uint64_t>(i));
    write_trajectory_csv(rec, o.out + "_traj_" + std::to_string(i) + ".csv");
  }

  const EnsembleStats st =
      ensemble_stats(ch, init, o.t_final, o.dt, o.n_traj, o.seed);
  const std::string mean_path = o.out + "_mean.csv";
  std::ofstream out = open_csv(mean_path);
  out << "t,rx_mean,rx_3se,ry_mean,ry_3se,rz_mean,rz_3se\n";
  for (std::size_t k = 0; k < st.times.size(); ++k) {
    out << format_double(st.times[k]) << ','
        << format_double(st.mean[k].x) << ','
        << format_double(3.0 * st.std_error[k].x) << ','
        << format_double(st.mean[k].y) << ','
        << format_double(3.0 * st.std_error[k].y) << ','
        << format_double(st.mean[k].z) << ','
        << format_double(3.0 * st.std_error[k].z) << "\n";
  }

  const PhotocurrentStats& pc = st.photocurrent;
  const double corr_se =
      pc.n_samples > 0 ? 1.0 / std::sqrt(static_cast<double>(pc.n_samples)) : 0.0;
  const bool zero_mean = std::abs(pc.mean) <= 3.0 * pc.std_error;
  const bool zero_corr = std::abs(pc.corr_with_sz) <= 3.0 * corr_se;
  std::cout << "trajectories: " << o.n_traj << " runs, seed " << o.seed
            << ", " << dumps << " dumped -> " << mean_path << "\n"
            << "photocurrent mean " << format_double(pc.mean) << " (3se "
            << format_double(3.0 * pc.std_error) << "): zero-mean "
            << (zero_mean ? "pass" : "FAIL") << "\n"
            << "photocurrent corr with <sz> " << format_double(pc.corr_with_sz)
            << " (3se " << format_double(3.0 * corr_se) << "): zero-correlation "
            << (zero_corr ? "pass" : "FAIL") << "\n";
  return 0;
}

int cmd_fig2(const Options& o) {
  check_probes(o.n_probes);
  const auto grid = eta_grid(o, false);
  std::ofstream out = open_csv(o.out);
  out << "eta,exact_bound,approx_bound,opt_t,opt_lambda\n";
  for (double eta : grid) {
    const double approx = approx_bound(eta) / o.n_probes;
    double exact = kNan, opt_t = kNan, opt_lambda = kNan;
    try {
      const PrecisionReport rep = exact_bound(eta);
      exact = rep.bound_value / o.n_probes;
      opt_t = rep.optimal_t;
      opt_lambda = rep.optimal_lambda;
    } catch (const std::runtime_error& e) {
      std::cerr << "fig2: eta = " << format_double(eta) << ": " << e.what()
                << "\n";
    }
    out << format_double(eta) << ',' << format_double(exact) << ','
        << format_double(approx) << ',' << format_double(opt_t) << ','
        << format_double(opt_lambda) << "\n";
  }
  std::cout << "fig2: " << grid.size() << " rows -> " << o.out << "\n";
  return 0;
}

int cmd_fig3(const Options& o) {
  check_probes(o.n_probes);
  const auto grid = eta_grid(o, false);
  std::ofstream out = open_csv(o.out);
  out << "eta,simultaneous,independent\n";
  for (double eta : grid) {
    double sim = kNan, ind = kNan;
    try {
      const SimultaneousReport rep = simultaneous_vs_independent(eta);
      sim = rep.simultaneous_bound / o.n_probes;
      ind = rep.independent_bound / o.n_probes;
    } catch (const std::runtime_error& e) {
      std::cerr << "fig3: eta = " << format_double(eta) << ": " << e.what()
                << "\n";
    }
    out << format_double(eta) << ',' << format_double(sim) << ','
        << format_double(ind) << "\n";
  }
  std::cout << "fig3: " << grid.size() << " rows -> " << o.out << "\n";
  return 0;
}

int cmd_qfi_scan(const Options& o) {
  if (!(o.t_final > 0.0)) throw std::invalid_argument("t-final must be > 0");
  const auto grid = eta_grid(o, true);
  std::ofstream out = open_csv(o.out);
  out << "eta,lambda,theta,t,qfi_closed,qfi_spectral,qfi_2x2\n";

  double max_dev = 0.0;
  int flagged = 0;
  for (double eta : grid) {
    const double closed = qfi_eta_closed(eta, o.lambda, o.theta, o.t_final);
    double spectral = kNan, det_form = kNan;
    bool row_ok = true;
    try {
      const ParamFamily family =
          coherence_decay_family(o.lambda, o.theta, o.t_final, o.omega, eta);
      spectral = qfi_mixed_eigen(family, "eta");
      det_form = qfi_2d(family, "eta");
    } catch (const std::invalid_argument&) {
      row_ok = false;  // rank-deficient state or eta shift leaving [0, 1]
      ++flagged;
    }
    out << format_double(eta) << ',' << format_double(o.lambda) << ','
        << format_double(o.theta) << ',' << format_double(o.t_final) << ','
        << format_double(closed) << ',' << format_double(spectral) << ','
        << format_double(det_form) << "\n";
    if (row_ok) {
      const double vals[3] = {closed, spectral, det_form};
      for (int a = 0; a < 3; ++a) {
        for (int b = a + 1; b < 3; ++b) {
          const double scale = std::max({std::abs(vals[a]), std::abs(vals[b]), 1e-300});
          max_dev = std::max(max_dev, std::abs(vals[a] - vals[b]) / scale);
        }
      }
    }
  }
  std::cout << "qfi-scan: max pairwise relative deviation "
            << format_double(max_dev) << " over " << grid.size() << " rows ("
            << flagged << " singular rows flagged)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"single-qubit feedback simulation and estimation toolkit"};
  app.require_subcommand(1);
  Options o;

  std::map<const CLI::App*, FlagTable> tables;
  std::map<const CLI::App*, std::string> default_out;
  std::map<const CLI::App*, std::string> default_grid;

  const auto channel_flags = [&](CLI::App* cmd) {
    FlagTable& t = tables[cmd];
    add_flag(t, cmd, "eta", o.eta, "detection efficiency in [0, 1]");
    add_flag(t, cmd, "lambda", o.lambda, "feedback gain");
    add_flag(t, cmd, "theta", o.theta, "homodyne angle");
    add_flag(t, cmd, "omega", o.omega, "qubit frequency");
    add_flag(t, cmd, "kind", o.kind, "channel: dephasing or dissipative");
  };
  const auto common_flags = [&](CLI::App* cmd, const std::string& out_default) {
    FlagTable& t = tables[cmd];
    add_flag(t, cmd, "out", o.out, "output CSV path");
    cmd->add_option("--config", o.config_path,
                    "JSON config; command-line flags take precedence");
    default_out[cmd] = out_default;
  };

  CLI::App* evolve = app.add_subcommand("evolve", "integrate the unconditioned evolution");
  channel_flags(evolve);
  add_flag(tables[evolve], evolve, "t-final", o.t_final, "evolution time");
  add_flag(tables[evolve], evolve, "dt", o.dt, "integrator step");
  common_flags(evolve, "evolve.csv");

  CLI::App* traj = app.add_subcommand("trajectories", "sample conditioned trajectories");
  channel_flags(traj);
  add_flag(tables[traj], traj, "t-final", o.t_final, "evolution time");
  add_flag(tables[traj], traj, "dt", o.dt, "integrator step");
  add_flag(tables[traj], traj, "n-traj", o.n_traj, "ensemble size");
  add_flag(tables[traj], traj, "seed", o.seed, "base RNG seed; run i uses seed + i");
  add_flag(tables[traj], traj, "dump-limit", o.dump_limit,
           "max per-trajectory CSV files (0 = none)");
  common_flags(traj, "trajectories");

  CLI::App* fig2 = app.add_subcommand("fig2", "efficiency precision bound vs eta");
  add_flag(tables[fig2], fig2, "grid-eta", o.grid_eta, "eta grid start:stop:count");
  add_flag(tables[fig2], fig2, "n-probes", o.n_probes, "probe count dividing the bounds");
  common_flags(fig2, "fig2.csv");
  default_grid[fig2] = "0.05:0.95:19";

  CLI::App* fig3 = app.add_subcommand("fig3", "simultaneous vs independent estimation");
  add_flag(tables[fig3], fig3, "grid-eta", o.grid_eta, "eta grid start:stop:count");
  add_flag(tables[fig3], fig3, "n-probes", o.n_probes, "probe count dividing the bounds");
  common_flags(fig3, "fig3.csv");
  default_grid[fig3] = "0.1:0.9:9";

  CLI::App* scan = app.add_subcommand("qfi-scan", "cross-validate QFI formulas on an eta grid");
  add_flag(tables[scan], scan, "grid-eta", o.grid_eta, "eta grid start:stop:count");
  add_flag(tables[scan], scan, "lambda", o.lambda, "feedback gain");
  add_flag(tables[scan], scan, "theta", o.theta, "homodyne angle");
  add_flag(tables[scan], scan, "omega", o.omega, "qubit frequency");
  add_flag(tables[scan], scan, "t-final", o.t_final, "interrogation time");
  common_flags(scan, "qfi_scan.csv");
  default_grid[scan] = "0.05:0.95:19";

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  CLI::App* sub = app.get_subcommands().front();
  try {
    apply_config(o.config_path, tables[sub]);
    if (o.out.empty()) o.out = default_out[sub];
    if (o.grid_eta.empty()) o.grid_eta = default_grid[sub];
    if (sub == evolve) return cmd_evolve(o);
    if (sub == traj) return cmd_trajectories(o);
    if (sub == fig2) return cmd_fig2(o);
    if (sub == fig3) return cmd_fig3(o);
    return cmd_qfi_scan(o);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::runtime_error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  }
}
