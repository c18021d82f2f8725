// pacs-sim: scenario runner and quick queries for cascaded parametric amplifiers.
//
//   pacs-sim run scenario.json [--out-dir DIR]
//   pacs-sim pacs --alpha 1 --lambda 0.05 --pattern 10
//   pacs-sim wstate --n 3 --alpha 1 --lambda 0.05
//   pacs-sim wigner --state pacs:1:1 --range 5 --step 0.1 [--output FILE]
//   pacs-sim sweep --param lambda --values 0.01,0.02,0.04 [--n 1 --clicks 1 --fit FILE]
//
// Exit status: 0 success, 1 validation error, 2 numerical budget exceeded.

#include <filesystem>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "pacs/scenario.hpp"

namespace {

using namespace pacs;
using namespace pacs::cli;

struct ChainOptions {
  std::string alpha = "1";
  double lambda = 0.05;
  std::size_t n = 1;
  std::size_t idler_dim = kDefaultIdlerDim;
  std::size_t signal_dim = 0;
  double eta = 1.0;
  double dark = 0.0;
  bool sequential = false;

  void add_to(CLI::App* app, bool with_n) {
    app->add_option("--alpha", alpha, "Seed coherent amplitude (e.g. 1, 0.5+0.5j)")->capture_default_str();
    app->add_option("--lambda", lambda, "Effective interaction time of every stage")->capture_default_str();
    if (with_n) app->add_option("--n", n, "Number of amplifier stages")->capture_default_str()->check(CLI::PositiveNumber);
    app->add_option("--idler-dim", idler_dim, "Fock cutoff of each idler")->capture_default_str();
    app->add_option("--signal-dim", signal_dim, "Fock cutoff of the signal (0: truncation policy)");
    app->add_option("--eta", eta, "Detector efficiency")->capture_default_str();
    app->add_option("--dark", dark, "Dark-count probability per gate")->capture_default_str();
    app->add_flag("--sequential", sequential, "Measure each idler right after its stage");
  }

  Scenario scenario(std::size_t n_stages) const {
    Scenario s;
    s.chain = ChainConfig::uniform(parse_complex(alpha), lambda, n_stages, idler_dim);
    if (signal_dim > 0) s.chain.signal_dim = signal_dim;
    s.chain.validate();
    s.detector = {eta, dark};
    s.detector.validate();
    s.mode = sequential ? RunMode::sequential : RunMode::full;
    return s;
  }
};

template <typename F>
int guarded(F&& body) {
  try {
    body();
    return kExitOk;
  } catch (const BudgetError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitBudget;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
}

void print_warnings(const Scenario& s) {
  for (const auto& w : s.chain.warnings()) std::cerr << "warning: " << w << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Photon-added coherent states and W states from cascaded parametric amplifiers"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Execute a scenario file");
  std::string config_path;
  std::string out_dir;
  run->add_option("config", config_path, "Scenario JSON file")->required();
  run->add_option("--out-dir", out_dir, "Directory for output files (default: the scenario's directory)");

  auto* pacs_cmd = app.add_subcommand("pacs", "Click-pattern probability and fidelity with |alpha, m>");
  ChainOptions pacs_opts;
  std::string pattern_text = "1";
  pacs_opts.add_to(pacs_cmd, false);
  pacs_cmd->add_option("--pattern", pattern_text, "Click pattern, one digit per stage (1 = click)")->capture_default_str();

  auto* wstate = app.add_subcommand("wstate", "Heralded idler state after projecting the signal onto |alpha, 1>");
  ChainOptions w_opts;
  w_opts.n = 3;
  w_opts.add_to(wstate, true);

  auto* wig = app.add_subcommand("wigner", "Wigner function of a single-mode state on a square grid");
  ChainOptions wig_opts;
  std::string state_text = "pacs:1:1";
  double range = 5.0, step = 0.1;
  std::string wig_output;
  wig_opts.add_to(wig, true);
  wig->add_option("--state", state_text, "coherent:A | fock:N | pacs:A:M | conditional:PATTERN")->capture_default_str();
  wig->add_option("--range", range, "Half-width of the grid in x and p")->capture_default_str();
  wig->add_option("--step", step, "Grid spacing")->capture_default_str();
  wig->add_option("--output", wig_output, "Write the grid to this file instead of stdout");

  auto* sweep_cmd = app.add_subcommand("sweep", "Probability of a click count across parameter values");
  ChainOptions sweep_opts;
  SweepTask sweep_task;
  std::string fit_path;
  sweep_opts.add_to(sweep_cmd, true);
  sweep_cmd->add_option("--param", sweep_task.param, "lambda or alpha")
      ->check(CLI::IsMember({"lambda", "alpha"}))
      ->capture_default_str();
  sweep_cmd->add_option("--values", sweep_task.values, "Comma-separated values")->delimiter(',')->required();
  sweep_cmd->add_option("--clicks", sweep_task.clicks, "Number of clicks to count")->capture_default_str();
  sweep_cmd->add_option("--fit", fit_path, "Write a power-law fit summary (lambda sweeps)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  if (*run) {
    const std::filesystem::path config(config_path);
    const std::filesystem::path dir = out_dir.empty() ? config.parent_path() : std::filesystem::path(out_dir);
    return run_scenario(config, dir.empty() ? std::filesystem::path(".") : dir, std::cerr);
  }

  if (*pacs_cmd) {
    return guarded([&] {
      const ClickPattern pattern = ClickPattern::parse(pattern_text);
      const Scenario s = pacs_opts.scenario(pattern.size());
      print_warnings(s);
      std::cout << pattern_table(s, {pattern}).str();
    });
  }

  if (*wstate) {
    return guarded([&] {
      const Scenario s = w_opts.scenario(w_opts.n);
      print_warnings(s);
      std::cout << projection_table(s, 1).str();
    });
  }

  if (*wig) {
    return guarded([&] {
      WignerTask task{StateSpec::parse(state_text), range, step};
      const std::size_t n = task.state.kind == StateSpec::Kind::conditional ? task.state.pattern.size() : wig_opts.n;
      const Scenario s = wig_opts.scenario(n);
      const WignerGrid grid = wigner_grid(s, task);
      if (grid.truncation_warning()) std::cerr << "warning: parity sum tail " << grid.max_parity_tail << '\n';
      std::ostringstream out;
      io::write_wigner(out, grid);
      if (wig_output.empty()) {
        std::cout << out.str();
      } else {
        const io::OutputFile file{wig_output, out.str()};
        io::write_all({&file, 1});
      }
    });
  }

  if (*sweep_cmd) {
    return guarded([&] {
      if (sweep_task.clicks > sweep_opts.n) throw ValidationError("--clicks exceeds --n");
      const Scenario s = sweep_opts.scenario(sweep_opts.n);
      if (!fit_path.empty() && sweep_task.param != "lambda") throw ValidationError("--fit needs --param lambda");
      if (!fit_path.empty()) sweep_task.fit_output = fit_path;
      const SweepResult r = sweep(s, sweep_task);
      if (r.fit) {
        const io::OutputFile file{fit_path, io::fit_summary_json(*r.fit, sweep_task.clicks, sweep_opts.n)};
        io::write_all({&file, 1});
      }
      std::cout << r.table.str();
    });
  }
  return kExitOk;
}
