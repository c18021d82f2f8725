#pragma once

// Scenario files and the computations behind the pacs-sim subcommands.
//
// A scenario is a JSON document (schema in docs/scenario-format.md) naming a
// chain, a detector, an evaluation mode and a list of tasks. Every task
// renders into an in-memory file; nothing is written until all tasks succeed.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "pacs/analysis.hpp"
#include "pacs/detection.hpp"
#include "pacs/dynamics.hpp"
#include "pacs/io.hpp"

namespace pacs::cli {

enum ExitCode : int { kExitOk = 0, kExitValidation = 1, kExitBudget = 2 };

/// Malformed or inconsistent input. The message names the offending field or line.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kScenarioVersion = 1;

enum class RunMode { full, sequential };

/// Single-mode state for Wigner tasks.
///   coherent:<alpha>  fock:<n>  pacs:<alpha>:<m>  conditional:<pattern>
/// where <alpha> is a real number or re+imj / re-imj.
struct StateSpec {
  enum class Kind { coherent, fock, pacs, conditional };
  Kind kind = Kind::coherent;
  complex alpha{};
  unsigned m = 0;
  ClickPattern pattern;

  static StateSpec parse(std::string_view text);
};

complex parse_complex(std::string_view text);

struct PatternTask {
  std::vector<ClickPattern> patterns;  // empty: all 2^N
};

struct ProjectionTask {
  unsigned reference_m = 1;
};

struct SweepTask {
  std::string param = "lambda";  // "lambda" or "alpha"
  std::vector<double> values;
  std::size_t clicks = 1;
  std::string fit_output;  // lambda sweeps only; empty for none
};

struct WignerTask {
  StateSpec state;
  double range = 5.0;
  double step = 0.1;
};

struct Task {
  std::variant<PatternTask, ProjectionTask, SweepTask, WignerTask> spec;
  std::string output;
};

struct Scenario {
  ChainConfig chain;
  DetectorModel detector = DetectorModel::ideal();
  RunMode mode = RunMode::full;
  std::size_t amplitude_budget = kDefaultAmplitudeBudget;
  std::vector<Task> tasks;
};

/// Parses and validates a scenario document.
Scenario parse_scenario(std::string_view text);
Scenario load_scenario(const std::filesystem::path& path);

/// Renders every task. Paths are resolved against out_dir.
std::vector<io::OutputFile> execute(const Scenario& scenario, const std::filesystem::path& out_dir);

/// Loads, executes and writes a scenario; diagnostics go to err. Returns an ExitCode.
int run_scenario(const std::filesystem::path& config, const std::filesystem::path& out_dir, std::ostream& err);

// Building blocks shared by scenario tasks and the quick subcommands ---------

/// Normalized a^dag^m |alpha> on the given cutoff, without a tail check.
PureState pacs_reference(complex alpha, unsigned m, std::size_t dim);

/// pattern,probability,fidelity_vs_pacs_m
io::CsvTable pattern_table(const Scenario& scenario, const std::vector<ClickPattern>& patterns);

/// reference_m,probability,fidelity_vs_w
io::CsvTable projection_table(const Scenario& scenario, unsigned reference_m);

struct SweepResult {
  io::CsvTable table;  // <param>,probability
  std::optional<ScalingFit> fit;
};

SweepResult sweep(const Scenario& scenario, const SweepTask& task);

WignerGrid wigner_grid(const Scenario& scenario, const WignerTask& task);

}  // namespace pacs::cli
