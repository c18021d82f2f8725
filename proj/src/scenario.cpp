#include "pacs/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace pacs::cli {

using nlohmann::json;

// Value parsing ------------------------------------------------------------

namespace {

double parse_real(std::string_view text, std::string_view what) {
  std::string s(text);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size() || !std::isfinite(v)) {
    throw ValidationError(std::string(what) + ": '" + s + "' is not a finite number");
  }
  return v;
}

unsigned parse_unsigned(std::string_view text, std::string_view what) {
  unsigned v = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc{} || ptr != end) {
    throw ValidationError(std::string(what) + ": '" + std::string(text) + "' is not a nonnegative integer");
  }
  return v;
}

}  // namespace

complex parse_complex(std::string_view text) {
  if (text.empty()) throw ValidationError("complex number: empty value");
  const char last = text.back();
  if (last != 'j' && last != 'i') return {parse_real(text, "complex number"), 0.0};
  const std::string_view body = text.substr(0, text.size() - 1);
  std::size_t split = std::string_view::npos;
  for (std::size_t k = body.size(); k-- > 1;) {
    if ((body[k] == '+' || body[k] == '-') && body[k - 1] != 'e' && body[k - 1] != 'E') {
      split = k;
      break;
    }
  }
  if (split == std::string_view::npos) {
    if (body.empty() || body == "+" || body == "-") return {0.0, body == "-" ? -1.0 : 1.0};
    return {0.0, parse_real(body, "complex number")};
  }
  const std::string_view im = body.substr(split);
  const double imag = (im == "+" || im == "-") ? (im == "-" ? -1.0 : 1.0) : parse_real(im, "complex number");
  return {parse_real(body.substr(0, split), "complex number"), imag};
}

StateSpec StateSpec::parse(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) {
    throw ValidationError("state spec '" + std::string(text) + "': expected <kind>:<args>");
  }
  const std::string_view kind = text.substr(0, colon);
  const std::string_view args = text.substr(colon + 1);
  StateSpec spec;
  if (kind == "coherent") {
    spec.kind = Kind::coherent;
    spec.alpha = parse_complex(args);
  } else if (kind == "fock") {
    spec.kind = Kind::fock;
    spec.m = parse_unsigned(args, "fock level");
  } else if (kind == "pacs") {
    const auto sep = args.rfind(':');
    if (sep == std::string_view::npos) throw ValidationError("state spec: expected pacs:<alpha>:<m>");
    spec.kind = Kind::pacs;
    spec.alpha = parse_complex(args.substr(0, sep));
    spec.m = parse_unsigned(args.substr(sep + 1), "pacs photon number");
  } else if (kind == "conditional") {
    spec.kind = Kind::conditional;
    try {
      spec.pattern = ClickPattern::parse(args);
    } catch (const std::invalid_argument& e) {
      throw ValidationError(e.what());
    }
  } else {
    throw ValidationError("state spec: unknown kind '" + std::string(kind) + "'");
  }
  return spec;
}

// Scenario document --------------------------------------------------------

namespace {

class Reader {
 public:
  Reader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) fail("expected an object");
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw ValidationError((path_.empty() ? std::string("document") : path_) + ": " + what);
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  bool has(const std::string& key) const {
    seen_.insert(key);
    return node_.contains(key);
  }

  const json& at(const std::string& key) const {
    if (!has(key)) fail("missing required field '" + key + "'");
    return node_.at(key);
  }

  double number(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_number() || !std::isfinite(v.get<double>())) {
      throw ValidationError(field(key) + ": expected a finite number");
    }
    return v.get<double>();
  }

  double number_or(const std::string& key, double fallback) const { return has(key) ? number(key) : fallback; }

  std::size_t count(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0) {
      throw ValidationError(field(key) + ": expected a nonnegative integer");
    }
    return v.get<std::size_t>();
  }

  std::size_t count_or(const std::string& key, std::size_t fallback) const {
    return has(key) ? count(key) : fallback;
  }

  std::string text(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_string()) throw ValidationError(field(key) + ": expected a string");
    return v.get<std::string>();
  }

  complex complex_number(const std::string& key) const {
    const json& v = at(key);
    if (v.is_number()) return {v.get<double>(), 0.0};
    if (v.is_string()) {
      try {
        return parse_complex(v.get<std::string>());
      } catch (const ValidationError& e) {
        throw ValidationError(field(key) + ": " + e.what());
      }
    }
    if (v.is_object()) {
      Reader r(v, field(key));
      const complex c{r.number("re"), r.number_or("im", 0.0)};
      r.finish();
      return c;
    }
    throw ValidationError(field(key) + ": expected a number, \"re+imj\" string or {re, im} object");
  }

  /// Rejects keys that were never looked up.
  void finish() const {
    for (const auto& [key, value] : node_.items()) {
      if (!seen_.count(key)) fail("unknown field '" + key + "'");
    }
  }

 private:
  const json& node_;
  std::string path_;
  mutable std::set<std::string> seen_;
};

ChainConfig read_chain(const Reader& r) {
  ChainConfig chain;
  chain.alpha = r.complex_number("alpha");
  const json& stages = r.at("stages");
  if (stages.is_number_integer()) {
    const std::size_t n = r.count("stages");
    if (n == 0) throw ValidationError(r.field("stages") + ": at least one stage is required");
    const double lambda = r.number("lambda");
    const std::size_t idler_dim = r.count_or("idler_dim", kDefaultIdlerDim);
    chain.stages.assign(n, StageParams{lambda, idler_dim});
  } else if (stages.is_array()) {
    if (stages.empty()) throw ValidationError(r.field("stages") + ": at least one stage is required");
    for (std::size_t j = 0; j < stages.size(); ++j) {
      Reader st(stages[j], r.field("stages") + "[" + std::to_string(j) + "]");
      chain.stages.push_back({st.number("lambda"), st.count_or("idler_dim", kDefaultIdlerDim)});
      st.finish();
    }
  } else {
    throw ValidationError(r.field("stages") + ": expected a stage count or a list of stages");
  }
  chain.signal_dim = r.count_or("signal_dim", default_signal_dim(chain.alpha, static_cast<unsigned>(chain.stages.size())));
  r.finish();
  try {
    chain.validate();
  } catch (const std::invalid_argument& e) {
    throw ValidationError(e.what());
  }
  return chain;
}

ClickPattern read_pattern(const json& v, const std::string& path, std::size_t n_stages) {
  if (!v.is_string()) throw ValidationError(path + ": expected a pattern string such as \"10\"");
  ClickPattern p;
  try {
    p = ClickPattern::parse(v.get<std::string>());
  } catch (const std::invalid_argument& e) {
    throw ValidationError(path + ": " + e.what());
  }
  if (p.size() != n_stages) {
    throw ValidationError(path + ": pattern '" + p.to_string() + "' has " + std::to_string(p.size()) +
                          " entries but the chain has " + std::to_string(n_stages) + " stages");
  }
  return p;
}

Task read_task(const json& node, const std::string& path, std::size_t n_stages) {
  Reader r(node, path);
  Task task;
  const std::string type = r.text("type");
  task.output = r.text("output");
  if (task.output.empty()) throw ValidationError(r.field("output") + ": empty path");

  if (type == "patterns") {
    PatternTask t;
    if (r.has("patterns")) {
      const json& list = r.at("patterns");
      if (!list.is_array()) throw ValidationError(r.field("patterns") + ": expected a list");
      for (std::size_t k = 0; k < list.size(); ++k) {
        t.patterns.push_back(read_pattern(list[k], r.field("patterns") + "[" + std::to_string(k) + "]", n_stages));
      }
    }
    task.spec = t;
  } else if (type == "projection") {
    ProjectionTask t;
    t.reference_m = static_cast<unsigned>(r.count_or("reference_m", 1));
    task.spec = t;
  } else if (type == "sweep") {
    SweepTask t;
    t.param = r.has("param") ? r.text("param") : "lambda";
    if (t.param != "lambda" && t.param != "alpha") {
      throw ValidationError(r.field("param") + ": expected \"lambda\" or \"alpha\"");
    }
    const json& values = r.at("values");
    if (!values.is_array() || values.empty()) throw ValidationError(r.field("values") + ": expected a nonempty list");
    for (std::size_t k = 0; k < values.size(); ++k) {
      if (!values[k].is_number()) {
        throw ValidationError(r.field("values") + "[" + std::to_string(k) + "]: expected a number");
      }
      const double v = values[k].get<double>();
      if (!std::isfinite(v) || (t.param == "lambda" && v < 0.0)) {
        throw ValidationError(r.field("values") + "[" + std::to_string(k) + "]: invalid value");
      }
      t.values.push_back(v);
    }
    t.clicks = r.count_or("clicks", 1);
    if (t.clicks > n_stages) {
      throw ValidationError(r.field("clicks") + ": more clicks than stages (" + std::to_string(n_stages) + ")");
    }
    if (r.has("fit_output")) {
      t.fit_output = r.text("fit_output");
      if (t.param != "lambda") throw ValidationError(r.field("fit_output") + ": fits are only defined for lambda sweeps");
      if (t.values.size() < 3) throw ValidationError(r.field("values") + ": a fit needs at least three values");
    }
    task.spec = t;
  } else if (type == "wigner") {
    WignerTask t;
    try {
      t.state = StateSpec::parse(r.text("state"));
    } catch (const ValidationError& e) {
      throw ValidationError(r.field("state") + ": " + e.what());
    }
    if (t.state.kind == StateSpec::Kind::conditional && t.state.pattern.size() != n_stages) {
      throw ValidationError(r.field("state") + ": conditional pattern length does not match the chain");
    }
    t.range = r.number_or("range", 5.0);
    t.step = r.number_or("step", 0.1);
    if (!(t.range > 0.0) || !(t.step > 0.0)) throw ValidationError(path + ": range and step must be positive");
    if (t.range / t.step > 5000.0) throw ValidationError(path + ": grid too fine (more than 10001 points per axis)");
    task.spec = t;
  } else {
    throw ValidationError(r.field("type") + ": unknown task type '" + type + "'");
  }
  r.finish();
  return task;
}

std::string parse_error_context(std::string_view text, std::size_t byte) {
  const std::size_t pos = std::min(byte > 0 ? byte - 1 : 0, text.size());
  const std::size_t line = 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<long>(pos), '\n'));
  const std::size_t line_start = text.rfind('\n', pos == 0 ? 0 : pos - 1);
  const std::size_t begin = (line_start == std::string_view::npos || pos == 0) ? 0 : line_start + 1;
  const std::size_t end = std::min(text.find('\n', begin), text.size());
  std::ostringstream msg;
  msg << "line " << line << ", column " << (pos - begin + 1) << ": " << text.substr(begin, end - begin);
  return msg.str();
}

}  // namespace

Scenario parse_scenario(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ValidationError("parse error at " + parse_error_context(text, e.byte) + "\n  " + e.what());
  }
  Reader root(doc, "");
  const json& version = root.at("version");
  if (!version.is_number_integer() || version.get<long long>() != kScenarioVersion) {
    throw ValidationError("version: expected " + std::to_string(kScenarioVersion));
  }

  Scenario scenario;
  scenario.chain = read_chain(Reader(root.at("chain"), "chain"));

  if (root.has("detector")) {
    Reader d(root.at("detector"), "detector");
    scenario.detector.eta = d.number_or("eta", 1.0);
    scenario.detector.dark_prob = d.number_or("dark_prob", 0.0);
    d.finish();
    try {
      scenario.detector.validate();
    } catch (const std::invalid_argument& e) {
      throw ValidationError(e.what());
    }
  }

  if (root.has("mode")) {
    const std::string mode = root.text("mode");
    if (mode == "full") {
      scenario.mode = RunMode::full;
    } else if (mode == "sequential") {
      scenario.mode = RunMode::sequential;
    } else {
      throw ValidationError("mode: expected \"full\" or \"sequential\", got \"" + mode + "\"");
    }
  }
  scenario.amplitude_budget = root.count_or("amplitude_budget", kDefaultAmplitudeBudget);

  const json& tasks = root.at("tasks");
  if (!tasks.is_array() || tasks.empty()) throw ValidationError("tasks: expected a nonempty list");
  std::set<std::string> outputs;
  for (std::size_t k = 0; k < tasks.size(); ++k) {
    const std::string path = "tasks[" + std::to_string(k) + "]";
    Task task = read_task(tasks[k], path, scenario.chain.n_stages());
    std::vector<std::string> files{task.output};
    if (const auto* sw = std::get_if<SweepTask>(&task.spec); sw && !sw->fit_output.empty()) files.push_back(sw->fit_output);
    for (const auto& f : files) {
      if (!outputs.insert(f).second) throw ValidationError(path + ": output path '" + f + "' is used twice");
    }
    scenario.tasks.push_back(std::move(task));
  }
  root.finish();
  return scenario;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open scenario file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

// Computations -------------------------------------------------------------

PureState pacs_reference(complex alpha, unsigned m, std::size_t dim) {
  return PureState::normalized(MultiMode::single(dim, "signal"), raised_coherent(alpha, m, dim).amplitudes);
}

namespace {

std::vector<PatternRow> all_patterns(const Scenario& s) {
  if (s.mode == RunMode::sequential) return enumerate_patterns_sequential(s.chain, s.detector);
  return enumerate_patterns(run_chain_full(s.chain, s.amplitude_budget), s.detector);
}

Conditioned conditioned_signal(const Scenario& s, const ClickPattern& pattern) {
  if (s.mode == RunMode::sequential) return run_chain_sequential(s.chain, s.detector, pattern);
  return condition_on_pattern(run_chain_full(s.chain, s.amplitude_budget), pattern, s.detector);
}

}  // namespace

io::CsvTable pattern_table(const Scenario& scenario, const std::vector<ClickPattern>& patterns) {
  io::CsvTable table{{"pattern", "probability", "fidelity_vs_pacs_m"}, {}};
  std::vector<PatternRow> rows;
  if (patterns.empty()) {
    rows = all_patterns(scenario);
  } else {
    std::optional<PureState> joint;
    if (scenario.mode == RunMode::full) joint = run_chain_full(scenario.chain, scenario.amplitude_budget);
    for (const auto& p : patterns) {
      Conditioned c = joint ? condition_on_pattern(*joint, p, scenario.detector)
                            : run_chain_sequential(scenario.chain, scenario.detector, p);
      rows.push_back({p, c.probability, std::move(c.state), 0.0});
    }
  }
  for (const auto& row : rows) {
    double fidelity = std::nan("");
    if (row.signal) {
      const auto m = static_cast<unsigned>(row.pattern.click_count());
      fidelity = fidelity_ensemble(*row.signal, pacs_reference(scenario.chain.alpha, m, scenario.chain.signal_dim));
    }
    table.add_row({row.pattern.to_string(), io::format_number(row.probability), io::format_number(fidelity)});
  }
  return table;
}

io::CsvTable projection_table(const Scenario& scenario, unsigned reference_m) {
  const PureState joint = run_chain_full(scenario.chain, scenario.amplitude_budget);
  const Projection proj =
      project_signal(joint, pacs_reference(scenario.chain.alpha, reference_m, scenario.chain.signal_dim));
  double fidelity = std::nan("");
  if (proj.idlers) {
    const std::size_t n = scenario.chain.n_stages();
    const auto dims = proj.idlers->space().dims();
    // the reference uses the cutoff of the first idler; mixed cutoffs fall back to a level-by-level overlap
    if (std::all_of(dims.begin(), dims.end(), [&](std::size_t d) { return d == dims.front(); })) {
      fidelity = fidelity_pure(*proj.idlers, w_state_reference(n, dims.front()));
    } else {
      complex overlap{};
      const MultiMode& space = proj.idlers->space();
      for (std::size_t j = 0; j < n; ++j) overlap += (*proj.idlers)[space.stride(j)];
      fidelity = std::norm(overlap) / static_cast<double>(n);
    }
  }
  io::CsvTable table{{"reference_m", "probability", "fidelity_vs_w"}, {}};
  table.add_row({std::to_string(reference_m), io::format_number(proj.probability), io::format_number(fidelity)});
  return table;
}

SweepResult sweep(const Scenario& scenario, const SweepTask& task) {
  SweepResult result{{{task.param, "probability"}, {}}, std::nullopt};
  std::vector<std::pair<double, double>> samples;
  for (double v : task.values) {
    Scenario s = scenario;
    if (task.param == "lambda") {
      for (auto& st : s.chain.stages) st.lambda = v;
    } else {
      s.chain.alpha = v;
      s.chain.signal_dim = std::max(s.chain.signal_dim, default_signal_dim(v, static_cast<unsigned>(s.chain.n_stages())));
    }
    const auto dist = click_count_distribution(all_patterns(s));
    const double p = task.clicks < dist.size() ? dist[task.clicks] : 0.0;
    result.table.add_row({io::format_number(v), io::format_number(p)});
    samples.emplace_back(v, p);
  }
  if (!task.fit_output.empty()) {
    try {
      result.fit = fit_power_law(samples);
    } catch (const std::invalid_argument& e) {
      throw ValidationError(std::string("sweep fit: ") + e.what());
    }
  }
  return result;
}

WignerGrid wigner_grid(const Scenario& scenario, const WignerTask& task) {
  const GridAxis x = GridAxis::symmetric(task.range, task.step);
  const GridAxis p = GridAxis::symmetric(task.range, task.step);
  const auto& st = task.state;
  switch (st.kind) {
    case StateSpec::Kind::coherent:
      return wigner(coherent_state(st.alpha, default_signal_dim(st.alpha)), x, p);
    case StateSpec::Kind::fock:
      return wigner(fock_state(st.m, std::max<std::size_t>(st.m + 2, 4)), x, p);
    case StateSpec::Kind::pacs:
      return wigner(pacs_state(st.alpha, st.m, default_signal_dim(st.alpha, st.m)), x, p);
    case StateSpec::Kind::conditional: {
      const Conditioned c = conditioned_signal(scenario, st.pattern);
      if (!c.state) throw ValidationError("wigner: pattern " + st.pattern.to_string() + " is an impossible outcome");
      WignerGrid total{x, p, Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p.count), static_cast<Eigen::Index>(x.count)), 0.0};
      for (const auto& b : c.state->branches) {
        const WignerGrid g = wigner(b.state, x, p);
        total.values += b.weight * g.values;
        total.max_parity_tail = std::max(total.max_parity_tail, g.max_parity_tail);
      }
      return total;
    }
  }
  throw std::logic_error("wigner_grid: unhandled state kind");
}

std::vector<io::OutputFile> execute(const Scenario& scenario, const std::filesystem::path& out_dir) {
  std::vector<io::OutputFile> files;
  for (const auto& task : scenario.tasks) {
    const auto target = out_dir / task.output;
    if (const auto* t = std::get_if<PatternTask>(&task.spec)) {
      files.push_back({target, pattern_table(scenario, t->patterns).str()});
    } else if (const auto* t = std::get_if<ProjectionTask>(&task.spec)) {
      files.push_back({target, projection_table(scenario, t->reference_m).str()});
    } else if (const auto* t = std::get_if<SweepTask>(&task.spec)) {
      SweepResult r = sweep(scenario, *t);
      files.push_back({target, r.table.str()});
      if (r.fit) {
        files.push_back({out_dir / t->fit_output, io::fit_summary_json(*r.fit, t->clicks, scenario.chain.n_stages())});
      }
    } else if (const auto* t = std::get_if<WignerTask>(&task.spec)) {
      std::ostringstream out;
      io::write_wigner(out, wigner_grid(scenario, *t));
      files.push_back({target, out.str()});
    }
  }
  return files;
}

int run_scenario(const std::filesystem::path& config, const std::filesystem::path& out_dir, std::ostream& err) {
  try {
    const Scenario scenario = load_scenario(config);
    for (const auto& w : scenario.chain.warnings()) err << "warning: " << w << '\n';
    const auto files = execute(scenario, out_dir);
    std::filesystem::create_directories(out_dir);
    io::write_all(files);
    return kExitOk;
  } catch (const BudgetError& e) {
    err << "error: " << e.what() << '\n';
    return kExitBudget;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }
}

}  // namespace pacs::cli
