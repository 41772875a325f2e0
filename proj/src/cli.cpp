#include "qnn/cli.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numbers>
#include <ostream>
#include <set>
#include <sstream>

#include "qnn/dataprep.hpp"
#include "qnn/error.hpp"
#include "qnn/format.hpp"
#include "qnn/grad.hpp"

namespace qnn::cli {

namespace pt = boost::property_tree;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

double parse_double(const std::string& raw, const std::string& what) {
  const std::string s = lower(trim(raw));
  if (s == "inf" || s == "+inf" || s == "infinity") return kInf;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty() || !std::isfinite(v))
    throw ValidationError(fmt::format("{}: '{}' is not a number", what, raw));
  return v;
}

template <class Int>
Int parse_int(const std::string& raw, const std::string& what) {
  const std::string s = trim(raw);
  Int v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw ValidationError(fmt::format("{}: '{}' is not an integer", what, raw));
  return v;
}

bool parse_bool(const std::string& raw, const std::string& what) {
  const std::string s = lower(trim(raw));
  if (s == "true" || s == "yes" || s == "on" || s == "1") return true;
  if (s == "false" || s == "no" || s == "off" || s == "0") return false;
  throw ValidationError(fmt::format("{}: '{}' is not a boolean", what, raw));
}

std::pair<int, int> parse_label_pair(const std::string& raw, const std::string& what) {
  const auto parts = split_on(raw, ',');
  if (parts.size() != 2) throw ValidationError(fmt::format("{}: expected two labels 'a,b'", what));
  return {parse_int<int>(parts[0], what), parse_int<int>(parts[1], what)};
}

// Section -> accepted keys.
const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s = {
      {"run", {"name"}},
      {"data",
       {"path", "synthesize", "synth_rows", "separation", "synth_seed", "labels", "components", "n_train",
        "n_test", "split_seed"}},
      {"encoder", {"n_qubits", "n_blocks"}},
      {"ansatz", {"layers"}},
      {"noise", {"kind", "p", "p1", "p2", "p3", "kappa"}},
      {"measure", {"shots", "readout_qubit"}},
      {"train",
       {"iterations", "learning_rate", "lambda", "batches", "batch_size", "seeds", "clip_to_pl_box",
        "half_shift_convention", "divergence_limit"}},
      {"reference", {"restarts", "iterations"}},
      {"output", {"dir"}},
  };
  return s;
}

DensityMatrix parse_kappa(const std::string& raw, int n_qubits) {
  const std::string s = lower(trim(raw));
  if (s == "zero") return DensityMatrix::basis_state(n_qubits, 0);
  if (s == "mixed") return DensityMatrix::maximally_mixed(n_qubits);
  if (s.rfind("basis:", 0) == 0)
    return DensityMatrix::basis_state(n_qubits, parse_int<std::size_t>(s.substr(6), "noise.kappa"));
  throw ValidationError(fmt::format("noise.kappa: '{}' must be zero, mixed or basis:<index>", raw));
}

// ---------------------------------------------------------------- tables

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::vector<std::pair<std::string, std::string>>> notes;  // per row, kv-only extras

  std::string render(OutputFormat f) const {
    std::string out;
    if (f == OutputFormat::KeyValue) {
      if (rows.size() != 1)
        throw ValidationError(fmt::format("key=value output needs a single point, got {} rows", rows.size()));
      for (std::size_t c = 0; c < header.size(); ++c) out += header[c] + "=" + rows[0][c] + "\n";
      for (const auto& [k, v] : notes[0]) out += k + "=" + v + "\n";
      return out;
    }
    out += join(header) + "\n";
    for (const auto& r : rows) out += join(r) + "\n";
    return out;
  }

  static std::string join(const std::vector<std::string>& cells) {
    std::string s;
    for (std::size_t i = 0; i < cells.size(); ++i) s += (i ? "," : "") + cells[i];
    return s;
  }
};

void add_calc(std::vector<std::string>& row, std::vector<std::pair<std::string, std::string>>& notes,
              const std::string& name, const Calc<double>& c) {
  if (c.feasible()) {
    row.push_back(cell(c.value()));
    row.push_back("ok");
  } else {
    row.push_back("inf");
    row.push_back("inf");
    notes.emplace_back(name + "_reason", c.reason());
  }
}

template <class F>
void for_each_point(const std::vector<std::vector<double>>& axes, F&& f) {
  std::vector<std::size_t> idx(axes.size(), 0);
  std::vector<double> point(axes.size());
  while (true) {
    for (std::size_t a = 0; a < axes.size(); ++a) point[a] = axes[a][idx[a]];
    f(point);
    std::size_t a = axes.size();
    while (a > 0) {
      --a;
      if (++idx[a] < axes[a].size()) break;
      idx[a] = 0;
      if (a == 0) return;
    }
    if (axes.empty()) return;
  }
}

int as_count(double v, const char* what) {
  if (!(v >= 0 && v == std::floor(v) && v < 2e9))
    throw ValidationError(fmt::format("{} must be a whole number, got {}", what, v));
  return static_cast<int>(v);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError(fmt::format("cannot write {}", path.string()));
  out << text;
}

}  // namespace

std::string cell(double v) { return std::isfinite(v) ? num(v) : "inf"; }

// ---------------------------------------------------------------- run config

NoiseSpec RunConfig::noise_spec() const {
  const int lq = encoder.n_blocks + ansatz.n_layers;
  switch (noise.kind) {
    case NoiseKind::None: return NoiseSpec::none(lq);
    case NoiseKind::Depolarize: return NoiseSpec::depolarize(noise.p, lq);
    case NoiseKind::General:
      return NoiseSpec::general(noise.p1, noise.p2, noise.p3, parse_kappa(noise.kappa, encoder.n_qubits), lq);
  }
  throw ValidationError("unknown noise kind");
}

QnnModel RunConfig::model() const {
  return QnnModel(encoder, ansatz, PovmSpec::readout(encoder.n_qubits, readout_qubit), noise_spec());
}

std::filesystem::path RunConfig::data_path() const {
  const std::filesystem::path p(data.path);
  return p.is_absolute() ? p : base_dir / p;
}

std::filesystem::path RunConfig::resolved_output_dir() const {
  if (!output_dir.empty()) return output_dir;
  const char* env = std::getenv("QNN_OUTPUT_DIR");
  return std::filesystem::path(env && *env ? env : "out") / name;
}

RunConfig parse_run_config_text(const std::string& text, const std::filesystem::path& base_dir,
                                const std::vector<std::string>& overrides) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ValidationError(fmt::format("config line {}: {}", e.line(), e.message()));
  }
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    const auto dot = o.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot > eq)
      throw ValidationError(fmt::format("override '{}' must look like section.key=value", o));
    tree.put(pt::ptree::path_type(trim(o.substr(0, eq)), '.'), trim(o.substr(eq + 1)));
  }

  for (const auto& [section, body] : tree) {
    const auto it = schema().find(section);
    if (body.empty() && !body.data().empty())
      throw ValidationError(fmt::format("config key '{}' must sit inside a [section]", section));
    if (it == schema().end()) throw ValidationError(fmt::format("unknown config section [{}]", section));
    for (const auto& [key, value] : body)
      if (!it->second.count(key)) throw ValidationError(fmt::format("unknown config key [{}] {}", section, key));
  }

  auto get = [&](const char* section, const char* key) -> std::optional<std::string> {
    const auto v = tree.get_optional<std::string>(pt::ptree::path_type(std::string(section) + "." + key, '.'));
    if (!v) return std::nullopt;
    return trim(*v);
  };
  auto what = [](const char* section, const char* key) { return fmt::format("{}.{}", section, key); };

  RunConfig c;
  c.base_dir = base_dir;
  if (auto v = get("run", "name")) c.name = *v;

  if (auto v = get("data", "path")) c.data.path = *v;
  if (auto v = get("data", "synthesize")) c.data.synthesize = parse_bool(*v, what("data", "synthesize"));
  if (auto v = get("data", "synth_rows")) c.data.synth_rows = parse_int<std::size_t>(*v, what("data", "synth_rows"));
  if (auto v = get("data", "separation")) c.data.separation = parse_double(*v, what("data", "separation"));
  if (auto v = get("data", "synth_seed")) c.data.synth_seed = parse_int<std::uint64_t>(*v, what("data", "synth_seed"));
  if (auto v = get("data", "labels")) c.data.labels = parse_label_pair(*v, what("data", "labels"));
  if (auto v = get("data", "components")) c.data.components = parse_int<int>(*v, what("data", "components"));
  if (auto v = get("data", "n_train")) c.data.n_train = parse_int<std::size_t>(*v, what("data", "n_train"));
  if (auto v = get("data", "n_test")) c.data.n_test = parse_int<std::size_t>(*v, what("data", "n_test"));
  if (auto v = get("data", "split_seed")) c.data.split_seed = parse_int<std::uint64_t>(*v, what("data", "split_seed"));

  if (auto v = get("encoder", "n_qubits")) {
    const int n = parse_int<int>(*v, what("encoder", "n_qubits"));
    c.encoder.n_qubits = c.encoder.feature_dim = c.ansatz.n_qubits = n;
  }
  if (auto v = get("encoder", "n_blocks")) c.encoder.n_blocks = parse_int<int>(*v, what("encoder", "n_blocks"));
  if (auto v = get("ansatz", "layers")) c.ansatz.n_layers = parse_int<int>(*v, what("ansatz", "layers"));

  if (auto v = get("noise", "kind")) {
    const std::string k = lower(*v);
    if (k == "none") c.noise.kind = NoiseKind::None;
    else if (k == "depolarize") c.noise.kind = NoiseKind::Depolarize;
    else if (k == "general") c.noise.kind = NoiseKind::General;
    else throw ValidationError(fmt::format("noise.kind: '{}' must be none, depolarize or general", *v));
  }
  if (auto v = get("noise", "p")) c.noise.p = parse_double(*v, what("noise", "p"));
  if (auto v = get("noise", "p1")) c.noise.p1 = parse_double(*v, what("noise", "p1"));
  if (auto v = get("noise", "p2")) c.noise.p2 = parse_double(*v, what("noise", "p2"));
  if (auto v = get("noise", "p3")) c.noise.p3 = parse_double(*v, what("noise", "p3"));
  if (auto v = get("noise", "kappa")) c.noise.kappa = *v;

  if (auto v = get("measure", "shots")) {
    const std::string s = lower(*v);
    if (s == "exact" || s == "inf") c.train.shots.reset();
    else c.train.shots = parse_int<int>(*v, what("measure", "shots"));
  }
  if (auto v = get("measure", "readout_qubit")) c.readout_qubit = parse_int<int>(*v, what("measure", "readout_qubit"));

  if (auto v = get("train", "iterations")) c.train.iterations = parse_int<int>(*v, what("train", "iterations"));
  if (auto v = get("train", "learning_rate")) {
    if (lower(*v) != "auto") c.train.learning_rate = parse_double(*v, what("train", "learning_rate"));
  }
  if (auto v = get("train", "lambda")) c.train.lambda = parse_double(*v, what("train", "lambda"));
  if (auto v = get("train", "batches")) {
    if (lower(*v) != "auto") c.train.batches = parse_int<int>(*v, what("train", "batches"));
  }
  if (auto v = get("train", "batch_size")) c.train.batch_size = parse_int<int>(*v, what("train", "batch_size"));
  if (auto v = get("train", "seeds")) {
    c.seeds.clear();
    for (long long s : parse_int_sweep(*v)) c.seeds.push_back(static_cast<std::uint64_t>(s));
  }
  if (auto v = get("train", "clip_to_pl_box")) c.train.clip_to_pl_box = parse_bool(*v, what("train", "clip_to_pl_box"));
  if (auto v = get("train", "half_shift_convention"))
    c.train.convention = parse_bool(*v, what("train", "half_shift_convention")) ? ShiftConvention::Half
                                                                               : ShiftConvention::Full;
  if (auto v = get("train", "divergence_limit"))
    c.train.divergence_limit = parse_double(*v, what("train", "divergence_limit"));

  if (auto v = get("reference", "restarts")) c.reference_restarts = parse_int<int>(*v, what("reference", "restarts"));
  if (auto v = get("reference", "iterations")) {
    if (lower(*v) != "auto") c.reference_iterations = parse_int<int>(*v, what("reference", "iterations"));
  }
  if (auto v = get("output", "dir")) c.output_dir = *v;

  // Cross-field checks that do not need the dataset.
  c.encoder.validate();
  c.ansatz.validate();
  c.noise_spec().validate();
  if (c.data.components != c.encoder.n_qubits)
    throw ValidationError(fmt::format("data.components = {} must equal encoder.n_qubits = {}", c.data.components,
                                      c.encoder.n_qubits));
  if (c.seeds.empty()) throw ValidationError("train.seeds is empty");
  if (c.reference_restarts < 0) throw ValidationError("reference.restarts must be >= 0");
  if (c.reference_iterations && *c.reference_iterations < 0)
    throw ValidationError("reference.iterations must be >= 0");
  if (c.train.iterations < 0) throw ValidationError("train.iterations must be >= 0");
  return c;
}

RunConfig parse_run_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError(fmt::format("cannot open config {}", path.string()));
  std::stringstream buf;
  buf << in.rdbuf();
  RunConfig c = parse_run_config_text(buf.str(), path.parent_path().empty() ? "." : path.parent_path(), overrides);
  pt::ptree tree;
  std::istringstream again(buf.str());
  pt::ini_parser::read_ini(again, tree);
  const bool named = tree.get_optional<std::string>("run.name") ||
                     std::any_of(overrides.begin(), overrides.end(),
                                 [](const std::string& o) { return o.rfind("run.name", 0) == 0; });
  if (!named) c.name = path.stem().string();
  return c;
}

std::string run_config_reference() {
  return R"(Config file (INI). Unknown sections or keys are errors. Defaults in brackets.
  [run]       name        [config file stem]
  [data]      path        [data/digits.csv, relative to the config file]
              synthesize  [false]  use Gaussian blobs instead of the CSV
              synth_rows  [360]   separation [3.0]   synth_seed [0]
              labels      [0,1]   digit pair kept, relabelled 0 and 1
              components  [3]     PCA components, must equal encoder.n_qubits
              n_train     [280]   n_test [80]   split_seed [0]
  [encoder]   n_qubits    [3]     n_blocks [3]
  [ansatz]    layers      [5]
  [noise]     kind        [none]  none | depolarize | general
              p           [0]     depolarizing rate per layer
              p1, p2, p3  [0]     general channel, p2 + p3 = p1
              kappa       [zero]  zero | mixed | basis:<index>
  [measure]   shots       [exact] K per expectation, or exact
              readout_qubit [0]
  [train]     iterations  [400]   learning_rate [auto = 1/S]   lambda [0]
              batches     [auto = n / batch_size]   batch_size [1]
              seeds       [0,1,2,3,4]  list or start:step:stop
              clip_to_pl_box [false]   half_shift_convention [false]
              divergence_limit [1e6]
  [reference] restarts    [0]     extra exact-descent starts beyond the seeds
              iterations  [auto = train.iterations]
  [output]    dir         [$QNN_OUTPUT_DIR/<name>, or out/<name>]
)";
}

// ---------------------------------------------------------------- train

double RunOutcome::mean_final(double TrainRecord::*field) const {
  double s = 0.0;
  for (const auto& r : runs) s += r.result.records.back().*field;
  return runs.empty() ? 0.0 : s / static_cast<double>(runs.size());
}

std::string curves_csv(const std::vector<const TrainResult*>& runs) {
  if (runs.empty()) throw ValidationError("no runs to summarize");
  std::string out = TrainRecord::csv_header() + "\n";
  const std::size_t steps = runs.front()->records.size();
  const double n = static_cast<double>(runs.size());
  for (std::size_t t = 0; t < steps; ++t) {
    TrainRecord mean;
    mean.iter = runs.front()->records[t].iter;
    mean.shots = runs.front()->records[t].shots;
    for (const auto* r : runs) {
      const TrainRecord& rec = r->records.at(t);
      mean.loss += rec.loss / n;
      mean.noisy_loss += rec.noisy_loss / n;
      mean.train_acc += rec.train_acc / n;
      mean.test_acc += rec.test_acc / n;
    }
    out += mean.csv_row() + "\n";
  }
  return out;
}

std::string summary_csv(const RunOutcome& o) {
  std::string out = "seed,final_loss,final_noisy_loss,train_acc,test_acc,r1,r2,reference_loss,r1_bound,r2_bound,status\n";
  for (const auto& r : o.runs) {
    const TrainRecord& last = r.result.records.back();
    out += fmt::format("{},{},{},{},{},{},{},{},,,\n", r.seed, num(last.loss), num(last.noisy_loss),
                       num(last.train_acc), num(last.test_acc), num(r.grad_norm_sq), num(r.excess),
                       num(o.reference_loss));
  }
  std::vector<std::string> status;
  if (!o.r1_bound) status.push_back("r1_bound_inf");
  if (!o.r2_bound) status.push_back("r2_bound_inf");
  if (o.r2.flagged) status.push_back("reference_not_optimal");
  std::string st;
  for (const auto& s : status) st += (st.empty() ? "" : ";") + s;
  out += fmt::format("mean,{},{},{},{},{},{},{},{},{},{}\n", num(o.mean_final(&TrainRecord::loss)),
                     num(o.mean_final(&TrainRecord::noisy_loss)), num(o.mean_final(&TrainRecord::train_acc)),
                     num(o.mean_final(&TrainRecord::test_acc)), num(o.r1), num(o.r2.value), num(o.reference_loss),
                     o.r1_bound ? num(*o.r1_bound) : "inf", o.r2_bound ? num(*o.r2_bound) : "inf",
                     st.empty() ? "ok" : st);
  return out;
}

RunOutcome run_train(const RunConfig& config, bool write_files, std::ostream* log) {
  using Clock = std::chrono::steady_clock;
  const auto started = Clock::now();
  const RawDataset raw = config.data.synthesize
                             ? synthesize(config.data.synth_rows, config.data.synth_seed, config.data.separation)
                             : load_csv(config.data_path().string());
  const ReducedDataset reduced = pca_reduce(filter_binary(raw, config.data.labels), config.data.components);
  const auto [train_rows, test_rows] = split(reduced, config.data.n_train, config.data.n_test, config.data.split_seed);

  const QnnModel model = config.model();
  const EncodedSet tr = model.encode(train_rows);
  const EncodedSet te = model.encode(test_rows);
  const std::size_t d = model.param_count();
  const double lambda = config.train.lambda;

  RunOutcome o;
  o.n_train = tr.size();
  o.n_test = te.size();
  o.ptilde = model.ptilde();

  std::vector<ParamVector> finals, starts;
  for (std::uint64_t seed : config.seeds) {
    TrainConfig cfg = config.train;
    cfg.seed = seed;
    SeedOutcome s;
    s.seed = seed;
    s.result = train(model, cfg, tr, &te);
    finals.push_back(s.result.final_theta());
    starts.push_back(s.result.initial_theta);
    if (log)
      *log << fmt::format("[{}] seed {}: loss {} -> {}\n", config.name, seed, num(s.result.records.front().loss),
                          num(s.result.records.back().loss));
    o.runs.push_back(std::move(s));
  }

  for (int i = 0; i < config.reference_restarts; ++i)
    starts.push_back(initial_parameters(d, derive_seed(0x7e57a7, {static_cast<std::uint64_t>(i)})));
  o.reference = reference_optimum(model, tr, lambda, starts, config.reference_iterations.value_or(config.train.iterations),
                                  config.train.clip_to_pl_box);

  o.r1 = utility_r1(model, finals, tr, lambda);
  o.r2 = utility_r2(model, finals, o.reference, tr, lambda);
  o.reference_loss = o.r2.reference_loss;
  const QnnModel clean(model.encoder(), model.ansatz(), model.povm(), NoiseSpec::none());
  for (auto& s : o.runs) {
    s.grad_norm_sq = utility_r1(clean, {s.result.final_theta()}, tr, lambda);
    s.excess = objective(clean, s.result.final_theta(), tr, lambda) - o.reference_loss;
  }

  BoundInputs bi;
  bi.d = static_cast<int>(d);
  bi.T = config.train.iterations;
  bi.K = config.train.shots ? *config.train.shots : kInf;
  bi.B = config.train.batches.value_or(static_cast<int>(tr.size()) / config.train.batch_size);
  bi.lambda = lambda;
  bi.ptilde = o.ptilde;
  const BoundForm form = config.noise.kind == NoiseKind::General ? BoundForm::GeneralChannel : BoundForm::Depolarizing;
  const auto b1 = r1_bound(bi, form), b2 = r2_bound(bi, form);
  if (b1.feasible()) o.r1_bound = b1.value(); else o.r1_bound_reason = b1.reason();
  if (b2.feasible()) o.r2_bound = b2.value(); else o.r2_bound_reason = b2.reason();

  const char* kinds[] = {"noiseless", "depolarizing", "general channel"};
  const double secs = std::chrono::duration<double>(Clock::now() - started).count();
  o.digest = {
      fmt::format("{}: {} qubits, {} blocks + {} layers (d={}), {} noise, ptilde={}, K={}, T={}, {} seed(s)",
                  config.name, config.encoder.n_qubits, config.encoder.n_blocks, config.ansatz.n_layers, d,
                  kinds[static_cast<int>(config.noise.kind)], num(o.ptilde),
                  config.train.shots ? std::to_string(*config.train.shots) : "exact", config.train.iterations,
                  config.seeds.size()),
      fmt::format("data: {} labels {}/{} -> {} train / {} test rows, PCA explained variance {}",
                  config.data.synthesize ? "synthetic blobs" : config.data_path().filename().string(),
                  config.data.labels.first, config.data.labels.second, o.n_train, o.n_test,
                  num(reduced.explained_variance())),
      fmt::format("loss: final {} (noisy {}), reference {}", num(o.mean_final(&TrainRecord::loss)),
                  num(o.mean_final(&TrainRecord::noisy_loss)), num(o.reference_loss)),
      fmt::format("accuracy: train {} test {}", num(o.mean_final(&TrainRecord::train_acc)),
                  num(o.mean_final(&TrainRecord::test_acc))),
      fmt::format("utility: R1={} (bound {}) R2={} (bound {}){} [{:.1f}s]", num(o.r1),
                  o.r1_bound ? num(*o.r1_bound) : "inf", num(o.r2.value), o.r2_bound ? num(*o.r2_bound) : "inf",
                  o.r2.flagged ? " reference not optimal" : "", secs),
  };

  if (write_files) {
    const auto dir = config.resolved_output_dir();
    std::filesystem::create_directories(dir);
    std::vector<const TrainResult*> all;
    for (const auto& s : o.runs) {
      all.push_back(&s.result);
      write_text(dir / fmt::format("curves_seed{}.csv", s.seed), curves_csv({&s.result}));
    }
    write_text(dir / "curves.csv", curves_csv(all));
    write_text(dir / "summary.csv", summary_csv(o));
  }
  return o;
}

// ---------------------------------------------------------------- sweeps

std::vector<double> parse_sweep(const std::string& raw) {
  const std::string text = trim(raw);
  if (text.empty()) throw ValidationError("empty sweep");
  if (text.find(':') != std::string::npos) {
    const auto parts = split_on(text, ':');
    if (parts.size() != 3) throw ValidationError(fmt::format("sweep '{}' must be start:step:stop", raw));
    const double a = parse_double(parts[0], "sweep start");
    const double step = parse_double(parts[1], "sweep step");
    const double b = parse_double(parts[2], "sweep stop");
    if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(step) || !(step > 0) || b < a)
      throw ValidationError(fmt::format("sweep '{}' needs finite start <= stop and step > 0", raw));
    const double count = std::floor((b - a) / step + 1e-9) + 1;
    if (count > 1e6) throw ValidationError(fmt::format("sweep '{}' has more than 1e6 points", raw));
    std::vector<double> out;
    for (int i = 0; i < static_cast<int>(count); ++i) out.push_back(a + i * step);
    return out;
  }
  std::vector<double> out;
  for (const auto& p : split_on(text, ',')) out.push_back(parse_double(p, "sweep value"));
  return out;
}

std::vector<long long> parse_int_sweep(const std::string& text) {
  std::vector<long long> out;
  for (double v : parse_sweep(text)) {
    if (!std::isfinite(v) || v != std::floor(v))
      throw ValidationError(fmt::format("'{}' must contain whole numbers", text));
    out.push_back(static_cast<long long>(v));
  }
  return out;
}

std::string cmd_bounds(const BoundsArgs& a) {
  Table t;
  t.header = {"d", "T", "K", "B", "lambda", "ptilde", "r1", "r1_status", "r2", "r2_status"};
  std::vector<std::vector<double>> axes = {parse_sweep(a.d), parse_sweep(a.T), parse_sweep(a.K), parse_sweep(a.B),
                                           parse_sweep(a.lambda)};
  const bool direct = a.ptilde.has_value();
  if (direct) {
    axes.push_back(parse_sweep(*a.ptilde));
  } else {
    axes.push_back(parse_sweep(a.p));
    axes.push_back(parse_sweep(a.layers));
  }
  for_each_point(axes, [&](const std::vector<double>& v) {
    BoundInputs in;
    in.d = as_count(v[0], "d");
    in.T = v[1];
    in.K = v[2];
    in.B = v[3];
    in.lambda = v[4];
    in.ptilde = direct ? v[5] : merged_rate(v[5], as_count(v[6], "layers"));
    std::vector<std::string> row = {std::to_string(in.d), cell(in.T), cell(in.K), cell(in.B), cell(in.lambda),
                                    cell(in.ptilde)};
    std::vector<std::pair<std::string, std::string>> notes;
    add_calc(row, notes, "r1", r1_bound(in, a.form));
    add_calc(row, notes, "r2", r2_bound(in, a.form));
    t.rows.push_back(std::move(row));
    t.notes.push_back(std::move(notes));
  });
  return t.render(a.format);
}

std::string cmd_privacy(const PrivacyArgs& a) {
  Table t;
  t.header = {"ptilde", "ratio", "K", "T", "d", "delta2", "delta_bar", "eps1", "eps2", "eps", "status"};
  const std::vector<std::vector<double>> axes = {parse_sweep(a.ptilde), parse_sweep(a.ratio), parse_sweep(a.K),
                                                 parse_sweep(a.T),      parse_sweep(a.d),     parse_sweep(a.delta2),
                                                 parse_sweep(a.delta_bar)};
  for_each_point(axes, [&](const std::vector<double>& v) {
    PrivacyInputs in;
    in.ptilde = v[0];
    in.ratio = v[1];
    in.K = as_count(v[2], "K");
    in.T = v[3];
    in.d = as_count(v[4], "d");
    in.delta2 = v[5];
    in.delta_bar = v[6];
    in.variant = a.variant;
    const PrivacyChain c = privacy_chain(in);
    std::vector<std::string> row = {cell(in.ptilde), cell(in.ratio), std::to_string(in.K), cell(in.T),
                                    std::to_string(in.d), cell(in.delta2), cell(in.delta_bar)};
    std::vector<std::pair<std::string, std::string>> notes;
    std::string reason;
    for (const Calc<double>* step : {&c.per_query, &c.per_gradient, &c.total}) {
      row.push_back(step->feasible() ? cell(step->value()) : "inf");
      if (!step->feasible() && reason.empty()) reason = step->reason();
    }
    row.push_back(reason.empty() ? "ok" : "inf");
    if (!reason.empty()) notes.emplace_back("reason", reason);
    t.rows.push_back(std::move(row));
    t.notes.push_back(std::move(notes));
  });
  return t.render(a.format);
}

CommandResult cmd_qsq(const QsqArgs& a) {
  Table t;
  t.header = {"tau", "b", "ptilde", "nu", "trm_ratio", "general_offset", "effective_tolerance", "K", "status"};
  if (a.trials > 0) t.header.insert(t.header.end(), {"coverage", "threshold", "passed"});
  const std::vector<std::vector<double>> axes = {parse_sweep(a.tau), parse_sweep(a.b),         parse_sweep(a.ptilde),
                                                 parse_sweep(a.nu),  parse_sweep(a.trm_ratio), parse_sweep(a.general_offset)};
  int exit_code = 0;
  std::uint64_t point = 0;
  for_each_point(axes, [&](const std::vector<double>& v) {
    const QsqInputs in{v[0], v[1], v[2], v[3], v[4], v[5]};
    const auto K = qsq_shot_count(in);
    std::vector<std::string> row = {cell(in.tau),       cell(in.b),
                                    cell(in.ptilde),    cell(in.nu),
                                    cell(in.trm_ratio), cell(in.general_offset),
                                    cell(in.effective_tolerance()), K.feasible() ? std::to_string(K.value()) : "inf",
                                    K.feasible() ? "ok" : "inf"};
    std::vector<std::pair<std::string, std::string>> notes;
    if (!K.feasible()) notes.emplace_back("reason", K.reason());
    if (a.trials > 0) {
      if (K.feasible() && K.value() <= std::numeric_limits<int>::max()) {
        const QsqCoverage cov =
            simulate_qsq_query(in, static_cast<int>(K.value()), a.trials, derive_seed(a.seed, {point}));
        row.insert(row.end(), {cell(cov.coverage), cell(cov.threshold), cov.passed ? "1" : "0"});
        if (!cov.passed) exit_code = 2;
      } else {
        row.insert(row.end(), {"", "", ""});
      }
    }
    ++point;
    t.rows.push_back(std::move(row));
    t.notes.push_back(std::move(notes));
  });
  return {t.render(a.format), exit_code};
}

CommandResult cmd_verify_gradient(const VerifyArgs& a) {
  if (a.contexts < 1) throw ValidationError("contexts must be >= 1");
  if (a.layers < 0) throw ValidationError("layers must be >= 0");
  const double ptilde = merged_rate(a.p, a.layers);
  const QnnModel model(EncoderSpec{}, AnsatzSpec{}, PovmSpec::readout(3), NoiseSpec::none());
  RngStream rng = RngStream::derived(a.seed, {0xc0de});
  std::string out = "context,j,yhat,yhat_plus,yhat_minus,label,theta,ptilde,shots," +
                    DecompositionReport::csv_header() + "\n";
  int failures = 0;
  for (int c = 0; c < a.contexts; ++c) {
    ReducedDataset row;
    std::vector<double> x(3);
    for (auto& v : x) v = rng.uniform(0, std::numbers::pi);
    row.features.push_back(x);
    row.labels.push_back(static_cast<int>(rng.below(2)));
    const EncodedSet set = model.encode(row);
    ParamVector theta(model.param_count());
    for (auto& v : theta) v = rng.uniform(kBoxLow, kBoxHigh);
    const std::size_t j = rng.below(theta.size());
    const ShiftedPredictions sp = model.predict_shifted(theta, set);
    GradContext ctx;
    ctx.yhat = sp.center[0];
    ctx.yhat_plus = sp.plus[j][0];
    ctx.yhat_minus = sp.minus[j][0];
    ctx.label = set.labels[0];
    ctx.theta = theta[j];
    ctx.lambda = a.lambda;
    ctx.ptilde = ptilde;
    ctx.ratio = model.povm().ratio;
    ctx.shots = a.shots;
    const DecompositionReport rep =
        verify_decomposition(ctx, a.trials, derive_seed(a.seed, {static_cast<std::uint64_t>(c)}));
    if (!rep.passed) ++failures;
    out += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", c, j, num(ctx.yhat), num(ctx.yhat_plus),
                       num(ctx.yhat_minus), num(ctx.label), num(ctx.theta), num(ptilde), a.shots, rep.csv_row());
  }
  out += fmt::format("# {} of {} contexts passed\n", a.contexts - failures, a.contexts);
  return {out, failures ? 2 : 0};
}

std::string cmd_data_prep(const PrepArgs& a) {
  RawDataset raw;
  if (a.synthesize) {
    raw = synthesize(*a.synthesize, a.seed, a.separation);
  } else {
    if (a.input.empty()) throw ValidationError("data prep needs --input or --synthesize");
    raw = load_csv(a.input);
  }
  const RawDataset bin = filter_binary(raw, a.labels);
  const ReducedDataset red = pca_reduce(bin, a.components);
  const auto zeros = std::count(red.labels.begin(), red.labels.end(), 0);
  std::string out = fmt::format("rows={}\nclass0={}\nclass1={}\nexplained_variance={}\n", red.size(), zeros,
                                static_cast<long>(red.size()) - zeros, num(red.explained_variance()));
  const std::filesystem::path dir(a.output_dir);
  std::filesystem::create_directories(dir);
  if (a.n_train + a.n_test > 0) {
    const auto [tr, te] = split(red, a.n_train, a.n_test, a.seed);
    write_reduced_csv(tr, (dir / "train.csv").string());
    write_reduced_csv(te, (dir / "test.csv").string());
    out += fmt::format("train={}\ntest={}\n", (dir / "train.csv").string(), (dir / "test.csv").string());
  } else {
    write_reduced_csv(red, (dir / "reduced.csv").string());
    out += fmt::format("reduced={}\n", (dir / "reduced.csv").string());
  }
  return out;
}

}  // namespace qnn::cli
