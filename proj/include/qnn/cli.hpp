#pragma once
// Command implementations behind the qnnlearn tool. Each command returns its
// text output so the acceptance suite can drive the same code paths.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qnn/circuits.hpp"
#include "qnn/noise.hpp"
#include "qnn/theory.hpp"
#include "qnn/train.hpp"

namespace qnn::cli {

// ---------------------------------------------------------------- run config

struct DataConfig {
  std::string path = "data/digits.csv";  // relative paths resolve against the config file
  bool synthesize = false;
  std::size_t synth_rows = 360;
  double separation = 3.0;
  std::uint64_t synth_seed = 0;
  std::pair<int, int> labels{0, 1};
  int components = 3;
  std::size_t n_train = 280;
  std::size_t n_test = 80;
  std::uint64_t split_seed = 0;
};

struct NoiseConfig {
  NoiseKind kind = NoiseKind::None;
  double p = 0.0;
  double p1 = 0.0, p2 = 0.0, p3 = 0.0;
  std::string kappa = "zero";  // zero | mixed | basis:<index>
};

struct RunConfig {
  std::string name = "run";
  DataConfig data;
  EncoderSpec encoder;
  AnsatzSpec ansatz;
  NoiseConfig noise;
  int readout_qubit = 0;
  TrainConfig train;  // seed is taken from `seeds`
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  int reference_restarts = 0;              // extra starts beyond the training seeds
  std::optional<int> reference_iterations; // default: train.iterations
  std::string output_dir;                  // empty: $QNN_OUTPUT_DIR/<name>, else out/<name>
  std::filesystem::path base_dir = ".";

  NoiseSpec noise_spec() const;
  QnnModel model() const;
  std::filesystem::path data_path() const;
  std::filesystem::path resolved_output_dir() const;
};

/// Parses an INI document. Unknown sections or keys are rejected.
RunConfig parse_run_config_text(const std::string& text, const std::filesystem::path& base_dir = ".",
                                const std::vector<std::string>& overrides = {});
RunConfig parse_run_config(const std::filesystem::path& path,
                           const std::vector<std::string>& overrides = {});
/// Every key with its default, for --help.
std::string run_config_reference();

// ---------------------------------------------------------------- train

struct SeedOutcome {
  std::uint64_t seed = 0;
  TrainResult result;
  double grad_norm_sq = 0.0;  // |grad L(theta_T)|^2
  double excess = 0.0;        // L(theta_T) - L(theta*)
};

struct RunOutcome {
  std::size_t n_train = 0, n_test = 0;
  double ptilde = 0.0;
  std::vector<SeedOutcome> runs;
  ParamVector reference;
  double reference_loss = 0.0;
  double r1 = 0.0;
  ExcessRisk r2{};
  std::optional<double> r1_bound, r2_bound;
  std::string r1_bound_reason, r2_bound_reason;
  std::vector<std::string> digest;  // five lines

  double mean_final(double TrainRecord::*field) const;
};

/// Loads the data, trains every seed, computes the reference optimum and the
/// utility metrics. Writes curves and summary files when `write_files`.
RunOutcome run_train(const RunConfig& config, bool write_files, std::ostream* log = nullptr);

std::string curves_csv(const std::vector<const TrainResult*>& runs);
std::string summary_csv(const RunOutcome& outcome);

// ---------------------------------------------------------------- sweeps

/// "v", "a,b,c" or "start:step:stop" (inclusive). "inf" is accepted as a value.
std::vector<double> parse_sweep(const std::string& text);
/// Whole-number sweep; rejects fractional values.
std::vector<long long> parse_int_sweep(const std::string& text);

enum class OutputFormat { Csv, KeyValue };

struct BoundsArgs {
  std::string d = "15", T = "400", K = "20", B = "280", lambda = "0";
  std::optional<std::string> ptilde;
  std::string p = "0.0025", layers = "8";  // used when ptilde is not given
  BoundForm form = BoundForm::Depolarizing;
  OutputFormat format = OutputFormat::Csv;
};
std::string cmd_bounds(const BoundsArgs& args);

struct PrivacyArgs {
  std::string ptilde = "0.5", ratio = "0.5", K = "1", T = "1", d = "1";
  std::string delta2 = "1e-5", delta_bar = "1e-5";
  ChainVariant variant = ChainVariant::Literal;
  OutputFormat format = OutputFormat::Csv;
};
std::string cmd_privacy(const PrivacyArgs& args);

struct QsqArgs {
  std::string tau = "0.1", b = "0.05", ptilde = "0", nu = "0", trm_ratio = "0", general_offset = "0";
  std::int64_t trials = 0;  // > 0 runs the simulation at the computed K
  std::uint64_t seed = 0;
  OutputFormat format = OutputFormat::Csv;
};
struct CommandResult {
  std::string output;
  int exit_code = 0;
};
CommandResult cmd_qsq(const QsqArgs& args);

struct VerifyArgs {
  double p = 0.0025;
  int layers = 8;  // L_Q used for the merged rate
  int shots = 20;
  int trials = 100000;
  int contexts = 5;
  double lambda = 0.1;
  std::uint64_t seed = 0;
};
CommandResult cmd_verify_gradient(const VerifyArgs& args);

struct PrepArgs {
  std::string input;
  std::optional<std::size_t> synthesize;  // rows; replaces input
  double separation = 3.0;
  std::pair<int, int> labels{0, 1};
  int components = 3;
  std::size_t n_train = 0, n_test = 0;  // both zero: no split
  std::uint64_t seed = 0;
  std::string output_dir = ".";
};
std::string cmd_data_prep(const PrepArgs& args);

/// Formats a number with 12 significant digits, or "inf" when not finite.
std::string cell(double v);

}  // namespace qnn::cli
