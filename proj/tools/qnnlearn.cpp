// qnnlearn: train noisy quantum classifiers and evaluate the accompanying
// utility, privacy and query bounds.

#include <CLI11.hpp>
#include <fmt/format.h>

#include <iostream>

#include "qnn/cli.hpp"
#include "qnn/error.hpp"

using namespace qnn;
using namespace qnn::cli;

namespace {

std::pair<int, int> label_pair(const std::string& s) {
  const auto comma = s.find(',');
  if (comma == std::string::npos) throw ValidationError("--labels expects 'a,b'");
  try {
    return {std::stoi(s.substr(0, comma)), std::stoi(s.substr(comma + 1))};
  } catch (const std::exception&) {
    throw ValidationError("--labels expects two integers 'a,b'");
  }
}

const std::map<std::string, OutputFormat> kFormats = {{"csv", OutputFormat::Csv}, {"kv", OutputFormat::KeyValue}};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Noisy quantum neural network training and bound calculators"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "qnnlearn 1.0");

  // train
  auto* train = app.add_subcommand("train", "Train every seed of a run config and write curves and summary");
  std::string config_path;
  std::vector<std::string> sets;
  std::optional<int> iterations;
  std::optional<std::string> seeds, output, shots;
  bool quiet = false;
  train->add_option("-c,--config", config_path, "INI run config")->required()->check(CLI::ExistingFile);
  train->add_option("--set", sets, "Override a key: section.key=value (repeatable)");
  train->add_option("--iterations", iterations, "Shortcut for train.iterations");
  train->add_option("--seeds", seeds, "Shortcut for train.seeds, e.g. 0,1,2 or 0:1:4");
  train->add_option("--shots", shots, "Shortcut for measure.shots (integer or exact)");
  train->add_option("-o,--output", output, "Output directory");
  train->add_flag("-q,--quiet", quiet, "Do not log per-seed progress to stderr");
  train->footer(run_config_reference());

  // verify-gradient
  auto* verify = app.add_subcommand("verify-gradient", "Monte-Carlo check of the noisy gradient decomposition");
  VerifyArgs va;
  verify->add_option("--p", va.p, "Depolarizing rate per layer")->capture_default_str();
  verify->add_option("--layers", va.layers, "Noisy layers L_Q merged into ptilde")->capture_default_str();
  verify->add_option("--shots", va.shots, "Shots K per expectation")->capture_default_str();
  verify->add_option("--trials", va.trials, "Monte-Carlo repetitions per context")->capture_default_str();
  verify->add_option("--contexts", va.contexts, "Random circuit contexts")->capture_default_str();
  verify->add_option("--lambda", va.lambda, "Regularization weight")->capture_default_str();
  verify->add_option("--seed", va.seed)->capture_default_str();

  // bounds
  auto* bounds = app.add_subcommand("bounds", "Utility bound right-hand sides over a parameter grid");
  BoundsArgs ba;
  std::string bounds_form = "depolarizing", bounds_format = "csv";
  bounds->add_option("--d", ba.d, "Parameter count (sweep)")->capture_default_str();
  bounds->add_option("--T", ba.T, "Iterations (sweep)")->capture_default_str();
  bounds->add_option("--K", ba.K, "Shots, or inf (sweep)")->capture_default_str();
  bounds->add_option("--B", ba.B, "Batches per step (sweep)")->capture_default_str();
  bounds->add_option("--lambda", ba.lambda, "Regularization (sweep)")->capture_default_str();
  bounds->add_option("--ptilde", ba.ptilde, "Merged noise rate (sweep); overrides --p/--layers");
  bounds->add_option("--p", ba.p, "Per-layer rate (sweep)")->capture_default_str();
  bounds->add_option("--layers", ba.layers, "Noisy layers L_Q (sweep)")->capture_default_str();
  bounds->add_option("--form", bounds_form, "depolarizing or general")
      ->check(CLI::IsMember({"depolarizing", "general"}))
      ->capture_default_str();
  bounds->add_option("--format", bounds_format, "csv or kv")->check(CLI::IsMember({"csv", "kv"}));

  // privacy
  auto* privacy = app.add_subcommand("privacy", "Differential-privacy budget of noisy training");
  PrivacyArgs pa;
  std::string privacy_variant = "literal", privacy_format = "csv";
  privacy->add_option("--ptilde", pa.ptilde, "Merged noise rate (sweep)")->capture_default_str();
  privacy->add_option("--ratio", pa.ratio, "Tr(Pi)/D (sweep)")->capture_default_str();
  privacy->add_option("--K", pa.K, "Shots (sweep)")->capture_default_str();
  privacy->add_option("--T", pa.T, "Iterations (sweep)")->capture_default_str();
  privacy->add_option("--d", pa.d, "Parameter count (sweep)")->capture_default_str();
  privacy->add_option("--delta2", pa.delta2, "Per-component slack (sweep)")->capture_default_str();
  privacy->add_option("--delta-bar", pa.delta_bar, "Final composition slack (sweep)")->capture_default_str();
  privacy->add_option("--variant", privacy_variant, "literal or standard composition")
      ->check(CLI::IsMember({"literal", "standard"}))
      ->capture_default_str();
  privacy->add_option("--format", privacy_format, "csv or kv")->check(CLI::IsMember({"csv", "kv"}));

  // qsq
  auto* qsq = app.add_subcommand("qsq", "Shots needed to answer a quantum statistical query");
  QsqArgs qa;
  std::string qsq_format = "csv";
  qsq->add_option("--tau", qa.tau, "Tolerance (sweep)")->capture_default_str();
  qsq->add_option("--b", qa.b, "Failure probability (sweep)")->capture_default_str();
  qsq->add_option("--ptilde", qa.ptilde, "Merged noise rate (sweep)")->capture_default_str();
  qsq->add_option("--nu", qa.nu, "True expectation (sweep)")->capture_default_str();
  qsq->add_option("--trm-ratio", qa.trm_ratio, "Tr(M)/2^(N+1) (sweep)")->capture_default_str();
  qsq->add_option("--general-offset", qa.general_offset, "General-channel offset (sweep)")->capture_default_str();
  qsq->add_option("--trials", qa.trials, "Simulate this many K-shot queries per point")->capture_default_str();
  qsq->add_option("--seed", qa.seed)->capture_default_str();
  qsq->add_option("--format", qsq_format, "csv or kv")->check(CLI::IsMember({"csv", "kv"}));

  // data prep
  auto* data = app.add_subcommand("data", "Dataset utilities");
  data->require_subcommand(1);
  auto* prep = data->add_subcommand("prep", "Filter two digits, PCA-reduce, scale to [0, pi] and write CSVs");
  PrepArgs ra;
  std::string prep_labels = "0,1";
  prep->add_option("-i,--input", ra.input, "Raw CSV: 64 features then a label per row");
  prep->add_option("--synthesize", ra.synthesize, "Generate this many Gaussian-blob rows instead");
  prep->add_option("--separation", ra.separation)->capture_default_str();
  prep->add_option("--labels", prep_labels, "Label pair kept")->capture_default_str();
  prep->add_option("--components", ra.components)->capture_default_str();
  prep->add_option("--n-train", ra.n_train, "Split sizes; both zero writes one reduced.csv")->capture_default_str();
  prep->add_option("--n-test", ra.n_test)->capture_default_str();
  prep->add_option("--seed", ra.seed)->capture_default_str();
  prep->add_option("-o,--output", ra.output_dir)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*train) {
      std::vector<std::string> overrides = sets;
      if (iterations) overrides.push_back(fmt::format("train.iterations={}", *iterations));
      if (seeds) overrides.push_back("train.seeds=" + *seeds);
      if (shots) overrides.push_back("measure.shots=" + *shots);
      if (output) overrides.push_back("output.dir=" + *output);
      const RunConfig config = parse_run_config(config_path, overrides);
      const RunOutcome outcome = run_train(config, true, quiet ? nullptr : &std::cerr);
      for (const auto& line : outcome.digest) std::cout << line << "\n";
      std::cout << "wrote " << config.resolved_output_dir().string() << "\n";
    } else if (*verify) {
      const CommandResult r = cmd_verify_gradient(va);
      std::cout << r.output;
      return r.exit_code;
    } else if (*bounds) {
      ba.form = bounds_form == "general" ? BoundForm::GeneralChannel : BoundForm::Depolarizing;
      ba.format = kFormats.at(bounds_format);
      std::cout << cmd_bounds(ba);
    } else if (*privacy) {
      pa.variant = privacy_variant == "standard" ? ChainVariant::Standard : ChainVariant::Literal;
      pa.format = kFormats.at(privacy_format);
      std::cout << cmd_privacy(pa);
    } else if (*qsq) {
      qa.format = kFormats.at(qsq_format);
      const CommandResult r = cmd_qsq(qa);
      std::cout << r.output;
      return r.exit_code;
    } else if (*prep) {
      ra.labels = label_pair(prep_labels);
      std::cout << cmd_data_prep(ra);
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
