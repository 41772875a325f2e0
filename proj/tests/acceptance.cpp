// Acceptance suite: one PASS/FAIL line per criterion. Pass criterion numbers
// as arguments to run a subset; criteria 6 and 9 reuse the runs of 5.

#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>

#include "qnn/cli.hpp"
#include "qnn/grad.hpp"
#include "qnn/theory.hpp"
#include "qnn/train.hpp"
#include "support.hpp"

using namespace qnn;
using namespace qnn::testing;
using std::numbers::pi;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      if (pass) detail = what;
      pass = false;
    }
  }
};

double norm(const std::vector<double>& v) { return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0)); }

double distance(const ParamVector& a, const ParamVector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

const char* kSeries[] = {"baseline_dep5", "qnn_dep5", "baseline_dep20", "qnn_dep20"};

std::filesystem::path out_root() {
  const char* env = std::getenv("QNN_OUTPUT_DIR");
  return std::filesystem::path(env && *env ? env : "acceptance_out");
}

std::map<std::string, cli::RunOutcome> run_series(const std::filesystem::path& dir,
                                                  const std::vector<std::string>& overrides = {}) {
  std::map<std::string, cli::RunOutcome> out;
  for (const char* name : kSeries) {
    cli::RunConfig c = cli::parse_run_config(source_path(fmt::format("configs/{}.ini", name)), overrides);
    c.output_dir = (dir / name).string();
    out.emplace(name, cli::run_train(c, true));
  }
  return out;
}

std::map<std::string, cli::RunOutcome> g_series;  // filled by criterion 5

// ---------------------------------------------------------------- criteria

Verdict channel_merging() {
  Verdict v;
  RngStream rng(0xacc1);
  double worst = 0.0;
  for (int c = 0; c < 50; ++c)
    for (int lq = 1; lq <= 10; ++lq) {
      const CircuitSpec circuit = random_circuit(3, lq, rng);
      const DensityMatrix input = random_state(3, rng);
      const DensityMatrix clean = run_circuit(input, circuit, NoiseSpec::none());
      for (double p : {0.001, 0.01, 0.1}) {
        const DensityMatrix layered = run_circuit(input, circuit, NoiseSpec::depolarize(p));
        const DensityMatrix merged = apply_depolarize(clean, merged_rate(p, lq));
        worst = std::max(worst, max_abs_diff(layered.matrix(), merged.matrix()));
      }
    }
  v.require(worst <= 1e-12, fmt::format("max entry difference {:.3g}", worst));
  v.detail = v.pass ? fmt::format("1500 cases, max entry difference {:.3g}", worst) : v.detail;
  return v;
}

Verdict parameter_shift() {
  Verdict v;
  RngStream rng(0xacc2);
  const PovmSpec povm = PovmSpec::readout(3);
  const double h = 1e-5;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const CircuitSpec enc = build_encoder(EncoderSpec{}, random_features(3, rng));
    const AnsatzSpec spec{3, 1 + static_cast<int>(rng.below(20))};
    const ParamVector theta = random_theta(spec.param_count(), rng);
    const std::size_t j = rng.below(spec.param_count());
    auto yhat = [&](const ParamVector& t) {
      return expectation(evaluate(enc, build_ansatz(spec, t), NoiseSpec::none()), povm.projector);
    };
    GradContext c;
    c.yhat = yhat(theta);
    c.yhat_plus = yhat(shift_parameter(theta, j, +1));
    c.yhat_minus = yhat(shift_parameter(theta, j, -1));
    c.label = static_cast<double>(rng.below(2));
    auto loss = [&](double tj) {
      ParamVector t = theta;
      t[j] = tj;
      return std::pow(yhat(t) - c.label, 2);
    };
    const double fd = (loss(theta[j] + h) - loss(theta[j] - h)) / (2 * h);
    const double g = analytic_gradient(c);
    // Relative error, with a floor where the gradient itself is below the
    // finite-difference noise level.
    const double rel = std::abs(g - fd) / std::max(std::abs(g), 1e-4);
    worst = std::max(worst, rel);
  }
  v.require(worst <= 1e-6, fmt::format("worst relative error {:.3g}", worst));
  if (v.pass) v.detail = fmt::format("100 triples, worst relative error {:.3g}", worst);
  return v;
}

Verdict decomposition() {
  Verdict v;
  RngStream rng(0xacc3);
  const QnnModel model(EncoderSpec{}, AnsatzSpec{3, 5}, PovmSpec::readout(3), NoiseSpec::none());
  double worst_z = 0.0, worst_ratio = 1.0;
  int points = 0, failed = 0;
  for (double ptilde : {0.0, 0.05, 0.5})
    for (int K : {1, 20, 200})
      for (double lambda : {0.0, 0.1, 0.5}) {
        ReducedDataset row;
        row.features.push_back(random_features(3, rng));
        row.labels.push_back(static_cast<int>(rng.below(2)));
        const EncodedSet set = model.encode(row);
        const ParamVector theta = random_theta(model.param_count(), rng);
        const std::size_t j = rng.below(theta.size());
        const ShiftedPredictions sp = model.predict_shifted(theta, set);
        GradContext ctx;
        ctx.yhat = sp.center[0];
        ctx.yhat_plus = sp.plus[j][0];
        ctx.yhat_minus = sp.minus[j][0];
        ctx.label = set.labels[0];
        ctx.theta = theta[j];
        ctx.lambda = lambda;
        ctx.ptilde = ptilde;
        ctx.ratio = 0.5;
        ctx.shots = K;
        const DecompositionReport r = verify_decomposition(ctx, 100000, derive_seed(0xacc3, {std::uint64_t(points)}));
        ++points;
        if (!r.passed) ++failed;
        worst_z = std::max(worst_z, std::abs(r.z_score));
        if (!r.degenerate && std::abs(r.variance_ratio - 1) > std::abs(worst_ratio - 1)) worst_ratio = r.variance_ratio;
      }
  v.require(failed == 0, fmt::format("{} of {} grid points failed", failed, points));
  v.detail = fmt::format("{} of {} points pass, max |z| {:.3g}, worst variance ratio {:.4f}", points - failed,
                         points, worst_z, worst_ratio);
  return v;
}

Verdict loss_constants() {
  Verdict v;
  const int d = 15;
  const QnnModel m(EncoderSpec{}, AnsatzSpec{3, 5}, PovmSpec::readout(3), NoiseSpec::none());
  const ReducedDataset data = pca_reduce(filter_binary(load_csv(source_path("data/digits.csv"))), 3);
  const EncodedSet set = m.encode(split(data, 280, 80, 0).first);

  const double lambda_pl = 0.5;
  std::vector<ParamVector> starts;
  for (std::uint64_t s = 0; s < 50; ++s) starts.push_back(initial_parameters(d, derive_seed(0xacc4, {s})));
  const ParamVector ref = reference_optimum(m, set, lambda_pl, starts, 400, true);
  const double lstar = objective(m, ref, set, lambda_pl);
  const double mu = pl_constant(lambda_pl, d);

  RngStream rng(0xacc4);
  int violations = 0;
  double min_pl_slack = kInf;
  for (int trial = 0; trial < 100; ++trial) {
    const ParamVector a = random_theta(d, rng), b = random_theta(d, rng);
    for (double lambda : {0.0, lambda_pl}) {
      const LossConstants c = constants(lambda, d);
      const auto ga = full_gradient(m, a, set, lambda), gb = full_gradient(m, b, set, lambda);
      std::vector<double> diff(d);
      for (int j = 0; j < d; ++j) diff[j] = ga[j] - gb[j];
      if (norm(diff) > c.S * distance(a, b)) ++violations;
      if (std::abs(objective(m, a, set, lambda) - objective(m, b, set, lambda)) > c.G * distance(a, b)) ++violations;
    }
    const double g = norm(full_gradient(m, a, set, lambda_pl));
    const double slack = 0.5 * g * g - mu * (objective(m, a, set, lambda_pl) - lstar);
    min_pl_slack = std::min(min_pl_slack, slack);
    if (slack < 0) ++violations;
  }
  v.require(violations == 0, fmt::format("{} violations", violations));
  v.detail = fmt::format("{} violations over 100 samples; L* = {:.6g}, mu = {:.4g}, min PL slack {:.4g}", violations,
                         lstar, mu, min_pl_slack);
  return v;
}

Verdict reproduction() {
  Verdict v;
  g_series = run_series(out_root() / "run1");
  auto& b5 = g_series.at("baseline_dep5");
  auto& q5 = g_series.at("qnn_dep5");
  auto& b20 = g_series.at("baseline_dep20");
  auto& q20 = g_series.at("qnn_dep20");
  const auto final_loss = [](const cli::RunOutcome& o) { return o.mean_final(&TrainRecord::loss); };
  const auto observed = [](const cli::RunOutcome& o) { return o.mean_final(&TrainRecord::noisy_loss); };

  // (a) baseline below the noisy run, both as the device observes it and
  // evaluated noiselessly at the final parameters.
  for (auto [b, q, L] : {std::tuple{&b5, &q5, 5}, std::tuple{&b20, &q20, 20}}) {
    v.require(final_loss(*b) <= observed(*q), fmt::format("(a) L={}: baseline {} > noisy {}", L, final_loss(*b),
                                                          observed(*q)));
  }
  // (b) gap between the reference optimum L* and the loss the noisy QNN
  // reaches.
  const double gap5 = observed(q5) - q5.reference_loss;
  const double gap20 = observed(q20) - q20.reference_loss;
  v.require(gap20 > gap5, fmt::format("(b) gap L=20 {:.6g} <= gap L=5 {:.6g}", gap20, gap5));
  // (c)
  const double acc = b5.mean_final(&TrainRecord::test_acc);
  v.require(acc >= 0.9, fmt::format("(c) baseline L=5 test accuracy {:.4f}", acc));

  const std::string info = fmt::format(
      "final loss base/noisy L=5 {:.5f}/{:.5f} L=20 {:.5f}/{:.5f}; gap L=5 {:.5f} L=20 {:.5f} "
      "(noiseless excess {:.5f} / {:.5f}); test acc {:.4f}",
      final_loss(b5), observed(q5), final_loss(b20), observed(q20), gap5, gap20, q5.r2.value, q20.r2.value, acc);
  v.detail = v.pass ? info : v.detail + "; " + info;
  return v;
}

Verdict bound_sandwich() {
  Verdict v;
  if (g_series.empty()) g_series = run_series(out_root() / "run1");
  int checks = 0;
  double tightest = 0.0;  // largest measured / bound ratio
  auto check = [&](const std::string& label, double measured, const std::optional<double>& bound) {
    ++checks;
    v.require(bound.has_value(), label + ": bound infeasible");
    if (!bound) return;
    tightest = std::max(tightest, measured / *bound);
    v.require(measured <= *bound, fmt::format("{}: {:.6g} > bound {:.6g}", label, measured, *bound));
  };
  for (const auto& [name, o] : g_series) {
    check(name + " R1", o.r1, o.r1_bound);
    for (const auto& s : o.runs) check(fmt::format("{} seed {} R1", name, s.seed), s.grad_norm_sq, o.r1_bound);
  }
  const auto pl = run_series(out_root() / "pl", {"train.lambda=0.5"});
  for (const auto& [name, o] : pl) {
    check(name + " lambda=0.5 R1", o.r1, o.r1_bound);
    check(name + " lambda=0.5 R2", o.r2.value, o.r2_bound);
    for (const auto& s : o.runs) check(fmt::format("{} lambda=0.5 seed {} R2", name, s.seed), s.excess, o.r2_bound);
  }

  int violations = 0, grid = 0;
  for (auto form : {BoundForm::Depolarizing, BoundForm::GeneralChannel})
    for (int d : {1, 15, 60})
      for (double lambda : {0.0, 0.1, 0.5, 2.0})
        for (double T : {1.0, 50.0, 400.0})
          for (double B : {1.0, 280.0})
            for (double p : {0.0, 0.0025, 0.02, 0.1, 0.4}) {
              double prev1 = kInf, prev2 = kInf;
              for (double K : {1.0, 2.0, 5.0, 20.0, 100.0, 1e4, kInf}) {
                const BoundInputs in{d, T, K, B, lambda, p};
                BoundInputs more_p = in, more_d = in;
                more_p.ptilde = p + 0.01;
                more_d.d = d + 1;
                const double v1 = r1_bound(in, form).value();
                grid += 3;
                violations += (v1 > prev1) + (r1_bound(more_p, form).value() < v1) + (r1_bound(more_d, form).value() < v1);
                prev1 = v1;
                if (lambda > 1 / pi) {
                  const double v2 = r2_bound(in, form).value();
                  grid += 3;
                  violations += (v2 > prev2) + (r2_bound(more_p, form).value() < v2) + (r2_bound(more_d, form).value() < v2);
                  prev2 = v2;
                }
              }
            }
  v.require(violations == 0, fmt::format("{} monotonicity violations", violations));
  const std::string info = fmt::format("{} measured-vs-bound checks (max ratio {:.3g}); {} grid comparisons, {} violations",
                                       checks, tightest, grid, violations);
  v.detail = v.pass ? info : v.detail + "; " + info;
  return v;
}

Verdict privacy() {
  Verdict v;
  const double e = per_query_epsilon(0.5, 0.5, 1).value();
  v.require(std::abs(e - std::log(6.0)) <= 1e-12, fmt::format("per_query_epsilon(0.5,0.5,1) = {:.17g}", e));

  // Values evaluated independently at 50 significant digits.
  struct Case {
    double p, r;
    int K, d;
    double T, d2, db, e1, e2_lit, e2_std, tot_lit, tot_std;
  };
  const Case cases[] = {
      {0.5, 0.5, 1, 1, 1, 0.1, 0.1, 1.7917594692280550008, 31.851738444898735547, 33.536222566676391961,
       2168539745674830.0117, 12305819703326601.681},
      {0.3, 0.5, 2, 2, 5, 1e-3, 1e-2, 4.3450709281514524487, 1005.366870256821471, 1019.920302541671157, kInf, kInf},
      {0.9, 0.25, 1, 1, 10, 0.05, 0.05, 1.5716975844512533459, 23.302307857826793786, 24.650609148337404861,
       3072293159285.6884853, 12515585873379.207171},
  };
  auto close = [](double got, double want, double rel) { return std::abs(got - want) <= rel * std::abs(want); };
  int compared = 0;
  for (const auto& c : cases)
    for (auto variant : {ChainVariant::Literal, ChainVariant::Standard}) {
      const bool lit = variant == ChainVariant::Literal;
      PrivacyInputs in;
      in.ptilde = c.p;
      in.ratio = c.r;
      in.K = c.K;
      in.d = c.d;
      in.T = c.T;
      in.delta2 = c.d2;
      in.delta_bar = c.db;
      in.variant = variant;
      const PrivacyChain chain = privacy_chain(in);
      v.require(close(chain.per_query.value(), c.e1, 1e-14), "per-query oracle mismatch");
      v.require(close(chain.per_gradient.value(), lit ? c.e2_lit : c.e2_std, 1e-13), "per-gradient oracle mismatch");
      const double tot = lit ? c.tot_lit : c.tot_std;
      if (std::isinf(tot))
        v.require(!chain.total.feasible(), "expected an infeasible total");
      else
        v.require(chain.total.feasible() && close(chain.total.value(), tot, 1e-11), "total oracle mismatch");
      compared += 3;
    }

  int violations = 0, grid = 0;
  for (auto variant : {ChainVariant::Literal, ChainVariant::Standard})
    for (double p : {0.2, 0.4, 0.6, 0.8, 0.95})
      for (double r : {0.25, 0.5}) {
        PrivacyInputs in;
        in.ptilde = p;
        in.ratio = r;
        in.variant = variant;
        in.delta2 = in.delta_bar = 0.05;
        auto sweep = [&](auto set, int lo, int hi) {
          double prev = -1;
          for (int x = lo; x <= hi; ++x) {
            PrivacyInputs q = in;
            set(q, x);
            const PrivacyChain c = privacy_chain(q);
            if (!c.total.feasible()) break;
            ++grid;
            if (c.total.value() < prev) ++violations;
            prev = c.total.value();
          }
        };
        sweep([](PrivacyInputs& q, int x) { q.K = x; }, 1, 4);
        sweep([](PrivacyInputs& q, int x) { q.T = x; }, 0, 8);
        sweep([](PrivacyInputs& q, int x) { q.d = x; }, 1, 4);
      }
  v.require(violations == 0, fmt::format("{} monotonicity violations", violations));
  const std::string info = fmt::format("ln 6 error {:.2g}; {} oracle values; {} grid steps, {} violations",
                                       std::abs(e - std::log(6.0)), compared, grid, violations);
  v.detail = v.pass ? info : v.detail + "; " + info;
  return v;
}

Verdict qsq() {
  Verdict v;
  // nu = 1/2 keeps p~ nu = 0 while giving the outcomes maximal variance.
  const QsqInputs in{0.1, 0.05, 0.0, 0.5, 0.0, 0.0};
  const auto K = qsq_shot_count(in).value();
  v.require(K == 185, fmt::format("K = {}", K));
  const QsqCoverage cov = simulate_qsq_query(in, static_cast<int>(K), 10000, 0xacc8);
  const double threshold = 0.95 - 3 * std::sqrt(0.05 * 0.95 / 1e4);
  v.require(cov.coverage >= threshold, fmt::format("coverage {:.4f} < {:.4f}", cov.coverage, threshold));
  if (v.pass) v.detail = fmt::format("K = {}, coverage {:.4f} >= {:.4f}", K, cov.coverage, threshold);
  return v;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

Verdict determinism() {
  Verdict v;
  if (g_series.empty()) g_series = run_series(out_root() / "run1");
  run_series(out_root() / "run2");
  int files = 0;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(out_root() / "run1")) {
    if (!entry.is_regular_file() || entry.path().extension() != ".csv") continue;
    const auto rel = std::filesystem::relative(entry.path(), out_root() / "run1");
    const auto twin = out_root() / "run2" / rel;
    ++files;
    v.require(std::filesystem::exists(twin) && read_file(entry.path()) == read_file(twin),
              fmt::format("{} differs", rel.string()));
  }
  v.require(files == 4 * 7, fmt::format("expected 28 CSV files, found {}", files));
  if (v.pass) v.detail = fmt::format("{} CSV files byte-identical", files);
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    int id;
    const char* name;
    double limit_s;  // 0: no runtime limit
    std::function<Verdict()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "channel merging", 10, channel_merging},
      {2, "parameter-shift exactness", 30, parameter_shift},
      {3, "noisy gradient decomposition", 300, decomposition},
      {4, "smoothness, Lipschitz and PL inequalities", 120, loss_constants},
      {5, "digits reproduction", 1200, reproduction},
      {6, "bound sandwich", 0, bound_sandwich},
      {7, "privacy chain", 0, privacy},
      {8, "QSQ shot count and coverage", 60, qsq},
      {9, "determinism", 0, determinism},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail = fmt::format("exception: {}", e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.limit_s > 0 && secs > c.limit_s) {
      v.pass = false;
      v.detail += fmt::format("; runtime {:.1f}s over the {:.0f}s limit", secs, c.limit_s);
    }
    if (!v.pass) ++failures;
    std::cout << fmt::format("{} criterion {} ({}): {} [{:.1f}s]", v.pass ? "PASS" : "FAIL", c.id, c.name, v.detail,
                             secs)
              << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
