#include "qnn/train.hpp"

#include <fmt/format.h>

#include <cmath>
#include <numeric>

#include "qnn/error.hpp"
#include "qnn/format.hpp"
#include "qnn/rng.hpp"
#include "qnn/theory.hpp"

namespace qnn {

namespace {

// Stream tags keep the derived seeds of different purposes apart.
constexpr std::uint64_t kInitTag = 0x1417;
constexpr std::uint64_t kBatchTag = 0xba7c;
constexpr std::uint64_t kShotTag = 0x5407;

double squared_norm(const std::vector<double>& v) {
  return std::inner_product(v.begin(), v.end(), v.begin(), 0.0);
}

std::vector<double> traces(const ComplexMatrix& o, const std::vector<ComplexMatrix>& states) {
  std::vector<double> out(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) out[i] = trace_product(o, states[i]);
  return out;
}

QnnModel noiseless_copy(const QnnModel& m) {
  return QnnModel(m.encoder(), m.ansatz(), m.povm(), NoiseSpec::none());
}

}  // namespace

// ---------------------------------------------------------------- model

QnnModel::QnnModel(EncoderSpec encoder, AnsatzSpec ansatz, PovmSpec povm, NoiseSpec noise)
    : encoder_(encoder), ansatz_(ansatz), povm_(std::move(povm)), noise_(std::move(noise)) {
  encoder_.validate();
  ansatz_.validate();
  noise_.validate();
  if (encoder_.n_qubits != ansatz_.n_qubits)
    throw ValidationError("encoder and ansatz qubit counts differ");
  if (povm_.projector.rows() != (std::size_t{1} << encoder_.n_qubits))
    throw ValidationError("POVM dimension does not match the register");
  if (noise_.kind == NoiseKind::General && noise_.kappa->n_qubits() != encoder_.n_qubits)
    throw ValidationError("kappa dimension does not match the register");
}

double QnnModel::ptilde() const { return merged_rate(noise_.rate(), noise_layers()); }

EncodedSet QnnModel::encode(const ReducedDataset& data) const {
  EncodedSet set;
  const DensityMatrix zero = DensityMatrix::basis_state(encoder_.n_qubits, 0);
  const bool general = noise_.kind == NoiseKind::General && !noise_.trivial();
  for (std::size_t i = 0; i < data.size(); ++i) {
    const CircuitSpec enc = build_encoder(encoder_, data.features[i]);
    set.states.push_back(run_circuit(zero, enc, NoiseSpec::none()).matrix());
    if (general) set.noisy_states.push_back(run_circuit(zero, enc, noise_).matrix());
    set.labels.push_back(static_cast<double>(data.labels[i]));
  }
  return set;
}

ComplexMatrix QnnModel::observable(const ParamVector& theta) const {
  return heisenberg(povm_.projector, build_ansatz(ansatz_, theta), NoiseSpec::none());
}

ComplexMatrix QnnModel::noisy_observable(const ParamVector& theta) const {
  return heisenberg(povm_.projector, build_ansatz(ansatz_, theta), noise_);
}

ShiftedObservables QnnModel::shifted_observables(const ParamVector& theta, bool noisy) const {
  auto pull = [&](const ParamVector& t) { return noisy ? noisy_observable(t) : observable(t); };
  ShiftedObservables out{pull(theta), {}, {}};
  for (std::size_t j = 0; j < theta.size(); ++j) {
    out.plus.push_back(pull(shift_parameter(theta, j, +1)));
    out.minus.push_back(pull(shift_parameter(theta, j, -1)));
  }
  return out;
}

std::vector<double> QnnModel::predict(const ParamVector& theta, const EncodedSet& set) const {
  return traces(observable(theta), set.states);
}

std::vector<double> QnnModel::predict_noisy(const ParamVector& theta, const EncodedSet& set) const {
  if (noise_.kind == NoiseKind::General && !noise_.trivial()) {
    if (set.noisy_states.size() != set.size())
      throw ValidationError("encoded set lacks noisy encoder states");
    return traces(noisy_observable(theta), set.noisy_states);
  }
  std::vector<double> q = predict(theta, set);
  const double p = ptilde();
  for (auto& v : q) v = (1.0 - p) * v + p * povm_.ratio;
  return q;
}

ShiftedPredictions QnnModel::predict_shifted(const ParamVector& theta, const EncodedSet& set) const {
  const ShiftedObservables obs = shifted_observables(theta, false);
  ShiftedPredictions out{traces(obs.center, set.states), {}, {}};
  for (std::size_t j = 0; j < theta.size(); ++j) {
    out.plus.push_back(traces(obs.plus[j], set.states));
    out.minus.push_back(traces(obs.minus[j], set.states));
  }
  return out;
}

// ---------------------------------------------------------------- objective

double objective(const QnnModel& model, const ParamVector& theta, const EncodedSet& set,
                 double lambda, bool noisy) {
  if (set.size() == 0) throw ValidationError("objective of an empty dataset");
  const auto pred = noisy ? model.predict_noisy(theta, set) : model.predict(theta, set);
  double acc = 0.0;
  for (std::size_t i = 0; i < set.size(); ++i) acc += (pred[i] - set.labels[i]) * (pred[i] - set.labels[i]);
  return acc / static_cast<double>(set.size()) + 0.5 * lambda * squared_norm(theta);
}

std::vector<double> full_gradient(const QnnModel& model, const ParamVector& theta,
                                  const EncodedSet& set, double lambda) {
  if (set.size() == 0) throw ValidationError("gradient of an empty dataset");
  const ShiftedPredictions sp = model.predict_shifted(theta, set);
  std::vector<double> g(theta.size());
  const double n = static_cast<double>(set.size());
  for (std::size_t j = 0; j < theta.size(); ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < set.size(); ++i)
      acc += (sp.center[i] - set.labels[i]) * (sp.plus[j][i] - sp.minus[j][i]);
    g[j] = acc / n + lambda * theta[j];
  }
  return g;
}

double accuracy(const std::vector<double>& predictions, const EncodedSet& set) {
  if (set.size() == 0) return 0.0;
  std::size_t right = 0;
  for (std::size_t i = 0; i < set.size(); ++i)
    if ((predictions[i] >= 0.5) == (set.labels[i] >= 0.5)) ++right;
  return static_cast<double>(right) / static_cast<double>(set.size());
}

// ---------------------------------------------------------------- training

double TrainConfig::resolved_learning_rate() const {
  return learning_rate.value_or(1.0 / constants(lambda, 1).S);
}

void TrainConfig::validate(std::size_t n_rows) const {
  if (iterations < 0) throw ValidationError("iterations must be >= 0");
  if (!(resolved_learning_rate() > 0.0)) throw ValidationError("learning rate must be > 0");
  if (!(lambda >= 0.0)) throw ValidationError("lambda must be >= 0");
  if (batch_size < 1) throw ValidationError("batch size must be >= 1");
  const int b = batches.value_or(static_cast<int>(n_rows) / batch_size);
  if (b < 1) throw ValidationError("batch count must be >= 1");
  if (static_cast<std::size_t>(b) * batch_size > n_rows)
    throw ValidationError(fmt::format("B * B_s = {} exceeds {} rows", b * batch_size, n_rows));
  if (shots && *shots < 1) throw ValidationError("shots must be >= 1");
  if (!(divergence_limit > 0.0)) throw ValidationError("divergence limit must be > 0");
}

std::string TrainRecord::csv_header() { return "iter,loss,noisy_loss,train_acc,test_acc,shots"; }

std::string TrainRecord::csv_row() const {
  return fmt::format("{},{},{},{},{},{}", iter, num(loss), num(noisy_loss), num(train_acc),
                     num(test_acc), shots);
}

ParamVector initial_parameters(std::size_t d, std::uint64_t seed) {
  RngStream rng = RngStream::derived(seed, {kInitTag});
  ParamVector theta(d);
  for (auto& t : theta) t = rng.uniform(kBoxLow, kBoxHigh);
  return theta;
}

TrainResult train(const QnnModel& model, const TrainConfig& config, const EncodedSet& train_set,
                  const EncodedSet* test_set) {
  const std::size_t n = train_set.size();
  if (n == 0) throw ValidationError("training set is empty");
  config.validate(n);
  const std::size_t d = model.param_count();
  const int bs = config.batch_size;
  const int n_batches = config.batches.value_or(static_cast<int>(n) / bs);
  const double eta = config.resolved_learning_rate();
  const double lambda = config.lambda;
  const double scale = shift_scale(config.convention);
  const double ptilde = model.ptilde();
  const double ratio = model.povm().ratio;
  const bool general = model.noise().kind == NoiseKind::General && !model.noise().trivial();

  // Fixed batch membership for the whole run.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  if (bs > 1 || static_cast<std::size_t>(n_batches) < n) {
    RngStream rng = RngStream::derived(config.seed, {kBatchTag});
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  }

  TrainResult result;
  ParamVector theta = config.initial_theta.value_or(initial_parameters(d, config.seed));
  if (theta.size() != d)
    throw ValidationError(fmt::format("initial theta has {} entries, model needs {}", theta.size(), d));
  if (config.clip_to_pl_box) clip_to_pl_box(theta);
  result.initial_theta = theta;

  std::int64_t shots_used = 0;
  const std::int64_t shots_per_step =
      config.shots ? static_cast<std::int64_t>(n_batches) * static_cast<std::int64_t>(d) * 3 * *config.shots : 0;

  for (int t = 0;; ++t) {
    const std::vector<double> pred = model.predict(theta, train_set);
    TrainRecord rec;
    rec.iter = t;
    rec.theta = theta;
    rec.shots = shots_used;
    const double reg = 0.5 * lambda * squared_norm(theta);
    {
      const std::vector<double> q = model.predict_noisy(theta, train_set);
      double l = 0.0, ln = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        l += (pred[i] - train_set.labels[i]) * (pred[i] - train_set.labels[i]);
        ln += (q[i] - train_set.labels[i]) * (q[i] - train_set.labels[i]);
      }
      rec.loss = l / static_cast<double>(n) + reg;
      rec.noisy_loss = ln / static_cast<double>(n) + reg;
    }
    rec.train_acc = accuracy(pred, train_set);
    rec.test_acc = test_set && test_set->size() ? accuracy(model.predict(theta, *test_set), *test_set) : 0.0;
    const double loss = rec.loss;
    result.records.push_back(std::move(rec));
    if (!(loss <= config.divergence_limit))
      throw NumericError(fmt::format("training diverged at iteration {}: loss {} exceeds {}", t, loss,
                                     config.divergence_limit));
    if (t == config.iterations) break;

    // Per-row expectations at theta and all shifts. Noiseless values feed the
    // depolarizing sampler; the general channel samples its own probabilities.
    ShiftedPredictions sp = model.predict_shifted(theta, train_set);
    if (general) {
      const ShiftedObservables obs = model.shifted_observables(theta, true);
      sp.center = traces(obs.center, train_set.noisy_states);
      for (std::size_t j = 0; j < d; ++j) {
        sp.plus[j] = traces(obs.plus[j], train_set.noisy_states);
        sp.minus[j] = traces(obs.minus[j], train_set.noisy_states);
      }
    }

    std::vector<double> grad(d, 0.0);
    std::vector<double> bplus(d), bminus(d);
    for (int b = 0; b < n_batches; ++b) {
      double y0 = 0.0, label = 0.0;
      std::fill(bplus.begin(), bplus.end(), 0.0);
      std::fill(bminus.begin(), bminus.end(), 0.0);
      for (int k = 0; k < bs; ++k) {
        const std::size_t row = order[static_cast<std::size_t>(b) * bs + k];
        y0 += sp.center[row];
        label += train_set.labels[row];
        for (std::size_t j = 0; j < d; ++j) {
          bplus[j] += sp.plus[j][row];
          bminus[j] += sp.minus[j][row];
        }
      }
      y0 /= bs;
      label /= bs;
      for (std::size_t j = 0; j < d; ++j) {
        bplus[j] /= bs;
        bminus[j] /= bs;
      }

      if (!config.shots) {
        // K -> infinity: sample means collapse to the outcome probabilities.
        auto noisy = [&](double y) { return general ? y : (1.0 - ptilde) * y + ptilde * ratio; };
        for (std::size_t j = 0; j < d; ++j)
          grad[j] += scale * (noisy(y0) - label) * (noisy(bplus[j]) - noisy(bminus[j])) + lambda * theta[j];
        continue;
      }

      const auto tb = static_cast<std::uint64_t>(t), bb = static_cast<std::uint64_t>(b);
      RngStream center = RngStream::derived(config.seed, {kShotTag, tb, bb, 0});
      RngStream plus = RngStream::derived(config.seed, {kShotTag, tb, bb, 1});
      RngStream minus = RngStream::derived(config.seed, {kShotTag, tb, bb, 2});
      const int K = *config.shots;
      for (std::size_t j = 0; j < d; ++j) {
        if (general) {
          const double m0 = sample_bernoulli_mean(y0, K, center);
          const double mp = sample_bernoulli_mean(bplus[j], K, plus);
          const double mm = sample_bernoulli_mean(bminus[j], K, minus);
          grad[j] += scale * (m0 - label) * (mp - mm) + lambda * theta[j];
        } else {
          const GradContext ctx{y0, bplus[j], bminus[j], label, theta[j], lambda, ptilde, ratio, K};
          grad[j] += estimated_gradient(ctx, center, plus, minus, config.convention);
        }
      }
    }
    for (std::size_t j = 0; j < d; ++j) theta[j] -= eta / n_batches * grad[j];
    if (config.clip_to_pl_box) clip_to_pl_box(theta);
    shots_used += shots_per_step;
  }
  return result;
}

// ---------------------------------------------------------------- utilities

double utility_r1(const QnnModel& model, const std::vector<ParamVector>& finals,
                  const EncodedSet& set, double lambda) {
  if (finals.empty()) throw ValidationError("utility_r1 needs at least one run");
  const QnnModel clean = noiseless_copy(model);
  double acc = 0.0;
  for (const auto& theta : finals) acc += squared_norm(full_gradient(clean, theta, set, lambda));
  return acc / static_cast<double>(finals.size());
}

ExcessRisk utility_r2(const QnnModel& model, const std::vector<ParamVector>& finals,
                      const ParamVector& reference, const EncodedSet& set, double lambda,
                      double tolerance) {
  if (finals.empty()) throw ValidationError("utility_r2 needs at least one run");
  const QnnModel clean = noiseless_copy(model);
  double mean = 0.0;
  for (const auto& theta : finals) mean += objective(clean, theta, set, lambda);
  mean /= static_cast<double>(finals.size());
  const double ref = objective(clean, reference, set, lambda);
  return ExcessRisk{mean - ref, mean, ref, ref > mean + tolerance};
}

ParamVector reference_optimum(const QnnModel& model, const EncodedSet& set, double lambda,
                              const std::vector<ParamVector>& starts, int iterations,
                              bool clip) {
  if (starts.empty()) throw ValidationError("reference_optimum needs at least one start");
  const QnnModel clean = noiseless_copy(model);
  ParamVector best;
  double best_loss = 0.0;
  for (const auto& start : starts) {
    TrainConfig cfg;
    cfg.iterations = iterations;
    cfg.lambda = lambda;
    cfg.initial_theta = start;
    cfg.clip_to_pl_box = clip;
    const TrainResult r = train(clean, cfg, set);
    const double loss = r.records.back().loss;
    if (best.empty() || loss < best_loss) {
      best = r.final_theta();
      best_loss = loss;
    }
  }
  return best;
}

}  // namespace qnn
