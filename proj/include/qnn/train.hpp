#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qnn/circuits.hpp"
#include "qnn/dataprep.hpp"
#include "qnn/grad.hpp"
#include "qnn/measure.hpp"
#include "qnn/noise.hpp"

namespace qnn {

/// Encoded rows for a fixed encoder and noise model.
struct EncodedSet {
  std::vector<ComplexMatrix> states;        // noiseless encoder output
  std::vector<ComplexMatrix> noisy_states;  // encoder output with per-block noise (general channel only)
  std::vector<double> labels;

  std::size_t size() const { return labels.size(); }
};

/// Observable pulled back through the ansatz at theta and at every shifted theta.
struct ShiftedObservables {
  ComplexMatrix center;
  std::vector<ComplexMatrix> plus;
  std::vector<ComplexMatrix> minus;
};

/// Predictions of every row at theta and at every shifted theta.
struct ShiftedPredictions {
  std::vector<double> center;              // [row]
  std::vector<std::vector<double>> plus;   // [param][row]
  std::vector<std::vector<double>> minus;  // [param][row]
};

/// Encoder + ansatz + readout + noise: the quantum classifier.
class QnnModel {
 public:
  QnnModel(EncoderSpec encoder, AnsatzSpec ansatz, PovmSpec povm, NoiseSpec noise);

  const EncoderSpec& encoder() const { return encoder_; }
  const AnsatzSpec& ansatz() const { return ansatz_; }
  const PovmSpec& povm() const { return povm_; }
  const NoiseSpec& noise() const { return noise_; }
  std::size_t param_count() const { return ansatz_.param_count(); }
  /// L_Q = encoder blocks + ansatz layers.
  int noise_layers() const { return encoder_.n_blocks + ansatz_.n_layers; }
  /// Merged rate of the whole circuit: 1 - (1 - rate)^L_Q.
  double ptilde() const;

  EncodedSet encode(const ReducedDataset& data) const;

  /// Pi pulled back through the noiseless ansatz.
  ComplexMatrix observable(const ParamVector& theta) const;
  /// Pi pulled back through the noisy ansatz (adjoint channel after each layer).
  ComplexMatrix noisy_observable(const ParamVector& theta) const;
  ShiftedObservables shifted_observables(const ParamVector& theta, bool noisy) const;

  /// Noiseless expectations Tr(Pi U rho U^dagger).
  std::vector<double> predict(const ParamVector& theta, const EncodedSet& set) const;
  /// Outcome-1 probabilities of the noisy device.
  std::vector<double> predict_noisy(const ParamVector& theta, const EncodedSet& set) const;
  ShiftedPredictions predict_shifted(const ParamVector& theta, const EncodedSet& set) const;

 private:
  EncoderSpec encoder_;
  AnsatzSpec ansatz_;
  PovmSpec povm_;
  NoiseSpec noise_;
};

/// (1/n) sum (yhat - y)^2 + (lambda/2) |theta|^2 with noiseless or noisy predictions.
double objective(const QnnModel& model, const ParamVector& theta, const EncodedSet& set,
                 double lambda, bool noisy = false);
/// Exact gradient (1/n) sum (yhat - y)(yhat+ - yhat-) + lambda theta.
std::vector<double> full_gradient(const QnnModel& model, const ParamVector& theta,
                                  const EncodedSet& set, double lambda);
/// Fraction of rows with (yhat >= 0.5) == label.
double accuracy(const std::vector<double>& predictions, const EncodedSet& set);

struct TrainConfig {
  int iterations = 400;                 // T
  std::optional<double> learning_rate;  // default 1/S
  double lambda = 0.0;
  std::optional<int> batches;  // B; default n / batch_size
  int batch_size = 1;          // B_s
  std::optional<int> shots;    // K; unset means exact expectations
  std::uint64_t seed = 0;
  bool clip_to_pl_box = false;
  ShiftConvention convention = ShiftConvention::Full;
  std::optional<ParamVector> initial_theta;  // default uniform on [pi, 3pi]
  double divergence_limit = 1e6;

  double resolved_learning_rate() const;
  void validate(std::size_t n_rows) const;
};

struct TrainRecord {
  int iter = 0;
  double loss = 0.0;        // noiseless objective
  double noisy_loss = 0.0;  // objective with noisy outcome probabilities
  double train_acc = 0.0;
  double test_acc = 0.0;
  ParamVector theta;
  std::int64_t shots = 0;  // cumulative measurements so far

  static std::string csv_header();
  std::string csv_row() const;
};

struct TrainResult {
  std::vector<TrainRecord> records;
  ParamVector initial_theta;

  const ParamVector& final_theta() const { return records.back().theta; }
};

/// Uniform on [pi, 3pi]^d from a stream derived from `seed`.
ParamVector initial_parameters(std::size_t d, std::uint64_t seed);

/// Batch gradient descent. Records t = 0..T. Throws NumericError when the
/// loss exceeds the divergence limit.
TrainResult train(const QnnModel& model, const TrainConfig& config, const EncodedSet& train_set,
                  const EncodedSet* test_set = nullptr);

/// Mean over runs of |grad L(theta_T)|^2 with exact gradients.
double utility_r1(const QnnModel& model, const std::vector<ParamVector>& finals,
                  const EncodedSet& set, double lambda);

struct ExcessRisk {
  double value;           // mean loss - reference loss
  double mean_loss;
  double reference_loss;
  bool flagged;           // reference worse than the runs beyond tolerance
};

ExcessRisk utility_r2(const QnnModel& model, const std::vector<ParamVector>& finals,
                      const ParamVector& reference, const EncodedSet& set, double lambda,
                      double tolerance = 1e-6);

/// Best of exact-gradient descents from each start: the theta* estimate.
ParamVector reference_optimum(const QnnModel& model, const EncodedSet& set, double lambda,
                              const std::vector<ParamVector>& starts, int iterations,
                              bool clip_to_pl_box = false);

}  // namespace qnn
