#pragma once

// Reasoning-correctness probe: a 1-D convolution over the last five token
// positions of a statement followed by a small fully-connected head.

#include "apz/activation.hpp"
#include "apz/parser.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace apz {

inline constexpr int kProbePositions = 5;

struct ProbeExample {
  std::vector<float> features; // [position][channel], kProbePositions rows
  Label label = Label::Correct;
  std::string puzzle_id;
  int statement_index = 0;
};

struct BuildDiagnostics {
  int examples = 0;
  int skipped_short = 0;        // fewer than five tokens
  int skipped_out_of_range = 0; // token range outside the tensor
  int skipped_unaligned = 0;    // no token range attached
};

/// Appends one example per statement: activations of its last five tokens at
/// the selected layers, concatenated along channels (layer-major).
void append_examples(std::vector<ProbeExample> &out, const ActivationTensor &tensor,
                     std::span<const LabeledStatement> statements, std::span<const int> layers,
                     const std::string &puzzle_id, BuildDiagnostics &diag);

struct ProbeArchitecture {
  int in_channels = 0;
  int conv_channels = 128;
  int kernel = 3;
  int positions = kProbePositions;
  int hidden1 = 256;
  int hidden2 = 128;

  int conv_positions() const { return positions - kernel + 1; }
  int flat() const { return conv_positions() * conv_channels; }
  std::size_t parameter_count() const;

  friend bool operator==(const ProbeArchitecture &, const ProbeArchitecture &) = default;
};

class ProbeModel {
public:
  ProbeModel() = default;
  /// Zero parameters, identity standardization. Throws DomainError on bad shapes.
  explicit ProbeModel(const ProbeArchitecture &arch);

  const ProbeArchitecture &architecture() const { return arch_; }

  Eigen::MatrixXd conv_w; // conv_channels x (in_channels * kernel), column = channel * kernel + tap
  Eigen::VectorXd conv_b;
  Eigen::MatrixXd w1;     // hidden1 x flat, column = conv channel * conv_positions + position
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;     // hidden2 x hidden1
  Eigen::VectorXd b2;
  Eigen::RowVectorXd w3;  // 1 x hidden2
  double b3 = 0;
  Eigen::VectorXd feature_mean; // per input channel
  Eigen::VectorXd feature_scale; // 1 / standard deviation

  /// He-normal weights, zero biases.
  void initialize(std::uint64_t seed);

  /// Trainable parameters flattened in declaration order.
  std::vector<double> parameters() const;
  void set_parameters(std::span<const double> values);

  double logit(const ProbeExample &x) const;
  /// Sigmoid of the logit.
  double forward(const ProbeExample &x) const;

  /// Mean binary cross-entropy over `batch` (label Correct = 1) and, if
  /// `grad` is given, its gradient with respect to parameters().
  double loss(std::span<const ProbeExample *const> batch, std::vector<double> *grad = nullptr) const;


private:
  ProbeArchitecture arch_;
};

struct TrainConfig {
  int epochs = 50;
  int batch_size = 64;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  std::vector<int> layers; // informational; recorded in checkpoints
  ProbeArchitecture arch;  // in_channels is taken from the examples
};

class TrainingError : public std::runtime_error {
public:
  TrainingError(const std::string &what, int epoch) : std::runtime_error(what), epoch_(epoch) {}
  int epoch() const { return epoch_; }

private:
  int epoch_;
};

struct EpochLog {
  int epoch = 0;
  double train_loss = 0;
  double validation_accuracy = 0;
};

struct TrainResult {
  ProbeModel model;
  int best_epoch = 0;
  double best_validation_accuracy = 0;
  std::vector<EpochLog> history;
};

/// Adam on mean BCE. Examples are put in (puzzle_id, statement_index) order
/// before seeded shuffling, so input order never matters. Returns the epoch
/// with the best validation accuracy (the last epoch if `validation` is
/// empty). Throws DomainError on bad config or single-class data, and
/// TrainingError on a non-finite loss.
TrainResult train(std::span<const ProbeExample> training, std::span<const ProbeExample> validation,
                  const TrainConfig &cfg);

struct ProbeMetrics {
  int count = 0;
  double accuracy = 0;
  int true_correct = 0, false_correct = 0, true_incorrect = 0, false_incorrect = 0;
  double precision_correct = 0, recall_correct = 0;
  double precision_incorrect = 0, recall_incorrect = 0;
};

/// Probability >= 0.5 predicts Correct. Throws DomainError on an empty set.
ProbeMetrics evaluate(const ProbeModel &model, std::span<const ProbeExample> examples);

/// Max over parameters of |analytic - numeric| / max(|analytic|, |numeric|, 1e-6),
/// numeric by central differences with step `epsilon` in [1e-6, 1e-3].
double gradient_check(const ProbeModel &model, const ProbeExample &example, double epsilon);

struct CheckpointInfo {
  std::uint64_t seed = 0;
  int epochs = 0;
  int batch_size = 0;
  double learning_rate = 0;
  std::vector<int> layers;
  int best_epoch = 0;
};

/// "APZPRB1\n", u32 header length, JSON header, float32 parameters, then the
/// float32 standardization vectors.
void write_checkpoint(const ProbeModel &model, const CheckpointInfo &info, const std::filesystem::path &path);
ProbeModel read_checkpoint(const std::filesystem::path &path, CheckpointInfo *info = nullptr);

} // namespace apz
