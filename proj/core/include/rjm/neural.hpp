#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "rjm/classifier.hpp"

namespace rjm {

enum class NeuralKind { cnn, recurrent };

struct NeuralParams {
  std::size_t epochs = 20;
  std::size_t batch_size = 32;
  double learning_rate = 0.05;
  double momentum = 0.9;
  double clip_norm = 5.0;  // global gradient-norm clip per step; <= 0 disables
  double weight_decay = 0.0;  // L2 coefficient on weights (not biases), applied in the update
  std::uint64_t seed = 1;

  // Input grid: `steps` phrase slots of `step_width` embedding values.
  std::size_t steps = kSemanticSlots;
  std::size_t step_width = kSemanticDimension;

  // Convolutional net: conv(kernel, filters) -> ReLU -> max-pool(pool) -> dense.
  std::size_t filters = 32;
  std::size_t kernel = 3;
  std::size_t pool = 2;

  // Recurrent net: LSTM(hidden) over the slots -> dense on the last state.
  std::size_t hidden = 64;

  /// Also feed the manual and cluster slots (standardized) into the dense layer.
  bool side_path = false;
};

/// One training example: a steps x step_width grid (row-major) plus optional
/// side features.
struct NeuralExample {
  std::span<const double> grid;
  std::span<const double> side;
  int label = 0;
};

class NeuralModel final : public Classifier {
 public:
  /// Freshly initialized network (Xavier-uniform weights from params.seed).
  NeuralModel(NeuralKind kind, NeuralParams params, int classes, std::size_t side_width = 0);

  ModelKind kind() const noexcept override { return kind_ == NeuralKind::cnn ? ModelKind::cnn : ModelKind::recurrent; }
  NeuralKind neural_kind() const noexcept { return kind_; }
  int class_count() const noexcept override { return classes_; }
  const NeuralParams& params() const noexcept { return params_; }

  /// Reads the grid from [grid_offset, grid_offset + steps*step_width) of the
  /// row and side features from the slots listed in side_columns.
  std::vector<double> predict_row(std::span<const double> row) const override;
  std::vector<double> forward(std::span<const double> grid, std::span<const double> side = {}) const;

  /// Mean cross-entropy over `batch`; fills `gradient` (same layout as
  /// parameters()) when non-null.
  double loss_and_gradient(std::span<const NeuralExample> batch, std::vector<double>* gradient) const;

  std::vector<double>& parameters() noexcept { return theta_; }
  const std::vector<double>& parameters() const noexcept { return theta_; }

  /// True for weight entries of parameters(), false for biases.
  std::vector<bool> weight_mask() const;

  std::size_t side_width() const noexcept { return side_width_; }
  std::size_t grid_offset = kSemanticOffset;
  std::vector<std::size_t> side_columns;  // full-row slot of each side input; 0..side_width-1 by default
  std::vector<double> side_mean;
  std::vector<double> side_scale;

  std::vector<double> epoch_loss;
  bool aborted = false;  // training hit a non-finite loss and restored the last good weights

  nlohmann::json to_json() const override;
  static NeuralModel from_json(const nlohmann::json& j);

 private:
  struct Layout {
    std::size_t conv_w = 0, conv_b = 0, wx = 0, wh = 0, gate_b = 0, dense_w = 0, dense_b = 0, total = 0;
    std::size_t dense_in = 0;
  };
  Layout layout() const;
  /// Shared forward/backward pass. Fills `probabilities` (batch x classes,
  /// row-major) and `gradient` when non-null; returns the mean loss when
  /// `with_loss` is set.
  double run_batch(std::span<const NeuralExample> batch, bool with_loss, std::vector<double>* gradient,
                   std::vector<double>* probabilities) const;

  NeuralKind kind_;
  NeuralParams params_;
  int classes_;
  std::size_t side_width_;
  std::vector<double> theta_;
};

/// Minibatch SGD with momentum, shuffled with params.seed each epoch.
/// `side` may be null. On a non-finite loss, training stops and the weights
/// from the end of the last finite epoch are kept (`aborted` is set).
NeuralModel train_neural(NeuralKind kind, const Matrix& grids, const Matrix* side, std::span<const int> y, int classes,
                         const NeuralParams& params);

}  // namespace rjm
