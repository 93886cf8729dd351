#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "dtwin/net_model.hpp"

namespace dtwin {

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;
};

/// Fully connected network; ReLU after every layer except the last.
struct MlpParams {
  std::vector<DenseLayer> layers;

  /// Weights and biases uniform in +-1/sqrt(fan_in).
  static MlpParams init(std::size_t input_dim, std::span<const std::size_t> hidden,
                        std::size_t output_dim, Rng& rng);
  static MlpParams zeros_like(const MlpParams& other);

  std::size_t input_dim() const;
  std::size_t output_dim() const;
  std::size_t parameter_count() const;
  bool same_shape(const MlpParams& other) const;
  bool all_finite() const;
  double squared_norm() const;
  void axpy(double alpha, const MlpParams& g);  // this += alpha * g
  void scale(double s);

  /// Layer by layer: weight row-major, then bias.
  std::vector<double> flatten() const;
  void assign(std::span<const double> flat);
  double& coefficient(std::size_t flat_index);
};

/// Per-layer activations kept for the backward pass.
struct MlpCache {
  std::vector<Eigen::MatrixXd> inputs;  // input fed to layer l
  std::vector<Eigen::MatrixXd> pre;     // W x + b of layer l
};

/// x is input_dim x batch; returns output_dim x batch.
Eigen::MatrixXd mlp_forward(const MlpParams& p, const Eigen::MatrixXd& x, MlpCache* cache = nullptr);

/// Adds d(loss)/d(params) to `grad`, given d(loss)/d(output) for the cached batch.
void mlp_backward(const MlpParams& p, const MlpCache& cache, const Eigen::MatrixXd& grad_out,
                  MlpParams& grad);

}  // namespace dtwin
