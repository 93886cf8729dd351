#include "dtwin/mlp.hpp"

#include <cmath>
#include <stdexcept>

namespace dtwin {

MlpParams MlpParams::init(std::size_t input_dim, std::span<const std::size_t> hidden,
                          std::size_t output_dim, Rng& rng) {
  MlpParams p;
  std::vector<std::size_t> dims{input_dim};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(output_dim);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const auto in = static_cast<Eigen::Index>(dims[l]);
    const auto out = static_cast<Eigen::Index>(dims[l + 1]);
    const double bound = 1.0 / std::sqrt(static_cast<double>(dims[l]));
    std::uniform_real_distribution<double> u(-bound, bound);
    DenseLayer layer;
    layer.weight.resize(out, in);
    layer.bias.resize(out);
    for (Eigen::Index r = 0; r < out; ++r)
      for (Eigen::Index c = 0; c < in; ++c) layer.weight(r, c) = u(rng);
    for (Eigen::Index r = 0; r < out; ++r) layer.bias(r) = u(rng);
    p.layers.push_back(std::move(layer));
  }
  return p;
}

MlpParams MlpParams::zeros_like(const MlpParams& other) {
  MlpParams p;
  for (const auto& l : other.layers)
    p.layers.push_back({Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()),
                        Eigen::VectorXd::Zero(l.bias.size())});
  return p;
}

std::size_t MlpParams::input_dim() const {
  return layers.empty() ? 0 : static_cast<std::size_t>(layers.front().weight.cols());
}

std::size_t MlpParams::output_dim() const {
  return layers.empty() ? 0 : static_cast<std::size_t>(layers.back().weight.rows());
}

std::size_t MlpParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

bool MlpParams::same_shape(const MlpParams& o) const {
  if (layers.size() != o.layers.size()) return false;
  for (std::size_t l = 0; l < layers.size(); ++l)
    if (layers[l].weight.rows() != o.layers[l].weight.rows() ||
        layers[l].weight.cols() != o.layers[l].weight.cols() ||
        layers[l].bias.size() != o.layers[l].bias.size())
      return false;
  return true;
}

bool MlpParams::all_finite() const {
  for (const auto& l : layers)
    if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
  return true;
}

double MlpParams::squared_norm() const {
  double s = 0.0;
  for (const auto& l : layers) s += l.weight.squaredNorm() + l.bias.squaredNorm();
  return s;
}

void MlpParams::axpy(double alpha, const MlpParams& g) {
  if (!same_shape(g)) throw std::invalid_argument("parameter shape mismatch");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    layers[l].weight += alpha * g.layers[l].weight;
    layers[l].bias += alpha * g.layers[l].bias;
  }
}

void MlpParams::scale(double s) {
  for (auto& l : layers) {
    l.weight *= s;
    l.bias *= s;
  }
}

std::vector<double> MlpParams::flatten() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  for (const auto& l : layers) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) out.push_back(l.weight(r, c));
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) out.push_back(l.bias(r));
  }
  return out;
}

void MlpParams::assign(std::span<const double> flat) {
  if (flat.size() != parameter_count()) throw std::invalid_argument("flat parameter size mismatch");
  std::size_t k = 0;
  for (auto& l : layers) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = flat[k++];
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias(r) = flat[k++];
  }
}

double& MlpParams::coefficient(std::size_t idx) {
  for (auto& l : layers) {
    const auto w = static_cast<std::size_t>(l.weight.size());
    if (idx < w) {
      const auto cols = static_cast<std::size_t>(l.weight.cols());
      return l.weight(static_cast<Eigen::Index>(idx / cols), static_cast<Eigen::Index>(idx % cols));
    }
    idx -= w;
    const auto b = static_cast<std::size_t>(l.bias.size());
    if (idx < b) return l.bias(static_cast<Eigen::Index>(idx));
    idx -= b;
  }
  throw std::out_of_range("parameter index out of range");
}

Eigen::MatrixXd mlp_forward(const MlpParams& p, const Eigen::MatrixXd& x, MlpCache* cache) {
  if (static_cast<std::size_t>(x.rows()) != p.input_dim())
    throw std::invalid_argument("mlp_forward: input dimension mismatch");
  if (!x.allFinite()) throw std::invalid_argument("mlp_forward: non-finite input");
  if (cache) {
    cache->inputs.clear();
    cache->pre.clear();
  }
  Eigen::MatrixXd h = x;
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    const auto& layer = p.layers[l];
    Eigen::MatrixXd z = layer.weight * h;
    z.colwise() += layer.bias;
    if (cache) {
      cache->inputs.push_back(h);
      cache->pre.push_back(z);
    }
    h = (l + 1 < p.layers.size()) ? Eigen::MatrixXd(z.cwiseMax(0.0)) : z;
  }
  return h;
}

void mlp_backward(const MlpParams& p, const MlpCache& cache, const Eigen::MatrixXd& grad_out,
                  MlpParams& grad) {
  Eigen::MatrixXd delta = grad_out;
  for (std::size_t k = p.layers.size(); k-- > 0;) {
    if (k + 1 < p.layers.size()) delta = delta.cwiseProduct((cache.pre[k].array() > 0.0).cast<double>().matrix());
    grad.layers[k].weight.noalias() += delta * cache.inputs[k].transpose();
    grad.layers[k].bias += delta.rowwise().sum();
    if (k > 0) delta = p.layers[k].weight.transpose() * delta;
  }
}

}  // namespace dtwin
