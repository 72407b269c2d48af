#include "cmax/evalsuite/probe.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "cmax/errors.hpp"
#include "cmax/numcore/adam.hpp"

namespace cmax {

namespace {

Matrix select_rows(const Matrix& x, const std::vector<std::size_t>& idx) {
  Matrix out(idx.size(), x.cols());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    std::copy(x.row(idx[k]).begin(), x.row(idx[k]).end(), out.row(k).begin());
  }
  return out;
}

std::vector<std::size_t> select(const std::vector<std::size_t>& v,
                                const std::vector<std::size_t>& idx) {
  std::vector<std::size_t> out;
  for (std::size_t i : idx) out.push_back(v[i]);
  return out;
}

Matrix logits(const Matrix& weight, const Matrix& bias, const Matrix& x) {
  Matrix z = matmul(x, weight);
  for (std::size_t i = 0; i < z.rows(); ++i) {
    for (std::size_t k = 0; k < z.cols(); ++k) z(i, k) += bias(0, k);
  }
  return z;
}

double accuracy(const std::vector<std::size_t>& pred, const std::vector<std::size_t>& labels) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == labels[i];
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

}  // namespace

ProbeModel train_probe(const Matrix& features, const std::vector<std::size_t>& labels,
                       const ProbeConfig& config) {
  if (features.rows() != labels.size()) {
    throw std::invalid_argument("train_probe: " + std::to_string(features.rows()) +
                                " rows but " + std::to_string(labels.size()) + " labels");
  }
  if (features.rows() < 2) throw DataError("train_probe: need at least 2 examples");
  require_finite(features, "train_probe features");
  if (!(config.dev_fraction >= 0.0 && config.dev_fraction < 1.0)) {
    throw std::invalid_argument("train_probe: dev_fraction must lie in [0, 1)");
  }
  const std::size_t k = *std::max_element(labels.begin(), labels.end()) + 1;
  std::vector<bool> seen(k, false);
  for (std::size_t l : labels) seen[l] = true;
  if (k < 2 || std::count(seen.begin(), seen.end(), true) < 2) {
    throw DataError("train_probe: need at least 2 classes");
  }

  std::vector<std::size_t> order(labels.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(config.seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t n_dev = static_cast<std::size_t>(
      std::llround(config.dev_fraction * static_cast<double>(labels.size())));
  if (config.dev_fraction > 0.0) n_dev = std::clamp<std::size_t>(n_dev, 1, labels.size() - 1);
  const std::vector<std::size_t> dev_idx(order.begin(), order.begin() + n_dev);
  const std::vector<std::size_t> train_idx(order.begin() + n_dev, order.end());

  const Matrix x_train = select_rows(features, train_idx);
  const auto y_train = select(labels, train_idx);
  const Matrix x_dev = n_dev ? select_rows(features, dev_idx) : x_train;
  const auto y_dev = n_dev ? select(labels, dev_idx) : y_train;

  const std::size_t d = features.cols();
  Matrix weight(d, k), bias(1, k);
  AdamState adam;
  adam.config.lr = config.lr;

  ProbeModel best;
  best.dev_accuracy = -1.0;
  auto consider = [&]() {
    ProbeModel current{weight, Vector(bias.flat().begin(), bias.flat().end()), 0.0};
    current.dev_accuracy = accuracy(probe_predict(current, x_dev), y_dev);
    if (current.dev_accuracy > best.dev_accuracy) best = std::move(current);
  };
  consider();

  const double inv_n = 1.0 / static_cast<double>(x_train.rows());
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    Matrix d_logits = logits(weight, bias, x_train);
    for (std::size_t i = 0; i < d_logits.rows(); ++i) {
      auto row = d_logits.row(i);
      const double mx = *std::max_element(row.begin(), row.end());
      double sum = 0.0;
      for (double& v : row) sum += (v = std::exp(v - mx));
      for (double& v : row) v = v / sum * inv_n;
      row[y_train[i]] -= inv_n;
    }
    Matrix d_bias(1, k);
    for (std::size_t i = 0; i < d_logits.rows(); ++i) {
      for (std::size_t c = 0; c < k; ++c) d_bias(0, c) += d_logits(i, c);
    }
    adam_step({&weight, &bias}, {matmul_at_b(x_train, d_logits), d_bias}, adam);
    consider();
  }
  return best;
}

std::vector<std::size_t> probe_predict(const ProbeModel& model, const Matrix& features) {
  if (features.cols() != model.weight.rows()) {
    throw std::invalid_argument("probe_predict: feature dim " + std::to_string(features.cols()) +
                                " but model expects " + std::to_string(model.weight.rows()));
  }
  const Matrix z = logits(model.weight, Matrix::row_vector(model.bias), features);
  std::vector<std::size_t> out(z.rows());
  for (std::size_t i = 0; i < z.rows(); ++i) {
    std::size_t arg = 0;
    for (std::size_t c = 1; c < z.cols(); ++c) {
      if (z(i, c) > z(i, arg)) arg = c;
    }
    out[i] = arg;
  }
  return out;
}

double eval_probe(const ProbeModel& model, const Matrix& features,
                  const std::vector<std::size_t>& labels) {
  if (features.rows() != labels.size()) {
    throw std::invalid_argument("eval_probe: rows and labels differ in count");
  }
  if (labels.empty()) throw std::invalid_argument("eval_probe: no examples");
  return accuracy(probe_predict(model, features), labels);
}

}  // namespace cmax
