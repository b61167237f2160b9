#pragma once

// Small fully connected classifier trained with exact backpropagation.
//
// Parameter layout (layer-major): for each layer l = 0..L-2 with fan-in
// `in` and fan-out `out`, the out x in weight matrix stored row-major
// (weight[o * in + i]) followed by the `out` biases. Hidden layers use tanh,
// the output layer feeds a softmax cross-entropy loss.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "fedcomm/cdma_channel.hpp"
#include "fedcomm/rng.hpp"

namespace fedcomm {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct MlpArchitecture {
  std::vector<std::size_t> layer_sizes;  // input dim, hidden dims..., class count

  void validate() const {
    if (layer_sizes.size() < 2) throw std::invalid_argument("MlpArchitecture: need at least an input and an output layer");
    for (auto s : layer_sizes)
      if (s == 0) throw std::invalid_argument("MlpArchitecture: layer sizes must be positive");
  }
  std::size_t input_dim() const { return layer_sizes.front(); }
  std::size_t class_count() const { return layer_sizes.back(); }
  std::size_t layers() const { return layer_sizes.size() - 1; }

  std::size_t param_count() const {
    std::size_t total = 0;
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) total += layer_sizes[l] * layer_sizes[l + 1] + layer_sizes[l + 1];
    return total;
  }
  // Offset of layer l's weight block in the flat vector.
  std::size_t offset(std::size_t l) const {
    std::size_t off = 0;
    for (std::size_t i = 0; i < l; ++i) off += layer_sizes[i] * layer_sizes[i + 1] + layer_sizes[i + 1];
    return off;
  }
  bool operator==(const MlpArchitecture&) const = default;
};

struct Dataset {
  RowMatrix features;  // samples x dim
  std::vector<int> labels;
  std::size_t class_count = 0;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(features.cols()); }

  Dataset subset(std::span<const std::size_t> rows) const {
    Dataset d;
    d.class_count = class_count;
    d.features.resize(static_cast<Eigen::Index>(rows.size()), features.cols());
    d.labels.resize(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      d.features.row(static_cast<Eigen::Index>(i)) = features.row(static_cast<Eigen::Index>(rows[i]));
      d.labels[i] = labels[rows[i]];
    }
    return d;
  }
};

using Shard = Dataset;

// Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)); biases start at zero.
inline ParamVector init_model(const MlpArchitecture& arch, Seed seed) {
  arch.validate();
  ParamVector w(arch.param_count(), 0.0);
  CounterStream rng(derive_seed(seed, {stream::init}));
  for (std::size_t l = 0; l < arch.layers(); ++l) {
    const std::size_t in = arch.layer_sizes[l];
    const std::size_t out = arch.layer_sizes[l + 1];
    const double scale = 1.0 / std::sqrt(static_cast<double>(in));
    const std::size_t off = arch.offset(l);
    for (std::size_t i = 0; i < in * out; ++i) w[off + i] = scale * (2.0 * rng.uniform() - 1.0);
  }
  return w;
}

namespace detail {

inline void check_batch(std::span<const double> params, const MlpArchitecture& arch, const RowMatrix& x,
                        std::span<const int> labels) {
  arch.validate();
  if (params.size() != arch.param_count()) throw std::invalid_argument("parameter vector length does not match architecture");
  if (static_cast<std::size_t>(x.cols()) != arch.input_dim()) throw std::invalid_argument("batch feature dimension mismatch");
  if (static_cast<std::size_t>(x.rows()) != labels.size()) throw std::invalid_argument("batch label count mismatch");
  for (int y : labels)
    if (y < 0 || static_cast<std::size_t>(y) >= arch.class_count()) throw std::invalid_argument("label out of range");
}

inline Eigen::Map<const RowMatrix> weights(std::span<const double> p, const MlpArchitecture& arch, std::size_t l) {
  return {p.data() + arch.offset(l), static_cast<Eigen::Index>(arch.layer_sizes[l + 1]),
          static_cast<Eigen::Index>(arch.layer_sizes[l])};
}
inline Eigen::Map<const Eigen::RowVectorXd> biases(std::span<const double> p, const MlpArchitecture& arch,
                                                   std::size_t l) {
  return {p.data() + arch.offset(l) + arch.layer_sizes[l] * arch.layer_sizes[l + 1],
          static_cast<Eigen::Index>(arch.layer_sizes[l + 1])};
}

// Row-wise log-softmax.
inline RowMatrix log_softmax(const RowMatrix& logits) {
  RowMatrix out = logits;
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    const double m = out.row(r).maxCoeff();
    const double lse = m + std::log((out.row(r).array() - m).exp().sum());
    out.row(r).array() -= lse;
  }
  return out;
}

}  // namespace detail

struct ForwardResult {
  double loss = 0.0;
  RowMatrix logits;
};

// Mean softmax cross-entropy over the batch.
inline ForwardResult forward_loss(std::span<const double> params, const MlpArchitecture& arch, const RowMatrix& x,
                                  std::span<const int> labels) {
  detail::check_batch(params, arch, x, labels);
  RowMatrix a = x;
  for (std::size_t l = 0; l < arch.layers(); ++l) {
    RowMatrix z = a * detail::weights(params, arch, l).transpose();
    z.rowwise() += detail::biases(params, arch, l);
    a = (l + 1 < arch.layers()) ? RowMatrix(z.array().tanh()) : z;
  }
  ForwardResult r;
  r.logits = a;
  if (labels.empty()) return r;
  const RowMatrix lp = detail::log_softmax(a);
  double loss = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) loss -= lp(static_cast<Eigen::Index>(i), labels[i]);
  r.loss = loss / static_cast<double>(labels.size());
  return r;
}

inline ForwardResult forward_loss(std::span<const double> params, const MlpArchitecture& arch, const Dataset& batch) {
  return forward_loss(params, arch, batch.features, batch.labels);
}

struct LossGradient {
  double loss = 0.0;
  ParamVector gradient;
};

// Loss and its exact gradient with respect to the flat parameter vector.
inline LossGradient loss_and_gradient(std::span<const double> params, const MlpArchitecture& arch, const RowMatrix& x,
                                      std::span<const int> labels) {
  detail::check_batch(params, arch, x, labels);
  if (labels.empty()) throw std::invalid_argument("loss_and_gradient: empty batch");
  const std::size_t L = arch.layers();
  std::vector<RowMatrix> acts;  // acts[l] = input to layer l
  acts.reserve(L + 1);
  acts.push_back(x);
  for (std::size_t l = 0; l < L; ++l) {
    RowMatrix z = acts.back() * detail::weights(params, arch, l).transpose();
    z.rowwise() += detail::biases(params, arch, l);
    acts.push_back((l + 1 < L) ? RowMatrix(z.array().tanh()) : z);
  }
  const RowMatrix lp = detail::log_softmax(acts.back());
  const double inv_b = 1.0 / static_cast<double>(labels.size());

  LossGradient out;
  for (std::size_t i = 0; i < labels.size(); ++i) out.loss -= lp(static_cast<Eigen::Index>(i), labels[i]);
  out.loss *= inv_b;
  out.gradient.assign(arch.param_count(), 0.0);

  // dL/dlogits = (softmax - onehot) / B
  RowMatrix delta = lp.array().exp();
  for (std::size_t i = 0; i < labels.size(); ++i) delta(static_cast<Eigen::Index>(i), labels[i]) -= 1.0;
  delta *= inv_b;

  for (std::size_t l = L; l-- > 0;) {
    const auto in = static_cast<Eigen::Index>(arch.layer_sizes[l]);
    const auto outd = static_cast<Eigen::Index>(arch.layer_sizes[l + 1]);
    Eigen::Map<RowMatrix> gw(out.gradient.data() + arch.offset(l), outd, in);
    Eigen::Map<Eigen::RowVectorXd> gb(out.gradient.data() + arch.offset(l) + arch.layer_sizes[l] * arch.layer_sizes[l + 1],
                                      outd);
    gw.noalias() = delta.transpose() * acts[l];
    gb = delta.colwise().sum();
    if (l > 0) {
      RowMatrix back = delta * detail::weights(params, arch, l);
      delta = back.array() * (1.0 - acts[l].array().square());
    }
  }
  return out;
}

// Local SGD on one shard; returns W_after - W_before. Each epoch visits the
// shard in a fresh seeded order; the batch size is clamped to the shard size.
// `weight_decay` adds the L2 term (wd / 2) * |W|^2 to every step's loss.
inline UpdateVector local_update(std::span<const double> params, const MlpArchitecture& arch, const Shard& shard,
                                 double lr, int local_epochs, std::size_t batch_size, Seed seed,
                                 double weight_decay = 0.0) {
  if (shard.size() == 0) throw std::invalid_argument("local_update: empty shard");
  if (lr < 0.0) throw std::invalid_argument("local_update: learning rate must be non-negative");
  if (weight_decay < 0.0) throw std::invalid_argument("local_update: weight decay must be non-negative");
  if (local_epochs < 1 || batch_size == 0) throw std::invalid_argument("local_update: epochs and batch size must be positive");
  if (params.size() != arch.param_count()) throw std::invalid_argument("local_update: parameter length mismatch");
  const std::size_t batch = std::min(batch_size, shard.size());

  ParamVector w(params.begin(), params.end());
  std::vector<std::size_t> order(shard.size());
  RowMatrix xb;
  std::vector<int> yb;
  for (int e = 0; e < local_epochs; ++e) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    CounterStream rng(derive_seed(seed, {stream::shuffle, static_cast<std::uint64_t>(e)}));
    portable_shuffle(order, rng);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      xb.resize(static_cast<Eigen::Index>(end - start), shard.features.cols());
      yb.resize(end - start);
      for (std::size_t i = start; i < end; ++i) {
        xb.row(static_cast<Eigen::Index>(i - start)) = shard.features.row(static_cast<Eigen::Index>(order[i]));
        yb[i - start] = shard.labels[order[i]];
      }
      const auto g = loss_and_gradient(w, arch, xb, yb);
      for (std::size_t p = 0; p < w.size(); ++p) w[p] -= lr * (g.gradient[p] + weight_decay * w[p]);
    }
  }
  for (std::size_t p = 0; p < w.size(); ++p) w[p] -= params[p];
  return w;
}

struct SyntheticSpec {
  double separation = 3.0;  // norm of each class mean
  double noise = 1.0;       // per-coordinate standard deviation around the mean
  std::size_t latent_dim = 0;  // 0: blobs live in the full input space
};

// Gaussian blobs: class c has mean mu_c (random direction, norm
// `separation`); sample s has label s mod C, so class counts differ by at most one.
// With latent_dim = d > 0 the blobs are drawn in R^d and mapped into the
// input space by a fixed random isometry, so the inputs have intrinsic
// dimension d.
inline Dataset make_synthetic_dataset(std::size_t class_count, std::size_t samples, std::size_t dim, Seed seed,
                                      const SyntheticSpec& spec = {}) {
  if (samples == 0) throw std::invalid_argument("make_synthetic_dataset: empty dataset");
  if (class_count == 0 || dim == 0) throw std::invalid_argument("make_synthetic_dataset: class count and dim must be positive");
  if (spec.latent_dim > dim) throw std::invalid_argument("make_synthetic_dataset: latent dimension exceeds input dimension");
  auto eng = make_engine(derive_seed(seed, {stream::dataset}));
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t space = spec.latent_dim ? spec.latent_dim : dim;

  RowMatrix means(static_cast<Eigen::Index>(class_count), static_cast<Eigen::Index>(space));
  for (Eigen::Index c = 0; c < means.rows(); ++c) {
    for (Eigen::Index d = 0; d < means.cols(); ++d) means(c, d) = normal(eng);
    means.row(c) *= spec.separation / means.row(c).norm();
  }
  RowMatrix z(static_cast<Eigen::Index>(samples), static_cast<Eigen::Index>(space));
  Dataset ds;
  ds.class_count = class_count;
  ds.labels.resize(samples);
  for (std::size_t s = 0; s < samples; ++s) {
    const auto c = static_cast<int>(s % class_count);
    ds.labels[s] = c;
    for (Eigen::Index d = 0; d < z.cols(); ++d) z(static_cast<Eigen::Index>(s), d) = means(c, d) + spec.noise * normal(eng);
  }
  if (!spec.latent_dim) {
    ds.features = std::move(z);
    return ds;
  }
  // Orthonormal columns from the QR factor of a Gaussian matrix.
  Eigen::MatrixXd g(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(space));
  for (Eigen::Index r = 0; r < g.rows(); ++r)
    for (Eigen::Index c = 0; c < g.cols(); ++c) g(r, c) = normal(eng);
  const Eigen::MatrixXd basis = Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ() * Eigen::MatrixXd::Identity(g.rows(), g.cols());
  ds.features = z * basis.transpose();
  return ds;
}

// Label-sorted sharding: sort by label, cut into n_users * shards_per_user
// equal shards, deal a seeded permutation of shards to users in order.
inline std::vector<Shard> partition_non_iid(const Dataset& data, std::size_t n_users, std::size_t shards_per_user,
                                            Seed seed) {
  if (n_users == 0 || shards_per_user == 0) throw std::invalid_argument("partition_non_iid: users and shards must be positive");
  const std::size_t shards = n_users * shards_per_user;
  if (data.size() == 0 || data.size() % shards != 0)
    throw std::invalid_argument("partition_non_iid: sample count must be a multiple of users * shards_per_user");
  const std::size_t shard_size = data.size() / shards;

  std::vector<std::size_t> sorted(data.size());
  std::iota(sorted.begin(), sorted.end(), std::size_t{0});
  std::stable_sort(sorted.begin(), sorted.end(),
                   [&](std::size_t a, std::size_t b) { return data.labels[a] < data.labels[b]; });

  std::vector<std::size_t> shard_ids(shards);
  std::iota(shard_ids.begin(), shard_ids.end(), std::size_t{0});
  CounterStream rng(derive_seed(seed, {stream::partition}));
  portable_shuffle(shard_ids, rng);

  std::vector<Shard> users;
  users.reserve(n_users);
  std::vector<std::size_t> rows;
  for (std::size_t u = 0; u < n_users; ++u) {
    rows.clear();
    std::vector<std::size_t> mine(shard_ids.begin() + static_cast<std::ptrdiff_t>(u * shards_per_user),
                                  shard_ids.begin() + static_cast<std::ptrdiff_t>((u + 1) * shards_per_user));
    std::sort(mine.begin(), mine.end());
    for (auto s : mine)
      for (std::size_t i = 0; i < shard_size; ++i) rows.push_back(sorted[s * shard_size + i]);
    users.push_back(data.subset(rows));
  }
  return users;
}

struct Evaluation {
  double accuracy = 0.0;
  double loss = 0.0;
};

inline Evaluation evaluate(std::span<const double> params, const MlpArchitecture& arch, const Dataset& test) {
  if (test.size() == 0) throw std::invalid_argument("evaluate: empty test set");
  const auto fr = forward_loss(params, arch, test);
  std::size_t correct = 0;
  for (Eigen::Index r = 0; r < fr.logits.rows(); ++r) {
    Eigen::Index best = 0;
    fr.logits.row(r).maxCoeff(&best);
    correct += best == test.labels[static_cast<std::size_t>(r)] ? 1 : 0;
  }
  return {static_cast<double>(correct) / static_cast<double>(test.size()), fr.loss};
}

}  // namespace fedcomm
