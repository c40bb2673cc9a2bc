#pragma once

// Two-tower convolutional transformer: one tower reads the raw L x d window,
// the other the log-magnitude spectrum (L/2 + 1) x d. Each tower runs
// temporal conv -> spatial conv -> absolute position encoding -> attention
// blocks with a relative position bias -> global average pool, and the
// pooled vectors are concatenated for a linear head.

#include "neurowave/types.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace neurowave {

struct ModelConfig {
  int L = 128;
  int d = 64;
  int embed_dim = 32;
  int heads = 4;
  int attention_blocks = 1;
  int ffn_dim = 64;
  int classes = 2;
  double dropout = 0.1;
  std::uint64_t seed = 0;
  int temporal_filters = 8;
  int temporal_kernel = 8;

  int head_dim() const { return embed_dim / heads; }
  int spectrum_bins() const { return L / 2 + 1; }
  // Throws InputError on inconsistent dimensions.
  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

struct AttentionBlockParams {
  Eigen::MatrixXd wq, wk, wv;  // E x E, no bias
  Eigen::MatrixXd rel_bias;    // heads x (2T - 1), indexed by key - query + T - 1
  Eigen::MatrixXd wo, bo;      // E x E, 1 x E
  Eigen::MatrixXd ln1_gamma, ln1_beta;
  Eigen::MatrixXd w_ffn1, b_ffn1;  // E x F, 1 x F
  Eigen::MatrixXd w_ffn2, b_ffn2;  // F x E, 1 x E
  Eigen::MatrixXd ln2_gamma, ln2_beta;
};

struct TowerParams {
  Eigen::MatrixXd temporal_w;  // filters x kernel, shared across channels
  Eigen::MatrixXd temporal_b;  // 1 x filters
  Eigen::MatrixXd spatial_w;   // (filters * d) x E, row f * d + c
  Eigen::MatrixXd spatial_b;   // 1 x E
  Eigen::MatrixXd position;    // T x E, learnable, starts at the sinusoidal table
  std::vector<AttentionBlockParams> blocks;
};

enum class Tower { time = 0, frequency = 1 };

struct ModelParams {
  ModelConfig config;
  std::array<TowerParams, 2> towers;
  Eigen::MatrixXd head_w;  // 2E x classes
  Eigen::MatrixXd head_b;  // 1 x classes
  // Fixed input standardization (x - input_mean) / input_scale, set by train.
  double input_mean = 0.0;
  double input_scale = 1.0;

  // Visits every trainable block in a fixed order with a stable name.
  void for_each_block(const std::function<void(const std::string&, Eigen::MatrixXd&)>& fn);
  void for_each_block(const std::function<void(const std::string&, const Eigen::MatrixXd&)>& fn) const;

  std::size_t parameter_count() const;
  // Same shapes, all zero.
  ModelParams zeros_like() const;
};

ModelParams init_params(const ModelConfig& config);

std::vector<double> flatten(const ModelParams& params);
void unflatten(ModelParams& params, std::span<const double> values);

// FNV-1a over the little-endian bytes of every block and the input
// standardization, in visiting order.
std::uint64_t checksum(const ModelParams& params);

// Sinusoidal absolute position table scaled to the sequence length.
Eigen::MatrixXd position_table(int length, int embed_dim);

struct ForwardOptions {
  bool training = false;
  std::uint64_t dropout_seed = 0;
  // 0 silences a tower: its pooled vector is zeroed and its gradient is 0.
  std::array<double, 2> tower_mask{1.0, 1.0};
};

// batch x classes.
Eigen::MatrixXd forward(const ModelParams& params, const std::vector<const Epoch*>& batch,
                        const ForwardOptions& options = {});
Eigen::MatrixXd forward(const ModelParams& params, const std::vector<Epoch>& batch, const ForwardOptions& options = {});

// Attention probabilities of one epoch in inference mode, ordered by
// tower, block, head; each T x T.
std::vector<Eigen::MatrixXd> attention_maps(const ModelParams& params, const Epoch& epoch);

struct LossAndGrad {
  double loss = 0.0;
  ModelParams grad;
  Eigen::MatrixXd logits;
};

// Weighted mean softmax cross-entropy: sum_i w[y_i] * CE_i / sum_i w[y_i].
// Empty class_weights means all ones. Throws NumericalError naming the
// first non-finite parameter block when the loss is not finite.
LossAndGrad loss_and_grad(const ModelParams& params, const std::vector<const Epoch*>& batch,
                          const std::vector<Label>& labels, const ForwardOptions& options = {},
                          const std::vector<double>& class_weights = {});

struct TrainHyper {
  double lr = 1e-3;
  int epochs = 30;
  int batch_size = 32;
  std::uint64_t seed = 0;
  bool class_weights = true;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
};

struct TrainReport {
  std::vector<double> epoch_loss;
  std::vector<double> train_accuracy;
  std::vector<double> epoch_wall_s;
  std::uint64_t checksum = 0;
};

struct TrainResult {
  ModelParams params;
  TrainReport report;
};

// Epoch-level progress callback: (epoch index, mean loss, accuracy).
using TrainProgress = std::function<void(int, double, double)>;

TrainResult train(const ModelConfig& config, const EpochSet& train_set, const TrainHyper& hyper,
                  const TrainProgress& progress = {});

struct Prediction {
  Label label = Label::real;
  std::vector<double> probabilities;
};

std::vector<Prediction> predict(const ModelParams& params, const EpochSet& set, std::size_t batch_size = 64);

// Inverse-frequency weights N / (classes * n_c); throws DataError when a
// class is absent.
std::vector<double> inverse_frequency_weights(const std::vector<Label>& labels, int classes);

}  // namespace neurowave
