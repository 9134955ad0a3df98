#pragma once

// Multi-channel RBF kernels over histograms and a one-vs-all soft-margin SVM
// trained in the dual with SMO.

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lebow/encoders.hpp"

namespace lebow {

enum class ChannelMetric : std::uint8_t {
  Chi2 = 0,       // sum_j (h_j - g_j)^2 / (h_j + g_j), 0/0 := 0
  Euclidean = 1,  // squared Euclidean distance; used for pooled sparse codes
};

/// sum_j (h_j - g_j)^2 / (h_j + g_j). Throws on negative entries.
double chi2_distance(const Eigen::VectorXd& h, const Eigen::VectorXd& g);

double channel_distance(ChannelMetric metric, const Eigen::VectorXd& h, const Eigen::VectorXd& g);

struct KernelParams {
  std::vector<std::string> channel_names;
  std::vector<ChannelMetric> metrics;
  std::vector<double> scales;     // A^c
  std::vector<bool> degenerate;   // mean distance was zero, scale forced to 1

  std::size_t size() const { return channel_names.size(); }
};

/// A^c = mean channel distance over all unordered pairs of training samples.
/// `metrics` gives one metric per channel; empty means chi-squared everywhere.
KernelParams compute_channel_scales(std::span<const MultiChannelHistogram> training,
                                    std::vector<ChannelMetric> metrics = {});

/// exp(-sum_c dist_c(a^c, b^c) / A^c)
double kernel_value(const MultiChannelHistogram& a, const MultiChannelHistogram& b,
                    const KernelParams& params);

Eigen::MatrixXd gram_matrix(std::span<const MultiChannelHistogram> samples,
                            const KernelParams& params);

Eigen::VectorXd kernel_row(const MultiChannelHistogram& query,
                           std::span<const MultiChannelHistogram> training,
                           const KernelParams& params);

struct SmoOptions {
  double kkt_tol = 1e-3;
  // Iteration budget is budget_factor * N working-pair updates.
  long budget_factor = 100;
};

struct BinarySvm {
  Eigen::VectorXd alpha;  // dual variables, 0 <= alpha_i <= C
  double bias = 0;        // decision = sum_i alpha_i y_i K(x_i, q) + bias
  long iterations = 0;
  bool converged = false;
};

/// Soft-margin binary dual, labels in {-1, +1}. Working pair is the maximal
/// KKT violating pair.
BinarySvm train_binary_svm(const Eigen::MatrixXd& gram, std::span<const int> y, double c,
                           const SmoOptions& opts = {});

struct ClassModel {
  std::vector<std::uint32_t> support;  // training indices with alpha > 0
  std::vector<double> coef;            // alpha_i * y_i, paired with `support`
  double bias = 0;
  long iterations = 0;
  bool converged = false;
};

struct SvmModel {
  std::vector<std::string> labels;        // class index -> label
  std::vector<std::string> training_ids;  // defines the kernel-row order
  KernelParams params;
  double c = 100;
  std::size_t n_train = 0;
  std::vector<ClassModel> classes;
};

/// One-vs-all training. `labels` are class indices in [0, num_classes).
/// The returned model has empty `labels`, `training_ids` and `params`; the
/// caller owns those.
SvmModel train_svm(const Eigen::MatrixXd& gram, std::span<const int> labels, int num_classes,
                   double c, const SmoOptions& opts = {});

struct Prediction {
  int label = -1;
  std::vector<double> scores;
};

/// Argmax of the per-class decision values; ties go to the lowest class.
Prediction predict(const SvmModel& model, const Eigen::VectorXd& kernel_row);

/// Index of the largest score, lowest index on ties.
int argmax_lowest(std::span<const double> scores);

}  // namespace lebow
