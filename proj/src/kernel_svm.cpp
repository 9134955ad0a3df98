#include "lebow/kernel_svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace lebow {

double chi2_distance(const Eigen::VectorXd& h, const Eigen::VectorXd& g) {
  if (h.size() != g.size()) {
    throw DataError("chi2_distance: length mismatch (" + std::to_string(h.size()) + " vs " +
                    std::to_string(g.size()) + ")");
  }
  double sum = 0;
  for (Index j = 0; j < h.size(); ++j) {
    if (h(j) < 0 || g(j) < 0) throw DataError("chi2_distance: negative histogram entry");
    const double s = h(j) + g(j);
    if (s > 0) {
      const double diff = h(j) - g(j);
      sum += diff * diff / s;
    }
  }
  return sum;
}

double channel_distance(ChannelMetric metric, const Eigen::VectorXd& h, const Eigen::VectorXd& g) {
  if (metric == ChannelMetric::Chi2) return chi2_distance(h, g);
  if (h.size() != g.size()) throw DataError("channel_distance: length mismatch");
  return (h - g).squaredNorm();
}

namespace {

void check_channels(const MultiChannelHistogram& h, const KernelParams& params) {
  if (h.channels.size() != params.size()) {
    throw DataError("kernel: histogram has " + std::to_string(h.channels.size()) +
                    " channels, kernel expects " + std::to_string(params.size()));
  }
  for (std::size_t c = 0; c < params.size(); ++c) {
    if (h.channels[c].name != params.channel_names[c]) {
      throw DataError("kernel: channel " + std::to_string(c) + " is '" + h.channels[c].name +
                      "', kernel expects '" + params.channel_names[c] + "'");
    }
  }
}

}  // namespace

KernelParams compute_channel_scales(std::span<const MultiChannelHistogram> training,
                                    std::vector<ChannelMetric> metrics) {
  if (training.size() < 2) {
    throw DataError("compute_channel_scales: need at least 2 training samples");
  }
  KernelParams p;
  for (const auto& ch : training.front().channels) p.channel_names.push_back(ch.name);
  const std::size_t nc = p.channel_names.size();
  if (metrics.empty()) metrics.assign(nc, ChannelMetric::Chi2);
  if (metrics.size() != nc) throw DataError("compute_channel_scales: one metric per channel");
  p.metrics = std::move(metrics);
  p.scales.assign(nc, 1.0);
  p.degenerate.assign(nc, false);
  for (const auto& h : training) check_channels(h, p);
  const double pairs = double(training.size()) * double(training.size() - 1) / 2;
  for (std::size_t c = 0; c < nc; ++c) {
    double sum = 0;
    for (std::size_t i = 0; i < training.size(); ++i)
      for (std::size_t j = i + 1; j < training.size(); ++j)
        sum += channel_distance(p.metrics[c], training[i].channels[c].values,
                                training[j].channels[c].values);
    const double mean = sum / pairs;
    if (mean > 0) {
      p.scales[c] = mean;
    } else {
      p.degenerate[c] = true;
    }
  }
  return p;
}

double kernel_value(const MultiChannelHistogram& a, const MultiChannelHistogram& b,
                    const KernelParams& params) {
  check_channels(a, params);
  check_channels(b, params);
  double e = 0;
  for (std::size_t c = 0; c < params.size(); ++c) {
    e += channel_distance(params.metrics[c], a.channels[c].values, b.channels[c].values) /
         params.scales[c];
  }
  return std::exp(-e);
}

Eigen::MatrixXd gram_matrix(std::span<const MultiChannelHistogram> samples,
                            const KernelParams& params) {
  const Index n = Index(samples.size());
  Eigen::MatrixXd g(n, n);
  for (Index i = 0; i < n; ++i) {
    g(i, i) = kernel_value(samples[std::size_t(i)], samples[std::size_t(i)], params);
    for (Index j = i + 1; j < n; ++j)
      g(i, j) = g(j, i) = kernel_value(samples[std::size_t(i)], samples[std::size_t(j)], params);
  }
  return g;
}

Eigen::VectorXd kernel_row(const MultiChannelHistogram& query,
                           std::span<const MultiChannelHistogram> training,
                           const KernelParams& params) {
  Eigen::VectorXd row(Index(training.size()));
  for (std::size_t i = 0; i < training.size(); ++i)
    row(Index(i)) = kernel_value(query, training[i], params);
  return row;
}

BinarySvm train_binary_svm(const Eigen::MatrixXd& k, std::span<const int> y, double c,
                           const SmoOptions& opts) {
  const Index n = k.rows();
  if (k.cols() != n || Index(y.size()) != n) throw DataError("train_binary_svm: size mismatch");
  if (!(c > 0)) throw DataError("train_binary_svm: C must be positive");
  for (int v : y)
    if (v != 1 && v != -1) throw DataError("train_binary_svm: labels must be +1 or -1");

  // Dual: min 1/2 a^T Q a - e^T a, Q_ij = y_i y_j K_ij, 0 <= a <= C, y^T a = 0.
  const auto q = [&](Index i, Index j) { return double(y[std::size_t(i)] * y[std::size_t(j)]) * k(i, j); };
  const auto yi = [&](Index i) { return double(y[std::size_t(i)]); };

  BinarySvm out;
  out.alpha = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd& a = out.alpha;
  Eigen::VectorXd grad = Eigen::VectorXd::Constant(n, -1.0);
  const long budget = opts.budget_factor * long(std::max<Index>(n, 1));
  const double tau = 1e-12;

  const auto in_up = [&](Index t) { return (yi(t) > 0 && a(t) < c) || (yi(t) < 0 && a(t) > 0); };
  const auto in_low = [&](Index t) { return (yi(t) > 0 && a(t) > 0) || (yi(t) < 0 && a(t) < c); };

  for (;;) {
    Index i = -1, j = -1;
    double gmax = -std::numeric_limits<double>::infinity();
    double gmin = std::numeric_limits<double>::infinity();
    for (Index t = 0; t < n; ++t) {
      const double v = -yi(t) * grad(t);
      if (in_up(t) && v > gmax) gmax = v, i = t;
      if (in_low(t) && v < gmin) gmin = v, j = t;
    }
    if (i < 0 || j < 0 || gmax - gmin < opts.kkt_tol) {
      out.converged = true;
      break;
    }
    if (out.iterations >= budget) break;
    ++out.iterations;

    const double ai_old = a(i), aj_old = a(j);
    if (y[std::size_t(i)] != y[std::size_t(j)]) {
      double quad = q(i, i) + q(j, j) + 2 * q(i, j);
      if (quad <= 0) quad = tau;
      const double delta = (-grad(i) - grad(j)) / quad;
      const double diff = a(i) - a(j);
      a(i) += delta;
      a(j) += delta;
      if (diff > 0) {
        if (a(j) < 0) a(j) = 0, a(i) = diff;
      } else {
        if (a(i) < 0) a(i) = 0, a(j) = -diff;
      }
      if (diff > 0) {
        if (a(i) > c) a(i) = c, a(j) = c - diff;
      } else {
        if (a(j) > c) a(j) = c, a(i) = c + diff;
      }
    } else {
      double quad = q(i, i) + q(j, j) - 2 * q(i, j);
      if (quad <= 0) quad = tau;
      const double delta = (grad(i) - grad(j)) / quad;
      const double sum = a(i) + a(j);
      a(i) -= delta;
      a(j) += delta;
      if (sum > c) {
        if (a(i) > c) a(i) = c, a(j) = sum - c;
      } else {
        if (a(j) < 0) a(j) = 0, a(i) = sum;
      }
      if (sum > c) {
        if (a(j) > c) a(j) = c, a(i) = sum - c;
      } else {
        if (a(i) < 0) a(i) = 0, a(j) = sum;
      }
    }
    const double di = a(i) - ai_old, dj = a(j) - aj_old;
    for (Index t = 0; t < n; ++t) grad(t) += q(i, t) * di + q(j, t) * dj;
  }

  // rho from the free variables, or the midpoint of the feasible interval.
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double sum_free = 0;
  long n_free = 0;
  for (Index t = 0; t < n; ++t) {
    const double yg = yi(t) * grad(t);
    if (a(t) >= c) {
      if (yi(t) < 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (a(t) <= 0) {
      if (yi(t) > 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  double rho = 0;
  if (n_free > 0) {
    rho = sum_free / double(n_free);
  } else if (std::isfinite(ub) && std::isfinite(lb)) {
    rho = (ub + lb) / 2;
  } else if (std::isfinite(ub) || std::isfinite(lb)) {
    rho = std::isfinite(ub) ? ub : lb;  // one-sided problem
  }
  out.bias = -rho;
  return out;
}

SvmModel train_svm(const Eigen::MatrixXd& gram, std::span<const int> labels, int num_classes,
                   double c, const SmoOptions& opts) {
  const Index n = gram.rows();
  if (gram.cols() != n || Index(labels.size()) != n) throw DataError("train_svm: size mismatch");
  const double scale = std::max(1.0, gram.cwiseAbs().maxCoeff());
  if ((gram - gram.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw DataError("train_svm: gram matrix is not symmetric");
  }
  if (num_classes < 2) throw DataError("train_svm: need at least 2 classes");
  std::vector<int> present(std::size_t(num_classes), 0);
  for (int l : labels) {
    if (l < 0 || l >= num_classes) throw DataError("train_svm: label out of range");
    present[std::size_t(l)] = 1;
  }
  if (std::count(present.begin(), present.end(), 1) < 2) {
    throw DataError("train_svm: training labels contain a single class");
  }

  SvmModel model;
  model.c = c;
  model.n_train = std::size_t(n);
  std::vector<int> y(static_cast<std::size_t>(n));
  for (int cls = 0; cls < num_classes; ++cls) {
    for (Index i = 0; i < n; ++i) y[std::size_t(i)] = labels[std::size_t(i)] == cls ? 1 : -1;
    const BinarySvm b = train_binary_svm(gram, y, c, opts);
    ClassModel cm;
    for (Index i = 0; i < n; ++i) {
      if (b.alpha(i) > 0) {
        cm.support.push_back(std::uint32_t(i));
        cm.coef.push_back(b.alpha(i) * y[std::size_t(i)]);
      }
    }
    cm.bias = b.bias;
    cm.iterations = b.iterations;
    cm.converged = b.converged;
    model.classes.push_back(std::move(cm));
  }
  return model;
}

int argmax_lowest(std::span<const double> scores) {
  int best = -1;
  for (std::size_t i = 0; i < scores.size(); ++i)
    if (best < 0 || scores[i] > scores[std::size_t(best)]) best = int(i);
  return best;
}

Prediction predict(const SvmModel& model, const Eigen::VectorXd& kernel_row) {
  if (std::size_t(kernel_row.size()) != model.n_train) {
    throw DataError("predict: kernel row length " + std::to_string(kernel_row.size()) +
                    " does not match training size " + std::to_string(model.n_train));
  }
  Prediction p;
  for (const auto& cm : model.classes) {
    double s = cm.bias;
    for (std::size_t t = 0; t < cm.support.size(); ++t) {
      s += cm.coef[t] * kernel_row(Index(cm.support[t]));
    }
    p.scores.push_back(s);
  }
  p.label = argmax_lowest(p.scores);
  return p;
}

}  // namespace lebow
