#include "lebow/encoders.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace lebow {

namespace {

Eigen::MatrixXd embed_descriptors(std::span<const BlockDescriptor> descriptors,
                                  const Codebook& codebook, const char* who) {
  if (descriptors.empty()) throw EmptyQuery(std::string(who) + ": empty descriptor set");
  Eigen::MatrixXd out(codebook.m(), Index(descriptors.size()));
  for (std::size_t i = 0; i < descriptors.size(); ++i) {
    const Index d = descriptors[i].cov.dim();
    if (d * (d + 1) / 2 != codebook.m()) {
      throw DataError(std::string(who) + ": descriptor dimension d=" + std::to_string(d) +
                      " does not match codebook dimension d=" +
                      std::to_string(codebook.meta().source_d));
    }
    out.col(Index(i)) = log_euclidean_embed(descriptors[i].cov).values();
  }
  return out;
}

int interval(double v, int parts) { return std::min(int(std::floor(v * parts)), parts - 1); }

}  // namespace

int stp_cell(int channel, double cx, double cy, double ct) {
  if (!(cx >= 0 && cx <= 1 && cy >= 0 && cy <= 1 && ct >= 0 && ct <= 1)) {
    throw DataError("stp_cell: block centre (" + std::to_string(cx) + ", " + std::to_string(cy) +
                    ", " + std::to_string(ct) + ") is outside [0,1]^3");
  }
  const bool split_time = channel % 2 == 1;
  const int tb = split_time ? interval(ct, 2) : 0;
  int spatial = 0, spatial_cells = 1;
  switch (channel / 2) {
    case 0:
      break;
    case 1:  // three horizontal stripes
      spatial = interval(cy, 3);
      spatial_cells = 3;
      break;
    case 2:  // 2 x 2 grid
      spatial = interval(cy, 2) * 2 + interval(cx, 2);
      spatial_cells = 4;
      break;
    default:
      throw DataError("stp_cell: channel index out of range");
  }
  return tb * spatial_cells + spatial;
}

Eigen::VectorXd ha_counts(const Eigen::MatrixXd& embedded, const Codebook& codebook) {
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(codebook.k());
  for (Index i = 0; i < embedded.cols(); ++i) counts(assign(embedded.col(i), codebook).index) += 1;
  return counts;
}

Eigen::VectorXd l2_normalized(const Eigen::VectorXd& v) {
  const double n = v.norm();
  return n > 0 ? Eigen::VectorXd(v / n) : Eigen::VectorXd::Zero(v.size());
}

Histogram encode_ha(std::span<const BlockDescriptor> descriptors, const Codebook& codebook) {
  const Eigen::MatrixXd q = embed_descriptors(descriptors, codebook, "encode_ha");
  return {l2_normalized(ha_counts(q, codebook))};
}

MultiChannelHistogram encode_stp(std::span<const BlockDescriptor> descriptors,
                                 const Codebook& codebook) {
  const Eigen::MatrixXd q = embed_descriptors(descriptors, codebook, "encode_stp");
  const int k = codebook.k();
  MultiChannelHistogram out;
  for (int c = 0; c < int(stp_channel_names.size()); ++c) {
    const int cells = stp_channel_cells[std::size_t(c)];
    Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(k, cells);
    for (std::size_t i = 0; i < descriptors.size(); ++i) {
      const auto& b = descriptors[i];
      const int cell = stp_cell(c, b.cx, b.cy, b.ct);
      counts(assign(q.col(Index(i)), codebook).index, cell) += 1;
    }
    Eigen::VectorXd values(Index(k) * cells);
    for (int cell = 0; cell < cells; ++cell) {
      values.segment(Index(cell) * k, k) = l2_normalized(counts.col(cell));
    }
    out.channels.push_back({std::string(stp_channel_names[std::size_t(c)]), std::move(values)});
  }
  return out;
}

Eigen::MatrixXd normalized_dictionary(const Codebook& codebook) {
  Eigen::MatrixXd dict = codebook.atoms();
  for (Index j = 0; j < dict.cols(); ++j) {
    const double n = dict.col(j).norm();
    if (n > 0) dict.col(j) /= n;
  }
  return dict;
}

Eigen::MatrixXd sparse_codes(std::span<const BlockDescriptor> descriptors,
                             const Codebook& codebook, double lambda, const LassoOptions& opts) {
  if (lambda < 0) throw DataError("sparse_codes: lambda must be >= 0");
  const Eigen::MatrixXd q = embed_descriptors(descriptors, codebook, "encode_sc");
  const Eigen::MatrixXd dict = normalized_dictionary(codebook);
  Eigen::MatrixXd codes(codebook.k(), q.cols());
  for (Index i = 0; i < q.cols(); ++i) {
    codes.col(i) = lasso<double>(dict, q.col(i), lambda, opts).alpha;
  }
  return codes;
}

Histogram encode_sc(std::span<const BlockDescriptor> descriptors, const Codebook& codebook,
                    double lambda, const LassoOptions& opts) {
  const Eigen::MatrixXd codes = sparse_codes(descriptors, codebook, lambda, opts);
  Eigen::VectorXd pooled = Eigen::VectorXd::Zero(codes.rows());
  for (Index i = 0; i < codes.cols(); ++i) pooled += codes.col(i);
  return {pooled / double(codes.cols())};
}

Eigen::VectorXd clamp_and_renormalize(const Eigen::VectorXd& v) {
  return l2_normalized(v.cwiseMax(0.0));
}

}  // namespace lebow
