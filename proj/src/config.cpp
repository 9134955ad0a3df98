#include "lebow/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "lebow/error.hpp"

namespace lebow {

std::string to_string(EncoderKind e) {
  switch (e) {
    case EncoderKind::HA:
      return "ha";
    case EncoderKind::STP:
      return "stp";
    case EncoderKind::SC:
      return "sc";
  }
  return "?";
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw UsageError("config: '" + key + "' expects a number, got '" + v + "'");
  }
  return out;
}

}  // namespace

BlockSpec PipelineConfig::block_spec_for(const VideoGeometry& g) const {
  BlockSpec s = BlockSpec::defaults_for(g, d);
  if (block_w > 0) s.block_w = block_w;
  if (block_h > 0) s.block_h = block_h;
  if (block_t > 0) s.block_t = block_t;
  if (stride_x > 0) s.stride_x = stride_x;
  if (stride_y > 0) s.stride_y = stride_y;
  if (stride_t > 0) s.stride_t = stride_t;
  if (min_samples > 0) s.min_samples = min_samples;
  return s;
}

void PipelineConfig::set(const std::string& key, const std::string& v) {
  if (key == "d") d = parse_number<int>(key, v);
  else if (key == "width") geometry.width = parse_number<int>(key, v);
  else if (key == "height") geometry.height = parse_number<int>(key, v);
  else if (key == "duration") geometry.duration = parse_number<int>(key, v);
  else if (key == "block_w") block_w = parse_number<int>(key, v);
  else if (key == "block_h") block_h = parse_number<int>(key, v);
  else if (key == "block_t") block_t = parse_number<int>(key, v);
  else if (key == "stride_x") stride_x = parse_number<int>(key, v);
  else if (key == "stride_y") stride_y = parse_number<int>(key, v);
  else if (key == "stride_t") stride_t = parse_number<int>(key, v);
  else if (key == "min_samples") min_samples = parse_number<int>(key, v);
  else if (key == "regularizer") regularizer = parse_number<double>(key, v);
  else if (key == "k") kmeans.k = parse_number<int>(key, v);
  else if (key == "n_iter") kmeans.n_iter = parse_number<int>(key, v);
  else if (key == "epsilon_tol") kmeans.epsilon_tol = parse_number<double>(key, v);
  else if (key == "empty_cluster_policy") {
    if (v == "reseed") kmeans.empty_cluster_policy = EmptyClusterPolicy::Reseed;
    else if (v == "keep") kmeans.empty_cluster_policy = EmptyClusterPolicy::Keep;
    else throw UsageError("config: empty_cluster_policy must be reseed or keep");
  } else if (key == "seeding") {
    if (v == "uniform") kmeans.seeding = SeedingMethod::Uniform;
    else if (v == "kmeans++") kmeans.seeding = SeedingMethod::KMeansPlusPlus;
    else throw UsageError("config: seeding must be uniform or kmeans++");
  } else if (key == "descriptor_cap") descriptor_cap = parse_number<std::size_t>(key, v);
  else if (key == "encoder") {
    if (v == "ha") encoder = EncoderKind::HA;
    else if (v == "stp") encoder = EncoderKind::STP;
    else if (v == "sc") encoder = EncoderKind::SC;
    else throw UsageError("config: encoder must be ha, stp or sc");
  } else if (key == "lambda") lambda = parse_number<double>(key, v);
  else if (key == "sc_kernel") {
    if (v == "euclidean") sc_metric = ChannelMetric::Euclidean;
    else if (v == "chi2") sc_metric = ChannelMetric::Chi2;
    else throw UsageError("config: sc_kernel must be euclidean or chi2");
  } else if (key == "C") svm_c = parse_number<double>(key, v);
  else if (key == "seed") seed = parse_number<std::uint64_t>(key, v);
  else if (key == "classes") classes = parse_number<int>(key, v);
  else if (key == "videos_per_class") videos_per_class = parse_number<int>(key, v);
  else if (key == "trajectories") trajectories = parse_number<std::size_t>(key, v);
  else if (key == "train_ratio") train_ratio = parse_number<double>(key, v);
  else if (key == "video_jitter") video_jitter = parse_number<double>(key, v);
  else throw UsageError("config: unknown key '" + key + "'");
}

std::string PipelineConfig::to_text() const {
  // Shortest round-trip form, so reloading gives back the same doubles.
  const auto num = [](double v) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
  };
  std::ostringstream os;
  os << "d = " << d << '\n'
     << "width = " << geometry.width << '\n'
     << "height = " << geometry.height << '\n'
     << "duration = " << geometry.duration << '\n'
     << "block_w = " << block_w << '\n'
     << "block_h = " << block_h << '\n'
     << "block_t = " << block_t << '\n'
     << "stride_x = " << stride_x << '\n'
     << "stride_y = " << stride_y << '\n'
     << "stride_t = " << stride_t << '\n'
     << "min_samples = " << min_samples << '\n'
     << "regularizer = " << num(regularizer) << '\n'
     << "k = " << kmeans.k << '\n'
     << "n_iter = " << kmeans.n_iter << '\n'
     << "epsilon_tol = " << num(kmeans.epsilon_tol) << '\n'
     << "empty_cluster_policy = "
     << (kmeans.empty_cluster_policy == EmptyClusterPolicy::Reseed ? "reseed" : "keep") << '\n'
     << "seeding = " << (kmeans.seeding == SeedingMethod::Uniform ? "uniform" : "kmeans++") << '\n'
     << "descriptor_cap = " << descriptor_cap << '\n'
     << "encoder = " << to_string(encoder) << '\n'
     << "lambda = " << num(lambda) << '\n'
     << "sc_kernel = " << (sc_metric == ChannelMetric::Chi2 ? "chi2" : "euclidean") << '\n'
     << "C = " << num(svm_c) << '\n'
     << "seed = " << seed << '\n'
     << "classes = " << classes << '\n'
     << "videos_per_class = " << videos_per_class << '\n'
     << "trajectories = " << trajectories << '\n'
     << "train_ratio = " << num(train_ratio) << '\n'
     << "video_jitter = " << num(video_jitter) << '\n';
  return os.str();
}

PipelineConfig PipelineConfig::synthetic_defaults() {
  PipelineConfig c;
  c.d = 12;
  c.kmeans.k = 64;
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base) {
  std::ifstream is(path);
  if (!is) throw UsageError("cannot open config '" + path.string() + "'");
  PipelineConfig cfg = std::move(base);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError("config '" + path.string() + "' line " + std::to_string(lineno) +
                       ": expected key = value");
    }
    cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

}  // namespace lebow
