#include "lebow/io.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "json.hpp"

namespace lebow::io {

namespace {

constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  explicit Writer(const fs::path& path) : path_(path), os_(path, std::ios::binary) {
    if (!os_) throw DataError("cannot open '" + path.string() + "' for writing");
  }

  template <typename T>
  void put(T v) {
    static_assert(std::is_arithmetic_v<T>);
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    os_.write(reinterpret_cast<const char*>(bytes), sizeof(T));
  }
  void magic(const char (&m)[5]) { os_.write(m, 4); }
  void str(const std::string& s) {
    put(std::uint32_t(s.size()));
    os_.write(s.data(), std::streamsize(s.size()));
  }
  void finish() {
    os_.flush();
    if (!os_) throw DataError("write to '" + path_.string() + "' failed");
  }

 private:
  fs::path path_;
  std::ofstream os_;
};

class Reader {
 public:
  Reader(const fs::path& path, const char (&expected_magic)[5]) : path_(path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open '" + path.string() + "'");
    data_.assign(std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>());
    if (data_.size() < 4 || std::memcmp(data_.data(), expected_magic, 4) != 0) {
      fail(0, std::string("bad magic, expected '") + expected_magic + "'");
    }
    pos_ = 4;
    const auto version = get<std::uint32_t>();
    if (version != kVersion) fail(4, "unsupported version " + std::to_string(version));
  }

  template <typename T>
  T get() {
    need(sizeof(T));
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, data_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    T v;
    std::memcpy(&v, bytes, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string str() {
    const auto n = get<std::uint32_t>();
    need(n);
    std::string s(data_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t offset() const { return pos_; }
  bool at_end() const { return pos_ == data_.size(); }
  [[noreturn]] void fail(std::size_t at, const std::string& what) const {
    throw DataError("corrupt file '" + path_.string() + "' at byte offset " + std::to_string(at) +
                    ": " + what);
  }
  void expect_end() const {
    if (!at_end()) fail(pos_, std::to_string(data_.size() - pos_) + " trailing bytes");
  }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) {
      fail(pos_, "truncated (need " + std::to_string(n) + " bytes, " +
                     std::to_string(data_.size() - pos_) + " left)");
    }
  }

  fs::path path_;
  std::vector<char> data_;
  std::size_t pos_ = 0;
};

std::string format_double(double v, int digits) {
  std::ostringstream os;
  os << std::setprecision(digits) << v;
  return os.str();
}

double parse_double(const std::string& s, const fs::path& path, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError("'" + path.string() + "' line " + std::to_string(line) + ": '" + s +
                    "' is not a number");
  }
}

std::ifstream open_text(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open '" + path.string() + "'");
  return is;
}

std::ofstream create_text(const fs::path& path) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot open '" + path.string() + "' for writing");
  return os;
}

}  // namespace

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

// ---- features ----

void write_features(const fs::path& path, const std::vector<TrajectoryFeature>& features, int d) {
  Writer w(path);
  w.magic("LBTF");
  w.put(kVersion);
  w.put(std::uint32_t(d));
  w.put(std::uint64_t(features.size()));
  for (const auto& f : features) {
    if (f.feature.size() != d) throw DataError("write_features: feature length mismatch");
    w.put(f.x);
    w.put(f.y);
    w.put(f.t);
    for (Index i = 0; i < d; ++i) w.put(float(f.feature(i)));
  }
  w.finish();
}

std::vector<TrajectoryFeature> read_features(const fs::path& path, int* d_out) {
  if (path.extension() == ".csv") return read_features_csv(path, d_out);
  Reader r(path, "LBTF");
  const auto d = r.get<std::uint32_t>();
  if (d < 1) r.fail(8, "feature dimension is zero");
  const std::size_t count_at = r.offset();
  const auto count = r.get<std::uint64_t>();
  const std::uint64_t record = 12 + 4ull * d;
  if (count > (1ull << 40) / record) r.fail(count_at, "implausible record count");
  std::vector<TrajectoryFeature> out;
  out.reserve(std::size_t(count));
  for (std::uint64_t n = 0; n < count; ++n) {
    TrajectoryFeature f;
    f.x = r.get<float>();
    f.y = r.get<float>();
    f.t = r.get<std::uint32_t>();
    f.feature.resize(d);
    for (std::uint32_t i = 0; i < d; ++i) f.feature(i) = r.get<float>();
    out.push_back(std::move(f));
  }
  r.expect_end();
  if (d_out) *d_out = int(d);
  return out;
}

void write_features_csv(const fs::path& path, const std::vector<TrajectoryFeature>& features,
                        int d) {
  auto os = create_text(path);
  os << "x,y,t";
  for (int i = 0; i < d; ++i) os << ",f" << i;
  os << '\n';
  for (const auto& f : features) {
    os << format_double(f.x, 9) << ',' << format_double(f.y, 9) << ',' << f.t;
    for (int i = 0; i < d; ++i) os << ',' << format_double(f.feature(i), 9);
    os << '\n';
  }
  if (!os) throw DataError("write to '" + path.string() + "' failed");
}

std::vector<TrajectoryFeature> read_features_csv(const fs::path& path, int* d_out) {
  auto is = open_text(path);
  std::string line;
  if (!std::getline(is, line)) throw DataError("'" + path.string() + "' is empty");
  const auto header = split_csv_line(line);
  if (header.size() < 5 || header[0] != "x" || header[1] != "y" || header[2] != "t") {
    throw DataError("'" + path.string() + "': header must be x,y,t,f0,...,f{d-1}");
  }
  const int d = int(header.size()) - 3;
  std::vector<TrajectoryFeature> out;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (int(cells.size()) != d + 3) {
      throw DataError("'" + path.string() + "' line " + std::to_string(lineno) + ": expected " +
                      std::to_string(d + 3) + " fields");
    }
    TrajectoryFeature f;
    f.x = float(parse_double(cells[0], path, lineno));
    f.y = float(parse_double(cells[1], path, lineno));
    const double t = parse_double(cells[2], path, lineno);
    if (t < 0 || t != std::floor(t)) {
      throw DataError("'" + path.string() + "' line " + std::to_string(lineno) +
                      ": frame index must be a non-negative integer");
    }
    f.t = std::uint32_t(t);
    f.feature.resize(d);
    for (int i = 0; i < d; ++i) f.feature(i) = float(parse_double(cells[3 + i], path, lineno));
    out.push_back(std::move(f));
  }
  if (d_out) *d_out = d;
  return out;
}

fs::path metadata_path(const fs::path& feature_file) {
  fs::path p = feature_file;
  p += ".json";
  return p;
}

void write_video_metadata(const fs::path& feature_file, const VideoGeometry& g) {
  nlohmann::ordered_json j;
  j["width"] = g.width;
  j["height"] = g.height;
  j["duration"] = g.duration;
  auto os = create_text(metadata_path(feature_file));
  os << j.dump(2) << '\n';
}

std::optional<VideoGeometry> read_video_metadata(const fs::path& feature_file) {
  const fs::path p = metadata_path(feature_file);
  if (!fs::exists(p)) return std::nullopt;
  auto is = open_text(p);
  try {
    const auto j = nlohmann::json::parse(is);
    VideoGeometry g;
    g.width = j.at("width").get<int>();
    g.height = j.at("height").get<int>();
    g.duration = j.at("duration").get<int>();
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("'" + p.string() + "': " + e.what());
  }
}

// ---- descriptors ----

void write_descriptors(const fs::path& path, const DescriptorFile& file) {
  Writer w(path);
  w.magic("LBBD");
  w.put(kVersion);
  w.put(std::uint32_t(file.d));
  w.put(std::uint64_t(file.blocks.size()));
  w.put(std::uint64_t(file.placements));
  w.put(std::uint64_t(file.rejected_sparse));
  w.put(std::uint64_t(file.rejected_singular));
  for (const auto& b : file.blocks) {
    if (b.cov.dim() != file.d) throw DataError("write_descriptors: dimension mismatch");
    w.put(b.cx);
    w.put(b.cy);
    w.put(b.ct);
    w.put(b.count);
    for (int i = 0; i < file.d; ++i)
      for (int j = i; j < file.d; ++j) w.put(b.cov.matrix()(i, j));
  }
  w.finish();
}

DescriptorFile read_descriptors(const fs::path& path) {
  Reader r(path, "LBBD");
  DescriptorFile f;
  f.d = int(r.get<std::uint32_t>());
  if (f.d < 1) r.fail(8, "descriptor dimension is zero");
  const auto count = r.get<std::uint64_t>();
  f.placements = std::size_t(r.get<std::uint64_t>());
  f.rejected_sparse = std::size_t(r.get<std::uint64_t>());
  f.rejected_singular = std::size_t(r.get<std::uint64_t>());
  for (std::uint64_t n = 0; n < count; ++n) {
    const std::size_t at = r.offset();
    BlockDescriptor b;
    b.cx = r.get<double>();
    b.cy = r.get<double>();
    b.ct = r.get<double>();
    b.count = r.get<std::uint32_t>();
    Eigen::MatrixXd c(f.d, f.d);
    for (int i = 0; i < f.d; ++i)
      for (int j = i; j < f.d; ++j) c(i, j) = c(j, i) = r.get<double>();
    try {
      b.cov = SpdMatrixd(c);
    } catch (const DataError& e) {
      r.fail(at, e.what());
    }
    f.blocks.push_back(std::move(b));
  }
  r.expect_end();
  return f;
}

// ---- codebook ----

void write_codebook(const fs::path& path, const Codebook& cb) {
  Writer w(path);
  w.magic("LBCB");
  w.put(kVersion);
  w.put(std::uint32_t(cb.k()));
  w.put(std::uint32_t(cb.m()));
  w.put(std::uint32_t(cb.meta().source_d));
  for (int j = 0; j < cb.k(); ++j)
    for (int i = 0; i < cb.m(); ++i) w.put(cb.atoms()(i, j));
  w.put(double(cb.meta().training_count));
  w.put(double(cb.meta().iterations));
  w.put(cb.meta().final_dispersion);
  w.finish();
}

Codebook read_codebook(const fs::path& path) {
  Reader r(path, "LBCB");
  const auto k = r.get<std::uint32_t>();
  const auto m = r.get<std::uint32_t>();
  const auto d = r.get<std::uint32_t>();
  if (k < 1 || std::uint64_t(d) * (d + 1) / 2 != m) r.fail(8, "inconsistent k/m/source_d header");
  Eigen::MatrixXd atoms(m, k);
  for (std::uint32_t j = 0; j < k; ++j)
    for (std::uint32_t i = 0; i < m; ++i) atoms(i, j) = r.get<double>();
  CodebookMeta meta;
  meta.source_d = int(d);
  meta.training_count = std::uint64_t(r.get<double>());
  meta.iterations = int(r.get<double>());
  meta.final_dispersion = r.get<double>();
  r.expect_end();
  return Codebook(std::move(atoms), meta);
}

// ---- model ----

void write_model(const fs::path& path, const SvmModel& model) {
  Writer w(path);
  w.magic("LBSV");
  w.put(kVersion);
  const auto& p = model.params;
  w.put(std::uint32_t(p.size()));
  for (std::size_t c = 0; c < p.size(); ++c) {
    w.str(p.channel_names[c]);
    w.put(std::uint8_t(p.metrics[c]));
    w.put(std::uint8_t(p.degenerate[c] ? 1 : 0));
    w.put(p.scales[c]);
  }
  w.put(model.c);
  w.put(std::uint32_t(model.classes.size()));
  for (const auto& cm : model.classes) {
    w.put(std::uint32_t(cm.support.size()));
    for (std::size_t t = 0; t < cm.support.size(); ++t) {
      w.put(cm.support[t]);
      w.put(cm.coef[t]);
    }
    w.put(cm.bias);
    w.put(std::uint64_t(cm.iterations));
    w.put(std::uint8_t(cm.converged ? 1 : 0));
  }
  if (model.labels.size() != model.classes.size()) {
    throw DataError("write_model: label table does not match class count");
  }
  for (const auto& l : model.labels) w.str(l);
  w.put(std::uint64_t(model.n_train));
  if (!model.training_ids.empty() && model.training_ids.size() != model.n_train) {
    throw DataError("write_model: training id list does not match training size");
  }
  w.put(std::uint64_t(model.training_ids.size()));
  for (const auto& id : model.training_ids) w.str(id);
  w.finish();
}

SvmModel read_model(const fs::path& path) {
  Reader r(path, "LBSV");
  SvmModel m;
  const auto nc = r.get<std::uint32_t>();
  for (std::uint32_t c = 0; c < nc; ++c) {
    m.params.channel_names.push_back(r.str());
    const std::size_t at = r.offset();
    const auto metric = r.get<std::uint8_t>();
    if (metric > 1) r.fail(at, "unknown channel metric");
    m.params.metrics.push_back(ChannelMetric(metric));
    m.params.degenerate.push_back(r.get<std::uint8_t>() != 0);
    m.params.scales.push_back(r.get<double>());
  }
  m.c = r.get<double>();
  const auto ncls = r.get<std::uint32_t>();
  for (std::uint32_t k = 0; k < ncls; ++k) {
    ClassModel cm;
    const auto count = r.get<std::uint32_t>();
    for (std::uint32_t t = 0; t < count; ++t) {
      cm.support.push_back(r.get<std::uint32_t>());
      cm.coef.push_back(r.get<double>());
    }
    cm.bias = r.get<double>();
    cm.iterations = long(r.get<std::uint64_t>());
    cm.converged = r.get<std::uint8_t>() != 0;
    m.classes.push_back(std::move(cm));
  }
  for (std::uint32_t k = 0; k < ncls; ++k) m.labels.push_back(r.str());
  m.n_train = std::size_t(r.get<std::uint64_t>());
  const auto nid = r.get<std::uint64_t>();
  for (std::uint64_t i = 0; i < nid; ++i) m.training_ids.push_back(r.str());
  r.expect_end();
  for (const auto& cm : m.classes)
    for (auto idx : cm.support)
      if (idx >= m.n_train) throw DataError("'" + path.string() + "': support index out of range");
  return m;
}

// ---- histograms ----

void write_histograms(const fs::path& path, const std::vector<HistogramRecord>& records) {
  auto os = create_text(path);
  for (const auto& rec : records) {
    for (const auto& ch : rec.histogram.channels) {
      os << rec.video_id << ',' << ch.name;
      for (Index i = 0; i < ch.values.size(); ++i) os << ',' << format_double(ch.values(i), 9);
      os << '\n';
    }
  }
  if (!os) throw DataError("write to '" + path.string() + "' failed");
}

std::vector<HistogramRecord> read_histograms(const fs::path& path) {
  auto is = open_text(path);
  std::vector<HistogramRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() < 3) {
      throw DataError("'" + path.string() + "' line " + std::to_string(lineno) +
                      ": expected video_id,channel,values...");
    }
    Eigen::VectorXd v(Index(cells.size() - 2));
    for (std::size_t i = 2; i < cells.size(); ++i) v(Index(i - 2)) = parse_double(cells[i], path, lineno);
    if (out.empty() || out.back().video_id != cells[0]) out.push_back({cells[0], {}});
    out.back().histogram.channels.push_back({cells[1], std::move(v)});
  }
  return out;
}

// ---- manifest ----

int Manifest::label_index(const std::string& label) const {
  const auto it = std::lower_bound(labels.begin(), labels.end(), label);
  if (it == labels.end() || *it != label) throw DataError("unknown label '" + label + "'");
  return int(it - labels.begin());
}

Manifest read_manifest(const fs::path& path) {
  auto is = open_text(path);
  std::string line;
  if (!std::getline(is, line) || split_csv_line(line) !=
                                     std::vector<std::string>{"video_id", "path", "label", "split"}) {
    throw DataError("'" + path.string() + "': header must be video_id,path,label,split");
  }
  const fs::path base = path.parent_path();
  Manifest m;
  std::set<std::string> ids, labels;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto c = split_csv_line(line);
    const std::string where = "'" + path.string() + "' line " + std::to_string(lineno);
    if (c.size() != 4) throw DataError(where + ": expected 4 fields");
    ManifestEntry e;
    e.video_id = c[0];
    e.path = fs::path(c[1]).is_absolute() ? fs::path(c[1]) : base / c[1];
    e.label = c[2];
    if (c[3] == "train") {
      e.split = Split::Train;
    } else if (c[3] == "test") {
      e.split = Split::Test;
    } else {
      throw DataError(where + ": split must be 'train' or 'test'");
    }
    if (e.video_id.empty() || !ids.insert(e.video_id).second) {
      throw DataError(where + ": empty or duplicate video_id '" + e.video_id + "'");
    }
    labels.insert(e.label);
    m.entries.push_back(std::move(e));
  }
  m.labels.assign(labels.begin(), labels.end());
  return m;
}

void write_manifest(const fs::path& path, const Manifest& manifest) {
  auto os = create_text(path);
  const fs::path base = path.parent_path();
  os << "video_id,path,label,split\n";
  for (const auto& e : manifest.entries) {
    fs::path p = e.path;
    if (!base.empty()) {
      const fs::path rel = p.lexically_relative(base);
      if (!rel.empty() && *rel.begin() != "..") p = rel;
    }
    os << e.video_id << ',' << p.generic_string() << ',' << e.label << ','
       << (e.split == Split::Train ? "train" : "test") << '\n';
  }
  if (!os) throw DataError("write to '" + path.string() + "' failed");
}

}  // namespace lebow::io
