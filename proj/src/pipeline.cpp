#include "lebow/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>

#include "lebow/random.hpp"

namespace lebow::pipeline {

namespace {

std::ostream* g_log = &std::cerr;

template <typename... Args>
void log(const Args&... args) {
  if (!g_log) return;
  ((*g_log) << ... << args) << '\n';
}

std::ofstream create_text(const fs::path& path) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot open '" + path.string() + "' for writing");
  os << std::setprecision(9);
  return os;
}

fs::path with_suffix(const fs::path& p, const std::string& suffix) {
  fs::path out = p;
  out += suffix;
  return out;
}

fs::path descriptor_file(const fs::path& dir, const std::string& video_id) {
  return dir / (video_id + ".lbbd");
}

std::vector<ChannelMetric> metrics_for(const MultiChannelHistogram& h, const PipelineConfig& cfg) {
  std::vector<ChannelMetric> m;
  for (const auto& ch : h.channels) {
    m.push_back(ch.name == sc_channel_name ? cfg.sc_metric : ChannelMetric::Chi2);
  }
  return m;
}

std::map<std::string, MultiChannelHistogram> index_histograms(const fs::path& path) {
  std::map<std::string, MultiChannelHistogram> out;
  for (auto& rec : io::read_histograms(path)) {
    if (!out.emplace(rec.video_id, std::move(rec.histogram)).second) {
      throw DataError("'" + path.string() + "': video '" + rec.video_id + "' appears twice");
    }
  }
  return out;
}

}  // namespace

void set_log_stream(std::ostream* os) { g_log = os; }

GenerateSummary gen_synthetic(const PipelineConfig& cfg, const fs::path& out_dir) {
  if (cfg.classes < 2) throw DataError("gen-synthetic: need at least 2 classes");
  if (cfg.videos_per_class < 1) throw DataError("gen-synthetic: need at least 1 video per class");
  if (!(cfg.train_ratio > 0 && cfg.train_ratio <= 1)) {
    throw DataError("gen-synthetic: train_ratio must be in (0, 1]");
  }
  std::error_code ec;
  fs::create_directories(out_dir / "videos", ec);
  if (ec) throw DataError("cannot create '" + (out_dir / "videos").string() + "': " + ec.message());

  SyntheticOptions opts;
  opts.geometry = cfg.geometry;
  opts.video_jitter = cfg.video_jitter;
  const int n_train = std::clamp(int(std::lround(cfg.train_ratio * cfg.videos_per_class)), 1,
                                 cfg.videos_per_class);

  io::Manifest manifest;
  for (int c = 0; c < cfg.classes; ++c) {
    const std::string label = "class" + std::to_string(c);
    for (int v = 0; v < cfg.videos_per_class; ++v) {
      std::ostringstream id;
      id << label << "_v" << std::setw(3) << std::setfill('0') << v;
      const fs::path file = out_dir / "videos" / (id.str() + ".lbtf");
      const auto seed =
          stream_seed(cfg.seed, "synthetic", std::uint64_t(c) * 1000003ull + std::uint64_t(v));
      const auto features = generate_synthetic(c, cfg.trajectories, cfg.d, seed, opts);
      io::write_features(file, features, cfg.d);
      io::write_video_metadata(file, cfg.geometry);
      manifest.entries.push_back(
          {id.str(), file, label, v < n_train ? io::Split::Train : io::Split::Test});
    }
    manifest.labels.push_back(label);
  }
  std::sort(manifest.labels.begin(), manifest.labels.end());

  GenerateSummary s;
  s.manifest = out_dir / "manifest.csv";
  s.config = out_dir / "synthetic.cfg";
  s.videos = manifest.entries.size();
  io::write_manifest(s.manifest, manifest);
  {
    auto os = create_text(s.config);
    os << "# written by gen-synthetic\n" << cfg.to_text();
  }
  log("gen-synthetic: ", s.videos, " videos, ", cfg.classes, " classes -> ", s.manifest.string());
  return s;
}

ExtractSummary extract(const io::Manifest& manifest, const PipelineConfig& cfg,
                       const fs::path& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw DataError("cannot create '" + out_dir.string() + "': " + ec.message());
  ExtractSummary summary;
  for (const auto& e : manifest.entries) {
    int d = 0;
    const auto features = io::read_features(e.path, &d);
    if (d != cfg.d) {
      throw DataError("'" + e.path.string() + "' has feature dimension " + std::to_string(d) +
                      " but the configuration says d=" + std::to_string(cfg.d));
    }
    const VideoGeometry g = io::read_video_metadata(e.path).value_or(cfg.geometry);
    io::DescriptorFile out;
    out.d = d;
    if (!features.empty()) {
      auto r = extract_blocks(features, g, cfg.block_spec_for(g), cfg.regularizer);
      out.placements = r.placements;
      out.rejected_sparse = r.rejected_sparse;
      out.rejected_singular = r.rejected_singular;
      out.blocks = std::move(r.blocks);
    }
    io::write_descriptors(descriptor_file(out_dir, e.video_id), out);
    summary.videos.push_back({e.video_id, out.placements, out.blocks.size(), out.rejected_sparse,
                              out.rejected_singular});
    if (out.blocks.empty()) log("extract: warning: no block survived in ", e.video_id);
  }
  auto os = create_text(out_dir / "extract_report.csv");
  os << "video_id,placements,emitted,rejected_sparse,rejected_singular\n";
  for (const auto& v : summary.videos) {
    os << v.video_id << ',' << v.placements << ',' << v.emitted << ',' << v.rejected_sparse << ','
       << v.rejected_singular << '\n';
  }
  log("extract: ", summary.videos.size(), " videos -> ", out_dir.string());
  return summary;
}

CodebookSummary train_codebook(const io::Manifest& manifest, const fs::path& descriptor_dir,
                               const PipelineConfig& cfg, const fs::path& out,
                               AccessLog* audit) {
  std::vector<SpdMatrixd> pool;
  for (const auto& e : manifest.entries) {
    if (e.split != io::Split::Train) continue;
    if (audit) audit->reads.push_back({"train-codebook", e.video_id});
    auto f = io::read_descriptors(descriptor_file(descriptor_dir, e.video_id));
    if (f.d != cfg.d) {
      throw DataError("descriptors of '" + e.video_id + "' have d=" + std::to_string(f.d) +
                      ", configuration says d=" + std::to_string(cfg.d));
    }
    for (auto& b : f.blocks) pool.push_back(std::move(b.cov));
  }
  CodebookSummary s;
  s.pool = pool.size();
  if (pool.size() < std::size_t(std::max(cfg.kmeans.k, 1))) {
    throw DataError("train-codebook: " + std::to_string(pool.size()) +
                    " training descriptors, fewer than k=" + std::to_string(cfg.kmeans.k));
  }
  if (pool.size() > cfg.descriptor_cap) {
    std::vector<std::size_t> idx(pool.size());
    std::iota(idx.begin(), idx.end(), std::size_t(0));
    Rng rng(stream_seed(cfg.seed, "codebook-subsample"));
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(cfg.descriptor_cap);
    std::sort(idx.begin(), idx.end());
    std::vector<SpdMatrixd> kept;
    kept.reserve(idx.size());
    for (auto i : idx) kept.push_back(std::move(pool[i]));
    pool = std::move(kept);
  }
  s.used = pool.size();

  KmeansConfig kc = cfg.kmeans;
  kc.seed = stream_seed(cfg.seed, "codebook");
  const Codebook cb = lebow::train_codebook(pool, kc, &s.trace);
  io::write_codebook(out, cb);

  auto os = create_text(with_suffix(out, ".log.csv"));
  os << std::setprecision(17) << "iteration,epsilon,mean_distance\n";
  for (std::size_t i = 0; i < s.trace.dispersion.size(); ++i) {
    os << i + 1 << ',' << s.trace.dispersion[i] << ',' << s.trace.mean_distance[i] << '\n';
    log("train-codebook: iteration ", i + 1, " epsilon=", s.trace.dispersion[i]);
  }
  log("train-codebook: k=", cb.k(), " from ", s.used, " of ", s.pool, " descriptors -> ",
      out.string());
  return s;
}

EncodeSummary encode(const io::Manifest& manifest, const fs::path& descriptor_dir,
                     const fs::path& codebook_path, const PipelineConfig& cfg, const fs::path& out,
                     const fs::path& codes_out) {
  const Codebook cb = io::read_codebook(codebook_path);
  EncodeSummary s;
  std::vector<io::HistogramRecord> records;
  std::ofstream codes;
  if (!codes_out.empty() && cfg.encoder == EncoderKind::SC) {
    codes = create_text(codes_out);
    codes << std::setprecision(17);
  }
  for (const auto& e : manifest.entries) {
    const auto f = io::read_descriptors(descriptor_file(descriptor_dir, e.video_id));
    if (f.d != cb.meta().source_d) {
      throw DataError("encode: descriptors of '" + e.video_id + "' have d=" + std::to_string(f.d) +
                      " but the codebook has d=" + std::to_string(cb.meta().source_d));
    }
    if (f.blocks.empty()) {
      log("encode: warning: '", e.video_id, "' has no descriptors, skipped");
      s.skipped.push_back(e.video_id);
      continue;
    }
    MultiChannelHistogram h;
    switch (cfg.encoder) {
      case EncoderKind::HA:
        h = MultiChannelHistogram::single(std::string(ha_channel_name),
                                          encode_ha(f.blocks, cb).values);
        break;
      case EncoderKind::STP:
        h = encode_stp(f.blocks, cb);
        break;
      case EncoderKind::SC: {
        const Eigen::MatrixXd a = sparse_codes(f.blocks, cb, cfg.lambda);
        Eigen::VectorXd pooled = a.rowwise().sum() / double(a.cols());
        if (codes.is_open()) {
          for (Index i = 0; i < a.cols(); ++i) {
            codes << e.video_id << ',' << i;
            for (Index j = 0; j < a.rows(); ++j) codes << ',' << a(j, i);
            codes << '\n';
          }
        }
        if (cfg.sc_metric == ChannelMetric::Chi2) pooled = clamp_and_renormalize(pooled);
        h = MultiChannelHistogram::single(std::string(sc_channel_name), pooled);
        break;
      }
    }
    records.push_back({e.video_id, std::move(h)});
    s.encoded.push_back(e.video_id);
  }
  io::write_histograms(out, records);
  auto os = create_text(with_suffix(out, ".report.csv"));
  os << "video_id,status\n";
  for (const auto& e : manifest.entries) {
    const bool skipped = std::find(s.skipped.begin(), s.skipped.end(), e.video_id) != s.skipped.end();
    os << e.video_id << ',' << (skipped ? "skipped-empty" : "encoded") << '\n';
  }
  log("encode: ", to_string(cfg.encoder), " ", s.encoded.size(), " videos (", s.skipped.size(),
      " skipped) -> ", out.string());
  return s;
}

TrainSummary train(const io::Manifest& manifest, const fs::path& histograms,
                   const PipelineConfig& cfg, const fs::path& model_out, AccessLog* audit) {
  const auto all = index_histograms(histograms);
  std::vector<MultiChannelHistogram> train_h;
  std::vector<int> labels;
  SvmModel shell;
  for (const auto& e : manifest.entries) {
    if (e.split != io::Split::Train) continue;
    const auto it = all.find(e.video_id);
    if (it == all.end()) {
      log("train: warning: no histogram for '", e.video_id, "', skipped");
      continue;
    }
    if (audit) audit->reads.push_back({"train", e.video_id});
    train_h.push_back(it->second);
    labels.push_back(manifest.label_index(e.label));
    shell.training_ids.push_back(e.video_id);
  }
  if (train_h.size() < 2) throw DataError("train: fewer than 2 training histograms");

  const KernelParams params = compute_channel_scales(train_h, metrics_for(train_h.front(), cfg));
  for (std::size_t c = 0; c < params.size(); ++c)
    if (params.degenerate[c]) log("train: warning: channel '", params.channel_names[c], "' has zero spread, scale set to 1");
  const Eigen::MatrixXd gram = gram_matrix(train_h, params);
  SvmModel model = train_svm(gram, labels, int(manifest.labels.size()), cfg.svm_c);
  model.labels = manifest.labels;
  model.training_ids = std::move(shell.training_ids);
  model.params = params;
  io::write_model(model_out, model);

  TrainSummary s;
  s.train_videos = train_h.size();
  std::size_t correct = 0;
  for (Index i = 0; i < gram.rows(); ++i)
    if (predict(model, gram.row(i).transpose()).label == labels[std::size_t(i)]) ++correct;
  s.training_accuracy = double(correct) / double(train_h.size());
  for (std::size_t i = 0; i < train_h.size(); ++i)
    for (std::size_t j = i + 1; j < train_h.size(); ++j) {
      if (labels[i] == labels[j]) continue;
      bool same = train_h[i].channels.size() == train_h[j].channels.size();
      for (std::size_t c = 0; same && c < train_h[i].channels.size(); ++c)
        same = train_h[i].channels[c].values == train_h[j].channels[c].values;
      if (same) ++s.conflicting_pairs;
    }
  for (const auto& cm : model.classes) s.converged = s.converged && cm.converged;
  log("train: ", s.train_videos, " videos, training accuracy ",
      std::round(s.training_accuracy * 10000) / 100, "%");
  if (s.conflicting_pairs > 0) {
    log("train: note: ", s.conflicting_pairs,
        " pair(s) of identical training histograms carry different labels; at most one of each "
        "pair can be classified correctly");
  }
  if (!s.converged) log("train: warning: SMO iteration budget exhausted for some class");
  return s;
}

EvaluationReport summarize(std::vector<std::string> labels, std::vector<int> truth,
                           std::vector<int> predicted) {
  if (truth.size() != predicted.size()) throw DataError("summarize: size mismatch");
  EvaluationReport r;
  const std::size_t nl = labels.size();
  r.labels = std::move(labels);
  r.confusion.assign(nl, std::vector<long>(nl, 0));
  long correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    ++r.confusion[std::size_t(truth[i])][std::size_t(predicted[i])];
    if (truth[i] == predicted[i]) ++correct;
  }
  r.ccr = truth.empty() ? 0.0 : double(correct) / double(truth.size());
  for (std::size_t c = 0; c < nl; ++c) {
    long row = 0, col = 0;
    for (std::size_t o = 0; o < nl; ++o) {
      row += r.confusion[c][o];
      col += r.confusion[o][c];
    }
    r.recall.push_back(row > 0 ? double(r.confusion[c][c]) / double(row) : 0.0);
    r.precision.push_back(col > 0 ? double(r.confusion[c][c]) / double(col) : 0.0);
  }
  r.truth = std::move(truth);
  r.predicted = std::move(predicted);
  return r;
}

EvaluationReport evaluate(const io::Manifest& manifest, const fs::path& histograms,
                          const fs::path& model_path, const fs::path& report_prefix,
                          AccessLog* audit) {
  const SvmModel model = io::read_model(model_path);
  const auto all = index_histograms(histograms);
  if (model.labels != manifest.labels) {
    throw DataError("evaluate: model labels do not match the manifest's label vocabulary");
  }
  std::vector<MultiChannelHistogram> train_h;
  for (const auto& id : model.training_ids) {
    const auto it = all.find(id);
    if (it == all.end()) throw DataError("evaluate: training histogram '" + id + "' is missing");
    train_h.push_back(it->second);
  }

  std::vector<std::string> ids;
  std::vector<int> truth, predicted;
  std::vector<std::vector<double>> scores;
  for (const auto& e : manifest.entries) {
    if (e.split != io::Split::Test) continue;
    const auto it = all.find(e.video_id);
    if (it == all.end()) {
      log("evaluate: warning: no histogram for '", e.video_id, "', skipped");
      continue;
    }
    if (audit) audit->reads.push_back({"evaluate", e.video_id});
    const Prediction p = predict(model, kernel_row(it->second, train_h, model.params));
    ids.push_back(e.video_id);
    truth.push_back(manifest.label_index(e.label));
    predicted.push_back(p.label);
    scores.push_back(p.scores);
  }
  if (ids.empty()) throw DataError("evaluate: test split is empty");

  EvaluationReport r = summarize(model.labels, truth, predicted);
  r.video_ids = std::move(ids);
  r.scores = std::move(scores);

  const std::size_t nl = r.labels.size();
  {
    auto os = create_text(with_suffix(report_prefix, ".csv"));
    os << "video_id,true_label,predicted_label";
    for (const auto& l : r.labels) os << ",score_" << l;
    os << '\n';
    for (std::size_t i = 0; i < r.video_ids.size(); ++i) {
      os << r.video_ids[i] << ',' << r.labels[std::size_t(r.truth[i])] << ','
         << r.labels[std::size_t(r.predicted[i])];
      for (double v : r.scores[i]) os << ',' << v;
      os << '\n';
    }
  }
  {
    auto os = create_text(with_suffix(report_prefix, "_metrics.csv"));
    os << "label,precision,recall,support\n";
    for (std::size_t c = 0; c < nl; ++c) {
      long support = 0;
      for (long v : r.confusion[c]) support += v;
      os << r.labels[c] << ',' << r.precision[c] << ',' << r.recall[c] << ',' << support << '\n';
    }
    os << "CCR,," << r.ccr << ',' << r.video_ids.size() << '\n';
  }
  {
    auto os = create_text(with_suffix(report_prefix, "_confusion.csv"));
    os << "true\\predicted";
    for (const auto& l : r.labels) os << ',' << l;
    os << '\n';
    for (std::size_t c = 0; c < nl; ++c) {
      os << r.labels[c];
      for (long v : r.confusion[c]) os << ',' << v;
      os << '\n';
    }
  }
  {
    auto os = create_text(with_suffix(report_prefix, "_summary.txt"));
    os << std::fixed << std::setprecision(2);
    os << "test videos: " << r.video_ids.size() << '\n';
    os << "CCR: " << 100 * r.ccr << "%\n\n";
    os << std::left << std::setw(16) << "class" << std::right << std::setw(12) << "precision"
       << std::setw(12) << "recall" << '\n';
    for (std::size_t c = 0; c < nl; ++c) {
      os << std::left << std::setw(16) << r.labels[c] << std::right << std::setw(11)
         << 100 * r.precision[c] << '%' << std::setw(11) << 100 * r.recall[c] << "%\n";
    }
  }
  log("evaluate: CCR ", std::round(r.ccr * 10000) / 100, "% on ", r.video_ids.size(),
      " test videos -> ", with_suffix(report_prefix, ".csv").string());
  return r;
}

}  // namespace lebow::pipeline
