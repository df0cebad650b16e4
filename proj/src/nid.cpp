#include "nidfusion/nid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nidfusion/error.hpp"
#include "nidfusion/parallel.hpp"

namespace nidfusion {

int BinEdges::index(double x) const {
  const double scaled = std::floor((x - min) / (max - min) * bins);
  if (!(scaled >= 0.0)) return 0;
  if (scaled >= bins - 1) return bins - 1;
  return static_cast<int>(scaled);
}

void BinEdges::validate() const {
  if (!(max > min)) {
    throw Error(ErrorKind::InvalidEdges, "bin edges need max > min");
  }
  if (bins < 2) throw Error(ErrorKind::InvalidEdges, "need at least 2 bins");
}

JointHistogram::JointHistogram(const BinEdges& edges_a, const BinEdges& edges_b)
    : edges_a_(edges_a), edges_b_(edges_b), bins_(edges_a.bins) {
  edges_a.validate();
  edges_b.validate();
  if (edges_a.bins != edges_b.bins) {
    throw Error(ErrorKind::InvalidEdges, "joint histogram axes must share a bin count");
  }
  counts_.assign(static_cast<std::size_t>(bins_) * bins_, 0);
}

JointHistogram JointHistogram::from_counts(int bins, std::span<const std::uint64_t> counts) {
  if (counts.size() != static_cast<std::size_t>(bins) * static_cast<std::size_t>(bins)) {
    throw Error(ErrorKind::DimensionMismatch, "from_counts: expected bins^2 entries");
  }
  JointHistogram h({0.0, 1.0, bins}, {0.0, 1.0, bins});
  std::copy(counts.begin(), counts.end(), h.counts_.begin());
  for (auto c : counts) h.total_ += c;
  return h;
}

void JointHistogram::merge(const JointHistogram& other) {
  if (other.bins_ != bins_) throw Error(ErrorKind::DimensionMismatch, "histogram bin mismatch");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  total_ += other.total_;
}

JointHistogram JointHistogram::transpose() const {
  JointHistogram t(edges_b_, edges_a_);
  for (int r = 0; r < bins_; ++r) {
    for (int c = 0; c < bins_; ++c) t.counts_[t.index(c, r)] = counts_[index(r, c)];
  }
  t.total_ = total_;
  return t;
}

JointHistogram build_joint_histogram(std::span<const double> a, std::span<const double> b,
                                     std::span<const std::uint8_t> mask, const BinEdges& edges_a,
                                     const BinEdges& edges_b) {
  if (a.size() != b.size() || a.size() != mask.size()) {
    throw Error(ErrorKind::DimensionMismatch, "histogram inputs differ in size");
  }
  JointHistogram result(edges_a, edges_b);
  const unsigned chunks = parallel::chunks_for(a.size());
  std::vector<JointHistogram> partial(chunks, result);
  parallel::for_chunks(a.size(), chunks, [&](unsigned c, std::size_t begin, std::size_t end) {
    JointHistogram& h = partial[c];
    for (std::size_t i = begin; i < end; ++i) {
      if (mask[i]) h.increment(edges_a.index(a[i]), edges_b.index(b[i]));
    }
  });
  for (const auto& h : partial) result.merge(h);
  return result;
}

namespace {

// -sum p log2 p over the nonzero counts. The counts are sorted first so that
// any permutation of the bins (e.g. a transpose) yields the identical sum.
double entropy_of_counts(std::vector<std::uint64_t> counts, std::uint64_t total) {
  std::erase(counts, 0);
  std::sort(counts.begin(), counts.end());
  const double n = static_cast<double>(total);
  double h = 0.0;
  for (auto c : counts) {
    const double p = static_cast<double>(c) / n;
    h -= p * std::log2(p);
  }
  return h;
}

}  // namespace

Entropies entropies(const JointHistogram& h) {
  if (h.total() == 0) {
    throw Error(ErrorKind::UndefinedDistribution, "entropy of an empty histogram is undefined");
  }
  const int bins = h.bins();
  std::vector<std::uint64_t> rows(bins, 0);
  std::vector<std::uint64_t> cols(bins, 0);
  for (int r = 0; r < bins; ++r) {
    for (int c = 0; c < bins; ++c) {
      rows[r] += h.at(r, c);
      cols[c] += h.at(r, c);
    }
  }
  Entropies e;
  e.h_a = entropy_of_counts(std::move(rows), h.total());
  e.h_b = entropy_of_counts(std::move(cols), h.total());
  e.h_joint = entropy_of_counts(h.counts(), h.total());
  return e;
}

double nid_from_histogram(const JointHistogram& h) {
  const Entropies e = entropies(h);
  if (e.h_joint <= 0.0) return 0.0;
  const double nid = (e.h_joint - e.mutual_information()) / e.h_joint;
  return std::clamp(nid, 0.0, 1.0);
}

double combined_nid(double nid_rgb, double nid_depth, double alpha) {
  return alpha * nid_rgb + (1.0 - alpha) * nid_depth;
}

NidScore frame_nid(const Frame& live, const Frame& predicted, const NidConfig& config) {
  if (!live.depth.same_shape(predicted.depth) || !live.intensity.same_shape(predicted.intensity) ||
      !live.depth.same_shape(live.intensity)) {
    throw Error(ErrorKind::DimensionMismatch, "frame_nid: live and predicted frames differ in size");
  }
  if (!(config.alpha >= 0.0 && config.alpha <= 1.0)) {
    throw Error(ErrorKind::InvalidInput, "alpha must lie in [0, 1]");
  }
  const BinEdges intensity_edges{0.0, 1.0, config.bins};
  const BinEdges depth_edges{config.depth_min, config.depth_max, config.bins};
  intensity_edges.validate();
  depth_edges.validate();

  const std::size_t n = live.depth.size();
  std::vector<std::uint8_t> mask(n);
  std::size_t used = 0;
  const bool covisible_only = config.mask == HistogramMask::CoVisible;
  for (std::size_t i = 0; i < n; ++i) {
    const bool live_valid = live.depth[i] > 0.0;
    const bool both = live_valid && predicted.depth[i] > 0.0;
    mask[i] = covisible_only ? both : live_valid;
    used += both;
  }

  NidScore score;
  score.pixels_used = used;
  const auto min_pixels =
      static_cast<std::size_t>(std::floor(config.min_support * static_cast<double>(n)));
  score.low_support = used == 0 || used < min_pixels;
  if (used == 0) return score;

  score.nid_rgb = nid_from_histogram(build_joint_histogram(
      live.intensity.data(), predicted.intensity.data(), mask, intensity_edges, intensity_edges));
  score.nid_depth = nid_from_histogram(build_joint_histogram(
      live.depth.data(), predicted.depth.data(), mask, depth_edges, depth_edges));
  score.combined = combined_nid(score.nid_rgb, score.nid_depth, config.alpha);
  return score;
}

}  // namespace nidfusion
