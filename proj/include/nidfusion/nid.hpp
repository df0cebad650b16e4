#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "nidfusion/core_types.hpp"

namespace nidfusion {

/// Uniform binning of [min, max] into `bins` bins; values outside clamp to the
/// end bins.
struct BinEdges {
  double min = 0.0;
  double max = 1.0;
  int bins = 64;

  /// clamp(floor((x - min) / (max - min) * bins), 0, bins - 1)
  int index(double x) const;
  /// Throws Error(InvalidEdges) unless max > min and bins >= 2.
  void validate() const;
};

/// B x B co-occurrence counts. Row index is the bin of the first array, column
/// the bin of the second.
class JointHistogram {
 public:
  JointHistogram(const BinEdges& edges_a, const BinEdges& edges_b);

  /// Builds a histogram from explicit row-major counts (tests, tooling).
  static JointHistogram from_counts(int bins, std::span<const std::uint64_t> counts);

  int bins() const { return bins_; }
  const BinEdges& edges_a() const { return edges_a_; }
  const BinEdges& edges_b() const { return edges_b_; }
  std::uint64_t total() const { return total_; }

  std::uint64_t at(int row, int col) const { return counts_[index(row, col)]; }
  const std::vector<std::uint64_t>& counts() const { return counts_; }

  void increment(int row, int col) {
    ++counts_[index(row, col)];
    ++total_;
  }
  /// Adds another histogram with identical edges.
  void merge(const JointHistogram& other);

  JointHistogram transpose() const;

  bool operator==(const JointHistogram& other) const {
    return bins_ == other.bins_ && total_ == other.total_ && counts_ == other.counts_;
  }

 private:
  std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(bins_) +
           static_cast<std::size_t>(col);
  }

  BinEdges edges_a_;
  BinEdges edges_b_;
  int bins_;
  std::vector<std::uint64_t> counts_;
  std::uint64_t total_ = 0;
};

/// Counts (bin(a[i]), bin(b[i])) for every i with mask[i] != 0. Rows are split
/// across workers into private histograms that are summed afterwards, so the
/// result is bit-identical for any worker count.
JointHistogram build_joint_histogram(std::span<const double> a, std::span<const double> b,
                                     std::span<const std::uint8_t> mask, const BinEdges& edges_a,
                                     const BinEdges& edges_b);

/// Shannon entropies in bits.
struct Entropies {
  double h_a = 0.0;
  double h_b = 0.0;
  double h_joint = 0.0;

  double mutual_information() const { return h_a + h_b - h_joint; }
};

/// Throws Error(UndefinedDistribution) when the histogram is empty.
Entropies entropies(const JointHistogram& h);

/// (H_joint - I) / H_joint clamped to [0, 1]; 0 when H_joint == 0.
double nid_from_histogram(const JointHistogram& h);

/// alpha * nid_rgb + (1 - alpha) * nid_depth.
double combined_nid(double nid_rgb, double nid_depth, double alpha);

/// Which pixels enter the joint histograms.
enum class HistogramMask {
  LiveValid,  // every valid live pixel; unpredicted pixels count as value 0
  CoVisible,  // only pixels valid in both frames
};

struct NidConfig {
  int bins = 64;
  HistogramMask mask = HistogramMask::LiveValid;
  double alpha = 0.5;
  double depth_min = 0.4;
  double depth_max = 8.0;
  double min_support = 0.1;  // fraction of the image that must be co-visible
};

struct NidScore {
  double nid_rgb = 1.0;
  double nid_depth = 1.0;
  double combined = 1.0;
  std::size_t pixels_used = 0;  // pixels with valid depth in both frames
  bool low_support = true;      // pixels_used < floor(min_support * image size)
};

/// Scores a live frame against a prediction. Support is always measured on
/// co-visible pixels; `config.mask` selects the histogram population. With no
/// co-visible pixels every component is reported as 1.
NidScore frame_nid(const Frame& live, const Frame& predicted, const NidConfig& config);

}  // namespace nidfusion
