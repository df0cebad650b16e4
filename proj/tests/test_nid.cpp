#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "nidfusion/error.hpp"
#include "nidfusion/nid.hpp"
#include "nidfusion/parallel.hpp"
#include "test_support.hpp"

using namespace nidfusion;

namespace {

JointHistogram hist2(std::uint64_t a, std::uint64_t b, std::uint64_t c, std::uint64_t d) {
  const std::uint64_t counts[] = {a, b, c, d};
  return JointHistogram::from_counts(2, counts);
}

}  // namespace

TEST_CASE("binning of a 2x2 image with itself") {
  const std::vector<double> a = {0.0, 0.0, 1.0, 1.0};
  std::vector<std::uint8_t> mask(4, 1);
  const BinEdges e{0.0, 1.0, 2};
  const auto h = build_joint_histogram(a, a, mask, e, e);
  CHECK(h.counts() == std::vector<std::uint64_t>{2, 0, 0, 2});
  mask[0] = 0;
  CHECK(build_joint_histogram(a, a, mask, e, e).total() == 3);
  std::fill(mask.begin(), mask.end(), 0);
  CHECK(build_joint_histogram(a, a, mask, e, e).total() == 0);
}

TEST_CASE("bin edges clamp and validate") {
  const BinEdges e{0.4, 8.0, 64};
  CHECK(e.index(0.0) == 0);
  CHECK(e.index(0.4) == 0);
  CHECK(e.index(8.0) == 63);
  CHECK(e.index(100.0) == 63);
  CHECK(e.index(4.2) == 32);
  try {
    BinEdges{1.0, 1.0, 8}.validate();
    FAIL("expected InvalidEdges");
  } catch (const Error& err) {
    CHECK(err.kind() == ErrorKind::InvalidEdges);
  }
  CHECK_THROWS_AS((BinEdges{2.0, 1.0, 8}.validate()), Error);
}

TEST_CASE("entropy worked values") {
  const Entropies diag = entropies(hist2(2, 0, 0, 2));
  CHECK(diag.h_a == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(diag.h_b == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(diag.h_joint == doctest::Approx(1.0).epsilon(1e-15));

  const Entropies uni = entropies(hist2(1, 1, 1, 1));
  CHECK(uni.h_a == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(uni.h_joint == doctest::Approx(2.0).epsilon(1e-15));

  const Entropies point = entropies(hist2(4, 0, 0, 0));
  CHECK(point.h_a == 0.0);
  CHECK(point.h_b == 0.0);
  CHECK(point.h_joint == 0.0);
  CHECK(nid_from_histogram(hist2(4, 0, 0, 0)) == 0.0);

  try {
    entropies(hist2(0, 0, 0, 0));
    FAIL("expected UndefinedDistribution");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::UndefinedDistribution);
  }
}

TEST_CASE("nid worked values") {
  CHECK(std::abs(nid_from_histogram(hist2(2, 0, 0, 2))) <= 1e-12);
  CHECK(std::abs(nid_from_histogram(hist2(1, 1, 1, 1)) - 1.0) <= 1e-12);
}

TEST_CASE("entropies agree with the direct Shannon oracle") {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<std::uint64_t> c(0, 9);
  for (int trial = 0; trial < 200; ++trial) {
    const int bins = 2 + trial % 15;
    std::vector<std::uint64_t> counts(static_cast<std::size_t>(bins) * bins);
    for (auto& x : counts) x = c(rng) < 4 ? 0 : c(rng);
    counts[trial % counts.size()] += 1;
    const auto e = entropies(JointHistogram::from_counts(bins, counts));
    const auto o = testing::shannon(counts, bins);
    CHECK(e.h_a == doctest::Approx(o.h_a).epsilon(1e-12));
    CHECK(e.h_b == doctest::Approx(o.h_b).epsilon(1e-12));
    CHECK(e.h_joint == doctest::Approx(o.h_joint).epsilon(1e-12));
  }
}

TEST_CASE("information inequalities and transpose symmetry") {
  std::mt19937_64 rng(23);
  std::uniform_int_distribution<std::uint64_t> c(0, 30);
  for (int trial = 0; trial < 1000; ++trial) {
    const int bins = 2 + trial % 20;
    std::vector<std::uint64_t> counts(static_cast<std::size_t>(bins) * bins);
    for (auto& x : counts) x = c(rng) < 20 ? 0 : c(rng);
    counts[0] += 1;
    const auto h = JointHistogram::from_counts(bins, counts);
    const Entropies e = entropies(h);
    CHECK(e.mutual_information() >= -1e-9);
    CHECK(std::max(e.h_a, e.h_b) <= e.h_joint + 1e-9);
    CHECK(e.h_joint <= e.h_a + e.h_b + 1e-9);
    const double n = nid_from_histogram(h);
    CHECK(n >= 0.0);
    CHECK(n <= 1.0);
    CHECK(n == nid_from_histogram(h.transpose()));
  }
}

TEST_CASE("parallel histogram matches the sequential oracle") {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> u(-0.5, 9.0);
  std::bernoulli_distribution keep(0.6);
  for (int bins : {16, 32, 64, 128}) {
    for (int trial = 0; trial < 25; ++trial) {
      const std::size_t n = 97 * (trial + 1);
      std::vector<double> a(n), b(n);
      std::vector<std::uint8_t> mask(n);
      for (std::size_t i = 0; i < n; ++i) {
        a[i] = u(rng);
        b[i] = u(rng) / 9.0;
        mask[i] = keep(rng);
      }
      const auto expected = testing::sequential_histogram(a, b, mask, 0.4, 8.0, 0.0, 1.0, bins);
      for (unsigned t : {1u, 4u, 7u}) {
        parallel::set_thread_count(t);
        const auto h = build_joint_histogram(a, b, mask, {0.4, 8.0, bins}, {0.0, 1.0, bins});
        CHECK(h.counts() == expected);
      }
    }
  }
  parallel::set_thread_count(0);
}

TEST_CASE("rescaling values and edges together leaves the histogram unchanged") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int bins : {16, 32, 64, 128}) {
    std::vector<double> a(2000), b(2000), a2(2000), b2(2000);
    // Dyadic scales keep the affine map exact in floating point.
    for (std::size_t i = 0; i < a.size(); ++i) {
      a[i] = std::round(u(rng) * 4096) / 4096;
      b[i] = std::round(u(rng) * 4096) / 4096;
      a2[i] = 4.0 * a[i] + 2.0;
      b2[i] = 0.5 * b[i] - 1.0;
    }
    const std::vector<std::uint8_t> mask(a.size(), 1);
    const auto h1 = build_joint_histogram(a, b, mask, {0, 1, bins}, {0, 1, bins});
    const auto h2 = build_joint_histogram(a2, b2, mask, {2, 6, bins}, {-1, -0.5, bins});
    CHECK(h1.counts() == h2.counts());
  }
}

TEST_CASE("histogram merge and dimension checks") {
  const BinEdges e{0, 1, 4};
  JointHistogram a(e, e), b(e, e);
  a.increment(0, 1);
  b.increment(0, 1);
  b.increment(3, 3);
  a.merge(b);
  CHECK(a.at(0, 1) == 2);
  CHECK(a.total() == 3);
  const std::vector<double> x(5, 0.5), y(4, 0.5);
  const std::vector<std::uint8_t> m(5, 1);
  CHECK_THROWS_AS(build_joint_histogram(x, y, m, e, e), Error);
}

TEST_CASE("combined nid") {
  CHECK(combined_nid(0.3, 0.9, 1.0) == 0.3);
  CHECK(combined_nid(0.4, 0.8, 0.25) == doctest::Approx(0.7).epsilon(1e-15));
  for (double alpha : {0.0, 0.1, 0.5, 0.77, 1.0}) {
    CHECK(combined_nid(0.42, 0.42, alpha) == doctest::Approx(0.42).epsilon(1e-15));
  }
}

TEST_CASE("frame nid against an empty prediction is low-support") {
  const Intrinsics in = testing::small_camera();
  const Frame live = testing::plane_frame(in, 1.0);
  const Frame empty(in.width, in.height, FrameKind::Predicted);
  const NidScore s = frame_nid(live, empty, NidConfig{});
  CHECK(s.pixels_used == 0);
  CHECK(s.low_support);
}

TEST_CASE("frame nid of a frame against itself is zero") {
  const Intrinsics in = testing::small_camera();
  Frame live(in.width, in.height);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1), d(0.5, 6.0);
  for (std::size_t i = 0; i < live.depth.size(); ++i) {
    live.intensity[i] = u(rng);
    live.depth[i] = d(rng);
  }
  for (HistogramMask mask : {HistogramMask::LiveValid, HistogramMask::CoVisible}) {
    NidConfig cfg;
    cfg.mask = mask;
    const NidScore s = frame_nid(live, live, cfg);
    CHECK(s.combined <= 1e-9);
    CHECK(s.pixels_used == in.pixel_count());
    CHECK_FALSE(s.low_support);
  }
}

TEST_CASE("identical intensity with independent uniform depth gives (1 - alpha)") {
  // 2 bins over each channel; depth takes each of the four joint cells
  // equally often, so its NID is exactly 1 and the intensity NID is 0.
  Intrinsics in = testing::small_camera(64, 48);
  Frame live(in.width, in.height), pred(in.width, in.height, FrameKind::Predicted);
  for (int v = 0; v < in.height; ++v) {
    for (int u = 0; u < in.width; ++u) {
      const double i = (u % 2) ? 0.9 : 0.1;
      live.intensity(u, v) = pred.intensity(u, v) = i;
      live.depth(u, v) = (v % 2) ? 6.0 : 1.0;
      pred.depth(u, v) = ((u / 2 + v) % 2) ? 6.0 : 1.0;
    }
  }
  NidConfig cfg;
  cfg.bins = 2;
  cfg.alpha = 0.3;
  cfg.mask = HistogramMask::CoVisible;

  // Per-component oracle.
  std::vector<double> li, pi, ld, pd;
  for (std::size_t k = 0; k < live.depth.size(); ++k) {
    li.push_back(live.intensity[k]);
    pi.push_back(pred.intensity[k]);
    ld.push_back(live.depth[k]);
    pd.push_back(pred.depth[k]);
  }
  const std::vector<std::uint8_t> all(li.size(), 1);
  const auto hi = testing::sequential_histogram(li, pi, all, 0, 1, 0, 1, 2);
  const auto hd = testing::sequential_histogram(ld, pd, all, 0.4, 8.0, 0.4, 8.0, 2);
  auto oracle_nid = [](const std::vector<std::uint64_t>& c) {
    const auto o = testing::shannon(c, 2);
    return (2.0 * o.h_joint - o.h_a - o.h_b) / o.h_joint;
  };
  CHECK(oracle_nid(hi) == doctest::Approx(0.0));
  CHECK(oracle_nid(hd) == doctest::Approx(1.0));

  const NidScore s = frame_nid(live, pred, cfg);
  CHECK(s.nid_rgb == doctest::Approx(oracle_nid(hi)).epsilon(1e-12));
  CHECK(s.nid_depth == doctest::Approx(oracle_nid(hd)).epsilon(1e-12));
  CHECK(s.combined == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("support counts co-visible pixels against the 10 percent floor") {
  const Intrinsics in = testing::small_camera(10, 10);
  const Frame live = testing::plane_frame(in, 1.0, 1);
  Frame pred(in.width, in.height, FrameKind::Predicted);
  for (int k = 0; k < 9; ++k) {
    pred.depth[k] = 1.0;
    pred.intensity[k] = live.intensity[k];
  }
  NidScore s = frame_nid(live, pred, NidConfig{});
  CHECK(s.pixels_used == 9);
  CHECK(s.low_support);
  pred.depth[9] = 1.0;
  s = frame_nid(live, pred, NidConfig{});
  CHECK(s.pixels_used == 10);
  CHECK_FALSE(s.low_support);
}

TEST_CASE("frame nid rejects mismatched frames") {
  const Intrinsics in = testing::small_camera();
  const Frame a = testing::plane_frame(in, 1.0);
  const Frame b(8, 8, FrameKind::Predicted);
  CHECK_THROWS_AS(frame_nid(a, b, NidConfig{}), Error);
}
