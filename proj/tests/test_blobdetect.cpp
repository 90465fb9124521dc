#include "doctest.h"
#include "approx.hpp"

#include "dslit/blobdetect.hpp"
#include "dslit/core.hpp"
#include "dslit/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

using namespace dslit;

namespace {

constexpr double kPi = constants::pi;

struct Spot {
  double x;
  double y;
};

void add_spot(Image& img, Spot s, double amplitude, double sigma) {
  for (Eigen::Index r = 0; r < img.rows(); ++r)
    for (Eigen::Index c = 0; c < img.cols(); ++c) {
      const double d2 = std::pow(double(c) - s.x, 2) + std::pow(double(r) - s.y, 2);
      img(r, c) += amplitude * std::exp(-d2 / (2 * sigma * sigma));
    }
}

// Gaussian white noise (Box-Muller) on top of a constant pedestal.
void add_noise(Image& img, double pedestal, double sigma, SplitMix64& rng) {
  for (Eigen::Index i = 0; i < img.size(); ++i) {
    const double u1 = 1.0 - rng.uniform();
    const double u2 = rng.uniform();
    img.data()[i] += pedestal + sigma * std::sqrt(-2.0 * std::log(u1)) * std::cos(2 * kPi * u2);
  }
}

double min_response(const ResponseStack& s, std::size_t k) { return s.levels[k].minCoeff(); }

} // namespace

TEST_CASE("scale ladder") {
  const auto ladder = make_scale_ladder();
  REQUIRE(ladder.size() == 11);
  CHECK(ladder.front() == 2.0);
  CHECK(ladder.back() <= 30.0);
  for (std::size_t i = 1; i < ladder.size(); ++i) CHECK(ladder[i] / ladder[i - 1] == approx(1.3));
  CHECK_THROWS_AS(make_scale_ladder(0.0, 30.0, 1.3), DomainError);
  CHECK_THROWS_AS(make_scale_ladder(2.0, 30.0, 1.0), DomainError);
}

TEST_CASE("discrete Gaussian kernel") {
  for (const double t : {0.3, 2.0, 9.0, 40.0}) {
    const auto k = discrete_gaussian_kernel(t);
    const auto radius = int(k.size() / 2);
    CHECK(std::accumulate(k.begin(), k.end(), 0.0) == approx(1.0).epsilon(1e-14));
    double var = 0.0;
    for (int n = -radius; n <= radius; ++n) var += double(n * n) * k[std::size_t(n + radius)];
    // The discrete Gaussian has variance exactly t.
    CHECK(var == approx(t).epsilon(1e-9));
    CHECK(k[std::size_t(radius - 1)] == approx(k[std::size_t(radius + 1)]).epsilon(1e-15));
  }
  CHECK_THROWS_AS(discrete_gaussian_kernel(0.0), DomainError);
}

TEST_CASE("scale_space_response: constant frame") {
  const Image flat = Image::Constant(40, 60, 123.0);
  const auto ladder = make_scale_ladder();
  const auto stack = scale_space_response(flat, ladder);
  REQUIRE(stack.levels.size() == ladder.size());
  for (const auto& level : stack.levels) CHECK(level.abs().maxCoeff() < 1e-9);
}

TEST_CASE("scale_space_response: extremum at t = sigma^2") {
  for (const double sigma : {2.0, 3.0}) {
    Image img = Image::Zero(64, 64);
    add_spot(img, {32, 32}, 100.0, sigma);
    std::vector<double> scales;
    for (double t = 1.0; t <= 20.0; t += 0.25) scales.push_back(t);
    const auto stack = scale_space_response(img, scales);
    std::size_t best = 0;
    for (std::size_t k = 0; k < scales.size(); ++k)
      if (min_response(stack, k) < min_response(stack, best)) best = k;
    CHECK(scales[best] == approx(sigma * sigma).epsilon(0.15));
    // Analytic scale-normalized Laplacian at the centre: -A/2 at t = sigma^2.
    CHECK(-min_response(stack, best) == approx(50.0).epsilon(0.05));
  }
}

TEST_CASE("scale_space_response is linear") {
  Image a = Image::Zero(32, 48);
  SplitMix64 rng(5);
  add_noise(a, 10.0, 3.0, rng);
  add_spot(a, {20, 15}, 70.0, 2.5);
  const auto ladder = make_scale_ladder();
  const auto s1 = scale_space_response(a, ladder);
  const auto s3 = scale_space_response(Image(3.5 * a), ladder);
  for (std::size_t k = 0; k < ladder.size(); ++k) {
    const double scale = s1.levels[k].abs().maxCoeff();
    CHECK((s3.levels[k] - 3.5 * s1.levels[k]).abs().maxCoeff() <= 1e-9 * scale);
  }
}

TEST_CASE("scale_space_response rejects bad scale lists") {
  const Image img = Image::Zero(8, 8);
  CHECK_THROWS_AS(scale_space_response(img, std::vector<double>{}), DomainError);
  CHECK_THROWS_AS(scale_space_response(img, std::vector<double>{2.0, 1.0, 3.0}), DomainError);
  CHECK_THROWS_AS(scale_space_response(img, std::vector<double>{2.0, 2.0, 3.0}), DomainError);
  CHECK_THROWS_AS(scale_space_response(img, std::vector<double>{-1.0, 2.0}), DomainError);
  CHECK_THROWS_AS(detect_blobs(img, std::vector<double>{2.0, 3.0}), DomainError);
}

TEST_CASE("detect_blobs: single noisy spot") {
  const auto ladder = make_scale_ladder();
  SplitMix64 rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    Image img = Image::Zero(48, 96);
    const Spot s{30.0 + 20 * rng.uniform(), 18.0 + 10 * rng.uniform()};
    add_spot(img, s, 100.0, 3.0);
    add_noise(img, 20.0, 10.0, rng); // SNR 10
    const auto found = detect_blobs(img, ladder, BlobThreshold{0.0, 5.0, 0.0});
    REQUIRE(found.blobs.size() == 1);
    const auto& b = found.blobs.front();
    CHECK(std::hypot(b.x - s.x, b.y - s.y) <= 0.5);
    CHECK(b.scale_t >= 7.0);
    CHECK(b.scale_t <= 11.0);
    CHECK(b.response < 0.0);
    CHECK(std::abs(b.response) > found.threshold);
  }
}

TEST_CASE("detect_blobs: blank frame") {
  const auto ladder = make_scale_ladder();
  CHECK(detect_blobs(Image(Image::Zero(48, 256)), ladder).blobs.empty());
  SplitMix64 rng(2);
  Image noise = Image::Zero(48, 256);
  add_noise(noise, 20.0, 10.0, rng);
  CHECK(detect_blobs(noise, ladder, BlobThreshold{0.0, 5.0, 0.0}).blobs.empty());
}

TEST_CASE("detect_blobs: two spots six sigma apart") {
  const auto ladder = make_scale_ladder();
  Image img = Image::Zero(48, 96);
  const Spot a{30.3, 24.1};
  const Spot b{48.3 + 0.4, 23.6};
  add_spot(img, a, 1000.0, 3.0);
  add_spot(img, b, 1000.0, 3.0);
  const auto found = detect_blobs(img, ladder);
  REQUIRE(found.blobs.size() == 2);
  auto blobs = found.blobs;
  std::sort(blobs.begin(), blobs.end(), [](const auto& p, const auto& q) { return p.x < q.x; });
  CHECK(std::hypot(blobs[0].x - a.x, blobs[0].y - a.y) <= 0.5);
  CHECK(std::hypot(blobs[1].x - b.x, blobs[1].y - b.y) <= 0.5);
}

TEST_CASE("detect_blobs: detected scale follows the spot width") {
  const auto ladder = make_scale_ladder(2.0, 80.0, 1.3);
  for (const double sigma : {2.0, 2.5, 3.0, 4.0, 5.0, 6.0}) {
    Image img = Image::Zero(80, 80);
    add_spot(img, {39.6, 40.2}, 1000.0, sigma);
    const auto found = detect_blobs(img, ladder);
    REQUIRE(found.blobs.size() == 1);
    const double ratio = found.blobs.front().scale_t / (sigma * sigma);
    CHECK(ratio >= 0.8);
    CHECK(ratio <= 1.2);
  }
}

TEST_CASE("detect_blobs: spots at the border are dropped and counted") {
  Image img = Image::Zero(48, 96);
  add_spot(img, {5.0, 24.0}, 1000.0, 3.0);
  add_spot(img, {50.0, 24.0}, 1000.0, 3.0);
  const auto found = detect_blobs(img, make_scale_ladder());
  REQUIRE(found.blobs.size() == 1);
  CHECK(found.blobs.front().x == approx(50.0).epsilon(0.01));
  CHECK(found.border_discarded >= 1);
}

TEST_CASE("detect_blobs: recall and precision on seeded synthetic frames") {
  const auto ladder = make_scale_ladder();
  const double sigma = 3.0;
  SplitMix64 rng(2024);
  std::size_t truth = 0, found_total = 0, matched = 0;
  for (int trial = 0; trial < 100; ++trial) {
    Image img = Image::Zero(48, 256);
    std::vector<Spot> spots;
    const int n = 1 + int(5 * rng.uniform());
    while (int(spots.size()) < n) {
      const Spot s{12 + 231 * rng.uniform(), 12 + 23 * rng.uniform()};
      const bool clear = std::all_of(spots.begin(), spots.end(),
                                     [&](const Spot& o) { return std::hypot(o.x - s.x, o.y - s.y) >= 6 * sigma; });
      if (clear) spots.push_back(s);
    }
    for (const auto& s : spots) add_spot(img, s, 100.0, sigma);
    add_noise(img, 20.0, 10.0, rng);
    const auto blobs = detect_blobs(img, ladder, BlobThreshold{0.0, 5.0, 0.0}).blobs;
    truth += spots.size();
    found_total += blobs.size();
    for (const auto& s : spots)
      if (std::any_of(blobs.begin(), blobs.end(),
                      [&](const BlobDescriptor& b) { return std::hypot(b.x - s.x, b.y - s.y) <= 1.0; }))
        ++matched;
  }
  const double recall = double(matched) / double(truth);
  const double precision = double(matched) / double(found_total);
  CHECK(recall >= 0.99);
  CHECK(precision >= 0.99);
}

TEST_CASE("detect_blobs on rendered frames") {
  FrameGeometry g;
  const std::vector<DetectionEvent> events = {{0, 0.5, g.x0 + 100.4 * g.pitch, g.y0 + 20.7 * g.pitch}};
  const auto frame = render_frame(events, 0.0, 1.0, g, RenderSettings{}, 99);
  const auto found = detect_blobs(frame, make_scale_ladder());
  REQUIRE(found.blobs.size() == 1);
  CHECK(found.blobs.front().x == approx(100.4).epsilon(0.005));
  CHECK(found.blobs.front().y == approx(20.7).epsilon(0.025));
  // Sparse background: the MAD estimate collapses and the floor applies.
  CHECK(found.threshold == 50.0);
}

TEST_CASE("build-up: empty stream") {
  const auto r = accumulate_buildup({}, CanvasSpec{64, 32, 1.0, 0.0, 0.0, {}});
  CHECK(r.image.n_events == 0);
  CHECK((r.image.canvas == 0.0).all());
  CHECK(r.snapshots.empty());
  CHECK_THROWS_AS(BuildUpAccumulator(CanvasSpec{0, 32, 1.0, 0.0, 0.0, {}}), DomainError);
  CHECK_THROWS_AS(BuildUpAccumulator(CanvasSpec{8, 8, 1.0, 0.0, 0.0, {3, 3}}), DomainError);
}

TEST_CASE("build-up: stamps have unit integral") {
  BuildUpAccumulator acc(CanvasSpec{64, 64, 1.0, 0.0, 0.0, {}});
  acc.add({31.3, 30.8, 9.0, -500.0});
  CHECK(acc.image().canvas.sum() == approx(1.0).epsilon(1e-6));
  CHECK(acc.image().canvas.minCoeff() >= 0.0);
  CHECK(acc.image().n_events == 1);
}

TEST_CASE("build-up: permutation invariance, merging and off-canvas skips") {
  SplitMix64 rng(10);
  std::vector<BlobDescriptor> blobs;
  for (int i = 0; i < 300; ++i)
    blobs.push_back({-10 + 276 * rng.uniform(), 48 * rng.uniform(), 7 + 4 * rng.uniform(), -100.0});
  const CanvasSpec spec{256, 48, 1.0, 0.0, 0.0, {}};
  const auto forward = accumulate_buildup(blobs, spec);
  auto shuffled = blobs;
  for (std::size_t i = shuffled.size() - 1; i > 0; --i)
    std::swap(shuffled[i], shuffled[std::size_t(rng.uniform() * double(i + 1))]);
  const auto permuted = accumulate_buildup(shuffled, spec);
  CHECK((forward.image.canvas - permuted.image.canvas).abs().maxCoeff() <= 1e-12);
  CHECK(forward.image.n_events == permuted.image.n_events);

  std::size_t off = 0;
  for (const auto& b : blobs)
    if (b.x < -0.5 || b.x >= 255.5 || b.y >= 47.5) ++off;
  CHECK(off > 0);
  CHECK(forward.skipped == off);
  CHECK(forward.image.n_events + off == blobs.size());

  BuildUpAccumulator left(spec), right(spec);
  for (std::size_t i = 0; i < blobs.size(); ++i) (i < 120 ? left : right).add(blobs[i]);
  left.merge(right);
  CHECK((left.image().canvas - forward.image.canvas).abs().maxCoeff() <= 1e-12);
  CHECK(left.image().n_events == forward.image.n_events);
  CHECK(left.skipped() == forward.skipped);
}

TEST_CASE("build-up: checkpoints") {
  const std::vector<std::size_t> marks = {2, 7, 209, 1004, 6235};
  std::vector<BlobDescriptor> blobs;
  SplitMix64 rng(4);
  for (int i = 0; i < 6235; ++i) blobs.push_back({20 + 200 * rng.uniform(), 10 + 28 * rng.uniform(), 9.0, -300.0});
  const auto r = accumulate_buildup(blobs, CanvasSpec{256, 48, 1.0, 0.0, 0.0, marks});
  REQUIRE(r.snapshots.size() == marks.size());
  for (std::size_t i = 0; i < marks.size(); ++i) {
    CHECK(r.snapshots[i].n_events == marks[i]);
    CHECK(r.snapshots[i].canvas.sum() == approx(double(marks[i])).epsilon(1e-3));
  }
  CHECK((r.snapshots.back().canvas == r.image.canvas).all());
}
