#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <set>

#include "metagree/tasks.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace metagree;

namespace fs = std::filesystem;

namespace {

// Rows as comparable tuples (inputs then targets) for multiset checks.
std::vector<std::vector<double>> batch_rows(const Batch& b) {
  std::vector<std::vector<double>> rows;
  for (std::size_t r = 0; r < b.size(); ++r) {
    std::vector<double> row;
    for (std::size_t c = 0; c < b.inputs.cols; ++c) row.push_back(b.inputs.at(r, c));
    for (std::size_t c = 0; c < b.targets.cols; ++c) row.push_back(b.targets.at(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

fs::path fresh_temp_dir(const char* name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("sine task sampling: reproducible and in range") {
  Rng a(42), b(42);
  const SineTask t1 = sample_sine_task(a);
  const SineTask t2 = sample_sine_task(b);
  CHECK(t1.amplitude == t2.amplitude);
  CHECK(t1.phase == t2.phase);

  Rng rng(1);
  double amp_sum = 0.0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const SineTask t = sample_sine_task(rng);
    CHECK(t.amplitude >= 0.1);
    CHECK(t.amplitude <= 5.0);
    CHECK(t.phase >= 0.0);
    CHECK(t.phase < 2.0 * std::numbers::pi);
    amp_sum += t.amplitude;
  }
  // mean of U[0.1, 5.0] is 2.55; allow 3 standard errors
  const double se = (4.9 / std::sqrt(12.0)) / std::sqrt(static_cast<double>(n));
  CHECK(std::abs(amp_sum / n - 2.55) < 3.0 * se);
}

TEST_CASE("sine_batch: targets follow the wave") {
  Rng rng(3);
  SineTask task{2.0, std::numbers::pi / 2.0};
  const Batch b = sine_batch(task, 40, rng);
  CHECK(b.size() == 40);
  CHECK(b.loss_kind == LossKind::mean_squared_error);
  for (std::size_t r = 0; r < b.size(); ++r) {
    const double x = b.inputs.at(r, 0);
    CHECK(x >= -5.0);
    CHECK(x <= 5.0);
    CHECK(b.targets.at(r, 0) == 2.0 * std::sin(x + task.phase));
    CHECK(std::abs(b.targets.at(r, 0)) <= task.amplitude);
  }
  // spot values: phase pi/2 turns sine into cosine
  SineTask flat{1.0, 0.0};
  Batch probe;
  probe.inputs = Matrix(1, 1);
  probe.targets = Matrix(1, 1);
  (void)probe;
  CHECK(flat.amplitude * std::sin(0.0 + flat.phase) == 0.0);
  CHECK(task.amplitude * std::sin(0.0 + task.phase) == 2.0);
}

TEST_CASE("split_sub_batches: 10 examples into 5 pairs") {
  Rng rng(1);
  SineTask task{1.0, 0.0};
  const Batch b = sine_batch(task, 10, rng);
  const TaskBatchPlan plan = split_sub_batches(b, 5, rng);
  REQUIRE(plan.sub_batches.size() == 5);
  for (const Batch& sub : plan.sub_batches) CHECK(sub.size() == 2);
}

TEST_CASE("split_sub_batches: k=1 keeps the multiset") {
  Rng rng(2);
  const Batch b = sine_batch(SineTask{1.5, 0.3}, 7, rng);
  const TaskBatchPlan plan = split_sub_batches(b, 1, rng);
  REQUIRE(plan.sub_batches.size() == 1);
  auto got = batch_rows(plan.sub_batches[0]);
  auto want = batch_rows(b);
  std::sort(got.begin(), got.end());
  std::sort(want.begin(), want.end());
  CHECK(got == want);
}

TEST_CASE("split_sub_batches: 7 into 3 gives sizes {3,2,2}") {
  Rng rng(4);
  const Batch b = sine_batch(SineTask{1.0, 0.0}, 7, rng);
  const TaskBatchPlan plan = split_sub_batches(b, 3, rng);
  std::vector<std::size_t> sizes;
  for (const Batch& sub : plan.sub_batches) sizes.push_back(sub.size());
  std::sort(sizes.begin(), sizes.end());
  CHECK(sizes == std::vector<std::size_t>{2, 2, 3});
}

TEST_CASE("split_sub_batches: partition property for all n<=20, k<=n") {
  Rng rng(9);
  for (std::size_t n = 1; n <= 20; ++n) {
    const Batch b = sine_batch(SineTask{2.0, 1.0}, n, rng);
    for (std::size_t k = 1; k <= n; ++k) {
      const TaskBatchPlan plan = split_sub_batches(b, k, rng);
      REQUIRE(plan.sub_batches.size() == k);
      std::size_t min_size = n, max_size = 0;
      std::vector<std::vector<double>> all;
      for (const Batch& sub : plan.sub_batches) {
        min_size = std::min(min_size, sub.size());
        max_size = std::max(max_size, sub.size());
        for (auto& row : batch_rows(sub)) all.push_back(std::move(row));
      }
      CHECK(max_size - min_size <= 1);
      auto want = batch_rows(b);
      std::sort(all.begin(), all.end());
      std::sort(want.begin(), want.end());
      CHECK(all == want);
    }
  }
}

TEST_CASE("split_sub_batches: too few examples is rejected") {
  Rng rng(5);
  const Batch b = sine_batch(SineTask{1.0, 0.0}, 3, rng);
  CHECK_THROWS_AS(split_sub_batches(b, 4, rng), ShapeError);
}

TEST_CASE("synthetic classification: deterministic, balanced, one-hot") {
  Rng a(11), b(11);
  const FewShotTask t1 = sample_synthetic_classification(5, 3, 2, 4, a);
  const FewShotTask t2 = sample_synthetic_classification(5, 3, 2, 4, b);
  CHECK(t1.support.inputs.data == t2.support.inputs.data);
  CHECK(t1.query.inputs.data == t2.query.inputs.data);

  CHECK(t1.support.size() == 15);
  CHECK(t1.query.size() == 10);
  std::vector<std::size_t> counts(5, 0);
  for (std::size_t r = 0; r < t1.support.size(); ++r) {
    double sum = 0.0;
    for (std::size_t c = 0; c < 5; ++c) {
      const double v = t1.support.targets.at(r, c);
      CHECK((v == 0.0 || v == 1.0));
      sum += v;
      if (v == 1.0) ++counts[c];
    }
    CHECK(sum == 1.0);
  }
  for (std::size_t c = 0; c < 5; ++c) CHECK(counts[c] == 3);
  CHECK_THROWS_AS(sample_synthetic_classification(1, 1, 1, 4, a), ShapeError);
  CHECK_THROWS_AS(sample_synthetic_classification(3, 1, 1, 1, a), ShapeError);
}

TEST_CASE("synthetic classification: nearest-centroid oracle on separated tasks") {
  Rng rng(21);
  int tested = 0;
  while (tested < 20) {
    const FewShotTask task = sample_synthetic_classification(5, 5, 10, 8, rng);
    // Keep only tasks whose estimated centers are >= 10 apart.
    const auto centroids = testing::support_centroids(task);
    double min_dist = 1e300;
    for (std::size_t i = 0; i < centroids.size(); ++i) {
      for (std::size_t j = i + 1; j < centroids.size(); ++j) {
        double d2 = 0.0;
        for (std::size_t d = 0; d < centroids[i].size(); ++d) {
          const double diff = centroids[i][d] - centroids[j][d];
          d2 += diff * diff;
        }
        min_dist = std::min(min_dist, std::sqrt(d2));
      }
    }
    if (min_dist < 10.0) continue;
    ++tested;
    CHECK(testing::nearest_centroid_accuracy(task) >= 0.95);
  }
}

TEST_CASE("omniglot: loads a synthetic tree") {
  const fs::path root = fresh_temp_dir("metagree_omni_ok");
  testing::make_omniglot_tree(root, 2, 1, 20, 14);
  const OmniglotStore store = load_omniglot(root, 14);
  CHECK(store.class_count() == 2);
  CHECK(store.class_ids[0] == "alphabet0/char0");
  CHECK(store.class_ids[1] == "alphabet1/char0");
  CHECK(store.skipped_files == 0);
  for (const auto& cls : store.images) {
    CHECK(cls.size() == 20);
    for (const auto& img : cls) {
      CHECK(img.size() == 14 * 14);
      for (double v : img) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
      }
    }
  }
}

TEST_CASE("omniglot: unreadable files are skipped and counted") {
  const fs::path root = fresh_temp_dir("metagree_omni_bad");
  testing::make_omniglot_tree(root, 1, 1, 3, 8);
  {
    // one corrupt png alongside the good ones
    FILE* f = std::fopen((root / "alphabet0/char0/img99.png").c_str(), "wb");
    std::fputs("not a png", f);
    std::fclose(f);
  }
  const OmniglotStore store = load_omniglot(root, 8);
  CHECK(store.class_count() == 1);
  CHECK(store.images[0].size() == 3);
  CHECK(store.skipped_files == 1);
}

TEST_CASE("omniglot: empty store is fatal") {
  const fs::path root = fresh_temp_dir("metagree_omni_empty");
  CHECK_THROWS_AS(load_omniglot(root, 8), ConfigError);
  CHECK_THROWS_AS(load_omniglot(root / "missing", 8), ConfigError);
}

TEST_CASE("omniglot: episode sampling") {
  const fs::path root = fresh_temp_dir("metagree_omni_tasks");
  testing::make_omniglot_tree(root, 3, 4, 6, 8);  // 12 classes, 6 images each
  const OmniglotStore store = load_omniglot(root, 8);
  REQUIRE(store.class_count() == 12);

  Rng rng(7);
  const FewShotTask task = sample_omniglot_task(store, 5, 1, 3, rng);
  CHECK(task.support.size() == 5);
  CHECK(task.query.size() == 15);
  CHECK(task.support.inputs.cols == 64);

  // support and query images are disjoint
  auto support_rows = batch_rows(task.support);
  auto query_rows = batch_rows(task.query);
  for (const auto& s : support_rows) {
    std::vector<double> s_pixels(s.begin(), s.begin() + 64);
    for (const auto& q : query_rows) {
      std::vector<double> q_pixels(q.begin(), q.begin() + 64);
      CHECK(s_pixels != q_pixels);
    }
  }

  Rng r1(123), r2(123);
  const FewShotTask a = sample_omniglot_task(store, 5, 2, 2, r1);
  const FewShotTask b = sample_omniglot_task(store, 5, 2, 2, r2);
  CHECK(a.support.inputs.data == b.support.inputs.data);
  CHECK(a.query.inputs.data == b.query.inputs.data);

  CHECK_THROWS_AS(sample_omniglot_task(store, 13, 1, 1, rng), ShapeError);
  CHECK_THROWS_AS(sample_omniglot_task(store, 5, 4, 3, rng), ShapeError);
}

TEST_CASE("omniglot: background split has 964 classes when available") {
  const char* root = std::getenv("METAGREE_OMNIGLOT_ROOT");
  if (!root) return;  // dataset not present in this environment
  const OmniglotStore store = load_omniglot(root, 14);
  CHECK(store.class_count() == 964);
}

TEST_CASE("task sources: dims and sample shapes") {
  SineTaskSource sine(10, 50);
  CHECK(sine.input_dim() == 1);
  CHECK(sine.support_size() == 10);
  CHECK(sine.query_size() == 50);
  Rng rng(3);
  const TaskSample s = sine.sample(rng);
  CHECK(s.adaptation.size() == 10);
  CHECK(s.query.size() == 50);
  CHECK(!sine.classification());

  SyntheticTaskSource synth(5, 1, 15, 8);
  CHECK(synth.input_dim() == 8);
  CHECK(synth.output_dim() == 5);
  CHECK(synth.support_size() == 5);
  CHECK(synth.classification());
  const TaskSample c = synth.sample(rng);
  CHECK(c.adaptation.size() == 5);
  CHECK(c.query.size() == 75);
  CHECK(c.adaptation.loss_kind == LossKind::cross_entropy);
}
