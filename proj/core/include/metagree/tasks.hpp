#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "metagree/numcore.hpp"
#include "metagree/rng.hpp"

namespace metagree {

// One sine regression task: f(x) = amplitude * sin(x + phase).
struct SineTask {
  double amplitude = 1.0;  // in [0.1, 5.0]
  double phase = 0.0;      // in [0, 2*pi)
};

// amplitude ~ U[0.1, 5.0], phase ~ U[0, 2*pi).
SineTask sample_sine_task(Rng& rng);

// n_points inputs uniform in [-5, 5] with exact sine targets, MSE loss.
Batch sine_batch(const SineTask& task, std::size_t n_points, Rng& rng);

// The per-task inner-loop schedule: one sub-batch per gradient step.
struct TaskBatchPlan {
  std::vector<Batch> sub_batches;
};

// Random permutation of the batch partitioned into k near-equal parts
// (sizes differ by at most 1); every example lands in exactly one part.
TaskBatchPlan split_sub_batches(const Batch& batch, std::size_t k, Rng& rng);

// N-way K-shot episode: balanced one-hot support plus a disjoint query set.
struct FewShotTask {
  std::size_t n_way = 0;
  std::size_t k_shot = 0;
  Batch support;
  Batch query;
};

// Synthetic stand-in for image episodes: each class is a unit-variance
// isotropic Gaussian cloud around a center drawn uniform in [-5,5]^dim.
FewShotTask sample_synthetic_classification(std::size_t n_way, std::size_t k_shot,
                                            std::size_t query_per_class,
                                            std::size_t dim, Rng& rng);

// Downsampled, inverted handwriting images grouped by "alphabet/character".
// Pixels are in [0,1] with strokes near 1 and background near 0.
struct OmniglotStore {
  std::size_t image_side = 0;
  std::vector<std::string> class_ids;                    // sorted
  std::vector<std::vector<std::vector<double>>> images;  // [class][image][pixel]
  std::size_t skipped_files = 0;

  std::size_t class_count() const { return class_ids.size(); }
};

// Walks root/alphabet/character/*.png, grayscale-decodes, bilinearly
// downsamples to image_side x image_side, inverts and scales to [0,1].
// Unreadable files are skipped with a warning on stderr and counted;
// an empty store is a fatal ConfigError.
OmniglotStore load_omniglot(const std::filesystem::path& root, std::size_t image_side);

// Classes sampled without replacement, then disjoint support/query images
// per class; inputs are flattened to image_side^2 reals.
FewShotTask sample_omniglot_task(const OmniglotStore& store, std::size_t n_way,
                                 std::size_t k_shot, std::size_t query_per_class,
                                 Rng& rng);

// One sampled task as the training and evaluation loops consume it:
// the adaptation set feeds the inner loop, the query set is held out.
struct TaskSample {
  std::string descriptor;
  Batch adaptation;
  Batch query;
};

class TaskSource {
 public:
  virtual ~TaskSource() = default;
  virtual TaskSample sample(Rng& rng) const = 0;
  virtual bool classification() const = 0;
  virtual std::size_t input_dim() const = 0;
  virtual std::size_t output_dim() const = 0;
  virtual std::size_t support_size() const = 0;
  virtual std::size_t query_size() const = 0;
};

class SineTaskSource final : public TaskSource {
 public:
  SineTaskSource(std::size_t support_points, std::size_t query_points)
      : support_points_(support_points), query_points_(query_points) {}

  TaskSample sample(Rng& rng) const override;
  bool classification() const override { return false; }
  std::size_t input_dim() const override { return 1; }
  std::size_t output_dim() const override { return 1; }
  std::size_t support_size() const override { return support_points_; }
  std::size_t query_size() const override { return query_points_; }

 private:
  std::size_t support_points_;
  std::size_t query_points_;
};

class SyntheticTaskSource final : public TaskSource {
 public:
  SyntheticTaskSource(std::size_t n_way, std::size_t k_shot,
                      std::size_t query_per_class, std::size_t dim)
      : n_way_(n_way), k_shot_(k_shot), query_per_class_(query_per_class), dim_(dim) {}

  TaskSample sample(Rng& rng) const override;
  bool classification() const override { return true; }
  std::size_t input_dim() const override { return dim_; }
  std::size_t output_dim() const override { return n_way_; }
  std::size_t support_size() const override { return n_way_ * k_shot_; }
  std::size_t query_size() const override { return n_way_ * query_per_class_; }

 private:
  std::size_t n_way_;
  std::size_t k_shot_;
  std::size_t query_per_class_;
  std::size_t dim_;
};

class OmniglotTaskSource final : public TaskSource {
 public:
  OmniglotTaskSource(std::shared_ptr<const OmniglotStore> store, std::size_t n_way,
                     std::size_t k_shot, std::size_t query_per_class)
      : store_(std::move(store)), n_way_(n_way), k_shot_(k_shot),
        query_per_class_(query_per_class) {}

  TaskSample sample(Rng& rng) const override;
  bool classification() const override { return true; }
  std::size_t input_dim() const override { return store_->image_side * store_->image_side; }
  std::size_t output_dim() const override { return n_way_; }
  std::size_t support_size() const override { return n_way_ * k_shot_; }
  std::size_t query_size() const override { return n_way_ * query_per_class_; }

 private:
  std::shared_ptr<const OmniglotStore> store_;
  std::size_t n_way_;
  std::size_t k_shot_;
  std::size_t query_per_class_;
};

}  // namespace metagree
