#include "metagree/tasks.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

namespace metagree {

namespace {

Batch rows_by_index(const Batch& batch, const std::vector<std::size_t>& idx,
                    std::size_t begin, std::size_t end) {
  Batch out;
  out.loss_kind = batch.loss_kind;
  out.inputs = Matrix(end - begin, batch.inputs.cols);
  out.targets = Matrix(end - begin, batch.targets.cols);
  for (std::size_t r = begin; r < end; ++r) {
    const std::size_t src = idx[r];
    for (std::size_t c = 0; c < batch.inputs.cols; ++c)
      out.inputs.at(r - begin, c) = batch.inputs.at(src, c);
    for (std::size_t c = 0; c < batch.targets.cols; ++c)
      out.targets.at(r - begin, c) = batch.targets.at(src, c);
  }
  return out;
}

std::string describe_sine(const SineTask& t) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "sine a=%.6g phi=%.6g", t.amplitude, t.phase);
  return buf;
}

}  // namespace

SineTask sample_sine_task(Rng& rng) {
  SineTask t;
  t.amplitude = rng.uniform(0.1, 5.0);
  t.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  return t;
}

Batch sine_batch(const SineTask& task, std::size_t n_points, Rng& rng) {
  if (n_points == 0) throw ShapeError("sine_batch: n_points must be >= 1");
  Batch batch;
  batch.loss_kind = LossKind::mean_squared_error;
  batch.inputs = Matrix(n_points, 1);
  batch.targets = Matrix(n_points, 1);
  for (std::size_t r = 0; r < n_points; ++r) {
    const double x = rng.uniform(-5.0, 5.0);
    batch.inputs.at(r, 0) = x;
    batch.targets.at(r, 0) = task.amplitude * std::sin(x + task.phase);
  }
  return batch;
}

TaskBatchPlan split_sub_batches(const Batch& batch, std::size_t k, Rng& rng) {
  batch.validate();
  if (k == 0) throw ShapeError("split_sub_batches: k must be >= 1");
  const std::size_t n = batch.size();
  if (n < k) {
    throw ShapeError("split_sub_batches: " + std::to_string(n) + " examples cannot fill " +
                     std::to_string(k) + " sub-batches");
  }
  std::vector<std::size_t> perm;
  rng.shuffled_indices(n, perm);
  const std::size_t base = n / k;
  const std::size_t rem = n % k;
  TaskBatchPlan plan;
  plan.sub_batches.reserve(k);
  std::size_t begin = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t size = base + (i < rem ? 1 : 0);
    plan.sub_batches.push_back(rows_by_index(batch, perm, begin, begin + size));
    begin += size;
  }
  return plan;
}

FewShotTask sample_synthetic_classification(std::size_t n_way, std::size_t k_shot,
                                            std::size_t query_per_class,
                                            std::size_t dim, Rng& rng) {
  if (n_way < 2) throw ShapeError("sample_synthetic_classification: n_way must be >= 2");
  if (dim < 2) throw ShapeError("sample_synthetic_classification: dim must be >= 2");
  if (k_shot == 0 || query_per_class == 0) {
    throw ShapeError("sample_synthetic_classification: k_shot and query_per_class must be >= 1");
  }

  Matrix centers(n_way, dim);
  for (std::size_t c = 0; c < n_way; ++c)
    for (std::size_t d = 0; d < dim; ++d) centers.at(c, d) = rng.uniform(-5.0, 5.0);

  auto draw = [&](Batch& out, std::size_t per_class) {
    out.loss_kind = LossKind::cross_entropy;
    out.inputs = Matrix(n_way * per_class, dim);
    out.targets = Matrix(n_way * per_class, n_way);
    std::size_t r = 0;
    for (std::size_t c = 0; c < n_way; ++c) {
      for (std::size_t e = 0; e < per_class; ++e, ++r) {
        for (std::size_t d = 0; d < dim; ++d)
          out.inputs.at(r, d) = centers.at(c, d) + rng.normal();
        out.targets.at(r, c) = 1.0;
      }
    }
  };

  FewShotTask task;
  task.n_way = n_way;
  task.k_shot = k_shot;
  draw(task.support, k_shot);
  draw(task.query, query_per_class);
  return task;
}

FewShotTask sample_omniglot_task(const OmniglotStore& store, std::size_t n_way,
                                 std::size_t k_shot, std::size_t query_per_class,
                                 Rng& rng) {
  if (n_way < 2) throw ShapeError("sample_omniglot_task: n_way must be >= 2");
  const std::size_t need = k_shot + query_per_class;
  std::vector<std::size_t> eligible;
  for (std::size_t c = 0; c < store.class_count(); ++c)
    if (store.images[c].size() >= need) eligible.push_back(c);
  if (eligible.size() < n_way) {
    throw ShapeError("sample_omniglot_task: only " + std::to_string(eligible.size()) +
                     " classes have >= " + std::to_string(need) + " images, need " +
                     std::to_string(n_way));
  }

  // Partial Fisher-Yates: first n_way entries become the sampled classes.
  for (std::size_t j = 0; j < n_way; ++j) {
    const std::size_t swap_with = j + static_cast<std::size_t>(rng.below(eligible.size() - j));
    std::swap(eligible[j], eligible[swap_with]);
  }

  const std::size_t pixels = store.image_side * store.image_side;
  FewShotTask task;
  task.n_way = n_way;
  task.k_shot = k_shot;
  task.support.loss_kind = LossKind::cross_entropy;
  task.query.loss_kind = LossKind::cross_entropy;
  task.support.inputs = Matrix(n_way * k_shot, pixels);
  task.support.targets = Matrix(n_way * k_shot, n_way);
  task.query.inputs = Matrix(n_way * query_per_class, pixels);
  task.query.targets = Matrix(n_way * query_per_class, n_way);

  std::vector<std::size_t> order;
  for (std::size_t c = 0; c < n_way; ++c) {
    const auto& imgs = store.images[eligible[c]];
    rng.shuffled_indices(imgs.size(), order);
    for (std::size_t e = 0; e < k_shot; ++e) {
      const auto& img = imgs[order[e]];
      const std::size_t r = c * k_shot + e;
      std::copy(img.begin(), img.end(), task.support.inputs.data.begin() + r * pixels);
      task.support.targets.at(r, c) = 1.0;
    }
    for (std::size_t e = 0; e < query_per_class; ++e) {
      const auto& img = imgs[order[k_shot + e]];
      const std::size_t r = c * query_per_class + e;
      std::copy(img.begin(), img.end(), task.query.inputs.data.begin() + r * pixels);
      task.query.targets.at(r, c) = 1.0;
    }
  }
  return task;
}

TaskSample SineTaskSource::sample(Rng& rng) const {
  SineTask task = sample_sine_task(rng);
  TaskSample s;
  s.descriptor = describe_sine(task);
  s.adaptation = sine_batch(task, support_points_, rng);
  s.query = sine_batch(task, query_points_, rng);
  return s;
}

TaskSample SyntheticTaskSource::sample(Rng& rng) const {
  FewShotTask task = sample_synthetic_classification(n_way_, k_shot_, query_per_class_, dim_, rng);
  TaskSample s;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "synthetic %zu-way %zu-shot", n_way_, k_shot_);
  s.descriptor = buf;
  s.adaptation = std::move(task.support);
  s.query = std::move(task.query);
  return s;
}

TaskSample OmniglotTaskSource::sample(Rng& rng) const {
  FewShotTask task = sample_omniglot_task(*store_, n_way_, k_shot_, query_per_class_, rng);
  TaskSample s;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "omniglot %zu-way %zu-shot", n_way_, k_shot_);
  s.descriptor = buf;
  s.adaptation = std::move(task.support);
  s.query = std::move(task.query);
  return s;
}

}  // namespace metagree
