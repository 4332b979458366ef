#pragma once

// Shared test scaffolding: a scripted task source for hand-computed checks
// and a synthetic Omniglot directory tree written as real PNG files.

#include <atomic>
#include <filesystem>
#include <vector>

#include "metagree/tasks.hpp"

namespace metagree::testing {

// Replays a fixed list of task samples in order, ignoring the rng. Only for
// single-threaded tests; the counter makes sampling order-dependent.
class FixedTaskSource final : public TaskSource {
 public:
  explicit FixedTaskSource(std::vector<TaskSample> samples, bool is_classification = false)
      : samples_(std::move(samples)), classification_(is_classification) {}

  TaskSample sample(Rng&) const override {
    const std::size_t i = next_.fetch_add(1) % samples_.size();
    return samples_[i];
  }
  bool classification() const override { return classification_; }
  std::size_t input_dim() const override { return samples_.front().adaptation.inputs.cols; }
  std::size_t output_dim() const override { return samples_.front().adaptation.targets.cols; }
  std::size_t support_size() const override { return samples_.front().adaptation.size(); }
  std::size_t query_size() const override { return samples_.front().query.size(); }

 private:
  std::vector<TaskSample> samples_;
  bool classification_;
  mutable std::atomic<std::size_t> next_{0};
};

// 8-bit grayscale PNG writer (test fixture only).
void write_gray_png(const std::filesystem::path& path,
                    const std::vector<unsigned char>& pixels, std::size_t width,
                    std::size_t height);

// Builds root/alphabet<a>/char<c>/img<i>.png with side x side images:
// white background, a few black "stroke" pixels at positions derived from
// (class, image) so every image in a class is distinct.
void make_omniglot_tree(const std::filesystem::path& root, std::size_t alphabets,
                        std::size_t chars_per_alphabet, std::size_t images_per_char,
                        std::size_t side);

}  // namespace metagree::testing
