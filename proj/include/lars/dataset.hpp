#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "lars/model.hpp"
#include "lars/rng.hpp"
#include "lars/tensor.hpp"

namespace lars {

struct Dataset {
    Tensor inputs;            // [N x d]
    std::vector<int> labels;  // N entries
    std::size_t num_classes = 0;

    std::size_t size() const { return labels.size(); }
    bool empty() const { return labels.empty(); }
    std::size_t dim() const { return inputs.empty() ? 0 : inputs.cols(); }

    Batch slice(std::size_t begin, std::size_t end) const;
    Batch gather(std::span<const std::size_t> rows) const;
    // First min(n, size()) samples as a dataset.
    Dataset head(std::size_t n) const;
};

struct TrainTest {
    Dataset train;
    Dataset test;
};

struct BlobParams {
    std::size_t classes = 10;
    std::size_t dim = 32;
    std::size_t train_per_class = 1000;
    std::size_t test_per_class = 200;
    // Class centres are drawn with per-coordinate std `separation`; samples
    // scatter around their centre with per-coordinate std `spread`.
    double separation = 1.0;
    double spread = 1.0;

    friend bool operator==(const BlobParams&, const BlobParams&) = default;
};

// Gaussian class blobs. Train and test samples are separate draws; both
// splits are shuffled. Deterministic per rng state.
TrainTest make_synthetic(const BlobParams& params, Rng& rng);

// IDX (big-endian) images (magic 0x00000803) and labels (magic 0x00000801).
// Pixels are scaled to [0, 1]. Throws FormatError on bad magic, truncation or
// a count mismatch between the files.
Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
                 std::size_t num_classes = 10);

}  // namespace lars
