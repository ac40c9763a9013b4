#include "lars/dataset.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <numeric>
#include <stdexcept>
#include <string>

#include "lars/errors.hpp"

namespace lars {

Batch Dataset::slice(std::size_t begin, std::size_t end) const {
    if (begin >= end || end > size()) throw std::out_of_range("Dataset::slice: bad range");
    return {slice_rows(inputs, begin, end), std::vector<int>(labels.begin() + static_cast<std::ptrdiff_t>(begin),
                                                             labels.begin() + static_cast<std::ptrdiff_t>(end))};
}

Batch Dataset::gather(std::span<const std::size_t> rows) const {
    Batch b{gather_rows(inputs, rows), {}};
    b.labels.reserve(rows.size());
    for (auto r : rows) b.labels.push_back(labels[r]);
    return b;
}

Dataset Dataset::head(std::size_t n) const {
    n = std::min(n, size());
    if (n == 0) return {Tensor{}, {}, num_classes};
    auto b = slice(0, n);
    return {std::move(b.inputs), std::move(b.labels), num_classes};
}

namespace {

Dataset draw_split(const std::vector<Tensor>& centres, std::size_t per_class, double spread, Rng& rng) {
    const std::size_t classes = centres.size(), dim = centres.front().size();
    const std::size_t n = classes * per_class;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order);

    Dataset d{Tensor({n, dim}), std::vector<int>(n), classes};
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t row = order[k];
        const std::size_t cls = k / per_class;
        d.labels[row] = static_cast<int>(cls);
        for (std::size_t j = 0; j < dim; ++j) d.inputs.at(row, j) = rng.normal(centres[cls][j], spread);
    }
    return d;
}

}  // namespace

TrainTest make_synthetic(const BlobParams& p, Rng& rng) {
    if (p.classes < 2) throw std::invalid_argument("make_synthetic: need at least 2 classes");
    if (p.dim == 0) throw std::invalid_argument("make_synthetic: dim must be positive");
    if (p.train_per_class == 0 || p.test_per_class == 0)
        throw std::invalid_argument("make_synthetic: per-class counts must be positive");
    if (!(p.separation >= 0.0) || !(p.spread >= 0.0))
        throw std::invalid_argument("make_synthetic: separation and spread must be non-negative");

    std::vector<Tensor> centres;
    for (std::size_t c = 0; c < p.classes; ++c) centres.push_back(gaussian(rng, {p.dim}, 0.0, p.separation));
    TrainTest out;
    out.train = draw_split(centres, p.train_per_class, p.spread, rng);
    out.test = draw_split(centres, p.test_per_class, p.spread, rng);
    return out;
}

namespace {

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open IDX file " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<unsigned char>& buf, std::size_t offset, const std::filesystem::path& path) {
    if (buf.size() < offset + 4) throw FormatError("truncated IDX header in " + path.string());
    return (std::uint32_t{buf[offset]} << 24) | (std::uint32_t{buf[offset + 1]} << 16) |
           (std::uint32_t{buf[offset + 2]} << 8) | std::uint32_t{buf[offset + 3]};
}

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

}  // namespace

Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
                 std::size_t num_classes) {
    const auto images = read_file(images_path);
    const auto labels = read_file(labels_path);

    if (read_be32(images, 0, images_path) != kImagesMagic)
        throw FormatError("bad magic in IDX images file " + images_path.string());
    if (read_be32(labels, 0, labels_path) != kLabelsMagic)
        throw FormatError("bad magic in IDX labels file " + labels_path.string());

    const std::size_t n = read_be32(images, 4, images_path);
    const std::size_t rows = read_be32(images, 8, images_path);
    const std::size_t cols = read_be32(images, 12, images_path);
    const std::size_t n_labels = read_be32(labels, 4, labels_path);
    if (n != n_labels)
        throw FormatError("IDX count mismatch: " + std::to_string(n) + " images vs " + std::to_string(n_labels) +
                          " labels");
    if (n == 0 || rows == 0 || cols == 0) throw FormatError("IDX images file declares an empty set");

    const std::size_t pixels = rows * cols;
    if (images.size() < 16 + n * pixels) throw FormatError("truncated IDX images file " + images_path.string());
    if (labels.size() < 8 + n) throw FormatError("truncated IDX labels file " + labels_path.string());

    Dataset d{Tensor({n, pixels}), std::vector<int>(n), num_classes};
    for (std::size_t i = 0; i < n * pixels; ++i) d.inputs[i] = static_cast<double>(images[16 + i]) / 255.0;
    for (std::size_t i = 0; i < n; ++i) {
        const int label = labels[8 + i];
        if (static_cast<std::size_t>(label) >= num_classes)
            throw FormatError("IDX label " + std::to_string(label) + " outside [0, " + std::to_string(num_classes) +
                              ")");
        d.labels[i] = label;
    }
    return d;
}

}  // namespace lars
