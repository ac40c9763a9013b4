#include "lars/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "lars/errors.hpp"

namespace lars {

std::size_t shape_size(const Shape& shape) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

std::string shape_to_string(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ", ";
        os << shape[i];
    }
    os << ']';
    return os.str();
}

namespace {

void validate_shape(const Shape& shape) {
    if (shape.empty()) throw std::invalid_argument("tensor shape must have at least one extent");
    for (auto d : shape)
        if (d == 0) throw std::invalid_argument("tensor extents must be positive, got " + shape_to_string(shape));
}

void require_rank2(const Tensor& t, const char* op) {
    if (t.rank() != 2)
        throw ShapeError(std::string(op) + ": expected a matrix, got shape " + shape_to_string(t.shape()));
}

}  // namespace

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
    validate_shape(shape_);
    data_.assign(shape_size(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
    validate_shape(shape_);
    if (shape_size(shape_) != data_.size())
        throw ShapeError("shape " + shape_to_string(shape_) + " does not match " + std::to_string(data_.size()) +
                         " elements");
}

Tensor Tensor::vector(std::initializer_list<double> values) {
    return Tensor({values.size()}, std::vector<double>(values));
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r ? rows.begin()->size() : 0;
    std::vector<double> data;
    data.reserve(r * c);
    for (const auto& row : rows) {
        if (row.size() != c) throw ShapeError("ragged matrix literal");
        data.insert(data.end(), row.begin(), row.end());
    }
    return Tensor({r, c}, std::move(data));
}

Tensor Tensor::identity(std::size_t n) {
    Tensor t({n, n});
    for (std::size_t i = 0; i < n; ++i) t.at(i, i) = 1.0;
    return t;
}

std::size_t Tensor::rows() const {
    require_rank2(*this, "rows");
    return shape_[0];
}

std::size_t Tensor::cols() const {
    require_rank2(*this, "cols");
    return shape_[1];
}

bool Tensor::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape())
        throw ShapeError(std::string(op) + ": shape mismatch " + shape_to_string(a.shape()) + " vs " +
                         shape_to_string(b.shape()));
}

double l2_norm(const Tensor& t) {
    if (t.empty()) throw std::invalid_argument("l2_norm of an empty tensor");
    double acc = 0.0;
    for (double v : t.data()) acc += v * v;
    if (acc >= std::numeric_limits<double>::min() && acc <= std::numeric_limits<double>::max()) return std::sqrt(acc);
    if (std::isnan(acc)) return acc;
    // Squares underflowed or overflowed: redo the sum relative to max |v|.
    double peak = 0.0;
    for (double v : t.data()) peak = std::max(peak, std::abs(v));
    if (peak == 0.0 || !std::isfinite(peak)) return peak == 0.0 ? 0.0 : std::sqrt(acc);
    acc = 0.0;
    for (double v : t.data()) acc += (v / peak) * (v / peak);
    return peak * std::sqrt(acc);
}

double sum(const Tensor& t) {
    double acc = 0.0;
    for (double v : t.data()) acc += v;
    return acc;
}

double dot(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "dot");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "max_abs_diff");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

Tensor axpy(double alpha, const Tensor& x, const Tensor& y) {
    Tensor out = y;
    axpy_inplace(alpha, x, out);
    return out;
}

void axpy_inplace(double alpha, const Tensor& x, Tensor& y) {
    require_same_shape(x, y, "axpy");
    auto yd = y.data();
    auto xd = x.data();
    for (std::size_t i = 0; i < yd.size(); ++i) yd[i] += alpha * xd[i];
}

Tensor scale(const Tensor& t, double c) {
    Tensor out = t;
    for (double& v : out.data()) v *= c;
    return out;
}

namespace {

template <typename F>
Tensor zip(const Tensor& a, const Tensor& b, const char* op, F f) {
    require_same_shape(a, b, op);
    Tensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i], b[i]);
    return out;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    return zip(a, b, "add", [](double x, double y) { return x + y; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    return zip(a, b, "sub", [](double x, double y) { return x - y; });
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
    return zip(a, b, "hadamard", [](double x, double y) { return x * y; });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_rank2(a, "matmul");
    require_rank2(b, "matmul");
    const std::size_t n = a.shape()[0], k = a.shape()[1], m = b.shape()[1];
    if (b.shape()[0] != k)
        throw ShapeError("matmul: inner dimensions differ " + shape_to_string(a.shape()) + " x " +
                         shape_to_string(b.shape()));
    Tensor out({n, m});
    const double* ad = a.data().data();
    const double* bd = b.data().data();
    double* od = out.data().data();
    for (std::size_t i = 0; i < n; ++i) {
        double* orow = od + i * m;
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = ad[i * k + p];
            const double* brow = bd + p * m;
            for (std::size_t j = 0; j < m; ++j) orow[j] += aip * brow[j];
        }
    }
    return out;
}

Tensor transpose(const Tensor& t) {
    require_rank2(t, "transpose");
    const std::size_t r = t.shape()[0], c = t.shape()[1];
    Tensor out({c, r});
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out.at(j, i) = t.at(i, j);
    return out;
}

namespace {

// Views t as [outer x inner] with the reduced axis being `outer` (axis 0)
// or `inner` (axis 1).
struct ReduceView {
    std::size_t rows;
    std::size_t cols;
};

ReduceView reduce_view(const Tensor& t, std::size_t axis, const char* op) {
    if (t.rank() == 1) {
        if (axis != 0) throw ShapeError(std::string(op) + ": axis out of range for a vector");
        return {t.size(), 1};
    }
    require_rank2(t, op);
    if (axis > 1) throw ShapeError(std::string(op) + ": axis out of range");
    return {t.shape()[0], t.shape()[1]};
}

}  // namespace

Tensor reduce_mean(const Tensor& t, std::size_t axis) {
    const auto v = reduce_view(t, axis, "reduce_mean");
    if (t.rank() == 1 || axis == 0) {
        Tensor out({v.cols});
        for (std::size_t i = 0; i < v.rows; ++i)
            for (std::size_t j = 0; j < v.cols; ++j) out[j] += t[i * v.cols + j];
        for (double& x : out.data()) x /= static_cast<double>(v.rows);
        return out;
    }
    Tensor out({v.rows});
    for (std::size_t i = 0; i < v.rows; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < v.cols; ++j) acc += t[i * v.cols + j];
        out[i] = acc / static_cast<double>(v.cols);
    }
    return out;
}

Tensor reduce_var(const Tensor& t, std::size_t axis) {
    const Tensor mean = reduce_mean(t, axis);
    const auto v = reduce_view(t, axis, "reduce_var");
    if (t.rank() == 1 || axis == 0) {
        Tensor out({v.cols});
        for (std::size_t i = 0; i < v.rows; ++i)
            for (std::size_t j = 0; j < v.cols; ++j) {
                const double d = t[i * v.cols + j] - mean[j];
                out[j] += d * d;
            }
        for (double& x : out.data()) x /= static_cast<double>(v.rows);
        return out;
    }
    Tensor out({v.rows});
    for (std::size_t i = 0; i < v.rows; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < v.cols; ++j) {
            const double d = t[i * v.cols + j] - mean[i];
            acc += d * d;
        }
        out[i] = acc / static_cast<double>(v.cols);
    }
    return out;
}

Tensor slice_rows(const Tensor& t, std::size_t begin, std::size_t end) {
    require_rank2(t, "slice_rows");
    if (begin >= end || end > t.shape()[0]) throw std::out_of_range("slice_rows: bad row range");
    const std::size_t c = t.shape()[1];
    std::vector<double> data(t.data().begin() + static_cast<std::ptrdiff_t>(begin * c),
                             t.data().begin() + static_cast<std::ptrdiff_t>(end * c));
    return Tensor({end - begin, c}, std::move(data));
}

Tensor gather_rows(const Tensor& t, std::span<const std::size_t> rows) {
    require_rank2(t, "gather_rows");
    if (rows.empty()) throw std::invalid_argument("gather_rows: no rows requested");
    const std::size_t c = t.shape()[1];
    Tensor out({rows.size(), c});
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] >= t.shape()[0]) throw std::out_of_range("gather_rows: row index out of range");
        std::copy_n(t.data().begin() + static_cast<std::ptrdiff_t>(rows[i] * c), c,
                    out.data().begin() + static_cast<std::ptrdiff_t>(i * c));
    }
    return out;
}

Tensor concat_rows(std::span<const Tensor> parts) {
    if (parts.empty()) throw std::invalid_argument("concat_rows: nothing to concatenate");
    const std::size_t c = parts.front().cols();
    std::size_t r = 0;
    std::vector<double> data;
    for (const auto& p : parts) {
        if (p.cols() != c) throw ShapeError("concat_rows: column counts differ");
        r += p.rows();
        data.insert(data.end(), p.data().begin(), p.data().end());
    }
    return Tensor({r, c}, std::move(data));
}

}  // namespace lars
