#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace lars {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_to_string(const Shape& shape);

// Dense row-major tensor of doubles. Every extent is positive and
// shape_size(shape()) == size().
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, double fill = 0.0);
    Tensor(Shape shape, std::vector<double> data);

    static Tensor zeros_like(const Tensor& t) { return Tensor(t.shape()); }
    static Tensor vector(std::initializer_list<double> values);
    static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);
    static Tensor identity(std::size_t n);

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    std::size_t rows() const;
    std::size_t cols() const;

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }
    const std::vector<double>& values() const noexcept { return data_; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }
    double& at(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
    double at(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }

    bool all_finite() const;
    void fill(double value);

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    Shape shape_;
    std::vector<double> data_;
};

void require_same_shape(const Tensor& a, const Tensor& b, const char* op);

// Reductions use a fixed left-to-right order so results are bitwise
// reproducible.
double l2_norm(const Tensor& t);
double sum(const Tensor& t);
double dot(const Tensor& a, const Tensor& b);
double max_abs_diff(const Tensor& a, const Tensor& b);

Tensor axpy(double alpha, const Tensor& x, const Tensor& y);
void axpy_inplace(double alpha, const Tensor& x, Tensor& y);
Tensor scale(const Tensor& t, double c);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor hadamard(const Tensor& a, const Tensor& b);

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& t);

// Rank-2 reductions. axis 0 collapses rows (one value per column), axis 1
// collapses columns. A rank-1 tensor reduces to a single-element tensor.
Tensor reduce_mean(const Tensor& t, std::size_t axis = 0);
// Population variance (divides by the reduced extent).
Tensor reduce_var(const Tensor& t, std::size_t axis = 0);

// Rows [begin, end) of a rank-2 tensor, and the row-wise concatenation.
Tensor slice_rows(const Tensor& t, std::size_t begin, std::size_t end);
Tensor gather_rows(const Tensor& t, std::span<const std::size_t> rows);
Tensor concat_rows(std::span<const Tensor> parts);

}  // namespace lars
