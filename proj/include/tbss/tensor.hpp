#pragma once

// Dense real tensors and the multilinear primitives used by the estimators.
//
// Storage is lexicographic with the LAST index varying fastest. Modes and
// multi-indices are 1-based at the API boundary; offsets are 0-based.
//
// The m-unfolding is cyclical: the column of the m-mode vector with indices
// (i_1..i_{m-1}, i_{m+1}..i_r) is the mixed-radix rank of the sequence
// (i_{m+1}, ..., i_r, i_1, ..., i_{m-1}), first element slowest. With this
// order, for A* = A x_1 B_1 ... x_r B_r,
//
//     unfold(A*, m) = B_m * unfold(A, m) * K^T,   K = B_{m+1} (x) ... (x) B_r (x) B_1 (x) ... (x) B_{m-1}.

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace tbss {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Dims = std::vector<std::size_t>;

std::size_t dims_product(std::span<const std::size_t> dims);

/// Product of all dims except the (1-based) mode-th one.
std::size_t rho(std::span<const std::size_t> dims, std::size_t mode);

/// Throws DimensionError unless 1 <= mode <= dims.size().
void check_mode(std::span<const std::size_t> dims, std::size_t mode);

/// Immutable dense tensor of order r >= 1.
class DataTensor {
public:
    explicit DataTensor(Dims dims);  // zero-filled
    DataTensor(Dims dims, std::vector<double> values);

    static DataTensor constant(Dims dims, double value);
    /// Order-1 tensor holding the entries of v.
    static DataTensor from_vector(const Vector& v);
    /// Order-2 tensor with entry (i, j) = m(i-1, j-1).
    static DataTensor from_matrix(const Matrix& m);

    const Dims& dims() const noexcept { return dims_; }
    std::size_t order() const noexcept { return dims_.size(); }
    std::size_t size() const noexcept { return values_.size(); }
    /// Length of the 1-based mode.
    std::size_t dim(std::size_t mode) const;

    std::span<const double> values() const noexcept { return values_; }

    /// Storage offset of a 1-based multi-index.
    std::size_t offset(std::span<const std::size_t> index) const;
    double operator()(std::initializer_list<std::size_t> index) const;
    double at(std::span<const std::size_t> index) const;

private:
    Dims dims_;
    std::vector<double> values_;
};

bool operator==(const DataTensor& a, const DataTensor& b);

/// n observations of a common shape, stored back to back.
class TensorSample {
public:
    TensorSample(Dims dims, std::size_t n);  // zero-filled
    TensorSample(Dims dims, std::vector<double> values);

    static TensorSample from_tensors(std::span<const DataTensor> tensors);

    const Dims& dims() const noexcept { return dims_; }
    std::size_t order() const noexcept { return dims_.size(); }
    std::size_t size() const noexcept { return n_; }
    std::size_t cells() const noexcept { return cells_; }

    std::span<const double> observation(std::size_t i) const;
    std::span<double> observation(std::size_t i);
    DataTensor tensor(std::size_t i) const;

    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }

private:
    Dims dims_;
    std::size_t cells_;
    std::size_t n_;
    std::vector<double> values_;
};

// ---------------------------------------------------------------------------
// Raw kernels on a single observation laid out in canonical order.

/// out = in x_mode B. `out` must hold the product of the output dims.
void mode_product_into(std::span<const double> in, std::span<const std::size_t> dims,
                       const Matrix& b, std::size_t mode, std::span<double> out);

/// acc += in (.)_{-mode} in, without normalisation.
void accumulate_self_product(std::span<const double> in, std::span<const std::size_t> dims,
                             std::size_t mode, Matrix& acc);

// ---------------------------------------------------------------------------
// Tensor operations.

DataTensor m_mode_product(const DataTensor& a, const Matrix& b, std::size_t mode);

/// Applies bs[m-1] along every mode m. Identity placeholders are allowed and skipped.
DataTensor multi_mode_product(const DataTensor& a, std::span<const Matrix> bs);

/// The p_m x p_m matrix summing a_{..s..} b_{..t..} over every index but the m-th.
Matrix m_mode_self_product(const DataTensor& a, const DataTensor& b, std::size_t mode);

/// p_m x rho_m cyclical unfolding.
Matrix unfold(const DataTensor& a, std::size_t mode);
/// Inverse of unfold for the given dims.
DataTensor fold(const Matrix& unfolded, Dims dims, std::size_t mode);

/// Means of the m-mode faces, i.e. the row means of unfold(a, mode).
Vector face_means(const DataTensor& a, std::size_t mode);

double frobenius_sq(const DataTensor& a);
std::vector<double> vectorize(const DataTensor& a);

/// Kronecker product K_1 (x) K_2 (x) ... in the given order.
Matrix kronecker(std::span<const Matrix> factors);

// ---------------------------------------------------------------------------
// Sample-level helpers.

struct CenteredSample {
    DataTensor mean;
    TensorSample centered;
};

CenteredSample center_sample(const TensorSample& sample);

/// Applies multi_mode_product to every observation.
TensorSample multi_mode_product(const TensorSample& sample, std::span<const Matrix> bs);

/// Each observation flattened to an order-1 tensor of length prod(dims).
TensorSample vectorize(const TensorSample& sample);

}  // namespace tbss
