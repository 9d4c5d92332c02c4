#include "tbss/tensor.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <string>

#include "tbss/errors.hpp"

namespace tbss {

namespace {

using RowMajorMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

std::string dims_string(std::span<const std::size_t> dims) {
    std::string s = "(";
    for (std::size_t i = 0; i < dims.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(dims[i]);
    }
    return s + ")";
}

void check_dims(std::span<const std::size_t> dims) {
    if (dims.empty()) throw DimensionError("tensor order must be at least 1");
    for (auto d : dims)
        if (d == 0) throw DimensionError("tensor dims must be positive, got " + dims_string(dims));
}

// Sizes of the index blocks before and after the mode (0-based mode).
std::size_t outer_size(std::span<const std::size_t> dims, std::size_t m0) {
    return std::accumulate(dims.begin(), dims.begin() + static_cast<std::ptrdiff_t>(m0),
                           std::size_t{1}, std::multiplies<>());
}

std::size_t inner_size(std::span<const std::size_t> dims, std::size_t m0) {
    return std::accumulate(dims.begin() + static_cast<std::ptrdiff_t>(m0) + 1, dims.end(),
                           std::size_t{1}, std::multiplies<>());
}

bool is_placeholder(const Matrix& b, std::size_t p) {
    if (b.size() == 0) return true;
    return static_cast<std::size_t>(b.rows()) == p && static_cast<std::size_t>(b.cols()) == p &&
           b.isIdentity(0.0);
}

}  // namespace

std::size_t dims_product(std::span<const std::size_t> dims) {
    return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
}

std::size_t rho(std::span<const std::size_t> dims, std::size_t mode) {
    check_mode(dims, mode);
    return dims_product(dims) / dims[mode - 1];
}

void check_mode(std::span<const std::size_t> dims, std::size_t mode) {
    if (mode < 1 || mode > dims.size())
        throw DimensionError("mode " + std::to_string(mode) + " out of range for order-" +
                             std::to_string(dims.size()) + " tensor");
}

// --- DataTensor -------------------------------------------------------------

DataTensor::DataTensor(Dims dims) : dims_(std::move(dims)) {
    check_dims(dims_);
    values_.assign(dims_product(dims_), 0.0);
}

DataTensor::DataTensor(Dims dims, std::vector<double> values)
    : dims_(std::move(dims)), values_(std::move(values)) {
    check_dims(dims_);
    if (values_.size() != dims_product(dims_))
        throw DimensionError("tensor with dims " + dims_string(dims_) + " needs " +
                             std::to_string(dims_product(dims_)) + " values, got " +
                             std::to_string(values_.size()));
}

DataTensor DataTensor::constant(Dims dims, double value) {
    check_dims(dims);
    std::vector<double> v(dims_product(dims), value);
    return DataTensor(std::move(dims), std::move(v));
}

DataTensor DataTensor::from_vector(const Vector& v) {
    return DataTensor({static_cast<std::size_t>(v.size())},
                      std::vector<double>(v.data(), v.data() + v.size()));
}

DataTensor DataTensor::from_matrix(const Matrix& m) {
    std::vector<double> v(static_cast<std::size_t>(m.size()));
    std::size_t k = 0;
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) v[k++] = m(i, j);
    return DataTensor({static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())},
                      std::move(v));
}

std::size_t DataTensor::dim(std::size_t mode) const {
    check_mode(dims_, mode);
    return dims_[mode - 1];
}

std::size_t DataTensor::offset(std::span<const std::size_t> index) const {
    if (index.size() != dims_.size())
        throw DimensionError("index of length " + std::to_string(index.size()) +
                             " for order-" + std::to_string(dims_.size()) + " tensor");
    std::size_t off = 0;
    for (std::size_t m = 0; m < dims_.size(); ++m) {
        if (index[m] < 1 || index[m] > dims_[m])
            throw DimensionError("index " + std::to_string(index[m]) + " out of range in mode " +
                                 std::to_string(m + 1) + " of length " +
                                 std::to_string(dims_[m]));
        off = off * dims_[m] + (index[m] - 1);
    }
    return off;
}

double DataTensor::operator()(std::initializer_list<std::size_t> index) const {
    return values_[offset(std::span<const std::size_t>(index.begin(), index.size()))];
}

double DataTensor::at(std::span<const std::size_t> index) const { return values_[offset(index)]; }

bool operator==(const DataTensor& a, const DataTensor& b) {
    return a.dims() == b.dims() && std::ranges::equal(a.values(), b.values());
}

// --- TensorSample -----------------------------------------------------------

TensorSample::TensorSample(Dims dims, std::size_t n) : dims_(std::move(dims)), n_(n) {
    check_dims(dims_);
    cells_ = dims_product(dims_);
    values_.assign(cells_ * n_, 0.0);
}

TensorSample::TensorSample(Dims dims, std::vector<double> values)
    : dims_(std::move(dims)), values_(std::move(values)) {
    check_dims(dims_);
    cells_ = dims_product(dims_);
    if (values_.size() % cells_ != 0)
        throw DimensionError("sample value count " + std::to_string(values_.size()) +
                             " is not a multiple of " + std::to_string(cells_));
    n_ = values_.size() / cells_;
}

TensorSample TensorSample::from_tensors(std::span<const DataTensor> tensors) {
    if (tensors.empty()) throw DimensionError("cannot build a sample from zero tensors");
    TensorSample s(tensors.front().dims(), tensors.size());
    for (std::size_t i = 0; i < tensors.size(); ++i) {
        if (tensors[i].dims() != s.dims_)
            throw DimensionError("observation " + std::to_string(i + 1) + " has dims " +
                                 dims_string(tensors[i].dims()) + ", expected " +
                                 dims_string(s.dims_));
        std::ranges::copy(tensors[i].values(), s.observation(i).begin());
    }
    return s;
}

std::span<const double> TensorSample::observation(std::size_t i) const {
    return std::span<const double>(values_).subspan(i * cells_, cells_);
}

std::span<double> TensorSample::observation(std::size_t i) {
    return std::span<double>(values_).subspan(i * cells_, cells_);
}

DataTensor TensorSample::tensor(std::size_t i) const {
    auto obs = observation(i);
    return DataTensor(dims_, std::vector<double>(obs.begin(), obs.end()));
}

// --- kernels ----------------------------------------------------------------

void mode_product_into(std::span<const double> in, std::span<const std::size_t> dims,
                       const Matrix& b, std::size_t mode, std::span<double> out) {
    const std::size_t m0 = mode - 1;
    const std::size_t p = dims[m0];
    const std::size_t q = static_cast<std::size_t>(b.rows());
    const std::size_t outer = outer_size(dims, m0);
    const std::size_t inner = inner_size(dims, m0);
    for (std::size_t o = 0; o < outer; ++o) {
        const double* src = in.data() + o * p * inner;
        double* dst = out.data() + o * q * inner;
        for (std::size_t j = 0; j < q; ++j) {
            double* row = dst + j * inner;
            std::fill(row, row + inner, 0.0);
            for (std::size_t k = 0; k < p; ++k) {
                const double w = b(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k));
                const double* srow = src + k * inner;
                for (std::size_t i = 0; i < inner; ++i) row[i] += w * srow[i];
            }
        }
    }
}

void accumulate_self_product(std::span<const double> in, std::span<const std::size_t> dims,
                             std::size_t mode, Matrix& acc) {
    const std::size_t m0 = mode - 1;
    const std::size_t p = dims[m0];
    const std::size_t outer = outer_size(dims, m0);
    const std::size_t inner = inner_size(dims, m0);
    const auto pi = static_cast<Eigen::Index>(p);
    const auto ii = static_cast<Eigen::Index>(inner);
    for (std::size_t o = 0; o < outer; ++o) {
        RowMajorMap block(in.data() + o * p * inner, pi, ii);
        acc.noalias() += block * block.transpose();
    }
}

// --- tensor operations ------------------------------------------------------

DataTensor m_mode_product(const DataTensor& a, const Matrix& b, std::size_t mode) {
    check_mode(a.dims(), mode);
    const std::size_t p = a.dims()[mode - 1];
    if (static_cast<std::size_t>(b.cols()) != p || b.rows() == 0)
        throw DimensionError("mode-" + std::to_string(mode) + " product: matrix is " +
                             std::to_string(b.rows()) + "x" + std::to_string(b.cols()) +
                             " but mode length is " + std::to_string(p));
    Dims out_dims = a.dims();
    out_dims[mode - 1] = static_cast<std::size_t>(b.rows());
    std::vector<double> out(dims_product(out_dims));
    mode_product_into(a.values(), a.dims(), b, mode, out);
    return DataTensor(std::move(out_dims), std::move(out));
}

DataTensor multi_mode_product(const DataTensor& a, std::span<const Matrix> bs) {
    if (bs.size() != a.order())
        throw DimensionError("multi-mode product needs " + std::to_string(a.order()) +
                             " matrices, got " + std::to_string(bs.size()));
    DataTensor result = a;
    for (std::size_t m = 1; m <= a.order(); ++m) {
        if (is_placeholder(bs[m - 1], result.dims()[m - 1])) continue;
        result = m_mode_product(result, bs[m - 1], m);
    }
    return result;
}

Matrix m_mode_self_product(const DataTensor& a, const DataTensor& b, std::size_t mode) {
    if (a.dims() != b.dims())
        throw DimensionError("self product: dims " + dims_string(a.dims()) + " vs " +
                             dims_string(b.dims()));
    check_mode(a.dims(), mode);
    if (&a == &b || a == b) {
        const auto p = static_cast<Eigen::Index>(a.dims()[mode - 1]);
        Matrix acc = Matrix::Zero(p, p);
        accumulate_self_product(a.values(), a.dims(), mode, acc);
        return acc;
    }
    return unfold(a, mode) * unfold(b, mode).transpose();
}

Matrix unfold(const DataTensor& a, std::size_t mode) {
    check_mode(a.dims(), mode);
    const std::size_t m0 = mode - 1;
    const std::size_t p = a.dims()[m0];
    const std::size_t outer = outer_size(a.dims(), m0);
    const std::size_t inner = inner_size(a.dims(), m0);
    Matrix u(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(outer * inner));
    const auto v = a.values();
    for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t k = 0; k < p; ++k)
            for (std::size_t i = 0; i < inner; ++i)
                u(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i * outer + o)) =
                    v[(o * p + k) * inner + i];
    return u;
}

DataTensor fold(const Matrix& unfolded, Dims dims, std::size_t mode) {
    check_dims(dims);
    check_mode(dims, mode);
    const std::size_t m0 = mode - 1;
    const std::size_t p = dims[m0];
    const std::size_t outer = outer_size(dims, m0);
    const std::size_t inner = inner_size(dims, m0);
    if (static_cast<std::size_t>(unfolded.rows()) != p ||
        static_cast<std::size_t>(unfolded.cols()) != outer * inner)
        throw DimensionError("fold: matrix shape does not match dims " + dims_string(dims));
    std::vector<double> v(dims_product(dims));
    for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t k = 0; k < p; ++k)
            for (std::size_t i = 0; i < inner; ++i)
                v[(o * p + k) * inner + i] =
                    unfolded(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i * outer + o));
    return DataTensor(std::move(dims), std::move(v));
}

Vector face_means(const DataTensor& a, std::size_t mode) {
    return unfold(a, mode).rowwise().mean();
}

double frobenius_sq(const DataTensor& a) {
    double s = 0.0;
    for (double x : a.values()) s += x * x;
    return s;
}

std::vector<double> vectorize(const DataTensor& a) {
    return {a.values().begin(), a.values().end()};
}

Matrix kronecker(std::span<const Matrix> factors) {
    if (factors.empty()) throw DimensionError("kronecker product of zero factors");
    Matrix result = factors.front();
    for (std::size_t f = 1; f < factors.size(); ++f) {
        const Matrix& b = factors[f];
        Matrix next(result.rows() * b.rows(), result.cols() * b.cols());
        for (Eigen::Index i = 0; i < result.rows(); ++i)
            for (Eigen::Index j = 0; j < result.cols(); ++j)
                next.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = result(i, j) * b;
        result = std::move(next);
    }
    return result;
}

// --- samples ----------------------------------------------------------------

CenteredSample center_sample(const TensorSample& sample) {
    const std::size_t n = sample.size();
    if (n == 0) throw DimensionError("cannot center an empty sample");
    const std::size_t c = sample.cells();
    std::vector<double> mean(c, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        auto obs = sample.observation(i);
        for (std::size_t k = 0; k < c; ++k) mean[k] += obs[k];
    }
    for (auto& m : mean) m /= static_cast<double>(n);
    TensorSample centered = sample;
    for (std::size_t i = 0; i < n; ++i) {
        auto obs = centered.observation(i);
        for (std::size_t k = 0; k < c; ++k) obs[k] -= mean[k];
    }
    return {DataTensor(sample.dims(), std::move(mean)), std::move(centered)};
}

TensorSample multi_mode_product(const TensorSample& sample, std::span<const Matrix> bs) {
    const Dims& dims = sample.dims();
    if (bs.size() != dims.size())
        throw DimensionError("multi-mode product needs " + std::to_string(dims.size()) +
                             " matrices, got " + std::to_string(bs.size()));
    Dims out_dims = dims;
    std::vector<std::size_t> active;
    for (std::size_t m = 0; m < dims.size(); ++m) {
        if (is_placeholder(bs[m], dims[m])) continue;
        if (static_cast<std::size_t>(bs[m].cols()) != dims[m] || bs[m].rows() == 0)
            throw DimensionError("mode-" + std::to_string(m + 1) + " product: matrix is " +
                                 std::to_string(bs[m].rows()) + "x" +
                                 std::to_string(bs[m].cols()) + " but mode length is " +
                                 std::to_string(dims[m]));
        out_dims[m] = static_cast<std::size_t>(bs[m].rows());
        active.push_back(m);
    }
    TensorSample out(out_dims, sample.size());
    if (active.empty()) {
        std::ranges::copy(sample.values(), out.values().begin());
        return out;
    }
    // Two ping-pong buffers sized for the largest intermediate shape.
    std::size_t cap = std::max(sample.cells(), out.cells());
    {
        Dims cur = dims;
        for (auto m : active) {
            cur[m] = out_dims[m];
            cap = std::max(cap, dims_product(cur));
        }
    }
    std::vector<double> buf_a(cap), buf_b(cap);
    for (std::size_t i = 0; i < sample.size(); ++i) {
        Dims cur = dims;
        std::span<const double> src = sample.observation(i);
        for (std::size_t s = 0; s < active.size(); ++s) {
            const std::size_t m = active[s];
            Dims next = cur;
            next[m] = out_dims[m];
            const bool last = s + 1 == active.size();
            std::span<double> dst = last ? out.observation(i)
                                         : std::span<double>(s % 2 == 0 ? buf_a : buf_b)
                                               .subspan(0, dims_product(next));
            mode_product_into(src, cur, bs[m], m + 1, dst);
            src = dst;
            cur = std::move(next);
        }
    }
    return out;
}

TensorSample vectorize(const TensorSample& sample) {
    return TensorSample(Dims{sample.cells()},
                        std::vector<double>(sample.values().begin(), sample.values().end()));
}

}  // namespace tbss
