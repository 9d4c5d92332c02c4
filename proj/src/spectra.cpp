#include "tbss/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "tbss/errors.hpp"

namespace tbss {

EigenSystem sym_eigen(const Matrix& s) {
    if (s.rows() != s.cols() || s.rows() == 0) {
        std::ostringstream msg;
        msg << "sym_eigen needs a non-empty square matrix, got " << s.rows() << "x" << s.cols();
        throw DimensionError(msg.str());
    }
    const double scale = std::max(1.0, s.cwiseAbs().maxCoeff());
    const double asym = (s - s.transpose()).cwiseAbs().maxCoeff();
    if (!(asym <= 1e-9 * scale)) {
        std::ostringstream msg;
        msg << "sym_eigen: matrix is not symmetric (max asymmetry " << asym << ")";
        throw DimensionError(msg.str());
    }
    const Eigen::Index p = s.rows();
    if (p == 1) return {Vector::Constant(1, s(0, 0)), Matrix::Ones(1, 1)};

    const Matrix sym = 0.5 * (s + s.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
    if (solver.info() != Eigen::Success) {
        Matrix off = sym;
        off.diagonal().setZero();
        throw ConvergenceError("symmetric eigensolver did not converge", off.norm());
    }

    EigenSystem out{Vector(p), Matrix(p, p)};
    for (Eigen::Index j = 0; j < p; ++j) {
        const Eigen::Index src = p - 1 - j;  // solver sorts ascending
        out.values(j) = solver.eigenvalues()(src);
        Vector v = solver.eigenvectors().col(src);
        Eigen::Index arg = 0;
        double best = -1.0;
        for (Eigen::Index i = 0; i < p; ++i)
            if (std::abs(v(i)) > best) {
                best = std::abs(v(i));
                arg = i;
            }
        if (v(arg) < 0) v = -v;
        out.vectors.col(j) = v;
    }
    return out;
}

Matrix sym_inv_sqrt(const Matrix& s) {
    const EigenSystem es = sym_eigen(s);
    const double largest = es.values(0);
    const double smallest = es.values(es.dim() - 1);
    if (!(largest > 0.0) || !(smallest > kPositiveDefiniteRatio * largest)) {
        std::ostringstream msg;
        msg << "covariance matrix is singular or not positive definite: smallest eigenvalue "
            << smallest << " vs largest " << largest;
        throw SingularCovarianceError(msg.str(), smallest);
    }
    const Vector inv_root = es.values.array().rsqrt();
    return es.vectors * inv_root.asDiagonal() * es.vectors.transpose();
}

double tie_gap(const Vector& eigenvalues) {
    if (eigenvalues.size() < 2) return std::numeric_limits<double>::infinity();
    std::vector<double> v(eigenvalues.data(), eigenvalues.data() + eigenvalues.size());
    std::ranges::sort(v);
    double gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < v.size(); ++i) gap = std::min(gap, v[i] - v[i - 1]);
    return gap;
}

bool has_near_tie(const Vector& eigenvalues, double ratio) {
    if (eigenvalues.size() < 2) return false;
    const double range = eigenvalues.maxCoeff() - eigenvalues.minCoeff();
    return tie_gap(eigenvalues) < ratio * range || range == 0.0;
}

}  // namespace tbss
