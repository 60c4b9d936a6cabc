#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "mixsum/core.hpp"

namespace mixsum {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Floor applied to SPD eigenvalues before log/sqrt.
inline constexpr double kEigenFloor = 1e-12;

namespace detail {

inline std::string describe(const Matrix& m) {
    std::ostringstream os;
    os.precision(17);
    os << "[";
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        os << (i ? "; " : "");
        for (Eigen::Index j = 0; j < m.cols(); ++j) os << (j ? " " : "") << m(i, j);
    }
    os << "]";
    return os.str();
}

inline void require_square_symmetric(const Matrix& m, const char* what) {
    if (m.rows() == 0 || m.rows() != m.cols())
        throw ValidationError(std::string(what) + ": expected a non-empty square matrix, got " +
                              std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
    if (!m.allFinite()) throw ValidationError(std::string(what) + ": non-finite entries");
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = i + 1; j < m.cols(); ++j)
            if (std::abs(m(i, j) - m(j, i)) > 1e-10 * (1.0 + std::abs(m(i, j))))
                throw ValidationError(std::string(what) + ": matrix is not symmetric " + describe(m));
}

}  // namespace detail

/// Symmetric d x d matrix. Construction rejects asymmetry above 1e-10 relative
/// and then symmetrizes exactly.
class SymmetricMatrix {
public:
    explicit SymmetricMatrix(const Matrix& m) : m_(m) {
        detail::require_square_symmetric(m_, "SymmetricMatrix");
        m_ = 0.5 * (m_ + m_.transpose()).eval();
    }

    static SymmetricMatrix zero(int d) { return SymmetricMatrix(Matrix::Zero(d, d)); }

    int dim() const { return static_cast<int>(m_.rows()); }
    const Matrix& matrix() const { return m_; }
    double operator()(int i, int j) const { return m_(i, j); }

private:
    Matrix m_;
};

/// Symmetric positive definite matrix, validated by a Cholesky factorization.
class SpdMatrix {
public:
    explicit SpdMatrix(const Matrix& m) : m_(m) {
        detail::require_square_symmetric(m_, "SpdMatrix");
        m_ = 0.5 * (m_ + m_.transpose()).eval();
        Eigen::LLT<Matrix> llt(m_);
        if (llt.info() != Eigen::Success)
            throw ValidationError("SpdMatrix: matrix is not positive definite " + detail::describe(m_));
    }

    static SpdMatrix identity(int d) { return SpdMatrix(Matrix::Identity(d, d)); }

    int dim() const { return static_cast<int>(m_.rows()); }
    const Matrix& matrix() const { return m_; }
    double operator()(int i, int j) const { return m_(i, j); }

private:
    Matrix m_;
};

/// Vector of unit Euclidean norm (within 1e-12).
class UnitVector {
public:
    explicit UnitVector(const Vector& v) : v_(v) {
        if (v_.size() == 0) throw ValidationError("UnitVector: empty vector");
        if (std::abs(v_.norm() - 1.0) > 1e-12)
            throw ValidationError("UnitVector: norm " + std::to_string(v_.norm()) + " != 1");
    }

    static UnitVector normalized(const Vector& v) {
        double n = v.norm();
        if (!(n > 0.0) || !std::isfinite(n)) throw ValidationError("UnitVector: cannot normalize a zero vector");
        return UnitVector(v / n);
    }

    int dim() const { return static_cast<int>(v_.size()); }
    const Vector& vector() const { return v_; }
    double operator[](int i) const { return v_[i]; }

private:
    Vector v_;
};

struct SymEig {
    Vector values;   // descending
    Matrix vectors;  // columns are the matching orthonormal eigenvectors
};

inline SymEig sym_eig(const Matrix& s) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(s);
    if (solver.info() != Eigen::Success)
        throw NumericalError("sym_eig: eigensolver did not converge on " + detail::describe(s));
    const auto d = s.rows();
    SymEig out{Vector(d), Matrix(d, d)};
    for (Eigen::Index k = 0; k < d; ++k) {
        out.values[k] = solver.eigenvalues()[d - 1 - k];
        out.vectors.col(k) = solver.eigenvectors().col(d - 1 - k);
    }
    return out;
}

inline SymEig sym_eig(const SymmetricMatrix& s) { return sym_eig(s.matrix()); }

namespace detail {

template <class F>
Matrix spectral_map(const SymEig& e, F&& f) {
    Vector mapped = e.values.unaryExpr(f);
    Matrix out = e.vectors * mapped.asDiagonal() * e.vectors.transpose();
    return 0.5 * (out + out.transpose());
}

}  // namespace detail

/// Principal matrix logarithm Q diag(log max(l, floor)) Q^T.
inline SymmetricMatrix matrix_log(const SpdMatrix& s) {
    auto e = sym_eig(s.matrix());
    return SymmetricMatrix(detail::spectral_map(e, [](double l) { return std::log(std::max(l, kEigenFloor)); }));
}

inline SpdMatrix matrix_sqrt(const SpdMatrix& s) {
    auto e = sym_eig(s.matrix());
    return SpdMatrix(detail::spectral_map(e, [](double l) { return std::sqrt(std::max(l, kEigenFloor)); }));
}

/// exp of a symmetric matrix; the inverse of matrix_log on its image.
inline SpdMatrix matrix_exp(const SymmetricMatrix& a) {
    auto e = sym_eig(a.matrix());
    return SpdMatrix(detail::spectral_map(e, [](double l) { return std::exp(l); }));
}

inline UnitVector sample_unit_sphere(int d, Rng& rng) {
    if (d < 1) throw ValidationError("sample_unit_sphere: dimension must be >= 1");
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector v(d);
    for (;;) {
        for (int i = 0; i < d; ++i) v[i] = normal(rng);
        double n = v.norm();
        if (n > 1e-300) return UnitVector(v / n);
    }
}

/// Uniform draw from the unit Frobenius sphere of d x d symmetric matrices:
/// symmetrizing an i.i.d. normal matrix gives i.i.d. N(0,1) coefficients in the
/// orthonormal basis {E_ii, (E_ij + E_ji)/sqrt 2}.
inline SymmetricMatrix sample_unit_symmetric(int d, Rng& rng) {
    if (d < 1) throw ValidationError("sample_unit_symmetric: dimension must be >= 1");
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix b(d, d);
    for (;;) {
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) b(i, j) = normal(rng);
        Matrix a = 0.5 * (b + b.transpose());
        double n = a.norm();
        if (n > 1e-300) return SymmetricMatrix(a / n);
    }
}

/// Largest lambda with s1 v = lambda s2 v, via Cholesky whitening of s2.
inline double generalized_max_eigenvalue(const SpdMatrix& s1, const SpdMatrix& s2) {
    if (s1.dim() != s2.dim())
        throw ValidationError("generalized_max_eigenvalue: dimension mismatch " + std::to_string(s1.dim()) +
                              " vs " + std::to_string(s2.dim()));
    Eigen::LLT<Matrix> llt(s2.matrix());
    if (llt.info() != Eigen::Success) throw NumericalError("generalized_max_eigenvalue: Cholesky failed");
    Matrix linv_s1 = llt.matrixL().solve(s1.matrix());
    Matrix c = llt.matrixL().solve(linv_s1.transpose());
    c = 0.5 * (c + c.transpose()).eval();
    return sym_eig(c).values[0];
}

inline double frobenius_inner(const Matrix& a, const Matrix& b) { return (a.array() * b.array()).sum(); }

}  // namespace mixsum
