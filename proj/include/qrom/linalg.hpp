#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <vector>

namespace qrom {

using cxd = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;

inline constexpr double kHermiticityTol = 1e-10;

/// Flat complex storage with explicit shape metadata. Entries are kept in
/// row-major order; reshape only rewrites the shape table.
class ComplexTensor {
  public:
    ComplexTensor() = default;
    ComplexTensor(std::vector<Eigen::Index> shape, Vec data);
    static ComplexTensor from_matrix(const Mat& m);

    const std::vector<Eigen::Index>& shape() const { return shape_; }
    const Vec& data() const { return data_; }
    Eigen::Index size() const { return data_.size(); }

    void reshape(std::vector<Eigen::Index> shape);
    Mat as_matrix(Eigen::Index rows, Eigen::Index cols) const;

  private:
    std::vector<Eigen::Index> shape_;
    Vec data_;
};

struct SvdResult {
    Mat u;
    RVec s;   // descending
    Mat vh;
};

/// SVD with a fixed phase convention: the largest-magnitude entry of each
/// left singular vector is made real and positive.
SvdResult svd(const Mat& m);

struct EighResult {
    RVec lambdas;   // descending
    Mat vectors;    // orthonormal columns, vectors.col(j) <-> lambdas(j)
};

/// Hermitian eigendecomposition. The input is symmetrized internally; it must
/// be Hermitian within rel_tol in Frobenius norm.
EighResult eigh(const Mat& h, double rel_tol = kHermiticityTol);

/// exp(-i t H) for Hermitian H, computed through eigh (exact for Hermitian
/// generators, unitary by construction).
Mat expm_hermitian(const Mat& h, double t);

Mat kron(const Mat& a, const Mat& b);

bool is_unitary(const Mat& u, double tol = kHermiticityTol);

/// Density-matrix spectra: clip eigenvalue noise into [0, 1]. Values below
/// -1e-10 are treated as genuinely invalid input.
RVec clip_density_spectrum(RVec lambdas);

/// Von Neumann entropy in bits; eigenvalues below 1e-14 contribute zero.
double vn_entropy_bits(const RVec& lambdas);

}   // namespace qrom
