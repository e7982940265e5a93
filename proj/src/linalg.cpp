#include "qrom/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>
#include <stdexcept>

namespace qrom {

ComplexTensor::ComplexTensor(std::vector<Eigen::Index> shape, Vec data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    Eigen::Index prod = 1;
    for (auto e : shape_) {
        if (e <= 0) throw std::invalid_argument("ComplexTensor: extents must be positive");
        prod *= e;
    }
    if (prod != data_.size())
        throw std::invalid_argument("ComplexTensor: shape does not match number of entries");
}

ComplexTensor ComplexTensor::from_matrix(const Mat& m) {
    Vec flat(m.size());
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) flat(r * m.cols() + c) = m(r, c);
    return ComplexTensor({m.rows(), m.cols()}, std::move(flat));
}

void ComplexTensor::reshape(std::vector<Eigen::Index> shape) {
    Eigen::Index prod = 1;
    for (auto e : shape) {
        if (e <= 0) throw std::invalid_argument("ComplexTensor: extents must be positive");
        prod *= e;
    }
    if (prod != data_.size())
        throw std::invalid_argument("ComplexTensor: reshape must preserve entry count");
    shape_ = std::move(shape);
}

Mat ComplexTensor::as_matrix(Eigen::Index rows, Eigen::Index cols) const {
    if (rows * cols != data_.size())
        throw std::invalid_argument("ComplexTensor: matrix view does not match entry count");
    Mat m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data_(r * cols + c);
    return m;
}

SvdResult svd(const Mat& m) {
    if (!m.allFinite()) throw std::invalid_argument("svd: input has non-finite entries");
    Eigen::JacobiSVD<Mat> solver(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    SvdResult out;
    out.u = solver.matrixU();
    out.s = solver.singularValues();
    out.vh = solver.matrixV().adjoint();
    // Phase convention: largest-magnitude entry of each left singular vector
    // real-positive.
    for (Eigen::Index k = 0; k < out.u.cols(); ++k) {
        Eigen::Index imax = 0;
        double best = -1.0;
        for (Eigen::Index i = 0; i < out.u.rows(); ++i) {
            double a = std::abs(out.u(i, k));
            if (a > best + 1e-15) {
                best = a;
                imax = i;
            }
        }
        cxd z = out.u(imax, k);
        if (std::abs(z) > 0) {
            cxd phase = z / std::abs(z);
            out.u.col(k) *= std::conj(phase);
            out.vh.row(k) *= phase;
        }
    }
    return out;
}

EighResult eigh(const Mat& h, double rel_tol) {
    if (!h.allFinite()) throw std::invalid_argument("eigh: input has non-finite entries");
    if (h.rows() != h.cols()) throw std::invalid_argument("eigh: input must be square");
    const double scale = h.norm();
    if (scale > 0 && (h - h.adjoint()).norm() > rel_tol * scale)
        throw std::invalid_argument("eigh: input is not Hermitian within tolerance");
    Mat sym = 0.5 * (h + h.adjoint());
    Eigen::SelfAdjointEigenSolver<Mat> solver(sym);
    if (solver.info() != Eigen::Success) throw std::runtime_error("eigh: decomposition failed");
    const Eigen::Index n = h.rows();
    EighResult out;
    out.lambdas = RVec(n);
    out.vectors = Mat(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {   // ascending -> descending
        out.lambdas(j) = solver.eigenvalues()(n - 1 - j);
        out.vectors.col(j) = solver.eigenvectors().col(n - 1 - j);
    }
    return out;
}

Mat expm_hermitian(const Mat& h, double t) {
    EighResult e = eigh(h);
    Vec phases(e.lambdas.size());
    for (Eigen::Index j = 0; j < e.lambdas.size(); ++j)
        phases(j) = std::exp(cxd(0.0, -t * e.lambdas(j)));
    return e.vectors * phases.asDiagonal() * e.vectors.adjoint();
}

Mat kron(const Mat& a, const Mat& b) {
    Mat out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

bool is_unitary(const Mat& u, double tol) {
    if (u.rows() != u.cols()) return false;
    return (u.adjoint() * u - Mat::Identity(u.cols(), u.cols())).norm() <= tol;
}

RVec clip_density_spectrum(RVec lambdas) {
    for (Eigen::Index j = 0; j < lambdas.size(); ++j) {
        if (lambdas(j) < -1e-10)
            throw std::invalid_argument("clip_density_spectrum: eigenvalue below -1e-10");
        lambdas(j) = std::min(1.0, std::max(0.0, lambdas(j)));
    }
    return lambdas;
}

double vn_entropy_bits(const RVec& lambdas) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < lambdas.size(); ++j) {
        double lam = lambdas(j);
        if (lam > 1e-14) s -= lam * std::log2(lam);
    }
    return s;
}

}   // namespace qrom
