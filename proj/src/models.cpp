#include "qrom/models.hpp"

#include "qrom/controls.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace qrom {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

Mat sigma_x() {
    Mat m(2, 2);
    m << 0, 1, 1, 0;
    return m;
}

Mat sigma_y() {
    Mat m(2, 2);
    m << 0, cxd(0, -1), cxd(0, 1), 0;
    return m;
}

Mat sigma_z() {
    Mat m(2, 2);
    m << 1, 0, 0, -1;
    return m;
}

Mat pauli(int k) {
    switch (k) {
        case 1: return sigma_x();
        case 2: return sigma_y();
        case 3: return sigma_z();
        default: throw std::invalid_argument("pauli: index must be 1, 2 or 3");
    }
}

void XYZParams::validate() const {
    if (!(tau > 0.0) || !std::isfinite(tau))
        throw std::invalid_argument("XYZParams: tau must be positive and finite");
    if (!coupling.allFinite() || !field.allFinite())
        throw std::invalid_argument("XYZParams: couplings and fields must be finite");
}

Mat build_xyz_gate(const XYZParams& params, BondPosition position) {
    params.validate();
    double w0 = 0.0, w1 = 0.0;
    switch (position) {
        case BondPosition::left: w0 = 1.0, w1 = 0.5; break;
        case BondPosition::mid: w0 = 0.5, w1 = 0.5; break;
        case BondPosition::right: w0 = 0.5, w1 = 1.0; break;
        case BondPosition::both: w0 = 1.0, w1 = 1.0; break;
        default: throw std::invalid_argument("build_xyz_gate: unknown position");
    }
    const Mat id = Mat::Identity(2, 2);
    Mat h = Mat::Zero(4, 4);
    for (int k = 1; k <= 3; ++k) {
        const Mat s = pauli(k);
        h += params.coupling(k - 1) * kron(s, s);
        h += params.field(k - 1) * (w0 * kron(s, id) + w1 * kron(id, s));
    }
    return expm_hermitian(h, params.tau);
}

void MBLParams::validate() const {
    if (!std::isfinite(coupling)) throw std::invalid_argument("MBLParams: coupling must be finite");
    for (double f : fields)
        if (!(f >= 0.0) || !(f < kTwoPi))
            throw std::invalid_argument("MBLParams: field angles must lie in [0, 2*pi)");
}

std::vector<double> sample_disorder(std::uint64_t seed, int count) {
    if (count < 1) throw std::invalid_argument("sample_disorder: count must be >= 1");
    std::mt19937_64 rng(seed);
    std::vector<double> out(static_cast<size_t>(count));
    for (auto& v : out) {
        // top 53 bits -> [0, 1); avoids distribution differences across libraries
        double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        v = u * kTwoPi;
    }
    return out;
}

std::vector<Mat> build_mbl_layer(const MBLParams& params) {
    params.validate();
    const int n = params.sites();
    if (n < 2) throw std::invalid_argument("build_mbl_layer: need at least two spins");

    // exp(i J sigma_x) applied to every spin once, folded into the first bond
    // gate that touches it
    const double j = params.coupling;
    Mat xrot(2, 2);
    xrot << std::cos(j), cxd(0, std::sin(j)), cxd(0, std::sin(j)), std::cos(j);

    std::vector<Mat> gates;
    gates.reserve(static_cast<size_t>(n - 1));
    const Mat id = Mat::Identity(2, 2);
    for (int bond = 0; bond < n - 1; ++bond) {
        double h_left = params.fields[static_cast<size_t>(bond)];
        double h_right = (bond == n - 2 && params.field_on_last)
                             ? params.fields[static_cast<size_t>(n - 1)]
                             : 0.0;
        Mat diag = Mat::Zero(4, 4);
        for (int b0 = 0; b0 < 2; ++b0)
            for (int b1 = 0; b1 < 2; ++b1) {
                double z0 = 1.0 - 2.0 * b0;
                double z1 = 1.0 - 2.0 * b1;
                double angle = h_left * z0 + j * z0 * z1 + h_right * z1;
                diag(b0 * 2 + b1, b0 * 2 + b1) = std::exp(cxd(0, angle));
            }
        Mat x_part = (bond == 0) ? kron(xrot, xrot) : kron(id, xrot);
        gates.push_back(diag * x_part);
    }
    return gates;
}

const Mat& CircuitLayout::gate(int step, int bond) const {
    const auto& layer = layers.size() == 1 ? layers[0] : layers.at(static_cast<size_t>(step));
    return layer.at(static_cast<size_t>(bond));
}

void CircuitLayout::validate() const {
    if (sites < 1) throw std::invalid_argument("CircuitLayout: need at least one spin");
    if (steps < 0) throw std::invalid_argument("CircuitLayout: negative step count");
    if (target < 0 || target >= sites)
        throw std::invalid_argument("CircuitLayout: target spin out of range");
    if (layers.size() != 1 && layers.size() != static_cast<size_t>(steps))
        throw std::invalid_argument("CircuitLayout: expected one layer or one per step");
    for (const auto& layer : layers) {
        if (layer.size() != static_cast<size_t>(sites - 1))
            throw std::invalid_argument("CircuitLayout: layer must hold one gate per bond");
        for (const auto& g : layer)
            if (g.rows() != 4 || g.cols() != 4 || !is_unitary(g))
                throw std::invalid_argument("CircuitLayout: gates must be 4x4 unitaries");
    }
}

CircuitLayout xyz_circuit(const XYZParams& params, int sites, int steps, int target) {
    if (sites < 2) throw std::invalid_argument("xyz_circuit: need at least two spins");
    std::vector<Mat> layer;
    layer.reserve(static_cast<size_t>(sites - 1));
    for (int bond = 0; bond < sites - 1; ++bond) {
        BondPosition pos = BondPosition::mid;
        if (sites == 2)
            pos = BondPosition::both;
        else if (bond == 0)
            pos = BondPosition::left;
        else if (bond == sites - 2)
            pos = BondPosition::right;
        layer.push_back(build_xyz_gate(params, pos));
    }
    CircuitLayout out;
    out.sites = sites;
    out.steps = steps;
    out.target = target;
    out.layers = {std::move(layer)};
    out.validate();
    return out;
}

CircuitLayout mbl_circuit(const MBLParams& params, int steps, int target) {
    CircuitLayout out;
    out.sites = params.sites();
    out.steps = steps;
    out.target = target;
    out.layers = {build_mbl_layer(params)};
    out.validate();
    return out;
}

Vec spin_ket(Spin s) {
    Vec v = Vec::Zero(2);
    v(s == Spin::up ? 0 : 1) = 1.0;
    return v;
}

Vec product_state(const std::vector<Spin>& spins) {
    if (spins.empty()) throw std::invalid_argument("product_state: empty spin list");
    std::vector<Vec> kets;
    kets.reserve(spins.size());
    for (Spin s : spins) kets.push_back(spin_ket(s));
    return product_state(kets);
}

Vec product_state(const std::vector<Vec>& site_kets) {
    if (site_kets.empty()) throw std::invalid_argument("product_state: empty ket list");
    Vec state = Vec::Ones(1);
    for (const Vec& ket : site_kets) {
        if (ket.size() != 2) throw std::invalid_argument("product_state: site kets must be 2-d");
        Vec next(state.size() * 2);
        for (Eigen::Index i = 0; i < state.size(); ++i) {
            next(2 * i) = state(i) * ket(0);
            next(2 * i + 1) = state(i) * ket(1);
        }
        state.swap(next);
    }
    return state;
}

void ControlSequence::validate_shape(int total_steps) const {
    if (k_start < 0 || k_stop < k_start || k_stop > total_steps)
        throw std::invalid_argument("ControlSequence: window must lie inside [0, N)");
    if (gates.size() != static_cast<size_t>(k_stop - k_start))
        throw std::invalid_argument("ControlSequence: gate count must match window length");
    for (const auto& g : gates)
        if (g.rows() != 2 || g.cols() != 2)
            throw std::invalid_argument("ControlSequence: control gates must be 2x2");
}

void ControlSequence::validate(int total_steps, double tol) const {
    validate_shape(total_steps);
    for (const auto& g : gates)
        if (!is_unitary(g, tol))
            throw std::invalid_argument("ControlSequence: control gates must be unitary");
}

ControlSequence ControlSequence::identity(int k_start, int k_stop, int dim) {
    ControlSequence c;
    c.k_start = k_start;
    c.k_stop = k_stop;
    c.gates.assign(static_cast<size_t>(k_stop - k_start), Mat::Identity(dim, dim));
    return c;
}

}   // namespace qrom
