#pragma once

#include "qrom/linalg.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace qrom {

Mat sigma_x();
Mat sigma_y();
Mat sigma_z();
Mat pauli(int k);   // 1,2,3 -> x,y,z

enum class Spin { up, down };

/// Couplings, fields and the step size of the discrete-time XYZ chain.
struct XYZParams {
    Eigen::Vector3d coupling{0.9, 1.0, 1.1};
    Eigen::Vector3d field{0.2, 0.2, 0.2};
    double tau = 0.15;

    void validate() const;
};

/// Field-weight placement for a two-site XYZ gate. Chain ends carry the full
/// single-spin field, interior spins split theirs between the two adjacent
/// bonds; `both` covers the degenerate two-spin chain.
enum class BondPosition { left, mid, right, both };

Mat build_xyz_gate(const XYZParams& params, BondPosition position);

/// Disordered Floquet layer parameters. fields[i] is the z-field angle of
/// spin i; the last spin carries a z-field only when field_on_last is set.
struct MBLParams {
    double coupling = 0.3;
    std::vector<double> fields;
    bool field_on_last = false;

    int sites() const { return static_cast<int>(fields.size()); }
    void validate() const;
};

/// Uniform(0, 2*pi) angles, reproducible across platforms for a fixed seed.
std::vector<double> sample_disorder(std::uint64_t seed, int count);

/// The Floquet layer as an ordered list of two-site gates over bonds
/// (0,1)..(n-2,n-1); composing them in staircase order reproduces the layer's
/// dense operator exactly.
std::vector<Mat> build_mbl_layer(const MBLParams& params);

/// Discrete-time circuit: `steps` repetitions of two-site layers swept
/// left-to-right over nearest-neighbour bonds, plus the controlled spin.
/// `layers` holds either one layer (applied at every step) or one per step.
struct CircuitLayout {
    int sites = 0;
    int steps = 0;
    int target = 0;
    std::vector<std::vector<Mat>> layers;

    const Mat& gate(int step, int bond) const;
    bool time_invariant() const { return layers.size() == 1; }
    void validate() const;
};

CircuitLayout xyz_circuit(const XYZParams& params, int sites, int steps, int target);
CircuitLayout mbl_circuit(const MBLParams& params, int steps, int target);

/// State-vector index convention: spin 0 is the most significant bit, with
/// |up> = (1, 0).
Vec product_state(const std::vector<Spin>& spins);
Vec product_state(const std::vector<Vec>& site_kets);

Vec spin_ket(Spin s);

}   // namespace qrom
