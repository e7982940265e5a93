#pragma once

#include "qrom/controls.hpp"
#include "qrom/envnet.hpp"

#include <vector>

namespace qrom {

/// Choi matrix of a single-spin channel, stored with (output (x) input) index
/// pairing: row = s * d_in + b. The unnormalized view has trace d_S for a
/// trace-preserving channel; the trace-one view feeds entropy computations.
struct ChoiMatrix {
    Mat data;
    bool trace_one = false;

    ChoiMatrix as_trace_one() const;
    Mat output_marginal() const;
    Mat input_marginal() const;
};

/// I = S(rho_out) + S(rho_in) - S(Omega) in bits, on the trace-one view.
double mutual_information(const ChoiMatrix& omega);

/// Joint (left bond (x) system (x) right bond) amplitude. Stored as a
/// column-major (r_right, 2 * r_left) matrix whose column index is a*2 + s,
/// so the flat index is a*(2*r_right) + s*r_right + b.
struct RomState {
    Mat amp;
    int r_left = 1;
    int r_right = 1;
};

struct Trajectory {
    std::vector<Mat> rho;   // 2x2 target-spin states, k = 0..N
    std::vector<double> sx, sy, sz, purity;

    int steps() const { return static_cast<int>(rho.size()) - 1; }
};

/// Reduced-order model of the target spin: per-step effective gates kept in
/// factored form, U_m = sum_ij BL_i (x) (AR_j AL_i) (x) BR_j. A missing
/// environment side is represented by a single trivial dyad.
struct ReducedOrderModel {
    int target = 0;
    int steps = 0;
    std::vector<int> left_ranks;    // r(0..N)
    std::vector<int> right_ranks;   // r(0..N)
    std::vector<std::vector<Mat>> sys_left, sys_right;       // 2x2 dyad factors per step
    std::vector<std::vector<Mat>> left_blocks, right_blocks; // bond blocks per step
    Vec psi_system0;
    double epsilon = 0.0;

    int eff_dim(int k) const { return 2 * left_ranks.at(k) * right_ranks.at(k); }
    RomState initial_state(const Vec* system_override = nullptr) const;
    /// Applies the optional control on the system leg, then effective gate
    /// `step`+1 (step is 0-based).
    RomState apply_step(const RomState& in, int step, const Mat* control) const;
    /// Adjoint of apply_step, mapping step `step`+1 amplitudes back.
    RomState apply_step_adjoint(const RomState& in, int step, const Mat* control) const;
    /// Applies a bare gate on the system leg only.
    static RomState apply_system_gate(const RomState& in, const Mat& u);
    Mat dense_eff_gate(int step) const;
    Mat reduced_system_state(const RomState& state) const;
    void validate() const;
};

ReducedOrderModel build_rom(const ChainEnvironment& env, const Vec& psi_system0);

Trajectory propagate(const ReducedOrderModel& rom, const ControlSequence* controls = nullptr);

/// Unnormalized Choi matrix of the channel from the target spin's initial
/// state to its state after k steps, with controls interleaved.
ChoiMatrix channel(const ReducedOrderModel& rom, const ControlSequence* controls, int k);

}   // namespace qrom
