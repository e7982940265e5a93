#pragma once

#include "qrom/linalg.hpp"

namespace qrom {

/// Sequence of single-spin control unitaries u_1..u_dn applied to the target
/// spin on the discrete-time window [k_start, k_stop). At step k inside the
/// window, gate(k) acts immediately before that step's two-site layer.
struct ControlSequence {
    std::vector<Mat> gates;
    int k_start = 0;
    int k_stop = 0;

    int length() const { return k_stop - k_start; }
    bool active_at(int step) const { return step >= k_start && step < k_stop; }
    const Mat& gate(int step) const { return gates.at(static_cast<size_t>(step - k_start)); }

    /// Checks window consistency and unitarity of every gate.
    void validate(int total_steps, double tol = 1e-10) const;
    /// Window and shape checks only; loss evaluation accepts ambient
    /// (non-unitary) gates so gradients can be probed off the manifold.
    void validate_shape(int total_steps) const;

    static ControlSequence identity(int k_start, int k_stop, int dim = 2);
};

}   // namespace qrom
