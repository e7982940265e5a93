#pragma once

#include "qrom/controls.hpp"
#include "qrom/models.hpp"
#include "qrom/rom.hpp"

#include <functional>
#include <vector>

namespace qrom {

inline constexpr int kStateVectorCap = 24;

/// Gate kernels on a state vector whose qubit 0 is the most significant bit.
void apply_two_site_gate(Vec& state, int total_qubits, int left_qubit, const Mat& gate4);
void apply_single_site_gate(Vec& state, int total_qubits, int qubit, const Mat& gate2);

/// Applies the staircase layers step by step; observer(k, state) fires at
/// k = 0 with the initial state and after every step. The state may carry
/// extra low-order (ancilla) qubits beyond layout.sites.
void evolve(const CircuitLayout& layout, Vec state, const ControlSequence* controls,
            const std::function<void(int, const Vec&)>& observer, int cap = kStateVectorCap);

/// Reduced density matrix of the listed qubits (first listed = slow index).
Mat reduced_density(const Vec& state, int total_qubits, const std::vector<int>& qubits);

Trajectory exact_trajectory(const CircuitLayout& layout, const Vec& psi0,
                            const ControlSequence* controls = nullptr,
                            int cap = kStateVectorCap);

/// Trace-one Choi matrix of the channel from the target spin's initial state
/// to spin_out's state after k steps, obtained by evolving one ancilla
/// maximally entangled with the target. site_states supplies every spin's
/// initial ket; the target's entry is ignored.
ChoiMatrix process_channel(const CircuitLayout& layout, const std::vector<Vec>& site_states,
                           int spin_out, int k, const ControlSequence* controls = nullptr,
                           int cap = kStateVectorCap);

/// I_{l->m}(k) in bits for every spin m and step k; values are raw, any
/// display rescale is applied downstream.
struct InfoFlowMap {
    int source = 0;
    Eigen::MatrixXd values;   // sites x (steps + 1)
};

InfoFlowMap info_flow(const CircuitLayout& layout, const std::vector<Vec>& site_states,
                      const ControlSequence* controls = nullptr, int cap = kStateVectorCap);

/// Per-step Hilbert-space bound 2^(cone spin count): a spin is inside the
/// cone at step k when the trace distance of its reduced state from its
/// initial one exceeds delta; the target spin always counts.
std::vector<double> light_cone_bound(const CircuitLayout& layout, const Vec& psi0, double delta,
                                     int cap = kStateVectorCap);

/// Entrywise arithmetic mean; all maps must share source and shape.
InfoFlowMap average_maps(const std::vector<InfoFlowMap>& maps);

}   // namespace qrom
