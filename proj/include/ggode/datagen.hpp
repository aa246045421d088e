#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ggode/rng.hpp"
#include "ggode/tensor.hpp"

namespace ggode {

enum class EnvKind { LennardJones, RampBox };
enum class Boundary { Periodic, Reflective };

struct Segment2D {
    double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
};

struct EnvironmentSpec {
    int env_id = 0;
    EnvKind kind = EnvKind::LennardJones;
    double temperature = 1.0;          // reduced units, LJ only
    std::vector<Segment2D> ramps;      // ramp_box only
    std::vector<double> box_lo, box_hi;
    Boundary boundary = Boundary::Periodic;

    int dims() const { return static_cast<int>(box_lo.size()); }
    void validate() const;
};

// One simulated run. Velocities and accelerations hold position
// differences (not divided by dt) once derive_features has run.
struct TrajectoryRecord {
    int env_id = 0;
    double dt = 0.0;
    int T = 0, N = 0, D = 0;
    std::vector<double> times;          // length T, strictly increasing
    std::vector<double> positions;      // T*N*D row-major
    std::vector<double> velocities;
    std::vector<double> accelerations;

    std::size_t off(int t, int i, int d) const {
        return (static_cast<std::size_t>(t) * N + i) * D + d;
    }
    double& pos(int t, int i, int d) { return positions[off(t, i, d)]; }
    double pos(int t, int i, int d) const { return positions[off(t, i, d)]; }
    double& vel(int t, int i, int d) { return velocities[off(t, i, d)]; }
    double vel(int t, int i, int d) const { return velocities[off(t, i, d)]; }
    double& acc(int t, int i, int d) { return accelerations[off(t, i, d)]; }
    double acc(int t, int i, int d) const { return accelerations[off(t, i, d)]; }
};

// Per-dimension z-score statistics for each feature family.
struct NormStats {
    std::vector<double> mean_p, std_p;
    std::vector<double> mean_v, std_v;
    std::vector<double> mean_a, std_a;
    int dims() const { return static_cast<int>(mean_p.size()); }
};

// Per-step conservation diagnostics from the Lennard-Jones integrator.
struct LjDiagnostics {
    std::vector<double> total_energy;      // kinetic + (shifted) potential
    std::vector<double> momentum_norm;     // |sum_i v_i|
};

// Lennard-Jones molecular dynamics in reduced units (epsilon = sigma =
// mass = 1), velocity Verlet, pairwise cutoff 2.5 with shifted
// potential, periodic minimum-image boundaries. Positions start on a
// jittered lattice; initial velocities are Maxwell-Boltzmann at the
// environment temperature with the center-of-mass drift removed.
TrajectoryRecord simulate_lj(const EnvironmentSpec& env, int n_particles, int steps, double dt,
                             Rng rng, LjDiagnostics* diag = nullptr);

// 2-D particles under constant gravity with short-range repulsion
// (repulsive LJ term only), reflecting elastically off box walls and
// ramp segments.
TrajectoryRecord simulate_rampbox(const EnvironmentSpec& env, int n_particles, int steps, double dt,
                                  Rng rng);

// v_t = p_t - p_{t-1}, a_t = p_t - 2 p_{t-1} + p_{t-2}; differences are
// not divided by dt. Leading rows are back-filled with the first
// defined value (v: row 0 copies row 1; a: rows 0,1 copy row 2).
void derive_features(TrajectoryRecord& rec);

// Keep every stride-th frame (starting at 0) and re-derive features.
TrajectoryRecord subsample(const TrajectoryRecord& rec, int stride);

NormStats fit_zscore(const std::vector<TrajectoryRecord>& records);
TrajectoryRecord apply_zscore(const TrajectoryRecord& rec, const NormStats& stats);
TrajectoryRecord invert_zscore(const TrajectoryRecord& rec, const NormStats& stats);

}  // namespace ggode
