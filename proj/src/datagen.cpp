#include "ggode/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace ggode {

namespace {

constexpr double kLjCutoff = 2.5;

double lj_shift() {
    // V(r_c) with epsilon = sigma = 1.
    const double ir6 = std::pow(1.0 / kLjCutoff, 6);
    return 4.0 * (ir6 * ir6 - ir6);
}

double min_image(double d, double box) {
    if (d > 0.5 * box) d -= box;
    if (d < -0.5 * box) d += box;
    return d;
}

}  // namespace

void EnvironmentSpec::validate() const {
    if (box_lo.size() != box_hi.size()) throw DataError("environment: box extents mismatch");
    for (std::size_t d = 0; d < box_lo.size(); ++d)
        if (!(box_hi[d] > box_lo[d])) throw DataError("environment: empty box extent");
    if (kind == EnvKind::LennardJones) {
        if (!(temperature > 0.0)) throw DataError("environment: temperature must be > 0");
    } else {
        if (dims() != 2) throw DataError("environment: ramp_box is 2-D");
        for (const Segment2D& s : ramps) {
            const double len = std::hypot(s.x1 - s.x0, s.y1 - s.y0);
            if (len <= 0.0) throw DataError("environment: degenerate ramp segment");
            auto inside = [&](double x, double y) {
                return x >= box_lo[0] && x <= box_hi[0] && y >= box_lo[1] && y <= box_hi[1];
            };
            if (!inside(s.x0, s.y0) || !inside(s.x1, s.y1))
                throw DataError("environment: ramp segment outside box");
        }
    }
}

TrajectoryRecord simulate_lj(const EnvironmentSpec& env, int n_particles, int steps, double dt,
                             Rng rng, LjDiagnostics* diag) {
    if (env.kind != EnvKind::LennardJones) throw DataError("simulate_lj: wrong environment kind");
    env.validate();
    if (dt <= 0.0) throw DataError("simulate_lj: dt must be positive");
    if (steps < 3) throw DataError("simulate_lj: need at least 3 steps");
    const int D = env.dims();
    const int N = n_particles;
    std::vector<double> box(D);
    for (int d = 0; d < D; ++d) box[d] = env.box_hi[d] - env.box_lo[d];

    // Jittered lattice placement, retried until no pair is closer than 0.5.
    std::vector<double> x(static_cast<std::size_t>(N) * D);
    int per_side = 1;
    while (std::pow(per_side, D) < N) ++per_side;
    bool placed = false;
    for (int attempt = 0; attempt < 100 && !placed; ++attempt) {
        for (int i = 0; i < N; ++i) {
            int rem = i;
            for (int d = 0; d < D; ++d) {
                const int cell = rem % per_side;
                rem /= per_side;
                const double spacing = box[d] / per_side;
                const double jitter = rng.uniform(-0.05, 0.05) * spacing;
                x[static_cast<std::size_t>(i) * D + d] =
                    env.box_lo[d] + (cell + 0.5) * spacing + jitter;
            }
        }
        placed = true;
        for (int i = 0; i < N && placed; ++i)
            for (int j = i + 1; j < N && placed; ++j) {
                double r2 = 0.0;
                for (int d = 0; d < D; ++d) {
                    const double dd = min_image(x[static_cast<std::size_t>(i) * D + d] -
                                                    x[static_cast<std::size_t>(j) * D + d],
                                                box[d]);
                    r2 += dd * dd;
                }
                if (r2 < 0.25) placed = false;
            }
    }
    if (!placed) throw DataError("simulate_lj: could not place particles without overlap");

    // Maxwell-Boltzmann velocities, drift removed (mass 1).
    std::vector<double> v(static_cast<std::size_t>(N) * D);
    const double vstd = std::sqrt(env.temperature);
    for (double& vv : v) vv = rng.normal(0.0, vstd);
    for (int d = 0; d < D; ++d) {
        double mean = 0.0;
        for (int i = 0; i < N; ++i) mean += v[static_cast<std::size_t>(i) * D + d];
        mean /= N;
        for (int i = 0; i < N; ++i) v[static_cast<std::size_t>(i) * D + d] -= mean;
    }

    const double shift = lj_shift();
    std::vector<double> f(static_cast<std::size_t>(N) * D);
    double potential = 0.0;
    auto compute_forces = [&]() {
        std::fill(f.begin(), f.end(), 0.0);
        potential = 0.0;
        std::vector<double> dr(D);
        for (int i = 0; i < N; ++i)
            for (int j = i + 1; j < N; ++j) {
                double r2 = 0.0;
                for (int d = 0; d < D; ++d) {
                    dr[d] = min_image(x[static_cast<std::size_t>(i) * D + d] -
                                          x[static_cast<std::size_t>(j) * D + d],
                                      box[d]);
                    r2 += dr[d] * dr[d];
                }
                if (r2 > kLjCutoff * kLjCutoff) continue;
                const double ir2 = 1.0 / r2;
                const double ir6 = ir2 * ir2 * ir2;
                // F(r)/r = 24 (2/r^12 - 1/r^6) / r^2
                const double fr = 24.0 * ir2 * ir6 * (2.0 * ir6 - 1.0);
                potential += 4.0 * ir6 * (ir6 - 1.0) - shift;
                for (int d = 0; d < D; ++d) {
                    const double fd = fr * dr[d];
                    f[static_cast<std::size_t>(i) * D + d] += fd;
                    f[static_cast<std::size_t>(j) * D + d] -= fd;
                }
            }
    };
    compute_forces();

    TrajectoryRecord rec;
    rec.env_id = env.env_id;
    rec.dt = dt;
    rec.T = steps;
    rec.N = N;
    rec.D = D;
    rec.times.resize(steps);
    rec.positions.resize(static_cast<std::size_t>(steps) * N * D);
    rec.velocities.assign(rec.positions.size(), 0.0);
    rec.accelerations.assign(rec.positions.size(), 0.0);

    auto record_state = [&](int t) {
        rec.times[t] = t * dt;
        std::copy(x.begin(), x.end(), rec.positions.begin() + static_cast<std::size_t>(t) * N * D);
        if (diag) {
            double kinetic = 0.0;
            for (double vv : v) kinetic += 0.5 * vv * vv;
            diag->total_energy.push_back(kinetic + potential);
            std::vector<double> p(D, 0.0);
            for (int i = 0; i < N; ++i)
                for (int d = 0; d < D; ++d) p[d] += v[static_cast<std::size_t>(i) * D + d];
            double norm = 0.0;
            for (double pd : p) norm += pd * pd;
            diag->momentum_norm.push_back(std::sqrt(norm));
        }
    };

    record_state(0);
    for (int t = 1; t < steps; ++t) {
        for (std::size_t k = 0; k < v.size(); ++k) v[k] += 0.5 * dt * f[k];
        for (int i = 0; i < N; ++i)
            for (int d = 0; d < D; ++d) {
                double& px = x[static_cast<std::size_t>(i) * D + d];
                px += v[static_cast<std::size_t>(i) * D + d] * dt;
                while (px < env.box_lo[d]) px += box[d];
                while (px >= env.box_hi[d]) px -= box[d];
            }
        compute_forces();
        for (std::size_t k = 0; k < v.size(); ++k) v[k] += 0.5 * dt * f[k];
        record_state(t);
    }

    derive_features(rec);
    return rec;
}

TrajectoryRecord simulate_rampbox(const EnvironmentSpec& env, int n_particles, int steps, double dt,
                                  Rng rng) {
    if (env.kind != EnvKind::RampBox) throw DataError("simulate_rampbox: wrong environment kind");
    env.validate();
    if (dt <= 0.0) throw DataError("simulate_rampbox: dt must be positive");
    if (steps < 3) throw DataError("simulate_rampbox: need at least 3 steps");
    const int N = n_particles;
    const double lx = env.box_hi[0] - env.box_lo[0];
    const double ly = env.box_hi[1] - env.box_lo[1];
    const double gravity = 1.0 * ly;          // scaled to the box height
    const double sigma = 0.05 * std::min(lx, ly);
    const double rep_cut = 1.5 * sigma;

    std::vector<double> x(static_cast<std::size_t>(N) * 2), v(static_cast<std::size_t>(N) * 2);
    for (int i = 0; i < N; ++i) {
        // Spawn in the upper half so there is room to fall.
        x[2 * i] = rng.uniform(env.box_lo[0] + 0.05 * lx, env.box_hi[0] - 0.05 * lx);
        x[2 * i + 1] = rng.uniform(env.box_lo[1] + 0.55 * ly, env.box_hi[1] - 0.05 * ly);
        v[2 * i] = rng.normal(0.0, 0.1 * lx);
        v[2 * i + 1] = rng.normal(0.0, 0.05 * ly);
    }
    std::vector<double> f(static_cast<std::size_t>(N) * 2);
    auto compute_forces = [&]() {
        std::fill(f.begin(), f.end(), 0.0);
        for (int i = 0; i < N; ++i) f[2 * i + 1] -= gravity;
        const double s6 = std::pow(sigma, 6);
        for (int i = 0; i < N; ++i)
            for (int j = i + 1; j < N; ++j) {
                const double dx = x[2 * i] - x[2 * j];
                const double dy = x[2 * i + 1] - x[2 * j + 1];
                double r2 = dx * dx + dy * dy;
                if (r2 > rep_cut * rep_cut) continue;
                r2 = std::max(r2, 0.09 * sigma * sigma);  // clamp against overlap blowup
                const double ir2 = 1.0 / r2;
                const double s6r6 = s6 * ir2 * ir2 * ir2;
                const double fr = 48.0 * s6r6 * s6r6 * ir2;
                f[2 * i] += fr * dx;
                f[2 * i + 1] += fr * dy;
                f[2 * j] -= fr * dx;
                f[2 * j + 1] -= fr * dy;
            }
    };

    auto reflect = [&](int i, double ox, double oy) {
        // Walls first, then ramp segments relative to the step's start point.
        for (int pass = 0; pass < 4; ++pass) {
            bool moved = false;
            if (x[2 * i] < env.box_lo[0]) {
                x[2 * i] = 2 * env.box_lo[0] - x[2 * i];
                v[2 * i] = -v[2 * i];
                moved = true;
            }
            if (x[2 * i] > env.box_hi[0]) {
                x[2 * i] = 2 * env.box_hi[0] - x[2 * i];
                v[2 * i] = -v[2 * i];
                moved = true;
            }
            if (x[2 * i + 1] < env.box_lo[1]) {
                x[2 * i + 1] = 2 * env.box_lo[1] - x[2 * i + 1];
                v[2 * i + 1] = -v[2 * i + 1];
                moved = true;
            }
            if (x[2 * i + 1] > env.box_hi[1]) {
                x[2 * i + 1] = 2 * env.box_hi[1] - x[2 * i + 1];
                v[2 * i + 1] = -v[2 * i + 1];
                moved = true;
            }
            for (const Segment2D& s : env.ramps) {
                const double ex = s.x1 - s.x0, ey = s.y1 - s.y0;
                const double len2 = ex * ex + ey * ey;
                double nx = -ey, ny = ex;
                const double nlen = std::sqrt(nx * nx + ny * ny);
                nx /= nlen;
                ny /= nlen;
                const double side_old = (ox - s.x0) * nx + (oy - s.y0) * ny;
                const double side_new = (x[2 * i] - s.x0) * nx + (x[2 * i + 1] - s.y0) * ny;
                if (side_old * side_new >= 0.0) continue;
                // Crossing point must project onto the segment.
                const double t = side_old / (side_old - side_new);
                const double cx = ox + t * (x[2 * i] - ox);
                const double cy = oy + t * (x[2 * i + 1] - oy);
                const double proj = ((cx - s.x0) * ex + (cy - s.y0) * ey) / len2;
                if (proj < 0.0 || proj > 1.0) continue;
                x[2 * i] -= 2.0 * side_new * nx;
                x[2 * i + 1] -= 2.0 * side_new * ny;
                const double vn = v[2 * i] * nx + v[2 * i + 1] * ny;
                v[2 * i] -= 2.0 * vn * nx;
                v[2 * i + 1] -= 2.0 * vn * ny;
                moved = true;
            }
            if (!moved) break;
        }
        x[2 * i] = std::clamp(x[2 * i], env.box_lo[0], env.box_hi[0]);
        x[2 * i + 1] = std::clamp(x[2 * i + 1], env.box_lo[1], env.box_hi[1]);
    };

    compute_forces();
    TrajectoryRecord rec;
    rec.env_id = env.env_id;
    rec.dt = dt;
    rec.T = steps;
    rec.N = N;
    rec.D = 2;
    rec.times.resize(steps);
    rec.positions.resize(static_cast<std::size_t>(steps) * N * 2);
    rec.velocities.assign(rec.positions.size(), 0.0);
    rec.accelerations.assign(rec.positions.size(), 0.0);

    auto record_state = [&](int t) {
        rec.times[t] = t * dt;
        std::copy(x.begin(), x.end(), rec.positions.begin() + static_cast<std::size_t>(t) * N * 2);
    };

    record_state(0);
    for (int t = 1; t < steps; ++t) {
        for (std::size_t k = 0; k < v.size(); ++k) v[k] += 0.5 * dt * f[k];
        for (int i = 0; i < N; ++i) {
            const double ox = x[2 * i], oy = x[2 * i + 1];
            x[2 * i] += v[2 * i] * dt;
            x[2 * i + 1] += v[2 * i + 1] * dt;
            reflect(i, ox, oy);
        }
        compute_forces();
        for (std::size_t k = 0; k < v.size(); ++k) v[k] += 0.5 * dt * f[k];
        record_state(t);
    }

    derive_features(rec);
    return rec;
}

void derive_features(TrajectoryRecord& rec) {
    if (rec.T < 3) throw DataError("derive_features: need T >= 3");
    const int N = rec.N, D = rec.D;
    for (int t = 1; t < rec.T; ++t)
        for (int i = 0; i < N; ++i)
            for (int d = 0; d < D; ++d)
                rec.vel(t, i, d) = rec.pos(t, i, d) - rec.pos(t - 1, i, d);
    for (int t = 2; t < rec.T; ++t)
        for (int i = 0; i < N; ++i)
            for (int d = 0; d < D; ++d)
                rec.acc(t, i, d) = rec.pos(t, i, d) - 2.0 * rec.pos(t - 1, i, d) + rec.pos(t - 2, i, d);
    for (int i = 0; i < N; ++i)
        for (int d = 0; d < D; ++d) {
            rec.vel(0, i, d) = rec.vel(1, i, d);
            rec.acc(0, i, d) = rec.acc(2, i, d);
            rec.acc(1, i, d) = rec.acc(2, i, d);
        }
}

TrajectoryRecord subsample(const TrajectoryRecord& rec, int stride) {
    if (stride < 1) throw DataError("subsample: stride must be >= 1");
    TrajectoryRecord out;
    out.env_id = rec.env_id;
    out.dt = rec.dt * stride;
    out.N = rec.N;
    out.D = rec.D;
    out.T = (rec.T + stride - 1) / stride;
    if (out.T < 3) throw DataError("subsample: fewer than 3 frames remain");
    out.times.resize(out.T);
    const std::size_t frame = static_cast<std::size_t>(rec.N) * rec.D;
    out.positions.resize(static_cast<std::size_t>(out.T) * frame);
    out.velocities.assign(out.positions.size(), 0.0);
    out.accelerations.assign(out.positions.size(), 0.0);
    for (int t = 0; t < out.T; ++t) {
        out.times[t] = t * out.dt;
        std::copy_n(rec.positions.begin() + static_cast<std::size_t>(t) * stride * frame, frame,
                    out.positions.begin() + static_cast<std::size_t>(t) * frame);
    }
    derive_features(out);
    return out;
}

NormStats fit_zscore(const std::vector<TrajectoryRecord>& records) {
    if (records.empty()) throw DataError("fit_zscore: empty dataset");
    const int D = records[0].D;
    NormStats st;
    st.mean_p.assign(D, 0.0);
    st.std_p.assign(D, 0.0);
    st.mean_v.assign(D, 0.0);
    st.std_v.assign(D, 0.0);
    st.mean_a.assign(D, 0.0);
    st.std_a.assign(D, 0.0);

    auto accumulate = [&](auto get, std::vector<double>& mean, std::vector<double>& stdv) {
        std::vector<double> sum(D, 0.0), sum2(D, 0.0);
        std::size_t count = 0;
        for (const TrajectoryRecord& r : records) {
            if (r.D != D) throw DataError("fit_zscore: records disagree on dimension");
            for (int t = 0; t < r.T; ++t)
                for (int i = 0; i < r.N; ++i)
                    for (int d = 0; d < D; ++d) {
                        const double v = get(r, t, i, d);
                        sum[d] += v;
                        sum2[d] += v * v;
                    }
            count += static_cast<std::size_t>(r.T) * r.N;
        }
        for (int d = 0; d < D; ++d) {
            mean[d] = sum[d] / count;
            const double var = std::max(sum2[d] / count - mean[d] * mean[d], 0.0);
            stdv[d] = std::max(std::sqrt(var), 1e-8);
        }
    };
    accumulate([](const TrajectoryRecord& r, int t, int i, int d) { return r.pos(t, i, d); },
               st.mean_p, st.std_p);
    accumulate([](const TrajectoryRecord& r, int t, int i, int d) { return r.vel(t, i, d); },
               st.mean_v, st.std_v);
    accumulate([](const TrajectoryRecord& r, int t, int i, int d) { return r.acc(t, i, d); },
               st.mean_a, st.std_a);
    return st;
}

TrajectoryRecord apply_zscore(const TrajectoryRecord& rec, const NormStats& stats) {
    if (stats.dims() != rec.D) throw DataError("apply_zscore: dimension mismatch");
    TrajectoryRecord out = rec;
    for (int t = 0; t < rec.T; ++t)
        for (int i = 0; i < rec.N; ++i)
            for (int d = 0; d < rec.D; ++d) {
                out.pos(t, i, d) = (rec.pos(t, i, d) - stats.mean_p[d]) / stats.std_p[d];
                out.vel(t, i, d) = (rec.vel(t, i, d) - stats.mean_v[d]) / stats.std_v[d];
                out.acc(t, i, d) = (rec.acc(t, i, d) - stats.mean_a[d]) / stats.std_a[d];
            }
    return out;
}

TrajectoryRecord invert_zscore(const TrajectoryRecord& rec, const NormStats& stats) {
    if (stats.dims() != rec.D) throw DataError("invert_zscore: dimension mismatch");
    TrajectoryRecord out = rec;
    for (int t = 0; t < rec.T; ++t)
        for (int i = 0; i < rec.N; ++i)
            for (int d = 0; d < rec.D; ++d) {
                out.pos(t, i, d) = rec.pos(t, i, d) * stats.std_p[d] + stats.mean_p[d];
                out.vel(t, i, d) = rec.vel(t, i, d) * stats.std_v[d] + stats.mean_v[d];
                out.acc(t, i, d) = rec.acc(t, i, d) * stats.std_a[d] + stats.mean_a[d];
            }
    return out;
}

}  // namespace ggode
