#pragma once

// Quasi-static planar continuum-manipulator simulator. A pseudo-rigid-body
// chain of J torsion-sprung links is driven by a cable-displacement
// constraint (quadratic penalty) and pressed against penalty obstacles; each
// frame is the minimizer of the total energy, warm-started from the previous
// frame. Produces synthetic FBG channels at the sensor rate, overhead binary
// rasters at the camera rate, and a geometric contact-truth stream.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cmcd/geometry.hpp"
#include "cmcd/image.hpp"
#include "cmcd/rng.hpp"
#include "cmcd/types.hpp"
#include "cmcd/util.hpp"

namespace cmcd::sim {

struct Obstacle {
    enum class Shape { Ellipse, Box };

    Shape shape = Shape::Ellipse;
    Vec2 center;
    Vec2 semi_axes{5.0, 3.0};
    double stiffness = 1e5;  // penalty weight; hard >> soft

    void validate() const {
        if (semi_axes.x <= 0.0 || semi_axes.y <= 0.0)
            throw std::invalid_argument("obstacle semi-axes must be positive");
        if (stiffness < 0.0) throw std::invalid_argument("obstacle stiffness must be >= 0");
    }

    geom::SignedDistance sdf(Vec2 p) const {
        const Vec2 rel = p - center;
        return shape == Shape::Ellipse ? geom::ellipse_sdf(rel, semi_axes.x, semi_axes.y)
                                       : geom::box_sdf(rel, semi_axes.x, semi_axes.y);
    }

    bool contains(Vec2 p) const {
        const Vec2 r = p - center;
        if (shape == Shape::Ellipse) {
            const double u = r.x / semi_axes.x, v = r.y / semi_axes.y;
            return u * u + v * v <= 1.0;
        }
        return std::abs(r.x) <= semi_axes.x && std::abs(r.y) <= semi_axes.y;
    }

    double max_extent() const { return std::max(semi_axes.x, semi_axes.y); }
};

// Chain geometry and energy constants shared by every frame of a scenario.
struct CmParams {
    int joints = 10;
    double length_mm = 35.0;
    double spring_kappa = 50.0;      // torsion spring constant per joint
    double cable_offset_mm = 2.5;    // cable moment arm: displacement = offset * sum(theta)
    double cable_penalty = 1000.0;   // weight of the displacement constraint penalty
    double tube_radius_mm = 0.25;    // drawn body half-width
    double actuation_min_mm = -10.0;
    double actuation_max_mm = 10.0;
    Vec2 base_position{-17.5, -12.0};
    double base_heading = 0.0;
    int contact_samples_per_link = 2;  // energy samples
    int truth_samples_per_link = 8;    // contact-truth samples

    double link_length() const { return length_mm / joints; }

    void validate() const {
        if (joints < 1) throw std::invalid_argument("joints must be >= 1");
        if (length_mm <= 0.0) throw std::invalid_argument("length_mm must be > 0");
        if (spring_kappa <= 0.0) throw std::invalid_argument("spring_kappa must be > 0");
        if (cable_offset_mm <= 0.0) throw std::invalid_argument("cable_offset_mm must be > 0");
        if (tube_radius_mm <= 0.0) throw std::invalid_argument("tube_radius_mm must be > 0");
    }
};

struct CmState {
    std::vector<double> joint_angles;  // radians, |theta_i| <= pi/2
    double total_length_mm = 35.0;
    Vec2 base_position;
    double base_heading = 0.0;

    static CmState straight(const CmParams& cm) {
        CmState s;
        s.joint_angles.assign(std::size_t(cm.joints), 0.0);
        s.total_length_mm = cm.length_mm;
        s.base_position = cm.base_position;
        s.base_heading = cm.base_heading;
        return s;
    }
};

// Node positions of the chain: nodes[0] = base, nodes[J] = tip.
inline std::vector<Vec2> backbone_nodes(const CmState& s) {
    const std::size_t j = s.joint_angles.size();
    const double l = s.total_length_mm / double(j);
    std::vector<Vec2> nodes(j + 1);
    nodes[0] = s.base_position;
    double heading = s.base_heading;
    for (std::size_t i = 0; i < j; ++i) {
        heading += s.joint_angles[i];
        nodes[i + 1] = nodes[i] + Vec2{std::cos(heading), std::sin(heading)} * l;
    }
    return nodes;
}

inline double polyline_length(const std::vector<Vec2>& nodes) {
    double len = 0.0;
    for (std::size_t i = 1; i < nodes.size(); ++i) len += (nodes[i] - nodes[i - 1]).norm();
    return len;
}

// Tangent angle of the link containing arc position s (piecewise constant).
inline double tangent_angle_at(const CmState& st, double s) {
    const int j = int(st.joint_angles.size());
    const double l = st.total_length_mm / j;
    int link = int(std::floor(s / l));
    link = std::clamp(link, 0, j - 1);
    double heading = st.base_heading;
    for (int i = 0; i <= link; ++i) heading += st.joint_angles[std::size_t(i)];
    return heading;
}

// Local curvature at arc position s: central difference of the tangent field
// over one link length on each side.
inline double local_curvature(const CmState& st, double s) {
    const double l = st.total_length_mm / double(st.joint_angles.size());
    return (tangent_angle_at(st, s + l) - tangent_angle_at(st, s - l)) / (2.0 * l);
}

// Arc positions of the three sensing nodes (centers of the thirds).
inline std::vector<double> sensing_node_positions(double length_mm) {
    return {length_mm / 6.0, length_mm / 2.0, 5.0 * length_mm / 6.0};
}

// ---- energy model ----

namespace detail {

// Penetration of a backbone point into an obstacle: centerline depth, 0 outside.
inline double penetration(const Obstacle& o, Vec2 p) {
    const auto sd = o.sdf(p);
    return sd.value < 0.0 ? -sd.value : 0.0;
}

struct EnergyEval {
    double energy = 0.0;
    std::vector<double> grad;
    std::vector<double> hess;  // row-major J x J Gauss-Newton approximation
};

class EnergyModel {
public:
    EnergyModel(const CmParams& cm, std::span<const Obstacle> obstacles, double actuation)
        : cm_(cm), obstacles_(obstacles), actuation_(actuation) {}

    double energy(std::span<const double> theta) const {
        const int j = cm_.joints;
        const double l = cm_.link_length();
        double e = 0.0, sum = 0.0;
        for (double t : theta) {
            e += cm_.spring_kappa * t * t;
            sum += t;
        }
        const double cable_res = cm_.cable_offset_mm * sum - actuation_;
        e += cm_.cable_penalty * cable_res * cable_res;
        if (!obstacles_.empty()) {
            Vec2 p = cm_.base_position;
            double heading = cm_.base_heading;
            const int m = cm_.contact_samples_per_link;
            for (int li = 0; li < j; ++li) {
                heading += theta[std::size_t(li)];
                const Vec2 dir{std::cos(heading), std::sin(heading)};
                for (int s = 1; s <= m; ++s) {
                    const Vec2 q = p + dir * (l * s / m);
                    for (const auto& o : obstacles_) {
                        const double pen = penetration(o, q);
                        if (pen > 0.0) e += o.stiffness * pen * pen;
                    }
                }
                p = p + dir * l;
            }
        }
        return e;
    }

    // Energy, exact gradient, and Gauss-Newton Hessian (contact curvature
    // approximated by J^T J; elastic and cable terms are exact).
    EnergyEval eval(std::span<const double> theta) const {
        const int j = cm_.joints;
        const double l = cm_.link_length();
        EnergyEval out;
        out.grad.assign(std::size_t(j), 0.0);
        out.hess.assign(std::size_t(j) * j, 0.0);

        double sum = 0.0;
        for (int i = 0; i < j; ++i) {
            const double t = theta[std::size_t(i)];
            out.energy += cm_.spring_kappa * t * t;
            out.grad[std::size_t(i)] += 2.0 * cm_.spring_kappa * t;
            out.hess[std::size_t(i) * j + i] += 2.0 * cm_.spring_kappa;
            sum += t;
        }
        const double c = cm_.cable_offset_mm;
        const double cable_res = c * sum - actuation_;
        out.energy += cm_.cable_penalty * cable_res * cable_res;
        const double gc = 2.0 * cm_.cable_penalty * c * cable_res;
        const double hc = 2.0 * cm_.cable_penalty * c * c;
        for (int a = 0; a < j; ++a) {
            out.grad[std::size_t(a)] += gc;
            for (int b = 0; b < j; ++b) out.hess[std::size_t(a) * j + b] += hc;
        }

        if (obstacles_.empty()) return out;

        std::vector<Vec2> nodes(std::size_t(j) + 1);
        nodes[0] = cm_.base_position;
        double heading = cm_.base_heading;
        std::vector<double> jac(static_cast<std::size_t>(j), 0.0);
        const int m = cm_.contact_samples_per_link;
        for (int li = 0; li < j; ++li) {
            heading += theta[std::size_t(li)];
            const Vec2 dir{std::cos(heading), std::sin(heading)};
            nodes[std::size_t(li) + 1] = nodes[std::size_t(li)] + dir * l;
            for (int s = 1; s <= m; ++s) {
                const Vec2 q = nodes[std::size_t(li)] + dir * (l * s / m);
                for (const auto& o : obstacles_) {
                    const auto sd = o.sdf(q);
                    if (sd.value >= 0.0) continue;
                    const double pen = -sd.value;
                    out.energy += o.stiffness * pen * pen;
                    // d pen / d theta_k = -grad_sdf . d q / d theta_k,
                    // d q / d theta_k = perp(q - node_k) for k <= li.
                    for (int k = 0; k <= li; ++k) {
                        const Vec2 arm = (q - nodes[std::size_t(k)]).perp();
                        jac[std::size_t(k)] = -(sd.gradient.x * arm.x + sd.gradient.y * arm.y);
                    }
                    const double gcoef = 2.0 * o.stiffness * pen;
                    const double hcoef = 2.0 * o.stiffness;
                    for (int a = 0; a <= li; ++a) {
                        out.grad[std::size_t(a)] += gcoef * jac[std::size_t(a)];
                        const double ha = hcoef * jac[std::size_t(a)];
                        for (int b = 0; b <= li; ++b)
                            out.hess[std::size_t(a) * j + b] += ha * jac[std::size_t(b)];
                    }
                }
            }
        }
        return out;
    }

private:
    const CmParams& cm_;
    std::span<const Obstacle> obstacles_;
    double actuation_;
};

// Cholesky solve of (A + lambda I) x = b; A is symmetric positive
// semi-definite by construction. Returns false if the factorization breaks.
inline bool solve_spd(std::vector<double> a, int n, double lambda, const std::vector<double>& b,
                      std::vector<double>& x) {
    for (int i = 0; i < n; ++i) a[std::size_t(i) * n + i] += lambda;
    // in-place LL^T
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < i; ++k) {
            double v = a[std::size_t(i) * n + k];
            for (int m2 = 0; m2 < k; ++m2)
                v -= a[std::size_t(i) * n + m2] * a[std::size_t(k) * n + m2];
            a[std::size_t(i) * n + k] = v / a[std::size_t(k) * n + k];
        }
        double d = a[std::size_t(i) * n + i];
        for (int m2 = 0; m2 < i; ++m2) d -= a[std::size_t(i) * n + m2] * a[std::size_t(i) * n + m2];
        if (d <= 0.0 || !std::isfinite(d)) return false;
        a[std::size_t(i) * n + i] = std::sqrt(d);
    }
    x.assign(std::size_t(n), 0.0);
    for (int i = 0; i < n; ++i) {  // L y = b
        double v = b[std::size_t(i)];
        for (int k = 0; k < i; ++k) v -= a[std::size_t(i) * n + k] * x[std::size_t(k)];
        x[std::size_t(i)] = v / a[std::size_t(i) * n + i];
    }
    for (int i = n - 1; i >= 0; --i) {  // L^T x = y
        double v = x[std::size_t(i)];
        for (int k = i + 1; k < n; ++k) v -= a[std::size_t(k) * n + i] * x[std::size_t(k)];
        x[std::size_t(i)] = v / a[std::size_t(i) * n + i];
    }
    return true;
}

}  // namespace detail

struct EquilibriumResult {
    CmState state;
    bool converged = false;
    int iterations = 0;
    double gradient_norm = 0.0;
    double energy = 0.0;
    std::vector<double> energy_trace;  // accepted iterates, non-increasing
};

class SolveError : public std::runtime_error {
public:
    SolveError(const std::string& msg, EquilibriumResult last_result)
        : std::runtime_error(msg), last(std::move(last_result)) {}
    EquilibriumResult last;
};

inline constexpr int kSolverMaxIterations = 500;
inline constexpr double kSolverGradTol = 1e-8;

namespace detail {
inline EquilibriumResult solve_from(const CmParams& cm, double actuation_mm,
                                    std::span<const Obstacle> obstacles, const CmState& prev);
}

// Minimize the chain energy for a given cable displacement, warm-started
// from prev. Damped (Levenberg) Newton with a gradient-descent fallback.
// A stagnated warm start retries from deterministic alternative seeds
// (straight, uniform curvature) before reporting failure.
inline EquilibriumResult solve_equilibrium(const CmParams& cm, double actuation_mm,
                                           std::span<const Obstacle> obstacles,
                                           const CmState& prev) {
    cm.validate();
    for (const auto& o : obstacles) o.validate();
    if (actuation_mm < cm.actuation_min_mm || actuation_mm > cm.actuation_max_mm)
        throw std::invalid_argument("actuation outside configured range");
    if (int(prev.joint_angles.size()) != cm.joints)
        throw std::invalid_argument("warm-start state has wrong joint count");

    EquilibriumResult best = detail::solve_from(cm, actuation_mm, obstacles, prev);
    if (best.converged) return best;

    CmState straight = CmState::straight(cm);
    CmState uniform = straight;
    const double theta_u = cm.cable_penalty * cm.cable_offset_mm * actuation_mm /
                           (cm.spring_kappa + cm.cable_penalty * cm.cable_offset_mm *
                                                  cm.cable_offset_mm * cm.joints);
    for (auto& t : uniform.joint_angles) t = theta_u;
    for (const CmState& seed : {straight, uniform}) {
        auto alt = detail::solve_from(cm, actuation_mm, obstacles, seed);
        if (alt.converged && (!best.converged || alt.energy < best.energy)) best = std::move(alt);
        if (best.converged) break;
    }
    return best;
}

namespace detail {

inline EquilibriumResult solve_from(const CmParams& cm, double actuation_mm,
                                    std::span<const Obstacle> obstacles, const CmState& prev) {

    const int j = cm.joints;
    const double half_pi = 1.5707963267948966;
    const double tol = kSolverGradTol * std::max(1.0, cm.spring_kappa);
    detail::EnergyModel model(cm, obstacles, actuation_mm);

    std::vector<double> theta = prev.joint_angles;
    for (auto& t : theta) t = std::clamp(t, -half_pi, half_pi);

    auto clamp_all = [&](std::vector<double>& v) {
        for (auto& t : v) t = std::clamp(t, -half_pi, half_pi);
    };
    auto inf_norm = [](const std::vector<double>& v) {
        double n = 0.0;
        for (double x : v) n = std::max(n, std::abs(x));
        return n;
    };

    EquilibriumResult res;
    detail::EnergyEval ev = model.eval(theta);
    res.energy_trace.push_back(ev.energy);
    double lambda = 1e-9;
    std::vector<double> step, trial;
    std::vector<double> neg_grad(std::size_t(j), 0.0);

    int iter = 0;
    for (; iter < kSolverMaxIterations; ++iter) {
        const double gnorm = inf_norm(ev.grad);
        if (gnorm <= tol) {
            res.converged = true;
            break;
        }
        for (int i = 0; i < j; ++i) neg_grad[std::size_t(i)] = -ev.grad[std::size_t(i)];

        // A step is accepted on a strict energy decrease, or on an
        // ulp-level-equal energy with a strictly contracting gradient (the
        // quadratic tail sits below the representable resolution of E while
        // the gradient still has ~8 digits to go).
        bool accepted = false;
        bool have_eval = false;
        detail::EnergyEval trial_ev;
        const double e_slack =
            8.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(ev.energy));
        auto try_accept = [&](const std::vector<double>& cand) {
            const double e_try = model.energy(cand);
            if (!std::isfinite(e_try)) return false;
            if (e_try < ev.energy) {
                theta = cand;
                have_eval = false;
                return true;
            }
            if (e_try <= ev.energy + e_slack) {
                trial_ev = model.eval(cand);
                if (inf_norm(trial_ev.grad) <= 0.9 * gnorm) {
                    theta = cand;
                    have_eval = true;
                    return true;
                }
            }
            return false;
        };

        for (int attempt = 0; attempt < 40 && !accepted; ++attempt) {
            if (detail::solve_spd(ev.hess, j, lambda, neg_grad, step)) {
                trial = theta;
                for (int i = 0; i < j; ++i) trial[std::size_t(i)] += step[std::size_t(i)];
                clamp_all(trial);
                const double e_before = ev.energy;
                // model reduction under the local quadratic, for the LM ratio
                double pred = 0.0;
                for (int r = 0; r < j; ++r) {
                    double hs = 0.0;
                    for (int c2 = 0; c2 < j; ++c2)
                        hs += ev.hess[std::size_t(r) * j + c2] * step[std::size_t(c2)];
                    pred += -ev.grad[std::size_t(r)] * step[std::size_t(r)] - 0.5 * hs * step[std::size_t(r)];
                }
                if (try_accept(trial)) {
                    // trust-region style damping update: shrink lambda only
                    // when the quadratic model predicted the step well, so
                    // contact-activation creases cannot set up a limit cycle
                    const double actual = e_before - model.energy(theta);
                    const double rho = pred > 0.0 ? actual / pred : 0.0;
                    if (rho > 0.75) lambda = std::max(lambda / 3.0, 1e-12);
                    else if (rho < 0.25) lambda = std::min(lambda * 2.0, 1e14);
                    accepted = true;
                    break;
                }
            }
            lambda = std::max(lambda, 1e-9) * 10.0;
            if (lambda > 1e14) break;
        }
        if (!accepted) {
            // steepest descent with backtracking
            double t = 1.0 / std::max(1.0, gnorm);
            for (int bt = 0; bt < 60 && !accepted; ++bt, t *= 0.5) {
                trial = theta;
                for (int i = 0; i < j; ++i) trial[std::size_t(i)] -= t * ev.grad[std::size_t(i)];
                clamp_all(trial);
                accepted = try_accept(trial);
            }
        }
        if (!accepted) break;  // stagnated
        ev = have_eval ? std::move(trial_ev) : model.eval(theta);
        // ulp-equal acceptances may re-evaluate a hair above the recorded
        // value; clamp so the reported trace is exactly non-increasing
        res.energy_trace.push_back(std::min(res.energy_trace.back(), ev.energy));
    }

    res.state = prev;
    res.state.joint_angles = theta;
    res.state.total_length_mm = cm.length_mm;
    res.state.base_position = cm.base_position;
    res.state.base_heading = cm.base_heading;
    res.iterations = iter;
    res.gradient_norm = inf_norm(ev.grad);
    res.energy = ev.energy;
    res.converged = res.converged || res.gradient_norm <= tol;
    return res;
}

}  // namespace detail

// ---- synthetic FBG channels ----

struct Calibration {
    int channels = 9;
    int nodes = 3;
    std::vector<double> gains;  // row-major channels x nodes

    double at(int r, int c) const { return gains[std::size_t(r) * nodes + c]; }

    // Full rank on the node curvatures: Gram determinant of the 3 columns.
    void validate() const {
        if (int(gains.size()) != channels * nodes) throw std::invalid_argument("calibration shape");
        double g[3][3] = {};
        for (int a = 0; a < nodes; ++a)
            for (int b = 0; b < nodes; ++b)
                for (int r = 0; r < channels; ++r) g[a][b] += at(r, a) * at(r, b);
        const double det = g[0][0] * (g[1][1] * g[2][2] - g[1][2] * g[2][1]) -
                           g[0][1] * (g[1][0] * g[2][2] - g[1][2] * g[2][0]) +
                           g[0][2] * (g[1][0] * g[2][1] - g[1][1] * g[2][0]);
        if (!(det > 1e-9)) throw std::invalid_argument("calibration not full rank");
    }
};

// Three fibers, one FBG node per sensing position each. Fiber gains are drawn
// once from the seed; the middle fiber reads with opposite sign, mimicking
// placement on the other side of the neutral axis.
inline Calibration make_calibration(std::uint64_t seed) {
    Calibration cal;
    cal.gains.assign(27, 0.0);
    Rng rng(seed);
    for (int fiber = 0; fiber < 3; ++fiber) {
        const double sign = fiber == 1 ? -1.0 : 1.0;
        for (int node = 0; node < 3; ++node) {
            const double gain = 80.0 + 40.0 * rng.uniform01();
            cal.gains[std::size_t(3 * fiber + node) * 3 + node] = sign * gain;
        }
    }
    return cal;
}

inline SensorFrame synth_fbg(const CmState& state, const Calibration& cal, double noise_std,
                             Rng& rng, double timestamp = 0.0) {
    cal.validate();
    const auto positions = sensing_node_positions(state.total_length_mm);
    std::vector<double> curv(positions.size());
    for (std::size_t i = 0; i < positions.size(); ++i) curv[i] = local_curvature(state, positions[i]);

    SensorFrame frame;
    frame.timestamp = timestamp;
    frame.values.assign(std::size_t(cal.channels), 0.0);
    for (int r = 0; r < cal.channels; ++r) {
        double v = 0.0;
        for (int c = 0; c < cal.nodes; ++c) v += cal.at(r, c) * curv[std::size_t(c)];
        if (noise_std > 0.0) v += noise_std * rng.normal();
        if (!std::isfinite(v)) throw std::runtime_error("non-finite sensor value");
        frame.values[std::size_t(r)] = v;
    }
    return frame;
}

// ---- overhead raster ----

struct RasterParams {
    int width = 640;
    int height = 480;
    double mm_per_px = 0.1;
    double tube_radius_mm = 0.25;  // half of the drawn tube width (5 px at default scale)
};

// World (0,0) maps to the image center, +x right, +y up.
inline Vec2 pixel_center_world(const RasterParams& rp, int px, int py) {
    return {(px + 0.5 - rp.width / 2.0) * rp.mm_per_px,
            (rp.height / 2.0 - py - 0.5) * rp.mm_per_px};
}

inline BinaryImage rasterize(const CmState& state, std::span<const Obstacle> obstacles,
                             const RasterParams& rp) {
    const double half_w = rp.width * rp.mm_per_px / 2.0;
    const double half_h = rp.height * rp.mm_per_px / 2.0;
    const auto nodes = backbone_nodes(state);

    for (const auto& n : nodes) {
        if (std::abs(n.x) + rp.tube_radius_mm > half_w || std::abs(n.y) + rp.tube_radius_mm > half_h)
            throw std::runtime_error("rasterize: manipulator out of frame");
    }
    for (const auto& o : obstacles) {
        if (std::abs(o.center.x) + o.max_extent() > half_w ||
            std::abs(o.center.y) + o.max_extent() > half_h)
            throw std::runtime_error("rasterize: obstacle out of frame");
    }

    BinaryImage img(rp.width, rp.height, 0);
    const double s = rp.mm_per_px;

    auto px_range = [&](double wmin, double wmax, bool is_x, int& lo, int& hi) {
        // convert a world interval to a clamped pixel index range
        double a, b;
        if (is_x) {
            a = wmin / s + rp.width / 2.0 - 0.5;
            b = wmax / s + rp.width / 2.0 - 0.5;
        } else {
            a = rp.height / 2.0 - wmax / s - 0.5;
            b = rp.height / 2.0 - wmin / s - 0.5;
        }
        lo = std::max(0, int(std::floor(a)));
        hi = std::min((is_x ? rp.width : rp.height) - 1, int(std::ceil(b)));
    };

    for (const auto& o : obstacles) {
        int x0, x1, y0, y1;
        const double ex = o.semi_axes.x + s, ey = o.semi_axes.y + s;
        px_range(o.center.x - ex, o.center.x + ex, true, x0, x1);
        px_range(o.center.y - ey, o.center.y + ey, false, y0, y1);
        for (int py = y0; py <= y1; ++py)
            for (int px = x0; px <= x1; ++px)
                if (o.contains(pixel_center_world(rp, px, py))) img.at(px, py) = 1;
    }

    const double r = rp.tube_radius_mm;
    const double r2 = r * r;
    for (std::size_t i = 1; i < nodes.size(); ++i) {
        const Vec2 a = nodes[i - 1], b = nodes[i];
        int x0, x1, y0, y1;
        px_range(std::min(a.x, b.x) - r - s, std::max(a.x, b.x) + r + s, true, x0, x1);
        px_range(std::min(a.y, b.y) - r - s, std::max(a.y, b.y) + r + s, false, y0, y1);
        for (int py = y0; py <= y1; ++py)
            for (int px = x0; px <= x1; ++px)
                if (geom::point_segment_dist2(pixel_center_world(rp, px, py), a, b) <= r2)
                    img.at(px, py) = 1;
    }
    return img;
}

// ---- scenario ----

struct ActuationProfile {
    std::vector<std::pair<double, double>> knots;  // (time s, cable displacement mm), sorted

    double at(double t) const {
        if (knots.empty()) return 0.0;
        if (t <= knots.front().first) return knots.front().second;
        if (t >= knots.back().first) return knots.back().second;
        for (std::size_t i = 1; i < knots.size(); ++i) {
            if (t <= knots[i].first) {
                const auto [t0, v0] = knots[i - 1];
                const auto [t1, v1] = knots[i];
                const double f = t1 > t0 ? (t - t0) / (t1 - t0) : 1.0;
                return v0 + f * (v1 - v0);
            }
        }
        return knots.back().second;
    }

    static ActuationProfile triangle_wave(double lo, double hi, double period, double duration) {
        ActuationProfile p;
        double t = 0.0;
        bool up = true;
        p.knots.emplace_back(0.0, lo);
        while (t < duration) {
            t += period / 2.0;
            p.knots.emplace_back(t, up ? hi : lo);
            up = !up;
        }
        return p;
    }
};

struct Scenario {
    std::string id = "scenario";
    CmParams cm;
    std::vector<Obstacle> obstacles;
    ActuationProfile actuation;
    double duration_s = 1.0;
    double sensor_rate_hz = 100.0;
    double camera_rate_hz = 30.0;
    double noise_std = 0.0;
    std::uint64_t seed = 0;
    std::uint64_t calibration_seed = 1;
    RasterParams raster;

    void validate() const {
        cm.validate();
        for (const auto& o : obstacles) o.validate();
        if (!(sensor_rate_hz > camera_rate_hz && camera_rate_hz > 0.0))
            throw std::invalid_argument("rates must satisfy sensor_rate > camera_rate > 0");
        if (duration_s <= 0.0) throw std::invalid_argument("duration must be > 0");
    }
};

// Number of ticks k/rate with k/rate < duration (k = 0, 1, ...).
inline std::size_t tick_count(double duration_s, double rate_hz) {
    return std::size_t(std::floor(duration_s * rate_hz - 1e-9)) + 1;
}

// Geometric contact truth for a solved state: max centerline depth over
// densely sampled backbone points.
inline double max_penetration(const CmParams& cm, const CmState& state,
                              std::span<const Obstacle> obstacles) {
    if (obstacles.empty()) return 0.0;
    const auto nodes = backbone_nodes(state);
    const int m = cm.truth_samples_per_link;
    const double l = cm.link_length();
    double worst = 0.0;
    for (std::size_t li = 1; li < nodes.size(); ++li) {
        const Vec2 a = nodes[li - 1];
        const Vec2 dir = (nodes[li] - a) * (1.0 / l);
        for (int s2 = 1; s2 <= m; ++s2) {
            const Vec2 q = a + dir * (l * s2 / m);
            for (const auto& o : obstacles) worst = std::max(worst, detail::penetration(o, q));
        }
    }
    return worst;
}

struct ScenarioSinks {
    std::function<void(const SensorFrame&)> on_sensor;
    std::function<void(double, const BinaryImage&)> on_image;
    std::function<void(const ContactTruth&)> on_truth;
};

// Runs one scenario: solves the quasi-static chain at every sensor/camera
// tick (merged in time order, single warm-start chain), synthesizes sensor
// frames and rasters, and emits contact truth at the sensor rate.
// Deterministic for a fixed scenario, including the seed.
inline void run_scenario(const Scenario& sc, const ScenarioSinks& sinks) {
    sc.validate();
    const Calibration cal = make_calibration(sc.calibration_seed);
    Rng noise_rng(sc.seed);

    RasterParams rp = sc.raster;
    rp.tube_radius_mm = sc.cm.tube_radius_mm;

    const std::size_t ns = tick_count(sc.duration_s, sc.sensor_rate_hz);
    const std::size_t nc = tick_count(sc.duration_s, sc.camera_rate_hz);
    std::size_t is = 0, ic = 0;
    CmState prev = CmState::straight(sc.cm);

    while (is < ns || ic < nc) {
        const double ts = is < ns ? double(is) / sc.sensor_rate_hz : std::numeric_limits<double>::infinity();
        const double tc = ic < nc ? double(ic) / sc.camera_rate_hz : std::numeric_limits<double>::infinity();
        const double t = std::min(ts, tc);

        auto res = solve_equilibrium(sc.cm, sc.actuation.at(t), sc.obstacles, prev);
        if (!res.converged) {
            throw SolveError("equilibrium solve failed at t=" + fmt_double(t) +
                                 " (|grad|=" + fmt_double(res.gradient_norm) + ")",
                             std::move(res));
        }
        prev = res.state;

        if (ts == t) {
            SensorFrame frame = synth_fbg(res.state, cal, sc.noise_std, noise_rng, t);
            if (sinks.on_sensor) sinks.on_sensor(frame);
            if (sinks.on_truth) {
                const double pen = max_penetration(sc.cm, res.state, sc.obstacles);
                sinks.on_truth({t, pen > 0.0, pen});
            }
            ++is;
        }
        if (tc == t) {
            if (sinks.on_image) sinks.on_image(t, rasterize(res.state, sc.obstacles, rp));
            ++ic;
        }
    }
}

struct ScenarioRun {
    std::vector<SensorFrame> sensors;
    std::vector<std::pair<double, BinaryImage>> images;
    std::vector<ContactTruth> truth;
};

inline ScenarioRun run_scenario(const Scenario& sc) {
    ScenarioRun run;
    ScenarioSinks sinks;
    sinks.on_sensor = [&](const SensorFrame& f) { run.sensors.push_back(f); };
    sinks.on_image = [&](double t, const BinaryImage& img) { run.images.emplace_back(t, img); };
    sinks.on_truth = [&](const ContactTruth& ct) { run.truth.push_back(ct); };
    run_scenario(sc, sinks);
    return run;
}

// ---- stream CSV formats ----

inline std::string sensor_csv_header(int n) {
    std::string h = "timestamp";
    for (int i = 1; i <= n; ++i) h += ",v" + std::to_string(i);
    h += '\n';
    return h;
}

inline std::string sensor_csv_row(const SensorFrame& f) {
    std::string row = fmt_double(f.timestamp);
    for (double v : f.values) {
        row += ',';
        row += fmt_double(v);
    }
    row += '\n';
    return row;
}

inline std::vector<SensorFrame> parse_sensor_csv(const std::string& text) {
    std::vector<SensorFrame> frames;
    std::size_t line_no = 0;
    std::size_t n = 0;
    for (std::string_view line : split(text, '\n')) {
        ++line_no;
        line = trim(line);
        if (line.empty()) continue;
        if (line_no == 1) continue;  // header
        const auto cols = split(line, ',');
        if (cols.size() < 2)
            throw std::runtime_error("sensor CSV line " + std::to_string(line_no) + ": too few columns");
        if (n == 0) n = cols.size() - 1;
        if (cols.size() - 1 != n)
            throw std::runtime_error("sensor CSV line " + std::to_string(line_no) + ": inconsistent width");
        SensorFrame f;
        f.timestamp = parse_double(cols[0]);
        f.values.reserve(n);
        for (std::size_t i = 1; i < cols.size(); ++i) f.values.push_back(parse_double(cols[i]));
        frames.push_back(std::move(f));
    }
    return frames;
}

inline std::string truth_csv_header() { return "timestamp,contact,penetration\n"; }

inline std::string truth_csv_row(const ContactTruth& ct) {
    return fmt_double(ct.timestamp) + "," + (ct.in_contact ? "1" : "0") + "," +
           fmt_double(ct.max_penetration) + "\n";
}

inline std::vector<ContactTruth> parse_truth_csv(const std::string& text) {
    std::vector<ContactTruth> rows;
    std::size_t line_no = 0;
    for (std::string_view line : split(text, '\n')) {
        ++line_no;
        line = trim(line);
        if (line.empty() || line_no == 1) continue;
        const auto cols = split(line, ',');
        if (cols.size() != 3)
            throw std::runtime_error("truth CSV line " + std::to_string(line_no) + ": expected 3 columns");
        rows.push_back({parse_double(cols[0]), parse_int(cols[1]) != 0, parse_double(cols[2])});
    }
    return rows;
}

}  // namespace cmcd::sim
