#include "tsagrid/event_location.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace tsagrid {

namespace {

struct Coefficients {
    double A, B, C, D;  // x' = A + Bk, y' = C + Dk
    double M, N, P;     // M k² + 2N k + P = 0
};

Coefficients coefficients(const TransformFrame& f, double L, double R) {
    Coefficients q{};
    q.A = (f.a * f.a - L * L) / (2.0 * f.a);
    q.B = -L / f.a;
    q.C = (f.b * f.b + f.c * f.c - 2.0 * f.b * q.A - R * R) / (2.0 * f.c);
    q.D = -(R + f.b * q.B) / f.c;
    q.M = q.B * q.B + q.D * q.D - 1.0;
    q.N = q.A * q.B + q.C * q.D;
    q.P = q.A * q.A + q.C * q.C;
    return q;
}

double cost(std::span<const Anchor> anchors, std::span<const double> tau, const Eigen::Vector3d& u,
            Eigen::VectorXd* r = nullptr) {
    Eigen::VectorXd res(static_cast<Eigen::Index>(anchors.size()));
    for (std::size_t i = 0; i < anchors.size(); ++i) {
        const double dx = anchors[i].x - u(0), dy = anchors[i].y - u(1), dt = tau[i] - u(2);
        res(static_cast<Eigen::Index>(i)) = dx * dx + dy * dy - dt * dt;
    }
    if (r != nullptr) *r = res;
    return res.squaredNorm();
}

ToaSolution gauss_newton(const ToaScenario& scn, std::span<const double> tau, Eigen::Vector3d u,
                         const ToaSolverOptions& options) {
    const auto n = scn.anchors.size();
    const double v = scn.v_e;
    std::vector<ToaIterate> trace;
    Eigen::VectorXd r;
    double f = cost(scn.anchors, tau, u, &r);
    Eigen::MatrixXd jac(static_cast<Eigen::Index>(n), 3);
    for (std::size_t it = 1; it <= options.max_iterations; ++it) {
        for (std::size_t i = 0; i < n; ++i) {
            const auto row = static_cast<Eigen::Index>(i);
            jac(row, 0) = -2.0 * (scn.anchors[i].x - u(0));
            jac(row, 1) = -2.0 * (scn.anchors[i].y - u(1));
            jac(row, 2) = 2.0 * (tau[i] - u(2));
        }
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(jac);
        if (qr.rank() < 3) {
            throw SolverError("singular Jacobian at iteration " + std::to_string(it), std::move(trace));
        }
        const Eigen::Vector3d step = qr.solve(-r);
        if (!step.allFinite()) throw SolverError("non-finite Gauss-Newton step", std::move(trace));

        // Near the floor of an inconsistent system the cost cannot resolve
        // the remaining step, so a full step whose predicted gain is
        // rounding-sized is taken as long as the cost does not visibly grow.
        Eigen::Vector3d trial = u + step;
        Eigen::VectorXd r_trial;
        double f_trial = cost(scn.anchors, tau, trial, &r_trial);
        const double predicted = f - (r + jac * step).squaredNorm();
        const double noise = 1e3 * std::numeric_limits<double>::epsilon() * f;
        if (!(f_trial < f) && predicted <= noise && f_trial <= f + noise) {
            u = trial;
            r = r_trial;
            f = f_trial;
            trace.push_back({it, u(0), u(1), u(2) / v, step.norm(), std::sqrt(f)});
            if (step.norm() < options.step_tolerance) return ToaSolution{u(0), u(1), u(2) / v, std::sqrt(f), it};
            continue;
        }

        // Backtrack until the sum of squares decreases.
        double scale = 1.0;
        for (int halvings = 0; halvings < 40 && !(f_trial < f); ++halvings) {
            scale *= 0.5;
            trial = u + scale * step;
            f_trial = cost(scn.anchors, tau, trial, &r_trial);
        }
        const bool accepted = f_trial < f;
        if (accepted) {
            u = trial;
            r = r_trial;
            f = f_trial;
        }
        trace.push_back({it, u(0), u(1), u(2) / v, step.norm(), std::sqrt(f)});
        if (step.norm() < options.step_tolerance)
            return ToaSolution{u(0), u(1), u(2) / v, std::sqrt(f), it};
        if (!accepted) {
            // Inconsistent data: the cost floor is reached before the step
            // tolerance. A rounding-sized step there counts as converged.
            if (step.norm() <= 1e-7 * (1.0 + u.norm()))
                return ToaSolution{u(0), u(1), u(2) / v, std::sqrt(f), it};
            throw SolverError("line search found no descent at iteration " + std::to_string(it),
                              std::move(trace));
        }
    }
    throw SolverError("Gauss-Newton did not converge in " + std::to_string(options.max_iterations) +
                          " iterations",
                      std::move(trace));
}

}  // namespace

void ToaScenario::validate() const {
    if (anchors.size() < 3) throw Error(ErrorCode::parameter, "TOA location needs at least 3 anchors");
    if (!(v_e > 0.0) || !std::isfinite(v_e))
        throw Error(ErrorCode::parameter, "propagation speed v_e must be positive");
    if (arrival_times.size() != anchors.size())
        throw Error(ErrorCode::parameter, "need exactly one arrival time per anchor");
    for (const auto& a : anchors)
        if (!std::isfinite(a.x) || !std::isfinite(a.y))
            throw Error(ErrorCode::parameter, "anchor " + a.id + " has non-finite coordinates");
    for (double t : arrival_times)
        if (!std::isfinite(t)) throw Error(ErrorCode::parameter, "arrival times must be finite");
}

std::vector<double> arrival_times(const EventPoint& event, std::span<const Anchor> anchors, double v_e) {
    if (!(v_e > 0.0)) throw Error(ErrorCode::parameter, "propagation speed v_e must be positive");
    std::vector<double> times;
    times.reserve(anchors.size());
    for (const auto& a : anchors)
        times.push_back(event.t + std::hypot(a.x - event.x, a.y - event.y) / v_e);
    return times;
}

std::vector<double> inject_time_attack(std::span<const double> times, std::size_t index, double dt) {
    if (index >= times.size())
        throw Error(ErrorCode::parameter, "attacked anchor index " + std::to_string(index) +
                                              " out of range for " + std::to_string(times.size()) +
                                              " anchors");
    std::vector<double> out(times.begin(), times.end());
    out[index] += dt;
    return out;
}

ToaSolution solve_toa(const ToaScenario& scn, std::optional<EventPoint> init,
                      const ToaSolverOptions& options) {
    scn.validate();
    const auto n = scn.anchors.size();
    const double v = scn.v_e;
    std::vector<double> tau(n);
    std::transform(scn.arrival_times.begin(), scn.arrival_times.end(), tau.begin(),
                   [v](double t) { return v * t; });

    if (init) return gauss_newton(scn, tau, Eigen::Vector3d(init->x, init->y, v * init->t), options);

    std::vector<Eigen::Vector3d> starts;
    double cx = 0.0, cy = 0.0, spread = 0.0;
    for (const auto& a : scn.anchors) {
        cx += a.x;
        cy += a.y;
        for (const auto& b : scn.anchors) spread = std::max(spread, std::hypot(a.x - b.x, a.y - b.y));
    }
    starts.emplace_back(cx / static_cast<double>(n), cy / static_cast<double>(n),
                        *std::min_element(tau.begin(), tau.end()) - spread / 2.0);

    // The centroid start can settle in a spurious local minimum. Extra starts:
    // differences against anchor 0 are linear in (x, y, tau) when there are
    // enough of them, otherwise the three-anchor closed-form roots.
    if (n >= 4) {
        Eigen::MatrixXd a(static_cast<Eigen::Index>(n - 1), 3);
        Eigen::VectorXd b(static_cast<Eigen::Index>(n - 1));
        const auto& p0 = scn.anchors[0];
        const double q0 = p0.x * p0.x + p0.y * p0.y - tau[0] * tau[0];
        for (std::size_t i = 1; i < n; ++i) {
            const auto row = static_cast<Eigen::Index>(i - 1);
            const auto& p = scn.anchors[i];
            a(row, 0) = 2.0 * (p.x - p0.x);
            a(row, 1) = 2.0 * (p.y - p0.y);
            a(row, 2) = -2.0 * (tau[i] - tau[0]);
            b(row) = p.x * p.x + p.y * p.y - tau[i] * tau[i] - q0;
        }
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
        if (qr.rank() == 3) {
            const Eigen::Vector3d u = qr.solve(b);
            if (u.allFinite()) starts.push_back(u);
        }
    } else {
        try {
            for (const auto& c : closed_form_solve(scn, 0).candidates) starts.emplace_back(c.x, c.y, v * c.t);
        } catch (const Error&) {
        }
    }

    const double t_min = *std::min_element(scn.arrival_times.begin(), scn.arrival_times.end());
    const double latest_causal = t_min + 1e-9 * (1.0 + std::abs(t_min));
    std::optional<ToaSolution> best;
    bool best_causal = false;
    const Eigen::Vector2d centre = starts.front().head<2>();
    const double tie_tolerance = 1e-9 * spread * spread;
    std::optional<SolverError> first_failure;
    for (const auto& u : starts) {
        try {
            const auto sol = gauss_newton(scn, tau, u, options);
            // Squared ranges also admit events after the arrivals; rank those last.
            const bool causal = sol.t <= latest_causal;
            // Equal residuals (two exact roots with 3 anchors): take the one nearer the anchors.
            const auto off = [&](const ToaSolution& q) { return std::hypot(q.x - centre.x(), q.y - centre.y()); };
            const bool tie = best && std::abs(sol.residual_norm - best->residual_norm) <= tie_tolerance;
            if (!best || (causal && !best_causal) ||
                (causal == best_causal &&
                 (tie ? off(sol) < off(*best) : sol.residual_norm < best->residual_norm))) {
                best = sol;
                best_causal = causal;
            }
        } catch (const SolverError& e) {
            if (!first_failure) first_failure = e;
        }
    }
    if (!best) throw *first_failure;
    return *best;
}

Point2 TransformFrame::to_local(Point2 p) const noexcept {
    const double dx = p.x - origin.x, dy = p.y - origin.y;
    const double ca = std::cos(alpha), sa = std::sin(alpha);
    return {dx * ca + dy * sa, -dx * sa + dy * ca};
}

Point2 TransformFrame::to_global(Point2 p) const noexcept {
    const double ca = std::cos(alpha), sa = std::sin(alpha);
    return {p.x * ca - p.y * sa + origin.x, p.x * sa + p.y * ca + origin.y};
}

TransformFrame transform_frame(Point2 p1, Point2 p2, Point2 p3) {
    TransformFrame f;
    f.origin = p1;
    f.a = std::hypot(p2.x - p1.x, p2.y - p1.y);
    if (!(f.a > 0.0)) throw Error(ErrorCode::frame_degenerate, "anchors p1 and p2 coincide");
    f.alpha = std::atan2(p2.y - p1.y, p2.x - p1.x);
    const Point2 local = f.to_local(p3);
    f.b = local.x;
    f.c = local.y;
    const double scale = std::max(f.a, std::hypot(f.b, f.c));
    if (std::abs(f.c) <= 1e-12 * scale) throw Error(ErrorCode::frame_degenerate, "anchors are collinear");
    return f;
}

std::vector<ClosedFormCandidate> closed_form_location(const TransformFrame& frame, double L, double R) {
    if (!(frame.a > 0.0) || frame.c == 0.0)
        throw Error(ErrorCode::frame_degenerate, "closed form needs a > 0 and c != 0");
    const auto q = coefficients(frame, L, R);

    std::vector<double> roots;
    const double curvature = q.B * q.B + q.D * q.D + 1.0;
    if (std::abs(q.M) <= 1e-14 * curvature) {
        if (q.N == 0.0) throw Error(ErrorCode::no_solution, "degenerate closed form (M = N = 0)");
        roots.push_back(-q.P / (2.0 * q.N));
    } else {
        const double disc = q.N * q.N - q.M * q.P;
        if (disc < 0.0) throw Error(ErrorCode::no_solution, "closed form has no real root");
        const double s = std::sqrt(disc);
        const double big = -(q.N + std::copysign(s, q.N));
        if (big == 0.0) {
            roots.push_back(0.0);
        } else {
            roots.push_back(big / q.M);
            if (disc > 0.0) roots.push_back(q.P / big);
        }
    }

    const double slack = 1e-12 * std::max({frame.a, std::abs(frame.b), std::abs(frame.c)});
    std::vector<ClosedFormCandidate> out;
    for (double k : roots) {
        if (!std::isfinite(k) || k < -slack) continue;
        k = std::max(k, 0.0);
        out.push_back({q.A + q.B * k, q.C + q.D * k, k});
    }
    if (out.empty()) throw Error(ErrorCode::no_solution, "closed form has no nonnegative root");
    std::sort(out.begin(), out.end(), [](const auto& l, const auto& r) { return l.k < r.k; });
    return out;
}

ClosedFormSolution closed_form_solve(const ToaScenario& scn, std::size_t attacked_index) {
    scn.validate();
    const auto n = scn.anchors.size();
    if (attacked_index >= n) throw Error(ErrorCode::parameter, "attacked anchor index out of range");

    ClosedFormSolution sol;
    sol.triple[0] = attacked_index;
    std::size_t filled = 1;
    for (std::size_t i = 0; i < n && filled < 3; ++i)
        if (i != attacked_index) sol.triple[filled++] = i;

    const auto& p = scn.anchors;
    const auto [i1, i2, i3] = sol.triple;
    sol.frame = transform_frame({p[i1].x, p[i1].y}, {p[i2].x, p[i2].y}, {p[i3].x, p[i3].y});
    const double t1 = scn.arrival_times[i1];
    const double L = scn.v_e * (scn.arrival_times[i2] - t1);
    const double R = scn.v_e * (scn.arrival_times[i3] - t1);

    for (const auto& c : closed_form_location(sol.frame, L, R)) {
        const Point2 g = sol.frame.to_global({c.x, c.y});
        LocatedCandidate lc{g.x, g.y, t1 - c.k / scn.v_e, c.k, 0.0};
        double sum = 0.0;
        std::size_t extra = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (i == i1 || i == i2 || i == i3) continue;
            const double range = std::hypot(p[i].x - g.x, p[i].y - g.y);
            const double mismatch = range - scn.v_e * (scn.arrival_times[i] - lc.t);
            sum += mismatch * mismatch;
            ++extra;
        }
        lc.check_residual = extra > 0 ? std::sqrt(sum / static_cast<double>(extra)) : 0.0;
        sol.candidates.push_back(lc);
    }

    if (sol.candidates.size() == 1) {
        sol.preferred = 0;
    } else if (n > 3) {
        const auto best = std::min_element(
            sol.candidates.begin(), sol.candidates.end(),
            [](const auto& l, const auto& r) { return l.check_residual < r.check_residual; });
        sol.preferred = static_cast<std::size_t>(best - sol.candidates.begin());
    }
    return sol;
}

SensitivityResult toa_sensitivity(const ToaScenario& scn, std::size_t attacked_index) {
    const auto sol = closed_form_solve(scn, attacked_index);
    std::size_t pick = 0;
    if (sol.preferred) {
        pick = *sol.preferred;
    } else if (scn.truth) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < sol.candidates.size(); ++i) {
            const double d = std::hypot(sol.candidates[i].x - scn.truth->x, sol.candidates[i].y - scn.truth->y);
            if (d < best) {
                best = d;
                pick = i;
            }
        }
    } else {
        throw Error(ErrorCode::sensitivity_undefined,
                    "two closed-form roots and nothing to choose between them");
    }
    const auto& cand = sol.candidates[pick];
    const double k = cand.k;
    const double v = scn.v_e;
    const auto& f = sol.frame;
    const auto [i1, i2, i3] = sol.triple;
    const double L = v * (scn.arrival_times[i2] - scn.arrival_times[i1]);
    const double R = v * (scn.arrival_times[i3] - scn.arrival_times[i1]);
    const auto q = coefficients(f, L, R);

    const double slope = q.M * k + q.N;  // ± sqrt(N² - MP) on the chosen root
    const double disc = q.N * q.N - q.M * q.P;
    const double scale = q.N * q.N + std::abs(q.M * q.P) + 1e-300;
    if (!(disc > 1e-14 * scale) || slope == 0.0)
        throw Error(ErrorCode::sensitivity_undefined, "discriminant N² - MP is not positive");

    // dL/dt1 = dR/dt1 = -v; differentiate the coefficients, then the quadratic implicitly.
    const double dA = L * v / f.a;
    const double dB = v / f.a;
    const double dC = (R * v - f.b * L * v / f.a) / f.c;
    const double dD = v * (1.0 - f.b / f.a) / f.c;
    const double dM = 2.0 * (q.B * dB + q.D * dD);
    const double dN = dA * q.B + q.A * dB + dC * q.D + q.C * dD;
    const double dP = 2.0 * (q.A * dA + q.C * dC);
    const double dk = -(dM * k * k + 2.0 * dN * k + dP) / (2.0 * slope);

    const double dx_local = dA + dB * k + q.B * dk;
    const double dy_local = dC + dD * k + q.D * dk;
    const double ca = std::cos(f.alpha), sa = std::sin(f.alpha);
    return SensitivityResult{dx_local * ca - dy_local * sa, dx_local * sa + dy_local * ca, cand.x,
                             cand.y, slope > 0.0 ? 1 : -1};
}

}  // namespace tsagrid
