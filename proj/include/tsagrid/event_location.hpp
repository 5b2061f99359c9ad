#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tsagrid/error.hpp"

namespace tsagrid {

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

struct Anchor {
    std::string id;
    double x = 0.0;  ///< km
    double y = 0.0;  ///< km
};

struct EventPoint {
    double x = 0.0;  ///< km
    double y = 0.0;  ///< km
    double t = 0.0;  ///< s
};

/// Time-of-arrival problem: anchors (PMUs), wave speed, and the arrival time seen by each anchor.
struct ToaScenario {
    std::vector<Anchor> anchors;
    double v_e = 0.0;  ///< km/s
    std::optional<EventPoint> truth;
    std::vector<double> arrival_times;  ///< s, one per anchor

    /// Structural checks: >= 3 anchors, v_e > 0, one finite time per anchor.
    void validate() const;
};

/// Forward oracle: t_i = t_e + |anchor_i - event| / v_e.
std::vector<double> arrival_times(const EventPoint& event, std::span<const Anchor> anchors, double v_e);

/// Shifts only times[index] by dt.
std::vector<double> inject_time_attack(std::span<const double> times, std::size_t index, double dt);

struct ToaIterate {
    std::size_t iteration = 0;
    double x = 0.0, y = 0.0, t = 0.0;
    double step_norm = 0.0;
    double residual_norm = 0.0;
};

class SolverError : public Error {
public:
    SolverError(const std::string& message, std::vector<ToaIterate> trace)
        : Error(ErrorCode::solver_failure, message), trace_(std::move(trace)) {}

    const std::vector<ToaIterate>& trace() const noexcept { return trace_; }

private:
    std::vector<ToaIterate> trace_;
};

struct ToaSolution {
    double x = 0.0;
    double y = 0.0;
    double t = 0.0;
    double residual_norm = 0.0;  ///< 2-norm of the circle residuals, km²
    std::size_t iterations = 0;
};

struct ToaSolverOptions {
    std::size_t max_iterations = 100;
    double step_tolerance = 1e-10;  ///< km, on the (x, y, v_e·t) step
};

/**
 * Gauss-Newton on r_i = (x_i - x)² + (y_i - y)² - v_e²(t_i - t)² with a
 * backtracking line search on the residual sum of squares. Time is carried
 * internally as v_e·t so all three unknowns are in km.
 *
 * Default start: anchor centroid, t = min(t_i) - (max anchor spacing)/(2 v_e).
 * Without an explicit init the solver also restarts from the linearised
 * solution (4+ anchors) or the closed-form roots (3 anchors) and keeps the
 * lowest residual.
 */
ToaSolution solve_toa(const ToaScenario& scenario, std::optional<EventPoint> init = std::nullopt,
                      const ToaSolverOptions& options = {});

/// Local frame with p1 at the origin and p2 on the +x axis: p2 -> (a, 0), p3 -> (b, c).
struct TransformFrame {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
    double alpha = 0.0;
    Point2 origin;

    Point2 to_local(Point2 p) const noexcept;
    Point2 to_global(Point2 p) const noexcept;
};

/// Throws frame_degenerate when p1 = p2 or p3 is collinear with them.
TransformFrame transform_frame(Point2 p1, Point2 p2, Point2 p3);

/// Local-frame candidate; k = |event - p1| = v_e (t_1 - t_e).
struct ClosedFormCandidate {
    double x = 0.0;
    double y = 0.0;
    double k = 0.0;
};

/**
 * Three-anchor closed form x' = A + Bk, y' = C + Dk with k a nonnegative root
 * of M k² + 2N k + P = 0. L = v_e (t_2 - t_1), R = v_e (t_3 - t_1).
 * Throws no_solution when no nonnegative real root exists.
 */
std::vector<ClosedFormCandidate> closed_form_location(const TransformFrame& frame, double L, double R);

struct LocatedCandidate {
    double x = 0.0;  ///< km, original frame
    double y = 0.0;
    double t = 0.0;  ///< s
    double k = 0.0;
    double check_residual = 0.0;  ///< RMS range mismatch (km) at the anchors outside the triple
};

struct ClosedFormSolution {
    TransformFrame frame;
    std::array<std::size_t, 3> triple{};  ///< anchor indices playing p1, p2, p3
    std::vector<LocatedCandidate> candidates;
    std::optional<std::size_t> preferred;  ///< set when a 4th anchor (or a single root) decides
};

/// Closed form with `attacked_index` as p1 and the next two anchors in file order as p2, p3.
ClosedFormSolution closed_form_solve(const ToaScenario& scenario, std::size_t attacked_index = 0);

struct SensitivityResult {
    double dx_dt1 = 0.0;  ///< km/s, original frame
    double dy_dt1 = 0.0;  ///< km/s
    double x = 0.0;       ///< located event the derivatives are taken at
    double y = 0.0;
    int branch = 1;       ///< sign of the square root in k = (-N ± sqrt(N² - MP)) / M
};

/**
 * Analytical derivative of the closed-form location with respect to the
 * arrival time at `attacked_index`. The root is chosen by the extra-anchor
 * residual, else by proximity to the ground truth; an undecidable pair or a
 * vanishing discriminant is a sensitivity_undefined error.
 */
SensitivityResult toa_sensitivity(const ToaScenario& scenario, std::size_t attacked_index = 0);

}  // namespace tsagrid
