#include "gp_pathwise/optimize.hpp"

#include <cmath>
#include <deque>
#include <vector>

namespace gp {

namespace {

Vector project(Vector x, double lower, double upper) { return x.cwiseMax(lower).cwiseMin(upper); }

}  // namespace

double projected_gradient_norm(const Vector& x, const Vector& g, double lower, double upper) {
    if (x.size() == 0) return 0.0;
    return (project(x - g, lower, upper) - x).cwiseAbs().maxCoeff();
}

BoxResult minimize_box(const ValueAndGradient& fg, const Vector& x0, const BoxOptions& options) {
    if (!(options.lower < options.upper)) throw std::invalid_argument("minimize_box: empty box");
    const Eigen::Index d = x0.size();
    BoxResult out;
    out.x = project(x0, options.lower, options.upper);
    out.gradient = Vector::Zero(d);
    out.value = fg(out.x, out.gradient);

    std::deque<std::pair<Vector, Vector>> memory;  // (s, y) pairs, newest last
    for (int it = 0; it < options.max_iters; ++it) {
        if (projected_gradient_norm(out.x, out.gradient, options.lower, options.upper) <= options.grad_tol) {
            out.converged = true;
            return out;
        }
        // Coordinates pinned at a bound with the gradient pushing outward stay fixed.
        Eigen::Array<bool, Eigen::Dynamic, 1> fixed(d);
        for (Eigen::Index i = 0; i < d; ++i)
            fixed(i) = (out.x(i) <= options.lower && out.gradient(i) > 0.0) ||
                       (out.x(i) >= options.upper && out.gradient(i) < 0.0);
        auto mask = [&](Vector v) {
            for (Eigen::Index i = 0; i < d; ++i)
                if (fixed(i)) v(i) = 0.0;
            return v;
        };

        // Two-loop recursion on the free coordinates.
        Vector q = mask(out.gradient);
        std::vector<double> alpha(memory.size(), 0.0), curvature(memory.size());
        for (std::size_t j = memory.size(); j-- > 0;) {
            const auto& [s, y] = memory[j];
            curvature[j] = mask(s).dot(mask(y));
            if (curvature[j] <= 0.0) continue;
            alpha[j] = mask(s).dot(q) / curvature[j];
            q -= alpha[j] * mask(y);
        }
        if (!memory.empty()) {
            const Vector s = mask(memory.back().first);
            const Vector y = mask(memory.back().second);
            const double yy = y.squaredNorm();
            if (yy > 0.0) q *= s.dot(y) / yy;
        }
        for (std::size_t j = 0; j < memory.size(); ++j) {
            const auto& [s, y] = memory[j];
            if (curvature[j] <= 0.0) continue;
            const double beta = mask(y).dot(q) / curvature[j];
            q += (alpha[j] - beta) * mask(s);
        }
        Vector direction = -mask(q);
        if (!(direction.dot(out.gradient) < 0.0) || !direction.allFinite()) {
            direction = -mask(out.gradient);
            memory.clear();
        }
        if (memory.empty()) {
            // Scale the first step so it moves at most a tenth of the box.
            const double largest = direction.cwiseAbs().maxCoeff();
            const double cap = 0.1 * (options.upper - options.lower);
            if (largest > cap) direction *= cap / largest;
        }

        // Backtracking Armijo search along the projected path.
        bool accepted = false;
        Vector x_new, g_new(d);
        double f_new = 0.0;
        for (double t = 1.0; t > 1e-12; t *= 0.5) {
            x_new = project(out.x + t * direction, options.lower, options.upper);
            const Vector step = x_new - out.x;
            if (step.cwiseAbs().maxCoeff() == 0.0) break;
            f_new = fg(x_new, g_new);
            if (std::isfinite(f_new) && f_new <= out.value + 1e-4 * out.gradient.dot(step)) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            out.line_search_failed = true;
            return out;
        }
        Vector s = x_new - out.x;
        Vector y = g_new - out.gradient;
        if (s.dot(y) > 1e-12 * s.norm() * y.norm()) {
            memory.emplace_back(std::move(s), std::move(y));
            if (static_cast<int>(memory.size()) > options.memory) memory.pop_front();
        }
        out.x = std::move(x_new);
        out.gradient = g_new;
        out.value = f_new;
        out.iterations = it + 1;
    }
    out.converged = projected_gradient_norm(out.x, out.gradient, options.lower, options.upper) <= options.grad_tol;
    return out;
}

}  // namespace gp
