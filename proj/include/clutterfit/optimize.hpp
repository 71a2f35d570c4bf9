#pragma once

#include "clutterfit/common.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <vector>

namespace clutterfit {

struct SimplexOptions {
    int max_evaluations = 600;
    double f_tolerance = 1e-7;  // spread of objective values over the simplex
    double x_tolerance = 1e-3;  // max distance of any vertex from the best one
    double reflection = 1.0;
    double expansion = 2.0;
    double contraction = 0.5;
    double shrink = 0.5;
};

template <typename Scalar>
struct SimplexResult {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> x;
    Scalar value = std::numeric_limits<Scalar>::infinity();
    int evaluations = 0;
    bool converged = false;
    std::vector<Scalar> best_so_far;  // one entry per evaluation
};

/// Nelder-Mead over a box. Trial points are projected onto [lower, upper]
/// before evaluation, so the objective is never called outside the box.
template <typename Scalar, typename Objective>
SimplexResult<Scalar> nelder_mead(Objective&& objective, const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& start,
                                  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& step,
                                  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& lower,
                                  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& upper,
                                  const SimplexOptions& options) {
    using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    const Eigen::Index dim = start.size();
    if (step.size() != dim || lower.size() != dim || upper.size() != dim || (lower.array() > upper.array()).any()) {
        throw Error(ErrorKind::InvalidArgument, "nelder_mead: inconsistent bounds or step");
    }

    SimplexResult<Scalar> result;
    auto project = [&](const Vec& x) -> Vec { return x.cwiseMax(lower).cwiseMin(upper); };
    auto eval = [&](const Vec& x) {
        const Scalar f = objective(x);
        ++result.evaluations;
        if (f < result.value) {
            result.value = f;
            result.x = x;
        }
        result.best_so_far.push_back(result.value);
        return f;
    };
    auto budget_left = [&] { return result.evaluations < options.max_evaluations; };

    std::vector<Vec> vertices;
    std::vector<Scalar> values;
    vertices.push_back(project(start));
    values.push_back(eval(vertices.back()));
    for (Eigen::Index i = 0; i < dim && budget_left(); ++i) {
        Vec v = vertices.front();
        v[i] += step[i];
        if (v[i] > upper[i]) v[i] = vertices.front()[i] - step[i];  // step inward at the upper bound
        v = project(v);
        vertices.push_back(v);
        values.push_back(eval(v));
    }
    if (static_cast<Eigen::Index>(vertices.size()) < dim + 1) return result;

    std::vector<std::size_t> order(vertices.size());
    auto sort_simplex = [&] {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
        std::vector<Vec> v2;
        std::vector<Scalar> f2;
        for (auto i : order) {
            v2.push_back(vertices[i]);
            f2.push_back(values[i]);
        }
        vertices.swap(v2);
        values.swap(f2);
    };

    const std::size_t worst = static_cast<std::size_t>(dim);
    while (true) {
        sort_simplex();
        Scalar diameter = 0;
        for (std::size_t i = 1; i < vertices.size(); ++i) {
            diameter = std::max(diameter, (vertices[i] - vertices[0]).template lpNorm<Eigen::Infinity>());
        }
        if (diameter < options.x_tolerance && values[worst] - values[0] < options.f_tolerance) {
            result.converged = true;
            break;
        }
        if (!budget_left()) break;

        Vec centroid = Vec::Zero(dim);
        for (std::size_t i = 0; i < worst; ++i) centroid += vertices[i];
        centroid /= static_cast<Scalar>(dim);

        const Vec reflected = project(centroid + options.reflection * (centroid - vertices[worst]));
        const Scalar f_r = eval(reflected);
        if (f_r < values[0]) {
            if (!budget_left()) {
                vertices[worst] = reflected;
                values[worst] = f_r;
                continue;
            }
            const Vec expanded = project(centroid + options.expansion * (reflected - centroid));
            const Scalar f_e = eval(expanded);
            if (f_e < f_r) {
                vertices[worst] = expanded;
                values[worst] = f_e;
            } else {
                vertices[worst] = reflected;
                values[worst] = f_r;
            }
            continue;
        }
        if (f_r < values[worst - 1]) {
            vertices[worst] = reflected;
            values[worst] = f_r;
            continue;
        }
        if (!budget_left()) continue;
        // outside contraction when the reflection beat the worst vertex, inside otherwise
        const bool outside = f_r < values[worst];
        const Vec contracted = outside ? project(centroid + options.contraction * (reflected - centroid))
                                       : project(centroid + options.contraction * (vertices[worst] - centroid));
        const Scalar f_c = eval(contracted);
        if (f_c < (outside ? f_r : values[worst])) {
            vertices[worst] = contracted;
            values[worst] = f_c;
            continue;
        }
        for (std::size_t i = 1; i < vertices.size() && budget_left(); ++i) {
            vertices[i] = project(vertices[0] + options.shrink * (vertices[i] - vertices[0]));
            values[i] = eval(vertices[i]);
        }
    }
    return result;
}

}  // namespace clutterfit
