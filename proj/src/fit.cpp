#include "clutterfit/fit.hpp"

#include <json.hpp>

#include <array>

namespace clutterfit {

const char* to_string(FitMode mode) {
    switch (mode) {
        case FitMode::None: return "none";
        case FitMode::ScaleOnly: return "scale-only";
        case FitMode::SurfaceOnly: return "surface-only";
        case FitMode::Full: return "full";
    }
    return "full";
}

FitMode fit_mode_from_string(const std::string& name) {
    if (name == "none") return FitMode::None;
    if (name == "scale-only" || name == "scale") return FitMode::ScaleOnly;
    if (name == "surface-only" || name == "surface") return FitMode::SurfaceOnly;
    if (name == "full" || name == "ours") return FitMode::Full;
    throw Error(ErrorKind::InvalidArgument, "unknown fit mode '" + name + "'");
}

void FitConfig::validate() const {
    if (samples < 1) throw Error(ErrorKind::InvalidArgument, "fit samples must be positive");
    if (max_evaluations < 1) throw Error(ErrorKind::InvalidArgument, "fit max evaluations must be positive");
    if (!(reverse_weight >= 0.0)) throw Error(ErrorKind::InvalidArgument, "reverse weight must be non-negative");
    if (alpha_grid.empty() || epsilon_grid.empty()) throw Error(ErrorKind::InvalidArgument, "empty fit grid");
    if (!(alpha_step > 0.0 && epsilon_step > 0.0)) throw Error(ErrorKind::InvalidArgument, "fit steps must be positive");
}

namespace {

constexpr std::size_t kMinObserved = 10;
constexpr double kTaperFloor = DeformationParams::kMinTaper + 1e-2;

void check_inputs(const PointCloud& observed, const CategoryTemplate& tmpl, const FitConfig& config) {
    if (observed.size() < kMinObserved) {
        throw Error(ErrorKind::EmptyInput, "fit: need at least 10 observed points, got " +
                                               std::to_string(observed.size()));
    }
    observed.validate();
    tmpl.validate();
    config.validate();
}

// Which of (alpha_x, alpha_y, alpha_z, epsilon) are searched.
using ActiveSet = std::array<bool, 4>;

ActiveSet active_for(FitMode mode) {
    switch (mode) {
        case FitMode::ScaleOnly: return {true, true, true, false};
        case FitMode::SurfaceOnly: return {false, false, false, true};
        case FitMode::Full: return {true, true, true, true};
        case FitMode::None: break;
    }
    return {false, false, false, false};
}

FitResult search(const ShapeObjective& objective, FitMode mode, const FitConfig& config,
                 std::span<const FitResult> warm_starts) {
    const ActiveSet active = active_for(mode);
    std::vector<int> dims;
    for (int i = 0; i < 4; ++i) {
        if (active[static_cast<std::size_t>(i)]) dims.push_back(i);
    }
    const Eigen::Vector4d base = DeformationParams::identity().as_vector();

    FitResult result;
    result.objective = std::numeric_limits<double>::infinity();
    auto record = [&](const Eigen::Vector4d& p, double f) {
        ++result.evaluations;
        if (f < result.objective) {
            result.objective = f;
            result.params = DeformationParams::from_vector(p);
        }
        result.best_so_far.push_back(result.objective);
    };

    if (dims.empty()) {
        record(base, objective(DeformationParams::identity()));
        result.converged = true;
        return result;
    }

    // warm starts first so a small budget still covers them, then a coarse
    // grid over the active parameters
    std::vector<Eigen::Vector4d> starts;
    for (const FitResult& w : warm_starts) starts.push_back(w.params.as_vector());
    std::size_t combos = 1;
    for (int d : dims) combos *= (d < 3 ? config.alpha_grid.size() : config.epsilon_grid.size());
    for (std::size_t c = 0; c < combos; ++c) {
        Eigen::Vector4d p = base;
        std::size_t rest = c;
        for (int d : dims) {
            const auto& grid = d < 3 ? config.alpha_grid : config.epsilon_grid;
            p[d] = grid[rest % grid.size()];
            rest /= grid.size();
        }
        starts.push_back(p);
    }

    Eigen::Vector4d best_start = base;
    double best_value = std::numeric_limits<double>::infinity();
    const Eigen::Vector4d lower(DeformationParams::kMinScale, DeformationParams::kMinScale,
                                DeformationParams::kMinScale, kTaperFloor);
    const Eigen::Vector4d upper(DeformationParams::kMaxScale, DeformationParams::kMaxScale,
                                DeformationParams::kMaxScale, DeformationParams::kMaxTaper);
    for (Eigen::Vector4d p : starts) {
        if (result.evaluations >= config.max_evaluations) break;
        for (int i = 0; i < 4; ++i) {
            if (!active[static_cast<std::size_t>(i)]) p[i] = base[i];
        }
        p = p.cwiseMax(lower).cwiseMin(upper);
        const double f = objective(DeformationParams::from_vector(p));
        record(p, f);
        if (f < best_value) {
            best_value = f;
            best_start = p;
        }
    }

    const auto n = static_cast<Eigen::Index>(dims.size());
    Eigen::VectorXd x0(n), step(n), lo(n), hi(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const int d = dims[static_cast<std::size_t>(k)];
        x0[k] = best_start[d];
        step[k] = d < 3 ? config.alpha_step : config.epsilon_step;
        lo[k] = lower[d];
        hi[k] = upper[d];
    }
    auto reduced = [&](const Eigen::VectorXd& x) {
        Eigen::Vector4d p = base;
        for (Eigen::Index k = 0; k < n; ++k) p[dims[static_cast<std::size_t>(k)]] = x[k];
        return p;
    };
    auto f = [&](const Eigen::VectorXd& x) {
        const Eigen::Vector4d p = reduced(x);
        const double v = objective(DeformationParams::from_vector(p));
        record(p, v);
        return v;
    };

    SimplexOptions options;
    options.f_tolerance = config.tolerance;
    options.x_tolerance = config.param_tolerance;
    // one restart from the first optimum guards against a collapsed simplex
    for (int round = 0; round < 2; ++round) {
        options.max_evaluations = config.max_evaluations - result.evaluations;
        if (options.max_evaluations < static_cast<int>(n) + 2) break;
        const auto nm = nelder_mead<double>(f, x0, step, lo, hi, options);
        result.converged = nm.converged;
        if (!nm.converged) break;
        x0 = nm.x;
        step *= 0.5;
    }
    return result;
}

}  // namespace

ShapeObjective::ShapeObjective(const PointCloud& observed, const CategoryTemplate& tmpl, const FitConfig& config)
    : observed_(observed.points), observed_tree_(observed.points), template_(&tmpl), config_(config) {}

double ShapeObjective::operator()(const DeformationParams& params) const {
    const PointCloud predicted = predict_shape(*template_, params, config_.samples, config_.seed);
    const KdTree<double> predicted_tree(predicted.points);
    double value = directed_chamfer(observed_, predicted_tree);
    if (config_.reverse_weight > 0.0) {
        value += config_.reverse_weight * directed_chamfer(predicted.points, observed_tree_);
    }
    return value;
}

FitResult fit_baseline(const PointCloud& observed, const CategoryTemplate& tmpl, FitMode mode,
                       const FitConfig& config) {
    if (mode == FitMode::Full) return fit_deformation(observed, tmpl, config);
    check_inputs(observed, tmpl, config);
    const ShapeObjective objective(observed, tmpl, config);
    return search(objective, mode, config, {});
}

FitResult fit_deformation(const PointCloud& observed, const CategoryTemplate& tmpl, const FitConfig& config,
                          std::span<const FitResult> warm_starts) {
    check_inputs(observed, tmpl, config);
    const ShapeObjective objective(observed, tmpl, config);
    return search(objective, FitMode::Full, config, warm_starts);
}

FitResult fit_deformation(const PointCloud& observed, const CategoryTemplate& tmpl, const FitConfig& config) {
    check_inputs(observed, tmpl, config);
    const ShapeObjective objective(observed, tmpl, config);
    const std::array<FitResult, 2> seeds{search(objective, FitMode::ScaleOnly, config, {}),
                                         search(objective, FitMode::SurfaceOnly, config, {})};
    FitResult full = search(objective, FitMode::Full, config, seeds);
    full.evaluations += seeds[0].evaluations + seeds[1].evaluations;
    return full;
}

std::string fit_result_to_json(const FitResult& r) {
    nlohmann::ordered_json j{{"params",
                              {{"alpha_x", r.params.alpha_x},
                               {"alpha_y", r.params.alpha_y},
                               {"alpha_z", r.params.alpha_z},
                               {"epsilon", r.params.epsilon}}},
                             {"objective", r.objective},
                             {"evaluations", r.evaluations},
                             {"converged", r.converged}};
    return j.dump();
}

}  // namespace clutterfit
