#pragma once

#include "clutterfit/deform.hpp"
#include "clutterfit/optimize.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace clutterfit {

enum class FitMode { None, ScaleOnly, SurfaceOnly, Full };

const char* to_string(FitMode mode);
FitMode fit_mode_from_string(const std::string& name);

struct FitConfig {
    std::size_t samples = 2048;
    std::uint64_t seed = 0;
    int max_evaluations = 600;     // per simplex search
    double tolerance = 1e-7;       // objective spread, m^2
    double param_tolerance = 1e-3; // simplex diameter in parameter units
    double reverse_weight = 0.3;   // weight of the predicted -> observed term
    // coarse multistart grid, per parameter
    std::vector<double> alpha_grid{0.7, 1.0, 1.4};
    std::vector<double> epsilon_grid{-0.3, 0.0, 0.5};
    double alpha_step = 0.1;
    double epsilon_step = 0.1;

    void validate() const;
};

struct FitResult {
    DeformationParams params;
    double objective = 0.0;  // m^2
    int evaluations = 0;
    bool converged = false;
    std::vector<double> best_so_far;
};

/// Fitting objective: mean squared distance from observed to predicted plus
/// `reverse_weight` times the reverse term. The prediction is resampled with
/// a fixed seed, so the value is a deterministic function of the params.
class ShapeObjective {
public:
    ShapeObjective(const PointCloud& observed, const CategoryTemplate& tmpl, const FitConfig& config);

    double operator()(const DeformationParams& params) const;

private:
    Matrix3Xd observed_;
    KdTree<double> observed_tree_;
    const CategoryTemplate* template_;
    FitConfig config_;
};

/// Full four-parameter fit. The scale-only and surface-only fits are run
/// first and seed the search, so the result never scores worse than either.
FitResult fit_deformation(const PointCloud& observed, const CategoryTemplate& tmpl, const FitConfig& config);

/// Full fit seeded with already computed restricted fits.
FitResult fit_deformation(const PointCloud& observed, const CategoryTemplate& tmpl, const FitConfig& config,
                          std::span<const FitResult> warm_starts);

/// Restricted fits: None evaluates the template as is, ScaleOnly freezes
/// epsilon at 0, SurfaceOnly freezes alpha at 1. Full is fit_deformation.
FitResult fit_baseline(const PointCloud& observed, const CategoryTemplate& tmpl, FitMode mode,
                       const FitConfig& config);

std::string fit_result_to_json(const FitResult& result);

}  // namespace clutterfit
