// Acceptance checks 1-10. One PASS/FAIL line per criterion; exit status 1 if any fails.
#include "clutterfit/fusion.hpp"
#include "clutterfit/pipeline.hpp"
#include "clutterfit/templates.hpp"
#include "test_support.hpp"

#include <json.hpp>

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>

using namespace clutterfit;
using clutterfit::testing::brute_chamfer;
using clutterfit::testing::optimal_match_count;
using clutterfit::testing::random_points;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double a) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

DeformationParams draw_params(Rng& rng) {
    return {rng.uniform(0.7, 1.3), rng.uniform(0.7, 1.3), rng.uniform(0.7, 1.3), rng.uniform(-0.3, 0.5)};
}

Outcome chamfer_oracle(double& limit) {
    limit = 5.0;
    Rng rng(derive_seed(1, stage::metric, 1));
    double worst = 0.0;
    for (int t = 0; t < 200; ++t) {
        const auto na = static_cast<Eigen::Index>(1 + rng.below(50));
        const auto nb = static_cast<Eigen::Index>(1 + rng.below(50));
        const Matrix3Xd a = random_points(rng, na), b = random_points(rng, nb);
        worst = std::max(worst, std::abs(chamfer_distance(PointCloud(a), PointCloud(b)) - brute_chamfer(a, b)));
    }
    return {worst <= 1e-12, fmt("max |indexed - brute| = %.3g", worst)};
}

Outcome round_trip(double& limit) {
    limit = 120.0;
    const auto reg = TemplateRegistry::defaults();
    const auto cats = reg.categories();
    Rng rng(derive_seed(2, stage::fit, 0));
    const FitConfig fc;
    int ok = 0;
    for (int t = 0; t < 100; ++t) {
        const CategoryTemplate tmpl = reg.build(cats[static_cast<std::size_t>(t) % cats.size()]);
        const DeformationParams p = draw_params(rng);
        const PointCloud obs = predict_shape(tmpl, p, fc.samples, derive_seed(2, stage::fit, 1000 + t));
        const FitResult r = fit_deformation(obs, tmpl, fc);
        const bool good = std::abs(r.params.alpha_x / p.alpha_x - 1) <= 0.05 &&
                          std::abs(r.params.alpha_y / p.alpha_y - 1) <= 0.05 &&
                          std::abs(r.params.alpha_z / p.alpha_z - 1) <= 0.05 &&
                          std::abs(r.params.epsilon - p.epsilon) <= 0.05;
        ok += good;
    }
    return {ok >= 95, std::to_string(ok) + "/100 recovered"};
}

Outcome occlusion_ordering(double& limit) {
    limit = 300.0;
    const auto reg = TemplateRegistry::defaults();
    const FitConfig fc;
    bool all = true;
    std::ostringstream detail;
    detail << "mean CD x1e-4 (none/scale/surface/full):";
    std::uint64_t ci = 0;
    for (const auto& c : reg.categories()) {
        const CategoryTemplate tmpl = reg.build(c);
        Rng rng(derive_seed(3, stage::fit, ci));
        std::array<double, 4> sum{};
        const int per = 50;
        for (int t = 0; t < per; ++t) {
            const DeformationParams p = draw_params(rng);
            const PointCloud full = predict_shape(tmpl, p, 2048, derive_seed(3, stage::scene, ci * 1000 + t));
            // keep the half on one side of a random vertical plane through the centroid
            const double th = rng.uniform(0, 2 * std::numbers::pi);
            const Vector3d d(std::cos(th), std::sin(th), 0);
            const Vector3d centroid = full.points.rowwise().mean();
            std::vector<std::size_t> keep;
            for (Eigen::Index i = 0; i < full.points.cols(); ++i) {
                if ((full.points.col(i) - centroid).dot(d) >= 0) keep.push_back(static_cast<std::size_t>(i));
            }
            const PointCloud obs = full.select(keep);
            const TriangleMesh truth = deform_template(tmpl, p);
            std::array<FitResult, 4> r;
            r[0] = fit_baseline(obs, tmpl, FitMode::None, fc);
            r[1] = fit_baseline(obs, tmpl, FitMode::ScaleOnly, fc);
            r[2] = fit_baseline(obs, tmpl, FitMode::SurfaceOnly, fc);
            const std::array<FitResult, 2> warm{r[1], r[2]};
            r[3] = fit_deformation(obs, tmpl, fc, warm);
            const std::uint64_t s = derive_seed(3, stage::metric, ci * 1000 + t);
            for (std::size_t m = 0; m < 4; ++m) {
                sum[m] += shape_cd(predict_shape(tmpl, r[m].params, 2048, s), truth, 2048, s + 1) / per;
            }
        }
        const bool ok = sum[3] < sum[1] && sum[1] < sum[0] && sum[3] < sum[2] && sum[2] < sum[0];
        all = all && ok;
        char buf[160];
        std::snprintf(buf, sizeof buf, " %s %.2f/%.2f/%.2f/%.2f%s", c.c_str(), sum[0] * 1e4, sum[1] * 1e4, sum[2] * 1e4,
                      sum[3] * 1e4, ok ? "" : "(!)");
        detail << buf;
        ++ci;
    }
    return {all, detail.str()};
}

std::size_t visible_instances(const std::vector<Partition>& gts) {
    std::size_t n = 0;
    for (const auto& g : gts) n += !g.indices.empty();
    return n;
}

bool perfect_report(const MatchReport& r) {
    for (const auto* list : {&r.sweep, &r.cuts}) {
        for (const auto& s : *list) {
            if (s.precision != 1.0 || s.recall != 1.0) return false;
        }
    }
    return true;
}

Outcome mergence_correctness(double& limit) {
    limit = 60.0;
    const PipelineConfig config;
    int exact = 0, perfect = 0, over = 0, under = 0, total = 0;
    for (Preset preset : {Preset::Easy, Preset::Normal, Preset::Hard}) {
        for (int s = 0; s < 20; ++s) {
            const std::uint64_t seed = derive_seed(4, stage::scene, static_cast<std::uint64_t>(preset) * 100 + s);
            const SceneDescription scene =
                generate_scene(config.scene_config(preset, seed), TemplateRegistry::defaults(), seed);
            const auto parts = segment_scene(scene, truth_masks(scene), config.h_threshold);
            const auto gts = truth_partitions(scene);
            const std::size_t want = visible_instances(gts);
            exact += parts.size() == want;
            over += parts.size() > want;
            under += parts.size() < want;
            perfect += parts.size() == want && perfect_report(segmentation_map(parts, gts));
            ++total;
        }
    }
    std::ostringstream d;
    d << "h=" << config.h_threshold << ": exact count " << exact << "/" << total << ", perfect mAP " << perfect << "/"
      << total << ", over-split " << over << ", under-split " << under;
    return {perfect == total, d.str()};
}

Outcome degradation(double& limit) {
    limit = 0.0;
    const PipelineConfig config;
    const std::array<double, 3> qs{0.0, 0.1, 0.3};
    std::array<double, 3> recall{};
    for (int s = 0; s < 20; ++s) {
        const std::uint64_t seed = derive_seed(5, stage::scene, static_cast<std::uint64_t>(s));
        const SceneDescription scene =
            generate_scene(config.scene_config(Preset::Easy, seed), TemplateRegistry::defaults(), seed);
        const auto gts = truth_partitions(scene);
        for (std::size_t k = 0; k < qs.size(); ++k) {
            NoiseConfig noise;
            noise.drop_probability = qs[k];
            const auto parts = segment_scene(scene, scene_masks(scene, noise, seed), config.h_threshold);
            recall[k] += segmentation_map(parts, gts).mean_recall / 20.0;
        }
    }
    char buf[128];
    std::snprintf(buf, sizeof buf, "mean mAR at q=0/0.1/0.3: %.4f/%.4f/%.4f", recall[0], recall[1], recall[2]);
    return {recall[0] > recall[1] && recall[1] > recall[2], buf};
}

Outcome affinity_fixed_points(double& limit) {
    limit = 0.0;
    Rng rng(derive_seed(6, stage::metric, 0));
    double worst = 0.0;
    for (int t = 0; t < 50; ++t) {
        std::vector<Eigen::MatrixXd> truth;
        const std::size_t n = 2 + rng.below(20);
        for (int v = 0; v < 3; ++v) {
            // even points share instance 0, so every view has both same and different pairs
            std::vector<int> labels(n);
            for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i % 2 == 0 ? 0 : 1 + rng.below(3));
            truth.push_back(affinity_from_labels(std::span<const int>(labels)));
        }
        const PrsTerms prs = affinity_prs(truth, truth);
        for (double v : {affinity_bce(truth, truth), -prs.precision, -prs.recall, -prs.specificity,
                         seg_objective(truth, truth, rng.uniform(0, 5))}) {
            worst = std::max(worst, v);
        }
    }
    const std::vector<Eigen::MatrixXd> half{Eigen::MatrixXd::Constant(2, 2, 0.5)};
    const std::vector<Eigen::MatrixXd> eye{Eigen::MatrixXd::Identity(2, 2)};
    const double hand = seg_objective(half, eye, 1.0);
    char buf[160];
    std::snprintf(buf, sizeof buf, "max term at fixed point %.3g, hand case %.7f", worst, hand);
    return {worst <= 1e-5 && std::abs(hand - 2.772589) <= 1e-6, buf};
}

Outcome fusion_algebra(double& limit) {
    limit = 0.0;
    Rng rng(derive_seed(7, stage::metric, 0));
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
        const auto n = static_cast<Eigen::Index>(1 + rng.below(40));
        const auto c = static_cast<Eigen::Index>(1 + rng.below(16));
        Eigen::MatrixXd f(n, c);
        for (Eigen::Index i = 0; i < f.size(); ++i) f.data()[i] = rng.uniform(-10, 10);
        const auto id = fuse_features(Eigen::MatrixXd::Identity(n, n), f);
        const auto ones = fuse_features(Eigen::MatrixXd::Ones(n, n), f);
        worst = std::max({worst, (id.intra - f).cwiseAbs().maxCoeff(), ones.inter.cwiseAbs().maxCoeff()});
    }
    return {worst <= 1e-12, fmt("max deviation %.3g", worst)};
}

Outcome metric_sanity(double& limit) {
    limit = 0.0;
    Rng rng(derive_seed(8, stage::metric, 0));
    const std::vector<std::string> names{"box", "can"};
    int monotone_bad = 0, greedy_worse = 0, agree = 0, cases = 0;
    for (int t = 0; t < 1000; ++t) {
        // partitions over a 40-point universe: random intervals
        auto draw = [&](std::size_t count) {
            std::vector<Partition> out;
            for (std::size_t i = 0; i < count; ++i) {
                Partition p;
                const std::size_t a = rng.below(40);
                const std::size_t len = 1 + rng.below(15);
                for (std::size_t k = a; k < std::min<std::size_t>(40, a + len); ++k) p.indices.push_back(k);
                p.category = names[rng.below(2)];
                p.merge_id = static_cast<int>(i);
                out.push_back(std::move(p));
            }
            return out;
        };
        const auto preds = draw(rng.below(5));
        const auto gts = draw(rng.below(5));
        const MatchReport r = segmentation_map(preds, gts);
        for (std::size_t k = 1; k < r.sweep.size(); ++k) {
            monotone_bad += r.sweep[k].precision > r.sweep[k - 1].precision || r.sweep[k].recall > r.sweep[k - 1].recall;
        }
        monotone_bad += r.at(0.5).precision > r.at(0.25).precision || r.at(0.5).recall > r.at(0.25).recall;

        Eigen::MatrixXd iou(static_cast<Eigen::Index>(preds.size()), static_cast<Eigen::Index>(gts.size()));
        std::vector<std::string> pc, gc;
        for (const auto& p : preds) pc.push_back(p.category);
        for (const auto& g : gts) gc.push_back(g.category);
        for (Eigen::Index p = 0; p < iou.rows(); ++p) {
            for (Eigen::Index g = 0; g < iou.cols(); ++g) {
                iou(p, g) = point_mask_iou(preds[static_cast<std::size_t>(p)], gts[static_cast<std::size_t>(g)]);
            }
        }
        std::vector<ThresholdScore> all = r.sweep;
        all.insert(all.end(), r.cuts.begin(), r.cuts.end());
        for (const auto& s : all) {
            const int greedy = static_cast<int>(std::lround(s.recall * static_cast<double>(gts.size())));
            const int best = optimal_match_count(iou, pc, gc, s.threshold);
            if (gts.empty()) continue;
            greedy_worse += greedy > best;
            agree += greedy == best;
            ++cases;
        }
    }
    std::ostringstream d;
    d << "monotonicity violations " << monotone_bad << ", greedy > optimal " << greedy_worse << ", agreement " << agree
      << "/" << cases;
    return {monotone_bad == 0 && greedy_worse == 0 && agree * 10 >= cases * 9, d.str()};
}

PipelineConfig small_bench() {
    PipelineConfig c;
    c.repetitions = 1;
    c.bench_presets = {Preset::Easy};
    c.seed = 9;
    return c;
}

Outcome bench_determinism(double& limit) {
    limit = 0.0;
    const fs::path root = fs::temp_directory_path() / "clutterfit_acceptance_bench";
    fs::remove_all(root);
    PipelineConfig c = small_bench();
    std::ostringstream sink;
    auto* old = std::cout.rdbuf(sink.rdbuf());
    c.out = root / "a";
    cmd_bench(c);
    c.out = root / "b";
    cmd_bench(c);
    std::cout.rdbuf(old);
    bool same = true;
    for (const char* f : {"bench.json", "bench.txt"}) {
        same = same && read_text_file(root / "a" / f) == read_text_file(root / "b" / f);
    }
    const auto size = fs::file_size(root / "a" / "bench.json");
    fs::remove_all(root);
    return {same, std::string(same ? "identical" : "different") + " reports (" + std::to_string(size) + " bytes)"};
}

Outcome end_to_end(double& limit) {
    limit = 0.0;
    PipelineConfig c;
    c.seed = 10;
    c.repetitions = 5;
    c.bench_presets = {Preset::Easy};
    c.noise.erode_radius = 2;
    c.noise.flip_probability = 0.05;
    c.noise.drop_probability = 0.05;
    const BenchReport report = run_bench(c);
    const auto j = nlohmann::json::parse(report.json);
    const auto& modes = j["presets"]["easy"]["modes"];
    const double full = modes["full"]["scene_F1"]["mean"].get<double>();
    const double none = modes["none"]["scene_F1"]["mean"].get<double>();
    const double scale = modes["scale-only"]["scene_F1"]["mean"].get<double>();
    const double surface = modes["surface-only"]["scene_F1"]["mean"].get<double>();
    char buf[200];
    std::snprintf(buf, sizeof buf, "scene F1 none %.4f, scale-only %.4f, surface-only %.4f, full %.4f over %d scenes",
                  none, scale, surface, full, report.scenes);
    return {full > none && report.failures == 0, buf};
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome(double&)>>> criteria{
        {"chamfer oracle equivalence", chamfer_oracle},
        {"deformation round trip", round_trip},
        {"half-occlusion CD ordering", occlusion_ordering},
        {"mergence correctness", mergence_correctness},
        {"mergence degradation with mask drop", degradation},
        {"affinity objective fixed points", affinity_fixed_points},
        {"feature fusion identities", fusion_algebra},
        {"metric sweep sanity", metric_sanity},
        {"bench determinism", bench_determinism},
        {"end-to-end improvement", end_to_end},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto start = std::chrono::steady_clock::now();
        double limit = 0.0;
        Outcome o;
        try {
            o = criteria[i].second(limit);
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (limit > 0.0 && secs >= limit) {
            o.pass = false;
            o.detail += "; over the time limit";
        }
        failed += !o.pass;
        std::printf("%s %2zu %s: %s [%.1f s%s]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str(),
                    secs, limit > 0.0 ? (" / limit " + fmt("%.0f s", limit)).c_str() : "");
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
