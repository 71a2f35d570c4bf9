#include "clutterfit/fusion.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>

using namespace clutterfit;
using clutterfit::testing::random_points;

namespace {

Partition make_partition(const Matrix3Xd& pts, const std::string& category, int id, std::size_t first_index) {
    Partition p;
    p.points = PointCloud(pts);
    p.indices.resize(static_cast<std::size_t>(pts.cols()));
    std::iota(p.indices.begin(), p.indices.end(), first_index);
    p.category = category;
    p.merge_id = id;
    p.source_views = {id % 5};
    return p;
}

std::vector<std::size_t> sorted_indices(const Partition& p) {
    auto v = p.indices;
    std::sort(v.begin(), v.end());
    return v;
}

// Union-find over partitions joined by the pairwise mergence condition.
std::vector<std::vector<std::size_t>> component_unions(const std::vector<Partition>& parts, double h) {
    std::vector<std::size_t> parent(parts.size());
    std::iota(parent.begin(), parent.end(), 0);
    std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
        return parent[x] == x ? x : parent[x] = find(parent[x]);
    };
    for (std::size_t i = 0; i < parts.size(); ++i) {
        for (std::size_t j = i + 1; j < parts.size(); ++j) {
            if (parts[i].category == parts[j].category && chamfer_distance(parts[i].points, parts[j].points) < h) {
                parent[find(i)] = find(j);
            }
        }
    }
    std::map<std::size_t, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        auto& g = groups[find(i)];
        g.insert(g.end(), parts[i].indices.begin(), parts[i].indices.end());
    }
    std::vector<std::vector<std::size_t>> out;
    for (auto& [root, g] : groups) {
        std::sort(g.begin(), g.end());
        out.push_back(g);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::vector<std::size_t>> output_sets(const std::vector<Partition>& parts) {
    std::vector<std::vector<std::size_t>> out;
    for (const auto& p : parts) out.push_back(sorted_indices(p));
    std::sort(out.begin(), out.end());
    return out;
}

ViewMasks full_mask(int w, int h, const std::string& category) {
    ViewMasks v;
    v.width = w;
    v.height = h;
    v.masks.push_back({category, MaskImage::Ones(h, w)});
    return v;
}

}  // namespace

TEST_CASE("mergence examples") {
    Rng rng(1);
    const Matrix3Xd pts = random_points(rng, 20, 0.05);
    SUBCASE("identical duplicates merge") {
        auto out = merge_partitions({make_partition(pts, "can", 0, 0), make_partition(pts, "can", 1, 20)}, 1e-4);
        REQUIRE(out.size() == 1);
        CHECK(out[0].size() == 40);
        CHECK(out[0].source_views == std::set<int>{0, 1});
    }
    SUBCASE("category gate") {
        auto out = merge_partitions({make_partition(pts, "can", 0, 0), make_partition(pts, "box", 1, 20)}, 1e-4);
        CHECK(out.size() == 2);
    }
    SUBCASE("transitive chain") {
        // three 3-point clouds at x offsets 0, 0.05, 0.10; only neighbors pass directly
        Matrix3Xd base(3, 3);
        base << 0, 0.001, 0, 0, 0, 0.001, 0, 0, 0;
        std::vector<Partition> parts;
        for (int i = 0; i < 3; ++i) {
            Matrix3Xd p = base;
            p.row(0).array() += 0.05 * i;
            parts.push_back(make_partition(p, "bowl", i, static_cast<std::size_t>(3 * i)));
        }
        const double h = 0.01;
        CHECK(chamfer_distance(parts[0].points, parts[1].points) < h);
        CHECK(chamfer_distance(parts[1].points, parts[2].points) < h);
        CHECK(chamfer_distance(parts[0].points, parts[2].points) > h);
        const auto out = merge_partitions(parts, h);
        REQUIRE(out.size() == 1);
        CHECK(out[0].size() == 9);
    }
}

TEST_CASE("mergence against a connected-components oracle") {
    Rng rng(42);
    const std::vector<std::string> cats{"can", "box", "fruit"};
    for (int trial = 0; trial < 200; ++trial) {
        // clusters far apart; partitions inside a cluster are jittered copies
        const int clusters = 1 + static_cast<int>(rng.below(4));
        std::vector<Partition> parts;
        std::size_t next = 0;
        int id = 0;
        for (int c = 0; c < clusters && parts.size() < 10; ++c) {
            const Vector3d center(rng.uniform(-1, 1) + 5.0 * c, rng.uniform(-1, 1), 0);
            const Matrix3Xd blob = random_points(rng, 12, 0.02).colwise() + center;
            const int copies = 1 + static_cast<int>(rng.below(3));
            for (int k = 0; k < copies && parts.size() < 10; ++k) {
                Matrix3Xd p = blob + random_points(rng, 12, 0.002);
                // a same-place partition of another category stays separate
                const std::string& cat = cats[rng.below(cats.size())];
                parts.push_back(make_partition(p, cat, id++, next));
                next += 12;
            }
        }
        // shuffle merge ids to exercise the schedule
        std::vector<int> ids(parts.size());
        std::iota(ids.begin(), ids.end(), 0);
        for (std::size_t i = ids.size(); i > 1; --i) std::swap(ids[i - 1], ids[rng.below(i)]);
        for (std::size_t i = 0; i < parts.size(); ++i) parts[i].merge_id = ids[i];

        const double h = 0.01;
        const auto merged = merge_partitions(parts, h);
        CHECK(output_sets(merged) == component_unions(parts, h));

        // fixed point and conservation
        CHECK(output_sets(merge_partitions(merged, h)) == output_sets(merged));
        std::size_t total = 0;
        for (const auto& p : merged) total += p.size();
        CHECK(total == next);
        for (std::size_t i = 0; i < merged.size(); ++i) {
            CHECK(merged[i].points.size() == merged[i].indices.size());
            for (std::size_t j = i + 1; j < merged.size(); ++j) {
                if (merged[i].category == merged[j].category) {
                    CHECK(chamfer_distance(merged[i].points, merged[j].points) >= h);
                }
            }
        }
    }
}

TEST_CASE("assign_labels") {
    const CameraModel cam = CameraModel::look_at(Vector3d(0, 0, 1), Vector3d::Zero(), Vector3d::UnitY(), 40, 30, 30);
    Rng rng(3);
    Matrix3Xd pts = random_points(rng, 200, 0.3);
    pts.row(2).setZero();
    const PointCloud cloud(pts);

    const auto all = assign_labels(cloud, full_mask(40, 30, "box"), cam, 2, 100);
    REQUIRE(all.size() == 1);
    CHECK(all[0].category == "box");
    CHECK(all[0].source_views == std::set<int>{2});
    CHECK(all[0].size() == 200);
    CHECK(all[0].indices.front() == 100);
    CHECK(all[0].points.points == pts);

    ViewMasks halves;
    halves.width = 40;
    halves.height = 30;
    MaskImage left = MaskImage::Zero(30, 40), right = MaskImage::Zero(30, 40);
    left.leftCols(20).setOnes();
    right.rightCols(20).setOnes();
    halves.masks = {{"can", left}, {"bowl", right}};
    const auto two = assign_labels(cloud, halves, cam, 0);
    REQUIRE(two.size() == 2);
    CHECK(two[0].size() + two[1].size() == 200);
    CHECK(two[0].merge_id != two[1].merge_id);

    ViewMasks none;
    none.width = 40;
    none.height = 30;
    CHECK(assign_labels(cloud, none, cam, 0).empty());

    ViewMasks wrong = full_mask(10, 10, "box");
    CHECK_THROWS_AS(assign_labels(cloud, wrong, cam, 0), Error);
}

TEST_CASE("fuse_features examples") {
    Eigen::MatrixXd f(2, 2);
    f << 1, 2, 3, 4;
    const auto id = fuse_features(Eigen::MatrixXd::Identity(2, 2), f);
    CHECK(id.intra == f);
    Eigen::MatrixXd expected(2, 2);
    expected << 3, 4, 1, 2;
    CHECK(id.inter == expected);
    CHECK(id.fused.cols() == 6);
    CHECK(id.fused.leftCols(2) == f);
    CHECK(id.fused.middleCols(2, 2) == id.intra);
    CHECK(id.fused.rightCols(2) == id.inter);

    const auto ones = fuse_features(Eigen::MatrixXd::Ones(2, 2), f);
    CHECK(ones.inter.isZero(0));
    CHECK_THROWS_AS(fuse_features(Eigen::MatrixXd::Ones(3, 3), f), Error);
    CHECK_THROWS_AS(fuse_features(Eigen::MatrixXd::Ones(2, 3), f), Error);

    // float features keep their scalar type
    const Eigen::MatrixXf ff = f.cast<float>();
    const auto fl = fuse_features(Eigen::MatrixXf::Identity(2, 2), ff);
    CHECK(fl.intra == ff);
}

TEST_CASE("fuse_features is linear in the features") {
    Rng rng(6);
    for (int t = 0; t < 20; ++t) {
        const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng.below(12));
        const Eigen::Index c = 1 + static_cast<Eigen::Index>(rng.below(6));
        Eigen::MatrixXd a(n, n), f1(n, c), f2(n, c);
        for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = rng.uniform();
        for (Eigen::Index i = 0; i < f1.size(); ++i) f1.data()[i] = rng.uniform(-1, 1);
        for (Eigen::Index i = 0; i < f2.size(); ++i) f2.data()[i] = rng.uniform(-1, 1);
        const auto sum = fuse_features(a, f1 + f2).intra;
        CHECK((sum - fuse_features(a, f1).intra - fuse_features(a, f2).intra).cwiseAbs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("affinity_from_labels") {
    const std::vector<int> one{7};
    CHECK(affinity_from_labels<int>(one) == Eigen::MatrixXd::Ones(1, 1));
    const std::vector<int> three{0, 0, 1};
    Eigen::MatrixXd expected(3, 3);
    expected << 1, 1, 0, 1, 1, 0, 0, 0, 1;
    CHECK(affinity_from_labels<int>(three) == expected);
    const std::vector<int> same(4, 2);
    CHECK(affinity_from_labels<int>(same) == Eigen::MatrixXd::Ones(4, 4));
    CHECK_THROWS_AS(affinity_from_labels<int>(std::vector<int>{}), Error);

    // equivalence relation: symmetric, reflexive, transitive
    Rng rng(2);
    std::vector<int> labels(15);
    for (auto& l : labels) l = static_cast<int>(rng.below(4));
    const Eigen::MatrixXd a = affinity_from_labels<int>(labels);
    CHECK(a == a.transpose());
    CHECK(a.diagonal() == Eigen::VectorXd::Ones(15));
    for (int i = 0; i < 15; ++i) {
        for (int j = 0; j < 15; ++j) {
            for (int k = 0; k < 15; ++k) {
                if (a(i, j) == 1 && a(j, k) == 1) CHECK(a(i, k) == 1);
            }
        }
    }
}

TEST_CASE("affinity objective hand values") {
    const double ln2 = std::log(2.0);
    std::vector<Eigen::MatrixXd> p{Eigen::MatrixXd::Constant(1, 1, 0.5)};
    std::vector<Eigen::MatrixXd> c{Eigen::MatrixXd::Ones(1, 1)};
    CHECK(affinity_bce(p, c) == doctest::Approx(ln2).epsilon(1e-9));

    p = {Eigen::MatrixXd::Constant(2, 2, 0.5)};
    Eigen::MatrixXd mixed(2, 2);
    mixed << 1, 0, 0, 1;
    c = {mixed};
    CHECK(affinity_bce(p, c) == doctest::Approx(ln2).epsilon(1e-9));
    c = {Eigen::MatrixXd::Ones(2, 2)};
    CHECK(affinity_bce(p, c) == doctest::Approx(ln2).epsilon(1e-9));

    // truth all ones: precision 0, recall log 0.5, specificity undefined
    try {
        affinity_prs(p, c);
        FAIL("expected a zero denominator");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::ZeroDenominator);
        CHECK(std::string(e.what()).find("view 0") != std::string::npos);
    }

    c = {mixed};
    const PrsTerms t = affinity_prs(p, c);
    CHECK(t.precision == doctest::Approx(-ln2).epsilon(1e-9));
    CHECK(t.recall == doctest::Approx(-ln2).epsilon(1e-9));
    CHECK(t.specificity == doctest::Approx(-ln2).epsilon(1e-9));
    CHECK(std::abs(seg_objective(p, c, 1.0) - 2.772589) < 1e-6);
    CHECK(seg_objective(p, c, 0.0) == affinity_bce(p, c));
}

TEST_CASE("affinity objective fixed points and signs") {
    Rng rng(10);
    for (int t = 0; t < 30; ++t) {
        const int k = 1 + static_cast<int>(rng.below(3));
        const std::size_t n = 2 + rng.below(10);
        std::vector<Eigen::MatrixXd> truth, random;
        for (int v = 0; v < k; ++v) {
            std::vector<int> labels(n);
            for (auto& l : labels) l = static_cast<int>(rng.below(3));
            labels[0] = 0;
            labels[1] = 1;  // at least two instances keeps every denominator positive
            truth.push_back(affinity_from_labels<int>(labels));
            Eigen::MatrixXd r(truth.back().rows(), truth.back().cols());
            for (Eigen::Index i = 0; i < r.size(); ++i) r.data()[i] = rng.uniform();
            random.push_back(r);
        }
        CHECK(affinity_bce(truth, truth) <= 1e-5);
        const PrsTerms perfect = affinity_prs(truth, truth);
        CHECK(-perfect.precision <= 1e-5);
        CHECK(-perfect.recall <= 1e-5);
        CHECK(-perfect.specificity <= 1e-5);
        for (double lambda : {0.0, 0.5, 1.0, 3.0}) CHECK(std::abs(seg_objective(truth, truth, lambda)) <= 1e-5);

        CHECK(affinity_bce(random, truth) >= 0.0);
        const PrsTerms r = affinity_prs(random, truth);
        CHECK(r.precision <= 0.0);
        CHECK(r.recall <= 0.0);
        CHECK(r.specificity <= 0.0);
    }
}

TEST_CASE("affinity shape checks") {
    std::vector<Eigen::MatrixXd> p{Eigen::MatrixXd::Constant(2, 2, 0.5)};
    std::vector<Eigen::MatrixXd> c{Eigen::MatrixXd::Identity(3, 3)};
    CHECK_THROWS_AS(affinity_bce(p, c), Error);
    std::vector<Eigen::MatrixXd> two{Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Identity(2, 2)};
    CHECK_THROWS_AS(affinity_bce(p, two), Error);
    CHECK_THROWS_AS(affinity_bce({}, {}), Error);
}
