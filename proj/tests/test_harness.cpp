#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "wsosvm/harness.hpp"
#include "wsosvm/rng.hpp"

using namespace wsosvm;
using harness::CVConfig;
using harness::CVData;
using harness::ModelConfig;

namespace {

// Independent exact rank-sum oracle: permutation-mask enumeration with
// midranks.
double oracle_rank_sum(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> pooled = a;
    pooled.insert(pooled.end(), b.begin(), b.end());
    const std::size_t n = a.size(), total = pooled.size();

    std::vector<double> sorted = pooled;
    std::sort(sorted.begin(), sorted.end());
    auto rank_of = [&](double v) {
        double sum = 0.0;
        int count = 0;
        for (std::size_t i = 0; i < total; ++i)
            if (sorted[i] == v) {
                sum += static_cast<double>(i + 1);
                ++count;
            }
        return sum / count;
    };
    std::vector<double> ranks(total);
    for (std::size_t i = 0; i < total; ++i) ranks[i] = rank_of(pooled[i]);

    double observed = 0.0;
    for (std::size_t i = 0; i < n; ++i) observed += ranks[i];

    std::vector<bool> mask(total, false);
    std::fill(mask.begin(), mask.begin() + n, true);
    std::sort(mask.begin(), mask.end(), std::greater<bool>());
    long hits = 0, count = 0;
    do {
        double w = 0.0;
        for (std::size_t i = 0; i < total; ++i)
            if (mask[i]) w += ranks[i];
        if (w >= observed - 1e-12) ++hits;
        ++count;
    } while (std::prev_permutation(mask.begin(), mask.end()));
    return static_cast<double>(hits) / static_cast<double>(count);
}

CVData separable_data(int per_class, double gap = 2.0) {
    CVData data;
    rng::Stream stream(101, "test/cv-data");
    for (int i = 0; i < per_class; ++i) {
        data.biopsy_features.push_back({-gap + 0.1 * stream.next_double(), 0.0});
        data.biopsy_labels.push_back(1);
        data.biopsy_features.push_back({gap + 0.1 * stream.next_double(), 0.0});
        data.biopsy_labels.push_back(2);
    }
    for (int i = 0; i < 3 * per_class; ++i) {
        double side = stream.next_double() < 0.5 ? -gap : gap;
        data.unlabeled_pool.push_back({side + 0.1 * stream.next_double(), 0.5});
        data.normal_pool.push_back({-8.0 + 0.1 * stream.next_double(), -0.5});
    }
    return data;
}

ModelConfig gaussian_model() {
    ModelConfig model;
    model.kernel = {kernels::KernelKind::gaussian, 1.0};
    model.median_gamma = true;
    return model;
}

}  // namespace

TEST_CASE("stratified folds balance every class to within one") {
    std::vector<int> labels;
    for (int i = 0; i < 5; ++i) labels.push_back(1);
    for (int i = 0; i < 5; ++i) labels.push_back(2);
    auto folds = harness::stratified_folds(labels, 5, 42);
    std::map<int, std::map<int, int>> counts;  // fold -> class -> count
    for (std::size_t i = 0; i < labels.size(); ++i) counts[folds[i]][labels[i]]++;
    REQUIRE(counts.size() == 5);
    for (auto& [fold, per_class] : counts) {
        CHECK(per_class[1] == 1);
        CHECK(per_class[2] == 1);
    }

    auto again = harness::stratified_folds(labels, 5, 42);
    CHECK(folds == again);
    auto different = harness::stratified_folds(labels, 5, 43);
    CHECK(folds != different);

    CHECK_THROWS_AS(harness::stratified_folds(labels, 11, 1), DataError);
}

TEST_CASE("stratified folds on the 130/171 biopsy split") {
    // 130 altered / 171 non-altered: per-class balance gives 13 class-2 per
    // fold and fold sizes 30 or 31.
    std::vector<int> labels;
    for (int i = 0; i < 130; ++i) labels.push_back(2);
    for (int i = 0; i < 171; ++i) labels.push_back(1);
    auto folds = harness::stratified_folds(labels, 10, 7);
    std::map<int, int> size, class2;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        size[folds[i]]++;
        if (labels[i] == 2) class2[folds[i]]++;
    }
    REQUIRE(size.size() == 10);
    for (auto& [fold, n] : size) {
        CHECK(n >= 30);
        CHECK(n <= 31);
        CHECK(std::abs(class2[fold] - 13) <= 1);
    }
}

TEST_CASE("metrics confusion identities") {
    CHECK(harness::metrics({1, 2, 1, 2}, {1, 2, 1, 2}).accuracy == 1.0);

    auto degenerate = harness::metrics({1, 1, 1, 1}, {1, 1, 2, 2});
    CHECK(degenerate.accuracy == doctest::Approx(0.5));
    CHECK(*degenerate.sensitivity == 0.0);
    CHECK(*degenerate.specificity == 1.0);

    auto hand = harness::metrics({2, 1, 1, 2}, {2, 2, 1, 1});
    CHECK(hand.accuracy == doctest::Approx(0.5));
    CHECK(*hand.sensitivity == doctest::Approx(0.5));
    CHECK(*hand.specificity == doctest::Approx(0.5));

    // accuracy = (sens*P + spec*N) / (P+N)
    rng::Stream stream(103, "test/metrics");
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<int> truth, pred;
        for (int i = 0; i < 40; ++i) {
            truth.push_back(stream.next_double() < 0.4 ? 2 : 1);
            pred.push_back(stream.next_below(3) == 0 ? 0
                           : stream.next_double() < 0.5 ? 1 : 2);
        }
        auto m = harness::metrics(pred, truth);
        double p = std::count(truth.begin(), truth.end(), 2);
        double n = std::count(truth.begin(), truth.end(), 1);
        // class-0 predictions are errors for both sides
        double recomposed = (*m.sensitivity * p + *m.specificity * n) / (p + n);
        CHECK(m.accuracy == doctest::Approx(recomposed).epsilon(1e-12));
    }

    CHECK_THROWS_AS(harness::metrics({1}, {1, 2}), DataError);
    CHECK_THROWS_AS(harness::metrics({}, {}), DataError);

    auto no_pos = harness::metrics({1, 1}, {1, 1});
    CHECK_FALSE(no_pos.sensitivity.has_value());
    CHECK(no_pos.specificity.has_value());
}

TEST_CASE("rank_sum_one_sided exact values") {
    CHECK(harness::rank_sum_one_sided({3.0, 4.0}, {1.0, 2.0}) ==
          doctest::Approx(1.0 / 6.0).epsilon(1e-15));

    // identical multisets carry no evidence of shift
    CHECK(harness::rank_sum_one_sided({1.0, 2.0}, {1.0, 2.0}) >= 0.5);

    CHECK_THROWS_AS(harness::rank_sum_one_sided({}, {1.0}), DataError);
}

TEST_CASE("rank_sum exact branch matches the permutation-mask oracle") {
    rng::Stream stream(107, "test/ranksum-oracle");
    for (int trial = 0; trial < 15; ++trial) {
        std::size_t n = 2 + stream.next_below(5);
        std::size_t m = 2 + stream.next_below(5);
        std::vector<double> a(n), b(m);
        for (double& v : a) v = std::round(stream.uniform(0.0, 6.0));  // force ties
        for (double& v : b) v = std::round(stream.uniform(0.0, 6.0));
        double p = harness::rank_sum_one_sided_exact(a, b);
        double expected = oracle_rank_sum(a, b);
        CHECK(p == doctest::Approx(expected).epsilon(1e-12));
        CHECK(p > 0.0);
        CHECK(p <= 1.0);
        // one-sided alternatives plus the point mass cover at least 1
        double q = harness::rank_sum_one_sided_exact(b, a);
        CHECK(p + q >= 1.0 - 1e-12);
    }
}

TEST_CASE("rank_sum exact and approximate branches agree at n = m = 10") {
    rng::Stream stream(109, "test/ranksum-approx");
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<double> a(10), b(10);
        for (double& v : a) v = stream.next_normal() + 0.3;
        for (double& v : b) v = stream.next_normal();
        double exact = harness::rank_sum_one_sided_exact(a, b);
        double approx = harness::rank_sum_one_sided_approx(a, b);
        CHECK(std::abs(exact - approx) < 0.02);
    }
}

TEST_CASE("repeated_cv is deterministic and perfect on separable data") {
    CVData data = separable_data(6);  // 12 biopsies
    CVConfig config;
    config.folds = 3;
    config.repeats = 2;
    config.seed = 5;
    config.c1_grid = CVConfig::default_c1_grid();
    config.c2_grid = CVConfig::default_c2_grid();

    auto report = harness::repeated_cv(data, gaussian_model(), 10.0, 10.0, config);
    CHECK(report.mean_accuracy == doctest::Approx(1.0));
    CHECK(report.std_accuracy == 0.0);
    CHECK(report.failed_folds == 0);
    CHECK(report.records.size() == 6);  // repeats x folds

    auto report2 = harness::repeated_cv(data, gaussian_model(), 10.0, 10.0, config);
    CHECK(report2.mean_accuracy == report.mean_accuracy);
    REQUIRE(report2.records.size() == report.records.size());
    for (std::size_t i = 0; i < report.records.size(); ++i) {
        CHECK(report2.records[i].repeat == report.records[i].repeat);
        CHECK(report2.records[i].fold == report.records[i].fold);
        CHECK(report2.records[i].scores.accuracy == report.records[i].scores.accuracy);
    }

    // bookkeeping: repeats=2, folds=2 on 8 samples -> exactly 4 records
    CVData small = separable_data(4);
    config.folds = 2;
    auto report3 = harness::repeated_cv(small, gaussian_model(), 10.0, 10.0, config);
    CHECK(report3.records.size() == 4);
}

TEST_CASE("cv report csv and summary shapes") {
    CVData data = separable_data(5);
    CVConfig config;
    config.folds = 2;
    config.repeats = 2;
    config.seed = 3;
    config.c1_grid = CVConfig::default_c1_grid();
    config.c2_grid = CVConfig::default_c2_grid();
    auto report = harness::repeated_cv(data, gaussian_model(), 10.0, 10.0, config);

    auto dir = std::filesystem::temp_directory_path() / "wsosvm-tests" / "cvreport";
    std::filesystem::create_directories(dir);
    harness::write_cv_report_csv(report, dir / "report.csv");
    CHECK(std::filesystem::exists(dir / "report.csv"));

    std::string summary = harness::summary_text(report);
    CHECK(summary.find("accuracy") != std::string::npos);
    CHECK(summary.find("(") != std::string::npos);  // mean (std) shape
}

TEST_CASE("tune returns the screened grid point with the tie rule") {
    CVData data = separable_data(6);
    CVConfig config;
    config.folds = 3;
    config.repeats = 1;
    config.seed = 11;
    config.c2_grid = {1.0};
    config.c1_grid = {1.0};
    auto single = harness::tune(data, gaussian_model(), config);
    CHECK(single.c1 == 1.0);
    CHECK(single.c2 == 1.0);

    // ties break toward the smaller C1, then the smaller C2: recompute the
    // winner from the diagnostics
    config.c2_grid = {0.1, 1.0, 10.0};
    config.c1_grid = {0.5, 5.0};
    auto tied = harness::tune(data, gaussian_model(), config);
    CHECK_FALSE(tied.diagnostics.empty());
    bool found = false;
    double best_acc = 0.0, best_c1 = 0.0, best_c2 = 0.0;
    for (const auto& entry : tied.diagnostics) {
        if (entry.screened_out) continue;
        bool better = !found || entry.cv_accuracy > best_acc ||
                      (entry.cv_accuracy == best_acc &&
                       (entry.c1 < best_c1 ||
                        (entry.c1 == best_c1 && entry.c2 < best_c2)));
        if (better) {
            found = true;
            best_acc = entry.cv_accuracy;
            best_c1 = entry.c1;
            best_c2 = entry.c2;
        }
    }
    REQUIRE(found);
    CHECK(tied.c1 == best_c1);
    CHECK(tied.c2 == best_c2);
    // at least two surviving grid points tie at the top on this separable set
    int top_count = 0;
    for (const auto& entry : tied.diagnostics)
        if (!entry.screened_out && entry.cv_accuracy == best_acc) ++top_count;
    CHECK(top_count >= 2);
}

TEST_CASE("tune raises when screening rejects every C2") {
    CVData data = separable_data(6);
    CVConfig config;
    config.folds = 3;
    config.repeats = 1;
    config.seed = 11;
    config.c2_grid = {1.0};
    config.c1_grid = {1.0};
    config.screen_threshold = 1.1;  // unreachable
    CHECK_THROWS_WITH_AS(harness::tune(data, gaussian_model(), config),
                         doctest::Contains("best screening accuracy"),
                         harness::TuningError);
}

TEST_CASE("cv config validation") {
    CVConfig config;
    config.c1_grid = {1.0};
    config.c2_grid = {1.0};
    config.folds = 1;
    CHECK_THROWS_AS(config.validate(), ConfigError);
    config.folds = 10;
    config.c1_grid = {0.001};  // outside [0.01, 100]
    CHECK_THROWS_AS(config.validate(), ConfigError);
    config.c1_grid = {1.0, 0.5};  // not ascending
    CHECK_THROWS_AS(config.validate(), ConfigError);
    config.c1_grid = CVConfig::default_c1_grid();
    config.c2_grid = CVConfig::default_c2_grid();
    CHECK_NOTHROW(config.validate());
}
