#include "wsosvm/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "wsosvm/rng.hpp"

namespace wsosvm::harness {

std::vector<double> CVConfig::default_c2_grid() { return {0.01, 0.1, 1.0, 10.0, 100.0}; }

std::vector<double> CVConfig::default_c1_grid() {
    // 13 log-spaced points spanning [0.01, 100].
    std::vector<double> grid;
    for (int i = 0; i < 13; ++i)
        grid.push_back(std::pow(10.0, -2.0 + 4.0 * i / 12.0));
    return grid;
}

void CVConfig::validate() const {
    if (folds < 2) throw ConfigError("cv: folds must be >= 2");
    if (repeats < 1) throw ConfigError("cv: repeats must be >= 1");
    auto check_grid = [](const std::vector<double>& grid, const char* name) {
        if (grid.empty()) throw ConfigError(std::string("cv: empty ") + name);
        double prev = 0.0;
        for (double v : grid) {
            if (v < 0.01 - 1e-12 || v > 100.0 + 1e-12)
                throw ConfigError(std::string("cv: ") + name + " value outside [0.01, 100]");
            if (v <= prev) throw ConfigError(std::string("cv: ") + name + " must ascend");
            prev = v;
        }
    };
    check_grid(c2_grid, "c2_grid");
    check_grid(c1_grid, "c1_grid");
}

Metrics metrics(const std::vector<int>& predicted, const std::vector<int>& truth) {
    if (predicted.size() != truth.size())
        throw DataError("metrics: prediction/truth length mismatch");
    if (truth.empty()) throw DataError("metrics: empty input");
    std::size_t correct = 0, tp = 0, fn = 0, tn = 0, fp = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (predicted[i] == truth[i]) ++correct;
        if (truth[i] == 2)
            (predicted[i] == 2 ? tp : fn)++;
        else if (truth[i] == 1)
            (predicted[i] == 1 ? tn : fp)++;
    }
    Metrics m;
    m.accuracy = static_cast<double>(correct) / static_cast<double>(truth.size());
    if (tp + fn > 0) m.sensitivity = static_cast<double>(tp) / static_cast<double>(tp + fn);
    if (tn + fp > 0) m.specificity = static_cast<double>(tn) / static_cast<double>(tn + fp);
    return m;
}

std::vector<int> stratified_folds(const std::vector<int>& labels, int k,
                                  std::uint64_t seed) {
    if (k < 1 || static_cast<std::size_t>(k) > labels.size())
        throw DataError("stratified_folds: fold count " + std::to_string(k) +
                        " exceeds sample count " + std::to_string(labels.size()));
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);

    std::vector<int> assignment(labels.size(), 0);
    rng::Stream stream(seed, "harness/stratified-folds");
    for (auto& [label, indices] : by_class) {
        stream.shuffle(indices);
        for (std::size_t j = 0; j < indices.size(); ++j)
            assignment[indices[j]] = static_cast<int>(j % static_cast<std::size_t>(k));
    }
    return assignment;
}

CVData CVData::from_dataset(const dataset::Dataset& data) {
    CVData cv;
    for (const dataset::Row& r : data.rows) {
        switch (r.role) {
            case dataset::Role::biopsy:
                if (r.cls != 1 && r.cls != 2)
                    throw DataError("biopsy row must carry class 1 or 2");
                cv.biopsy_features.push_back(r.features);
                cv.biopsy_labels.push_back(r.cls);
                break;
            case dataset::Role::unlabeled:
                cv.unlabeled_pool.push_back(r.features);
                break;
            case dataset::Role::normal:
                cv.normal_pool.push_back(r.features);
                break;
        }
    }
    return cv;
}

namespace {

struct FoldAux {
    std::vector<std::vector<double>> unlabeled;
    std::vector<std::vector<double>> normal;
    std::vector<std::size_t> normal_drawn;  // indices into the normal pool
};

// Auxiliary draws per the sample-selection policy: unlabeled + normal
// together match the training-biopsy count, split evenly, with the
// unlabeled half skipped entirely for the ordinal ablation.
FoldAux draw_aux(const CVData& data, std::size_t biopsy_count, bool use_unlabeled,
                 std::uint64_t seed, std::uint64_t draw_index) {
    FoldAux aux;
    std::size_t m12 = use_unlabeled ? biopsy_count / 2 : 0;
    std::size_t m0 = biopsy_count - biopsy_count / 2;
    m12 = std::min(m12, data.unlabeled_pool.size());
    m0 = std::min(m0, data.normal_pool.size());

    if (m12 > 0) {
        rng::Stream s(seed, "harness/aux-unlabeled", draw_index);
        for (std::size_t i : s.sample_without_replacement(data.unlabeled_pool.size(), m12))
            aux.unlabeled.push_back(data.unlabeled_pool[i]);
    }
    if (m0 > 0) {
        rng::Stream s(seed, "harness/aux-normal", draw_index);
        aux.normal_drawn = s.sample_without_replacement(data.normal_pool.size(), m0);
        for (std::size_t i : aux.normal_drawn) aux.normal.push_back(data.normal_pool[i]);
    }
    return aux;
}

wso::TrainedModel train_fold(const CVData& data, const std::vector<int>& folds,
                             int test_fold, const ModelConfig& model, double c1,
                             double c2, const FoldAux& aux) {
    wso::TrainingSet ts;
    for (std::size_t i = 0; i < data.biopsy_features.size(); ++i) {
        if (folds[i] == test_fold) continue;
        auto& dst = data.biopsy_labels[i] == 1 ? ts.class1 : ts.class2;
        dst.push_back(data.biopsy_features[i]);
    }
    ts.unlabeled = aux.unlabeled;
    ts.normal = aux.normal;

    wso::TrainOptions opts;
    opts.median_gamma = model.median_gamma;
    opts.channel_names = model.channel_names;
    return wso::train(ts, model.kernel, c1, c2, opts);
}

double sample_std(const std::vector<double>& values, double mean) {
    if (values.size() < 2) return 0.0;
    double acc = 0.0;
    for (double v : values) acc += (v - mean) * (v - mean);
    return std::sqrt(acc / static_cast<double>(values.size() - 1));
}

}  // namespace

CVReport repeated_cv(const CVData& data, const ModelConfig& model, double c1,
                     double c2, const CVConfig& config) {
    if (config.folds < 2) throw ConfigError("cv: folds must be >= 2");
    if (data.biopsy_features.empty()) throw DataError("cv: no biopsy samples");

    CVReport report;
    report.c1 = c1;
    report.c2 = c2;
    report.seed = config.seed;

    std::vector<double> rep_acc, rep_sens, rep_spec;
    for (int rep = 0; rep < config.repeats; ++rep) {
        rng::Stream fold_seed_stream(config.seed, "harness/repeat-folds",
                                     static_cast<std::uint64_t>(rep));
        std::uint64_t fold_seed = fold_seed_stream.next_u64();
        auto folds = stratified_folds(data.biopsy_labels, config.folds, fold_seed);

        std::size_t correct = 0, total = 0, tp = 0, fn = 0, tn = 0, fp = 0;
        for (int fold = 0; fold < config.folds; ++fold) {
            FoldRecord record;
            record.repeat = rep;
            record.fold = fold;

            std::vector<int> test_idx;
            for (std::size_t i = 0; i < folds.size(); ++i)
                if (folds[i] == fold) test_idx.push_back(static_cast<int>(i));
            record.test_count = static_cast<int>(test_idx.size());
            if (test_idx.empty()) {
                report.records.push_back(record);
                continue;
            }

            std::size_t train_count = data.biopsy_features.size() - test_idx.size();
            std::uint64_t draw_index =
                static_cast<std::uint64_t>(rep) * static_cast<std::uint64_t>(config.folds) +
                static_cast<std::uint64_t>(fold);
            FoldAux aux = draw_aux(data, train_count, model.use_unlabeled, config.seed,
                                   draw_index);
            try {
                wso::TrainedModel trained =
                    train_fold(data, folds, fold, model, c1, c2, aux);
                std::vector<int> predicted, truth;
                for (int i : test_idx) {
                    predicted.push_back(wso::label_value(
                        wso::classify(trained, data.biopsy_features[i])));
                    truth.push_back(data.biopsy_labels[i]);
                }
                record.scores = metrics(predicted, truth);
                for (std::size_t i = 0; i < truth.size(); ++i) {
                    if (predicted[i] == truth[i]) ++correct;
                    ++total;
                    if (truth[i] == 2)
                        (predicted[i] == 2 ? tp : fn)++;
                    else
                        (predicted[i] == 1 ? tn : fp)++;
                }
            } catch (const ConvergenceError& err) {
                record.failed = true;
                record.error = err.what();
                ++report.failed_folds;
            }
            report.records.push_back(record);
        }

        if (total > 0) {
            double acc = static_cast<double>(correct) / static_cast<double>(total);
            rep_acc.push_back(acc);
            report.repeat_accuracy.push_back(acc);
            if (tp + fn > 0)
                rep_sens.push_back(static_cast<double>(tp) / static_cast<double>(tp + fn));
            if (tn + fp > 0)
                rep_spec.push_back(static_cast<double>(tn) / static_cast<double>(tn + fp));
        }
    }

    auto mean_of = [](const std::vector<double>& v) {
        double acc = 0.0;
        for (double x : v) acc += x;
        return v.empty() ? 0.0 : acc / static_cast<double>(v.size());
    };
    report.mean_accuracy = mean_of(rep_acc);
    report.std_accuracy = sample_std(rep_acc, report.mean_accuracy);
    if (!rep_sens.empty()) {
        report.mean_sensitivity = mean_of(rep_sens);
        report.std_sensitivity = sample_std(rep_sens, *report.mean_sensitivity);
    }
    if (!rep_spec.empty()) {
        report.mean_specificity = mean_of(rep_spec);
        report.std_specificity = sample_std(rep_spec, *report.mean_specificity);
    }
    return report;
}

namespace {

// Screening accuracy for one (C1, C2): held-out biopsies must land in
// class 1 or 2 and held-back normal samples in class 0, judged by f0.
double screening_accuracy(const CVData& data, const ModelConfig& model, double c1,
                          double c2, const std::vector<int>& folds, int fold_count,
                          std::uint64_t seed) {
    std::size_t correct = 0, total = 0;
    for (int fold = 0; fold < fold_count; ++fold) {
        std::vector<int> test_idx;
        for (std::size_t i = 0; i < folds.size(); ++i)
            if (folds[i] == fold) test_idx.push_back(static_cast<int>(i));
        if (test_idx.empty()) continue;
        std::size_t train_count = data.biopsy_features.size() - test_idx.size();
        FoldAux aux = draw_aux(data, train_count, model.use_unlabeled, seed,
                               static_cast<std::uint64_t>(fold));
        wso::TrainedModel trained;
        try {
            trained = train_fold(data, folds, fold, model, c1, c2, aux);
        } catch (const ConvergenceError&) {
            total += test_idx.size();
            continue;  // failed folds count as all-wrong
        }
        for (int i : test_idx) {
            double h = wso::decision_value(trained, data.biopsy_features[i]);
            if (h - trained.b0 >= 0.0) ++correct;  // f0 >= 0: tumoral
            ++total;
        }
        // Normal samples not drawn into training serve as the held-out side.
        std::vector<bool> used(data.normal_pool.size(), false);
        for (std::size_t i : aux.normal_drawn) used[i] = true;
        for (std::size_t i = 0; i < data.normal_pool.size(); ++i) {
            if (used[i]) continue;
            double h = wso::decision_value(trained, data.normal_pool[i]);
            if (h - trained.b0 < 0.0) ++correct;  // f0 < 0: normal
            ++total;
        }
    }
    return total > 0 ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
}

double biopsy_cv_accuracy(const CVData& data, const ModelConfig& model, double c1,
                          double c2, const std::vector<int>& folds, int fold_count,
                          std::uint64_t seed) {
    std::size_t correct = 0, total = 0;
    for (int fold = 0; fold < fold_count; ++fold) {
        std::vector<int> test_idx;
        for (std::size_t i = 0; i < folds.size(); ++i)
            if (folds[i] == fold) test_idx.push_back(static_cast<int>(i));
        if (test_idx.empty()) continue;
        std::size_t train_count = data.biopsy_features.size() - test_idx.size();
        FoldAux aux = draw_aux(data, train_count, model.use_unlabeled, seed,
                               static_cast<std::uint64_t>(fold));
        wso::TrainedModel trained;
        try {
            trained = train_fold(data, folds, fold, model, c1, c2, aux);
        } catch (const ConvergenceError&) {
            total += test_idx.size();
            continue;
        }
        for (int i : test_idx) {
            int predicted = wso::label_value(wso::classify(trained, data.biopsy_features[i]));
            if (predicted == data.biopsy_labels[i]) ++correct;
            ++total;
        }
    }
    return total > 0 ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
}

}  // namespace

TuneResult tune(const CVData& data, const ModelConfig& model, const CVConfig& config) {
    config.validate();
    if (data.biopsy_features.empty()) throw DataError("tune: no biopsy samples");

    // One fold assignment shared by every grid point so comparisons share splits.
    rng::Stream fold_seed_stream(config.seed, "harness/tune-folds");
    std::uint64_t fold_seed = fold_seed_stream.next_u64();
    auto folds = stratified_folds(data.biopsy_labels, config.folds, fold_seed);

    TuneResult result;
    const double screen_c1 = 1.0;  // stage 1 varies C2 only
    std::vector<std::pair<double, double>> retained;  // (c2, screen accuracy)
    double best_screen = 0.0;
    for (double c2 : config.c2_grid) {
        double acc = screening_accuracy(data, model, screen_c1, c2, folds, config.folds,
                                        config.seed);
        best_screen = std::max(best_screen, acc);
        if (acc > config.screen_threshold)
            retained.emplace_back(c2, acc);
        else
            result.diagnostics.push_back({screen_c1, c2, acc, 0.0, true});
    }
    if (retained.empty())
        throw TuningError("tune: no C2 passed the " +
                          std::to_string(config.screen_threshold) +
                          " screening threshold (best screening accuracy " +
                          std::to_string(best_screen) + ")");

    bool have_best = false;
    double best_acc = 0.0, best_c1 = 0.0, best_c2 = 0.0;
    for (auto [c2, screen_acc] : retained) {
        for (double c1 : config.c1_grid) {
            double acc = biopsy_cv_accuracy(data, model, c1, c2, folds, config.folds,
                                            config.seed);
            result.diagnostics.push_back({c1, c2, screen_acc, acc, false});
            bool better = !have_best || acc > best_acc ||
                          (acc == best_acc &&
                           (c1 < best_c1 || (c1 == best_c1 && c2 < best_c2)));
            if (better) {
                have_best = true;
                best_acc = acc;
                best_c1 = c1;
                best_c2 = c2;
            }
        }
    }
    result.c1 = best_c1;
    result.c2 = best_c2;
    return result;
}

namespace {

// Midranks of the pooled sample; sums of midranks are exact in binary
// (integers or half-integers).
std::vector<double> midranks(std::vector<double> pooled) {
    std::vector<std::size_t> order(pooled.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return pooled[a] < pooled[b]; });
    std::vector<double> ranks(pooled.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && pooled[order[j + 1]] == pooled[order[i]]) ++j;
        double rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

double rank_sum_one_sided_exact(const std::vector<double>& a,
                                const std::vector<double>& b) {
    const std::size_t n = a.size(), m = b.size(), total = n + m;
    std::vector<double> pooled = a;
    pooled.insert(pooled.end(), b.begin(), b.end());
    std::vector<double> ranks = midranks(pooled);
    double observed = 0.0;
    for (std::size_t i = 0; i < n; ++i) observed += ranks[i];

    // Enumerate all size-n subsets of the pooled ranks.
    std::vector<std::size_t> pick(n);
    for (std::size_t i = 0; i < n; ++i) pick[i] = i;
    std::uint64_t at_least = 0, count = 0;
    while (true) {
        double w = 0.0;
        for (std::size_t i : pick) w += ranks[i];
        if (w >= observed - 1e-12) ++at_least;
        ++count;
        // next combination
        std::size_t k = n;
        while (k > 0) {
            --k;
            if (pick[k] != k + total - n) break;
            if (k == 0) {
                return static_cast<double>(at_least) / static_cast<double>(count);
            }
        }
        ++pick[k];
        for (std::size_t i = k + 1; i < n; ++i) pick[i] = pick[i - 1] + 1;
    }
}

double rank_sum_one_sided_approx(const std::vector<double>& a,
                                 const std::vector<double>& b) {
    const double n = static_cast<double>(a.size());
    const double m = static_cast<double>(b.size());
    const double total = n + m;
    std::vector<double> pooled = a;
    pooled.insert(pooled.end(), b.begin(), b.end());
    std::vector<double> ranks = midranks(pooled);
    double w = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) w += ranks[i];

    // Tie correction over the pooled value groups.
    std::vector<double> sorted = pooled;
    std::sort(sorted.begin(), sorted.end());
    double tie_term = 0.0;
    std::size_t i = 0;
    while (i < sorted.size()) {
        std::size_t j = i;
        while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
        double t = static_cast<double>(j - i + 1);
        tie_term += t * t * t - t;
        i = j + 1;
    }

    double mean = n * (total + 1.0) / 2.0;
    double var = n * m * (total + 1.0) / 12.0 -
                 n * m * tie_term / (12.0 * total * (total - 1.0));
    if (var <= 0.0) return 1.0;  // all values tied: no evidence of shift
    double z = (w - mean - 0.5) / std::sqrt(var);
    return 0.5 * std::erfc(z / std::sqrt(2.0));
}

double rank_sum_one_sided(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.empty() || b.empty()) throw DataError("rank_sum: empty input");
    if (a.size() + b.size() <= 20) return rank_sum_one_sided_exact(a, b);
    return rank_sum_one_sided_approx(a, b);
}

void write_cv_report_csv(const CVReport& report, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open for writing: " + path.string());
    out << "# wsosvm-cv-report 1\n";
    out << "repeat,fold,test_count,accuracy,sensitivity,specificity,failed\n";
    auto cell = [](const std::optional<double>& v) {
        return v ? dataset::format_double(*v) : std::string("NA");
    };
    for (const FoldRecord& r : report.records) {
        out << r.repeat << "," << r.fold << "," << r.test_count << ",";
        if (r.failed)
            out << "NA,NA,NA,1\n";
        else
            out << dataset::format_double(r.scores.accuracy) << ","
                << cell(r.scores.sensitivity) << "," << cell(r.scores.specificity)
                << ",0\n";
    }
    if (!out) throw DataError("write failed: " + path.string());
}

std::string summary_text(const CVReport& report) {
    char buf[256];
    std::string text;
    std::snprintf(buf, sizeof buf, "accuracy    %.2f (%.3f)\n", report.mean_accuracy,
                  report.std_accuracy);
    text += buf;
    if (report.mean_sensitivity) {
        std::snprintf(buf, sizeof buf, "sensitivity %.2f (%.3f)\n",
                      *report.mean_sensitivity, report.std_sensitivity.value_or(0.0));
        text += buf;
    }
    if (report.mean_specificity) {
        std::snprintf(buf, sizeof buf, "specificity %.2f (%.3f)\n",
                      *report.mean_specificity, report.std_specificity.value_or(0.0));
        text += buf;
    }
    return text;
}

}  // namespace wsosvm::harness
