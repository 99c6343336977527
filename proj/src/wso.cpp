#include "wsosvm/wso.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "wsosvm/simd.hpp"

namespace wsosvm::wso {

void TrainingSet::validate() const {
    if (class1.empty() || class2.empty())
        throw DataError("training set needs biopsies of both classes (n1=" +
                        std::to_string(n1()) + ", n2=" + std::to_string(n2()) + ")");
    const std::size_t d = dimension();
    auto check = [&](const std::vector<std::vector<double>>& group, const char* name) {
        for (const auto& x : group)
            if (x.size() != d)
                throw DataError(std::string("training set: inconsistent feature length in ") +
                                name + " group");
    };
    check(class1, "class1");
    check(class2, "class2");
    check(unlabeled, "unlabeled");
    check(normal, "normal");
}

std::size_t TrainingSet::dimension() const {
    if (!class1.empty()) return class1[0].size();
    if (!class2.empty()) return class2[0].size();
    throw DataError("training set is empty");
}

std::vector<std::vector<double>> TrainingSet::all_samples() const {
    std::vector<std::vector<double>> all;
    all.reserve(n1() + n2() + m12() + m0());
    all.insert(all.end(), class1.begin(), class1.end());
    all.insert(all.end(), class2.begin(), class2.end());
    all.insert(all.end(), unlabeled.begin(), unlabeled.end());
    all.insert(all.end(), normal.begin(), normal.end());
    return all;
}

std::vector<double> dual_signs(const TrainingSet& ts) {
    std::vector<double> y;
    y.reserve(ts.dual_size());
    y.insert(y.end(), ts.n1(), -1.0);
    y.insert(y.end(), ts.n2(), 1.0);
    y.insert(y.end(), ts.m0(), -1.0);
    y.insert(y.end(), ts.m12_prime(), 1.0);
    return y;
}

namespace {

// Dual-ordered view of the samples: (alpha1, alpha2, beta0, beta12) where
// beta12 repeats the biopsies before the unlabeled pool.
std::vector<const std::vector<double>*> dual_sample_order(const TrainingSet& ts) {
    std::vector<const std::vector<double>*> order;
    order.reserve(ts.dual_size());
    for (const auto& x : ts.class1) order.push_back(&x);
    for (const auto& x : ts.class2) order.push_back(&x);
    for (const auto& x : ts.normal) order.push_back(&x);
    for (const auto& x : ts.class1) order.push_back(&x);
    for (const auto& x : ts.class2) order.push_back(&x);
    for (const auto& x : ts.unlabeled) order.push_back(&x);
    return order;
}

struct DualParts {
    qp::QPInstance instance;
    std::vector<double> signs;
    kernels::GramMatrix gram;
};

DualParts build_dual(const TrainingSet& ts, const kernels::KernelSpec& kernel,
                     double c1, double c2, double w1, double w2) {
    ts.validate();
    if (c1 <= 0.0 || c2 <= 0.0) throw ConfigError("C1 and C2 must be positive");

    auto order = dual_sample_order(ts);
    const std::size_t n = order.size();

    DualParts parts;
    parts.signs = dual_signs(ts);
    parts.gram.n = n;
    parts.gram.entries.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            double v = kernels::kernel_eval(kernel, *order[i], *order[j]);
            parts.gram.at(i, j) = v;
            parts.gram.at(j, i) = v;
        }

    qp::QPInstance& inst = parts.instance;
    inst.n = n;
    inst.q.resize(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            inst.q[i * n + j] = parts.signs[i] * parts.signs[j] * parts.gram.at(i, j);
    inst.lin.assign(n, 1.0);
    inst.eq = parts.signs;
    inst.ineq.assign(n, 0.0);
    for (std::size_t i = 0; i < ts.n1(); ++i) inst.ineq[i] = -1.0;
    for (std::size_t i = ts.n1(); i < ts.n1() + ts.n2(); ++i) inst.ineq[i] = 1.0;
    inst.lower.assign(n, 0.0);
    inst.upper.assign(n, 0.0);
    std::size_t pos = 0;
    for (std::size_t i = 0; i < ts.n1(); ++i) inst.upper[pos++] = c1 * w1;
    for (std::size_t i = 0; i < ts.n2(); ++i) inst.upper[pos++] = c1 * w2;
    for (std::size_t i = 0; i < ts.m0(); ++i) inst.upper[pos++] = c2;
    for (std::size_t i = 0; i < ts.m12_prime(); ++i) inst.upper[pos++] = c2;
    return parts;
}

}  // namespace

qp::QPInstance assemble_dual(const TrainingSet& standardized_ts,
                             const kernels::KernelSpec& kernel, double c1, double c2) {
    return build_dual(standardized_ts, kernel, c1, c2, 1.0, 1.0).instance;
}

std::pair<double, double> recover_biases(const qp::DualSolution& solution,
                                         const TrainingSet& ts,
                                         const std::vector<double>& h_values,
                                         double c1, double c2) {
    const std::size_t n1 = ts.n1(), n2 = ts.n2(), m0 = ts.m0();
    const std::size_t mp = ts.m12_prime();
    if (h_values.size() != n1 + n2 + m0 + mp)
        throw DataError("recover_biases: h_values length mismatch");
    const auto& g = solution.gamma;

    const double inf = std::numeric_limits<double>::infinity();
    auto interior = [](double v, double cap, double eps) {
        return v > eps && v < cap - eps;
    };

    // b1 from margin-interior biopsy multipliers; the saturated samples
    // bound the feasible interval used as the fallback.
    double sum1 = 0.0, lo1 = -inf, hi1 = inf;
    std::size_t count1 = 0;
    const double eps1 = 1e-6 * c1;
    for (std::size_t i = 0; i < n1 + n2; ++i) {
        bool class2 = i >= n1;
        double margin = class2 ? h_values[i] - 1.0 : h_values[i] + 1.0;
        if (interior(g[i], c1, eps1)) {
            sum1 += margin;
            ++count1;
        } else if (g[i] <= eps1) {
            // slack inactive: the sample lies outside the margin
            if (class2)
                hi1 = std::min(hi1, margin);
            else
                lo1 = std::max(lo1, margin);
        } else {
            // box-saturated: the sample may sit inside the margin
            if (class2)
                lo1 = std::max(lo1, margin);
            else
                hi1 = std::min(hi1, margin);
        }
    }
    double b1;
    if (count1 > 0)
        b1 = sum1 / static_cast<double>(count1);
    else if (std::isfinite(lo1) && std::isfinite(hi1))
        b1 = 0.5 * (lo1 + hi1);
    else if (std::isfinite(lo1))
        b1 = lo1;
    else if (std::isfinite(hi1))
        b1 = hi1;
    else
        b1 = 0.0;

    double sum0 = 0.0, lo0 = -inf, hi0 = inf;
    std::size_t count0 = 0;
    const double eps2 = 1e-6 * c2;
    for (std::size_t k = 0; k < m0 + mp; ++k) {
        std::size_t i = n1 + n2 + k;
        bool tumoral = k >= m0;
        double margin = tumoral ? h_values[i] - 1.0 : h_values[i] + 1.0;
        if (interior(g[i], c2, eps2)) {
            sum0 += margin;
            ++count0;
        } else if (g[i] <= eps2) {
            if (tumoral)
                hi0 = std::min(hi0, margin);
            else
                lo0 = std::max(lo0, margin);
        } else {
            if (tumoral)
                lo0 = std::max(lo0, margin);
            else
                hi0 = std::min(hi0, margin);
        }
    }
    double b0;
    if (count0 > 0)
        b0 = sum0 / static_cast<double>(count0);
    else if (std::isfinite(lo0) && std::isfinite(hi0))
        b0 = 0.5 * (lo0 + hi0);
    else if (std::isfinite(lo0))
        b0 = lo0;
    else if (std::isfinite(hi0))
        b0 = hi0;
    else
        b0 = 0.0;

    if (b0 > b1) {
        double mid = 0.5 * (b0 + b1);
        b0 = mid;
        b1 = mid;
    }
    return {b0, b1};
}

TrainedModel train(const TrainingSet& ts, const kernels::KernelSpec& kernel,
                   double c1, double c2, const TrainOptions& options) {
    ts.validate();

    TrainedModel model;
    model.standardization = kernels::Standardizer::fit(ts.all_samples());
    model.c1 = c1;
    model.c2 = c2;
    model.channel_names = options.channel_names;
    model.seed = options.seed;

    TrainingSet zts;
    auto z_all = [&](const std::vector<std::vector<double>>& group) {
        std::vector<std::vector<double>> out;
        out.reserve(group.size());
        for (const auto& x : group) out.push_back(model.standardization.apply(x));
        return out;
    };
    zts.class1 = z_all(ts.class1);
    zts.class2 = z_all(ts.class2);
    zts.unlabeled = z_all(ts.unlabeled);
    zts.normal = z_all(ts.normal);

    model.kernel = kernel;
    if (kernel.kind == kernels::KernelKind::gaussian && options.median_gamma)
        model.kernel.gamma = kernels::median_gamma(zts.all_samples());
    if (model.kernel.kind == kernels::KernelKind::gaussian && model.kernel.gamma <= 0.0)
        throw ConfigError("gaussian kernel needs gamma > 0");

    DualParts parts = build_dual(zts, model.kernel, c1, c2, options.class1_weight,
                                 options.class2_weight);
    qp::DualSolution solution = qp::solve(parts.instance, options.solver);
    model.kkt = solution.kkt;
    model.dual_objective = solution.objective;

    const std::size_t n = parts.instance.n;
    std::vector<double> coeff(n);
    for (std::size_t i = 0; i < n; ++i) coeff[i] = parts.signs[i] * solution.gamma[i];

    // h at every dual-ordered training sample: K (Y gamma).
    std::vector<double> h(n);
    for (std::size_t i = 0; i < n; ++i)
        h[i] = simd::dot(parts.gram.entries.data() + i * n, coeff.data(), n);

    auto [b0, b1] = recover_biases(solution, zts, h, c1, c2);
    model.b0 = b0;
    model.b1 = b1;

    auto order = dual_sample_order(zts);
    for (std::size_t i = 0; i < n; ++i) {
        if (coeff[i] == 0.0) continue;
        model.support.push_back({*order[i], coeff[i]});
    }
    return model;
}

double decision_value_standardized(const TrainedModel& model,
                                   const std::vector<double>& z) {
    double h = 0.0;
    if (model.kernel.kind == kernels::KernelKind::linear) {
        for (const auto& sv : model.support)
            h += sv.coefficient * simd::dot(z.data(), sv.standardized.data(), z.size());
    } else {
        for (const auto& sv : model.support)
            h += sv.coefficient *
                 std::exp(-model.kernel.gamma *
                          simd::sqdist(z.data(), sv.standardized.data(), z.size()));
    }
    return h;
}

double decision_value(const TrainedModel& model, const std::vector<double>& x) {
    return decision_value_standardized(model, model.standardization.apply(x));
}

ClassLabel classify_value(const TrainedModel& model, double h) {
    // sign(0) = +1: boundary points go to the more abnormal class.
    if (h - model.b1 >= 0.0) return ClassLabel::altered;
    if (h - model.b0 >= 0.0) return ClassLabel::non_altered;
    return ClassLabel::normal;
}

ClassLabel classify(const TrainedModel& model, const std::vector<double>& x) {
    return classify_value(model, decision_value(model, x));
}

namespace {

void write_values(std::ostream& out, const std::vector<double>& values) {
    for (std::size_t i = 0; i < values.size(); ++i) out << (i ? " " : "") << values[i];
}

std::vector<double> read_values(std::istringstream& in, std::size_t count,
                                const std::string& what) {
    std::vector<double> values(count);
    for (std::size_t i = 0; i < count; ++i)
        if (!(in >> values[i])) throw DataError("model file: truncated " + what);
    return values;
}

}  // namespace

void save_model(const TrainedModel& model, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open for writing: " + path.string());
    out.precision(17);
    out << "wsosvm-model 1\n";
    out << "kernel " << kernels::to_string(model.kernel.kind) << "\n";
    out << "gamma " << model.kernel.gamma << "\n";
    out << "c1 " << model.c1 << "\n";
    out << "c2 " << model.c2 << "\n";
    out << "b0 " << model.b0 << "\n";
    out << "b1 " << model.b1 << "\n";
    out << "dim " << model.dimension() << "\n";
    out << "channels";
    for (const auto& name : model.channel_names) out << " " << name;
    out << "\n";
    out << "seed " << model.seed << "\n";
    out << "config_digest " << model.config_digest << "\n";
    out << "dual_objective " << model.dual_objective << "\n";
    out << "kkt " << model.kkt.stationarity_residual << " "
        << model.kkt.primal_feas_residual << " " << model.kkt.complementarity_residual
        << " " << model.kkt.iterations << "\n";
    out << "standardize_mean ";
    write_values(out, model.standardization.mean);
    out << "\nstandardize_std ";
    write_values(out, model.standardization.stddev);
    out << "\nsupport " << model.support.size() << "\n";
    for (const auto& sv : model.support) {
        out << sv.coefficient << " ";
        write_values(out, sv.standardized);
        out << "\n";
    }
    out << "end\n";
    if (!out) throw DataError("write failed: " + path.string());
}

TrainedModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty model file: " + path.string());
    if (line != "wsosvm-model 1")
        throw DataError("unsupported model format '" + line + "' in " + path.string());

    TrainedModel model;
    std::size_t dim = 0, support_count = 0;
    bool saw_end = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "kernel") {
            std::string name;
            ls >> name;
            model.kernel.kind = kernels::kernel_kind_from_string(name);
        } else if (key == "gamma") {
            ls >> model.kernel.gamma;
        } else if (key == "c1") {
            ls >> model.c1;
        } else if (key == "c2") {
            ls >> model.c2;
        } else if (key == "b0") {
            ls >> model.b0;
        } else if (key == "b1") {
            ls >> model.b1;
        } else if (key == "dim") {
            ls >> dim;
        } else if (key == "channels") {
            std::string name;
            while (ls >> name) model.channel_names.push_back(name);
        } else if (key == "seed") {
            ls >> model.seed;
        } else if (key == "config_digest") {
            ls >> model.config_digest;
        } else if (key == "dual_objective") {
            ls >> model.dual_objective;
        } else if (key == "kkt") {
            ls >> model.kkt.stationarity_residual >> model.kkt.primal_feas_residual >>
                model.kkt.complementarity_residual >> model.kkt.iterations;
        } else if (key == "standardize_mean") {
            model.standardization.mean = read_values(ls, dim, "standardize_mean");
        } else if (key == "standardize_std") {
            model.standardization.stddev = read_values(ls, dim, "standardize_std");
        } else if (key == "support") {
            ls >> support_count;
            model.support.reserve(support_count);
            for (std::size_t i = 0; i < support_count; ++i) {
                if (!std::getline(in, line))
                    throw DataError("model file: truncated support block");
                std::istringstream sv(line);
                SupportSample sample;
                if (!(sv >> sample.coefficient))
                    throw DataError("model file: bad support coefficient");
                sample.standardized = read_values(sv, dim, "support vector");
                model.support.push_back(std::move(sample));
            }
        } else if (key == "end") {
            saw_end = true;
            break;
        } else {
            throw DataError("model file: unknown key '" + key + "'");
        }
    }
    if (!saw_end) throw DataError("model file missing end marker: " + path.string());
    if (model.standardization.mean.size() != dim ||
        model.standardization.stddev.size() != dim)
        throw DataError("model file: standardization size mismatch");
    return model;
}

}  // namespace wsosvm::wso
