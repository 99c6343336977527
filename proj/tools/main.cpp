// wsosvm: weakly-supervised ordinal SVM toolkit CLI.
//
// Subcommands: synth, extract, train, tune, cv, map, explain. Every run
// writes a provenance record (resolved configuration, seed, input digests)
// sufficient to reproduce the artifacts byte-for-byte.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "wsosvm/dataset.hpp"
#include "wsosvm/explain.hpp"
#include "wsosvm/features.hpp"
#include "wsosvm/harness.hpp"
#include "wsosvm/maps.hpp"
#include "wsosvm/phantom.hpp"
#include "wsosvm/wso.hpp"

namespace fs = std::filesystem;
using namespace wsosvm;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

// ---------------------------------------------------------------------------
// provenance
// ---------------------------------------------------------------------------

class Provenance {
public:
    explicit Provenance(std::string command) : command_(std::move(command)) {}

    void set(const std::string& key, const std::string& value) {
        entries_.emplace_back(key, value);
    }
    void set(const std::string& key, double value) {
        set(key, dataset::format_double(value));
    }
    void set(const std::string& key, std::uint64_t value) {
        set(key, std::to_string(value));
    }
    void set(const std::string& key, int value) { set(key, std::to_string(value)); }

    void input_file(const fs::path& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw DataError("cannot open input: " + path.string());
        std::string data((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
        char digest[32];
        std::snprintf(digest, sizeof digest, "fnv1a64:%016llx",
                      static_cast<unsigned long long>(fnv1a64(data)));
        entries_.emplace_back("input " + path.string(), digest);
    }

    void write(const fs::path& out_dir) const {
        std::ofstream out(out_dir / "provenance.txt");
        if (!out) throw DataError("cannot write provenance in " + out_dir.string());
        out << "schema_version 1\n";
        out << "command " << command_ << "\n";
        for (const auto& [key, value] : entries_) out << key << " = " << value << "\n";
    }

private:
    std::string command_;
    std::vector<std::pair<std::string, std::string>> entries_;
};

fs::path prepare_out_dir(const std::string& out) {
    fs::path dir(out);
    fs::create_directories(dir);
    return dir;
}

// ---------------------------------------------------------------------------
// flat "key = value" config files
// ---------------------------------------------------------------------------

std::map<std::string, std::string> read_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config: " + path.string());
    std::map<std::string, std::string> config;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string trimmed = line.substr(0, line.find('#'));
        auto eq = trimmed.find('=');
        if (trimmed.find_first_not_of(" \t") == std::string::npos) continue;
        if (eq == std::string::npos)
            throw ConfigError(path.string() + ":" + std::to_string(line_no) +
                              ": expected 'key = value'");
        auto strip = [](std::string s) {
            auto b = s.find_first_not_of(" \t");
            auto e = s.find_last_not_of(" \t");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        std::string key = strip(trimmed.substr(0, eq));
        std::string value = strip(trimmed.substr(eq + 1));
        if (key.empty())
            throw ConfigError(path.string() + ":" + std::to_string(line_no) +
                              ": empty key");
        config[key] = value;
    }
    return config;
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    std::istringstream in(value);
    std::string item;
    while (std::getline(in, item, ',')) {
        auto b = item.find_first_not_of(" \t");
        auto e = item.find_last_not_of(" \t");
        if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
    }
    return out;
}

std::vector<double> parse_doubles(const std::string& value, const std::string& what) {
    std::vector<double> out;
    for (const std::string& item : split_list(value)) {
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw ConfigError("cannot parse " + what + " entry '" + item + "'");
        }
    }
    return out;
}

phantom::PhantomConfig phantom_config_from_file(const fs::path& path,
                                                Provenance& provenance) {
    phantom::PhantomConfig config;
    auto raw = read_config(path);
    for (const auto& [key, value] : raw) {
        provenance.set("config " + key, value);
        try {
            if (key == "width")
                config.width = std::stoi(value);
            else if (key == "height")
                config.height = std::stoi(value);
            else if (key == "seed")
                config.seed = std::stoull(value);
            else if (key == "channels")
                config.channel_names = split_list(value);
            else if (key == "genes")
                config.genes = split_list(value);
            else if (key == "blob_count")
                config.blob_count = std::stoi(value);
            else if (key == "blob_radius_min")
                config.blob_radius_min = std::stod(value);
            else if (key == "blob_radius_max")
                config.blob_radius_max = std::stod(value);
            else if (key == "prevalence")
                config.prevalence = std::stod(value);
            else if (key == "noise_level")
                config.noise_level = std::stod(value);
            else if (key == "texture_scale")
                config.texture_scale = std::stod(value);
            else if (key == "necrosis_scale")
                config.necrosis_scale = std::stod(value);
            else if (key == "necrosis_offset")
                config.necrosis_offset = std::stod(value);
            else if (key == "normal_mean")
                config.normal_mean = parse_doubles(value, key);
            else if (key == "tumor_mean")
                config.tumor_mean = parse_doubles(value, key);
            else if (key.rfind("gene_shift.", 0) == 0)
                config.gene_shift[key.substr(11)] = parse_doubles(value, key);
            else
                throw ConfigError("unknown config key '" + key + "' in " + path.string());
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception&) {
            throw ConfigError("cannot parse value for '" + key + "' in " + path.string());
        }
    }
    return config;
}

// ---------------------------------------------------------------------------
// shared option bundles
// ---------------------------------------------------------------------------

struct KernelFlags {
    std::string kernel = "gaussian";
    std::string gamma = "median";

    void attach(CLI::App* cmd) {
        cmd->add_option("--kernel", kernel, "kernel: linear or gaussian")
            ->check(CLI::IsMember({"linear", "gaussian"}));
        cmd->add_option("--gamma", gamma,
                        "gaussian bandwidth, or 'median' for the pairwise heuristic");
    }

    kernels::KernelSpec spec() const {
        kernels::KernelSpec k;
        k.kind = kernels::kernel_kind_from_string(kernel);
        k.gamma = 0.0;
        if (gamma != "median") {
            try {
                k.gamma = std::stod(gamma);
            } catch (const std::exception&) {
                throw ConfigError("--gamma must be a number or 'median'");
            }
            if (k.kind == kernels::KernelKind::gaussian && k.gamma <= 0.0)
                throw ConfigError("--gamma must be positive");
        }
        return k;
    }
    bool median() const { return gamma == "median"; }
};

wso::TrainingSet training_set_from_dataset(const dataset::Dataset& data,
                                           bool use_unlabeled) {
    wso::TrainingSet ts;
    for (const dataset::Row& row : data.rows) {
        switch (row.role) {
            case dataset::Role::biopsy:
                if (row.cls == 1)
                    ts.class1.push_back(row.features);
                else if (row.cls == 2)
                    ts.class2.push_back(row.features);
                else
                    throw DataError("biopsy rows must carry class 1 or 2");
                break;
            case dataset::Role::unlabeled:
                if (use_unlabeled) ts.unlabeled.push_back(row.features);
                break;
            case dataset::Role::normal:
                ts.normal.push_back(row.features);
                break;
        }
    }
    return ts;
}

std::vector<std::string> dataset_channel_names(std::size_t feature_count) {
    if (feature_count % features::kPerContrast != 0)
        throw DataError("dataset feature count " + std::to_string(feature_count) +
                        " is not a multiple of " + std::to_string(features::kPerContrast));
    std::size_t contrasts = feature_count / features::kPerContrast;
    static const std::vector<std::string> kDefault = {"T1+C", "T2", "MD", "FA", "rCBV"};
    std::vector<std::string> names;
    for (std::size_t i = 0; i < contrasts; ++i)
        names.push_back(i < kDefault.size() ? kDefault[i] : "ch" + std::to_string(i));
    return names;
}

// ---------------------------------------------------------------------------
// subcommands
// ---------------------------------------------------------------------------

int cmd_synth(const std::string& config_path, const std::string& out, long seed_override) {
    Provenance provenance("synth");
    auto config = phantom_config_from_file(config_path, provenance);
    if (seed_override >= 0) {
        config.seed = static_cast<std::uint64_t>(seed_override);
        provenance.set("seed_override", config.seed);
    }
    provenance.input_file(config_path);

    auto stack = phantom::generate(config);
    fs::path dir = prepare_out_dir(out);
    image::write_stack(stack, dir / "stack.manifest");
    provenance.set("seed", config.seed);
    provenance.set("width", config.width);
    provenance.set("height", config.height);
    provenance.write(dir);
    std::cout << "wrote " << (dir / "stack.manifest").string() << " ("
              << stack.channels.size() << " channels, " << stack.truth.size()
              << " truth planes)\n";
    return 0;
}

struct ExtractSampling {
    int biopsies = 0;
    int unlabeled = 0;
    int normals = 0;
    std::string gene = "EGFR";
    double min_separation = 4.0;
    int truth_margin = 0;
};

int cmd_extract(const std::string& stack_path, const std::string& centers_path,
                const ExtractSampling& sampling, const std::string& out,
                std::uint64_t seed) {
    Provenance provenance("extract");
    provenance.input_file(stack_path);
    auto stack = image::read_stack(stack_path);
    provenance.set("seed", seed);

    struct Center {
        dataset::Role role;
        int cls;
        int row, col;
    };
    std::vector<Center> centers;

    if (!centers_path.empty()) {
        provenance.input_file(centers_path);
        std::ifstream in(centers_path);
        if (!in) throw DataError("cannot open centers: " + centers_path);
        std::string line;
        int line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty() || line[0] == '#' || line.rfind("role,", 0) == 0) continue;
            auto fields = split_list(line);
            if (fields.size() != 4)
                throw DataError(centers_path + ":" + std::to_string(line_no) +
                                ": expected role,class,row,col");
            Center c;
            c.role = dataset::role_from_string(fields[0]);
            c.cls = fields[1] == "NA" ? -1 : std::stoi(fields[1]);
            c.row = std::stoi(fields[2]);
            c.col = std::stoi(fields[3]);
            if (!features::window_in_bounds(c.row, c.col, stack.width, stack.height))
                throw DataError(centers_path + ":" + std::to_string(line_no) +
                                ": center (" + fields[2] + "," + fields[3] +
                                ") is out of bounds");
            centers.push_back(c);
        }
    } else {
        if (sampling.biopsies <= 0)
            throw ConfigError("extract needs --centers or --sample-biopsies");
        provenance.set("gene", sampling.gene);
        provenance.set("sample_biopsies", sampling.biopsies);
        provenance.set("sample_unlabeled", sampling.unlabeled);
        provenance.set("sample_normal", sampling.normals);
        provenance.set("min_separation", sampling.min_separation);
        provenance.set("truth_margin", sampling.truth_margin);
        for (const auto& p :
             phantom::sample_biopsies(stack, sampling.gene, sampling.biopsies,
                                      sampling.min_separation, seed,
                                      sampling.truth_margin))
            centers.push_back({dataset::Role::biopsy, p.label, p.row, p.col});
        for (const auto& p : phantom::sample_unlabeled(stack, sampling.unlabeled, seed))
            centers.push_back({dataset::Role::unlabeled, -1, p.row, p.col});
        for (const auto& p : phantom::sample_normal(stack, sampling.normals, seed))
            centers.push_back({dataset::Role::normal, 0, p.row, p.col});
    }

    dataset::Dataset data;
    data.feature_count = stack.channels.size() * features::kPerContrast;
    for (const Center& c : centers) {
        dataset::Row row;
        row.role = c.role;
        row.cls = c.cls;
        row.row = c.row;
        row.col = c.col;
        row.features = features::feature_vector(stack, c.row, c.col).values;
        data.rows.push_back(std::move(row));
    }

    fs::path dir = prepare_out_dir(out);
    dataset::write_dataset(data, dir / "dataset.csv");
    features::write_feature_manifest(features::feature_names(stack.channel_names),
                                     dir / "feature_names.txt");
    {
        std::ofstream out_centers(dir / "centers.csv");
        out_centers << "role,class,row,col\n";
        for (const Center& c : centers) {
            out_centers << dataset::to_string(c.role) << ",";
            if (c.cls < 0)
                out_centers << "NA";
            else
                out_centers << c.cls;
            out_centers << "," << c.row << "," << c.col << "\n";
        }
    }
    provenance.set("rows", static_cast<int>(data.rows.size()));
    provenance.write(dir);
    std::cout << "wrote " << (dir / "dataset.csv").string() << " (" << data.rows.size()
              << " rows x " << data.feature_count << " features)\n";
    return 0;
}

int cmd_train(const std::string& dataset_path, const KernelFlags& kernel, double c1,
              double c2, std::uint64_t seed, bool ordinal_ablation, bool dump_qp_flag,
              const std::string& out) {
    Provenance provenance("train");
    provenance.input_file(dataset_path);
    auto data = dataset::read_dataset(dataset_path);
    auto ts = training_set_from_dataset(data, !ordinal_ablation);

    wso::TrainOptions opts;
    opts.median_gamma = kernel.median();
    opts.seed = seed;
    opts.channel_names = dataset_channel_names(data.feature_count);

    provenance.set("kernel", kernel.kernel);
    provenance.set("gamma", kernel.gamma);
    provenance.set("c1", c1);
    provenance.set("c2", c2);
    provenance.set("seed", seed);
    provenance.set("ordinal_ablation", ordinal_ablation ? 1 : 0);

    auto model = wso::train(ts, kernel.spec(), c1, c2, opts);
    model.config_digest =
        fnv1a64(kernel.kernel + "/" + kernel.gamma + "/" + dataset::format_double(c1) +
                "/" + dataset::format_double(c2));

    fs::path dir = prepare_out_dir(out);
    wso::save_model(model, dir / "model.wso");

    if (dump_qp_flag) {
        wso::TrainingSet zts = ts;
        for (auto* group : {&zts.class1, &zts.class2, &zts.unlabeled, &zts.normal})
            for (auto& x : *group) model.standardization.apply_in_place(x);
        auto inst = wso::assemble_dual(zts, model.kernel, c1, c2);
        qp::dump_qp(inst, {}, dir / "qp_dump");
    }

    // training-set performance over the biopsies
    std::vector<int> predicted, truth;
    for (const dataset::Row& row : data.rows) {
        if (row.role != dataset::Role::biopsy) continue;
        predicted.push_back(wso::label_value(wso::classify(model, row.features)));
        truth.push_back(row.cls);
    }
    auto m = harness::metrics(predicted, truth);
    {
        std::ofstream report(dir / "train_report.txt");
        report << "biopsies " << truth.size() << "\n";
        report << "training_accuracy " << dataset::format_double(m.accuracy) << "\n";
        report << "support_vectors " << model.support.size() << "\n";
        report << "b0 " << dataset::format_double(model.b0) << "\n";
        report << "b1 " << dataset::format_double(model.b1) << "\n";
        report << "gamma " << dataset::format_double(model.kernel.gamma) << "\n";
        report << "kkt_max_residual " << dataset::format_double(model.kkt.max_residual())
               << "\n";
    }
    provenance.write(dir);
    std::cout << "trained on " << truth.size() << " biopsies, training accuracy "
              << m.accuracy << ", " << model.support.size() << " support vectors\n";
    return 0;
}

harness::CVConfig cv_config_from_flags(int folds, int repeats, std::uint64_t seed,
                                       const std::string& c1_grid,
                                       const std::string& c2_grid,
                                       double screen_threshold) {
    harness::CVConfig config;
    config.folds = folds;
    config.repeats = repeats;
    config.seed = seed;
    config.screen_threshold = screen_threshold;
    config.c1_grid = c1_grid.empty() ? harness::CVConfig::default_c1_grid()
                                     : parse_doubles(c1_grid, "--c1-grid");
    config.c2_grid = c2_grid.empty() ? harness::CVConfig::default_c2_grid()
                                     : parse_doubles(c2_grid, "--c2-grid");
    return config;
}

int cmd_tune(const std::string& dataset_path, const KernelFlags& kernel, int folds,
             std::uint64_t seed, const std::string& c1_grid, const std::string& c2_grid,
             double screen_threshold, bool ordinal_ablation, const std::string& out) {
    Provenance provenance("tune");
    provenance.input_file(dataset_path);
    auto data = dataset::read_dataset(dataset_path);
    auto cv_data = harness::CVData::from_dataset(data);

    harness::ModelConfig model;
    model.kernel = kernel.spec();
    model.median_gamma = kernel.median();
    model.use_unlabeled = !ordinal_ablation;
    model.channel_names = dataset_channel_names(data.feature_count);

    auto config = cv_config_from_flags(folds, 1, seed, c1_grid, c2_grid, screen_threshold);
    provenance.set("kernel", kernel.kernel);
    provenance.set("gamma", kernel.gamma);
    provenance.set("folds", folds);
    provenance.set("seed", seed);
    provenance.set("screen_threshold", screen_threshold);

    auto result = harness::tune(cv_data, model, config);

    fs::path dir = prepare_out_dir(out);
    {
        std::ofstream report(dir / "tuning_report.csv");
        report << "# wsosvm-tuning 1\n";
        report << "c1,c2,screen_accuracy,cv_accuracy,screened_out\n";
        for (const auto& entry : result.diagnostics)
            report << dataset::format_double(entry.c1) << ","
                   << dataset::format_double(entry.c2) << ","
                   << dataset::format_double(entry.screen_accuracy) << ","
                   << dataset::format_double(entry.cv_accuracy) << ","
                   << (entry.screened_out ? 1 : 0) << "\n";
    }
    {
        std::ofstream chosen(dir / "chosen.txt");
        chosen << "c1 " << dataset::format_double(result.c1) << "\n";
        chosen << "c2 " << dataset::format_double(result.c2) << "\n";
    }
    provenance.write(dir);
    std::cout << "chose c1=" << result.c1 << " c2=" << result.c2 << "\n";
    return 0;
}

int cmd_cv(const std::string& dataset_path, const KernelFlags& kernel, double c1,
           double c2, int folds, int repeats, std::uint64_t seed, bool ordinal_ablation,
           const std::string& out) {
    Provenance provenance("cv");
    provenance.input_file(dataset_path);
    auto data = dataset::read_dataset(dataset_path);
    auto cv_data = harness::CVData::from_dataset(data);

    harness::ModelConfig model;
    model.kernel = kernel.spec();
    model.median_gamma = kernel.median();
    model.use_unlabeled = !ordinal_ablation;
    model.channel_names = dataset_channel_names(data.feature_count);

    harness::CVConfig config;
    config.folds = folds;
    config.repeats = repeats;
    config.seed = seed;
    config.c1_grid = harness::CVConfig::default_c1_grid();
    config.c2_grid = harness::CVConfig::default_c2_grid();

    provenance.set("kernel", kernel.kernel);
    provenance.set("gamma", kernel.gamma);
    provenance.set("c1", c1);
    provenance.set("c2", c2);
    provenance.set("folds", folds);
    provenance.set("repeats", repeats);
    provenance.set("seed", seed);
    provenance.set("ordinal_ablation", ordinal_ablation ? 1 : 0);

    auto report = harness::repeated_cv(cv_data, model, c1, c2, config);

    fs::path dir = prepare_out_dir(out);
    harness::write_cv_report_csv(report, dir / "cv_report.csv");
    std::string summary = harness::summary_text(report);
    {
        std::ofstream out_summary(dir / "summary.txt");
        out_summary << summary;
    }
    provenance.write(dir);
    std::cout << summary;
    if (report.failed_folds > 0)
        std::cout << "failed folds: " << report.failed_folds << "\n";
    return 0;
}

int cmd_map(const std::string& model_path, const std::string& stack_path,
            const std::string& gene, const std::string& model2_path,
            const std::string& gene2, bool joint, bool personalize,
            const std::string& dataset_path, std::uint64_t seed, int jobs,
            const std::string& out) {
    Provenance provenance("map");
    provenance.input_file(model_path);
    provenance.input_file(stack_path);
    auto stack = image::read_stack(stack_path);
    auto model = wso::load_model(model_path);
    provenance.set("gene", gene);
    provenance.set("seed", seed);
    provenance.set("jobs", jobs);

    fs::path dir = prepare_out_dir(out);

    if (personalize) {
        // Retrain on the given biopsies plus patient-specific auxiliary
        // samples drawn from this stack, reusing the model's (C1, C2) and
        // kernel settings.
        if (dataset_path.empty())
            throw ConfigError("--personalize needs --dataset with the biopsy rows");
        provenance.input_file(dataset_path);
        auto data = dataset::read_dataset(dataset_path);
        auto ts = training_set_from_dataset(data, true);
        std::size_t biopsies = ts.n1() + ts.n2();
        std::size_t unlabeled_count = (biopsies / 2) & ~std::size_t{1};
        std::size_t normal_count = biopsies - biopsies / 2;
        ts.unlabeled.clear();
        ts.normal.clear();
        for (const auto& p :
             phantom::sample_unlabeled(stack, static_cast<int>(unlabeled_count), seed))
            ts.unlabeled.push_back(features::feature_vector(stack, p.row, p.col).values);
        for (const auto& p :
             phantom::sample_normal(stack, static_cast<int>(normal_count), seed))
            ts.normal.push_back(features::feature_vector(stack, p.row, p.col).values);

        wso::TrainOptions opts;
        opts.median_gamma = false;
        opts.seed = seed;
        opts.channel_names = stack.channel_names;
        kernels::KernelSpec spec = model.kernel;
        model = wso::train(ts, spec, model.c1, model.c2, opts);
        provenance.set("personalized", 1);
        wso::save_model(model, dir / "personalized_model.wso");
    }

    auto map = maps::predict_map(model, stack, gene, jobs);
    maps::render(map, dir / "map.pgm", dir / "map.csv");
    maps::write_map_summary(map, seed, dir / "summary.json");

    if (joint) {
        if (model2_path.empty() || gene2.empty())
            throw ConfigError("--joint needs --model2 and --gene2");
        provenance.input_file(model2_path);
        provenance.set("gene2", gene2);
        auto model2 = wso::load_model(model2_path);
        auto map2 = maps::predict_map(model2, stack, gene2, jobs);
        maps::render(map2, dir / "map2.pgm", dir / "map2.csv");
        maps::write_map_summary(map2, seed, dir / "summary2.json");
        auto combined = maps::joint_map(map, map2);
        maps::render(combined, dir / "joint.pgm", dir / "joint.csv");
    }
    provenance.write(dir);

    auto tumoral = maps::tumoral_proportions(map);
    std::cout << "map " << gene << ": " << map.classified_count() << " classified pixels";
    if (tumoral) std::cout << ", altered fraction " << tumoral->first;
    std::cout << "\n";
    return 0;
}

int cmd_explain(const std::string& model_path, const std::string& dataset_path,
                const std::string& mode, std::size_t draws, bool abs_then_sum,
                std::uint64_t seed, const std::string& out) {
    Provenance provenance("explain");
    provenance.input_file(model_path);
    provenance.input_file(dataset_path);
    auto model = wso::load_model(model_path);
    auto data = dataset::read_dataset(dataset_path);

    std::vector<std::vector<double>> samples, background;
    for (const dataset::Row& row : data.rows) {
        if (row.role == dataset::Role::biopsy)
            samples.push_back(row.features);
        else
            background.push_back(row.features);
    }
    if (background.empty()) background = samples;

    explain::ExplainOptions options;
    options.mode = mode == "sampled-feature" ? explain::ShapMode::sampled_feature
                                             : explain::ShapMode::exact_group;
    options.aggregation = abs_then_sum ? explain::Aggregation::abs_then_sum
                                       : explain::Aggregation::sum_then_abs;
    options.draws = draws;
    options.seed = seed;

    provenance.set("mode", mode);
    provenance.set("draws", static_cast<std::uint64_t>(draws));
    provenance.set("seed", seed);
    provenance.set("aggregation", abs_then_sum ? "abs-then-sum" : "sum-then-abs");

    auto report = explain::explain_samples(model, samples, background, options);

    fs::path dir = prepare_out_dir(out);
    explain::write_shap_report(report, dir / "shap_per_sample.csv",
                               dir / "shap_contrast.csv");
    provenance.write(dir);
    std::cout << "explained " << samples.size() << " samples against "
              << report.background_count << " background samples\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"weakly-supervised ordinal SVM toolkit"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic contrast stack");
    std::string synth_config, synth_out = "out";
    long synth_seed = -1;
    synth->add_option("--config", synth_config, "flat key = value phantom config")
        ->required();
    synth->add_option("--out", synth_out, "output directory");
    synth->add_option("--seed", synth_seed, "override the config seed");

    // extract
    auto* extract = app.add_subcommand("extract", "extract windowed features");
    std::string extract_stack, extract_centers, extract_out = "out";
    ExtractSampling sampling;
    std::uint64_t extract_seed = 0;
    extract->add_option("--stack", extract_stack, "stack manifest")->required();
    extract->add_option("--centers", extract_centers, "centers CSV (role,class,row,col)");
    extract->add_option("--sample-biopsies", sampling.biopsies,
                        "draw this many biopsy samples instead of reading centers");
    extract->add_option("--sample-unlabeled", sampling.unlabeled,
                        "unlabeled tumoral samples to draw (even, CE/NE balanced)");
    extract->add_option("--sample-normal", sampling.normals,
                        "normal contralateral samples to draw");
    extract->add_option("--gene", sampling.gene,
                        "gene whose planted truth labels biopsies");
    extract->add_option("--min-separation", sampling.min_separation,
                        "minimum biopsy center distance in pixels");
    extract->add_option("--truth-margin", sampling.truth_margin,
                        "require label-pure neighborhoods of this radius");
    extract->add_option("--seed", extract_seed, "sampling seed");
    extract->add_option("--out", extract_out, "output directory");

    // train
    auto* train = app.add_subcommand("train", "train a model on a dataset");
    std::string train_dataset, train_out = "out";
    KernelFlags train_kernel;
    double train_c1 = 1.0, train_c2 = 1.0;
    std::uint64_t train_seed = 0;
    bool train_ablation = false, train_dump_qp = false;
    train->add_option("--dataset", train_dataset, "dataset CSV")->required();
    train_kernel.attach(train);
    train->add_option("--c1", train_c1, "biopsy-constraint box bound");
    train->add_option("--c2", train_c2, "weak-supervision box bound");
    train->add_option("--seed", train_seed, "seed recorded in the model");
    train->add_flag("--ordinal-ablation", train_ablation,
                    "drop unlabeled rows (m12 = 0 ablation)");
    train->add_flag("--dump-qp", train_dump_qp, "dump the dual QP matrices as CSV");
    train->add_option("--out", train_out, "output directory");

    // tune
    auto* tune = app.add_subcommand("tune", "two-stage C2/C1 grid search");
    std::string tune_dataset, tune_out = "out", tune_c1_grid, tune_c2_grid;
    KernelFlags tune_kernel;
    int tune_folds = 10;
    std::uint64_t tune_seed = 0;
    double tune_threshold = 0.80;
    bool tune_ablation = false;
    tune->add_option("--dataset", tune_dataset, "dataset CSV")->required();
    tune_kernel.attach(tune);
    tune->add_option("--folds", tune_folds, "cross-validation folds");
    tune->add_option("--seed", tune_seed, "fold seed");
    tune->add_option("--c1-grid", tune_c1_grid, "comma list (default 13 log-spaced)");
    tune->add_option("--c2-grid", tune_c2_grid, "comma list (default coarse 5-point)");
    tune->add_option("--screen-threshold", tune_threshold,
                     "stage-1 tumoral-vs-normal accuracy cut");
    tune->add_flag("--ordinal-ablation", tune_ablation, "tune the m12 = 0 ablation");
    tune->add_option("--out", tune_out, "output directory");

    // cv
    auto* cv = app.add_subcommand("cv", "repeated stratified cross-validation");
    std::string cv_dataset, cv_out = "out";
    KernelFlags cv_kernel;
    double cv_c1 = 1.0, cv_c2 = 1.0;
    int cv_folds = 10, cv_repeats = 30;
    std::uint64_t cv_seed = 0;
    bool cv_ablation = false;
    cv->add_option("--dataset", cv_dataset, "dataset CSV")->required();
    cv_kernel.attach(cv);
    cv->add_option("--c1", cv_c1, "biopsy-constraint box bound");
    cv->add_option("--c2", cv_c2, "weak-supervision box bound");
    cv->add_option("--folds", cv_folds, "folds");
    cv->add_option("--repeats", cv_repeats, "repetitions");
    cv->add_option("--seed", cv_seed, "root seed");
    cv->add_flag("--ordinal-ablation", cv_ablation, "evaluate the m12 = 0 ablation");
    cv->add_option("--out", cv_out, "output directory");

    // map
    auto* map = app.add_subcommand("map", "stride-1 regional prediction map");
    std::string map_model, map_stack, map_gene = "EGFR", map_out = "out";
    std::string map_model2, map_gene2, map_dataset;
    bool map_joint = false, map_personalize = false;
    std::uint64_t map_seed = 0;
    int map_jobs = 1;
    map->add_option("--model", map_model, "model file")->required();
    map->add_option("--stack", map_stack, "stack manifest")->required();
    map->add_option("--gene", map_gene, "gene label for the map");
    map->add_option("--model2", map_model2, "second model for --joint");
    map->add_option("--gene2", map_gene2, "second gene for --joint");
    map->add_flag("--joint", map_joint, "produce the combined co-alteration map");
    map->add_flag("--personalize", map_personalize,
                  "retrain with patient-specific auxiliary samples first");
    map->add_option("--dataset", map_dataset, "biopsy dataset for --personalize");
    map->add_option("--seed", map_seed, "seed for personalization draws");
    map->add_option("--jobs", map_jobs, "worker threads (outputs are identical)")
        ->check(CLI::PositiveNumber);
    map->add_option("--out", map_out, "output directory");

    // explain
    auto* explain_cmd = app.add_subcommand("explain", "contrast-level SHAP attribution");
    std::string explain_model, explain_dataset, explain_out = "out";
    std::string explain_mode = "exact-group";
    std::size_t explain_draws = 2000;
    bool explain_abs = false;
    std::uint64_t explain_seed = 0;
    explain_cmd->add_option("--model", explain_model, "model file")->required();
    explain_cmd->add_option("--dataset", explain_dataset, "dataset CSV")->required();
    explain_cmd->add_option("--mode", explain_mode, "exact-group or sampled-feature")
        ->check(CLI::IsMember({"exact-group", "sampled-feature"}));
    explain_cmd->add_option("--draws", explain_draws, "permutation draws");
    explain_cmd->add_flag("--abs-then-sum", explain_abs,
                          "aggregate |feature value| instead of |block sum|");
    explain_cmd->add_option("--seed", explain_seed, "sampling seed");
    explain_cmd->add_option("--out", explain_out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (synth->parsed()) return cmd_synth(synth_config, synth_out, synth_seed);
        if (extract->parsed())
            return cmd_extract(extract_stack, extract_centers, sampling, extract_out,
                               extract_seed);
        if (train->parsed())
            return cmd_train(train_dataset, train_kernel, train_c1, train_c2, train_seed,
                             train_ablation, train_dump_qp, train_out);
        if (tune->parsed())
            return cmd_tune(tune_dataset, tune_kernel, tune_folds, tune_seed,
                            tune_c1_grid, tune_c2_grid, tune_threshold, tune_ablation,
                            tune_out);
        if (cv->parsed())
            return cmd_cv(cv_dataset, cv_kernel, cv_c1, cv_c2, cv_folds, cv_repeats,
                          cv_seed, cv_ablation, cv_out);
        if (map->parsed())
            return cmd_map(map_model, map_stack, map_gene, map_model2, map_gene2,
                           map_joint, map_personalize, map_dataset, map_seed, map_jobs,
                           map_out);
        if (explain_cmd->parsed())
            return cmd_explain(explain_model, explain_dataset, explain_mode,
                               explain_draws, explain_abs, explain_seed, explain_out);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ConvergenceError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
