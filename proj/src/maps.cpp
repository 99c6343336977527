#include "wsosvm/maps.hpp"

#include <fstream>
#include <sstream>
#include <thread>

#include "wsosvm/dataset.hpp"
#include "wsosvm/features.hpp"

namespace wsosvm::maps {

std::size_t PredictionMap::count(int label) const {
    std::size_t n = 0;
    for (std::int8_t v : labels)
        if (v == label) ++n;
    return n;
}

std::size_t PredictionMap::classified_count() const {
    std::size_t n = 0;
    for (std::int8_t v : labels)
        if (v != kOutside) ++n;
    return n;
}

std::uint64_t model_digest(const wso::TrainedModel& model) {
    std::uint64_t h = fnv1a64(kernels::to_string(model.kernel.kind));
    auto mix = [&h](double v) { h = fnv1a64(&v, sizeof v, h); };
    mix(model.kernel.gamma);
    mix(model.c1);
    mix(model.c2);
    mix(model.b0);
    mix(model.b1);
    for (const auto& sv : model.support) {
        mix(sv.coefficient);
        h = fnv1a64(sv.standardized.data(), sv.standardized.size() * sizeof(double), h);
    }
    for (std::size_t i = 0; i < model.standardization.mean.size(); ++i) {
        mix(model.standardization.mean[i]);
        mix(model.standardization.stddev[i]);
    }
    return h;
}

PredictionMap predict_map(const wso::TrainedModel& model,
                          const image::ContrastStack& stack, const std::string& gene,
                          int jobs) {
    if (stack.channels.size() * features::kPerContrast != model.dimension())
        throw DataError("predict_map: stack has " +
                        std::to_string(stack.channels.size()) +
                        " channels but the model expects dimension " +
                        std::to_string(model.dimension()));
    if (!model.channel_names.empty() && model.channel_names != stack.channel_names)
        throw DataError("predict_map: model feature layout does not match the stack's "
                        "channel names");

    PredictionMap map;
    map.width = stack.width;
    map.height = stack.height;
    map.gene = gene;
    map.model_digest = model_digest(model);
    map.labels.assign(static_cast<std::size_t>(stack.width) * stack.height, kOutside);

    auto run_rows = [&](int row_begin, int row_end) {
        for (int r = row_begin; r < row_end; ++r) {
            for (int c = 0; c < stack.width; ++c) {
                if (!stack.in_aoi(r, c)) continue;
                if (!features::window_in_bounds(r, c, stack.width, stack.height)) continue;
                features::FeatureVector fv = features::feature_vector(stack, r, c);
                wso::ClassLabel label = wso::classify(model, fv.values);
                map.labels[static_cast<std::size_t>(r) * stack.width + c] =
                    static_cast<std::int8_t>(wso::label_value(label));
            }
        }
    };

    if (jobs <= 1) {
        run_rows(0, stack.height);
    } else {
        int workers = std::min(jobs, stack.height);
        std::vector<std::thread> threads;
        threads.reserve(workers);
        int rows_per = (stack.height + workers - 1) / workers;
        for (int t = 0; t < workers; ++t) {
            int begin = t * rows_per;
            int end = std::min(stack.height, begin + rows_per);
            if (begin >= end) break;
            threads.emplace_back(run_rows, begin, end);
        }
        for (auto& t : threads) t.join();
    }
    return map;
}

std::optional<std::pair<double, double>> tumoral_proportions(const PredictionMap& map) {
    double n1 = static_cast<double>(map.count(1));
    double n2 = static_cast<double>(map.count(2));
    if (n1 + n2 == 0.0) return std::nullopt;
    return std::make_pair(n2 / (n1 + n2), n1 / (n1 + n2));
}

double class0_fraction(const PredictionMap& map) {
    std::size_t classified = map.classified_count();
    if (classified == 0) return 0.0;
    return static_cast<double>(map.count(0)) / static_cast<double>(classified);
}

Proportions proportions(const PredictionMap& map) {
    std::size_t classified = map.classified_count();
    if (classified == 0) throw DataError("proportions: map has no classified pixels");
    Proportions p;
    p.altered = static_cast<double>(map.count(2)) / static_cast<double>(classified);
    p.non_altered = static_cast<double>(map.count(1)) / static_cast<double>(classified);
    p.class0 = static_cast<double>(map.count(0)) / static_cast<double>(classified);
    return p;
}

JointMap joint_map(const PredictionMap& map_a, const PredictionMap& map_b) {
    if (map_a.width != map_b.width || map_a.height != map_b.height)
        throw DataError("joint_map: geometry mismatch");
    JointMap joint;
    joint.width = map_a.width;
    joint.height = map_a.height;
    joint.categories.assign(map_a.labels.size(),
                            static_cast<std::int8_t>(JointCategory::outside));
    for (std::size_t i = 0; i < map_a.labels.size(); ++i) {
        std::int8_t a = map_a.labels[i], b = map_b.labels[i];
        if (a <= 0 || b <= 0) continue;  // outside or class 0 propagates as outside
        bool alt_a = a == 2, alt_b = b == 2;
        JointCategory cat = alt_a && alt_b  ? JointCategory::both
                            : alt_a         ? JointCategory::a_only
                            : alt_b         ? JointCategory::b_only
                                            : JointCategory::none;
        joint.categories[i] = static_cast<std::int8_t>(cat);
    }
    return joint;
}

namespace {

void write_pgm(const std::vector<unsigned char>& bytes, int width, int height,
               const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + path.string());
    out << "P5\n" << width << " " << height << "\n255\n";
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("write failed: " + path.string());
}

void write_label_csv(const std::vector<std::int8_t>& labels, int width, int height,
                     const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open for writing: " + path.string());
    out << "# wsosvm-labels 1 " << width << " " << height << "\n";
    for (int r = 0; r < height; ++r) {
        for (int c = 0; c < width; ++c)
            out << (c ? "," : "") << static_cast<int>(labels[static_cast<std::size_t>(r) * width + c]);
        out << "\n";
    }
    if (!out) throw DataError("write failed: " + path.string());
}

}  // namespace

void render(const PredictionMap& map, const std::filesystem::path& pgm_path,
            const std::filesystem::path& csv_path) {
    std::vector<unsigned char> bytes(map.labels.size());
    for (std::size_t i = 0; i < map.labels.size(); ++i) {
        switch (map.labels[i]) {
            case 0: bytes[i] = 64; break;
            case 1: bytes[i] = 128; break;
            case 2: bytes[i] = 255; break;
            default: bytes[i] = 0; break;
        }
    }
    write_pgm(bytes, map.width, map.height, pgm_path);
    write_label_csv(map.labels, map.width, map.height, csv_path);
}

void render(const JointMap& map, const std::filesystem::path& pgm_path,
            const std::filesystem::path& csv_path) {
    std::vector<unsigned char> bytes(map.categories.size());
    for (std::size_t i = 0; i < map.categories.size(); ++i) {
        switch (static_cast<JointCategory>(map.categories[i])) {
            case JointCategory::none: bytes[i] = 32; break;
            case JointCategory::a_only: bytes[i] = 128; break;
            case JointCategory::b_only: bytes[i] = 192; break;
            case JointCategory::both: bytes[i] = 255; break;
            default: bytes[i] = 0; break;
        }
    }
    write_pgm(bytes, map.width, map.height, pgm_path);
    write_label_csv(map.categories, map.width, map.height, csv_path);
}

std::vector<std::int8_t> read_label_csv(const std::filesystem::path& path, int& width,
                                        int& height) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty label csv: " + path.string());
    std::istringstream header(line);
    std::string hash, magic;
    int version = 0;
    header >> hash >> magic >> version >> width >> height;
    if (hash != "#" || magic != "wsosvm-labels" || version != 1)
        throw DataError("not a wsosvm-labels v1 csv: " + path.string());
    std::vector<std::int8_t> labels;
    labels.reserve(static_cast<std::size_t>(width) * height);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ','))
            labels.push_back(static_cast<std::int8_t>(std::stoi(cell)));
    }
    if (labels.size() != static_cast<std::size_t>(width) * height)
        throw DataError("label csv size mismatch: " + path.string());
    return labels;
}

void write_map_summary(const PredictionMap& map, std::uint64_t seed,
                       const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open for writing: " + path.string());
    auto tumoral = tumoral_proportions(map);
    out << "{\n";
    out << "  \"gene\": \"" << map.gene << "\",\n";
    if (tumoral) {
        out << "  \"altered_fraction\": " << dataset::format_double(tumoral->first)
            << ",\n";
        out << "  \"non_altered_fraction\": " << dataset::format_double(tumoral->second)
            << ",\n";
    } else {
        out << "  \"altered_fraction\": null,\n";
        out << "  \"non_altered_fraction\": null,\n";
    }
    out << "  \"class0_fraction\": " << dataset::format_double(class0_fraction(map))
        << ",\n";
    out << "  \"classified_pixels\": " << map.classified_count() << ",\n";
    out << "  \"model_digest\": \"" << std::hex << map.model_digest << std::dec
        << "\",\n";
    out << "  \"seed\": " << seed << "\n";
    out << "}\n";
    if (!out) throw DataError("write failed: " + path.string());
}

}  // namespace wsosvm::maps
