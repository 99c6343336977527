#include "wsosvm/dataset.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace wsosvm::dataset {

std::string to_string(Role role) {
    switch (role) {
        case Role::biopsy: return "biopsy";
        case Role::unlabeled: return "unlabeled";
        case Role::normal: return "normal";
    }
    return "?";
}

Role role_from_string(const std::string& name) {
    if (name == "biopsy") return Role::biopsy;
    if (name == "unlabeled") return Role::unlabeled;
    if (name == "normal") return Role::normal;
    throw DataError("unknown sample role '" + name + "'");
}

std::vector<const Row*> Dataset::with_role(Role role) const {
    std::vector<const Row*> out;
    for (const Row& r : rows)
        if (r.role == role) out.push_back(&r);
    return out;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_dataset(const Dataset& data, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open for writing: " + path.string());
    out << "# wsosvm-dataset 1\n";
    out << "role,class,row,col";
    for (std::size_t i = 0; i < data.feature_count; ++i) {
        char buf[8];
        std::snprintf(buf, sizeof buf, "f%03zu", i);
        out << "," << buf;
    }
    out << "\n";
    for (const Row& r : data.rows) {
        if (r.features.size() != data.feature_count)
            throw DataError("dataset row has " + std::to_string(r.features.size()) +
                            " features, expected " + std::to_string(data.feature_count));
        out << to_string(r.role) << ",";
        if (r.cls < 0)
            out << "NA";
        else
            out << r.cls;
        out << "," << r.row << "," << r.col;
        for (double v : r.features) out << "," << format_double(v);
        out << "\n";
    }
    if (!out) throw DataError("write failed: " + path.string());
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

}  // namespace

Dataset read_dataset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open: " + path.string());
    std::string line;
    int line_no = 0;

    if (!std::getline(in, line)) throw DataError("empty dataset file: " + path.string());
    ++line_no;
    if (line != "# wsosvm-dataset 1")
        throw DataError(path.string() + ":1: unknown dataset schema line '" + line +
                        "' (expected '# wsosvm-dataset 1')");

    if (!std::getline(in, line)) throw DataError(path.string() + ": missing header row");
    ++line_no;
    auto header = split_csv(line);
    if (header.size() < 5 || header[0] != "role" || header[1] != "class" ||
        header[2] != "row" || header[3] != "col")
        throw DataError(path.string() + ":2: bad header row");

    Dataset data;
    data.feature_count = header.size() - 4;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto fields = split_csv(line);
        if (fields.size() != header.size())
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                            std::to_string(header.size()) + " columns, found " +
                            std::to_string(fields.size()));
        Row r;
        try {
            r.role = role_from_string(fields[0]);
            r.cls = fields[1] == "NA" ? -1 : std::stoi(fields[1]);
            r.row = std::stoi(fields[2]);
            r.col = std::stoi(fields[3]);
            r.features.reserve(data.feature_count);
            for (std::size_t i = 4; i < fields.size(); ++i)
                r.features.push_back(std::stod(fields[i]));
        } catch (const DataError&) {
            throw DataError(path.string() + ":" + std::to_string(line_no) +
                            ": bad role '" + fields[0] + "'");
        } catch (const std::exception&) {
            throw DataError(path.string() + ":" + std::to_string(line_no) +
                            ": unparsable field");
        }
        if (r.cls > 2)
            throw DataError(path.string() + ":" + std::to_string(line_no) +
                            ": class must be 0, 1, 2, or NA");
        data.rows.push_back(std::move(r));
    }
    return data;
}

}  // namespace wsosvm::dataset
