#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "wsosvm/common.hpp"

namespace wsosvm::dataset {

enum class Role { biopsy, unlabeled, normal };

std::string to_string(Role role);
Role role_from_string(const std::string& name);

struct Row {
    Role role = Role::biopsy;
    int cls = -1;  // 0/1/2, -1 = NA
    int row = 0;
    int col = 0;
    std::vector<double> features;
};

// Dataset CSV v1: "# wsosvm-dataset 1" comment line, then the header
// "role,class,row,col,f000..fNNN", then one row per sample. class is NA for
// unlabeled rows.
struct Dataset {
    std::vector<Row> rows;
    std::size_t feature_count = 0;

    std::vector<const Row*> with_role(Role role) const;
};

void write_dataset(const Dataset& data, const std::filesystem::path& path);
Dataset read_dataset(const std::filesystem::path& path);

// Fixed-format double used by every CSV/text artifact so identical values
// re-serialize to identical bytes.
std::string format_double(double v);

}  // namespace wsosvm::dataset
