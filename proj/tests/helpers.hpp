#pragma once
// Shared test fixtures: scratch files and small dataset builders.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "fairaudit/dataset.hpp"

namespace testutil {

inline std::filesystem::path scratch_dir() {
    static const std::filesystem::path dir = [] {
        auto d = std::filesystem::temp_directory_path() /
                 ("fairaudit_tests_" + std::to_string(::getpid()));
        std::filesystem::create_directories(d);
        return d;
    }();
    return dir;
}

inline std::string scratch_path(const std::string& name) {
    return (scratch_dir() / name).string();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

// Single protected attribute "group", single feature unless given more.
inline fairaudit::Dataset make_dataset(const std::vector<std::vector<double>>& features,
                                       const std::vector<int>& labels,
                                       const std::vector<std::string>& groups) {
    fairaudit::Dataset ds;
    ds.features = features;
    ds.labels = labels;
    for (std::size_t f = 0; f < features.at(0).size(); ++f) {
        ds.feature_names.push_back("f" + std::to_string(f));
    }
    ds.protected_names = {"group"};
    ds.protected_cols = {groups};
    fairaudit::validate(ds);
    return ds;
}

}  // namespace testutil
