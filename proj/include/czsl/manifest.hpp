#pragma once

#include <map>
#include <string>
#include <vector>

namespace czsl {

// Reproducibility record written next to every command's outputs.
struct RunManifest {
    std::string command;
    std::map<std::string, std::string> config;  // effective flag/config snapshot
    uint64_t seed = 0;
    std::map<std::string, std::string> input_digests;  // path -> fnv1a-64 hex
    std::vector<std::string> outputs;
    double wall_seconds = 0.0;

    void add_input(const std::string& path);  // digests the file content
    void write(const std::string& path) const;
};

std::string fnv1a_file_digest(const std::string& path);

// Flat "key = value" config file; '#' starts a comment line.
std::map<std::string, std::string> load_config(const std::string& path);

}  // namespace czsl
