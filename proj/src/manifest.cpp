#include "czsl/manifest.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "czsl/checkpoint.hpp"

namespace czsl {

std::string fnv1a_file_digest(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw InputError("digest: cannot open " + path);
    uint64_t h = 0xcbf29ce484222325ull;
    char buf[4096];
    while (is.read(buf, sizeof(buf)) || is.gcount() > 0) {
        const std::streamsize got = is.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ull;
        }
        if (!is) break;
    }
    char out[17];
    std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
    return out;
}

void RunManifest::add_input(const std::string& path) {
    input_digests[path] = fnv1a_file_digest(path);
}

void RunManifest::write(const std::string& path) const {
    nlohmann::ordered_json j;
    j["command"] = command;
    j["config"] = config;
    j["seed"] = seed;
    j["input_digests"] = input_digests;
    j["outputs"] = outputs;
    j["wall_seconds"] = wall_seconds;
    std::ofstream os(path);
    if (!os) throw InputError("manifest: cannot open " + path);
    os << j.dump(2) << '\n';
}

std::map<std::string, std::string> load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw InputError("config: cannot open " + path);
    std::map<std::string, std::string> out;
    std::string line;
    while (std::getline(is, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (!key.empty()) out[key] = val;
    }
    return out;
}

}  // namespace czsl
