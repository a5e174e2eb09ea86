#include "jdlife/csvio.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace jdlife {

std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void atomic_write_file(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
    }
    fs::rename(tmp, target);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_meta(const std::string& artifact_path, std::uint64_t config_hash, std::uint64_t seed,
                const std::string& produced_by) {
    nlohmann::json meta;
    meta["config_hash"] = config_hash;
    meta["seed"] = seed;
    meta["produced_by"] = produced_by;
    meta["checksum"] = fnv1a64(read_file(artifact_path));
    atomic_write_file(artifact_path + ".meta.json", meta.dump(2) + "\n");
}

void check_artifact(const std::string& artifact_path, std::uint64_t expected_config_hash) {
    namespace fs = std::filesystem;
    if (!fs::exists(artifact_path))
        throw std::runtime_error("missing artifact " + artifact_path +
                                 "; run the producing command first");
    std::string meta_path = artifact_path + ".meta.json";
    if (!fs::exists(meta_path))
        throw std::runtime_error("missing metadata for " + artifact_path);
    nlohmann::json meta = nlohmann::json::parse(read_file(meta_path));
    std::uint64_t checksum = meta.at("checksum").get<std::uint64_t>();
    if (checksum != fnv1a64(read_file(artifact_path)))
        throw std::runtime_error("checksum mismatch: " + artifact_path + " is corrupted");
    std::uint64_t hash = meta.at("config_hash").get<std::uint64_t>();
    if (expected_config_hash != 0 && hash != expected_config_hash)
        throw std::runtime_error("config hash mismatch: " + artifact_path +
                                 " was produced by a different configuration");
}

} // namespace jdlife
