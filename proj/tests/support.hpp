#pragma once

#include "toolcheck/ingest.hpp"
#include "toolcheck/toolspec.hpp"

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

namespace toolcheck::testing {

inline std::filesystem::path fixture(const std::string& name) {
    return std::filesystem::path(TOOLCHECK_FIXTURE_DIR) / name;
}

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Fresh scratch directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("toolcheck_" + tag + "_" + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline EvalCase hexagon_case() { return load_cases(fixture("hexagon_case.jsonl")).cases.at(0); }

inline PreferencePair hexagon_pair() { return read_ptc(fixture("hexagon_pair.jsonl")).at(0); }

// The generic tool the local checklist template is written against, with
// concrete types so every checklist class is checkable.
inline ToolSpec template_tool() {
    return parse_tool_spec(Value::parse(R"({"name": "name_of_the_tool", "description": "description_of_the_tool",
        "parameters": {"parameter_1": {"type": "str", "description": "description_of_the_parameter"},
                       "parameter_2": {"type": "int", "description": "description_of_the_parameter"}},
        "required": ["parameter_1"]})"));
}

}  // namespace toolcheck::testing
