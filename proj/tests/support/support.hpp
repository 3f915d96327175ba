#pragma once

#include "flor/process.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace testsupport {

namespace fs = std::filesystem;

inline fs::path fixtures_dir() { return fs::path(FLOR_FIXTURES_DIR); }
inline fs::path flor_cli() { return fs::path(FLOR_CLI_PATH); }

// Scratch directory removed on destruction unless FLOR_KEEP_TMP is set.
class TempDir {
  public:
    TempDir() {
        std::string tmpl = (fs::temp_directory_path() / "flor-test-XXXXXX").string();
        if (!::mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
        path_ = tmpl;
    }
    ~TempDir() {
        if (!std::getenv("FLOR_KEEP_TMP")) {
            std::error_code ec;
            fs::remove_all(path_, ec);
        }
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const fs::path& path() const { return path_; }

  private:
    fs::path path_;
};

inline std::string read_text(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

inline void write_text(const fs::path& p, const std::string& text) {
    fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << text;
}

// Copies a fixture project plus the step helper into dest.
inline fs::path copy_fixture(const std::string& name, const fs::path& dest) {
    fs::create_directories(dest);
    fs::copy(fixtures_dir() / name, dest, fs::copy_options::recursive);
    fs::copy_file(fixtures_dir() / "flor.py", dest / "flor.py", fs::copy_options::overwrite_existing);
    return dest;
}

// Lets file mtimes advance past filesystem timestamp granularity.
inline void settle() { std::this_thread::sleep_for(std::chrono::milliseconds(30)); }

inline void replace_all(std::string& s, const std::string& from, const std::string& to) {
    for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
        s.replace(pos, from.size(), to);
    }
}

inline std::string drop_lines_containing(const std::string& text, const std::string& needle) {
    std::istringstream in(text);
    std::string line, out;
    while (std::getline(in, line)) {
        if (line.find(needle) == std::string::npos) out += line + "\n";
    }
    return out;
}

inline flor::CaptureResult cli(const fs::path& dir, std::vector<std::string> args) {
    std::vector<std::string> argv = {flor_cli().string()};
    argv.insert(argv.end(), args.begin(), args.end());
    return flor::run_capture(argv, dir, {{"FLOR_PROJID", std::nullopt}});
}

} // namespace testsupport
