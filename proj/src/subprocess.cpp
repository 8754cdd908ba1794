#include "darkselect/subprocess.hpp"

#include <atomic>
#include <cstdlib>

#include <unistd.h>

#include "darkselect/error.hpp"

namespace darkselect {

void run_command(const std::string& command) {
    const int status = std::system(command.c_str());
    if (status != 0)
        throw IoError("command failed with status " + std::to_string(status) +
                      ": " + command);
}

std::string shell_quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'')
            out += "'\\''";
        else
            out += c;
    }
    out += "'";
    return out;
}

namespace {
std::atomic<unsigned> g_tempdir_counter{0};
}

TempDir::TempDir(const std::string& tag) {
    const auto base = std::filesystem::temp_directory_path();
    path_ = base / ("darkselect-" + tag + "-" + std::to_string(::getpid()) + "-" +
                    std::to_string(g_tempdir_counter.fetch_add(1)));
    std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
}

}  // namespace darkselect
