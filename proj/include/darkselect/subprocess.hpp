#pragma once

#include <filesystem>
#include <string>

namespace darkselect {

// Runs a shell command; throws IoError on non-zero exit (the message carries
// the exit status and command).
void run_command(const std::string& command);

// Single-quotes a string for POSIX shells.
std::string shell_quote(const std::string& s);

// Scratch directory removed on destruction. Unique per process+instance.
class TempDir {
public:
    explicit TempDir(const std::string& tag);
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

}  // namespace darkselect
