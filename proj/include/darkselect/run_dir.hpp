#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace darkselect {

// A pipeline run directory: stage completion state, an exclusive lock file,
// and immutable stage artifacts. Forcing a stage moves its outputs into
// revisions/ rather than deleting them, so earlier results stay auditable.
class RunDir {
public:
    explicit RunDir(const std::filesystem::path& dir, bool acquire_lock = true);
    ~RunDir();
    RunDir(const RunDir&) = delete;
    RunDir& operator=(const RunDir&) = delete;

    const std::filesystem::path& dir() const { return dir_; }
    std::filesystem::path artifact(const std::string& name) const {
        return dir_ / name;
    }

    bool stage_done(const std::string& stage) const;
    // Done and every recorded output still present on disk.
    bool stage_complete(const std::string& stage) const;
    void mark_done(const std::string& stage, const std::vector<std::string>& outputs);

    // Moves the stage's outputs to revisions/rNNN_<name> and clears its
    // completion mark. No-op for stages never run.
    void force_redo(const std::string& stage);

    const std::vector<std::string>& stage_outputs(const std::string& stage) const;

private:
    void load_state();
    void save_state() const;

    std::filesystem::path dir_;
    bool locked_ = false;
    std::map<std::string, std::vector<std::string>> done_;  // stage -> outputs
};

}  // namespace darkselect
