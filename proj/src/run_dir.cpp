#include "darkselect/run_dir.hpp"

#include <cstdio>
#include <fstream>

#include <fcntl.h>
#include <unistd.h>

#include <json.hpp>

#include "darkselect/error.hpp"

namespace darkselect {

namespace {
const char* kStateFile = "stage_state.json";
const char* kLockFile = "run.lock";
}  // namespace

RunDir::RunDir(const std::filesystem::path& dir, bool acquire_lock) : dir_(dir) {
    std::filesystem::create_directories(dir_);
    if (acquire_lock) {
        const auto lock = dir_ / kLockFile;
        const int fd = ::open(lock.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
        if (fd < 0)
            throw IoError("run directory is locked (remove " + lock.string() +
                          " if no other process is using it)");
        ::close(fd);
        locked_ = true;
    }
    load_state();
}

RunDir::~RunDir() {
    if (locked_) {
        std::error_code ec;
        std::filesystem::remove(dir_ / kLockFile, ec);
    }
}

void RunDir::load_state() {
    const auto path = dir_ / kStateFile;
    std::ifstream in(path);
    if (!in) return;
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("corrupt stage state " + path.string() + ": " + e.what());
    }
    for (const auto& [stage, outputs] : j.at("stages").items()) {
        std::vector<std::string> names;
        for (const auto& o : outputs) names.push_back(o.get<std::string>());
        done_[stage] = std::move(names);
    }
}

void RunDir::save_state() const {
    nlohmann::ordered_json j;
    j["stages"] = nlohmann::ordered_json::object();
    for (const auto& [stage, outputs] : done_) j["stages"][stage] = outputs;
    std::ofstream out(dir_ / kStateFile, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write stage state in " + dir_.string());
    out << j.dump(2) << '\n';
}

bool RunDir::stage_done(const std::string& stage) const {
    return done_.count(stage) > 0;
}

bool RunDir::stage_complete(const std::string& stage) const {
    const auto it = done_.find(stage);
    if (it == done_.end()) return false;
    for (const auto& name : it->second)
        if (!std::filesystem::exists(dir_ / name)) return false;
    return true;
}

void RunDir::mark_done(const std::string& stage,
                       const std::vector<std::string>& outputs) {
    done_[stage] = outputs;
    save_state();
}

void RunDir::force_redo(const std::string& stage) {
    const auto it = done_.find(stage);
    if (it == done_.end()) return;
    const auto rev_dir = dir_ / "revisions";
    std::filesystem::create_directories(rev_dir);
    for (const auto& name : it->second) {
        const auto src = dir_ / name;
        if (!std::filesystem::exists(src)) continue;
        for (int rev = 1;; ++rev) {
            char prefix[16];
            std::snprintf(prefix, sizeof(prefix), "r%03d_", rev);
            const auto dst = rev_dir / (prefix + name);
            if (std::filesystem::exists(dst)) continue;
            std::filesystem::rename(src, dst);
            break;
        }
    }
    done_.erase(it);
    save_state();
}

const std::vector<std::string>& RunDir::stage_outputs(const std::string& stage) const {
    const auto it = done_.find(stage);
    if (it == done_.end())
        throw ValidationError("stage '" + stage + "' has not completed");
    return it->second;
}

}  // namespace darkselect
