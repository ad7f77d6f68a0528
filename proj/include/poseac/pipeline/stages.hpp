#pragma once

#include <string>
#include <vector>

#include "poseac/pipeline/run_config.hpp"

namespace poseac::pipeline {

// Declared data flow, relative to the run directory. "config" is the resolved
// config snapshot; paths ending in '/' are whole artifact directories.
struct StageInfo {
    std::string name;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
};

const std::vector<StageInfo>& stage_graph();

// Dry-run dependency check: every stage input must be "config" or covered by
// an output of an earlier stage. Throws on violation.
void check_stage_graph();

// Executes stages against a run directory with a single-writer lock and a
// state file recording completion + the config hash, so interrupted runs can
// be resumed and stale run dirs are rejected instead of silently mixed.
class Runner {
public:
    explicit Runner(const RunConfig& cfg);
    ~Runner();

    Runner(const Runner&) = delete;
    Runner& operator=(const Runner&) = delete;

    // Runs one named stage unconditionally (inputs must exist).
    void run_stage(const std::string& name);

    // Runs every stage in order; with resume=true, completed stages whose
    // outputs are still present are skipped.
    void run_all(bool resume);

    bool stage_done(const std::string& name) const;
    const RunPaths& paths() const { return paths_; }

private:
    void require_inputs(const std::string& stage) const;
    void mark_done(const std::string& stage, double wall_s);
    void load_state();
    void save_state() const;
    void release_lock();

    void stage_build_corpus();
    void stage_train_teacher();
    void stage_build_dataset();
    void stage_train_finetune();
    void stage_train_correction();
    void stage_evaluate();
    void stage_gait_eval();
    void stage_report();

    RunConfig cfg_;
    RunPaths paths_;
    std::string config_hash_;
    nlohmann::json state_;
    int lock_fd_ = -1;
};

}  // namespace poseac::pipeline
