#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "vnav/actuation.hpp"
#include "vnav/metrics.hpp"

namespace vnav {

// One timed navigation, autonomous or manual.
struct TimedRun {
    std::string mode;  // "autonomous" or "teleop"
    std::string target;
    double time_s = 0.0;
};

// Motor run-time of an episode: per step, the push-pull time for the executed
// translation plus the rotation time, plus a fixed per-step overhead.
double autonomous_time_s(const EpisodeRecord& record, const MotorParams& motor, double step_overhead_ms = 0.0);

// Successful episodes only.
std::vector<TimedRun> autonomous_runs(const std::vector<EpisodeRecord>& records, const MotorParams& motor,
                                      double step_overhead_ms = 0.0);

// Teleop session log (JSON-lines with "target" and "elapsed_s"). Throws ParseError.
std::vector<TimedRun> read_teleop_log(const std::filesystem::path& path);

struct ReportRow {
    std::string mode;
    std::string target;
    int runs = 0;
    MeanStd time_s;
};

// Grouped by (mode, target), sorted by mode then target.
std::vector<ReportRow> build_report(const std::vector<TimedRun>& runs);
// Header "mode,target,runs,mean_time_s,std_time_s".
void write_report_csv(const std::vector<ReportRow>& rows, const std::filesystem::path& path);

}  // namespace vnav
