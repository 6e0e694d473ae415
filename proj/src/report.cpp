#include "vnav/report.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <map>

#include "vnav/errors.hpp"

namespace vnav {

double autonomous_time_s(const EpisodeRecord& record, const MotorParams& motor, double step_overhead_ms)
{
    double ms = 0.0;
    for (const StepRecord& s : record.steps)
        ms += push_pull_duration_ms(std::abs(s.executed_mm), motor) +
              rotation_duration_ms(std::abs(s.action.rotate_deg), motor) + step_overhead_ms;
    return ms / 1000.0;
}

std::vector<TimedRun> autonomous_runs(const std::vector<EpisodeRecord>& records, const MotorParams& motor,
                                      double step_overhead_ms)
{
    std::vector<TimedRun> out;
    for (const EpisodeRecord& r : records)
        if (r.kind == Termination::success)
            out.push_back({"autonomous", r.target, autonomous_time_s(r, motor, step_overhead_ms)});
    return out;
}

std::vector<TimedRun> read_teleop_log(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<TimedRun> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto where = path.string() + ":" + std::to_string(lineno) + ": ";
        const nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) throw ParseError(where + "not a JSON object");
        if (!j.contains("target") || !j["target"].is_string()) throw ParseError(where + "field 'target' must be a string");
        if (!j.contains("elapsed_s") || !j["elapsed_s"].is_number())
            throw ParseError(where + "field 'elapsed_s' must be a number");
        out.push_back({"teleop", j["target"].get<std::string>(), j["elapsed_s"].get<double>()});
    }
    return out;
}

std::vector<ReportRow> build_report(const std::vector<TimedRun>& runs)
{
    std::map<std::pair<std::string, std::string>, std::vector<double>> groups;
    for (const TimedRun& r : runs) groups[{r.mode, r.target}].push_back(r.time_s);
    std::vector<ReportRow> rows;
    for (const auto& [key, times] : groups)
        rows.push_back({key.first, key.second, static_cast<int>(times.size()), mean_std(times)});
    return rows;
}

void write_report_csv(const std::vector<ReportRow>& rows, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out.precision(10);
    out << "mode,target,runs,mean_time_s,std_time_s\n";
    for (const ReportRow& r : rows)
        out << r.mode << ',' << r.target << ',' << r.runs << ',' << r.time_s.mean << ',' << r.time_s.std << '\n';
}

}  // namespace vnav
