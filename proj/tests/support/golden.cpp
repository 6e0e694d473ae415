#include "golden.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>

#include "vnav/errors.hpp"
#include "vnav/service.hpp"

namespace golden {

std::string read_text(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw vnav::IoError("cannot open " + path.string());
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::string mask_timestamps(const std::string& transcript)
{
    std::istringstream in(transcript);
    std::string out;
    for (std::string line; std::getline(in, line);) {
        if (line.empty()) continue;
        auto j = nlohmann::json::parse(line);
        if (j.contains("t")) j["t"] = 0;
        out += j.dump() + '\n';
    }
    return out;
}

std::string replay_transcript(const std::filesystem::path& script)
{
    vnav::PhantomRegistry registry;
    registry.add("aorta", vnav::generate_aorta_phantom());
    registry.add("corridor", vnav::generate_corridor(100, 10));
    const vnav::ServiceConfig cfg;

    // Fake clock: every reading advances by a quarter second.
    double now = 0.0;
    vnav::Clock clock = [&now] { return now += 0.25; };

    const auto log_path = std::filesystem::temp_directory_path() / "vnav_golden_replay.jsonl";
    std::filesystem::remove(log_path);
    {
        vnav::TranscriptLog log(log_path);
        vnav::Session session("s1", registry, cfg, clock);
        std::istringstream lines(read_text(script));
        for (std::string line; std::getline(lines, line);) {
            if (line.empty()) continue;
            log.record(session.id(), "in", line, clock());
            log.record(session.id(), "out", session.handle_line(line), clock());
        }
    }
    const std::string text = read_text(log_path);
    std::filesystem::remove(log_path);
    return mask_timestamps(text);
}

}  // namespace golden
