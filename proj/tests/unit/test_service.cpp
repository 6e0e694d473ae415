#include <doctest.h>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <cstdlib>
#include <fstream>
#include <future>
#include <thread>

#include "golden.hpp"
#include "vnav/errors.hpp"
#include "vnav/service.hpp"

using namespace vnav;
using nlohmann::json;
namespace asio = boost::asio;
namespace websocket = boost::beast::websocket;
using tcp = asio::ip::tcp;

namespace {

const PhantomRegistry& registry()
{
    static const PhantomRegistry r = [] {
        PhantomRegistry reg;
        reg.add("aorta", generate_aorta_phantom());
        reg.add("corridor", generate_corridor(100, 10));
        return reg;
    }();
    return r;
}

struct FakeClock {
    double now = 100.0;
    Clock clock()
    {
        return [this] { return now; };
    }
};

std::filesystem::path temp_dir(const std::string& name)
{
    auto dir = std::filesystem::temp_directory_path() / ("vnav_service_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

std::vector<json> read_jsonl(const std::filesystem::path& path)
{
    std::vector<json> out;
    std::ifstream in(path);
    for (std::string l; std::getline(in, l);)
        if (!l.empty()) out.push_back(json::parse(l));
    return out;
}

class Client {
public:
    explicit Client(unsigned short port) : socket_(ioc_)
    {
        socket_.connect({asio::ip::make_address("127.0.0.1"), port});
    }
    json call(const json& msg) { return json::parse(call_raw(msg.dump())); }
    std::string call_raw(const std::string& line)
    {
        asio::write(socket_, asio::buffer(line + "\n"));
        asio::read_until(socket_, buf_, '\n');
        std::istream is(&buf_);
        std::string reply;
        std::getline(is, reply);
        return reply;
    }
    // True once the server has closed the connection.
    bool at_eof()
    {
        boost::system::error_code ec;
        char c;
        socket_.read_some(asio::buffer(&c, 1), ec);
        return ec == asio::error::eof || ec == asio::error::connection_reset;
    }

private:
    asio::io_context ioc_;
    tcp::socket socket_;
    asio::streambuf buf_;
};

}  // namespace

TEST_SUITE("service")
{
    TEST_CASE("hello and phantom listing")
    {
        ServiceConfig cfg;
        Session s("s9", registry(), cfg);
        const json hello = s.handle({{"seq", 1}, {"type", "hello"}});
        CHECK(hello == json{{"seq", 1}, {"type", "hello_ack"}, {"protocol", "1"}, {"session", "s9"}});
        const json list = s.handle({{"seq", 2}, {"type", "list_phantoms"}});
        REQUIRE(list["phantoms"].size() == 2);
        CHECK(list["phantoms"][0]["id"] == "aorta");
        CHECK(list["phantoms"][0]["targets"] == json{"BCA", "LCA", "LSA"});
        CHECK(list["phantoms"][1]["targets"] == json{"END"});
    }

    TEST_CASE("error replies carry the request sequence number")
    {
        ServiceConfig cfg;
        Session s("s1", registry(), cfg);
        json r = json::parse(s.handle_line("{nope"));
        CHECK(r["code"] == "parse");
        CHECK(r["seq"].is_null());

        r = s.handle({{"type", "hello"}});
        CHECK(r["code"] == "schema");
        r = s.handle({{"seq", "1"}, {"type", "hello"}});
        CHECK(r["code"] == "schema");
        r = s.handle(json::array());
        CHECK(r["code"] == "schema");

        r = s.handle({{"seq", 1}, {"type", "step"}, {"translate_mm", 1}, {"rotate_deg", 0}});
        CHECK(r == json{{"seq", 1}, {"type", "error"}, {"code", "bad_state"}, {"detail", "step before reset"}});
        r = s.handle({{"seq", 2}, {"type", "render"}});
        CHECK(r["code"] == "bad_state");
        r = s.handle({{"seq", 3}, {"type", "warp"}});
        CHECK(r["code"] == "schema");
        r = s.handle({{"seq", 4}, {"type", "reset"}, {"phantom", "heart"}, {"target", "BCA"}});
        CHECK(r["code"] == "schema");
        r = s.handle({{"seq", 5}, {"type", "reset"}, {"phantom", "aorta"}, {"target", "END"}});
        CHECK(r["code"] == "schema");
        r = s.handle({{"seq", 6}, {"type", "reset"}, {"phantom", "aorta"}, {"target", "BCA"}, {"seed", -1}});
        CHECK(r["code"] == "schema");
        r = s.handle({{"seq", 7}, {"type", "reset"}, {"phantom", "aorta"}, {"target", "BCA"}, {"mode", "auto"}});
        CHECK(r["code"] == "schema");
    }

    TEST_CASE("sequence numbers must increase")
    {
        ServiceConfig cfg;
        Session s("s1", registry(), cfg);
        CHECK(s.handle({{"seq", 5}, {"type", "hello"}})["type"] == "hello_ack");
        const json r = s.handle({{"seq", 5}, {"type", "hello"}});
        CHECK(r["code"] == "schema");
        CHECK(r["seq"] == 5);
        CHECK(s.handle({{"seq", 4}, {"type", "hello"}})["code"] == "schema");
        CHECK(s.handle({{"seq", 9}, {"type", "hello"}})["type"] == "hello_ack");
    }

    TEST_CASE("an agent episode over the protocol")
    {
        ServiceConfig cfg;
        Session s("s1", registry(), cfg);
        json r = s.handle({{"seq", 1}, {"type", "reset"}, {"phantom", "corridor"}, {"target", "END"}, {"render", true}});
        REQUIRE(r["type"] == "reset_ack");
        CHECK(r["plan"]["length_px"].get<double>() == doctest::Approx(200.0).epsilon(0.01));
        CHECK(r["limits"] == json{{"translate_mm", 20.0}, {"rotate_deg", 90.0}});
        const auto png = base64_decode(r["observation"]["data"].get<std::string>());
        const RgbImage img = decode_png_rgb(png);
        CHECK(img.width == r["observation"]["width"]);

        int seq = 2;
        for (int k = 0; k < 4; ++k) {
            r = s.handle({{"seq", seq++}, {"type", "step"}, {"translate_mm", 25}, {"rotate_deg", 0}});
            REQUIRE(r["type"] == "step_ack");
        }
        CHECK(r["done"] == true);
        CHECK(r["kind"] == "success");
        CHECK(r["reward"] == 50.0);
        CHECK(r["executed_mm"] == 20.0);
        CHECK(r["retract_to_start_mm"] == 80.0);
        CHECK_FALSE(r.contains("elapsed_s"));
        r = s.handle({{"seq", seq++}, {"type", "step"}, {"translate_mm", 1}, {"rotate_deg", 0}});
        CHECK(r["code"] == "bad_state");

        r = s.handle({{"seq", seq++}, {"type", "metrics"}});
        CHECK(r["episodes"] == 1);
        CHECK(r["summary"]["success_rate"] == 1.0);
        CHECK(r["summary"]["movement_mm"]["mean"] == 80.0);
        CHECK(r["teleop"].empty());

        r = s.handle({{"seq", seq++}, {"type", "render"}});
        CHECK(r["type"] == "render_ack");
        CHECK(s.handle({{"seq", seq++}, {"type", "render"}, {"format", "jpeg"}})["code"] == "schema");
    }

    TEST_CASE("step fields are validated")
    {
        ServiceConfig cfg;
        Session s("s1", registry(), cfg);
        s.handle({{"seq", 1}, {"type", "reset"}, {"phantom", "corridor"}, {"target", "END"}});
        CHECK(s.handle({{"seq", 2}, {"type", "step"}, {"rotate_deg", 0}})["code"] == "schema");
        CHECK(s.handle({{"seq", 3}, {"type", "step"}, {"translate_mm", true}, {"rotate_deg", 0}})["code"] == "schema");
        CHECK(s.handle({{"seq", 4}, {"type", "step"}, {"translate_mm", 1}, {"rotate_deg", 0}, {"render", 1}})["code"] ==
              "schema");
        // A rejected step does not advance the episode.
        CHECK(s.handle({{"seq", 5}, {"type", "step"}, {"translate_mm", 1}, {"rotate_deg", 0}})["step"] == 1);
    }

    TEST_CASE("unreachable targets are reported")
    {
        VesselPhantom ph = generate_corridor(40, 10);
        for (int y = 0; y < ph.mask.height(); ++y) ph.mask.set(kCorridorMargin + 40, y, false);
        PhantomRegistry reg;
        reg.add("split", ph);
        ServiceConfig cfg;
        Session s("s1", reg, cfg);
        CHECK(s.handle({{"seq", 1}, {"type", "reset"}, {"phantom", "split"}, {"target", "END"}})["code"] ==
              "unreachable");
    }

    TEST_CASE("motor echo converts commands to run times")
    {
        ServiceConfig cfg;
        Session s("s1", registry(), cfg);
        json r = s.handle({{"seq", 1}, {"type", "motor_echo"}, {"translate_mm", -20}, {"rotate_deg", 90}});
        CHECK(r["push_pull_ms"].get<double>() == doctest::Approx(318.3098862));
        CHECK(r["rotation_ms"].get<double>() == doctest::Approx(250.0));
        CHECK(r["push_pull_direction"] == "pull");
        CHECK(r["rotation_direction"] == "ccw");
        r = s.handle({{"seq", 2}, {"type", "motor_echo"}, {"params", {{"rpm", 120}}}, {"rotate_deg", -90}});
        CHECK(r["rotation_ms"].get<double>() == doctest::Approx(125.0));
        CHECK(r["rotation_direction"] == "cw");
        CHECK(r["push_pull_direction"] == "none");
        r = s.handle({{"seq", 3}, {"type", "motor_echo"}, {"params", {{"rpm", 0}}}});
        CHECK(r["code"] == "schema");
    }

    TEST_CASE("teleop successes are timed and logged")
    {
        const auto dir = temp_dir("teleop");
        ServiceConfig cfg;
        cfg.teleop_log = dir / "teleop.jsonl";
        FakeClock fc;
        Session s("s3", registry(), cfg, fc.clock());
        s.handle({{"seq", 1}, {"type", "reset"}, {"phantom", "corridor"}, {"target", "END"}, {"mode", "teleop"}});
        json r;
        for (int k = 0; k < 4; ++k) {
            fc.now += 3.0;
            r = s.handle({{"seq", 2 + k}, {"type", "step"}, {"translate_mm", 20}, {"rotate_deg", 0}});
        }
        REQUIRE(r["kind"] == "success");
        CHECK(r["elapsed_s"] == 12.0);
        r = s.handle({{"seq", 10}, {"type", "post_log"}, {"log", {{"target", "END"}, {"elapsed_s", 9.5}}}});
        CHECK(r["type"] == "post_log_ack");
        CHECK(s.handle({{"seq", 11}, {"type", "post_log"}, {"log", {{"target", "END"}}}})["code"] == "schema");
        CHECK(s.handle({{"seq", 12}, {"type", "post_log"}})["code"] == "schema");

        const auto lines = read_jsonl(dir / "teleop.jsonl");
        REQUIRE(lines.size() == 2);
        CHECK(lines[0]["elapsed_s"] == 12.0);
        CHECK(lines[0]["session"] == "s3");
        CHECK(lines[1]["source"] == "client");
        CHECK(lines[1]["elapsed_s"] == 9.5);
        CHECK(s.handle({{"seq", 13}, {"type", "metrics"}})["teleop"].size() == 1);
    }

    TEST_CASE("bye closes the session")
    {
        ServiceConfig cfg;
        Session s("s1", registry(), cfg);
        CHECK(s.handle({{"seq", 1}, {"type", "bye"}})["type"] == "bye_ack");
        CHECK(s.closed());
        CHECK(s.handle({{"seq", 2}, {"type", "hello"}})["code"] == "bad_state");
    }

    TEST_CASE("golden transcript")
    {
        const std::filesystem::path dir = VNAV_GOLDEN_DIR;
        const std::string got = golden::replay_transcript(dir / "session_script.jsonl");
        if (std::getenv("VNAV_UPDATE_GOLDEN")) std::ofstream(dir / "session_transcript.jsonl", std::ios::binary) << got;
        const std::string want = golden::read_text(dir / "session_transcript.jsonl");
        CHECK(got == want);
    }

    TEST_CASE("timestamp masking only touches t")
    {
        const std::string in = "{\"t\":12.5,\"session\":\"s1\",\"dir\":\"in\",\"msg\":{\"t\":3}}\n";
        CHECK(golden::mask_timestamps(in) == "{\"dir\":\"in\",\"msg\":{\"t\":3},\"session\":\"s1\",\"t\":0}\n");
    }

    TEST_CASE("TCP sessions run concurrently and are transcribed")
    {
        const auto dir = temp_dir("tcp");
        ServerOptions opts;
        opts.tcp_port = 0;
        opts.transcript = dir / "transcript.jsonl";
        Server server(registry(), ServiceConfig{}, opts);
        server.start();
        REQUIRE(server.tcp_port() != 0);

        auto episode = [&](int id) {
            Client c(server.tcp_port());
            const json hello = c.call({{"seq", 1}, {"type", "hello"}});
            c.call({{"seq", 2}, {"type", "reset"}, {"phantom", "corridor"}, {"target", "END"}, {"seed", id}});
            json r;
            for (int k = 0; k < 4; ++k)
                r = c.call({{"seq", 3 + k}, {"type", "step"}, {"translate_mm", 20}, {"rotate_deg", 0}});
            const bool ok = r["kind"] == "success";
            c.call({{"seq", 10}, {"type", "bye"}});
            return std::make_pair(hello["session"].get<std::string>(), ok && c.at_eof());
        };
        auto a = std::async(std::launch::async, episode, 1);
        auto b = std::async(std::launch::async, episode, 2);
        const auto ra = a.get();
        const auto rb = b.get();
        CHECK(ra.second);
        CHECK(rb.second);
        CHECK(ra.first != rb.first);

        Client raw(server.tcp_port());
        CHECK(json::parse(raw.call_raw("garbage"))["code"] == "parse");
        server.stop();

        const auto log = read_jsonl(dir / "transcript.jsonl");
        CHECK(log.size() == 2 * 2 * 7 + 2);
        int in = 0, out = 0;
        for (const auto& e : log) {
            in += e["dir"] == "in";
            out += e["dir"] == "out";
            CHECK(e.contains("t"));
        }
        CHECK(in == out);
        CHECK(log[log.size() - 2]["raw"] == "garbage");
        CHECK(log.back()["msg"]["code"] == "parse");
    }

    TEST_CASE("WebSocket carries the same payloads")
    {
        ServerOptions opts;
        opts.tcp_port = 0;
        opts.ws_port = 0;
        Server server(registry(), ServiceConfig{}, opts);
        server.start();
        REQUIRE(server.ws_port().has_value());

        asio::io_context ioc;
        websocket::stream<tcp::socket> ws(ioc);
        ws.next_layer().connect({asio::ip::make_address("127.0.0.1"), *server.ws_port()});
        ws.handshake("127.0.0.1", "/");
        ws.text(true);
        auto call = [&](const json& m) {
            ws.write(asio::buffer(m.dump()));
            boost::beast::flat_buffer buf;
            ws.read(buf);
            return json::parse(boost::beast::buffers_to_string(buf.data()));
        };
        CHECK(call({{"seq", 1}, {"type", "hello"}})["type"] == "hello_ack");
        const json r = call({{"seq", 2}, {"type", "reset"}, {"phantom", "aorta"}, {"target", "LSA"}});
        CHECK(r["type"] == "reset_ack");
        CHECK(r["target_px"].size() == 2);
        CHECK(call({{"seq", 3}, {"type", "motor_echo"}, {"rotate_deg", 90}})["rotation_ms"] == 250.0);
        CHECK(call({{"seq", 4}, {"type", "bye"}})["type"] == "bye_ack");
        // The server starts the closing handshake after bye.
        boost::beast::flat_buffer rest;
        boost::system::error_code ec;
        ws.read(rest, ec);
        CHECK(ec == websocket::error::closed);
        server.stop();
    }

    TEST_CASE("stop returns while clients are still connected")
    {
        ServerOptions opts;
        opts.tcp_port = 0;
        auto server = std::make_unique<Server>(registry(), ServiceConfig{}, opts);
        server->start();
        Client idle(server->tcp_port());
        Client busy(server->tcp_port());
        CHECK(busy.call({{"seq", 1}, {"type", "hello"}})["type"] == "hello_ack");
        auto stopped = std::async(std::launch::async, [&] { server->stop(); });
        CHECK(stopped.wait_for(std::chrono::seconds(10)) == std::future_status::ready);
        CHECK(idle.at_eof());
    }

    TEST_CASE("stop does not wait on a WebSocket peer that ignores the close frame")
    {
        ServerOptions opts;
        opts.tcp_port = 0;
        opts.ws_port = 0;
        auto server = std::make_unique<Server>(registry(), ServiceConfig{}, opts);
        server->start();
        asio::io_context ioc;
        websocket::stream<tcp::socket> ws(ioc);
        ws.next_layer().connect({asio::ip::make_address("127.0.0.1"), *server->ws_port()});
        ws.handshake("127.0.0.1", "/");
        ws.write(asio::buffer(json{{"seq", 1}, {"type", "bye"}}.dump()));
        boost::beast::flat_buffer buf;
        ws.read(buf);
        auto stopped = std::async(std::launch::async, [&] { server->stop(); });
        CHECK(stopped.wait_for(std::chrono::seconds(5)) == std::future_status::ready);
    }

    TEST_CASE("pipelined requests are answered in order")
    {
        ServerOptions opts;
        opts.tcp_port = 0;
        opts.threads = 4;
        Server server(registry(), ServiceConfig{}, opts);
        server.start();
        asio::io_context ioc;
        tcp::socket sock(ioc);
        sock.connect({asio::ip::make_address("127.0.0.1"), server.tcp_port()});
        std::string batch = json{{"seq", 1}, {"type", "reset"}, {"phantom", "aorta"}, {"target", "LCA"}}.dump() + "\n";
        for (int k = 2; k <= 40; ++k)
            batch += json{{"seq", k}, {"type", k % 2 ? "metrics" : "motor_echo"}, {"translate_mm", k}}.dump() + "\n";
        asio::write(sock, asio::buffer(batch));
        asio::streambuf buf;
        std::istream is(&buf);
        for (int k = 1; k <= 40; ++k) {
            asio::read_until(sock, buf, '\n');
            std::string line;
            std::getline(is, line);
            CHECK(json::parse(line)["seq"] == k);
        }
        server.stop();
    }

    TEST_CASE("bind failures raise IoError")
    {
        ServerOptions opts;
        opts.tcp_port = 0;
        Server first(registry(), ServiceConfig{}, opts);
        first.start();
        ServerOptions clash;
        clash.tcp_port = first.tcp_port();
        Server second(registry(), ServiceConfig{}, clash);
        CHECK_THROWS_AS(second.start(), IoError);
        first.stop();
    }
}
