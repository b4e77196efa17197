#include <gtest/gtest.h>

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <thread>

#include "kstream/pipeline.hpp"

namespace kstream {
namespace {

namespace fs = std::filesystem;

fs::path temp_file(const std::string& name) {
  return fs::temp_directory_path() / ("kstream_" + std::to_string(::getpid()) + "_" + name);
}

Config passthrough() {
  Config c;
  auto& a = c.anonymization;
  a.k = 1;
  a.delta = 1;
  a.beta = 1;
  a.mu = 1;
  a.quasi_identifiers = {"x"};
  a.sensitive_attribute = "s";
  return c;
}

TEST(ParseEndpoint, Grammar) {
  EXPECT_EQ(parse_endpoint("stdin", Direction::Ingress), (Endpoint{StdStream{}, Direction::Ingress}));
  EXPECT_EQ(parse_endpoint("stdout", Direction::Egress), (Endpoint{StdStream{}, Direction::Egress}));
  EXPECT_EQ(parse_endpoint("file:/tmp/a b.ndjson", Direction::Ingress).kind,
            decltype(Endpoint::kind){FileEndpoint{"/tmp/a b.ndjson"}});
  EXPECT_EQ(parse_endpoint("tcp-listen:0.0.0.0:7000", Direction::Ingress).kind,
            decltype(Endpoint::kind){(TcpListen{"0.0.0.0", 7000})});
  EXPECT_EQ(parse_endpoint("tcp:localhost:9", Direction::Egress).kind,
            decltype(Endpoint::kind){(TcpConnect{"localhost", 9})});
  EXPECT_EQ(parse_endpoint("tcp:[::1]:80", Direction::Egress).kind,
            decltype(Endpoint::kind){(TcpConnect{"::1", 80})});
}

TEST(ParseEndpoint, Rejects) {
  for (const char* bad : {"", "file:", "tcp:host", "tcp:host:", "tcp:host:99999", "tcp:h:1x", "udp:h:1",
                          "stdio"}) {
    EXPECT_THROW(parse_endpoint(bad, Direction::Ingress), ConfigError) << bad;
  }
  EXPECT_THROW(parse_endpoint("stdout", Direction::Ingress), ConfigError);
  EXPECT_THROW(parse_endpoint("stdin", Direction::Egress), ConfigError);
}

TEST(FileEndpoints, RoundTripThroughPipeline) {
  const auto in = temp_file("in.ndjson");
  const auto out = temp_file("out.ndjson");
  {
    std::ofstream f(in);
    f << R"({"x":1,"s":"a"})" << "\n\n" << R"({"x":2,"s":"b"})" << "\r\n" << R"({"x":3,"s":"c"})";
  }
  {
    auto src = open_source(parse_endpoint("file:" + in.string(), Direction::Ingress));
    auto sink = open_sink(parse_endpoint("file:" + out.string(), Direction::Egress));
    RunReport r = run_pipeline(*src, *sink, passthrough());
    ASSERT_TRUE(r.ok()) << r.error;
    EXPECT_EQ(r.ingested, 4u);
    EXPECT_EQ(r.parse_dropped, 1u);
    EXPECT_EQ(r.released, 3u);
  }
  std::ifstream f(out);
  std::stringstream text;
  text << f.rdbuf();
  EXPECT_EQ(text.str(),
            R"({"x":{"min":1,"max":1},"s":"a","_cluster":0,"_suppressed":false})"
            "\n"
            R"({"x":{"min":2,"max":2},"s":"b","_cluster":1,"_suppressed":false})"
            "\n"
            R"({"x":{"min":3,"max":3},"s":"c","_cluster":2,"_suppressed":false})"
            "\n");
  fs::remove(in);
  fs::remove(out);
}

TEST(FileEndpoints, MissingInputIsIoError) {
  EXPECT_THROW(open_source(parse_endpoint("file:/nonexistent/dir/x", Direction::Ingress)), IoError);
}

TEST(Tcp, IngressFromConnectingPeer) {
  TcpListener listener("127.0.0.1", 0);
  const auto port = listener.port();
  std::thread peer([port] {
    auto fd = tcp_connect("127.0.0.1", port);
    FdLineSink sink(std::move(fd), true);
    for (int i = 0; i < 100; ++i) sink.write(R"({"x":)" + std::to_string(i) + "}");
    sink.flush();
  });
  FdLineSource src(listener.accept(), true);
  StringSink sink;
  RunReport r = run_pipeline(src, sink, passthrough());
  peer.join();
  ASSERT_TRUE(r.ok()) << r.error;
  EXPECT_EQ(r.ingested, 100u);
  EXPECT_EQ(r.released, 100u);
}

TEST(Tcp, EgressPeerClosingMidRun) {
  TcpListener listener("127.0.0.1", 0);
  const auto port = listener.port();
  std::thread peer([&listener] {
    auto fd = listener.accept();
    char buf[256];
    (void)::read(fd.get(), buf, sizeof buf);
  });  // closes after the first read
  auto sink = open_sink(parse_endpoint("tcp:127.0.0.1:" + std::to_string(port), Direction::Egress));
  std::vector<std::string> lines;
  for (int i = 0; i < 200000; ++i) lines.push_back(R"({"x":)" + std::to_string(i % 97) + R"(,"pad":")" + std::string(64, 'p') + "\"}");
  VectorSource src(lines);
  RunReport r = run_pipeline(src, *sink, passthrough());
  peer.join();
  EXPECT_EQ(r.status, RunStatus::IoError);
  EXPECT_FALSE(r.error.empty());
  EXPECT_LT(r.written, lines.size());
}

}  // namespace
}  // namespace kstream
